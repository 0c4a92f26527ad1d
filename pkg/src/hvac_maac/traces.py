"""Exogenous time series (price, weather, occupancy) that drive building episodes."""

import logging
import os
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import Config, ConfigError, parse_float_list, parse_int_list

logger = logging.getLogger(__name__)


class TraceError(Exception):
    """Base exception for trace-related errors."""
    pass


class TraceLoadError(TraceError):
    """Raised when trace CSV files cannot be read or are inconsistent."""
    pass


class SlotValues(NamedTuple):
    """Exogenous values at one slot."""
    price: float
    outdoor_temp: float
    outdoor_co2: float
    occupancy: np.ndarray


def _frozen(values, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TraceSet:
    """Aligned per-slot series of price, outdoor conditions and zone occupancy."""
    price: np.ndarray           # RMB/kWh, shape (L,)
    outdoor_temp: np.ndarray    # degC, shape (L,)
    outdoor_co2: np.ndarray     # ppm, shape (L,)
    occupancy: np.ndarray       # head-counts, shape (L, N)
    slot_minutes: int = Config.SLOT_MINUTES

    def __post_init__(self):
        object.__setattr__(self, "price", _frozen(self.price))
        object.__setattr__(self, "outdoor_temp", _frozen(self.outdoor_temp))
        object.__setattr__(self, "outdoor_co2", _frozen(self.outdoor_co2))
        occupancy = np.asarray(self.occupancy, dtype=np.float64)
        if occupancy.ndim != 2:
            raise TraceError("occupancy must be a (slots, zones) table")
        if np.any(occupancy != np.round(occupancy)):
            raise TraceError("occupancy must be integral")
        object.__setattr__(self, "occupancy", _frozen(occupancy, dtype=np.int64))

        length = len(self.price)
        if length < 1:
            raise TraceError("traces must cover at least one slot")
        if not (len(self.outdoor_temp) == len(self.outdoor_co2) == len(self.occupancy) == length):
            raise TraceError(
                f"series lengths differ: price={length}, outdoor_temp={len(self.outdoor_temp)}, "
                f"outdoor_co2={len(self.outdoor_co2)}, occupancy={len(self.occupancy)}")
        if self.occupancy.shape[1] < 1:
            raise TraceError("occupancy needs at least one zone column")
        if Config.MINUTES_PER_DAY % self.slot_minutes != 0:
            raise TraceError(f"slot_minutes={self.slot_minutes} does not divide a day")
        if np.any(self.price <= 0):
            raise TraceError("price must be positive everywhere")
        if np.any(self.outdoor_co2 <= 0):
            raise TraceError("outdoor CO2 must be positive everywhere")
        if np.any(self.occupancy < 0):
            raise TraceError("occupancy must be non-negative")
        if not (np.all(np.isfinite(self.price)) and np.all(np.isfinite(self.outdoor_temp))):
            raise TraceError("series contain non-finite values")

    @property
    def length(self) -> int:
        return len(self.price)

    def __len__(self) -> int:
        return self.length

    @property
    def n_zones(self) -> int:
        return self.occupancy.shape[1]

    @property
    def slots_per_day(self) -> int:
        return Config.MINUTES_PER_DAY // self.slot_minutes

    @property
    def n_days(self) -> int:
        return self.length // self.slots_per_day

    def at(self, slot: int) -> SlotValues:
        """Values at ``slot``; slot == L (the state after the final slot) holds the last values."""
        if slot < 0 or slot > self.length:
            raise TraceError(f"slot {slot} outside traces of length {self.length}")
        index = min(slot, self.length - 1)
        return SlotValues(
            price=float(self.price[index]),
            outdoor_temp=float(self.outdoor_temp[index]),
            outdoor_co2=float(self.outdoor_co2[index]),
            occupancy=self.occupancy[index],
        )

    def slice(self, start: int, stop: int) -> "TraceSet":
        return TraceSet(
            price=self.price[start:stop],
            outdoor_temp=self.outdoor_temp[start:stop],
            outdoor_co2=self.outdoor_co2[start:stop],
            occupancy=self.occupancy[start:stop],
            slot_minutes=self.slot_minutes,
        )


@dataclass(frozen=True)
class EpisodeWindow:
    """View of one training day: P consecutive slots starting at ``start``."""
    traces: TraceSet
    day_index: int
    start: int
    length: int

    def __post_init__(self):
        if self.start < 0 or self.start + self.length > self.traces.length:
            raise TraceError(
                f"window [{self.start}, {self.start + self.length}) outside traces of length {self.traces.length}")

    @property
    def stop(self) -> int:
        return self.start + self.length

    @property
    def slots(self) -> range:
        return range(self.start, self.stop)

    @property
    def price(self) -> np.ndarray:
        return self.traces.price[self.start:self.stop]

    @property
    def outdoor_temp(self) -> np.ndarray:
        return self.traces.outdoor_temp[self.start:self.stop]

    @property
    def outdoor_co2(self) -> np.ndarray:
        return self.traces.outdoor_co2[self.start:self.stop]

    @property
    def occupancy(self) -> np.ndarray:
        return self.traces.occupancy[self.start:self.stop]


@dataclass(frozen=True)
class SynthSpec:
    """Shape of the synthetic traces: tiered ToU price, sinusoidal weather, office occupancy."""
    days: int = Config.SYNTH_DAYS
    n_zones: int = 4
    slot_minutes: int = Config.SLOT_MINUTES
    price_tiers: Tuple[float, float, float] = Config.PRICE_TIERS
    night_hours: Tuple[int, int] = Config.PRICE_NIGHT_HOURS
    peak_hours: Tuple[Tuple[int, int], ...] = Config.PRICE_PEAK_HOURS
    temp_mean: float = Config.OUTDOOR_TEMP_MEAN
    temp_amplitude: float = Config.OUTDOOR_TEMP_AMPLITUDE
    temp_peak_hour: float = Config.OUTDOOR_TEMP_PEAK_HOUR
    temp_noise: float = Config.OUTDOOR_TEMP_NOISE
    outdoor_co2: float = Config.OUTDOOR_CO2
    business_hours: Tuple[int, int] = Config.BUSINESS_HOURS
    max_occupants: int = Config.MAX_OCCUPANTS
    occupancy_step: int = Config.OCCUPANCY_STEP
    occupancy_scale: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.days <= 0:
            raise ConfigError(f"synthetic trace days must be positive, got {self.days}")
        if self.n_zones <= 0:
            raise ConfigError(f"number of zones must be positive, got {self.n_zones}")
        if Config.MINUTES_PER_DAY % self.slot_minutes != 0:
            raise ConfigError(f"slot_minutes={self.slot_minutes} does not divide a day")
        if any(p <= 0 for p in self.price_tiers):
            raise ConfigError("price tiers must be positive")
        if self.outdoor_co2 <= 0:
            raise ConfigError("outdoor CO2 must be positive")
        if self.occupancy_scale is not None and len(self.occupancy_scale) != self.n_zones:
            raise ConfigError("occupancy_scale needs one coefficient per zone")

    @classmethod
    def from_mapping(cls, values: Dict[str, str], n_zones: int,
                     slot_minutes: int = Config.SLOT_MINUTES) -> "SynthSpec":
        """Build from ``synth.*`` keys of an experiment config."""
        kwargs = {"n_zones": n_zones, "slot_minutes": slot_minutes}
        if "synth.days" in values:
            kwargs["days"] = int(values["synth.days"])
        if "synth.slot_minutes" in values:
            kwargs["slot_minutes"] = int(values["synth.slot_minutes"])
        if "synth.price_tiers" in values:
            kwargs["price_tiers"] = tuple(parse_float_list(values["synth.price_tiers"]))
        if "synth.temp_mean" in values:
            kwargs["temp_mean"] = float(values["synth.temp_mean"])
        if "synth.temp_amplitude" in values:
            kwargs["temp_amplitude"] = float(values["synth.temp_amplitude"])
        if "synth.temp_noise" in values:
            kwargs["temp_noise"] = float(values["synth.temp_noise"])
        if "synth.outdoor_co2" in values:
            kwargs["outdoor_co2"] = float(values["synth.outdoor_co2"])
        if "synth.business_hours" in values:
            kwargs["business_hours"] = tuple(parse_int_list(values["synth.business_hours"]))
        if "synth.max_occupants" in values:
            kwargs["max_occupants"] = int(values["synth.max_occupants"])
        if "synth.occupancy_scale" in values:
            kwargs["occupancy_scale"] = tuple(parse_float_list(values["synth.occupancy_scale"]))
        return cls(**kwargs)


# =============================================================================
# LOADING & SAVING
# =============================================================================

def _read_csv(path: str, expected: Sequence[str], kind: str) -> pd.DataFrame:
    if not path or not os.path.exists(path):
        raise TraceLoadError(f"{kind} file not found: {path}")
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise TraceLoadError(f"{kind} file is empty: {path}")
    except pd.errors.ParserError as e:
        raise TraceLoadError(f"{kind} file has ragged rows: {path} ({e})")

    if list(df.columns[:len(expected)]) != list(expected):
        raise TraceLoadError(f"{kind} file {path} must start with columns {list(expected)}, got {list(df.columns)}")
    if df.isnull().values.any():
        raise TraceLoadError(f"{kind} file {path} has missing cells (ragged rows?)")
    for column in df.columns:
        if not pd.api.types.is_numeric_dtype(df[column]):
            raise TraceLoadError(f"{kind} file {path} has non-numeric cells in column '{column}'")
    return df


def _resample(values: np.ndarray, source_minutes: int, slot_minutes: int) -> np.ndarray:
    """Step-hold resampling: each source row is repeated to fill the finer slots."""
    if source_minutes == slot_minutes:
        return values
    if source_minutes % slot_minutes != 0:
        raise TraceLoadError(f"cannot resample {source_minutes}-minute rows to {slot_minutes}-minute slots")
    return np.repeat(values, source_minutes // slot_minutes, axis=0)


def load_traces(price_path: str,
                weather_path: str,
                occupancy_path: str,
                n_zones: int,
                slot_minutes: int = Config.SLOT_MINUTES,
                source_minutes: Optional[int] = None) -> TraceSet:
    """
    Load price, weather and occupancy CSVs into a validated TraceSet.

    Args:
        price_path: ``slot,price_rmb_per_kwh``
        weather_path: ``slot,outdoor_temp_c,outdoor_co2_ppm``
        occupancy_path: ``slot,zone1,...,zoneN``
        n_zones: number of zones the building is configured with
        slot_minutes: simulation slot length (tau)
        source_minutes: row resolution of the files (defaults to ``slot_minutes``);
            hourly files use 60 and are repeated to fill the slots

    Raises:
        TraceLoadError: missing file, ragged rows, non-numeric cells, zone or row count mismatch
    """
    source_minutes = source_minutes or slot_minutes

    price_df = _read_csv(price_path, Config.PRICE_COLUMNS, "price")
    weather_df = _read_csv(weather_path, Config.WEATHER_COLUMNS, "weather")
    occupancy_df = _read_csv(occupancy_path, ["slot"], "occupancy")

    zone_columns = [c for c in occupancy_df.columns if c != "slot"]
    expected_zones = [f"zone{i}" for i in range(1, len(zone_columns) + 1)]
    if zone_columns != expected_zones:
        raise TraceLoadError(f"occupancy columns must be {expected_zones}, got {zone_columns}")
    if len(zone_columns) != n_zones:
        raise TraceLoadError(
            f"zone-count mismatch: occupancy file has {len(zone_columns)} zones, config has {n_zones}")

    rows = {len(price_df), len(weather_df), len(occupancy_df)}
    if len(rows) != 1:
        raise TraceLoadError(
            f"row counts differ: price={len(price_df)}, weather={len(weather_df)}, occupancy={len(occupancy_df)}")

    price = _resample(price_df["price_rmb_per_kwh"].to_numpy(dtype=np.float64), source_minutes, slot_minutes)
    outdoor_temp = _resample(weather_df["outdoor_temp_c"].to_numpy(dtype=np.float64), source_minutes, slot_minutes)
    outdoor_co2 = _resample(weather_df["outdoor_co2_ppm"].to_numpy(dtype=np.float64), source_minutes, slot_minutes)
    occupancy = _resample(occupancy_df[zone_columns].to_numpy(dtype=np.float64), source_minutes, slot_minutes)

    try:
        traces = TraceSet(price=price, outdoor_temp=outdoor_temp, outdoor_co2=outdoor_co2,
                          occupancy=occupancy, slot_minutes=slot_minutes)
    except TraceError as e:
        raise TraceLoadError(f"invalid trace contents: {e}") from e

    logger.info(f"Loaded traces: {traces.length} slots, {traces.n_zones} zones")
    return traces


def save_traces(traces: TraceSet, directory: str) -> Dict[str, str]:
    """Write the three trace CSVs; returns their paths keyed by kind."""
    os.makedirs(directory, exist_ok=True)
    slots = np.arange(traces.length)
    paths = {kind: Config.get_file_path(directory, kind) for kind in ("price", "weather", "occupancy")}

    pd.DataFrame({"slot": slots, "price_rmb_per_kwh": traces.price}).to_csv(paths["price"], index=False)
    pd.DataFrame({
        "slot": slots,
        "outdoor_temp_c": traces.outdoor_temp,
        "outdoor_co2_ppm": traces.outdoor_co2,
    }).to_csv(paths["weather"], index=False)
    occupancy = {"slot": slots}
    for zone in range(traces.n_zones):
        occupancy[f"zone{zone + 1}"] = traces.occupancy[:, zone]
    pd.DataFrame(occupancy).to_csv(paths["occupancy"], index=False)
    return paths


# =============================================================================
# SYNTHESIS
# =============================================================================

def _hour_in(hour: float, span: Tuple[int, int]) -> bool:
    start, end = span
    if start <= end:
        return start <= hour < end
    return hour >= start or hour < end


def synthesize_traces(spec: SynthSpec, seed: int) -> TraceSet:
    """
    Generate deterministic synthetic traces of the requested shape.

    Price follows three ToU tiers, outdoor temperature is a daily sinusoid
    peaking at ``temp_peak_hour`` plus bounded uniform noise, occupancy is zero
    outside business hours and a bounded integer random walk inside them, and
    outdoor CO2 is constant.
    """
    rng = np.random.default_rng(seed)
    slots_per_day = Config.MINUTES_PER_DAY // spec.slot_minutes
    length = spec.days * slots_per_day
    hours = (np.arange(length) % slots_per_day) * spec.slot_minutes / 60.0

    low, mid, high = spec.price_tiers
    price = np.full(length, mid)
    for k, hour in enumerate(hours):
        if _hour_in(hour, spec.night_hours):
            price[k] = low
        elif any(_hour_in(hour, span) for span in spec.peak_hours):
            price[k] = high

    noise = rng.uniform(-spec.temp_noise, spec.temp_noise, size=length)
    outdoor_temp = (spec.temp_mean
                    + spec.temp_amplitude * np.cos(2.0 * np.pi * (hours - spec.temp_peak_hour) / 24.0)
                    + noise)

    scale = np.ones(spec.n_zones) if spec.occupancy_scale is None else np.asarray(spec.occupancy_scale)
    occupancy = np.zeros((length, spec.n_zones))
    open_hour, close_hour = spec.business_hours
    for day in range(spec.days):
        level = rng.integers(0, spec.max_occupants + 1, size=spec.n_zones).astype(np.float64)
        for k in range(day * slots_per_day, (day + 1) * slots_per_day):
            steps = rng.integers(-spec.occupancy_step, spec.occupancy_step + 1, size=spec.n_zones)
            if not (open_hour <= hours[k] < close_hour):
                continue
            level = np.clip(level + steps, 0, spec.max_occupants)
            occupancy[k] = np.floor(level * scale)

    traces = TraceSet(
        price=price,
        outdoor_temp=outdoor_temp,
        outdoor_co2=np.full(length, spec.outdoor_co2),
        occupancy=occupancy,
        slot_minutes=spec.slot_minutes,
    )
    logger.info(f"Synthesized {spec.days} days ({length} slots) for {spec.n_zones} zones, seed={seed}")
    return traces


# =============================================================================
# SPLITTING & WINDOWS
# =============================================================================

def split(traces: TraceSet, train_days: int) -> Tuple[TraceSet, TraceSet]:
    """Split on a day boundary into (train, test)."""
    boundary = train_days * traces.slots_per_day
    if train_days <= 0 or boundary >= traces.length:
        raise TraceError(
            f"train_days={train_days} out of range for {traces.length} slots "
            f"({traces.slots_per_day} slots/day); both parts must be non-empty")
    return traces.slice(0, boundary), traces.slice(boundary, traces.length)


def concatenate(first: TraceSet, second: TraceSet) -> TraceSet:
    """Join two trace sets end to end (inverse of ``split``)."""
    if first.slot_minutes != second.slot_minutes or first.n_zones != second.n_zones:
        raise TraceError("cannot concatenate traces with different slot length or zone count")
    return TraceSet(
        price=np.concatenate([first.price, second.price]),
        outdoor_temp=np.concatenate([first.outdoor_temp, second.outdoor_temp]),
        outdoor_co2=np.concatenate([first.outdoor_co2, second.outdoor_co2]),
        occupancy=np.concatenate([first.occupancy, second.occupancy]),
        slot_minutes=first.slot_minutes,
    )


def episode(traces: TraceSet, day_index: int) -> EpisodeWindow:
    """The window of day ``day_index``."""
    if day_index < 0 or day_index >= traces.n_days:
        raise TraceError(f"day_index {day_index} out of range [0, {traces.n_days})")
    length = traces.slots_per_day
    return EpisodeWindow(traces=traces, day_index=day_index, start=day_index * length, length=length)
