"""
Multi-zone Building Simulator

RC thermal dynamics, CO2 mass balance, HVAC energy costs and the Markov-game
wrapper (per-agent observations and the four-part reward) for a building with
N VAV zones served by one air handling unit. Agents 0..N-1 choose zone
airflow levels, agent N chooses the AHU damper level.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import Config, ConfigError, parse_float_list
from .traces import TraceSet

logger = logging.getLogger(__name__)


class EnvError(Exception):
    """Base exception for building simulator errors."""
    pass


class EpisodeFinishedError(EnvError):
    """Raised when stepping an episode that has already consumed its slots."""
    pass


# =============================================================================
# PARAMETERS
# =============================================================================

@dataclass(frozen=True)
class ZoneParams:
    """RC coefficients, comfort limits and airflow levels of one zone."""
    ell: float
    hbar: Dict[int, float]
    varpi: float
    varrho: float
    upsilon: float = Config.RC_UPSILON
    volume: float = Config.ZONE_VOLUME
    t_min: float = Config.T_MIN
    t_max: float = Config.T_MAX
    o_max: float = Config.O_MAX
    airflow_levels: Tuple[float, ...] = tuple(Config.AIRFLOW_LEVELS)

    def __post_init__(self):
        object.__setattr__(self, "hbar", dict(sorted(self.hbar.items())))
        object.__setattr__(self, "airflow_levels", tuple(float(m) for m in self.airflow_levels))
        coefficients = [self.ell, self.varpi, self.varrho, self.upsilon, *self.hbar.values()]
        if any(c < 0 for c in coefficients):
            raise ConfigError("RC coefficients and disturbance width must be non-negative")
        if self.ell + sum(self.hbar.values()) + self.varrho > 1.0 + 1e-12:
            raise ConfigError(
                f"unstable RC update: ell + sum(hbar) + varrho = "
                f"{self.ell + sum(self.hbar.values()) + self.varrho:.4f} > 1")
        if not self.t_min < self.t_max:
            raise ConfigError(f"comfort band must satisfy t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if self.o_max <= 0 or self.volume <= 0:
            raise ConfigError("o_max and volume must be positive")
        levels = np.asarray(self.airflow_levels)
        if len(levels) < 2 or levels[0] != 0.0 or np.any(np.diff(levels) <= 0):
            raise ConfigError("airflow levels must start at 0 and be strictly increasing")

    @property
    def neighbors(self) -> List[int]:
        return list(self.hbar.keys())

    @property
    def airflow_max(self) -> float:
        return self.airflow_levels[-1]


@dataclass(frozen=True)
class BuildingParams:
    """Zones plus AHU, air and reward constants."""
    zones: Tuple[ZoneParams, ...]
    mu: float = Config.MU
    c_a: float = Config.C_A
    eta: float = Config.ETA
    cop: float = Config.COP
    t_supply: float = Config.T_SUPPLY
    kappa: float = Config.KAPPA
    chi: float = Config.CHI
    damper_levels: Tuple[float, ...] = tuple(Config.DAMPER_LEVELS)
    alpha: float = Config.ALPHA
    beta: float = Config.BETA
    tau_seconds: float = Config.SLOT_MINUTES * 60.0
    tau_hours: float = Config.SLOT_MINUTES / 60.0
    initial_co2: float = Config.INITIAL_CO2
    max_occupants: float = Config.MAX_OCCUPANTS

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "damper_levels", tuple(float(s) for s in self.damper_levels))
        if not self.zones:
            raise ConfigError("building needs at least one zone")
        for i, zone in enumerate(self.zones):
            bad = [z for z in zone.hbar if z == i or not 0 <= z < len(self.zones)]
            if bad:
                raise ConfigError(f"zone {i} has invalid neighbors {bad}")
        if min(self.mu, self.c_a, self.eta, self.cop, self.kappa, self.chi) <= 0:
            raise ConfigError("mu, c_a, eta, cop, kappa and chi must be positive")
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("reward weights alpha and beta must be positive")
        levels = np.asarray(self.damper_levels)
        if len(levels) < 1 or levels[0] < 0 or levels[-1] > 1 or np.any(np.diff(levels) <= 0):
            raise ConfigError("damper levels must lie in [0, 1] and be strictly increasing")
        if abs(self.tau_seconds - 3600.0 * self.tau_hours) > 1e-9:
            raise ConfigError("tau_seconds must equal 3600 * tau_hours")
        for i, zone in enumerate(self.zones):
            fraction = zone.airflow_max * self.tau_seconds / (self.kappa * zone.volume)
            if fraction > 1.0:
                raise ConfigError(
                    f"zone {i}: max airflow replaces {fraction:.3f} > 1 of the zone air per slot")

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    @property
    def n_agents(self) -> int:
        return len(self.zones) + 1

    @property
    def slots_per_day(self) -> int:
        return int(round(86400.0 / self.tau_seconds))

    @property
    def action_sizes(self) -> List[int]:
        """Number of discrete actions per agent (zones first, AHU last)."""
        return [len(z.airflow_levels) for z in self.zones] + [len(self.damper_levels)]

    def with_rewards(self, alpha: float, beta: float) -> "BuildingParams":
        return replace(self, alpha=alpha, beta=beta)

    def with_disturbance(self, upsilon: float) -> "BuildingParams":
        return replace(self, zones=tuple(replace(z, upsilon=upsilon) for z in self.zones))

    @classmethod
    def from_mapping(cls, values: Dict[str, str]) -> "BuildingParams":
        """Build from the ``building.*``, ``rc.*``, ``zone.*`` and ``reward.*`` keys of a parameter file."""
        def number(key: str, default: float) -> float:
            try:
                return float(values.get(key, default))
            except ValueError as e:
                raise ConfigError(f"{key} must be a number, got {values[key]!r}") from e

        n_zones = int(number("building.zones", 4))
        slot_minutes = number("building.slot_minutes", Config.SLOT_MINUTES)
        zone_kwargs = {
            "upsilon": number("rc.upsilon", Config.RC_UPSILON),
            "volume": number("zone.volume", Config.ZONE_VOLUME),
            "t_min": number("zone.t_min", Config.T_MIN),
            "t_max": number("zone.t_max", Config.T_MAX),
            "o_max": number("zone.o_max", Config.O_MAX),
        }
        if "zone.airflow_levels" in values:
            zone_kwargs["airflow_levels"] = tuple(parse_float_list(values["zone.airflow_levels"]))
        building_kwargs = {
            "mu": number("hvac.mu", Config.MU),
            "c_a": number("hvac.c_a", Config.C_A),
            "eta": number("hvac.eta", Config.ETA),
            "cop": number("hvac.cop", Config.COP),
            "t_supply": number("hvac.t_supply", Config.T_SUPPLY),
            "kappa": number("hvac.kappa", Config.KAPPA),
            "chi": number("hvac.chi", Config.CHI),
            "alpha": number("reward.alpha", Config.ALPHA),
            "beta": number("reward.beta", Config.BETA),
            "initial_co2": number("building.initial_co2", Config.INITIAL_CO2),
            "max_occupants": number("synth.max_occupants", Config.MAX_OCCUPANTS),
            "tau_seconds": slot_minutes * 60.0,
            "tau_hours": slot_minutes / 60.0,
        }
        if "hvac.damper_levels" in values:
            building_kwargs["damper_levels"] = tuple(parse_float_list(values["hvac.damper_levels"]))
        return default_building(
            n_zones,
            ell=number("rc.ell", Config.RC_ELL),
            hbar=number("rc.hbar", Config.RC_HBAR),
            varpi=number("rc.varpi", Config.RC_VARPI),
            zone_overrides=zone_kwargs,
            **building_kwargs,
        )


def default_building(n_zones: int = 4,
                     ell: float = Config.RC_ELL,
                     hbar: float = Config.RC_HBAR,
                     varpi: float = Config.RC_VARPI,
                     zone_overrides: Optional[Dict] = None,
                     **overrides) -> BuildingParams:
    """
    Building with zones on a line (zone i adjacent to i-1 and i+1).

    Every zone uses the same parameter template, so larger buildings repeat
    the 4-zone layout; the outdoor gain is ``1 - ell - sum(hbar)``.
    """
    if n_zones <= 0:
        raise ConfigError(f"number of zones must be positive, got {n_zones}")
    zone_overrides = zone_overrides or {}
    zones = []
    for i in range(n_zones):
        neighbors = {z: hbar for z in (i - 1, i + 1) if 0 <= z < n_zones}
        zones.append(ZoneParams(
            ell=ell,
            hbar=neighbors,
            varpi=varpi,
            varrho=max(0.0, 1.0 - ell - sum(neighbors.values())),
            **zone_overrides,
        ))
    return BuildingParams(zones=tuple(zones), **overrides)


# =============================================================================
# STATE, ACTIONS, REWARDS
# =============================================================================

@dataclass(frozen=True)
class EnvState:
    """Indoor temperatures and CO2 per zone at global slot ``slot``."""
    temps: np.ndarray
    co2: np.ndarray
    slot: int
    end_slot: int
    slots_per_day: int = Config.SLOTS_PER_DAY

    def __post_init__(self):
        temps = np.array(self.temps, dtype=np.float64)
        co2 = np.array(self.co2, dtype=np.float64)
        temps.setflags(write=False)
        co2.setflags(write=False)
        object.__setattr__(self, "temps", temps)
        object.__setattr__(self, "co2", co2)
        if np.any(co2 <= 0):
            raise EnvError("CO2 concentrations must be positive")

    @property
    def slot_of_day(self) -> int:
        return self.slot % self.slots_per_day

    @property
    def done(self) -> bool:
        return self.slot >= self.end_slot


@dataclass(frozen=True)
class JointAction:
    """Airflow level index per zone plus the AHU damper level index."""
    airflow_idx: Tuple[int, ...]
    damper_idx: int
    flagged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "airflow_idx", tuple(int(k) for k in self.airflow_idx))
        object.__setattr__(self, "damper_idx", int(self.damper_idx))

    @classmethod
    def from_indices(cls, indices: Sequence[int]) -> "JointAction":
        """Per-agent indices (zones first, AHU last)."""
        return cls(airflow_idx=tuple(indices[:-1]), damper_idx=indices[-1])

    def indices(self) -> List[int]:
        return list(self.airflow_idx) + [self.damper_idx]

    def validate(self, building: BuildingParams):
        if len(self.airflow_idx) != building.n_zones:
            raise EnvError(f"expected {building.n_zones} airflow indices, got {len(self.airflow_idx)}")
        for i, k in enumerate(self.airflow_idx):
            if not 0 <= k < len(building.zones[i].airflow_levels):
                raise EnvError(f"airflow index {k} out of range for zone {i}")
        if not 0 <= self.damper_idx < len(building.damper_levels):
            raise EnvError(f"damper index {self.damper_idx} out of range")

    def airflows(self, building: BuildingParams) -> np.ndarray:
        return np.array([building.zones[i].airflow_levels[k] for i, k in enumerate(self.airflow_idx)])

    def damper(self, building: BuildingParams) -> float:
        return building.damper_levels[self.damper_idx]


@dataclass
class RewardVector:
    """Per-agent reward components (agent N is the AHU) and the step energy cost."""
    fan: np.ndarray
    coil: np.ndarray
    temperature: np.ndarray
    co2: np.ndarray
    totals: np.ndarray
    fan_cost: float
    coil_cost: float

    @property
    def energy_cost(self) -> float:
        return self.fan_cost + self.coil_cost


# =============================================================================
# DYNAMICS
# =============================================================================

def coupling_matrix(building: BuildingParams) -> np.ndarray:
    """Matrix with ell on the diagonal and hbar between neighbors."""
    n = building.n_zones
    matrix = np.zeros((n, n))
    for i, zone in enumerate(building.zones):
        matrix[i, i] = zone.ell
        for z, coefficient in zone.hbar.items():
            matrix[i, z] = coefficient
    return matrix


def thermal_mean(building: BuildingParams, temps: np.ndarray, airflows: np.ndarray,
                 outdoor_temp: float) -> np.ndarray:
    """Disturbance-free RC update."""
    varpi = np.array([z.varpi for z in building.zones])
    varrho = np.array([z.varrho for z in building.zones])
    return (coupling_matrix(building) @ temps
            + varpi * airflows * (building.t_supply - temps)
            + varrho * outdoor_temp)


def thermal_step(building: BuildingParams, state: EnvState, action: JointAction,
                 traces: TraceSet, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Next zone temperatures; the disturbance is uniform(-upsilon, upsilon) per zone."""
    outdoor_temp = traces.at(state.slot).outdoor_temp
    temps = thermal_mean(building, state.temps, action.airflows(building), outdoor_temp)
    upsilon = np.array([z.upsilon for z in building.zones])
    if rng is not None:
        temps = temps + rng.uniform(-upsilon, upsilon)
    elif np.any(upsilon > 0):
        raise EnvError("a random generator is required when the disturbance width is positive")
    return temps


def co2_mix(co2: np.ndarray, airflows: np.ndarray, damper: float, o_out: float) -> float:
    """Mixed-air CO2 of recirculated and outdoor air; no return air when total airflow is 0."""
    total = float(np.sum(airflows))
    if total <= 0.0:
        return (1.0 - damper) * o_out
    return (1.0 - damper) * o_out + damper * float(np.dot(co2, airflows)) / total


def co2_source(building: BuildingParams, occupancy: np.ndarray) -> np.ndarray:
    """Per-slot ppm added by occupants (L/m^3 scaled by 1000 to ppm)."""
    volume = np.array([z.volume for z in building.zones])
    return occupancy * building.tau_seconds * building.chi * 1000.0 / volume


def co2_step(building: BuildingParams, state: EnvState, action: JointAction,
             traces: TraceSet) -> np.ndarray:
    values = traces.at(state.slot)
    airflows = action.airflows(building)
    mixed = co2_mix(state.co2, airflows, action.damper(building), values.outdoor_co2)
    volume = np.array([z.volume for z in building.zones])
    fraction = airflows * building.tau_seconds / (building.kappa * volume)
    return (1.0 - fraction) * state.co2 + fraction * mixed + co2_source(building, values.occupancy)


# =============================================================================
# ENERGY COSTS
# =============================================================================

def fan_energy_cost(airflows: np.ndarray, price: float, tau_hours: float, mu: float = Config.MU) -> float:
    """Supply fan cost in RMB: mu * (sum m)^3 W, converted to kW, times price and slot hours."""
    power_kw = mu * float(np.sum(airflows)) ** 3 / 1000.0
    return power_kw * price * tau_hours


def coil_power_per_zone(building: BuildingParams, state: EnvState, action: JointAction,
                        traces: TraceSet, clamp: bool = True) -> np.ndarray:
    """Cooling coil power (W) attributable to each zone's supply air."""
    outdoor_temp = traces.at(state.slot).outdoor_temp
    sigma = action.damper(building)
    lift = sigma * state.temps + (1.0 - sigma) * outdoor_temp - building.t_supply
    power = action.airflows(building) * building.c_a / (building.eta * building.cop) * lift
    if clamp:
        power = np.maximum(power, 0.0)
    return power


def coil_power_mixed_air(building: BuildingParams, state: EnvState, action: JointAction,
                         traces: TraceSet) -> float:
    """Total coil power (W) computed from the mixed-air temperature."""
    airflows = action.airflows(building)
    total = float(np.sum(airflows))
    if total <= 0.0:
        return 0.0
    outdoor_temp = traces.at(state.slot).outdoor_temp
    sigma = action.damper(building)
    t_mix = sigma * float(np.dot(state.temps, airflows)) / total + (1.0 - sigma) * outdoor_temp
    return total * building.c_a / (building.eta * building.cop) * (t_mix - building.t_supply)


def coil_energy_cost(coil_powers: np.ndarray, price: float, tau_hours: float) -> float:
    return float(np.sum(coil_powers)) / 1000.0 * price * tau_hours


# =============================================================================
# MARKOV GAME
# =============================================================================

def reward(building: BuildingParams, prev_state: EnvState, action: JointAction,
           next_state: EnvState, traces: TraceSet) -> RewardVector:
    """
    Fan, coil, temperature and CO2 reward components for all N+1 agents.

    Cost shares use the price of the slot the action was taken in; the
    temperature and CO2 components score ``next_state`` with the occupancy
    of its slot.
    """
    n = building.n_zones
    price = traces.at(prev_state.slot).price
    airflows = action.airflows(building)

    fan_cost = fan_energy_cost(airflows, price, building.tau_hours, building.mu)
    coil_powers = coil_power_per_zone(building, prev_state, action, traces)
    zone_coil_costs = coil_powers / 1000.0 * price * building.tau_hours
    coil_cost = float(np.sum(zone_coil_costs))

    fan = np.zeros(n + 1)
    fan[:n] = -fan_cost / n

    coil = np.zeros(n + 1)
    coil[:n] = -(n / (n + 1)) * zone_coil_costs
    coil[n] = -coil_cost / (n + 1)

    occupied = (traces.at(next_state.slot).occupancy > 0).astype(np.float64)
    t_min = np.array([z.t_min for z in building.zones])
    t_max = np.array([z.t_max for z in building.zones])
    o_max = np.array([z.o_max for z in building.zones])

    deviation = np.maximum(next_state.temps - t_max, 0.0) + np.maximum(t_min - next_state.temps, 0.0)
    temperature = np.zeros(n + 1)
    temperature[:n] = -occupied * deviation

    violation = occupied * np.maximum(next_state.co2 - o_max, 0.0)
    co2 = np.zeros(n + 1)
    co2[:n] = -(n / (n + 1)) * violation
    co2[n] = -float(np.sum(violation)) / (n + 1)

    totals = building.alpha * (fan + coil) + building.beta * co2 + temperature
    return RewardVector(fan=fan, coil=coil, temperature=temperature, co2=co2, totals=totals,
                        fan_cost=fan_cost, coil_cost=coil_cost)


def observe(building: BuildingParams, state: EnvState, traces: TraceSet) -> List[np.ndarray]:
    """
    Per-agent observation vectors.

    Zone i: (T_out, T_i, neighbor temps by ascending zone index, price, slot of day, K_i, O_i).
    AHU:    (price, slot of day, K_1..K_N, O_1..O_N).
    """
    values = traces.at(state.slot)
    observations = []
    for i, zone in enumerate(building.zones):
        neighbor_temps = [state.temps[z] for z in zone.neighbors]
        observations.append(np.array([
            values.outdoor_temp, state.temps[i], *neighbor_temps,
            values.price, state.slot_of_day, values.occupancy[i], state.co2[i],
        ], dtype=np.float64))
    observations.append(np.concatenate([
        [values.price, state.slot_of_day],
        values.occupancy.astype(np.float64),
        state.co2,
    ]))
    return observations


def observation_scales(building: BuildingParams) -> List[np.ndarray]:
    """Divisors that bring each observation entry to order one."""
    temp, price, co2 = 30.0, 1.0, 1000.0
    day = float(building.slots_per_day)
    occupants = float(building.max_occupants)
    scales = []
    for zone in building.zones:
        scales.append(np.array([temp, temp, *[temp] * len(zone.neighbors), price, day, occupants, co2]))
    n = building.n_zones
    scales.append(np.array([price, day, *[occupants] * n, *[co2] * n]))
    return scales


def check_traces(building: BuildingParams, traces: TraceSet):
    """Traces must match the building's zone count and slot length."""
    if traces.n_zones != building.n_zones:
        raise EnvError(f"traces have {traces.n_zones} zones, building has {building.n_zones}")
    if abs(traces.slot_minutes * 60.0 - building.tau_seconds) > 1e-9:
        raise EnvError(f"traces use {traces.slot_minutes}-minute slots, building uses "
                       f"{building.tau_seconds / 60.0:g}-minute slots")


def reset(building: BuildingParams, traces: TraceSet, day_index: int,
          initial_temps: Optional[Sequence[float]] = None,
          initial_co2: Optional[float] = None,
          seed: Optional[int] = None,
          jitter: float = 0.0,
          n_days: int = 1) -> EnvState:
    """
    Initial state at the start of day ``day_index``.

    Temperatures default to that slot's outdoor temperature clamped to each
    zone's comfort band; ``jitter`` adds a seeded uniform offset.
    """
    check_traces(building, traces)
    slots_per_day = traces.slots_per_day
    if day_index < 0 or (day_index + n_days) * slots_per_day > traces.length:
        raise EnvError(f"day_index {day_index} (+{n_days} days) out of range for {traces.n_days} days")

    start = day_index * slots_per_day
    if initial_temps is None:
        outdoor_temp = traces.at(start).outdoor_temp
        temps = np.array([min(max(outdoor_temp, z.t_min), z.t_max) for z in building.zones])
    else:
        temps = np.array(initial_temps, dtype=np.float64)
        if temps.shape != (building.n_zones,):
            raise EnvError(f"expected {building.n_zones} initial temperatures")
    if jitter > 0:
        temps = temps + np.random.default_rng(seed).uniform(-jitter, jitter, size=building.n_zones)

    co2_value = building.initial_co2 if initial_co2 is None else float(initial_co2)
    return EnvState(temps=temps, co2=np.full(building.n_zones, co2_value), slot=start,
                    end_slot=start + n_days * slots_per_day, slots_per_day=slots_per_day)


def step(building: BuildingParams, state: EnvState, action: JointAction, traces: TraceSet,
         rng: Optional[np.random.Generator]) -> Tuple[EnvState, RewardVector, bool]:
    """Advance one slot; ``done`` once the episode's slots are consumed."""
    if state.done:
        raise EpisodeFinishedError(f"episode ended at slot {state.end_slot}; call reset first")
    action.validate(building)

    next_state = EnvState(
        temps=thermal_step(building, state, action, traces, rng),
        co2=co2_step(building, state, action, traces),
        slot=state.slot + 1,
        end_slot=state.end_slot,
        slots_per_day=state.slots_per_day,
    )
    rewards = reward(building, state, action, next_state, traces)
    return next_state, rewards, next_state.done


# =============================================================================
# EPISODE LOGS & METRICS
# =============================================================================

@dataclass
class ComfortMetrics:
    """Average temperature deviation, average CO2 deviation and total energy cost."""
    atd: float
    acd: float
    tec: float

    def as_dict(self) -> Dict[str, float]:
        return {"tec": self.tec, "atd": self.atd, "acd": self.acd}


def episode_log_columns(n_zones: int) -> List[str]:
    zones = range(1, n_zones + 1)
    return (["slot", "slot_of_day", "price", "outdoor_temp"]
            + [f"temp_{i}" for i in zones]
            + [f"co2_{i}" for i in zones]
            + [f"occupancy_{i}" for i in zones]
            + [f"airflow_idx_{i}" for i in zones]
            + [f"airflow_{i}" for i in zones]
            + ["damper_idx", "damper", "fan_cost", "coil_cost", "energy_cost"]
            + [f"reward_{i}" for i in range(1, n_zones + 2)]
            + ["flagged"])


def log_row(building: BuildingParams, state: EnvState, action: JointAction, next_state: EnvState,
            rewards: RewardVector, traces: TraceSet) -> Dict:
    """One episode-log row: inputs of the slot, the state reached, and its rewards."""
    values = traces.at(state.slot)
    next_occupancy = traces.at(next_state.slot).occupancy
    airflows = action.airflows(building)
    row = {"slot": state.slot, "slot_of_day": state.slot_of_day,
           "price": values.price, "outdoor_temp": values.outdoor_temp}
    for i in range(building.n_zones):
        row[f"temp_{i + 1}"] = next_state.temps[i]
    for i in range(building.n_zones):
        row[f"co2_{i + 1}"] = next_state.co2[i]
    for i in range(building.n_zones):
        row[f"occupancy_{i + 1}"] = int(next_occupancy[i])
    for i in range(building.n_zones):
        row[f"airflow_idx_{i + 1}"] = action.airflow_idx[i]
    for i in range(building.n_zones):
        row[f"airflow_{i + 1}"] = airflows[i]
    row.update({
        "damper_idx": action.damper_idx,
        "damper": action.damper(building),
        "fan_cost": rewards.fan_cost,
        "coil_cost": rewards.coil_cost,
        "energy_cost": rewards.energy_cost,
    })
    for i, total in enumerate(rewards.totals):
        row[f"reward_{i + 1}"] = total
    row["flagged"] = int(action.flagged)
    return row


def metrics(episode_log: pd.DataFrame, building: BuildingParams) -> ComfortMetrics:
    """
    ATD, ACD and TEC of an episode log.

    Each zone's deviation is averaged over its own occupied slots; a zone that
    is never occupied contributes 0.
    """
    if len(episode_log) == 0:
        raise EnvError("metrics need an episode log covering at least one slot")
    n = building.n_zones
    atd, acd = 0.0, 0.0
    for i, zone in enumerate(building.zones):
        occupied = episode_log[f"occupancy_{i + 1}"].to_numpy() > 0
        count = int(occupied.sum())
        if count == 0:
            continue
        temps = episode_log[f"temp_{i + 1}"].to_numpy()[occupied]
        co2 = episode_log[f"co2_{i + 1}"].to_numpy()[occupied]
        atd += float(np.sum(np.maximum(temps - zone.t_max, 0.0) + np.maximum(zone.t_min - temps, 0.0))) / count
        acd += float(np.sum(np.maximum(co2 - zone.o_max, 0.0))) / count
    tec = float(episode_log["energy_cost"].sum())
    return ComfortMetrics(atd=atd / n, acd=acd / n, tec=tec)


# Controllers map (state, traces) to a JointAction; an optional reset() is
# called at the start of every rollout.
Controller = Callable[[EnvState, TraceSet], JointAction]


def rollout(building: BuildingParams, traces: TraceSet, controller: Controller,
            start_day: int = 0, horizon: Optional[int] = None,
            rng: Optional[np.random.Generator] = None,
            initial_co2: Optional[float] = None) -> pd.DataFrame:
    """
    Drive ``controller`` for ``horizon`` slots from the start of ``start_day``.

    Returns the episode log; horizon 0 gives an empty log with the usual columns.
    """
    slots_per_day = traces.slots_per_day
    start = start_day * slots_per_day
    horizon = slots_per_day if horizon is None else horizon
    if horizon < 0 or start + horizon > traces.length:
        raise EnvError(f"horizon {horizon} from slot {start} exceeds traces of length {traces.length}")
    if rng is None:
        rng = np.random.default_rng(0)

    columns = episode_log_columns(building.n_zones)
    if horizon == 0:
        return pd.DataFrame(columns=columns)

    n_days = -(-horizon // slots_per_day)
    n_days = min(n_days, traces.n_days - start_day)
    state = reset(building, traces, start_day, initial_co2=initial_co2, n_days=max(n_days, 1))
    state = replace(state, end_slot=start + horizon)
    if hasattr(controller, "reset"):
        controller.reset()

    rows = []
    while not state.done:
        action = controller(state, traces)
        next_state, rewards, _ = step(building, state, action, traces, rng)
        rows.append(log_row(building, state, action, next_state, rewards, traces))
        state = next_state
    return pd.DataFrame(rows, columns=columns)


class BuildingEnv:
    """
    Reset/step environment over one building and a trace set.

    Observations are lists of N+1 vectors; actions are per-agent indices
    (zones first, AHU last); rewards are the N+1 per-agent totals.
    """

    def __init__(self, building: BuildingParams, traces: TraceSet, seed: Optional[int] = None):
        check_traces(building, traces)
        self.building = building
        self.traces = traces
        self.rng = np.random.default_rng(seed)
        self.state: Optional[EnvState] = None

    @property
    def n_agents(self) -> int:
        return self.building.n_agents

    @property
    def action_sizes(self) -> List[int]:
        return self.building.action_sizes

    @property
    def observation_sizes(self) -> List[int]:
        return [len(s) for s in observation_scales(self.building)]

    @property
    def n_days(self) -> int:
        return self.traces.n_days

    def observation_scales(self) -> List[np.ndarray]:
        return observation_scales(self.building)

    def reset(self, day_index: int, n_days: int = 1) -> List[np.ndarray]:
        self.state = reset(self.building, self.traces, day_index, n_days=n_days)
        return observe(self.building, self.state, self.traces)

    def step(self, action_indices: Sequence[int]) -> Tuple[List[np.ndarray], np.ndarray, bool, Dict]:
        if self.state is None:
            raise EnvError("call reset before step")
        action = JointAction.from_indices(list(action_indices))
        prev_state = self.state
        self.state, rewards, done = step(self.building, prev_state, action, self.traces, self.rng)
        info = {"prev_state": prev_state, "action": action, "reward_vector": rewards}
        return observe(self.building, self.state, self.traces), rewards.totals.copy(), done, info
