"""
Baseline controllers

RS is the ON/OFF rule with a fixed damper. HS is the model-aware heuristic
that computes the smallest airflow keeping the next-slot temperature and CO2
within limits, using the building's true parameters.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .building import BuildingParams, EnvState, JointAction, co2_source, thermal_mean
from .config import Config, ConfigError
from .traces import TraceSet

logger = logging.getLogger(__name__)


class BaselineError(Exception):
    """Base exception for baseline controller errors."""
    pass


def snap_to_level(value: float, levels: Sequence[float]) -> int:
    """Index of the nearest level; exact midpoints go to the lower level."""
    distances = np.abs(np.asarray(levels, dtype=np.float64) - value)
    return int(np.flatnonzero(distances <= distances.min() + 1e-12)[0])


# =============================================================================
# RS: ON/OFF RULE
# =============================================================================

@dataclass
class RsState:
    """Previous airflow index per zone and the fixed damper index."""
    previous_idx: List[int]
    damper_idx: int


def rs_step(rs_state: RsState, building: BuildingParams, state: EnvState, traces: TraceSet) -> JointAction:
    """
    Per zone: no occupants -> lowest level; too warm -> highest level;
    too cold -> lowest level; otherwise keep the previous level.
    """
    occupancy = traces.at(state.slot).occupancy
    chosen = []
    for i, zone in enumerate(building.zones):
        if occupancy[i] == 0:
            k = 0
        elif state.temps[i] > zone.t_max:
            k = len(zone.airflow_levels) - 1
        elif state.temps[i] < zone.t_min:
            k = 0
        else:
            k = rs_state.previous_idx[i]
        chosen.append(k)
    rs_state.previous_idx = chosen
    return JointAction(airflow_idx=tuple(chosen), damper_idx=rs_state.damper_idx)


class RuleBasedController:
    """RS as a rollout controller."""

    def __init__(self, building: BuildingParams, damper: float = Config.RS_DAMPER):
        if not 0.0 <= damper <= 1.0:
            raise ConfigError(f"RS damper must lie in [0, 1], got {damper}")
        self.building = building
        self.damper_idx = snap_to_level(damper, building.damper_levels)
        self.state = RsState(previous_idx=[0] * building.n_zones, damper_idx=self.damper_idx)

    def reset(self):
        self.state = RsState(previous_idx=[0] * self.building.n_zones, damper_idx=self.damper_idx)

    def __call__(self, state: EnvState, traces: TraceSet) -> JointAction:
        return rs_step(self.state, self.building, state, traces)


# =============================================================================
# HS: MODEL-AWARE HEURISTIC
# =============================================================================

@dataclass(frozen=True)
class HsParams:
    """Damper value used by zones that need ventilation."""
    zeta: float = Config.HS_ZETA

    def validate(self, building: BuildingParams):
        levels = building.damper_levels
        if not (0.0 < self.zeta <= 1.0 and levels[0] <= self.zeta <= levels[-1]):
            raise ConfigError(f"HS zeta must lie in (0, 1] within the damper levels, got {self.zeta}")


@dataclass
class HsDecision:
    """Continuous per-zone decisions before snapping."""
    airflows: np.ndarray
    dampers: np.ndarray
    branches: List[str] = field(default_factory=list)
    degenerate: bool = False


def min_airflow_thermal(building: BuildingParams, zone_index: int, state: EnvState,
                        outdoor_temp: float) -> float:
    """
    Smallest airflow with next temperature <= t_max under the disturbance-free RC map.

    The map is affine in the zone's airflow, so the bound is solved exactly;
    a zone that cannot be cooled (supply not colder than the zone) gets the
    maximum airflow. Unclamped.
    """
    zone = building.zones[zone_index]
    airflows = np.zeros(building.n_zones)
    base = thermal_mean(building, state.temps, airflows, outdoor_temp)[zone_index]
    if base <= zone.t_max:
        return 0.0
    slope = zone.varpi * (building.t_supply - state.temps[zone_index])
    if slope >= 0.0:
        return zone.airflow_max
    return (zone.t_max - base) / slope


def min_airflow_co2(building: BuildingParams, zone_index: int, state: EnvState, outdoor_co2: float,
                    occupancy: float, zeta: float) -> Tuple[float, bool]:
    """
    Smallest airflow with next CO2 <= o_max when the supply air is
    (1 - zeta) * outdoor + zeta * (highest zone CO2).

    Returns (unclamped airflow, degenerate); degenerate means the supply air
    is no cleaner than the zone, so no airflow helps.
    """
    zone = building.zones[zone_index]
    current = state.co2[zone_index]
    source = occupancy * building.tau_seconds * building.chi * 1000.0 / zone.volume
    supply = (1.0 - zeta) * outdoor_co2 + zeta * float(np.max(state.co2))
    denominator = building.tau_seconds * (supply - current)
    if denominator >= 0.0:
        return zone.airflow_max, True
    return building.kappa * zone.volume * (zone.o_max - current - source) / denominator, False


def hs_decide(params: HsParams, building: BuildingParams, state: EnvState, traces: TraceSet) -> HsDecision:
    """Continuous airflow and damper choice per zone."""
    values = traces.at(state.slot)
    sources = co2_source(building, values.occupancy)
    airflows = np.zeros(building.n_zones)
    dampers = np.zeros(building.n_zones)
    branches = []
    degenerate = False
    for i, zone in enumerate(building.zones):
        if values.occupancy[i] == 0:
            branches.append("vacant")
            continue
        if state.co2[i] + sources[i] < zone.o_max:
            dampers[i] = 1.0
            m = min_airflow_thermal(building, i, state, values.outdoor_temp)
            branches.append("thermal")
        else:
            dampers[i] = params.zeta
            m, flagged = min_airflow_co2(building, i, state, values.outdoor_co2, values.occupancy[i], params.zeta)
            degenerate = degenerate or flagged
            branches.append("ventilation")
        airflows[i] = min(max(m, 0.0), zone.airflow_max)
    return HsDecision(airflows=airflows, dampers=dampers, branches=branches, degenerate=degenerate)


def hs_step(params: HsParams, building: BuildingParams, state: EnvState, traces: TraceSet) -> JointAction:
    """HS decision snapped to the nearest airflow and damper levels; the damper is the zone average."""
    decision = hs_decide(params, building, state, traces)
    airflow_idx = tuple(snap_to_level(m, zone.airflow_levels)
                        for m, zone in zip(decision.airflows, building.zones))
    damper_idx = snap_to_level(float(np.mean(decision.dampers)), building.damper_levels)
    if decision.degenerate:
        logger.warning(f"HS: no airflow can lower CO2 at slot {state.slot}; using maximum airflow")
    return JointAction(airflow_idx=airflow_idx, damper_idx=damper_idx, flagged=decision.degenerate)


class HeuristicController:
    """HS as a rollout controller."""

    def __init__(self, building: BuildingParams, zeta: float = Config.HS_ZETA):
        self.params = HsParams(zeta=zeta)
        self.params.validate(building)
        self.building = building

    def __call__(self, state: EnvState, traces: TraceSet) -> JointAction:
        return hs_step(self.params, self.building, state, traces)
