"""
Experiment pipeline

Synthesize or load traces, train per seed, evaluate on the held-out window,
compare the learned policy against RS and HS, sweep the reward weights, and
run the gated studies. Results land in a deterministic directory layout
under the configured output directory.
"""

import logging
import os
import threading
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from . import plots
from .baselines import HeuristicController, RuleBasedController
from .building import BuildingEnv, BuildingParams, metrics, observation_scales, rollout
from .config import Config, ConfigError, parse_float_list, parse_int_list, read_kv_file
from .maac import AgentSet, TrainConfig, execute, train
from .networks import CheckpointError
from .traces import SynthSpec, TraceSet, load_traces, save_traces, split, synthesize_traces

logger = logging.getLogger(__name__)

SCHEMES = ("proposed", "rs", "hs")
METRICS = ("tec", "atd", "acd")


# =============================================================================
# CONFIGURATION
# =============================================================================

def parse_conditions(text: str) -> List[Tuple[float, float]]:
    """Parse ``atd:acd`` pairs separated by commas, e.g. ``1.2:40, 1.0:10``."""
    conditions = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            atd, acd = item.split(":")
            conditions.append((float(atd), float(acd)))
        except ValueError as e:
            raise ConfigError(f"comfort condition must look like 'atd:acd', got {item.strip()!r}") from e
    return conditions


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs."""
    building: BuildingParams
    train: TrainConfig
    seeds: List[int]
    out_dir: str = Config.RESULTS_BASE_DIR
    price_path: Optional[str] = None
    weather_path: Optional[str] = None
    occupancy_path: Optional[str] = None
    source_minutes: Optional[int] = None
    synth: Optional[SynthSpec] = None
    synth_seed: int = 0
    train_days: int = Config.SYNTH_TRAIN_DAYS
    eval_days: Optional[int] = None
    alpha_grid: List[float] = field(default_factory=lambda: [Config.ALPHA])
    beta_grid: List[float] = field(default_factory=lambda: [Config.BETA])
    comfort_conditions: List[Tuple[float, float]] = field(default_factory=lambda: list(Config.COMFORT_CONDITIONS))
    confidence: float = Config.CONFIDENCE_LEVEL
    rs_damper: float = Config.RS_DAMPER
    hs_zeta: float = Config.HS_ZETA
    workers: int = Config.SWEEP_WORKERS

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("experiment.seeds must list at least one seed")
        if self.train_days <= 0:
            raise ConfigError(f"split.train_days must be positive, got {self.train_days}")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError(f"confidence level must lie in (0, 1), got {self.confidence}")
        if self.workers <= 0:
            raise ConfigError(f"worker count must be positive, got {self.workers}")

    @property
    def has_trace_files(self) -> bool:
        return bool(self.price_path and self.weather_path and self.occupancy_path)

    def with_seeds(self, seeds: Sequence[int]) -> "ExperimentConfig":
        return replace(self, seeds=list(seeds))

    def with_out_dir(self, out_dir: str) -> "ExperimentConfig":
        return replace(self, out_dir=out_dir)

    @classmethod
    def from_mapping(cls, values: Dict[str, str], base_dir: str = ".") -> "ExperimentConfig":
        building = BuildingParams.from_mapping(values)
        train_config = TrainConfig.from_mapping(values)
        if "train.slots_per_episode" not in values:
            train_config = replace(train_config, slots_per_episode=building.slots_per_day)

        def path(key: str) -> Optional[str]:
            if key not in values:
                return None
            return os.path.normpath(os.path.join(base_dir, values[key]))

        slot_minutes = int(round(building.tau_seconds / 60.0))
        if "synth.slot_minutes" in values and int(values["synth.slot_minutes"]) != slot_minutes:
            raise ConfigError(f"synth.slot_minutes={values['synth.slot_minutes']} disagrees with "
                              f"building.slot_minutes={slot_minutes}; set building.slot_minutes only")
        synth = None
        if any(key.startswith("synth.") and key != "synth.max_occupants" for key in values):
            synth = SynthSpec.from_mapping(values, building.n_zones, slot_minutes=slot_minutes)

        kwargs = {
            "building": building,
            "train": train_config,
            "seeds": parse_int_list(values.get("experiment.seeds", "0")),
            "price_path": path("traces.price"),
            "weather_path": path("traces.weather"),
            "occupancy_path": path("traces.occupancy"),
            "synth": synth,
            "synth_seed": int(values.get("synth.seed", 0)),
            "train_days": int(values.get("split.train_days", Config.SYNTH_TRAIN_DAYS)),
            "alpha_grid": parse_float_list(values.get("sweep.alpha", str(building.alpha))),
            "beta_grid": parse_float_list(values.get("sweep.beta", str(building.beta))),
            "rs_damper": float(values.get("baseline.rs_damper", Config.RS_DAMPER)),
            "hs_zeta": float(values.get("baseline.hs_zeta", Config.HS_ZETA)),
            "confidence": float(values.get("compare.confidence", Config.CONFIDENCE_LEVEL)),
            "workers": int(values.get("experiment.workers", Config.SWEEP_WORKERS)),
        }
        if "experiment.out" in values:
            kwargs["out_dir"] = path("experiment.out")
        if "traces.source_minutes" in values:
            kwargs["source_minutes"] = int(values["traces.source_minutes"])
        if "eval.days" in values:
            kwargs["eval_days"] = int(values["eval.days"])
        if "comfort.conditions" in values:
            kwargs["comfort_conditions"] = parse_conditions(values["comfort.conditions"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        values = read_kv_file(path)
        return cls.from_mapping(values, base_dir=os.path.dirname(os.path.abspath(path)))


# =============================================================================
# STATISTICS
# =============================================================================

def confidence_interval(values: Sequence[float], level: float = Config.CONFIDENCE_LEVEL) -> Tuple[float, float, bool]:
    """
    Mean and half-width of the normal-approximation interval.

    Returns (mean, half_width, degenerate); a single value has width 0 and is
    reported as degenerate.
    """
    data = np.asarray(values, dtype=np.float64)
    if len(data) == 0:
        raise ConfigError("confidence interval needs at least one value")
    mean = float(data.mean())
    if len(data) == 1:
        return mean, 0.0, True
    z = norm.ppf(0.5 + level / 2.0)
    return mean, float(z * data.std(ddof=1) / np.sqrt(len(data))), False


def summarize(per_seed: pd.DataFrame, conditions: Sequence[Tuple[float, float]],
              level: float = Config.CONFIDENCE_LEVEL) -> pd.DataFrame:
    """One row per scheme: mean and interval of each metric plus TEC per comfort condition."""
    rows = []
    for scheme in [s for s in SCHEMES if s in set(per_seed["scheme"])]:
        subset = per_seed[per_seed["scheme"] == scheme]
        row = {"scheme": scheme, "n": len(subset)}
        for metric in METRICS:
            mean, half, degenerate = confidence_interval(subset[metric], level)
            row[f"{metric}_mean"] = mean
            row[f"{metric}_ci"] = half
            row["degenerate"] = degenerate
        for k, (atd_cap, acd_cap) in enumerate(conditions, 1):
            meets = row["atd_mean"] <= atd_cap and row["acd_mean"] <= acd_cap
            row[f"tec_condition_{k}"] = f"{row['tec_mean']:.6f}" if meets else "N/A"
        rows.append(row)
    return pd.DataFrame(rows)


# =============================================================================
# PIPELINE
# =============================================================================

@dataclass
class TrainRun:
    seed: int
    agents: AgentSet
    training_log: pd.DataFrame
    run_dir: str


@dataclass
class EvalRun:
    seed: int
    episode_log: pd.DataFrame
    metrics: Dict[str, float]
    run_dir: str


@dataclass
class CompareReport:
    summary: pd.DataFrame
    per_seed: pd.DataFrame
    slot_logs: Dict[str, pd.DataFrame]
    results_dir: str
    errors: List[str]


def load_experiment_traces(config: ExperimentConfig) -> TraceSet:
    if config.has_trace_files:
        return load_traces(config.price_path, config.weather_path, config.occupancy_path,
                           n_zones=config.building.n_zones,
                           slot_minutes=int(round(config.building.tau_seconds / 60.0)),
                           source_minutes=config.source_minutes)
    if config.synth is not None:
        return synthesize_traces(config.synth, config.synth_seed)
    raise ConfigError(Config.ERROR_MESSAGES["no_traces"])


def building_env_factory(building: BuildingParams):
    def factory(traces: TraceSet, seed: int) -> BuildingEnv:
        return BuildingEnv(building, traces, seed=seed)
    return factory


def train_one(building: BuildingParams, train_config: TrainConfig, traces: TraceSet, seed: int,
              run_dir: str, show_progress: bool = False) -> TrainRun:
    """Train one seed and write checkpoint, training log and reward curve into ``run_dir``."""
    os.makedirs(run_dir, exist_ok=True)
    result = train(building_env_factory(building), traces, train_config, seed, show_progress=show_progress)
    result.agents.save(Config.get_file_path(run_dir, "checkpoint"))
    result.log.to_csv(Config.get_file_path(run_dir, "training_log"), index=False)
    plots.plot_reward_curve(result.log, Config.get_file_path(run_dir, "reward_curve"))
    return TrainRun(seed=seed, agents=result.agents, training_log=result.log, run_dir=run_dir)


def load_agents(building: BuildingParams, train_config: TrainConfig, checkpoint: str) -> AgentSet:
    if not os.path.exists(checkpoint):
        raise CheckpointError(Config.ERROR_MESSAGES["missing_checkpoint"].format(path=checkpoint))
    obs_sizes = [len(scale) for scale in observation_scales(building)]
    return AgentSet.load(checkpoint, obs_sizes, building.action_sizes, train_config)


def evaluation_horizon(config: ExperimentConfig, test: TraceSet) -> int:
    if config.eval_days is None:
        return test.length
    return min(config.eval_days * test.slots_per_day, test.length)


def evaluate_scheme(scheme: str, building: BuildingParams, test: TraceSet, horizon: int, seed: int,
                    agents: Optional[AgentSet] = None, rs_damper: float = Config.RS_DAMPER,
                    hs_zeta: float = Config.HS_ZETA) -> pd.DataFrame:
    """Episode log of one scheme on the held-out traces; disturbances are seeded by ``seed``."""
    env = BuildingEnv(building, test, seed=seed)
    if scheme == "proposed":
        if agents is None:
            raise CheckpointError("the proposed scheme needs trained agents")
        return execute(agents, env, horizon)
    if scheme == "rs":
        controller = RuleBasedController(building, damper=rs_damper)
    elif scheme == "hs":
        controller = HeuristicController(building, zeta=hs_zeta)
    else:
        raise ConfigError(f"unknown scheme '{scheme}'")
    return rollout(building, test, controller, start_day=0, horizon=horizon, rng=env.rng)


def _run_sweep_cell(config: ExperimentConfig, train_traces: TraceSet, test: TraceSet,
                    alpha: float, beta: float, seed: int, cell_dir: str) -> Dict:
    """Train and evaluate one (alpha, beta, seed) cell; runs in a worker process."""
    building = config.building.with_rewards(alpha, beta)
    run = train_one(building, config.train, train_traces, seed, cell_dir)
    log = evaluate_scheme("proposed", building, test, evaluation_horizon(config, test), seed, agents=run.agents)
    log.to_csv(Config.get_file_path(cell_dir, "episode_log"), index=False)
    values = metrics(log, building).as_dict()
    pd.DataFrame([values]).to_csv(Config.get_file_path(cell_dir, "metrics"), index=False)
    return {"alpha": alpha, "beta": beta, "seed": seed, **values}


class ExperimentPipeline:
    """Runs the experiment subcommands against one configuration."""

    def __init__(self, config: ExperimentConfig, show_progress: bool = True):
        self.config = config
        self.show_progress = show_progress
        self.errors: List[str] = []
        self.lock = threading.Lock()
        self._traces: Optional[Tuple[TraceSet, TraceSet]] = None

    def _say(self, emoji: str, message: str):
        if self.show_progress:
            print(f"{Config.get_emoji(emoji)} {message}")

    def _record_error(self, message: str):
        with self.lock:
            self.errors.append(message)
        logger.error(message)

    def _write_errors(self, directory: str):
        if self.errors:
            os.makedirs(directory, exist_ok=True)
            with open(Config.get_file_path(directory, "errors"), "w", encoding="utf-8") as f:
                for error in self.errors:
                    f.write(f"{error}\n")

    def traces(self) -> Tuple[TraceSet, TraceSet]:
        """(train, test) split of the configured traces."""
        if self._traces is None:
            self._traces = split(load_experiment_traces(self.config), self.config.train_days)
        return self._traces

    def seed_dir(self, stage: str, seed: int) -> str:
        return os.path.join(self.config.out_dir, stage, f"seed_{seed}")

    # -------------------------------------------------------------------------

    def cmd_synth(self) -> Dict[str, str]:
        """Write the full configured traces as CSVs under ``<out>/traces``."""
        traces = load_experiment_traces(self.config)
        directory = os.path.join(self.config.out_dir, "traces")
        paths = save_traces(traces, directory)
        self._say("disk", f"Wrote {traces.length} slots for {traces.n_zones} zones to {directory}/")
        return paths

    def cmd_train(self, seeds: Optional[Sequence[int]] = None) -> List[TrainRun]:
        train_traces, _ = self.traces()
        runs = []
        for seed in seeds or self.config.seeds:
            started = time.time()
            self._say("robot", f"Training seed {seed} ({self.config.train.episodes} episodes)")
            run = train_one(self.config.building, self.config.train, train_traces, seed,
                            self.seed_dir("train", seed), show_progress=self.show_progress)
            self._say("check", f"Seed {seed} done in {time.time() - started:.1f}s -> {run.run_dir}/")
            runs.append(run)
        return runs

    def checkpoint_path(self, seed: int) -> str:
        return Config.get_file_path(self.seed_dir("train", seed), "checkpoint")

    def cmd_eval(self, seeds: Optional[Sequence[int]] = None,
                 checkpoint: Optional[str] = None) -> List[EvalRun]:
        """Greedy execution of trained agents on the held-out window."""
        _, test = self.traces()
        horizon = evaluation_horizon(self.config, test)
        runs = []
        for seed in seeds or self.config.seeds:
            agents = load_agents(self.config.building, self.config.train, checkpoint or self.checkpoint_path(seed))
            log = evaluate_scheme("proposed", self.config.building, test, horizon, seed, agents=agents)
            values = metrics(log, self.config.building).as_dict()
            run_dir = self.seed_dir("eval", seed)
            os.makedirs(run_dir, exist_ok=True)
            log.to_csv(Config.get_file_path(run_dir, "episode_log"), index=False)
            pd.DataFrame([values]).to_csv(Config.get_file_path(run_dir, "metrics"), index=False)
            self._say("thermometer", f"Seed {seed}: TEC {values['tec']:.3f} RMB, "
                                     f"ATD {values['atd']:.3f} C, ACD {values['acd']:.2f} ppm")
            runs.append(EvalRun(seed=seed, episode_log=log, metrics=values, run_dir=run_dir))
        return runs

    def cmd_compare(self, checkpoints: Optional[Dict[int, str]] = None) -> CompareReport:
        """Proposed vs RS vs HS per seed, with interval summaries and per-slot logs."""
        _, test = self.traces()
        building = self.config.building
        horizon = evaluation_horizon(self.config, test)
        results_dir = os.path.join(self.config.out_dir, "compare")
        os.makedirs(results_dir, exist_ok=True)
        self._say("chart", f"Comparing {', '.join(SCHEMES)} over {len(self.config.seeds)} seeds")

        rows, slot_logs = [], {}
        for seed in self.config.seeds:
            checkpoint = (checkpoints or {}).get(seed, self.checkpoint_path(seed))
            agents = load_agents(building, self.config.train, checkpoint)
            for scheme in SCHEMES:
                log = evaluate_scheme(scheme, building, test, horizon, seed, agents=agents,
                                      rs_damper=self.config.rs_damper, hs_zeta=self.config.hs_zeta)
                rows.append({"scheme": scheme, "seed": seed, **metrics(log, building).as_dict()})
                slot_logs.setdefault(scheme, log)

        per_seed = pd.DataFrame(rows, columns=["scheme", "seed", *METRICS])
        summary = summarize(per_seed, self.config.comfort_conditions, self.config.confidence)
        per_seed.to_csv(Config.get_file_path(results_dir, "per_seed"), index=False)
        summary.to_csv(Config.get_file_path(results_dir, "summary"), index=False)
        for scheme, log in slot_logs.items():
            log.to_csv(os.path.join(results_dir, f"slots_{scheme}.csv"), index=False)
        plots.plot_slots(slot_logs, building.n_zones, Config.get_file_path(results_dir, "slots_plot"))

        if self.show_progress:
            print(Config.get_progress_separator())
            for _, row in summary.iterrows():
                print(f"   {Config.get_emoji('money')} {row['scheme']:>8}: TEC {row['tec_mean']:.3f} "
                      f"+/- {row['tec_ci']:.3f}, ATD {row['atd_mean']:.3f}, ACD {row['acd_mean']:.2f}")
            print(f"{Config.get_emoji('folder')} {results_dir}/")
        return CompareReport(summary=summary, per_seed=per_seed, slot_logs=slot_logs,
                             results_dir=results_dir, errors=self.errors.copy())

    def cmd_sweep(self) -> pd.DataFrame:
        """Train and evaluate every (alpha, beta, seed) cell; failed cells go to errors.txt."""
        if not self.config.alpha_grid:
            raise ConfigError(Config.ERROR_MESSAGES["empty_grid"].format(name="alpha"))
        if not self.config.beta_grid:
            raise ConfigError(Config.ERROR_MESSAGES["empty_grid"].format(name="beta"))
        train_traces, test = self.traces()
        results_dir = os.path.join(self.config.out_dir, "sweep")
        cells = list(product(self.config.alpha_grid, self.config.beta_grid, self.config.seeds))
        self._say("rocket", f"Sweeping {len(cells)} cells with {self.config.workers} workers")

        rows = []

        def cell_dir(alpha: float, beta: float, seed: int) -> str:
            return os.path.join(results_dir, "cells", f"a{alpha:g}_b{beta:g}", f"seed_{seed}")

        if self.config.workers == 1:
            for alpha, beta, seed in cells:
                try:
                    rows.append(_run_sweep_cell(self.config, train_traces, test, alpha, beta, seed,
                                                cell_dir(alpha, beta, seed)))
                    self._say("check", f"alpha={alpha:g} beta={beta:g} seed={seed}")
                except Exception as e:
                    self._record_error(f"Cell alpha={alpha:g} beta={beta:g} seed={seed} failed: {e}")
        else:
            with ProcessPoolExecutor(max_workers=self.config.workers) as executor:
                future_to_cell = {
                    executor.submit(_run_sweep_cell, self.config, train_traces, test, alpha, beta, seed,
                                    cell_dir(alpha, beta, seed)): (alpha, beta, seed)
                    for alpha, beta, seed in cells
                }
                for future in as_completed(future_to_cell):
                    alpha, beta, seed = future_to_cell[future]
                    try:
                        rows.append(future.result())
                        self._say("check", f"alpha={alpha:g} beta={beta:g} seed={seed}")
                    except Exception as e:
                        self._record_error(f"Cell alpha={alpha:g} beta={beta:g} seed={seed} failed: {e}")

        results = pd.DataFrame(rows, columns=["alpha", "beta", "seed", *METRICS])
        results = results.sort_values(["alpha", "beta", "seed"]).reset_index(drop=True)
        os.makedirs(results_dir, exist_ok=True)
        results.to_csv(Config.get_file_path(results_dir, "sweep_results"), index=False)
        if len(results):
            for metric in METRICS:
                plots.plot_sweep_surface(results, metric, os.path.join(results_dir, f"surface_{metric}.svg"))
        self._write_errors(results_dir)
        if self.errors:
            self._say("warning", f"{len(self.errors)} cells failed; see {Config.get_file_path(results_dir, 'errors')}")
        return results


# Module-level entry points mirror the CLI subcommands.

def cmd_synth(config: ExperimentConfig, show_progress: bool = False) -> Dict[str, str]:
    return ExperimentPipeline(config, show_progress).cmd_synth()


def cmd_train(config: ExperimentConfig, show_progress: bool = False) -> List[TrainRun]:
    return ExperimentPipeline(config, show_progress).cmd_train()


def cmd_eval(config: ExperimentConfig, checkpoint: Optional[str] = None,
             show_progress: bool = False) -> List[EvalRun]:
    return ExperimentPipeline(config, show_progress).cmd_eval(checkpoint=checkpoint)


def cmd_compare(config: ExperimentConfig, checkpoints: Optional[Dict[int, str]] = None,
                show_progress: bool = False) -> CompareReport:
    return ExperimentPipeline(config, show_progress).cmd_compare(checkpoints)


def cmd_sweep(config: ExperimentConfig, show_progress: bool = False) -> pd.DataFrame:
    return ExperimentPipeline(config, show_progress).cmd_sweep()


# =============================================================================
# GATED STUDIES
# =============================================================================

@dataclass
class StudyResult:
    name: str
    table: pd.DataFrame
    passed: bool
    detail: str


def convergence_window(episodes: int, window: int = Config.RUNNING_WINDOW) -> int:
    """Window compared at both ends of training; at most half the episodes so the two never overlap."""
    if episodes < 2:
        raise ConfigError(f"convergence check needs at least 2 training episodes, got {episodes}")
    if window <= 0:
        raise ConfigError(f"convergence window must be positive, got {window}")
    effective = min(window, episodes // 2)
    if effective < window:
        logger.warning(f"Convergence window shrunk from {window} to {effective} for {episodes} episodes")
    return effective


def convergence_table(runs: Sequence[TrainRun], window: int) -> pd.DataFrame:
    """Per seed and agent: mean episode reward over the first and last ``window`` episodes."""
    rows = []
    for run in runs:
        for agent, agent_rows in run.training_log.groupby("agent", sort=True):
            rewards = agent_rows["reward_sum"].to_numpy()
            first, last = rewards[:window].mean(), rewards[-window:].mean()
            rows.append({"seed": run.seed, "agent": int(agent), "window": window, "first_mean": first,
                         "last_mean": last, "improved": bool(last > first)})
    return pd.DataFrame(rows, columns=["seed", "agent", "window", "first_mean", "last_mean", "improved"])


def convergence_result(table: pd.DataFrame, required: int = 8) -> StudyResult:
    """A seed passes when every one of its agents improved."""
    per_seed = table.groupby("seed")["improved"].all()
    wins = int(per_seed.sum())
    return StudyResult("convergence", table, wins >= min(required, len(per_seed)),
                       f"{wins}/{len(per_seed)} seeds improved")


def dominance_table(per_seed: pd.DataFrame, atd_cap: float, acd_cap: float) -> pd.DataFrame:
    """
    One row per seed with every scheme's metrics and its comfort verdict under
    the same caps. A seed passes when the learned policy is comfortable and
    strictly cheaper than RS.
    """
    wide = per_seed.pivot(index="seed", columns="scheme")
    table = pd.DataFrame({"seed": wide.index.to_numpy()})
    for scheme in SCHEMES:
        if ("tec", scheme) not in wide.columns:
            continue
        for metric in METRICS:
            table[f"{scheme}_{metric}"] = wide[(metric, scheme)].to_numpy()
        table[f"{scheme}_comfortable"] = ((table[f"{scheme}_atd"] <= atd_cap)
                                          & (table[f"{scheme}_acd"] <= acd_cap))
    table["passed"] = table["proposed_comfortable"] & (table["proposed_tec"] < table["rs_tec"])
    return table


def dominance_result(table: pd.DataFrame, atd_cap: float, acd_cap: float, required: int = 8) -> StudyResult:
    wins = int(table["passed"].sum())
    rs_comfortable = int(table["rs_comfortable"].sum())
    detail = (f"{wins}/{len(table)} seeds beat RS at ATD <= {atd_cap:g}, ACD <= {acd_cap:g} "
              f"(RS comfortable in {rs_comfortable}/{len(table)})")
    return StudyResult("dominance", table, wins >= min(required, len(table)), detail)


def convergence_study(config: ExperimentConfig, window: int = Config.RUNNING_WINDOW,
                      required: int = 8, show_progress: bool = False) -> StudyResult:
    """Per seed: does every agent's mean reward over the last ``window`` episodes beat the first?"""
    window = convergence_window(config.train.episodes, window)
    runs = ExperimentPipeline(config, show_progress).cmd_train()
    return convergence_result(convergence_table(runs, window), required)


def dominance_study(config: ExperimentConfig, atd_cap: float = 1.3, acd_cap: float = 40.0,
                    required: int = 8, show_progress: bool = False) -> StudyResult:
    """Per seed: comfortable learned policy with lower TEC than RS."""
    pipeline = ExperimentPipeline(config, show_progress)
    pipeline.cmd_train()
    report = pipeline.cmd_compare()
    return dominance_result(dominance_table(report.per_seed, atd_cap, acd_cap), atd_cap, acd_cap, required)


def tradeoff_result(results: pd.DataFrame, alpha_grid: Sequence[float], beta_grid: Sequence[float]) -> StudyResult:
    """Largest alpha with smallest beta should cost less and breathe worse than the opposite corner."""
    means = results.groupby(["alpha", "beta"])[list(METRICS)].mean()
    cheap = means.loc[(max(alpha_grid), min(beta_grid))]
    comfy = means.loc[(min(alpha_grid), max(beta_grid))]
    passed = bool(cheap["tec"] < comfy["tec"] and cheap["acd"] > comfy["acd"])
    detail = f"TEC {cheap['tec']:.3f} vs {comfy['tec']:.3f}, ACD {cheap['acd']:.2f} vs {comfy['acd']:.2f}"
    return StudyResult("tradeoff", means.reset_index(), passed, detail)


def tradeoff_study(config: ExperimentConfig, show_progress: bool = False) -> StudyResult:
    results = ExperimentPipeline(config, show_progress).cmd_sweep()
    return tradeoff_result(results, config.alpha_grid, config.beta_grid)


def robustness_study(config: ExperimentConfig, disturbances: Sequence[float] = (1.0, 2.0, 3.0),
                     window: int = Config.RUNNING_WINDOW, atd_cap: float = 1.4, acd_cap: float = 40.0,
                     required: int = 7, show_progress: bool = False) -> StudyResult:
    """
    Retrain under uniform thermal disturbances of each half-width, then re-run
    the convergence and dominance checks on those runs (dominance with the
    looser ATD cap). A scenario passes on convergence; dominance is reported.
    """
    window = convergence_window(config.train.episodes, window)
    tables, verdicts, outcomes = [], [], []
    for upsilon in disturbances:
        scenario = replace(config, building=config.building.with_disturbance(upsilon),
                           out_dir=os.path.join(config.out_dir, f"robustness_u{upsilon:g}"))
        pipeline = ExperimentPipeline(scenario, show_progress)
        convergence = convergence_result(convergence_table(pipeline.cmd_train(), window), required)
        report = pipeline.cmd_compare()
        dominance = dominance_result(dominance_table(report.per_seed, atd_cap, acd_cap), atd_cap, acd_cap, required)
        tables.append(convergence.table.assign(upsilon=upsilon, check="convergence"))
        tables.append(dominance.table.assign(upsilon=upsilon, check="dominance"))
        verdicts.append(f"upsilon={upsilon:g}: {convergence.detail}; {dominance.detail}")
        outcomes.append(convergence.passed)
        if not convergence.passed:
            logger.warning(f"Robustness scenario upsilon={upsilon:g} failed: {convergence.detail}")
    table = pd.concat(tables, ignore_index=True)
    return StudyResult("robustness", table, all(outcomes), "; ".join(verdicts))
