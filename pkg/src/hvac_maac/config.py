"""
Multi-zone HVAC Control Configuration

This file contains all configurable constants, file names and display settings
for the building simulator, the attention-critic learner and the experiment
pipeline, plus the reader for flat key/value parameter files.
"""

import os
from pathlib import Path
from typing import Dict, List, Optional, Set
from dotenv import load_dotenv


load_dotenv()


class ConfigError(Exception):
    """Base exception for configuration errors."""
    pass


class Config:
    """Centralized configuration for HVAC control experiments."""

    # =============================================================================
    # TIME DISCRETIZATION
    # =============================================================================

    SLOT_MINUTES = 15              # tau
    SLOTS_PER_DAY = 96             # P when tau = 15 minutes
    MINUTES_PER_DAY = 1440

    # =============================================================================
    # BUILDING CONSTANTS
    # =============================================================================

    # Thermal RC model (defaults chosen to keep the update stable)
    RC_ELL = 0.90                  # self-retention
    RC_HBAR = 0.02                 # coupling per neighbor
    RC_VARPI = 1e-4                # airflow gain, degC per (g/s) per degC
    RC_UPSILON = 0.0               # disturbance half-width, degC

    # Zone geometry and comfort band
    ZONE_VOLUME = 500.0            # m^3
    T_MIN = 19.0                   # degC
    T_MAX = 24.0                   # degC
    O_MAX = 1300.0                 # ppm
    AIRFLOW_MAX = 450.0            # g/s
    AIRFLOW_LEVELS = [45.0 * k for k in range(11)]
    DAMPER_LEVELS = [k / 10 for k in range(11)]

    # HVAC and air properties
    MU = 2e-6                      # fan coefficient, W/(g/s)^3
    C_A = 1.005                    # specific heat of air, J/g/degC
    ETA = 0.8879                   # coil efficiency
    COP = 5.9153                   # chiller coefficient of performance
    T_SUPPLY = 15.0                # degC
    KAPPA = 1200.0                 # air density, g/m^3
    CHI = 0.005                    # CO2 generation, L/s per person

    # Reward weights
    ALPHA = 24.0                   # degC / RMB
    BETA = 0.02                    # degC / ppm

    # Initial conditions
    INITIAL_CO2 = 500.0            # ppm

    # =============================================================================
    # SYNTHETIC TRACE DEFAULTS
    # =============================================================================

    SYNTH_DAYS = 61
    SYNTH_TRAIN_DAYS = 40
    PRICE_TIERS = (0.3, 0.7, 1.2)            # RMB/kWh: night / shoulder / peak
    PRICE_NIGHT_HOURS = (23, 7)              # [start, end) wrapping midnight
    PRICE_PEAK_HOURS = ((10, 15), (18, 21))
    OUTDOOR_TEMP_MEAN = 26.0                 # degC
    OUTDOOR_TEMP_AMPLITUDE = 5.0             # degC
    OUTDOOR_TEMP_PEAK_HOUR = 15.0
    OUTDOOR_TEMP_NOISE = 1.0                 # degC, uniform half-width
    OUTDOOR_CO2 = 400.0                      # ppm
    BUSINESS_HOURS = (8, 18)
    MAX_OCCUPANTS = 20
    OCCUPANCY_STEP = 2                       # max head-count change per slot

    # =============================================================================
    # TRAINING PARAMETERS
    # =============================================================================

    EPISODES = 1500                # Y (desk scale)
    BATCH_SIZE = 120               # B_size
    BUFFER_CAPACITY = 200000       # N_buffer (desk scale)
    UPDATE_EVERY = 1               # T_update
    ACTOR_LR = 0.0005              # alpha_a
    CRITIC_LR = 0.001              # alpha_c
    GAMMA = 0.995
    SOFT_RATE = 0.001              # xi
    TEMPERATURE = 0.1              # phi
    ACTOR_HIDDEN = 128             # N_a
    CRITIC_HIDDEN = 128            # N_c
    ATTEND_DIM = 128
    GRAD_CLIP = 10.0
    N_ENVS = 1
    RUNNING_WINDOW = 200
    LEAKY_SLOPE = 0.01

    # Adam moments
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPS = 1e-8

    # =============================================================================
    # BASELINES & EVALUATION
    # =============================================================================

    RS_DAMPER = 0.5                # fixed damper position for the ON/OFF rule
    HS_ZETA = 0.9                  # damper value used when ventilation is needed
    CONFIDENCE_LEVEL = 0.95
    COMFORT_CONDITIONS = [(1.2, 40.0), (1.0, 10.0), (0.01, 0.2)]   # (ATD, ACD) caps
    SWEEP_WORKERS = int(os.getenv("HVAC_MAAC_WORKERS", "1"))

    # =============================================================================
    # FILE PATHS & DIRECTORIES
    # =============================================================================

    RESULTS_BASE_DIR = os.getenv("HVAC_MAAC_RESULTS_DIR", "results")
    CHECKPOINT_MAGIC = b"HVMAAC01"

    FILES = {
        "price": "price.csv",
        "weather": "weather.csv",
        "occupancy": "occupancy.csv",
        "checkpoint": "checkpoint.bin",
        "training_log": "training_log.csv",
        "reward_curve": "reward_curve.svg",
        "episode_log": "episode_log.csv",
        "metrics": "metrics.csv",
        "summary": "summary.csv",
        "per_seed": "per_seed.csv",
        "slots_plot": "slots.svg",
        "sweep_results": "results.csv",
        "errors": "errors.txt"
    }

    # CSV headers
    PRICE_COLUMNS = ["slot", "price_rmb_per_kwh"]
    WEATHER_COLUMNS = ["slot", "outdoor_temp_c", "outdoor_co2_ppm"]
    TRAINING_LOG_COLUMNS = ["episode", "agent", "reward_sum", "running_mean_200"]

    # =============================================================================
    # LOGGING & DISPLAY
    # =============================================================================

    LOG_LEVEL = os.getenv("HVAC_MAAC_LOG_LEVEL", "INFO")
    LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
    LOG_EVERY_EPISODES = 50

    PROGRESS_SEPARATOR_LENGTH = 50
    PROGRESS_SEPARATOR_CHAR = "="

    EMOJIS = {
        "rocket": "🚀",
        "folder": "📁",
        "robot": "🤖",
        "check": "✅",
        "cross": "❌",
        "disk": "💾",
        "chart": "📊",
        "warning": "⚠️",
        "thermometer": "🌡️",
        "money": "💰"
    }

    # Exit codes per error family
    EXIT_CODES = {
        "ok": 0,
        "other": 1,
        "config": 2,
        "trace": 3,
        "env": 4,
        "learning": 5,
        "checkpoint": 6
    }

    ERROR_MESSAGES = {
        "no_traces": "No trace files configured and no synthetic trace spec given",
        "missing_checkpoint": "Checkpoint not found: {path}",
        "include_cycle": "Include cycle detected at {path}",
        "bad_line": "{path}:{line_no}: expected 'key = value', got {text!r}",
        "empty_grid": "Sweep grid for {name} is empty"
    }

    # =============================================================================
    # HELPER METHODS
    # =============================================================================

    @classmethod
    def get_file_path(cls, base_dir: str, file_key: str) -> str:
        """Get full file path for a given file key."""
        filename = cls.FILES[file_key]
        return os.path.join(base_dir, filename)

    @classmethod
    def get_progress_separator(cls, length: int = None) -> str:
        """Get a progress separator line."""
        length = length or cls.PROGRESS_SEPARATOR_LENGTH
        return cls.PROGRESS_SEPARATOR_CHAR * length

    @classmethod
    def get_emoji(cls, key: str) -> str:
        """Get an emoji by key, with fallback to empty string."""
        return cls.EMOJIS.get(key, "")


# =============================================================================
# KEY/VALUE PARAMETER FILES
# =============================================================================

def read_kv_file(path: str, _seen: Optional[Set[Path]] = None) -> Dict[str, str]:
    """
    Read a flat ``key = value`` parameter file.

    ``#`` starts a comment, blank lines are skipped and ``include <path>``
    merges another file (resolved relative to the including file). Keys read
    later override earlier ones, so an include placed first acts as a base.

    Raises:
        ConfigError: missing file, malformed line or include cycle
    """
    file_path = Path(path).resolve()
    seen = set() if _seen is None else _seen
    if file_path in seen:
        raise ConfigError(Config.ERROR_MESSAGES["include_cycle"].format(path=file_path))
    if not file_path.exists():
        raise ConfigError(f"Parameter file not found: {file_path}")
    seen = seen | {file_path}

    values: Dict[str, str] = {}
    with open(file_path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if text.startswith("include "):
                target = text[len("include "):].strip()
                values.update(read_kv_file(str(file_path.parent / target), seen))
                continue
            if "=" not in text:
                raise ConfigError(Config.ERROR_MESSAGES["bad_line"].format(
                    path=file_path, line_no=line_no, text=raw.rstrip("\n")))
            key, value = text.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def parse_float_list(text: str) -> List[float]:
    """Parse a comma-separated list of floats ("" -> [])."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected a comma-separated list of numbers, got {text!r}") from e


def parse_int_list(text: str) -> List[int]:
    """Parse a comma-separated list of integers ("" -> [])."""
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected a comma-separated list of integers, got {text!r}") from e


def parse_bool(text: str) -> bool:
    """Parse yes/no style flags."""
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"Expected a boolean flag, got {text!r}")
