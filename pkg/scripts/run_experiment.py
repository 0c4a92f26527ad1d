#!/usr/bin/env python3
"""
Run a full experiment: train every seed, then compare against RS and HS.

Usage:
    python scripts/run_experiment.py configs/default.cfg
    python scripts/run_experiment.py configs/desk_scale.cfg 0,1,2
"""

import sys
from pathlib import Path

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.hvac_maac.config import ConfigError, parse_int_list
from src.hvac_maac.experiments import ExperimentConfig, ExperimentPipeline


def main():
    """Train and compare for the config given on the command line."""

    if len(sys.argv) < 2:
        print("🤖 HVAC MAAC Experiment")
        print("=" * 50)
        print("Usage: python scripts/run_experiment.py <config> [seeds]")
        print()
        print("Examples:")
        print("  python scripts/run_experiment.py configs/default.cfg")
        print("  python scripts/run_experiment.py configs/desk_scale.cfg 0,1,2")
        sys.exit(1)

    try:
        config = ExperimentConfig.from_file(sys.argv[1])
        if len(sys.argv) > 2:
            config = config.with_seeds(parse_int_list(sys.argv[2]))
    except ConfigError as e:
        print(f"❌ {e}")
        sys.exit(2)

    print("🚀 HVAC MAAC Experiment")
    print("=" * 60)
    print(f"Config: {sys.argv[1]}")
    print(f"Zones: {config.building.n_zones}, seeds: {config.seeds}, episodes: {config.train.episodes}")
    print("=" * 60)

    try:
        pipeline = ExperimentPipeline(config, show_progress=True)
        pipeline.cmd_train()
        report = pipeline.cmd_compare()

        print("\n" + "=" * 60)
        print("📊 EXPERIMENT COMPLETE!")
        print("=" * 60)
        print(f"📁 Results directory: {report.results_dir}")
        print(report.summary.to_string(index=False))

    except KeyboardInterrupt:
        print("\n⏹️  Experiment interrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Experiment failed: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
