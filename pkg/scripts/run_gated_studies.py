#!/usr/bin/env python3
"""
Run the acceptance studies on a config and report pass/fail per study.

Usage:
    python scripts/run_gated_studies.py configs/default.cfg
    python scripts/run_gated_studies.py configs/default.cfg convergence dominance
"""

import sys
from pathlib import Path

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.hvac_maac.experiments import (
    ExperimentConfig,
    convergence_study,
    dominance_study,
    robustness_study,
    tradeoff_study,
)

STUDIES = {
    "convergence": convergence_study,
    "dominance": dominance_study,
    "tradeoff": tradeoff_study,
    "robustness": robustness_study,
}


def main():
    if len(sys.argv) < 2:
        print("Usage: python scripts/run_gated_studies.py <config> [study ...]")
        print(f"Studies: {', '.join(STUDIES)}")
        sys.exit(1)

    config = ExperimentConfig.from_file(sys.argv[1])
    names = sys.argv[2:] or list(STUDIES)
    unknown = [name for name in names if name not in STUDIES]
    if unknown:
        print(f"❌ Unknown studies: {', '.join(unknown)}")
        sys.exit(1)

    print("🧪 Gated Studies")
    print("=" * 60)

    failed = []
    for name in names:
        print(f"\n▶️  {name}")
        print("-" * 40)
        result = STUDIES[name](config, show_progress=True)
        status = "✅ PASS" if result.passed else "❌ FAIL"
        print(f"{status}: {result.detail}")
        if not result.passed:
            failed.append(name)

    print("\n" + "=" * 60)
    if failed:
        print(f"❌ {len(failed)}/{len(names)} studies failed: {', '.join(failed)}")
        sys.exit(1)
    print(f"🎉 All {len(names)} studies passed")


if __name__ == "__main__":
    main()
