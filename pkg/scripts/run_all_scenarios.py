#!/usr/bin/env python3
"""Run every registered scenario and collect the emitted tables.

Usage: python scripts/run_all_scenarios.py [outdir]
"""

import sys
import time

from expldp.scenarios import scenario_names, scenario_run


def main():
    outroot = sys.argv[1] if len(sys.argv) > 1 else "scenario_outputs"
    for name in scenario_names():
        start = time.time()
        written = scenario_run(name, f"{outroot}/{name}")
        print(f"{name}: {len(written)} files in {time.time() - start:.1f}s")
        for path in written:
            print(f"  {path}")


if __name__ == "__main__":
    main()
