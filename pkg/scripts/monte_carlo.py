"""Monte Carlo bridge: simulate, re-estimate, and compare with the analytic values.

    python3 scripts/monte_carlo.py --seeds 20 --steps 1000000 --workers 1

Prints one row per (scenario, quantity): truth, seed mean, per-run standard
error (std across seeds) and two z-scores, against the per-run error and
against the error of the mean.
"""
import argparse
import math

import numpy as np

from gausspid.montecarlo import Scenario, compare, model_quantities, run

DEFAULT = [
    Scenario("example1", (0.5,)),
    Scenario("example2", (0.5, 0.5)),
    Scenario("example3", (1.0, 1.0, 0.0)),
    Scenario("example3", (1.0, 2.0, 0.5)),
]


def parse_scenario(text: str) -> Scenario:
    kind, _, params = text.partition(":")
    return Scenario(kind, tuple(float(p) for p in params.split(",") if p))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", action="append", type=parse_scenario,
                    help="kind:params, e.g. example3:1,2,0.5 (repeatable)")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--steps", type=int, default=10**6)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    scenarios = args.scenario or DEFAULT
    samples = run(scenarios, list(range(args.seeds)), args.steps, args.workers)
    print(f"{'scenario':28s} {'quantity':16s} {'truth':>12s} {'mean':>12s} {'se':>10s} {'z':>7s} {'z_mean':>7s}")
    for s in scenarios:
        truth = model_quantities(s.kind, s.model())
        for c in compare(samples[s.name], truth, s.name):
            zm = c.z * math.sqrt(args.seeds) if math.isfinite(c.z) else np.nan
            print(f"{s.name:28s} {c.quantity:16s} {c.truth:12.6g} {c.mean:12.6g} {c.se:10.3g} {c.z:7.2f} {zm:7.2f}")


if __name__ == "__main__":
    main()
