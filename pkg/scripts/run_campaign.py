"""Seeded verification campaign; writes the JSON summary and prints a table.

    python scripts/run_campaign.py --trials 10000 --seed 7 --out campaign.json
"""
import argparse
import time

from latgauss.campaign import CHECKS, KINDS, InstanceEnsemble, Status, run_campaign
from latgauss.io import dumps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kind", choices=KINDS, default="integer-basis")
    ap.add_argument("--checks", default=",".join(CHECKS))
    ap.add_argument("--eps", type=float, default=1e-10)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    a = ap.parse_args()

    t0 = time.perf_counter()
    s = run_campaign(InstanceEnsemble(kind=a.kind, seed=a.seed), a.trials, a.checks.split(","), a.eps, a.workers)
    print(f"{'claim':<24}{'HOLDS':>8}{'INCONCL':>9}{'VIOL':>6}  forms")
    for name, c in s.counts.items():
        forms = ", ".join(f"{k}:{v}" for k, v in sorted(s.forms[name].items()))
        print(f"{name:<24}{c[Status.HOLDS.value]:>8}{c[Status.INCONCLUSIVE.value]:>9}{c[Status.VIOLATED.value]:>6}  {forms}")
    print(f"errors: {len(s.errors)}   ok: {s.ok()}   {time.perf_counter() - t0:.0f}s")
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(dumps(s) + "\n")


if __name__ == "__main__":
    main()
