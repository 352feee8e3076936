"""Draw discrete Gaussian samples, write them as CSV and report the fit.

    python scripts/emit_samples.py --basis '[[1,0],[0,1]]' --s 10 --count 100000
"""
import argparse
import json

import numpy as np

from latgauss import Coset, empirical_moments, make_lattice, moment_report, sample
from latgauss.sampler import goodness_of_fit


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--basis", default="[[1]]")
    ap.add_argument("--shift", default=None, help="JSON list, default the zero vector")
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--count", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="samples.csv")
    a = ap.parse_args()
    L = make_lattice(json.loads(a.basis))
    c = Coset(L, json.loads(a.shift) if a.shift else [0] * L.n)
    b = sample(c, a.s, a.count, a.seed)
    with open(a.out, "w") as fh:
        fh.write(b.to_csv())
    stat, dof, pvalue = goodness_of_fit(b)
    z = np.abs(empirical_moments(b).covariance - moment_report(c, a.s).covariance) / empirical_moments(b).err_covariance
    print(f"{a.count} samples -> {a.out}; chi2 {stat:.1f} on {dof} dof (p = {pvalue:.3f}); max covariance z-score {z.max():.2f}")


if __name__ == "__main__":
    main()
