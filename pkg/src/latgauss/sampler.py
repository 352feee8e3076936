"""Exact sampling from the discrete Gaussian over a truncated coset support.

The support is the full point list of ``L + x`` inside a ball whose omitted
mass is at most ``tv_eps`` of the total; indices are drawn with Vose's alias
method driven by numpy's PCG64 generator, so a seed fixes the batch on every
platform.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import chisquare

from .enumeration import DEFAULT_CAP
from .lattice import Coset
from .mass import GaussianParam, _terms, as_param, log_tail_bound, min_norm2, primal_form, radius_for_log
from .moments import MomentReport


def alias_table(prob):
    """Vose's alias table; deterministic for a given probability vector."""
    prob = np.asarray(prob, dtype=float)
    m = len(prob)
    scaled = prob * m / prob.sum()
    accept = np.zeros(m)
    alias = np.arange(m)
    small = [i for i in range(m) if scaled[i] < 1.0]
    large = [i for i in range(m) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        accept[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    for i in large + small:
        accept[i] = 1.0
    return accept, alias


@dataclass(frozen=True)
class Support:
    coset: Coset
    param: GaussianParam
    coeffs: np.ndarray  # z with point = B z + shift
    points: np.ndarray
    prob: np.ndarray
    tv_bound: float

    @cached_property
    def table(self):
        return alias_table(self.prob)


def truncated_support(c: Coset, p=None, tv_eps: float = 1e-12, cap: int = DEFAULT_CAP) -> Support:
    """Coset points carrying all but a ``tv_eps`` fraction of the mass."""
    if not 0 < tv_eps < 1:
        raise ValueError("tv_eps must lie in (0, 1)")
    p = as_param(p)
    L = c.lattice
    form = primal_form(L, p)
    t = np.array([float(v) for v in c.reduced])
    q0 = min_norm2(form, t)
    log_eps = math.log(tv_eps / 2) - math.pi * q0
    R = max(radius_for_log(form, log_eps), math.sqrt(q0) * (1 + 1e-9))
    for _ in range(8):
        Z, q, rho, _ = _terms(form, t, R, cap, q0)
        total = math.fsum(rho)
        tail = math.exp(min(log_tail_bound(form, R) + math.pi * q0, 709.0))
        if tail <= tv_eps * total:
            break
        R = max(R * 1.25, radius_for_log(form, log_eps + math.log(total)))
    else:
        raise RuntimeError("could not reach the requested total-variation bound")
    shift_int = np.array([int(a - b) for a, b in zip(L.coords(c.shift), c.reduced)], dtype=np.int64)
    pts = (Z + t) @ L.B_float.T
    return Support(c, p, Z - shift_int, pts, rho / total, tail / total)


@dataclass(frozen=True)
class SampleBatch:
    coset: Coset
    param: GaussianParam
    seed: int
    count: int
    tv_bound: float
    samples: np.ndarray  # (count, n) floats
    coeffs: np.ndarray  # (count, n) integers: sample = B z + shift
    support: Support

    def header(self):
        return {
            "seed": self.seed,
            "count": self.count,
            "tv_bound": self.tv_bound,
            "param": self.param.to_json(),
            "basis": [[str(x) for x in v] for v in self.coset.lattice.vectors],
            "shift": [str(x) for x in self.coset.shift],
        }

    def to_csv(self) -> str:
        lines = [json.dumps(self.header())]
        lines += [",".join(format(float(v), ".17g") for v in row) for row in self.samples]
        return "\n".join(lines) + "\n"


def read_csv(text: str):
    """Header dict and sample array from :meth:`SampleBatch.to_csv` output."""
    first, _, rest = text.partition("\n")
    header = json.loads(first)
    rows = [list(map(float, line.split(","))) for line in rest.splitlines() if line.strip()]
    return header, np.array(rows)


def sample(c: Coset, p=None, count: int = 1, seed: int = 0, tv_eps: float = 1e-12, cap: int = DEFAULT_CAP) -> SampleBatch:
    """``count`` draws from ``D_{L+x,p}`` restricted to a truncated support."""
    if count < 1:
        raise ValueError("count must be at least 1")
    sup = truncated_support(c, p, tv_eps, cap)
    accept, alias = sup.table
    rng = np.random.Generator(np.random.PCG64(seed))
    m = len(sup.prob)
    idx = rng.integers(0, m, size=count)
    u = rng.random(count)
    idx = np.where(u < accept[idx], idx, alias[idx])
    return SampleBatch(c, sup.param, int(seed), int(count), sup.tv_bound, sup.points[idx], sup.coeffs[idx], sup)


def empirical_moments(b: SampleBatch | np.ndarray) -> MomentReport:
    """Sample mean, second moment and covariance; ``err_*`` are standard errors."""
    W = b.samples if isinstance(b, SampleBatch) else np.asarray(b, dtype=float)
    N, n = W.shape
    if N < 2:
        raise ValueError("need at least two samples")
    mean = W.mean(axis=0)
    se_mean = W.std(axis=0, ddof=1) / math.sqrt(N)
    prods = W[:, :, None] * W[:, None, :]
    second = prods.mean(axis=0)
    se_second = prods.std(axis=0, ddof=1) / math.sqrt(N)
    C = W - mean
    cprods = C[:, :, None] * C[:, None, :]
    cov = cprods.mean(axis=0)
    se_cov = cprods.std(axis=0, ddof=1) / math.sqrt(N)
    return MomentReport(mean, second, cov, se_mean, se_second, se_cov)


def goodness_of_fit(b: SampleBatch, min_expected: float = 5.0):
    """Pearson chi-square of the batch against the support probabilities.

    Support points are taken in order of decreasing probability and pooled
    until every cell expects at least ``min_expected`` draws; the partition
    depends only on the support, never on the data. Returns
    ``(statistic, dof, pvalue)``.
    """
    sup = b.support
    order = np.lexsort((*sup.coeffs.T[::-1], -sup.prob))
    cell = np.empty(len(order), dtype=np.int64)
    expected, acc, k = [], 0.0, 0
    for i in order:
        cell[i] = k
        acc += sup.prob[i] * b.count
        if acc >= min_expected:
            expected.append(acc)
            acc, k = 0.0, k + 1
    if acc > 0:  # fold the last partial cell into its neighbour
        if expected:
            cell[cell == k] = k - 1
            expected[-1] += acc
        else:
            expected.append(acc)
    lookup = {tuple(z): cell[i] for i, z in enumerate(sup.coeffs.tolist())}
    observed = np.bincount([lookup[tuple(z)] for z in b.coeffs.tolist()], minlength=len(expected))
    expected = np.array(expected)
    expected *= observed.sum() / expected.sum()
    if len(expected) < 2:
        return 0.0, 0, 1.0
    stat, pvalue = chisquare(observed, expected)
    return float(stat), len(expected) - 1, float(pvalue)
