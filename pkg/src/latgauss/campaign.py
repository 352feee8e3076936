"""Randomized verification campaigns over seeded lattice ensembles."""
from __future__ import annotations

import traceback
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .lattice import Lattice, SublatticeRep, det, inverse, make_lattice, matmul, matvec, sublattice
from .mass import GaussianParam
from .verify import (
    Status,
    Verdict,
    check_corollaries,
    check_covariance_domination,
    check_fourth_moment,
    check_hessian_domination,
    check_main_inequality,
    check_monotone_s,
    check_monotone_sigma,
    check_positive_correlation,
    check_sublattice_monotone,
)

KINDS = ("integer-basis", "diagonal", "rotated-integer")


@dataclass(frozen=True)
class InstanceEnsemble:
    """Seeded distribution of random instances.

    ``kind`` picks the basis family; ``dims`` the dimensions drawn uniformly;
    ``entry_bound`` bounds integer basis entries; shifts are kept at least
    ``min_shift`` (sup norm, coefficient space) away from the lattice.
    """

    kind: str = "integer-basis"
    dims: tuple = (1, 2, 3)
    entry_bound: int = 5
    seed: int = 0
    s_range: tuple = (0.5, 4.0)
    min_shift: float = 0.05
    max_index: int = 16

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.entry_bound < 1 or not self.dims or min(self.dims) < 1:
            raise ValueError("need entry_bound >= 1 and positive dimensions")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "s_range", tuple(float(v) for v in self.s_range))

    def to_json(self):
        d = asdict(self)
        d["dims"] = list(self.dims)
        d["s_range"] = list(self.s_range)
        return d

    def instance(self, trial: int) -> "Instance":
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, trial]))
        return _draw(self, rng)


@dataclass(frozen=True)
class Instance:
    L: Lattice
    x: tuple
    y: tuple
    u: np.ndarray
    v: np.ndarray
    param: GaussianParam
    s_grid: tuple
    sigma_small: np.ndarray
    sigma_big: np.ndarray
    M: SublatticeRep
    N: SublatticeRep


def _integer_basis(rng, n, b):
    while True:
        rows = rng.integers(-b, b + 1, size=(n, n))
        if round(abs(np.linalg.det(rows))) >= 1:
            return [[int(v) for v in r] for r in rows]


def _cayley(rng, n):
    """Rational rotation ``(I - A)(I + A)^{-1}`` from a small skew matrix ``A``."""
    A = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            a = Fraction(int(rng.integers(-2, 3)))
            A[i][j], A[j][i] = a, -a
    I = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    minus = [[I[i][j] - A[i][j] for j in range(n)] for i in range(n)]
    plus = [[I[i][j] + A[i][j] for j in range(n)] for i in range(n)]
    return matmul(minus, inverse(plus))


def _basis(e: InstanceEnsemble, rng, n):
    if e.kind == "diagonal":
        d = rng.integers(1, e.entry_bound + 1, size=n)
        return [[int(d[i]) if i == j else 0 for j in range(n)] for i in range(n)]
    rows = _integer_basis(rng, n, e.entry_bound)
    if e.kind == "rotated-integer":
        Q = _cayley(rng, n)
        rows = [matvec(Q, r) for r in rows]
    return rows


def _shift(L: Lattice, rng, min_shift):
    while True:
        t = rng.random(L.n)
        if np.max(np.abs(t - np.round(t))) >= min_shift:
            return matvec(L.B, [Fraction(float(v)) for v in t])


def _sub(L, rng, n, max_index):
    while True:
        X = rng.integers(-2, 3, size=(n, n))
        d = abs(det([[Fraction(int(v)) for v in r] for r in X]))
        if 1 <= d <= max_index:
            return sublattice(L, X.tolist())


def _pd(rng, n, scale):
    G = rng.normal(size=(n, n))
    return scale * (G @ G.T) / n


def _draw(e: InstanceEnsemble, rng) -> Instance:
    n = int(rng.choice(e.dims))
    L = make_lattice(_basis(e, rng, n))
    lo, hi = e.s_range
    s = float(rng.uniform(lo, hi))
    x = _shift(L, rng, e.min_shift)
    y = _shift(L, rng, e.min_shift)
    u = rng.normal(size=n)
    v = rng.normal(size=n)
    grid = tuple(sorted(float(g) for g in rng.uniform(lo, hi, size=3)))
    small = s * s * (0.5 * np.eye(n) + _pd(rng, n, 0.25))
    big = small + s * s * (_pd(rng, n, 0.5) + 0.05 * np.eye(n))
    M = _sub(L, rng, n, e.max_index)
    N = _sub(L, rng, n, e.max_index)
    return Instance(L, x, y, u, v, GaussianParam(s=s), grid, small, big, M, N)


CHECKS = {
    "main": lambda I, eps: [check_main_inequality(I.L, I.x, I.y, I.param, eps)],
    "corollaries": lambda I, eps: check_corollaries(I.L, I.x, I.y, eps, I.param),
    "hessian": lambda I, eps: [check_hessian_domination(I.L, I.x, eps, I.param)],
    "covariance": lambda I, eps: [check_covariance_domination(I.L, I.x, eps, I.param)],
    "fourth_moment": lambda I, eps: [check_fourth_moment(I.L, I.u, I.v, eps, I.param)],
    "monotone_s": lambda I, eps: [check_monotone_s(I.L, I.x, I.s_grid, eps)],
    "monotone_sigma": lambda I, eps: [check_monotone_sigma(I.L, I.x, I.sigma_small, I.sigma_big, eps)],
    "sublattice": lambda I, eps: [check_sublattice_monotone(I.L, I.M, I.x, eps, I.param)],
    "correlation": lambda I, eps: [check_positive_correlation(I.L, I.M, I.N, eps, I.param)],
}


def run_trial(e: InstanceEnsemble, trial: int, checks, eps: float):
    """Verdicts (or error records) for one trial, in check order."""
    inst = e.instance(trial)
    out = []
    for name in checks:
        try:
            out.extend(CHECKS[name](inst, eps))
        except Exception as exc:  # recorded in the summary, never dropped
            out.append({"check": name, "error": f"{type(exc).__name__}: {exc}", "trace": traceback.format_exc(limit=3)})
    return out


@dataclass
class CampaignSummary:
    ensemble: dict
    trials: int
    eps: float
    counts: dict = field(default_factory=dict)  # verdict name -> {status: count}
    worst_margin: dict = field(default_factory=dict)
    forms: dict = field(default_factory=dict)
    non_holds: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def add(self, trial: int, item):
        if isinstance(item, dict):
            self.errors.append({"trial": trial, **{k: item[k] for k in ("check", "error")}})
            return
        v: Verdict = item
        c = self.counts.setdefault(v.name, {s.value: 0 for s in Status})
        c[v.status.value] += 1
        self.forms.setdefault(v.name, Counter())[v.form] += 1
        if v.name not in self.worst_margin or v.margin < self.worst_margin[v.name]:
            self.worst_margin[v.name] = v.margin
        if v.status is not Status.HOLDS:
            self.non_holds.append({"trial": trial, **v.to_json()})

    def total(self, status: Status, names=None) -> int:
        return sum(c[status.value] for k, c in self.counts.items() if names is None or k in names)

    def inconclusive_rate(self, name: str) -> float:
        c = self.counts[name]
        return c[Status.INCONCLUSIVE.value] / max(1, sum(c.values()))

    def ok(self, threshold: float = 0.01, gated=None) -> bool:
        """No violations, no errors, and every gated check (all by default)
        inconclusive on fewer than ``threshold`` of its trials."""
        if self.errors or self.total(Status.VIOLATED):
            return False
        names = self.counts if gated is None else [g for g in gated if g in self.counts]
        return all(self.inconclusive_rate(k) < threshold for k in names)

    def to_json(self):
        return {
            "ensemble": self.ensemble,
            "trials": self.trials,
            "eps": self.eps,
            "counts": self.counts,
            "worst_margin": self.worst_margin,
            "forms": {k: dict(sorted(v.items())) for k, v in self.forms.items()},
            "non_holds": self.non_holds,
            "errors": self.errors,
        }


def _chunk(args):
    e, trials, checks, eps = args
    return [(t, run_trial(e, t, checks, eps)) for t in trials]


def run_campaign(e: InstanceEnsemble, trials: int, checks=None, eps: float = 1e-10, workers: int = 1) -> CampaignSummary:
    """Run ``trials`` seeded trials; the summary depends only on the arguments
    (not on ``workers``)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    checks = list(CHECKS) if checks is None else list(checks)
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; choose from {list(CHECKS)}")
    summary = CampaignSummary(e.to_json(), trials, eps)
    if workers <= 1:
        results = _chunk((e, range(trials), checks, eps))
    else:
        parts = [list(range(trials))[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            results = [r for chunk in ex.map(_chunk, [(e, p, checks, eps) for p in parts]) for r in chunk]
        results.sort(key=lambda r: r[0])
    for t, items in results:
        for item in items:
            summary.add(t, item)
    return summary
