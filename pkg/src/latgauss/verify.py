"""Interval-safe checks of the lattice Gaussian inequalities.

Every check returns a :class:`Verdict` comparing two intervals for a claim of
the form ``lhs <= rhs``. Scalar claims are decided strictly (``HOLDS`` needs
``lhs.hi <= rhs.lo``). When the direct evaluation overlaps, claims between
products of periodic Gaussians are re-evaluated in log-deficit form
(``log f = log1p(-(1 - f))`` with ``1 - f`` summed over the dual lattice),
which keeps full relative accuracy when every factor is close to 1. Identical
factors on both sides are cancelled exactly before any arithmetic.
Positive-semidefinite claims use the tolerance rule
``lambda_min >= -n * err``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import NotComparable
from .lattice import Coset, Lattice, SublatticeRep, as_sublattice, frac_vector, intersect, orthogonal_splits
from .mass import (
    CertifiedValue,
    GaussianParam,
    as_param,
    cosine_deficit,
    cosine_moments,
    log_mass,
    mass,
    mass_split,
    partition_log_sums,
    mass_excess,
    periodic_deficit,
    periodic_gaussian,
)
from .moments import derivative_report, dual_fourth_moment_form, fourth_moment_form, moment_report


class Status(str, Enum):
    HOLDS = "HOLDS"
    INCONCLUSIVE = "INCONCLUSIVE"
    VIOLATED = "VIOLATED"


_RANK = {Status.HOLDS: 0, Status.INCONCLUSIVE: 1, Status.VIOLATED: 2}


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @classmethod
    def of(cls, cv: CertifiedValue) -> "Interval":
        if cv.err == 0:
            return cls(cv.value, cv.value)
        return cls(math.nextafter(cv.value - cv.err, -math.inf), math.nextafter(cv.value + cv.err, math.inf))

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    def __add__(self, o: "Interval") -> "Interval":
        return Interval(math.nextafter(self.lo + o.lo, -math.inf), math.nextafter(self.hi + o.hi, math.inf))

    def __sub__(self, o: "Interval") -> "Interval":
        return Interval(math.nextafter(self.lo - o.hi, -math.inf), math.nextafter(self.hi - o.lo, math.inf))

    def __mul__(self, o: "Interval") -> "Interval":
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(math.nextafter(min(ps), -math.inf), math.nextafter(max(ps), math.inf))

    def scale(self, c: float) -> "Interval":
        a, b = sorted((self.lo * c, self.hi * c))
        return Interval(math.nextafter(a, -math.inf), math.nextafter(b, math.inf))

    def square(self) -> "Interval":
        if self.lo >= 0:
            return self * self
        if self.hi <= 0:
            return Interval(-self.hi, -self.lo).square()
        m = max(-self.lo, self.hi)
        return Interval(0.0, math.nextafter(m * m, math.inf))

    def clamp(self, lo=-math.inf, hi=math.inf) -> "Interval":
        return Interval(max(self.lo, lo), min(self.hi, hi))

    def to_json(self):
        return [self.lo, self.hi]


def _log1p_neg(g: CertifiedValue) -> Interval:
    """``log(1 - g)`` for a deficit ``g`` in ``[0, 1)``."""
    if g.err == 0 and g.value == 0:
        return Interval.point(0.0)
    lo_g = max(g.value - g.err, 0.0)
    hi_g = g.value + g.err
    if hi_g >= 1:
        lo = -math.inf
    else:
        lo = math.log1p(-hi_g)
        lo -= 4 * 2**-53 * abs(lo) + 5e-324
    hi = math.log1p(-lo_g)
    hi += 4 * 2**-53 * abs(hi)
    return Interval(lo, min(hi, 0.0))


def _log1p_pos(e: CertifiedValue) -> Interval:
    lo = math.log1p(max(e.value - e.err, 0.0))
    hi = math.log1p(e.value + e.err)
    return Interval(lo - 4 * 2**-53 * lo, hi + 4 * 2**-53 * hi + 5e-324)


def _neg_expm1(s: Interval) -> Interval:
    """``1 - exp(s)``; decreasing in ``s``."""
    lo = -math.expm1(s.hi)
    hi = -math.expm1(s.lo)
    return Interval(lo - 4 * 2**-53 * abs(lo) - 5e-324, hi + 4 * 2**-53 * abs(hi))


def _log_interval(cv: CertifiedValue) -> Interval:
    return Interval(math.nextafter(cv.value - cv.err, -math.inf), math.nextafter(cv.value + cv.err, math.inf))


def _meet(a: Interval, b: Interval) -> Interval:
    """Intersection of two enclosures of the same number."""
    m = Interval(max(a.lo, b.lo), min(a.hi, b.hi))
    return m if m.lo <= m.hi else a


def _logaddexp(a: Interval, b: Interval) -> Interval:
    lo = float(np.logaddexp(a.lo, b.lo))
    hi = float(np.logaddexp(a.hi, b.hi))
    return Interval(lo - 8 * 2**-53 * (abs(lo) + 1), hi + 8 * 2**-53 * (abs(hi) + 1))


def log_f(L: Lattice, p, z, eps: float) -> Interval:
    """Enclosure of ``log f_{L,p}(z)``.

    Far from the lattice it is a difference of log masses; near it (``f``
    above about 1/2) the dual-sum deficit ``1 - f`` gives a tighter bound,
    and the two enclosures are intersected.
    """
    if Coset(L, z).is_lattice:
        return Interval.point(0.0)
    rel = min(max(eps, 1e-15), 1e-3)
    a = _log_interval(log_mass(Coset(L, z), p, rel)) - _log_interval(log_mass(Coset(L, (0,) * L.n), p, rel))
    a = a.clamp(hi=0.0)
    if a.hi > -0.7:
        a = _meet(a, _log1p_neg(periodic_deficit(L, p, z, eps)))
    return a


def log_lattice_mass(L: Lattice, p, eps: float) -> Interval:
    """Enclosure of ``log rho_p(L)``."""
    rel = min(max(eps, 1e-15), 1e-3)
    a = _log_interval(log_mass(Coset(L, (0,) * L.n), p, rel))
    return _meet(a, _log1p_pos(mass_excess(L, p, eps)))


def _judge(lhs: Interval, rhs: Interval) -> Status:
    if lhs.hi <= rhs.lo:
        return Status.HOLDS
    if lhs.lo > rhs.hi:
        return Status.VIOLATED
    return Status.INCONCLUSIVE


@dataclass(frozen=True)
class Verdict:
    name: str
    status: Status
    lhs: Interval
    rhs: Interval
    margin: float
    instance: dict
    form: str = "direct"
    eps: float = 0.0
    details: tuple = field(default=(), compare=False)

    def to_json(self):
        d = {
            "name": self.name,
            "status": self.status.value,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "margin": self.margin,
            "form": self.form,
            "eps": self.eps,
            "instance": self.instance,
        }
        if self.details:
            d["details"] = [v.to_json() for v in self.details]
        return d


def _verdict(name, lhs, rhs, instance, form, eps, details=()):
    return Verdict(name, _judge(lhs, rhs), lhs, rhs, rhs.lo - lhs.hi, instance, form, eps, tuple(details))


def _tolerance_verdict(name, lhs_val, rhs_val, tol, instance, eps, form="tolerance"):
    """``lhs <= rhs`` accepted when ``lhs - tol <= rhs`` (never INCONCLUSIVE)."""
    lhs = Interval.point(lhs_val - tol)
    rhs = Interval.point(rhs_val)
    status = Status.HOLDS if lhs.hi <= rhs.lo else Status.VIOLATED
    return Verdict(name, status, lhs, rhs, rhs.lo - lhs.hi, instance, form, eps)


def _psd_verdict(name, D, E, instance, eps):
    D = (np.asarray(D) + np.asarray(D).T) / 2
    n = D.shape[0]
    lam = float(np.linalg.eigvalsh(D).min())
    tol = n * float(np.max(E)) + 8 * n * 2**-53 * float(np.max(np.abs(D)))
    return _tolerance_verdict(name, 0.0, lam, tol, instance, eps, form="psd")


def _combine(name, verdicts, instance, eps) -> Verdict:
    worst = max(verdicts, key=lambda v: (_RANK[v.status], -v.margin))
    margin = min(v.margin for v in verdicts)
    return Verdict(name, worst.status, worst.lhs, worst.rhs, margin, instance, worst.form, eps, tuple(verdicts))


def with_tightening(compute, eps: float, rounds: int = 2) -> Verdict:
    """Re-run ``compute(eps)`` at ``eps/100`` while the verdict is inconclusive."""
    v = compute(eps)
    for _ in range(rounds):
        if v.status is not Status.INCONCLUSIVE:
            break
        eps /= 100
        v = compute(eps)
    return v


# ---------------------------------------------------------------------------
# instance descriptors and exact coset keys


def _num(v):
    v = Fraction(v)
    return str(v) if v.denominator != 1 else int(v)


def describe(L: Lattice | None = None, **kw) -> dict:
    d = {}
    if L is not None:
        d["basis"] = [[_num(x) for x in b] for b in L.vectors]
    for k, v in kw.items():
        if isinstance(v, GaussianParam):
            d[k] = v.to_json()
        elif isinstance(v, Lattice):
            d[k] = [[_num(x) for x in b] for b in v.vectors]
        elif isinstance(v, SublatticeRep):
            d[k] = [list(r) for r in v.X]
        elif isinstance(v, (list, tuple, np.ndarray)):
            d[k] = [_num(x) if isinstance(x, (Fraction, int)) else (float(x) if np.ndim(x) == 0 else np.asarray(x).tolist()) for x in v]
        else:
            d[k] = v
    return d


def coset_key(L: Lattice, x) -> tuple:
    """Exact identifier of the point set ``L + x`` up to the symmetry ``x -> -x``."""
    C = L.canonical
    t = C.coords(x)
    a = tuple(c - math.floor(c) for c in t)
    b = tuple((-c) - math.floor(-c) for c in t)
    return (C.vectors, min(a, b))


def _add(x, y, sign=1):
    return tuple(a + sign * b for a, b in zip(frac_vector(x), frac_vector(y)))


def _split_total(terms, eps):
    """Exact quadratic part and enclosure of the remainder of
    ``sum sign * log rho_p(L + z)`` over ``(L, z, p, sign)``."""
    Q = Fraction(0)
    ell = Interval.point(0.0)
    rel = min(max(eps, 1e-15), 1e-3)
    for L, z, p, sign in terms:
        ms = mass_split(Coset(L, z), p, rel)
        Q += sign * ms.q0
        r = ms.rest
        lo = math.log1p(max(r.value - r.err, 0.0))
        hi = math.log1p(r.value + r.err)
        part = Interval(lo - 4 * 2**-53 * lo, hi + 4 * 2**-53 * hi + 5e-324)
        ell = ell + (part if sign > 0 else Interval(-part.hi, -part.lo))
    return Q, ell


def _split_claim(name, left, right, eps, instance):
    """Compare ``-pi Q + ell`` on the two sides with the quadratic parts
    subtracted exactly; decides claims whose leading Gaussians cancel."""
    Ql, ll = _split_total(left, eps)
    Qr, lr = _split_total(right, eps)
    dQ = Ql - Qr
    if dQ == 0:
        rhs = Interval.point(0.0)
    else:
        g = math.pi * float(dQ)
        rhs = Interval(g - 4 * 2**-53 * abs(g), g + 4 * 2**-53 * abs(g))
    return _verdict(name, ll - lr, rhs, instance, "split", eps)


def _product_claim(name, lhs, rhs, value, log_value, eps, instance, split=None):
    """``prod(lhs) <= prod(rhs)`` for positive factors given as ``(key, arg)``.

    Equal keys cancel exactly. ``value(arg)`` gives a CertifiedValue;
    ``log_value(arg)`` (optional) an Interval for ``log(factor)``, used when
    the direct products overlap. ``split(arg)`` (optional, scalar widths)
    lists the factor as signed log masses ``(L, z, p, sign)`` for the last
    resort :func:`_split_claim`.
    """
    cl = Counter(k for k, _ in lhs)
    cr = Counter(k for k, _ in rhs)
    common = cl & cr
    left, right = [], []
    for side, out in ((lhs, left), (rhs, right)):
        used = Counter()
        for k, a in side:
            if used[k] < common[k]:
                used[k] += 1
            else:
                out.append(a)
    if not left and not right:
        one = Interval.point(1.0)
        return Verdict(name, Status.HOLDS, one, one, 0.0, instance, "cancelled", eps)

    def prod(args):
        acc = Interval.point(1.0)
        for a in args:
            cv = value(a)
            if not (cv.err == 0 and cv.value == 1):
                acc = acc * Interval.of(cv)
        return acc

    v = _verdict(name, prod(left), prod(right), instance, "direct", eps)
    if v.status is Status.INCONCLUSIVE and log_value is not None:
        def total(args):
            acc = Interval.point(0.0)
            for a in args:
                ell = log_value(a)
                if ell.lo != 0 or ell.hi != 0:
                    acc = acc + ell
            return acc

        lv = _verdict(name, total(left), total(right), instance, "log", eps)
        if lv.status is not Status.INCONCLUSIVE:
            return lv
        if split is not None:
            sv = _split_claim(name, [t for a in left for t in split(a)], [t for a in right for t in split(a)], eps, instance)
            if sv.status is not Status.INCONCLUSIVE:
                return sv
    return v


# ---------------------------------------------------------------------------
# the main inequality and its corollaries


def check_main_inequality(L: Lattice, x, y, p=None, eps: float = 1e-10) -> Verdict:
    """``rho(L+x)^2 rho(L+y)^2 <= rho(L)^2 rho(L+x+y) rho(L+x-y)``."""
    p = as_param(p)
    x, y = frac_vector(x), frac_vector(y)
    zero = (0,) * L.n
    inst = describe(L, x=x, y=y, param=p)
    shifts_l = [x, x, y, y]
    shifts_r = [zero, zero, _add(x, y), _add(x, y, -1)]

    def compute(e):
        lhs = [(coset_key(L, z), z) for z in shifts_l]
        rhs = [(coset_key(L, z), z) for z in shifts_r]
        # both sides have four factors, so after cancellation rho(L) drops out of the log form
        return _product_claim(
            "main",
            lhs,
            rhs,
            lambda z: mass(Coset(L, z), p, e),
            lambda z: log_f(L, p, z, e),
            e,
            inst,
            split=(lambda z: [(L, z, p, 1)]) if p.is_scalar else None,
        )

    return with_tightening(compute, eps)


def _f_claim(name, L, p, lhs_shifts, rhs_shifts, eps, inst):
    def compute(e):
        return _product_claim(
            name,
            [(coset_key(L, z), z) for z in lhs_shifts],
            [(coset_key(L, z), z) for z in rhs_shifts],
            lambda z: periodic_gaussian(L, p, z, e),
            lambda z: log_f(L, p, z, e),
            e,
            inst,
            split=(lambda z: _f_split(L, z, p)) if p.is_scalar else None,
        )

    return with_tightening(compute, eps)


def _is_zero_key(L, z):
    return all(c == 0 for c in coset_key(L, z)[1])


def check_corollaries(L: Lattice, x, y, eps: float = 1e-10, p=None) -> list[Verdict]:
    """Verdicts for the five consequences of the main inequality (2a)-(2e)."""
    p = as_param(p)
    x, y = frac_vector(x), frac_vector(y)
    xp, xm = _add(x, y), _add(x, y, -1)
    inst = describe(L, x=x, y=y, param=p)
    out = [
        _f_claim("2a_periodic", L, p, [x, x, y, y], [xp, xm], eps, inst),
        _f_claim("2b_doubling", L, p, [x] * 4, [_add(x, x)], eps, inst),
        _additive(L, p, x, y, eps, inst),
        _strong_cos(L, p, x, y, eps, inst),
        _cos_correlation(L, p, x, y, eps, inst),
    ]
    return out


def _additive(L, p, x, y, eps, inst):
    name = "2c_additive"
    if _is_zero_key(L, x) or _is_zero_key(L, y):
        one = Interval.point(1.0)
        return Verdict(name, Status.HOLDS, one, one, 0.0, inst, "cancelled", eps)
    xp, xm = _add(x, y), _add(x, y, -1)

    def compute(e):
        fx, fy = (Interval.of(periodic_gaussian(L, p, z, e)) for z in (x, y))
        fp, fm = (Interval.of(periodic_gaussian(L, p, z, e)) for z in (xp, xm))
        v = _verdict(name, fx * fy, (fp + fm).scale(0.5), inst, "direct", e)
        if v.status is Status.INCONCLUSIVE and fx.lo > 0.5 and fy.lo > 0.5:
            # everything near 1: compare deficits
            g = {k: periodic_deficit(L, p, z, e) for k, z in (("x", x), ("y", y), ("p", xp), ("m", xm))}
            lhs = (Interval.of(g["p"]) + Interval.of(g["m"])).scale(0.5)
            rhs = _neg_expm1(_log1p_neg(g["x"]) + _log1p_neg(g["y"]))
            lv = _verdict(name, lhs, rhs, inst, "deficit", e)
            if lv.status is not Status.INCONCLUSIVE:
                return lv
        elif v.status is Status.INCONCLUSIVE:
            lx, ly, lp, lm = (log_f(L, p, z, e) for z in (x, y, xp, xm))
            rhs = _logaddexp(lp, lm) - Interval.point(math.log(2))
            lv = _verdict(name, lx + ly, rhs, inst, "log", e)
            if lv.status is not Status.INCONCLUSIVE:
                return lv
        return v

    return with_tightening(compute, eps)


def _in_dual(L, z) -> bool:
    # <b_i, z> integral for every basis vector
    return all(sum((a * b for a, b in zip(v, z)), Fraction(0)).denominator == 1 for v in L.vectors)


def _cos_deficits(L, p, x, y, e):
    xp, xm = _add(x, y), _add(x, y, -1)
    return {k: cosine_deficit(L, z, p, e) for k, z in (("x", x), ("y", y), ("p", xp), ("m", xm))}


def _strong_cos(L, p, x, y, eps, inst):
    name = "2d_strong_cos"
    if _in_dual(L, x) or _in_dual(L, y):
        one = Interval.point(1.0)
        return Verdict(name, Status.HOLDS, one, one, 0.0, inst, "cancelled", eps)

    def compute(e):
        cm = cosine_moments(L, x, y, e, p)
        cx, cy, cc, ss = (Interval.of(v) for v in cm)
        lhs = (cx * cy).square() + ss.square()
        v = _verdict(name, lhs, cc.square(), inst, "direct", e)
        if v.status is Status.INCONCLUSIVE:
            d = _cos_deficits(L, p, x, y, e)
            dp, dm = Interval.of(d["p"]), Interval.of(d["m"])
            dcc = (dp + dm).scale(0.5).clamp(0.0)
            Dcc = _neg_expm1(_log1p_neg(CertifiedValue((dcc.lo + dcc.hi) / 2, (dcc.hi - dcc.lo) / 2)).scale(2))
            ess = (dp - dm).scale(0.5)
            DL = _neg_expm1((_log1p_neg(d["x"]) + _log1p_neg(d["y"])).scale(2))
            lv = _verdict(name, Dcc + ess.square(), DL, inst, "deficit", e)
            if lv.status is not Status.INCONCLUSIVE:
                return lv
        return v

    return with_tightening(compute, eps)


def _cos_correlation(L, p, x, y, eps, inst):
    name = "2e_cos_correlation"
    if _in_dual(L, x) or _in_dual(L, y):
        one = Interval.point(1.0)
        return Verdict(name, Status.HOLDS, one, one, 0.0, inst, "cancelled", eps)

    def compute(e):
        cm = cosine_moments(L, x, y, e, p)
        cx, cy, cc, _ = (Interval.of(v) for v in cm)
        v = _verdict(name, cx * cy, cc, inst, "direct", e)
        if v.status is Status.INCONCLUSIVE:
            d = _cos_deficits(L, p, x, y, e)
            lhs = (Interval.of(d["p"]) + Interval.of(d["m"])).scale(0.5)
            rhs = _neg_expm1(_log1p_neg(d["x"]) + _log1p_neg(d["y"]))
            lv = _verdict(name, lhs, rhs, inst, "deficit", e)
            if lv.status is not Status.INCONCLUSIVE:
                return lv
        return v

    return with_tightening(compute, eps)


# ---------------------------------------------------------------------------
# moments


def check_hessian_domination(L: Lattice, x, eps: float = 1e-10, p=None) -> Verdict:
    """``H f(x) / f(x) - H f(0) - grad f grad f^T / f^2`` is PSD."""
    p = as_param(p)
    x = frac_vector(x)
    rx = derivative_report(L, p, x, eps)
    r0 = derivative_report(L, p, None, eps)
    g, eg = rx.grad_over_f, rx.err_grad_over_f
    D = rx.hess_over_f - r0.hess_over_f - np.outer(g, g)
    ag = np.abs(g)
    E = rx.err_hess_over_f + r0.err_hess_over_f + np.outer(ag, eg) + np.outer(eg, ag) + np.outer(eg, eg)
    if Coset(L, x).is_lattice:
        D, E = np.zeros_like(D), np.zeros_like(E)
    return _psd_verdict("hessian_domination", D, E, describe(L, x=x, param=p), eps)


def check_covariance_domination(L: Lattice, x, eps: float = 1e-10, p=None) -> Verdict:
    """``Cov(D_{L+x}) - E_{D_L}[w w^T]`` is PSD."""
    p = as_param(p)
    x = frac_vector(x)
    mx = moment_report(Coset(L, x), p, eps)
    m0 = moment_report(Coset(L, [0] * L.n), p, eps)
    D = mx.covariance - m0.second
    E = mx.err_covariance + m0.err_second
    if Coset(L, x).is_lattice:
        D, E = np.zeros_like(D), np.zeros_like(E)
    return _psd_verdict("covariance_domination", D, E, describe(L, x=x, param=p), eps)


def check_fourth_moment(L: Lattice, u, v, eps: float = 1e-10, p=None) -> Verdict:
    """``E[<y,u>^2]E[<y,v>^2] + 2E[<y,u><y,v>]^2 <= E[<y,u>^2<y,v>^2]``."""
    p = as_param(p)
    inst = describe(L, u=list(map(float, u)), v=list(map(float, v)), param=p)

    def compute(e):
        fm = fourth_moment_form(L, u, v, e, p)
        out = _verdict("fourth_moment", Interval.of(fm.rhs), Interval.of(fm.lhs), inst, "direct", e)
        if out.status is Status.INCONCLUSIVE:
            dm = dual_fourth_moment_form(L, u, v, e, p)
            dv = _verdict("fourth_moment", Interval.of(dm.rhs), Interval.of(dm.lhs), inst, "dual", e)
            if dv.status is not Status.INCONCLUSIVE:
                return dv
        return out

    return with_tightening(compute, eps)


# ---------------------------------------------------------------------------
# monotonicity and correlation


def _f_split(L, z, p):
    return [(L, z, p, 1), (L, (0,) * L.n, p, -1)]


def _single_f_claim(name, lhs_arg, rhs_arg, value, log_value, eps, inst, split=None):
    def compute(e):
        return _product_claim(
            name, [lhs_arg[:2]], [rhs_arg[:2]], lambda a: value(a, e), lambda a: log_value(a, e), e, inst, split
        )

    return with_tightening(compute, eps)


def check_monotone_s(L: Lattice, x, s_grid, eps: float = 1e-10) -> Verdict:
    """``f_{L,s}(x)`` is non-decreasing along ``s_grid``, and at each grid point
    ``(d/ds f)/f >= (s / 2pi) ||grad f||^2 / f^2``."""
    s_grid = [float(s) for s in s_grid]
    if len(s_grid) < 2 or any(b <= a for a, b in zip(s_grid, s_grid[1:])):
        raise ValueError("s_grid must be strictly increasing with at least two points")
    x = frac_vector(x)
    inst = describe(L, x=x, s_grid=s_grid)
    key = coset_key(L, x)
    n = L.n
    parts = []

    def value(a, e):
        return periodic_gaussian(L, a, x, e)

    def log_value(a, e):
        return log_f(L, a, x, e)

    for a, b in zip(s_grid, s_grid[1:]):
        pa, pb = GaussianParam(s=a), GaussianParam(s=b)
        parts.append(
            _single_f_claim(
                f"monotone_s[{a:g}<={b:g}]", ((key, a), pa), ((key, b), pb), value, log_value, eps, inst,
                split=lambda q: _f_split(L, x, q),
            )
        )
    if not Coset(L, x).is_lattice:
        for s in s_grid:
            p = GaussianParam(s=s)
            mx = moment_report(Coset(L, x), p, eps)
            m0 = moment_report(Coset(L, [0] * n), p, eps)
            dlog = 2 * math.pi / s**3 * (np.trace(mx.second) - np.trace(m0.second))
            grad_sq = (s / (2 * math.pi)) * (2 * math.pi / s**2) ** 2 * float(mx.mean @ mx.mean)
            tol = 2 * math.pi / s**3 * (
                float(np.trace(mx.err_second) + np.trace(m0.err_second))
                + float(2 * np.abs(mx.mean) @ mx.err_mean + mx.err_mean @ mx.err_mean)
            )
            parts.append(_tolerance_verdict(f"monotone_s_derivative[{s:g}]", grad_sq, dlog, tol, inst, eps))
    return _combine("monotone_s", parts, inst, eps)


def check_monotone_sigma(L: Lattice, x, sigma_small, sigma_big, eps: float = 1e-10) -> Verdict:
    """``f_{L,Sigma'}(x) <= f_{L,Sigma}(x)`` whenever ``Sigma' <= Sigma``."""
    ps, pb = as_param(np.asarray(sigma_small, dtype=float)), as_param(np.asarray(sigma_big, dtype=float))
    n = L.n
    gap = float(np.linalg.eigvalsh(pb.sigma_matrix(n) - ps.sigma_matrix(n)).min())
    if gap < -1e-12:
        raise NotComparable(f"Sigma' is not below Sigma (min eigenvalue of the gap {gap:.3g})")
    x = frac_vector(x)
    inst = describe(L, x=x, sigma_small=ps.sigma_matrix(n), sigma_big=pb.sigma_matrix(n))
    key = coset_key(L, x)

    def value(a, e):
        return periodic_gaussian(L, a, x, e)

    def log_value(a, e):
        return log_f(L, a, x, e)

    return _single_f_claim("monotone_sigma", ((key, ps), ps), ((key, pb), pb), value, log_value, eps, inst)


def _as_lattice(M) -> Lattice:
    return M.lattice if isinstance(M, SublatticeRep) else M


def check_sublattice_monotone(L: Lattice, M, x, eps: float = 1e-10, p=None) -> Verdict:
    """``f_M(x) <= f_L(x)`` for a sublattice ``M`` of ``L``."""
    p = as_param(p)
    ML = _as_lattice(M)
    x = frac_vector(x)
    inst = describe(L, M=ML, x=x, param=p)

    def value(lat, e):
        return periodic_gaussian(lat, p, x, e)

    def log_value(lat, e):
        return log_f(lat, p, x, e)

    v = _single_f_claim(
        "sublattice_monotone", (coset_key(ML, x), ML), (coset_key(L, x), L), value, log_value, eps, inst,
        split=(lambda lat: _f_split(lat, x, p)) if p.is_scalar else None,
    )
    if v.status is Status.INCONCLUSIVE:
        # rho(L + x) = rho(M + x) + P and rho(L) = rho(M) + Q, so the claim is
        # rho(M + x) Q <= rho(M) P with P, Q masses of the points outside M
        Mrep = as_sublattice(L, M)
        rel = min(max(v.eps, 1e-15), 1e-3)
        P = partition_log_sums(Coset(L, x), p, lambda Z: Mrep.member_mask(Z).astype(int), [0], rel)[0]
        Q = partition_log_sums(Coset(L, (0,) * L.n), p, lambda Z: Mrep.member_mask(Z).astype(int), [0], rel)[0]
        lhs = _log_interval(log_mass(Coset(ML, x), p, rel)) + _log_interval(Q)
        rhs = _log_interval(log_mass(Coset(ML, (0,) * L.n), p, rel)) + _log_interval(P)
        pv = _verdict("sublattice_monotone", lhs, rhs, inst, "partition", v.eps)
        if pv.status is not Status.INCONCLUSIVE:
            return pv
    return v


def check_positive_correlation(L: Lattice, M: SublatticeRep, N: SublatticeRep, eps: float = 1e-10, p=None) -> Verdict:
    """``rho(M) rho(N) <= rho(M ∩ N) rho(L)`` (the normalised correlation claim)."""
    p = as_param(p)
    MN = intersect(M, N)
    lats = {"M": M.lattice, "N": N.lattice, "MN": MN.lattice, "L": L}
    inst = describe(L, M=M, N=N, param=p)
    zero = (0,) * L.n

    def compute(e):
        v = _product_claim(
            "positive_correlation",
            [(coset_key(lats[k], zero), lats[k]) for k in ("M", "N")],
            [(coset_key(lats[k], zero), lats[k]) for k in ("MN", "L")],
            lambda lat: mass(Coset(lat, zero), p, e),
            lambda lat: log_lattice_mass(lat, p, e),
            e,
            inst,
        )
        if v.status is Status.INCONCLUSIVE:
            pv = _correlation_partition(L, M, N, MN, p, e, inst)
            if pv.status is not Status.INCONCLUSIVE:
                return pv
            if _split_equality(L, M, N):
                zero_iv = Interval.point(0.0)
                return Verdict("positive_correlation", Status.HOLDS, zero_iv, zero_iv, 0.0, inst, "orthogonal-split", e)
        return v

    return with_tightening(compute, eps)


def _correlation_partition(L, M, N, MN, p, eps, inst):
    """``rho(M) rho(N) <= rho(M ∩ N) rho(L)`` rearranged as
    ``A B <= rho(M ∩ N) G`` with ``A``, ``B``, ``G`` the masses of
    ``M \\ N``, ``N \\ M`` and ``L \\ (M ∪ N)``; all three are sums of
    positive terms, so the comparison keeps relative accuracy."""
    name = "positive_correlation"
    rel = min(max(eps, 1e-15), 1e-3)
    need = [0] + [k for k, sub in ((1, M), (2, N)) if sub.index != MN.index]

    def classify(Z):
        return M.member_mask(Z).astype(int) + 2 * N.member_mask(Z).astype(int)

    sums = partition_log_sums(Coset(L, (0,) * L.n), p, classify, need, rel)
    rhs = log_lattice_mass(MN.lattice, p, eps) + _log_interval(sums[0])
    if len(need) < 3:
        # M inside N (or N inside M): the left side vanishes
        g = _log_interval(sums[0])
        return _verdict(name, Interval.point(0.0), Interval(math.exp(g.lo), math.exp(g.hi)), inst, "partition", eps)
    lhs = _log_interval(sums[1]) + _log_interval(sums[2])
    return _verdict(name, lhs, rhs, inst, "partition", eps)


def _split_equality(L, M, N) -> bool:
    """Exact equality certificate: ``L = L1 ⊕ L2`` orthogonally with ``L1``
    inside one of ``M``, ``N`` and ``L2`` inside the other. Then
    ``M = (M ∩ L1) ⊕ L2``, ``N = L1 ⊕ (N ∩ L2)`` and both sides of the
    correlation inequality factor into the same four masses."""
    for z, K in orthogonal_splits(L):
        line = np.array([z])
        plane = np.array(K).T
        for A, B in ((M, N), (N, M)):
            if A.member_mask(line).all() and B.member_mask(plane).all():
                return True
    return False
