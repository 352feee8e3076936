"""Certified Gaussian masses of lattice cosets and the periodic Gaussian.

All sums are reduced to one shape: a positive-definite quadratic form
``G = U^T U`` on coefficient space and a shift ``t``, with terms
``exp(-pi ||U (z + t)||^2)``. For ``rho_s(L + x)`` the form is ``B^T B / s^2``
and ``t = B^{-1} x``; for the matrix parameter it is ``B^T Sigma^{-1} B``; the
Poisson dual uses the inverse form.

Every returned :class:`CertifiedValue` carries an absolute error bound made of
a truncation part (Banaszczyk's tail bound, with the lattice mass bounded by
the Gram-Schmidt product ``prod(1 + 1/g_i)``) and a rounding part tracked term
by term and summed with :func:`math.fsum`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .enumeration import DEFAULT_CAP, fincke_pohst, quadratic_norms, upper_cholesky
from .lattice import (
    Coset,
    Lattice,
    as_fraction,
    frac_vector,
    inverse,
    make_lattice,
    matvec,
    quotient_reps,
    sublattice,
)

U_ROUND = 2.0**-53
SYM_TOL = 1e-12


class NotPositiveDefinite(ValueError):
    pass


@dataclass(frozen=True)
class GaussianParam:
    """Either a width ``s > 0`` or a covariance-like matrix ``Sigma``.

    ``rho_s(x) = exp(-pi ||x||^2 / s^2)`` and
    ``rho_Sigma(x) = exp(-pi x^T Sigma^{-1} x)``, so ``Sigma = s^2 I`` agrees
    with the scalar form.
    """

    s: float | None = None
    sigma: tuple | None = None

    def __post_init__(self):
        if (self.s is None) == (self.sigma is None):
            raise ValueError("give exactly one of s or sigma")
        if self.s is not None:
            s = float(self.s)
            if not (s > 0 and math.isfinite(s)):
                raise ValueError(f"s must be positive, got {self.s!r}")
            object.__setattr__(self, "s", s)
            return
        S = np.array(self.sigma, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("sigma must be a square matrix")
        asym = float(np.max(np.abs(S - S.T))) if S.size else 0.0
        if asym > SYM_TOL * max(1.0, float(np.max(np.abs(S)))):
            raise ValueError(f"sigma is not symmetric (max asymmetry {asym:.3g})")
        S = (S + S.T) / 2
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("sigma is not positive definite") from None
        object.__setattr__(self, "sigma", tuple(tuple(float(v) for v in row) for row in S))

    @classmethod
    def scalar(cls, s) -> "GaussianParam":
        return cls(s=s)

    @classmethod
    def matrix(cls, sigma) -> "GaussianParam":
        return cls(sigma=tuple(tuple(row) for row in sigma))

    @property
    def is_scalar(self) -> bool:
        return self.s is not None

    @cached_property
    def _eig(self):
        return np.linalg.eigh(np.array(self.sigma))

    def sigma_matrix(self, n: int) -> np.ndarray:
        if self.is_scalar:
            return self.s**2 * np.eye(n)
        return np.array(self.sigma)

    def precision(self, n: int) -> np.ndarray:
        """``Sigma^{-1}`` (``I / s^2`` in the scalar case)."""
        if self.is_scalar:
            return np.eye(n) / self.s**2
        w, V = self._eig
        return (V / w) @ V.T

    def sqrt(self, n: int) -> np.ndarray:
        if self.is_scalar:
            return self.s * np.eye(n)
        w, V = self._eig
        return (V * np.sqrt(w)) @ V.T

    def inv_sqrt(self, n: int) -> np.ndarray:
        """The positive-definite ``Sigma^{-1/2}``."""
        if self.is_scalar:
            return np.eye(n) / self.s
        w, V = self._eig
        return (V / np.sqrt(w)) @ V.T

    @property
    def spectral_scale(self) -> float:
        """``||Sigma^{1/2}||_2``: bounds original norms by effective ones."""
        return self.s if self.is_scalar else float(np.sqrt(self._eig[0].max()))

    @property
    def condition(self) -> float:
        if self.is_scalar:
            return 1.0
        w = self._eig[0]
        return float(w.max() / w.min())

    def scaled(self, c: float) -> "GaussianParam":
        """Parameter of ``rho`` after multiplying widths by ``c``."""
        if self.is_scalar:
            return GaussianParam(s=self.s * c)
        return GaussianParam.matrix((c * c) * np.array(self.sigma))

    def to_json(self):
        return {"s": self.s} if self.is_scalar else {"sigma": [list(r) for r in self.sigma]}


def as_param(p) -> GaussianParam:
    if p is None:
        return GaussianParam(s=1.0)
    if isinstance(p, GaussianParam):
        return p
    if isinstance(p, (int, float)):
        return GaussianParam(s=p)
    return GaussianParam.matrix(p)


@dataclass(frozen=True)
class CertifiedValue:
    """A value with an absolute error bound: the truth lies in ``value ± err``."""

    value: float
    err: float
    radius: float = 0.0
    warnings: tuple = field(default=(), compare=False)

    @property
    def lo(self) -> float:
        return self.value - self.err

    @property
    def hi(self) -> float:
        return self.value + self.err

    def to_json(self):
        return {"value": self.value, "err": self.err, "radius": self.radius}

    @classmethod
    def from_json(cls, d):
        return cls(float(d["value"]), float(d["err"]), float(d.get("radius", 0.0)))


EXACT_ONE = CertifiedValue(1.0, 0.0, 0.0)
EXACT_ZERO = CertifiedValue(0.0, 0.0, 0.0)


def quotient(num: CertifiedValue, den: CertifiedValue) -> CertifiedValue:
    """Interval quotient; needs ``den.value - den.err > 0``."""
    d_lo = den.value - den.err
    if not d_lo > 0:
        raise ArithmeticError("denominator interval contains zero")
    v = num.value / den.value
    a = abs(num.value)
    err = (a + num.err) / d_lo - a / den.value
    err = err * (1 + 8 * U_ROUND) + 4 * U_ROUND * abs(v)
    return CertifiedValue(v, err, max(num.radius, den.radius), num.warnings + den.warnings)


def product(a: CertifiedValue, b: CertifiedValue) -> CertifiedValue:
    v = a.value * b.value
    err = abs(a.value) * b.err + abs(b.value) * a.err + a.err * b.err
    err = err * (1 + 8 * U_ROUND) + 2 * U_ROUND * abs(v)
    return CertifiedValue(v, err, max(a.radius, b.radius), a.warnings + b.warnings)


# ---------------------------------------------------------------------------
# quadratic forms and tail bounds


@dataclass(frozen=True, eq=False)
class Form:
    """Positive-definite form on coefficient space, ``gram = U^T U``."""

    gram: np.ndarray
    kappa: float = 1.0

    @cached_property
    def U(self) -> np.ndarray:
        return upper_cholesky(self.gram)

    @property
    def n(self) -> int:
        return self.gram.shape[0]

    @cached_property
    def gs(self) -> np.ndarray:
        return np.abs(np.diag(self.U))

    @cached_property
    def qerr(self) -> float:
        """Relative rounding factor for squared norms (times ``|| |U||z+t| ||^2``)."""
        n = self.n
        return (8 * (n + 3) + 4 * n * self.kappa) * U_ROUND

    def rho_bound(self, width: float = 1.0) -> float:
        """Upper bound on ``rho_width`` of the lattice or any of its cosets."""
        return float(np.prod(1 + width / self.gs))


def _log_C(tau: float) -> float:
    return math.log(tau) + 0.5 * math.log(2 * math.pi * math.e) - math.pi * tau * tau


def log_tail_bound(form: Form, R: float, k: int = 0, delta: float = 0.1) -> float:
    """Logarithm of :func:`tail_bound` (finite where the bound itself underflows)."""
    n = form.n
    if k == 0:
        sp, logK = 1.0, 0.0
    else:
        sp = 1.0 + delta
        a = 1.0 - 1.0 / sp**2
        logK = (k / 2) * math.log(k / (2 * math.pi * a * math.e))
    tau = R / (sp * math.sqrt(n))
    if tau <= 1 / math.sqrt(2 * math.pi):
        return math.inf
    log_rho = float(np.sum(np.log1p(sp / form.gs)))
    return logK + math.log(2) + n * _log_C(tau) + log_rho


def tail_bound(form: Form, R: float, k: int = 0, delta: float = 0.1) -> float:
    """Bound on ``sum ||u||^k rho(u)`` over coset points with ``||u|| > R``.

    ``k = 0`` is Banaszczyk's bound ``2 C^n rho(L)``. For ``k > 0`` we use
    ``r^k e^{-pi r^2} <= K e^{-pi r^2 / s'^2}`` with ``s' = 1 + delta`` and
    apply the same bound at width ``s'``.
    """
    return math.exp(min(log_tail_bound(form, R, k, delta), 709.0))


def radius_for(form: Form, target: float, k: int = 0, delta: float = 0.1) -> float:
    """Smallest radius ``R >= width * sqrt(n)`` whose tail bound is ``<= target``."""
    if not target > 0:
        raise ValueError("target error must be positive")
    return radius_for_log(form, math.log(target), k, delta)


def radius_for_log(form: Form, log_target: float, k: int = 0, delta: float = 0.1) -> float:
    """:func:`radius_for` with the target given by its logarithm."""
    n = form.n
    sp = 1.0 if k == 0 else 1.0 + delta
    base = sp * math.sqrt(n)

    def g(tau):
        return log_tail_bound(form, tau * base, k, delta) - log_target

    if g(1.0) <= 0:
        return base
    hi = 2.0
    while g(hi) > 0:
        hi *= 2
    tau = brentq(g, hi / 2 if hi > 2 else 1.0, hi, xtol=1e-12, rtol=1e-12)
    return tau * base * (1 + 1e-9)


def nearest(form: Form, t):
    """Integer ``z`` minimising ``||U (z + t)||^2`` and that (floating) minimum."""
    t = np.asarray(t, dtype=float)
    z = -np.round(t)
    r0 = float(np.linalg.norm(form.U @ (z + t))) * (1 + 1e-9) + 1e-300
    Z, q = fincke_pohst(form.U, t, r0)
    if len(q):
        return Z[0], float(q[0])
    return z.astype(np.int64), float(np.linalg.norm(form.U @ (z + t))) ** 2


def min_norm2(form: Form, t) -> float:
    """Smallest ``||U (z + t)||^2`` over integer ``z`` (floating point)."""
    return nearest(form, t)[1]


@lru_cache(maxsize=4096)
def primal_form(L: Lattice, p: GaussianParam) -> Form:
    if p.is_scalar:
        return Form(L.gram_float / p.s**2)
    B = L.B_float
    return Form(B.T @ p.precision(L.n) @ B, kappa=p.condition)


@lru_cache(maxsize=4096)
def dual_form(L: Lattice, p: GaussianParam) -> Form:
    """Form of the Poisson-dual sum: ``(B^T Sigma^{-1} B)^{-1}``."""
    if p.is_scalar:
        Ginv = np.array([[float(x) for x in row] for row in inverse(L.gram)])
        return Form(p.s**2 * Ginv)
    Bi = np.array([[float(x) for x in row] for row in L.B_inv])
    return Form(Bi @ p.sigma_matrix(L.n) @ Bi.T, kappa=p.condition)


def _float_vec(v):
    return np.array([float(x) for x in v])


def _terms(form: Form, t, radius: float, cap: int, q0: float = 0.0):
    """Points of the ball with terms ``exp(-pi (q - q0))`` and their error bounds.

    A positive ``q0`` rescales every term by ``exp(pi q0)`` so far cosets do
    not underflow.
    """
    Z, _ = fincke_pohst(form.U, t, radius * (1 + 1e-12), cap=cap)
    q, m2 = quadratic_norms(form.U, Z, t)
    rho = np.exp(-np.pi * (q - q0))
    rho_err = rho * (np.pi * form.qerr * m2 + np.pi * U_ROUND * (q + q0) + 4 * U_ROUND)
    return Z, q, rho, rho_err


# ---------------------------------------------------------------------------
# operations


def rho_point(x, p=None) -> float:
    """``rho_s(x)`` or ``rho_Sigma(x)`` at a single point."""
    p = as_param(p)
    x = np.asarray([float(v) for v in x])
    if p.is_scalar:
        return math.exp(-math.pi * float(x @ x) / p.s**2)
    return math.exp(-math.pi * float(x @ p.precision(len(x)) @ x))


def mass(c: Coset, p=None, eps: float = 1e-10, validate: bool = True, cap: int = DEFAULT_CAP) -> CertifiedValue:
    """Certified ``rho_p(L + x)`` with truncation error ``<= eps / 2``.

    With ``validate`` the sum is also taken out to twice the radius; if that
    moves the value by more than the bound, the bound is widened to the
    observed movement and a warning is attached.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    return _mass(c.lattice, c.reduced, as_param(p), float(eps), bool(validate), cap)


@lru_cache(maxsize=65536)
def _mass(L, t, p, eps, validate, cap):
    form = primal_form(L, p)
    tf = _float_vec(t)
    R = radius_for(form, eps / 2)
    Z, q, rho, rho_err = _terms(form, tf, 2 * R if validate else R, cap)
    inner = q <= R * R * (1 + 1e-12)
    value = math.fsum(rho[inner])
    round_err = math.fsum(rho_err[inner]) + 2 * U_ROUND * value
    err = tail_bound(form, R) + round_err
    warnings = ()
    if validate:
        moved = abs(math.fsum(rho) - value)
        if moved > err:
            err = moved + round_err
            warnings = (f"doubling pass moved the value by {moved:.3g}; bound widened",)
    scale = p.s if p.is_scalar else 1.0
    return CertifiedValue(value, err, R * scale, warnings)


def periodic_gaussian(L: Lattice, p=None, x=None, eps: float = 1e-10, validate: bool = True) -> CertifiedValue:
    """``f_{L,p}(x) = rho_p(L + x) / rho_p(L)``; exactly 1 when ``x`` is in ``L``."""
    c = Coset(L, x if x is not None else [0] * L.n)
    if c.is_lattice:
        return EXACT_ONE
    p = as_param(p)
    num = mass(c, p, eps, validate)
    den = mass(Coset(L, [0] * L.n), p, eps, validate)
    return quotient(num, den)


def log_mass(c: Coset, p=None, rel_eps: float = 1e-12, cap: int = DEFAULT_CAP) -> CertifiedValue:
    """``log rho_p(L + x)`` with an absolute error bound on the logarithm.

    Terms are summed relative to the closest coset point, so the result keeps
    its relative accuracy for cosets whose mass underflows a double.
    """
    if not 0 < rel_eps < 1:
        raise ValueError("rel_eps must lie in (0, 1)")
    return _log_mass(c.lattice, c.reduced, as_param(p), float(rel_eps), cap)


@lru_cache(maxsize=65536)
def _log_mass(L, t, p, rel_eps, cap):
    form = primal_form(L, p)
    tf = _float_vec(t)
    q0 = min_norm2(form, tf)
    R = max(radius_for_log(form, math.log(rel_eps / 4) - math.pi * q0), math.sqrt(q0) * (1 + 1e-9))
    _, q, r, r_err = _terms(form, tf, R, cap, q0)
    S = math.fsum(r)
    eS = math.fsum(r_err) + 2 * U_ROUND * S + math.exp(min(log_tail_bound(form, R) + math.pi * q0, 709.0))
    if not eS < S:
        raise ArithmeticError("log_mass lost all relative accuracy")
    value = -math.pi * q0 + math.log(S)
    err = -math.log1p(-eS / S) + 4 * U_ROUND * (math.pi * q0 + abs(math.log(S)))
    return CertifiedValue(value, err, R * (p.s if p.is_scalar else 1.0))


class MassSplit(NamedTuple):
    """``rho_s(L + x) = exp(-pi q0) (1 + rest)`` around the closest point.

    ``q0 = ||w_0||^2 / s^2`` is exact for the returned closest point ``w_0``
    (coefficients ``z0``, ``w_0 = B (z0 + t)``); ``rest`` is certified to
    relative accuracy, so products of masses whose leading Gaussians cancel
    can still be compared.
    """

    z0: tuple
    q0: Fraction
    rest: CertifiedValue


def mass_split(c: Coset, p=None, rel_eps: float = 1e-12, cap: int = DEFAULT_CAP) -> MassSplit:
    p = as_param(p)
    if not p.is_scalar:
        raise ValueError("mass_split takes a scalar parameter")
    return _mass_split(c.lattice, c.reduced, p, float(rel_eps), cap)


@lru_cache(maxsize=65536)
def _mass_split(L, t, p, rel_eps, cap):
    form = primal_form(L, p)
    tf = _float_vec(t)
    z0, q0f = nearest(form, tf)
    w0 = matvec(L.B, [int(a) + b for a, b in zip(z0, t)])
    q0 = sum((v * v for v in w0), Fraction(0)) / Fraction(p.s) ** 2
    dq0 = form.qerr * float(np.sum((np.abs(z0 + tf) @ np.abs(form.U).T) ** 2))
    R = max(math.sqrt(q0f) + 1.0, radius_for_log(form, math.log(rel_eps) - math.pi * q0f))
    for _ in range(64):
        Z, q, r, r_err = _terms(form, tf, R, cap, q0f)
        keep = np.any(Z != z0, axis=1)
        E = math.fsum(r[keep])
        tail = math.exp(min(log_tail_bound(form, R) + math.pi * q0f, 709.0))
        if E > 0 and tail <= rel_eps * E / 2:
            break
        if E == 0:
            if tail < 1e-300:
                break
            R *= 1.5
            continue
        R = max(R * 1.05, radius_for_log(form, math.log(rel_eps * E / 4) - math.pi * q0f))
    eE = math.fsum(r_err[keep]) + (math.pi * dq0 + 2 * U_ROUND) * E + tail
    return MassSplit(tuple(int(v) for v in z0), q0, CertifiedValue(E, eE, R * p.s))


def partition_log_sums(c: Coset, p, classify, classes, rel_eps: float = 1e-12, cap: int = DEFAULT_CAP):
    """``log`` of the Gaussian mass of several parts of a coset.

    ``classify(Z)`` labels integer offsets ``Z`` (points ``x + B Z``); the
    result maps each label in ``classes`` to a CertifiedValue of the log of
    the mass of that part, each to relative accuracy ``rel_eps``. Every
    requested part must be nonempty.
    """
    p = as_param(p)
    L = c.lattice
    form = primal_form(L, p)
    t = c.reduced
    tf = _float_vec(t)
    k0 = np.array([int(a - b) for a, b in zip(L.coords(c.shift), t)], dtype=np.int64)
    _, q0 = nearest(form, tf)
    R = math.sqrt(q0) + 1.0
    for _ in range(64):
        Z, q = fincke_pohst(form.U, tf, R * (1 + 1e-12), cap=cap)
        lab = classify(Z - k0)
        present = {k: np.any(lab == k) for k in classes}
        if not all(present.values()):
            R *= 1.5
            continue
        qmax = max(float(q[lab == k].min()) for k in classes)
        R_new = radius_for_log(form, math.log(rel_eps / 4) - math.pi * qmax)
        if R_new <= R:
            break
        R = R_new
    else:
        raise ArithmeticError("some requested part stayed empty")
    log_tail = log_tail_bound(form, R)
    q, m2 = quadratic_norms(form.U, Z, tf)
    out = {}
    for k in classes:
        sel = lab == k
        qs = q[sel]
        qk = float(qs.min())
        r = np.exp(-np.pi * (qs - qk))
        r_err = r * (np.pi * form.qerr * m2[sel] + np.pi * U_ROUND * (qs + qk) + 4 * U_ROUND)
        S = math.fsum(r)
        eS = math.fsum(r_err) + 2 * U_ROUND * S + math.exp(min(log_tail + math.pi * qk, 709.0))
        err = -math.log1p(-min(eS / S, 0.5)) + 4 * U_ROUND * (math.pi * qk + abs(math.log(S)))
        out[k] = CertifiedValue(-math.pi * qk + math.log(S), err if eS < S else math.inf, R)
    return out


def dual_mass(c: Coset, p=None, eps: float = 1e-10, cap: int = DEFAULT_CAP) -> CertifiedValue:
    """``rho_s(L + x)`` through Poisson summation over the dual lattice:
    ``(s^n / det L) sum_{w in L*} rho_{1/s}(w) cos(2 pi <w, x>)``."""
    p = as_param(p)
    if not p.is_scalar:
        raise ValueError("dual_mass takes a scalar parameter")
    L = c.lattice
    n = L.n
    form = dual_form(L, p)
    pref = p.s**n / float(L.det)
    R = radius_for(form, eps / (2 * pref))
    Z, q, a, a_err = _terms(form, np.zeros(n), R, cap)
    t = _float_vec(c.reduced)
    theta = Z @ t
    dtheta = (n + 2) * U_ROUND * (np.abs(Z) @ np.abs(t)) + U_ROUND * np.abs(theta)
    cs = np.cos(2 * np.pi * theta)
    dcos = 2 * np.pi * dtheta + 2 * U_ROUND
    s = math.fsum(a * cs)
    round_err = math.fsum(a_err * np.abs(cs) + a * dcos) + 2 * U_ROUND * math.fsum(a)
    value = pref * s
    err = pref * (tail_bound(form, R) + round_err) + (n + 4) * U_ROUND * abs(value)
    return CertifiedValue(value, err, R / p.s)


class CosineMoments(NamedTuple):
    cos_x: CertifiedValue
    cos_y: CertifiedValue
    cos_cos: CertifiedValue
    sin_sin: CertifiedValue


def _dual_frequency(L: Lattice, x):
    """``B^T x`` reduced mod 1 exactly: ``<B z, x> = z . v (mod 1)``."""
    v = matvec(L.vectors, frac_vector(x))
    return tuple(c - math.ceil(c - Fraction(1, 2)) for c in v)


def cosine_moments(L: Lattice, x, y, eps: float = 1e-10, p=None, cap: int = DEFAULT_CAP) -> CosineMoments:
    """``E[cos 2pi<w,x>]``, ``E[cos 2pi<w,y>]``, ``E[cos cos]``, ``E[sin sin]``
    for ``w ~ D_{L,p}``."""
    p = as_param(p)
    n = L.n
    vx, vy = _dual_frequency(L, x), _dual_frequency(L, y)
    x0, y0 = all(v == 0 for v in vx), all(v == 0 for v in vy)
    form = primal_form(L, p)
    R = radius_for(form, eps / 4)
    Z, q, rho, rho_err = _terms(form, np.zeros(n), R, cap)
    tail = tail_bound(form, R)
    D = CertifiedValue(math.fsum(rho), math.fsum(rho_err) + 2 * U_ROUND * math.fsum(rho) + tail, R)

    def trig(v):
        vf = _float_vec(v)
        th = Z @ vf
        dth = (n + 2) * U_ROUND * (np.abs(Z) @ np.abs(vf)) + U_ROUND * np.abs(th)
        return np.cos(2 * np.pi * th), np.sin(2 * np.pi * th), 2 * np.pi * dth + 2 * U_ROUND

    def expect(h, dh):
        N = math.fsum(rho * h)
        e = math.fsum(rho_err * np.abs(h) + rho * dh) + 2 * U_ROUND * math.fsum(rho) + tail
        return quotient(CertifiedValue(N, e, R), D)

    cx, sx, dx = trig(vx)
    cy, sy, dy = trig(vy)
    Ecx = EXACT_ONE if x0 else expect(cx, dx)
    Ecy = EXACT_ONE if y0 else expect(cy, dy)
    if x0 and y0:
        Ecc = EXACT_ONE
    elif x0:
        Ecc = Ecy
    elif y0:
        Ecc = Ecx
    else:
        Ecc = expect(cx * cy, dx + dy + U_ROUND)
    Ess = EXACT_ZERO if (x0 or y0) else expect(sx * sy, dx + dy + U_ROUND)
    return CosineMoments(Ecx, Ecy, Ecc, Ess)


# ---------------------------------------------------------------------------
# sums with relative accuracy: deficits 1 - f and excesses rho(L) - 1


def _relative_sum(form: Form, v, kind: str, rel_eps: float, cap: int):
    """Certified ``N = sum a_k h_k`` and ``D = sum a_k`` over ``k in Z^n`` with
    ``a_k = exp(-pi k^T G k)``.

    ``kind == "deficit"``: ``h_k = 2 sin^2(pi k.v)`` (so ``N/D = E[1 - cos]``);
    ``kind == "excess"``: ``h_k = [k != 0]``. All terms are non-negative, so the
    radius is grown until the tail is below ``rel_eps * N``.
    """
    n = form.n
    hmax = 2.0 if kind == "deficit" else 1.0
    vf = _float_vec(v) if kind == "deficit" else None
    target = rel_eps
    R = radius_for(form, target)
    for _ in range(64):
        Z, q, a, a_err = _terms(form, np.zeros(n), R, cap)
        if kind == "deficit":
            th = Z @ vf
            dth = (n + 2) * U_ROUND * (np.abs(Z) @ np.abs(vf)) + U_ROUND * np.abs(th)
            th = th - np.round(th)
            sn = np.sin(np.pi * th)
            ds = np.pi * dth + 2 * U_ROUND * np.abs(sn)
            h = 2 * sn * sn
            dh = 4 * np.abs(sn) * ds + 2 * ds * ds + 3 * U_ROUND * h
        else:
            h = np.any(Z != 0, axis=1).astype(float)
            dh = np.zeros_like(h)
        N = math.fsum(a * h)
        tail = tail_bound(form, R)
        if N == 0:
            # no contributing term inside the ball yet; stop once the whole
            # sum is below anything a double can hold
            if tail < 1e-300:
                break
            R *= 1.5
            continue
        if hmax * tail <= rel_eps * N / 2:
            break
        R_new = radius_for(form, rel_eps * N / (4 * hmax))
        if R_new <= R:
            break
        R = R_new
    eN = math.fsum(a_err * h + a * dh) + 2 * U_ROUND * N + hmax * tail
    Dv = math.fsum(a)
    eD = math.fsum(a_err) + 2 * U_ROUND * Dv + tail
    return CertifiedValue(N, eN, R), CertifiedValue(Dv, eD, R)


def periodic_deficit(L: Lattice, p=None, x=None, eps: float = 1e-10, cap: int = DEFAULT_CAP) -> CertifiedValue:
    """``1 - f_{L,p}(x)`` to relative accuracy ``eps``, via the dual sum
    ``sum_{k} a_k (1 - cos 2pi k.t) / sum_k a_k`` (no cancellation near 1)."""
    p = as_param(p)
    c = Coset(L, x)
    if c.is_lattice:
        return EXACT_ZERO
    N, D = _relative_sum(dual_form(L, p), c.reduced, "deficit", eps, cap)
    return quotient(N, D)


def cosine_deficit(L: Lattice, x, p=None, eps: float = 1e-10, cap: int = DEFAULT_CAP) -> CertifiedValue:
    """``E_{w ~ D_{L,p}}[1 - cos 2pi<w, x>]`` to relative accuracy ``eps``."""
    p = as_param(p)
    v = _dual_frequency(L, x)
    if all(c == 0 for c in v):
        return EXACT_ZERO
    N, D = _relative_sum(primal_form(L, p), v, "deficit", eps, cap)
    return quotient(N, D)


def mass_excess(L: Lattice, p=None, eps: float = 1e-10, cap: int = DEFAULT_CAP) -> CertifiedValue:
    """``rho_p(L) - 1`` (the mass off the origin) to relative accuracy ``eps``."""
    N, _ = _relative_sum(primal_form(L, as_param(p)), None, "excess", eps, cap)
    return N


# ---------------------------------------------------------------------------
# the coset split behind the main inequality


@dataclass(frozen=True)
class SplitReport:
    lhs: CertifiedValue
    terms: tuple  # ((rho(2L + c + x + y), rho(2L + c + x - y)) for c in L/2L)
    rhs: CertifiedValue
    reps: tuple

    @property
    def agrees(self) -> bool:
        return abs(self.lhs.value - self.rhs.value) <= self.lhs.err + self.rhs.err

    @property
    def h_plus(self):
        return [a.value for a, _ in self.terms]

    @property
    def h_minus(self):
        return [b.value for _, b in self.terms]


def rotation_lattice(L: Lattice) -> Lattice:
    """``T (L + L)`` in dimension ``2n`` with ``T = [[I, I], [I, -I]]``."""
    vecs = []
    for b in L.vectors:
        vecs.append(tuple(b) + tuple(b))
        vecs.append(tuple(b) + tuple(-v for v in b))
    return Lattice(tuple(vecs))


def theta_split_identity(L: Lattice, x, y, eps: float = 1e-10, p=None) -> SplitReport:
    """Both sides of ``rho(L+x) rho(L+y) = sum_{c in L/2L} rho_{sqrt2}(2L+c+x+y) rho_{sqrt2}(2L+c+x-y)``."""
    p = as_param(p)
    n = L.n
    x, y = frac_vector(x), frac_vector(y)
    lhs = product(mass(Coset(L, x), p, eps), mass(Coset(L, y), p, eps))
    reps = quotient_reps(L, sublattice(L, [[2 * int(i == j) for j in range(n)] for i in range(n)]))
    L2 = L.scaled(2)
    p2 = p.scaled(math.sqrt(2))
    plus = tuple(a + b for a, b in zip(x, y))
    minus = tuple(a - b for a, b in zip(x, y))
    terms = []
    acc, acc_err = [], []
    for c in reps.reps:
        a = mass(Coset(L2, tuple(ci + si for ci, si in zip(c, plus))), p2, eps)
        b = mass(Coset(L2, tuple(ci + si for ci, si in zip(c, minus))), p2, eps)
        terms.append((a, b))
        pr = product(a, b)
        acc.append(pr.value)
        acc_err.append(pr.err)
    v = math.fsum(acc)
    rhs = CertifiedValue(v, math.fsum(acc_err) + 2 * U_ROUND * v, 0.0)
    return SplitReport(lhs, tuple(terms), rhs, tuple(reps.reps))


def lattice_from_param(L: Lattice, p: GaussianParam) -> tuple[Lattice, np.ndarray]:
    """``Sigma^{-1/2} L`` as an (exactly float-valued) lattice and the map itself."""
    S = p.inv_sqrt(L.n)
    B = S @ L.B_float
    return make_lattice(B.T.tolist()), S


__all__ = [
    "GaussianParam",
    "CertifiedValue",
    "SplitReport",
    "CosineMoments",
    "as_param",
    "rho_point",
    "mass",
    "periodic_gaussian",
    "dual_mass",
    "cosine_moments",
    "periodic_deficit",
    "cosine_deficit",
    "mass_excess",
    "theta_split_identity",
    "rotation_lattice",
    "quotient",
    "product",
    "tail_bound",
    "radius_for",
    "as_fraction",
]
