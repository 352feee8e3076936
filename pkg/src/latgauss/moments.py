"""Means, second moments, derivatives of ``f`` and fourth-moment forms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .enumeration import DEFAULT_CAP
from .lattice import Coset, Lattice, as_fraction, frac_vector
from .mass import (
    U_ROUND,
    CertifiedValue,
    Form,
    _terms,
    as_param,
    dual_form,
    log_tail_bound,
    min_norm2,
    periodic_gaussian,
    primal_form,
    product,
    quotient,
    radius_for,
    radius_for_log,
    tail_bound,
)


@dataclass(frozen=True)
class MomentReport:
    """Moments of ``D_{L+x,p}`` with entrywise absolute error bounds.

    For empirical reports the ``err_*`` fields hold standard errors instead.
    """

    mean: np.ndarray
    second: np.ndarray
    covariance: np.ndarray
    err_mean: np.ndarray
    err_second: np.ndarray
    err_covariance: np.ndarray
    mass: CertifiedValue | None = None  # relative to the weight of the closest point

    @property
    def n(self) -> int:
        return len(self.mean)

    def to_json(self):
        return {
            "mean": self.mean.tolist(),
            "err_mean": self.err_mean.tolist(),
            "second": self.second.tolist(),
            "err_second": self.err_second.tolist(),
            "covariance": self.covariance.tolist(),
            "err_covariance": self.err_covariance.tolist(),
        }

    @classmethod
    def from_json(cls, d):
        a = {k: np.array(d[k], dtype=float) for k in ("mean", "second", "covariance", "err_mean", "err_second", "err_covariance")}
        return cls(**a)


def _ratio(N, eN, D: CertifiedValue):
    """Elementwise interval quotient of an array numerator by a positive mass."""
    d_lo = D.value - D.err
    v = N / D.value
    a = np.abs(N)
    e = (a + eN) / d_lo - a / D.value
    return v, e * (1 + 8 * U_ROUND) + 4 * U_ROUND * np.abs(v)


def _support(c: Coset, p, eps, orders, cap):
    """Enumerated coset points ``w`` (original coordinates), weights and error data.

    Weights are ``rho(w) / rho(w_0)`` for the closest point ``w_0``, so the
    total is at least 1 and every weighted tail up to the largest order is at
    most ``eps / 2`` of it.
    """
    L = c.lattice
    n = L.n
    form = primal_form(L, p)
    scale = p.spectral_scale
    t = np.array([float(v) for v in c.reduced])
    q0 = min_norm2(form, t)
    R = max(radius_for_log(form, math.log(eps / 2) - math.pi * q0), math.sqrt(q0) * (1 + 1e-9))
    for k in orders:
        if k:
            R = max(R, radius_for_log(form, math.log(eps / (2 * scale**k)) - math.pi * q0, k=k))
    Z, q, rho, rho_err = _terms(form, t, R, cap, q0)
    W = (Z + t) @ L.B_float.T
    dW = (n + 3) * U_ROUND * ((np.abs(Z + t)) @ np.abs(L.B_float).T)
    tails = {k: (scale**k) * math.exp(min(log_tail_bound(form, R, k=k) + math.pi * q0, 709.0)) for k in orders}
    return W, dW, rho, rho_err, tails, R


def moment_report(c: Coset, p=None, eps: float = 1e-10, cap: int = DEFAULT_CAP) -> MomentReport:
    """Certified ``E[w]``, ``E[w w^T]`` and covariance for ``w ~ D_{L+x,p}``."""
    p = as_param(p)
    n = c.lattice.n
    W, dW, rho, rho_err, tails, R = _support(c, p, eps, (0, 1, 2), cap)
    S0 = math.fsum(rho)
    M = CertifiedValue(S0, math.fsum(rho_err) + 2 * U_ROUND * S0 + tails[0], R)

    S1 = np.array([math.fsum(W[:, i] * rho) for i in range(n)])
    e1 = np.array(
        [math.fsum(np.abs(W[:, i]) * rho_err + dW[:, i] * rho) for i in range(n)]
    ) + 2 * U_ROUND * np.abs(S1) + tails[1]
    S2 = np.empty((n, n))
    e2 = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ww = W[:, i] * W[:, j]
            S2[i, j] = S2[j, i] = math.fsum(ww * rho)
            dww = np.abs(W[:, i]) * dW[:, j] + np.abs(W[:, j]) * dW[:, i] + dW[:, i] * dW[:, j] + U_ROUND * np.abs(ww)
            e = math.fsum(np.abs(ww) * rho_err + dww * rho) + 2 * U_ROUND * abs(S2[i, j]) + tails[2]
            e2[i, j] = e2[j, i] = e

    mean, err_mean = _ratio(S1, e1, M)
    second, err_second = _ratio(S2, e2, M)
    if c.is_lattice:
        # L = -L, so the mean vanishes
        mean = np.zeros(n)
    cov = second - np.outer(mean, mean)
    am = np.abs(mean)
    err_cov = err_second + np.outer(am, err_mean) + np.outer(err_mean, am) + np.outer(err_mean, err_mean)
    err_cov = err_cov + 4 * U_ROUND * (np.abs(second) + np.outer(am, am))
    return MomentReport(mean, second, cov, err_mean, err_second, err_cov, M)


@dataclass(frozen=True)
class DerivativeReport:
    """``f_{L,p}(x)`` with its gradient and Hessian in ``x``.

    ``grad_over_f`` and ``hess_over_f`` are ``grad f / f`` and ``H f / f``,
    which come straight from the moments without the error of ``f``.
    """

    f: CertifiedValue
    grad: np.ndarray
    hess: np.ndarray
    err_grad: np.ndarray
    err_hess: np.ndarray
    grad_over_f: np.ndarray
    hess_over_f: np.ndarray
    err_grad_over_f: np.ndarray
    err_hess_over_f: np.ndarray
    moments: MomentReport

    def to_json(self):
        return {
            "f": self.f.to_json(),
            "grad": self.grad.tolist(),
            "err_grad": self.err_grad.tolist(),
            "hess": self.hess.tolist(),
            "err_hess": self.err_hess.tolist(),
        }


def derivative_report(L: Lattice, p=None, x=None, eps: float = 1e-10) -> DerivativeReport:
    """Gradient and Hessian of ``f`` from the moments of ``D_{L+x,p}``:
    ``grad f / f = -2 pi P E[w]`` and ``H f / f = 4 pi^2 P E[w w^T] P - 2 pi P``
    with ``P = Sigma^{-1}`` (``I / s^2`` for a scalar width)."""
    p = as_param(p)
    n = L.n
    x = frac_vector(x if x is not None else [0] * n)
    f = periodic_gaussian(L, p, x, eps)
    m = moment_report(Coset(L, x), p, eps)
    P = p.precision(n)
    aP = np.abs(P)

    Pm = P @ m.mean
    e_Pm = aP @ m.err_mean + (n + 2) * U_ROUND * (aP @ np.abs(m.mean))
    g_over = -2 * np.pi * Pm
    e_g_over = 2 * np.pi * e_Pm * (1 + 4 * U_ROUND)

    PSP = P @ m.second @ P
    e_PSP = aP @ m.err_second @ aP + 2 * (n + 2) * U_ROUND * (aP @ np.abs(m.second) @ aP)
    h_over = 4 * np.pi**2 * PSP - 2 * np.pi * P
    h_over = (h_over + h_over.T) / 2
    e_h_over = 4 * np.pi**2 * e_PSP + 4 * U_ROUND * (4 * np.pi**2 * np.abs(PSP) + 2 * np.pi * aP)

    fv, fe = f.value, f.err
    grad = fv * g_over
    err_grad = fv * e_g_over + fe * np.abs(g_over) + fe * e_g_over + 2 * U_ROUND * np.abs(grad)
    hess = fv * h_over
    err_hess = fv * e_h_over + fe * np.abs(h_over) + fe * e_h_over + 2 * U_ROUND * np.abs(hess)
    if Coset(L, x).is_lattice:
        grad = np.zeros(n)
        g_over = np.zeros(n)
    return DerivativeReport(f, grad, hess, err_grad, err_hess, g_over, h_over, e_g_over, e_h_over, m)


def product_hessian(a: DerivativeReport, b: DerivativeReport) -> np.ndarray:
    """Hessian of ``f a * f b`` by the product rule."""
    fa, fb = a.f.value, b.f.value
    return fa * b.hess + fb * a.hess + np.outer(a.grad, b.grad) + np.outer(b.grad, a.grad)


def finite_difference(L: Lattice, p=None, x=None, h: float = 1e-5, eps: float = 1e-14, func=None):
    """Central-difference gradient and Hessian of ``f`` (or of ``func(x)``).

    Validation only: the result carries no error bound.
    """
    p = as_param(p)
    n = L.n
    x0 = np.array([float(as_fraction(v)) for v in (x if x is not None else [0] * n)])
    if func is None:
        def func(v):
            return periodic_gaussian(L, p, v.tolist(), eps, validate=False).value
    E = np.eye(n) * h
    grad = np.array([(func(x0 + E[i]) - func(x0 - E[i])) / (2 * h) for i in range(n)])
    f0 = func(x0)
    hess = np.empty((n, n))
    for i in range(n):
        hess[i, i] = (func(x0 + E[i]) - 2 * f0 + func(x0 - E[i])) / h**2
        for j in range(i + 1, n):
            hess[i, j] = hess[j, i] = (
                func(x0 + E[i] + E[j]) - func(x0 + E[i] - E[j]) - func(x0 - E[i] + E[j]) + func(x0 - E[i] - E[j])
            ) / (4 * h * h)
    return grad, hess


@dataclass(frozen=True)
class FourthMomentForm:
    lhs: CertifiedValue  # E[<y,u>^2 <y,v>^2]
    rhs: CertifiedValue  # E[<y,u>^2] E[<y,v>^2] + 2 E[<y,u><y,v>]^2
    uu: CertifiedValue
    vv: CertifiedValue
    uv: CertifiedValue


def _directions(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.any(u) and np.any(v)):
        raise ValueError("u and v must be nonzero")
    return u, v


def _quartic(form: Form, ut, vt, dir_err, eps: float, cap: int) -> FourthMomentForm:
    """Fourth-moment sides for weights ``exp(-pi z^T G z)`` over integer ``z``
    and the linear forms ``a = z . ut``, ``b = z . vt``.

    ``dir_err(Z)`` bounds the rounding of ``(a, b)`` per point. The radius
    grows until every truncated tail is below ``eps * min(1, E[a^2 b^2])``,
    so the bounds are absolute and, for small moments, also relative.
    """
    n = form.n
    Ui = np.linalg.inv(form.U)
    cu, cv = float(np.linalg.norm(Ui.T @ ut)), float(np.linalg.norm(Ui.T @ vt))
    c2, c4 = max(cu, cv, 1.0) ** 2, max(cu * cv, 1.0) ** 2
    zero = np.zeros(n)
    R = radius_for(form, eps / (2 * max(c2, c4)), k=4)
    for _ in range(64):
        Z, q, rho, rho_err = _terms(form, zero, R, cap)
        a, b = Z @ ut, Z @ vt
        N4 = math.fsum(a * a * b * b * rho)
        target = eps * min(1.0, N4 / math.fsum(rho))
        t2, t4 = tail_bound(form, R, k=2), tail_bound(form, R, k=4)
        if N4 > 0 and max(c2 * t2, c4 * t4) <= target / 2:
            break
        if N4 == 0:
            R *= 1.5
            continue
        R = max(R * 1.05, radius_for(form, target / (4 * c4), k=4), radius_for(form, target / (4 * c2), k=2))
    da, db = dir_err(Z)
    S0 = math.fsum(rho)
    M = CertifiedValue(S0, math.fsum(rho_err) + 2 * U_ROUND * S0 + tail_bound(form, R), R)

    def expect(h, dh, tail):
        s = math.fsum(h * rho)
        e = math.fsum(np.abs(h) * rho_err + dh * rho) + 2 * U_ROUND * abs(s) + tail
        return quotient(CertifiedValue(s, e, R), M)

    aa, bb, ab = a * a, b * b, a * b
    daa = 2 * np.abs(a) * da + da * da + U_ROUND * aa
    dbb = 2 * np.abs(b) * db + db * db + U_ROUND * bb
    dab = np.abs(a) * db + np.abs(b) * da + da * db + U_ROUND * np.abs(ab)
    daabb = aa * dbb + bb * daa + daa * dbb + U_ROUND * aa * bb
    lhs = expect(aa * bb, daabb, cu * cu * cv * cv * t4)
    Euu = expect(aa, daa, cu * cu * t2)
    Evv = expect(bb, dbb, cv * cv * t2)
    Euv = expect(ab, dab, cu * cv * t2)
    t1 = product(Euu, Evv)
    t2p = product(Euv, Euv)
    rv = t1.value + 2 * t2p.value
    rhs = CertifiedValue(rv, t1.err + 2 * t2p.err + 4 * U_ROUND * abs(rv), R)
    return FourthMomentForm(lhs, rhs, Euu, Evv, Euv)


def _linear_err(M, vecs):
    """Rounding bound for ``Z @ (M @ vec)`` with ``M`` a rounded exact matrix."""
    n = M.shape[0]
    aM = np.abs(M)

    def err(Z):
        Af = np.abs(Z).astype(float)
        return tuple((2 * n + 4) * U_ROUND * (Af @ (aM @ np.abs(w))) for w in vecs)

    return err


def fourth_moment_form(L: Lattice, u, v, eps: float = 1e-10, p=None, cap: int = DEFAULT_CAP) -> FourthMomentForm:
    """Both sides of the fourth-moment inequality for ``y ~ D_{L,p}``:
    ``lhs = E[<y,u>^2 <y,v>^2]`` and ``rhs = E[<y,u>^2] E[<y,v>^2] + 2 E[<y,u><y,v>]^2``."""
    p = as_param(p)
    u, v = _directions(u, v)
    Bt = L.B_float.T
    # <B z, u> = z . (B^T u)
    return _quartic(primal_form(L, p), Bt @ u, Bt @ v, _linear_err(Bt, (u, v)), eps, cap)


def dual_fourth_moment_form(L: Lattice, u, v, eps: float = 1e-10, p=None, cap: int = DEFAULT_CAP) -> FourthMomentForm:
    """The fourth-moment inequality transported to the dual lattice.

    With ``mu`` the distribution on ``L*`` proportional to
    ``exp(-pi k^T Sigma k)``, the fourth cumulant of ``D_{L,Sigma}`` in the
    directions ``(u, u, v, v)`` equals that of ``mu`` in the directions
    ``(Sigma u, Sigma u, Sigma v, Sigma v)``, so the two inequalities are the
    same statement. The dual side keeps relative accuracy when ``D_L`` is
    nearly a continuous Gaussian and the primal sides agree to many digits.
    The directions are rounded once to floating point before the sums.
    """
    p = as_param(p)
    n = L.n
    u, v = _directions(u, v)
    Binv = np.array([[float(x) for x in row] for row in L.B_inv])
    T = Binv @ p.sigma_matrix(n)
    # dual points B^{-T} k pair with Sigma u as k . (B^{-1} Sigma u)
    ut, vt = T @ u, T @ v
    return _quartic(dual_form(L, p), ut, vt, _linear_err(np.eye(n), (ut, vt)), eps, cap)
