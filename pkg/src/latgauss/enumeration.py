"""Vectorised Fincke-Pohst enumeration in coefficient space.

Everything here works on a positive-definite quadratic form ``G = U^T U``
(``U`` upper triangular) and a real shift ``t``: we list the integer vectors
``z`` with ``||U (z + t)||^2 <= R^2``. The tree is expanded breadth-first one
coordinate at a time (last coordinate first) so that every level is a handful
of numpy operations instead of a Python loop per node.
"""
import math

import numpy as np

from .errors import BudgetExceeded

DEFAULT_CAP = 10**7


def upper_cholesky(gram):
    """Upper-triangular ``U`` with ``U.T @ U == gram``."""
    return np.linalg.cholesky(np.asarray(gram, dtype=float)).T


def predicted_count(U, radius):
    """Gaussian-heuristic point count of a radius-``radius`` ball, plus the
    number of nodes forced by the shortest Gram-Schmidt direction."""
    n = U.shape[0]
    vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1) * radius**n
    det = float(np.prod(np.diag(U)))
    # each level contributes at least (2R/g_i + 1) candidates along its axis
    axis = float(np.prod(2 * radius / np.diag(U) + 1))
    return min(vol / det + 1, axis)


def fincke_pohst(U, t, radius, cap=DEFAULT_CAP):
    """Integer ``z`` with ``||U (z + t)|| <= radius``.

    Returns ``(Z, q)`` where ``Z`` is an ``(m, n)`` int64 array and ``q`` the
    floating squared norms, sorted by ``q`` and then lexicographically by
    ``Z`` so the order is reproducible. Raises :class:`BudgetExceeded` when the
    predicted or actual node count at any level passes ``cap``.
    """
    U = np.asarray(U, dtype=float)
    t = np.asarray(t, dtype=float)
    n = U.shape[0]
    r2 = float(radius) ** 2
    guess = predicted_count(U, radius)
    if guess > cap:
        raise BudgetExceeded(guess, cap)

    Z = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros((1, n))
    used = np.zeros(1)
    for i in range(n - 1, -1, -1):
        uii = U[i, i]
        rem = np.maximum(r2 - used, 0.0)
        centre = -partial[:, i] / uii - t[i]
        half = np.sqrt(rem) / uii
        lo = np.ceil(centre - half)
        hi = np.floor(centre + half)
        cnt = np.maximum(hi - lo + 1, 0).astype(np.int64)
        total = int(cnt.sum())
        if total > cap:
            raise BudgetExceeded(total, cap)
        if total == 0:
            return np.zeros((0, n), dtype=np.int64), np.zeros(0)
        idx = np.repeat(np.arange(len(cnt)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        zi = lo[idx].astype(np.int64) + offs
        zt = zi + t[i]
        y = uii * zt + partial[idx, i]
        used = used[idx] + y * y
        partial = partial[idx] + np.outer(zt, U[:, i])
        Z = np.column_stack([zi, Z[idx]])
        keep = used <= r2
        if not keep.all():
            Z, partial, used = Z[keep], partial[keep], used[keep]

    order = np.lexsort(tuple(Z[:, j] for j in range(n - 1, -1, -1)) + (used,))
    return Z[order], used[order]


def quadratic_norms(U, Z, t):
    """Squared norms ``||U (z + t)||^2`` and the magnitudes ``|| |U| |z + t| ||^2``
    used for rounding-error bounds."""
    W = Z + np.asarray(t, dtype=float)
    Y = W @ U.T
    M = np.abs(W) @ np.abs(U).T
    return np.einsum("ij,ij->i", Y, Y), np.einsum("ij,ij->i", M, M)
