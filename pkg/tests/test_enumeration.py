import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latgauss import Coset, enumerate_points, make_lattice
from latgauss.enumeration import fincke_pohst, upper_cholesky
from latgauss.errors import BudgetExceeded


def brute_force(B, t, R, box=8):
    n = B.shape[0]
    out = set()
    for z in itertools.product(range(-box, box + 1), repeat=n):
        w = B @ (np.array(z) + t)
        if w @ w <= R * R:
            out.add(z)
    return out


bases = st.lists(st.integers(-3, 3), min_size=4, max_size=4).filter(
    lambda a: abs(a[0] * a[3] - a[1] * a[2]) >= 1
)


@settings(max_examples=60, deadline=None)
@given(bases, st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)), st.floats(0.1, 3.0))
def test_matches_brute_force(a, t, R):
    B = np.array([[a[0], a[2]], [a[1], a[3]]], dtype=float)  # columns are basis vectors
    U = upper_cholesky(B.T @ B)
    Z, q = fincke_pohst(U, np.array(t), R)
    got = {tuple(int(v) for v in z) for z in Z}
    # a 3x3 basis with |det| >= 1 keeps the ball inside the box
    assert got == brute_force(B, np.array(t), R, box=20) or any(
        abs(np.linalg.norm(B @ (np.array(z) + t)) - R) < 1e-9 for z in got ^ brute_force(B, np.array(t), R, box=20)
    )
    assert np.all(np.diff(q) >= 0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_integer_lattice_counts(n):
    L = make_lattice(np.eye(n, dtype=int).tolist())
    pts = enumerate_points(Coset(L, [0] * n), 2.0)
    expected = sum(1 for z in itertools.product(range(-2, 3), repeat=n) if sum(v * v for v in z) <= 4)
    assert len(pts) == expected


def test_boundary_ties_decided_exactly():
    # radius exactly 5 on Z^2: (3, 4) and friends sit on the sphere
    L = make_lattice([[1, 0], [0, 1]])
    pts = enumerate_points(Coset(L, [0, 0]), 5.0)
    norms = {int(round(v)) for v in pts.norms2}
    assert 25 in norms and max(norms) == 25


def test_points_and_coefficients_agree():
    L = make_lattice([[2, 1], [0, 3]])
    c = Coset(L, ["7/4", "-5/3"])
    pts = enumerate_points(c, 4.0)
    recon = pts.coeffs @ L.B_float.T + np.array([float(v) for v in c.shift])
    assert np.allclose(recon, pts.points)


def test_budget():
    L = make_lattice([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(BudgetExceeded):
        enumerate_points(Coset(L, [0, 0, 0]), 50.0, cap=1000)
    with pytest.raises(ValueError):
        enumerate_points(Coset(L, [0, 0, 0]), -1.0)
