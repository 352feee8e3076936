import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from latgauss import Coset, GaussianParam, derivative_report, finite_difference, fourth_moment_form, integer_lattice, make_lattice, moment_report
from latgauss.moments import MomentReport, dual_fourth_moment_form

Z = integer_lattice(1)


def test_second_moment_of_z():
    m = moment_report(Coset(Z, [0]), 1.0, 1e-13)
    assert abs(m.second[0, 0] - O.SECOND_Z) <= m.err_second[0, 0] + 1e-16
    assert m.mean[0] == 0


def test_quarter_shift_moments():
    m = moment_report(Coset(Z, ["1/4"]), 1.0, 1e-13)
    assert abs(m.mean[0] - O.MEAN_Z_QUARTER) <= m.err_mean[0] + 1e-16
    assert abs(m.second[0, 0] - O.SECOND_Z_QUARTER) <= m.err_second[0, 0] + 1e-16
    assert abs(m.covariance[0, 0] - O.VAR_Z_QUARTER) <= m.err_covariance[0, 0] + 1e-16


def test_half_shift_second_moment():
    m = moment_report(Coset(Z, ["1/2"]), 1.0)
    assert abs(m.second[0, 0] - O.SECOND_Z_HALF) <= m.err_second[0, 0] + 1e-16
    assert abs(m.mean[0]) <= m.err_mean[0] + 1e-16


def test_shift_representative_does_not_matter():
    a = moment_report(Coset(Z, ["1/4"]), 1.0)
    b = moment_report(Coset(Z, ["9/4"]), 1.0)
    assert np.allclose(a.mean, b.mean, atol=1e-12)


def test_far_coset_does_not_underflow():
    m = moment_report(Coset(make_lattice([[5]]), ["12/5"]), 0.3)
    assert np.all(np.isfinite(m.second))
    # the point 12/5 carries all but ~e^{-pi (2.6^2 - 2.4^2) / 0.09} of the mass
    assert abs(m.second[0, 0] - 5.76) <= m.err_second[0, 0] + 1e-14
    assert abs(m.covariance[0, 0]) <= m.err_covariance[0, 0]


def test_json_round_trip():
    m = moment_report(Coset(make_lattice([[1, 1], [0, 2]]), ["1/3", 0]), 1.3)
    back = MomentReport.from_json(m.to_json())
    assert np.array_equal(back.covariance, m.covariance)


def test_gradient_anchor():
    r = derivative_report(Z, 1.0, ["1/4"], 1e-13)
    assert abs(r.grad[0] - O.GRAD_F_QUARTER) <= r.err_grad[0] + 1e-15


def test_hessian_at_origin_is_minus_pi():
    r = derivative_report(Z, 1.0, None, 1e-13)
    assert abs(r.hess_over_f[0, 0] + math.pi) <= 1e-9
    assert r.grad[0] == 0


@pytest.mark.parametrize("rows, x, s", [
    ([[1, 0], [1, 2]], ["1/3", "1/7"], 1.0),
    ([[2, 1, 0], [0, 1, 1], [1, 0, 2]], ["1/5", 0, "1/2"], 1.5),
    ([[3]], ["1/3"], 0.8),
])
def test_finite_differences(rows, x, s):
    L = make_lattice(rows)
    r = derivative_report(L, s, x, 1e-13)
    g, _ = finite_difference(L, s, x, h=1e-5)
    _, H = finite_difference(L, s, x, h=3e-4)
    assert np.allclose(g, r.grad, rtol=1e-6, atol=1e-9)
    assert np.allclose(H, r.hess, rtol=1e-4, atol=1e-7)


def test_sigma_derivatives_match_fd():
    L = make_lattice([[1, 0], [0, 1]])
    p = GaussianParam.matrix([[1.2, 0.3], [0.3, 0.7]])
    r = derivative_report(L, p, ["1/4", "1/3"], 1e-13)
    g, H = finite_difference(L, p, ["1/4", "1/3"], h=3e-4)
    assert np.allclose(g, r.grad, atol=1e-6)
    assert np.allclose(H, r.hess, atol=1e-6)


def test_kurtosis_anchor():
    fm = fourth_moment_form(Z, [1.0], [1.0], 1e-13)
    assert abs(fm.lhs.value - O.FOURTH_Z) <= fm.lhs.err + 1e-16
    # with u = v the right side is 3 E[y^2]^2
    assert abs(fm.rhs.value - 3 * O.SECOND_Z**2) <= fm.rhs.err + 1e-16
    assert fm.lhs.value / O.SECOND_Z**2 == pytest.approx(O.KURTOSIS_Z, rel=1e-10)


@pytest.mark.parametrize("s, gap", [(1.0, 0.0606568), (2.0, 0.00178547), (4.0, 1.9386e-17)])
def test_primal_and_dual_fourth_moment_gaps(s, gap):
    # both sides scaled by s^4 so gaps compare across widths
    p = fourth_moment_form(Z, [1.0], [1.0], 1e-14, s)
    d = dual_fourth_moment_form(Z, [1.0], [1.0], 1e-14, s)
    dgap = d.lhs.value - d.rhs.value
    assert dgap == pytest.approx(gap, rel=1e-4)
    if s < 4:
        assert p.lhs.value - p.rhs.value == pytest.approx(dgap, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4).filter(lambda a: a[0] * a[3] != a[1] * a[2]),
       st.lists(st.floats(-2, 2), min_size=4, max_size=4).filter(lambda u: abs(u[0]) + abs(u[1]) > 0.1 and abs(u[2]) + abs(u[3]) > 0.1),
       st.floats(0.6, 2.0))
def test_fourth_cumulant_identity(a, uv, s):
    L = make_lattice([a[:2], a[2:]])
    u, v = uv[:2], uv[2:]
    p = fourth_moment_form(L, u, v, 1e-12, s)
    d = dual_fourth_moment_form(L, u, v, 1e-12, s)
    gp, gd = p.lhs.value - p.rhs.value, d.lhs.value - d.rhs.value
    slack = p.lhs.err + p.rhs.err + d.lhs.err + d.rhs.err
    assert abs(gp - gd) <= slack + 1e-9 * max(abs(gp), 1e-300)
