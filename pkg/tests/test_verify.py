import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from latgauss import (
    Coset,
    Interval,
    Status,
    check_corollaries,
    check_covariance_domination,
    check_fourth_moment,
    check_hessian_domination,
    check_main_inequality,
    check_monotone_s,
    check_monotone_sigma,
    check_positive_correlation,
    check_sublattice_monotone,
    integer_lattice,
    make_lattice,
    mass,
    sublattice,
)
from latgauss.errors import NotComparable
from latgauss.io import dumps
from latgauss.verify import _judge, _product_claim, coset_key, with_tightening

Z = integer_lattice(1)
Z2 = integer_lattice(2)


@pytest.mark.parametrize("lhs, rhs, status", [
    ((0.0, 1.0), (1.0, 2.0), Status.HOLDS),
    ((0.0, 1.5), (1.0, 2.0), Status.INCONCLUSIVE),
    ((2.5, 3.0), (1.0, 2.0), Status.VIOLATED),
    ((1.0, 1.0), (1.0, 1.0), Status.HOLDS),
])
def test_judge(lhs, rhs, status):
    assert _judge(Interval(*lhs), Interval(*rhs)) is status


def test_interval_arithmetic_is_outward():
    a = Interval.point(0.1) + Interval.point(0.2)
    assert a.lo < 0.1 + 0.2 < a.hi
    m = Interval(-1.0, 2.0) * Interval(3.0, 4.0)
    assert m.lo <= -4.0 and m.hi >= 8.0
    assert Interval(-3.0, 2.0).square().lo == 0.0


def test_coset_key_symmetry():
    L = make_lattice([[2, 1], [0, 3]])
    assert coset_key(L, ["1/3", "1/2"]) == coset_key(L, ["-1/3", "-1/2"])
    assert coset_key(L, ["1/3", 0]) == coset_key(L, ["7/3", 1])
    assert coset_key(L, [0, 0]) == coset_key(make_lattice([[2, 4], [0, 3]]), [0, 0])


def test_false_claim_is_violated():
    # rho(Z) <= rho(Z + 1/2) is false
    v = _product_claim("false", [("a", [0])], [("b", ["1/2"])], lambda z: mass(Coset(Z, z), 1.0), None, 1e-10, {})
    assert v.status is Status.VIOLATED and v.margin < 0


def test_tightening_retries():
    calls = []

    def compute(e):
        calls.append(e)
        return type("V", (), {"status": Status.INCONCLUSIVE if len(calls) < 3 else Status.HOLDS})()

    assert with_tightening(compute, 1e-10).status is Status.HOLDS
    assert calls == pytest.approx([1e-10, 1e-12, 1e-14])


def test_main_anchor():
    v = check_main_inequality(Z, ["1/4"], ["1/3"])
    assert v.status is Status.HOLDS and v.margin > 0


def test_main_equality_when_y_in_lattice():
    v = check_main_inequality(Z2, ["1/3", "1/5"], [1, -2])
    assert v.status is Status.HOLDS and v.form == "cancelled"


def test_main_near_equality_at_large_width():
    # every factor is 1 - O(e^{-pi s^2}) and the direct products overlap
    v = check_main_inequality(Z, ["1/4"], ["1/3"], 5.0)
    assert v.status is Status.HOLDS
    assert v.form in {"log", "split"}


@pytest.mark.parametrize("L, x, y, s", [
    (Z, ["1/4"], ["1/3"], 1.0),
    (Z, ["1/2"], ["1/2"], 1.0),
    (make_lattice([[1, 1], [0, 2]]), ["1/3", "1/7"], ["1/2", 0], 1.3),
    (make_lattice([[2, 0, 1], [0, 1, 1], [1, 1, 3]]), ["1/5", 0, "1/2"], [0, "1/3", "1/3"], 0.8),
])
def test_corollaries_hold(L, x, y, s):
    vs = check_corollaries(L, x, y, 1e-10, s)
    assert [v.name for v in vs] == ["2a_periodic", "2b_doubling", "2c_additive", "2d_strong_cos", "2e_cos_correlation"]
    assert all(v.status is Status.HOLDS for v in vs), [(v.name, v.status) for v in vs]


def test_psd_checks_anchor():
    v = check_covariance_domination(Z, ["1/2"])
    # Var_{Z+1/2}[w] = E[w^2] = 0.25373 against E_Z[w^2] = 1/(4 pi)
    assert v.status is Status.HOLDS
    assert v.rhs.lo == pytest.approx(O.SECOND_Z_HALF - O.SECOND_Z, abs=1e-9)
    assert check_hessian_domination(Z, ["1/2"]).status is Status.HOLDS
    assert check_covariance_domination(Z, [0]).status is Status.HOLDS


def test_psd_checks_anisotropic():
    L = make_lattice([[1, 2, 0], [0, 1, 3], [1, 0, 1]])
    p = np.array([[1.5, 0.2, 0.0], [0.2, 1.0, 0.1], [0.0, 0.1, 0.8]])
    assert check_covariance_domination(L, ["1/3", 0, "1/4"], 1e-10, p).status is Status.HOLDS
    assert check_hessian_domination(L, ["1/3", 0, "1/4"], 1e-10, p).status is Status.HOLDS


def test_fourth_moment():
    assert check_fourth_moment(Z, [1.0], [1.0]).status is Status.HOLDS
    # nearly continuous: the inequality is tight to ~1e-17 and only the dual form separates it
    v = check_fourth_moment(Z2, [1.0, 0.3], [-0.2, 1.0], 1e-10, 3.0)
    assert v.status is Status.HOLDS


def test_monotone_s():
    v = check_monotone_s(Z, ["1/2"], [0.5, 1.0, 2.0])
    assert v.status is Status.HOLDS
    assert len(v.details) == 2 + 3
    with pytest.raises(ValueError):
        check_monotone_s(Z, ["1/2"], [1.0, 1.0])


def test_monotone_sigma():
    small = np.diag([0.5, 1.0])
    big = np.array([[1.0, 0.2], [0.2, 1.5]])
    assert check_monotone_sigma(Z2, ["1/2", "1/3"], small, big).status is Status.HOLDS
    with pytest.raises(NotComparable):
        check_monotone_sigma(Z2, ["1/2", "1/3"], big, small)


def test_sublattice_anchor():
    v = check_sublattice_monotone(Z, sublattice(Z, [[2]]), ["1/2"])
    assert v.status is Status.HOLDS
    assert v.lhs.lo <= O.F_2Z_HALF <= v.lhs.hi
    assert v.rhs.lo <= O.F_Z_HALF <= v.rhs.hi


def test_correlation_anchor():
    v = check_positive_correlation(Z, sublattice(Z, [[2]]), sublattice(Z, [[3]]))
    assert v.status is Status.HOLDS
    # normalised by rho(Z)^2 both sides are the oracle probabilities
    r2 = O.RHO_Z**2
    assert v.lhs.lo / r2 <= O.CORR_LHS * (1 + 1e-9) and v.lhs.hi / r2 >= O.CORR_LHS * (1 - 1e-9)
    assert v.rhs.lo / r2 <= O.CORR_RHS * (1 + 1e-9) and v.rhs.hi / r2 >= O.CORR_RHS * (1 - 1e-9)


def test_correlation_equality_from_orthogonal_split():
    v = check_positive_correlation(Z2, sublattice(Z2, [[2, 0], [0, 1]]), sublattice(Z2, [[1, 0], [0, 2]]))
    assert v.status is Status.HOLDS and v.form == "orthogonal-split"


def test_correlation_trivial_sublattice():
    v = check_positive_correlation(Z2, sublattice(Z2, [[1, 0], [0, 1]]), sublattice(Z2, [[3, 1], [0, 2]]))
    assert v.status is Status.HOLDS and v.form == "cancelled"


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4).filter(lambda a: a[0] * a[3] != a[1] * a[2]),
       st.tuples(st.fractions(0, 1, max_denominator=7), st.fractions(0, 1, max_denominator=7)),
       st.tuples(st.fractions(0, 1, max_denominator=7), st.fractions(0, 1, max_denominator=7)),
       st.floats(0.5, 3.0))
def test_main_inequality_never_violated(a, x, y, s):
    # exact rational shifts include lattice points and deep holes
    v = check_main_inequality(make_lattice([a[:2], a[2:]]), list(x), list(y), s)
    assert v.status is not Status.VIOLATED


def test_verdict_serialises():
    v = check_main_inequality(Z, ["1/4"], ["1/3"])
    text = dumps(v)
    assert '"status": "HOLDS"' in text and '"basis": [[1]]' in text


def test_product_structure_gives_a_zero_eigenvalue():
    # the second coordinate is unshifted, so its diagonal entry of the difference vanishes
    v = check_covariance_domination(Z2, ["1/4", 0])
    assert v.status is Status.HOLDS
    assert abs(v.rhs.lo) <= 1e-9
    assert check_hessian_domination(Z2, ["1/4", 0]).status is Status.HOLDS


@pytest.mark.parametrize("x, lhs, rhs", [
    ("1/4", O.F_Z_QUARTER**4, O.F_Z_HALF),
    ("1/2", 0.5, 1.0),
])
def test_periodic_form_anchors(x, lhs, rhs):
    v = check_corollaries(Z, [x], [x])[0]
    assert v.status is Status.HOLDS
    assert v.lhs.lo - 1e-12 <= lhs <= v.lhs.hi + 1e-12
    assert v.rhs.lo - 1e-12 <= rhs <= v.rhs.hi + 1e-12


def test_main_identity_case():
    v = check_main_inequality(Z2, [0, 0], [0, 0])
    assert v.status is Status.HOLDS and v.margin >= 0
