import mpmath as mp
import pytest

import oracles as O
from oracles import theta_sum as T


def _close(a, b, tol=1e-15):
    return abs(mp.mpf(a) - b) <= tol * max(1, abs(b))


@pytest.mark.parametrize("frozen, fresh", [
    (O.RHO_Z, lambda: T()),
    (O.RHO_Z_HALF, lambda: T(shift=0.5)),
    (O.RHO_2Z_HALF, lambda: T(2, 0.5)),
    (O.RHO_Z_QUARTER, lambda: T(shift=0.25)),
    (O.RHO_2Z, lambda: T(2)),
    (O.F_Z_HALF, lambda: T(shift=0.5) / T()),
    (O.F_Z_HALF_S2, lambda: T(shift=0.5, s=2) / T(s=2)),
    (O.F_Z_QUARTER, lambda: T(shift=0.25) / T()),
    (O.F_2Z_HALF, lambda: T(2, 0.5) / T(2)),
    (O.SECOND_Z, lambda: T(power=2) / T()),
    (O.FOURTH_Z, lambda: T(power=4) / T()),
    (O.SECOND_Z_HALF, lambda: T(shift=0.5, power=2) / T(shift=0.5)),
    (O.MEAN_Z_QUARTER, lambda: T(shift=0.25, power=1) / T(shift=0.25)),
    (O.SECOND_Z_QUARTER, lambda: T(shift=0.25, power=2) / T(shift=0.25)),
    (O.PR_ZERO, lambda: 1 / T()),
    (O.PR_ONE, lambda: mp.exp(-mp.pi) / T()),
    (O.PR_HALF, lambda: mp.exp(-mp.pi / 4) / T(shift=0.5)),
    (O.RHO_Z_SQUARED, lambda: T() ** 2),
    (O.RHO_SQRT2_2Z, lambda: T(2, s=mp.sqrt(2))),
    (O.RHO_SQRT2_2Z_ODD, lambda: T(2, 1, s=mp.sqrt(2))),
    (O.CORR_LHS, lambda: T(2) * T(3) / T() ** 2),
    (O.CORR_RHS, lambda: T(6) / T()),
])
def test_frozen_value(frozen, fresh):
    assert _close(frozen, fresh())


def test_second_moment_closed_form():
    # sum k^2 e^{-pi k^2} / sum e^{-pi k^2} = 1/(4 pi) follows from the theta functional equation at tau = i
    assert _close(O.SECOND_Z, 1 / (4 * mp.pi), 1e-16)


def test_derived_quantities():
    assert _close(O.KURTOSIS_Z, O.FOURTH_Z / O.SECOND_Z**2, 1e-12)
    assert _close(O.VAR_Z_QUARTER, O.SECOND_Z_QUARTER - O.MEAN_Z_QUARTER**2)
    # d/dx f_Z(x) = -2 pi E_{Z+x}[w] f_Z(x)
    assert _close(O.GRAD_F_QUARTER, -2 * mp.pi * O.MEAN_Z_QUARTER * O.F_Z_QUARTER)
    # the split identity in one dimension: rho(Z)^2 = sum over Z/2Z
    assert _close(O.RHO_Z_SQUARED, O.RHO_SQRT2_2Z**2 + O.RHO_SQRT2_2Z_ODD**2)
