import numpy as np
import pytest

import oracles as O
from latgauss import Coset, empirical_moments, integer_lattice, make_lattice, moment_report, sample
from latgauss.sampler import alias_table, goodness_of_fit, read_csv, truncated_support

Z = integer_lattice(1)


def test_support_probabilities_match_oracles():
    sup = truncated_support(Coset(Z, [0]), 1.0)
    prob = dict(zip(sup.coeffs[:, 0].tolist(), sup.prob))
    assert prob[0] == pytest.approx(O.PR_ZERO, abs=1e-12)
    assert prob[1] == pytest.approx(O.PR_ONE, abs=1e-12)
    half = truncated_support(Coset(Z, ["1/2"]), 1.0)
    top = sorted(half.prob)[-2:]
    assert top == pytest.approx([O.PR_HALF, O.PR_HALF], abs=1e-12)
    assert sup.tv_bound <= 1e-12


@pytest.mark.parametrize("p", [[0.5, 0.5], [0.1, 0.2, 0.7], [1.0], [0.25] * 4 + [0.0]])
def test_alias_table_reproduces_probabilities(p):
    accept, alias = alias_table(p)
    m = len(p)
    implied = accept / m
    for i in range(m):
        implied[alias[i]] += (1 - accept[i]) / m
    assert np.allclose(implied, p)


def test_seed_determinism():
    c = Coset(make_lattice([[1, 1], [0, 2]]), ["1/3", 0])
    a = sample(c, 1.5, 500, seed=11)
    b = sample(c, 1.5, 500, seed=11)
    d = sample(c, 1.5, 500, seed=12)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv() != d.to_csv()


def test_samples_lie_on_the_coset():
    L = make_lattice([[2, 1], [0, 3]])
    c = Coset(L, ["1/2", "1/3"])
    b = sample(c, 2.0, 200, seed=3)
    recon = b.coeffs @ L.B_float.T + np.array([0.5, 1 / 3])
    assert np.allclose(recon, b.samples)


def test_csv_round_trip():
    b = sample(Coset(Z, ["1/4"]), 1.0, 50, seed=2)
    header, rows = read_csv(b.to_csv())
    assert header["seed"] == 2 and header["shift"] == ["1/4"]
    assert np.array_equal(rows, b.samples)


@pytest.mark.parametrize("kw", [dict(count=0), dict(tv_eps=0.0), dict(tv_eps=1.0)])
def test_bad_arguments(kw):
    with pytest.raises(ValueError):
        sample(Coset(Z, [0]), 1.0, **{"count": 10, **kw})


@pytest.mark.parametrize("L, x, s", [
    (Z, [0], 1.0),
    (make_lattice([[1, 0], [1, 2]]), ["1/2", 0], 1.2),
    (make_lattice([[5]]), ["12/5"], 1.0),
])
def test_goodness_of_fit(L, x, s):
    b = sample(Coset(L, x), s, 20000, seed=4)
    _, dof, pvalue = goodness_of_fit(b)
    assert pvalue > 1e-3
    m, e = moment_report(Coset(L, x), s), empirical_moments(b)
    assert np.all(np.abs(e.mean - m.mean) <= 5 * e.err_mean + 1e-12)


def test_goodness_of_fit_detects_a_wrong_width():
    b = sample(Coset(Z, [0]), 1.3, 20000, seed=4)
    wrong = sample(Coset(Z, [0]), 1.0, 1, seed=4)
    mixed = type(b)(b.coset, wrong.param, b.seed, b.count, b.tv_bound, b.samples, b.coeffs, wrong.support)
    assert goodness_of_fit(mixed)[2] < 1e-6
