"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

import oracles as O
from latgauss import (
    Coset,
    Status,
    check_covariance_domination,
    check_fourth_moment,
    check_hessian_domination,
    check_monotone_s,
    check_monotone_sigma,
    check_positive_correlation,
    check_sublattice_monotone,
    derivative_report,
    dual_mass,
    empirical_moments,
    finite_difference,
    fourth_moment_form,
    integer_lattice,
    make_lattice,
    mass,
    moment_report,
    sample,
    sublattice,
    theta_split_identity,
)
from latgauss.campaign import InstanceEnsemble, run_campaign
from latgauss.cli import main
from latgauss.mass import log_mass
from latgauss.sampler import goodness_of_fit

EPS = 1e-10
Z = integer_lattice(1)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def instances(seed, count):
    e = InstanceEnsemble(seed=seed)
    return [e.instance(t) for t in range(count)]


def test_01_split_identity(report):
    t0 = time.perf_counter()
    bad = [i for i, I in enumerate(instances(101, 1000)) if not theta_split_identity(I.L, I.x, I.y, EPS, I.param).agrees]
    dt = time.perf_counter() - t0
    report(1, not bad and dt < 60, f"split identity: {len(bad)} mismatches in 1000, {dt:.1f}s (limit 60s)")


def test_02_main_campaign(report):
    t0 = time.perf_counter()
    s = run_campaign(InstanceEnsemble(seed=102), 10_000, ["main"], EPS)
    dt = time.perf_counter() - t0
    v, rate = s.total(Status.VIOLATED), s.inconclusive_rate("main")
    ok = v == 0 and rate < 0.01 and not s.errors and dt < 300
    report(2, ok, f"main inequality: {v} violated, inconclusive {rate:.2%}, {len(s.errors)} errors, {dt:.0f}s (limit 300s)")


def test_03_corollaries(report):
    s = run_campaign(InstanceEnsemble(seed=102), 10_000, ["corollaries"], EPS)
    v = s.total(Status.VIOLATED)
    worst = max(s.inconclusive_rate(k) for k in s.counts)
    report(3, v == 0 and not s.errors, f"corollaries 2a-2e: {v} violated, {len(s.errors)} errors, worst inconclusive {worst:.2%}")


def test_04_poisson(report):
    bad = 0
    for I in instances(104, 1000):
        c = Coset(I.L, I.x)
        a, b = mass(c, I.param, EPS), dual_mass(c, I.param, EPS)
        bad += abs(a.value - b.value) > a.err + b.err
    anchor = mass(Coset(Z, ["1/2"]), 1.0, 1e-12)
    anchor_ok = abs(anchor.value - O.RHO_Z_HALF) <= 1e-12 and anchor.err <= 1e-12
    report(4, bad == 0 and anchor_ok, f"Poisson: {bad} disagreements in 1000; rho(Z+1/2) = {anchor.value:.15f} (oracle {O.RHO_Z_HALF:.15f})")


def test_05_derivatives(report):
    worst_g = worst_h = 0.0
    for I in instances(105, 200):
        L, p, s = I.L, I.param, I.param.s
        r = derivative_report(L, p, I.x, 1e-13)
        P = np.linalg.norm(p.precision(L.n), 2)
        x0 = np.array([float(v) for v in I.x])
        base = log_mass(Coset(L, I.x), p, 1e-15).value

        def ratio(v):
            # f(v) / f(x) with full relative accuracy even where f is tiny
            return math.exp(log_mass(Coset(L, v.tolist()), p, 1e-15).value - base)

        g, _ = finite_difference(L, p, x0, h=1e-5 * s, func=ratio)
        _, H = finite_difference(L, p, x0, h=3e-4 * s, func=ratio)
        worst_g = max(worst_g, np.max(np.abs(g - r.grad_over_f)) / max(np.max(np.abs(r.grad_over_f)), 1e-3 * math.sqrt(P)))
        worst_h = max(worst_h, np.max(np.abs(H - r.hess_over_f)) / max(np.max(np.abs(r.hess_over_f)), 1e-3 * P))
    anchor = derivative_report(Z, 1.0, None, 1e-13).hess_over_f[0, 0]
    ok = worst_g <= 1e-5 and worst_h <= 1e-4 and abs(anchor + math.pi) <= 1e-9
    report(5, ok, f"finite differences: grad {worst_g:.2e} (<=1e-5), Hessian {worst_h:.2e} (<=1e-4); Hf_Z(0)/f + pi = {anchor + math.pi:.1e}")


def test_06_psd(report):
    counts = {"covariance": 0, "hessian": 0}
    for I in instances(106, 1000):
        counts["covariance"] += check_covariance_domination(I.L, I.x, EPS, I.param).status is not Status.HOLDS
        counts["hessian"] += check_hessian_domination(I.L, I.x, EPS, I.param).status is not Status.HOLDS
    m = moment_report(Coset(Z, ["1/2"]), 1.0)
    anchor = m.second[0, 0]
    ok = not any(counts.values()) and anchor - m.err_second[0, 0] >= 1 / (4 * math.pi) and abs(anchor - O.SECOND_Z_HALF) <= 1e-9
    report(6, ok, f"PSD failures {counts} in 1000 each; E_(Z+1/2)[w^2] = {anchor:.5f} >= 1/(4pi) = {1 / (4 * math.pi):.5f}")


def test_07_fourth_moment(report):
    bad = sum(check_fourth_moment(I.L, I.u, I.v, EPS, I.param).status is not Status.HOLDS for I in instances(107, 1000))
    fm = fourth_moment_form(Z, [1.0], [1.0], 1e-13)
    kurt = fm.lhs.value / (fm.rhs.value / 3)
    ok = bad == 0 and abs(kurt - O.KURTOSIS_Z) < 1e-8 and kurt >= 3
    report(7, ok, f"fourth moment: {bad} not HOLDS in 1000; kurtosis of D_Z = {kurt:.4f}")


def test_08_monotonicity(report, capsys):
    bad = {"s": 0, "sigma": 0, "sublattice": 0}
    for I in instances(108, 1000):
        bad["s"] += check_monotone_s(I.L, I.x, I.s_grid, EPS).status is not Status.HOLDS
        bad["sigma"] += check_monotone_sigma(I.L, I.x, I.sigma_small, I.sigma_big, EPS).status is not Status.HOLDS
        bad["sublattice"] += check_sublattice_monotone(I.L, I.M, I.x, EPS, I.param).status is not Status.HOLDS
    xs = [round(0.1 * k, 1) for k in range(1, 10)]
    widths = [0.5, 0.75, 1.0, 1.5, 2.0]
    main(["curves", "--x-grid", ",".join(map(str, xs)), "--s-list", ",".join(map(str, widths))])
    rows = [tuple(map(float, r.split(","))) for r in capsys.readouterr().out.strip().split("\n")[1:]]
    table = {(x, s): (f - e, f + e) for x, s, f, e in rows}
    unordered = [(x, a, b) for x in xs for a, b in zip(widths, widths[1:]) if not table[(x, a)][1] < table[(x, b)][0]]
    ok = not any(bad.values()) and not unordered
    report(8, ok, f"monotonicity: not HOLDS {bad} in 1000 each; curve pairs out of strict order: {len(unordered)} of {len(xs) * 4}")


def test_09_correlation(report):
    bad = sum(check_positive_correlation(I.L, I.M, I.N, EPS, I.param).status is not Status.HOLDS for I in instances(109, 1000))
    v = check_positive_correlation(Z, sublattice(Z, [[2]]), sublattice(Z, [[3]]))
    r2 = O.RHO_Z**2
    lhs, rhs = (v.lhs.lo + v.lhs.hi) / 2 / r2, (v.rhs.lo + v.rhs.hi) / 2 / r2
    ok = bad == 0 and v.status is Status.HOLDS and abs(lhs - O.CORR_LHS) < 1e-9 and abs(rhs - O.CORR_RHS) < 1e-9
    report(9, ok, f"correlation: {bad} not HOLDS in 1000; (Z, 2Z, 3Z): {lhs:.5f} <= {rhs:.5f}")


def test_10_sampler(report):
    t0 = time.perf_counter()
    notes, ok = [], True
    for L, x, s in [(Z, [0], 1.0), (integer_lattice(2), [0, 0], 10.0), (Z, ["1/2"], 1.0)]:
        b = sample(Coset(L, x), s, 100_000, seed=110)
        _, dof, pvalue = goodness_of_fit(b)
        e, m = empirical_moments(b), moment_report(Coset(L, x), s)
        z = float(np.max(np.abs(e.covariance - m.covariance) / e.err_covariance))
        ok &= pvalue > 1e-3 and z <= 5
        notes.append(f"n={L.n} s={s:g}: p={pvalue:.3f} cov z={z:.2f}")
    dt = time.perf_counter() - t0
    report(10, ok and dt < 60, "sampler: " + "; ".join(notes) + f"; {dt:.1f}s (limit 60s)")
