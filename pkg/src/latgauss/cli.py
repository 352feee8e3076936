"""Command line interface: ``latgauss {mass,f,moments,sample,verify,curves}``.

Exit codes: 0 on success, 1 when a claim is VIOLATED, a campaign misses its
threshold or a computation fails, 2 on malformed input.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import campaign as camp
from .errors import LatticeError, NotComparable
from .io import (
    InputError,
    coset_from_json,
    dumps,
    fmt_float,
    lattice_from_json,
    load_json,
    param_from_json,
    sublattice_from_json,
    vector_from_json,
)
from .mass import NotPositiveDefinite, mass, periodic_gaussian
from .moments import moment_report
from .sampler import sample
from .verify import (
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
)

CAMPAIGNS = {"default": dict(kind="integer-basis", dims=(1, 2, 3), trials=10_000)}
DEFAULT_S_LIST = (0.5, 0.75, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class JobSpec:
    """A fully parsed command; equal jobs give byte-identical output."""

    command: str
    data: dict = field(default_factory=dict)
    eps: float = 1e-10
    seed: int = 0
    fmt: str = "json"
    threads: int = 1
    options: dict = field(default_factory=dict)


def _csv_list(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"{what} must be a comma separated list of numbers") from None


def _threads(value):
    if value is None:
        value = os.environ.get("LATGAUSS_THREADS", "1")
    try:
        t = int(value)
    except ValueError:
        raise InputError(f"threads must be an integer, got {value!r}") from None
    if t < 1:
        raise InputError("threads must be at least 1")
    return t


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="inline JSON or a path to a JSON file")
    common.add_argument("--output", help="write here instead of standard output")
    common.add_argument("--eps", type=float, default=1e-10, help="absolute error target")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--threads", default=None, help="worker processes (default $LATGAUSS_THREADS or 1)")

    ap = argparse.ArgumentParser(prog="latgauss", description="Certified discrete Gaussian computations on lattices.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("mass", parents=[common], help="Gaussian mass of a lattice coset")
    sub.add_parser("f", parents=[common], help="periodic Gaussian f(x) = rho(L + x) / rho(L)")
    sub.add_parser("moments", parents=[common], help="mean, second moment and covariance")
    sp = sub.add_parser("sample", parents=[common], help="draw discrete Gaussian samples")
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--tv-eps", type=float, default=1e-12, help="total variation budget of the truncation")
    vp = sub.add_parser("verify", parents=[common], help="check the inequalities on one instance or a campaign")
    vp.add_argument("--campaign", choices=sorted(CAMPAIGNS))
    vp.add_argument("--trials", type=int)
    vp.add_argument("--kind", choices=camp.KINDS)
    vp.add_argument("--dims", help="comma separated dimensions")
    vp.add_argument("--checks", help="comma separated subset of: " + ",".join(camp.CHECKS))
    vp.add_argument("--threshold", type=float, default=0.01, help="largest tolerated INCONCLUSIVE rate")
    cp = sub.add_parser("curves", parents=[common], help="f along a line for several widths")
    cp.add_argument("--x-grid", help="comma separated grid (default 0, 0.02, ..., 1)")
    cp.add_argument("--s-list", help="comma separated widths (default 0.5,0.75,1,1.5,2)")
    return ap


def parse_job(argv=None) -> tuple[JobSpec, str | None]:
    """Job and output path from the arguments; raises :class:`InputError` on bad input."""
    a = build_parser().parse_args(argv)
    data = load_json(a.input) if a.input is not None else None
    if data is not None and not isinstance(data, dict):
        raise InputError("input must be a JSON object")
    if not (a.eps > 0 and np.isfinite(a.eps)):
        raise InputError("eps must be positive")
    opts = {}
    fmt = a.format or ("csv" if a.command in ("sample", "curves") else "json")
    if a.command == "sample":
        if a.count < 1:
            raise InputError("count must be at least 1")
        if not 0 < a.tv_eps < 1:
            raise InputError("tv-eps must lie in (0, 1)")
        opts = {"count": a.count, "tv_eps": a.tv_eps}
    elif a.command == "verify":
        if a.campaign is None and data is None:
            raise InputError("verify needs --campaign or --input")
        if a.campaign is not None and data is not None:
            raise InputError("give either --campaign or --input, not both")
        checks = [c.strip() for c in a.checks.split(",")] if a.checks else None
        bad = [c for c in checks or () if c not in camp.CHECKS]
        if bad:
            raise InputError(f"unknown checks {bad}; choose from {list(camp.CHECKS)}")
        if a.trials is not None and a.trials < 1:
            raise InputError("trials must be at least 1")
        if not 0 <= a.threshold <= 1:
            raise InputError("threshold must lie in [0, 1]")
        dims = None
        if a.dims:
            try:
                dims = tuple(int(d) for d in a.dims.split(","))
            except ValueError:
                raise InputError("dims must be comma separated integers") from None
        opts = {"campaign": a.campaign, "trials": a.trials, "kind": a.kind, "dims": dims, "checks": checks, "threshold": a.threshold}
    elif a.command == "curves":
        opts = {
            "x_grid": _csv_list(a.x_grid, "x-grid") if a.x_grid else [i / 50 for i in range(51)],
            "s_list": _csv_list(a.s_list, "s-list") if a.s_list else list(DEFAULT_S_LIST),
        }
        if not opts["x_grid"] or not opts["s_list"] or min(opts["s_list"]) <= 0:
            raise InputError("curves need a non-empty grid and positive widths")
    elif data is None:
        raise InputError(f"{a.command} needs --input")
    return JobSpec(a.command, data or {}, a.eps, a.seed, fmt, _threads(a.threads), opts), a.output


# ---------------------------------------------------------------------------
# commands: each returns (text, exit_code)


def _value_csv(cv):
    return "value,err,radius\n" + ",".join(fmt_float(v) for v in (cv.value, cv.err, cv.radius)) + "\n"


def cmd_mass(job: JobSpec):
    c, p = coset_from_json(job.data)
    cv = mass(c, p, job.eps)
    return (_value_csv(cv) if job.fmt == "csv" else dumps(cv) + "\n"), 0


def cmd_f(job: JobSpec):
    c, p = coset_from_json(job.data)
    cv = periodic_gaussian(c.lattice, p, c.shift, job.eps)
    return (_value_csv(cv) if job.fmt == "csv" else dumps(cv) + "\n"), 0


def cmd_moments(job: JobSpec):
    c, p = coset_from_json(job.data)
    m = moment_report(c, p, job.eps)
    if job.fmt == "csv":
        rows = ["quantity,i,j,value,err"]
        for name in ("mean", "second", "covariance"):
            val, err = getattr(m, name), getattr(m, "err_" + name)
            for idx in np.ndindex(val.shape):
                i, j = (idx + (0,))[:2] if val.ndim == 1 else idx
                rows.append(f"{name},{i},{j if val.ndim == 2 else ''},{fmt_float(val[idx])},{fmt_float(err[idx])}")
        return "\n".join(rows) + "\n", 0
    return dumps(m) + "\n", 0


def cmd_sample(job: JobSpec):
    c, p = coset_from_json(job.data)
    b = sample(c, p, job.options["count"], job.seed, job.options["tv_eps"])
    if job.fmt == "csv":
        return b.to_csv(), 0
    return dumps({"header": b.header(), "samples": b.samples}) + "\n", 0


def _instance_checks(d, L, p, eps):
    """Checks runnable on a single user-supplied instance, in a fixed order."""
    n = L.n
    vec = lambda k: vector_from_json(d[k], n, k)  # noqa: E731
    x = vec("x") if "x" in d else vec("shift") if "shift" in d else None
    y = vec("y") if "y" in d else None
    out = {}
    if x is not None and y is not None:
        out["main"] = lambda: [check_main_inequality(L, x, y, p, eps)]
        out["corollaries"] = lambda: check_corollaries(L, x, y, eps, p)
    if x is not None:
        out["hessian"] = lambda: [check_hessian_domination(L, x, eps, p)]
        out["covariance"] = lambda: [check_covariance_domination(L, x, eps, p)]
    if "u" in d and "v" in d:
        u = np.array([float(t) for t in vec("u")])
        v = np.array([float(t) for t in vec("v")])
        out["fourth_moment"] = lambda: [check_fourth_moment(L, u, v, eps, p)]
    if x is not None and "s_grid" in d:
        grid = [float(param_from_json(s).s) for s in d["s_grid"]]
        out["monotone_s"] = lambda: [check_monotone_s(L, x, grid, eps)]
    if x is not None and "sigma_small" in d and "sigma_big" in d:
        small = np.array(param_from_json({"sigma": d["sigma_small"]}).sigma)
        big = np.array(param_from_json({"sigma": d["sigma_big"]}).sigma)
        out["monotone_sigma"] = lambda: [check_monotone_sigma(L, x, small, big, eps)]
    M = sublattice_from_json(L, d["M"], "M") if "M" in d else None
    N = sublattice_from_json(L, d["N"], "N") if "N" in d else None
    if M is not None and x is not None:
        out["sublattice"] = lambda: [check_sublattice_monotone(L, M, x, eps, p)]
    if M is not None and N is not None:
        out["correlation"] = lambda: [check_positive_correlation(L, M, N, eps, p)]
    return out


def cmd_verify(job: JobSpec):
    o = job.options
    if o["campaign"] is not None:
        base = CAMPAIGNS[o["campaign"]]
        e = camp.InstanceEnsemble(kind=o["kind"] or base["kind"], dims=o["dims"] or base["dims"], seed=job.seed)
        s = camp.run_campaign(e, o["trials"] or base["trials"], o["checks"], job.eps, job.threads)
        ok = s.ok(o["threshold"])
        return dumps({**s.to_json(), "threshold": o["threshold"], "ok": ok}) + "\n", 0 if ok else 1
    d = job.data
    L = lattice_from_json(d)
    p = param_from_json(d.get("param"))
    available = _instance_checks(d, L, p, job.eps)
    names = o["checks"] or list(available)
    missing = [c for c in names if c not in available]
    if missing or not names:
        raise InputError(f"input lacks the fields needed for {missing or 'any check'}")
    verdicts = [v for name in names for v in available[name]()]
    statuses = {v.status for v in verdicts}
    return dumps({"verdicts": verdicts}) + "\n", 1 if Status.VIOLATED in statuses else 0


def cmd_curves(job: JobSpec):
    d = job.data or {"basis": [[1]]}
    L = lattice_from_json(d)
    direction = vector_from_json(d["direction"], L.n, "direction") if "direction" in d else L.vectors[0]
    rows = ["x,s,f,err"]
    for s in job.options["s_list"]:
        for t in job.options["x_grid"]:
            x = tuple(c * Fraction(t) for c in direction)
            cv = periodic_gaussian(L, s, x, job.eps)
            rows.append(",".join(fmt_float(v) for v in (t, s, cv.value, cv.err)))
    return "\n".join(rows) + "\n", 0


COMMANDS = {"mass": cmd_mass, "f": cmd_f, "moments": cmd_moments, "sample": cmd_sample, "verify": cmd_verify, "curves": cmd_curves}
INPUT_ERRORS = (InputError, LatticeError, NotPositiveDefinite, NotComparable, KeyError, TypeError, ValueError)


def run(job: JobSpec):
    """Text and exit code for a parsed job."""
    return COMMANDS[job.command](job)


def main(argv=None) -> int:
    try:
        job, output = parse_job(argv)
    except InputError as exc:
        print(f"latgauss: error: {exc}", file=sys.stderr)
        return 2
    try:
        text, code = run(job)
    except INPUT_ERRORS as exc:
        print(f"latgauss: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical budget, convergence, ...
        print(f"latgauss: {job.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == 1:
        print("latgauss: a claim was violated or the campaign missed its threshold", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
