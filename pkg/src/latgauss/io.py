"""JSON readers and writers.

Lattice entries are integers, decimal strings or ``"p/q"`` strings and are
read exactly; floats are written with 17 significant digits so binary64
values survive a round trip.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .lattice import Coset, Lattice, as_fraction, make_lattice, sublattice
from .mass import CertifiedValue, GaussianParam
from .moments import MomentReport


class InputError(ValueError):
    """Malformed job input."""


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _encode(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return fmt_float(v) if math.isfinite(v) else "null"
    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "to_json"):
        return _encode(obj.to_json())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """Compact JSON with 17-significant-digit floats (non-finite floats become null)."""
    return _encode(obj)


def _exact(v):
    return str(v) if v.denominator != 1 else v.numerator


def lattice_to_json(L: Lattice) -> dict:
    return {"basis": [[_exact(v) for v in row] for row in L.vectors]}


def _fraction(v, what):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise InputError(f"{what}: expected a number or a rational string, got {v!r}")
    try:
        return as_fraction(v)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{what}: cannot read {v!r} ({exc})") from None


def lattice_from_json(d) -> Lattice:
    if not isinstance(d, dict) or "basis" not in d:
        raise InputError('expected an object with a "basis" field')
    rows = d["basis"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("basis must be a non-empty list of rows")
    return make_lattice([[_fraction(v, "basis entry") for v in r] for r in rows])


def vector_from_json(v, n: int, what: str = "vector"):
    if isinstance(v, (int, float, str)) and n == 1:
        v = [v]
    if not isinstance(v, list) or len(v) != n:
        raise InputError(f"{what} must be a list of {n} numbers")
    return tuple(_fraction(x, what) for x in v)


def param_from_json(d) -> GaussianParam:
    if d is None:
        return GaussianParam(s=1.0)
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        return GaussianParam(s=float(d))
    if not isinstance(d, dict) or len(set(d) & {"s", "sigma"}) != 1:
        raise InputError('param must be {"s": width} or {"sigma": matrix}')
    if "s" in d:
        return GaussianParam(s=float(_fraction(d["s"], "s")))
    try:
        return GaussianParam.matrix([[float(_fraction(x, "sigma entry")) for x in row] for row in d["sigma"]])
    except TypeError:
        raise InputError("sigma must be a square matrix") from None


def param_to_json(p: GaussianParam) -> dict:
    return p.to_json()


def coset_from_json(d) -> tuple[Coset, GaussianParam]:
    L = lattice_from_json(d)
    shift = vector_from_json(d.get("shift", [0] * L.n), L.n, "shift")
    return Coset(L, shift), param_from_json(d.get("param"))


def sublattice_from_json(L: Lattice, X, what="sublattice"):
    if not isinstance(X, list) or len(X) != L.n or not all(isinstance(r, list) and len(r) == L.n for r in X):
        raise InputError(f"{what} must be an {L.n} x {L.n} integer matrix")
    if not all(isinstance(v, int) and not isinstance(v, bool) for r in X for v in r):
        raise InputError(f"{what} entries must be integers")
    return sublattice(L, X)


def certified_from_json(d) -> CertifiedValue:
    return CertifiedValue.from_json(d)


def moments_from_json(d) -> MomentReport:
    return MomentReport.from_json(d)


def load_json(source: str):
    """Parse ``source`` as inline JSON, or read it as a file path."""
    text = source.strip()
    if not text.startswith(("{", "[")):
        try:
            with open(source) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read input {source!r}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
