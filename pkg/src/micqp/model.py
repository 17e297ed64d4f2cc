"""In-memory representation and file format for mixed-integer conic-quadratic programs.

An instance is

    max  c . x
    s.t. E x <= h
         || A_l x + b_l ||_2  <=  a_l . x + b0_l      (l = 1..q)
         lb <= x <= ub,   x_j integer for j in I.

Maximization is the canonical internal sense; minimization inputs are negated
at read time and a flag is kept so files round-trip unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum, unique

import numpy as np

__all__ = [
    "ParseError",
    "DimensionError",
    "Status",
    "ConeBlock",
    "MicqpInstance",
    "Solution",
    "read_instance",
    "write_instance",
    "max_cone_violation",
]

# Keys allowed in an instance file; anything else is rejected.
_SCHEMA_KEYS = {"n", "maximize", "c", "E", "h", "cones", "int_vars", "lb", "ub"}
_CONE_KEYS = {"A", "b", "a", "b0"}


class ParseError(ValueError):
    """Malformed instance document."""


class DimensionError(ValueError):
    """Shape mismatch between instance fields."""


@unique
class Status(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"
    ITER_LIMIT = "IterLimit"


def _as_float_array(x, shape=None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


@dataclass(eq=False)
class ConeBlock:
    """One conic-quadratic constraint ||A x + b|| <= a.x + b0."""

    A: np.ndarray          # (d, n)
    b: np.ndarray          # (d,)
    a: np.ndarray          # (n,)
    b0: float

    def __post_init__(self):
        self.A = np.atleast_2d(_as_float_array(self.A))
        self.b = _as_float_array(self.b).ravel()
        self.a = _as_float_array(self.a).ravel()
        self.b0 = float(self.b0)
        if self.A.shape[0] != self.b.shape[0]:
            raise DimensionError(
                f"cone: A has {self.A.shape[0]} rows but b has {self.b.shape[0]} entries"
            )

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def validate(self, n: int) -> None:
        if self.A.shape[1] != n:
            raise DimensionError(f"cone: A has {self.A.shape[1]} columns, expected {n}")
        if self.a.shape[0] != n:
            raise DimensionError(f"cone: a has {self.a.shape[0]} entries, expected {n}")
        if self.d < 1:
            raise DimensionError("cone: d must be >= 1")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConeBlock):
            return NotImplemented
        return (
            np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.a, other.a)
            and self.b0 == other.b0
        )


@dataclass(eq=False)
class MicqpInstance:
    """Full problem data; immutable by convention after construction."""

    n: int
    c: np.ndarray                      # (n,) objective, maximize
    E: np.ndarray                      # (m, n)
    h: np.ndarray                      # (m,)
    cones: list[ConeBlock]
    int_vars: tuple[int, ...]          # strictly increasing indices into 0..n-1
    lb: np.ndarray                     # (n,) may contain -inf
    ub: np.ndarray                     # (n,) may contain +inf
    was_minimize: bool = False         # input sense (c already negated if True)

    def __post_init__(self):
        self.n = int(self.n)
        self.c = _as_float_array(self.c).ravel()
        self.E = _as_float_array(self.E).reshape(-1, self.n) if np.size(self.E) else np.zeros((0, self.n))
        self.h = _as_float_array(self.h).ravel()
        self.lb = _as_float_array(self.lb).ravel()
        self.ub = _as_float_array(self.ub).ravel()
        self.int_vars = tuple(int(j) for j in self.int_vars)
        self._validate()

    def _validate(self) -> None:
        n = self.n
        for name, vec in (("c", self.c), ("lb", self.lb), ("ub", self.ub)):
            if vec.shape[0] != n:
                raise DimensionError(f"{name} has {vec.shape[0]} entries, expected {n}")
        if self.E.shape != (self.h.shape[0], n):
            raise DimensionError(
                f"E is {self.E.shape} but h has {self.h.shape[0]} entries (n={n})"
            )
        prev = -1
        for j in self.int_vars:
            if not (0 <= j < n):
                raise DimensionError(f"int_vars index {j} out of range for n={n}")
            if j <= prev:
                raise DimensionError("int_vars must be strictly increasing")
            prev = j
        if np.any(self.lb > self.ub):
            bad = int(np.argmax(self.lb > self.ub))
            raise DimensionError(f"lb > ub at variable {bad}")
        for cone in self.cones:
            cone.validate(n)

    @property
    def m(self) -> int:
        return self.E.shape[0]

    @property
    def q(self) -> int:
        return len(self.cones)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MicqpInstance):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.E, other.E)
            and np.array_equal(self.h, other.h)
            and self.cones == other.cones
            and self.int_vars == other.int_vars
            and np.array_equal(self.lb, other.lb)
            and np.array_equal(self.ub, other.ub)
            and self.was_minimize == other.was_minimize
        )


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    status: Status


def max_cone_violation(inst: MicqpInstance, x: np.ndarray) -> float:
    """max over cones of ||A x + b||^2 - (a.x + b0)^2, reported raw.

    Negative values mean strict feasibility; q = 0 returns -inf.  Note the
    squared form does not distinguish a.x + b0 < 0 from feasibility — callers
    that need the signed check should also test a.x + b0 >= 0.
    """
    x = _as_float_array(x).ravel()
    if x.shape[0] != inst.n:
        raise DimensionError(f"x has {x.shape[0]} entries, expected {inst.n}")
    worst = -math.inf
    for cone in inst.cones:
        lhs = float(np.dot(cone.A @ x + cone.b, cone.A @ x + cone.b))
        rhs = float(cone.a @ x + cone.b0)
        worst = max(worst, lhs - rhs * rhs)
    return worst


# ---------------------------------------------------------------------------
# File format: UTF-8 JSON, infinities as "inf"/"-inf" tokens, floats exact
# via repr round-trip (json uses float.__repr__, which is shortest-roundtrip).
# ---------------------------------------------------------------------------


def _encode_num(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        raise ParseError("NaN is not representable in the instance format")
    return float(v)


def _encode_vec(vec) -> list:
    return [_encode_num(float(v)) for v in np.asarray(vec, dtype=float).ravel()]


def _encode_mat(mat) -> list:
    return [_encode_vec(row) for row in np.atleast_2d(np.asarray(mat, dtype=float))]


def _decode_num(v, where: str) -> float:
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise ParseError(f"{where}: bad numeric token {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}: expected number, got {type(v).__name__}")
    if math.isnan(v):
        raise ParseError(f"{where}: NaN not allowed")
    return float(v)


def _decode_vec(v, where: str) -> np.ndarray:
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected list")
    return np.array([_decode_num(e, where) for e in v], dtype=float)


def _decode_mat(v, where: str, ncols: int) -> np.ndarray:
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected list of rows")
    rows = [_decode_vec(r, where) for r in v]
    if not rows:
        return np.zeros((0, ncols))
    mat = np.vstack(rows)
    if mat.shape[1] != ncols:
        raise DimensionError(f"{where}: rows of length {mat.shape[1]}, expected {ncols}")
    return mat


def write_instance(inst: MicqpInstance, path) -> None:
    c = -inst.c if inst.was_minimize else inst.c
    doc = {
        "n": inst.n,
        "maximize": not inst.was_minimize,
        "c": _encode_vec(c),
        "E": _encode_mat(inst.E) if inst.m else [],
        "h": _encode_vec(inst.h),
        "cones": [
            {
                "A": _encode_mat(cone.A),
                "b": _encode_vec(cone.b),
                "a": _encode_vec(cone.a),
                "b0": _encode_num(cone.b0),
            }
            for cone in inst.cones
        ],
        "int_vars": list(inst.int_vars),
        "lb": _encode_vec(inst.lb),
        "ub": _encode_vec(inst.ub),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_instance(path) -> MicqpInstance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    unknown = set(doc) - _SCHEMA_KEYS
    if unknown:
        raise ParseError(f"unknown fields: {sorted(unknown)}")
    missing = _SCHEMA_KEYS - set(doc)
    if missing:
        raise ParseError(f"missing fields: {sorted(missing)}")
    if not isinstance(doc["n"], int) or isinstance(doc["n"], bool) or doc["n"] < 1:
        raise ParseError("n must be a positive integer")
    if not isinstance(doc["maximize"], bool):
        raise ParseError("maximize must be a boolean")
    n = doc["n"]
    c = _decode_vec(doc["c"], "c")
    E = _decode_mat(doc["E"], "E", n)
    h = _decode_vec(doc["h"], "h")
    cones = []
    if not isinstance(doc["cones"], list):
        raise ParseError("cones must be a list")
    for i, entry in enumerate(doc["cones"]):
        if not isinstance(entry, dict):
            raise ParseError(f"cones[{i}]: expected object")
        unknown = set(entry) - _CONE_KEYS
        if unknown:
            raise ParseError(f"cones[{i}]: unknown fields {sorted(unknown)}")
        missing = _CONE_KEYS - set(entry)
        if missing:
            raise ParseError(f"cones[{i}]: missing fields {sorted(missing)}")
        A = _decode_mat(entry["A"], f"cones[{i}].A", n)
        b = _decode_vec(entry["b"], f"cones[{i}].b")
        a = _decode_vec(entry["a"], f"cones[{i}].a")
        b0 = _decode_num(entry["b0"], f"cones[{i}].b0")
        if A.shape[0] != b.shape[0]:
            raise DimensionError(
                f"cones[{i}]: A has {A.shape[0]} rows but b has {b.shape[0]} entries"
            )
        cones.append(ConeBlock(A=A, b=b, a=a, b0=b0))
    if not isinstance(doc["int_vars"], list) or not all(
        isinstance(j, int) and not isinstance(j, bool) for j in doc["int_vars"]
    ):
        raise ParseError("int_vars must be a list of integers")
    maximize = doc["maximize"]
    return MicqpInstance(
        n=n,
        c=c if maximize else -c,
        E=E,
        h=h,
        cones=cones,
        int_vars=tuple(doc["int_vars"]),
        lb=_decode_vec(doc["lb"], "lb"),
        ub=_decode_vec(doc["ub"], "ub"),
        was_minimize=not maximize,
    )
