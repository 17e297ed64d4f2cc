"""Polyhedral LP relaxations of the second-order cone ||y|| <= y0.

Four interchangeable relaxation blocks over columns of an LpModel:

* flat outer approximation: rows  w . y <= y0  for unit directions w,
  grown on demand by `separate_flat`;
* `attach_ntwo`: the 2-d cone lifted through s stages of rotate-and-fold
  auxiliary variables; projection is a regular 2^s-gon whose worst-case
  radial error is 1/cos(pi/2^s) - 1;
* `attach_tower`: a d-dim cone split into d-1 two-dimensional sub-cones
  arranged in ceil(log2 d) levels, each sub-cone relaxed by a leaf rule
  (exact 2-d lifting, a direction pool, or tangent lifting);
* `attach_sep`: the separable lifting y_j^2 <= w_j * y0 with tangent rows
  at multipliers gamma, a shared budget row sum(w) <= y0 and a sign row,
  grown on demand by `separate_sep`.

All blocks report row/column counts so relaxation sizes can be compared,
and `measure_quality` estimates the worst-case radial error of any block
by a sweep of direction LPs at y0 = 1.
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field

import numpy as np

from .lp import LpModel, LpStatus, solve

__all__ = [
    "SEP_TOL",
    "ConeVarMap",
    "OmegaPool",
    "GammaPool",
    "TowerShape",
    "tower_shape",
    "axis_directions",
    "FlatOaBlock",
    "attach_flat_oa",
    "separate_flat",
    "NtwoBlock",
    "attach_ntwo",
    "ntwo_quality",
    "ntwo_depth_schedule",
    "SepBlock",
    "attach_sep",
    "separate_sep",
    "AbsPairBlock",
    "attach_abs_pair",
    "perspective_cut",
    "ExactLeaf",
    "DynamicLeaf",
    "SepH2Leaf",
    "TowerBlock",
    "attach_tower",
    "measure_quality",
]

SEP_TOL = 1e-7         # violation threshold before a separation cut is emitted
UNIT_TOL = 1e-12       # below this norm a vector cannot be normalized
OMEGA_DEDUP = 1e-10    # directions closer than this (in 1 - cos angle) are equal
GAMMA_DEDUP = 1e-12    # tangent multipliers closer than this are equal


@dataclass(frozen=True)
class ConeVarMap:
    """LP columns holding one cone's epigraph variable y0 and vector y."""

    y0_col: int
    y_cols: tuple[int, ...]

    def __init__(self, y0_col: int, y_cols):
        object.__setattr__(self, "y0_col", int(y0_col))
        object.__setattr__(self, "y_cols", tuple(int(j) for j in y_cols))

    @property
    def d(self) -> int:
        return len(self.y_cols)


# ---------------------------------------------------------------------------
# cut pools
# ---------------------------------------------------------------------------


class OmegaPool:
    """Pool of unit directions with angular deduplication."""

    def __init__(self, dim: int, initial=()):
        self.dim = int(dim)
        self._dirs = np.zeros((0, self.dim))
        for w in initial:
            self.add(w)

    def add(self, omega) -> np.ndarray | None:
        """Normalize and insert; returns the stored unit vector, or None."""
        w = np.asarray(omega, dtype=float).ravel()
        if w.shape[0] != self.dim:
            raise ValueError(f"direction has dim {w.shape[0]}, expected {self.dim}")
        nrm = float(np.linalg.norm(w))
        if nrm < UNIT_TOL:
            return None
        w = w / nrm
        if len(self._dirs) and np.max(self._dirs @ w) >= 1.0 - OMEGA_DEDUP:
            return None
        self._dirs = np.vstack([self._dirs, w])
        return w

    @property
    def directions(self) -> np.ndarray:
        return self._dirs

    def __len__(self) -> int:
        return len(self._dirs)

    def __iter__(self):
        return iter(self._dirs)


class GammaPool:
    """Sorted pool of tangent multipliers, deduplicated to GAMMA_DEDUP."""

    def __init__(self, initial=()):
        self._vals: list[float] = []
        for g in initial:
            self.add(g)

    def add(self, gamma: float) -> bool:
        g = float(gamma)
        i = bisect_left(self._vals, g)
        for k in (i - 1, i):
            if 0 <= k < len(self._vals) and abs(self._vals[k] - g) <= GAMMA_DEDUP:
                return False
        insort(self._vals, g)
        return True

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(self._vals)

    def __len__(self) -> int:
        return len(self._vals)

    def __iter__(self):
        return iter(self._vals)


def axis_directions(d: int) -> list[np.ndarray]:
    """The 2d signed coordinate directions, a standard starting pool."""
    dirs = []
    for j in range(d):
        for sgn in (1.0, -1.0):
            e = np.zeros(d)
            e[j] = sgn
            dirs.append(e)
    return dirs


# ---------------------------------------------------------------------------
# flat outer approximation
# ---------------------------------------------------------------------------


class FlatOaBlock:
    """Rows  w . y <= y0  for every direction in the pool."""

    kind = "flat-oa"

    def __init__(self, model: LpModel, varmap: ConeVarMap, pool: OmegaPool):
        self.model = model
        self.varmap = varmap
        self.pool = pool
        self.row_handles: list[int] = []
        self.eq_rows = 0
        self.added_cols = 0
        for w in pool.directions:
            self._add_row(w)

    def _add_row(self, w: np.ndarray) -> int:
        coeffs = {self.varmap.y0_col: -1.0}
        for j, col in enumerate(self.varmap.y_cols):
            if w[j] != 0.0:
                coeffs[col] = coeffs.get(col, 0.0) + float(w[j])
        (h,) = self.model.add_rows([(coeffs, "<=", 0.0)])
        self.row_handles.append(h)
        return h

    @property
    def ineq_rows(self) -> int:
        return len(self.row_handles)

    def add_direction(self, omega) -> int | None:
        """Add one direction cut; returns the row handle or None if duplicate."""
        w = self.pool.add(omega)
        if w is None:
            return None
        return self._add_row(w)

    def point(self, xfull: np.ndarray) -> tuple[float, np.ndarray]:
        y0 = float(xfull[self.varmap.y0_col])
        y = xfull[list(self.varmap.y_cols)].astype(float)
        return y0, y

    def refine_at(self, xfull: np.ndarray, tol: float = SEP_TOL) -> int:
        y0, y = self.point(xfull)
        w = separate_flat(y0, y, tol)
        if w is None:
            return 0
        return 0 if self.add_direction(w) is None else 1


def attach_flat_oa(model: LpModel, varmap: ConeVarMap, pool: OmegaPool) -> FlatOaBlock:
    if pool.dim != varmap.d:
        raise ValueError("pool dimension does not match cone dimension")
    return FlatOaBlock(model, varmap, pool)


def separate_flat(y0: float, y, tol: float = SEP_TOL) -> np.ndarray | None:
    """Most-violated direction for ||y|| <= y0, or None if within tol.

    The returned unit w satisfies w . y - y0 = ||y|| - y0 > tol.  The
    degenerate point y = 0, y0 < -tol is cut by the first coordinate
    direction (every unit direction works there).
    """
    y = np.asarray(y, dtype=float).ravel()
    nrm = float(np.linalg.norm(y))
    if nrm < UNIT_TOL:
        if y0 < -tol:
            e = np.zeros(y.shape[0])
            e[0] = 1.0
            return e
        return None
    if nrm <= y0 + tol:
        return None
    return y / nrm


# ---------------------------------------------------------------------------
# 2-d cone lifting
# ---------------------------------------------------------------------------


def _stage_trig(i: int) -> tuple[float, float]:
    # exact values where floating cos/sin would leave residue
    if i == 0:
        return -1.0, 0.0
    if i == 1:
        return 0.0, 1.0
    theta = math.pi / (2.0**i)
    return math.cos(theta), math.sin(theta)


class NtwoBlock:
    """Lifting of ||(y1, y2)|| <= y0 through s rotate-and-fold stages.

    Stage i maps a pair (a, b) to (a cos t + b sin t, |b cos t - a sin t|)
    with t = pi/2^i; after s stages the first component carries the norm
    estimate and is tied to y0.  Uses 2s columns, s+1 equality rows and 2s
    inequality rows; the projection onto (y0, y1, y2) is a regular 2^s-gon.
    """

    kind = "ntwo"

    def __init__(self, model: LpModel, varmap: ConeVarMap, s: int):
        if varmap.d != 2:
            raise ValueError("ntwo lifting needs a 2-dimensional cone map")
        if s < 1:
            raise ValueError("stage count must be >= 1")
        self.model = model
        self.varmap = varmap
        self.s = s
        self.v_cols = model.add_cols(lb=-math.inf, ub=math.inf, count=2 * s)
        self.added_cols = 2 * s
        eq, ineq = [], []
        y1, y2 = varmap.y_cols
        a, b = y1, y2
        for i in range(s):
            c, sn = _stage_trig(i)
            vo = self.v_cols[2 * i]      # odd slot: rotated component
            ve = self.v_cols[2 * i + 1]  # even slot: folded component
            row = {vo: 1.0}
            if c != 0.0:
                row[a] = row.get(a, 0.0) - c
            if sn != 0.0:
                row[b] = row.get(b, 0.0) - sn
            eq.append((row, "=", 0.0))
            for sgn in (1.0, -1.0):
                row = {ve: -1.0}
                if c != 0.0:
                    row[b] = row.get(b, 0.0) + sgn * c
                if sn != 0.0:
                    row[a] = row.get(a, 0.0) - sgn * sn
                ineq.append((row, "<=", 0.0))
            a, b = vo, ve
        c, sn = _stage_trig(s)
        eq.append(({a: c, b: sn, varmap.y0_col: -1.0}, "=", 0.0))
        self.eq_handles = model.add_rows(eq)
        self.ineq_handles = model.add_rows(ineq)
        self.eq_rows = len(self.eq_handles)
        self.ineq_rows = len(self.ineq_handles)

    def refine_at(self, xfull: np.ndarray, tol: float = SEP_TOL) -> int:
        return 0  # static block


def attach_ntwo(model: LpModel, map3: ConeVarMap, s: int) -> NtwoBlock:
    return NtwoBlock(model, map3, s)


def ntwo_quality(s: int) -> float:
    """Worst-case radial error of the s-stage 2-d lifting."""
    return 1.0 / math.cos(math.pi / (2.0**s)) - 1.0


def ntwo_depth_schedule(d: int, eps: float) -> list[int]:
    """Per-level stage counts so the assembled tower has radial error <= eps.

    Level k of the tower (k = 0 at the leaves) gets
        s_k = ceil((k+1)/2) - ceil(log4((16/9) pi^-2 ln(1+eps))),
    clamped to at least 1.  Valid for eps in (0, 1/2).
    """
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    shape = tower_shape(d)
    base = math.ceil(math.log((16.0 / 9.0) * math.pi**-2 * math.log1p(eps), 4.0))
    return [max(1, math.ceil((k + 1) / 2) - base) for k in range(shape.K)]


# ---------------------------------------------------------------------------
# separable lifting with tangent rows
# ---------------------------------------------------------------------------


def perspective_cut(f, fprime, gamma: float) -> tuple[float, float]:
    """Tangent row of the perspective of convex f at gamma.

    Returns (c0, c1) so that  c0 * y0 + c1 * y_j <= w_j  under-estimates
    y0 * f(y_j / y0); for f(x) = x^2 this is the 2 gamma y - gamma^2 y0 row.
    """
    g = float(gamma)
    fp = float(fprime(g))
    return float(f(g)) - g * fp, fp


class SepBlock:
    """Separable lifting: w_j >= tangents of y_j^2 / y0, sum(w) <= y0.

    Rows:  2 gamma y_j - gamma^2 y0 <= w_j  for each gamma in the j-th pool,
    one budget row sum_j w_j <= y0 and one sign row 0 <= y0, so the block
    always owns 2 + sum_j |Gamma_j| inequality rows and d new columns.
    """

    kind = "sep-h"

    def __init__(self, model: LpModel, varmap: ConeVarMap, pools):
        pools = list(pools)
        if len(pools) != varmap.d:
            raise ValueError("need one tangent pool per cone coordinate")
        self.model = model
        self.varmap = varmap
        self.pools: list[GammaPool] = pools
        self.w_cols = model.add_cols(lb=-math.inf, ub=math.inf, count=varmap.d)
        self.added_cols = varmap.d
        self.eq_rows = 0
        budget = {col: 1.0 for col in self.w_cols}
        budget[varmap.y0_col] = budget.get(varmap.y0_col, 0.0) - 1.0
        self.budget_row, self.sign_row = model.add_rows(
            [(budget, "<=", 0.0), ({varmap.y0_col: -1.0}, "<=", 0.0)]
        )
        self.tangent_handles: list[int] = []
        for j, pool in enumerate(self.pools):
            for g in pool:
                self._add_row(j, g)

    def _add_row(self, j: int, gamma: float) -> int:
        c0, c1 = perspective_cut(lambda x: x * x, lambda x: 2.0 * x, gamma)
        yj = self.varmap.y_cols[j]
        coeffs = {self.w_cols[j]: -1.0}
        if c0 != 0.0:
            coeffs[self.varmap.y0_col] = coeffs.get(self.varmap.y0_col, 0.0) + c0
        if c1 != 0.0:
            coeffs[yj] = coeffs.get(yj, 0.0) + c1
        (h,) = self.model.add_rows([(coeffs, "<=", 0.0)])
        self.tangent_handles.append(h)
        return h

    @property
    def ineq_rows(self) -> int:
        return 2 + len(self.tangent_handles)

    def add_tangent(self, j: int, gamma: float) -> int | None:
        """Add one tangent row; returns its handle or None if duplicate."""
        if not self.pools[j].add(gamma):
            return None
        return self._add_row(j, gamma)

    def point(self, xfull: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        y0 = float(xfull[self.varmap.y0_col])
        y = xfull[list(self.varmap.y_cols)].astype(float)
        w = xfull[self.w_cols].astype(float)
        return y0, y, w

    def refine_cuts(self, xfull: np.ndarray, tol: float = SEP_TOL) -> list[tuple[int, float]]:
        """Separate and add tangents; returns the (j, gamma) pairs added."""
        y0, y, w = self.point(xfull)
        added = []
        for j, g in separate_sep(y0, y, w, tol):
            if self.add_tangent(j, g) is not None:
                added.append((j, g))
        return added

    def refine_at(self, xfull: np.ndarray, tol: float = SEP_TOL) -> int:
        return len(self.refine_cuts(xfull, tol))


def attach_sep(model: LpModel, varmap: ConeVarMap, pools) -> SepBlock:
    return SepBlock(model, varmap, pools)


def separate_sep(y0: float, y, w, tol: float = SEP_TOL) -> list[tuple[int, float]]:
    """Tangent multipliers cutting off (y0, y, w) from the separable lifting.

    Coordinate j is flagged when y_j^2 > w_j y0 + tol; the returned gamma is
    y_j / y0, whose row the point then violates by (y_j^2 - w_j y0) / y0.
    Near the apex (|y0| <= tol) the multiplier is undefined, so the slope-one
    pair gamma = +-1 is emitted for every coordinate as a bounding fallback.
    """
    y = np.asarray(y, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if abs(y0) <= tol:
        return [(j, g) for j in range(y.shape[0]) for g in (1.0, -1.0)]
    cuts = []
    for j in range(y.shape[0]):
        if y[j] * y[j] > w[j] * y0 + tol:
            cuts.append((j, float(y[j] / y0)))
    return cuts


class AbsPairBlock:
    """Exact description |y1| <= y0 of a one-dimensional cone (two rows)."""

    kind = "abs-pair"

    def __init__(self, model: LpModel, varmap: ConeVarMap):
        if varmap.d != 1:
            raise ValueError("absolute-value pair needs a 1-dimensional cone map")
        self.model = model
        self.varmap = varmap
        (y1,) = varmap.y_cols
        self.row_handles = model.add_rows(
            [
                ({y1: 1.0, varmap.y0_col: -1.0}, "<=", 0.0),
                ({y1: -1.0, varmap.y0_col: -1.0}, "<=", 0.0),
            ]
        )
        self.ineq_rows = 2
        self.eq_rows = 0
        self.added_cols = 0

    def refine_at(self, xfull: np.ndarray, tol: float = SEP_TOL) -> int:
        return 0  # already exact


def attach_abs_pair(model: LpModel, varmap: ConeVarMap) -> AbsPairBlock:
    return AbsPairBlock(model, varmap)


# ---------------------------------------------------------------------------
# tower of 2-d sub-cones
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TowerShape:
    """Slot layout when a d-cone is halved level by level down to one slot."""

    d: int
    K: int                  # number of levels of sub-cones
    r: tuple[int, ...]      # slots per level, r[0] = d, ..., r[K] = 1
    R: int                  # total slots, sum(r)
    gadgets: int            # total 2-d sub-cones, d - 1


def tower_shape(d: int) -> TowerShape:
    if d < 2:
        raise ValueError("tower needs dimension >= 2")
    r = [d]
    while r[-1] > 1:
        r.append((r[-1] + 1) // 2)
    return TowerShape(d=d, K=len(r) - 1, r=tuple(r), R=sum(r), gadgets=d - 1)


@dataclass(frozen=True)
class ExactLeaf:
    """Each sub-cone lifted exactly-polyhedrally; depth fixed or from eps."""

    s: int | None = None
    eps: float | None = None

    def __post_init__(self):
        if (self.s is None) == (self.eps is None):
            raise ValueError("give exactly one of s or eps")
        if self.s is not None and self.s < 1:
            raise ValueError("stage count must be >= 1")


@dataclass(frozen=True)
class DynamicLeaf:
    """Each sub-cone gets its own direction pool, grown by separation."""

    initial: tuple = ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))


@dataclass(frozen=True)
class SepH2Leaf:
    """Each sub-cone gets its own 2-d tangent lifting."""

    initial: tuple = (-1.0, 1.0)


@dataclass
class Gadget:
    """One 2-d sub-cone ||(in1, in2)|| <= out inside a tower."""

    level: int
    out_col: int
    in1_col: int
    in2_col: int
    block: object = field(default=None, repr=False)


class TowerBlock:
    """d-1 two-dimensional sub-cones glued by shared LP columns.

    Level-0 inputs are the cone's y columns, the final output is the y0
    column, and odd slots pass through unchanged (no new column), so only
    d-2 internal columns are created on top of whatever the leaves add.
    """

    kind = "tower"

    def __init__(self, model: LpModel, varmap: ConeVarMap, leaf):
        self.model = model
        self.varmap = varmap
        self.leaf = leaf
        self.shape = tower_shape(varmap.d)
        if isinstance(leaf, ExactLeaf):
            depths = (
                ntwo_depth_schedule(varmap.d, leaf.eps)
                if leaf.s is None
                else [leaf.s] * self.shape.K
            )
        else:
            depths = None
        self.internal_cols: list[int] = []
        self.gadgets: list[Gadget] = []
        slots = list(varmap.y_cols)
        total = self.shape.gadgets
        made = 0
        for k in range(self.shape.K):
            nxt = []
            for i in range(len(slots) // 2):
                made += 1
                if made == total:
                    out = varmap.y0_col
                else:
                    (out,) = model.add_cols(lb=0.0, ub=math.inf)
                    self.internal_cols.append(out)
                g = Gadget(k, out, slots[2 * i], slots[2 * i + 1])
                sub = ConeVarMap(out, (g.in1_col, g.in2_col))
                if isinstance(leaf, ExactLeaf):
                    g.block = attach_ntwo(model, sub, depths[k])
                elif isinstance(leaf, DynamicLeaf):
                    g.block = attach_flat_oa(model, sub, OmegaPool(2, leaf.initial))
                elif isinstance(leaf, SepH2Leaf):
                    pools = [GammaPool(leaf.initial) for _ in range(2)]
                    g.block = attach_sep(model, sub, pools)
                else:
                    raise TypeError(f"unknown leaf rule {leaf!r}")
                self.gadgets.append(g)
                nxt.append(out)
            if len(slots) % 2:
                nxt.append(slots[-1])
            slots = nxt

    # -- counters ----------------------------------------------------------
    @property
    def gadget_count(self) -> int:
        return len(self.gadgets)

    @property
    def free_tower_cols(self) -> int:
        return len(self.internal_cols)

    @property
    def tower_slots(self) -> int:
        return self.shape.R

    @property
    def ineq_rows(self) -> int:
        return sum(g.block.ineq_rows for g in self.gadgets)

    @property
    def eq_rows(self) -> int:
        return sum(g.block.eq_rows for g in self.gadgets)

    @property
    def added_cols(self) -> int:
        return len(self.internal_cols) + sum(g.block.added_cols for g in self.gadgets)

    def refine_at(self, xfull: np.ndarray, tol: float = SEP_TOL) -> int:
        return sum(g.block.refine_at(xfull, tol) for g in self.gadgets)


def attach_tower(model: LpModel, varmap: ConeVarMap, leaf) -> TowerBlock:
    if varmap.d < 2:
        raise ValueError("tower needs dimension >= 2")
    return TowerBlock(model, varmap, leaf)


# ---------------------------------------------------------------------------
# quality measurement
# ---------------------------------------------------------------------------


def measure_quality(block, num_dirs: int, seed: int = 0) -> float:
    """Worst radial error of a relaxation block, by direction LPs at y0 = 1.

    For each unit direction u the LP  max u . y  s.t. block rows, y0 = 1
    is solved on the block's own model; the largest value minus one is the
    measured error.  In two dimensions the directions are num_dirs equally
    spaced angles starting at zero (hitting every vertex of the projected
    2^s-gons); in higher dimensions the signed axes are swept first and the
    rest drawn from a seeded generator.  The block must live in a model
    that contains nothing but the cone columns and the block itself.
    """
    model = block.model
    vm = block.varmap
    d = vm.d
    if d == 2:
        angles = 2.0 * math.pi * np.arange(num_dirs) / num_dirs
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        dirs = axis_directions(d)
        rng = np.random.default_rng(seed)
        while len(dirs) < num_dirs:
            u = rng.standard_normal(d)
            nrm = np.linalg.norm(u)
            if nrm > UNIT_TOL:
                dirs.append(u / nrm)
        dirs = np.asarray(dirs[:num_dirs])
    saved_obj = model.obj.copy()
    saved_bounds = (model.col_lb[vm.y0_col], model.col_ub[vm.y0_col])
    model.set_objective(np.zeros(model.num_vars))
    model.set_var_bounds(vm.y0_col, 1.0, 1.0)
    try:
        worst = 0.0
        for u in dirs:
            for j, col in enumerate(vm.y_cols):
                model.set_obj_coeff(col, float(u[j]))
            res = solve(model)
            if res.status is LpStatus.UNBOUNDED:
                return math.inf
            if res.status is not LpStatus.OPTIMAL:
                raise RuntimeError(f"direction LP ended {res.status}")
            worst = max(worst, res.obj - 1.0)
            for col in vm.y_cols:
                model.set_obj_coeff(col, 0.0)
    finally:
        model.set_objective(saved_obj)
        model.set_var_bounds(vm.y0_col, *saved_bounds)
    return worst
