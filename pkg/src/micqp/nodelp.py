"""LP scaffold of one problem instance, shared by the continuous solver
and branch-and-bound.

The scaffold holds an LpModel with the structural variables x first, then
for every cone an epigraph column y0 (with lower bound 0) and lifted
columns y tied to x by equality rows, so relaxation blocks from `relax`
can be attached directly to the lifted columns.  Node bound changes touch
only the x columns, which keeps the stored simplex basis warm.
"""

from __future__ import annotations

import math

import numpy as np

from .lp import LpModel, LpResult, solve
from .model import MicqpInstance
from .relax import (
    SEP_TOL,
    ConeVarMap,
    ExactLeaf,
    GammaPool,
    OmegaPool,
    attach_abs_pair,
    attach_flat_oa,
    attach_ntwo,
    attach_sep,
    attach_tower,
    ntwo_depth_schedule,
    separate_sep,
)

__all__ = ["InstanceLp"]


class InstanceLp:
    """LpModel wrapping a MicqpInstance plus cone relaxation blocks."""

    def __init__(self, inst: MicqpInstance):
        self.inst = inst
        model = LpModel()
        self.model = model
        self.x_cols = model.add_cols(lb=inst.lb, ub=inst.ub, obj=inst.c)
        for i in range(inst.m):
            model.add_rows([(self._x_row(inst.E[i]), "<=", float(inst.h[i]))])
        self.varmaps: list[ConeVarMap] = []
        for cone in inst.cones:
            (y0,) = model.add_cols(lb=0.0, ub=math.inf)
            ycols = model.add_cols(lb=-math.inf, ub=math.inf, count=cone.d)
            link = [(self._link_row(y0, cone.a), "=", float(cone.b0))]
            for i in range(cone.d):
                link.append((self._link_row(ycols[i], cone.A[i]), "=", float(cone.b[i])))
            model.add_rows(link)
            self.varmaps.append(ConeVarMap(y0, ycols))
        self.blocks: list = []            # every attached relaxation block
        self.sep_blocks: list = []        # tangent blocks, for refinement
        self.sep_cone_indices: list[int] = []  # cone index per tangent block
        self.flat_blocks: list = []

    def _x_row(self, coeffs) -> dict[int, float]:
        return {self.x_cols[j]: float(v) for j, v in enumerate(coeffs) if v != 0.0}

    def _link_row(self, lifted_col: int, coeffs) -> dict[int, float]:
        row = {lifted_col: 1.0}
        for j, v in enumerate(coeffs):
            if v != 0.0:
                row[self.x_cols[j]] = -float(v)
        return row

    # -- relaxation attachment --------------------------------------------
    def attach_flat(self, initial_dirs) -> None:
        """Flat outer approximation on every cone, one pool per cone."""
        for vm in self.varmaps:
            dirs = [d for d in initial_dirs(vm.d)] if callable(initial_dirs) else initial_dirs
            blk = attach_flat_oa(self.model, vm, OmegaPool(vm.d, dirs))
            self.blocks.append(blk)
            self.flat_blocks.append(blk)

    def attach_static(self, eps: float) -> None:
        """Static polyhedral lifting of every cone at accuracy eps."""
        for vm in self.varmaps:
            if vm.d == 0:
                continue
            if vm.d == 1:
                blk = attach_abs_pair(self.model, vm)
            elif vm.d == 2:
                (s0,) = ntwo_depth_schedule(2, eps)
                blk = attach_ntwo(self.model, vm, s0)
            else:
                blk = attach_tower(self.model, vm, ExactLeaf(eps=eps))
            self.blocks.append(blk)

    def attach_sep_blocks(self, initial_gammas=()) -> None:
        """Tangent lifting on every cone; 1-d cones get the exact pair."""
        for k, vm in enumerate(self.varmaps):
            if vm.d == 0:
                continue
            if vm.d == 1:
                blk = attach_abs_pair(self.model, vm)
                self.blocks.append(blk)
                continue
            pools = [GammaPool(initial_gammas) for _ in range(vm.d)]
            blk = attach_sep(self.model, vm, pools)
            self.blocks.append(blk)
            self.sep_blocks.append(blk)
            self.sep_cone_indices.append(k)

    # -- solving -----------------------------------------------------------
    def set_bounds(self, lb, ub) -> None:
        for j, col in enumerate(self.x_cols):
            self.model.set_var_bounds(col, float(lb[j]), float(ub[j]))

    def solve(self, deadline: float | None = None) -> LpResult:
        return solve(self.model, deadline)

    def x_values(self, res: LpResult) -> np.ndarray:
        return res.x[self.x_cols].astype(float)

    def refine(self, res: LpResult, tol: float = SEP_TOL) -> int:
        return sum(blk.refine_at(res.x, tol) for blk in self.blocks)

    def refine_exact(self, res: LpResult, tol: float = SEP_TOL) -> list:
        """Grow tangent pools, evaluating cones at the exact x point.

        The lifted columns can sit a simplex residual away from A x + b,
        which matters when separating near a tight violation target; this
        variant recomputes each cone's (y0, y) from x so detection matches
        the violation metric exactly.  Returns the added (cone, j, gamma)
        triples.
        """
        x = self.x_values(res)
        added = []
        for k, blk in zip(self.sep_cone_indices, self.sep_blocks):
            cone = self.inst.cones[k]
            y0 = float(cone.a @ x + cone.b0)
            y = cone.A @ x + cone.b
            w = res.x[blk.w_cols].astype(float)
            for j, g in separate_sep(y0, y, w, tol):
                if blk.add_tangent(j, g) is not None:
                    added.append((k, j, g))
        return added
