"""Continuous conic-quadratic solving by LP tangent refinement.

The cone constraints are lifted separably (w_j >= tangents of y_j^2/y0,
sum(w) <= y0) and the tangent pools grow at successive LP optima until the
worst squared cone violation max_l ||A x + b||^2 - (a . x + b0)^2 drops to
CONIC_EPS.  The LP value is always an upper bound on the conic optimum, so
the returned objective is accurate to the violation tolerance.  Unbounded
first relaxations get a temporary box |x_j| <= BIG_BOX; if the final point
leans on that box the result is reported as IterLimit, not Optimal.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .lp import DeadlineReached, LpStatus
from .model import MicqpInstance, Status, max_cone_violation
from .nodelp import InstanceLp
from .relax import SEP_TOL

__all__ = ["CONIC_EPS", "ConicResult", "ConicWorker", "solve_conic"]

# Squared-violation target certifying near-feasibility.  Must sit above the
# LP residual tolerance (lp.RES_TOL): the budget row can over-credit y0 by
# the LP's feasibility slop, so no tangent tolerance below that is provable.
CONIC_EPS = 1e-7
MAX_ROUNDS = 500       # tangent rounds before giving up
BIG_BOX = 1e6          # fallback box when the first relaxation is unbounded


@dataclass
class ConicResult:
    status: Status
    x: np.ndarray | None
    obj: float
    max_violation: float | None
    rounds: int = 0


class ConicWorker:
    """Reusable continuous solver for one instance.

    Tangent cuts are valid for every variable box, so the pools (and the
    simplex basis) carry over between calls with different bounds; inside
    branch-and-bound this makes repeated fixed-integer solves cheap.
    """

    def __init__(self, inst: MicqpInstance):
        self.inst = inst
        self.lp = InstanceLp(inst)
        self.lp.attach_sep_blocks((-1.0, 1.0))
        dmax = max((c.d for c in inst.cones), default=1)
        # below this per-coordinate slack, a cut-free point certifies the
        # squared metric: sum y_j^2 <= y0 sum w_j + d*tol <= y0^2 + eps/2
        self.sep_tol = min(SEP_TOL, CONIC_EPS / (4.0 * max(1, dmax)))

    def solve(self, l=None, u=None, deadline: float | None = None) -> ConicResult:
        """Solve over replacement bounds; ``deadline`` (absolute
        time.perf_counter value) raises DeadlineReached mid-refinement."""
        inst = self.inst
        lb = np.asarray(inst.lb if l is None else l, dtype=float)
        ub = np.asarray(inst.ub if u is None else u, dtype=float)
        self.lp.set_bounds(lb, ub)
        boxed_cols: list[int] = []
        rounds = 0
        res = None
        while rounds < MAX_ROUNDS:
            if deadline is not None and time.perf_counter() > deadline:
                raise DeadlineReached
            res = self.lp.solve(deadline)
            rounds += 1
            if res.status is LpStatus.PRIMAL_INFEASIBLE:
                return ConicResult(Status.INFEASIBLE, None, -math.inf, None, rounds)
            if res.status is LpStatus.UNBOUNDED:
                if boxed_cols:
                    break  # boxed yet still unbounded: numerical trouble
                for j, col in enumerate(self.lp.x_cols):
                    lo, hi = max(lb[j], -BIG_BOX), min(ub[j], BIG_BOX)
                    if lo != lb[j] or hi != ub[j]:
                        boxed_cols.append(col)
                    self.lp.model.set_var_bounds(col, lo, hi)
                continue
            x = self.lp.x_values(res)
            viol = max_cone_violation(inst, x)
            if viol <= CONIC_EPS:
                at_box = any(
                    abs(res.x[col]) >= BIG_BOX * (1.0 - 1e-9) for col in boxed_cols
                )
                status = Status.ITER_LIMIT if at_box else Status.OPTIMAL
                return ConicResult(status, x, res.obj, viol, rounds)
            if not self.lp.refine_exact(res, self.sep_tol):
                # near the target the slack per coordinate can hide below
                # sep_tol; retry accepting any strictly positive violation
                if not self.lp.refine_exact(res, 0.0):
                    break  # no separating tangent at all: stalled

        if res is not None and res.status is LpStatus.OPTIMAL:
            x = self.lp.x_values(res)
            return ConicResult(
                Status.ITER_LIMIT, x, res.obj, max_cone_violation(inst, x), rounds
            )
        return ConicResult(Status.ITER_LIMIT, None, math.inf, None, rounds)


def solve_conic(inst: MicqpInstance, l=None, u=None) -> ConicResult:
    """One-shot continuous solve over optional replacement bounds l, u."""
    return ConicWorker(inst).solve(l, u)
