"""Branch-and-bound engines over the lifted LP relaxations.

Two entry points:

* ``solve_oa``: outer-approximation loop.  The cone rows are flat
  supporting half-spaces ``omega . y <= y0``; each round solves the MILP
  relaxation exactly (by a plain LP branch-and-bound), checks the cones
  at the MILP optimum and adds the unit-direction cut of every violated
  cone until the point is conic-feasible or a budget runs out.
* ``solve_lifted``: LP-based branch-and-bound solving one LP per node
  over lifted cone relaxations (static tower lifting and/or tangent
  blocks).  Integral but conic-violated LP points trigger a fixed-integer
  nonlinear heuristic and then a pluggable refinement step: BranchBased
  solves the node's nonlinear relaxation and branches on its solution,
  CutBased deepens the tangent pools and re-queues the same node.

Node selection is best-bound-first with FIFO tie-break in the lifted
tree (reproducible bounds); the inner MILP search of ``solve_oa``
prefers the most recent node on ties so pure feasibility questions dive
instead of sweeping levels.  Objectives follow the max convention of
MicqpInstance throughout; minimization instances are handled by the
callers that negated them on construction.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .conic import CONIC_EPS, ConicResult, ConicWorker
from .lp import DeadlineReached, LpStatus, NumericalFailure
from .model import MicqpInstance, Status, max_cone_violation
from .nodelp import InstanceLp
from .relax import SEP_TOL, axis_directions, separate_flat

__all__ = [
    "INT_TOL",
    "CONE_FEAS_TOL",
    "RefineStrategy",
    "Limits",
    "SolveStats",
    "SolveResult",
    "branch_variable_selection",
    "solve_oa",
    "solve_lifted",
]

INT_TOL = 1e-6        # |x_j - round(x_j)| below this counts as integral
CONE_FEAS_TOL = 1e-6  # squared-metric tolerance accepting an incumbent
BOUND_TOL = 1e-9      # fathom nodes whose bound is within this of the incumbent


class RefineStrategy(Enum):
    BRANCH_BASED = "branch"
    CUT_BASED = "cut"


@dataclass
class Limits:
    """Optional stopping rules; None means unlimited."""

    time_limit: float | None = None   # seconds of wall time
    node_limit: int | None = None     # processed nodes (LP solves in the tree)
    cut_limit: int | None = None      # separation cuts added in total


@dataclass
class SolveStats:
    nodes: int = 0         # nodes whose LP was solved (re-queues count again)
    cuts: int = 0          # separation rows added after construction
    lp_solves: int = 0     # node LP solves (equals nodes for the lifted tree)
    conic_solves: int = 0  # nonlinear relaxation solves (heuristic + refine)


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray | None
    objective: float       # value of the returned point, -inf if none
    best_bound: float      # remaining upper bound on the true optimum
    stats: SolveStats = field(default_factory=SolveStats)
    max_violation: float | None = None


def branch_variable_selection(x, int_vars, tol: float = INT_TOL):
    """Index of the most fractional integer variable, ties to the lowest.

    Returns None when every integer-constrained coordinate is within tol
    of an integer.
    """
    x = np.asarray(x, dtype=float)
    best_j = None
    best_frac = tol
    for j in int_vars:
        frac = abs(x[j] - round(x[j]))
        if frac > best_frac:
            best_j, best_frac = j, frac
    return best_j


@dataclass
class _Node:
    l: np.ndarray
    u: np.ndarray
    nb: float  # inherited bound estimate for best-first selection


class _Trace:
    """Line-delimited JSON event writer; silently off when target is None."""

    def __init__(self, target):
        self.target = target

    def emit(self, **event) -> None:
        if self.target is None:
            return
        # default=float renders stray numpy scalars
        self.target.write(json.dumps(event, separators=(",", ":"), default=float) + "\n")


def _signed_cone_ok(inst: MicqpInstance, x: np.ndarray, tol: float) -> bool:
    """The squared metric cannot see a.x + b0 < 0; check the sign too."""
    return all(float(c.a @ x + c.b0) >= -tol for c in inst.cones)


def _feasible_incumbent(inst: MicqpInstance, x: np.ndarray) -> bool:
    return (
        max_cone_violation(inst, x) <= CONE_FEAS_TOL
        and _signed_cone_ok(inst, x, CONE_FEAS_TOL)
    )


class _Clock:
    def __init__(self, limits: Limits):
        self.t0 = time.perf_counter()
        self.limit = limits.time_limit
        # absolute cutoff handed to the LP/NLP layers so a single long
        # solve cannot overrun the time limit by orders of magnitude
        self.deadline = None if self.limit is None else self.t0 + self.limit

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def expired(self) -> bool:
        return self.limit is not None and self.elapsed() > self.limit


# ---------------------------------------------------------------------------
# Lifted LP-based branch-and-bound
# ---------------------------------------------------------------------------


class _LiftedEngine:
    def __init__(self, inst, eps, strategy, use_static, sep_gammas, limits, trace):
        self.inst = inst
        self.strategy = strategy
        self.limits = limits or Limits()
        self.trace = _Trace(trace)
        self.stats = SolveStats()
        self.lp = InstanceLp(inst)
        if use_static:
            self.lp.attach_static(eps)
        if strategy is RefineStrategy.CUT_BASED:
            if sep_gammas is None:
                # static rows already bound the cone sections; otherwise the
                # +-1 tangents do, which keeps the first LP bounded
                sep_gammas = () if use_static else (-1.0, 1.0)
            self.lp.attach_sep_blocks(sep_gammas)
        dmax = max((c.d for c in inst.cones), default=1)
        self.sep_tol = min(SEP_TOL, CONIC_EPS / (4.0 * max(1, dmax)))
        self.worker: ConicWorker | None = None
        self.heuristic_cache: dict[tuple, ConicResult] = {}
        self.lb = -math.inf
        self.incumbent: np.ndarray | None = None
        self.heap: list = []
        self.seq = 0
        self.deadline: float | None = None  # set from the clock in run()

    # -- pieces ------------------------------------------------------------
    def _push(self, node: _Node) -> None:
        heapq.heappush(self.heap, (-node.nb, self.seq, node))
        self.seq += 1

    def _nlp(self) -> ConicWorker:
        if self.worker is None:
            self.worker = ConicWorker(self.inst)
        return self.worker

    def _fixed_integer_solve(self, x: np.ndarray) -> ConicResult:
        """Nonlinear heuristic with the integer variables fixed at round(x).

        Node bounds never differ from the root on continuous variables, so
        the result only depends on the integer assignment and is cached.
        """
        key = tuple(int(round(x[j])) for j in self.inst.int_vars)
        hit = self.heuristic_cache.get(key)
        if hit is not None:
            return hit
        l = np.array(self.inst.lb, dtype=float)
        u = np.array(self.inst.ub, dtype=float)
        for j, v in zip(self.inst.int_vars, key):
            l[j] = u[j] = float(v)
        try:
            res = self._nlp().solve(l, u, deadline=self.deadline)
        except NumericalFailure:
            # a numerically stuck heuristic must not kill the search; cache
            # a no-answer result so the assignment is not retried
            res = ConicResult(Status.ITER_LIMIT, None, math.inf, None, 0)
        self.stats.conic_solves += 1
        self.heuristic_cache[key] = res
        return res

    def _store_incumbent(self, x: np.ndarray, obj: float, source: str) -> None:
        self.lb = obj
        self.incumbent = np.array(x, dtype=float)
        self.trace.emit(event="incumbent", value=obj, source=source)

    def _accept_lp_incumbent(self, x: np.ndarray, obj: float) -> None:
        """Integral conic-feasible LP point; store its nonlinear repair.

        The repaired point is exactly feasible where the LP point is only
        feasible to CONE_FEAS_TOL; its objective can be lower by the same
        order, so fall back to the LP point when repair fails.
        """
        try:
            repair = self._fixed_integer_solve(x)
        except DeadlineReached:
            # keep the already-proved LP incumbent before the engine stops
            if obj > self.lb:
                self._store_incumbent(x, obj, "lp")
            raise
        if (
            repair.status is Status.OPTIMAL
            and repair.x is not None
            and repair.obj > self.lb
            and branch_variable_selection(repair.x, self.inst.int_vars) is None
        ):
            self._store_incumbent(repair.x, repair.obj, "repair")
        elif obj > self.lb:
            self._store_incumbent(x, obj, "lp")

    def _best_remaining(self, *extra: float) -> float:
        cands = [self.lb, *extra]
        cands.extend(node.nb for _, _, node in self.heap)
        return max(cands)

    def _result(self, status: Status) -> SolveResult:
        viol = None
        if self.incumbent is not None:
            viol = max_cone_violation(self.inst, self.incumbent)
        if status is Status.OPTIMAL:
            bound = self.lb
        elif status is Status.UNBOUNDED:
            bound = math.inf
        else:
            bound = self._best_remaining()
        res = SolveResult(status, self.incumbent, self.lb, bound, self.stats, viol)
        self.trace.emit(
            event="end",
            status=status.value,
            objective=None if self.lb == -math.inf else self.lb,
            best_bound=None if math.isinf(bound) else bound,
            nodes=self.stats.nodes,
            cuts=self.stats.cuts,
        )
        return res

    # -- node processing ---------------------------------------------------
    def _branch(self, node: _Node, x: np.ndarray, j: int, nb: float) -> None:
        down, up = _Node(node.l, node.u.copy(), nb), _Node(node.l.copy(), node.u, nb)
        down.u[j] = math.floor(x[j])
        up.l[j] = math.floor(x[j]) + 1.0
        self._push(down)
        self._push(up)

    def _refine_cut(self, node: _Node, res, k: int) -> None:
        """Alg-style tangent deepening: cut the integral point, re-queue."""
        added = self.lp.refine_exact(res, self.sep_tol)
        if not added:
            added = self.lp.refine_exact(res, 0.0)
        if added:
            self.stats.cuts += len(added)
            node.nb = res.obj
            self._push(node)
            self.trace.emit(
                event="node",
                k=k,
                action="refine_cut",
                nb=res.obj,
                lb=self._lb_json(),
                cuts_added=len(added),
                gammas=[[c, j, g] for c, j, g in added],
                requeue_nb=res.obj,
            )
            return
        # no tangent separates even at zero tolerance: fall back to one
        # sound branch-based step so the node cannot loop
        self._refine_branch(node, res, k)

    def _refine_branch(self, node: _Node, res, k: int) -> None:
        """Process the node as a nonlinear branch-and-bound would."""
        try:
            nlp = self._nlp().solve(node.l, node.u, deadline=self.deadline)
        except NumericalFailure:
            # treat like a no-point answer below: re-queue, never fathom
            nlp = ConicResult(Status.ITER_LIMIT, None, math.inf, None, 0)
        self.stats.conic_solves += 1
        if nlp.status is Status.INFEASIBLE or nlp.obj <= self.lb + BOUND_TOL:
            self.trace.emit(
                event="node", k=k, action="refine_branch_fathom",
                nb=res.obj, lb=self._lb_json(), cuts_added=0,
                nlp_obj=None if math.isinf(nlp.obj) else nlp.obj,
            )
            return
        if nlp.x is None:
            # solver returned no usable point: keep the node alive so the
            # run ends through its limits instead of fathoming unsoundly
            node.nb = res.obj
            self._push(node)
            self.trace.emit(
                event="node", k=k, action="refine_branch_stall",
                nb=res.obj, lb=self._lb_json(), cuts_added=0,
            )
            return
        j = branch_variable_selection(nlp.x, self.inst.int_vars)
        if j is None:
            if _feasible_incumbent(self.inst, nlp.x):
                self._store_incumbent(nlp.x, nlp.obj, "nlp_refine")
            self.trace.emit(
                event="node", k=k, action="refine_branch_incumbent",
                nb=res.obj, lb=self._lb_json(), cuts_added=0, nlp_obj=nlp.obj,
            )
            return
        self._branch(node, nlp.x, j, nlp.obj)
        self.trace.emit(
            event="node", k=k, action="refine_branch_branch",
            nb=res.obj, lb=self._lb_json(), cuts_added=0,
            nlp_obj=nlp.obj, branch_var=int(j),
        )

    def _lb_json(self):
        return None if self.lb == -math.inf else self.lb

    # -- main loop ---------------------------------------------------------
    def run(self) -> SolveResult:
        clock = _Clock(self.limits)
        self.deadline = clock.deadline
        inst = self.inst
        self.trace.emit(
            event="start", algo="lifted", strategy=self.strategy.value,
            n=inst.n, q=inst.q,
        )
        self._push(_Node(np.array(inst.lb, float), np.array(inst.ub, float), math.inf))
        while self.heap:
            if clock.expired():
                return self._result(Status.TIME_LIMIT)
            if self.limits.node_limit is not None and self.stats.nodes >= self.limits.node_limit:
                return self._result(Status.ITER_LIMIT)
            if self.limits.cut_limit is not None and self.stats.cuts > self.limits.cut_limit:
                return self._result(Status.ITER_LIMIT)
            _, k, node = heapq.heappop(self.heap)
            if node.nb <= self.lb + BOUND_TOL:
                self.trace.emit(
                    event="node", k=k, action="fathom_bound",
                    nb=node.nb, lb=self._lb_json(), cuts_added=0,
                )
                continue
            self.lp.set_bounds(node.l, node.u)
            try:
                res = self.lp.solve(deadline=clock.deadline)
            except DeadlineReached:
                # the popped node still carries an open bound; requeue it so
                # the reported best bound stays an honest upper bound
                self._push(node)
                return self._result(Status.TIME_LIMIT)
            except NumericalFailure:
                # unrecoverable LP breakdown: stop with an honest gap rather
                # than fathom a node whose bound was never established
                self._push(node)
                return self._result(Status.ITER_LIMIT)
            self.stats.nodes += 1
            self.stats.lp_solves += 1
            if res.status is LpStatus.PRIMAL_INFEASIBLE:
                self.trace.emit(
                    event="node", k=k, action="fathom_infeasible",
                    nb=None if math.isinf(node.nb) else node.nb,
                    lb=self._lb_json(), cuts_added=0,
                )
                continue
            if res.status is LpStatus.UNBOUNDED:
                # children only shrink the root region, so this is the root
                return self._result(Status.UNBOUNDED)
            if res.obj <= self.lb + BOUND_TOL:
                self.trace.emit(
                    event="node", k=k, action="fathom_bound",
                    nb=res.obj, lb=self._lb_json(), cuts_added=0,
                )
                continue
            x = self.lp.x_values(res)
            j = branch_variable_selection(x, inst.int_vars)
            if j is not None:
                self._branch(node, x, j, res.obj)
                self.trace.emit(
                    event="node", k=k, action="branch", nb=res.obj,
                    lb=self._lb_json(), cuts_added=0, branch_var=int(j),
                )
                continue
            if _feasible_incumbent(inst, x):
                try:
                    self._accept_lp_incumbent(x, res.obj)
                except DeadlineReached:
                    # the node is fathomed by its stored incumbent; no requeue
                    return self._result(Status.TIME_LIMIT)
                self.trace.emit(
                    event="node", k=k, action="incumbent", nb=res.obj,
                    lb=self._lb_json(), cuts_added=0,
                )
                continue
            # integral but conic-violated: try the fixed-integer heuristic,
            # then refine per strategy
            try:
                if inst.int_vars:
                    heur = self._fixed_integer_solve(x)
                    if (
                        heur.status is Status.OPTIMAL
                        and heur.x is not None
                        and heur.obj > self.lb
                        and branch_variable_selection(heur.x, inst.int_vars) is None
                    ):
                        self._store_incumbent(heur.x, heur.obj, "heuristic")
                if self.strategy is RefineStrategy.CUT_BASED:
                    self._refine_cut(node, res, k)
                else:
                    self._refine_branch(node, res, k)
            except DeadlineReached:
                node.nb = res.obj
                self._push(node)
                return self._result(Status.TIME_LIMIT)
        status = Status.OPTIMAL if self.incumbent is not None else Status.INFEASIBLE
        return self._result(status)


def solve_lifted(
    inst: MicqpInstance,
    eps: float = 0.01,
    strategy: RefineStrategy = RefineStrategy.CUT_BASED,
    use_static: bool = False,
    sep_gammas=None,
    limits: Limits | None = None,
    trace=None,
) -> SolveResult:
    """LP branch-and-bound with lifted cone relaxations at every node.

    ``use_static`` attaches the fixed tower lifting at quality ``eps``;
    CutBased additionally attaches tangent blocks whose pools start at
    ``sep_gammas`` (default: empty next to static rows, else {-1, 1}) and
    grow at integral conic-violated points.  ``trace`` takes a text file
    object and receives one JSON line per processed node.
    """
    return _LiftedEngine(inst, eps, strategy, use_static, sep_gammas, limits, trace).run()


# ---------------------------------------------------------------------------
# Outer approximation (flat cuts, MILP rounds)
# ---------------------------------------------------------------------------


class _OaEngine:
    def __init__(self, inst, initial_omegas, limits, trace):
        self.inst = inst
        self.limits = limits or Limits()
        self.trace = _Trace(trace)
        self.stats = SolveStats()
        self.lp = InstanceLp(inst)
        self.lp.attach_flat(axis_directions if initial_omegas is None else initial_omegas)

    def _refine_flat(self, x: np.ndarray, tol: float = SEP_TOL) -> int:
        """Add the unit-direction cut of every cone violated at x."""
        added = 0
        for cone, blk in zip(self.inst.cones, self.lp.flat_blocks):
            y0 = float(cone.a @ x + cone.b0)
            y = cone.A @ x + cone.b
            omega = separate_flat(y0, y, tol)
            if omega is not None and blk.add_direction(omega) is not None:
                added += 1
        return added

    def _solve_milp(self, clock: _Clock):
        """Exact MILP solve over the current cut rows by LP branch-and-bound.

        Ties in the best-bound queue prefer the most recent node, so the
        search dives; with many equal-bound nodes (pure feasibility) this
        reaches integral points without sweeping whole levels.
        """
        inst = self.inst
        heap: list = []
        seq = 0
        lb = -math.inf
        best_x = None
        tried_rounding = False
        root = _Node(np.array(inst.lb, float), np.array(inst.ub, float), math.inf)
        heapq.heappush(heap, (-root.nb, -seq, root))
        seq += 1
        while heap:
            if clock.expired():
                return Status.TIME_LIMIT, best_x, lb, max(
                    [lb] + [n.nb for _, _, n in heap]
                )
            if self.limits.node_limit is not None and self.stats.nodes >= self.limits.node_limit:
                return Status.ITER_LIMIT, best_x, lb, max(
                    [lb] + [n.nb for _, _, n in heap]
                )
            _, _, node = heapq.heappop(heap)
            if node.nb <= lb + BOUND_TOL:
                continue
            self.lp.set_bounds(node.l, node.u)
            try:
                res = self.lp.solve(deadline=clock.deadline)
            except DeadlineReached:
                return Status.TIME_LIMIT, best_x, lb, max(
                    [lb, node.nb] + [n.nb for _, _, n in heap]
                )
            except NumericalFailure:
                # stop with the honest gap; the unresolved node keeps its bound
                return Status.ITER_LIMIT, best_x, lb, max(
                    [lb, node.nb] + [n.nb for _, _, n in heap]
                )
            self.stats.nodes += 1
            self.stats.lp_solves += 1
            if res.status is LpStatus.PRIMAL_INFEASIBLE:
                continue
            if res.status is LpStatus.UNBOUNDED:
                return Status.UNBOUNDED, None, math.inf, math.inf
            if res.obj <= lb + BOUND_TOL:
                continue
            x = self.lp.x_values(res)
            j = branch_variable_selection(x, inst.int_vars)
            if j is None:
                lb = res.obj
                best_x = x
                continue
            if not tried_rounding:
                # one-shot rounding: pin the integer variables to the rounded
                # LP point and re-solve; pinning only shrinks the region, so
                # a feasible result is a valid incumbent, and the bound prune
                # then retires equal-bound nodes without further LP work
                tried_rounding = True
                l2, u2 = node.l.copy(), node.u.copy()
                for jj in inst.int_vars:
                    v = min(max(round(x[jj]), node.l[jj]), node.u[jj])
                    l2[jj] = u2[jj] = float(v)
                self.lp.set_bounds(l2, u2)
                try:
                    fix = self.lp.solve(deadline=clock.deadline)
                except DeadlineReached:
                    return Status.TIME_LIMIT, best_x, lb, max(
                        [lb, res.obj] + [n.nb for _, _, n in heap]
                    )
                except NumericalFailure:
                    fix = None  # rounding is optional; skip it
                self.stats.lp_solves += 1
                if fix is not None and fix.status is LpStatus.OPTIMAL and fix.obj > lb:
                    lb = fix.obj
                    best_x = self.lp.x_values(fix)
            down = _Node(node.l, node.u.copy(), res.obj)
            up = _Node(node.l.copy(), node.u, res.obj)
            down.u[j] = math.floor(x[j])
            up.l[j] = math.floor(x[j]) + 1.0
            heapq.heappush(heap, (-down.nb, -seq, down))
            seq += 1
            heapq.heappush(heap, (-up.nb, -seq, up))
            seq += 1
        if best_x is None:
            return Status.INFEASIBLE, None, -math.inf, -math.inf
        return Status.OPTIMAL, best_x, lb, lb

    def run(self) -> SolveResult:
        clock = _Clock(self.limits)
        inst = self.inst
        self.trace.emit(event="start", algo="oa", n=inst.n, q=inst.q)
        rounds = 0
        x = None
        bound = math.inf
        while True:
            rounds += 1
            status, x, obj, bound = self._solve_milp(clock)
            if status in (Status.INFEASIBLE, Status.UNBOUNDED):
                self.trace.emit(event="end", status=status.value, rounds=rounds)
                return SolveResult(status, None, -math.inf,
                                   -math.inf if status is Status.INFEASIBLE else math.inf,
                                   self.stats)
            if status in (Status.TIME_LIMIT, Status.ITER_LIMIT):
                break
            viol = max_cone_violation(inst, x)
            if viol <= CONE_FEAS_TOL and _signed_cone_ok(inst, x, CONE_FEAS_TOL):
                self.trace.emit(
                    event="end", status=Status.OPTIMAL.value, rounds=rounds,
                    objective=obj, cuts=self.stats.cuts,
                )
                return SolveResult(Status.OPTIMAL, x, obj, obj, self.stats, viol)
            added = self._refine_flat(x)
            if added == 0:
                # large y0 can push the gauge slack under the default
                # tolerance while the squared metric still flags the point
                added = self._refine_flat(x, 0.0)
            self.stats.cuts += added
            self.trace.emit(
                event="oa_round", round=rounds, milp_obj=obj,
                cuts_added=added, total_cuts=self.stats.cuts,
            )
            if added == 0:
                status = Status.ITER_LIMIT  # nothing separates: stalled
                break
            if self.limits.cut_limit is not None and self.stats.cuts > self.limits.cut_limit:
                status = Status.ITER_LIMIT
                break
            if clock.expired():
                status = Status.TIME_LIMIT
                break
        viol = None if x is None else max_cone_violation(inst, x)
        self.trace.emit(
            event="end", status=status.value, rounds=rounds,
            cuts=self.stats.cuts,
            best_bound=None if math.isinf(bound) else bound,
        )
        return SolveResult(status, x, -math.inf if x is None else float(self.inst.c @ x),
                           bound, self.stats, viol)


def solve_oa(
    inst: MicqpInstance,
    initial_omegas=None,
    limits: Limits | None = None,
    trace=None,
) -> SolveResult:
    """Outer-approximation rounds of exact MILP solves plus flat cone cuts.

    ``initial_omegas`` seeds every cone's direction pool (default: signed
    axis directions, which bound each cone section).  The caller is
    responsible for an initial pool making the MILP bounded; an unbounded
    relaxation is reported as Unbounded.
    """
    return _OaEngine(inst, initial_omegas, limits, trace).run()
