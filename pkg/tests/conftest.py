"""Shared helpers: a seeded random-instance generator and an independent
reference solver (cvxpy/CLARABEL) used to cross-check results."""

import math

import numpy as np
import pytest

from micqp.model import ConeBlock, MicqpInstance


def random_micqp(rng, n_max=6, q_max=2, d_max=4, n_ints=0, strict_slack=0.1):
    """Bounded random instance, strictly feasible at a hidden box point."""
    n = int(rng.integers(2, n_max + 1))
    lb = rng.uniform(-3.0, 0.0, n)
    ub = lb + rng.uniform(1.0, 4.0, n)
    x0 = rng.uniform(lb, ub)
    m = int(rng.integers(0, 4))
    E = rng.standard_normal((m, n))
    h = E @ x0 + rng.uniform(strict_slack, 1.5, m)
    cones = []
    for _ in range(int(rng.integers(0, q_max + 1))):
        d = int(rng.integers(1, d_max + 1))
        A = rng.standard_normal((d, n)) * (rng.random((d, n)) < 0.8)
        b = rng.standard_normal(d) * 0.5
        a = rng.standard_normal(n) * 0.5
        b0 = float(np.linalg.norm(A @ x0 + b) - a @ x0 + rng.uniform(strict_slack, 1.0))
        cones.append(ConeBlock(A=A, b=b, a=a, b0=b0))
    c = rng.standard_normal(n)
    ints = tuple(sorted(rng.choice(n, size=min(n_ints, n), replace=False).tolist())) if n_ints else ()
    return MicqpInstance(n=n, c=c, E=E, h=h, cones=cones, int_vars=ints, lb=lb, ub=ub)


def cvxpy_reference(inst, l=None, u=None, integer=False):
    """Reference solve; returns (status, obj, x) with status in
    {'optimal', 'infeasible', 'unbounded'}."""
    cp = pytest.importorskip("cvxpy")
    kind = {"integer": True} if integer and inst.int_vars else {}
    if kind:
        x = cp.Variable(inst.n)
        zint = cp.Variable(len(inst.int_vars), integer=True)
    else:
        x = cp.Variable(inst.n)
    cons = []
    if kind:
        cons.append(x[list(inst.int_vars)] == zint)
    lo = np.asarray(inst.lb if l is None else l, dtype=float)
    hi = np.asarray(inst.ub if u is None else u, dtype=float)
    for j in range(inst.n):
        if np.isfinite(lo[j]):
            cons.append(x[j] >= lo[j])
        if np.isfinite(hi[j]):
            cons.append(x[j] <= hi[j])
    if inst.m:
        cons.append(inst.E @ x <= inst.h)
    for cone in inst.cones:
        cons.append(cp.SOC(cone.a @ x + cone.b0, cone.A @ x + cone.b))
    prob = cp.Problem(cp.Maximize(inst.c @ x), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        return "failed", None, None
    st = prob.status
    if st in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return "optimal", float(prob.value), np.asarray(x.value, dtype=float)
    if st in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return "infeasible", None, None
    if st in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        return "unbounded", None, None
    return "failed", None, None


def fball_instance(n, c=None):
    """Integer-free ball: ||x - (1/2)1|| <= sqrt((n-1)/4), all x integer.

    The ball contains no integer point (every integer vector is at squared
    distance >= n/4 from the center), so the instance is integer-infeasible
    while its continuous relaxation is not.
    """
    cvec = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    cone = ConeBlock(
        A=np.eye(n), b=-0.5 * np.ones(n), a=np.zeros(n),
        b0=math.sqrt((n - 1) / 4.0),
    )
    inf = np.full(n, math.inf)
    return MicqpInstance(
        n=n, c=cvec, E=np.zeros((0, n)), h=np.zeros(0), cones=[cone],
        int_vars=tuple(range(n)), lb=-inf, ub=inf,
    )


def enumerate_integer_optimum(inst, worker=None):
    """Brute-force oracle: try every integer assignment within the bounds,
    solving the continuous problem with those values fixed.

    Returns (objective, x) with objective -inf when nothing is feasible.
    Requires finite bounds on the integer variables.
    """
    from itertools import product

    from micqp.conic import ConicWorker
    from micqp.model import Status

    if worker is None:
        worker = ConicWorker(inst)
    ranges = []
    for j in inst.int_vars:
        lo, hi = math.ceil(inst.lb[j] - 1e-9), math.floor(inst.ub[j] + 1e-9)
        ranges.append(range(lo, hi + 1))
    best, best_x = -math.inf, None
    for values in product(*ranges):
        l = np.array(inst.lb, dtype=float)
        u = np.array(inst.ub, dtype=float)
        for j, v in zip(inst.int_vars, values):
            l[j] = u[j] = float(v)
        res = worker.solve(l, u)
        if res.status is Status.OPTIMAL and res.obj > best:
            best, best_x = res.obj, res.x
    return best, best_x


def ball_instance(n, radius, c=None):
    """max c.x subject to ||x|| <= radius (A = I, centered at the origin)."""
    cvec = np.ones(n) if c is None else np.asarray(c, dtype=float)
    cone = ConeBlock(A=np.eye(n), b=np.zeros(n), a=np.zeros(n), b0=float(radius))
    inf = np.full(n, math.inf)
    return MicqpInstance(
        n=n, c=cvec, E=np.zeros((0, n)), h=np.zeros(0), cones=[cone],
        int_vars=(), lb=-inf, ub=inf,
    )
