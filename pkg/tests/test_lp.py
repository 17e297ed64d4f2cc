import math
import time

import numpy as np
import pytest

from micqp.lp import DeadlineReached, LpModel, LpStatus, dump_model, solve


def simple_model(n, lb, ub, obj):
    m = LpModel()
    m.add_cols(lb=np.asarray(lb, float), ub=np.asarray(ub, float), obj=np.asarray(obj, float))
    return m


def test_single_constraint():
    m = simple_model(1, [0.0], [10.0], [1.0])
    m.add_rows([({0: 1.0}, "<=", 3.0)])
    res = solve(m)
    assert res.status is LpStatus.OPTIMAL
    assert res.obj == pytest.approx(3.0)


def test_textbook():
    m = simple_model(2, [0.0, 0.0], [np.inf, np.inf], [1.0, 1.0])
    m.add_rows([({0: 1.0, 1: 1.0}, "<=", 1.0)])
    res = solve(m)
    assert res.status is LpStatus.OPTIMAL
    assert res.obj == pytest.approx(1.0)


def test_contradictory_rows():
    m = simple_model(1, [-np.inf], [np.inf], [1.0])
    m.add_rows([({0: 1.0}, ">=", 2.0), ({0: 1.0}, "<=", 1.0)])
    res = solve(m)
    assert res.status is LpStatus.PRIMAL_INFEASIBLE


def test_empty_box():
    m = simple_model(1, [0.0], [10.0], [1.0])
    m.set_var_bounds(0, 2.0, 1.0)
    assert solve(m).status is LpStatus.PRIMAL_INFEASIBLE


def test_unbounded():
    m = simple_model(1, [0.0], [np.inf], [1.0])
    assert solve(m).status is LpStatus.UNBOUNDED


def test_free_variable_equality():
    m = simple_model(2, [-np.inf, -np.inf], [np.inf, np.inf], [1.0, 0.0])
    m.add_rows([({0: 1.0, 1: 2.0}, "=", 4.0), ({1: 1.0}, ">=", 1.0)])
    res = solve(m)
    assert res.status is LpStatus.OPTIMAL
    assert res.obj == pytest.approx(2.0)  # x1 = 1 at its row bound, x0 = 2
    assert res.x[1] == pytest.approx(1.0)


def test_bounds_only_no_rows():
    m = simple_model(2, [-1.0, 2.0], [3.0, 5.0], [1.0, -1.0])
    res = solve(m)
    assert res.status is LpStatus.OPTIMAL
    assert res.obj == pytest.approx(3.0 - 2.0)


def random_lp(rng, n, m):
    """Feasible-by-construction bounded LP."""
    model = LpModel()
    lb = rng.uniform(-2.0, 0.0, n)
    ub = lb + rng.uniform(0.5, 3.0, n)
    obj = rng.standard_normal(n)
    model.add_cols(lb=lb, ub=ub, obj=obj)
    x0 = rng.uniform(lb, ub)
    A = rng.standard_normal((m, n))
    senses = rng.choice(["<=", ">=", "="], m, p=[0.5, 0.3, 0.2])
    rows = []
    for i in range(m):
        lhs = float(A[i] @ x0)
        if senses[i] == "<=":
            rows.append((A[i].copy(), "<=", lhs + abs(rng.standard_normal())))
        elif senses[i] == ">=":
            rows.append((A[i].copy(), ">=", lhs - abs(rng.standard_normal())))
        else:
            rows.append((A[i].copy(), "=", lhs))
    model.add_rows(rows)
    return model, x0


def feasible_points(rng, model, x_known, count=30):
    """Rejection-sample feasible points near x_known by convex combination."""
    pts = [x_known]
    n = model.num_vars
    A = np.array([r[0] for r in model.rows]) if model.num_rows else np.zeros((0, n))
    senses = [r[1] for r in model.rows]
    rhs = np.array([r[2] for r in model.rows])
    for _ in range(count * 20):
        cand = rng.uniform(model.col_lb, model.col_ub)
        lam = rng.uniform(0.0, 1.0)
        z = lam * cand + (1 - lam) * x_known
        ok = True
        for i, s in enumerate(senses):
            v = A[i] @ z
            if s == "<=" and v > rhs[i] + 1e-9:
                ok = False
            if s == ">=" and v < rhs[i] - 1e-9:
                ok = False
            if s == "=" and abs(v - rhs[i]) > 1e-9:
                ok = False
        if ok:
            pts.append(z)
        if len(pts) >= count:
            break
    return pts


def test_weak_duality_random():
    rng = np.random.default_rng(42)
    for trial in range(25):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, 10))
        model, x0 = random_lp(rng, n, m)
        res = solve(model)
        assert res.status is LpStatus.OPTIMAL, f"trial {trial}"
        obj = np.asarray(model.obj)
        for z in feasible_points(rng, model, x0, count=10):
            assert res.obj >= obj @ z - 1e-7


def test_added_row_never_increases_objective():
    rng = np.random.default_rng(7)
    for trial in range(15):
        model, _ = random_lp(rng, 5, 4)
        res1 = solve(model)
        assert res1.status is LpStatus.OPTIMAL
        coeffs = rng.standard_normal(5)
        # cut through the optimum to force a change sometimes
        model.add_rows([(coeffs.copy(), "<=", float(coeffs @ res1.x) - 0.1)])
        res2 = solve(model)
        if res2.status is LpStatus.OPTIMAL:
            assert res2.obj <= res1.obj + 1e-7


def test_relaxing_bound_never_decreases_objective():
    rng = np.random.default_rng(17)
    for _ in range(10):
        model, _ = random_lp(rng, 5, 4)
        res1 = solve(model)
        j = int(rng.integers(0, 5))
        model.set_var_bounds(j, model.col_lb[j] - 1.0, model.col_ub[j] + 1.0)
        res2 = solve(model)
        assert res2.obj >= res1.obj - 1e-7


def test_warm_equals_cold():
    rng = np.random.default_rng(3)
    for _ in range(15):
        model, _ = random_lp(rng, 6, 5)
        res1 = solve(model)
        assert res1.status is LpStatus.OPTIMAL
        cut = rng.standard_normal(6)
        row = (cut.copy(), "<=", float(cut @ res1.x) - 0.05)
        warm = solve(model) if False else None
        model.add_rows([row])
        res_warm = solve(model)          # warm: basis stored from res1
        model.clear_basis()
        res_cold = solve(model)
        assert res_warm.status == res_cold.status
        if res_warm.status is LpStatus.OPTIMAL:
            assert res_warm.obj == pytest.approx(res_cold.obj, abs=1e-7)


def test_warm_start_is_cheap():
    # re-solve after one cut should take far fewer iterations than from cold
    rng = np.random.default_rng(11)
    model, _ = random_lp(rng, 12, 10)
    res1 = solve(model)
    assert res1.status is LpStatus.OPTIMAL
    cut = rng.standard_normal(12)
    model.add_rows([(cut.copy(), "<=", float(cut @ res1.x) - 0.01)])
    res_warm = solve(model)
    assert res_warm.status is LpStatus.OPTIMAL
    assert res_warm.iterations <= res1.iterations + 5


def test_bound_change_warm():
    m = simple_model(2, [0.0, 0.0], [4.0, 4.0], [1.0, 1.0])
    m.add_rows([({0: 1.0, 1: 1.0}, "<=", 6.0)])
    res1 = solve(m)
    assert res1.obj == pytest.approx(6.0)
    m.set_var_bounds(0, 0.0, 1.0)
    res2 = solve(m)  # dual simplex repair
    assert res2.status is LpStatus.OPTIMAL
    assert res2.obj == pytest.approx(5.0)
    m.set_var_bounds(0, 0.0, 4.0)
    res3 = solve(m)
    assert res3.obj == pytest.approx(6.0)


def test_nonbinding_row_keeps_objective():
    m = simple_model(2, [0.0, 0.0], [1.0, 1.0], [1.0, 2.0])
    res1 = solve(m)
    m.add_rows([({0: 1.0, 1: 1.0}, "<=", 100.0)])
    res2 = solve(m)
    assert res2.obj == pytest.approx(res1.obj)


def test_degenerate_lp():
    # many redundant constraints through one vertex
    m = simple_model(2, [0.0, 0.0], [np.inf, np.inf], [1.0, 1.0])
    rows = [({0: 1.0, 1: 1.0}, "<=", 1.0)]
    for k in range(1, 8):
        rows.append(({0: 1.0, 1: 1.0 + 1e-12 * k}, "<=", 1.0))
    m.add_rows(rows)
    res = solve(m)
    assert res.status is LpStatus.OPTIMAL
    assert res.obj == pytest.approx(1.0, abs=1e-7)


def test_equality_infeasible():
    m = simple_model(2, [0.0, 0.0], [1.0, 1.0], [0.0, 0.0])
    m.add_rows([({0: 1.0, 1: 1.0}, "=", 3.0)])
    assert solve(m).status is LpStatus.PRIMAL_INFEASIBLE


def test_objective_change_reuses_basis():
    rng = np.random.default_rng(5)
    model, _ = random_lp(rng, 6, 5)
    res1 = solve(model)
    newobj = rng.standard_normal(6)
    model.set_objective(newobj)
    res2 = solve(model)  # primal from stored (primal-feasible) basis
    model.clear_basis()
    res3 = solve(model)
    assert res2.obj == pytest.approx(res3.obj, abs=1e-7)


def test_dump_readable():
    m = simple_model(2, [0.0, 0.0], [1.0, 2.0], [1.0, 0.0])
    m.add_rows([({0: 1.0, 1: -1.0}, "<=", 0.5)])
    text = dump_model(m)
    assert "r0:" in text and "<=" in text and "x0" in text


def random_lp_for_deadline(rng, n, m):
    model = LpModel()
    model.add_cols(lb=np.zeros(n), ub=np.full(n, 10.0), obj=rng.standard_normal(n))
    rows = [(rng.standard_normal(n), "<=", float(5.0 + rng.uniform(0, 5))) for _ in range(m)]
    model.add_rows(rows)
    return model


def test_expired_deadline_raises():
    m = random_lp_for_deadline(np.random.default_rng(0), 8, 6)
    with pytest.raises(DeadlineReached):
        solve(m, deadline=time.perf_counter() - 1.0)


def test_generous_deadline_matches_unlimited():
    rng = np.random.default_rng(1)
    m1 = random_lp_for_deadline(rng, 8, 6)
    res_plain = solve(m1)
    rng = np.random.default_rng(1)
    m2 = random_lp_for_deadline(rng, 8, 6)
    res_dl = solve(m2, deadline=time.perf_counter() + 60.0)
    assert res_dl.status is res_plain.status
    assert res_dl.obj == pytest.approx(res_plain.obj, abs=1e-9)


def test_deadline_interrupts_long_pivoting():
    # large dense LP whose cold solve takes well over the allotted slice;
    # the pivot-loop check must fire within a small multiple of the slice
    rng = np.random.default_rng(2)
    model = LpModel()
    n, m = 300, 260
    model.add_cols(lb=np.zeros(n), ub=np.full(n, 50.0), obj=rng.standard_normal(n))
    A = rng.standard_normal((m, n))
    model.add_rows([(A[i], "<=", float(10.0 + rng.uniform(0, 5))) for i in range(m)])
    t0 = time.perf_counter()
    try:
        solve(model)  # no deadline: establish this instance is actually slow
        baseline = time.perf_counter() - t0
    except Exception:
        baseline = math.inf
    if baseline < 0.2:
        pytest.skip("instance solved too quickly to exercise the deadline")
    model.clear_basis()
    t0 = time.perf_counter()
    with pytest.raises(DeadlineReached):
        solve(model, deadline=t0 + 0.05)
    assert time.perf_counter() - t0 < max(1.0, baseline / 2)
