import json
import math

import numpy as np
import pytest

from micqp.model import (
    ConeBlock,
    DimensionError,
    MicqpInstance,
    ParseError,
    max_cone_violation,
    read_instance,
    write_instance,
)


def identity_cone_instance(n=2, b0=1.0, int_vars=(0,)):
    return MicqpInstance(
        n=n,
        c=np.eye(n)[0],
        E=np.zeros((0, n)),
        h=np.zeros(0),
        cones=[ConeBlock(A=np.eye(n), b=np.zeros(n), a=np.zeros(n), b0=b0)],
        int_vars=int_vars,
        lb=np.full(n, -np.inf),
        ub=np.full(n, np.inf),
    )


def test_identity_cone_file(tmp_path):
    path = tmp_path / "inst.json"
    write_instance(identity_cone_instance(), path)
    inst = read_instance(path)
    assert inst.n == 2 and inst.q == 1 and inst.cones[0].d == 2
    assert inst.int_vars == (0,)


def test_dimension_mismatch_cone():
    with pytest.raises(DimensionError):
        ConeBlock(A=np.zeros((3, 2)), b=np.zeros(2), a=np.zeros(2), b0=0.0)


def test_roundtrip_identity(tmp_path):
    inst = identity_cone_instance()
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_instance(inst, p1)
    back = read_instance(p1)
    assert back == inst
    write_instance(back, p2)
    assert read_instance(p2) == inst


def test_roundtrip_awkward_floats(tmp_path):
    rng = np.random.default_rng(0)
    n = 3
    inst = MicqpInstance(
        n=n,
        c=rng.standard_normal(n) * 1e-7,
        E=rng.standard_normal((2, n)) * math.pi,
        h=rng.standard_normal(2),
        cones=[
            ConeBlock(
                A=rng.standard_normal((2, n)),
                b=rng.standard_normal(2),
                a=rng.standard_normal(n),
                b0=0.1 + 0.2,  # classic non-representable sum
            )
        ],
        int_vars=(1, 2),
        lb=np.array([-np.inf, 0.0, -1.5]),
        ub=np.array([np.inf, 1.0, 2.5]),
    )
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    assert read_instance(path) == inst  # bit-exact floats


def test_infinity_tokens(tmp_path):
    inst = identity_cone_instance()
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    doc = json.loads(path.read_text())
    assert doc["ub"] == ["inf", "inf"] and doc["lb"] == ["-inf", "-inf"]


def test_minimize_negated_at_read(tmp_path):
    path = tmp_path / "inst.json"
    write_instance(identity_cone_instance(), path)
    doc = json.loads(path.read_text())
    doc["maximize"] = False
    path.write_text(json.dumps(doc))
    inst = read_instance(path)
    assert inst.was_minimize and inst.c[0] == -1.0
    # round-trips back to the minimize form
    write_instance(inst, path)
    doc2 = json.loads(path.read_text())
    assert doc2["maximize"] is False and doc2["c"][0] == 1.0


def test_unknown_field_rejected(tmp_path):
    path = tmp_path / "inst.json"
    write_instance(identity_cone_instance(), path)
    doc = json.loads(path.read_text())
    doc["comment"] = "nope"
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError):
        read_instance(path)


def test_empty_cone_list(tmp_path):
    inst = MicqpInstance(
        n=1, c=[1.0], E=[[1.0]], h=[2.0], cones=[], int_vars=(),
        lb=[0.0], ub=[10.0],
    )
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    back = read_instance(path)
    assert back.q == 0 and back == inst


def test_bad_dimension_in_file(tmp_path):
    path = tmp_path / "inst.json"
    write_instance(identity_cone_instance(), path)
    doc = json.loads(path.read_text())
    doc["cones"][0]["b"] = [0.0, 0.0, 0.0]  # 3 entries vs 2 rows of A
    path.write_text(json.dumps(doc))
    with pytest.raises(DimensionError):
        read_instance(path)


def test_violation_hand_values():
    inst = identity_cone_instance()
    assert max_cone_violation(inst, np.array([1.0, 1.0])) == pytest.approx(1.0)
    assert max_cone_violation(inst, np.array([0.0, 0.0])) == pytest.approx(-1.0)


def test_violation_empty_is_minus_inf():
    inst = MicqpInstance(
        n=1, c=[0.0], E=np.zeros((0, 1)), h=[], cones=[], int_vars=(),
        lb=[0.0], ub=[1.0],
    )
    assert max_cone_violation(inst, np.array([0.5])) == -math.inf


def test_violation_permutation_invariant():
    rng = np.random.default_rng(3)
    n = 4
    cones = [
        ConeBlock(
            A=rng.standard_normal((d, n)),
            b=rng.standard_normal(d),
            a=rng.standard_normal(n),
            b0=rng.standard_normal(),
        )
        for d in (1, 2, 3)
    ]
    base = MicqpInstance(
        n=n, c=np.zeros(n), E=np.zeros((0, n)), h=[], cones=cones,
        int_vars=(), lb=np.full(n, -np.inf), ub=np.full(n, np.inf),
    )
    perm = MicqpInstance(
        n=n, c=np.zeros(n), E=np.zeros((0, n)), h=[], cones=cones[::-1],
        int_vars=(), lb=np.full(n, -np.inf), ub=np.full(n, np.inf),
    )
    for _ in range(20):
        x = rng.standard_normal(n)
        assert max_cone_violation(base, x) == pytest.approx(max_cone_violation(perm, x))


def test_violation_zero_on_cone_boundary():
    rng = np.random.default_rng(7)
    n = 3
    for _ in range(50):
        A = rng.standard_normal((3, n))
        b = rng.standard_normal(3)
        x = rng.standard_normal(n)
        # choose (a, b0) so that a.x + b0 equals the norm exactly
        a = rng.standard_normal(n)
        b0 = float(np.linalg.norm(A @ x + b) - a @ x)
        inst = MicqpInstance(
            n=n, c=np.zeros(n), E=np.zeros((0, n)), h=[],
            cones=[ConeBlock(A=A, b=b, a=a, b0=b0)], int_vars=(),
            lb=np.full(n, -np.inf), ub=np.full(n, np.inf),
        )
        scale = max(1.0, np.linalg.norm(A @ x + b) ** 2)
        assert abs(max_cone_violation(inst, x)) <= 1e-12 * scale * 10


def test_int_vars_validation():
    with pytest.raises(DimensionError):
        identity_cone_instance(int_vars=(1, 1))
    with pytest.raises(DimensionError):
        identity_cone_instance(int_vars=(2,))


def test_bounds_validation():
    with pytest.raises(DimensionError):
        MicqpInstance(
            n=1, c=[0.0], E=np.zeros((0, 1)), h=[], cones=[], int_vars=(),
            lb=[1.0], ub=[0.0],
        )
