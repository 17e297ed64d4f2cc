"""Instance-level reformulations that split large cones into small ones.

Every transformer maps a MicqpInstance to a new MicqpInstance over the
original variables followed by fresh auxiliary columns, so any solver
configuration can consume the result unchanged:

* ``reform_tower``    -- each cone of dimension >= 3 becomes a balanced
  cascade of two-dimensional cones glued by shared auxiliary columns.
* ``reform_sep``      -- each cone becomes d rotated constraints
  y_j^2 <= w_j y0 plus the budget row sum(w) <= y0 and the sign row
  0 <= y0.
* ``reform_towersep`` -- the tower skeleton with every two-dimensional
  sub-cone replaced by its rotated/budget form.
* ``strengthen_perspective`` -- for the identity-factor cardinality
  portfolio shape only: replaces ||x|| <= sigma with x_j^2 <= w_j z_j
  and sum(w) <= sigma^2, which is tighter at the root while cutting no
  integer-feasible point.

Rotated constraints y^2 <= w*y0 (w, y0 >= 0) are stored as ordinary
Lorentz cones via the rotation ((w+y0)/2, y, (w-y0)/2), keeping a single
cone kind throughout the solver and separation code.  The ``back`` matrix
of a ReformulatedInstance projects extended points onto the original
variables; since auxiliary columns carry zero objective, objectives agree
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConeBlock, MicqpInstance

__all__ = [
    "NotApplicable",
    "ReformulatedInstance",
    "reform_tower",
    "reform_sep",
    "reform_towersep",
    "strengthen_perspective",
    "REFORMS",
]


class NotApplicable(ValueError):
    """The instance does not have the structure the transformer needs."""


@dataclass
class ReformulatedInstance:
    """Extended instance plus the linear map back to original variables."""

    inst: MicqpInstance
    back: np.ndarray                   # (n_orig, n_ext), here [I 0]

    def back_map(self, x_ext) -> np.ndarray:
        return self.back @ np.asarray(x_ext, dtype=float)


# An affine expression over extended columns: ({col: coef}, constant).
def _scale(e, s):
    coeffs, const = e
    return ({j: s * v for j, v in coeffs.items()}, s * const)


def _add(e1, e2):
    coeffs = dict(e1[0])
    for j, v in e2[0].items():
        coeffs[j] = coeffs.get(j, 0.0) + v
    return coeffs, e1[1] + e2[1]


class _Builder:
    """Accumulates auxiliary columns, linear rows, and small cones."""

    def __init__(self, inst: MicqpInstance):
        self.inst = inst
        self.n = inst.n
        self.aux_lb: list[float] = []
        self.aux_ub: list[float] = []
        self.new_rows: list[tuple[dict[int, float], float]] = []
        self.new_cones: list[tuple[tuple, list[tuple]]] = []
        self.keep: list[ConeBlock] = []

    def aux(self, lb: float = 0.0, ub: float = math.inf) -> int:
        j = self.n + len(self.aux_lb)
        self.aux_lb.append(lb)
        self.aux_ub.append(ub)
        return j

    @staticmethod
    def col(j: int):
        return {j: 1.0}, 0.0

    @staticmethod
    def affine(vec, const):
        return (
            {j: float(v) for j, v in enumerate(np.asarray(vec, float)) if v != 0.0},
            float(const),
        )

    def add_row_le(self, expr, rhs: float = 0.0) -> None:
        coeffs, const = expr
        self.new_rows.append((dict(coeffs), rhs - const))

    def add_cone(self, head, body) -> None:
        self.new_cones.append((head, list(body)))

    def add_rotated(self, w_expr, y0_expr, y_expr) -> None:
        """y^2 <= w*y0 with w, y0 >= 0 as a Lorentz cone via rotation."""
        head = _scale(_add(w_expr, y0_expr), 0.5)
        tail = _scale(_add(w_expr, _scale(y0_expr, -1.0)), 0.5)
        self.add_cone(head, [y_expr, tail])

    def _dense(self, expr) -> tuple[np.ndarray, float]:
        coeffs, const = expr
        row = np.zeros(self.n + len(self.aux_lb))
        for j, v in coeffs.items():
            row[j] = v
        return row, const

    def finish(self) -> ReformulatedInstance:
        inst = self.inst
        n_aux = len(self.aux_lb)
        n_ext = self.n + n_aux
        pad = np.zeros((inst.E.shape[0], n_aux))
        rows = [np.hstack([inst.E, pad])]
        rhs = [inst.h]
        if self.new_rows:
            dense = np.zeros((len(self.new_rows), n_ext))
            extra_rhs = np.zeros(len(self.new_rows))
            for i, (coeffs, r) in enumerate(self.new_rows):
                for j, v in coeffs.items():
                    dense[i, j] = v
                extra_rhs[i] = r
            rows.append(dense)
            rhs.append(extra_rhs)
        cones = []
        for ko in self.keep:
            cones.append(
                ConeBlock(
                    A=np.hstack([ko.A, np.zeros((ko.d, n_aux))]),
                    b=ko.b.copy(),
                    a=np.concatenate([ko.a, np.zeros(n_aux)]),
                    b0=ko.b0,
                )
            )
        for head, body in self.new_cones:
            parts = [self._dense(e) for e in body]
            a_row, b0 = self._dense(head)
            cones.append(
                ConeBlock(
                    A=np.vstack([p[0] for p in parts]),
                    b=np.array([p[1] for p in parts]),
                    a=a_row,
                    b0=b0,
                )
            )
        new_inst = MicqpInstance(
            n=n_ext,
            c=np.concatenate([inst.c, np.zeros(n_aux)]),
            E=np.vstack(rows),
            h=np.concatenate(rhs),
            cones=cones,
            int_vars=inst.int_vars,
            lb=np.concatenate([inst.lb, np.array(self.aux_lb)]),
            ub=np.concatenate([inst.ub, np.array(self.aux_ub)]),
            was_minimize=inst.was_minimize,
        )
        back = np.hstack([np.eye(self.n), np.zeros((self.n, n_aux))])
        return ReformulatedInstance(inst=new_inst, back=back)


def _cone_exprs(b: _Builder, cone: ConeBlock):
    head = b.affine(cone.a, cone.b0)
    body = [b.affine(cone.A[i], cone.b[i]) for i in range(cone.d)]
    return head, body


def _tower_levels(b: _Builder, cone: ConeBlock, make_gadget) -> None:
    """Halve the cone's entries level by level down to the y0 expression.

    ``make_gadget(out, left, right)`` receives affine expressions with
    ||(left, right)|| <= out; odd trailing entries pass through unchanged,
    and the final gadget's output is y0 itself, so a d-cone yields d-1
    gadgets over d-2 fresh columns (plus whatever make_gadget adds).
    """
    head, cur = _cone_exprs(b, cone)
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) // 2):
            out = head if len(cur) == 2 else b.col(b.aux(0.0))
            make_gadget(out, cur[2 * i], cur[2 * i + 1])
            nxt.append(out)
        if len(cur) % 2:
            nxt.append(cur[-1])
        cur = nxt


def reform_tower(inst: MicqpInstance) -> ReformulatedInstance:
    """Replace every cone of dimension >= 3 by its two-dimensional cascade."""
    b = _Builder(inst)
    for cone in inst.cones:
        if cone.d <= 2:
            b.keep.append(cone)
            continue
        _tower_levels(b, cone, lambda out, lft, rgt: b.add_cone(out, [lft, rgt]))
    return b.finish()


def reform_sep(inst: MicqpInstance) -> ReformulatedInstance:
    """Per cone: d rotated constraints plus the w-budget and sign rows."""
    b = _Builder(inst)
    for cone in inst.cones:
        head, body = _cone_exprs(b, cone)
        total = ({}, 0.0)
        for y_expr in body:
            w = b.col(b.aux(0.0))
            b.add_rotated(w, head, y_expr)
            total = _add(total, w)
        b.add_row_le(_add(total, _scale(head, -1.0)))      # sum w - y0 <= 0
        b.add_row_le(_scale(head, -1.0))                   # -y0 <= 0
    return b.finish()


def reform_towersep(inst: MicqpInstance) -> ReformulatedInstance:
    """Tower skeleton with each sub-cone in rotated/budget form."""
    b = _Builder(inst)

    def gadget(out, lft, rgt):
        v1 = b.col(b.aux(0.0))
        v2 = b.col(b.aux(0.0))
        b.add_rotated(v1, out, lft)
        b.add_rotated(v2, out, rgt)
        b.add_row_le(_add(_add(v1, v2), _scale(out, -1.0)))  # v1 + v2 <= out

    for cone in inst.cones:
        if cone.d <= 2:
            b.keep.append(cone)
            continue
        _tower_levels(b, cone, gadget)
        b.add_row_le(_scale(b.affine(cone.a, cone.b0), -1.0))  # -y0 <= 0
    return b.finish()


def _unit_row_col(row: np.ndarray) -> int | None:
    """Column index if the row is a unit vector e_j, else None."""
    nz = np.nonzero(row)[0]
    if nz.shape[0] == 1 and row[nz[0]] == 1.0:
        return int(nz[0])
    return None


def strengthen_perspective(inst: MicqpInstance) -> ReformulatedInstance:
    """Indicator-coupled strengthening of an identity-factor cardinality model.

    Requires a single cone ||x_S|| <= sigma whose rows are distinct unit
    vectors with a = 0 and b = 0, and for each covered column x_j a linking
    row x_j - z_j <= 0 with z_j a binary integer column.  The cone is then
    replaced by x_j^2 <= w_j z_j and sum(w) <= sigma^2.
    """
    if len(inst.cones) != 1:
        raise NotApplicable("expected exactly one cone")
    cone = inst.cones[0]
    if np.any(cone.a) or np.any(cone.b):
        raise NotApplicable("cone must be ||x_S|| <= constant")
    sigma = cone.b0
    if sigma <= 0.0:
        raise NotApplicable("cone radius must be positive")
    xcols = []
    for i in range(cone.d):
        j = _unit_row_col(cone.A[i])
        if j is None:
            raise NotApplicable("cone rows must be unit vectors")
        xcols.append(j)
    if len(set(xcols)) != len(xcols):
        raise NotApplicable("cone rows must cover distinct columns")
    ints = set(inst.int_vars)
    zcols = {}
    for r in range(inst.E.shape[0]):
        row = inst.E[r]
        nz = np.nonzero(row)[0]
        if nz.shape[0] != 2 or inst.h[r] != 0.0:
            continue
        plus = [int(j) for j in nz if row[j] == 1.0]
        minus = [int(j) for j in nz if row[j] == -1.0]
        if len(plus) != 1 or len(minus) != 1:
            continue
        xj, zj = plus[0], minus[0]
        if (
            xj in xcols
            and zj in ints
            and inst.lb[zj] == 0.0
            and inst.ub[zj] == 1.0
        ):
            zcols.setdefault(xj, zj)
    if any(j not in zcols for j in xcols):
        raise NotApplicable("missing x <= z linking row for a cone column")

    b = _Builder(inst)
    total = ({}, 0.0)
    for j in xcols:
        w = b.col(b.aux(0.0))
        b.add_rotated(w, b.col(zcols[j]), b.col(j))
        total = _add(total, w)
    b.add_row_le(total, sigma * sigma)                     # sum w <= sigma^2
    return b.finish()


# Name -> transformer, as exposed on the command line (--reform).
REFORMS = {
    "none": None,
    "sep": reform_sep,
    "tower": reform_tower,
    "towersep": reform_towersep,
    "persp": strengthen_perspective,
}
