"""Bounded-variable revised simplex with incremental rows and warm starts.

The model is   max  c . x   s.t.  rows (<=, =, >=),  lb <= x <= ub,
with infinite bounds allowed and represented explicitly.  Every row gets a
slack (bounds chosen by sense), so the working problem is equality-form over
structural + slack columns.  A dense basis inverse is maintained and rebuilt
periodically; cold solves run a two-phase primal (artificials only on rows
whose slack starts out of bounds), warm solves after row additions or bound
changes run the dual simplex from the stored basis.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum, unique

import numpy as np

__all__ = [
    "DeadlineReached",
    "LpModel",
    "LpResult",
    "LpStatus",
    "NumericalFailure",
    "solve",
    "dump_model",
]

FEAS_TOL = 1e-8        # primal feasibility classification during pivoting
DUAL_TOL = 1e-9        # reduced-cost optimality threshold
RATIO_TOL = 1e-9       # Harris-style ratio-test tolerance window
RES_TOL = 1e-7         # residual bound promised on Optimal results
PH1_TOL = 1e-7         # phase-1 objective threshold for declaring infeasible
REFACTOR_EVERY = 50    # pivots between dense refactorizations
BLAND_FACTOR = 10      # switch to Bland after BLAND_FACTOR*(rows+cols) degenerate pivots
MAX_REFACTOR_RETRIES = 3
MAX_BASIS_REPAIRS = 8  # slack substitutions tried per singular refactorization

# nonbasic-at-lower / -at-upper / free-at-zero / basic
AT_LOWER, AT_UPPER, FREE, BASIC = 0, 1, 2, 3

INF = math.inf


class NumericalFailure(RuntimeError):
    """Raised when repeated refactorization cannot restore consistency."""


class DeadlineReached(Exception):
    """Raised from inside the pivot loops when the caller's wall-clock
    deadline (a time.perf_counter value) passes.  Deliberately not a
    NumericalFailure so the retry wrapper never restarts an expired solve."""


@unique
class LpStatus(Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray          # structural variables only
    obj: float
    iterations: int
    basis: tuple | None = None


_SENSES = ("<=", "=", ">=")


class LpModel:
    """Growable LP: columns then rows may be added at any time.

    Rows are (coeffs, sense, rhs) with coeffs a dict {col: val}, a list of
    (col, val) pairs, or a dense vector.  The stored basis (if any) is kept
    consistent across add_rows/add_cols/set_var_bounds so the next solve can
    warm-start.
    """

    def __init__(self):
        self._ncols = 0
        self._cap_cols = 8
        self._nrows = 0
        self._cap_rows = 8
        self._A = np.zeros((self._cap_rows, self._cap_cols))
        self.col_lb = np.zeros(0)
        self.col_ub = np.zeros(0)
        self.obj = np.zeros(0)
        self.sense = []            # per row, one of _SENSES
        self.rhs = np.zeros(0)
        # warm-start descriptor: (basis codes, struct statuses, slack statuses)
        # basis code: j >= 0 structural column j; -(i+1) slack of row i
        self._basis: list[int] | None = None
        self._vstat_struct: np.ndarray | None = None
        self._vstat_slack: np.ndarray | None = None

    # -- size queries ------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return self._ncols

    @property
    def num_rows(self) -> int:
        return self._nrows

    @property
    def rows(self):
        A = self._A[: self._nrows, : self._ncols]
        return [(A[i].copy(), self.sense[i], float(self.rhs[i])) for i in range(self._nrows)]

    # -- construction ------------------------------------------------------
    def add_cols(self, lb, ub, obj=0.0, count: int | None = None) -> list[int]:
        lb = np.atleast_1d(np.asarray(lb, dtype=float))
        ub = np.atleast_1d(np.asarray(ub, dtype=float))
        if count is None:
            count = lb.shape[0]
        if lb.shape[0] == 1:
            lb = np.repeat(lb, count)
        if ub.shape[0] == 1:
            ub = np.repeat(ub, count)
        objv = np.atleast_1d(np.asarray(obj, dtype=float))
        if objv.shape[0] == 1:
            objv = np.repeat(objv, count)
        if not (lb.shape[0] == ub.shape[0] == objv.shape[0] == count):
            raise IndexError("add_cols: inconsistent lengths")
        if np.any(lb > ub):
            raise IndexError("add_cols: lb > ub")
        first = self._ncols
        new_n = first + count
        if new_n > self._cap_cols:
            self._cap_cols = max(2 * self._cap_cols, new_n)
            grown = np.zeros((self._cap_rows, self._cap_cols))
            grown[: self._nrows, :first] = self._A[: self._nrows, :first]
            self._A = grown
        self.col_lb = np.concatenate([self.col_lb, lb])
        self.col_ub = np.concatenate([self.col_ub, ub])
        self.obj = np.concatenate([self.obj, objv])
        self._ncols = new_n
        if self._vstat_struct is not None:
            stat = np.empty(count, dtype=np.int8)
            for k in range(count):
                if np.isfinite(lb[k]):
                    stat[k] = AT_LOWER
                elif np.isfinite(ub[k]):
                    stat[k] = AT_UPPER
                else:
                    stat[k] = FREE
            self._vstat_struct = np.concatenate([self._vstat_struct, stat])
        return list(range(first, new_n))

    def _row_to_dense(self, coeffs) -> np.ndarray:
        dense = np.zeros(self._ncols)
        if isinstance(coeffs, dict):
            items = coeffs.items()
        elif isinstance(coeffs, np.ndarray) and coeffs.ndim == 1 and coeffs.shape[0] == self._ncols:
            dense[:] = coeffs
            return dense
        else:
            items = coeffs
        for j, v in items:
            if not (0 <= j < self._ncols):
                raise IndexError(f"row coefficient index {j} out of range")
            dense[j] += v
        return dense

    def add_rows(self, rows) -> list[int]:
        handles = []
        for coeffs, sense, rhs in rows:
            if sense not in _SENSES:
                raise IndexError(f"bad row sense {sense!r}")
            dense = self._row_to_dense(coeffs)
            i = self._nrows
            if i + 1 > self._cap_rows:
                self._cap_rows = max(2 * self._cap_rows, i + 1)
                grown = np.zeros((self._cap_rows, self._cap_cols))
                grown[:i, : self._ncols] = self._A[:i, : self._ncols]
                self._A = grown
            self._A[i, : self._ncols] = dense
            self.sense.append(sense)
            self.rhs = np.append(self.rhs, float(rhs))
            self._nrows = i + 1
            if self._basis is not None:
                # new slack enters the basis; dual feasibility is preserved
                self._basis.append(-(i + 1))
                self._vstat_slack = np.append(self._vstat_slack, np.int8(BASIC))
            handles.append(i)
        return handles

    def set_var_bounds(self, j: int, lb: float, ub: float) -> None:
        if not (0 <= j < self._ncols):
            raise IndexError(f"variable index {j} out of range")
        if lb > ub:
            # allow the caller to create an empty box; the solve reports it
            pass
        self.col_lb[j] = lb
        self.col_ub[j] = ub

    def set_objective(self, c) -> None:
        c = np.asarray(c, dtype=float).ravel()
        if c.shape[0] != self._ncols:
            raise IndexError("objective length mismatch")
        self.obj = c.copy()

    def set_obj_coeff(self, j: int, v: float) -> None:
        if not (0 <= j < self._ncols):
            raise IndexError(f"variable index {j} out of range")
        self.obj[j] = v

    @property
    def basis(self):
        return self._basis

    def clear_basis(self) -> None:
        self._basis = None
        self._vstat_struct = None
        self._vstat_slack = None

    def solve(self, deadline: float | None = None) -> LpResult:
        return solve(self, deadline)


# ---------------------------------------------------------------------------
# slack bounds by sense:  a.x + s = rhs
# ---------------------------------------------------------------------------

def _slack_bounds(sense: str) -> tuple[float, float]:
    if sense == "<=":
        return 0.0, INF
    if sense == ">=":
        return -INF, 0.0
    return 0.0, 0.0


class _Simplex:
    """One solve: structural cols 0..n-1, slacks n..n+m-1, artificials beyond."""

    def __init__(self, model: LpModel, deadline: float | None = None):
        self.model = model
        self.deadline = deadline
        self.n = model.num_vars
        self.m = model.num_rows
        self.A = model._A[: self.m, : self.n]
        self.rhs = model.rhs[: self.m].copy()
        m, n = self.m, self.n
        self.ncols = n + m
        self.lb = np.empty(self.ncols)
        self.ub = np.empty(self.ncols)
        self.lb[:n] = model.col_lb
        self.ub[:n] = model.col_ub
        for i, sense in enumerate(model.sense):
            self.lb[n + i], self.ub[n + i] = _slack_bounds(sense)
        self.obj = np.zeros(self.ncols)
        self.obj[:n] = model.obj
        # artificial columns: unit column on art_row[k], appended past slacks
        self.art_rows: list[int] = []
        self.basis = np.empty(m, dtype=np.int64)
        self.vstat = np.empty(self.ncols, dtype=np.int8)
        self.Binv = np.eye(m)
        self.xB = np.zeros(m)
        self.pivots = 0
        self.iterations = 0
        self.degen = 0
        self.bland = False

    # -- column access -----------------------------------------------------
    def colvec(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        e = np.zeros(self.m)
        e[self.unit_row(j)] = 1.0
        return e

    def unit_row(self, j: int) -> int:
        if j < self.n:
            raise IndexError("structural column has no unit row")
        if j < self.n + self.m:
            return j - self.n
        return self.art_rows[j - self.n - self.m]

    def add_artificial(self, row: int, lb: float, ub: float, ph1_obj: float) -> int:
        j = self.ncols
        self.art_rows.append(row)
        self.lb = np.append(self.lb, lb)
        self.ub = np.append(self.ub, ub)
        self.obj = np.append(self.obj, ph1_obj)
        self.vstat = np.append(self.vstat, np.int8(BASIC))
        self.ncols += 1
        return j

    # -- values ------------------------------------------------------------
    def nbval(self, j: int) -> float:
        s = self.vstat[j]
        if s == AT_LOWER:
            return self.lb[j]
        if s == AT_UPPER:
            return self.ub[j]
        return 0.0

    def _nb_values(self) -> np.ndarray:
        """Per-column rest value: bound for nonbasic, 0 for basic/free."""
        vals = np.where(self.vstat == AT_LOWER, self.lb,
                        np.where(self.vstat == AT_UPPER, self.ub, 0.0))
        vals[self.vstat == BASIC] = 0.0
        return vals

    def nonbasic_rhs(self) -> np.ndarray:
        """rhs minus contribution of nonbasic columns at their values."""
        r = self.rhs.copy()
        vals = self._nb_values()
        nz_struct = np.nonzero(vals[: self.n])[0]
        if nz_struct.size:
            r -= self.A[:, nz_struct] @ vals[nz_struct]
        slack_vals = vals[self.n:self.n + self.m]
        r -= slack_vals
        for k, row in enumerate(self.art_rows):
            r[row] -= vals[self.n + self.m + k]
        return r

    def refactor(self) -> None:
        m = self.m
        B = np.empty((m, m))
        for k, j in enumerate(self.basis):
            B[:, k] = self.colvec(j)
        # long runs of near-degenerate pivots can leave the basis exactly
        # singular; swap dependent columns for slacks instead of giving up
        for _ in range(1 + MAX_BASIS_REPAIRS):
            try:
                self.Binv = np.linalg.inv(B)
                break
            except np.linalg.LinAlgError as exc:
                if not self._repair_basis(B):
                    raise NumericalFailure(
                        "singular basis during refactorization") from exc
        else:
            raise NumericalFailure("singular basis during refactorization")
        self.xB = self.Binv @ self.nonbasic_rhs()

    def _repair_basis(self, B: np.ndarray) -> bool:
        """Swap one dependent basis column for the slack of an uncovered row.

        The right null vector of B names a basis slot that can leave without
        shrinking the span; the left null vector names a row whose slack
        restores full rank.  Mutates B, basis and vstat in place.  The
        repaired point may be primal- or dual-infeasible, which the caller's
        reoptimization loops clean up.  Returns False when no usable swap
        exists.
        """
        U, _, Vt = np.linalg.svd(B)
        left = U[:, -1]
        right = Vt[-1, :]
        n = self.n
        nonbasic = np.nonzero(self.vstat[n:n + self.m] != BASIC)[0]
        if nonbasic.size == 0:
            return False
        i = int(nonbasic[np.argmax(np.abs(left[nonbasic]))])
        if abs(left[i]) < 1e-12:
            return False
        k = int(np.argmax(np.abs(right)))
        out = self.basis[k]
        if np.isfinite(self.lb[out]):
            self.vstat[out] = AT_LOWER
        elif np.isfinite(self.ub[out]):
            self.vstat[out] = AT_UPPER
        else:
            self.vstat[out] = FREE
        self.basis[k] = n + i
        self.vstat[n + i] = BASIC
        B[:, k] = 0.0
        B[i, k] = 1.0
        return True

    def reduced_costs(self, obj: np.ndarray) -> np.ndarray:
        y = obj[self.basis] @ self.Binv
        z = np.empty(self.ncols)
        z[: self.n] = obj[: self.n] - y @ self.A
        z[self.n:self.n + self.m] = obj[self.n:self.n + self.m] - y
        if self.art_rows:
            art = np.asarray(self.art_rows)
            z[self.n + self.m:] = obj[self.n + self.m:] - y[art]
        return z

    def pivot_update(self, r: int, d: np.ndarray) -> None:
        """Replace basis column r; d = Binv @ entering column."""
        piv = d[r]
        self.Binv[r, :] /= piv
        rowr = self.Binv[r, :]
        mask = np.arange(self.m) != r
        self.Binv[mask, :] -= np.outer(d[mask], rowr)
        self.pivots += 1
        if self.pivots % REFACTOR_EVERY == 0:
            self.refactor()

    # -- primal simplex ----------------------------------------------------
    def primal(self, obj: np.ndarray, max_iters: int) -> str:
        """Runs primal simplex on `obj` from current (primal-feasible) basis.

        Returns 'optimal' or 'unbounded'.
        """
        m, n = self.m, self.n
        while True:
            self.iterations += 1
            if self.iterations > max_iters:
                raise NumericalFailure("primal iteration limit exceeded")
            if self.deadline is not None and time.perf_counter() > self.deadline:
                raise DeadlineReached
            z = self.reduced_costs(obj)
            stat = self.vstat
            improving = np.zeros(self.ncols, dtype=bool)
            improving |= (stat == AT_LOWER) & (z > DUAL_TOL)
            improving |= (stat == AT_UPPER) & (z < -DUAL_TOL)
            improving |= (stat == FREE) & (np.abs(z) > DUAL_TOL)
            cand = np.nonzero(improving)[0]
            if cand.size == 0:
                return "optimal"
            if self.bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(z[cand]))])
            sigma = 1.0 if (stat[q] == AT_LOWER or (stat[q] == FREE and z[q] > 0)) else -1.0
            d = self.Binv @ self.colvec(q)
            coef = sigma * d
            basis_lb = self.lb[self.basis]
            basis_ub = self.ub[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.full(m, INF)
                dec = coef > RATIO_TOL  # basic decreases toward its lower bound
                lim[dec] = (self.xB[dec] - basis_lb[dec]) / coef[dec]
                inc = coef < -RATIO_TOL  # basic increases toward its upper bound
                lim[inc] = (self.xB[inc] - basis_ub[inc]) / coef[inc]
            lim[~np.isfinite(lim)] = INF
            np.maximum(lim, 0.0, out=lim)
            t_basic = lim.min() if m else INF
            t_bound = self.ub[q] - self.lb[q]  # inf if either bound infinite
            if not np.isfinite(t_bound):
                t_bound = INF
            t_star = min(t_basic, t_bound)
            if t_star == INF:
                return "unbounded"
            if t_star <= 1e-10:
                self.degen += 1
                if self.degen > BLAND_FACTOR * (m + self.ncols):
                    self.bland = True
            if t_bound <= t_basic:
                # bound flip, no basis change
                self.vstat[q] = AT_UPPER if stat[q] == AT_LOWER else AT_LOWER
                self.xB -= coef * t_bound
                continue
            within = np.nonzero(lim <= t_star + RATIO_TOL * (1.0 + abs(t_star)))[0]
            if self.bland:
                r = int(within[np.argmin(self.basis[within])])
            else:
                r = int(within[np.argmax(np.abs(d[within]))])
            leaving = self.basis[r]
            self.vstat[leaving] = AT_LOWER if coef[r] > 0 else AT_UPPER
            enter_val = self.nbval(q) + sigma * t_star
            self.xB -= coef * t_star
            self.basis[r] = q
            self.vstat[q] = BASIC
            self.pivot_update(r, d)
            self.xB[r] = enter_val

    # -- dual simplex ------------------------------------------------------
    def dual(self, obj: np.ndarray, max_iters: int) -> str:
        """Runs dual simplex from a dual-feasible basis.

        Returns 'feasible' (primal feasibility reached) or 'infeasible'.
        """
        m = self.m
        while True:
            self.iterations += 1
            if self.iterations > max_iters:
                raise NumericalFailure("dual iteration limit exceeded")
            if self.deadline is not None and time.perf_counter() > self.deadline:
                raise DeadlineReached
            basis_lb = self.lb[self.basis]
            basis_ub = self.ub[self.basis]
            below = basis_lb - self.xB
            above = self.xB - basis_ub
            viol = np.maximum(below, above)
            viol[~np.isfinite(viol)] = -INF
            r = int(np.argmax(viol)) if m else 0
            if m == 0 or viol[r] <= FEAS_TOL:
                return "feasible"
            going_low = below[r] >= above[r]
            target = basis_lb[r] if going_low else basis_ub[r]
            rho = self.Binv[r, :]
            alpha = np.empty(self.ncols)
            alpha[: self.n] = rho @ self.A
            alpha[self.n:self.n + self.m] = rho
            if self.art_rows:
                alpha[self.n + self.m:] = rho[np.asarray(self.art_rows)]
            z = self.reduced_costs(obj)
            stat = self.vstat
            eps = 1e-10
            if going_low:
                ok = ((stat == AT_LOWER) & (alpha < -eps)) | ((stat == AT_UPPER) & (alpha > eps))
            else:
                ok = ((stat == AT_LOWER) & (alpha > eps)) | ((stat == AT_UPPER) & (alpha < -eps))
            ok |= (stat == FREE) & (np.abs(alpha) > eps)
            cand = np.nonzero(ok)[0]
            if cand.size == 0:
                return "infeasible"
            ratios = np.abs(z[cand]) / np.abs(alpha[cand])
            if self.bland:
                q = int(cand[0])
            else:
                best = ratios.min()
                near = cand[ratios <= best + RATIO_TOL * (1.0 + best)]
                q = int(near[np.argmax(np.abs(alpha[near]))])
                if best <= 1e-12:
                    self.degen += 1
                    if self.degen > BLAND_FACTOR * (m + self.ncols):
                        self.bland = True
            alpha_q = alpha[q]
            d = self.Binv @ self.colvec(q)
            delta_q = (self.xB[r] - target) / alpha_q
            self.xB -= delta_q * d
            enter_val = self.nbval(q) + delta_q
            self.vstat[self.basis[r]] = AT_LOWER if going_low else AT_UPPER
            self.basis[r] = q
            self.vstat[q] = BASIC
            self.pivot_update(r, d)
            self.xB[r] = enter_val

    # -- solution extraction ----------------------------------------------
    def xfull(self) -> np.ndarray:
        x = self._nb_values()
        x[self.basis] = self.xB
        return x

    def primal_feasible(self, tol=FEAS_TOL) -> bool:
        basis_lb = self.lb[self.basis]
        basis_ub = self.ub[self.basis]
        return bool(np.all(self.xB >= basis_lb - tol) and np.all(self.xB <= basis_ub + tol))

    def dual_feasible(self, obj: np.ndarray, tol=1e-7) -> bool:
        z = self.reduced_costs(obj)
        stat = self.vstat
        bad = ((stat == AT_LOWER) & (z > tol)) | ((stat == AT_UPPER) & (z < -tol)) | (
            (stat == FREE) & (np.abs(z) > tol)
        )
        return not bool(np.any(bad))


def _max_iters(m: int, ncols: int) -> int:
    return max(20000, 200 * (m + ncols))


def _cold_start(s: _Simplex) -> None:
    """All-slack basis; artificials on rows whose slack value is out of bounds."""
    n, m = s.n, s.m
    for j in range(n):
        if np.isfinite(s.lb[j]):
            s.vstat[j] = AT_LOWER
        elif np.isfinite(s.ub[j]):
            s.vstat[j] = AT_UPPER
        else:
            s.vstat[j] = FREE
    s.vstat[n:] = BASIC
    for i in range(m):
        s.basis[i] = n + i
    s.Binv = np.eye(m)
    r = s.nonbasic_rhs()  # slack values if all slacks basic
    for i in range(m):
        sl, su = s.lb[n + i], s.ub[n + i]
        if sl - FEAS_TOL <= r[i] <= su + FEAS_TOL:
            continue
        # slack leaves to its nearest bound, artificial carries the violation
        if r[i] > su:
            s.vstat[n + i] = AT_UPPER
            j = s.add_artificial(i, 0.0, INF, 0.0)
        else:
            s.vstat[n + i] = AT_LOWER
            j = s.add_artificial(i, -INF, 0.0, 0.0)
        s.basis[i] = j
    s.refactor()
    if s.art_rows:
        ph1_obj = np.zeros(s.ncols)
        for j in range(n + m, s.ncols):
            ph1_obj[j] = -1.0 if s.ub[j] == INF else 1.0
        status = s.primal(ph1_obj, _max_iters(m, s.ncols))
        if status == "unbounded":
            raise NumericalFailure("phase-1 objective unbounded")
        val = float(ph1_obj @ s.xfull())
        if val < -PH1_TOL:
            raise _Infeasible
        # pin artificials at zero for phase 2
        for j in range(n + m, s.ncols):
            s.lb[j] = s.ub[j] = 0.0
            if s.vstat[j] != BASIC:
                s.vstat[j] = AT_LOWER
        s.xB[np.isin(s.basis, np.arange(n + m, s.ncols))] = 0.0


class _Infeasible(Exception):
    pass


def _store_basis(model: LpModel, s: _Simplex) -> None:
    n, m = s.n, s.m
    codes = []
    for j in s.basis:
        if j < n:
            codes.append(int(j))
        elif j < n + m:
            codes.append(-(int(j) - n + 1))
        else:
            # artificial pinned at zero stayed basic: record its row's slack
            # as basic instead, with the slack forced out; safest is to drop
            # the warm basis entirely in this rare case
            model.clear_basis()
            return
    model._basis = codes
    model._vstat_struct = s.vstat[:n].copy()
    model._vstat_slack = s.vstat[n:n + m].copy()


def _load_basis(model: LpModel, s: _Simplex) -> bool:
    """Install the stored basis into s; returns False if unusable."""
    n, m = s.n, s.m
    codes = model._basis
    if codes is None or len(codes) != m:
        return False
    if model._vstat_struct is None or model._vstat_struct.shape[0] != n:
        return False
    if model._vstat_slack is None or model._vstat_slack.shape[0] != m:
        return False
    s.vstat[:n] = model._vstat_struct
    s.vstat[n:n + m] = model._vstat_slack
    seen = set()
    for i, code in enumerate(codes):
        j = code if code >= 0 else n + (-code - 1)
        if j in seen or not (0 <= j < n + m):
            return False
        seen.add(j)
        s.basis[i] = j
        s.vstat[j] = BASIC
    # normalize nonbasic statuses against current bounds
    for j in range(n + m):
        if s.vstat[j] == BASIC:
            continue
        if s.vstat[j] == AT_LOWER and not np.isfinite(s.lb[j]):
            s.vstat[j] = AT_UPPER if np.isfinite(s.ub[j]) else FREE
        elif s.vstat[j] == AT_UPPER and not np.isfinite(s.ub[j]):
            s.vstat[j] = AT_LOWER if np.isfinite(s.lb[j]) else FREE
        elif s.vstat[j] == FREE and np.isfinite(s.lb[j]) and s.lb[j] > 0:
            s.vstat[j] = AT_LOWER
        elif s.vstat[j] == FREE and np.isfinite(s.ub[j]) and s.ub[j] < 0:
            s.vstat[j] = AT_UPPER
    try:
        s.refactor()
    except NumericalFailure:
        return False
    return True


def solve(model: LpModel, deadline: float | None = None) -> LpResult:
    """Solve the model; warm-starts from the stored basis when possible.

    ``deadline`` is an absolute time.perf_counter value; when the pivot
    loops cross it, DeadlineReached propagates with the model basis left
    in whatever state the interrupted solve produced.
    """
    if np.any(model.col_lb > model.col_ub):
        return LpResult(LpStatus.PRIMAL_INFEASIBLE, np.full(model.num_vars, np.nan),
                        -INF, 0, None)
    last_exc = None
    for attempt in range(MAX_REFACTOR_RETRIES):
        if deadline is not None and time.perf_counter() > deadline:
            raise DeadlineReached
        s = _Simplex(model, deadline)
        try:
            return _solve_once(model, s, cold=attempt > 0)
        except NumericalFailure as exc:
            last_exc = exc
            model.clear_basis()
    raise NumericalFailure(f"solve failed after retries: {last_exc}")


def _solve_once(model: LpModel, s: _Simplex, cold: bool) -> LpResult:
    maxit = _max_iters(s.m, s.ncols)
    warm = (not cold) and _load_basis(model, s)
    if warm:
        pf = s.primal_feasible()
        df = s.dual_feasible(s.obj)
        if pf and df:
            pass  # already optimal
        elif df:
            if s.dual(s.obj, maxit) == "infeasible":
                return LpResult(LpStatus.PRIMAL_INFEASIBLE,
                                np.full(s.n, np.nan), -INF, s.iterations, None)
            if not s.dual_feasible(s.obj):
                if s.primal(s.obj, maxit) == "unbounded":
                    return _unbounded_result(model, s)
        elif pf:
            if s.primal(s.obj, maxit) == "unbounded":
                return _unbounded_result(model, s)
        else:
            warm = False
    if not warm:
        try:
            _cold_start(s)
        except _Infeasible:
            return LpResult(LpStatus.PRIMAL_INFEASIBLE,
                            np.full(s.n, np.nan), -INF, s.iterations, None)
        if s.primal(s.obj, maxit) == "unbounded":
            return _unbounded_result(model, s)
    # final consistency check; refactor and continue on drift
    for _ in range(MAX_REFACTOR_RETRIES):
        s.refactor()
        if s.primal_feasible(RES_TOL) and s.dual_feasible(s.obj, RES_TOL):
            break
        if not s.primal_feasible(FEAS_TOL):
            if s.dual(s.obj, maxit) == "infeasible":
                return LpResult(LpStatus.PRIMAL_INFEASIBLE,
                                np.full(s.n, np.nan), -INF, s.iterations, None)
        if s.primal(s.obj, maxit) == "unbounded":
            return _unbounded_result(model, s)
    else:
        raise NumericalFailure("could not reach a consistent optimal basis")
    xf = s.xfull()
    x = xf[: s.n].copy()
    _store_basis(model, s)
    return LpResult(LpStatus.OPTIMAL, x, float(model.obj @ x), s.iterations,
                    (list(model._basis) if model._basis else None))


def _unbounded_result(model: LpModel, s: _Simplex) -> LpResult:
    xf = s.xfull()
    model.clear_basis()
    return LpResult(LpStatus.UNBOUNDED, xf[: s.n].copy(), INF, s.iterations, None)


def dump_model(model: LpModel) -> str:
    """Plain-text listing of the model for debugging (not a parser target)."""
    out = [f"max {' + '.join(f'{v:g} x{j}' for j, v in enumerate(model.obj) if v)}"]
    out.append("s.t.")
    A = model._A
    for i in range(model.num_rows):
        terms = " + ".join(
            f"{A[i, j]:g} x{j}" for j in range(model.num_vars) if A[i, j]
        ) or "0"
        out.append(f"  r{i}: {terms} {model.sense[i]} {model.rhs[i]:g}")
    for j in range(model.num_vars):
        out.append(f"  {model.col_lb[j]:g} <= x{j} <= {model.col_ub[j]:g}")
    return "\n".join(out)
