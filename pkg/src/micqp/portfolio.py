"""Seeded generators for cardinality-constrained allocation benchmarks.

Three families over n assets with weights x in [0,1]^n and binary pick
indicators z (sum x = 1, x_j <= z_j, sum z <= K_card):

* classical  -- max abar.x subject to the risk cap ||Qhalf x|| <= sigma.
* shortfall  -- max abar.x subject to two quantile rows
  inv_norm_cdf(eta_i) ||Qhalf x|| <= abar.x - W_low_i  (no sigma cap).
* robust     -- max t subject to alpha ||Rhalf x|| <= abar.x - t (no
  sigma cap); t is an extra free continuous variable.

``gen_fball`` builds the integer-free ball: every coordinate integer and
||x - (1/2)1|| <= sqrt((n-1)/4), a pure feasibility instance whose
continuous relaxation is feasible (the center) while no integer point
fits, since the nearest integer vector sits at distance sqrt(n)/2.

``gen_random_suite`` derives every instance from (seed, family, n, index)
alone, so suites are bitwise-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, unique

import numpy as np

from .model import ConeBlock, MicqpInstance

__all__ = [
    "Family",
    "PortfolioParams",
    "norm_cdf",
    "inv_norm_cdf",
    "gen_classical",
    "gen_shortfall",
    "gen_robust",
    "gen_fball",
    "random_params",
    "gen_random_suite",
]


@unique
class Family(Enum):
    CLASSICAL = "classical"
    SHORTFALL = "shortfall"
    ROBUST = "robust"


@dataclass
class PortfolioParams:
    """Data shared by the three generator families."""

    n: int
    K_card: int
    sigma: float
    abar: np.ndarray
    Qhalf: np.ndarray
    family: Family = Family.CLASSICAL
    eta: tuple[float, float] = (0.95, 0.97)
    W_low: tuple[float, float] | None = None   # default (0.9, 0.7) * min abar
    alpha: float = 1.0
    Rhalf: np.ndarray | None = None            # default Qhalf
    seed: int = 0

    def __post_init__(self):
        self.n = int(self.n)
        self.K_card = int(self.K_card)
        self.abar = np.asarray(self.abar, dtype=float).ravel()
        self.Qhalf = np.asarray(self.Qhalf, dtype=float).reshape(-1, self.n)
        if not 0 < self.K_card < self.n:
            raise ValueError("need 0 < K_card < n")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.abar.shape[0] != self.n:
            raise ValueError("abar must have n entries")
        for e in self.eta:
            if not 0.5 < e < 1.0:
                raise ValueError("eta levels must lie in (0.5, 1)")
        if self.W_low is None:
            m = float(np.min(self.abar))
            self.W_low = (0.9 * m, 0.7 * m)
        if self.Rhalf is None:
            self.Rhalf = self.Qhalf
        else:
            self.Rhalf = np.asarray(self.Rhalf, dtype=float).reshape(-1, self.n)


# ---------------------------------------------------------------------------
# Standard normal CDF and quantile
# ---------------------------------------------------------------------------


def norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


# Rational approximation coefficients (central region and tails).
_INV_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_INV_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_INV_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_INV_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)
_P_LOW = 0.02425


def inv_norm_cdf(p: float) -> float:
    """Standard normal quantile, accurate to ~1e-13 after one Newton step."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    a, b, c, d = _INV_A, _INV_B, _INV_C, _INV_D
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
             / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    elif p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
              / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        x = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
             / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))
    # one Newton step on the CDF pins the error to the double-precision floor
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    x -= (norm_cdf(x) - p) / pdf
    return x


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _base_rows(n: int, K_card: int, extra_cols: int = 0):
    """sum x = 1 (two rows), x_j <= z_j, sum z <= K over (x, z, extras)."""
    m = 2 * n + extra_cols
    rows = []
    rhs = []
    budget = np.zeros(m)
    budget[:n] = 1.0
    rows.append(budget); rhs.append(1.0)
    rows.append(-budget); rhs.append(-1.0)
    for j in range(n):
        r = np.zeros(m)
        r[j] = 1.0
        r[n + j] = -1.0
        rows.append(r); rhs.append(0.0)
    card = np.zeros(m)
    card[n:2 * n] = 1.0
    rows.append(card); rhs.append(float(K_card))
    return np.array(rows), np.array(rhs)


def _xz_bounds(n: int):
    return np.zeros(2 * n), np.ones(2 * n)


def gen_classical(params: PortfolioParams) -> MicqpInstance:
    """Risk-capped selection: max abar.x with ||Qhalf x|| <= sigma."""
    n = params.n
    E, h = _base_rows(n, params.K_card)
    lb, ub = _xz_bounds(n)
    cone = ConeBlock(
        A=np.hstack([params.Qhalf, np.zeros((params.Qhalf.shape[0], n))]),
        b=np.zeros(params.Qhalf.shape[0]),
        a=np.zeros(2 * n),
        b0=params.sigma,
    )
    return MicqpInstance(
        n=2 * n, c=np.concatenate([params.abar, np.zeros(n)]), E=E, h=h,
        cones=[cone], int_vars=tuple(range(n, 2 * n)), lb=lb, ub=ub,
    )


def gen_shortfall(params: PortfolioParams) -> MicqpInstance:
    """Quantile-protected selection: two return-shortfall cones, no sigma cap."""
    n = params.n
    E, h = _base_rows(n, params.K_card)
    lb, ub = _xz_bounds(n)
    a = np.concatenate([params.abar, np.zeros(n)])
    cones = []
    for eta_i, w_i in zip(params.eta, params.W_low):
        scale = inv_norm_cdf(eta_i)
        cones.append(
            ConeBlock(
                A=np.hstack([scale * params.Qhalf,
                             np.zeros((params.Qhalf.shape[0], n))]),
                b=np.zeros(params.Qhalf.shape[0]),
                a=a,
                b0=-float(w_i),
            )
        )
    return MicqpInstance(
        n=2 * n, c=a.copy(), E=E, h=h, cones=cones,
        int_vars=tuple(range(n, 2 * n)), lb=lb, ub=ub,
    )


def gen_robust(params: PortfolioParams) -> MicqpInstance:
    """Worst-case return maximization: max t with alpha||Rhalf x|| <= abar.x - t."""
    n = params.n
    E, h = _base_rows(n, params.K_card, extra_cols=1)
    lb = np.concatenate([np.zeros(2 * n), [-math.inf]])
    ub = np.concatenate([np.ones(2 * n), [math.inf]])
    t_col = 2 * n
    c = np.zeros(2 * n + 1)
    c[t_col] = 1.0
    a = np.concatenate([params.abar, np.zeros(n), [-1.0]])
    rh = params.Rhalf
    cone = ConeBlock(
        A=np.hstack([params.alpha * rh, np.zeros((rh.shape[0], n + 1))]),
        b=np.zeros(rh.shape[0]),
        a=a,
        b0=0.0,
    )
    return MicqpInstance(
        n=2 * n + 1, c=c, E=E, h=h, cones=[cone],
        int_vars=tuple(range(n, 2 * n)), lb=lb, ub=ub,
    )


def gen_fball(n: int) -> MicqpInstance:
    """All-integer ball around (1/2)1 with radius sqrt((n-1)/4)."""
    if n < 2:
        raise ValueError("need n >= 2")
    cone = ConeBlock(
        A=np.eye(n),
        b=np.full(n, -0.5),
        a=np.zeros(n),
        b0=math.sqrt((n - 1) / 4.0),
    )
    inf = np.full(n, math.inf)
    return MicqpInstance(
        n=n, c=np.zeros(n), E=np.zeros((0, n)), h=np.zeros(0), cones=[cone],
        int_vars=tuple(range(n)), lb=-inf, ub=inf,
    )


_GEN = {
    Family.CLASSICAL: gen_classical,
    Family.SHORTFALL: gen_shortfall,
    Family.ROBUST: gen_robust,
}


def random_params(family, n: int, index: int, seed: int) -> PortfolioParams:
    """Deterministic parameter draw for one suite slot.

    abar ~ U[0.9, 1.3]; Qhalf = 0.1 * F Diag(U[0,1]) with F standard
    normal, rescaled so the mean per-asset volatility (column norm) is
    0.2; sigma = 0.2; the cardinality cap is 10, clipped below n.
    """
    family = Family(family)
    fam_code = {Family.CLASSICAL: 0, Family.SHORTFALL: 1, Family.ROBUST: 2}
    rng = np.random.default_rng([int(seed), fam_code[family], int(n), int(index)])
    abar = rng.uniform(0.9, 1.3, size=n)
    F = rng.standard_normal((n, n))
    qhalf = 0.1 * (F * rng.uniform(0.0, 1.0, size=n))
    vol = np.linalg.norm(qhalf, axis=0)
    qhalf *= 0.2 / float(np.mean(vol))
    return PortfolioParams(
        n=n, K_card=min(10, n - 1), sigma=0.2, abar=abar, Qhalf=qhalf,
        family=family, seed=seed,
    )


def gen_random_suite(family, n: int, count: int, seed: int) -> list[MicqpInstance]:
    """count instances of one family, reproducible from the arguments alone."""
    family = Family(family)
    return [
        _GEN[family](random_params(family, n, i, seed)) for i in range(count)
    ]
