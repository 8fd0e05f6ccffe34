"""Average-regret rate functions for base algorithms.

A rate function is the pair rho(t) (average regret after t rounds of a
near-stationary run) and C(t) = t * rho(t) (cumulative regret).  Every rate
here has the shape

    rho(t) = min(c1 * t**(p - 1) + c2 / t, c3),    C(t) = t * rho(t),

with p in [1/2, 1) and c3 >= 1, which makes rho non-increasing and C
non-decreasing by construction.  The scheduler and the stationarity tests
additionally rely on rho(t) >= 1 / sqrt(t) over the whole horizon, so that
is validated numerically at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RateFunction",
    "ucb1_rate",
    "oful_rate",
    "glm_rate",
    "qucb_rate",
    "ucrl_rate",
]

# Exhaustive validation of rho(t) >= 1/sqrt(t) is done up to this horizon;
# beyond it, a geometric grid is checked instead (the crossing, if any, moves
# slowly so the grid is a practical safeguard, not a proof).
_FULL_CHECK_LIMIT = 1 << 21


@dataclass(frozen=True)
class RateFunction:
    """rho(t) = min(c1 * t**(p-1) + c2 / t, c3) with C(t) = t * rho(t)."""

    c1: float
    c2: float
    p: float = 0.5
    c3: float = 1.0
    horizon: int = 1

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("rate coefficients c1, c2 must be nonnegative")
        if not (0.5 <= self.p < 1.0):
            raise ValueError(f"rate exponent p={self.p} outside [1/2, 1)")
        if self.c3 < 1.0:
            raise ValueError(f"rate cap c3={self.c3} must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        self._validate_sqrt_floor()

    def _validate_sqrt_floor(self):
        top = min(self.horizon, _FULL_CHECK_LIMIT)
        t = np.arange(1, top + 1, dtype=np.float64)
        if np.any(self.rho_array(t) * np.sqrt(t) < 1.0 - 1e-12):
            bad = int(t[np.argmax(self.rho_array(t) * np.sqrt(t) < 1.0 - 1e-12)])
            raise ValueError(
                f"rho(t) >= 1/sqrt(t) violated at t={bad} "
                f"(rho={self.rho(bad):.6g})"
            )
        if self.horizon > top:
            grid = np.unique(
                np.concatenate(
                    [
                        np.geomspace(top, self.horizon, 4096).astype(np.int64),
                        np.asarray([self.horizon], dtype=np.int64),
                    ]
                )
            ).astype(np.float64)
            if np.any(self.rho_array(grid) * np.sqrt(grid) < 1.0 - 1e-12):
                raise ValueError("rho(t) >= 1/sqrt(t) violated beyond full-check limit")

    def rho(self, t: float) -> float:
        if t < 1:
            raise ValueError(f"rho(t) needs t >= 1, got {t}")
        return min(self.c1 * t ** (self.p - 1.0) + self.c2 / t, self.c3)

    def rho_array(self, t: np.ndarray) -> np.ndarray:
        return np.minimum(self.c1 * t ** (self.p - 1.0) + self.c2 / t, self.c3)

    def capacity(self, t: float) -> float:
        """C(t) = t * rho(t), the cumulative-regret budget."""
        return t * self.rho(t)


def ucb1_rate(n_arms: int, horizon: int, delta: float) -> RateFunction:
    lg = math.log(horizon / delta)
    return RateFunction(
        c1=math.sqrt(n_arms * lg), c2=n_arms * lg, p=0.5, c3=1.0, horizon=horizon
    )


def oful_rate(dim: int, horizon: int, delta: float) -> RateFunction:
    lg = math.log(horizon / delta)
    beta = 4.0 * math.sqrt(dim * lg)
    return RateFunction(c1=beta * math.sqrt(dim * lg), c2=0.0, p=0.5, c3=1.0, horizon=horizon)


def glm_rate(
    dim: int,
    horizon: int,
    delta: float,
    k_mu: float,
    c_mu: float,
    lam: float = 1.0,
) -> RateFunction:
    beta = (4.0 * k_mu / c_mu) * (
        math.sqrt(dim * math.log(c_mu * horizon / (lam * delta)))
        + c_mu * math.sqrt(lam)
    )
    lg = math.log(horizon / delta)
    return RateFunction(c1=beta * math.sqrt(dim * lg), c2=0.0, p=0.5, c3=1.0, horizon=horizon)


def qucb_rate(
    n_states: int, n_actions: int, n_layers: int, horizon: int, delta: float
) -> RateFunction:
    # Rewards fed to the reduction are divided by the layer count, so the
    # rate is the episodic one scaled down by the same factor.
    lg = math.log(n_states * n_actions * horizon / delta)
    h, s, a = n_layers, n_states, n_actions
    return RateFunction(
        c1=math.sqrt(h**3 * s * a * lg),
        c2=h**2 * s * a * lg,
        p=0.5,
        c3=1.0,
        horizon=horizon,
    )


def ucrl_rate(
    n_states: int, n_actions: int, horizon: int, delta: float, dbar: float
) -> RateFunction:
    lg = math.log(n_states * n_actions * horizon / delta)
    s, a = n_states, n_actions
    return RateFunction(
        c1=dbar * s * math.sqrt(a * lg),
        c2=dbar * s * a * lg,
        p=0.5,
        c3=max(1.0, dbar),
        horizon=horizon,
    )
