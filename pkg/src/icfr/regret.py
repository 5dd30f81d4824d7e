"""Regret-minimizing devices composed by the dynamics.

Two devices: an external minimizer (regret matching, recommending
proportionally to positive cumulative regrets) and an internal minimizer (one
external expert per action, combined through the stationary distribution of
the column-stochastic matrix of expert recommendations, feedback split by the
stationary weights).
"""

from __future__ import annotations

import numpy as np

STATIONARITY_TARGET = 1e-12   # convergence goal of the fixed-point iteration
STATIONARITY_ACCEPT = 1e-9    # residual above which a result is rejected
POWER_ITERATION_CAP = 2000


class ConvergenceError(ArithmeticError):
    """Fixed-point iteration failed; carries the final L1 residual."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"stationary distribution did not converge (residual {residual:.3e})")


def stationary_distribution(matrix) -> np.ndarray:
    """Fixed point q = M q of a column-stochastic matrix, with ||q||_1 = 1.

    Plain power iteration from the uniform vector (deterministic, and the
    tie-break for reducible chains); if it stalls, the damped operator
    (I + M)/2 is driven to its limit by repeated squaring, which kills
    periodic components and converges for every stochastic matrix.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError("expected a non-empty square matrix")
    n = m.shape[0]
    col_err = np.abs(m.sum(axis=0) - 1.0).max()
    if col_err > 1e-9 or (m < 0).any():
        raise ValueError(f"matrix is not column-stochastic (column-sum error {col_err:.3e})")

    q = np.full(n, 1.0 / n)
    for _ in range(POWER_ITERATION_CAP):
        nxt = m @ q
        if np.abs(nxt - q).sum() <= STATIONARITY_TARGET:
            return nxt
        q = nxt

    damped = 0.5 * (np.eye(n) + m)
    for _ in range(60):
        damped = damped @ damped
        damped /= damped.sum(axis=0, keepdims=True)
    q = damped @ np.full(n, 1.0 / n)
    q = np.maximum(q, 0.0)
    q /= q.sum()
    residual = float(np.abs(q - m @ q).sum())
    if residual > STATIONARITY_ACCEPT:
        raise ConvergenceError(residual)
    return q


def sample_index(distribution: np.ndarray, rng) -> int:
    """Inverse-CDF sample over action indices, deterministic given the rng."""
    u = rng.random()
    acc = 0.0
    last = len(distribution) - 1
    for i, p in enumerate(distribution):
        acc += p
        if u < acc:
            return i
    return last


class ExternalRegretMatcher:
    """Regret matching over ``n`` actions.

    ``observe`` accumulates weight * (u[a] - u[chosen]) into the cumulative
    regret vector; weight zero is an exact no-op.  Fractional weights are
    allowed (the internal minimizer splits feedback across its experts).
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one action")
        self.n = n
        self.cumulative = np.zeros(n, dtype=np.float64)

    def recommend(self) -> np.ndarray:
        positive = np.maximum(self.cumulative, 0.0)
        total = positive.sum()
        if total > 0.0:
            return positive / total
        return np.full(self.n, 1.0 / self.n)

    def observe(self, utilities, chosen: int, weight: float = 1.0) -> None:
        if weight == 0.0:
            return
        u = np.asarray(utilities, dtype=np.float64)
        if u.shape != (self.n,):
            raise ValueError(f"expected {self.n} utilities, got {u.shape}")
        self.cumulative += weight * (u - u[chosen])


class InternalRegretMatcher:
    """Expert reduction: one :class:`ExternalRegretMatcher` per action.

    The recommendation is the stationary distribution of the matrix whose
    column x is expert x's recommendation.  On ``observe`` every expert x
    receives the same (utilities, chosen) pair with weight scaled by the
    stationary probability q[x] of the recommendation in force.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one action")
        self.n = n
        self.experts = [ExternalRegretMatcher(n) for _ in range(n)]
        self._q: np.ndarray | None = None

    def recommend(self) -> np.ndarray:
        matrix = np.column_stack([e.recommend() for e in self.experts])
        self._q = stationary_distribution(matrix)
        return self._q

    def observe(self, utilities, chosen: int, weight: float = 1.0) -> None:
        if weight == 0.0:
            return
        if self._q is None:
            self.recommend()
        u = np.asarray(utilities, dtype=np.float64)
        for x, expert in enumerate(self.experts):
            w = weight * float(self._q[x])
            if w > 0.0:
                expert.observe(u, chosen, w)
