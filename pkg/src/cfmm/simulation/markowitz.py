"""Long-only mean-variance allocation and the EWMA estimators that feed it."""
from __future__ import annotations

import itertools

import numpy as np

REGULARIZATION = 1e-10


def regularize(sigma_hat) -> np.ndarray:
    """Symmetrize; add ``1e-10`` to the diagonal when the matrix is (near) singular."""
    s = np.asarray(sigma_hat, dtype=float)
    s = 0.5 * (s + s.T)
    if np.linalg.eigvalsh(s).min() <= REGULARIZATION:
        s = s + REGULARIZATION * np.eye(s.shape[0])
    return s


def markowitz_objective(x, mu_hat, sigma_hat, risk_aversion) -> float:
    x = np.asarray(x, dtype=float)
    return float(mu_hat @ x - 0.5 * risk_aversion * x @ sigma_hat @ x)


def markowitz_solve(mu_hat, sigma_hat, risk_aversion: float) -> np.ndarray:
    """Maximize ``mu'x - lam/2 x'Sx`` over the probability simplex.

    Enumerates every support set, solves the equality-constrained KKT system
    on it, and keeps the best candidate that is nonnegative. With a positive
    definite ``S`` the optimum is the candidate on its own support, so the
    enumeration is exact.
    """
    mu = np.asarray(mu_hat, dtype=float)
    n = mu.shape[0]
    if risk_aversion <= 0:
        raise ValueError("risk_aversion must be positive")
    s = regularize(sigma_hat)
    best_x, best_val = None, -np.inf
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            kkt = np.zeros((size + 1, size + 1))
            kkt[:size, :size] = risk_aversion * s[np.ix_(idx, idx)]
            kkt[:size, size] = 1.0
            kkt[size, :size] = 1.0
            rhs = np.append(mu[idx], 1.0)
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            xs = sol[:size]
            if np.any(xs < -1e-12):
                continue
            x = np.zeros(n)
            x[idx] = np.clip(xs, 0.0, None)
            x /= x.sum()
            val = markowitz_objective(x, mu, s, risk_aversion)
            if best_x is None or val > best_val + 1e-15 * max(1.0, abs(best_val)):
                best_x, best_val = x, val
    return best_x


class EwmaEstimator:
    """Exponentially weighted mean and covariance of simple returns.

    Covariance follows ``S <- d*S + d*(1-d)*(r - m)(r - m)'``, a sum of PSD
    terms, so it stays PSD without projection.
    """

    def __init__(self, n: int, decay: float = 0.9):
        if not 0 < decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        self.decay = decay
        self.mean = np.zeros(n)
        self.cov = np.zeros((n, n))
        self.count = 0
        self._last = None

    def observe(self, prices) -> None:
        prices = np.asarray(prices, dtype=float)
        if self._last is not None:
            r = prices / self._last - 1.0
            if self.count == 0:
                self.mean = r.copy()
            else:
                d = self.decay
                dev = r - self.mean
                self.mean = d * self.mean + (1 - d) * r
                self.cov = d * self.cov + d * (1 - d) * np.outer(dev, dev)
            self.count += 1
        self._last = prices
