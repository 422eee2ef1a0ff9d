"""Concrete loss oracles for experiments and tests: linear and quadratic."""

from __future__ import annotations

import numpy as np

from .core import LossOracle

__all__ = ["LinearLoss", "QuadraticLoss"]


def _interval_gradient_max(rows_low: np.ndarray, rows_high: np.ndarray):
    """Per-coordinate max of |affine gradient| over the box, from row ranges."""
    mag = np.maximum(np.abs(rows_low), np.abs(rows_high))
    return float(mag.sum()), float(np.sqrt((mag**2).sum()))


class LinearLoss(LossOracle):
    """f(x) = <slope, x> + offset."""

    def __init__(self, slope, offset: float = 0.0):
        self.slope = np.asarray(slope, dtype=float)
        if self.slope.ndim != 1:
            raise ValueError("slope must be a 1-D vector")
        self.offset = float(offset)

    @property
    def dimension(self) -> int:
        return self.slope.size

    def evaluate(self, x) -> float:
        return float(self.slope @ np.asarray(x, dtype=float) + self.offset)

    def evaluate_batch(self, xs) -> np.ndarray:
        return np.asarray(xs, dtype=float) @ self.slope + self.offset

    def gradient(self, x) -> np.ndarray:
        return self.slope.copy()

    def lipschitz_l1(self) -> float:
        return float(np.abs(self.slope).sum())

    def lipschitz_l2(self) -> float:
        return float(np.linalg.norm(self.slope))


class QuadraticLoss(LossOracle):
    """f(x) = 0.5 x' Q x + <b, x> + const, with Q symmetric PSD.

    The gradient Qx + b is affine, so gradient-norm bounds over the box are
    computed exactly per coordinate from the attainable range of each row
    (exact for diagonal Q, a safe overestimate otherwise).
    """

    def __init__(self, quad, linear, constant: float = 0.0):
        self.quad = np.asarray(quad, dtype=float)
        self.linear = np.asarray(linear, dtype=float)
        self.constant = float(constant)
        n = self.linear.size
        if self.quad.shape != (n, n):
            raise ValueError(f"quad must be {n}x{n}, got {self.quad.shape}")
        if not np.allclose(self.quad, self.quad.T):
            raise ValueError("quad must be symmetric")

    @classmethod
    def separable(cls, weights, centers) -> "QuadraticLoss":
        """Build f(x) = sum_i weights[i] * (x[i] - centers[i])^2."""
        w = np.asarray(weights, dtype=float)
        z = np.asarray(centers, dtype=float)
        if w.shape != z.shape or w.ndim != 1:
            raise ValueError("weights and centers must be 1-D vectors of equal length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        return cls(np.diag(2.0 * w), -2.0 * w * z, float(np.sum(w * z**2)))

    @property
    def dimension(self) -> int:
        return self.linear.size

    def evaluate(self, x) -> float:
        xv = np.asarray(x, dtype=float)
        return float(0.5 * xv @ self.quad @ xv + self.linear @ xv + self.constant)

    def evaluate_batch(self, xs) -> np.ndarray:
        xv = np.asarray(xs, dtype=float)
        return 0.5 * np.einsum("ij,jk,ik->i", xv, self.quad, xv) + xv @ self.linear + self.constant

    def gradient(self, x) -> np.ndarray:
        return self.quad @ np.asarray(x, dtype=float) + self.linear

    def _gradient_row_range(self):
        neg = np.minimum(self.quad, 0.0).sum(axis=1)
        pos = np.maximum(self.quad, 0.0).sum(axis=1)
        return self.linear + neg, self.linear + pos

    def lipschitz_l1(self) -> float:
        return _interval_gradient_max(*self._gradient_row_range())[0]

    def lipschitz_l2(self) -> float:
        return _interval_gradient_max(*self._gradient_row_range())[1]
