"""Regret accounting and closed-form regret bounds.

Dynamic regret compares the implemented binary decisions against the
per-round best binary decision; the relaxed counterpart compares the relaxed
iterates against the per-round box minimizer.  This module provides the two
per-round optimum solvers, exact evaluators for the closed-form bounds, a
per-round bookkeeping ledger, the cumulative-variation tracker that feeds
the bounds, and a sampling estimator for gradient-norm moduli.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LossOracle

__all__ = [
    "BoundInputs",
    "ConvergenceError",
    "RegretLedger",
    "VariationTracker",
    "binary_round_optimum",
    "relaxed_round_optimum",
    "dynamic_regret_bound",
    "short_horizon_regret_bound",
    "restart_regret_bound",
    "rounding_gap_bound",
    "update_variation",
    "lipschitz_estimate",
]

ENUMERATION_CAP = 20
_CHUNK = 1 << 14


class ConvergenceError(RuntimeError):
    """Raised when the box solver hits its iteration cap before tolerance.

    Carries the best iterate and value reached so callers can degrade
    gracefully.
    """

    def __init__(self, message: str, best_x: np.ndarray, best_value: float):
        super().__init__(message)
        self.best_x = best_x
        self.best_value = best_value


def binary_round_optimum(oracle: LossOracle, cap: int = ENUMERATION_CAP):
    """Exhaustively minimize one round's loss over {0, 1}^n.

    Enumerates all 2^n binary vectors in increasing order of their integer
    code (coordinate i is bit i, least significant bit first) and returns
    ``(minimizer, value)``.  Ties are broken by the lowest code, which makes
    the result deterministic.  Uses the oracle's ``evaluate_batch`` fast
    path when available.

    Raises ValueError when n exceeds `cap` (default 20); at that size use
    the relaxed optimum as a lower-bound proxy instead.
    """
    n = oracle.dimension
    if n > cap:
        raise ValueError(
            f"binary enumeration needs 2^{n} evaluations (cap is n <= {cap}); "
            "use relaxed_round_optimum as a lower-bound proxy instead"
        )
    if n < 1:
        raise ValueError("oracle dimension must be >= 1")
    batch = getattr(oracle, "evaluate_batch", None)
    bit_cols = np.arange(n)
    best_value = math.inf
    best_vec: np.ndarray | None = None
    for start in range(0, 1 << n, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        vectors = ((codes[:, None] >> bit_cols) & 1).astype(float)
        if batch is not None:
            values = np.asarray(batch(vectors), dtype=float)
        else:
            values = np.array([float(oracle.evaluate(row)) for row in vectors])
        k = int(np.argmin(values))  # first occurrence, i.e. lowest code
        if values[k] < best_value:
            best_value = float(values[k])
            best_vec = vectors[k].copy()
    assert best_vec is not None
    return best_vec, best_value


def relaxed_round_optimum(
    oracle: LossOracle,
    tol: float = 1e-8,
    max_iter: int = 20000,
    x0=None,
):
    """Minimize one round's full loss over the unit box.

    Projected gradient descent with backtracking, Nesterov momentum and a
    gradient-based adaptive restart (the momentum handles the badly
    conditioned rank-one-plus-diagonal curvature of the fleet round losses).
    The l1 part of the loss is linear on the nonnegative box, so its weight
    is simply added to the smooth gradient.  Convergence is declared when
    the projected-gradient residual ``||x - clip(x - g, 0, 1)||_2`` drops
    to `tol`; the returned point always carries that certificate.

    Returns ``(minimizer, value)``.  Raises :class:`ConvergenceError`
    (carrying the best iterate found) if `max_iter` steps do not reach `tol`.
    """
    n = oracle.dimension
    if x0 is None:
        x = np.full(n, 0.5)
    else:
        x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
        if x.shape != (n,):
            raise ValueError(f"x0 must have shape ({n},)")
    lam = float(getattr(oracle, "l1_weight", 0.0))

    def value(v: np.ndarray) -> float:
        return float(oracle.evaluate(v))

    def grad(v: np.ndarray) -> np.ndarray:
        return np.asarray(oracle.gradient(v), dtype=float) + lam

    fx = value(x)
    gx = grad(x)
    if float(np.linalg.norm(x - np.clip(x - gx, 0.0, 1.0))) <= tol:
        return x, fx
    best_x, best_f = x.copy(), fx
    x_prev = x.copy()
    step = 1.0
    t_acc = 1.0
    beta = 0.0
    for _ in range(max_iter):
        y = np.clip(x + beta * (x - x_prev), 0.0, 1.0)
        gy = grad(y)
        fy = value(y)
        accepted = False
        while step >= 1e-18:
            cand = np.clip(y - step * gy, 0.0, 1.0)
            d = cand - y
            f_cand = value(cand)
            # sufficient decrease for the projected step at this step size
            if f_cand <= fy + float(gy @ d) + float(d @ d) / (2.0 * step) + 1e-12 * (
                1.0 + abs(fy)
            ):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise ConvergenceError(
                "projected gradient stalled below minimum step size", best_x, best_f
            )
        x_prev, x, fx = x, cand, f_cand
        if fx < best_f:
            best_x, best_f = x.copy(), fx
        gx = grad(x)
        if float(np.linalg.norm(x - np.clip(x - gx, 0.0, 1.0))) <= tol:
            return x, fx
        if float(gy @ (x - x_prev)) > 0.0:
            t_acc = 1.0  # momentum opposed descent; restart it
            beta = 0.0
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
            beta = (t_acc - 1.0) / t_next
            t_acc = t_next
        step = min(step * 1.25, 1e12)
    raise ConvergenceError(
        f"projected gradient did not reach tol={tol:g} within {max_iter} iterations",
        best_x,
        best_f,
    )


@dataclass(frozen=True)
class BoundInputs:
    """Problem constants the closed-form regret bounds are evaluated at.

    grad_l1 / grad_l2 are the gradient-norm moduli (max over the box and
    over rounds of the l1 / l2 gradient norm), `rounds` the total horizon,
    `block_length` the restart block length, and `variation` the cumulative
    l2 path length of the per-round box minimizers.
    """

    n: int
    step_scale: float
    grad_l2: float
    rounds: int
    grad_l1: float = 0.0
    block_length: int = 1
    variation: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")
        if not (math.isfinite(self.step_scale) and self.step_scale > 0.0):
            raise ValueError("step_scale must be positive and finite")
        for name in ("grad_l1", "grad_l2", "variation"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be nonnegative and finite")
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError("rounds must be an integer >= 1")
        if int(self.block_length) != self.block_length or self.block_length < 1:
            raise ValueError("block_length must be an integer >= 1")


def dynamic_regret_bound(b: BoundInputs) -> float:
    """Expected dynamic-regret bound for a single run over `rounds` rounds.

    Valid for the step size tuned to the full horizon.  Grows with
    sqrt(rounds) * variation and carries a rounds-linear term for the
    randomization gap:

        (n/(2a) + a*L2^2/2) * sqrt(rounds)
      + 2*n*sqrt(rounds)*variation
      + L2*sqrt(n)*rounds/2.
    """
    a = b.step_scale
    root = math.sqrt(b.rounds)
    return (
        (b.n / (2.0 * a) + a * b.grad_l2**2 / 2.0) * root
        + 2.0 * b.n * root * b.variation
        + b.grad_l2 * math.sqrt(b.n) * b.rounds / 2.0
    )


def _require_short_horizon(b: BoundInputs) -> None:
    limit = (b.step_scale * b.grad_l1) ** 2
    if b.block_length > limit:
        raise ValueError(
            f"block_length T = {b.block_length} exceeds (step_scale * grad_l1)^2 = {limit:g}; "
            "the short-horizon bound requires T <= (a*L1)^2"
        )


def short_horizon_regret_bound(b: BoundInputs) -> float:
    """Expected dynamic-regret bound over one block of T rounds.

    Requires T <= (a*L1)^2, which keeps the per-round randomization gap
    inside the sqrt(T) budget:

        (n/(2a) + a*L2^2/2 + a*L1*L2*sqrt(n)/2) * sqrt(T) + 2*n*L1*variation.
    """
    _require_short_horizon(b)
    a = b.step_scale
    coeff = (
        b.n / (2.0 * a)
        + a * b.grad_l2**2 / 2.0
        + a * b.grad_l1 * b.grad_l2 * math.sqrt(b.n) / 2.0
    )
    return coeff * math.sqrt(b.block_length) + 2.0 * b.n * b.grad_l1 * b.variation


def restart_regret_bound(b: BoundInputs) -> tuple[float, float]:
    """Finite-time bound for the restarted scheme: c1 * rounds**eps + c2 * V.

    The run is split into N = ceil(rounds / T) blocks of length T,
    restarting the iterate at each block.  With

        c1 = n/(2a) + 3*a*L2^2/2 + a*L1*L2*sqrt(n)/2,
        c2 = 2*n*L1,
        eps = (ln N + 0.5 ln T) / ln(rounds)   (so rounds**eps = N*sqrt(T)),

    returns ``(bound, eps)``.  Requires T <= (a*L1)^2, rounds >= T,
    rounds > 1, and 0 < eps < 1.
    """
    _require_short_horizon(b)
    if b.rounds < b.block_length:
        raise ValueError("restart bound requires rounds >= block_length")
    if b.rounds <= 1:
        raise ValueError("restart bound requires rounds > 1")
    num_blocks = -(-b.rounds // b.block_length)
    eps = (math.log(num_blocks) + 0.5 * math.log(b.block_length)) / math.log(b.rounds)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"exponent eps = {eps:.6g} outside (0, 1); schedule is not sublinear")
    a = b.step_scale
    c1 = (
        b.n / (2.0 * a)
        + 3.0 * a * b.grad_l2**2 / 2.0
        + a * b.grad_l1 * b.grad_l2 * math.sqrt(b.n) / 2.0
    )
    c2 = 2.0 * b.n * b.grad_l1
    return c1 * b.rounds**eps + c2 * b.variation, eps


def rounding_gap_bound(n: int, grad_l2: float) -> float:
    """Bound on E|f(binary) - f(relaxed)| per round: L2 * sqrt(n) / 2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (math.isfinite(grad_l2) and grad_l2 >= 0.0):
        raise ValueError("grad_l2 must be nonnegative and finite")
    return grad_l2 * math.sqrt(n) / 2.0


@dataclass
class VariationTracker:
    """Accumulates the l2 path length of a sequence of vectors.

    The first vector only initializes the tracker; each later vector adds
    ``||x_new - x_prev||_2`` to `total`.
    """

    previous: np.ndarray | None = None
    total: float = 0.0

    def update(self, x_new) -> "VariationTracker":
        vec = np.asarray(x_new, dtype=float).copy()
        if vec.ndim != 1:
            raise ValueError("variation tracker takes 1-D vectors")
        if self.previous is not None:
            if vec.shape != self.previous.shape:
                raise ValueError(
                    f"vector length changed from {self.previous.size} to {vec.size}"
                )
            self.total += float(np.linalg.norm(vec - self.previous))
        self.previous = vec
        return self


def update_variation(tracker: VariationTracker, x_new) -> VariationTracker:
    """Feed the next per-round minimizer into the tracker and return it."""
    return tracker.update(x_new)


def lipschitz_estimate(
    oracle: LossOracle,
    num_samples: int = 256,
    rng: np.random.Generator | None = None,
):
    """Estimate gradient-norm moduli (L1, L2) by sampling the box.

    Evaluates the gradient at `num_samples` uniform points plus
    2^min(n, 10) box corners (for n > 10 the corner bit patterns are tiled
    cyclically across coordinates).  Returns the max l1 and l2 gradient
    norms seen.  This is a lower estimate of the true moduli; it is exact
    for affine gradients when n <= 10 because then every corner is visited.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = oracle.dimension
    points = [rng.random(n) for _ in range(num_samples)]
    m = min(n, 10)
    shifts = np.arange(n) % m
    for code in range(1 << m):
        points.append(((code >> shifts) & 1).astype(float))
    l1 = 0.0
    l2 = 0.0
    for point in points:
        g = np.asarray(oracle.gradient(point), dtype=float)
        l1 = max(l1, float(np.abs(g).sum()))
        l2 = max(l2, float(np.linalg.norm(g)))
    return l1, l2


class RegretLedger:
    """Per-round loss bookkeeping behind the regret curves.

    Records, for each round, the loss of the implemented binary decision,
    the loss of the relaxed iterate, and (when available) the losses of the
    per-round binary and relaxed optima.  Missing optima are stored as nan
    and propagate into the curves, so the true-regret and proxy columns can
    never be silently conflated.
    """

    def __init__(self) -> None:
        self._binary: list[float] = []
        self._relaxed: list[float] = []
        self._binary_opt: list[float] = []
        self._relaxed_opt: list[float] = []

    def record(
        self,
        loss_binary: float,
        loss_relaxed: float,
        loss_binary_opt: float = math.nan,
        loss_relaxed_opt: float = math.nan,
    ) -> None:
        self._binary.append(float(loss_binary))
        self._relaxed.append(float(loss_relaxed))
        self._binary_opt.append(float(loss_binary_opt))
        self._relaxed_opt.append(float(loss_relaxed_opt))

    def __len__(self) -> int:
        return len(self._binary)

    def regret_curve(self) -> np.ndarray:
        """Cumulative sum of f(binary decision) - f(best binary decision)."""
        return np.cumsum(np.asarray(self._binary) - np.asarray(self._binary_opt))

    def relaxed_regret_curve(self) -> np.ndarray:
        """Cumulative sum of f(relaxed iterate) - f(box minimizer)."""
        return np.cumsum(np.asarray(self._relaxed) - np.asarray(self._relaxed_opt))

    def rounding_gap_curve(self) -> np.ndarray:
        """Cumulative sum of |f(binary decision) - f(relaxed iterate)|."""
        return np.cumsum(np.abs(np.asarray(self._binary) - np.asarray(self._relaxed)))

    def proxy_regret_curve(self) -> np.ndarray:
        """Cumulative sum of f(binary decision) - f(box minimizer).

        Upper-bounds the true regret because the box minimizer is at least
        as good as the best binary decision.  This is the reported column
        when the binary optimum is not enumerable.
        """
        return np.cumsum(np.asarray(self._binary) - np.asarray(self._relaxed_opt))

    def check_dominance(self, tol: float = 1e-9) -> bool:
        """True if f(box minimizer) <= f(binary optimum) wherever both exist."""
        box = np.asarray(self._relaxed_opt)
        binary = np.asarray(self._binary_opt)
        both = ~(np.isnan(box) | np.isnan(binary))
        if not both.any():
            return True
        scale = np.maximum(1.0, np.abs(binary[both]))
        return bool(np.all(box[both] <= binary[both] + tol * scale))
