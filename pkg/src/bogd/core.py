"""Online gradient descent over the unit box with randomized rounding.

At each round the learner holds a relaxed decision x in [0, 1]^n, implements
a binary decision by switching coordinate i on with probability x(i)
(independently across coordinates), observes a convex loss, and takes a
single proximal gradient step.  The step minimizes

    eta * <g, x> + 0.5 * ||x - x_t||^2 + eta * l1_weight * ||x||_1

over the box, where g is the loss gradient at the relaxed iterate.  On the
nonnegative box the l1 term is linear, so the minimizer has the closed form

    x_{t+1}(i) = clip(x_t(i) - eta * (g(i) + l1_weight), 0, 1).

Losses are supplied through the :class:`LossOracle` interface.  Gradients are
always evaluated at the relaxed iterate; the loss value observed for the
implemented binary decision is logged but never differentiated.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "LossOracle",
    "StepConfig",
    "RestartSchedule",
    "Round",
    "prox_update",
    "randomize",
    "bogd_step",
    "run",
    "run_with_restarts",
]


def as_decision_vector(x, name: str = "x") -> np.ndarray:
    """Coerce `x` to a finite 1-D float vector, copying the input."""
    vec = np.array(x, dtype=float)
    if vec.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} contains non-finite entries")
    return vec


def check_relaxed(x, name: str = "x") -> np.ndarray:
    """Validate a relaxed decision: finite vector with entries in [0, 1]."""
    vec = as_decision_vector(x, name)
    if vec.size and (vec.min() < 0.0 or vec.max() > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]^n")
    return vec


def check_binary(x, name: str = "x") -> np.ndarray:
    """Validate a binary decision: every entry exactly 0 or 1."""
    vec = as_decision_vector(x, name)
    if not np.all((vec == 0.0) | (vec == 1.0)):
        raise ValueError(f"{name} must have entries in {{0, 1}}")
    return vec


class LossOracle(ABC):
    """One round's loss: value, smooth gradient, and gradient-norm bounds.

    ``evaluate`` returns the full loss including any l1 penalty
    (``l1_weight * ||x||_1``); ``gradient`` returns the gradient of the
    smooth part only, because the l1 term is handled inside the proximal
    step.  ``l1_weight`` is 0 for losses without a sparsity term.
    """

    #: weight of the l1 term included in evaluate() but not in gradient()
    l1_weight: float = 0.0

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Length of the decision vector."""

    @abstractmethod
    def evaluate(self, x) -> float:
        """Full loss value at `x` (including the l1 term, if any)."""

    @abstractmethod
    def gradient(self, x) -> np.ndarray:
        """Gradient of the smooth part of the loss at `x`."""

    @abstractmethod
    def lipschitz_l1(self) -> float:
        """Upper bound on ||gradient(x)||_1 over the unit box."""

    @abstractmethod
    def lipschitz_l2(self) -> float:
        """Upper bound on ||gradient(x)||_2 over the unit box."""


@dataclass(frozen=True)
class StepConfig:
    """Step-size and penalty parameters for the proximal update.

    Parameters
    ----------
    step_scale : float
        Positive scale `a` of the step size; eta = a / sqrt(horizon).
    l1_weight : float
        Nonnegative weight of the l1 penalty folded into the prox step.
    horizon : int
        Number of rounds the step size is tuned for (the block length when
        running with restarts).  Must be >= 1.
    """

    step_scale: float
    l1_weight: float = 0.0
    horizon: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.step_scale) and self.step_scale > 0.0):
            raise ValueError("step_scale must be positive and finite")
        if not (math.isfinite(self.l1_weight) and self.l1_weight >= 0.0):
            raise ValueError("l1_weight must be nonnegative and finite")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError("horizon must be an integer >= 1")

    @property
    def eta(self) -> float:
        """Step size, recomputed from (step_scale, horizon) on every access."""
        return self.step_scale / math.sqrt(self.horizon)


@dataclass(frozen=True)
class RestartSchedule:
    """Fixed-length restart blocks covering a total horizon.

    The run is split into ``num_blocks = ceil(rounds / block_length)`` blocks;
    the relaxed iterate is reset to its initial value at the start of each
    block and the final block is truncated to fit ``rounds``.
    """

    block_length: int
    rounds: int

    def __post_init__(self) -> None:
        if int(self.block_length) != self.block_length or self.block_length < 1:
            raise ValueError("block_length must be an integer >= 1")
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError("rounds must be an integer >= 1")

    @property
    def num_blocks(self) -> int:
        return -(-self.rounds // self.block_length)

    @property
    def epsilon(self) -> float:
        """Exponent e with rounds**e == num_blocks * sqrt(block_length).

        Evaluated as (log N + 0.5 log T) / log(rounds).  Defined for
        rounds > 1 and only valid when it falls in (0, 1); anything else
        raises ValueError.
        """
        if self.rounds <= 1:
            raise ValueError("epsilon requires rounds > 1")
        eps = (math.log(self.num_blocks) + 0.5 * math.log(self.block_length)) / math.log(self.rounds)
        if not 0.0 < eps < 1.0:
            raise ValueError(
                f"epsilon = {eps:.6g} outside (0, 1); schedule gives no sublinear exponent"
            )
        return eps


class Round(NamedTuple):
    """One recorded round: iterate, implemented decision, observed loss."""

    t: int
    x: np.ndarray
    x_binary: np.ndarray
    loss: float


def prox_update(x, grad, cfg: StepConfig) -> np.ndarray:
    """Single proximal gradient step on the unit box.

    Parameters
    ----------
    x : array_like
        Current relaxed decision in [0, 1]^n.
    grad : array_like
        Gradient of the smooth loss part at `x`; must be finite and the
        same length as `x`.
    cfg : StepConfig
        Supplies the step size and the l1 penalty weight.

    Returns
    -------
    numpy.ndarray
        clip(x - eta * (grad + l1_weight), 0, 1), computed coordinatewise.
    """
    xv = check_relaxed(x)
    gv = np.asarray(grad, dtype=float)
    if gv.shape != xv.shape:
        raise ValueError(f"gradient shape {gv.shape} does not match decision shape {xv.shape}")
    if not np.all(np.isfinite(gv)):
        raise ValueError("gradient contains non-finite entries")
    return np.clip(xv - cfg.eta * (gv + cfg.l1_weight), 0.0, 1.0)


def randomize(x, rng: np.random.Generator) -> np.ndarray:
    """Draw a binary decision with E[output] = x, coordinatewise independent.

    Consumes exactly one uniform draw per coordinate, so the output is
    deterministic given (x, generator state).  Coordinates at exactly 0 or 1
    come out 0 or 1 regardless of the draw.
    """
    xv = check_relaxed(x)
    return (rng.random(xv.size) < xv).astype(float)


def bogd_step(x, oracle: LossOracle, cfg: StepConfig, rng: np.random.Generator):
    """Advance one round: gradient at the relaxed iterate, prox, randomize.

    Returns
    -------
    (x_next, x_next_binary) : tuple of numpy.ndarray
        The updated relaxed decision and a fresh binary realization of it.
    """
    xv = check_relaxed(x)
    if oracle.dimension != xv.size:
        raise ValueError(
            f"oracle dimension {oracle.dimension} does not match decision length {xv.size}"
        )
    grad = oracle.gradient(xv)
    x_next = prox_update(xv, grad, cfg)
    return x_next, randomize(x_next, rng)


def _initial_iterate(n: int, x1) -> np.ndarray:
    if x1 is None:
        return np.full(n, 0.5)
    vec = check_relaxed(x1, "x1")
    if vec.size != n:
        raise ValueError(f"x1 has length {vec.size}, expected {n}")
    return vec


def _run_loop(
    oracles: list[LossOracle],
    rounds: int,
    reset_every: int | None,
    cfg: StepConfig,
    rng: np.random.Generator,
    x1,
) -> list[Round]:
    if not oracles:
        raise ValueError("oracle stream is empty")
    if len(oracles) < rounds:
        raise ValueError(f"oracle stream has {len(oracles)} rounds, need {rounds}")
    n = oracles[0].dimension
    x_start = _initial_iterate(n, x1)

    trajectory: list[Round] = []
    x = x_start.copy()
    for t in range(1, rounds + 1):
        if reset_every is not None and t > 1 and (t - 1) % reset_every == 0:
            x = x_start.copy()
        oracle = oracles[t - 1]
        if oracle.dimension != n:
            raise ValueError(f"oracle at round {t} has dimension {oracle.dimension}, expected {n}")
        x_binary = randomize(x, rng)
        loss = float(oracle.evaluate(x_binary))
        trajectory.append(Round(t, x.copy(), x_binary, loss))
        grad = oracle.gradient(x)
        x = prox_update(x, grad, cfg)
    return trajectory


def run_with_restarts(
    oracles: Sequence[LossOracle],
    schedule: RestartSchedule,
    cfg: StepConfig,
    rng: np.random.Generator,
    x1=None,
) -> list[Round]:
    """Run the online loop over `schedule.rounds` rounds with periodic resets.

    The relaxed iterate is reset to `x1` (default: all 0.5) at the start of
    every block; the final block is truncated to fit the horizon.  Within
    each round t the binary decision is drawn from the current relaxed
    iterate, the loss at the binary decision is recorded, and the iterate is
    updated with the gradient taken at the relaxed iterate.  The step size
    must be tuned to the block length: ``cfg.horizon == schedule.block_length``.

    Returns the per-round records in order.
    """
    if cfg.horizon != schedule.block_length:
        raise ValueError(
            f"cfg.horizon ({cfg.horizon}) must equal schedule.block_length "
            f"({schedule.block_length}) so the step size matches the blocks"
        )
    return _run_loop(list(oracles), schedule.rounds, schedule.block_length, cfg, rng, x1)


def run(
    oracles: Sequence[LossOracle],
    cfg: StepConfig,
    rng: np.random.Generator,
    x1=None,
) -> list[Round]:
    """Run the online loop over the whole oracle stream without restarts.

    The step size comes from `cfg` as configured; tune `cfg.horizon` to the
    stream length for the a/sqrt(rounds) convention.
    """
    oracles = list(oracles)
    return _run_loop(oracles, len(oracles), None, cfg, rng, x1)
