"""Synthetic drifting-target study with known per-round optima.

Each round's loss is a separable quadratic sum((x_i - z_i)^2) whose targets
z_i sit outside the unit box (at -0.5 or 1.5), so every per-round optimum,
relaxed or binary, is the corner nearest the target.  The target path starts
from an alternating pattern and flips one coordinate at a time on a fixed
early schedule, concentrating all comparator drift in the first quarter of
the horizon.  Because the losses are deterministic, the relaxed iterate path
is identical across replications; only the binary rounding draws vary.

This is the reference workload for checking sublinear cumulative regret and
for comparing the empirical curves against the closed-form bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RestartSchedule, StepConfig, run_with_restarts
from .oracles import QuadraticLoss
from .regret import (
    BoundInputs,
    binary_round_optimum,
    dynamic_regret_bound,
    restart_regret_bound,
    short_horizon_regret_bound,
)

__all__ = [
    "SyntheticConfig",
    "SyntheticStudy",
    "target_path",
    "oracle_stream",
    "comparator_path",
    "study",
]


@dataclass(frozen=True)
class SyntheticConfig:
    """Dimensions, drift schedule and learner settings for the study."""

    n: int = 8
    rounds: int = 400
    block_length: int = 100
    step_scale: float = 0.5
    l1_weight: float = 0.0
    target_low: float = -0.5
    target_high: float = 1.5
    flip_start: int = 6       # round of the first target flip
    flip_spacing: int = 8     # rounds between consecutive flips
    flip_count: int = 12      # total single-coordinate flips
    replications: int = 100
    seed: int = 2024          # replication k uses seed + k

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.rounds < 1 or self.block_length < 1:
            raise ValueError("rounds and block_length must be >= 1")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be nonnegative")
        if not self.target_low < 0.5 < self.target_high:
            raise ValueError("targets must straddle 0.5 so optima are corners")
        if self.flip_start < 2:
            raise ValueError("first flip must happen at round >= 2")
        if self.flip_spacing < 1 or self.flip_count < 0:
            raise ValueError("flip_spacing must be >= 1 and flip_count >= 0")
        last = self.flip_start + (self.flip_count - 1) * self.flip_spacing
        if self.flip_count > 0 and last > self.rounds:
            raise ValueError("flip schedule extends past the horizon")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


def target_path(cfg: SyntheticConfig) -> np.ndarray:
    """Per-round quadratic targets, shape (rounds, n).

    Round 1 alternates high/low across coordinates.  Flip event e
    (0-based) toggles coordinate e mod n starting at round
    flip_start + e * flip_spacing, and the change persists.
    """
    z = np.where(np.arange(cfg.n) % 2 == 0, cfg.target_high, cfg.target_low)
    path = np.tile(z, (cfg.rounds, 1))
    for e in range(cfg.flip_count):
        r = cfg.flip_start + e * cfg.flip_spacing
        i = e % cfg.n
        before = path[r - 1, i]
        flipped = cfg.target_low if before == cfg.target_high else cfg.target_high
        path[r - 1 :, i] = flipped
    return path


def oracle_stream(cfg: SyntheticConfig) -> list[QuadraticLoss]:
    """One separable quadratic per round, built from the target path."""
    targets = target_path(cfg)
    weights = np.ones(cfg.n)
    return [QuadraticLoss.separable(weights, targets[t]) for t in range(cfg.rounds)]


def comparator_path(oracles: list[QuadraticLoss]) -> tuple[np.ndarray, np.ndarray]:
    """Per-round binary optima and their losses, found by enumeration."""
    best_x = np.zeros((len(oracles), oracles[0].dimension))
    best_f = np.zeros(len(oracles))
    for t, oracle in enumerate(oracles):
        x, f = binary_round_optimum(oracle)
        best_x[t] = x
        best_f[t] = f
    return best_x, best_f


@dataclass(eq=False)
class SyntheticStudy:
    """All curves from one study run; arrays are indexed by round."""

    config: SyntheticConfig
    comparator: np.ndarray        # (rounds, n) per-round binary optima
    comparator_losses: np.ndarray  # (rounds,)
    variation_curve: np.ndarray   # (rounds,) prefix path length of comparator
    x_path: np.ndarray            # (rounds, n) relaxed iterates (shared by reps)
    relaxed_regret: np.ndarray    # (rounds,) cumulative regret of the relaxed path
    mean_regret: np.ndarray       # (rounds,) cumulative binary regret, mean over reps
    stderr_regret: np.ndarray     # (rounds,) standard error over reps
    bound_dynamic: np.ndarray     # (rounds,)
    bound_short: np.ndarray       # (rounds,) nan where the short-horizon bound fails
    bound_restart: np.ndarray     # (rounds,) nan where undefined
    lipschitz_l1: float
    lipschitz_l2: float

    @property
    def rounds(self) -> int:
        return self.comparator_losses.size


def _bound_curves(
    cfg: SyntheticConfig, variation: np.ndarray, l1: float, l2: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rounds = cfg.rounds
    dynamic = np.full(rounds, np.nan)
    short = np.full(rounds, np.nan)
    restart = np.full(rounds, np.nan)
    short_limit = (cfg.step_scale * l1) ** 2
    for t in range(1, rounds + 1):
        v = float(variation[t - 1])
        dynamic[t - 1] = dynamic_regret_bound(
            BoundInputs(cfg.n, cfg.step_scale, l2, t, grad_l1=l1, variation=v)
        )
        if t <= short_limit:
            short[t - 1] = short_horizon_regret_bound(
                BoundInputs(cfg.n, cfg.step_scale, l2, t, grad_l1=l1, variation=v)
            )
        if t >= cfg.block_length and t > 1:
            inputs = BoundInputs(
                cfg.n,
                cfg.step_scale,
                l2,
                t,
                grad_l1=l1,
                block_length=cfg.block_length,
                variation=v,
            )
            try:
                restart[t - 1], _ = restart_regret_bound(inputs)
            except ValueError:
                pass  # exponent outside (0, 1) for this prefix; leave nan
    return dynamic, short, restart


def study(cfg: SyntheticConfig | None = None, replications: int | None = None) -> SyntheticStudy:
    """Run the full study: shared optima, one relaxed path, many binary reps.

    The relaxed trajectory is deterministic (losses have no noise and the
    initial iterate is the box center), so it is computed once from
    replication 0 and reused; replications differ only in the Bernoulli
    rounding draws.
    """
    cfg = cfg or SyntheticConfig()
    reps = cfg.replications if replications is None else int(replications)
    if reps < 1:
        raise ValueError("replications must be >= 1")

    oracles = oracle_stream(cfg)
    best_x, best_f = comparator_path(oracles)
    steps = np.linalg.norm(np.diff(best_x, axis=0), axis=1)
    variation = np.concatenate([[0.0], np.cumsum(steps)])

    l1 = max(o.lipschitz_l1() for o in oracles)
    l2 = max(o.lipschitz_l2() for o in oracles)

    schedule = RestartSchedule(cfg.block_length, cfg.rounds)
    step_cfg = StepConfig(cfg.step_scale, cfg.l1_weight, cfg.block_length)
    x1 = np.full(cfg.n, 0.5)

    binary_cumulative = np.zeros((reps, cfg.rounds))
    x_path = None
    relaxed_losses = None
    for k in range(reps):
        rng = np.random.default_rng(cfg.seed + k)
        rounds = run_with_restarts(oracles, schedule, step_cfg, rng, x1=x1)
        losses = np.array([r.loss for r in rounds])
        binary_cumulative[k] = np.cumsum(losses - best_f)
        if k == 0:
            x_path = np.array([r.x for r in rounds])
            relaxed_losses = np.array(
                [oracle.evaluate(r.x) for oracle, r in zip(oracles, rounds)]
            )

    mean_regret = binary_cumulative.mean(axis=0)
    if reps > 1:
        stderr = binary_cumulative.std(axis=0, ddof=1) / np.sqrt(reps)
    else:
        stderr = np.zeros(cfg.rounds)
    relaxed_regret = np.cumsum(relaxed_losses - best_f)

    dynamic, short, restart = _bound_curves(cfg, variation, l1, l2)
    return SyntheticStudy(
        config=cfg,
        comparator=best_x,
        comparator_losses=best_f,
        variation_curve=variation,
        x_path=x_path,
        relaxed_regret=relaxed_regret,
        mean_regret=mean_regret,
        stderr_regret=stderr,
        bound_dynamic=dynamic,
        bound_short=short,
        bound_restart=restart,
        lipschitz_l1=l1,
        lipschitz_l2=l2,
    )
