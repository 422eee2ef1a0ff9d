"""Fleet simulator: thermostatically controlled loads tracking a setpoint.

A fleet of n on/off cooling loads is dispatched each round by the online
learner.  Per round t the plant exposes, for each load i, the controllable
rated draw p_t(i) (zero when the load is unavailable), the uncontrollable
override draw p_tilde_t(i), and the override indicator u_t(i).  The loss

    (s_t - p_t'x - p_tilde_t'u_t)^2                       tracking
  + l1_weight * ||x||_1                                    sparsity
  + (rho/2) * ||predicted mean temperature - theta_d||^2   comfort

is observed after dispatch; its smooth gradient drives the proximal update
(the l1 term is folded into the prox step).  Temperatures follow a
first-order thermal model with per-round Gaussian process noise, and an
availability state machine enforces compressor lockout, deadband limits,
and optional manual overrides.

Round indexing is 1-based in the interfaces; stored arrays put round t at
row t-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LossOracle, StepConfig, prox_update, randomize

__all__ = [
    "LoadParams",
    "FleetRanges",
    "Fleet",
    "ThermalModel",
    "FleetState",
    "DemandTrackingLoss",
    "Seeds",
    "ScenarioConfig",
    "SimulationRecord",
    "Metrics",
    "sample_fleet",
    "thermal_step",
    "availability_update",
    "generate_setpoint",
    "generate_ambient",
    "simulate",
    "metrics",
    "count_lockout_violations",
]


@dataclass(frozen=True)
class LoadParams:
    """Physical parameters of one load."""

    r: float          # thermal resistance (degC per kW)
    c: float          # thermal capacitance (kWh per degC)
    p_rated: float    # rated electrical draw when switched on (kW)
    theta_d: float    # desired temperature (degC)
    theta_min: float  # lower deadband edge (degC)
    theta_max: float  # upper deadband edge (degC)

    def __post_init__(self) -> None:
        if self.r <= 0 or self.c <= 0 or self.p_rated <= 0:
            raise ValueError("r, c and p_rated must be positive")
        if not self.theta_min < self.theta_d < self.theta_max:
            raise ValueError("need theta_min < theta_d < theta_max")


@dataclass(frozen=True)
class FleetRanges:
    """Uniform sampling ranges for fleet parameters (lo, hi).

    Defaults are representative residential air-conditioning ranges; all of
    them are plain configuration values meant to be overridden.
    """

    r: tuple[float, float] = (1.5, 2.5)            # degC per kW
    c: tuple[float, float] = (1.5, 2.5)            # kWh per degC
    p_rated: tuple[float, float] = (4.0, 7.2)      # kW
    theta_d: tuple[float, float] = (20.0, 24.0)    # degC
    deadband_halfwidth: tuple[float, float] = (0.125, 0.5)  # degC

    def __post_init__(self) -> None:
        for name in ("r", "c", "p_rated", "theta_d", "deadband_halfwidth"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"range {name} must be finite")
            if lo > hi:
                raise ValueError(f"range {name} is inverted: ({lo}, {hi})")
        for name in ("r", "c", "p_rated", "deadband_halfwidth"):
            if getattr(self, name)[0] <= 0:
                raise ValueError(f"range {name} must be positive")


def sample_fleet(n: int, ranges: FleetRanges, rng: np.random.Generator) -> list[LoadParams]:
    """Draw n loads with independent uniform parameters.

    Draw order is fixed (r, c, p_rated, theta_d, deadband halfwidth), one
    vectorized draw per field, so a given seed always yields the same fleet.
    """
    if n < 1:
        raise ValueError("fleet size must be >= 1")
    r = rng.uniform(*ranges.r, n)
    c = rng.uniform(*ranges.c, n)
    p_rated = rng.uniform(*ranges.p_rated, n)
    theta_d = rng.uniform(*ranges.theta_d, n)
    halfwidth = rng.uniform(*ranges.deadband_halfwidth, n)
    return [
        LoadParams(
            r=float(r[i]),
            c=float(c[i]),
            p_rated=float(p_rated[i]),
            theta_d=float(theta_d[i]),
            theta_min=float(theta_d[i] - halfwidth[i]),
            theta_max=float(theta_d[i] + halfwidth[i]),
        )
        for i in range(n)
    ]


@dataclass(eq=False)
class Fleet:
    """Column view of a list of loads, for vectorized simulation."""

    r: np.ndarray
    c: np.ndarray
    p_rated: np.ndarray
    theta_d: np.ndarray
    theta_min: np.ndarray
    theta_max: np.ndarray

    @classmethod
    def from_loads(cls, loads: list[LoadParams]) -> "Fleet":
        if not loads:
            raise ValueError("fleet is empty")
        return cls(
            r=np.array([ld.r for ld in loads]),
            c=np.array([ld.c for ld in loads]),
            p_rated=np.array([ld.p_rated for ld in loads]),
            theta_d=np.array([ld.theta_d for ld in loads]),
            theta_min=np.array([ld.theta_min for ld in loads]),
            theta_max=np.array([ld.theta_max for ld in loads]),
        )

    @property
    def n(self) -> int:
        return self.r.size


@dataclass(eq=False)
class ThermalModel:
    """First-order thermal dynamics for the whole fleet.

    decay(i) = exp(-h / (r(i) * c(i))) is the per-round temperature decay;
    one round of cooling at effective draw e pulls load i toward
    ambient - r(i) * e(i).
    """

    r: np.ndarray          # degC per kW
    decay: np.ndarray      # dimensionless, in (0, 1)
    h: float               # round duration (hours)
    noise_std: float       # process noise std per round (degC)

    @classmethod
    def from_fleet(cls, fleet: Fleet, h: float, noise_std: float) -> "ThermalModel":
        if h <= 0:
            raise ValueError("round duration h must be positive (hours)")
        if noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        return cls(
            r=fleet.r.copy(),
            decay=np.exp(-h / (fleet.r * fleet.c)),
            h=float(h),
            noise_std=float(noise_std),
        )


def thermal_step(
    theta,
    effective_kw,
    ambient: float,
    model: ThermalModel,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Advance temperatures one round.

    theta_next = decay * theta + (1 - decay) * (ambient - r * effective_kw)
    plus Gaussian noise with std `model.noise_std`.  `effective_kw` is the
    realized electrical draw per load (dispatched plus override).  When
    noise_std is 0 no random numbers are consumed and `rng` may be omitted.
    """
    theta = np.asarray(theta, dtype=float)
    e = np.asarray(effective_kw, dtype=float)
    if theta.shape != e.shape or theta.shape != model.decay.shape:
        raise ValueError("theta, effective_kw and model must have matching lengths")
    out = model.decay * theta + (1.0 - model.decay) * (ambient - model.r * e)
    if model.noise_std > 0.0:
        if rng is None:
            raise ValueError("rng is required when noise_std > 0")
        out = out + model.noise_std * rng.standard_normal(theta.size)
    return out


@dataclass(eq=False)
class FleetState:
    """Mutable per-round plant state.

    `theta` and `mean_theta` refer to the last completed round; `p`,
    `p_tilde` and `u` are the availability vectors of the round currently
    being served (set by :func:`availability_update`).  `effective_prev`
    remembers the previous round's realized draw for lockout detection.
    """

    theta: np.ndarray
    mean_theta: np.ndarray
    lockout_remaining: np.ndarray
    override_remaining: np.ndarray
    p: np.ndarray
    p_tilde: np.ndarray
    u: np.ndarray
    effective_prev: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, fleet: Fleet) -> "FleetState":
        n = fleet.n
        return cls(
            theta=fleet.theta_d.copy(),
            mean_theta=np.zeros(n),
            lockout_remaining=np.zeros(n, dtype=np.int64),
            override_remaining=np.zeros(n, dtype=np.int64),
            p=np.zeros(n),
            p_tilde=np.zeros(n),
            u=np.zeros(n),
            effective_prev=np.zeros(n),
            t=0,
        )

    def advance(self, theta_new: np.ndarray, t: int) -> None:
        """Store round t's observed temperatures and fold them into the mean."""
        self.theta = theta_new
        self.mean_theta = self.mean_theta + (theta_new - self.mean_theta) / t
        self.t = t


def availability_update(
    state: FleetState,
    x_hat_prev,
    fleet: Fleet,
    lockout_rounds: int,
    override_probability: float = 0.0,
    override_duration: int = 1,
    rng: np.random.Generator | None = None,
) -> FleetState:
    """Set each load's (p, p_tilde, u) for the round about to be served.

    Rules are applied per load in priority order:

    1. lockout: the effective draw went positive -> zero within the last
       `lockout_rounds` rounds; the load stays off entirely (p = 0, u = 0).
    2. below deadband (theta < theta_min): no draw offered, no override.
    3. above deadband (theta > theta_max): override cooling at rated draw
       (p = 0, u = 1, p_tilde = p_rated).
    4. manual override: same effect as rule 3, drawn per load per round
       with `override_probability` and lasting `override_duration` rounds.
    5. otherwise the load is available: p = p_rated, u = 0.

    The positive -> zero transition is detected here by comparing the
    previous round's realized draw (reconstructed from `x_hat_prev` and the
    stored availability vectors) against the round before it, so overrides
    switching off trigger lockout exactly like dispatch switching off.
    Mutates and returns `state`.
    """
    if lockout_rounds < 1:
        raise ValueError("lockout_rounds must be >= 1")
    xprev = np.asarray(x_hat_prev, dtype=float)
    e_prev = state.p * xprev + state.p_tilde * state.u
    newly_locked = (state.effective_prev > 0.0) & (e_prev == 0.0)
    state.lockout_remaining = np.where(newly_locked, lockout_rounds, state.lockout_remaining)
    state.effective_prev = e_prev

    if override_probability > 0.0:
        if rng is None:
            raise ValueError("manual overrides need an rng")
        fired = rng.random(fleet.n) < override_probability
        state.override_remaining = np.where(
            fired, int(override_duration), state.override_remaining
        )

    locked = state.lockout_remaining > 0
    low = state.theta < fleet.theta_min
    high = state.theta > fleet.theta_max
    manual = state.override_remaining > 0

    free = ~locked & ~low
    cooling = free & (high | manual)
    available = free & ~high & ~manual

    state.p = np.where(available, fleet.p_rated, 0.0)
    state.u = cooling.astype(float)
    state.p_tilde = np.where(cooling, fleet.p_rated, 0.0)

    state.lockout_remaining = np.maximum(state.lockout_remaining - 1, 0)
    state.override_remaining = np.maximum(state.override_remaining - 1, 0)
    return state


def generate_setpoint(
    rounds: int,
    base_kw: float,
    noise: float,
    hold: int,
    rng: np.random.Generator,
    mode: str = "variance",
) -> np.ndarray:
    """Aggregate power setpoint: base plus a Gaussian step held fixed.

    A fresh zero-mean Gaussian perturbation is drawn every `hold` rounds and
    held constant in between, so `rounds`=10 with `hold`=5 contains exactly
    two distinct perturbation values.  `noise` is the variance of the
    perturbation when mode="variance" (default) or its std when mode="std".
    Returns an array of length `rounds`; round t is entry t-1.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if hold < 1:
        raise ValueError("hold must be >= 1")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    if mode == "variance":
        std = math.sqrt(noise)
    elif mode == "std":
        std = float(noise)
    else:
        raise ValueError(f"unknown setpoint noise mode: {mode!r}")
    blocks = -(-rounds // hold)
    w = std * rng.standard_normal(blocks)
    return base_kw + np.repeat(w, hold)[:rounds]


def generate_ambient(
    t: float,
    base: float = 34.0,
    amplitude: float = 0.25,
    period: float = 200.0,
) -> float:
    """Ambient temperature at round t: base + amplitude * sin(t*pi/period)."""
    if period <= 0:
        raise ValueError("period must be positive")
    return float(base + amplitude * math.sin(t * math.pi / period))


class DemandTrackingLoss(LossOracle):
    """One round's loss: setpoint tracking + sparsity + comfort.

    Built from the quantities observed at round t, before dispatch: the
    setpoint, availability vectors, the previous round's temperatures and
    their running mean, and the ambient forecast.  `evaluate` returns the
    full loss including the l1 term; `gradient` differentiates only the
    smooth part (tracking + comfort).

    The comfort term penalizes the one-round-ahead prediction of the mean
    temperature: with m = ((t-1)*mean_prev + decay*theta_prev
    + (1-decay)*(ambient - r*p*x)) / t, the term is
    (rho/2) * ||m - theta_d||^2, which is quadratic in x through the
    diagonal map j = -(1/t) * (1-decay) * r * p.
    """

    def __init__(
        self,
        t: int,
        setpoint: float,
        p,
        p_tilde,
        u,
        theta_prev,
        mean_theta_prev,
        ambient: float,
        decay,
        r,
        theta_d,
        comfort_weight: float,
        l1_weight: float,
    ):
        if t < 1:
            raise ValueError(
                "round index must be >= 1: the mean-temperature term is undefined "
                "before the first observation"
            )
        self.t = int(t)
        self.setpoint = float(setpoint)
        self.p = np.array(p, dtype=float)
        n = self.p.size
        for name, arr in (("p_tilde", p_tilde), ("u", u)):
            if np.asarray(arr).shape != (n,):
                raise ValueError(f"{name} must have length {n}")
        self.uncontrollable = float(np.asarray(p_tilde, dtype=float) @ np.asarray(u, dtype=float))
        self.comfort_weight = float(comfort_weight)
        self.l1_weight = float(l1_weight)
        if self.comfort_weight < 0 or self.l1_weight < 0:
            raise ValueError("comfort_weight and l1_weight must be nonnegative")

        decay = np.asarray(decay, dtype=float)
        r = np.asarray(r, dtype=float)
        frac = 1.0 / t
        predicted_mean_at_zero = (1.0 - frac) * np.asarray(mean_theta_prev, dtype=float) + frac * (
            decay * np.asarray(theta_prev, dtype=float) + (1.0 - decay) * ambient
        )
        # comfort-term argument is c0 + j * x (elementwise)
        self._c0 = predicted_mean_at_zero - np.asarray(theta_d, dtype=float)
        self._j = -frac * (1.0 - decay) * r * self.p

    @property
    def dimension(self) -> int:
        return self.p.size

    def evaluate(self, x) -> float:
        xv = np.asarray(x, dtype=float)
        resid = self.setpoint - self.p @ xv - self.uncontrollable
        v = self._c0 + self._j * xv
        return float(
            resid * resid
            + self.l1_weight * np.abs(xv).sum()
            + 0.5 * self.comfort_weight * (v @ v)
        )

    def evaluate_batch(self, xs) -> np.ndarray:
        xv = np.asarray(xs, dtype=float)
        resid = self.setpoint - xv @ self.p - self.uncontrollable
        v = self._c0 + xv * self._j
        return (
            resid * resid
            + self.l1_weight * np.abs(xv).sum(axis=1)
            + 0.5 * self.comfort_weight * np.einsum("ij,ij->i", v, v)
        )

    def gradient(self, x) -> np.ndarray:
        xv = np.asarray(x, dtype=float)
        resid = self.setpoint - self.p @ xv - self.uncontrollable
        return -2.0 * resid * self.p + self.comfort_weight * self._j * (self._c0 + self._j * xv)

    def _gradient_row_range(self):
        # gradient is A x + d with A = 2 p p' + rho * diag(j^2): all entries
        # nonnegative, so each row is smallest at x = 0 and largest at x = 1
        d = -2.0 * (self.setpoint - self.uncontrollable) * self.p + self.comfort_weight * self._j * self._c0
        row_sum = 2.0 * self.p * self.p.sum() + self.comfort_weight * self._j**2
        return d, d + row_sum

    def lipschitz_l1(self) -> float:
        lo, hi = self._gradient_row_range()
        return float(np.maximum(np.abs(lo), np.abs(hi)).sum())

    def lipschitz_l2(self) -> float:
        lo, hi = self._gradient_row_range()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))


@dataclass(frozen=True)
class Seeds:
    """Named RNG streams; algorithm and environment randomness stay separate."""

    randomization: int = 11   # binary rounding draws (and the random initial iterate)
    thermal: int = 12         # temperature process noise
    setpoint: int = 13        # setpoint perturbations
    fleet: int = 14           # load parameter sampling
    override: int = 15        # manual override events

    def shifted(self, k: int, vary: str) -> "Seeds":
        """Replication k's seeds: shift the randomization stream or all of them."""
        if vary == "randomization":
            return Seeds(
                self.randomization + k, self.thermal, self.setpoint, self.fleet, self.override
            )
        if vary == "all":
            return Seeds(
                self.randomization + k,
                self.thermal + k,
                self.setpoint + k,
                self.fleet + k,
                self.override + k,
            )
        raise ValueError(f"unknown vary mode: {vary!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one fleet-tracking scenario.

    Defaults are the shipped reference scenario: 1000 loads dispatched for
    200 one-minute rounds against a 2400 kW setpoint.  `block_length` and
    `ambient_period` default to `rounds` (single block, half-sine ambient
    sweep over the run).
    """

    n: int = 1000
    rounds: int = 200
    block_length: int | None = None
    round_hours: float = 1.0 / 60.0
    lockout_minutes: float = 5.0
    setpoint_base_kw: float = 2400.0
    setpoint_noise: float = 300.0
    setpoint_noise_mode: str = "variance"
    setpoint_hold_rounds: int = 5
    ambient_base: float = 34.0
    ambient_amplitude: float = 0.25
    ambient_period: float | None = None
    thermal_noise_variance: float = 0.025
    comfort_weight: float = 500.0
    sparsity_weight: float = 250.0
    step_scale: float = 4e-4
    override_probability: float = 0.0
    override_duration: int = 1
    x1_mode: str = "random_binary"
    tracked_loads: tuple[int, ...] = (0, 1)
    relaxed_opt_tol: float = 1e-4
    relaxed_opt_max_iter: int = 50000
    replications: int = 100
    ranges: FleetRanges = field(default_factory=FleetRanges)
    seeds: Seeds = field(default_factory=Seeds)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.block_length is None:
            object.__setattr__(self, "block_length", self.rounds)
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")
        if self.ambient_period is None:
            object.__setattr__(self, "ambient_period", float(self.rounds))
        if self.ambient_period <= 0:
            raise ValueError("ambient_period must be positive")
        if self.round_hours <= 0:
            raise ValueError("round_hours must be positive")
        if self.lockout_minutes <= 0:
            raise ValueError("lockout_minutes must be positive")
        if self.setpoint_hold_rounds < 1:
            raise ValueError("setpoint_hold_rounds must be >= 1")
        if self.setpoint_noise < 0:
            raise ValueError("setpoint_noise must be nonnegative")
        if self.setpoint_noise_mode not in ("variance", "std"):
            raise ValueError("setpoint_noise_mode must be 'variance' or 'std'")
        if self.thermal_noise_variance < 0:
            raise ValueError("thermal_noise_variance must be nonnegative")
        if self.comfort_weight < 0 or self.sparsity_weight < 0:
            raise ValueError("comfort_weight and sparsity_weight must be nonnegative")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")
        if not 0.0 <= self.override_probability <= 1.0:
            raise ValueError("override_probability must be in [0, 1]")
        if self.override_duration < 1:
            raise ValueError("override_duration must be >= 1")
        if self.x1_mode not in ("random_binary", "half", "zeros", "ones"):
            raise ValueError("x1_mode must be 'random_binary', 'half', 'zeros' or 'ones'")
        for i in self.tracked_loads:
            if not 0 <= i < self.n:
                raise ValueError(f"tracked load index {i} outside [0, {self.n})")
        if self.relaxed_opt_tol <= 0:
            raise ValueError("relaxed_opt_tol must be positive")
        if self.relaxed_opt_max_iter < 1:
            raise ValueError("relaxed_opt_max_iter must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        self._validated_lockout_rounds()

    def _validated_lockout_rounds(self) -> int:
        exact = self.lockout_minutes / (60.0 * self.round_hours)
        k = round(exact)
        if k < 1 or abs(exact - k) > 1e-9 * max(1.0, abs(exact)):
            raise ValueError(
                f"lockout length K = M/(60h) = {exact:.6g} rounds is not a positive "
                "integer; choose lockout_minutes and round_hours so the lockout spans "
                "a whole number of rounds"
            )
        return int(k)

    @property
    def lockout_rounds(self) -> int:
        """Lockout length in rounds, K = M/(60h); validated integral."""
        return self._validated_lockout_rounds()


@dataclass(eq=False)
class SimulationRecord:
    """Everything observed in one simulated run.

    Arrays are indexed by round along axis 0 (row t-1 is round t).
    `consumption` includes the uncontrollable override draw;
    `decisions` holds the implemented decision (binary or relaxed).
    """

    mode: str
    setpoint: np.ndarray          # (rounds,) kW
    ambient: np.ndarray           # (rounds,) degC
    consumption: np.ndarray       # (rounds,) kW, p'decision + p_tilde'u
    uncontrollable: np.ndarray    # (rounds,) kW, p_tilde'u
    temperatures: np.ndarray      # (rounds, n) degC, after each round
    x: np.ndarray                 # (rounds, n) relaxed iterate at each round
    decisions: np.ndarray         # (rounds, n) implemented decision
    p: np.ndarray                 # (rounds, n) offered controllable draw
    p_tilde: np.ndarray           # (rounds, n) override draw
    u: np.ndarray                 # (rounds, n) override indicator
    effective: np.ndarray         # (rounds, n) realized draw per load
    losses_implemented: np.ndarray  # (rounds,) loss at the implemented decision
    losses_relaxed: np.ndarray      # (rounds,) loss at the relaxed iterate
    oracles: list[DemandTrackingLoss]
    fleet: Fleet

    @property
    def rounds(self) -> int:
        return self.setpoint.size


def simulate(cfg: ScenarioConfig, mode: str = "binary") -> SimulationRecord:
    """Run one full scenario and record every round.

    mode="binary" implements the randomized binary decision each round;
    mode="relaxed" implements the relaxed iterate directly (the
    no-randomization benchmark).  Both modes draw the fleet, setpoint and
    thermal noise from the same named seed streams, so a pair of runs
    differs only through the implemented decisions.
    """
    if mode not in ("binary", "relaxed"):
        raise ValueError("mode must be 'binary' or 'relaxed'")
    rng_fleet = np.random.default_rng(cfg.seeds.fleet)
    rng_thermal = np.random.default_rng(cfg.seeds.thermal)
    rng_setpoint = np.random.default_rng(cfg.seeds.setpoint)
    rng_random = np.random.default_rng(cfg.seeds.randomization)
    rng_override = np.random.default_rng(cfg.seeds.override)

    fleet = Fleet.from_loads(sample_fleet(cfg.n, cfg.ranges, rng_fleet))
    model = ThermalModel.from_fleet(
        fleet, cfg.round_hours, math.sqrt(cfg.thermal_noise_variance)
    )
    setpoint = generate_setpoint(
        cfg.rounds,
        cfg.setpoint_base_kw,
        cfg.setpoint_noise,
        cfg.setpoint_hold_rounds,
        rng_setpoint,
        mode=cfg.setpoint_noise_mode,
    )
    step_cfg = StepConfig(cfg.step_scale, cfg.sparsity_weight, cfg.block_length)
    k_rounds = cfg.lockout_rounds

    if cfg.x1_mode == "random_binary":
        x1 = (rng_random.random(cfg.n) < 0.5).astype(float)
    elif cfg.x1_mode == "half":
        x1 = np.full(cfg.n, 0.5)
    elif cfg.x1_mode == "zeros":
        x1 = np.zeros(cfg.n)
    else:
        x1 = np.ones(cfg.n)

    state = FleetState.initial(fleet)
    x = x1.copy()
    xhat_prev = np.zeros(cfg.n)

    rounds = cfg.rounds
    rec = SimulationRecord(
        mode=mode,
        setpoint=setpoint,
        ambient=np.zeros(rounds),
        consumption=np.zeros(rounds),
        uncontrollable=np.zeros(rounds),
        temperatures=np.zeros((rounds, cfg.n)),
        x=np.zeros((rounds, cfg.n)),
        decisions=np.zeros((rounds, cfg.n)),
        p=np.zeros((rounds, cfg.n)),
        p_tilde=np.zeros((rounds, cfg.n)),
        u=np.zeros((rounds, cfg.n)),
        effective=np.zeros((rounds, cfg.n)),
        losses_implemented=np.zeros(rounds),
        losses_relaxed=np.zeros(rounds),
        oracles=[],
        fleet=fleet,
    )

    for t in range(1, rounds + 1):
        if t > 1 and (t - 1) % cfg.block_length == 0:
            x = x1.copy()
        availability_update(
            state,
            xhat_prev,
            fleet,
            k_rounds,
            cfg.override_probability,
            cfg.override_duration,
            rng_override,
        )
        if mode == "binary":
            decision = randomize(x, rng_random)
        else:
            decision = x.copy()
        ambient = generate_ambient(t, cfg.ambient_base, cfg.ambient_amplitude, cfg.ambient_period)
        oracle = DemandTrackingLoss(
            t=t,
            setpoint=float(setpoint[t - 1]),
            p=state.p,
            p_tilde=state.p_tilde,
            u=state.u,
            theta_prev=state.theta,
            mean_theta_prev=state.mean_theta,
            ambient=ambient,
            decay=model.decay,
            r=model.r,
            theta_d=fleet.theta_d,
            comfort_weight=cfg.comfort_weight,
            l1_weight=cfg.sparsity_weight,
        )
        effective = state.p * decision + state.p_tilde * state.u
        theta_next = thermal_step(state.theta, effective, ambient, model, rng_thermal)
        grad = oracle.gradient(x)

        i = t - 1
        rec.ambient[i] = ambient
        rec.consumption[i] = float(effective.sum())
        rec.uncontrollable[i] = float(state.p_tilde @ state.u)
        rec.temperatures[i] = theta_next
        rec.x[i] = x
        rec.decisions[i] = decision
        rec.p[i] = state.p
        rec.p_tilde[i] = state.p_tilde
        rec.u[i] = state.u
        rec.effective[i] = effective
        rec.losses_implemented[i] = oracle.evaluate(decision)
        rec.losses_relaxed[i] = oracle.evaluate(x)
        rec.oracles.append(oracle)

        x = prox_update(x, grad, step_cfg)
        state.advance(theta_next, t)
        xhat_prev = decision
    return rec


@dataclass(frozen=True)
class Metrics:
    """Tracking summary for a binary/relaxed run pair (kW where applicable)."""

    rmse_binary: float
    rmse_relaxed: float
    rel_rmse_binary: float
    rel_rmse_relaxed: float
    tracking_err_binary: float
    tracking_err_relaxed: float
    mean_relative_consumption_gap: float
    mean_setpoint: float


def _rmse(setpoint: np.ndarray, consumption: np.ndarray) -> float:
    return float(np.sqrt(np.mean((setpoint - consumption) ** 2)))


def metrics(binary: SimulationRecord, relaxed: SimulationRecord) -> Metrics:
    """Tracking metrics for a pair of runs of the same scenario.

    Relative RMSE divides by the mean setpoint.  The tracking error is the
    mean of |s_t - c_t| / s_t.  The randomized-vs-relaxed consumption gap
    is mean_t |c_bin(t) - c_rel(t)| divided by the mean relaxed consumption
    (normalizing by the mean keeps single near-zero rounds from dominating).
    """
    if binary.rounds != relaxed.rounds:
        raise ValueError("runs have different lengths")
    if not np.array_equal(binary.setpoint, relaxed.setpoint):
        raise ValueError("runs saw different setpoints; compare runs of one scenario")
    s = binary.setpoint
    mean_s = float(np.mean(s))
    gap = float(np.mean(np.abs(binary.consumption - relaxed.consumption)))
    mean_rel = float(np.mean(relaxed.consumption))
    return Metrics(
        rmse_binary=_rmse(s, binary.consumption),
        rmse_relaxed=_rmse(s, relaxed.consumption),
        rel_rmse_binary=_rmse(s, binary.consumption) / mean_s,
        rel_rmse_relaxed=_rmse(s, relaxed.consumption) / mean_s,
        tracking_err_binary=float(np.mean(np.abs(s - binary.consumption) / np.abs(s))),
        tracking_err_relaxed=float(np.mean(np.abs(s - relaxed.consumption) / np.abs(s))),
        mean_relative_consumption_gap=gap / mean_rel,
        mean_setpoint=mean_s,
    )


def count_lockout_violations(record: SimulationRecord, lockout_rounds: int) -> int:
    """Count lockout violations from the observed trajectories alone.

    For every load whose realized draw went positive -> zero between rounds
    k-1 and k, the following `lockout_rounds` rounds must offer no
    controllable draw and no override (p = 0 and u = 0).  Recomputed from
    the recorded p/u/effective arrays, independently of the simulator's
    internal counters.
    """
    on = record.effective > 0.0
    rounds = record.rounds
    violations = 0
    for i in range(rounds - 1):
        cols = np.flatnonzero(on[i] & ~on[i + 1])
        if cols.size == 0:
            continue
        stop = min(i + 2 + lockout_rounds, rounds)
        for j in cols:
            if np.any(record.p[i + 2 : stop, j] != 0.0) or np.any(
                record.u[i + 2 : stop, j] != 0.0
            ):
                violations += 1
    return violations
