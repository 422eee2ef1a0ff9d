"""Acceptance gate: one test per shipped guarantee, with stated tolerances.

Each test prints `criterion N (name): PASS/FAIL detail` before asserting, so
a full run reads as a checklist.  Runtime limits are asserted alongside the
numerical tolerances.
"""

import math
import time
from pathlib import Path

import numpy as np

from bogd.core import RestartSchedule, StepConfig, prox_update, randomize, run_with_restarts
from bogd.oracles import LinearLoss
from bogd.regret import (
    BoundInputs,
    binary_round_optimum,
    relaxed_round_optimum,
    restart_regret_bound,
)
from bogd.synthetic import SyntheticConfig, oracle_stream, study
from bogd.tcl import (
    DemandTrackingLoss,
    ScenarioConfig,
    count_lockout_violations,
    metrics,
    simulate,
)
from bogd.experiments import run_scenario

REPO = Path(__file__).resolve().parent.parent
DESK = REPO / "configs" / "desk.toml"


def _report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"criterion {num} ({name}): {status} {detail}".rstrip())
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def prox_objective(v, x, grad, eta, lam):
    return (
        eta * (grad @ v)
        + 0.5 * np.sum((v - x) ** 2)
        + eta * lam * np.abs(v).sum()
    )


def test_criterion_1_prox_exactness():
    """Closed-form prox step matches a fine grid search on 1000 instances."""
    rng = np.random.default_rng(20_240_001)
    grid = np.linspace(0.0, 1.0, 10_001)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        x = rng.random(n)
        grad = rng.normal(0.0, 3.0, n)
        cfg = StepConfig(
            float(rng.uniform(0.03, 2.0)),
            float(rng.uniform(0.0, 1.0)),
            int(rng.integers(1, 401)),
        )
        out = prox_update(x, grad, cfg)
        got = prox_objective(out, x, grad, cfg.eta, cfg.l1_weight)
        # the objective separates per coordinate, so grid-search each one
        per_coord = (
            cfg.eta * grad[:, None] * grid[None, :]
            + 0.5 * (grid[None, :] - x[:, None]) ** 2
            + cfg.eta * cfg.l1_weight * grid[None, :]
        )
        best_grid = float(per_coord.min(axis=1).sum())
        worst = max(worst, abs(got - best_grid))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10.0
    _report(1, "prox exactness", ok, f"max objective gap {worst:.3g}, {elapsed:.1f}s")


def random_tracking_loss(rng):
    n = int(rng.integers(1, 11))
    decay = np.exp(-rng.uniform(0.003, 0.006, n))
    p = np.where(rng.random(n) < 0.7, rng.uniform(4.0, 7.2, n), 0.0)
    u = (rng.random(n) < 0.25).astype(float)
    p_tilde = np.where(u > 0, rng.uniform(4.0, 7.2, n), 0.0)
    return DemandTrackingLoss(
        t=int(rng.integers(1, 201)),
        setpoint=float(rng.uniform(5.0, 60.0)),
        p=p,
        p_tilde=p_tilde,
        u=u,
        theta_prev=rng.uniform(19.0, 25.0, n),
        mean_theta_prev=rng.uniform(19.0, 25.0, n),
        ambient=float(rng.uniform(30.0, 36.0)),
        decay=decay,
        r=rng.uniform(1.5, 2.5, n),
        theta_d=rng.uniform(20.0, 24.0, n),
        comfort_weight=float(rng.uniform(100.0, 900.0)),
        l1_weight=float(rng.uniform(0.0, 400.0)),
    )


def test_criterion_2_gradient_check():
    """Oracle gradients agree with central finite differences of the loss."""
    rng = np.random.default_rng(20_240_002)
    start = time.perf_counter()
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        loss = random_tracking_loss(rng)
        n = loss.dimension
        x = rng.uniform(0.05, 0.95, n)
        fd = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fd[i] = (loss.evaluate(x + e) - loss.evaluate(x - e)) / (2 * h)
        # evaluate includes the l1 term, whose slope at positive x is l1_weight
        full_grad = loss.gradient(x) + loss.l1_weight
        err = float(np.linalg.norm(fd - full_grad)) / max(1.0, float(np.linalg.norm(full_grad)))
        worst = max(worst, err)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 10.0
    _report(2, "gradient check", ok, f"max relative error {worst:.3g}, {elapsed:.1f}s")


def test_criterion_3_rounding_gap_bound():
    """Mean |f(decision) - f(iterate)| for linear losses stays under L2 sqrt(n)/2."""
    rng = np.random.default_rng(20_240_003)
    start = time.perf_counter()
    draws = 100_000
    details = []
    ok = True
    for n in (1, 4, 16):
        slope = rng.normal(0.0, 2.0, n)
        l2 = float(np.linalg.norm(slope))
        x_hat = (rng.random((draws, n)) < 0.5).astype(float)
        gaps = np.abs((x_hat - 0.5) @ slope)
        mean_gap = float(gaps.mean())
        slack = 4.0 * float(gaps.std(ddof=1)) / math.sqrt(draws)
        bound = l2 * math.sqrt(n) / 2.0
        ok = ok and mean_gap <= bound + slack
        details.append(f"n={n}: {mean_gap:.4f} <= {bound:.4f}+{slack:.1g}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 30.0
    _report(3, "rounding gap bound", ok, "; ".join(details) + f", {elapsed:.1f}s")


def test_criterion_4_regret_decomposition():
    """Per-realization regret splits into relaxed regret plus rounding gaps."""
    cfg = SyntheticConfig()  # n=8, 400 rounds: within the checked envelope
    oracles = oracle_stream(cfg)
    tau = cfg.rounds
    start = time.perf_counter()
    best_binary = np.array([binary_round_optimum(o)[1] for o in oracles])
    best_relaxed = np.zeros(tau)
    x_warm = None
    for t, oracle in enumerate(oracles):
        x_star, f_star = relaxed_round_optimum(oracle, tol=1e-8, x0=x_warm)
        best_relaxed[t] = f_star
        x_warm = x_star
    schedule = RestartSchedule(cfg.block_length, tau)
    step_cfg = StepConfig(cfg.step_scale, cfg.l1_weight, cfg.block_length)
    x1 = np.full(cfg.n, 0.5)
    worst_violation = -math.inf
    for k in range(3):
        rng = np.random.default_rng(cfg.seed + k)
        rounds = run_with_restarts(oracles, schedule, step_cfg, rng, x1=x1)
        loss_binary = np.array([r.loss for r in rounds])
        loss_relaxed = np.array(
            [oracles[t].evaluate(rounds[t].x) for t in range(tau)]
        )
        regret = float(np.sum(loss_binary - best_binary))
        regret_relaxed = float(np.sum(loss_relaxed - best_relaxed))
        gap = float(np.sum(np.abs(loss_binary - loss_relaxed)))
        worst_violation = max(
            worst_violation, regret - (regret_relaxed + gap + 1e-9 * tau)
        )
    elapsed = time.perf_counter() - start
    ok = worst_violation <= 0.0 and elapsed < 120.0
    _report(
        4, "regret decomposition", ok,
        f"max violation {worst_violation:.3g}, {elapsed:.1f}s",
    )


def test_criterion_5_bound_dominance_and_sublinearity():
    """Mean synthetic regret stays under the restart bound and grows sublinearly."""
    start = time.perf_counter()
    s = study(SyntheticConfig())  # 100 replications by default
    defined = np.isfinite(s.bound_restart)
    dominance = bool(np.all(s.mean_regret[defined] <= s.bound_restart[defined]))
    # bound must actually be defined from the first full block onward
    coverage = bool(np.all(defined[s.config.block_length - 1 :]))
    per_round_final = s.mean_regret[-1] / s.config.rounds
    per_round_quarter = s.mean_regret[s.config.rounds // 4 - 1] / (s.config.rounds // 4)
    sublinear = per_round_final < 0.5 * per_round_quarter
    elapsed = time.perf_counter() - start
    ok = dominance and coverage and sublinear and elapsed < 300.0
    _report(
        5, "bound dominance", ok,
        f"min slack {float(np.min(s.bound_restart[defined] - s.mean_regret[defined])):.1f}, "
        f"avg regret/round {per_round_final:.3f} vs half-quarter "
        f"{0.5 * per_round_quarter:.3f}, {elapsed:.1f}s",
    )


def test_criterion_6_fleet_reproduction():
    """Full-scale fleet scenario: small rounding gap, matched RMSE, no violations."""
    start = time.perf_counter()
    cfg = ScenarioConfig()  # n=1000, 200 rounds, variance reading of the noise
    binary = simulate(cfg, mode="binary")
    relaxed = simulate(cfg, mode="relaxed")
    m = metrics(binary, relaxed)
    k = cfg.lockout_rounds
    violations = count_lockout_violations(binary, k) + count_lockout_violations(relaxed, k)
    gap_ok = m.mean_relative_consumption_gap <= 0.05
    rmse_ok = abs(m.rel_rmse_binary - m.rel_rmse_relaxed) <= 0.015
    lockout_ok = violations == 0
    elapsed = time.perf_counter() - start
    ok = gap_ok and rmse_ok and lockout_ok and elapsed < 300.0
    _report(
        6, "fleet reproduction", ok,
        f"consumption gap {100 * m.mean_relative_consumption_gap:.2f}%, "
        f"rel RMSE {100 * m.rel_rmse_binary:.2f}% vs {100 * m.rel_rmse_relaxed:.2f}%, "
        f"{violations} lockout violations, {elapsed:.1f}s",
    )


def test_criterion_7_round_latency():
    """One full learner round at n=1000 runs in at most 10 ms median."""
    cfg = ScenarioConfig(rounds=20)
    rec = simulate(cfg, mode="binary")
    oracle = rec.oracles[-1]
    step_cfg = StepConfig(cfg.step_scale, cfg.sparsity_weight, cfg.block_length)
    rng = np.random.default_rng(0)
    x = np.full(cfg.n, 0.5)
    times = []
    for _ in range(201):
        t0 = time.perf_counter()
        grad = oracle.gradient(x)
        x = prox_update(x, grad, step_cfg)
        randomize(x, rng)
        times.append(time.perf_counter() - t0)
    median_ms = 1000.0 * float(np.median(times))
    ok = median_ms <= 10.0
    _report(7, "round latency", ok, f"median {median_ms:.3f} ms over 201 rounds")


def test_criterion_8_restart_exponent_arithmetic():
    """Blocks of 100 over 10^4 rounds give the exponent 0.75 exactly."""
    direct = RestartSchedule(100, 10_000).epsilon
    _, eps = restart_regret_bound(
        BoundInputs(
            n=1, step_scale=1.0, grad_l2=1.0, rounds=10_000, grad_l1=10.0,
            block_length=100,
        )
    )
    ok = direct == 0.75 and eps == 0.75
    _report(8, "restart exponent arithmetic", ok, f"epsilon = {direct!r} / {eps!r}")


def test_criterion_9_determinism(tmp_path):
    """The run command is byte-identical across reruns of one config."""
    a = run_scenario(DESK, tmp_path / "a")
    b = run_scenario(DESK, tmp_path / "b")
    names = ["regret.csv", "timeseries.csv", "summary.csv", "manifest"]
    same = {name: (a / name).read_bytes() == (b / name).read_bytes() for name in names}
    ok = all(same.values())
    _report(9, "determinism", ok, ", ".join(f"{k}={'ok' if v else 'DIFF'}" for k, v in same.items()))


def test_rounding_gap_for_fleet_losses_spot_check():
    """Companion to criterion 3: the gap bound is not specific to toy slopes."""
    rng = np.random.default_rng(20_240_009)
    slope = rng.uniform(4.0, 7.2, 8)  # rated-power-like magnitudes
    oracle = LinearLoss(slope)
    x = np.full(8, 0.5)
    draws = 50_000
    x_hat = (rng.random((draws, 8)) < 0.5).astype(float)
    gaps = np.abs((x_hat - x) @ slope)
    bound = oracle.lipschitz_l2() * math.sqrt(8) / 2.0
    slack = 4.0 * float(gaps.std(ddof=1)) / math.sqrt(draws)
    assert float(gaps.mean()) <= bound + slack
