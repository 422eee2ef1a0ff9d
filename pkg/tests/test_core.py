"""Learner-core tests: prox step, randomizer, step/restart configs, runs."""

import math

import numpy as np
import pytest

from bogd.core import (
    RestartSchedule,
    StepConfig,
    bogd_step,
    check_binary,
    check_relaxed,
    prox_update,
    randomize,
    run,
    run_with_restarts,
)
from bogd.oracles import LinearLoss, QuadraticLoss


def prox_objective(v, x, grad, eta, lam):
    """The proximal-step objective the closed form is supposed to minimize."""
    v = np.asarray(v, dtype=float)
    return float(
        eta * (np.asarray(grad) @ v)
        + 0.5 * np.sum((v - np.asarray(x)) ** 2)
        + eta * lam * np.abs(v).sum()
    )


def grid_prox_minimum(x, grad, eta, lam, resolution=1e-4):
    """Independent numeric minimizer: per-coordinate grid search.

    The objective separates across coordinates, so the box minimum is the
    sum of per-coordinate grid minima.
    """
    values = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
    total = 0.0
    argmin = np.zeros(len(x))
    for i in range(len(x)):
        obj = eta * grad[i] * values + 0.5 * (values - x[i]) ** 2 + eta * lam * values
        k = int(np.argmin(obj))
        total += float(obj[k])
        argmin[i] = values[k]
    return argmin, total


class TestStepConfig:
    def test_eta_derivation(self):
        cfg = StepConfig(step_scale=0.5, l1_weight=0.0, horizon=100)
        assert cfg.eta == 0.5 / math.sqrt(100)

    def test_eta_recomputed_not_stored(self):
        cfg = StepConfig(2.0, 0.0, 4)
        assert cfg.eta == 1.0
        assert StepConfig(2.0, 0.0, 16).eta == 0.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(step_scale=0.0),
            dict(step_scale=-1.0),
            dict(step_scale=1.0, l1_weight=-0.1),
            dict(step_scale=1.0, horizon=0),
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            StepConfig(**kwargs)


class TestRestartSchedule:
    def test_block_count_is_ceiling(self):
        assert RestartSchedule(5, 10).num_blocks == 2
        assert RestartSchedule(5, 7).num_blocks == 2
        assert RestartSchedule(100, 100).num_blocks == 1

    def test_epsilon_single_block_is_half(self):
        # tau = T collapses to ln(sqrt(T)) / ln(T) and lands on 0.5 exactly
        assert RestartSchedule(100, 100).epsilon == 0.5
        assert RestartSchedule(7, 7).epsilon == 0.5

    def test_epsilon_three_quarters_exact(self):
        assert RestartSchedule(100, 10**4).epsilon == 0.75

    def test_epsilon_generic_value(self):
        eps = RestartSchedule(100, 400).epsilon
        assert math.isclose(eps, math.log(40) / math.log(400), rel_tol=1e-14)

    def test_rejects_horizon_one(self):
        with pytest.raises(ValueError):
            RestartSchedule(1, 1).epsilon

    def test_rejects_non_sublinear_exponent(self):
        # N * sqrt(T) = 2 with tau = 2 gives epsilon = 1
        with pytest.raises(ValueError):
            RestartSchedule(1, 2).epsilon

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            RestartSchedule(0, 10)
        with pytest.raises(ValueError):
            RestartSchedule(5, 0)


class TestProxUpdate:
    def test_zero_gradient_fixed_point(self):
        for horizon in (1, 7, 100):
            cfg = StepConfig(1.3, 0.0, horizon)
            out = prox_update([0.5], [0.0], cfg)
            assert out[0] == 0.5

    def test_interior_step(self):
        # eta = 0.1, lambda = 0: 0.5 - 0.1*1.0 = 0.4
        out = prox_update([0.5], [1.0], StepConfig(0.1, 0.0, 1))
        assert math.isclose(out[0], 0.4, abs_tol=1e-12)
        _, grid_val = grid_prox_minimum([0.5], [1.0], 0.1, 0.0)
        assert abs(prox_objective(out, [0.5], [1.0], 0.1, 0.0) - grid_val) <= 1e-8

    def test_l1_shift_clips_to_zero(self):
        # 0.05 - 0.1*(1.0 + 0.5) = -0.1 clips to 0
        out = prox_update([0.05], [1.0], StepConfig(0.1, 0.5, 1))
        assert out[0] == 0.0
        _, grid_val = grid_prox_minimum([0.05], [1.0], 0.1, 0.5)
        assert abs(prox_objective(out, [0.05], [1.0], 0.1, 0.5) - grid_val) <= 1e-8

    def test_upper_clip(self):
        out = prox_update([0.9], [-2.0], StepConfig(1.0, 0.0, 1))
        assert out[0] == 1.0

    def test_matches_grid_search_on_random_instances(self):
        rng = np.random.default_rng(71)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            x = rng.random(n)
            grad = rng.normal(0.0, 3.0, n)
            cfg = StepConfig(
                float(rng.uniform(0.3, 2.0)), float(rng.uniform(0.0, 1.0)),
                int(rng.integers(1, 101)),
            )
            out = prox_update(x, grad, cfg)
            assert np.all((out >= 0.0) & (out <= 1.0))
            _, grid_val = grid_prox_minimum(x, grad, cfg.eta, cfg.l1_weight)
            got = prox_objective(out, x, grad, cfg.eta, cfg.l1_weight)
            assert got <= grid_val + 1e-6

    def test_coordinate_separability(self):
        rng = np.random.default_rng(5)
        cfg = StepConfig(0.7, 0.2, 9)
        xa, xb = rng.random(3), rng.random(4)
        ga, gb = rng.normal(size=3), rng.normal(size=4)
        joint = prox_update(np.concatenate([xa, xb]), np.concatenate([ga, gb]), cfg)
        split = np.concatenate([prox_update(xa, ga, cfg), prox_update(xb, gb, cfg)])
        assert np.array_equal(joint, split)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            prox_update([0.5, 0.5], [1.0], StepConfig(1.0))

    def test_non_finite_gradient_rejected(self):
        with pytest.raises(ValueError):
            prox_update([0.5], [float("nan")], StepConfig(1.0))
        with pytest.raises(ValueError):
            prox_update([0.5], [float("inf")], StepConfig(1.0))


class TestRandomize:
    def test_degenerate_zeros_and_ones(self):
        rng = np.random.default_rng(0)
        assert np.array_equal(randomize([0.0, 0.0, 0.0], rng), [0.0, 0.0, 0.0])
        assert np.array_equal(randomize([1.0, 1.0], rng), [1.0, 1.0])

    def test_outputs_are_binary(self):
        rng = np.random.default_rng(3)
        out = randomize(rng.random(64), rng)
        assert set(np.unique(out)).issubset({0.0, 1.0})

    def test_unbiased_within_four_sigma(self):
        draws = 100_000
        rng = np.random.default_rng(123)
        hits = sum(float(randomize([0.5], rng)[0]) for _ in range(draws))
        mean = hits / draws
        slack = 4.0 * math.sqrt(0.25 / draws)
        assert abs(mean - 0.5) <= slack

    def test_deterministic_given_seed(self):
        x = np.linspace(0.1, 0.9, 17)
        a = randomize(x, np.random.default_rng(42))
        b = randomize(x, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_rejects_out_of_box(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            randomize([1.5], rng)
        with pytest.raises(ValueError):
            randomize([-0.1], rng)


class TestBogdStep:
    def test_zero_gradient_keeps_iterate(self):
        oracle = LinearLoss([0.0, 0.0])
        cfg = StepConfig(1.0, 0.0, 1)
        x_next, x_hat = bogd_step([0.0, 1.0], oracle, cfg, np.random.default_rng(0))
        assert np.array_equal(x_next, [0.0, 1.0])
        assert np.array_equal(x_hat, [0.0, 1.0])

    def test_stationary_point_of_relaxed_problem(self):
        oracle = QuadraticLoss.separable([1.0], [0.3])  # (x - 0.3)^2
        cfg = StepConfig(0.5, 0.0, 1)
        x_next, _ = bogd_step([0.3], oracle, cfg, np.random.default_rng(1))
        assert math.isclose(x_next[0], 0.3, abs_tol=1e-12)

    def test_linear_loss_closed_form_and_frequency(self):
        """f(x) = x with eta 0.2 moves 0.5 to 0.3; rounding hits 1 w.p. 0.3."""
        oracle = LinearLoss([1.0])
        cfg = StepConfig(0.2, 0.0, 1)
        rng = np.random.default_rng(2024)
        draws = 100_000
        ones = 0
        for _ in range(draws):
            x_next, x_hat = bogd_step([0.5], oracle, cfg, rng)
            assert math.isclose(x_next[0], 0.3, abs_tol=1e-12)
            ones += int(x_hat[0])
        slack = 4.0 * math.sqrt(0.3 * 0.7 / draws)
        assert abs(ones / draws - 0.3) <= slack


def constant_stream(slopes, rounds):
    return [LinearLoss(slopes) for _ in range(rounds)]


class TestRuns:
    def test_restart_resets_after_block(self):
        stream = constant_stream([1.0], 10)
        schedule = RestartSchedule(5, 10)
        cfg = StepConfig(0.5, 0.0, 5)
        x1 = np.array([0.5])
        rounds = run_with_restarts(stream, schedule, cfg, np.random.default_rng(0), x1=x1)
        assert len(rounds) == 10
        assert [r.t for r in rounds] == list(range(1, 11))
        eta = cfg.eta
        # within block 1 the iterate walks down by eta per round, clipped at 0
        for t in range(5):
            assert math.isclose(rounds[t].x[0], max(0.0, 0.5 - eta * t), abs_tol=1e-12)
        # block 2 starts from x1 again
        assert rounds[5].x[0] == 0.5
        assert math.isclose(rounds[6].x[0], 0.5 - eta, abs_tol=1e-12)

    def test_truncated_final_block(self):
        stream = constant_stream([1.0], 7)
        schedule = RestartSchedule(5, 7)
        cfg = StepConfig(0.5, 0.0, 5)
        rounds = run_with_restarts(stream, schedule, cfg, np.random.default_rng(0))
        assert len(rounds) == 7
        assert rounds[5].x[0] == 0.5  # reset still happens at round 6

    def test_single_block_equals_plain_run(self):
        rng_a = np.random.default_rng(7)
        rng_b = np.random.default_rng(7)
        stream = [
            QuadraticLoss.separable([1.0, 2.0], [0.2 + 0.001 * t, 0.8]) for t in range(100)
        ]
        cfg = StepConfig(0.5, 0.1, 100)
        with_restarts = run_with_restarts(stream, RestartSchedule(100, 100), cfg, rng_a)
        plain = run(stream, cfg, rng_b)
        for a, b in zip(with_restarts, plain):
            assert a.t == b.t
            assert np.array_equal(a.x, b.x)
            assert np.array_equal(a.x_binary, b.x_binary)
            assert a.loss == b.loss

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError):
            run([], StepConfig(1.0), np.random.default_rng(0))
        with pytest.raises(ValueError):
            run_with_restarts(
                [], RestartSchedule(5, 5), StepConfig(1.0, 0.0, 5), np.random.default_rng(0)
            )

    def test_horizon_must_match_block_length(self):
        stream = constant_stream([1.0], 10)
        with pytest.raises(ValueError):
            run_with_restarts(
                stream, RestartSchedule(5, 10), StepConfig(1.0, 0.0, 10),
                np.random.default_rng(0),
            )

    def test_short_stream_rejected(self):
        stream = constant_stream([1.0], 4)
        with pytest.raises(ValueError):
            run_with_restarts(
                stream, RestartSchedule(5, 10), StepConfig(1.0, 0.0, 5),
                np.random.default_rng(0),
            )

    def test_determinism_bitwise(self):
        stream = [QuadraticLoss.separable([1.0] * 3, [0.4, 0.6, 0.1]) for _ in range(20)]
        cfg = StepConfig(0.8, 0.05, 20)
        a = run(stream, cfg, np.random.default_rng(99))
        b = run(stream, cfg, np.random.default_rng(99))
        for ra, rb in zip(a, b):
            assert np.array_equal(ra.x, rb.x)
            assert np.array_equal(ra.x_binary, rb.x_binary)
            assert ra.loss == rb.loss

    def test_feasibility_every_round(self):
        rng = np.random.default_rng(11)
        stream = [
            QuadraticLoss.separable(rng.uniform(0.5, 2.0, 4), rng.uniform(-1, 2, 4))
            for _ in range(60)
        ]
        cfg = StepConfig(0.6, 0.2, 15)
        rounds = run_with_restarts(stream, RestartSchedule(15, 60), cfg, rng)
        for r in rounds:
            assert np.all((r.x >= 0.0) & (r.x <= 1.0))
            assert set(np.unique(r.x_binary)).issubset({0.0, 1.0})

    def test_loss_logged_at_binary_decision(self):
        oracle = LinearLoss([2.0], offset=1.0)
        rounds = run([oracle], StepConfig(0.1), np.random.default_rng(0), x1=[1.0])
        assert rounds[0].loss == oracle.evaluate(rounds[0].x_binary)


class TestValidators:
    def test_check_relaxed(self):
        check_relaxed(np.array([0.0, 0.5, 1.0]))
        with pytest.raises(ValueError):
            check_relaxed(np.array([0.0, 1.2]))
        with pytest.raises(ValueError):
            check_relaxed(np.array([[0.1], [0.2]]))

    def test_check_binary(self):
        check_binary(np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            check_binary(np.array([0.5]))
