import random
import time

import pytest

from wifi_occupancy.counters import CounterSnapshot, IncompatibleGridError, ThresholdGrid
from wifi_occupancy.model import (
    EmptyBufferError,
    ModelParams,
    SearchGrid,
    TrainingBuffer,
    TrainingSample,
    default_params,
    estimate,
    objective,
    train,
)

GRID = ThresholdGrid.default()
M = len(GRID)


def make_snapshot(n_valid, n_random, start=0.0, grid=GRID):
    return CounterSnapshot(
        thresholds=grid.thresholds,
        n_valid=tuple(n_valid),
        n_random=tuple(n_random),
        window_start=start,
        window_duration_s=300.0,
    )


def random_profile(rng, max_count=30, step=1):
    """Random non-increasing cumulative count vector."""
    counts = sorted(
        (rng.randrange(0, max_count + 1, step) for _ in range(M)), reverse=True
    )
    return tuple(counts)


def random_sample(rng, max_truth=60, step=1):
    return TrainingSample(
        snapshot=make_snapshot(random_profile(rng, step=step), random_profile(rng, step=step)),
        truth=rng.randrange(max_truth + 1),
    )


def oracle_sweep(samples, search=None):
    """Second, independently written exhaustive search over the full grid.

    Plain nested loops with direct residual accumulation; returns
    (min_mse, (theta_index, alpha, beta)) under the same lexicographic
    tie-break.
    """
    search = search or SearchGrid.default()
    best = None
    best_point = None
    truths = [s.truth for s in samples]
    n = len(samples)
    for k in range(M):
        vs = [s.snapshot.n_valid[k] for s in samples]
        rs = [s.snapshot.n_random[k] for s in samples]
        for a in search.alpha_values:
            for b in search.beta_values:
                total = 0.0
                for v, r, t in zip(vs, rs, truths):
                    d = a * v + b * r - t
                    total += d * d
                mse = total / n
                if best is None or mse < best:
                    best = mse
                    best_point = (k, a, b)
    return best, best_point


def fitted_params(alpha, beta, theta_index):
    return ModelParams(alpha, beta, theta_index, GRID.thresholds[theta_index])


class TestEstimate:
    def test_beta_term_vanishes(self):
        snap = make_snapshot([7] * M, [0] * M)
        params = fitted_params(1.0, 0.1, 10)
        assert estimate(params, snap) == 7.0

    def test_table_style_arithmetic(self):
        snap = make_snapshot([20] * M, [10] * M)
        params = fitted_params(0.54, 0.05, 5)
        assert estimate(params, snap) == pytest.approx(11.3)

    def test_all_zero_snapshot(self):
        snap = make_snapshot([0] * M, [0] * M)
        assert estimate(fitted_params(2.0, 2.0, 0), snap) == 0.0

    def test_grid_mismatch_rejected(self):
        snap = make_snapshot([1] * M, [0] * M)
        bad = ModelParams(1.0, 0.1, 3, theta_dbm=-999)
        with pytest.raises(IncompatibleGridError):
            estimate(bad, snap)

    def test_linearity(self):
        rng = random.Random(3)
        v, r = random_profile(rng), random_profile(rng)
        snap = make_snapshot(v, r)
        double = make_snapshot([2 * x for x in v], [2 * x for x in r])
        params = fitted_params(0.7, 0.3, 15)
        assert estimate(params, double) == pytest.approx(2 * estimate(params, snap))


class TestObjective:
    def test_exact_fit_is_zero(self):
        snap = make_snapshot([10] * M, [0] * M)
        params = fitted_params(0.5, 0.1, 0)
        assert objective(params, [TrainingSample(snap, 5)]) == 0.0

    def test_single_residual(self):
        snap = make_snapshot([10] * M, [0] * M)
        params = fitted_params(0.5, 0.1, 0)
        assert objective(params, [TrainingSample(snap, 7)]) == pytest.approx(4.0)

    def test_two_residuals(self):
        snap_a = make_snapshot([10] * M, [0] * M)  # estimate 5, truth 4 -> +1
        snap_b = make_snapshot([4] * M, [0] * M)  # estimate 2, truth 5 -> -3
        params = fitted_params(0.5, 0.1, 0)
        buf = [TrainingSample(snap_a, 4), TrainingSample(snap_b, 5)]
        assert objective(params, buf) == pytest.approx(5.0)

    def test_empty_buffer(self):
        with pytest.raises(EmptyBufferError):
            objective(fitted_params(1.0, 0.1, 0), [])


class TestBuffer:
    def test_push_and_len(self):
        buf = TrainingBuffer()
        buf.push(TrainingSample(make_snapshot([0] * M, [0] * M), 0))
        assert len(buf) == 1

    def test_fifo_eviction_at_capacity(self):
        buf = TrainingBuffer(capacity=40)
        for i in range(41):
            buf.push(TrainingSample(make_snapshot([0] * M, [0] * M, start=float(i)), i))
        assert len(buf) == 40
        truths = [s.truth for s in buf]
        assert truths == list(range(1, 41))

    def test_insertion_order_preserved(self):
        buf = TrainingBuffer(capacity=10)
        for i in range(5):
            buf.push(TrainingSample(make_snapshot([0] * M, [0] * M), i))
        assert [s.truth for s in buf] == list(range(5))


class TestTrain:
    def test_single_degenerate_sample(self):
        # n_valid 10 everywhere, truth 5: alpha 0.5 fits exactly; beta and
        # theta are inert and tie-break to the grid minimum / first index.
        snap = make_snapshot([10] * M, [0] * M)
        params = train([TrainingSample(snap, 5)])
        assert params.alpha == 0.5
        assert params.beta == 0.1
        assert params.theta_index == 0
        oracle_min, oracle_point = oracle_sweep([TrainingSample(snap, 5)])
        assert objective(params, [TrainingSample(snap, 5)]) == pytest.approx(oracle_min)
        assert (params.theta_index, params.alpha, params.beta) == oracle_point

    def test_exact_recovery_noiseless(self):
        rng = random.Random(21)
        theta_index = 17
        truth_params = fitted_params(1.3, 0.4, theta_index)
        samples = []
        for _ in range(25):
            snap = make_snapshot(
                random_profile(rng, step=10), random_profile(rng, step=10)
            )
            truth = truth_params.alpha * snap.n_valid[theta_index]
            truth += truth_params.beta * snap.n_random[theta_index]
            assert truth == int(truth)
            samples.append(TrainingSample(snap, int(truth)))
        learned = train(samples)
        assert (learned.alpha, learned.beta, learned.theta_index) == (1.3, 0.4, 17)
        assert objective(learned, samples) == pytest.approx(0.0, abs=1e-18)

    def test_matches_oracle_on_random_buffers(self):
        rng = random.Random(22)
        for _ in range(8):
            samples = [random_sample(rng) for _ in range(rng.randrange(1, 41))]
            params = train(samples)
            value = objective(params, samples)
            oracle_min, _ = oracle_sweep(samples)
            assert value <= oracle_min * (1 + 1e-12) + 1e-15

    def test_deterministic(self):
        rng = random.Random(23)
        samples = [random_sample(rng) for _ in range(10)]
        assert train(samples) == train(samples)

    def test_empty_buffer(self):
        with pytest.raises(EmptyBufferError):
            train([])

    def test_search_grid_size(self):
        search = SearchGrid.default()
        assert len(search.alpha_values) == 20
        assert len(search.beta_values) == 20
        assert len(search.alpha_values) * len(search.beta_values) * M == 16000

    def test_full_buffer_under_250ms(self):
        rng = random.Random(24)
        samples = [random_sample(rng) for _ in range(40)]
        train(samples)  # warm-up (numpy allocator, code paths)
        start = time.perf_counter()
        train(samples)
        elapsed = time.perf_counter() - start
        assert elapsed < 0.25, f"train took {elapsed * 1000:.1f} ms"


def test_default_params_cold_start():
    params = default_params(GRID)
    assert params.alpha == 1.0
    assert params.beta == 0.1
    assert params.theta_dbm == -80
