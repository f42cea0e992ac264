"""Linear occupancy model and its brute-force supervised calibration.

The estimate is alpha * N_valid[theta] + beta * N_random[theta]; the
(alpha, beta, theta) triple is fit by exhaustively sweeping a discrete
grid and minimizing mean squared error against the FIFO training buffer.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .counters import CounterSnapshot, IncompatibleGridError, ThresholdGrid


class EmptyBufferError(ValueError):
    """Training requested on an empty buffer."""


DEFAULT_BUFFER_CAPACITY = 40


@dataclass(frozen=True)
class ModelParams:
    """Calibrated correction factors and RSS threshold."""

    alpha: float
    beta: float
    theta_index: int
    theta_dbm: int
    trained_at: Optional[float] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "theta_dbm": self.theta_dbm,
            "trained_at": self.trained_at,
        }


def default_params(grid: ThresholdGrid) -> ModelParams:
    """Cold-start parameters: one device per person, near-inert beta, -80 dBm."""
    idx = grid.index_of_nearest(-80.0)
    return ModelParams(alpha=1.0, beta=0.1, theta_index=idx, theta_dbm=grid.thresholds[idx])


@dataclass(frozen=True)
class TrainingSample:
    snapshot: CounterSnapshot
    truth: int

    def __post_init__(self):
        if self.truth < 0:
            raise ValueError("ground truth occupancy must be >= 0")


class TrainingBuffer:
    """Fixed-capacity FIFO of (snapshot, ground truth) pairs."""

    def __init__(self, capacity: int = DEFAULT_BUFFER_CAPACITY):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._samples: deque[TrainingSample] = deque(maxlen=capacity)

    def push(self, sample: TrainingSample) -> None:
        self._samples.append(sample)

    def __len__(self) -> int:
        return len(self._samples)

    def __iter__(self):
        return iter(self._samples)

    @property
    def samples(self) -> list[TrainingSample]:
        return list(self._samples)


@dataclass(frozen=True)
class SearchGrid:
    """Discrete (alpha, beta, theta) search space for calibration."""

    alpha_values: tuple[float, ...]
    beta_values: tuple[float, ...]

    @classmethod
    def default(cls) -> "SearchGrid":
        values = tuple(round(0.1 * i, 1) for i in range(1, 21))
        return cls(values, values)


def estimate(params: ModelParams, snapshot: CounterSnapshot) -> float:
    """Apply the linear model to one counter snapshot."""
    i = params.theta_index
    if i >= len(snapshot.thresholds) or snapshot.thresholds[i] != params.theta_dbm:
        raise IncompatibleGridError(
            f"params theta {params.theta_dbm} dBm at index {params.theta_index} "
            f"does not match the snapshot's threshold grid"
        )
    return params.alpha * snapshot.n_valid[i] + params.beta * snapshot.n_random[i]


def objective(params: ModelParams, buffer: Iterable[TrainingSample]) -> float:
    """Mean squared error of the model over the buffer."""
    samples = list(buffer)
    if not samples:
        raise EmptyBufferError("cannot evaluate objective on an empty buffer")
    total = 0.0
    for s in samples:
        residual = estimate(params, s.snapshot) - s.truth
        total += residual * residual
    return total / len(samples)


def train(buffer: Iterable[TrainingSample], search: Optional[SearchGrid] = None) -> ModelParams:
    """Exhaustive sweep over the search grid, minimizing mean squared error.

    Ties are broken deterministically: smallest theta index, then smallest
    alpha, then smallest beta.
    """
    samples = list(buffer)
    if not samples:
        raise EmptyBufferError("cannot train on an empty buffer")
    if search is None:
        search = SearchGrid.default()

    thresholds = samples[0].snapshot.thresholds
    for s in samples:
        if s.snapshot.thresholds != thresholds:
            raise IncompatibleGridError("training samples use different threshold grids")

    n_valid = np.array([s.snapshot.n_valid for s in samples], dtype=np.float64)
    n_random = np.array([s.snapshot.n_random for s in samples], dtype=np.float64)
    truth = np.array([s.truth for s in samples], dtype=np.float64)
    alphas = np.array(search.alpha_values)
    betas = np.array(search.beta_values)

    m = len(thresholds)
    mse = np.empty((m, len(alphas), len(betas)))
    for k in range(m):
        pred = (
            alphas[:, None, None] * n_valid[:, k][None, None, :]
            + betas[None, :, None] * n_random[:, k][None, None, :]
        )
        resid = pred - truth[None, None, :]
        mse[k] = np.mean(resid * resid, axis=2)

    # C-order argmin returns the first occurrence of the minimum, which is
    # exactly the (theta, alpha, beta) lexicographic tie-break.
    flat = int(np.argmin(mse))
    k, ai, bi = np.unravel_index(flat, mse.shape)
    return ModelParams(
        alpha=float(alphas[ai]),
        beta=float(betas[bi]),
        theta_index=int(k),
        theta_dbm=int(thresholds[k]),
    )
