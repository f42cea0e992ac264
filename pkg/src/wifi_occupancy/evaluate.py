"""Evaluation harness: window labeling, metrics, and cross-validation.

Metrics follow the usual definitions: RMSE and MAE over test residuals,
and percentage error as MAE relative to the room's seat capacity.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .counters import CounterSnapshot, ThresholdGrid, WindowObservations
from .frames import ProbeRecord
from .model import ModelParams, SearchGrid, TrainingSample, estimate, train
from .oui import OuiRegistry


def rmse(predictions: Sequence[float], truths: Sequence[float]) -> float:
    if len(predictions) != len(truths) or not predictions:
        raise ValueError("predictions and truths must be equal-length and non-empty")
    total = sum((p - t) ** 2 for p, t in zip(predictions, truths))
    return math.sqrt(total / len(predictions))


def mae(predictions: Sequence[float], truths: Sequence[float]) -> float:
    if len(predictions) != len(truths) or not predictions:
        raise ValueError("predictions and truths must be equal-length and non-empty")
    return sum(abs(p - t) for p, t in zip(predictions, truths)) / len(predictions)


def percentage_error(mae_value: float, seats: int) -> float:
    if seats <= 0:
        raise ValueError("seats must be positive")
    return 100.0 * mae_value / seats


def windowize(
    records: Iterable[ProbeRecord],
    truth_series: Sequence[tuple[float, int]],
    registry: OuiRegistry,
    grid: Optional[ThresholdGrid] = None,
    strict: bool = False,
) -> list[TrainingSample]:
    """Pair counter snapshots with ground truth, one sample per truth window.

    Truth entries are window start times; each window runs to the next
    start (the last reuses the preceding window's duration).
    """
    if grid is None:
        grid = ThresholdGrid.default()
    if not truth_series:
        return []
    starts = [t for t, _ in truth_series]
    if len(starts) > 1:
        last_duration = starts[-1] - starts[-2]
    else:
        last_duration = float("inf")
    ends = starts[1:] + [starts[-1] + last_duration]

    samples = []
    record_iter = iter(sorted(records, key=lambda r: r.timestamp_us))
    pending: Optional[ProbeRecord] = None
    for (start, count), end in zip(truth_series, ends):
        obs = WindowObservations(window_start=start, window_end=end)
        while True:
            rec = pending if pending is not None else next(record_iter, None)
            pending = None
            if rec is None:
                break
            ts = rec.timestamp_us / 1e6
            if ts < start:
                continue  # before the first window
            if ts >= end:
                pending = rec
                break
            obs.observe(rec, registry.classify(rec.source_mac, strict=strict))
        samples.append(TrainingSample(snapshot=obs.close_window(grid), truth=count))
    return samples


@dataclass(frozen=True)
class SplitSpec:
    """Cross-validation configuration.

    mode "monte-carlo" draws `repeats` independent seeded train subsets;
    mode "kfold" uses disjoint folds of `train_size` as the training set
    (repeats is then capped at dataset_size // train_size).
    """

    train_size: int = 40
    repeats: int = 10
    seed: int = 0
    mode: str = "monte-carlo"


@dataclass(frozen=True)
class RepeatResult:
    params: ModelParams
    rmse: float
    mae: float
    pct_error: float


@dataclass(frozen=True)
class EvalReport:
    per_repeat: tuple[RepeatResult, ...]
    rmse: float
    mae: float
    pct_error: float
    mean_alpha: float
    mean_beta: float
    mean_theta_dbm: float
    seats: int

    def to_dict(self) -> dict:
        return {
            "aggregate": {
                "rmse": self.rmse,
                "mae": self.mae,
                "pct_error": self.pct_error,
                "mean_alpha": self.mean_alpha,
                "mean_beta": self.mean_beta,
                "mean_theta_dbm": self.mean_theta_dbm,
                "seats": self.seats,
            },
            "per_repeat": [
                {
                    "alpha": r.params.alpha,
                    "beta": r.params.beta,
                    "theta_dbm": r.params.theta_dbm,
                    "rmse": r.rmse,
                    "mae": r.mae,
                    "pct_error": r.pct_error,
                }
                for r in self.per_repeat
            ],
        }

    def table(self, room_label: str = "room") -> str:
        header = (
            f"{'Room':<16}{'alpha':>8}{'beta':>8}{'theta [dBm]':>13}"
            f"{'RMSE [ppl]':>12}{'MAE [ppl]':>11}{'Pct Error [%]':>15}"
        )
        row = (
            f"{room_label:<16}{self.mean_alpha:>8.2f}{self.mean_beta:>8.2f}"
            f"{self.mean_theta_dbm:>13.2f}{self.rmse:>12.2f}{self.mae:>11.2f}"
            f"{self.pct_error:>15.2f}"
        )
        return header + "\n" + row


def _split_indices(n: int, spec: SplitSpec) -> list[list[int]]:
    rng = random.Random(spec.seed)
    if spec.mode == "kfold":
        order = list(range(n))
        rng.shuffle(order)
        n_folds = min(spec.repeats, n // spec.train_size)
        return [
            order[i * spec.train_size : (i + 1) * spec.train_size]
            for i in range(n_folds)
        ]
    if spec.mode != "monte-carlo":
        raise ValueError(f"unknown split mode {spec.mode!r}")
    return [rng.sample(range(n), spec.train_size) for _ in range(spec.repeats)]


def cross_validate(
    samples: Sequence[TrainingSample],
    seats: int,
    spec: Optional[SplitSpec] = None,
    search: Optional[SearchGrid] = None,
    rounded: bool = False,
) -> EvalReport:
    """Repeated train/test evaluation; aggregates are means over repeats."""
    spec = spec or SplitSpec()
    if len(samples) <= spec.train_size:
        raise ValueError(
            f"dataset of {len(samples)} too small for train size {spec.train_size}"
        )

    results = []
    for train_idx in _split_indices(len(samples), spec):
        train_set = set(train_idx)
        train_samples = [samples[i] for i in train_idx]
        test_samples = [s for i, s in enumerate(samples) if i not in train_set]
        params = train(train_samples, search)
        preds = [estimate(params, s.snapshot) for s in test_samples]
        if rounded:
            preds = [max(0, round(p)) for p in preds]
        truths = [float(s.truth) for s in test_samples]
        m = mae(preds, truths)
        results.append(
            RepeatResult(
                params=params,
                rmse=rmse(preds, truths),
                mae=m,
                pct_error=percentage_error(m, seats),
            )
        )

    n = len(results)
    return EvalReport(
        per_repeat=tuple(results),
        rmse=sum(r.rmse for r in results) / n,
        mae=sum(r.mae for r in results) / n,
        pct_error=sum(r.pct_error for r in results) / n,
        mean_alpha=sum(r.params.alpha for r in results) / n,
        mean_beta=sum(r.params.beta for r in results) / n,
        mean_theta_dbm=sum(r.params.theta_dbm for r in results) / n,
        seats=seats,
    )


def save_dataset(samples: Sequence[TrainingSample], path, room: Optional[dict] = None):
    doc = {
        "room": room or {},
        "samples": [
            {"snapshot": s.snapshot.to_dict(), "truth": s.truth} for s in samples
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_dataset(path) -> tuple[list[TrainingSample], dict]:
    with open(path) as f:
        doc = json.load(f)
    samples = [
        TrainingSample(
            snapshot=CounterSnapshot.from_dict(s["snapshot"]),
            truth=s["truth"],
        )
        for s in doc["samples"]
    ]
    return samples, doc.get("room", {})
