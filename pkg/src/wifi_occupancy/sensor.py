"""Sensor-node runtime: alternate sniffing windows with backend sync.

Each cycle consumes one window of frames, closes the counter register,
polls the backend for ground truth (TTL-gated, deduplicated), retrains
when a fresh truth arrives, and publishes the report. Reports that fail
to publish are queued locally (bounded) and retried next cycle.
"""

from __future__ import annotations

import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Protocol

from .counters import CounterSnapshot, ThresholdGrid, WindowObservations
from .frames import ProbeRecord
from .model import (
    ModelParams,
    TrainingBuffer,
    TrainingSample,
    SearchGrid,
    default_params,
    estimate,
    train,
)
from .oui import OuiRegistry

OFFLINE_QUEUE_LIMIT = 1000


class WrongRoomError(ValueError):
    """Ground truth addressed to a different room."""


class BackendUnavailable(Exception):
    """Raised by clients when the backend cannot be reached."""


@dataclass(frozen=True)
class GroundTruthMsg:
    room_id: str
    count: int
    issued_at: float
    ttl_s: float

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.ttl_s <= 0:
            raise ValueError("ttl must be positive")

    def expired(self, now: float) -> bool:
        return now > self.issued_at + self.ttl_s

    def to_dict(self) -> dict:
        return {
            "room": self.room_id,
            "count": self.count,
            "issued_at": self.issued_at,
            "ttl_s": self.ttl_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruthMsg":
        return cls(d["room"], d["count"], d["issued_at"], d["ttl_s"])


@dataclass(frozen=True)
class SensorConfig:
    room_id: str
    window_duration_s: float = 300.0
    grid: ThresholdGrid = field(default_factory=ThresholdGrid.default)
    publish_environment: bool = False
    strict_classification: bool = False
    buffer_capacity: int = 40

    def __post_init__(self):
        if self.window_duration_s <= 0:
            raise ValueError("window duration must be positive")


@dataclass(frozen=True)
class SensorReport:
    room_id: str
    window_start: float
    window_duration_s: float
    estimate_raw: float
    estimate: int
    params_used: ModelParams
    snapshot: CounterSnapshot
    environment: Optional[dict] = None
    partial: bool = False

    def to_payload(self) -> dict:
        return {
            "room": self.room_id,
            "window_start": self.window_start,
            "window_duration_s": self.window_duration_s,
            "estimate_raw": self.estimate_raw,
            "estimate": self.estimate,
            "alpha": self.params_used.alpha,
            "beta": self.params_used.beta,
            "theta_dbm": self.params_used.theta_dbm,
            "n_valid": list(self.snapshot.n_valid),
            "n_random": list(self.snapshot.n_random),
        }


class BackendClient(Protocol):
    """Transport abstraction toward the backend service."""

    def fetch_groundtruth(self, room_id: str) -> Optional[GroundTruthMsg]: ...

    def publish_report(self, payload: dict) -> None: ...

    def publish_environment(self, payload: dict) -> None: ...

    def publish_params(self, room_id: str, payload: dict) -> None: ...


class EnvironmentSimulator:
    """Slow random walk around fixed baselines; protocol filler only."""

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)
        self.temperature_c = 21.0
        self.humidity_pct = 45.0
        self.pressure_hpa = 1013.0
        self.light_lux = 300.0

    def sample(self) -> dict:
        self.temperature_c += self._rng.gauss(0, 0.05)
        self.humidity_pct += self._rng.gauss(0, 0.2)
        self.pressure_hpa += self._rng.gauss(0, 0.1)
        self.light_lux = max(0.0, self.light_lux + self._rng.gauss(0, 5.0))
        return {
            "temperature_c": round(self.temperature_c, 2),
            "humidity_pct": round(self.humidity_pct, 2),
            "pressure_hpa": round(self.pressure_hpa, 2),
            "light_lux": round(self.light_lux, 1),
        }


class SensorNode:
    """One room's sniffing/sync loop over an offline or live frame source."""

    def __init__(
        self,
        config: SensorConfig,
        registry: OuiRegistry,
        client: BackendClient,
        clock: Callable[[], float] = time.time,
        search: Optional[SearchGrid] = None,
        env_seed: int = 0,
    ):
        self.config = config
        self.registry = registry
        self.client = client
        self.clock = clock
        self.search = search
        self.params = default_params(config.grid)
        self.buffer = TrainingBuffer(capacity=config.buffer_capacity)
        self._consumed_truths: set[float] = set()
        self._pending_reports: deque[dict] = deque(maxlen=OFFLINE_QUEUE_LIMIT)
        self._pending_record: Optional[ProbeRecord] = None
        self._env = EnvironmentSimulator(env_seed)
        self._announced_params = False

    def apply_groundtruth(self, msg: GroundTruthMsg, now: float) -> str:
        """Returns "accepted", "rejected-expired" or "rejected-duplicate"."""
        if msg.room_id != self.config.room_id:
            raise WrongRoomError(
                f"ground truth for {msg.room_id!r}, sensor serves {self.config.room_id!r}"
            )
        if msg.expired(now):
            return "rejected-expired"
        if msg.issued_at in self._consumed_truths:
            return "rejected-duplicate"
        self._consumed_truths.add(msg.issued_at)
        return "accepted"

    def run_window(
        self, frames: Iterator[ProbeRecord], window_start: float
    ) -> SensorReport:
        """One full cycle: sniff, close, sync, maybe retrain, publish."""
        window_end = window_start + self.config.window_duration_s
        obs = WindowObservations(window_start=window_start, window_end=window_end)
        partial = False
        while True:
            rec = self._pending_record
            self._pending_record = None
            if rec is None:
                rec = next(frames, None)
            if rec is None:
                partial = True
                break
            ts = rec.timestamp_us / 1e6
            if ts < window_start:
                continue
            if ts >= window_end:
                self._pending_record = rec
                break
            obs.observe(
                rec,
                self.registry.classify(
                    rec.source_mac, strict=self.config.strict_classification
                ),
            )
        snapshot = obs.close_window(self.config.grid)

        if not self._announced_params:
            self._publish_params_safe()
            self._announced_params = True

        now = self.clock()
        try:
            msg = self.client.fetch_groundtruth(self.config.room_id)
        except BackendUnavailable:
            msg = None
        if msg is not None and self.apply_groundtruth(msg, now) == "accepted":
            self.buffer.push(TrainingSample(snapshot=snapshot, truth=msg.count))
            self.params = train(self.buffer, self.search)
            self.params = ModelParams(
                alpha=self.params.alpha,
                beta=self.params.beta,
                theta_index=self.params.theta_index,
                theta_dbm=self.params.theta_dbm,
                trained_at=now,
            )
            self._publish_params_safe()

        raw = estimate(self.params, snapshot)
        report = SensorReport(
            room_id=self.config.room_id,
            window_start=window_start,
            window_duration_s=self.config.window_duration_s,
            estimate_raw=raw,
            estimate=max(0, round(raw)),
            params_used=self.params,
            snapshot=snapshot,
            environment=self._env.sample() if self.config.publish_environment else None,
            partial=partial,
        )
        self._publish_report_safe(report)
        return report

    def run(self, frames: Iterator[ProbeRecord], start: float, windows: int):
        """Run consecutive windows; yields reports."""
        for i in range(windows):
            yield self.run_window(frames, start + i * self.config.window_duration_s)

    def _publish_params_safe(self) -> None:
        try:
            self.client.publish_params(self.config.room_id, self.params.to_dict())
        except BackendUnavailable:
            pass

    def _publish_report_safe(self, report: SensorReport) -> None:
        self._pending_reports.append(report.to_payload())
        if report.environment is not None:
            env_payload = {"room": report.room_id, **report.environment}
        else:
            env_payload = None
        try:
            while self._pending_reports:
                self.client.publish_report(self._pending_reports[0])
                self._pending_reports.popleft()
            if env_payload is not None:
                self.client.publish_environment(env_payload)
        except BackendUnavailable:
            pass
