"""Per-window unique-MAC counter registers over an RSS threshold grid.

Each sniffing window keeps one entry per distinct MAC with its maximum
observed RSS; closing the window produces cumulative counts of valid and
randomized MACs whose max RSS exceeds each threshold (strict inequality).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .frames import MacAddress, ProbeRecord
from .oui import MacClass


class IncompatibleGridError(ValueError):
    """Threshold grids of two values being combined do not match."""


@dataclass(frozen=True)
class ThresholdGrid:
    """Strictly increasing RSS thresholds in dBm."""

    thresholds: tuple[int, ...]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        if not self.thresholds:
            raise ValueError("threshold grid is empty")

    @classmethod
    def default(cls) -> "ThresholdGrid":
        # 40 thresholds, 2 dBm apart, from -120 dBm up.
        return cls(tuple(range(-120, -41, 2)))

    def __len__(self) -> int:
        return len(self.thresholds)

    def index_of_nearest(self, theta_dbm: float) -> int:
        return min(
            range(len(self.thresholds)),
            key=lambda i: (abs(self.thresholds[i] - theta_dbm), i),
        )


@dataclass(frozen=True)
class CounterSnapshot:
    """Cumulative unique-MAC counts for one closed window."""

    thresholds: tuple[int, ...]
    n_valid: tuple[int, ...]
    n_random: tuple[int, ...]
    window_start: float
    window_duration_s: float

    def to_dict(self) -> dict:
        return {
            "window_start": self.window_start,
            "window_duration_s": self.window_duration_s,
            "thresholds": list(self.thresholds),
            "n_valid": list(self.n_valid),
            "n_random": list(self.n_random),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CounterSnapshot":
        return cls(
            thresholds=tuple(d["thresholds"]),
            n_valid=tuple(d["n_valid"]),
            n_random=tuple(d["n_random"]),
            window_start=d["window_start"],
            window_duration_s=d["window_duration_s"],
        )


@dataclass
class WindowObservations:
    """Mutable per-window state: one (class, max RSS) entry per MAC."""

    window_start: float
    window_end: float
    entries: dict[MacAddress, tuple[MacClass, int]] = field(default_factory=dict)
    dropped_no_rss: int = 0

    def observe(self, record: ProbeRecord, mac_class: MacClass) -> None:
        """Fold one frame in; frames without RSS are dropped (not comparable)."""
        if record.rss_dbm is None:
            self.dropped_no_rss += 1
            return
        existing = self.entries.get(record.source_mac)
        if existing is None:
            self.entries[record.source_mac] = (mac_class, record.rss_dbm)
        else:
            cls, max_rss = existing
            if record.rss_dbm > max_rss:
                self.entries[record.source_mac] = (cls, record.rss_dbm)

    def close_window(self, grid: ThresholdGrid) -> CounterSnapshot:
        n_valid = [0] * len(grid)
        n_random = [0] * len(grid)
        for mac_class, max_rss in self.entries.values():
            counts = n_valid if mac_class is MacClass.VALID else n_random
            for i, theta in enumerate(grid.thresholds):
                if theta < max_rss:
                    counts[i] += 1
                else:
                    break  # thresholds are increasing: no later one passes
        return CounterSnapshot(
            thresholds=grid.thresholds,
            n_valid=tuple(n_valid),
            n_random=tuple(n_random),
            window_start=self.window_start,
            window_duration_s=self.window_end - self.window_start,
        )

    def reset(self, window_start: float, window_end: float) -> None:
        self.entries.clear()
        self.dropped_no_rss = 0
        self.window_start = window_start
        self.window_end = window_end
