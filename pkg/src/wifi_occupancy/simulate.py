"""Synthetic probe-request traces with known ground-truth occupancy.

People (occupants inside the room boundary, outsiders beyond it) carry
0..2 devices; devices emit probe bursts with log-distance path loss plus
Gaussian shadowing. Randomizing devices draw a fresh locally-administered
MAC per burst. Output is reproducible from (config, seed).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .frames import MacAddress, ProbeRecord


class InvalidScheduleError(ValueError):
    """Schedule intervals overlap or are out of order."""


BURST_FRAMES = 3
_BURST_FRAME_SPACING_US = 2000


@dataclass(frozen=True)
class RoomSpec:
    room_id: str
    area_m2: float
    seats: int
    sniffer_position: tuple[float, float] = (0.0, 0.0)
    boundary_radius_m: float = 10.0

    def __post_init__(self):
        if self.seats <= 0:
            raise ValueError("seats must be positive")
        if math.hypot(*self.sniffer_position) > self.boundary_radius_m:
            raise ValueError("sniffer must be inside the room boundary")


@dataclass(frozen=True)
class PersonProfile:
    device_count_distribution: dict[int, float] = field(
        default_factory=lambda: {0: 0.1, 1: 0.8, 2: 0.1}
    )
    randomization_probability: float = 0.3
    burst_period_s: float = 30.0
    tx_power_dbm: float = 0.0

    def __post_init__(self):
        total = sum(self.device_count_distribution.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError("device count distribution must sum to 1")
        if self.burst_period_s <= 0:
            raise ValueError("burst period must be positive")


@dataclass(frozen=True)
class PathLossModel:
    p0_dbm: float = -40.0  # RSS at the 1 m reference distance
    exponent_n: float = 2.0
    shadowing_sigma_db: float = 0.0

    def __post_init__(self):
        if self.exponent_n <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing sigma must be >= 0")


@dataclass(frozen=True)
class ScheduleInterval:
    start_s: float
    end_s: float
    occupants: int
    outsiders: int = 0

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise InvalidScheduleError("interval end must exceed start")
        if self.occupants < 0 or self.outsiders < 0:
            raise InvalidScheduleError("counts must be >= 0")


@dataclass(frozen=True)
class OccupancySchedule:
    intervals: tuple[ScheduleInterval, ...]

    def __post_init__(self):
        for a, b in zip(self.intervals, self.intervals[1:]):
            if b.start_s < a.end_s:
                raise InvalidScheduleError("intervals overlap or are unordered")

    @classmethod
    def uniform(cls, window_s: float, counts, outsiders=0) -> "OccupancySchedule":
        """Contiguous equal-length windows; one (occupants, outsiders) per window."""
        intervals = []
        for i, n in enumerate(counts):
            out = outsiders[i] if isinstance(outsiders, (list, tuple)) else outsiders
            intervals.append(ScheduleInterval(i * window_s, (i + 1) * window_s, n, out))
        return cls(tuple(intervals))


def rss_at(model: PathLossModel, distance_m: float, noise_draw: float = 0.0) -> float:
    """Log-distance path loss; distance clamps at 0.1 m."""
    d = max(distance_m, 0.1)
    return (
        model.p0_dbm
        - 10.0 * model.exponent_n * math.log10(d)
        + noise_draw * model.shadowing_sigma_db
    )


def _valid_mac(rng: random.Random, oui_pool: list[bytes]) -> MacAddress:
    oui = oui_pool[rng.randrange(len(oui_pool))]
    return MacAddress(oui + bytes(rng.randrange(256) for _ in range(3)))


def _random_mac(rng: random.Random) -> MacAddress:
    # Locally-administered, unicast first octet; OUI will not be registered.
    first = (rng.randrange(256) | 0x02) & 0xFE
    return MacAddress(bytes([first]) + bytes(rng.randrange(256) for _ in range(5)))


def generate_trace(
    room: RoomSpec,
    profile: PersonProfile,
    pathloss: PathLossModel,
    schedule: OccupancySchedule,
    seed: int,
    oui_pool: list[bytes],
    outsider_ring: Optional[tuple[float, float]] = None,
) -> tuple[list[ProbeRecord], list[tuple[float, float, int]]]:
    """Build a probe stream plus the (start, end, occupants) truth series.

    Ground truth counts people inside the boundary, never devices.
    """
    rng = random.Random(seed)
    if outsider_ring is None:
        outsider_ring = (1.5 * room.boundary_radius_m, 3.0 * room.boundary_radius_m)

    may_have_valid = profile.randomization_probability < 1.0 and any(
        n > 0 and p > 0 for n, p in profile.device_count_distribution.items()
    )
    if may_have_valid and not oui_pool:
        raise ValueError("oui_pool must be non-empty when devices can use valid MACs")

    counts, probs = zip(*sorted(profile.device_count_distribution.items()))
    records: list[ProbeRecord] = []
    truth: list[tuple[float, float, int]] = []

    for interval in schedule.intervals:
        truth.append((interval.start_s, interval.end_s, interval.occupants))
        people = []
        for is_inside in [True] * interval.occupants + [False] * interval.outsiders:
            if is_inside:
                r = room.boundary_radius_m * math.sqrt(rng.random())
            else:
                lo, hi = outsider_ring
                r = math.sqrt(rng.random() * (hi * hi - lo * lo) + lo * lo)
            angle = rng.random() * 2.0 * math.pi
            pos = (r * math.cos(angle), r * math.sin(angle))
            people.append(pos)

        for pos in people:
            dist = math.hypot(
                pos[0] - room.sniffer_position[0], pos[1] - room.sniffer_position[1]
            )
            n_devices = rng.choices(counts, probs)[0]
            for _ in range(n_devices):
                randomizes = rng.random() < profile.randomization_probability
                stable_mac = None if randomizes else _valid_mac(rng, oui_pool)
                t = interval.start_s + rng.expovariate(1.0 / profile.burst_period_s)
                while t < interval.end_s:
                    mac = _random_mac(rng) if randomizes else stable_mac
                    for k in range(BURST_FRAMES):
                        rss = rss_at(pathloss, dist, rng.gauss(0.0, 1.0))
                        rss += profile.tx_power_dbm
                        rss_int = max(-127, min(0, round(rss)))
                        records.append(
                            ProbeRecord(
                                source_mac=mac,
                                rss_dbm=rss_int,
                                timestamp_us=int(t * 1e6) + k * _BURST_FRAME_SPACING_US,
                                ssid=None,
                            )
                        )
                    t += rng.expovariate(1.0 / profile.burst_period_s)

    records.sort(key=lambda r: r.timestamp_us)
    return records, truth


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration document."""

    room: RoomSpec
    profile: PersonProfile
    pathloss: PathLossModel
    schedule: OccupancySchedule
    seed: int
    oui_pool: tuple[bytes, ...]
    outsider_ring: Optional[tuple[float, float]] = None

    def run(self) -> tuple[list[ProbeRecord], list[tuple[float, float, int]]]:
        return generate_trace(
            self.room,
            self.profile,
            self.pathloss,
            self.schedule,
            self.seed,
            list(self.oui_pool),
            self.outsider_ring,
        )

    def to_dict(self) -> dict:
        return {
            "room": {
                "room_id": self.room.room_id,
                "area_m2": self.room.area_m2,
                "seats": self.room.seats,
                "sniffer_position": list(self.room.sniffer_position),
                "boundary_radius_m": self.room.boundary_radius_m,
            },
            "profile": {
                "device_count_distribution": {
                    str(k): v for k, v in self.profile.device_count_distribution.items()
                },
                "randomization_probability": self.profile.randomization_probability,
                "burst_period_s": self.profile.burst_period_s,
                "tx_power_dbm": self.profile.tx_power_dbm,
            },
            "pathloss": {
                "p0_dbm": self.pathloss.p0_dbm,
                "exponent_n": self.pathloss.exponent_n,
                "shadowing_sigma_db": self.pathloss.shadowing_sigma_db,
            },
            "schedule": [
                {
                    "start_s": iv.start_s,
                    "end_s": iv.end_s,
                    "occupants": iv.occupants,
                    "outsiders": iv.outsiders,
                }
                for iv in self.schedule.intervals
            ],
            "seed": self.seed,
            "oui_pool": [oui.hex() for oui in self.oui_pool],
            "outsider_ring": list(self.outsider_ring) if self.outsider_ring else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        ring = d.get("outsider_ring")
        return cls(
            room=RoomSpec(
                room_id=d["room"]["room_id"],
                area_m2=d["room"]["area_m2"],
                seats=d["room"]["seats"],
                sniffer_position=tuple(d["room"].get("sniffer_position", (0.0, 0.0))),
                boundary_radius_m=d["room"].get("boundary_radius_m", 10.0),
            ),
            profile=PersonProfile(
                device_count_distribution={
                    int(k): v
                    for k, v in d["profile"]["device_count_distribution"].items()
                },
                randomization_probability=d["profile"]["randomization_probability"],
                burst_period_s=d["profile"]["burst_period_s"],
                tx_power_dbm=d["profile"].get("tx_power_dbm", 0.0),
            ),
            pathloss=PathLossModel(**d["pathloss"]),
            schedule=OccupancySchedule(
                tuple(ScheduleInterval(**iv) for iv in d["schedule"])
            ),
            seed=d["seed"],
            oui_pool=tuple(bytes.fromhex(s) for s in d["oui_pool"]),
            outsider_ring=tuple(ring) if ring else None,
        )


def load_scenario(path) -> Scenario:
    with open(path) as f:
        return Scenario.from_dict(json.load(f))


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as f:
        json.dump(scenario.to_dict(), f, indent=2)


def write_truth_file(truth, path) -> None:
    """One "window_start count" line per window."""
    with open(path, "w") as f:
        for start, _end, count in truth:
            f.write(f"{start} {count}\n")


def read_truth_file(path) -> list[tuple[float, int]]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ts, count = line.split()
            out.append((float(ts), int(count)))
    return out
