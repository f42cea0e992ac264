"""IEEE OUI registry: vendor lookup and randomized-MAC classification.

A MAC whose OUI prefix is absent from the registered-vendor table is
treated as randomized. A registry is immutable once built; refreshing
means constructing a new one.
"""

from __future__ import annotations

import enum
import importlib.resources
import logging
import re
import struct
from dataclasses import dataclass, field
from typing import Optional

from .frames import MacAddress

logger = logging.getLogger(__name__)

_HEX_LINE = re.compile(
    r"^\s*([0-9A-Fa-f]{2})-([0-9A-Fa-f]{2})-([0-9A-Fa-f]{2})\s+\(hex\)\s+(.*\S)\s*$"
)

_CACHE_MAGIC = b"OUI1"


class MacClass(enum.Enum):
    VALID = "valid"
    RANDOMIZED = "randomized"


@dataclass(frozen=True)
class OuiRegistry:
    """Immutable map from 3-octet OUI to vendor name."""

    entries: dict[bytes, str]
    source_snapshot_date: str = ""
    parsed_lines: int = 0
    skipped_lines: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def vendor_of(self, mac: MacAddress) -> Optional[str]:
        return self.entries.get(mac.oui)

    def classify(self, mac: MacAddress, strict: bool = False) -> MacClass:
        """Valid iff the OUI is registered.

        With strict=True, locally-administered addresses are additionally
        classified as randomized regardless of table membership.
        """
        if strict and mac.locally_administered:
            return MacClass.RANDOMIZED
        if mac.oui in self.entries:
            return MacClass.VALID
        return MacClass.RANDOMIZED


def parse_registry_text(text: str, snapshot_date: str = "") -> OuiRegistry:
    """Parse the IEEE oui.txt line format.

    Only "(hex)" assignment lines produce entries; everything else
    (headers, blank lines, base-16 continuation lines) is skipped.
    Duplicate OUIs keep the first occurrence.
    """
    entries: dict[bytes, str] = {}
    parsed = skipped = 0
    for line in text.splitlines():
        m = _HEX_LINE.match(line)
        if not m:
            skipped += 1
            continue
        oui = bytes(int(m.group(i), 16) for i in (1, 2, 3))
        if oui not in entries:
            entries[oui] = m.group(4)
        parsed += 1
    if parsed == 0:
        logger.warning("no parseable OUI lines; registry is empty")
    return OuiRegistry(entries, snapshot_date, parsed, skipped)


def load_registry(path, snapshot_date: str = "") -> OuiRegistry:
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        return parse_registry_text(f.read(), snapshot_date)


def fixture_registry() -> OuiRegistry:
    """The small bundled registry used by tests and demos (no network)."""
    text = (
        importlib.resources.files("wifi_occupancy.data")
        .joinpath("oui_fixture.txt")
        .read_text(encoding="utf-8")
    )
    return parse_registry_text(text, snapshot_date="fixture")


def save_cache(registry: OuiRegistry, path) -> None:
    """Compact binary cache: sorted (OUI, vendor) table for fast startup."""
    with open(path, "wb") as f:
        f.write(_CACHE_MAGIC)
        f.write(struct.pack("<I", len(registry.entries)))
        for oui in sorted(registry.entries):
            name = registry.entries[oui].encode("utf-8")
            f.write(oui + struct.pack("<H", len(name)) + name)


def load_cache(path) -> OuiRegistry:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _CACHE_MAGIC:
        raise ValueError("not an OUI cache file")
    (count,) = struct.unpack_from("<I", data, 4)
    entries: dict[bytes, str] = {}
    pos = 8
    for _ in range(count):
        oui = data[pos : pos + 3]
        (nlen,) = struct.unpack_from("<H", data, pos + 3)
        pos += 5
        entries[oui] = data[pos : pos + nlen].decode("utf-8")
        pos += nlen
    return OuiRegistry(entries, source_snapshot_date="cache", parsed_lines=count)
