import random
import struct

import pytest

from wifi_occupancy.frames import MacAddress, ProbeRecord
from wifi_occupancy.oui import fixture_registry


@pytest.fixture(scope="session")
def registry():
    return fixture_registry()


def random_mac(rng: random.Random) -> MacAddress:
    return MacAddress(bytes(rng.randrange(256) for _ in range(6)))


def random_record(rng: random.Random, with_rss: bool = True) -> ProbeRecord:
    ssid_choice = rng.randrange(3)
    if ssid_choice == 0:
        ssid = None
    else:
        ssid = bytes(rng.randrange(256) for _ in range(rng.randrange(33)))
    return ProbeRecord(
        source_mac=random_mac(rng),
        rss_dbm=rng.randrange(-127, 1) if with_rss else None,
        timestamp_us=rng.randrange(10**12),
        ssid=ssid,
    )


def beacon_frame(mac: MacAddress) -> bytes:
    """Radiotap + minimal 802.11 beacon (subtype 8) for skip tests."""
    radiotap = struct.pack("<BBHI", 0, 0, 8, 0)
    frame = bytes([0x80, 0x00]) + b"\x00\x00" + b"\xff" * 6 + mac.octets + b"\xff" * 6 + b"\x00\x00"
    return radiotap + frame + b"\x00" * 12  # beacon fixed params stub
