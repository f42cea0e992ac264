"""Radiotap / 802.11 probe-request codec and pcap capture I/O.

Decoders are pure functions over byte buffers and never read past the
declared buffer length; malformed input raises a typed CodecError
subclass, never an unhandled exception.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, Optional


class CodecError(Exception):
    """Base class for frame/capture decoding errors."""


class TruncatedHeaderError(CodecError):
    """Radiotap header shorter than its declared or minimal length."""


class UnsupportedVersionError(CodecError):
    """Radiotap version field is not 0."""


class TruncatedFrameError(CodecError):
    """802.11 frame shorter than the 24-octet management header."""


class InvalidRecordError(CodecError):
    """ProbeRecord violates its invariants and cannot be encoded."""


class UnrecognizedFormatError(CodecError):
    """Capture file magic is not classic little-endian pcap."""


class LinkTypeError(CodecError):
    """Capture link type is not radiotap-over-802.11."""


@dataclass(frozen=True)
class MacAddress:
    """A 48-bit MAC address."""

    octets: bytes

    def __post_init__(self):
        if len(self.octets) != 6:
            raise ValueError(f"MAC address needs 6 octets, got {len(self.octets)}")

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6:
            raise ValueError(f"cannot parse MAC address {text!r}")
        return cls(bytes(int(p, 16) for p in parts))

    @property
    def oui(self) -> bytes:
        return self.octets[:3]

    @property
    def locally_administered(self) -> bool:
        return bool(self.octets[0] & 0x02)

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)


@dataclass(frozen=True)
class ProbeRecord:
    """One captured probe request."""

    source_mac: MacAddress
    rss_dbm: Optional[int]
    timestamp_us: int
    ssid: Optional[bytes] = None
    malformed_tags: bool = field(default=False, compare=False)

    def validate(self) -> None:
        if self.rss_dbm is not None and not (-127 <= self.rss_dbm <= 0):
            raise InvalidRecordError(f"rss_dbm {self.rss_dbm} outside [-127, 0]")
        if self.ssid is not None and len(self.ssid) > 32:
            raise InvalidRecordError(f"ssid length {len(self.ssid)} exceeds 32")


PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_IEEE802_11_RADIOTAP = 127

# Radiotap fields preceding the antenna-signal bit: (alignment, size).
_RT_BIT_ANTSIGNAL = 5
_RT_FIELD_LAYOUT = {
    0: (8, 8),  # TSFT
    1: (1, 1),  # flags
    2: (1, 1),  # rate
    3: (2, 4),  # channel
    4: (2, 2),  # FHSS
    5: (1, 1),  # dBm antenna signal
}

_FC_SUBTYPE_PROBE_REQ = 4
_MGMT_HEADER_LEN = 24


def decode_radiotap(buf: bytes) -> tuple[Optional[int], int]:
    """Parse a radiotap header; return (antenna signal in dBm or None, payload offset)."""
    if len(buf) < 8:
        raise TruncatedHeaderError(f"radiotap header needs 8 octets, got {len(buf)}")
    version, _pad, length = struct.unpack_from("<BBH", buf, 0)
    if version != 0:
        raise UnsupportedVersionError(f"radiotap version {version} unsupported")
    if length < 8 or length > len(buf):
        raise TruncatedHeaderError(
            f"declared radiotap length {length} vs buffer {len(buf)}"
        )

    # Present-flag words; bit 31 chains to an extension word.
    offset = 4
    words = []
    while True:
        if offset + 4 > length:
            raise TruncatedHeaderError("present-flag chain exceeds header length")
        (word,) = struct.unpack_from("<I", buf, offset)
        words.append(word)
        offset += 4
        if not word & 0x80000000:
            break

    rss: Optional[int] = None
    present = words[0]
    cursor = offset
    for bit in range(_RT_BIT_ANTSIGNAL + 1):
        if not present & (1 << bit):
            continue
        align, size = _RT_FIELD_LAYOUT[bit]
        cursor = (cursor + align - 1) // align * align
        if cursor + size > length:
            raise TruncatedHeaderError("radiotap fields exceed declared length")
        if bit == _RT_BIT_ANTSIGNAL:
            (rss,) = struct.unpack_from("<b", buf, cursor)
        cursor += size
    return rss, length


def encode_radiotap(rss_dbm: Optional[int]) -> bytes:
    """Minimal radiotap header carrying only the antenna-signal field."""
    if rss_dbm is None:
        return struct.pack("<BBHI", 0, 0, 8, 0)
    return struct.pack("<BBHIb", 0, 0, 9, 1 << _RT_BIT_ANTSIGNAL, rss_dbm)


def decode_probe_request(
    buf: bytes, rss: Optional[int] = None, ts: int = 0
) -> Optional[ProbeRecord]:
    """Decode an 802.11 frame; None if it is a well-formed non-probe-request."""
    if len(buf) < _MGMT_HEADER_LEN:
        raise TruncatedFrameError(
            f"frame needs {_MGMT_HEADER_LEN} octets, got {len(buf)}"
        )
    fc0 = buf[0]
    version = fc0 & 0x03
    ftype = (fc0 >> 2) & 0x03
    subtype = (fc0 >> 4) & 0x0F
    if version != 0 or ftype != 0 or subtype != _FC_SUBTYPE_PROBE_REQ:
        return None

    source = MacAddress(bytes(buf[10:16]))  # transmitter address (address 2)

    ssid: Optional[bytes] = None
    malformed = False
    pos = _MGMT_HEADER_LEN
    while pos < len(buf):
        if pos + 2 > len(buf):
            malformed = True
            break
        tag, tlen = buf[pos], buf[pos + 1]
        if pos + 2 + tlen > len(buf):
            malformed = True
            break
        if tag == 0:
            if tlen > 32:
                malformed = True
            elif ssid is None:
                ssid = bytes(buf[pos + 2 : pos + 2 + tlen])
        pos += 2 + tlen
    if malformed:
        ssid = None
    return ProbeRecord(source, rss, ts, ssid, malformed_tags=malformed)


def encode_probe_request(record: ProbeRecord) -> bytes:
    """Encode a ProbeRecord as radiotap + 802.11 probe request bytes."""
    record.validate()
    frame = bytearray()
    frame += bytes([0x40, 0x00])  # frame control: mgmt / probe request
    frame += b"\x00\x00"  # duration
    frame += b"\xff" * 6  # destination: broadcast
    frame += record.source_mac.octets
    frame += b"\xff" * 6  # BSSID: broadcast
    frame += b"\x00\x00"  # sequence control
    if record.ssid is not None:
        frame += bytes([0, len(record.ssid)]) + record.ssid
    return encode_radiotap(record.rss_dbm) + bytes(frame)


def decode_frame(buf: bytes, ts: int = 0) -> Optional[ProbeRecord]:
    """Radiotap + 802.11 decode in one step."""
    rss, offset = decode_radiotap(buf)
    return decode_probe_request(buf[offset:], rss, ts)


class PcapWriter:
    """Classic little-endian pcap writer, radiotap link type."""

    def __init__(self, fileobj: BinaryIO, snaplen: int = 65535):
        self._f = fileobj
        self._f.write(
            struct.pack(
                "<IHHiIII",
                PCAP_MAGIC,
                2,
                4,
                0,
                0,
                snaplen,
                LINKTYPE_IEEE802_11_RADIOTAP,
            )
        )

    def write(self, timestamp_us: int, frame: bytes) -> None:
        sec, usec = divmod(timestamp_us, 1_000_000)
        self._f.write(struct.pack("<IIII", sec, usec, len(frame), len(frame)))
        self._f.write(frame)

    def write_record(self, record: ProbeRecord) -> None:
        self.write(record.timestamp_us, encode_probe_request(record))


def write_capture(path, records) -> None:
    with open(path, "wb") as f:
        writer = PcapWriter(f)
        for record in records:
            writer.write_record(record)


class CaptureReader:
    """Iterates the probe requests in a pcap capture, in file order.

    Non-probe frames are skipped and counted in ``skipped``; frames that
    fail to decode are counted in ``errors``.
    """

    def __init__(self, fileobj: BinaryIO):
        self._f = fileobj
        self.skipped = 0
        self.errors = 0
        header = self._f.read(24)
        if len(header) < 24:
            raise UnrecognizedFormatError("capture file shorter than pcap header")
        magic = struct.unpack_from("<I", header, 0)[0]
        if magic != PCAP_MAGIC:
            raise UnrecognizedFormatError(f"bad pcap magic 0x{magic:08x}")
        linktype = struct.unpack_from("<I", header, 20)[0]
        if linktype != LINKTYPE_IEEE802_11_RADIOTAP:
            raise LinkTypeError(f"link type {linktype} is not radiotap (127)")

    def __iter__(self) -> Iterator[ProbeRecord]:
        while True:
            pkt_header = self._f.read(16)
            if not pkt_header:
                return
            if len(pkt_header) < 16:
                raise UnrecognizedFormatError("truncated pcap packet header")
            sec, usec, incl_len, _orig = struct.unpack("<IIII", pkt_header)
            frame = self._f.read(incl_len)
            if len(frame) < incl_len:
                raise UnrecognizedFormatError("truncated pcap packet body")
            try:
                record = decode_frame(frame, ts=sec * 1_000_000 + usec)
            except CodecError:
                self.errors += 1
                continue
            if record is None:
                self.skipped += 1
                continue
            yield record


def open_capture(path) -> CaptureReader:
    """Open a pcap file for probe-request iteration.

    The underlying file handle stays open for the reader's lifetime.
    """
    return CaptureReader(open(path, "rb"))
