import random
import struct

import pytest

from conftest import beacon_frame, random_mac, random_record
from wifi_occupancy import frames
from wifi_occupancy.frames import (
    CodecError,
    InvalidRecordError,
    LinkTypeError,
    MacAddress,
    PcapWriter,
    ProbeRecord,
    TruncatedFrameError,
    TruncatedHeaderError,
    UnrecognizedFormatError,
    UnsupportedVersionError,
    decode_frame,
    decode_probe_request,
    decode_radiotap,
    encode_probe_request,
    encode_radiotap,
    open_capture,
    write_capture,
)


class TestMacAddress:
    def test_parse_and_str(self):
        mac = MacAddress.parse("aa:bb:cc:dd:ee:ff")
        assert mac.octets == bytes.fromhex("aabbccddeeff")
        assert str(mac) == "aa:bb:cc:dd:ee:ff"

    def test_oui_is_first_three_octets(self):
        mac = MacAddress.parse("00-00-0c-01-02-03")
        assert mac.oui == bytes.fromhex("00000c")

    def test_locally_administered_bit(self):
        assert MacAddress.parse("02:00:00:00:00:00").locally_administered
        assert not MacAddress.parse("00:00:0c:00:00:00").locally_administered

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            MacAddress(b"\x00" * 5)


class TestRadiotap:
    def test_minimal_header_no_signal(self):
        buf = struct.pack("<BBHI", 0, 0, 8, 0)
        assert decode_radiotap(buf) == (None, 8)

    def test_antenna_signal_two_complement(self):
        # Signal octet 0xB0 is -80 dBm.
        buf = struct.pack("<BBHI", 0, 0, 9, 1 << 5) + b"\xb0"
        rss, offset = decode_radiotap(buf)
        assert rss == -80
        assert offset == 9

    def test_unsupported_version(self):
        buf = struct.pack("<BBHI", 1, 0, 8, 0)
        with pytest.raises(UnsupportedVersionError):
            decode_radiotap(buf)

    def test_header_shorter_than_declared(self):
        buf = struct.pack("<BBHI", 0, 0, 32, 0)
        with pytest.raises(TruncatedHeaderError):
            decode_radiotap(buf)

    def test_fields_before_signal_respected(self):
        # TSFT (8 bytes, align 8) + flags + rate precede the signal octet.
        present = (1 << 0) | (1 << 1) | (1 << 2) | (1 << 5)
        body = struct.pack("<Q", 123) + bytes([0x10, 0x02]) + struct.pack("<b", -55)
        buf = struct.pack("<BBHI", 0, 0, 8 + len(body), present) + body
        rss, offset = decode_radiotap(buf)
        assert rss == -55
        assert offset == len(buf)

    def test_payload_beyond_offset_untouched(self):
        buf = struct.pack("<BBHI", 0, 0, 8, 0) + b"payload"
        rss, offset = decode_radiotap(buf)
        assert buf[offset:] == b"payload"

    def test_encode_roundtrip(self):
        for rss in (None, 0, -1, -80, -127):
            assert decode_radiotap(encode_radiotap(rss))[0] == rss


class TestProbeRequestDecode:
    def test_probe_request_source_mac(self):
        rec = ProbeRecord(MacAddress.parse("aa:bb:cc:dd:ee:ff"), -60, 5)
        buf = encode_probe_request(rec)
        _, offset = decode_radiotap(buf)
        out = decode_probe_request(buf[offset:], -60, 5)
        assert out is not None
        assert str(out.source_mac) == "aa:bb:cc:dd:ee:ff"
        assert buf[offset] == 0x40

    def test_beacon_is_not_a_probe_request(self):
        buf = beacon_frame(MacAddress.parse("aa:bb:cc:dd:ee:ff"))
        _, offset = decode_radiotap(buf)
        assert decode_probe_request(buf[offset:]) is None

    def test_short_buffer_is_truncated_error(self):
        with pytest.raises(TruncatedFrameError):
            decode_probe_request(b"\x40" + b"\x00" * 9)

    def test_malformed_tags_yield_flagged_record(self):
        rec = ProbeRecord(MacAddress.parse("aa:bb:cc:dd:ee:ff"), None, 0, ssid=b"net")
        buf = encode_probe_request(rec)
        _, offset = decode_radiotap(buf)
        frame = buf[offset:]
        clipped = frame[:-2]  # cut into the SSID tag body
        out = decode_probe_request(clipped)
        assert out is not None
        assert out.ssid is None
        assert out.malformed_tags


class TestRoundTrip:
    def test_explicit_cases(self):
        for rec in (
            ProbeRecord(MacAddress.parse("00:00:0c:00:00:01"), -42, 1, ssid=b"eduroam"),
            ProbeRecord(MacAddress.parse("02:11:22:33:44:55"), None, 2, ssid=None),
            ProbeRecord(MacAddress.parse("ff:ff:ff:ff:ff:fe"), 0, 3, ssid=b""),
        ):
            out = decode_frame(encode_probe_request(rec), ts=rec.timestamp_us)
            assert out == rec

    def test_absent_rss_omits_signal_field(self):
        rec = ProbeRecord(MacAddress.parse("aa:bb:cc:dd:ee:ff"), None, 0)
        buf = encode_probe_request(rec)
        assert decode_radiotap(buf) == (None, 8)

    def test_thousand_random_records(self):
        rng = random.Random(1234)
        for _ in range(1000):
            rec = random_record(rng, with_rss=rng.random() < 0.9)
            out = decode_frame(encode_probe_request(rec), ts=rec.timestamp_us)
            assert out == rec

    def test_overlong_ssid_rejected(self):
        rec = ProbeRecord(MacAddress.parse("aa:bb:cc:dd:ee:ff"), -50, 0, ssid=b"x" * 33)
        with pytest.raises(InvalidRecordError):
            encode_probe_request(rec)

    def test_out_of_range_rss_rejected(self):
        rec = ProbeRecord(MacAddress.parse("aa:bb:cc:dd:ee:ff"), 5, 0)
        with pytest.raises(InvalidRecordError):
            encode_probe_request(rec)


class TestFuzzTruncation:
    def test_every_truncation_errors_or_decodes(self):
        rng = random.Random(99)
        for _ in range(100):
            rec = random_record(rng)
            buf = encode_probe_request(rec)
            for cut in range(len(buf)):
                try:
                    decode_frame(buf[:cut])
                except CodecError:
                    pass  # typed error is the contract; crashes are not

    def test_random_garbage_never_crashes(self):
        rng = random.Random(7)
        for _ in range(500):
            blob = bytes(rng.randrange(256) for _ in range(rng.randrange(64)))
            try:
                decode_frame(blob)
            except CodecError:
                pass


class TestCapture:
    def test_roundtrip_through_pcap(self, tmp_path):
        rng = random.Random(5)
        records = sorted(
            (random_record(rng) for _ in range(20)), key=lambda r: r.timestamp_us
        )
        path = tmp_path / "t.pcap"
        write_capture(path, records)
        out = list(open_capture(path))
        assert out == records

    def test_empty_capture(self, tmp_path):
        path = tmp_path / "empty.pcap"
        write_capture(path, [])
        reader = open_capture(path)
        assert list(reader) == []
        assert reader.skipped == 0

    def test_beacons_skipped_and_counted(self, tmp_path):
        rng = random.Random(6)
        records = sorted(
            (random_record(rng) for _ in range(3)), key=lambda r: r.timestamp_us
        )
        path = tmp_path / "mixed.pcap"
        with open(path, "wb") as f:
            writer = PcapWriter(f)
            writer.write(0, beacon_frame(random_mac(rng)))
            for rec in records:
                writer.write_record(rec)
            writer.write(10**9, beacon_frame(random_mac(rng)))
        reader = open_capture(path)
        assert list(reader) == records
        assert reader.skipped == 2

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.pcap"
        path.write_bytes(b"\x00" * 24)
        with pytest.raises(UnrecognizedFormatError):
            open_capture(path)

    def test_big_endian_magic_rejected(self, tmp_path):
        path = tmp_path / "be.pcap"
        path.write_bytes(struct.pack(">IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 127))
        with pytest.raises(UnrecognizedFormatError):
            open_capture(path)

    def test_wrong_linktype_rejected(self, tmp_path):
        path = tmp_path / "eth.pcap"
        path.write_bytes(struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 1))
        with pytest.raises(LinkTypeError):
            open_capture(path)

    def test_timestamps_non_decreasing(self, tmp_path):
        rng = random.Random(8)
        records = sorted(
            (random_record(rng) for _ in range(50)), key=lambda r: r.timestamp_us
        )
        path = tmp_path / "ord.pcap"
        write_capture(path, records)
        out = list(open_capture(path))
        assert all(a.timestamp_us <= b.timestamp_us for a, b in zip(out, out[1:]))
