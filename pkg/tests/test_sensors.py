import random

import pytest
from hypothesis import given, settings, strategies as st

from ast_monitor.sensors import (AntStreamDecoder, GpsFix, HeartRateReading,
                                 NmeaError, NmeaStreamDecoder, PlainHrDecoder,
                                 SampleFuser, nmea_checksum, parse_ant_hr,
                                 parse_nmea)

# ---------------------------------------------------------------- checksum


def test_checksum_single_byte():
    assert nmea_checksum(b"A") == 0x41


def test_checksum_self_cancel():
    assert nmea_checksum(b"AA") == 0x00


def test_checksum_matches_corpus(nmea_corpus):
    """Every corpus line's trailing hex either matches the byte-wise XOR or
    the parser rejects it as a checksum mismatch."""
    for line in nmea_corpus:
        text = line.decode("ascii", "replace")
        if not text.startswith("$") or "*" not in text:
            continue
        body, _, given = text[1:].rpartition("*")
        xor = 0
        for ch in body.encode("ascii", "replace"):
            xor ^= ch
        try:
            expected = int(given, 16)
        except ValueError:
            continue
        if xor != expected:
            with pytest.raises(NmeaError, match="checksum"):
                parse_nmea(line)


# ---------------------------------------------------------------- parse_nmea


def _oracle_parse(text):
    """Naive split-on-comma oracle for checksum-valid GGA/RMC sentences.

    Returns None for no-fix or ignored types, "error" when fields are
    unusable, else a dict of expected values.
    """
    body = text[1:text.rfind("*")]
    f = body.split(",")
    kind = f[0][-3:]

    def coord(v, hemi, lat):
        dot = v.find(".")
        head = v if dot < 0 else v[:dot]
        if len(head) < 3:
            return "error"
        try:
            deg = int(v[:len(head) - 2])
            minutes = float(v[len(head) - 2:])
        except ValueError:
            return "error"
        if minutes >= 60:
            return "error"
        out = deg + minutes / 60
        if lat:
            if hemi == "S":
                out = -out
            elif hemi != "N":
                return "error"
            if abs(out) > 90:
                return "error"
        else:
            if hemi == "W":
                out = -out
            elif hemi != "E":
                return "error"
            if abs(out) > 180:
                return "error"
        return out

    if kind == "GGA":
        if len(f) < 10:
            return "error"
        if f[6] in ("", "0"):
            return None
        if not f[2] or not f[4]:
            return "error"
        lat = coord(f[2], f[3], True)
        lon = coord(f[4], f[5], False)
        if "error" in (lat, lon):
            return "error"
        alt = float(f[9]) if f[9] else None
        return {"lat": lat, "lon": lon, "altitude_m": alt,
                "speed_mps": None, "valid": True}
    if kind == "RMC":
        if len(f) < 8:
            return "error"
        if f[2] not in ("A", "V"):
            return "error"
        if not f[3] or not f[5]:
            return None if f[2] == "V" else "error"
        lat = coord(f[3], f[4], True)
        lon = coord(f[5], f[6], False)
        if "error" in (lat, lon):
            return "error"
        speed = float(f[7]) * 0.514444 if f[7] else None
        return {"lat": lat, "lon": lon, "altitude_m": None,
                "speed_mps": speed, "valid": f[2] == "A"}
    return None


def _checksum_ok(text):
    if not text.startswith("$") or "*" not in text:
        return False
    body, _, given = text[1:].rpartition("*")
    if len(given) != 2:
        return False
    try:
        value = int(given, 16)
    except ValueError:
        return False
    xor = 0
    for ch in body.encode("ascii", "replace"):
        xor ^= ch
    return xor == value


def test_corpus_against_oracle(nmea_corpus):
    checked = 0
    for line in nmea_corpus:
        text = line.decode("ascii", "replace")
        if not _checksum_ok(text):
            with pytest.raises(NmeaError):
                parse_nmea(line)
            continue
        expected = _oracle_parse(text)
        if expected == "error":
            with pytest.raises(NmeaError):
                parse_nmea(line)
        else:
            fix = parse_nmea(line)
            if expected is None:
                assert fix is None
            else:
                assert fix is not None
                assert fix.lat == pytest.approx(expected["lat"], abs=1e-12)
                assert fix.lon == pytest.approx(expected["lon"], abs=1e-12)
                assert fix.altitude_m == expected["altitude_m"]
                if expected["speed_mps"] is None:
                    assert fix.speed_mps is None
                else:
                    assert fix.speed_mps == pytest.approx(expected["speed_mps"])
                assert fix.valid == expected["valid"]
        checked += 1
    assert checked >= 15
    assert len(nmea_corpus) >= 20


def test_zero_minutes_is_exact_degrees():
    fix = parse_nmea(b"$GPGGA,120000.00,4600.0000,N,01500.0000,E,1,08,0.9,"
                     b"300.0,M,46.9,M,,*60")
    assert fix.lat == 46.0
    assert fix.lon == 15.0


def test_thirty_minutes_is_half_degree():
    fix = parse_nmea(b"$GPGGA,120001.00,4630.0000,N,01500.0000,E,1,08,0.9,"
                     b"305.5,M,46.9,M,,*62")
    assert fix.lat == 46.5
    assert fix.altitude_m == 305.5


def test_rmc_speed_knots_to_mps():
    fix = parse_nmea(b"$GPRMC,120002.00,A,4630.5000,N,01459.5000,E,5.80,83.5,"
                     b"010120,,,A*56")
    assert fix.speed_mps == pytest.approx(5.80 * 0.514444)
    assert fix.valid


def test_southern_western_hemispheres():
    fix = parse_nmea(b"$GPGGA,120004.00,4600.0000,S,01500.0000,W,1,08,0.9,"
                     b"12.3,M,46.9,M,,*58")
    assert fix.lat == -46.0
    assert fix.lon == -15.0


def test_corrupted_checksum_rejected():
    with pytest.raises(NmeaError, match="checksum mismatch"):
        parse_nmea(b"$GPGGA,120000.00,4600.0000,N,01500.0000,E,1,08,0.9,"
                   b"300.0,M,46.9,M,,*61")


def test_other_sentences_ignored():
    assert parse_nmea(b"$GPVTG,83.5,T,,M,5.80,N,10.7,K,A*38") is None


@given(st.binary(max_size=120))
@settings(max_examples=500)
def test_fuzz_only_nmea_errors(data):
    try:
        fix = parse_nmea(data)
    except NmeaError:
        return
    assert fix is None or isinstance(fix, GpsFix)


def test_fuzz_corrupted_valid_sentences(nmea_corpus):
    """Flipping any byte of a checksum-valid sentence never yields an
    accepted sentence with a bad checksum."""
    rng = random.Random(4242)
    valid = [l for l in nmea_corpus if _checksum_ok(l.decode("ascii", "replace"))]
    for _ in range(3000):
        line = bytearray(rng.choice(valid))
        pos = rng.randrange(len(line))
        line[pos] ^= 1 << rng.randrange(8)
        data = bytes(line)
        try:
            fix = parse_nmea(data)
        except NmeaError:
            continue
        # accepted: the mutated line must still have a coherent checksum
        assert _checksum_ok(data.decode("ascii", "replace"))
        assert fix is None or isinstance(fix, GpsFix)


def test_stream_decoder_counts_drops():
    decoder = NmeaStreamDecoder()
    data = (b"$GPGGA,120000.00,4600.0000,N,01500.0000,E,1,08,0.9,300.0,M,46.9,M,,*60\r\n"
            b"garbage line\n"
            b"$GPGGA,120001.00,4630.0000,N,01500.0000,E,1,08,0.9,305.5,M,46.9,M,,*62\n")
    fixes = list(decoder.feed(data, 1000))
    assert [f.lat for f in fixes] == [46.0, 46.5]
    assert decoder.dropped == 1


def test_stream_decoder_handles_split_lines():
    decoder = NmeaStreamDecoder()
    full = b"$GPGGA,120000.00,4600.0000,N,01500.0000,E,1,08,0.9,300.0,M,46.9,M,,*60\n"
    out = list(decoder.feed(full[:30]))
    out += list(decoder.feed(full[30:]))
    assert len(out) == 1


# ---------------------------------------------------------------- ANT


def test_ant_payload_byte_seven():
    reading = parse_ant_hr(bytes([0x04, 0, 0, 0, 0, 0, 0x1E, 150]))
    assert reading.bpm == 150


@pytest.mark.parametrize("last", [0, 255])
def test_ant_invalid_sentinels(last):
    assert parse_ant_hr(bytes([0x04, 0, 0, 0, 0, 0, 0x1E, last])) is None


def test_ant_wrong_length():
    with pytest.raises(ValueError, match="8 bytes"):
        parse_ant_hr(bytes(7))


@given(st.binary(min_size=8, max_size=8))
def test_ant_byte_rule_property(payload):
    reading = parse_ant_hr(payload)
    if 1 <= payload[7] <= 254:
        assert reading.bpm == payload[7]
    else:
        assert reading is None


def _ant_frame(bpm, msg_id=0x4E):
    frame = bytes([0xA4, 9, msg_id, 0, 0x04, 0xFF, 0xFF, 0xFF, 0, 0, 7, bpm])
    xor = 0
    for b in frame:
        xor ^= b
    return frame + bytes([xor])


def test_ant_stream_roundtrip():
    decoder = AntStreamDecoder()
    data = _ant_frame(150) + _ant_frame(151) + _ant_frame(0)
    readings = list(decoder.feed(data, 500))
    assert [r.bpm for r in readings] == [150, 151]


def test_ant_stream_skips_other_ids_and_resyncs():
    decoder = AntStreamDecoder()
    bad = bytearray(_ant_frame(150))
    bad[-1] ^= 0xFF  # corrupt checksum
    data = bytes(bad) + _ant_frame(90, msg_id=0x40) + _ant_frame(140)
    readings = list(decoder.feed(data))
    assert [r.bpm for r in readings] == [140]
    assert decoder.bad_frames >= 1


def test_ant_stream_partial_feed():
    decoder = AntStreamDecoder()
    frame = _ant_frame(133)
    out = list(decoder.feed(frame[:5]))
    out += list(decoder.feed(frame[5:]))
    assert [r.bpm for r in out] == [133]


def test_plain_decoder():
    decoder = PlainHrDecoder()
    readings = list(decoder.feed(b"150\n151\nxx\n0\n300\n152\n", 100))
    assert [r.bpm for r in readings] == [150, 151, 152]
    assert decoder.dropped == 3


# ---------------------------------------------------------------- fuse


def _fix(ts, lat=46.0, lon=15.0, **kw):
    return GpsFix(timestamp_ms=ts, lat=lat, lon=lon, **kw)


def test_fuse_both_fresh():
    fuser = SampleFuser()
    fuser.offer_hr(HeartRateReading(timestamp_ms=200, bpm=150))
    fuser.offer_fix(_fix(700))
    sample = fuser.sample_at(1000)
    assert sample.hr_bpm == 150
    assert sample.fix.lat == 46.0


def test_fuse_stale_hr_absent():
    fuser = SampleFuser()
    fuser.offer_hr(HeartRateReading(timestamp_ms=200, bpm=150))
    fuser.offer_fix(_fix(5500))
    sample = fuser.sample_at(6000)
    assert sample.hr_bpm is None
    assert sample.fix is not None


def test_fuse_stale_fix_absent():
    fuser = SampleFuser()
    fuser.offer_hr(HeartRateReading(timestamp_ms=5800, bpm=142))
    fuser.offer_fix(_fix(1000))
    sample = fuser.sample_at(6000)
    assert sample.hr_bpm == 142
    assert sample.fix is None


def test_fuse_nothing_fresh_returns_none():
    fuser = SampleFuser()
    fuser.offer_hr(HeartRateReading(timestamp_ms=0, bpm=150))
    assert fuser.sample_at(10_000) is None


def test_fuse_drops_invalid_fixes():
    fuser = SampleFuser()
    fuser.offer_fix(_fix(500, valid=False))
    assert fuser.sample_at(1000) is None
    assert fuser.invalid_fixes == 1


def test_fuse_keeps_altitude_across_rmc():
    fuser = SampleFuser()
    fuser.offer_fix(_fix(500, altitude_m=320.0))
    fuser.offer_fix(_fix(600, speed_mps=4.0))  # RMC: no altitude
    sample = fuser.sample_at(1000)
    assert sample.fix.altitude_m == 320.0
    assert sample.fix.speed_mps == 4.0


events = st.lists(
    st.one_of(
        st.tuples(st.just("hr"), st.integers(0, 20_000), st.integers(1, 254)),
        st.tuples(st.just("fix"), st.integers(0, 20_000), st.integers(1, 254)),
    ),
    max_size=40,
)


@given(events)
def test_fuse_matches_replay_oracle(evs):
    """Fusing an ordered event log equals a naive single-pass replay."""
    fuser = SampleFuser()
    last_hr = None
    last_fix = None
    out = []
    expected = []
    ticks = [1000, 3000, 6000, 9000, 12_000, 20_000]
    evs = sorted(evs, key=lambda e: e[1])
    ti = 0
    for kind, ts, value in evs + [("end", 10**9, 0)]:
        while ti < len(ticks) and ticks[ti] <= ts:
            t = ticks[ti]
            ti += 1
            out.append(fuser.sample_at(t))
            hr = last_hr if last_hr and t - last_hr[0] <= 5000 else None
            fx = last_fix if last_fix and t - last_fix[0] <= 3000 else None
            if hr is None and fx is None:
                expected.append(None)
            else:
                expected.append((hr[1] if hr else None, fx[1] if fx else None))
        if kind == "hr":
            fuser.offer_hr(HeartRateReading(timestamp_ms=ts, bpm=value))
            last_hr = (ts, value)
        elif kind == "fix":
            fuser.offer_fix(_fix(ts, lat=float(value) / 10))
            last_fix = (ts, float(value) / 10)
    got = [None if s is None else (s.hr_bpm, s.fix.lat if s.fix else None)
           for s in out]
    assert got == expected
