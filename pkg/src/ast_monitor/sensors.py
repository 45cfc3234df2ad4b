"""Sensor byte-stream decoding and per-tick sample fusion.

Two inputs feed the head unit: NMEA 0183 sentences from the GPS module
(GGA for position/altitude, RMC for speed/validity) and ANT broadcast
messages from the heart-rate strap. Decoders are pure; the fuser folds
asynchronous readings into one sample per 1 Hz tick.
"""

from dataclasses import dataclass, replace
from typing import Iterator, List, Optional

KNOTS_TO_MPS = 0.514444

# readings older than this at tick time are treated as signal loss
HR_STALENESS_MS = 5000
FIX_STALENESS_MS = 3000

ANT_SYNC = 0xA4
ANT_BROADCAST_DATA = 0x4E


class NmeaError(ValueError):
    """A sentence that is framed like NMEA but cannot be trusted."""


@dataclass(frozen=True)
class GpsFix:
    """One decoded GPS position report."""

    timestamp_ms: int
    lat: float
    lon: float
    altitude_m: Optional[float] = None
    speed_mps: Optional[float] = None
    valid: bool = True


@dataclass(frozen=True)
class HeartRateReading:
    timestamp_ms: int
    bpm: int


@dataclass(frozen=True)
class SensorSample:
    """Fused per-tick reading; absent fields mean the signal was stale."""

    timestamp_ms: int
    hr_bpm: Optional[int] = None
    fix: Optional[GpsFix] = None


def nmea_checksum(body: bytes) -> int:
    """XOR of all bytes between '$' and '*'."""
    value = 0
    for b in body:
        value ^= b
    return value


def _coord_to_degrees(field: str, hemi: str, axis: str) -> float:
    # ddmm.mmmm (lat) / dddmm.mmmm (lon) -> signed decimal degrees
    dot = field.find(".")
    head = field if dot < 0 else field[:dot]
    if len(head) < 3:
        raise NmeaError(f"malformed field: coordinate {field!r}")
    try:
        degrees = int(field[: len(head) - 2])
        minutes = float(field[len(head) - 2 :])
    except ValueError:
        raise NmeaError(f"malformed field: coordinate {field!r}") from None
    if minutes >= 60.0:
        raise NmeaError(f"malformed field: minutes >= 60 in {field!r}")
    value = degrees + minutes / 60.0
    if axis == "lat":
        if hemi == "S":
            value = -value
        elif hemi != "N":
            raise NmeaError(f"malformed field: latitude hemisphere {hemi!r}")
        if not -90.0 <= value <= 90.0:
            raise NmeaError(f"out-of-range coordinate: lat {value}")
    else:
        if hemi == "W":
            value = -value
        elif hemi != "E":
            raise NmeaError(f"malformed field: longitude hemisphere {hemi!r}")
        if not -180.0 <= value <= 180.0:
            raise NmeaError(f"out-of-range coordinate: lon {value}")
    return value


def _float_field(field: str, what: str) -> float:
    try:
        return float(field)
    except ValueError:
        raise NmeaError(f"malformed field: {what} {field!r}") from None


def parse_nmea(line: bytes, timestamp_ms: int = 0) -> Optional[GpsFix]:
    """Parse one NMEA line into a GpsFix.

    Returns None for sentence types other than GGA/RMC and for sentences
    carrying no position. Raises NmeaError on checksum mismatch, malformed
    fields, or out-of-range coordinates; never raises anything else,
    whatever the input bytes.
    """
    try:
        text = line.decode("ascii").strip("\r\n ")
    except UnicodeDecodeError:
        raise NmeaError("malformed field: non-ASCII bytes") from None
    if not text.startswith("$"):
        raise NmeaError("malformed field: missing '$' framing")
    star = text.rfind("*")
    if star < 0 or len(text) < star + 3:
        raise NmeaError("malformed field: missing checksum")
    body, given = text[1:star], text[star + 1 : star + 3]
    if len(text) > star + 3:
        raise NmeaError("malformed field: trailing bytes after checksum")
    try:
        given_value = int(given, 16)
    except ValueError:
        raise NmeaError(f"malformed field: checksum digits {given!r}") from None
    if nmea_checksum(body.encode("ascii")) != given_value:
        raise NmeaError("checksum mismatch")

    fields = body.split(",")
    kind = fields[0][-3:] if len(fields[0]) >= 3 else ""
    if kind == "GGA":
        return _parse_gga(fields, timestamp_ms)
    if kind == "RMC":
        return _parse_rmc(fields, timestamp_ms)
    return None


def _parse_gga(f: List[str], timestamp_ms: int) -> Optional[GpsFix]:
    if len(f) < 10:
        raise NmeaError("malformed field: GGA needs 10+ fields")
    quality = f[6]
    if quality in ("", "0"):
        return None  # receiver reports no fix
    if not quality.isdigit():
        raise NmeaError(f"malformed field: fix quality {quality!r}")
    if not f[2] or not f[4]:
        raise NmeaError("malformed field: GGA fix without coordinates")
    lat = _coord_to_degrees(f[2], f[3], "lat")
    lon = _coord_to_degrees(f[4], f[5], "lon")
    altitude = _float_field(f[9], "altitude") if f[9] else None
    return GpsFix(timestamp_ms=timestamp_ms, lat=lat, lon=lon,
                  altitude_m=altitude, valid=True)


def _parse_rmc(f: List[str], timestamp_ms: int) -> Optional[GpsFix]:
    if len(f) < 8:
        raise NmeaError("malformed field: RMC needs 8+ fields")
    status = f[2]
    if status not in ("A", "V"):
        raise NmeaError(f"malformed field: RMC status {status!r}")
    if not f[3] or not f[5]:
        if status == "V":
            return None  # no fix, nothing usable
        raise NmeaError("malformed field: RMC active without coordinates")
    lat = _coord_to_degrees(f[3], f[4], "lat")
    lon = _coord_to_degrees(f[5], f[6], "lon")
    speed = None
    if f[7]:
        knots = _float_field(f[7], "speed")
        if knots < 0:
            raise NmeaError(f"malformed field: negative speed {knots}")
        speed = knots * KNOTS_TO_MPS
    return GpsFix(timestamp_ms=timestamp_ms, lat=lat, lon=lon,
                  speed_mps=speed, valid=(status == "A"))


class NmeaStreamDecoder:
    """Splits a GPS byte stream into lines and parses them, counting drops."""

    def __init__(self):
        self._buffer = b""
        self.dropped = 0

    def feed(self, data: bytes, timestamp_ms: int = 0) -> Iterator[GpsFix]:
        self._buffer += data
        while b"\n" in self._buffer:
            line, self._buffer = self._buffer.split(b"\n", 1)
            line = line.strip(b"\r")
            if not line:
                continue
            try:
                fix = parse_nmea(line, timestamp_ms)
            except NmeaError:
                self.dropped += 1
                continue
            if fix is not None:
                yield fix


def parse_ant_hr(payload: bytes, timestamp_ms: int = 0) -> Optional[HeartRateReading]:
    """Decode an 8-byte heart-rate broadcast payload.

    The computed heart rate lives in the final byte; 0 and 255 are the
    strap's invalid markers and yield None.
    """
    if len(payload) != 8:
        raise ValueError(f"broadcast payload must be 8 bytes, got {len(payload)}")
    bpm = payload[7]
    if bpm in (0, 255):
        return None
    return HeartRateReading(timestamp_ms=timestamp_ms, bpm=bpm)


class AntStreamDecoder:
    """Incremental decoder for the ANT serial framing around HR broadcasts.

    Messages look like: sync 0xA4, payload length, message id, payload,
    XOR checksum over everything before it. Only broadcast-data messages
    (id 0x4E) carrying the 8-byte HR payload are decoded; all other ids
    are skipped. Corrupt framing resynchronizes on the next sync byte.
    """

    def __init__(self):
        self._buffer = bytearray()
        self.bad_frames = 0

    def feed(self, data: bytes, timestamp_ms: int = 0) -> Iterator[HeartRateReading]:
        self._buffer.extend(data)
        while True:
            sync = self._buffer.find(ANT_SYNC)
            if sync < 0:
                self._buffer.clear()
                return
            if sync > 0:
                del self._buffer[:sync]
            if len(self._buffer) < 4:
                return  # need sync + len + id + at least the checksum
            length = self._buffer[1]
            total = 3 + length + 1
            if len(self._buffer) < total:
                return
            frame = bytes(self._buffer[:total])
            xor = 0
            for b in frame[:-1]:
                xor ^= b
            if xor != frame[-1]:
                self.bad_frames += 1
                del self._buffer[0]  # resync past this sync byte
                continue
            del self._buffer[:total]
            msg_id = frame[2]
            if msg_id == ANT_BROADCAST_DATA and length == 9:
                # payload = channel number + 8 data bytes
                reading = parse_ant_hr(frame[4:12], timestamp_ms)
                if reading is not None:
                    yield reading


class PlainHrDecoder:
    """Newline-delimited decimal bpm values, for hardware-free testing."""

    def __init__(self):
        self._buffer = b""
        self.dropped = 0

    def feed(self, data: bytes, timestamp_ms: int = 0) -> Iterator[HeartRateReading]:
        self._buffer += data
        while b"\n" in self._buffer:
            line, self._buffer = self._buffer.split(b"\n", 1)
            text = line.strip()
            if not text:
                continue
            try:
                bpm = int(text)
            except ValueError:
                self.dropped += 1
                continue
            if not 1 <= bpm <= 254:
                self.dropped += 1
                continue
            yield HeartRateReading(timestamp_ms=timestamp_ms, bpm=bpm)


class SampleFuser:
    """Folds asynchronous HR readings and fixes into one sample per tick.

    Holds the latest reading of each kind; at tick time a reading older
    than its staleness window is left out of the sample. Returns None
    when neither signal is fresh. Deterministic given the event order.
    """

    def __init__(self, hr_staleness_ms: int = HR_STALENESS_MS,
                 fix_staleness_ms: int = FIX_STALENESS_MS):
        self.hr_staleness_ms = hr_staleness_ms
        self.fix_staleness_ms = fix_staleness_ms
        self._hr: Optional[HeartRateReading] = None
        self._fix: Optional[GpsFix] = None
        self.invalid_fixes = 0

    def offer_hr(self, reading: HeartRateReading) -> None:
        self._hr = reading

    def offer_fix(self, fix: GpsFix) -> None:
        if not fix.valid:
            self.invalid_fixes += 1
            return
        # RMC and GGA alternate; keep altitude from the previous fix so a
        # speed-only sentence does not erase it
        if fix.altitude_m is None and self._fix is not None:
            fix = replace(fix, altitude_m=self._fix.altitude_m)
        if fix.speed_mps is None and self._fix is not None \
                and self._fix.timestamp_ms == fix.timestamp_ms:
            fix = replace(fix, speed_mps=self._fix.speed_mps)
        self._fix = fix

    def sample_at(self, tick_ms: int) -> Optional[SensorSample]:
        hr = self._hr
        if hr is not None and tick_ms - hr.timestamp_ms > self.hr_staleness_ms:
            hr = None
        fix = self._fix
        if fix is not None and tick_ms - fix.timestamp_ms > self.fix_staleness_ms:
            fix = None
        if hr is None and fix is None:
            return None
        return SensorSample(timestamp_ms=tick_ms,
                            hr_bpm=None if hr is None else hr.bpm,
                            fix=fix)
