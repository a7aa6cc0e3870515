"""Waveform containers: the ETF2 binary format, a line-oriented ASCII form and
a minimal uncompressed SEED-like export.

Byte layouts are documented in ``docs/format.md``. The ETF2 layout is a
stand-in designed for this project; it keeps 2-byte samples but is not a
reconstruction of any historical file format.
"""
from __future__ import annotations

import datetime as _dt
import enum
import io
import re
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    BadChannelCount,
    BadLabelCode,
    BadMagic,
    BadVersion,
    InvalidEvent,
    ParseError,
    RaggedColumns,
    SampleCountOverflow,
    SampleOverflow,
    TrailingData,
    Truncated,
)

ETF2_MAGIC = b"ETF2"
ETF2_VERSION = 1
CHANNEL_CODES = ("Z", "N", "E")
I16_MIN, I16_MAX = -32768, 32767
MAX_RECORDS = 5

SEED_RECORD_ALIGN = 4096
SEED_HEADER_SIZE = 48
SEED_NETWORK = "SP"
SEED_ENCODING_INT32 = 3

# Station table of the SPF network: code -> (name, lon, lat, elevation m).
STATION_TABLE = {
    "TRO": ("Trojanovice", 18.174, 49.523, 435),
    "PST": ("Pstruzi", 18.326, 49.575, 461),
    "PAL": ("Palkovicke Hurky", 18.273, 49.640, 517),
    "CEL": ("Celadna", 18.333, 49.520, 454),
    "VYS": ("Vysni Lhoty", 18.476, 49.637, 456),
}

_EPOCH = _dt.datetime(1970, 1, 1, tzinfo=_dt.timezone.utc)
_MIN_MS = int((_dt.datetime(1, 1, 1, tzinfo=_dt.timezone.utc) - _EPOCH) / _dt.timedelta(milliseconds=1))
_MAX_MS = int((_dt.datetime(9999, 12, 31, 23, 59, 59, 999000, tzinfo=_dt.timezone.utc) - _EPOCH)
              / _dt.timedelta(milliseconds=1))
_STATION_RE = re.compile(r"^[A-Za-z0-9]{3,4}$")


class Label(enum.IntEnum):
    """Event class; the integer value is the on-disk label code."""

    TECTONIC = 0
    MINING_INDUCED = 1
    QUARRY_BLAST = 2
    OTHER = 3
    UNLABELED = 4

    @property
    def text(self) -> str:
        return _LABEL_TEXT[self]

    @classmethod
    def from_code(cls, code: int) -> "Label":
        try:
            return cls(code)
        except ValueError:
            raise BadLabelCode(f"label code {code} outside 0..4") from None

    @classmethod
    def parse(cls, token: str) -> "Label":
        key = token.strip().lower().replace("-", "").replace("_", "")
        if key.isdigit():
            return cls.from_code(int(key))
        for label, text in _LABEL_TEXT.items():
            if text.lower() == key:
                return label
        raise BadLabelCode(f"unknown label {token!r}")


_LABEL_TEXT = {
    Label.TECTONIC: "Tectonic",
    Label.MINING_INDUCED: "MiningInduced",
    Label.QUARRY_BLAST: "QuarryBlast",
    Label.OTHER: "Other",
    Label.UNLABELED: "Unlabeled",
}


def _as_samples(samples) -> np.ndarray:
    arr = np.array(samples)
    if arr.ndim != 1:
        raise InvalidEvent(f"samples must be 1-D, got shape {arr.shape}")
    if arr.dtype.kind in "iu":
        arr = arr.astype(np.int64)
    elif arr.dtype.kind == "f" or arr.size == 0:
        arr = arr.astype(np.float64)
    else:
        raise InvalidEvent(f"unsupported sample dtype {arr.dtype}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Channel:
    """One component: samples (integer counts or real amplitudes) and a rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_samples(self.samples))
        rate = float(self.sample_rate_hz)
        if not np.isfinite(rate) or rate <= 0:
            raise InvalidEvent(f"sample rate must be positive and finite, got {rate}")
        object.__setattr__(self, "sample_rate_hz", rate)

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return (self.sample_rate_hz == other.sample_rate_hz
                and self.samples.dtype.kind == other.samples.dtype.kind
                and np.array_equal(self.samples, other.samples))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class StationRecord:
    """Three-component record (Z, N, E) from one station."""

    station_code: str
    start_time_ms: int
    channels: tuple

    def __post_init__(self):
        code = self.station_code
        if not isinstance(code, str) or not _STATION_RE.match(code):
            raise InvalidEvent(f"station code must be 3-4 ASCII alphanumerics, got {code!r}")
        ms = int(self.start_time_ms)
        if not _MIN_MS <= ms <= _MAX_MS:
            raise InvalidEvent(f"start time {ms} ms out of representable range")
        object.__setattr__(self, "start_time_ms", ms)
        chans = tuple(self.channels)
        if len(chans) != 3:
            raise BadChannelCount(f"a record holds exactly 3 channels, got {len(chans)}")
        if len({c.sample_rate_hz for c in chans}) != 1:
            raise InvalidEvent(f"channels of {code} disagree on sample rate")
        if len({len(c) for c in chans}) != 1:
            raise InvalidEvent(f"channels of {code} differ in length")
        object.__setattr__(self, "channels", chans)

    @property
    def sample_rate_hz(self) -> float:
        return self.channels[0].sample_rate_hz

    @property
    def n_samples(self) -> int:
        return len(self.channels[0])

    @property
    def start_time(self) -> _dt.datetime:
        return _EPOCH + _dt.timedelta(milliseconds=self.start_time_ms)

    def matrix(self) -> np.ndarray:
        """Samples as an (N, 3) float array, columns Z, N, E."""
        return np.stack([c.samples for c in self.channels], axis=1).astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, StationRecord):
            return NotImplemented
        return (self.station_code == other.station_code
                and self.start_time_ms == other.start_time_ms
                and self.channels == other.channels)

    __hash__ = None


@dataclass(frozen=True)
class EventWaveformSet:
    """A catalogued event: label plus 1..5 station records."""

    event_id: str
    label: Label
    records: tuple = field(default=())

    def __post_init__(self):
        eid = self.event_id
        if not isinstance(eid, str) or not eid or any(ch.isspace() for ch in eid):
            raise InvalidEvent(f"event_id must be a non-empty string without whitespace, got {eid!r}")
        if not eid.isprintable() or len(eid.encode("utf-8")) > 255:
            raise InvalidEvent("event_id must be printable and at most 255 UTF-8 bytes")
        label = self.label if isinstance(self.label, Label) else Label.from_code(self.label)
        object.__setattr__(self, "label", label)
        recs = tuple(self.records)
        if not 1 <= len(recs) <= MAX_RECORDS:
            raise InvalidEvent(f"an event holds 1..{MAX_RECORDS} records, got {len(recs)}")
        codes = [r.station_code for r in recs]
        if len(set(codes)) != len(codes):
            raise InvalidEvent(f"duplicate station code in event {eid}: {codes}")
        object.__setattr__(self, "records", recs)

    __hash__ = None


def known_station(code: str, table=None) -> bool:
    return code in (STATION_TABLE if table is None else table)


# -- ETF2 binary ---------------------------------------------------------------

def _check_i16(samples: np.ndarray, where: str) -> np.ndarray:
    if samples.dtype.kind == "f":
        if not np.all(np.isfinite(samples)) or np.any(samples != np.round(samples)):
            raise SampleOverflow(f"{where}: samples are not integer counts")
    if samples.size and (samples.min() < I16_MIN or samples.max() > I16_MAX):
        bad = samples[(samples < I16_MIN) | (samples > I16_MAX)][0]
        raise SampleOverflow(f"{where}: sample {bad} outside int16 range")
    return samples.astype("<i2")


def encode_estf2(event: EventWaveformSet) -> bytes:
    """Serialize one event. Samples are stored as int16 little-endian."""
    out = io.BytesIO()
    eid = event.event_id.encode("utf-8")
    out.write(struct.pack("<4sBBBB", ETF2_MAGIC, ETF2_VERSION, int(event.label),
                          len(event.records), len(eid)))
    out.write(eid)
    for rec in event.records:
        try:
            out.write(struct.pack("<4sqfB", rec.station_code.encode("ascii").ljust(4),
                                  rec.start_time_ms, rec.sample_rate_hz, len(rec.channels)))
        except OverflowError:
            raise InvalidEvent(f"sample rate {rec.sample_rate_hz} exceeds float32") from None
        for code, ch in zip(CHANNEL_CODES, rec.channels):
            data = _check_i16(ch.samples, f"{event.event_id}/{rec.station_code}/{code}")
            out.write(struct.pack("<I", data.size))
            out.write(data.tobytes())
    return out.getvalue()


class _Reader:
    def __init__(self, buf: bytes, pos: int = 0):
        self.buf = memoryview(buf)
        self.pos = pos

    def take(self, n: int, what: str) -> memoryview:
        end = self.pos + n
        if end > len(self.buf):
            raise Truncated(f"{what}: need {n} bytes at offset {self.pos}, "
                            f"only {len(self.buf) - self.pos} left")
        view = self.buf[self.pos:end]
        self.pos = end
        return view

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _decode_one(reader: _Reader) -> EventWaveformSet:
    magic = bytes(reader.take(4, "magic"))
    if magic != ETF2_MAGIC:
        raise BadMagic(f"expected {ETF2_MAGIC!r}, got {magic!r}")
    version, label_code, n_records, id_len = reader.unpack("<BBBB", "header")
    if version != ETF2_VERSION:
        raise BadVersion(f"unsupported ETF2 version {version}")
    label = Label.from_code(label_code)
    try:
        event_id = bytes(reader.take(id_len, "event id")).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidEvent(f"event id is not UTF-8: {exc}") from None
    records = []
    for _ in range(n_records):
        raw_code, start_ms, rate, n_chan = reader.unpack("<4sqfB", "record header")
        if n_chan != 3:
            raise BadChannelCount(f"record declares {n_chan} channels, expected 3")
        try:
            code = raw_code.decode("ascii").rstrip(" ")
        except UnicodeDecodeError:
            raise InvalidEvent(f"station code {raw_code!r} is not ASCII") from None
        channels = []
        for _ in range(n_chan):
            (count,) = reader.unpack("<I", "channel length")
            if count == 0:
                raise InvalidEvent("channel with zero samples")
            data = np.frombuffer(reader.take(2 * count, "channel samples"), dtype="<i2")
            channels.append(Channel(data.astype(np.int64), rate))
        records.append(StationRecord(code, start_ms, tuple(channels)))
    return EventWaveformSet(event_id, label, tuple(records))


def decode_estf2(buf: bytes) -> EventWaveformSet:
    """Parse exactly one event; trailing bytes are an error."""
    reader = _Reader(bytes(buf))
    event = _decode_one(reader)
    if reader.pos != len(reader.buf):
        raise TrailingData(f"{len(reader.buf) - reader.pos} bytes after event end")
    return event


def iter_estf2(buf: bytes) -> Iterator[EventWaveformSet]:
    """Parse a concatenation of ETF2 events (the dataset file layout)."""
    reader = _Reader(bytes(buf))
    while reader.pos < len(reader.buf):
        yield _decode_one(reader)


def encode_many(events: Iterable[EventWaveformSet]) -> bytes:
    return b"".join(encode_estf2(e) for e in events)


# -- ASCII ---------------------------------------------------------------------

def format_time(ms: int) -> str:
    t = _EPOCH + _dt.timedelta(milliseconds=ms)
    # explicit fields: strftime does not zero-pad years below 1000 everywhere
    return (f"{t.year:04d}-{t.month:02d}-{t.day:02d}T{t.hour:02d}:{t.minute:02d}:"
            f"{t.second:02d}.{t.microsecond // 1000:03d}Z")


def parse_time(token: str) -> int:
    text = token.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    t = _dt.datetime.fromisoformat(text)
    if t.tzinfo is None:
        t = t.replace(tzinfo=_dt.timezone.utc)
    if t.microsecond % 1000:
        raise ValueError("start time finer than 1 ms")
    return (t - _EPOCH) // _dt.timedelta(milliseconds=1)


def export_ascii(event: EventWaveformSet) -> str:
    """Canonical text form; ``import_ascii`` accepts it and looser variants."""
    lines = [f"event_id {event.event_id}", f"label {event.label.text}"]
    for rec in event.records:
        lines.append(f"record {rec.station_code} {format_time(rec.start_time_ms)} "
                     f"{rec.sample_rate_hz!r}")
        cols = [c.samples for c in rec.channels]
        if any(c.dtype.kind == "f" for c in cols):
            raise InvalidEvent("ASCII export needs integer counts")
        lines.extend(f"{z} {n} {e}" for z, n, e in zip(*(c.tolist() for c in cols)))
    return "\n".join(lines) + "\n"


def _split_header(line: str):
    key, _, rest = line.partition(" ")
    return key.rstrip(":").lower(), rest.strip()


def _parse_events(text: str) -> Iterator[EventWaveformSet]:
    event_id = label = None
    records: list = []
    current = None  # (station, start_ms, rate, rows, lineno)

    def close_record():
        nonlocal current
        if current is None:
            return
        station, start_ms, rate, rows, lineno = current
        if not rows:
            raise ParseError(f"record {station} has no samples", lineno)
        cols = np.array(rows, dtype=np.int64).T
        try:
            records.append(StationRecord(station, start_ms,
                                         tuple(Channel(c, rate) for c in cols)))
        except InvalidEvent as exc:
            raise ParseError(str(exc), lineno) from None
        current = None

    def close_event(lineno):
        nonlocal event_id, label, records
        close_record()
        if event_id is None:
            return None
        if label is None:
            raise ParseError(f"event {event_id} has no label line", lineno)
        if not records:
            raise ParseError(f"event {event_id} has no records", lineno)
        try:
            ev = EventWaveformSet(event_id, label, tuple(records))
        except InvalidEvent as exc:
            raise ParseError(str(exc), lineno) from None
        event_id, label, records = None, None, []
        return ev

    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line[0].isalpha():
            key, rest = _split_header(line)
            if key == "event_id":
                done = close_event(lineno)
                if done is not None:
                    yield done
                if not rest or len(rest.split()) != 1:
                    raise ParseError("event_id needs exactly one token", lineno)
                event_id = rest
            elif key == "label":
                if event_id is None:
                    raise ParseError("label before event_id", lineno)
                try:
                    label = Label.parse(rest)
                except BadLabelCode as exc:
                    raise ParseError(str(exc), lineno) from None
            elif key == "record":
                if event_id is None:
                    raise ParseError("record before event_id", lineno)
                close_record()
                parts = rest.split()
                if len(parts) != 3:
                    raise ParseError("record line needs: station start_time rate", lineno)
                try:
                    start_ms = parse_time(parts[1])
                    rate = float(parts[2])
                except ValueError as exc:
                    raise ParseError(f"bad record header: {exc}", lineno) from None
                current = (parts[0], start_ms, rate, [], lineno)
            else:
                raise ParseError(f"unknown header {key!r}", lineno)
            continue
        if current is None:
            raise ParseError("sample row outside a record", lineno)
        tokens = line.split()
        if len(tokens) != 3:
            raise RaggedColumns(f"expected 3 columns Z N E, got {len(tokens)}", lineno)
        try:
            current[3].append([int(t) for t in tokens])
        except ValueError:
            raise ParseError(f"non-integer sample in {line!r}", lineno) from None
    done = close_event(lineno)
    if done is not None:
        yield done


def import_ascii(text: str) -> EventWaveformSet:
    events = list(_parse_events(text))
    if len(events) != 1:
        raise ParseError(f"expected exactly one event, found {len(events)}")
    return events[0]


def import_ascii_many(text: str) -> list:
    return list(_parse_events(text))


# -- SEED-like export ------------------------------------------------------------

def _seed_channel_record(seq: int, station: str, chan_id: str, start_ms: int,
                         rate: float, samples: np.ndarray) -> bytes:
    n = samples.size
    if n >= 2 ** 31:
        raise SampleCountOverflow(f"{n} samples do not fit the 4-byte count field")
    if samples.dtype.kind == "f":
        samples = np.round(samples)
    payload = samples.astype(">i4").tobytes()
    total = SEED_HEADER_SIZE + len(payload)
    total = -(-total // SEED_RECORD_ALIGN) * SEED_RECORD_ALIGN
    header = struct.pack(
        ">6scc5s2s3s2sqIdIH2s",
        f"{seq % 1000000:06d}".encode(), b"D", b" ",
        station.encode("ascii").ljust(5), b"  ", chan_id.encode("ascii"),
        SEED_NETWORK.encode("ascii"), start_ms, n, rate, total,
        SEED_ENCODING_INT32, b"\0\0")
    assert len(header) == SEED_HEADER_SIZE
    return (header + payload).ljust(total, b"\0")


def export_seedlike(event: EventWaveformSet, band: str = "SH") -> bytes:
    """One 4096-byte-aligned record per channel, uncompressed big-endian int32."""
    chunks = []
    seq = 1
    for rec in event.records:
        for code, ch in zip(CHANNEL_CODES, rec.channels):
            chunks.append(_seed_channel_record(seq, rec.station_code, band + code,
                                               rec.start_time_ms, rec.sample_rate_hz,
                                               ch.samples))
            seq += 1
    return b"".join(chunks)


def relabel(event: EventWaveformSet, label: Label) -> EventWaveformSet:
    return EventWaveformSet(event.event_id, label, event.records)


def check_unique_ids(events: Sequence[EventWaveformSet]) -> list:
    seen = set()
    for e in events:
        if e.event_id in seen:
            raise InvalidEvent(f"duplicate event_id {e.event_id!r} in dataset")
        seen.add(e.event_id)
    return list(events)


def read_events(path, fmt: str | None = None) -> list:
    """Load every event from an ETF2 (binary) or ASCII file; ids must be unique."""
    fmt = fmt or guess_format(path)
    if fmt == "estf2":
        with open(path, "rb") as fh:
            return check_unique_ids(list(iter_estf2(fh.read())))
    if fmt == "ascii":
        with open(path, encoding="utf-8") as fh:
            return check_unique_ids(import_ascii_many(fh.read()))
    raise ValueError(f"cannot read events from format {fmt!r}")


def write_events(path, events: Sequence[EventWaveformSet], fmt: str | None = None) -> None:
    fmt = fmt or guess_format(path)
    if fmt == "estf2":
        data = encode_many(events)
        with open(path, "wb") as fh:
            fh.write(data)
    elif fmt == "ascii":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("".join(export_ascii(e) for e in events))
    elif fmt == "seedlike":
        with open(path, "wb") as fh:
            for e in events:
                fh.write(export_seedlike(e))
    else:
        raise ValueError(f"cannot write events as {fmt!r}")


def guess_format(path) -> str:
    name = str(path).lower()
    if name.endswith((".txt", ".asc", ".ascii")):
        return "ascii"
    if name.endswith((".seed", ".mseed", ".sdl")):
        return "seedlike"
    return "estf2"
