"""Turn station records into fixed-shape N x 3 feature sequences.

Stages run in the order trim -> z-score -> FFT magnitude, each optional.
"""
from __future__ import annotations

import csv
import io
import struct
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .codec import Label, EventWaveformSet
from .errors import CodecError, EmptyChannel, EmptyDataset, ShapeMismatch, TrimPaddingWarning
from .fft import rfft_magnitude

TIME = "time"
FREQUENCY = "frequency"

FSEQ_MAGIC = b"FSEQ"
FSEQ_VERSION = 1


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    values: np.ndarray
    domain: str = TIME
    event_id: str = ""
    station_code: str = ""
    label: Label = Label.UNLABELED
    padded: int = 0  # zero rows appended by trimming to a longer resolved length

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 1:
            raise ShapeMismatch(f"feature sequence must be N x 3 with N >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature sequence contains NaN or Inf")
        if self.domain not in (TIME, FREQUENCY):
            raise ValueError(f"unknown domain {self.domain!r}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "label", Label(self.label))

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class PreprocessConfig:
    use_trim: bool = False
    use_zscore: bool = True
    use_fft: bool = True
    trim_length: int | None = None  # None: resolve to the shortest training sequence

    def __post_init__(self):
        if self.trim_length is not None and self.trim_length < 1:
            raise ValueError("trim_length must be positive")

    @property
    def tag(self) -> str:
        parts = [s for s, on in (("trim", self.use_trim), ("zscore", self.use_zscore),
                                 ("fft", self.use_fft)) if on]
        return "+".join(parts) or "raw"


PUBLISHED_DEFAULT = PreprocessConfig(use_trim=False, use_zscore=True, use_fft=True)


def _fit_length(seq: FeatureSequence, length: int) -> FeatureSequence:
    n = len(seq)
    if n >= length:
        return replace(seq, values=seq.values[:length])
    out = np.zeros((length, 3))
    out[:n] = seq.values
    return replace(seq, values=out, padded=seq.padded + length - n)


def trim_to_shortest(ds: Sequence[FeatureSequence], trim_length: int | None = None):
    """Cut every sequence to a common length.

    With ``trim_length=None`` the length is the dataset minimum; pass the
    returned length back in to apply the same cut to held-out data. Sequences
    shorter than an explicit length are zero-padded with a warning.
    """
    if not ds:
        raise EmptyDataset("cannot trim an empty dataset")
    length = min(len(s) for s in ds) if trim_length is None else int(trim_length)
    short = [s for s in ds if len(s) < length]
    if short:
        first = short[0]
        warnings.warn(f"{len(short)} sequence(s) zero-padded to {length} rows "
                      f"(first: {first.event_id}/{first.station_code}, {len(first)} rows)",
                      TrimPaddingWarning, stacklevel=2)
    return [_fit_length(s, length) for s in ds], length


def zscore(seq: FeatureSequence) -> FeatureSequence:
    v = seq.values
    mean = v.mean(axis=0)
    std = v.std(axis=0)
    varying = (v.max(axis=0) > v.min(axis=0)) & (std > 0)
    safe = np.where(varying, std, 1.0)
    out = np.where(varying, (v - mean) / safe, 0.0)
    return replace(seq, values=out)


def fft_magnitude(seq: FeatureSequence) -> FeatureSequence:
    if seq.domain != TIME:
        raise ValueError("fft_magnitude expects a time-domain sequence")
    return replace(seq, values=rfft_magnitude(seq.values, axis=0), domain=FREQUENCY)


def record_sequences(e: EventWaveformSet) -> list:
    seqs = []
    for ri, rec in enumerate(e.records):
        if rec.n_samples == 0:
            raise EmptyChannel(record=ri, channel="Z")
        seqs.append(FeatureSequence(rec.matrix(), TIME, e.event_id, rec.station_code, e.label))
    return seqs


def _finish(seqs, cfg: PreprocessConfig):
    if cfg.use_zscore:
        seqs = [zscore(s) for s in seqs]
    if cfg.use_fft:
        seqs = [fft_magnitude(s) for s in seqs]
    return seqs


def build_features(e: EventWaveformSet, cfg: PreprocessConfig = PUBLISHED_DEFAULT,
                   trim_length: int | None = None) -> list:
    """One feature sequence per station record of ``e``.

    When trimming without a resolved length, the event's own shortest record
    sets the cut; dataset-wide trimming goes through :func:`build_dataset`.
    """
    seqs = record_sequences(e)
    if cfg.use_trim:
        seqs, _ = trim_to_shortest(seqs, trim_length or cfg.trim_length)
    return _finish(seqs, cfg)


def build_dataset(events: Sequence[EventWaveformSet], cfg: PreprocessConfig = PUBLISHED_DEFAULT,
                  trim_length: int | None = None):
    """Features for many events; returns (sequences, resolved trim length or None).

    Resolve the trim length on the training events, then pass it for test events.
    """
    seqs = [s for e in events for s in record_sequences(e)]
    resolved = None
    if cfg.use_trim:
        seqs, resolved = trim_to_shortest(seqs, trim_length or cfg.trim_length)
    return _finish(seqs, cfg), resolved


def stack(seqs: Sequence[FeatureSequence], length: int | None = None) -> np.ndarray:
    """(M, L, 3) array; shorter sequences zero-padded at the tail, longer ones cut.

    ``length`` defaults to the longest sequence, which is how FFT spectra of
    unequal records are brought to a common width.
    """
    if not seqs:
        raise EmptyDataset("nothing to stack")
    length = max(len(s) for s in seqs) if length is None else length
    out = np.zeros((len(seqs), length, 3))
    for i, s in enumerate(seqs):
        n = min(len(s), length)
        out[i, :n] = s.values[:n]
    return out


def flatten_columns(x: np.ndarray) -> np.ndarray:
    """(M, L, 3) -> (M, 3L) with contiguous Z, N, E blocks, for tree models."""
    return np.ascontiguousarray(x.transpose(0, 2, 1)).reshape(x.shape[0], -1)


# -- FeatureSequence files -------------------------------------------------------

def sequence_to_csv(seq: FeatureSequence) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["z", "n", "e"])
    writer.writerows(seq.values.tolist())
    return buf.getvalue()


def pack_fseq(seqs: Sequence[FeatureSequence]) -> bytes:
    parts = [struct.pack("<4sBI", FSEQ_MAGIC, FSEQ_VERSION, len(seqs))]
    for s in seqs:
        eid = s.event_id.encode("utf-8")
        sta = s.station_code.encode("ascii")
        parts.append(struct.pack("<BBB", s.domain == FREQUENCY, int(s.label), len(eid)) + eid)
        parts.append(struct.pack("<B", len(sta)) + sta)
        parts.append(struct.pack("<II", s.values.shape[0], 3))
        parts.append(s.values.astype("<f8").tobytes())
    return b"".join(parts)


def unpack_fseq(buf: bytes) -> list:
    mv = memoryview(buf)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(mv):
            raise CodecError("FSEQ buffer truncated")
        out = mv[pos:pos + n]
        pos += n
        return out

    magic, version, count = struct.unpack("<4sBI", take(9))
    if magic != FSEQ_MAGIC or version != FSEQ_VERSION:
        raise CodecError("not an FSEQ v1 file")
    seqs = []
    for _ in range(count):
        is_freq, label, id_len = struct.unpack("<BBB", take(3))
        eid = bytes(take(id_len)).decode("utf-8")
        (sta_len,) = struct.unpack("<B", take(1))
        sta = bytes(take(sta_len)).decode("ascii")
        n, cols = struct.unpack("<II", take(8))
        values = np.frombuffer(take(8 * n * cols), dtype="<f8").reshape(n, cols)
        seqs.append(FeatureSequence(values.copy(), FREQUENCY if is_freq else TIME, eid, sta,
                                    Label.from_code(label)))
    if pos != len(mv):
        raise CodecError("trailing bytes after FSEQ payload")
    return seqs
