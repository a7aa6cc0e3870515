"""Amplitude-domain corruption checks for triggered records.

Three heuristics run on every channel:

* clipping: some sample reaches full scale;
* high fraction: more than ``high_frac_share`` of the samples exceed
  ``high_frac_level * clip_level`` in absolute value;
* imbalance: at least ``below_mean_share`` of the samples lie strictly below the
  channel's mean absolute amplitude (a weak trace with a few large spikes).

An event is corrupted when any channel of any record trips any heuristic.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .codec import CHANNEL_CODES, I16_MAX, Channel, EventWaveformSet
from .errors import EmptyChannel


@dataclass(frozen=True)
class QcThresholds:
    clip_level: int = I16_MAX
    high_frac_level: float = 0.8
    high_frac_share: float = 0.35
    below_mean_share: float = 0.95

    def __post_init__(self):
        if self.clip_level <= 0:
            raise ValueError("clip_level must be positive")
        for name in ("high_frac_level", "high_frac_share", "below_mean_share"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie strictly between 0 and 1, got {value}")


def _abs_samples(ch) -> np.ndarray:
    samples = ch.samples if isinstance(ch, Channel) else np.asarray(ch)
    if samples.size == 0:
        raise EmptyChannel()
    # int64 (or float64) avoids the |-32768| overflow of int16
    return np.abs(samples.astype(np.float64 if samples.dtype.kind == "f" else np.int64))


def check_clipping(ch, t: QcThresholds = QcThresholds()) -> bool:
    return bool(np.any(_abs_samples(ch) >= t.clip_level))


def check_high_fraction(ch, t: QcThresholds = QcThresholds()) -> bool:
    a = _abs_samples(ch)
    # dividing keeps the verdict invariant under joint rescaling of samples and clip level
    count = np.count_nonzero(a / t.clip_level > t.high_frac_level)
    return count / a.size > t.high_frac_share


def check_imbalance(ch, t: QcThresholds = QcThresholds()) -> bool:
    a = _abs_samples(ch)
    if a.dtype.kind == "i":
        # exact integer form of |x| < mean(|x|)
        below = np.count_nonzero(a * a.size < int(a.sum()))
    else:
        below = np.count_nonzero(a < a.mean())
    return below / a.size >= t.below_mean_share


def is_dead(ch) -> bool:
    """All-zero channel. Reported as a warning only, never as corruption."""
    return not np.any(_abs_samples(ch))


@dataclass(frozen=True)
class ChannelVerdict:
    record_index: int
    station: str
    channel: str
    clipped: bool
    high_fraction: bool
    imbalance: bool
    dead: bool = False

    @property
    def corrupted(self) -> bool:
        return self.clipped or self.high_fraction or self.imbalance


@dataclass(frozen=True)
class QcReport:
    event_id: str
    verdicts: tuple = field(default=())

    @property
    def event_corrupted(self) -> bool:
        return any(v.corrupted for v in self.verdicts)

    @property
    def dead_channels(self) -> list:
        return [v for v in self.verdicts if v.dead]

    def rows(self):
        corrupted = self.event_corrupted
        for v in self.verdicts:
            yield (self.event_id, v.station, v.channel, v.clipped, v.high_fraction,
                   v.imbalance, corrupted)


def qc_event(e: EventWaveformSet, t: QcThresholds = QcThresholds()) -> QcReport:
    verdicts = []
    for ri, rec in enumerate(e.records):
        for code, ch in zip(CHANNEL_CODES, rec.channels):
            try:
                verdicts.append(ChannelVerdict(
                    ri, rec.station_code, code,
                    check_clipping(ch, t), check_high_fraction(ch, t),
                    check_imbalance(ch, t), is_dead(ch)))
            except EmptyChannel:
                raise EmptyChannel(record=ri, channel=code) from None
    return QcReport(e.event_id, tuple(verdicts))


REPORT_COLUMNS = ("event_id", "station", "channel", "clipped", "high_fraction",
                  "imbalance", "event_corrupted")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for rep in reports:
        for row in rep.rows():
            writer.writerow([str(x).lower() if isinstance(x, bool) else x for x in row])
    return buf.getvalue()


def filter_clean(events, t: QcThresholds = QcThresholds()):
    """Split events into (clean, corrupted) lists."""
    clean, bad = [], []
    for e in events:
        (bad if qc_event(e, t).event_corrupted else clean).append(e)
    return clean, bad
