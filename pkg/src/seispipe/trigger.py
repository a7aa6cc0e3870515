"""STA/LTA triggering for cutting continuous three-component streams into
event windows, the way a triggered recorder would have stored them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import Channel, EventWaveformSet, Label, StationRecord
from .errors import TooShort

LTA_FLOOR = 1e-12


@dataclass(frozen=True)
class TriggerConfig:
    sta_window_s: float = 1.0
    lta_window_s: float = 30.0
    on_ratio: float = 3.0
    off_ratio: float = 1.5
    pre_s: float = 5.0
    post_s: float = 20.0

    def __post_init__(self):
        if self.sta_window_s <= 0 or self.lta_window_s <= self.sta_window_s:
            raise ValueError("need 0 < sta_window_s < lta_window_s")
        if self.on_ratio <= 1 or not 0 < self.off_ratio < self.on_ratio:
            raise ValueError("need on_ratio > 1 and 0 < off_ratio < on_ratio")
        if self.pre_s < 0 or self.post_s < 0:
            raise ValueError("padding must be non-negative")

    def window_samples(self, rate: float) -> tuple:
        ns = max(1, int(round(self.sta_window_s * rate)))
        nl = max(ns + 1, int(round(self.lta_window_s * rate)))
        return ns, nl


def _trailing_mean(cs: np.ndarray, n: int) -> np.ndarray:
    # cs has a leading zero: mean of a[i-n+1 .. i] for i >= n-1
    return (cs[n:] - cs[:-n]) / n


def sta_lta_ratio(ch: Channel, cfg: TriggerConfig = TriggerConfig()) -> np.ndarray:
    """Ratio of trailing short- and long-window means of |x|.

    Same length as the input; the first LTA window is warm-up and holds 0.
    """
    x = np.abs(np.asarray(ch.samples, dtype=np.float64))
    ns, nl = cfg.window_samples(ch.sample_rate_hz)
    if x.size <= nl:
        raise TooShort(f"{x.size} samples, need more than the {nl}-sample LTA window")
    cs = np.concatenate(([0.0], np.cumsum(x)))
    sta = _trailing_mean(cs, ns)[nl - ns:]
    lta = np.maximum(_trailing_mean(cs, nl), LTA_FLOOR)
    ratio = np.zeros_like(x)
    ratio[nl - 1:] = sta / lta
    ratio[:nl] = 0.0
    return ratio


def _merge(windows):
    merged = []
    for start, end in windows:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def detect_events(stream: StationRecord, cfg: TriggerConfig = TriggerConfig()) -> list:
    """Half-open sample windows ``[start, end)`` around triggered segments.

    A segment opens when any channel's ratio reaches ``on_ratio`` and closes
    once every channel is below ``off_ratio``; padding is added before merging.
    """
    ratio = np.max([sta_lta_ratio(ch, cfg) for ch in stream.channels], axis=0)
    n = ratio.size
    rate = stream.sample_rate_hz
    pre = int(round(cfg.pre_s * rate))
    post = int(round(cfg.post_s * rate))

    on_idx = np.flatnonzero(ratio >= cfg.on_ratio)
    off_idx = np.flatnonzero(ratio < cfg.off_ratio)
    segments = []
    pos = 0
    while True:
        k = np.searchsorted(on_idx, pos)
        if k == on_idx.size:
            break
        start = int(on_idx[k])
        m = np.searchsorted(off_idx, start)
        end = n if m == off_idx.size else int(off_idx[m])
        segments.append((start, end))
        if end == n:
            break
        pos = end
    return _merge((max(0, s - pre), min(n, e + post)) for s, e in segments)


def cut_windows(stream: StationRecord, windows, event_prefix: str,
                label: Label = Label.UNLABELED) -> list:
    """One single-record event per window, with the start time shifted accordingly."""
    rate = stream.sample_rate_hz
    events = []
    for k, (start, end) in enumerate(windows):
        chans = tuple(Channel(c.samples[start:end], rate) for c in stream.channels)
        offset_ms = int(round(start * 1000.0 / rate))
        rec = StationRecord(stream.station_code, stream.start_time_ms + offset_ms, chans)
        events.append(EventWaveformSet(f"{event_prefix}-{k:04d}", label, (rec,)))
    return events
