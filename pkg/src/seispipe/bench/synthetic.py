"""Synthetic two-class triggered events for desk-scale experiments.

Tectonic-like events ring at low frequency with a slow exponential coda;
mining-like events are short high-frequency bursts. Each event is seen by
the five stations of the default station table with independent amplitude,
delay, phase and noise.
"""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass

import numpy as np

from ..codec import I16_MAX, STATION_TABLE, Channel, EventWaveformSet, Label, StationRecord
from ..errors import BadSpec

CLIPPED = "clipped"
HIGH_FRACTION = "high_fraction"
IMBALANCE = "imbalance"
DEFECT_KINDS = (CLIPPED, HIGH_FRACTION, IMBALANCE)

_BASE_MS = int(_dt.datetime(1995, 1, 1, tzinfo=_dt.timezone.utc).timestamp() * 1000)


@dataclass(frozen=True)
class ClassSpec:
    label: Label
    freq_hz: tuple      # dominant frequency range
    decay_s: tuple      # envelope e-folding time range
    rise_s: float


TECTONIC_LIKE = ClassSpec(Label.TECTONIC, (2.0, 6.0), (0.6, 1.5), 0.08)
MINING_LIKE = ClassSpec(Label.MINING_INDUCED, (11.0, 24.0), (0.06, 0.18), 0.01)


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple = (TECTONIC_LIKE, MINING_LIKE)
    sample_rate_hz: float = 125.0
    min_samples: int = 48
    max_samples: int = 64
    peak_counts: tuple = (600.0, 9000.0)
    noise_fraction: tuple = (0.06, 0.12)
    defect_rate: float = 0.0
    stations: tuple = tuple(STATION_TABLE)

    def __post_init__(self):
        if not 20 <= self.min_samples <= self.max_samples:
            raise BadSpec("need 20 <= min_samples <= max_samples")
        if not 0.0 <= self.defect_rate <= 1.0:
            raise BadSpec("defect_rate must lie in [0, 1]")
        if not 1 <= len(self.stations) <= 5:
            raise BadSpec("between one and five stations")
        if len(self.classes) < 1 or self.peak_counts[1] >= 0.8 * I16_MAX:
            raise BadSpec("peak amplitude must stay below the high-amplitude level")


def _trace(rng, cls: ClassSpec, n, rate, f0, decay, peak, noise_frac):
    t = np.arange(n) / rate
    onset = rng.uniform(0.05, 0.2) * n / rate
    tt = np.clip(t - onset, 0.0, None)
    env = (1.0 - np.exp(-tt / cls.rise_s)) * np.exp(-tt / decay) * (t >= onset)
    sig = np.zeros(n)
    for k, w in enumerate((1.0, 0.45, 0.25)):
        f = f0 * rng.uniform(0.85, 1.15) * (1.0 + 0.5 * k)
        sig += w * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    sig *= env
    sig *= peak / max(np.abs(sig).max(), 1e-9)
    sig += rng.normal(0.0, noise_frac * peak, n)
    return np.round(sig).astype(np.int64)


def _plant(rng, samples: np.ndarray, kind: str) -> np.ndarray:
    s = samples.copy()
    n = s.size
    if kind == CLIPPED:
        at = int(np.argmax(np.abs(s)))
        lo, hi = max(0, at - 2), min(n, at + 3)
        s[lo:hi] = np.where(s[lo:hi] < 0, -I16_MAX, I16_MAX)
    elif kind == HIGH_FRACTION:
        idx = rng.choice(n, int(np.ceil(0.45 * n)), replace=False)
        s[idx] = rng.choice((-1, 1), idx.size) * int(0.9 * I16_MAX)
    elif kind == IMBALANCE:
        # a few spikes lift the mean above at least 95 % of the samples
        s = rng.integers(-2, 3, n)
        s[rng.choice(n, max(1, int(0.04 * n)), replace=False)] = 5000
    else:
        raise BadSpec(f"unknown defect kind {kind!r}")
    return s


def generate_synthetic_with_truth(n_per_class: int, spec: SyntheticSpec = SyntheticSpec(),
                                  seed: int = 0):
    """Events plus ``{event_id: defect kind}`` for the events that carry a planted defect."""
    if n_per_class < 2:
        raise BadSpec("need at least two events per class")
    rng = np.random.default_rng(seed)
    rate = spec.sample_rate_hz
    plan = [cls for cls in spec.classes for _ in range(n_per_class)]
    order = rng.permutation(len(plan))
    n_defects = int(round(spec.defect_rate * len(plan)))
    defective = set(rng.choice(len(plan), n_defects, replace=False).tolist())

    events, truth = [], {}
    for k, pos in enumerate(order):
        cls = plan[pos]
        event_id = f"syn{seed}-{k:05d}"
        f0 = rng.uniform(*cls.freq_hz)
        decay = rng.uniform(*cls.decay_s)
        n = int(rng.integers(spec.min_samples, spec.max_samples + 1))
        origin_ms = _BASE_MS + int(rng.integers(0, 10 * 365 * 86400 * 1000))
        base_peak = np.exp(rng.uniform(*np.log(spec.peak_counts)))
        records = []
        for station in spec.stations:
            peak = min(base_peak * rng.uniform(0.5, 1.0), spec.peak_counts[1])
            noise = rng.uniform(*spec.noise_fraction)
            delay_ms = int(rng.integers(0, 3000))
            weights = rng.uniform(0.5, 1.0, 3)
            chans = [_trace(rng, cls, n, rate, f0, decay, peak * w, noise) for w in weights]
            records.append([station, origin_ms + delay_ms, chans])
        if k in defective:
            kind = DEFECT_KINDS[len(truth) % len(DEFECT_KINDS)]
            r = int(rng.integers(len(records)))
            c = int(rng.integers(3))
            records[r][2][c] = _plant(rng, records[r][2][c], kind)
            truth[event_id] = kind
        recs = tuple(StationRecord(sta, ms, tuple(Channel(s, rate) for s in chans))
                     for sta, ms, chans in records)
        events.append(EventWaveformSet(event_id, cls.label, recs))
    return events, truth


def generate_synthetic(n_per_class: int, spec: SyntheticSpec = SyntheticSpec(), seed: int = 0):
    return generate_synthetic_with_truth(n_per_class, spec, seed)[0]
