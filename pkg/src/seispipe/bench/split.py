from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..codec import EventWaveformSet
from ..errors import TooFewEvents

EVENT = "event"
RECORD = "record"


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.33
    split_unit: str = EVENT
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.split_unit not in (EVENT, RECORD):
            raise ValueError(f"split_unit must be {EVENT!r} or {RECORD!r}")


def _quotas(counts: dict, fraction: float) -> dict:
    """Per-class test counts summing to round(fraction * total), largest remainder first."""
    total = sum(counts.values())
    target = int(math.floor(fraction * total + 0.5))
    exact = {k: fraction * n for k, n in counts.items()}
    quota = {k: int(math.floor(v)) for k, v in exact.items()}
    order = sorted(counts, key=lambda k: (-(exact[k] - quota[k]), k))
    for k in order[:max(0, target - sum(quota.values()))]:
        quota[k] += 1
    return quota


def explode_records(events):
    """One single-record event per station record, for record-level splitting."""
    return [EventWaveformSet(f"{e.event_id}:{r.station_code}", e.label, (r,))
            for e in events for r in e.records]


def split_dataset(ds, spec: SplitSpec = SplitSpec()):
    """Stratified, seeded split into ``(train, test)`` lists of events.

    At event level every record of an event lands on the same side; input
    order is preserved within each side.
    """
    units = list(ds) if spec.split_unit == EVENT else explode_records(ds)
    by_label: dict = {}
    for i, e in enumerate(units):
        by_label.setdefault(int(e.label), []).append(i)
    if len(by_label) < 1 or any(len(v) < 2 for v in by_label.values()):
        raise TooFewEvents("every class needs at least two events to split")
    quota = _quotas({k: len(v) for k, v in by_label.items()}, spec.test_fraction)
    rng = np.random.default_rng(spec.seed)
    test_idx = set()
    for label in sorted(by_label):
        members = np.array(by_label[label])
        chosen = rng.permutation(members)[:quota[label]]
        test_idx.update(int(i) for i in chosen)
    train = [e for i, e in enumerate(units) if i not in test_idx]
    test = [e for i, e in enumerate(units) if i in test_idx]
    return train, test
