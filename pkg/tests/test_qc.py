import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seispipe.bench.synthetic import SyntheticSpec, generate_synthetic_with_truth
from seispipe.codec import Channel, EventWaveformSet, Label, StationRecord
from seispipe.errors import EmptyChannel
from seispipe.qc import (QcThresholds, check_clipping, check_high_fraction, check_imbalance,
                         filter_clean, is_dead, qc_event, reports_to_csv)

from oracles import qc_reference

T100 = QcThresholds(clip_level=100)


def verdicts(samples, t=QcThresholds()):
    return check_clipping(samples, t), check_high_fraction(samples, t), check_imbalance(samples, t)


def test_clipping_examples():
    assert not check_clipping(Channel([0, 5, -5], 125.0))
    assert check_clipping(Channel([0, 32767], 125.0))
    assert check_clipping(Channel([-32768, 0], 125.0))
    assert not check_clipping(Channel([32766, -32766], 125.0))


def test_high_fraction_examples():
    assert check_high_fraction([100, 90, 85, 81, 10, 10, 10, 10, 10, 10], T100)
    assert not check_high_fraction([81, 10, 10, 10, 10, 10, 10, 10, 10, 10], T100)
    # exactly 0.8 x full scale is not "above", and a 35 % share is not "more than"
    assert not check_high_fraction([80] * 10, T100)
    assert not check_high_fraction([90] * 7 + [0] * 13, T100)
    assert check_high_fraction([90] * 8 + [0] * 12, T100)


def test_imbalance_examples():
    assert not check_imbalance([0] * 10)
    assert check_imbalance([1] * 99 + [1000])
    assert not check_imbalance([5, 5, 5, 5])
    # 19 of 20 below the mean: share 0.95 meets the threshold
    assert check_imbalance([0] * 19 + [7])
    assert not check_imbalance([0] * 18 + [7, 7])


def test_empty_channel_raises():
    for fn in (check_clipping, check_high_fraction, check_imbalance):
        with pytest.raises(EmptyChannel):
            fn(Channel([], 125.0))


def test_dead_channel_is_only_a_warning():
    ch = Channel([0] * 50, 125.0)
    assert is_dead(ch) and not any(verdicts(ch))


def test_threshold_validation():
    for kw in ({"clip_level": 0}, {"high_frac_level": 1.0}, {"high_frac_share": 0.0},
               {"below_mean_share": 1.5}):
        with pytest.raises(ValueError):
            QcThresholds(**kw)


def test_float_samples_follow_the_same_rules():
    assert check_clipping(np.array([0.0, 32767.0]))
    assert check_imbalance(np.array([1.0] * 99 + [1000.0]))


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-32768, 32767), min_size=1, max_size=60))
def test_matches_exact_reference(samples):
    assert verdicts(samples) == qc_reference(samples)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-300, 300), min_size=1, max_size=40), st.integers(1, 300),
       st.integers(1, 50))
def test_scale_covariance(samples, clip, k):
    t = QcThresholds(clip_level=clip)
    tk = QcThresholds(clip_level=clip * k)
    assert verdicts(samples, t) == verdicts([s * k for s in samples], tk)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-32768, 32767), min_size=1, max_size=40),
       st.integers(32767, 10 ** 6), st.booleans(), st.integers(0, 40))
def test_clipping_monotone_under_added_samples(samples, big, neg, pos):
    before = check_clipping(samples)
    after = samples[:pos] + [-big if neg else big] + samples[pos:]
    assert check_clipping(after)
    if before:
        assert check_clipping(samples + [0])


def _event(records):
    return EventWaveformSet("ev", Label.TECTONIC, tuple(
        StationRecord(code, 0, tuple(Channel(c, 125.0) for c in chans))
        for code, chans in records))


def test_event_flag_algebra_and_one_bad_channel():
    clean = [np.arange(-20, 20)] * 3
    bad = [np.arange(-20, 20), np.r_[np.arange(-20, 19), 32767], np.arange(-20, 20)]
    ev = _event([(c, clean) for c in ("TRO", "PST", "PAL", "CEL")] + [("VYS", bad)])
    rep = qc_event(ev)
    assert len(rep.verdicts) == 15 and rep.event_corrupted
    assert [v.corrupted for v in rep.verdicts].count(True) == 1
    flagged = next(v for v in rep.verdicts if v.corrupted)
    assert (flagged.station, flagged.channel, flagged.record_index) == ("VYS", "N", 4)

    ok = qc_event(_event([("TRO", clean)]))
    assert not ok.event_corrupted and not any(v.corrupted for v in ok.verdicts)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans(), st.booleans()), min_size=1, max_size=15))
def test_report_or_reduction(flags):
    from seispipe.qc import ChannelVerdict, QcReport

    rep = QcReport("e", tuple(ChannelVerdict(0, "TRO", "Z", *f) for f in flags))
    assert rep.event_corrupted == any(any(f) for f in flags)
    assert all(row[-1] == rep.event_corrupted for row in rep.rows())


def test_empty_channel_in_event_reports_position():
    ev = _event([("TRO", [[1, 2]] * 3)])
    object.__setattr__(ev.records[0].channels[2], "samples", np.array([], dtype=np.int64))
    with pytest.raises(EmptyChannel) as info:
        qc_event(ev)
    assert info.value.record == 0 and info.value.channel == "E"


def test_planted_defects_are_found_exactly():
    spec = SyntheticSpec(defect_rate=0.23)
    events, truth = generate_synthetic_with_truth(50, spec, seed=4)
    assert len(events) == 100 and len(truth) == 23
    flagged = {e.event_id for e in events if qc_event(e).event_corrupted}
    assert flagged == set(truth)
    clean, bad = filter_clean(events)
    assert len(bad) == 23 and len(clean) == 77


def test_csv_report_columns():
    ev = _event([("TRO", [[1, 2]] * 3)])
    text = reports_to_csv([qc_event(ev)])
    lines = text.splitlines()
    assert lines[0] == "event_id,station,channel,clipped,high_fraction,imbalance,event_corrupted"
    assert lines[1] == "ev,TRO,Z,false,false,false,false"
    assert len(lines) == 4
