import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from seispipe.codec import Channel, EventWaveformSet, Label, StationRecord
from seispipe.errors import CodecError, EmptyDataset, ShapeMismatch, TrimPaddingWarning
from seispipe.fft import fft_radix2, next_pow2, rfft_magnitude
from seispipe.preprocess import (FREQUENCY, TIME, FeatureSequence, PreprocessConfig,
                                 build_dataset, build_features, fft_magnitude, flatten_columns,
                                 pack_fseq, sequence_to_csv, stack, trim_to_shortest,
                                 unpack_fseq, zscore)

from oracles import dft_magnitude_padded, naive_dft


def seq(values, **kw):
    return FeatureSequence(np.asarray(values, dtype=float), **kw)


def col(x):
    return np.repeat(np.asarray(x, dtype=float)[:, None], 3, axis=1)


# -- FFT ---------------------------------------------------------------------------

def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 4, 5, 1000, 1024, 1025)] == \
        [1, 2, 4, 4, 8, 1024, 1024, 2048]
    with pytest.raises(ValueError):
        next_pow2(0)


def test_delta_and_constant_spectra():
    assert np.allclose(rfft_magnitude(np.array([1.0, 0, 0, 0])), [1, 1, 1], atol=1e-15)
    assert np.allclose(rfft_magnitude(np.array([1.0, 1, 1, 1])), [4, 0, 0], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 4, 8, 64, 1024])
def test_radix2_against_naive_dft(n):
    rng = np.random.default_rng(n)
    x = rng.standard_normal(n)
    assert np.max(np.abs(fft_radix2(x.astype(complex)) - naive_dft(x))) <= 1e-9


def test_length_1000_column_with_padding():
    x = np.random.default_rng(1).standard_normal(1000)
    mag = rfft_magnitude(x)
    assert mag.shape == (513,)
    assert np.max(np.abs(mag - dft_magnitude_padded(x))) <= 1e-9


def test_vectorised_over_columns():
    x = np.random.default_rng(2).standard_normal((37, 3))
    mag = rfft_magnitude(x, axis=0)
    assert mag.shape == (33, 3)
    for j in range(3):
        assert np.allclose(mag[:, j], dft_magnitude_padded(x[:, j]), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 300),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_parseval_and_non_negativity(x):
    p = next_pow2(x.size)
    padded = np.zeros(p)
    padded[:x.size] = x
    full = fft_radix2(padded.astype(complex))
    energy = np.sum(x ** 2)
    assert abs(energy - np.sum(np.abs(full) ** 2) / p) <= 1e-9 * max(energy, 1e-300)
    assert np.all(rfft_magnitude(x) >= 0)


def test_fft_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fft_radix2(np.ones(6, dtype=complex))


# -- trimming ----------------------------------------------------------------------

def test_trim_to_shortest_examples():
    ds = [seq(np.ones((n, 3))) for n in (5, 3, 4)]
    out, length = trim_to_shortest(ds)
    assert length == 3 and [len(s) for s in out] == [3, 3, 3]
    single, length = trim_to_shortest([ds[0]])
    assert length == 5 and np.array_equal(single[0].values, ds[0].values)
    with pytest.raises(EmptyDataset):
        trim_to_shortest([])


def test_resolved_length_pads_shorter_test_sequences():
    train = [seq(np.ones((n, 3))) for n in (6, 8)]
    _, length = trim_to_shortest(train)
    test = [seq(np.full((4, 3), 2.0))]
    with pytest.warns(TrimPaddingWarning):
        out, same = trim_to_shortest(test, length)
    assert same == 6 and out[0].padded == 2
    assert np.array_equal(out[0].values[:4], test[0].values)
    assert np.all(out[0].values[4:] == 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=10))
def test_auto_trim_never_lengthens(lengths):
    ds = [seq(np.arange(3 * n, dtype=float).reshape(n, 3)) for n in lengths]
    out, length = trim_to_shortest(ds)
    assert length == min(lengths)
    for a, b in zip(ds, out):
        assert len(b) <= len(a)
        assert np.array_equal(b.values, a.values[:length])


# -- z-score -------------------------------------------------------------------------

def test_zscore_examples():
    out = zscore(seq(np.c_[[1, 2, 3], [7, 7, 7], [0, 0, 3]]))
    assert np.allclose(out.values[:, 0], [-1.224744871391589, 0, 1.224744871391589], atol=1e-12)
    assert np.array_equal(out.values[:, 1], [0, 0, 0])


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 200), st.just(3)),
                  elements=st.floats(-1e4, 1e4, allow_nan=False)))
def test_zscore_moments_and_idempotence(x):
    out = zscore(seq(x)).values
    for j in range(3):
        if np.ptp(x[:, j]) > 1e-6 * max(1.0, np.abs(x[:, j]).max()):
            assert abs(out[:, j].mean()) <= 1e-12
            assert abs(out[:, j].std() - 1.0) <= 1e-12
    again = zscore(seq(out)).values
    varying = np.ptp(x, axis=0) > 1e-6 * np.maximum(1.0, np.abs(x).max(axis=0))
    assert np.allclose(again[:, varying], out[:, varying], atol=1e-12, rtol=0)


# -- feature sequences -------------------------------------------------------------

def test_feature_sequence_invariants():
    with pytest.raises(ShapeMismatch):
        seq(np.ones((4, 2)))
    with pytest.raises(ShapeMismatch):
        seq(np.ones((0, 3)))
    with pytest.raises(ValueError):
        seq(np.array([[np.nan, 0, 0]]))
    with pytest.raises(ValueError):
        fft_magnitude(seq(np.ones((4, 3)), domain=FREQUENCY))


def _event(n=100, rate=125.0, freq=10.0):
    t = np.arange(n) / rate
    z = np.round(1000 * np.sin(2 * np.pi * freq * t)).astype(int)
    chans = (Channel(z, rate), Channel(z // 2, rate), Channel(-z, rate))
    return EventWaveformSet("tone", Label.MINING_INDUCED, (StationRecord("TRO", 0, chans),))


def test_all_off_is_identity():
    ev = _event()
    (s,) = build_features(ev, PreprocessConfig(False, False, False))
    assert s.domain == TIME and np.array_equal(s.values, ev.records[0].matrix())
    assert s.event_id == "tone" and s.station_code == "TRO" and s.label is Label.MINING_INDUCED


def test_known_tone_lands_in_nearest_bin():
    rate, n = 125.0, 256
    for freq in (5.0, 10.0, 20.0, 31.0):
        (s,) = build_features(_event(n, rate, freq))
        assert s.domain == FREQUENCY and len(s) == n // 2 + 1
        expected = int(round(freq * n / rate))
        assert int(np.argmax(s.values[:, 0])) == expected


def test_default_pipeline_is_zscore_then_fft():
    ev = _event(100)
    (s,) = build_features(ev)
    z = zscore(seq(ev.records[0].matrix()))
    assert np.allclose(s.values, rfft_magnitude(z.values, axis=0), atol=1e-12)


def test_dataset_trim_resolved_on_train_and_reused():
    evs = [_event(n) for n in (90, 80, 120)]
    cfg = PreprocessConfig(use_trim=True)
    seqs, length = build_dataset(evs, cfg)
    assert length == 80 and all(len(s) == 65 for s in seqs)
    test_seqs, same = build_dataset([_event(100)], cfg, trim_length=length)
    assert same == 80 and len(test_seqs[0]) == 65


def test_stack_pads_spectra_to_common_width():
    a, b = seq(np.ones((3, 3))), seq(np.full((5, 3), 2.0))
    x = stack([a, b])
    assert x.shape == (2, 5, 3) and np.all(x[0, 3:] == 0)
    assert stack([a, b], 4).shape == (2, 4, 3)
    flat = flatten_columns(np.arange(2 * 4 * 3).reshape(2, 4, 3))
    assert flat[0].tolist() == [0, 3, 6, 9, 1, 4, 7, 10, 2, 5, 8, 11]


def test_fseq_round_trip_and_errors():
    seqs = build_features(_event(50)) + [seq(np.eye(3), event_id="x", station_code="PST",
                                             label=Label.TECTONIC)]
    back = unpack_fseq(pack_fseq(seqs))
    for a, b in zip(seqs, back):
        assert np.array_equal(a.values, b.values)
        assert (a.domain, a.event_id, a.station_code, a.label) == \
            (b.domain, b.event_id, b.station_code, b.label)
    buf = pack_fseq(seqs)
    with pytest.raises(CodecError):
        unpack_fseq(buf[:-1])
    with pytest.raises(CodecError):
        unpack_fseq(b"XSEQ" + buf[4:])


def test_sequence_csv():
    text = sequence_to_csv(seq([[1, 2, 3], [4, 5, 6]]))
    assert text.splitlines() == ["z,n,e", "1.0,2.0,3.0", "4.0,5.0,6.0"]


def test_training_pipeline_warns_only_when_padding():
    evs = [_event(n) for n in (60, 70)]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_dataset(evs, PreprocessConfig(use_trim=True))
