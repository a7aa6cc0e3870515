import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from seispipe import codec
from seispipe.cli import main, read_config
from seispipe.preprocess import unpack_fseq

FAST = ["--attempts", "1", "--epochs", "1", "--hidden-size", "4", "--num-layers", "1",
        "--batch-size", "32"]


@pytest.fixture(scope="module")
def events_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "events.estf2"
    assert main(["synth", "--out", str(path), "--events", "12", "--seed", "1"]) == 0
    return path


def test_synth_writes_balanced_labelled_events(events_file):
    evs = codec.read_events(str(events_file))
    assert len(evs) == 24
    assert sum(e.label is codec.Label.TECTONIC for e in evs) == 12


def test_convert_round_trip_through_ascii_and_seedlike(events_file, tmp_path):
    txt, back, seed = tmp_path / "e.txt", tmp_path / "back.estf2", tmp_path / "e.seed"
    assert main(["convert", "--in", str(events_file), "--out", str(txt)]) == 0
    assert main(["convert", "--in", str(txt), "--out", str(back)]) == 0
    assert back.read_bytes() == events_file.read_bytes()
    assert main(["convert", "--in", str(events_file), "--out", str(seed), "--format",
                 "seedlike"]) == 0
    assert seed.stat().st_size > 0


def test_qc_report_and_clean_subset(tmp_path):
    src, report, clean = tmp_path / "d.estf2", tmp_path / "qc.csv", tmp_path / "clean.estf2"
    truth = tmp_path / "truth.json"
    assert main(["synth", "--out", str(src), "--events", "10", "--defect-rate", "0.3",
                 "--truth-out", str(truth)]) == 0
    assert main(["qc", "--in", str(src), "--out", str(report), "--clean-out", str(clean)]) == 0
    planted = json.loads(truth.read_text())
    lines = report.read_text().splitlines()
    assert len(lines) == 1 + 20 * 15
    flagged = {ln.split(",")[0] for ln in lines[1:] if ln.endswith(",true")}
    assert flagged == set(planted)
    assert len(codec.read_events(str(clean))) == 20 - len(planted)


def test_preprocess_to_fseq_and_csv(events_file, tmp_path):
    out = tmp_path / "f.fseq"
    assert main(["preprocess", "--in", str(events_file), "--out", str(out)]) == 0
    seqs = unpack_fseq(out.read_bytes())
    assert len(seqs) == 24 * 5 and all(s.domain == "frequency" for s in seqs)
    d = tmp_path / "csv"
    assert main(["preprocess", "--in", str(events_file), "--out", str(d), "--format", "csv",
                 "--no-fft"]) == 0
    assert len(list(d.iterdir())) == 120


def test_detect_cuts_windows(tmp_path):
    rate = 20.0
    rng = np.random.default_rng(0)
    z = (10 * rng.standard_normal(3000)).round().astype(int)
    z[1500:1510] = 800
    rec = codec.StationRecord("TRO", 0, tuple(codec.Channel(z, rate) for _ in range(3)))
    src, out = tmp_path / "s.estf2", tmp_path / "w.estf2"
    codec.write_events(str(src), [codec.EventWaveformSet("day1", codec.Label.UNLABELED, (rec,))])
    assert main(["detect", "--in", str(src), "--out", str(out), "--sta", "0.5", "--lta", "5"]) == 0
    (win,) = codec.read_events(str(out))
    assert win.event_id == "day1-TRO-0000"


def test_train_evaluate_and_byte_identical_reports(events_file, tmp_path):
    r1, r2, model = tmp_path / "r1.json", tmp_path / "r2.json", tmp_path / "m.spmd"
    args = ["train", "--in", str(events_file), *FAST]
    assert main(args + ["--report", str(r1), "--model-out", str(model)]) == 0
    assert main(args + ["--report", str(r2)]) == 0
    assert r1.read_bytes() == r2.read_bytes()
    rep = json.loads(r1.read_text())
    assert rep["model"] == "lstm" and len(rep["attempts"]) == 1
    ev = tmp_path / "ev.json"
    assert main(["evaluate", "--model", str(model), "--in", str(events_file),
                 "--report", str(ev)]) == 0
    out = json.loads(ev.read_text())
    assert out["records"] == 120 and out["events"] == 24


def test_train_gbt_and_benchmark_csv(events_file, tmp_path):
    model, table = tmp_path / "g.spgb", tmp_path / "t.csv"
    assert main(["train", "--in", str(events_file), "--model", "gbt", "--rounds", "10",
                 "--attempts", "1", "--model-out", str(model)]) == 0
    assert model.read_bytes()[:4] == b"SPGB"
    assert main(["benchmark", "--in", str(events_file), "--models", "gbt", "--rounds", "5",
                 "--attempts", "2", "--csv", str(table)]) == 0
    assert table.read_text().splitlines()[1].startswith("gbt,")


def test_config_file_supplies_flags_and_explicit_flags_win(events_file, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# training defaults\nin = {events_file}\nmodel = gbt\nrounds = 3\n"
                   "attempts = 1\nselect-on-test = true\n")
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["train", "--config", str(cfg), "--report", str(r1)]) == 0
    rep = json.loads(r1.read_text())
    assert rep["model"] == "gbt" and rep["protocol"] == "test-selected"
    assert main(["train", "--config", str(cfg), "--report", str(r2),
                 "--no-select-on-test"]) == 0
    assert json.loads(r2.read_text())["protocol"] == "validation-selected"
    assert read_config(str(cfg))["select_on_test"] == "true"


@pytest.mark.parametrize("argv", [
    ["convert", "--in", "x", "--out", "y", "--bogus"],
    ["train"],
    ["nonsense"],
    ["train", "--in", "x", "--model", "svm"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_bad_config_keys_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["train", "--config", str(cfg), "--in", "x"]) == 2
    cfg.write_text("epochs = many\n")
    assert main(["train", "--config", str(cfg), "--in", "x"]) == 2
    assert "epochs" in capsys.readouterr().err


def test_operational_errors_exit_1(tmp_path, capsys):
    assert main(["convert", "--in", str(tmp_path / "missing.estf2"), "--out",
                 str(tmp_path / "o.estf2")]) == 1
    assert "does not exist" in capsys.readouterr().err
    junk = tmp_path / "junk.estf2"
    junk.write_bytes(b"not an event file")
    assert main(["convert", "--in", str(junk), "--out", str(tmp_path / "o.txt")]) == 1
    assert main(["synth", "--out", str(tmp_path / "no" / "dir" / "x.estf2")]) == 1


def test_console_script_streams_stdin_to_stdout(events_file):
    exe = shutil.which("seispipe")
    cmd = [exe] if exe else [sys.executable, "-m", "seispipe.cli"]
    proc = subprocess.run(cmd + ["convert", "--in", "-", "--out", "-", "--format", "ascii"],
                          input=events_file.read_bytes(), capture_output=True, check=True)
    assert len(codec.import_ascii_many(proc.stdout.decode())) == 24
    help_text = subprocess.run(cmd + ["train", "--help"], capture_output=True, text=True).stdout
    assert "--weight-decay" in help_text and "--early-stopping-rounds" in help_text


def test_synth_piped_into_train():
    exe = shutil.which("seispipe")
    cmd = [exe] if exe else [sys.executable, "-m", "seispipe.cli"]
    synth = subprocess.run(cmd + ["synth", "--out", "-", "--events", "10", "--seed", "7"],
                           capture_output=True, check=True)
    train = subprocess.run(cmd + ["train", "--in", "-", "--report", "-", *FAST],
                           input=synth.stdout, capture_output=True, check=True)
    report = json.loads(train.stdout)
    assert report["model"] == "lstm" and report["reference"]["f1"] == 0.9578
