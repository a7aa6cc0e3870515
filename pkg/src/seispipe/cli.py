"""Command-line entry point: ``seispipe <subcommand> [flags]``.

Exit status is 0 on success, 1 on an operational error (bad input file,
failed attempt under ``--strict``) and 2 on a usage error. Every flag can
also be given in a flat ``key = value`` file passed with ``--config``;
explicit flags win over the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import boosting, codec, qc, trigger
from .bench import runner
from .bench.metrics import compute_metrics, majority_vote
from .bench.split import SplitSpec
from .bench.synthetic import SyntheticSpec, generate_synthetic_with_truth
from .errors import IoError, SeispipeError
from .neural import LstmConfig, LstmFcnConfig, load_network, save_network
from .preprocess import (PreprocessConfig, build_dataset, flatten_columns, pack_fseq,
                         sequence_to_csv, stack)

log = logging.getLogger("seispipe")

EVENT_FORMATS = ("estf2", "ascii", "seedlike")
STDIO = "-"


class UsageError(SeispipeError):
    pass


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Appends defaults unless the help text already describes them."""

    def _get_help_string(self, action):
        text = action.help or ""
        if "(default" in text:
            return text
        return super()._get_help_string(action)


# -- I/O helpers ---------------------------------------------------------------

def _check_input(path):
    if path != STDIO and not os.path.isfile(path):
        raise IoError("input file does not exist", path)


def _check_output(path):
    if path in (None, STDIO):
        return
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise IoError("output directory is missing or not writable", path)


def _read_events(path, fmt=None):
    _check_input(path)
    if path == STDIO:
        data = sys.stdin.buffer.read()
        if fmt == "ascii":
            return codec.check_unique_ids(codec.import_ascii_many(data.decode("utf-8")))
        return codec.check_unique_ids(list(codec.iter_estf2(data)))
    try:
        return codec.read_events(path, fmt)
    except OSError as exc:
        raise IoError(exc.strerror or str(exc), path) from exc


def _write_bytes(path, data: bytes):
    if path == STDIO:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoError(exc.strerror or str(exc), path) from exc


def _write_text(path, text: str):
    _write_bytes(path, text.encode("utf-8"))


def _write_events(path, events, fmt):
    fmt = fmt or (codec.guess_format(path) if path != STDIO else "estf2")
    if fmt == "estf2":
        _write_bytes(path, codec.encode_many(events))
    elif fmt == "ascii":
        _write_text(path, "".join(codec.export_ascii(e) for e in events))
    elif fmt == "seedlike":
        _write_bytes(path, b"".join(codec.export_seedlike(e) for e in events))
    else:
        raise UsageError(f"cannot write events as {fmt!r}")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=runner._jsonable) + "\n"


# -- parameter groups --------------------------------------------------------------

def _add_preprocess(p):
    g = p.add_argument_group("preprocessing")
    g.add_argument("--trim", dest="use_trim", action=argparse.BooleanOptionalAction,
                   default=False, help="cut every record to a common length")
    g.add_argument("--zscore", dest="use_zscore", action=argparse.BooleanOptionalAction,
                   default=True, help="per-channel standardisation")
    g.add_argument("--fft", dest="use_fft", action=argparse.BooleanOptionalAction,
                   default=True, help="FFT magnitude features")
    g.add_argument("--trim-length", type=int, default=None,
                   help="explicit trim length in samples (default: shortest training record)")


def _preprocess_config(a) -> PreprocessConfig:
    return PreprocessConfig(a.use_trim, a.use_zscore, a.use_fft, a.trim_length)


def _add_qc(p):
    g = p.add_argument_group("quality control")
    d = qc.QcThresholds()
    g.add_argument("--clip-level", type=int, default=d.clip_level,
                   help="full-scale amplitude (default: %(default)s)")
    g.add_argument("--high-frac-level", type=float, default=d.high_frac_level,
                   help="high-amplitude level as a fraction of full scale (default: %(default)s)")
    g.add_argument("--high-frac-share", type=float, default=d.high_frac_share,
                   help="share of high-amplitude samples that flags a channel (default: %(default)s)")
    g.add_argument("--below-mean-share", type=float, default=d.below_mean_share,
                   help="share of below-mean samples that flags a channel (default: %(default)s)")


def _qc_thresholds(a) -> qc.QcThresholds:
    return qc.QcThresholds(a.clip_level, a.high_frac_level, a.high_frac_share,
                           a.below_mean_share)


def _add_trigger(p):
    g = p.add_argument_group("trigger")
    d = trigger.TriggerConfig()
    g.add_argument("--sta", type=float, default=d.sta_window_s,
                   help="short-term window in seconds (default: %(default)s)")
    g.add_argument("--lta", type=float, default=d.lta_window_s,
                   help="long-term window in seconds (default: %(default)s)")
    g.add_argument("--on", type=float, default=d.on_ratio,
                   help="trigger-on ratio (default: %(default)s)")
    g.add_argument("--off", type=float, default=d.off_ratio,
                   help="trigger-off ratio (default: %(default)s)")
    g.add_argument("--pre", type=float, default=d.pre_s,
                   help="seconds kept before a trigger (default: %(default)s)")
    g.add_argument("--post", type=float, default=d.post_s,
                   help="seconds kept after a trigger ends (default: %(default)s)")


def _add_models(p):
    g = p.add_argument_group("neural models")
    lc, fc = LstmConfig(), LstmFcnConfig()
    g.add_argument("--lr", type=float, default=1e-3, help="AdamW learning rate (default: %(default)s)")
    g.add_argument("--weight-decay", type=float, default=0.01,
                   help="AdamW decoupled weight decay (default: %(default)s)")
    g.add_argument("--batch-size", type=int, default=64, help="mini-batch size (default: %(default)s)")
    g.add_argument("--epochs", type=int, default=20, help="epochs per attempt (default: %(default)s)")
    g.add_argument("--hidden-size", type=int, default=lc.hidden_size,
                   help="LSTM hidden units (default: %(default)s)")
    g.add_argument("--num-layers", type=int, default=lc.num_layers,
                   help="stacked LSTM layers (default: %(default)s)")
    g.add_argument("--dropout", type=float, default=None,
                   help="dropout rate (default: 0.7 for lstm, 0.8 for lstm-fcn)")
    g.add_argument("--lstm-hidden", type=int, default=fc.lstm_hidden,
                   help="LSTM-FCN recurrent units (default: %(default)s)")
    g.add_argument("--conv-channels", type=int, default=fc.conv_channels,
                   help="LSTM-FCN filters per convolution (default: %(default)s)")
    g.add_argument("--kernel-sizes", default=",".join(map(str, fc.conv_kernel_sizes)),
                   help="LSTM-FCN kernel sizes (default: %(default)s)")
    g.add_argument("--dtype", choices=("float32", "float64"), default="float32",
                   help="training precision (default: %(default)s)")

    b = p.add_argument_group("boosted trees")
    d = boosting.GbtConfig()
    b.add_argument("--rounds", type=int, default=d.rounds, help="boosting rounds (default: %(default)s)")
    b.add_argument("--max-depth", type=int, default=d.max_depth, help="tree depth (default: %(default)s)")
    b.add_argument("--learning-rate", type=float, default=d.learning_rate,
                   help="shrinkage (default: %(default)s)")
    b.add_argument("--subsample", type=float, default=d.subsample,
                   help="row share per tree (default: %(default)s)")
    b.add_argument("--colsample", type=float, default=d.colsample,
                   help="column share per tree (default: %(default)s)")
    b.add_argument("--l2-lambda", type=float, default=d.l2_lambda,
                   help="leaf L2 penalty (default: %(default)s)")
    b.add_argument("--scale-pos-weight", type=float, default=None,
                   help="positive-class weight (default: negatives / positives)")
    b.add_argument("--histogram-bins", type=int, default=d.histogram_bins,
                   help="feature bins (default: %(default)s)")
    b.add_argument("--early-stopping-rounds", type=int, default=d.early_stopping_rounds,
                   help="patience in rounds (default: %(default)s)")
    b.add_argument("--min-child-weight", type=float, default=d.min_child_weight,
                   help="minimum hessian per leaf (default: %(default)s)")


def _model_spec(kind, a) -> runner.ModelSpec:
    if kind == "lstm":
        cfg = LstmConfig(a.num_layers, a.hidden_size, 3,
                         0.7 if a.dropout is None else a.dropout)
    elif kind == "lstm-fcn":
        kernels = tuple(int(k) for k in str(a.kernel_sizes).split(","))
        cfg = LstmFcnConfig(a.lstm_hidden, a.conv_channels, kernels, 2,
                            0.8 if a.dropout is None else a.dropout)
    elif kind == "gbt":
        cfg = boosting.GbtConfig(a.rounds, a.max_depth, a.learning_rate, a.subsample,
                                 a.colsample, a.l2_lambda, a.scale_pos_weight,
                                 a.histogram_bins, a.early_stopping_rounds,
                                 a.min_child_weight, a.seed)
    else:
        raise UsageError(f"unknown model {kind!r}")
    return runner.ModelSpec(kind, cfg)


def _add_protocol(p):
    g = p.add_argument_group("protocol")
    g.add_argument("--attempts", type=int, default=10, help="independent attempts (default: %(default)s)")
    g.add_argument("--test-fraction", type=float, default=0.33,
                   help="held-out share of events (default: %(default)s)")
    g.add_argument("--split-unit", choices=("event", "record"), default="event",
                   help="unit kept together by the split (default: %(default)s)")
    g.add_argument("--validation-fraction", type=float, default=0.15,
                   help="share of training events used for model selection (default: %(default)s)")
    g.add_argument("--select-on-test", "--validate-on-test", dest="select_on_test",
                   action=argparse.BooleanOptionalAction, default=False,
                   help="select epochs / stop boosting on the test split")
    g.add_argument("--workers", type=int, default=1,
                   help="parallel attempt processes, capped by SEISPIPE_THREADS (default: %(default)s)")
    g.add_argument("--strict", action=argparse.BooleanOptionalAction, default=False,
                   help="exit 1 when any attempt fails")


def _prepare(a, events):
    split = SplitSpec(a.test_fraction, a.split_unit, a.seed)
    val = 0.0 if a.select_on_test else a.validation_fraction
    return runner.prepare_data(events, _preprocess_config(a), split, val)


def _train_config(a) -> runner.TrainConfig:
    return runner.TrainConfig(a.epochs, a.batch_size, a.lr, a.weight_decay, a.attempts, a.seed,
                              a.select_on_test, a.dtype, a.workers)


# -- subcommands --------------------------------------------------------------------

def cmd_convert(a):
    events = _read_events(a.input, a.input_format)
    _write_events(a.output, events, a.format)
    log.info("converted %d events", len(events))
    return 0


def cmd_qc(a):
    events = _read_events(a.input, a.input_format)
    t = _qc_thresholds(a)
    reports = [qc.qc_event(e, t) for e in events]
    _write_text(a.output, qc.reports_to_csv(reports))
    if a.clean_out:
        clean = [e for e, r in zip(events, reports) if not r.event_corrupted]
        _write_events(a.clean_out, clean, None)
    bad = sum(r.event_corrupted for r in reports)
    log.info("%d of %d events flagged as corrupted", bad, len(reports))
    return 0


def cmd_preprocess(a):
    events = _read_events(a.input, a.input_format)
    seqs, trim = build_dataset(events, _preprocess_config(a))
    if a.format == "fseq":
        _write_bytes(a.output, pack_fseq(seqs))
    else:
        os.makedirs(a.output, exist_ok=True)
        for s in seqs:
            name = f"{s.event_id}_{s.station_code}.csv".replace(os.sep, "_")
            _write_text(os.path.join(a.output, name), sequence_to_csv(s))
    log.info("wrote %d feature sequences (trim length %s)", len(seqs), trim)
    return 0


def cmd_detect(a):
    streams = _read_events(a.input, a.input_format)
    cfg = trigger.TriggerConfig(a.sta, a.lta, a.on, a.off, a.pre, a.post)
    out = []
    for ev in streams:
        for rec in ev.records:
            windows = trigger.detect_events(rec, cfg)
            prefix = f"{ev.event_id}-{rec.station_code.strip()}"
            out.extend(trigger.cut_windows(rec, windows, prefix, codec.Label.parse(a.label)))
    _write_events(a.output, out, a.format)
    log.info("detected %d windows", len(out))
    return 0


def cmd_synth(a):
    spec = SyntheticSpec(sample_rate_hz=a.rate, min_samples=a.min_samples,
                         max_samples=a.max_samples, defect_rate=a.defect_rate)
    events, truth = generate_synthetic_with_truth(a.events, spec, a.seed)
    _write_events(a.output, events, a.format)
    if a.truth_out:
        _write_text(a.truth_out, _dump_json(truth))
    log.info("generated %d events", len(events))
    return 0


def _report(a, results):
    if a.report:
        payload = [r.as_dict(include_timing=False) for r in results]
        _write_text(a.report, _dump_json(payload[0] if len(payload) == 1 else payload))
    if a.csv:
        _write_text(a.csv, runner.rows_to_csv(runner.benchmark_rows(results),
                                              runner.MODEL_TABLE_COLUMNS))
    for r in results:
        log.info("%s: best F1 %.4f (attempt %d), %.1f s", r.model, r.best_f1, r.best_attempt,
                 r.runtime_s)
    failed = sum(len(r.failed_attempts) for r in results)
    if failed and a.strict:
        log.error("%d attempts failed", failed)
        return 1
    return 0


def _model_extra(a, data):
    return {"preprocess": asdict(data.preprocess), "length": data.length,
            "trim_length": data.trim_length, "seed": a.seed}


def cmd_train(a):
    events = _read_events(a.input, a.input_format)
    data = _prepare(a, events)
    res = runner.run_benchmark(_model_spec(a.model, a), data, _train_config(a))
    if a.model_out:
        best = next((x for x in res.attempts if x.attempt == res.best_attempt), None)
        if best is None or best.model is None:
            raise SeispipeError("no successful attempt to save")
        extra = _model_extra(a, data)
        blob = (boosting.save_gbt(best.model, extra) if a.model == "gbt"
                else save_network(best.model, extra))
        _write_bytes(a.model_out, blob)
    return _report(a, [res])


def _load_model(path):
    _check_input(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] == boosting.MODEL_MAGIC:
        model, config = boosting.load_gbt(blob)
        return "gbt", model, config
    net, config = load_network(blob)
    return net.kind, net, config


def cmd_evaluate(a):
    kind, model, config = _load_model(a.model)
    pc = PreprocessConfig(**config["preprocess"])
    events = runner.binary_events(_read_events(a.input, a.input_format))
    seqs, _ = build_dataset(events, pc, trim_length=config.get("trim_length"))
    X = stack(seqs, config["length"])
    y = np.array([int(s.label == runner.POSITIVE_LABEL) for s in seqs])
    if kind == "gbt":
        scores = boosting.predict_proba(model, flatten_columns(X))
    else:
        scores = model.predict_proba(X)[:, 1]
    pred = (scores >= 0.5).astype(int)
    groups = np.array([s.event_id for s in seqs])
    _, ev_pred = majority_vote(pred, groups)
    _, ev_true = majority_vote(y, groups)
    out = {"model": kind, "records": int(y.size), "events": int(ev_true.size),
           "metrics": compute_metrics(pred, y, scores).as_dict(),
           "event_metrics": compute_metrics(ev_pred, ev_true).as_dict()}
    _write_text(a.report or STDIO, _dump_json(out))
    return 0


ABLATION = (PreprocessConfig(use_trim=False, use_fft=True),
            PreprocessConfig(use_trim=True, use_fft=True),
            PreprocessConfig(use_trim=True, use_fft=False))


def cmd_benchmark(a):
    events = _read_events(a.input, a.input_format)
    cfg = _train_config(a)
    kinds = [k.strip() for k in a.models.split(",") if k.strip()]
    if a.ablation:
        split = SplitSpec(a.test_fraction, a.split_unit, a.seed)
        val = 0.0 if a.select_on_test else a.validation_fraction
        rows, results = runner.compare_preprocessing(_model_spec(kinds[0], a), events, ABLATION,
                                                     cfg, split, val)
        if a.csv:
            _write_text(a.csv, runner.rows_to_csv(rows))
        if a.report:
            _write_text(a.report, _dump_json([r.as_dict(include_timing=False) for r in results]))
        failed = sum(len(r.failed_attempts) for r in results)
        return 1 if failed and a.strict else 0
    data = _prepare(a, events)
    results = [runner.run_benchmark(_model_spec(k, a), data, cfg) for k in kinds]
    return _report(a, results)


# -- parser --------------------------------------------------------------------------

def _common(p, fmt_out=True, fmt_choices=EVENT_FORMATS):
    p.add_argument("--in", dest="input", required=True, help="input file, '-' for stdin")
    p.add_argument("--out", dest="output", required=True, help="output path, '-' for stdout")
    p.add_argument("--input-format", choices=("estf2", "ascii"), default=None,
                   help="input format (default: from the file extension)")
    if fmt_out:
        p.add_argument("--format", choices=fmt_choices, default=None,
                       help="output format (default: from the file extension)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seispipe", description="Seismic event discrimination pipeline.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output")
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_,
                           formatter_class=_HelpFormatter)
        p.add_argument("--config", default=None, help="flat key = value file with flag defaults")
        p.add_argument("--seed", type=int, default=0, help="seed for every random draw")
        p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS,
                       help="more log output")
        p.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS,
                       help="errors only")
        p.set_defaults(func=func)
        return p

    p = add("convert", cmd_convert, "convert events between container formats")
    _common(p)

    p = add("qc", cmd_qc, "write a per-channel quality report as CSV")
    _common(p, fmt_out=False)
    p.add_argument("--clean-out", default=None, help="also write the events that pass QC")
    _add_qc(p)

    p = add("preprocess", cmd_preprocess, "turn events into feature sequences")
    _common(p, fmt_choices=("fseq", "csv"))
    p.set_defaults(format="fseq")
    _add_preprocess(p)

    p = add("detect", cmd_detect, "cut triggered windows out of continuous streams")
    _common(p)
    p.add_argument("--label", default="Unlabeled", help="label given to every cut window")
    _add_trigger(p)

    p = add("synth", cmd_synth, "generate a synthetic two-class event set")
    p.add_argument("--out", dest="output", required=True, help="output path, '-' for stdout")
    p.add_argument("--format", choices=EVENT_FORMATS, default=None, help="output format")
    p.add_argument("--events", type=int, default=200, help="events per class")
    p.add_argument("--defect-rate", type=float, default=0.0,
                   help="share of events with one planted QC defect")
    d = SyntheticSpec()
    p.add_argument("--rate", type=float, default=d.sample_rate_hz, help="sampling rate in Hz")
    p.add_argument("--min-samples", type=int, default=d.min_samples, help="shortest record")
    p.add_argument("--max-samples", type=int, default=d.max_samples, help="longest record")
    p.add_argument("--truth-out", default=None, help="JSON map of planted defects")

    for name, func, help_ in (("train", cmd_train, "train a model with repeated attempts"),
                              ("benchmark", cmd_benchmark, "compare models or preprocessing")):
        p = add(name, func, help_)
        p.add_argument("--in", dest="input", required=True, help="labelled events")
        p.add_argument("--input-format", choices=("estf2", "ascii"), default=None,
                       help="input format (default: from the file extension)")
        p.add_argument("--report", default=None, help="JSON report path, '-' for stdout")
        p.add_argument("--csv", default=None, help="CSV table path")
        if name == "train":
            p.add_argument("--model", choices=("lstm", "lstm-fcn", "gbt"), default="lstm",
                           help="model family")
            p.add_argument("--model-out", default=None, help="checkpoint of the best attempt")
        else:
            p.add_argument("--models", default="lstm,lstm-fcn,gbt",
                           help="comma-separated model families")
            p.add_argument("--ablation", action="store_true",
                           help="compare preprocessing configs with the first model instead")
        _add_preprocess(p)
        _add_models(p)
        _add_protocol(p)

    p = add("evaluate", cmd_evaluate, "score a saved model on labelled events")
    p.add_argument("--model", required=True, help="checkpoint written by train")
    p.add_argument("--in", dest="input", required=True, help="labelled events")
    p.add_argument("--input-format", choices=("estf2", "ascii"), default=None,
                   help="input format (default: from the file extension)")
    p.add_argument("--report", default=None, help="JSON report path (default: stdout)")
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    _check_input(path)
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _apply_config(sub, values: dict):
    actions = {a.dest: a for a in sub._actions}
    for a in sub._actions:
        for opt in a.option_strings:
            if opt.startswith("--"):
                actions.setdefault(opt[2:].replace("-", "_"), a)
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help", "func"):
            raise UsageError(f"unknown config key {key!r}")
        key = action.dest
        if action.nargs == 0 or isinstance(action, argparse.BooleanOptionalAction):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise UsageError(f"config key {key!r} needs a boolean, got {raw!r}")
            defaults[key] = low in ("true", "1", "yes", "on")
            if isinstance(action, argparse._CountAction):
                raise UsageError(f"config key {key!r} cannot be set from a file")
        else:
            try:
                value = action.type(raw) if action.type else raw
            except (TypeError, ValueError):
                raise UsageError(f"bad value {raw!r} for config key {key!r}") from None
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key!r} must be one of {list(action.choices)}")
            defaults[key] = value
        if action.required:
            action.required = False
    sub.set_defaults(**defaults)


def _scan(argv):
    """Subcommand name and ``--config`` value, found before full parsing."""
    command = config = None
    for k, tok in enumerate(argv):
        if command is None and not tok.startswith("-"):
            command = tok
        elif tok == "--config" and k + 1 < len(argv):
            config = argv[k + 1]
        elif tok.startswith("--config="):
            config = tok.split("=", 1)[1]
    return command, config


def _setup_logging(a):
    level = logging.ERROR if a.quiet else (logging.DEBUG if a.verbose > 1 else
                                           logging.INFO if a.verbose else logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command, config_path = _scan(argv)
    try:
        if command and config_path:
            sub = _subparser(parser, command)
            if sub is not None:
                _apply_config(sub, read_config(config_path))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"seispipe: error: {exc}", file=sys.stderr)
        return 2
    except SeispipeError as exc:
        print(f"seispipe: error: {exc}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args)
    try:
        for attr in ("output", "report", "csv", "model_out", "clean_out", "truth_out"):
            if attr == "output" and args.command == "preprocess" and args.format == "csv":
                continue
            _check_output(getattr(args, attr, None))
        return args.func(args)
    except UsageError as exc:
        print(f"seispipe: error: {exc}", file=sys.stderr)
        return 2
    except (SeispipeError, ValueError, OSError) as exc:
        print(f"seispipe: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
