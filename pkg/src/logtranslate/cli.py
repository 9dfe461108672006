"""Command-line entry point: generate, annotate, train and evaluate.

Exit codes: 0 success, 1 I/O failure, 2 invalid arguments, 3 numeric failure
(training diverged).  Every subcommand accepts ``--config FILE``, a JSON object
whose keys mirror the long flag names; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus, metrics, truth
from .neural import Checkpoint, ModelConfig, OptimizerConfig, TrainingDiverged, train, write_history
from .neural.model import REFERENCE_CELLS, REFERENCE_DROPOUTS

log = logging.getLogger("logtranslate")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# Desk-scale defaults, sized for a single CPU core.
DEFAULTS = {
    "generate": {"profile": "TT", "count": 2000, "seed": 0, "mix": None},
    "annotate": {"format": "elf"},
    "train": {"arch": "mc", "cell": "lstm", "cells": 128, "dropout": 0.0, "epochs": 30,
              "batch": 64, "seed": 0, "patience": 10, "embedding": 64, "layers": 1,
              "lr": 0.001, "max_len": 512, "val_corpus": None},
    "evaluate": {"beam": None},
}
REQUIRED = {
    "generate": ("out",),
    "annotate": ("input", "out"),
    "train": ("corpus", "out"),
    "evaluate": ("model", "corpus", "report"),
}


class UsageError(Exception):
    pass


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="logtranslate", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values for the flags")

    g = sub.add_parser("generate", parents=[common], help="write a synthetic annotated corpus")
    g.add_argument("--profile", choices=[*corpus.PRESET_MIXES, "custom"])
    g.add_argument("--mix", help='format mix for --profile custom, e.g. "ELF=0.5,Random(2,14)=0.5"')
    g.add_argument("--count", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", metavar="STEM", help="writes STEM.raw and STEM.ann")

    a = sub.add_parser("annotate", parents=[common], help="annotate a real CLF/ELF log file")
    a.add_argument("--format", choices=[f.value for f in truth.KnownFormat])
    a.add_argument("--in", dest="input", metavar="FILE")
    a.add_argument("--out", metavar="STEM", help="writes STEM.raw, STEM.ann and STEM.rejects.csv")

    t = sub.add_parser("train", parents=[common], help="train a translator on a corpus")
    t.add_argument("--arch", choices=["mc", "ml", "ms"])
    t.add_argument("--cell", choices=["lstm", "gru"])
    t.add_argument("--cells", type=int, help="hidden units per recurrent layer")
    t.add_argument("--dropout", type=float)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--patience", type=int, help="epochs without validation gain before stopping")
    t.add_argument("--embedding", type=int, help="character embedding width")
    t.add_argument("--layers", type=int)
    t.add_argument("--lr", type=float, help="Adam learning rate")
    t.add_argument("--max-len", type=int, help="truncate training records to this length")
    t.add_argument("--corpus", metavar="STEM")
    t.add_argument("--val-corpus", metavar="STEM",
                   help="validate on this corpus and train on all of --corpus")
    t.add_argument("--out", metavar="CKPT")

    e = sub.add_parser("evaluate", parents=[common], help="score a checkpoint on corpora")
    e.add_argument("--model", metavar="CKPT")
    e.add_argument("--corpus", metavar="STEM", action="append",
                   help="may be repeated; each corpus becomes one dataset in the report")
    e.add_argument("--beam", type=int, help="beam width (greedy when omitted)")
    e.add_argument("--report", metavar="DIR")
    return parser, {"generate": g, "annotate": a, "train": t, "evaluate": e}


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def resolve_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse flags, fill gaps from ``--config`` and then from the defaults."""
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    sub = subparsers[args.command]
    try:
        if args.config:
            cfg = _load_config(args.config)
            if "in" in cfg:
                cfg["input"] = cfg.pop("in")
            unknown = sorted(set(cfg) - set(vars(args)) - {"quiet"})
            if unknown:
                raise UsageError(f"unknown config keys: {', '.join(unknown)}")
            actions = {a.dest: a for a in sub._actions}
            for key, value in cfg.items():
                if getattr(args, key, None) is None:
                    setattr(args, key, _coerce(actions.get(key), key, value))
        for key, value in DEFAULTS[args.command].items():
            if getattr(args, key) is None:
                setattr(args, key, value)
        missing = [k for k in REQUIRED[args.command] if getattr(args, k) is None]
        if missing:
            flags = ", ".join("--" + ("in" if k == "input" else k.replace("_", "-")) for k in missing)
            raise UsageError(f"missing required option(s): {flags}")
    except UsageError as exc:
        sub.error(str(exc))
    if isinstance(args.corpus if args.command == "evaluate" else None, str):
        args.corpus = [args.corpus]
    return args


def _coerce(action, key, value):
    if action is None or value is None:
        return value
    try:
        if action.type is not None and not isinstance(value, list):
            value = action.type(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config value for {key!r} is invalid: {value!r}") from exc
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config value for {key!r} must be one of {list(action.choices)}")
    return value


def _log_config(args: argparse.Namespace) -> None:
    log.info("resolved config: %s", json.dumps(vars(args), sort_keys=True))


def _require_file(path: str | Path, what: str) -> None:
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")


def cmd_generate(args) -> int:
    if args.count < 1:
        raise UsageError(f"--count must be >= 1, got {args.count}")
    if args.profile == "custom":
        if not args.mix:
            raise UsageError("--profile custom needs --mix")
        try:
            profile = corpus.DatasetProfile("custom", args.count, corpus.parse_mix(args.mix), args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        if args.mix:
            raise UsageError("--mix is only valid with --profile custom")
        profile = corpus.preset_profile(args.profile, args.count, args.seed)
    records = corpus.generate_dataset(profile)
    raw_path, ann_path = corpus.write_corpus(records, args.out)
    lo, median, hi = corpus.length_stats(records)
    print(f"wrote {len(records)} records to {raw_path} and {ann_path}")
    print(f"length min {lo} median {median:g} max {hi}")
    return EXIT_OK


def cmd_annotate(args) -> int:
    _require_file(args.input, "input log")
    records, rejects = truth.annotate_file(args.input, args.format)
    corpus.write_corpus(records, args.out)
    rejects_path = f"{args.out}.rejects.csv"
    truth.write_rejects(rejects, rejects_path)
    print(f"annotated {len(records)} lines, rejected {len(rejects)} (see {rejects_path})")
    return EXIT_OK


def _read_corpus(stem: str) -> list:
    for path in corpus.corpus_paths(stem):
        _require_file(path, "corpus file")
    try:
        return corpus.read_corpus(stem)
    except ValueError as exc:
        raise OSError(f"malformed corpus {stem}: {exc}") from exc


def cmd_train(args) -> int:
    try:
        model_cfg = ModelConfig(arch=args.arch, cell=args.cell, cells=args.cells, dropout=args.dropout,
                                embedding_dim=args.embedding, layers=args.layers, max_len=args.max_len)
        opt_cfg = OptimizerConfig(learning_rate=args.lr, batch_size=args.batch,
                                  max_epochs=args.epochs, patience=args.patience)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.cells not in REFERENCE_CELLS:
        log.warning("--cells %d is outside the usual grid %s", args.cells, REFERENCE_CELLS)
    if args.dropout not in REFERENCE_DROPOUTS:
        log.warning("--dropout %g is outside the usual grid %s", args.dropout, REFERENCE_DROPOUTS)
    records = _read_corpus(args.corpus)
    validation = _read_corpus(args.val_corpus) if args.val_corpus else None
    try:
        ckpt, history = train(model_cfg, opt_cfg, records, seed=args.seed, validation=validation)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ckpt.save(args.out)
    history_path = f"{args.out}.history.csv"
    write_history(history, history_path)
    print(f"best epoch {ckpt.epoch} val_loss {ckpt.best_val_loss:.6f}")
    print(f"final epoch {history[-1].epoch} train_loss {history[-1].train_loss:.6f}")
    print(f"wrote {args.out} and {history_path}")
    return EXIT_OK


def _fmt_row(metric: str, dataset: str, values, width: int) -> str:
    if metric == "D_A":
        cells = [f"{v:g}" if float(v).is_integer() else f"{v:.2f}" for v in values]
    else:
        cells = [f"{v:.2f}" for v in values]
    return f"{metric:<4} {dataset:<{width}} " + " ".join(f"{c:>8}" for c in cells)


def cmd_evaluate(args) -> int:
    _require_file(args.model, "checkpoint")
    if args.beam is not None and args.beam < 1:
        raise UsageError(f"--beam must be >= 1, got {args.beam}")
    labels = [Path(stem).name for stem in args.corpus]
    if len(set(labels)) != len(labels):
        raise UsageError("evaluation corpora must have distinct file names")
    datasets = [_read_corpus(stem) for stem in args.corpus]
    for stem, records in zip(args.corpus, datasets):
        if not records:
            raise UsageError(f"evaluation corpus {stem} is empty")
    try:
        ckpt = Checkpoint.load(args.model)
    except (ValueError, KeyError, TypeError) as exc:
        raise OSError(f"cannot read checkpoint {args.model}: {exc}") from exc
    runs = {}
    for label, records in zip(labels, datasets):
        runs[label] = metrics.evaluate_corpus(ckpt, records, beam_width=args.beam)
    metrics.emit_report(runs, args.report)
    width = max(7, *(len(x) for x in labels))
    print(f"{'':<4} {'dataset':<{width}} " + " ".join(f"{n:>8}" for n in metrics.STAT_NAMES))
    for metric, attr in (("D_A", "da"), ("D_R", "dr")):
        for label, (_, summary) in runs.items():
            print(_fmt_row(metric, label, getattr(summary, attr).values(), width))
    print(f"report written to {args.report}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "annotate": cmd_annotate, "train": cmd_train,
            "evaluate": cmd_evaluate}


def main(argv: list[str] | None = None) -> int:
    args = resolve_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    _log_config(args)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"logtranslate {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"logtranslate {args.command}: training diverged: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"logtranslate {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
