"""Command-line entry points: ``train``, ``eval``, ``ablate`` and ``trend``.

Configuration resolves in order preset -> ``--config`` file -> explicit flags.
Every run directory gets a ``config.txt`` echo that reproduces it exactly::

    python -m misa train --preset mosi --synthetic --seed 7 --out runs/a
    python -m misa train --config runs/a/config.txt --out runs/b   # same history
    python -m misa eval --run runs/a --export all
    python -m misa ablate --preset mosi --synthetic --rows 5,6,7 --out runs/abl
    python -m misa trend runs/a/history.jsonl

Exit codes: 0 success, 1 failed ablation row or non-decreasing trend,
2 configuration / data / checkpoint error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, format_config, parse_config_text
from .data import DatasetError, generate_synthetic, load_dataset
from .export import atomic_write, read_history, write_attention, write_embeddings, write_history
from .losses import NumericalError
from .metrics import format_report
from .model import MISA
from .training import evaluate, train

log = logging.getLogger("misa")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

CHECKPOINT, HISTORY, ECHO, METRICS = "model.ckpt", "history.jsonl", "config.txt", "metrics.txt"

# Ablation grid: label -> overrides applied to the base configuration.
ABLATION_ROWS = [
    ("MISA", {}),
    ("(-) language l", {"drop_modality": "l"}),
    ("(-) visual v", {"drop_modality": "v"}),
    ("(-) audio a", {"drop_modality": "a"}),
    ("(-) L_sim", {"alpha": 0.0}),
    ("(-) L_diff", {"beta": 0.0}),
    ("(-) L_recon", {"gamma": 0.0}),
    ("base", {"variant": "base"}),
    ("inv", {"variant": "inv"}),
    ("sFusion", {"variant": "sFusion"}),
    ("iFusion", {"variant": "iFusion"}),
]


class UsageError(ConfigError):
    pass


# -- configuration --------------------------------------------------------------
def _add_config_flags(p):
    p.add_argument("--preset", help="mosi, mosei, urfunny or none (default mosi)")
    p.add_argument("--config", help="flat 'key = value' file, e.g. a previous run's config.txt")
    p.add_argument("--seed", type=int)
    p.add_argument("--dataset", help="dataset directory (manifest.json + split .jsonl files)")
    p.add_argument("--synthetic", action="store_true", help="use the synthetic generator")
    p.add_argument("--variant", choices=["full", "base", "inv", "sFusion", "iFusion"])
    p.add_argument("--drop-modality", choices=["l", "v", "a"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")


def resolve_config(args):
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    preset = args.preset or values.pop("preset", None) or "mosi"
    values.pop("preset", None)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    flags = {"seed": args.seed, "dataset": args.dataset, "variant": args.variant,
             "drop_modality": args.drop_modality, "alpha": args.alpha, "beta": args.beta, "gamma": args.gamma}
    values.update({k: v for k, v in flags.items() if v is not None})
    if args.synthetic:
        values["synthetic"] = True
    cfg = RunConfig.from_preset(preset, **values)
    if not cfg.synthetic and not cfg.dataset:
        raise ConfigError("give --dataset DIR or --synthetic")
    cfg.modalities  # validates drop_modality
    return cfg


def load_data(cfg):
    if cfg.synthetic:
        data = generate_synthetic(cfg.synth_config())
    else:
        data = load_dataset(cfg.dataset)
    if data.manifest.task != cfg.task:
        raise ConfigError(f"dataset task is {data.manifest.task!r} but the config says {cfg.task!r}")
    if cfg.task == "classification" and data.manifest.n_classes != cfg.n_classes:
        raise ConfigError(f"dataset has {data.manifest.n_classes} classes, config has {cfg.n_classes}")
    return data


# -- runs -----------------------------------------------------------------------
def run_training(cfg, out):
    """Train one configuration into ``out``; returns (history, test metric dict)."""
    os.makedirs(out, exist_ok=True)
    atomic_write(os.path.join(out, ECHO), format_config(cfg))
    data = load_data(cfg)
    model = MISA(cfg.model_config(data.manifest.dims), seed=cfg.seed)
    result = train(model, data, cfg.train_config())
    write_history(os.path.join(out, HISTORY), result.history)
    save_checkpoint(os.path.join(out, CHECKPOINT), model.state_dict(), cfg.to_dict())
    metrics = {"best_epoch": result.best_epoch, **evaluate(model, data.test).metrics.as_dict()}
    atomic_write(os.path.join(out, METRICS), format_report(metrics))
    return result.history, metrics


def cmd_train(args):
    cfg = resolve_config(args)
    history, metrics = run_training(cfg, args.out)
    last = history[-1]
    print(f"trained {len(history)} epochs; val total {last.val['total']:.6g}; best epoch {metrics['best_epoch']}")
    sys.stdout.write(format_report(metrics))
    return EXIT_OK


def _load_model(path):
    try:
        saved, params = load_checkpoint(path)
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from None
    cfg = RunConfig.from_dict(saved)
    return cfg, params


def cmd_eval(args):
    ckpt = args.checkpoint or (os.path.join(args.run, CHECKPOINT) if args.run else None)
    if not ckpt:
        raise UsageError("give --checkpoint FILE or --run DIR")
    cfg, params = _load_model(ckpt)
    if args.dataset:
        cfg = dataclasses.replace(cfg, dataset=args.dataset, synthetic=False)
    data = load_data(cfg)
    model = MISA(cfg.model_config(data.manifest.dims), seed=cfg.seed)
    try:
        model.load_state_dict(params)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"checkpoint does not match the dataset/config: {exc}") from None
    result = evaluate(model, data.split(args.split))
    report = format_report(result.metrics.as_dict())
    sys.stdout.write(report)
    out = args.out or args.run or os.path.dirname(os.path.abspath(ckpt))
    os.makedirs(out, exist_ok=True)
    atomic_write(os.path.join(out, f"eval_{args.split}.txt"), report)
    if args.export in ("embeddings", "all"):
        n = write_embeddings(os.path.join(out, f"embeddings_{args.split}.txt"), result)
        print(f"wrote {n} embedding records")
    if args.export in ("attention", "all"):
        write_attention(os.path.join(out, f"attention_{args.split}.txt"),
                        os.path.join(out, f"attention_mean_{args.split}.txt"), result)
        print(f"wrote {len(result.ids)} attention maps over rows {' '.join(result.rows)}")
    return EXIT_OK


def parse_rows(text):
    if not text:
        return list(range(1, len(ABLATION_ROWS) + 1))
    try:
        rows = sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError:
        raise ConfigError(f"--rows expects comma-separated row numbers, got {text!r}") from None
    bad = [r for r in rows if not 1 <= r <= len(ABLATION_ROWS)]
    if bad or not rows:
        raise ConfigError(f"ablation rows must be in 1..{len(ABLATION_ROWS)}, got {text!r}")
    return rows


def ablation_config(base, row):
    label, overrides = ABLATION_ROWS[row - 1]
    merged = dict(overrides)
    if "drop_modality" in merged and base.drop_modality:
        merged["drop_modality"] = base.drop_modality + merged["drop_modality"]
    return label, dataclasses.replace(base, **merged)


def _ablation_job(base, row, out):
    label, cfg = ablation_config(base, row)
    try:
        _, metrics = run_training(cfg, os.path.join(out, f"row{row:02d}"))
        return row, label, "ok", metrics
    except Exception as exc:  # recorded, the sweep goes on
        return row, label, f"failed: {type(exc).__name__}: {exc}", {}


def format_table(results, keys):
    lines = ["\t".join(["row", "model", "status", *keys])]
    for row, label, status, metrics in results:
        cells = [f"{metrics[k]:.4f}" if k in metrics else "-" for k in keys]
        lines.append("\t".join([str(row), label, status, *cells]))
    return "\n".join(lines) + "\n"


def cmd_ablate(args):
    base = resolve_config(args)
    rows = parse_rows(args.rows)
    os.makedirs(args.out, exist_ok=True)
    atomic_write(os.path.join(args.out, ECHO), format_config(base))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_ablation_job, [base] * len(rows), rows, [args.out] * len(rows)))
    else:
        results = [_ablation_job(base, r, args.out) for r in rows]
    keys = ["mae", "corr", "acc7", "acc2_nonneg", "f_nonneg"] if base.task == "regression" else ["acc2", "f1"]
    table = format_table(results, keys)
    atomic_write(os.path.join(args.out, "ablation.tsv"), table)
    sys.stdout.write(table)
    failed = [r for r in results if r[2] != "ok"]
    for row, label, status, _ in failed:
        print(f"row {row} ({label}) {status}", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


def trend_summary(history, components=("sim", "diff", "recon")):
    """{(split, component): (first, last, decreasing)}; all-zero components are skipped."""
    out = {}
    for split in ("train", "val"):
        for c in components:
            first, last = history[0][split][c], history[-1][split][c]
            if first == 0 and last == 0:
                continue
            out[(split, c)] = (first, last, last < first)
    return out


def cmd_trend(args):
    try:
        history = read_history(args.history)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read history: {exc}") from None
    if not history:
        raise ConfigError("history is empty")
    summary = trend_summary(history)
    lines = [f"{split}\t{c}\t{a:.6g}\t{b:.6g}\t{'decreasing' if ok else 'NOT decreasing'}"
             for (split, c), (a, b, ok) in summary.items()]
    sys.stdout.write("split\tloss\tfirst\tlast\ttrend\n" + "".join(line + "\n" for line in lines))
    return EXIT_OK if all(ok for *_, ok in summary.values()) else EXIT_FAILED


# -- entry point ----------------------------------------------------------------
def build_parser():
    parser = argparse.ArgumentParser(prog="misa", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every epoch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one configuration")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint and export artifacts")
    p.add_argument("--checkpoint")
    p.add_argument("--run", help="run directory holding model.ckpt")
    p.add_argument("--dataset", help="evaluate on this dataset instead of the training one")
    p.add_argument("--split", choices=["train", "dev", "test"], default="test")
    p.add_argument("--export", choices=["embeddings", "attention", "all"])
    p.add_argument("--out", help="where to write reports (default: the run directory)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the ablation grid")
    _add_config_flags(p)
    p.add_argument("--rows", help="comma-separated row numbers 1-11 (default all)")
    p.add_argument("--jobs", type=int, default=1, help="parallel processes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("trend", help="check that regularizer losses decrease over a history")
    p.add_argument("history")
    p.set_defaults(func=cmd_trend)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, DatasetError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
