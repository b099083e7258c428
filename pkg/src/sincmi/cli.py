"""Command-line entry point: train, eval, filters, inspect, synth.

Exit codes: 0 success, 2 usage or configuration error, 3 data/shape
mismatch, 4 corrupt artifact. Human-readable output goes to stdout,
diagnostics to stderr. Seeds default to a fixed constant so documented
commands reproduce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .data import ContainerError, generate_synthetic, preprocess, read_container, write_container
from .network import (
    CheckpointError,
    ConfigError,
    Model,
    ModelConfig,
    build_model,
    count_parameters,
)
from .sincfilters import frequency_response, materialize_kernel, reparameterize_cutoffs
from .training import TrainConfig, TrainingError, evaluate, split_dataset, train

DEFAULT_SEED = 1234

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CORRUPT = 4

MODEL_KEYS = {"channels", "samples", "kernel_len", "n_filters", "depth_mult",
              "n_pointwise", "n_classes", "dropout_p", "celu_alpha"}
TRAIN_KEYS = {"learning_rate", "beta1", "beta2", "eps", "weight_decay",
              "batch_size", "epochs", "coupled_weight_decay"}
INT_KEYS = {"channels", "samples", "kernel_len", "n_filters", "depth_mult",
            "n_pointwise", "n_classes", "batch_size", "epochs"}
BOOL_KEYS = {"coupled_weight_decay"}


class CliError(Exception):
    def __init__(self, code, message):
        self.code = code
        self.message = message
        super().__init__(message)


def parse_config_file(path):
    """Flat `key = value` text; '#' starts a comment; unknown keys are errors."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_USAGE, f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(EXIT_USAGE, f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in MODEL_KEYS | TRAIN_KEYS:
            raise CliError(EXIT_USAGE, f"{path}:{lineno}: unknown key {key!r}")
        if key in BOOL_KEYS:
            if val.lower() not in ("true", "false"):
                raise CliError(EXIT_USAGE, f"{path}:{lineno}: {key} must be true/false")
            values[key] = val.lower() == "true"
        else:
            try:
                values[key] = int(val) if key in INT_KEYS else float(val)
            except ValueError as exc:
                raise CliError(EXIT_USAGE, f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def resolve_configs(values, paradigm=None, subject=None, seed=DEFAULT_SEED):
    model_kwargs = {k: v for k, v in values.items() if k in MODEL_KEYS}
    train_kwargs = {k: v for k, v in values.items() if k in TRAIN_KEYS}
    train_cfg = TrainConfig(seed=seed, **train_kwargs)
    if paradigm is not None:
        train_cfg.paradigm = paradigm
        train_cfg.subject = subject
    if "dropout_p" not in model_kwargs:
        model_kwargs["dropout_p"] = train_cfg.default_dropout()
    try:
        model_cfg = ModelConfig(**model_kwargs).validate()
        train_cfg.validate()
    except (ConfigError, ValueError) as exc:
        raise CliError(EXIT_USAGE, f"invalid configuration: {exc}") from exc
    return model_cfg, train_cfg


def _load_container(path):
    try:
        return read_container(path)
    except FileNotFoundError as exc:
        raise CliError(EXIT_USAGE, f"container not found: {path}") from exc
    except ContainerError as exc:
        raise CliError(EXIT_CORRUPT, f"corrupt container {path}: {exc}") from exc


def _load_checkpoint(path):
    try:
        return Model.load(path)
    except FileNotFoundError as exc:
        raise CliError(EXIT_USAGE, f"checkpoint not found: {path}") from exc
    except CheckpointError as exc:
        raise CliError(EXIT_CORRUPT, f"corrupt checkpoint {path}: {exc}") from exc


def _manifest_lines(config_path, model_cfg, train_cfg, seed, container_sha, out_dir):
    lines = [f"config {config_path}"]
    for key in sorted(MODEL_KEYS):
        lines.append(f"model.{key} {getattr(model_cfg, key)}")
    for key in sorted(TRAIN_KEYS):
        lines.append(f"train.{key} {getattr(train_cfg, key)}")
    lines.append(f"paradigm {train_cfg.paradigm}")
    lines.append(f"subject {train_cfg.subject}")
    lines.append(f"seed {seed}")
    lines.append(f"container_sha256 {container_sha}")
    lines.append(f"out {out_dir}")
    return lines


def cmd_train(args):
    values = parse_config_file(args.config)
    if args.paradigm in ("within_subject", "cross_subject") and args.subject is None:
        raise CliError(EXIT_USAGE, f"paradigm {args.paradigm} requires --subject")
    model_cfg, train_cfg = resolve_configs(values, paradigm=args.paradigm,
                                           subject=args.subject, seed=args.seed)
    raw_bytes = Path(args.data).read_bytes() if Path(args.data).exists() else None
    if raw_bytes is None:
        raise CliError(EXIT_USAGE, f"container not found: {args.data}")
    container_sha = hashlib.sha256(raw_bytes).hexdigest()
    trials = _load_container(args.data)
    trials = preprocess(trials)
    if trials.n_channels != model_cfg.channels or trials.n_samples != model_cfg.samples:
        raise CliError(EXIT_DATA,
                       f"data shape (C={trials.n_channels}, T={trials.n_samples}) does not "
                       f"match config (C={model_cfg.channels}, T={model_cfg.samples})")
    try:
        train_set, _ = split_dataset(trials, train_cfg.paradigm, train_cfg.subject)
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc

    model = build_model(model_cfg, seed=args.seed)
    try:
        curve = train(model, train_set, train_cfg)
    except TrainingError as exc:
        raise CliError(1, f"training aborted: {exc}") from exc

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = _manifest_lines(args.config, model_cfg, train_cfg, args.seed,
                            container_sha, args.out)
    manifest_hash = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    stamp = datetime.now(timezone.utc).isoformat()
    (out / "manifest.txt").write_text(
        "\n".join(lines + [f"hash {manifest_hash}", f"created {stamp}"]) + "\n")
    model.save(out / "model.ckpt")
    loss_lines = [f"# manifest {manifest_hash}"]
    loss_lines += [f"epoch {i} loss {v:.10f}" for i, v in enumerate(curve)]
    (out / "loss.txt").write_text("\n".join(loss_lines) + "\n")
    print(f"trained {train_cfg.epochs} epochs on {len(train_set)} trials")
    print(f"checkpoint {out / 'model.ckpt'}")
    return 0


def cmd_eval(args):
    model = _load_checkpoint(args.checkpoint)
    trials = preprocess(_load_container(args.data))
    if args.subject is not None:
        mask = trials.subjects == args.subject
        if not mask.any():
            raise CliError(EXIT_DATA, f"unknown subject id {args.subject}")
        trials = trials.subset(mask)
    cfg = model.config
    if trials.n_channels != cfg.channels or trials.n_samples != cfg.samples:
        raise CliError(EXIT_DATA,
                       f"data shape (C={trials.n_channels}, T={trials.n_samples}) does not "
                       f"match checkpoint (C={cfg.channels}, T={cfg.samples})")
    report = evaluate(model, trials)
    print(report.format())
    if args.report:
        Path(args.report).write_text(report.format() + "\n")
    return 0


def cmd_filters(args):
    model = _load_checkpoint(args.checkpoint)
    fs = args.fs
    f1_abs, f2_abs = reparameterize_cutoffs(model.params["sinc_f1"].data,
                                            model.params["sinc_f2"].data)
    lines = []
    for i, (lo, hi) in enumerate(zip(f1_abs, f2_abs)):
        lines.append(f"{i} {lo * fs:.6f} {hi * fs:.6f}")
    if args.response_points:
        L = model.config.kernel_len
        for i, (lo, hi) in enumerate(zip(f1_abs, f2_abs)):
            resp = frequency_response(materialize_kernel(lo, hi, L), args.response_points)
            lines.append(f"# response {i}")
            lines += [f"{f:.8f} {m:.10f}"
                      for f, m in zip(resp.frequencies, resp.magnitude)]
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {model.config.n_filters} filters to {args.out}")
    return 0


def cmd_inspect(args):
    values = parse_config_file(args.config)
    model_cfg, _ = resolve_configs(values)
    rows, total = count_parameters(model_cfg)
    width = max(len(name) for name, _ in rows)
    for name, count in rows:
        print(f"{name:<{width}} {count}")
    print(f"{'total':<{width}} {total}")
    return 0


def _parse_bands(text, n_classes):
    bands = []
    for part in text.split(","):
        part = part.strip()
        try:
            lo, hi = (float(v) for v in part.split("-"))
        except ValueError as exc:
            raise CliError(EXIT_USAGE, f"cannot parse band {part!r} (want lo-hi)") from exc
        if lo >= hi:
            raise CliError(EXIT_USAGE, f"band {part!r} has lo >= hi")
        bands.append((lo, hi))
    if len(bands) != n_classes:
        raise CliError(EXIT_USAGE, f"{len(bands)} bands given for {n_classes} classes")
    return bands


def cmd_synth(args):
    bands = _parse_bands(args.bands, args.classes)
    snr = math.inf if args.snr in ("inf", "infinity") else float(args.snr)
    try:
        trials = generate_synthetic(args.per_class, args.channels, args.samples,
                                    args.fs, bands, snr, args.seed,
                                    subjects=tuple(range(1, args.subjects + 1)))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    write_container(trials, args.out)
    print(f"wrote {len(trials)} trials to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="sincmi",
                                     description="Train and inspect sinc-filter EEG classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write run artifacts")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--paradigm", required=True,
                   choices=("competition", "within_subject", "cross_subject"))
    p.add_argument("--subject", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a container")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--subject", type=int)
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("filters", help="export learned filter bands (plot-ready text)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--response-points", type=int, default=0)
    p.add_argument("--fs", type=float, default=128.0)
    p.set_defaults(func=cmd_filters)

    p = sub.add_parser("inspect", help="print the per-layer parameter table")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("synth", help="generate a synthetic band-power container")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--bands", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--fs", type=float, default=128.0)
    p.add_argument("--snr", default="2.0")
    p.add_argument("--subjects", type=int, default=1)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
