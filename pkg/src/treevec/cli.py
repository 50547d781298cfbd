"""Command-line front end.

Subcommands: split, export-ast, embed, train, eval, bench. A flat
``key = value`` config file can seed any option; explicit flags win.
Exit codes: 0 success, 1 user/data error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from . import __version__
from .ast_core import dumps_ast
from .batching import build_level_plan, flatten
from .checkpoint import Checkpoint
from .datasets import (
    build_classification_data,
    build_clone_data,
    load_classification_file,
    load_pairs_file,
    load_program_table,
)
from .errors import (
    CheckpointError,
    ConfigError,
    DataFormatError,
    EmptyIdentifierSet,
    ParseError,
    SchemaError,
    TreevecError,
    UnknownProfile,
)
from .grvu import Vocabulary
from .kernels import available_backends, backend_name, select_backend
from .minilang import parse_minilang
from .model import CodeModel, TrainConfig
from .splitter import default_identifiers, split
from .tape import no_grad
from .training import evaluate_classification, evaluate_clone, train

_USER_ERRORS = (
    ParseError,
    SchemaError,
    DataFormatError,
    CheckpointError,
    ConfigError,
    UnknownProfile,
    EmptyIdentifierSet,
    OSError,
)


def _read_config_file(path) -> dict:
    """Flat key = value lines; values parsed as JSON scalars when possible."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                key = key.strip().replace("-", "_")
                value = value.strip()
                try:
                    values[key] = json.loads(value)
                except json.JSONDecodeError:
                    values[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treevec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"treevec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--granularity", choices=("statement", "program", "token"),
                       default="statement")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p_split = sub.add_parser("split", help="print the statement subtree sequence")
    p_split.add_argument("source", help="mini-language source file")
    add_common(p_split)

    p_export = sub.add_parser("export-ast", help="parse a source file and emit AST JSON")
    p_export.add_argument("source")
    p_export.add_argument("-o", "--output", help="output path (default: stdout)")
    p_export.add_argument("--indent", type=int, default=None)
    add_common(p_export)

    p_embed = sub.add_parser("embed", help="print the code vector of a source file")
    p_embed.add_argument("source")
    p_embed.add_argument("--checkpoint", required=True)
    add_common(p_embed)

    p_train = sub.add_parser("train", help="train a model and write a checkpoint")
    p_train.add_argument("dataset", help="classification records or clone pairs (jsonl)")
    p_train.add_argument("--task", choices=("classify", "clone"), default="classify")
    p_train.add_argument("--programs", help="program table for clone pairs (jsonl)")
    p_train.add_argument("-o", "--output", default="model.ckpt")
    p_train.add_argument("--log", help="metrics log path (default: <output>.metrics.jsonl)")
    p_train.add_argument("--d", type=int, default=128)
    p_train.add_argument("--m", type=int, default=None)
    p_train.add_argument("--learning-rate", type=float, default=1e-3)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--epochs", type=int, default=10)
    p_train.add_argument("--precision", choices=("f32", "f64"), default="f32")
    p_train.add_argument("--disable-grvu", action="store_true")
    p_train.add_argument("--disable-grtu", action="store_true")
    p_train.add_argument("--use-rvnn", action="store_true")
    p_train.add_argument("--freeze-embeddings", action="store_true")
    p_train.add_argument("--pretrain-epochs", type=int, default=0)
    p_train.add_argument("--val-frac", type=float, default=0.2)
    p_train.add_argument("--test-frac", type=float, default=0.2)
    add_common(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p_eval.add_argument("dataset")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--task", choices=("classify", "clone"), default=None,
                        help="default: the checkpoint's task")
    p_eval.add_argument("--programs")
    add_common(p_eval)

    p_bench = sub.add_parser("bench", help="representation-phase timing per batch size")
    p_bench.add_argument("corpus", help="program table (jsonl)")
    p_bench.add_argument("--batch-sizes", default="1,2,4,8,16,32")
    p_bench.add_argument("--runs", type=int, default=5)
    p_bench.add_argument("--d", type=int, default=64)
    p_bench.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")
    add_common(p_bench)

    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        overrides = _read_config_file(args.config)
        unknown = set(overrides) - set(vars(args))
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        # Config file fills values; explicit flags already won at parse
        # time, so reparse with the file's values as defaults.
        parser.set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def _load_source_sequence(path, granularity):
    with open(path, "r", encoding="utf-8") as fh:
        source = fh.read()
    ast = parse_minilang(source)
    return split(ast, default_identifiers("minilang"), granularity)


def cmd_split(args) -> int:
    seq = _load_source_sequence(args.source, args.granularity)
    if args.format == "json":
        print(json.dumps(seq.display_labels()))
    else:
        for label in seq.display_labels():
            print(label)
    return 0


def cmd_export_ast(args) -> int:
    with open(args.source, "r", encoding="utf-8") as fh:
        ast = parse_minilang(fh.read())
    text = dumps_ast(ast, indent=args.indent)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_embed(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    model, _ = checkpoint.build()
    seq = _load_source_sequence(args.source, checkpoint.config.granularity)
    vector = model.encode_one(seq)
    if args.format == "json":
        print(json.dumps([float(x) for x in vector]))
    else:
        print(" ".join(repr(float(x)) for x in vector))
    return 0


def _train_config_from_args(args) -> TrainConfig:
    return TrainConfig(
        d=args.d,
        m=args.m,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        precision=args.precision,
        granularity=args.granularity,
        disable_grvu=args.disable_grvu,
        disable_grtu=args.disable_grtu,
        use_rvnn=args.use_rvnn,
        freeze_embeddings=args.freeze_embeddings,
        pretrain_epochs=args.pretrain_epochs,
    ).validate()


def cmd_train(args) -> int:
    config = _train_config_from_args(args)
    identifiers = default_identifiers("minilang")
    if args.task == "classify":
        samples, num_classes = load_classification_file(
            args.dataset, identifiers, config.granularity
        )
        dataset = build_classification_data(
            samples, num_classes, args.val_frac, args.test_frac, seed=config.seed
        )
    else:
        if not args.programs:
            raise DataFormatError("clone training needs --programs")
        programs = load_program_table(args.programs, identifiers, config.granularity)
        pairs = load_pairs_file(args.dataset, programs)
        dataset = build_clone_data(programs, pairs, args.val_frac, args.test_frac,
                                   seed=config.seed)

    log_path = args.log or f"{args.output}.metrics.jsonl"
    log_fh = open(log_path, "a", encoding="utf-8")

    def log(record):
        log_fh.write(json.dumps(record) + "\n")
        log_fh.flush()

    try:
        checkpoint = train(dataset, config, log=log)
        if args.task == "classify":
            final = {"test_accuracy": evaluate_classification(checkpoint, dataset.test)}
        else:
            final = dict(evaluate_clone(checkpoint, dataset.programs, dataset.test))
            final = {f"test_{k}": v for k, v in final.items()}
        log(final)
    finally:
        log_fh.close()
    checkpoint.save(args.output)
    if args.format == "json":
        print(json.dumps({"checkpoint": args.output, **final}))
    else:
        for key, value in final.items():
            print(f"{key}: {value:.4f}")
        print(f"checkpoint written to {args.output}")
    return 0


def cmd_eval(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    task = args.task or checkpoint.task
    identifiers = default_identifiers("minilang")
    granularity = checkpoint.config.granularity
    if task == "classify":
        samples, _ = load_classification_file(args.dataset, identifiers, granularity)
        metrics = {"accuracy": evaluate_classification(checkpoint, samples)}
    else:
        if not args.programs:
            raise DataFormatError("clone evaluation needs --programs")
        programs = load_program_table(args.programs, identifiers, granularity)
        pairs = load_pairs_file(args.dataset, programs)
        metrics = evaluate_clone(checkpoint, programs, pairs)
    if args.format == "json":
        print(json.dumps(metrics))
    else:
        for key, value in metrics.items():
            print(f"{key}: {value:.4f}")
    return 0


def run_bench(sequences, batch_sizes, runs: int, d: int, seed: int):
    """Median per-sample representation time for each batch size.

    Parsing and splitting happen before any timer starts; the timed
    region covers embedding, the level-synchronous tree pass, the
    bidirectional sequence pass, and pooling.
    """
    rng = np.random.default_rng(seed)
    config = TrainConfig(d=d, m=d, seed=seed).validate()
    vocab = Vocabulary.from_sequences(sequences)
    model = CodeModel.create(config, vocab, rng)

    rows = []
    base = None
    for bsize in batch_sizes:
        chunks = [sequences[i:i + bsize] for i in range(0, len(sequences), bsize)]
        level_invocations = [
            build_level_plan(flatten(chunk), vocab).level_count for chunk in chunks
        ]
        times = []
        for _ in range(runs + 1):
            start = time.perf_counter()
            with no_grad():
                for chunk in chunks:
                    model.encode_rows(chunk)
            times.append((time.perf_counter() - start) / len(sequences))
        times = times[1:]  # first pass warms caches and allocators
        per_sample = statistics.median(times)
        if base is None:
            base = per_sample
        rows.append(
            {
                "batch_size": bsize,
                "per_sample_ms": per_sample * 1e3,
                "speedup_vs_b1": base / per_sample,
                "level_invocations": float(np.mean(level_invocations)),
            }
        )
    return rows


def cmd_bench(args) -> int:
    try:
        batch_sizes = [int(b) for b in args.batch_sizes.split(",") if b.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --batch-sizes: {exc}") from exc
    if not batch_sizes or any(b <= 0 for b in batch_sizes):
        raise ConfigError("batch sizes must be positive integers")
    identifiers = default_identifiers("minilang")
    programs = load_program_table(args.corpus, identifiers, args.granularity)
    sequences = list(programs.values())

    previous = backend_name()
    if args.backend != "auto":
        if args.backend not in available_backends():
            raise ConfigError(f"backend {args.backend!r} not built")
        select_backend(args.backend)
    try:
        rows = run_bench(sequences, batch_sizes, args.runs, args.d, args.seed)
    finally:
        select_backend(previous)

    if args.format == "json":
        print(json.dumps({"backend": args.backend, "rows": rows}))
    else:
        print(f"# backend={args.backend} corpus={len(sequences)} runs={args.runs} d={args.d}")
        print(f"{'batch_size':>10} {'per_sample_ms':>14} {'speedup_vs_B1':>14} {'level_inv':>10}")
        for row in rows:
            print(
                f"{row['batch_size']:>10} {row['per_sample_ms']:>14.4f} "
                f"{row['speedup_vs_b1']:>14.2f} {row['level_invocations']:>10.1f}"
            )
    return 0


_COMMANDS = {
    "split": cmd_split,
    "export-ast": cmd_export_ast,
    "embed": cmd_embed,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return _COMMANDS[args.command](args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TreevecError as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
