"""Command-line front door.

Subcommands: run, ablate, oracle, synth, ckpt. Reports go to stdout as
key=value text and are byte-deterministic for fixed inputs and flags;
timing goes to stderr. Exit codes: 0 success, 2 input or format problem,
3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import FormatError, InvalidInput, NumericalBreakdown
from .harness import (
    format_ablation,
    format_oracle,
    format_report,
    run_ablation,
    run_oracle,
    run_stream,
)
from .state import AdaptConfig, unit_normalize
from .stream_io import (
    FLAG_LABELS,
    EmbeddingFileHeader,
    SyntheticSpec,
    checkpoint_state,
    generate_synthetic,
    read_embedding_stream,
    restore_state,
    write_embedding_file,
)


def _add_engine_flags(parser):
    parser.add_argument("--alpha", type=float, default=0.2, help="fusion weight on the generative branch")
    parser.add_argument("--beta", type=float, default=4.5, help="entropy-weight sharpness")
    parser.add_argument("--temp", type=float, default=100.0, help="zero-shot softmax temperature")
    parser.add_argument("--eps", type=float, default=1e-4, help="covariance ridge coefficient")
    parser.add_argument("--refactor-interval", type=int, default=64, help="factorization refresh cadence")
    parser.add_argument("--no-adapt", action="store_true", help="disable state updates")
    parser.add_argument("--no-normalize", action="store_true", help="skip unit normalization at ingestion")
    parser.add_argument("--seed", type=int, default=0, help="echoed in reports; unused for file runs")
    parser.add_argument("--csv-log", metavar="PATH", help="write a per-sample CSV log")
    parser.add_argument("--checkpoint", metavar="PATH", help="save the final state")


def _config(args) -> AdaptConfig:
    return AdaptConfig(
        alpha=args.alpha,
        beta=args.beta,
        zero_shot_temperature=args.temp,
        regularization_epsilon=args.eps,
        refactor_interval=args.refactor_interval,
        normalize_features=not args.no_normalize,
        adaptation_enabled=not args.no_adapt,
    )


def _cmd_run(args) -> int:
    config = _config(args)
    with open(args.input, "rb") as fp:
        _, text, records = read_embedding_stream(fp)
        if args.csv_log:
            with open(args.csv_log, "w") as sink:
                report, state = run_stream(text, records, config, csv_sink=sink)
        else:
            report, state = run_stream(text, records, config)
    if args.checkpoint:
        with open(args.checkpoint, "wb") as fp:
            fp.write(checkpoint_state(state))
    sys.stdout.write(f"seed={args.seed}\n")
    sys.stdout.write(format_report(report))
    sys.stderr.write(f"wall_time={report.wall_time:.3f}s\n")
    return 0


def _cmd_ablate(args) -> int:
    config = _config(args)

    def open_records():
        with open(args.input, "rb") as fp:
            _, text, records = read_embedding_stream(fp)
            return text, list(records)

    results = run_ablation(open_records, config)
    sys.stdout.write(format_ablation(results))
    return 0


def _cmd_oracle(args) -> int:
    config = _config(args)
    with open(args.input, "rb") as fp:
        _, text, records = read_embedding_stream(fp)
        result = run_oracle(text, records, config)
    sys.stdout.write(format_oracle(result))
    return 0


def _cmd_synth(args) -> int:
    k, d = args.classes, args.dim
    if args.proportions:
        props = np.array([float(v) for v in args.proportions.split(",")])
    else:
        props = np.full(k, 1.0 / k)
    # class directions come from a stream disjoint from the sample stream
    mean_rng = np.random.default_rng([args.seed, 1])
    means = args.mean_scale * unit_normalize(mean_rng.standard_normal((k, d)))
    spec = SyntheticSpec(
        num_classes=k,
        dim=d,
        class_means=means,
        shared_covariance=args.cov_scale * np.eye(d),
        class_proportions=props,
        text_embedding_noise=args.text_noise,
        seed=args.seed,
        count=args.count,
    )
    text, records = generate_synthetic(spec)
    header = EmbeddingFileHeader(dim=d, num_classes=k, record_count=args.count, flags=FLAG_LABELS)
    blob = write_embedding_file(header, text, records)
    with open(args.output, "wb") as fp:
        fp.write(blob)
    sys.stdout.write(f"wrote {args.output}: K={k} d={d} records={args.count} bytes={len(blob)}\n")
    return 0


def _cmd_ckpt(args) -> int:
    with open(args.path, "rb") as fp:
        state = restore_state(fp.read())
    k, d = state.means.shape
    sys.stdout.write(f"classes={k}\n")
    sys.stdout.write(f"dim={d}\n")
    sys.stdout.write(f"weighted_total={state.weighted_total:.12g}\n")
    sys.stdout.write(f"updates_since_refactor={state.updates_since_refactor}\n")
    sys.stdout.write(f"ridge_epsilon={state.ridge_epsilon:g}\n")
    sys.stdout.write(f"covariance_trace={np.trace(state.covariance):.12g}\n")
    for y in range(k):
        sys.stdout.write(f"soft_count[{y}]={state.soft_counts[y]:.12g}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamgda",
        description="Streaming test-time adaptation over embedding vectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="adapt over a stream and report accuracy")
    p_run.add_argument("input", help="embedding container file")
    _add_engine_flags(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_ablate = sub.add_parser("ablate", help="run the standard ablation grid")
    p_ablate.add_argument("input")
    _add_engine_flags(p_ablate)
    p_ablate.set_defaults(handler=_cmd_ablate)

    p_oracle = sub.add_parser("oracle", help="batch-EM reference fit and distances")
    p_oracle.add_argument("input")
    _add_engine_flags(p_oracle)
    p_oracle.set_defaults(handler=_cmd_oracle)

    p_synth = sub.add_parser("synth", help="generate a synthetic labeled stream")
    p_synth.add_argument("output")
    p_synth.add_argument("--classes", type=int, default=8)
    p_synth.add_argument("--dim", type=int, default=64)
    p_synth.add_argument("--count", type=int, default=5000)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--cov-scale", type=float, default=0.3)
    p_synth.add_argument("--mean-scale", type=float, default=2.0)
    p_synth.add_argument("--text-noise", type=float, default=0.5)
    p_synth.add_argument("--proportions", help="comma-separated class proportions")
    p_synth.set_defaults(handler=_cmd_synth)

    p_ckpt = sub.add_parser("ckpt", help="inspect a state checkpoint")
    p_ckpt.add_argument("path")
    p_ckpt.set_defaults(handler=_cmd_ckpt)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except NumericalBreakdown as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except (InvalidInput, FormatError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
