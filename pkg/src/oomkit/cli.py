"""Command line front end.

Wires the pipeline stages to files: generate a ring HMM, sample and
corrupt trajectories, learn a model, evaluate or query it, or run a full
learning-curve experiment from a TOML config.  Every command that draws
random numbers takes an explicit ``--seed``; given the same files, flags
and seeds, every command writes byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import Alphabet, IoOom, Oom, reduce_to_oom
from .evaluation import (
    RingExperimentConfig,
    RobustEvalConfig,
    anll,
    laospe,
    learning_curve,
    oom_conditional_robust,
    write_curve_csv,
)
from .formats import (
    load_hmm,
    load_model,
    read_trajectories,
    save_hmm,
    save_model,
    write_trajectories,
)
from .learner import (
    LearnParams,
    LearnReport,
    format_report,
    learn_missing_value_oom,
    learn_short_trajectory_oom,
)
from .simulate import (
    AmsarTriggerPolicy,
    Hmm,
    child_seed,
    corrupt_amsar,
    gen_ring_hmm,
    mild_policy,
    sample_hmm,
    severe_policy,
)

__all__ = ["main"]


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _top_k(text: str) -> int | None:
    # 0 means "keep every word of the chosen length"
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value or None


def _load_process_model(path: str) -> Oom:
    model = load_model(path)
    if isinstance(model, IoOom):
        model = reduce_to_oom(model)
    return model


def _load_truth(path: str) -> Union[Oom, Hmm]:
    """Load a reference model, accepting either model JSON or HMM JSON."""
    with open(path) as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: not valid JSON ({err})") from None
    if isinstance(data, dict) and "transition" in data:
        return load_hmm(path)
    return _load_process_model(path)


def _cmd_gen_hmm(args: argparse.Namespace) -> None:
    hmm = gen_ring_hmm(args.states, args.obs, args.max_obs_per_state, args.seed)
    save_hmm(hmm, args.out)


def _cmd_sample(args: argparse.Namespace) -> None:
    hmm = load_hmm(args.hmm)
    trajectories = sample_hmm(
        hmm, args.length, count=args.count, burn_in=args.burn_in, seed=args.seed
    )
    write_trajectories(args.out, trajectories)


def _parse_symbol_list(text: str) -> list[str]:
    symbols = [t for t in text.split(",") if t]
    if not symbols:
        raise ValueError("symbol list is empty")
    return symbols


def _cmd_corrupt(args: argparse.Namespace) -> None:
    data = read_trajectories(args.data)
    if not data:
        raise ValueError(f"{args.data}: no trajectories")
    if any(traj.missing_count for traj in data):
        raise ValueError(f"{args.data}: input already contains missing values")
    if args.policy == "custom":
        if args.triggers is None or args.miss_prob is None:
            raise ValueError("custom policy needs --triggers and --miss-prob")
        policy = AmsarTriggerPolicy(frozenset(_parse_symbol_list(args.triggers)), args.miss_prob)
    else:
        if args.triggers is not None or args.miss_prob is not None:
            raise ValueError(f"--triggers/--miss-prob conflict with --policy {args.policy}")
        symbols = sorted({tok for traj in data for tok in traj.obs})
        make = mild_policy if args.policy == "mild" else severe_policy
        policy = make(Alphabet(symbols), child_seed(args.seed, 0))
    corrupted = [
        corrupt_amsar(traj, policy, child_seed(args.seed, 1, j))
        for j, traj in enumerate(data)
    ]
    write_trajectories(args.out, corrupted)


def _cmd_learn(args: argparse.Namespace) -> None:
    data = read_trajectories(args.data)
    params = LearnParams(dim=args.dim, word_length=args.word_len, top_k=args.top_k)
    alphabet = Alphabet(_parse_symbol_list(args.alphabet)) if args.alphabet else None
    learn = learn_missing_value_oom if args.mode == "missing" else learn_short_trajectory_oom
    report = LearnReport()
    model = learn(data, params, alphabet, report)
    save_model(model, args.out)
    if args.verbose:
        print(format_report(report), file=sys.stderr)


def _cmd_eval(args: argparse.Namespace) -> None:
    if args.metric == "anll" and args.truth is not None:
        raise ValueError("--truth only applies to the laospe metric")
    if args.metric == "laospe" and args.truth is None:
        raise ValueError("the laospe metric needs --truth")
    model = _load_process_model(args.model)
    data = read_trajectories(args.data)
    config = RobustEvalConfig(floor=args.floor)
    if args.metric == "anll":
        value = anll(model, data, config)
    else:
        value = laospe(model, _load_truth(args.truth), data, config)
    print("-inf" if value == float("-inf") else repr(value))


def _cmd_predict(args: argparse.Namespace) -> None:
    model = _load_process_model(args.model)
    prefix = args.prefix.split()
    if any(s == "_" for s in prefix):
        raise ValueError("prefix must be fully observed")
    dist = oom_conditional_robust(model, prefix, RobustEvalConfig(floor=args.floor))
    for symbol, p in zip(model.alphabet, dist):
        print(f"{symbol} {float(p)!r}")


def _cmd_experiment(args: argparse.Namespace) -> None:
    with open(args.config, "rb") as handle:
        try:
            raw = tomllib.load(handle)
        except tomllib.TOMLDecodeError as err:
            raise ValueError(f"{args.config}: {err}") from None
    out = raw.pop("out", None)
    if not isinstance(out, str) or not out:
        raise ValueError(f"{args.config}: missing output path key 'out'")
    try:
        config = RingExperimentConfig.from_mapping(raw)
    except (TypeError, ValueError) as err:
        raise ValueError(f"{args.config}: {err}") from None
    points = learning_curve(config)
    if not points:
        raise ValueError("every learn attempt failed; nothing to write")
    write_curve_csv(points, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oomkit",
        description="Learn and evaluate operator models of discrete processes "
        "from trajectories with missing values.",
    )
    parser.add_argument(
        "--verbose", action="store_true", help="log progress details to stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen-hmm", help="generate a random ring-topology HMM")
    p.add_argument("--states", type=_positive, required=True, help="number of hidden states")
    p.add_argument("--obs", type=_positive, required=True, help="number of observation symbols")
    p.add_argument(
        "--max-obs-per-state",
        type=_positive,
        default=2,
        help="emissions supported per state (default 2)",
    )
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="HMM JSON output path")
    p.set_defaults(func=_cmd_gen_hmm)

    p = sub.add_parser("sample", help="sample trajectories from an HMM")
    p.add_argument("--hmm", required=True, help="HMM JSON input path")
    p.add_argument("--length", type=_positive, required=True)
    p.add_argument("--count", type=_positive, default=1)
    p.add_argument(
        "--burn-in",
        type=int,
        default=1000,
        help="steps discarded before each trajectory (default 1000)",
    )
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="trajectory file output path")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("corrupt", help="knock out values after trigger symbols")
    p.add_argument("--data", required=True, help="fully observed trajectory file")
    p.add_argument(
        "--policy",
        choices=("mild", "severe", "custom"),
        default="custom",
        help="mild/severe draw triggers from the symbols present in the data; "
        "custom takes --triggers and --miss-prob",
    )
    p.add_argument("--triggers", help="comma-separated trigger symbols (custom policy)")
    p.add_argument("--miss-prob", type=float, help="knockout probability (custom policy)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="corrupted trajectory file output path")
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("learn", help="learn a model from trajectories")
    p.add_argument("--data", required=True, help="trajectory file, may contain _")
    p.add_argument("--dim", type=_positive, required=True, help="model dimension")
    p.add_argument(
        "--word-len", type=_positive, default=3, help="row/column word length (default 3)"
    )
    p.add_argument(
        "--top-k",
        type=_top_k,
        default=512,
        help="keep this many most frequent words, 0 for all (default 512)",
    )
    p.add_argument(
        "--mode",
        choices=("missing", "short"),
        default="missing",
        help="missing: count across missing values; short: use only fully "
        "observed runs (default missing)",
    )
    p.add_argument(
        "--alphabet",
        help="comma-separated symbol order (default: observed symbols, sorted)",
    )
    p.add_argument("--out", required=True, help="model JSON output path")
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("eval", help="score a model on fully observed test data")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--data", required=True, help="test trajectory file")
    p.add_argument("--metric", choices=("laospe", "anll"), required=True)
    p.add_argument("--truth", help="reference model or HMM JSON (laospe only)")
    p.add_argument(
        "--floor", type=float, default=1e-6, help="probability clamp floor (default 1e-6)"
    )
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="print the next-symbol distribution")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument(
        "--prefix", default="", help="observed prefix, space-separated (default: empty)"
    )
    p.add_argument(
        "--floor", type=float, default=1e-6, help="probability clamp floor (default 1e-6)"
    )
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("experiment", help="run a learning-curve experiment")
    p.add_argument("--config", required=True, help="TOML config path")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ValueError, OSError) as err:
        message = " ".join(str(err).split()) or type(err).__name__
        print(f"oomkit: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
