"""Command-line entry point.

Subcommands tie the pieces together: gen-corpus, pretrain, train, prove,
eval, ablate and oracle. Every command with a --seed is deterministic and
writes byte-identical outputs across runs (single-actor mode). Exit codes:
0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .corpus import generate_corpus, load_corpus, save_corpus, split_corpus
from .env import Hyperstate, Theorem, parse_obligation
from .oracle import optimal_value, shortest_proof
from .predictor import train_predictor
from .reports import build_summary, write_report
from .search import (
    DEFAULT_BUDGET,
    ProbabilityScorer,
    ValueScorer,
    astar_search,
    best_first_search,
    dfs_search,
    greedy_search,
)
from .trainer import TrainerConfig, load_checkpoint, save_checkpoint, train

__all__ = ["main", "build_parser"]

EVAL_STRATEGIES = ("astar", "bestfirst", "bestfirst_prob", "dfs", "greedy", "greedy_prob")

WIDTH_SWEEP = (3, 5, 7, 9, 11)
GAMMA_SWEEP = (0.5, 0.7, 0.9, 0.99)


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; runtime problems exit 2 (handled in main)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _gamma(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"gamma must lie in (0, 1), got {text}")
    return value


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"ratio must lie in [0, 1], got {text}")
    return value


def _counts(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("counts must be three comma-separated integers")
    values = tuple(int(p) for p in parts)
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("counts must be nonnegative")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="valueprover", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a theorem corpus with oracle proofs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--counts", type=_counts, default=(12, 12, 12), help="per-family counts a,b,c")
    p.add_argument("--out", required=True)

    for name in ("pretrain", "train"):
        p = sub.add_parser(name, help=f"{name} a value model from a corpus")
        p.add_argument("--corpus", required=True)
        p.add_argument("--out", required=True, help="checkpoint path; report written next to it")
        p.add_argument("--gamma", type=_gamma, default=0.9)
        p.add_argument("--width", type=int, default=5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--actors", type=int, default=1)
        p.add_argument("--test-ratio", type=_ratio, default=0.25)
        p.add_argument("--rl-epochs", type=int, default=1)
        p.add_argument("--pretrain-epochs", type=int, default=800)
        p.add_argument("--min-drop-length", type=int, default=2)
        p.add_argument("--max-drop-length", type=int, default=6)
        p.add_argument("--no-subproof-tasks", action="store_true")

    p = sub.add_parser("prove", help="search for a proof of one theorem")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--theorem", required=True, help="canonical obligation text (binders + goal)")
    p.add_argument("--strategy", choices=("astar", "bestfirst", "dfs", "greedy"), default="astar")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--width", type=int, default=None)

    p = sub.add_parser("eval", help="run strategies over a corpus split and write a report")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--strategies", default="astar,dfs", help=f"comma list from {EVAL_STRATEGIES}")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out", required=True, help="report directory")

    p = sub.add_parser("ablate", help="hyperparameter and design sweeps")
    p.add_argument("--sweep", choices=("width", "gamma", "scorer", "obligation-training"), required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="sweep output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=_gamma, default=0.9)
    p.add_argument("--width", type=int, default=5)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--test-ratio", type=_ratio, default=0.25)
    p.add_argument("--rl-epochs", type=int, default=1)
    p.add_argument("--pretrain-epochs", type=int, default=800)
    p.add_argument("--min-drop-length", type=int, default=2)
    p.add_argument("--max-drop-length", type=int, default=6)

    p = sub.add_parser("oracle", help="brute-force shortest proof of one obligation")
    p.add_argument("obligation", help="canonical obligation text")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--gamma", type=_gamma, default=0.9)

    return parser


# ---------------------------------------------------------------------------


def cmd_gen_corpus(args) -> int:
    entries, summary = generate_corpus(args.seed, args.counts)
    save_corpus(entries, args.out)
    print(f"wrote {len(entries)} entries to {args.out} (discarded {summary.discarded})")
    return 0


def _config_from_args(args, rl: bool) -> TrainerConfig:
    return TrainerConfig(
        gamma=args.gamma,
        width=args.width,
        seed=args.seed,
        test_ratio=args.test_ratio,
        actor_count=getattr(args, "actors", 1),
        rl_epochs=args.rl_epochs if rl else 0,
        pretrain_epochs=getattr(args, "pretrain_epochs", 800),
        min_drop_length=args.min_drop_length,
        max_drop_length=args.max_drop_length,
        subproof_tasks=not getattr(args, "no_subproof_tasks", False),
    )


def _training_pairs(entries):
    from .env import replay_script

    pairs = []
    for entry in entries:
        for before, tactic, _ in replay_script(entry.theorem, entry.proof):
            pairs.append((before.first, tactic))
    return pairs


def run_training(corpus_path: str, config: TrainerConfig):
    """Shared pipeline: load, split, fit the predictor, train the model."""
    entries = load_corpus(corpus_path)
    split = split_corpus(entries, config.seed, config.test_ratio)
    if not split.train:
        raise RuntimeError("the training split is empty")
    predictor = train_predictor(
        _training_pairs(split.train),
        epochs=config.predictor_epochs,
        learning_rate=config.predictor_learning_rate,
        seed=config.seed,
    )
    model, report = train(split, predictor, config)
    return model, predictor, report, split


def cmd_train(args, rl: bool) -> int:
    config = _config_from_args(args, rl)
    model, predictor, report, _ = run_training(args.corpus, config)
    save_checkpoint(args.out, model, predictor, config)
    report_path = args.out + ".report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote checkpoint {args.out} and report {report_path}")
    return 0


def run_strategy(strategy: str, theorem: Theorem, model, predictor, width: int, budget: int):
    value_scorer = ValueScorer.for_model(model)
    prob_scorer = ProbabilityScorer()
    if strategy == "astar":
        return astar_search(theorem, value_scorer, predictor, width, budget)
    if strategy == "bestfirst":
        return best_first_search(theorem, value_scorer, predictor, width, budget)
    if strategy == "bestfirst_prob":
        return best_first_search(theorem, prob_scorer, predictor, width, budget)
    if strategy == "dfs":
        return dfs_search(theorem, predictor, width, budget)
    if strategy == "greedy":
        return greedy_search(theorem, value_scorer, predictor, width, budget)
    if strategy == "greedy_prob":
        return greedy_search(theorem, prob_scorer, predictor, width, budget)
    raise RuntimeError(f"unknown strategy {strategy!r}")


def cmd_prove(args) -> int:
    model, predictor, config = load_checkpoint(args.checkpoint)
    statement = parse_obligation(args.theorem)
    theorem = Theorem("goal", statement)
    width = args.width if args.width is not None else config.width
    result = run_strategy(args.strategy, theorem, model, predictor, width, args.budget)
    print(json.dumps(result.to_record("goal", args.strategy), sort_keys=True))
    if result.proved:
        print(str(result.script))
    return 0


def run_eval(model, predictor, entries, strategies, width: int, budget: int):
    rows = []
    for strategy in strategies:
        for entry in entries:
            result = run_strategy(strategy, entry.theorem, model, predictor, width, budget)
            rows.append(result.to_record(entry.theorem.id, strategy, include_wall=False))
    return rows


def cmd_eval(args) -> int:
    model, predictor, config = load_checkpoint(args.checkpoint)
    entries = load_corpus(args.corpus)
    split = split_corpus(entries, config.seed, config.test_ratio)
    chosen = split.test if args.split == "test" else split.train
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for strategy in strategies:
        if strategy not in EVAL_STRATEGIES:
            raise RuntimeError(f"unknown strategy {strategy!r}; choose from {EVAL_STRATEGIES}")
    rows = run_eval(model, predictor, chosen, strategies, config.width, args.budget)
    summary = build_summary(rows, strategies)
    write_report(args.out, rows, strategies)
    proved = {s: summary["strategies"][s]["proved"] for s in strategies}
    print(f"evaluated {len(chosen)} theorems; proved per strategy: {proved}")
    return 0


def _base_config(args) -> TrainerConfig:
    return TrainerConfig(
        gamma=args.gamma,
        width=args.width,
        seed=args.seed,
        test_ratio=args.test_ratio,
        rl_epochs=args.rl_epochs,
        pretrain_epochs=args.pretrain_epochs,
        min_drop_length=args.min_drop_length,
        max_drop_length=args.max_drop_length,
    )


def cmd_ablate(args) -> int:
    base = _base_config(args)
    os.makedirs(args.out, exist_ok=True)
    sweep_rows = []

    def run_setting(name: str, config: TrainerConfig, strategies: list[str]) -> dict:
        model, predictor, _, split = run_training(args.corpus, config)
        rows = run_eval(model, predictor, split.test, strategies, config.width, args.budget)
        summary = write_report(os.path.join(args.out, name), rows, strategies)
        return summary

    if args.sweep == "width":
        for width in WIDTH_SWEEP:
            config = dataclasses.replace(base, width=width)
            summary = run_setting(f"width-{width}", config, ["astar"])
            sweep_rows.append({"setting": f"width={width}", **summary["strategies"]["astar"]})
    elif args.sweep == "gamma":
        for gamma in GAMMA_SWEEP:
            config = dataclasses.replace(base, gamma=gamma)
            summary = run_setting(f"gamma-{gamma}", config, ["astar"])
            sweep_rows.append({"setting": f"gamma={gamma}", **summary["strategies"]["astar"]})
    elif args.sweep == "scorer":
        model, predictor, _, split = run_training(args.corpus, base)
        both_rows = run_eval(
            model, predictor, split.test, ["bestfirst", "bestfirst_prob"], base.width, args.budget
        )
        for scorer, strategy in (("value_model", "bestfirst"), ("probability_product", "bestfirst_prob")):
            rows = [r for r in both_rows if r["strategy"] == strategy]
            summary = write_report(os.path.join(args.out, f"scorer-{scorer}"), rows, [strategy])
            sweep_rows.append({"setting": f"scorer={scorer}", **summary["strategies"][strategy]})
        union = build_summary(both_rows, ["bestfirst", "bestfirst_prob"])["union_proved"]
        sweep_rows.append({"setting": "union_of_proved", "proved": union})
    elif args.sweep == "obligation-training":
        for label, on in (("on", True), ("off", False)):
            config = dataclasses.replace(base, subproof_tasks=on)
            summary = run_setting(f"obligation-training-{label}", config, ["astar"])
            sweep_rows.append({"setting": f"obligation-training={label}", **summary["strategies"]["astar"]})
    else:
        raise RuntimeError(f"unknown sweep {args.sweep!r}")

    with open(os.path.join(args.out, "sweep.json"), "w", encoding="utf-8") as fh:
        json.dump({"sweep": args.sweep, "settings": sweep_rows}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"{args.sweep} sweep: {len(sweep_rows)} rows written to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    obligation = parse_obligation(args.obligation)
    result = shortest_proof(Hyperstate((obligation,)), args.depth)
    record = {
        "provable": result.provable,
        "shortest_length": result.shortest_length,
        "shortest_script": str(result.shortest_script) if result.shortest_script else None,
        "depth_limited": result.depth_limited,
        "optimal_value": optimal_value(obligation, args.gamma, args.depth),
    }
    print(json.dumps(record, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-corpus":
            return cmd_gen_corpus(args)
        if args.command == "pretrain":
            return cmd_train(args, rl=False)
        if args.command == "train":
            return cmd_train(args, rl=True)
        if args.command == "prove":
            return cmd_prove(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "ablate":
            return cmd_ablate(args)
        if args.command == "oracle":
            return cmd_oracle(args)
        parser.error(f"unknown command {args.command!r}")
    except Exception as err:  # noqa: BLE001 - surface as a runtime failure
        print(f"valueprover: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
