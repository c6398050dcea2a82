"""
Command-line entry point for test-set generation, experiments and statistics
"""

import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from .models import ConfigError, ExperimentConfig, StatSummary
from .pipelines import (
    config_from_checkpoints,
    run_ablation,
    run_budget,
    run_eval,
    run_meta,
    run_toy,
    write_manifest,
)
from .stats import summarize, wilcoxon_signed_rank
from .testset import gen_testset, graphs_path_for

PIPELINES = {
    "toy": run_toy,
    "meta": run_meta,
    "ablation": run_ablation,
    "budget": run_budget,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcd", description="Meta-learned causal discovery experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-testset", help="Generate held-out DAGs and SCMs")
    gen.add_argument("--nodes", type=int, required=True)
    gen.add_argument("--graphs", type=int, required=True)
    gen.add_argument("--scms-per-graph", type=int, default=10)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", type=Path, required=True)

    for name, helptext in (
        ("train", "Run the pipeline named by the config's kind"),
        ("toy", "Run the two-SCM toy experiment"),
        ("ablation", "Compare policies with and without interventions"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=Path, required=True)

    ev = sub.add_parser("eval", help="Evaluate a checkpoint with frozen weights")
    ev.add_argument("--model", type=Path, required=True)
    ev.add_argument("--scms", type=Path, required=True)
    ev.add_argument("--greedy", action="store_true")
    ev.add_argument("--trace", type=Path, default=None, help="Directory for per-episode trace CSVs")
    ev.add_argument("--config", type=Path, default=None, help="Environment settings matching the model")
    ev.add_argument("--seed", type=int, default=0)

    budget = sub.add_parser("budget", help="Intervention budget of one or more checkpoints")
    budget.add_argument("--model", type=Path, required=True, action="append")
    budget.add_argument("--scms", type=Path, required=True)
    budget.add_argument("--config", type=Path, default=None, help="Environment settings matching the model")
    budget.add_argument("--seed", type=int, default=0)

    st = sub.add_parser("stats", help="Paired Wilcoxon signed-rank test on two CSV columns")
    st.add_argument("--a", type=Path, required=True)
    st.add_argument("--b", type=Path, required=True)
    st.add_argument("--test", choices=["wilcoxon"], default="wilcoxon")
    st.add_argument("--alt", choices=["less", "greater", "two-sided"], default="two-sided")
    return parser


def read_column(path: Path) -> List[float]:
    """
    Values of a one-column CSV, or of its ``dshd`` column. A non-numeric
    first row is taken as the header.
    """
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows:
        raise ConfigError(f"{path} is empty")
    column = 0
    try:
        float(rows[0][0])
    except ValueError:
        header = [h.strip() for h in rows[0]]
        column = header.index("dshd") if "dshd" in header else 0
        rows = rows[1:]
    try:
        return [float(row[column]) for row in rows]
    except (ValueError, IndexError) as e:
        raise ConfigError(f"{path}: {e}") from e


def _config_for(
    kind: str, path: Optional[Path], seed: int, checkpoints: List[Path], scms: Path, **updates
) -> ExperimentConfig:
    if path is not None:
        base = ExperimentConfig.from_yaml(path)
        return base.model_copy(update={"kind": kind, **updates}).resolve_paths(Path.cwd())
    return config_from_checkpoints(kind, checkpoints, scms, seed, **updates).resolve_paths(Path.cwd())


def print_summary(title: str, summary: StatSummary) -> None:
    print(f"📊 {title}: mean={summary.mean:.3f} median={summary.median:.3f} "
          f"std={summary.std:.3f} (n={summary.count})")


def run(args: argparse.Namespace) -> None:
    if args.command == "gen-testset":
        config = ExperimentConfig(kind="meta", seed=args.seed, n=args.nodes)
        print(f"🚀 Generating {args.graphs} DAGs x {args.scms_per_graph} SCMs on {args.nodes} nodes")
        graphs, scms = gen_testset(
            args.nodes, args.graphs, args.scms_per_graph, config.scm_config(), args.seed, args.out
        )
        print(f"✅ Wrote {len(scms)} SCMs to {args.out} and {len(graphs)} graphs to {graphs_path_for(args.out)}")
        return

    if args.command == "stats":
        a, b = read_column(args.a), read_column(args.b)
        result = wilcoxon_signed_rank(a, b, args.alt)
        print_summary(str(args.a), summarize(a))
        print_summary(str(args.b), summarize(b))
        print(f"📊 Wilcoxon ({result.alternative}, {'exact' if result.exact else 'normal'}): "
              f"W={result.statistic:g} p={result.p_value:.6g} n_effective={result.n_effective}")
        return

    if args.command == "eval":
        config = _config_for("meta", args.config, args.seed, [args.model], args.scms)
        print(f"🚀 Evaluating {args.model} on {args.scms}")
        report = run_eval(config, args.model, args.scms, args.greedy, args.trace)
        write_manifest(config.run_dir(), "eval", config, [args.model, args.scms])
        print_summary("dSHD", summarize(report.dshd))
        print(f"✅ Mean latency {report.mean_latency_ms:.1f} ms, "
              f"{report.mean_interventions:.2f} interventions per episode")
        return

    if args.command == "budget":
        config = _config_for(
            "budget", args.config, args.seed, args.model, args.scms, models=args.model, testset=args.scms
        )
        print(f"🚀 Budget study over {len(config.models)} checkpoint(s)")
        report = run_budget(config)
        write_manifest(config.run_dir(), "budget", config, [*config.models, config.testset])
        for entry in report.entries:
            shares = ", ".join(f"X{k}={s:.2f}" for k, s in enumerate(entry.intervention_shares))
            print(f"📊 {entry.model}: {entry.mean_interventions:.2f} interventions/episode "
                  f"(max {entry.max_interventions}), shares {shares}")
        return

    config = ExperimentConfig.from_yaml(args.config)
    if args.command in ("toy", "ablation") and config.kind != args.command:
        config = config.model_copy(update={"kind": args.command})
        config.check_inputs()
    print(f"🚀 Running '{config.kind}' experiment (seed {config.seed}) into {config.run_dir()}")
    result = PIPELINES[config.kind](config)
    write_manifest(
        config.run_dir(), args.command, config,
        [args.config, config.testset, config.mcd_model, *config.models],
    )
    if config.kind == "toy":
        print_summary("Toy dSHD", result.summary)
        print(f"📊 Untrained mean dSHD {result.untrained_mean_dshd:.3f}, "
              f"X1 interventions in correct chain episodes {result.x1_intervention_rate:.0%}")
    elif config.kind == "meta":
        print_summary("MCD dSHD", result.summary)
        print_summary("Random dSHD", result.random_baseline)
        if result.versus_random is not None:
            print(f"📊 MCD < random: p={result.versus_random.p_value:.3g}")
    elif config.kind == "ablation":
        print_summary("MCD dSHD", result.with_interventions)
        print_summary("MCD-O dSHD", result.without_interventions)
        if result.comparison is not None:
            print(f"📊 MCD < MCD-O: p={result.comparison.p_value:.3g}")
    print(f"✅ Report written to {config.run_dir() / 'report.json'}")


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(
        level=os.getenv("MCD_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except KeyboardInterrupt:
        print("\n⚠️ Interrupted")
        return 130
    except Exception as e:
        print(f"❌ {type(e).__name__}: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
