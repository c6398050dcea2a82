"""
Experiment pipelines: toy task, meta-training, ablation and intervention budget
"""

import csv
import hashlib
import json
import logging
from importlib import metadata
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from graph_core import Dag
from meta_env import EnvConfig
from neural_policy import init_params, load_params, read_environment
from scm_engine import Scm, toy_pair
from trainer import (
    EvalReport,
    TrainRunState,
    TrainingError,
    architecture_for,
    evaluate,
    random_baseline,
    train,
)

from .models import (
    AblationReport,
    BudgetEntry,
    BudgetReport,
    ConfigError,
    ExperimentConfig,
    Manifest,
    MetaReport,
    StatisticsError,
    ToyReport,
    TrainingSummary,
    WilcoxonResult,
)
from .stats import summarize, wilcoxon_signed_rank
from .testset import load_testset

logger = logging.getLogger(__name__)

PACKAGE_NAME = "meta-causal-discovery"

# Published figures, logged next to our results for comparison only.
REFERENCE = {
    3: {"mcd_mean": 1.28, "mcd_median": 1.0, "mcd_std": 0.66,
        "random_mean": 4.43, "random_median": 4.0, "random_std": 0.90, "latency_ms": 23.0},
    4: {"mcd_mean": 3.60, "mcd_median": 4.0, "mcd_std": 1.62,
        "random_mean": 4.80, "random_median": 5.0, "random_std": 1.72, "latency_ms": 30.0},
}
ABLATION_REFERENCE = {"mcd_o_mean": 2.6, "mcd_o_median": 3.0, "mcd_o_std": 1.44, "mcd_mean": 1.28}
BUDGET_REFERENCE = {"mean_interventions": 17.0, "first_variable_share": 0.64, "third_variable_share": 0.36}

# Episode settings stored in checkpoints by the training loop.
ENVIRONMENT_KEYS = ("horizon", "intervention_values", "intervention_bonus", "bonus_non_action", "allow_interventions")

# Independent random streams derived from the master seed.
STREAM_EVAL = 1
STREAM_BASELINE = 2
STREAM_UNTRAINED = 3


def stream(seed: int, key: int) -> np.random.Generator:
    return np.random.default_rng([seed, key])


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "0.0.0+local"


def write_manifest(
    run_dir: Path,
    command: str,
    config: ExperimentConfig,
    inputs: Iterable[Path],
) -> Manifest:
    manifest = Manifest(
        command=command,
        seed=config.seed,
        config=config.model_dump(mode="json"),
        inputs={str(p): sha256_file(p) for p in inputs if p is not None},
        package_version=package_version(),
    )
    write_json(Path(run_dir) / "manifest.json", manifest)
    return manifest


def write_json(path: Path, report: BaseModel) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")


def write_episodes_csv(path: Path, report: EvalReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scm_index", "episode", "dshd", "interventions", "latency_ms", "actions"])
        for e in report.episodes:
            writer.writerow([e.scm_index, e.episode, e.dshd, e.interventions,
                             format(e.latency_ms, ".17g"), ";".join(e.actions)])


def per_scm_dshd(report: EvalReport) -> List[float]:
    """Mean dSHD per SCM, in SCM order."""
    totals: Dict[int, List[int]] = {}
    for e in report.episodes:
        totals.setdefault(e.scm_index, []).append(e.dshd)
    return [float(np.mean(totals[k])) for k in sorted(totals)]


def paired_test(a: Sequence[float], b: Sequence[float], alternative: str) -> Optional[WilcoxonResult]:
    try:
        return wilcoxon_signed_rank(a, b, alternative)
    except StatisticsError as e:
        logger.warning("Wilcoxon test skipped: %s", e)
        return None


def training_summary(state: TrainRunState, checkpoint: Optional[Path]) -> TrainingSummary:
    return TrainingSummary(
        steps=state.step,
        updates=state.updates,
        best_validation_dshd=state.best_score,
        stopped_early=state.stopped_early,
        distinct_training_graphs=len(state.training_graphs),
        checkpoint=str(checkpoint) if checkpoint is not None and checkpoint.exists() else None,
    )


def _load_eval_scms(config: ExperimentConfig):
    test_graphs, scms = load_testset(config.testset)
    if scms[0].n != config.n:
        raise ConfigError(f"Test set has {scms[0].n} variables, config says n={config.n}")
    return test_graphs, scms[:config.test_scms]


def config_from_checkpoints(
    kind: str, checkpoints: Sequence[Path], scms_path: Path, seed: int, **updates
) -> ExperimentConfig:
    """
    Evaluation config without a YAML file: the number of variables comes from
    the SCM file and the episode settings from the checkpoints.
    """
    n = load_testset(scms_path)[1][0].n
    settings: Optional[Dict] = None
    for model in checkpoints:
        stored = read_environment(model)
        if stored is None:
            logger.warning("%s carries no episode settings, assuming the defaults", model)
            continue
        stored = {key: stored[key] for key in ENVIRONMENT_KEYS if key in stored}
        if settings is not None and stored != settings:
            raise ConfigError(f"{model} was trained with different episode settings than {checkpoints[0]}")
        settings = stored
    return ExperimentConfig(kind=kind, seed=seed, n=n, **(settings or {}), **updates)


def check_environment(model: Path, env_cfg: EnvConfig, n: int) -> None:
    """Reject a checkpoint whose stored episode settings differ from ``env_cfg``."""
    stored = read_environment(model)
    if stored is None:
        return
    if "n" in stored and stored["n"] != n:
        raise ConfigError(f"{model} was trained on n={stored['n']}, test set has n={n}")
    current = env_cfg.model_dump()
    for key in ENVIRONMENT_KEYS:
        if key in stored and stored[key] != current[key]:
            raise ConfigError(f"{model} was trained with {key}={stored[key]}, config says {current[key]}")


def check_held_out(state: TrainRunState, test_graphs: Sequence[Dag]) -> None:
    overlap = {g.edges for g in state.training_graphs} & {g.edges for g in test_graphs}
    if overlap:
        raise TrainingError(f"Training visited {len(overlap)} test graphs")


def _traces(config: ExperimentConfig, run_dir: Path, name: str) -> Optional[Path]:
    return run_dir / "traces" / name if config.write_traces else None


def run_toy(config: ExperimentConfig) -> ToyReport:
    """
    Train on the fork/chain pair (one drawn uniformly per episode) and
    evaluate the best model on both.
    """
    if config.n != 3:
        raise ConfigError(f"The toy pair has 3 variables, config says n={config.n}")
    run_dir = config.run_dir()
    env_cfg = config.env_config()
    train_cfg = config.train_config()
    toy: List[Scm] = list(toy_pair())

    def sampler(rng: np.random.Generator) -> Scm:
        return toy[int(rng.integers(len(toy)))]

    state = train([], 3, env_cfg, train_cfg, scm_sampler=sampler, validation_scms=toy, output_dir=run_dir)

    untrained = init_params(architecture_for(3, env_cfg, train_cfg), stream(config.seed, STREAM_UNTRAINED))
    untrained_report = evaluate(
        untrained, toy, config.eval_episodes_per_scm, stream(config.seed, STREAM_EVAL), env_cfg,
        greedy=config.final_greedy,
    )
    report = evaluate(
        state.best_params, toy, config.eval_episodes_per_scm, stream(config.seed, STREAM_EVAL), env_cfg,
        greedy=config.final_greedy, trace_dir=_traces(config, run_dir, "toy"),
    )

    correct_chain = [e for e in report.episodes if e.scm_index == 1 and e.dshd == 0]
    with_x1 = [e for e in correct_chain if any(a.startswith("do(X1=") for a in e.actions)]
    result = ToyReport(
        training=training_summary(state, run_dir / "best.ckpt"),
        untrained_mean_dshd=untrained_report.mean_dshd,
        evaluation=report,
        summary=summarize(report.dshd),
        x1_intervention_rate=len(with_x1) / len(correct_chain) if correct_chain else 0.0,
    )
    write_json(run_dir / "report.json", result)
    write_episodes_csv(run_dir / "episodes.csv", report)
    return result


def run_meta(config: ExperimentConfig) -> MetaReport:
    """
    Meta-train outside the test graphs, then evaluate the best model and the
    random baseline on the leading test SCMs.
    """
    run_dir = config.run_dir()
    env_cfg = config.env_config()
    test_graphs, eval_scms = _load_eval_scms(config)

    state = train(test_graphs, config.n, env_cfg, config.train_config(), config.scm_config(), output_dir=run_dir)
    check_held_out(state, test_graphs)

    report = evaluate(
        state.best_params, eval_scms, config.eval_episodes_per_scm, stream(config.seed, STREAM_EVAL), env_cfg,
        greedy=config.final_greedy, trace_dir=_traces(config, run_dir, "meta"),
    )
    baseline = random_baseline(eval_scms, stream(config.seed, STREAM_BASELINE), config.random_repetitions)
    reference = REFERENCE.get(config.n, {})
    result = MetaReport(
        training=training_summary(state, run_dir / "best.ckpt"),
        evaluation=report,
        summary=summarize(report.dshd),
        random_baseline=summarize(baseline.dshd),
        versus_random=paired_test(per_scm_dshd(report), per_scm_dshd(baseline), "less"),
        reference=reference,
    )
    if reference:
        logger.info(
            "Mean dSHD %.3f (reference %.2f), random %.3f (reference %.2f), latency %.1f ms (reference %.0f ms)",
            result.summary.mean, reference["mcd_mean"], result.random_baseline.mean, reference["random_mean"],
            report.mean_latency_ms, reference["latency_ms"],
        )
    write_json(run_dir / "report.json", result)
    write_episodes_csv(run_dir / "episodes.csv", report)
    return result


def run_ablation(config: ExperimentConfig) -> AblationReport:
    """
    Compare the policy with interventions against one trained without them
    on the same test SCMs, using identical seeds.
    """
    run_dir = config.run_dir()
    test_graphs, eval_scms = _load_eval_scms(config)
    train_cfg = config.train_config()
    env_cfg = config.env_config(allow_interventions=True)
    observational_cfg = config.env_config(allow_interventions=False)

    if config.mcd_model is not None:
        check_environment(config.mcd_model, env_cfg, config.n)
        mcd_params = load_params(config.mcd_model, architecture_for(config.n, env_cfg, train_cfg))
    else:
        mcd_state = train(
            test_graphs, config.n, env_cfg, train_cfg, config.scm_config(), output_dir=run_dir / "mcd"
        )
        check_held_out(mcd_state, test_graphs)
        mcd_params = mcd_state.best_params
    observational_state = train(
        test_graphs, config.n, observational_cfg, train_cfg, config.scm_config(), output_dir=run_dir / "mcd_o"
    )
    check_held_out(observational_state, test_graphs)

    mcd_report = evaluate(
        mcd_params, eval_scms, config.eval_episodes_per_scm, stream(config.seed, STREAM_EVAL), env_cfg,
        greedy=config.final_greedy,
    )
    observational_report = evaluate(
        observational_state.best_params, eval_scms, config.eval_episodes_per_scm,
        stream(config.seed, STREAM_EVAL), observational_cfg,
        greedy=config.final_greedy, trace_dir=_traces(config, run_dir, "mcd_o"),
    )
    if observational_report.mean_interventions != 0.0:
        raise TrainingError("Intervention-free policy performed interventions")

    result = AblationReport(
        with_interventions=summarize(mcd_report.dshd),
        without_interventions=summarize(observational_report.dshd),
        evaluation_without_interventions=observational_report,
        comparison=paired_test(per_scm_dshd(mcd_report), per_scm_dshd(observational_report), "less"),
        reference=ABLATION_REFERENCE if config.n == 3 else {},
    )
    write_json(run_dir / "report.json", result)
    write_episodes_csv(run_dir / "episodes_mcd_o.csv", observational_report)
    return result


def run_budget(config: ExperimentConfig) -> BudgetReport:
    """Intervention counts and per-variable shares of one or more checkpoints."""
    run_dir = config.run_dir()
    env_cfg = config.env_config()
    _, eval_scms = _load_eval_scms(config)

    entries = []
    for model in config.models:
        check_environment(model, env_cfg, config.n)
        params = load_params(model)
        report = evaluate(
            params, eval_scms, config.eval_episodes_per_scm, stream(config.seed, STREAM_EVAL), env_cfg,
            greedy=config.final_greedy,
        )
        most = max(e.interventions for e in report.episodes)
        if most > config.horizon:
            raise TrainingError(f"{most} interventions in one episode exceed the horizon {config.horizon}")
        entries.append(BudgetEntry(
            model=str(model),
            mean_interventions=report.mean_interventions,
            max_interventions=most,
            intervention_counts=report.intervention_counts,
            intervention_shares=report.intervention_shares,
            mean_dshd=report.mean_dshd,
        ))
        logger.info(
            "%s: %.2f interventions per episode (reference %.0f), shares %s",
            model, report.mean_interventions, BUDGET_REFERENCE["mean_interventions"],
            ", ".join(f"X{k}={s:.2f}" for k, s in enumerate(report.intervention_shares)),
        )

    result = BudgetReport(horizon=config.horizon, entries=entries, reference=BUDGET_REFERENCE)
    write_json(run_dir / "report.json", result)
    return result


def run_eval(
    config: ExperimentConfig,
    model: Path,
    scms_path: Path,
    greedy: bool,
    trace_dir: Optional[Path] = None,
) -> EvalReport:
    """Frozen-weight evaluation of one checkpoint on every SCM of a file."""
    _, scms = load_testset(scms_path)
    check_environment(model, config.env_config(), scms[0].n)
    params = load_params(model)
    report = evaluate(
        params, scms, config.eval_episodes_per_scm, stream(config.seed, STREAM_EVAL), config.env_config(),
        greedy=greedy, trace_dir=trace_dir,
    )
    run_dir = config.run_dir()
    write_json(run_dir / "report.json", report)
    write_episodes_csv(run_dir / "episodes.csv", report)
    return report
