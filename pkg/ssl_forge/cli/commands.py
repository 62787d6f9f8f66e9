"""
Implementation of the gen, run, bench and eval subcommands.

Each command returns the document it emitted so callers (and tests) can
inspect it without re-reading the output.
"""
import csv
import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from ssl_forge.cli.models import (
    DatasetConfig, ExperimentConfig, GenConfig, SplitConfig, SuiteConfig, read_config,
)
from ssl_forge.cli.output import emit, render
from ssl_forge.core.dataset import SSLDataset, TaskKind, frozen_array
from ssl_forge.core.exceptions import (
    ConfigError, DataValidationError, exit_code_for,
)
from ssl_forge.core.estimator import Estimator
from ssl_forge.core.params import ParamMap
from ssl_forge.core.pipeline import PipelineSpec, pipeline_fit
from ssl_forge.core.registry import get_estimator_class
from ssl_forge.core.rng import SeededStream
from ssl_forge.data.csv_io import coerce_labels, load_csv, parse_float, write_csv
from ssl_forge.data.generators import generate
from ssl_forge.data.split import split_labeled_unlabeled
from ssl_forge.evaluation.metrics import compute_metric, get_metric, metric_report
from ssl_forge.settings import thread_cap


logger = logging.getLogger(__name__)

DEFAULT_METRICS = {
    TaskKind.CLASSIFICATION: ["accuracy", "f1_macro"],
    TaskKind.REGRESSION: ["mse", "mae", "r2"],
    TaskKind.CLUSTERING: ["ari", "nmi", "purity"],
}


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSplit:
    """Fit dataset plus the rows the fitted model is scored on."""
    dataset: SSLDataset
    eval_X: np.ndarray
    eval_y: np.ndarray
    evaluation: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_labeled": self.dataset.n_labeled,
            "n_unlabeled": self.dataset.n_unlabeled,
            "n_eval": int(self.eval_X.shape[0]),
            "evaluation": self.evaluation,
        }


def load_source(dataset: DatasetConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Labeled X and y, plus rows that arrive without labels."""
    if dataset.synthetic is not None:
        source = dataset.synthetic
        data = generate(source.kind, source.params, source.seed)
        return data.X, data.y, np.empty((0, data.X.shape[1]))
    source = dataset.csv
    loaded = load_csv(source.path, source.label_column, source.label_kind)
    return loaded.X, loaded.y, loaded.unlabeled_X


def experiment_split(
    X: np.ndarray,
    y: np.ndarray,
    extra_unlabeled: np.ndarray,
    split: SplitConfig,
    stratified: bool,
    seed: int
) -> ExperimentSplit:
    """
    Keep n_labeled labels and hide the rest.

    With test_fraction > 0 a share of the hidden rows is held out of fitting
    entirely and scored; otherwise the hidden rows form the unlabeled pool
    and are scored transductively. Rows that arrived unlabeled always join
    the pool.
    """
    chosen = split_labeled_unlabeled(X, y, split.n_labeled, stratified, seed)
    pool_X, pool_y = chosen.dataset.unlabeled_X, chosen.unlabeled_y
    n_test = int(round(split.test_fraction * pool_X.shape[0]))
    if n_test > 0:
        order = SeededStream(seed).spawn(1)[0].permutation(pool_X.shape[0])
        test, pool = np.sort(order[:n_test]), np.sort(order[n_test:])
        eval_X, eval_y, evaluation = pool_X[test], pool_y[test], "held_out"
        pool_X = pool_X[pool]
    else:
        eval_X, eval_y, evaluation = pool_X, pool_y, "transductive"
    if eval_X.shape[0] == 0:
        raise DataValidationError(f"no evaluation rows: n_labeled={split.n_labeled} leaves nothing to score")
    dataset = SSLDataset(
        X=chosen.dataset.X,
        y=chosen.dataset.y,
        unlabeled_X=frozen_array(np.vstack([pool_X, extra_unlabeled])),
    )
    return ExperimentSplit(dataset=dataset, eval_X=eval_X, eval_y=eval_y, evaluation=evaluation)


def resolve_metrics(names: List[str], estimator_cls: type) -> List[str]:
    """Requested metrics, or the task defaults, checked against the algorithm."""
    task = estimator_cls.task
    if not names:
        names = list(DEFAULT_METRICS[task])
        if task == TaskKind.CLASSIFICATION and estimator_cls.probabilistic:
            names.append("log_loss")
    for name in names:
        info = get_metric(name)
        if info.task != task:
            raise ConfigError(f"metric {name} is a {info.task.value} metric but {estimator_cls.name} is {task.value}")
        if info.needs_scores and not estimator_cls.probabilistic:
            raise ConfigError(f"metric {name} needs class probabilities, which {estimator_cls.name} does not produce")
    return names


def _scalar_diagnostics(diagnostics: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in diagnostics.items() if isinstance(v, (bool, int, float, str, np.generic))}


def run_experiment(config: ExperimentConfig, seed: Optional[int] = None, log: logging.Logger = logger) -> Dict[str, Any]:
    """
    Load, split, fit the pipeline and score the configured metrics.

    `seed` overrides both the split seed and the fit seed.
    """
    started = time.perf_counter()
    estimator_cls: type[Estimator] = get_estimator_class(config.algorithm.name)
    metrics = resolve_metrics(config.metrics, estimator_cls)
    spec = PipelineSpec.from_dict({"steps": [s.model_dump() for s in config.pipeline],
                                   "final": config.algorithm.model_dump()})
    split_seed = config.split.seed if seed is None else seed
    fit_seed = config.seed if seed is None else seed
    task = estimator_cls.task

    X, y, extra_unlabeled = load_source(config.dataset)
    stratified = config.split.stratified and task != TaskKind.REGRESSION
    split = experiment_split(X, y, extra_unlabeled, config.split, stratified, split_seed)
    log.info(f"Running {config.label}: {split.dataset.n_labeled} labeled, "
             f"{split.dataset.n_unlabeled} unlabeled, {split.eval_X.shape[0]} scored rows")

    fitted = pipeline_fit(spec, split.dataset, fit_seed, log)
    prediction = fitted.predict(split.eval_X)
    scores = prediction.scores if prediction.probabilistic else None
    values = {
        name: compute_metric(name, split.eval_y, prediction.labels, scores, fitted.model.classes)
        for name in metrics
    }
    report = metric_report(task, split.eval_y, prediction.labels, scores, fitted.model.classes, log)

    warnings = list(fitted.model.diagnostics.get("warnings", []))
    for name, state in fitted.steps:
        warnings.extend(f"step '{name}': {message}" for message in state.warnings)
    warnings.extend(report.warnings)

    document = {
        "experiment": config.label,
        "algorithm": config.algorithm.name,
        "dataset": config.dataset.label,
        "task": task.value,
        "seed": fit_seed,
        "split_seed": split_seed,
        "config": config.model_dump(mode="json"),
        "split": split.to_dict(),
        "metrics": values,
        "diagnostics": _scalar_diagnostics(fitted.model.diagnostics),
        "warnings": warnings,
        "wall_time": time.perf_counter() - started,
    }
    if report.confusion_matrix is not None:
        document["confusion_matrix"] = {"labels": report.to_dict()["labels"], "matrix": report.confusion_matrix}
    log.info(f"{config.label}: " + ", ".join(f"{k}={v:.4f}" for k, v in values.items()))
    return document


def cmd_run(config_path: str, out: Optional[str] = None, fmt: Optional[str] = None,
            seed: Optional[int] = None) -> Dict[str, Any]:
    config = read_config(config_path, ExperimentConfig, "experiment")
    document = run_experiment(config, seed)
    emit(render(document, fmt or config.output.format), out or config.output.path)
    return document


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def bench_row(config: ExperimentConfig, seeds: List[int], log: logging.Logger = logger) -> Dict[str, Any]:
    """Run one experiment over every seed; failures are recorded, not raised."""
    runs, errors = [], []
    for seed in seeds:
        try:
            runs.append(run_experiment(config, seed, log))
        except Exception as e:
            log.error(f"{config.label} failed for seed {seed}: {e}")
            errors.append({"seed": seed, "error": type(e).__name__, "message": str(e),
                           "exit_code": exit_code_for(e)})
    metrics = {}
    if runs:
        for name in runs[0]["metrics"]:
            values = np.array([run["metrics"][name] for run in runs], dtype=np.float64)
            metrics[name] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
    if not errors:
        status = "ok"
    else:
        status = "partial" if runs else "failed"
    return {
        "experiment": config.label,
        "algorithm": config.algorithm.name,
        "dataset": config.dataset.label,
        "status": status,
        "n_seeds": len(seeds),
        "n_failed": len(errors),
        "metrics": metrics,
        "errors": errors,
        "wall_time": float(sum(run["wall_time"] for run in runs)),
    }


def run_suite(suite: SuiteConfig, seeds: Optional[List[int]] = None, log: logging.Logger = logger) -> Dict[str, Any]:
    if not suite.experiments:
        raise ConfigError("bench suite has no experiments")
    seeds = list(seeds if seeds is not None else suite.seeds)
    if not seeds:
        raise ConfigError("bench suite has no seeds")
    n_jobs = min(thread_cap(), len(suite.experiments))
    log.info(f"Benchmarking {len(suite.experiments)} experiments over seeds {seeds} with {n_jobs} workers")
    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(bench_row)(experiment, seeds, log) for experiment in suite.experiments
    )
    failed = sum(row["status"] != "ok" for row in rows)
    if failed:
        log.warning(f"{failed} of {len(rows)} bench rows recorded failures")
    return {"seeds": seeds, "rows": rows}


def cmd_bench(config_path: str, out: Optional[str] = None, fmt: Optional[str] = None,
              seed: Optional[int] = None) -> Dict[str, Any]:
    suite = read_config(config_path, SuiteConfig, "bench suite")
    document = run_suite(suite, None if seed is None else [seed])
    emit(render(document, fmt or suite.output.format), out or suite.output.path)
    return document


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def cmd_gen(kind: str, params: Optional[ParamMap], seed: int, out: str) -> Dict[str, Any]:
    """Write generator output as a fully labeled CSV."""
    data = generate(kind, params, seed)
    rows = write_csv(out, data.X, data.y)
    logger.info(f"Wrote {rows} {kind} rows to {out}")
    return {"kind": kind, "seed": seed, "rows": rows, "path": out}


def cmd_gen_config(config_path: str, out: Optional[str] = None, seed: Optional[int] = None) -> Dict[str, Any]:
    config = read_config(config_path, GenConfig, "gen")
    target = out or config.out
    if not target:
        raise ConfigError("gen needs an output path (--out or 'out' in the config)")
    return cmd_gen(config.kind, config.params, config.seed if seed is None else seed, target)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def read_predictions(path: str, task: TaskKind) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    """Parse a `y_true,y_pred[,score_<class>...]` CSV."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration:
            raise DataValidationError(f"{path}: missing header row")
        rows = [cells for cells in reader if cells and any(c.strip() for c in cells)]
    for column in ("y_true", "y_pred"):
        if column not in header:
            raise DataValidationError(f"{path}: missing column {column!r}")
    if not rows:
        raise DataValidationError(f"{path}: no prediction rows")
    for number, cells in enumerate(rows, start=1):
        if len(cells) != len(header):
            raise DataValidationError(f"{path}: row {number} has {len(cells)} cells, expected {len(header)}")

    numbers = list(range(1, len(rows) + 1))
    kind = "real" if task == TaskKind.REGRESSION else "class"

    def column(name: str) -> np.ndarray:
        i = header.index(name)
        return coerce_labels([cells[i].strip() for cells in rows], kind, numbers, name)

    score_columns = [name for name in header if name.startswith("score_")]
    scores = classes = None
    if score_columns and task == TaskKind.CLASSIFICATION:
        indices = [header.index(name) for name in score_columns]
        scores = np.array([[parse_float(cells[i].strip(), r, header[i]) for i in indices]
                           for r, cells in zip(numbers, rows)], dtype=np.float64)
        classes = coerce_labels([name[len("score_"):] for name in score_columns], "class",
                                list(range(len(score_columns))), "header")
    return column("y_true"), column("y_pred"), scores, classes


def cmd_eval(predictions_path: str, task: str, out: Optional[str] = None, fmt: str = "json") -> Dict[str, Any]:
    try:
        kind = TaskKind(task)
    except ValueError:
        raise ConfigError(f"unknown task {task!r} (known: {', '.join(t.value for t in TaskKind)})")
    y_true, y_pred, scores, classes = read_predictions(predictions_path, kind)
    if kind != TaskKind.REGRESSION and y_true.dtype != y_pred.dtype:
        y_true, y_pred = y_true.astype(str), y_pred.astype(str)
        classes = None if classes is None else classes.astype(str)
    document = metric_report(kind, y_true, y_pred, scores, classes).to_dict()
    document["n_rows"] = int(len(y_true))
    emit(render(document, fmt), out)
    return document
