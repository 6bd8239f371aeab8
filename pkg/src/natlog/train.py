"""Minibatch training with AdaGrad, evaluation, and multi-run aggregation.

One training run is fully determined by (dataset, model config, train
config): parameter initialization and epoch shuffling each draw from a named
stream under the run's seed.  Evaluation reports accuracy per named example
subset with a confusion matrix each, and flags "degenerate" runs whose
predictions collapse onto a single class; aggregation over runs excludes
those and reports mean accuracy with standard errors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .datasets import LabeledDataset
from .model import (
    ModelConfig,
    ModelParams,
    init_params,
    loss_and_gradients,
    predict_batch,
)
from .seeding import substream


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    batch_size: int = 32
    max_epochs: int = 500
    seed: int = 0
    eval_every: int = 1           # epochs between train-accuracy measurements
    stop_after_perfect: int = 25  # stop once train accuracy is 1.0 this many
                                  # consecutive measurements; 0 disables.
                                  # Generalization keeps improving well past
                                  # the first perfect epoch, so don't stop on
                                  # the first streak.

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.max_epochs < 1 or self.eval_every < 1:
            raise ValueError("batch_size, max_epochs, eval_every must be >= 1")


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""


class AdaGrad:
    """Per-coordinate step sizes shrinking with accumulated squared gradients.

    Update: ``accum += g**2; theta -= lr * g / sqrt(accum + eps)``.
    """

    def __init__(self, learning_rate: float, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.eps = eps
        self.accum: dict[str, np.ndarray] = {}

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, param in arrays.items():
            g = grads[name]
            acc = self.accum.get(name)
            if acc is None:
                acc = self.accum[name] = np.zeros_like(param)
            acc += g * g
            param -= self.learning_rate * g / np.sqrt(acc + self.eps)


def _dataset_accuracy(params: ModelParams, examples: np.ndarray) -> float:
    preds = predict_batch(params, examples[:, 0], examples[:, 1])
    return float(np.mean(preds == examples[:, 2]))


def train(
    dataset: LabeledDataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    initial_params: ModelParams | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Run AdaGrad over shuffled minibatches; returns (params, history).

    ``history`` holds one dict per epoch with the mean batch loss and, on
    measurement epochs, the full-train-set accuracy.  Raises
    :class:`TrainingDivergedError` on a non-finite loss.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if dataset.num_classes != model_config.num_classes:
        raise ValueError(
            f"dataset has {dataset.num_classes} labels but the model expects "
            f"{model_config.num_classes}"
        )
    if len(dataset.terms) != model_config.vocab_size:
        raise ValueError(
            f"dataset has {len(dataset.terms)} terms but the model expects "
            f"{model_config.vocab_size}"
        )

    if initial_params is None:
        params = init_params(model_config, substream(train_config.seed, "init"))
    else:
        params = initial_params.copy()
    shuffle_rng = substream(train_config.seed, "shuffle")

    optimizer = AdaGrad(train_config.learning_rate)
    examples = dataset.examples
    n = len(examples)
    bs = train_config.batch_size
    history: list[dict] = []
    perfect_streak = 0

    for epoch in range(train_config.max_epochs):
        order = shuffle_rng.permutation(n)
        total_loss = 0.0
        arrays = params.arrays()
        for start in range(0, n, bs):
            batch = examples[order[start : start + bs]]
            loss, grads = loss_and_gradients(params, batch)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss!r} at epoch {epoch}, "
                    f"batch starting at {start}"
                )
            optimizer.step(arrays, grads)
            total_loss += loss * len(batch)

        record = {"epoch": epoch, "loss": total_loss / n}
        last = epoch == train_config.max_epochs - 1
        if epoch % train_config.eval_every == 0 or last:
            acc = _dataset_accuracy(params, examples)
            record["accuracy"] = acc
            perfect_streak = perfect_streak + 1 if acc == 1.0 else 0
        history.append(record)
        if (
            train_config.stop_after_perfect
            and perfect_streak >= train_config.stop_after_perfect
        ):
            break
    return params, history


# ---------------------------------------------------------------------------
# Evaluation and aggregation


@dataclass
class EvalReport:
    """Accuracies per named subset plus degeneracy diagnostics.

    ``confusion[name][i, j]`` counts subset examples with true class i
    predicted as j, so each confusion matrix's row sums give the subset's
    per-class example counts.  Empty subsets are simply absent.
    """

    overall_accuracy: float
    subset_accuracy: dict[str, float]
    subset_sizes: dict[str, int]
    confusion: dict[str, np.ndarray]
    is_degenerate: bool
    dominant_class_share: float


def evaluate(
    params: ModelParams,
    subsets: dict[str, np.ndarray],
    degenerate_threshold: float = 0.99,
) -> EvalReport:
    """Accuracy per subset and overall, plus a degenerate-run flag.

    A run is degenerate when a single predicted class covers at least
    ``degenerate_threshold`` of all predictions while the evaluated examples
    span at least two true classes.
    """
    num_classes = params.config.num_classes
    subset_accuracy: dict[str, float] = {}
    subset_sizes: dict[str, int] = {}
    confusion: dict[str, np.ndarray] = {}
    all_true: list[np.ndarray] = []
    all_pred: list[np.ndarray] = []

    for name, examples in subsets.items():
        examples = np.asarray(examples, dtype=np.int64).reshape(-1, 3)
        if len(examples) == 0:
            continue
        preds = predict_batch(params, examples[:, 0], examples[:, 1])
        true = examples[:, 2]
        matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
        np.add.at(matrix, (true, preds), 1)
        confusion[name] = matrix
        subset_sizes[name] = len(examples)
        subset_accuracy[name] = float(np.mean(preds == true))
        all_true.append(true)
        all_pred.append(preds)

    if not all_true:
        return EvalReport(float("nan"), {}, {}, {}, False, 0.0)

    true = np.concatenate(all_true)
    pred = np.concatenate(all_pred)
    overall = float(np.mean(pred == true))
    share = float(np.bincount(pred, minlength=num_classes).max() / len(pred))
    degenerate = share >= degenerate_threshold and len(np.unique(true)) >= 2
    return EvalReport(overall, subset_accuracy, subset_sizes, confusion, degenerate, share)


@dataclass
class AggregateReport:
    """Mean and standard error of subset accuracies over non-degenerate runs."""

    mean_accuracy: dict[str, float] = field(default_factory=dict)
    standard_error: dict[str, float] = field(default_factory=dict)
    included_run_count: int = 0
    excluded_run_count: int = 0
    all_degenerate: bool = False


def aggregate_runs(reports: list[EvalReport]) -> AggregateReport:
    """Exclude degenerate runs, then average per-subset accuracies.

    Standard error is the sample standard deviation over included runs
    divided by sqrt(run count); 0 for a single run.  If every run is
    degenerate the report is flagged and carries no means.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    included = [r for r in reports if not r.is_degenerate]
    excluded = len(reports) - len(included)
    if not included:
        return AggregateReport(
            excluded_run_count=excluded, all_degenerate=True
        )
    names: list[str] = []
    for r in included:
        for name in r.subset_accuracy:
            if name not in names:
                names.append(name)
    mean: dict[str, float] = {}
    stderr: dict[str, float] = {}
    for name in names:
        values = np.array(
            [r.subset_accuracy[name] for r in included if name in r.subset_accuracy]
        )
        mean[name] = float(values.mean())
        stderr[name] = (
            float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
        )
    return AggregateReport(
        mean_accuracy=mean,
        standard_error=stderr,
        included_run_count=len(included),
        excluded_run_count=excluded,
    )


# ---------------------------------------------------------------------------
# Metrics CSV formats

RUN_CSV_FIELDS = ["run_id", "seed", "subset", "accuracy", "n_examples", "degenerate"]
AGGREGATE_CSV_FIELDS = ["setting", "subset", "mean", "stderr", "excluded_runs", "dagger"]


def run_metrics_rows(run_id: str, seed: int, report: EvalReport) -> list[dict]:
    rows = []
    for subset in sorted(report.subset_accuracy):
        rows.append(
            {
                "run_id": run_id,
                "seed": seed,
                "subset": subset,
                "accuracy": f"{report.subset_accuracy[subset]:.6f}",
                "n_examples": report.subset_sizes[subset],
                "degenerate": int(report.is_degenerate),
            }
        )
    return rows


def aggregate_rows(setting: str, aggregate: AggregateReport) -> list[dict]:
    rows = []
    dagger = "†" if aggregate.excluded_run_count else ""
    if aggregate.all_degenerate:
        rows.append(
            {
                "setting": setting,
                "subset": "",
                "mean": "",
                "stderr": "",
                "excluded_runs": aggregate.excluded_run_count,
                "dagger": dagger,
            }
        )
        return rows
    for subset in sorted(aggregate.mean_accuracy):
        rows.append(
            {
                "setting": setting,
                "subset": subset,
                "mean": f"{aggregate.mean_accuracy[subset]:.6f}",
                "stderr": f"{aggregate.standard_error[subset]:.6f}",
                "excluded_runs": aggregate.excluded_run_count,
                "dagger": dagger,
            }
        )
    return rows


def write_csv(path: str, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
