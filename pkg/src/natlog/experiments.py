"""Drivers wiring data generation, training, and evaluation into experiments.

Two experiments ship with the package:

* ``simulated``: random boolean worlds.  Per run, sample a structure, split
  its statements 50/50, filter the test half by provability, train a model
  on the training statements, and score it on the provable and unprovable
  test subsets separately.
* ``wordnet``: a taxonomy dataset (real WordNet noun database or any
  edge-list taxonomy), crossvalidated over disjoint test slices with
  optional training-pool subsampling and optional pretrained embeddings.

All randomness is derived from one master seed through named substreams, so
every artifact a driver writes is reproducible byte-for-byte.  Independent
runs can fan out over a process pool; result ordering is canonical (by run
id) regardless of completion order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datasets import (
    LabeledDataset,
    SplitDataset,
    statements_to_dataset,
    write_labeled_tsv,
    write_meta,
    write_split,
)
from .model import ModelConfig, ModelParams, gradient_check, init_params
from .seeding import substream
from .train import (
    AGGREGATE_CSV_FIELDS,
    AggregateReport,
    EvalReport,
    RUN_CSV_FIELDS,
    TrainConfig,
    TrainingDivergedError,
    aggregate_rows,
    aggregate_runs,
    evaluate,
    run_metrics_rows,
    train,
    write_csv,
)
from .wordnet import (
    WORDNET_LABELS,
    dataset_stats,
    downsample_coordinates,
    extract_terms,
    generate_pairs,
    load_pretrained_vectors,
    make_folds,
    parse_taxonomy,
    subsample_pool,
)
from .worlds import (
    enumerate_statements,
    partition_test,
    provability_closure,
    sample_structure,
    split_statements,
)

SIMULATED_DEFAULTS = {
    "num_terms": 80,
    "domain_size": 7,
    "test_fraction": 0.5,
    "num_runs": 5,
}

# Feature dims that worked best per architecture in the simulated setting.
SIMULATED_FEATURE_DIM = {"nn": 75, "ntn": 90}
SIMULATED_EMBED_DIM = 11

WORDNET_EMBED_DIM = 25
WORDNET_FEATURE_DIM = 80


def run_seed(master_seed: int, *path) -> int:
    """A derived integer seed for one training run."""
    return int(substream(master_seed, "train", *path).integers(0, 2**62))


def generate_world_split(
    master_seed: int,
    run_id: int,
    num_terms: int = 80,
    domain_size: int = 7,
    test_fraction: float = 0.5,
) -> tuple[SplitDataset, list[str], dict]:
    """Sample one world and produce its provability-partitioned split."""
    rng = substream(master_seed, "data", run_id)
    structure = sample_structure(num_terms, domain_size, rng)
    statements = enumerate_statements(structure)
    train_stmts, test_stmts = split_statements(statements, test_fraction, rng)
    closure = provability_closure(train_stmts, structure.terms)
    provable, unprovable = partition_test(test_stmts, closure)
    split = SplitDataset(train_stmts, provable, unprovable)
    meta = {
        "experiment": "simulated",
        "master_seed": master_seed,
        "run_id": run_id,
        "num_terms": num_terms,
        "domain_size": domain_size,
        "test_fraction": test_fraction,
    }
    return split, structure.terms, meta


def write_simulated_datasets(
    out_dir: str,
    master_seed: int,
    num_runs: int = 5,
    num_terms: int = 80,
    domain_size: int = 7,
    test_fraction: float = 0.5,
) -> list[str]:
    """Write one split directory per run; returns the directory paths."""
    paths = []
    for run_id in range(num_runs):
        split, _terms, meta = generate_world_split(
            master_seed, run_id, num_terms, domain_size, test_fraction
        )
        directory = os.path.join(out_dir, f"run{run_id:02d}")
        write_split(directory, split, meta)
        paths.append(directory)
    return paths


@dataclass
class RunOutcome:
    """One training run's result, or the reason it was skipped."""

    run_id: str
    seed: int
    report: EvalReport | None = None
    error: str | None = None


def _simulated_single_run(args) -> RunOutcome:
    run_id, master_seed, data_kw, model_kw, train_kw = args
    split, terms, _meta = generate_world_split(master_seed, run_id, **data_kw)
    train_ds = statements_to_dataset(split.train, terms)
    config = ModelConfig(vocab_size=len(terms), **model_kw)
    seed = run_seed(master_seed, run_id)
    tconfig = TrainConfig(seed=seed, **train_kw)
    name = f"run{run_id:02d}"
    try:
        params, _history = train(train_ds, config, tconfig)
    except TrainingDivergedError as exc:
        return RunOutcome(run_id=name, seed=seed, error=str(exc))
    subsets = {
        "train": train_ds.examples,
        "test_provable": statements_to_dataset(split.test_provable, terms).examples,
        "test_unprovable": statements_to_dataset(
            split.test_unprovable, terms
        ).examples,
    }
    report = evaluate(params, subsets)
    return RunOutcome(run_id=name, seed=seed, report=report)


def _map_jobs(fn, jobs: list, threads: int) -> list:
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


@dataclass
class ExperimentResult:
    run_rows: list[dict] = field(default_factory=list)
    aggregate_by_setting: dict[str, AggregateReport] = field(default_factory=dict)
    aggregate_csv_rows: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def any_failure(self) -> bool:
        return bool(self.failures)

    @property
    def all_degenerate(self) -> bool:
        return bool(self.aggregate_by_setting) and all(
            a.all_degenerate for a in self.aggregate_by_setting.values()
        )


def _collect(
    result: ExperimentResult, setting: str, outcomes: list[RunOutcome]
) -> None:
    reports = []
    for outcome in sorted(outcomes, key=lambda o: o.run_id):
        if outcome.error is not None:
            result.failures.append(f"{setting}/{outcome.run_id}: {outcome.error}")
            result.run_rows.append(
                {
                    "run_id": f"{setting}/{outcome.run_id}",
                    "seed": outcome.seed,
                    "subset": "diverged",
                    "accuracy": "",
                    "n_examples": 0,
                    "degenerate": "",
                }
            )
            continue
        reports.append(outcome.report)
        for row in run_metrics_rows(
            f"{setting}/{outcome.run_id}", outcome.seed, outcome.report
        ):
            result.run_rows.append(row)
    if reports:
        aggregate = aggregate_runs(reports)
        result.aggregate_by_setting[setting] = aggregate
        result.aggregate_csv_rows.extend(aggregate_rows(setting, aggregate))


def run_simulated_experiment(
    master_seed: int,
    comparison: str = "ntn",
    num_runs: int = 5,
    num_terms: int = 80,
    domain_size: int = 7,
    test_fraction: float = 0.5,
    embed_dim: int | None = None,
    feature_dim: int | None = None,
    l2_strength: float = 1e-4,
    use_transform: bool = False,
    learning_rate: float = 0.2,
    batch_size: int = 32,
    max_epochs: int = 500,
    threads: int = 1,
    out_dir: str | None = None,
) -> ExperimentResult:
    """Train and score ``num_runs`` worlds; optionally write metrics CSVs."""
    model_kw = {
        "embed_dim": embed_dim or SIMULATED_EMBED_DIM,
        "feature_dim": feature_dim or SIMULATED_FEATURE_DIM[comparison],
        "num_classes": 7,
        "comparison": comparison,
        "use_transform": use_transform,
        "l2_strength": l2_strength,
    }
    data_kw = {
        "num_terms": num_terms,
        "domain_size": domain_size,
        "test_fraction": test_fraction,
    }
    train_kw = {
        "learning_rate": learning_rate,
        "batch_size": batch_size,
        "max_epochs": max_epochs,
    }
    jobs = [
        (run_id, master_seed, data_kw, model_kw, train_kw)
        for run_id in range(num_runs)
    ]
    outcomes = _map_jobs(_simulated_single_run, jobs, threads)
    result = ExperimentResult()
    _collect(result, f"simulated_{comparison}", outcomes)
    if out_dir is not None:
        _write_result(out_dir, result)
    return result


def _write_result(out_dir: str, result: ExperimentResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_csv(os.path.join(out_dir, "runs.csv"), RUN_CSV_FIELDS, result.run_rows)
    write_csv(
        os.path.join(out_dir, "aggregate.csv"),
        AGGREGATE_CSV_FIELDS,
        result.aggregate_csv_rows,
    )


def build_wordnet_dataset(
    taxonomy_text: str,
    root: str,
    master_seed: int,
    fmt: str = "auto",
    coordinate_ratio: float = 0.7,
) -> LabeledDataset:
    """Parse, extract the root subtree, generate pairs, downsample coordinates."""
    graph = parse_taxonomy(taxonomy_text, fmt=fmt)
    term_graph = extract_terms(graph, root)
    dataset = generate_pairs(term_graph)
    return downsample_coordinates(
        dataset, substream(master_seed, "downsample"), coordinate_ratio
    )


def write_wordnet_dataset(out_dir: str, dataset: LabeledDataset) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_labeled_tsv(os.path.join(out_dir, "pairs.tsv"), dataset)
    write_meta(os.path.join(out_dir, "stats"), dataset_stats(dataset))


def _wordnet_single_run(args) -> RunOutcome:
    (
        dataset,
        train_idx,
        test_idx,
        model_kw,
        train_kw,
        seed,
        name,
        pretrained_matrix,
    ) = args
    train_ds = dataset.subset(train_idx)
    config = ModelConfig(vocab_size=len(dataset.terms), **model_kw)
    tconfig = TrainConfig(seed=seed, **train_kw)
    initial = None
    if pretrained_matrix is not None:
        initial = init_params(config, substream(seed, "init"))
        initial.embeddings = pretrained_matrix.copy()
    try:
        params, _history = train(train_ds, config, tconfig, initial_params=initial)
    except TrainingDivergedError as exc:
        return RunOutcome(run_id=name, seed=seed, error=str(exc))
    subsets = {
        "train": train_ds.examples,
        "test": dataset.subset(test_idx).examples,
    }
    return RunOutcome(run_id=name, seed=seed, report=evaluate(params, subsets))


def run_wordnet_experiment(
    dataset: LabeledDataset,
    master_seed: int,
    comparison: str = "ntn",
    fractions: tuple[float, ...] = (1.0,),
    embed_dim: int = WORDNET_EMBED_DIM,
    feature_dim: int = WORDNET_FEATURE_DIM,
    l2_strength: float = 1e-4,
    use_transform: bool = True,
    learning_rate: float = 0.2,
    batch_size: int = 32,
    max_epochs: int = 100,
    pretrained_text: str | None = None,
    threads: int = 1,
    out_dir: str | None = None,
) -> ExperimentResult:
    """Five-fold crossvalidation at each training-data fraction."""
    folds = make_folds(dataset, substream(master_seed, "folds"))
    pretrained_matrix = None
    init_tag = "random"
    if pretrained_text is not None:
        loaded = load_pretrained_vectors(
            pretrained_text,
            dataset.terms,
            embed_dim,
            substream(master_seed, "pretrained"),
        )
        pretrained_matrix = loaded.matrix
        init_tag = "pretrained"

    model_kw = {
        "embed_dim": embed_dim,
        "feature_dim": feature_dim,
        "num_classes": len(dataset.label_names),
        "comparison": comparison,
        "use_transform": use_transform,
        "l2_strength": l2_strength,
    }
    train_kw = {
        "learning_rate": learning_rate,
        "batch_size": batch_size,
        "max_epochs": max_epochs,
    }

    result = ExperimentResult()
    for frac_idx, fraction in enumerate(fractions):
        label = f"{round(fraction * 100)}pct"
        jobs = []
        for fold in range(folds.num_folds):
            pool = subsample_pool(
                folds.train_pools[fold],
                fraction,
                substream(master_seed, "subsample", frac_idx, fold),
            )
            seed = run_seed(master_seed, frac_idx, fold)
            jobs.append(
                (
                    dataset,
                    pool,
                    folds.test_slices[fold],
                    model_kw,
                    train_kw,
                    seed,
                    f"fold{fold}",
                    pretrained_matrix,
                )
            )
        outcomes = _map_jobs(_wordnet_single_run, jobs, threads)
        _collect(result, f"wordnet_{comparison}_{init_tag}_{label}", outcomes)
    if out_dir is not None:
        _write_result(out_dir, result)
    return result


GRADCHECK_VARIANTS = (
    ("nn", False),
    ("ntn", False),
    ("nn_transform", True),
    ("ntn_transform", True),
)


def run_gradient_checks(
    master_seed: int = 0,
    num_examples: int = 10,
    epsilon: float = 1e-5,
) -> dict[str, float]:
    """Max relative gradient error for each architecture variant, small sizes.

    Parameters are scaled up past the default initialization so every
    coordinate's gradient sits well above the central-difference noise floor
    (roundoff in the loss is ~1e-11 at this epsilon, so gradients below
    ~1e-7 would fail the relative-error formula spuriously).
    """
    errors = {}
    for name, use_transform in GRADCHECK_VARIANTS:
        comparison = "ntn" if name.startswith("ntn") else "nn"
        config = ModelConfig(
            vocab_size=12,
            embed_dim=4,
            feature_dim=5,
            num_classes=7,
            comparison=comparison,
            use_transform=use_transform,
            l2_strength=1e-2,
        )
        rng = substream(master_seed, "gradcheck", name)
        params = init_params(config, rng)
        for arr in params.arrays().values():
            arr *= 8.0
        examples = np.stack(
            [
                rng.integers(0, config.vocab_size, size=num_examples),
                rng.integers(0, config.vocab_size, size=num_examples),
                rng.integers(0, config.num_classes, size=num_examples),
            ],
            axis=1,
        )
        errors[name] = gradient_check(params, examples, epsilon=epsilon)
    return errors
