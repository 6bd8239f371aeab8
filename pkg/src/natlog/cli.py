"""Command-line entry point.

Subcommands::

    gen-data         write simulated world splits (train/test TSVs + meta)
    run              train and evaluate an experiment, write metrics CSVs
    gradcheck        finite-difference check of all architecture variants
    closure          derive the relation of a term pair from a statement file
    wordnet-extract  taxonomy file -> labeled pair dataset TSV + stats

Every option can also be supplied through ``--config FILE``, a flat
``key = value`` text file whose keys match the long option names with
underscores; explicit command-line flags win over file values.  All
randomness descends from ``--seed``, so repeating a command reproduces its
outputs byte for byte.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 at least one
run diverged, 5 every run was degenerate, 1 other failure.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .datasets import read_statements
from .relations import Relation
from .worlds import InconsistentStatementsError, provability_closure

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4
EXIT_DEGENERATE = 5


class ConfigError(Exception):
    pass


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` file: booleans, ints, floats, quoted strings."""
    values: dict = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            values[key.strip().replace("-", "_")] = _parse_value(value.strip())
    return values


def _parse_value(text: str):
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    lowered = text.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


COMMON_DEFAULTS = {"seed": 0, "config": None, "out_dir": "out", "threads": 1}

DEFAULTS = {
    "gen-data": {
        **COMMON_DEFAULTS,
        "num_terms": 80,
        "domain_size": 7,
        "test_fraction": 0.5,
        "num_runs": 5,
    },
    "run": {
        **COMMON_DEFAULTS,
        "experiment": "simulated",
        "model": "ntn",
        "embed_dim": None,
        "feature_dim": None,
        "l2": 1e-4,
        "transform": None,
        "learning_rate": 0.2,
        "batch_size": 32,
        "epochs": None,
        "num_runs": 5,
        "num_terms": 80,
        "domain_size": 7,
        "test_fraction": 0.5,
        "taxonomy": None,
        "format": "auto",
        "root": "organism.n.01",
        "fractions": "1",
        "coordinate_ratio": 0.7,
        "vectors": None,
    },
    "gradcheck": {**COMMON_DEFAULTS, "tolerance": 1e-4},
    "closure": {**COMMON_DEFAULTS, "dataset": None, "query": None},
    "wordnet-extract": {
        **COMMON_DEFAULTS,
        "taxonomy": None,
        "format": "auto",
        "root": "organism.n.01",
        "coordinate_ratio": 0.7,
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="natlog",
        description="Natural-logic relation algebra and relation-learning experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    s = argparse.SUPPRESS

    def common(p):
        p.add_argument("--seed", type=int, default=s, help="master seed")
        p.add_argument("--config", default=s, help="flat key=value config file")
        p.add_argument("--out-dir", default=s, help="output directory")
        p.add_argument("--threads", type=int, default=s, help="worker processes")

    p = sub.add_parser("gen-data", help="generate simulated world datasets")
    common(p)
    p.add_argument("--num-terms", type=int, default=s)
    p.add_argument("--domain-size", type=int, default=s)
    p.add_argument("--test-fraction", type=float, default=s)
    p.add_argument("--num-runs", type=int, default=s)

    p = sub.add_parser("run", help="run an experiment end to end")
    common(p)
    p.add_argument("--experiment", choices=["simulated", "wordnet"], default=s)
    p.add_argument("--model", choices=["nn", "ntn"], default=s)
    p.add_argument("--embed-dim", type=int, default=s)
    p.add_argument("--feature-dim", type=int, default=s)
    p.add_argument("--l2", type=float, default=s)
    p.add_argument(
        "--transform",
        choices=["on", "off"],
        default=s,
        help="embedding transform layer (default: off for simulated, on for wordnet)",
    )
    p.add_argument("--learning-rate", type=float, default=s)
    p.add_argument("--batch-size", type=int, default=s)
    p.add_argument("--epochs", type=int, default=s)
    p.add_argument("--num-runs", type=int, default=s)
    p.add_argument("--num-terms", type=int, default=s)
    p.add_argument("--domain-size", type=int, default=s)
    p.add_argument("--test-fraction", type=float, default=s)
    p.add_argument("--taxonomy", default=s, help="wndb or edge-list taxonomy file")
    p.add_argument("--format", choices=["auto", "wndb", "edges"], default=s)
    p.add_argument("--root", default=s, help="root synset for extraction")
    p.add_argument("--fractions", default=s, help="comma list, e.g. 1,0.333,0.111")
    p.add_argument("--coordinate-ratio", type=float, default=s)
    p.add_argument("--vectors", default=s, help="pretrained vector file")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    common(p)
    p.add_argument("--tolerance", type=float, default=s)

    p = sub.add_parser("closure", help="derive a pair's relation from statements")
    common(p)
    p.add_argument("--dataset", default=s, help="statement TSV (training data)")
    p.add_argument("--query", nargs=2, metavar=("LEFT", "RIGHT"), default=s)

    p = sub.add_parser("wordnet-extract", help="taxonomy -> labeled pair TSV")
    common(p)
    p.add_argument("--taxonomy", default=s)
    p.add_argument("--format", choices=["auto", "wndb", "edges"], default=s)
    p.add_argument("--root", default=s)
    p.add_argument("--coordinate-ratio", type=float, default=s)

    return parser


def _resolve_options(command: str, cli_values: dict) -> dict:
    opts = dict(DEFAULTS[command])
    config_path = cli_values.get("config")
    if config_path is not None:
        file_values = parse_config_file(config_path)
        unknown = set(file_values) - set(opts)
        if unknown:
            raise ConfigError(
                f"{config_path}: unknown option(s): {', '.join(sorted(unknown))}"
            )
        opts.update(file_values)
    opts.update(cli_values)
    return opts


def _parse_fractions(text) -> tuple[float, ...]:
    if isinstance(text, (int, float)):
        text = str(text)
    try:
        fractions = tuple(float(part) for part in text.split(",") if part)
    except ValueError:
        raise ConfigError(f"bad fractions list: {text!r}") from None
    if not fractions or any(not 0 < f <= 1 for f in fractions):
        raise ConfigError(f"fractions must lie in (0, 1]: {text!r}")
    return fractions


def cmd_gen_data(opts: dict) -> int:
    paths = experiments.write_simulated_datasets(
        opts["out_dir"],
        opts["seed"],
        num_runs=opts["num_runs"],
        num_terms=opts["num_terms"],
        domain_size=opts["domain_size"],
        test_fraction=opts["test_fraction"],
    )
    for path in paths:
        print(path)
    return EXIT_OK


def _result_exit(result: experiments.ExperimentResult) -> int:
    if result.any_failure:
        for failure in result.failures:
            print(f"diverged: {failure}", file=sys.stderr)
        return EXIT_DIVERGED
    if result.all_degenerate:
        print("all runs degenerate", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_run(opts: dict) -> int:
    transform = opts["transform"]
    if transform is not None:
        transform = transform == "on" if isinstance(transform, str) else bool(transform)
    if opts["experiment"] == "simulated":
        result = experiments.run_simulated_experiment(
            opts["seed"],
            comparison=opts["model"],
            num_runs=opts["num_runs"],
            num_terms=opts["num_terms"],
            domain_size=opts["domain_size"],
            test_fraction=opts["test_fraction"],
            embed_dim=opts["embed_dim"],
            feature_dim=opts["feature_dim"],
            l2_strength=opts["l2"],
            use_transform=bool(transform) if transform is not None else False,
            learning_rate=opts["learning_rate"],
            batch_size=opts["batch_size"],
            max_epochs=opts["epochs"] or 500,
            threads=opts["threads"],
            out_dir=opts["out_dir"],
        )
    else:
        if not opts["taxonomy"]:
            raise ConfigError("--taxonomy is required for the wordnet experiment")
        with open(opts["taxonomy"], encoding="utf-8") as f:
            taxonomy_text = f.read()
        dataset = experiments.build_wordnet_dataset(
            taxonomy_text,
            opts["root"],
            opts["seed"],
            fmt=opts["format"],
            coordinate_ratio=opts["coordinate_ratio"],
        )
        pretrained_text = None
        if opts["vectors"]:
            with open(opts["vectors"], encoding="utf-8") as f:
                pretrained_text = f.read()
        result = experiments.run_wordnet_experiment(
            dataset,
            opts["seed"],
            comparison=opts["model"],
            fractions=_parse_fractions(opts["fractions"]),
            embed_dim=opts["embed_dim"] or experiments.WORDNET_EMBED_DIM,
            feature_dim=opts["feature_dim"] or experiments.WORDNET_FEATURE_DIM,
            l2_strength=opts["l2"],
            use_transform=transform if transform is not None else True,
            learning_rate=opts["learning_rate"],
            batch_size=opts["batch_size"],
            max_epochs=opts["epochs"] or 100,
            pretrained_text=pretrained_text,
            threads=opts["threads"],
            out_dir=opts["out_dir"],
        )
    for setting, aggregate in result.aggregate_by_setting.items():
        for subset, mean in aggregate.mean_accuracy.items():
            stderr = aggregate.standard_error[subset]
            print(f"{setting} {subset}: {mean:.4f} (se {stderr:.4f})")
        if aggregate.excluded_run_count:
            print(f"{setting}: excluded {aggregate.excluded_run_count} degenerate run(s)")
    return _result_exit(result)


def cmd_gradcheck(opts: dict) -> int:
    errors = experiments.run_gradient_checks(opts["seed"])
    tolerance = opts["tolerance"]
    worst = max(errors.values())
    for name, err in errors.items():
        status = "pass" if err < tolerance else "FAIL"
        print(f"{name}: max relative error {err:.3e} [{status}]")
    return EXIT_OK if worst < tolerance else EXIT_FAILURE


def cmd_closure(opts: dict) -> int:
    if not opts["dataset"] or not opts["query"]:
        raise ConfigError("closure requires --dataset and --query LEFT RIGHT")
    statements = read_statements(opts["dataset"])
    terms: dict[str, None] = {}
    for st in statements:
        terms.setdefault(st.left)
        terms.setdefault(st.right)
    left, right = opts["query"]
    for term in (left, right):
        if term not in terms:
            raise ConfigError(f"unknown term {term!r}")
    closure = provability_closure(statements, list(terms))
    relation = closure.get((left, right))
    print(relation.token if relation is not None else "unprovable")
    return EXIT_OK


def cmd_wordnet_extract(opts: dict) -> int:
    if not opts["taxonomy"]:
        raise ConfigError("--taxonomy is required")
    with open(opts["taxonomy"], encoding="utf-8") as f:
        text = f.read()
    dataset = experiments.build_wordnet_dataset(
        text,
        opts["root"],
        opts["seed"],
        fmt=opts["format"],
        coordinate_ratio=opts["coordinate_ratio"],
    )
    experiments.write_wordnet_dataset(opts["out_dir"], dataset)
    for key, value in experiments.dataset_stats(dataset).items():
        print(f"{key} = {value}")
    return EXIT_OK


_HANDLERS = {
    "gen-data": cmd_gen_data,
    "run": cmd_run,
    "gradcheck": cmd_gradcheck,
    "closure": cmd_closure,
    "wordnet-extract": cmd_wordnet_extract,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    command = args.command
    cli_values = {k: v for k, v in vars(args).items() if k != "command"}
    try:
        opts = _resolve_options(command, cli_values)
        return _HANDLERS[command](opts)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InconsistentStatementsError as exc:
        print(f"error: inconsistent statements: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
