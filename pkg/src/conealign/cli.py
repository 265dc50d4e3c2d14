"""Command-line front end: generate | train | eval | benchmark.

Options may come from a JSON config file (``--config``), and any flag given on
the command line overrides the file.  The environment variable
``CONEALIGN_SEED`` overrides the (root) seed from either source.  Exit codes:
0 success, 2 configuration error, 3 I/O error, 4 numerical abort, 5 benchmark
finished with failed cells.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .datagen import GenConfig, generate_dataset, load_dataset, save_dataset
from .evaluation import ExperimentConfig, normalized_regret, run_experiment, write_report
from .losses import METHOD_IDS, make_loss
from .training import (
    LinearPredictor,
    TrainConfig,
    TrainingDivergedError,
    train,
    write_log,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_PARTIAL = 5

ENV_SEED = "CONEALIGN_SEED"


class ConfigError(Exception):
    pass


GENERATE_DEFAULTS = {
    "problem": "sp5",
    "deg": 4,
    "n": 100,
    "noise_width": 0.5,
    "seed": 0,
    "skip": 0,
    "out": None,
}

TRAIN_DEFAULTS = {
    "dataset": None,
    "method": "cave+",
    "lr": 0.01,
    "epochs": 10,
    "batch_size": 32,
    "seed": 0,
    "threads": 1,
    "val_dataset": None,
    "pfyl_sigma": 1.0,
    "pfyl_samples": 1,
    "cave_gamma": 0.2,
    "cave_beta": 0.3,
    "cave_inner_iters": 3,
    "out": None,
}

EVAL_DEFAULTS = {"dataset": None, "model": None, "out": None}

BENCHMARK_DEFAULTS = {
    "problem": "sp5",
    "methods": ",".join(METHOD_IDS),
    "deg": 4,
    "noise_width": 0.5,
    "n_train": 1000,
    "n_val": 0,
    "n_test": 1000,
    "seeds": 5,
    "seed": 0,
    "lr": 0.01,
    "epochs": 10,
    "epochs_two_stage": 20,
    "batch_size": 32,
    "threads": 1,
    "pfyl_sigma": 1.0,
    "pfyl_samples": 1,
    "cave_gamma": 0.2,
    "cave_beta": 0.3,
    "cave_inner_iters": 3,
    "figures": True,
    "out": None,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conealign",
        description="Subcone-aligned training of cost predictors for binary linear programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sup = argparse.SUPPRESS

    g = sub.add_parser("generate", help="generate a synthetic dataset directory")
    g.add_argument("--config", help="JSON config file; flags override it")
    g.add_argument("--problem", default=sup, help="problem id, e.g. sp5 or tsp8 (default sp5)")
    g.add_argument("--deg", type=int, default=sup, help="polynomial degree of the cost map (default 4)")
    g.add_argument("--n", type=int, default=sup, help="number of samples (default 100)")
    g.add_argument("--noise-width", type=float, default=sup, help="half-width of the multiplicative noise (default 0.5)")
    g.add_argument("--seed", type=int, default=sup, help="dataset seed (default 0)")
    g.add_argument(
        "--skip",
        type=int,
        default=sup,
        help="discard this many leading samples, for disjoint splits over one seed (default 0)",
    )
    g.add_argument("--out", default=sup, required=False, help="output directory (required)")

    t = sub.add_parser("train", help="train a linear cost predictor on a dataset")
    t.add_argument("--config", help="JSON config file; flags override it")
    t.add_argument("--dataset", default=sup, help="dataset directory (required)")
    t.add_argument("--method", default=sup, choices=list(METHOD_IDS), help="training method (default cave+)")
    t.add_argument("--lr", type=float, default=sup, help="Adam learning rate (default 0.01)")
    t.add_argument("--epochs", type=int, default=sup, help="training epochs (default 10)")
    t.add_argument("--batch-size", type=int, default=sup, help="mini-batch size (default 32)")
    t.add_argument("--seed", type=int, default=sup, help="training seed (default 0)")
    t.add_argument("--threads", type=int, default=sup, help="worker threads for per-sample losses (default 1)")
    t.add_argument("--val-dataset", default=sup, help="optional dataset directory for per-epoch validation regret")
    t.add_argument("--pfyl-sigma", type=float, default=sup, help="perturbation scale for pfyl (default 1.0)")
    t.add_argument("--pfyl-samples", type=int, default=sup, help="perturbation draws per sample for pfyl (default 1)")
    t.add_argument("--cave-gamma", type=float, default=sup, help="heuristic blend weight (default 0.2)")
    t.add_argument("--cave-beta", type=float, default=sup, help="inner-projection probability for cave-h (default 0.3)")
    t.add_argument("--cave-inner-iters", type=int, default=sup, help="iteration cap of the inner projection (default 3)")
    t.add_argument("--out", default=sup, help="output directory for model.json and log.csv (required)")

    e = sub.add_parser("eval", help="evaluate a trained model on a dataset")
    e.add_argument("--config", help="JSON config file; flags override it")
    e.add_argument("--dataset", default=sup, help="dataset directory (required)")
    e.add_argument("--model", default=sup, help="model.json produced by train (required)")
    e.add_argument("--out", default=sup, help="JSON file for the result (default: print only)")

    b = sub.add_parser("benchmark", help="run the multi-seed method comparison")
    b.add_argument("--config", help="JSON config file; flags override it")
    b.add_argument("--problem", default=sup, help="problem id (default sp5)")
    b.add_argument("--methods", default=sup, help="comma-separated method ids (default: all)")
    b.add_argument("--deg", type=int, default=sup, help="polynomial degree (default 4)")
    b.add_argument("--noise-width", type=float, default=sup, help="noise half-width (default 0.5)")
    b.add_argument("--n-train", type=int, default=sup, help="training samples per seed (default 1000)")
    b.add_argument("--n-val", type=int, default=sup, help="validation samples per seed (default 0)")
    b.add_argument("--n-test", type=int, default=sup, help="test samples per seed (default 1000)")
    b.add_argument("--seeds", type=int, default=sup, help="number of seeds (default 5)")
    b.add_argument("--seed", type=int, default=sup, help="root seed (default 0)")
    b.add_argument("--lr", type=float, default=sup, help="Adam learning rate (default 0.01)")
    b.add_argument("--epochs", type=int, default=sup, help="epochs for end-to-end methods (default 10)")
    b.add_argument("--epochs-two-stage", type=int, default=sup, help="epochs for the two-stage baseline (default 20)")
    b.add_argument("--batch-size", type=int, default=sup, help="mini-batch size (default 32)")
    b.add_argument("--threads", type=int, default=sup, help="worker threads (default 1)")
    b.add_argument("--pfyl-sigma", type=float, default=sup, help="pfyl perturbation scale (default 1.0)")
    b.add_argument("--pfyl-samples", type=int, default=sup, help="pfyl draws per sample (default 1)")
    b.add_argument("--cave-gamma", type=float, default=sup, help="heuristic blend weight (default 0.2)")
    b.add_argument("--cave-beta", type=float, default=sup, help="cave-h inner probability (default 0.3)")
    b.add_argument("--cave-inner-iters", type=int, default=sup, help="inner projection cap (default 3)")
    b.add_argument("--no-figures", dest="figures", action="store_false", default=sup, help="skip PNG figure rendering")
    b.add_argument("--out", default=sup, help="output directory for report files (required)")

    return parser


def _merge_options(args: argparse.Namespace, defaults: dict) -> dict:
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            file_cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"config file {config_path} must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}; allowed: {sorted(defaults)}")
        merged.update(file_cfg)
    for key in defaults:
        if hasattr(args, key):
            merged[key] = getattr(args, key)
    env_seed = os.environ.get(ENV_SEED)
    if env_seed is not None and "seed" in merged:
        try:
            merged["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{ENV_SEED}={env_seed!r} is not an integer") from exc
    return merged


def _require(options: dict, key: str) -> None:
    if options.get(key) in (None, ""):
        raise ConfigError(f"missing required option --{key.replace('_', '-')}")


def cmd_generate(options: dict) -> int:
    _require(options, "out")
    config = GenConfig(
        problem=options["problem"],
        n_samples=options["n"],
        deg=options["deg"],
        noise_width=options["noise_width"],
        seed=options["seed"],
        n_skip=options["skip"],
    )
    dataset = generate_dataset(config)
    outdir = save_dataset(dataset, options["out"])
    print(
        f"wrote {len(dataset)} samples to {outdir} "
        f"(problem={config.problem}, d={dataset.cost_dim}, deg={config.deg})"
    )
    return EXIT_OK


def cmd_train(options: dict) -> int:
    _require(options, "dataset")
    _require(options, "out")
    dataset = load_dataset(options["dataset"])
    val_samples = None
    if options["val_dataset"]:
        val = load_dataset(options["val_dataset"])
        if val.config.problem != dataset.config.problem:
            raise ConfigError(
                f"validation problem {val.config.problem!r} does not match {dataset.config.problem!r}"
            )
        val_samples = val.samples

    tc = TrainConfig(
        learning_rate=options["lr"],
        epochs=options["epochs"],
        batch_size=options["batch_size"],
        seed=options["seed"],
        threads=options["threads"],
    )
    loss_fn = make_loss(
        options["method"],
        dataset.problem,
        pfyl_sigma=options["pfyl_sigma"],
        pfyl_samples=options["pfyl_samples"],
        cave_gamma=options["cave_gamma"],
        cave_beta=options["cave_beta"],
        cave_inner_iters=options["cave_inner_iters"],
    )
    model = LinearPredictor(dataset.cost_dim, dataset.feature_dim, seed=options["seed"])
    rows = train(
        model,
        dataset.samples,
        tc,
        loss_fn,
        oracle=dataset.problem,
        validation=val_samples,
    )

    outdir = Path(options["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    echo = {k: v for k, v in options.items() if k not in ("out", "val_dataset")}
    (outdir / "model.json").write_text(model.to_json({"config": echo}) + "\n", encoding="utf-8")
    write_log(rows, outdir / "log.csv")
    print(
        f"trained {options['method']} for {tc.epochs} epochs; "
        f"final train_loss={rows[-1].train_loss:.6f}; wrote {outdir}/model.json"
    )
    return EXIT_OK


def cmd_eval(options: dict) -> int:
    _require(options, "dataset")
    _require(options, "model")
    dataset = load_dataset(options["dataset"])
    model = LinearPredictor.from_json(Path(options["model"]).read_text(encoding="utf-8"))
    if model.n_outputs != dataset.cost_dim or model.n_features != dataset.feature_dim:
        raise ConfigError(
            f"model is {model.n_outputs}x{model.n_features} but the dataset needs "
            f"{dataset.cost_dim}x{dataset.feature_dim}"
        )
    value = normalized_regret(model, dataset.samples, dataset.problem)
    print(f"normalized regret: {value:.6f} ({100.0 * value:.3f}%)")
    if options["out"]:
        payload = {
            "dataset": str(options["dataset"]),
            "model": str(options["model"]),
            "normalized_regret": value,
        }
        Path(options["out"]).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_benchmark(options: dict) -> int:
    _require(options, "out")
    methods = tuple(m.strip() for m in options["methods"].split(",") if m.strip())
    config = ExperimentConfig(
        problem=options["problem"],
        methods=methods,
        deg=options["deg"],
        noise_width=options["noise_width"],
        n_train=options["n_train"],
        n_val=options["n_val"],
        n_test=options["n_test"],
        n_seeds=options["seeds"],
        root_seed=options["seed"],
        learning_rate=options["lr"],
        epochs=options["epochs"],
        epochs_two_stage=options["epochs_two_stage"],
        batch_size=options["batch_size"],
        threads=options["threads"],
        pfyl_sigma=options["pfyl_sigma"],
        pfyl_samples=options["pfyl_samples"],
        cave_gamma=options["cave_gamma"],
        cave_beta=options["cave_beta"],
        cave_inner_iters=options["cave_inner_iters"],
    )
    report = run_experiment(config)
    csv_path, md_path = write_report(report, options["out"])
    if options["figures"]:
        from .figures import render_report_figures

        for path in render_report_figures(report, options["out"]):
            print(f"wrote {path}")
    print(f"wrote {csv_path} and {md_path}")
    if report.n_failures:
        print(f"{report.n_failures} cell(s) failed; see report.csv", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


_COMMANDS = {
    "generate": (cmd_generate, GENERATE_DEFAULTS),
    "train": (cmd_train, TRAIN_DEFAULTS),
    "eval": (cmd_eval, EVAL_DEFAULTS),
    "benchmark": (cmd_benchmark, BENCHMARK_DEFAULTS),
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler, defaults = _COMMANDS[args.command]
    try:
        options = _merge_options(args, defaults)
        return handler(options)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergedError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
