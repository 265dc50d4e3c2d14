"""Regret metrics and the multi-seed benchmark harness.

Regret is the true-cost gap between the decision induced by a prediction and
the true optimum; the harness trains every requested method on freshly
generated data for several seeds and aggregates normalized test regret and
training time into a delimited report plus a markdown summary.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import GenConfig, generate_dataset
from .losses import METHOD_IDS, make_loss
from .training import EpochRow, LinearPredictor, TrainConfig, train

__all__ = [
    "regret",
    "normalized_regret",
    "ExperimentConfig",
    "MethodCell",
    "ExperimentReport",
    "run_experiment",
    "write_report",
]

logger = logging.getLogger(__name__)


def regret(c_hat, c_true, w_star, oracle) -> float:
    """True-cost objective gap of the decision taken under predicted costs."""
    c_hat = np.asarray(c_hat, dtype=float)
    c_true = np.asarray(c_true, dtype=float)
    w_hat = oracle.solve(c_hat)
    return float(c_true @ (w_hat - np.asarray(w_star, dtype=float)))


def normalized_regret(model, testset, oracle) -> float:
    """Total regret over the set divided by the total |optimal objective|."""
    samples = list(testset)
    if not samples:
        raise ValueError("empty evaluation set")
    denom = sum(abs(s.z_star) for s in samples)
    if denom == 0.0:
        raise ValueError("all optimal objectives are zero; normalization undefined")
    total = sum(regret(model.predict(s.x), s.c, s.w_star, oracle) for s in samples)
    return total / denom


@dataclass(frozen=True)
class ExperimentConfig:
    """Full benchmark protocol: data recipe, methods, training knobs, seeds."""

    problem: str = "sp5"
    methods: tuple[str, ...] = METHOD_IDS
    deg: int = 4
    noise_width: float = 0.5
    n_train: int = 1000
    n_val: int = 0
    n_test: int = 1000
    n_seeds: int = 5
    root_seed: int = 0
    learning_rate: float = 0.01
    epochs: int = 10
    epochs_two_stage: int = 20
    batch_size: int = 32
    threads: int = 1
    pfyl_sigma: float = 1.0
    pfyl_samples: int = 1
    cave_gamma: float = 0.2
    cave_beta: float = 0.3
    cave_inner_iters: int = 3

    def __post_init__(self) -> None:
        unknown = [m for m in self.methods if m not in METHOD_IDS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; expected subset of {METHOD_IDS}")
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.n_seeds < 1:
            raise ValueError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if min(self.n_train, self.n_test) < 1 or self.n_val < 0:
            raise ValueError("split sizes must be positive (n_val may be 0)")


@dataclass
class MethodCell:
    """Outcome of one (method, seed) training run."""

    method: str
    seed_index: int
    regret_pct: float
    train_seconds: float
    qp_full: int
    qp_partial: int
    blp: int
    error: str | None = None
    epoch_rows: list[EpochRow] = field(default_factory=list, repr=False)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    cells: list[MethodCell]

    def summary(self) -> dict[str, dict[str, float]]:
        """Per-method mean and sample standard deviation of regret and time."""
        out: dict[str, dict[str, float]] = {}
        for method in self.config.methods:
            vals = [c for c in self.cells if c.method == method and c.error is None]
            regs = np.array([c.regret_pct for c in vals])
            secs = np.array([c.train_seconds for c in vals])
            out[method] = {
                "regret_mean": float(np.mean(regs)) if regs.size else float("nan"),
                "regret_std": float(np.std(regs, ddof=1)) if regs.size > 1 else 0.0,
                "time_mean": float(np.mean(secs)) if secs.size else float("nan"),
                "time_std": float(np.std(secs, ddof=1)) if secs.size > 1 else 0.0,
                "failures": float(
                    sum(1 for c in self.cells if c.method == method and c.error)
                ),
            }
        return out

    @property
    def n_failures(self) -> int:
        return sum(1 for c in self.cells if c.error is not None)


def _seed_ints(root_seed: int, seed_index: int, n: int) -> list[int]:
    ss = np.random.SeedSequence(entropy=root_seed, spawn_key=(seed_index,))
    return [int(v) for v in ss.generate_state(n)]


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Train every configured method on every seed and collect test regret.

    One dataset is generated per seed and split into train/validation/test, so
    all three splits share the seed's feature-to-cost mapping.
    """
    cells: list[MethodCell] = []
    for seed_index in range(config.n_seeds):
        data_seed, model_seed = _seed_ints(config.root_seed, seed_index, 2)
        full = generate_dataset(
            GenConfig(
                problem=config.problem,
                n_samples=config.n_train + config.n_val + config.n_test,
                deg=config.deg,
                noise_width=config.noise_width,
                seed=data_seed,
            )
        )
        train_samples = full.samples[: config.n_train]
        val_samples = (
            full.samples[config.n_train : config.n_train + config.n_val]
            if config.n_val
            else None
        )
        test_samples = full.samples[config.n_train + config.n_val :]
        dims = (full.cost_dim, full.feature_dim)

        for method in config.methods:
            cells.append(
                _run_cell(
                    config,
                    method,
                    seed_index,
                    model_seed,
                    dims,
                    train_samples,
                    val_samples,
                    test_samples,
                    full.problem,
                )
            )
    return ExperimentReport(config=config, cells=cells)


def _run_cell(
    config: ExperimentConfig,
    method: str,
    seed_index: int,
    model_seed: int,
    dims: tuple[int, int],
    train_samples,
    val_samples,
    test_samples,
    oracle,
) -> MethodCell:
    try:
        loss_fn = make_loss(
            method,
            oracle,
            pfyl_sigma=config.pfyl_sigma,
            pfyl_samples=config.pfyl_samples,
            cave_gamma=config.cave_gamma,
            cave_beta=config.cave_beta,
            cave_inner_iters=config.cave_inner_iters,
        )
        tc = TrainConfig(
            learning_rate=config.learning_rate,
            epochs=config.epochs_two_stage if method == "2stage" else config.epochs,
            batch_size=config.batch_size,
            seed=model_seed,
            threads=config.threads,
        )
        model = LinearPredictor(dims[0], dims[1], seed=model_seed)
        rows = train(
            model,
            train_samples,
            tc,
            loss_fn,
            oracle=oracle,
            validation=val_samples,
        )
        last = rows[-1]
        return MethodCell(
            method=method,
            seed_index=seed_index,
            regret_pct=100.0 * normalized_regret(model, test_samples, oracle),
            train_seconds=last.wall_seconds,
            qp_full=last.qp_full,
            qp_partial=last.qp_partial,
            blp=last.blp,
            epoch_rows=rows,
        )
    except Exception as exc:  # noqa: BLE001 - a failed cell must not kill the run
        logger.exception("method %s failed on seed %d", method, seed_index)
        return MethodCell(
            method=method,
            seed_index=seed_index,
            regret_pct=float("nan"),
            train_seconds=float("nan"),
            qp_full=0,
            qp_partial=0,
            blp=0,
            error=f"{type(exc).__name__}: {exc}",
        )


def write_report(report: ExperimentReport, outdir: str | Path) -> tuple[Path, Path]:
    """Emit report.csv (one row per method/seed) and report.md (aggregates)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    csv_path = outdir / "report.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "seed", "regret_pct", "train_seconds", "qp_full", "qp_partial", "blp", "error"]
        )
        for c in report.cells:
            writer.writerow(
                [
                    c.method,
                    c.seed_index,
                    repr(c.regret_pct),
                    repr(c.train_seconds),
                    c.qp_full,
                    c.qp_partial,
                    c.blp,
                    c.error or "",
                ]
            )

    md_path = outdir / "report.md"
    summary = report.summary()
    cfg = report.config
    lines = [
        f"# Benchmark: {cfg.problem}, deg {cfg.deg}",
        "",
        f"{cfg.n_seeds} seeds, {cfg.n_train} train / {cfg.n_test} test samples.",
        "",
        "| Method | Regret % (mean ± std) | Train s (mean ± std) |",
        "|---|---|---|",
    ]
    for method in cfg.methods:
        s = summary[method]
        lines.append(
            f"| {method} | {s['regret_mean']:.2f} ± {s['regret_std']:.2f} "
            f"| {s['time_mean']:.2f} ± {s['time_std']:.2f} |"
        )
    if report.n_failures:
        lines += ["", f"{report.n_failures} cell(s) failed; see report.csv."]
    md_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return csv_path, md_path
