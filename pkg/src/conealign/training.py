"""Linear cost predictor, Adam optimizer, and the mini-batch training loop.

Per-sample loss evaluations may run on a thread pool, but every sample draws
its randomness from a substream keyed by (seed, epoch, sample index) and the
per-batch gradients are reduced in fixed index order, so results are
bit-identical regardless of scheduling.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .losses import LossOutput, SolverCalls
from .seeding import STREAM_INIT, STREAM_SAMPLE, STREAM_SHUFFLE, substream

__all__ = [
    "TrainConfig",
    "LinearPredictor",
    "EpochRow",
    "TrainingDivergedError",
    "train",
    "write_log",
]

LOG_COLUMNS = (
    "epoch",
    "train_loss",
    "val_regret",
    "qp_full",
    "qp_partial",
    "blp",
    "wall_seconds",
)


class TrainingDivergedError(RuntimeError):
    """A loss or gradient went non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 10
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


class LinearPredictor:
    """Affine map x -> W x + b with per-parameter Adam moments."""

    def __init__(self, n_outputs: int, n_features: int, seed: int = 0):
        rng = substream(seed, STREAM_INIT)
        bound = 1.0 / np.sqrt(n_features)
        self.W = rng.uniform(-bound, bound, size=(n_outputs, n_features))
        self.b = rng.uniform(-bound, bound, size=n_outputs)
        self.m_W = np.zeros_like(self.W)
        self.v_W = np.zeros_like(self.W)
        self.m_b = np.zeros_like(self.b)
        self.v_b = np.zeros_like(self.b)
        self.step_count = 0

    @property
    def n_outputs(self) -> int:
        return self.W.shape[0]

    @property
    def n_features(self) -> int:
        return self.W.shape[1]

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.W @ x + self.b

    def adam_step(self, grad_W: np.ndarray, grad_b: np.ndarray, config: TrainConfig) -> None:
        """One bias-corrected Adam update of W and b."""
        self.step_count += 1
        t = self.step_count
        b1, b2 = config.beta1, config.beta2
        for theta, g, m, v in (
            (self.W, grad_W, self.m_W, self.v_W),
            (self.b, grad_b, self.m_b, self.v_b),
        ):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1**t)
            v_hat = v / (1.0 - b2**t)
            theta -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)

    def to_json(self, extra: dict | None = None) -> str:
        payload = {"W": self.W.tolist(), "b": self.b.tolist()}
        if extra:
            payload.update(extra)
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LinearPredictor":
        payload = json.loads(text)
        W = np.asarray(payload["W"], dtype=float)
        model = cls(W.shape[0], W.shape[1])
        model.W = W
        model.b = np.asarray(payload["b"], dtype=float)
        return model


@dataclass(frozen=True)
class EpochRow:
    """One line of the training log; counters and wall time are cumulative."""

    epoch: int
    train_loss: float
    val_regret: float
    qp_full: int
    qp_partial: int
    blp: int
    wall_seconds: float


def train(
    model: LinearPredictor,
    samples,
    config: TrainConfig,
    loss_fn,
    *,
    oracle=None,
    validation=None,
) -> list[EpochRow]:
    """Mini-batch training of ``model`` with a per-sample loss callable.

    ``loss_fn(c_hat, sample, rng) -> LossOutput``.  Per-batch gradients are
    averaged, so the learning rate does not depend on the batch size.  When a
    validation set and oracle are given, the normalized validation regret is
    recorded after each epoch (its evaluation is excluded from wall_seconds).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("empty training set")
    if validation is not None and oracle is None:
        raise ValueError("validation regret needs the problem oracle")

    from .evaluation import normalized_regret  # deferred: avoids an import cycle

    totals = SolverCalls()
    rows: list[EpochRow] = []
    wall = 0.0
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for epoch in range(1, config.epochs + 1):
            t0 = time.perf_counter()
            order = substream(config.seed, STREAM_SHUFFLE, epoch).permutation(len(samples))
            loss_sum = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                outs = _evaluate_batch(model, samples, batch, config, epoch, loss_fn, pool)
                grads = np.stack([out.grad_c_hat for out in outs])
                xs = np.stack([samples[i].x for i in batch])
                for pos, out in enumerate(outs):
                    if not (np.isfinite(out.value) and np.all(np.isfinite(out.grad_c_hat))):
                        raise TrainingDivergedError(
                            f"non-finite loss for sample {batch[pos]} in epoch {epoch}"
                        )
                    loss_sum += out.value
                    totals += out.solver_calls
                grad_W = grads.T @ xs / len(batch)
                grad_b = grads.mean(axis=0)
                model.adam_step(grad_W, grad_b, config)
                if not (np.all(np.isfinite(model.W)) and np.all(np.isfinite(model.b))):
                    raise TrainingDivergedError(f"non-finite parameters after epoch {epoch}")
            wall += time.perf_counter() - t0

            val = float("nan")
            if validation is not None:
                val = normalized_regret(model, validation, oracle)
            rows.append(
                EpochRow(
                    epoch=epoch,
                    train_loss=loss_sum / len(samples),
                    val_regret=val,
                    qp_full=totals.qp_full,
                    qp_partial=totals.qp_partial,
                    blp=totals.blp,
                    wall_seconds=wall,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def _evaluate_batch(model, samples, batch, config, epoch, loss_fn, pool) -> list[LossOutput]:
    def one(idx: int) -> LossOutput:
        sample = samples[idx]
        rng = substream(config.seed, STREAM_SAMPLE, epoch, int(idx))
        return loss_fn(model.predict(sample.x), sample, rng)

    if pool is None:
        return [one(int(i)) for i in batch]
    # map() preserves input order, so the reduction order is fixed regardless
    # of which thread finishes first.
    return list(pool.map(one, (int(i) for i in batch)))


def write_log(rows: list[EpochRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(LOG_COLUMNS)]
    for row in rows:
        d = asdict(row)
        lines.append(",".join(repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in LOG_COLUMNS))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
