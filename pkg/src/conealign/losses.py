"""Training losses: subcone-alignment (three projection variants) and baselines.

The alignment loss is the negative cosine similarity between a predicted cost
vector and its projection onto the instance's subcone; the projection is held
constant in the backward pass, so the gradient is the plain cosine gradient
evaluated at the projected point.  Baselines are two-stage MSE regression and
the SPO+ / perturbed Fenchel-Young subgradients, which need one (or K) exact
solver calls instead of a projection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cones import SubconeGenerators
from .projection import QpSettings, project_exact, project_heuristic, project_inner

__all__ = [
    "SolverCalls",
    "LossOutput",
    "CaveVariant",
    "cave_loss",
    "mse_loss",
    "spo_plus_grad",
    "pfyl_grad",
    "make_loss",
    "METHOD_IDS",
]

logger = logging.getLogger(__name__)

APEX_NORM_TOL = 1e-12
# An interior-point projection never returns an exact zero: a collapsed
# projection has weights at the KKT tolerance, so apex detection must also be
# relative to the prediction's scale.
APEX_RELATIVE_TOL = 1e-6

METHOD_IDS = ("2stage", "cave-e", "cave+", "cave-h", "spo+", "pfyl")


@dataclass
class SolverCalls:
    """How many expensive solver calls a loss evaluation consumed."""

    qp_full: int = 0
    qp_partial: int = 0
    blp: int = 0

    def __iadd__(self, other: "SolverCalls") -> "SolverCalls":
        self.qp_full += other.qp_full
        self.qp_partial += other.qp_partial
        self.blp += other.blp
        return self


@dataclass(frozen=True)
class LossOutput:
    """Loss value (for logging), gradient w.r.t. the prediction, and call counts."""

    value: float
    grad_c_hat: np.ndarray
    solver_calls: SolverCalls


@dataclass(frozen=True)
class CaveVariant:
    """Which projection the alignment loss uses.

    ``exact`` solves the projection QP to optimality, ``plus`` caps it at
    ``inner_iters`` interior-point steps, and ``hybrid`` draws a coin per
    sample: probability ``beta`` for an inner projection, otherwise the
    heuristic blend with weight ``gamma``.
    """

    kind: str
    gamma: float = 0.2
    beta: float = 0.3
    inner_iters: int = 3

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "plus", "hybrid"):
            raise ValueError(f"unknown variant kind {self.kind!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.beta < 0.5:
            raise ValueError(f"beta must be in [0, 0.5), got {self.beta}")
        if self.inner_iters < 1:
            raise ValueError(f"inner_iters must be >= 1, got {self.inner_iters}")


def cave_loss(
    c_hat: np.ndarray,
    gen: SubconeGenerators,
    variant: CaveVariant,
    rng: np.random.Generator | None = None,
) -> LossOutput:
    """Negative cosine similarity between c_hat and its (detached) projection."""
    c_hat = np.asarray(c_hat, dtype=float)
    norm_c = float(np.linalg.norm(c_hat))
    if norm_c == 0.0:
        raise ValueError("zero prediction vector; the model upstream is broken")

    calls = SolverCalls()
    if variant.kind == "exact":
        proj = project_exact(gen, c_hat)
        calls.qp_full += 1
    elif variant.kind == "plus":
        proj = project_inner(gen, c_hat, QpSettings(max_iters=variant.inner_iters))
        calls.qp_partial += 1
    else:
        if rng is None:
            raise ValueError("the hybrid variant needs an rng for its branch draw")
        if rng.random() < variant.beta:
            proj = project_inner(gen, c_hat, QpSettings(max_iters=variant.inner_iters))
            calls.qp_partial += 1
        else:
            proj = project_heuristic(gen, c_hat, variant.gamma)

    p = proj.p
    norm_p = float(np.linalg.norm(p))
    if norm_p <= max(APEX_NORM_TOL, APEX_RELATIVE_TOL * norm_c):
        logger.warning("projection collapsed to the cone apex; zero loss emitted")
        return LossOutput(0.0, np.zeros_like(c_hat), calls)

    cos = float(c_hat @ p) / (norm_c * norm_p)
    grad = -(p / (norm_c * norm_p) - cos * c_hat / norm_c**2)
    return LossOutput(-cos, grad, calls)


def mse_loss(c_hat: np.ndarray, c_true: np.ndarray) -> LossOutput:
    """Mean squared error against the true costs; the two-stage baseline."""
    c_hat = np.asarray(c_hat, dtype=float)
    c_true = np.asarray(c_true, dtype=float)
    if c_hat.shape != c_true.shape:
        raise ValueError(f"shape mismatch {c_hat.shape} vs {c_true.shape}")
    d = c_hat.shape[0]
    diff = c_hat - c_true
    return LossOutput(float(diff @ diff) / d, 2.0 * diff / d, SolverCalls())


def spo_plus_grad(
    c_hat: np.ndarray, c_true: np.ndarray, w_star: np.ndarray, oracle
) -> LossOutput:
    """SPO+ subgradient: one exact solve at the reflected cost 2*c_hat - c_true."""
    c_hat = np.asarray(c_hat, dtype=float)
    c_true = np.asarray(c_true, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    shifted = 2.0 * c_hat - c_true
    w_tilde = oracle.solve(shifted)
    value = float(shifted @ (w_star - w_tilde))
    grad = 2.0 * (w_star - w_tilde)
    return LossOutput(value, grad, SolverCalls(blp=1))


def pfyl_grad(
    c_hat: np.ndarray,
    w_star: np.ndarray,
    oracle,
    sigma: float,
    n_samples: int,
    rng: np.random.Generator,
) -> LossOutput:
    """Perturbed Fenchel-Young gradient: w_star minus the mean perturbed solution."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    c_hat = np.asarray(c_hat, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    w_sum = np.zeros_like(w_star)
    for _ in range(n_samples):
        noisy = c_hat + sigma * rng.standard_normal(c_hat.shape[0])
        w_sum += oracle.solve(noisy)
    w_bar = w_sum / n_samples
    value = float(c_hat @ (w_star - w_bar))
    return LossOutput(value, w_star - w_bar, SolverCalls(blp=n_samples))


def make_loss(
    method: str | CaveVariant,
    oracle=None,
    *,
    pfyl_sigma: float = 1.0,
    pfyl_samples: int = 1,
    cave_gamma: float = 0.2,
    cave_beta: float = 0.3,
    cave_inner_iters: int = 3,
):
    """Bind a method id to a per-sample callable ``f(c_hat, sample, rng)``.

    ``sample`` must expose ``c``, ``w_star`` and ``gen`` (see datagen).  The
    baselines that solve the optimization problem require ``oracle``.
    """
    if isinstance(method, CaveVariant):
        variant = method
        return lambda c_hat, sample, rng: cave_loss(c_hat, sample.gen, variant, rng)

    if method not in METHOD_IDS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHOD_IDS}")
    if method == "2stage":
        return lambda c_hat, sample, rng: mse_loss(c_hat, sample.c)
    if method in ("spo+", "pfyl") and oracle is None:
        raise ValueError(f"method {method!r} needs the problem oracle")
    if method == "spo+":
        return lambda c_hat, sample, rng: spo_plus_grad(c_hat, sample.c, sample.w_star, oracle)
    if method == "pfyl":
        return lambda c_hat, sample, rng: pfyl_grad(
            c_hat, sample.w_star, oracle, pfyl_sigma, pfyl_samples, rng
        )

    kind = {"cave-e": "exact", "cave+": "plus", "cave-h": "hybrid"}[method]
    variant = CaveVariant(
        kind, gamma=cave_gamma, beta=cave_beta, inner_iters=cave_inner_iters
    )
    return lambda c_hat, sample, rng: cave_loss(c_hat, sample.gen, variant, rng)
