"""Projection of cost vectors onto a generator cone.

Three modes are provided: an exact nonnegative least-squares projection, an
iteration-capped "inner" projection whose iterate stays strictly inside the
cone, and a cheap heuristic blend with the mean generator.  The exact and
inner modes share one primal-dual interior-point solver for

    min_{lam >= 0}  0.5 * lam' (G G') lam - (G c)' lam,

whose optimum gives the projection p = G' lam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "QpSettings",
    "ProjectionResult",
    "nnls_ipm",
    "project_exact",
    "project_inner",
    "project_heuristic",
]

DEFAULT_INNER_ITERS = 3

# Mehrotra centering exponent clip range.
_SIGMA_MIN = 1e-4
_SIGMA_MAX = 0.9


@dataclass(frozen=True)
class QpSettings:
    """Knobs of the interior-point NNLS solver."""

    max_iters: int = 100
    kkt_tol: float = 1e-8
    fraction_to_boundary: float = 0.99
    min_regularization: float = 1e-10

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 < self.kkt_tol < 1.0:
            raise ValueError(f"kkt_tol must be in (0, 1), got {self.kkt_tol}")
        if not 0.0 < self.fraction_to_boundary < 1.0:
            raise ValueError(
                f"fraction_to_boundary must be in (0, 1), got {self.fraction_to_boundary}"
            )
        if self.min_regularization < 0.0:
            raise ValueError("min_regularization must be nonnegative")


@dataclass(frozen=True)
class ProjectionResult:
    """Projection p, its combination weights, and solver diagnostics.

    For exact/inner modes ``p == G.T @ lam`` by construction and ``gap_trace``
    holds the complementarity gap after each interior-point iteration.  The
    heuristic mode carries an empty ``lam`` and no meaningful KKT residual.
    """

    p: np.ndarray
    lam: np.ndarray
    iterations: int
    converged: bool
    kkt_residual: float
    gap_trace: tuple[float, ...] = ()


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha*dx >= 0, given x > 0."""
    shrink = dx < 0.0
    if not np.any(shrink):
        return np.inf
    return float(np.min(-x[shrink] / dx[shrink]))


def nnls_ipm(G: np.ndarray, c_hat: np.ndarray, settings: QpSettings) -> ProjectionResult:
    """Solve the cone-projection NNLS by a primal-dual interior-point method.

    Each iteration is one Mehrotra predictor-corrector cycle: the affine
    direction fixes the step-length-based centering parameter
    sigma = (affine gap / current gap)^3 (clipped), and the corrected Newton
    system is solved on G G' + ridge with a diagonal complementarity term.
    Both lam and its dual slack stay strictly positive throughout.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    c_hat = np.asarray(c_hat, dtype=float)
    m, d = G.shape
    if m < 1:
        raise ValueError("need at least one generator row")
    if c_hat.shape != (d,):
        raise ValueError(f"cost vector has shape {c_hat.shape}, expected ({d},)")

    q = G @ c_hat
    Q = G @ G.T
    Q[np.diag_indices_from(Q)] += settings.min_regularization

    lam = np.ones(m)
    s = np.ones(m)
    kkt_scale = settings.kkt_tol * (1.0 + float(np.linalg.norm(c_hat)))
    ftb = settings.fraction_to_boundary

    gaps: list[float] = []
    converged = False
    iterations = 0
    kkt = _kkt_residual(G, lam, q)

    for _ in range(settings.max_iters):
        if kkt <= kkt_scale:
            converged = True
            break

        r_d = Q @ lam - q - s
        mu = float(lam @ s) / m

        M = Q + np.diag(s / lam)
        factor = _factor_with_escalation(M, settings.min_regularization)
        if factor is None:
            break

        # Predictor: pure Newton step toward complementarity zero.
        rhs_aff = q - Q @ lam
        dlam_aff = cho_solve(factor, rhs_aff)
        ds_aff = Q @ dlam_aff + r_d
        alpha_aff = min(1.0, _max_step(lam, dlam_aff), _max_step(s, ds_aff))
        gap_aff = float((lam + alpha_aff * dlam_aff) @ (s + alpha_aff * ds_aff)) / m
        sigma = float(np.clip((max(gap_aff, 0.0) / mu) ** 3, _SIGMA_MIN, _SIGMA_MAX))

        # Corrector: recenter and compensate the second-order term.
        rhs = rhs_aff + (sigma * mu - dlam_aff * ds_aff) / lam
        dlam = cho_solve(factor, rhs)
        ds = Q @ dlam + r_d

        # Keep the complementarity gap non-increasing: the corrected direction
        # can point uphill in the gap near a cold start, in which case the
        # affine direction (whose gap slope is exactly -mu) is used instead.
        if float(s @ dlam + lam @ ds) >= 0.0:
            dlam, ds = dlam_aff, ds_aff
        alpha = min(1.0, ftb * _max_step(lam, dlam), ftb * _max_step(s, ds))
        while alpha > 1e-12 and float((lam + alpha * dlam) @ (s + alpha * ds)) / m > mu:
            alpha *= 0.5

        lam = lam + alpha * dlam
        s = s + alpha * ds
        iterations += 1
        gaps.append(float(lam @ s) / m)
        kkt = _kkt_residual(G, lam, q)
    else:
        converged = kkt <= kkt_scale

    return ProjectionResult(
        p=G.T @ lam,
        lam=lam,
        iterations=iterations,
        converged=converged,
        kkt_residual=kkt,
        gap_trace=tuple(gaps),
    )


def _kkt_residual(G: np.ndarray, lam: np.ndarray, q: np.ndarray) -> float:
    """Stationarity measure max_i |min(lam_i, (G G' lam - G c)_i)|, ridge-free."""
    grad = G @ (G.T @ lam) - q
    return float(np.max(np.abs(np.minimum(lam, grad))))


def _factor_with_escalation(M: np.ndarray, base_ridge: float):
    """Cholesky of M, escalating the diagonal shift a few times if singular."""
    ridge = max(base_ridge, 1e-14)
    for _ in range(6):
        try:
            return cho_factor(M, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            M = M + ridge * np.eye(M.shape[0])
            ridge *= 100.0
    return None


def project_exact(gen, c_hat: np.ndarray, settings: QpSettings | None = None) -> ProjectionResult:
    """Project c_hat onto the cone surface by solving the NNLS to optimality."""
    c_hat = _checked_cost(gen, c_hat)
    return nnls_ipm(gen.rows, c_hat, settings or QpSettings())


def project_inner(gen, c_hat: np.ndarray, settings: QpSettings | None = None) -> ProjectionResult:
    """Run the same interior-point iteration but stop after a few steps.

    The truncated iterate keeps every combination weight strictly positive, so
    the returned point lies strictly inside the cone rather than on a face.
    """
    c_hat = _checked_cost(gen, c_hat)
    if settings is None:
        settings = QpSettings(max_iters=DEFAULT_INNER_ITERS)
    return nnls_ipm(gen.rows, c_hat, settings)


def project_heuristic(gen, c_hat: np.ndarray, gamma: float) -> ProjectionResult:
    """Blend c_hat with the mean generator row: p = (1-gamma)*c_hat + gamma*mean.

    No quadratic program is solved and the result need not lie in the cone; it
    only pulls the prediction toward the cone's average direction.
    """
    c_hat = _checked_cost(gen, c_hat, allow_zero=True)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    p = (1.0 - gamma) * c_hat + gamma * gen.rows.mean(axis=0)
    return ProjectionResult(
        p=p,
        lam=np.zeros(0),
        iterations=0,
        converged=True,
        kkt_residual=float("nan"),
    )


def _checked_cost(gen, c_hat: np.ndarray, allow_zero: bool = False) -> np.ndarray:
    c_hat = np.asarray(c_hat, dtype=float)
    if c_hat.shape != (gen.dim,):
        raise ValueError(f"cost vector has shape {c_hat.shape}, expected ({gen.dim},)")
    if not allow_zero and not np.any(c_hat):
        raise ValueError("cannot project the zero cost vector")
    return c_hat
