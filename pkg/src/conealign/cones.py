"""Construction and membership queries for the optimal subcone of a BLP solution.

The subcone of a binary solution w* is generated by the constraint rows that
are tight at w*: each binding inequality row a_j (with A w <= b orientation)
contributes -a_j, each equality row contributes both signs, and each variable
bound contributes +e_i (at 0) or -e_i (at 1).  Any cost vector in the cone has
w* as a minimizer of the LP relaxation, hence of the BLP itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projection import QpSettings, nnls_ipm

__all__ = [
    "Provenance",
    "SubconeGenerators",
    "ConeMembership",
    "extract_generators",
    "cone_contains",
]

DEFAULT_BINDING_TOL = 1e-6

PROVENANCE_KINDS = (
    "inequality",
    "equality_pos",
    "equality_neg",
    "lower_bound",
    "upper_bound",
)


@dataclass(frozen=True)
class Provenance:
    """Which constraint or bound produced a generator row."""

    kind: str
    index: int

    def __post_init__(self) -> None:
        if self.kind not in PROVENANCE_KINDS:
            raise ValueError(f"unknown provenance kind {self.kind!r}")


@dataclass(frozen=True)
class SubconeGenerators:
    """Unit-norm generator rows of a subcone, one provenance tag per row."""

    rows: np.ndarray
    provenance: tuple[Provenance, ...]

    def __post_init__(self) -> None:
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if rows.shape[0] < 1:
            raise ValueError("a subcone needs at least one generator")
        if len(self.provenance) != rows.shape[0]:
            raise ValueError(
                f"{len(self.provenance)} provenance tags for {rows.shape[0]} rows"
            )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class ConeMembership:
    """Result of a membership query: distance to the cone and its certificate."""

    inside: bool
    residual: float
    lam: np.ndarray


def extract_generators(problem, w_star, tol: float = DEFAULT_BINDING_TOL) -> SubconeGenerators:
    """Build the subcone generators of w_star from the constraints tight there.

    ``problem`` must expose ``num_vars``, ``validate_solution``,
    ``equality_rows`` and ``binding_inequality_rows``; see the problems module.
    Raises if w_star is infeasible or non-binary, with the violated constraint
    named in the message.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    w = np.asarray(w_star, dtype=float)
    problem.validate_solution(w, tol)
    d = problem.num_vars

    rows: list[np.ndarray] = []
    tags: list[Provenance] = []

    binding_rows, binding_ids = problem.binding_inequality_rows(w, tol)
    for a, j in zip(binding_rows, binding_ids):
        rows.append(-np.asarray(a, dtype=float))
        tags.append(Provenance("inequality", int(j)))

    eq_rows, _ = problem.equality_rows()
    eq_rows = np.asarray(eq_rows, dtype=float).reshape(-1, d)
    for j, a in enumerate(eq_rows):
        rows.append(a)
        tags.append(Provenance("equality_pos", j))
        rows.append(-a)
        tags.append(Provenance("equality_neg", j))

    for i in range(d):
        if w[i] <= tol:
            e = np.zeros(d)
            e[i] = 1.0
            rows.append(e)
            tags.append(Provenance("lower_bound", i))
        elif w[i] >= 1.0 - tol:
            e = np.zeros(d)
            e[i] = -1.0
            rows.append(e)
            tags.append(Provenance("upper_bound", i))

    if not rows:
        raise RuntimeError(
            "no binding constraints at a feasible binary point; the problem "
            "description is inconsistent"
        )

    G = np.vstack(rows)
    norms = np.linalg.norm(G, axis=1)
    if np.any(norms <= 0.0):
        bad = int(np.argmin(norms))
        raise RuntimeError(f"zero-norm constraint row from {tags[bad]}")
    return SubconeGenerators(rows=G / norms[:, None], provenance=tuple(tags))


def cone_contains(
    gen: SubconeGenerators, c, tol: float = DEFAULT_BINDING_TOL
) -> ConeMembership:
    """Decide whether c lies in cone(gen) via the exact projection residual."""
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    c = np.asarray(c, dtype=float)
    if c.shape != (gen.dim,):
        raise ValueError(f"query vector has shape {c.shape}, expected ({gen.dim},)")
    result = nnls_ipm(gen.rows, c, QpSettings())
    residual = float(np.linalg.norm(gen.rows.T @ result.lam - c))
    inside = residual <= tol * max(1.0, float(np.linalg.norm(c)))
    return ConeMembership(inside=inside, residual=residual, lam=result.lam)
