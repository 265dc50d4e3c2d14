"""Synthetic feature/cost benchmark datasets for the grid-SP and TSP oracles.

Features are standard Gaussian; costs come from a fixed Bernoulli(0.5) mixing
matrix raised to a polynomial degree with multiplicative uniform noise.  Each
sample caches its true optimum and the subcone generators extracted at it, so
training never solves the optimization problem for alignment losses.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cones import SubconeGenerators
from .problems import GridSpProblem, TspProblem, make_problem

__all__ = [
    "GenConfig",
    "DataSample",
    "Dataset",
    "gen_sp",
    "gen_tsp",
    "generate_dataset",
    "save_dataset",
    "load_dataset",
]

SP_FEATURE_DIM = 5
TSP_FEATURE_DIM = 10


@dataclass(frozen=True)
class GenConfig:
    """Recipe for one synthetic dataset.

    The feature-to-cost mapping (the Bernoulli matrix, and node coordinates
    for TSP) is drawn once per seed, so datasets meant to share a ground truth
    must share a seed; ``n_skip`` discards that many leading samples from the
    stream, which gives disjoint splits over the same mapping.
    """

    problem: str = "sp5"
    n_samples: int = 100
    deg: int = 4
    noise_width: float = 0.5
    seed: int = 0
    n_skip: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.deg < 1:
            raise ValueError(f"deg must be >= 1, got {self.deg}")
        if not 0.0 <= self.noise_width < 1.0:
            raise ValueError(f"noise_width must be in [0, 1), got {self.noise_width}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.n_skip < 0:
            raise ValueError(f"n_skip must be nonnegative, got {self.n_skip}")


@dataclass(frozen=True)
class DataSample:
    """One instance: features, true costs, true optimum, and its subcone."""

    x: np.ndarray
    c: np.ndarray
    w_star: np.ndarray
    z_star: float
    gen: SubconeGenerators


@dataclass
class Dataset:
    config: GenConfig
    samples: list[DataSample]
    mapping: np.ndarray
    coords: np.ndarray | None = None
    problem: object = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def feature_dim(self) -> int:
        return self.samples[0].x.shape[0]

    @property
    def cost_dim(self) -> int:
        return self.samples[0].c.shape[0]


def generate_dataset(config: GenConfig) -> Dataset:
    problem = make_problem(config.problem)
    if isinstance(problem, GridSpProblem):
        return gen_sp(config, problem)
    return gen_tsp(config, problem)


def sp_base_cost(B: np.ndarray, x: np.ndarray, deg: int) -> np.ndarray:
    """Noise-free SP cost: [((Bx)_j / sqrt(p) + 3)^deg + 1] / 3.5^deg.

    The 3.5^deg rescale applies to the whole bracket; putting the +1 outside
    it would let the flat term dominate the signal and cap every predictor at
    a noise floor above the two-stage reference results.
    """
    p = B.shape[1]
    return (((B @ x) / np.sqrt(p) + 3.0) ** deg + 1.0) / 3.5**deg


def tsp_feature_cost(B: np.ndarray, x: np.ndarray, deg: int) -> np.ndarray:
    """Noise-free TSP feature term: ((Bx)_e / sqrt(p) + 3)^deg / 3^(deg-1)."""
    p = B.shape[1]
    return ((B @ x) / np.sqrt(p) + 3.0) ** deg / 3.0 ** (deg - 1)


def gen_sp(config: GenConfig, problem: GridSpProblem | None = None) -> Dataset:
    """Grid shortest-path data: c_j = [((Bx)_j/sqrt(p) + 3)^deg + 1] / 3.5^deg * eps_j."""
    problem = problem or make_problem(config.problem)
    if not isinstance(problem, GridSpProblem):
        raise ValueError(f"{config.problem!r} is not a grid shortest-path problem")
    rng = np.random.default_rng(config.seed)
    d, p = problem.num_vars, SP_FEATURE_DIM
    B = rng.integers(0, 2, size=(d, p)).astype(float)

    samples = []
    for i in range(config.n_skip + config.n_samples):
        x = rng.standard_normal(p)
        eps = rng.uniform(1.0 - config.noise_width, 1.0 + config.noise_width, d)
        if i < config.n_skip:
            continue
        c = sp_base_cost(B, x, config.deg) * eps
        samples.append(_solve_sample(problem, x, c))
    return Dataset(config=config, samples=samples, mapping=B, problem=problem)


def gen_tsp(config: GenConfig, problem: TspProblem | None = None) -> Dataset:
    """TSP data: c_e = dist_e + ((Bx)_e/sqrt(p) + 3)^deg * eps_e / 3^(deg-1).

    Node coordinates are uniform on the unit square and fixed per dataset; the
    3^(deg-1) factor keeps the feature term on the scale of the distances.
    """
    problem = problem or make_problem(config.problem)
    if not isinstance(problem, TspProblem):
        raise ValueError(f"{config.problem!r} is not a TSP problem")
    rng = np.random.default_rng(config.seed)
    d, p = problem.num_vars, TSP_FEATURE_DIM
    coords = rng.random((problem.n, 2))
    B = rng.integers(0, 2, size=(d, p)).astype(float)
    dist = np.array([np.linalg.norm(coords[i] - coords[j]) for i, j in problem.edges])

    samples = []
    for i in range(config.n_skip + config.n_samples):
        x = rng.standard_normal(p)
        eps = rng.uniform(1.0 - config.noise_width, 1.0 + config.noise_width, d)
        if i < config.n_skip:
            continue
        c = dist + tsp_feature_cost(B, x, config.deg) * eps
        samples.append(_solve_sample(problem, x, c))
    return Dataset(config=config, samples=samples, mapping=B, coords=coords, problem=problem)


def _solve_sample(problem, x: np.ndarray, c: np.ndarray) -> DataSample:
    w = problem.solve(c)
    return DataSample(x=x, c=c, w_star=w, z_star=float(c @ w), gen=problem.binding(w))


def save_dataset(dataset: Dataset, outdir: str | Path) -> Path:
    """Write ``meta.json`` and ``samples.csv`` under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = {
        "config": asdict(dataset.config),
        "seed": dataset.config.seed,
        "mapping": dataset.mapping.astype(int).tolist(),
        "coords": None if dataset.coords is None else dataset.coords.tolist(),
    }
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    p = dataset.feature_dim
    d = dataset.cost_dim
    header = (
        [f"x{i}" for i in range(p)]
        + [f"c{j}" for j in range(d)]
        + [f"w{j}" for j in range(d)]
    )
    with open(outdir / "samples.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in dataset.samples:
            row = (
                [repr(float(v)) for v in s.x]
                + [repr(float(v)) for v in s.c]
                + [str(int(round(v))) for v in s.w_star]
            )
            writer.writerow(row)
    return outdir


def load_dataset(indir: str | Path) -> Dataset:
    """Rebuild a dataset from disk, re-deriving objectives and subcones."""
    indir = Path(indir)
    meta = json.loads((indir / "meta.json").read_text(encoding="utf-8"))
    config = GenConfig(**meta["config"])
    problem = make_problem(config.problem)
    p = SP_FEATURE_DIM if isinstance(problem, GridSpProblem) else TSP_FEATURE_DIM
    d = problem.num_vars

    samples = []
    with open(indir / "samples.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) != p + 2 * d:
            raise ValueError(
                f"samples.csv has {len(header)} columns, expected {p + 2 * d}"
            )
        for row in reader:
            vals = np.array([float(v) for v in row])
            x, c, w = vals[:p], vals[p : p + d], vals[p + d :]
            samples.append(
                DataSample(x=x, c=c, w_star=w, z_star=float(c @ w), gen=problem.binding(w))
            )
    if not samples:
        raise ValueError(f"no samples in {indir}")
    return Dataset(
        config=config,
        samples=samples,
        mapping=np.array(meta["mapping"], dtype=float),
        coords=None if meta["coords"] is None else np.array(meta["coords"]),
        problem=problem,
    )
