"""Exact binary-linear-program oracles for the benchmark families.

Every oracle exposes the same surface: the decision dimension, an exact solver
``solve(c)``, feasibility validation, and access to the constraint rows needed
to build the subcone of a solution (equality rows plus the inequality rows that
are tight at it).
"""

from __future__ import annotations

import itertools

import numpy as np

from .cones import DEFAULT_BINDING_TOL, SubconeGenerators, extract_generators

__all__ = [
    "InvalidSolutionError",
    "DenseBlp",
    "GridSpProblem",
    "TspProblem",
    "make_problem",
]

MAX_TSP_NODES = 15


class InvalidSolutionError(ValueError):
    """A vector handed to an oracle is not a feasible binary solution."""


def _check_binary(w: np.ndarray, num_vars: int, tol: float) -> None:
    if w.shape != (num_vars,):
        raise InvalidSolutionError(
            f"solution has shape {w.shape}, expected ({num_vars},)"
        )
    off = np.minimum(np.abs(w), np.abs(w - 1.0))
    if np.any(off > tol):
        i = int(np.argmax(off))
        raise InvalidSolutionError(f"variable {i} = {w[i]} is not binary")


class DenseBlp:
    """Small explicit BLP min c'w s.t. A w <= b, A_eq w = b_eq, w binary.

    Solved by enumeration, so it is only meant for desk-size instances and as
    a ground-truth oracle in tests.
    """

    def __init__(self, num_vars, A=None, b=None, A_eq=None, b_eq=None):
        if num_vars < 1 or num_vars > 20:
            raise ValueError("DenseBlp supports 1..20 variables")
        self.num_vars = int(num_vars)
        self.A = np.zeros((0, num_vars)) if A is None else np.atleast_2d(np.asarray(A, float))
        self.b = np.zeros(0) if b is None else np.atleast_1d(np.asarray(b, float))
        self.A_eq = (
            np.zeros((0, num_vars)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, float))
        )
        self.b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, float))
        if self.A.shape[0] != self.b.shape[0] or self.A_eq.shape[0] != self.b_eq.shape[0]:
            raise ValueError("constraint matrix and rhs sizes disagree")

    def _feasible_points(self):
        d = self.num_vars
        for bits in range(1 << d):
            w = np.array([(bits >> i) & 1 for i in range(d)], dtype=float)
            if self.A.shape[0] and np.any(self.A @ w > self.b + 1e-9):
                continue
            if self.A_eq.shape[0] and np.any(np.abs(self.A_eq @ w - self.b_eq) > 1e-9):
                continue
            yield w

    def solve(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        best_w, best_obj = None, np.inf
        for w in self._feasible_points():
            obj = float(c @ w)
            if obj < best_obj:
                best_w, best_obj = w, obj
        if best_w is None:
            raise RuntimeError("infeasible problem")
        return best_w

    def validate_solution(self, w, tol: float = DEFAULT_BINDING_TOL) -> None:
        w = np.asarray(w, dtype=float)
        _check_binary(w, self.num_vars, tol)
        if self.A.shape[0]:
            slack = self.b - self.A @ w
            if np.any(slack < -tol):
                j = int(np.argmin(slack))
                raise InvalidSolutionError(f"inequality row {j} violated by {-slack[j]:.3g}")
        if self.A_eq.shape[0]:
            gap = np.abs(self.A_eq @ w - self.b_eq)
            if np.any(gap > tol):
                j = int(np.argmax(gap))
                raise InvalidSolutionError(f"equality row {j} violated by {gap[j]:.3g}")

    def equality_rows(self):
        return self.A_eq, self.b_eq

    def binding_inequality_rows(self, w, tol: float):
        w = np.asarray(w, dtype=float)
        if not self.A.shape[0]:
            return np.zeros((0, self.num_vars)), []
        tight = np.abs(self.A @ w - self.b) <= tol
        return self.A[tight], list(np.flatnonzero(tight))

    def binding(self, w, tol: float = DEFAULT_BINDING_TOL) -> SubconeGenerators:
        return extract_generators(self, w, tol)


class GridSpProblem:
    """Shortest path on a height x width grid from the NW to the SE corner.

    Nodes are indexed row-major; the variables are the rightward and downward
    edges, ordered by scanning nodes row-major and emitting the rightward edge
    before the downward one.  The edge DAG is acyclic, so the exact solver is
    a topological-order dynamic program that tolerates negative costs.
    """

    def __init__(self, height: int = 5, width: int = 5):
        if height < 2 or width < 2:
            raise ValueError("grid needs at least 2x2 nodes")
        self.height = height
        self.width = width
        self.n_nodes = height * width
        self.source = 0
        self.target = self.n_nodes - 1

        edges: list[tuple[int, int]] = []
        for r in range(height):
            for col in range(width):
                u = r * width + col
                if col + 1 < width:
                    edges.append((u, u + 1))
                if r + 1 < height:
                    edges.append((u, u + width))
        self.edges = tuple(edges)
        self.num_vars = len(edges)

        self._in_edges: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for e, (u, v) in enumerate(edges):
            self._in_edges[v].append((e, u))

    def solve(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.num_vars,):
            raise ValueError(f"cost vector has shape {c.shape}, expected ({self.num_vars},)")
        dist = np.full(self.n_nodes, np.inf)
        dist[self.source] = 0.0
        pred = np.full(self.n_nodes, -1, dtype=int)
        # Row-major node order is topological for right/down edges; scanning
        # incoming edges by ascending index keeps ties on the smallest one.
        for v in range(1, self.n_nodes):
            for e, u in self._in_edges[v]:
                cand = dist[u] + c[e]
                if cand < dist[v]:
                    dist[v] = cand
                    pred[v] = e
        w = np.zeros(self.num_vars)
        v = self.target
        while v != self.source:
            e = pred[v]
            w[e] = 1.0
            v = self.edges[e][0]
        return w

    def validate_solution(self, w, tol: float = DEFAULT_BINDING_TOL) -> None:
        w = np.asarray(w, dtype=float)
        _check_binary(w, self.num_vars, tol)
        A_eq, b_eq = self.equality_rows()
        gap = np.abs(A_eq @ w - b_eq)
        if np.any(gap > tol):
            v = int(np.argmax(gap))
            raise InvalidSolutionError(
                f"flow conservation violated at node {v} by {gap[v]:.3g}"
            )

    def equality_rows(self):
        A = np.zeros((self.n_nodes, self.num_vars))
        for e, (u, v) in enumerate(self.edges):
            A[u, e] = 1.0
            A[v, e] = -1.0
        b = np.zeros(self.n_nodes)
        b[self.source] = 1.0
        b[self.target] = -1.0
        return A, b

    def binding_inequality_rows(self, w, tol: float):
        return np.zeros((0, self.num_vars)), []

    def binding(self, w, tol: float = DEFAULT_BINDING_TOL) -> SubconeGenerators:
        return extract_generators(self, w, tol)


class TspProblem:
    """Symmetric TSP over the n(n-1)/2 undirected edges in lexicographic order.

    The formulation is degree-2 equalities plus subtour constraints
    sum_{e in E(S)} x_e <= |S| - 1 for 2 <= |S| <= n-1, kept implicit.  The
    exact solver is the Held-Karp subset dynamic program, so n is capped at 15.
    """

    def __init__(self, n: int):
        if not 4 <= n <= MAX_TSP_NODES:
            raise ValueError(f"node count must be in [4, {MAX_TSP_NODES}], got {n}")
        self.n = n
        self.edges = tuple((i, j) for i in range(n) for j in range(i + 1, n))
        self.num_vars = len(self.edges)
        self._edge_index = {e: k for k, e in enumerate(self.edges)}

    def edge_id(self, i: int, j: int) -> int:
        return self._edge_index[(i, j) if i < j else (j, i)]

    def cost_matrix(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.num_vars,):
            raise ValueError(f"cost vector has shape {c.shape}, expected ({self.num_vars},)")
        D = np.zeros((self.n, self.n))
        for k, (i, j) in enumerate(self.edges):
            D[i, j] = D[j, i] = c[k]
        return D

    def solve(self, c) -> np.ndarray:
        D = self.cost_matrix(c)
        n = self.n
        full = (1 << (n - 1)) - 1
        # dp[mask][j]: best cost of a path 0 -> node j+1 visiting exactly the
        # nodes of mask (bit i <-> node i+1).
        dp = [dict() for _ in range(full + 1)]
        for j in range(n - 1):
            dp[1 << j][j] = D[0, j + 1]
        for mask in range(1, full + 1):
            entries = dp[mask]
            for j, cost in entries.items():
                row = D[j + 1]
                rest = full & ~mask
                k = 0
                while rest:
                    if rest & 1:
                        nm = mask | (1 << k)
                        cand = cost + row[k + 1]
                        cur = dp[nm].get(k)
                        if cur is None or cand < cur:
                            dp[nm][k] = cand
                    rest >>= 1
                    k += 1
        best_j, best_cost = -1, np.inf
        for j in range(n - 1):
            cand = dp[full][j] + D[j + 1, 0]
            if cand < best_cost:
                best_j, best_cost = j, cand
        # Greedy backward reconstruction, smallest node on ties at every step;
        # reading the chain in reverse this yields the lexicographically
        # smallest optimal tour [0, v1, v2, ...] with v1 <= v_{n-1}.
        chain = [best_j + 1]
        mask, j = full, best_j
        while mask != 1 << j:
            prev = mask & ~(1 << j)
            best_k, best_c = -1, np.inf
            for k in range(n - 1):
                if prev & (1 << k) and k in dp[prev]:
                    cand = dp[prev][k] + D[k + 1, j + 1]
                    if cand < best_c:
                        best_k, best_c = k, cand
            chain.append(best_k + 1)
            mask, j = prev, best_k
        order = [0] + chain
        w = np.zeros(self.num_vars)
        for a, b in zip(order, order[1:] + [0]):
            w[self.edge_id(a, b)] = 1.0
        return w

    def tour_order(self, w) -> list[int]:
        """Node sequence of a tour incidence vector, from node 0, canonical direction."""
        w = np.asarray(w, dtype=float)
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for k, (i, j) in enumerate(self.edges):
            if w[k] > 0.5:
                adj[i].append(j)
                adj[j].append(i)
        for v, nbrs in enumerate(adj):
            if len(nbrs) != 2:
                raise InvalidSolutionError(f"node {v} has degree {len(nbrs)}, expected 2")
        order = [0, min(adj[0])]
        while len(order) < self.n:
            a, b = adj[order[-1]]
            nxt = b if a == order[-2] else a
            if nxt == 0:
                raise InvalidSolutionError(
                    f"edges close a subtour of {len(order)} < {self.n} nodes"
                )
            order.append(nxt)
        return order

    def validate_solution(self, w, tol: float = DEFAULT_BINDING_TOL) -> None:
        w = np.asarray(w, dtype=float)
        _check_binary(w, self.num_vars, tol)
        self.tour_order(np.round(w))

    def equality_rows(self):
        A = np.zeros((self.n, self.num_vars))
        for k, (i, j) in enumerate(self.edges):
            A[i, k] = 1.0
            A[j, k] = 1.0
        return A, np.full(self.n, 2.0)

    def binding_subtour_sets(self, w) -> set[frozenset[int]]:
        """All node sets S, 2 <= |S| <= n-1, whose subtour constraint is tight.

        On a tour these are exactly the sets visited as one contiguous segment,
        so they are enumerated directly from the tour order.
        """
        order = self.tour_order(np.round(np.asarray(w, dtype=float)))
        n = self.n
        sets: set[frozenset[int]] = set()
        for start in range(n):
            for length in range(2, n):
                sets.add(frozenset(order[(start + t) % n] for t in range(length)))
        return sets

    def _canonical_subtour_sets(self, w) -> list[frozenset[int]]:
        # One representative per {S, complement} pair: the side without node 0,
        # unless that side is a singleton (then the (n-1)-set itself is kept).
        canon: set[frozenset[int]] = set()
        for S in self.binding_subtour_sets(w):
            if 0 in S:
                comp = frozenset(range(self.n)) - S
                S = S if len(comp) < 2 else comp
            canon.add(S)
        return sorted(canon, key=lambda S: (len(S), sorted(S)))

    def binding_inequality_rows(self, w, tol: float):
        rows = []
        for S in self._canonical_subtour_sets(w):
            row = np.zeros(self.num_vars)
            for k, (i, j) in enumerate(self.edges):
                if i in S and j in S:
                    row[k] = 1.0
            rows.append(row)
        A = np.vstack(rows) if rows else np.zeros((0, self.num_vars))
        return A, list(range(len(rows)))

    def binding(self, w, tol: float = DEFAULT_BINDING_TOL) -> SubconeGenerators:
        return extract_generators(self, w, tol)


def make_problem(name: str):
    """Build a benchmark oracle from its short name, e.g. ``sp5`` or ``tsp8``."""
    name = name.strip().lower()
    if name.startswith("sp") and name[2:].isdigit():
        k = int(name[2:])
        return GridSpProblem(height=k, width=k)
    if name.startswith("tsp") and name[3:].isdigit():
        return TspProblem(int(name[3:]))
    raise ValueError(f"unknown problem {name!r}; expected sp<K> or tsp<N>")
