"""Weighted undirected graphs: construction, matrices, generators, ingestion.

Edges are canonically ordered: each pair stored as (min, max) with 1-based
vertex ids, sorted lexicographically. The weight vector follows this order
everywhere in the package (objectives, gradients, projections), so there is
exactly one edge indexing to keep straight.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GraphFormatError
from .rng import make_rng


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive edge weights.

    n: vertex count; vertices are 1..n.
    edges: tuple of (i, j) pairs, i < j, lexicographically sorted.
    weights: positive weight per edge, aligned with ``edges``.
    """

    n: int
    edges: tuple
    weights: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise GraphFormatError(f"vertex count must be >= 1, got {self.n}")
        pairs = []
        for (i, j) in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphFormatError(f"self-loop on vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphFormatError(f"edge ({i},{j}) outside vertex range 1..{self.n}")
            pairs.append((min(i, j), max(i, j)))
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(pairs),):
            raise GraphFormatError(
                f"{len(pairs)} edges but {w.shape} weight entries")
        if len(pairs) and np.any(w <= 0.0):
            bad = int(np.argmax(w <= 0.0))
            raise GraphFormatError(f"non-positive weight {w[bad]} on edge {pairs[bad]}")
        order = sorted(range(len(pairs)), key=lambda k: pairs[k])
        pairs_sorted = tuple(pairs[k] for k in order)
        for a, b in zip(pairs_sorted, pairs_sorted[1:]):
            if a == b:
                raise GraphFormatError(f"duplicate edge {a}")
        w = w[order] if len(pairs) else w
        w.flags.writeable = False
        object.__setattr__(self, "edges", pairs_sorted)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.edges)

    def reweighted(self, weights) -> "WeightedGraph":
        """Same topology, new weights (aligned with the canonical edge order)."""
        return WeightedGraph(self.n, self.edges, np.asarray(weights, float))

    def edge_arrays(self):
        """0-based endpoint index arrays (i_idx, j_idx), canonical edge order."""
        if not self.edges:
            return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
        e = np.asarray(self.edges, dtype=np.intp)
        return e[:, 0] - 1, e[:, 1] - 1


@dataclass(frozen=True)
class DynamicsParams:
    """Stiffness offset and damping multiplier of the second-order dynamics."""

    epsilon: float
    gamma: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


def laplacian_from_arrays(n: int, i_idx, j_idx, weights) -> np.ndarray:
    """Dense weighted Laplacian from 0-based endpoint arrays.

    Accepts zero weights (used for optimizer iterates on the auxiliary
    graph where weights are only required to be non-negative).
    """
    lap = np.zeros((n, n))
    w = np.asarray(weights, float)
    i_idx = np.asarray(i_idx, dtype=np.intp)
    j_idx = np.asarray(j_idx, dtype=np.intp)
    np.subtract.at(lap, (i_idx, j_idx), w)
    np.subtract.at(lap, (j_idx, i_idx), w)
    deg = np.zeros(n)
    np.add.at(deg, i_idx, w)
    np.add.at(deg, j_idx, w)
    lap[np.diag_indices(n)] = deg
    return lap


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Weighted graph Laplacian: degree matrix minus adjacency matrix."""
    i_idx, j_idx = g.edge_arrays()
    return laplacian_from_arrays(g.n, i_idx, j_idx, g.weights)


def stiffness(g: WeightedGraph, p: DynamicsParams) -> np.ndarray:
    """Laplacian shifted by the stiffness offset; positive definite."""
    k = laplacian(g)
    k[np.diag_indices(g.n)] += p.epsilon
    return k


def complete_edges(n: int) -> list:
    return [(i, j) for i in range(1, n) for j in range(i + 1, n + 1)]


def random_complete_graph(n: int, w_p: float, seed: int) -> WeightedGraph:
    """Complete graph with edge weights uniform on [1 - w_p, 1 + w_p]."""
    if n < 2:
        raise ValueError(f"need n >= 2 vertices, got {n}")
    if not 0.0 <= w_p < 1.0:
        raise ValueError(f"weight perturbation must be in [0, 1), got {w_p}")
    edges = complete_edges(n)
    rng = make_rng(seed)
    w = rng.uniform(1.0 - w_p, 1.0 + w_p, size=len(edges))
    return WeightedGraph(n, tuple(edges), w)


def random_incomplete_graph(n: int, n_e: int, w_p: float, seed: int) -> WeightedGraph:
    """Graph on n vertices with exactly n_e distinct random edges.

    Edge selection is a seeded shuffle of all candidate pairs (exact count,
    no rejection loop). Connectivity is NOT guaranteed; use is_connected().
    """
    if n < 2:
        raise ValueError(f"need n >= 2 vertices, got {n}")
    max_e = n * (n - 1) // 2
    if not 1 <= n_e <= max_e:
        raise ValueError(f"edge count {n_e} outside 1..{max_e}")
    if not 0.0 <= w_p < 1.0:
        raise ValueError(f"weight perturbation must be in [0, 1), got {w_p}")
    candidates = complete_edges(n)
    rng = make_rng(seed)
    picked = [candidates[k] for k in rng.permutation(max_e)[:n_e]]
    picked.sort()
    w = rng.uniform(1.0 - w_p, 1.0 + w_p, size=n_e)
    return WeightedGraph(n, tuple(picked), w)


def is_connected(g: WeightedGraph) -> bool:
    if g.n == 1:
        return True
    adj = _adjacency_lists(g)
    seen = {1}
    stack = [1]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.n


def _adjacency_lists(g: WeightedGraph) -> dict:
    adj = {v: [] for v in range(1, g.n + 1)}
    for (i, j) in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    return adj


def ego_subgraph(g: WeightedGraph, center: int, radius: int):
    """Induced subgraph on vertices within `radius` hops of `center`.

    Returns (subgraph, mapping) where mapping is {old_id: new_id}; new ids
    are contiguous 1..k assigned in ascending old-id order.
    """
    if not 1 <= center <= g.n:
        raise ValueError(f"center {center} outside 1..{g.n}")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    adj = _adjacency_lists(g)
    dist = {center: 0}
    frontier = [center]
    d = 0
    while frontier and d < radius:
        d += 1
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    kept = sorted(dist)
    mapping = {old: new for new, old in enumerate(kept, start=1)}
    edges = []
    weights = []
    for (i, j), w in zip(g.edges, g.weights):
        if i in mapping and j in mapping:
            edges.append((mapping[i], mapping[j]))
            weights.append(w)
    sub = WeightedGraph(len(kept), tuple(edges), np.asarray(weights))
    return sub, mapping


def load_edge_list(text: str) -> WeightedGraph:
    """Parse "i j [w]" lines (1-based ids, '#' comments, weight defaults 1)."""
    edges = []
    weights = []
    seen = set()
    n = 0
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"line {ln}: expected 'i j [w]', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {ln}: vertex ids must be integers, got {raw!r}")
        if i == j:
            raise GraphFormatError(f"line {ln}: self-loop on vertex {i}")
        if i < 1 or j < 1:
            raise GraphFormatError(f"line {ln}: vertex ids are 1-based, got {raw!r}")
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"line {ln}: bad weight {parts[2]!r}")
            if not math.isfinite(w) or w <= 0.0:
                raise GraphFormatError(f"line {ln}: weight must be positive, got {parts[2]}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphFormatError(f"line {ln}: duplicate edge {key}")
        seen.add(key)
        edges.append(key)
        weights.append(w)
        n = max(n, i, j)
    if n == 0:
        raise GraphFormatError("no edges found")
    return WeightedGraph(n, tuple(edges), np.asarray(weights))


def dump_edge_list(g: WeightedGraph) -> str:
    """Inverse of load_edge_list; weights at 17 significant digits."""
    lines = [f"# n={g.n} m={g.m}"]
    for (i, j), w in zip(g.edges, g.weights):
        lines.append(f"{i} {j} {w:.17g}")
    return "\n".join(lines) + "\n"


def graph_to_json(g: WeightedGraph, vertex_map: dict | None = None) -> str:
    doc = {
        "n": g.n,
        "edges": [list(e) for e in g.edges],
        "weights": [float(w) for w in g.weights],
    }
    if vertex_map is not None:
        doc["vertex_map"] = {str(k): int(v) for k, v in vertex_map.items()}
    return json.dumps(doc, indent=2)


def graph_from_json(text: str) -> WeightedGraph:
    try:
        doc = json.loads(text)
        return WeightedGraph(int(doc["n"]),
                             tuple(tuple(e) for e in doc["edges"]),
                             np.asarray(doc["weights"], float))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"bad graph JSON: {exc}") from exc
