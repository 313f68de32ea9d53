"""Weighted approximation graph of a sampled manifold and its matrices.

Vertices ``v_i`` with cell measures ``mu_i`` are joined when their geodesic
distance is below ``kappa``; the edge weight is ``c(n, kappa) * mu_i * mu_j``
with ``c = 2(n+2) Gamma(1+n/2) / (pi^{n/2} kappa^{n+2})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import jsonio
from .errors import DisconnectedGraphError, ParseError, PreconditionError
from .manifold import ManifoldSampling, Sphere

GRAPH_FORMAT_VERSION = 1
TIE_RTOL = 1e-9


def edge_weight_constant(dim, kappa):
    """``2(n+2) Gamma(1+n/2) / (pi^{n/2} kappa^{n+2})``.

    ``math.gamma`` is correctly rounded to a few ulp for the integer and
    half-integer arguments that occur here (checked against closed forms in the
    test suite).
    """
    if int(dim) != dim or dim < 1:
        raise PreconditionError(f"dim must be an integer >= 1, got {dim}")
    if not kappa > 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")
    n = int(dim)
    return 2.0 * (n + 2) * math.gamma(1 + n / 2) / (math.pi ** (n / 2) * kappa ** (n + 2))


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    n_vertices: int
    dim: int
    kappa: float
    weights: np.ndarray
    source_sampling: ManifoldSampling
    self_weights: np.ndarray | None = None

    @property
    def measures(self):
        return self.source_sampling.measures

    @property
    def epsilon(self):
        return self.source_sampling.epsilon

    @property
    def manifold(self):
        return self.source_sampling.manifold

    @property
    def n_edges(self):
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def degree_stats(self):
        d = self.weights.sum(axis=1)
        return {"min": float(d.min()), "max": float(d.max()), "mean": float(d.mean())}


@dataclass(frozen=True, eq=False)
class GraphMatrices:
    degrees: np.ndarray
    laplacian: np.ndarray
    transition: np.ndarray
    weights: np.ndarray
    measures: np.ndarray

    @property
    def adjacency(self):
        return self.weights

    @property
    def n_vertices(self):
        return len(self.degrees)


def _check_connected(adj):
    n = adj.shape[0]
    if n == 1:
        raise DisconnectedGraphError("single-vertex graph has an isolated vertex", [1])
    ncomp, labels = connected_components(adj, directed=False)
    if ncomp > 1:
        sizes = sorted(np.bincount(labels).tolist(), reverse=True)
        raise DisconnectedGraphError(
            f"graph is disconnected: {ncomp} components of sizes {sizes}", sizes
        )


def build_graph(s, kappa, include_self_weight=False, tie_rtol=TIE_RTOL, check_connected=True):
    """Build ``G_M(epsilon, mu, kappa)`` from a sampling with assigned measures.

    An edge needs ``d(v_i, v_j) < kappa``. Distances within ``tie_rtol`` of
    ``kappa`` count as ties and get no edge, so lattice samplings whose
    spacing divides ``kappa`` resolve every tie the same way.

    With ``include_self_weight`` the degree also carries ``c * mu_i**2`` (the
    reading where the degree sum runs over ``j = i`` too); the adjacency never
    has a diagonal.
    """
    if not kappa > 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")
    if not s.has_measures:
        raise PreconditionError("all vertex measures must be assigned and positive")
    dist = s.manifold.pairwise_distances(s.coords)
    adj = dist < kappa * (1.0 - tie_rtol)
    np.fill_diagonal(adj, False)
    if check_connected:
        _check_connected(adj)
    c = edge_weight_constant(s.manifold.dim, kappa)
    mu = s.measures
    w = np.where(adj, c * np.outer(mu, mu), 0.0)
    selfw = c * mu**2 if include_self_weight else None
    return WeightedGraph(s.n_points, s.manifold.dim, float(kappa), w, s, selfw)


def assemble_matrices(g):
    """Degree vector, Laplacian ``D - W`` and transition matrix ``D^{-1} W``."""
    w = g.weights
    d = w.sum(axis=1)
    if g.self_weights is not None:
        d = d + g.self_weights
    if np.any(d <= 0):
        bad = np.flatnonzero(d <= 0).tolist()
        raise DisconnectedGraphError(f"isolated vertices {bad} have zero degree", [1] * len(bad))
    lap = np.diag(d) - w
    lap = 0.5 * (lap + lap.T)
    p = w / d[:, None]
    if g.self_weights is None:
        dev = np.abs(p.sum(axis=1) - 1.0)
        if dev.max() > 1e-12:
            raise RuntimeError(f"transition rows deviate from 1 by {dev.max():.3e}")
        p = p / p.sum(axis=1, keepdims=True)
    return GraphMatrices(d, lap, p, w, g.measures.copy())


def matrices_from_weights(weights, measures=None):
    """:class:`GraphMatrices` for an explicit symmetric weight matrix.

    Meant for small hand-built fixtures; no manifold is involved.
    """
    w = np.array(weights, dtype=np.float64)
    n = w.shape[0]
    if w.shape != (n, n) or not np.array_equal(w, w.T) or np.any(w < 0) or np.any(np.diag(w) != 0):
        raise PreconditionError("weights must be symmetric, nonnegative, with a zero diagonal")
    mu = np.ones(n) if measures is None else np.asarray(measures, dtype=np.float64)
    _check_connected(w > 0)
    d = w.sum(axis=1)
    return GraphMatrices(d, np.diag(d) - w, w / d[:, None], w, mu)


def graph_to_dict(g):
    s = g.source_sampling
    radius = getattr(s.manifold, "radius", None)
    iu, ju = np.nonzero(np.triu(g.weights, 1))
    doc = {
        "version": GRAPH_FORMAT_VERSION,
        "dim": g.dim,
        "kappa": g.kappa,
        "radius": radius,
        "epsilon": s.epsilon,
        "vertices": [{"coords": s.coords[i], "measure": s.measures[i]} for i in range(g.n_vertices)],
        "edges": [{"i": int(i), "j": int(j), "w": g.weights[i, j]} for i, j in zip(iu, ju)],
    }
    if g.self_weights is not None:
        doc["self_weights"] = g.self_weights
    return doc


def graph_to_json(g):
    return jsonio.dumps(graph_to_dict(g), indent=1) + "\n"


def _require(doc, key, kind, source):
    if key not in doc:
        raise ParseError(f"{source}: missing field {key!r}")
    val = doc[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ParseError(f"{source}: field {key!r} has wrong type {type(val).__name__}")
    return val


def graph_from_dict(doc, source="<graph>"):
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object")
    if _require(doc, "version", int, source) != GRAPH_FORMAT_VERSION:
        raise ParseError(f"{source}: unsupported graph format version {doc['version']}")
    dim = _require(doc, "dim", int, source)
    kappa = _require(doc, "kappa", float, source)
    radius = _require(doc, "radius", float, source)
    eps = float(doc.get("epsilon") or float("nan"))
    verts = _require(doc, "vertices", list, source)
    edges = _require(doc, "edges", list, source)
    try:
        coords = np.array([v["coords"] for v in verts], dtype=np.float64)
        mu = np.array([v["measure"] for v in verts], dtype=np.float64)
        n = len(verts)
        w = np.zeros((n, n))
        for e in edges:
            i, j, wij = int(e["i"]), int(e["j"]), float(e["w"])
            if not 0 <= i < j < n:
                raise ParseError(f"{source}: edge ({i},{j}) must satisfy 0 <= i < j < N")
            w[i, j] = w[j, i] = wij
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{source}: malformed vertex or edge record ({exc})") from exc
    try:
        manifold = Sphere(dim, radius)
        coords = manifold.check_points(coords.reshape(len(verts), -1))
    except PreconditionError as exc:
        raise ParseError(f"{source}: {exc}") from exc
    s = ManifoldSampling(manifold, coords, mu, eps, False)
    selfw = doc.get("self_weights")
    return WeightedGraph(n, dim, kappa, w, s, None if selfw is None else np.asarray(selfw, float))


def graph_from_json(text, source="<graph>"):
    return graph_from_dict(jsonio.loads(text, source), source)
