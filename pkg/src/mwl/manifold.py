"""Analytic manifolds, epsilon-nets and Monte Carlo Voronoi measures.

Only round spheres ``S^n(R)`` embedded in ``R^{n+1}`` are built in. Downstream
code talks to the :class:`Manifold` interface, so another family only has to
provide uniform sampling, geodesic distances, nearest-vertex assignment and a
farthest-point net.
"""
from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import CoverageError, MeasureError, PreconditionError
from .rng import substream

_BATCH = 65536
_NORM_RTOL = 1e-9


class Manifold(abc.ABC):
    """Interface every manifold family implements."""

    family: str
    dim: int

    @property
    @abc.abstractmethod
    def ambient_dim(self) -> int: ...

    @property
    @abc.abstractmethod
    def diameter(self) -> float: ...

    @property
    @abc.abstractmethod
    def injectivity_radius(self) -> float: ...

    @property
    @abc.abstractmethod
    def curvature_bound(self) -> float: ...

    @property
    @abc.abstractmethod
    def total_volume(self) -> float: ...

    @abc.abstractmethod
    def sample_uniform(self, rng, n): ...

    @abc.abstractmethod
    def check_points(self, coords): ...

    @abc.abstractmethod
    def pairwise_distances(self, coords): ...

    @abc.abstractmethod
    def nearest(self, points, vertices):
        """Return ``(index, distance)`` of the closest vertex for each point."""

    @abc.abstractmethod
    def farthest_point_net(self, pool, start, radius, max_points): ...


@dataclass(frozen=True)
class Sphere(Manifold):
    """The round sphere ``S^dim(radius)``."""

    dim: int
    radius: float = 1.0
    family: str = field(default="sphere", init=False)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise PreconditionError(f"sphere dimension must be an integer >= 1, got {self.dim}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise PreconditionError(f"sphere radius must be positive, got {self.radius}")

    @property
    def ambient_dim(self):
        return self.dim + 1

    @property
    def diameter(self):
        return math.pi * self.radius

    @property
    def injectivity_radius(self):
        return math.pi * self.radius

    @property
    def curvature_bound(self):
        return 1.0 / self.radius**2

    @property
    def total_volume(self):
        k = self.dim + 1
        return 2.0 * math.pi ** (k / 2) * self.radius**self.dim / math.gamma(k / 2)

    def sample_uniform(self, rng, n):
        g = rng.standard_normal((n, self.ambient_dim))
        return self.radius * g / np.linalg.norm(g, axis=1, keepdims=True)

    def check_points(self, coords):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != self.ambient_dim:
            raise PreconditionError(
                f"expected points in R^{self.ambient_dim}, got array of shape {coords.shape}"
            )
        norms = np.linalg.norm(coords, axis=1)
        if np.any(np.abs(norms - self.radius) > _NORM_RTOL * self.radius):
            raise PreconditionError("points do not lie on the sphere (|x| != R)")
        return coords

    def pairwise_distances(self, coords):
        # 2R atan2(|x - y|, |x + y|) stays accurate for nearby and antipodal pairs alike.
        coords = np.asarray(coords, dtype=np.float64)
        diff = np.zeros((len(coords), len(coords)))
        summ = np.zeros_like(diff)
        for c in range(coords.shape[1]):
            col = coords[:, c]
            diff += np.subtract.outer(col, col) ** 2
            summ += np.add.outer(col, col) ** 2
        return 2.0 * self.radius * np.arctan2(np.sqrt(diff), np.sqrt(summ))

    def nearest(self, points, vertices):
        idx, best = kernels.nearest_vertex(
            np.ascontiguousarray(points / self.radius), np.ascontiguousarray(vertices / self.radius)
        )
        return idx, self.radius * np.arccos(np.clip(best, -1.0, 1.0))

    def farthest_point_net(self, pool, start, radius, max_points):
        unit = np.ascontiguousarray(pool / self.radius)
        cos_stop = math.cos(min(radius / self.radius, math.pi))
        chosen, _ = kernels.fps_select(unit, int(start), cos_stop, int(max_points))
        return chosen


ManifoldDescriptor = Manifold


@dataclass(frozen=True)
class SamplePoint:
    coords: np.ndarray
    measure: float = 0.0


@dataclass(frozen=True, eq=False)
class ManifoldSampling:
    """Vertices of an epsilon-net with their Voronoi measures.

    ``measures`` is all zeros until :func:`estimate_voronoi_measures` fills it.
    ``max_gap`` is the largest probe-to-net distance seen during verification.
    """

    manifold: Manifold
    coords: np.ndarray
    measures: np.ndarray
    epsilon: float
    coverage_verified: bool = False
    max_gap: float = float("nan")

    @property
    def n_points(self):
        return len(self.coords)

    @property
    def descriptor(self):
        return self.manifold

    def point(self, i):
        return SamplePoint(self.coords[i].copy(), float(self.measures[i]))

    @property
    def points(self):
        return [self.point(i) for i in range(self.n_points)]

    @property
    def has_measures(self):
        return bool(np.all(self.measures > 0))


def make_sampling(manifold, coords, epsilon, measures=None, coverage_verified=False):
    """Wrap explicit vertex coordinates (validated to lie on the manifold)."""
    coords = manifold.check_points(coords)
    if not epsilon > 0:
        raise PreconditionError("epsilon must be positive")
    if measures is None:
        measures = np.zeros(len(coords))
    measures = np.asarray(measures, dtype=np.float64)
    if measures.shape != (len(coords),) or np.any(measures < 0):
        raise PreconditionError("measures must be a nonnegative vector, one entry per vertex")
    return ManifoldSampling(manifold, coords, measures, float(epsilon), coverage_verified)


def geodesic_distance(x, y, d):
    """Geodesic distance between two points of the sphere ``d``."""
    xc = np.asarray(getattr(x, "coords", x), dtype=np.float64)
    yc = np.asarray(getattr(y, "coords", y), dtype=np.float64)
    if xc.shape != (d.ambient_dim,) or yc.shape != (d.ambient_dim,):
        raise PreconditionError(
            f"point dimension mismatch: expected {d.ambient_dim} coordinates, got {xc.shape} and {yc.shape}"
        )
    pair = d.check_points(np.vstack([xc, yc]))
    return float(d.pairwise_distances(pair)[0, 1])


def laplace_beltrami_eigenvalue(i, d, scale_by_radius=False):
    """Eigenvalue ``(i-1)(i+n-2)`` of the Laplace-Beltrami operator on ``S^n``.

    This is the ``i``-th *distinct* eigenvalue of the unit sphere. The value is
    returned without any radius dependence unless ``scale_by_radius`` is set,
    in which case it is divided by ``R**2`` (the true spectrum of ``S^n(R)``).
    Any ``i >= 1`` is accepted.
    """
    if not isinstance(d, Sphere):
        raise PreconditionError(f"closed-form spectrum unavailable for family {d.family!r}")
    if int(i) != i or i < 1:
        raise PreconditionError(f"eigenvalue index must be an integer >= 1, got {i}")
    lam = float((i - 1) * (i + d.dim - 2))
    return lam / d.radius**2 if scale_by_radius else lam


def sphere_multiplicity(k, n):
    """Multiplicity of the ``k``-th distinct eigenvalue ``k(k+n-1)`` on ``S^n``."""
    top = math.comb(n + k, n)
    low = math.comb(n + k - 2, n) if k >= 2 else 0
    return top - low


def laplace_beltrami_spectrum(count, d, scale_by_radius=False):
    """First ``count`` eigenvalues of ``S^n`` repeated by multiplicity, ascending.

    Graph Laplacian eigenvalues come with multiplicity, so this is the sequence
    they are compared against: ``0, 1, 1, 4, 4, ...`` on the circle.
    """
    out = []
    k = 0
    while len(out) < count:
        lam = laplace_beltrami_eigenvalue(k + 1, d, scale_by_radius)
        out.extend([lam] * sphere_multiplicity(k, d.dim))
        k += 1
    return np.asarray(out[:count])


def required_pool_size(d, epsilon):
    return max(100_000, math.ceil(100.0 / epsilon**d.dim))


def sample_epsilon_net(d, epsilon, seed, probes=100_000, max_pool=5_000_000):
    """Farthest-point epsilon-net over a dense uniform candidate pool.

    Points are added until every candidate lies within ``epsilon - h`` of the
    net, where ``h = (volume / pool)**(1/dim)`` is the pool resolution, so that
    fresh probes are covered as well. Coverage is then re-checked on
    ``probes`` independent points.
    """
    if not 0 < epsilon <= d.diameter:
        raise PreconditionError(f"epsilon must lie in (0, diameter={d.diameter}], got {epsilon}")
    pool_size = required_pool_size(d, epsilon)
    if pool_size > max_pool:
        raise CoverageError(
            f"epsilon={epsilon} needs a candidate pool of {pool_size} points (limit {max_pool})"
        )
    resolution = (d.total_volume / pool_size) ** (1.0 / d.dim)
    target = epsilon - resolution
    if target <= 0:
        raise CoverageError(
            f"candidate pool of {pool_size} points is too coarse to certify epsilon={epsilon}"
        )
    pool = d.sample_uniform(substream(seed, "net-pool"), pool_size)
    chosen = d.farthest_point_net(pool, 0, target, pool_size)
    net = ManifoldSampling(d, pool[chosen], np.zeros(len(chosen)), float(epsilon))
    covered, gap = verify_coverage(net, probes, seed)
    return replace(net, coverage_verified=covered, max_gap=gap)


def covering_radius(sampling, probes=200_000, seed=0):
    """Covering radius of the vertex set: exact on the circle, probe estimate otherwise."""
    d = sampling.manifold
    if isinstance(d, Sphere) and d.dim == 1:
        ang = np.sort(np.arctan2(sampling.coords[:, 1], sampling.coords[:, 0]))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
        return float(d.radius * gaps.max() / 2)
    return verify_coverage(sampling, probes, seed)[1]


def uniform_sampling(d, n_points, seed, probes=200_000):
    """``n_points`` i.i.d. uniform vertices; epsilon is their covering radius."""
    if n_points < 1:
        raise PreconditionError("n_points must be >= 1")
    coords = d.sample_uniform(substream(seed, "uniform-vertices"), int(n_points))
    s = ManifoldSampling(d, coords, np.zeros(n_points), 1.0)
    eps = covering_radius(s, probes, seed)
    exact = isinstance(d, Sphere) and d.dim == 1
    return replace(s, epsilon=eps, coverage_verified=exact, max_gap=eps)


def circle_lattice(n_points, radius=1.0):
    """Equally spaced vertices on ``S^1(radius)`` with exact equal cell measures."""
    d = Sphere(1, radius)
    th = 2 * math.pi * np.arange(n_points) / n_points
    coords = radius * np.column_stack([np.cos(th), np.sin(th)])
    mu = np.full(n_points, d.total_volume / n_points)
    eps = math.pi * radius / n_points
    return ManifoldSampling(d, coords, mu, eps, True, eps)


def _probe_batches(d, total, rng):
    done = 0
    while done < total:
        n = min(_BATCH, total - done)
        yield d.sample_uniform(rng, n)
        done += n


def estimate_voronoi_measures(s, mc_points, seed):
    """Assign ``mu_i = volume * count_i / mc_points`` from uniform Monte Carlo points.

    Each point goes to its geodesically nearest vertex, ties to the lowest
    index. Raises :class:`MeasureError` if some cell receives no sample.
    """
    n = s.n_points
    if mc_points < 10 * n:
        raise PreconditionError(f"mc_points must be >= 10*N = {10 * n}, got {mc_points}")
    d = s.manifold
    counts = np.zeros(n, dtype=np.int64)
    for batch in _probe_batches(d, int(mc_points), substream(seed, "voronoi-mc")):
        idx, _ = d.nearest(batch, s.coords)
        counts += np.bincount(idx, minlength=n)
    empty = np.flatnonzero(counts == 0)
    if len(empty):
        raise MeasureError(
            f"{len(empty)} Voronoi cell(s) received no samples; raise mc_points", empty
        )
    return replace(s, measures=d.total_volume * counts / mc_points)


def verify_coverage(s, probes=100_000, seed=0):
    """Statistical cover check: ``(every probe within epsilon, max probe gap)``.

    Passing does not prove coverage; it only means no uncovered probe was hit.
    """
    if probes < 1000:
        raise PreconditionError("probes must be >= 1000")
    d = s.manifold
    gap = 0.0
    for batch in _probe_batches(d, int(probes), substream(seed, "coverage-probes")):
        _, dist = d.nearest(batch, s.coords)
        gap = max(gap, float(dist.max()))
    return gap <= s.epsilon, gap
