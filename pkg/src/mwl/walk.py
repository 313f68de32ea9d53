"""Stationary random walks carrying Hermitian-tensor observables.

A walk starts from the stationary law ``pi_i = d_i / sum_j d_j`` and moves by
inverse-CDF sampling over the cumulative rows of ``P``. Trial ``t`` of a run
with master seed ``seed`` draws its uniforms from the spawn child ``t`` of
``SeedSequence(seed)``, so trials can be batched or threaded freely and the
result is identical to a sequential run.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import DisconnectedGraphError, PreconditionError
from .rng import indexed_stream
from .tensor import (
    HermitianTensor,
    apply_polynomial,
    as_shape,
    identity,
    ky_fan_norm,
    random_hermitian,
    refold,
)

WILSON_Z = 1.959963984540054
OBSERVABLE_KINDS = ("random", "constant", "signed")
_TRIAL_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class ObservableMap:
    """One Hermitian tensor per vertex, all with spectral norm at most ``bound_r``."""

    assignments: tuple
    bound_r: float
    shape: object

    def __post_init__(self):
        shape = as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        mats = []
        for g in self.assignments:
            if not isinstance(g, HermitianTensor):
                raise PreconditionError("every assignment must be a HermitianTensor")
            if g.shape != shape:
                raise PreconditionError(f"assignment shape {g.shape} differs from {shape}")
            mats.append(g.unfold())
        stack = np.array(mats)
        norms = np.max(np.abs(np.linalg.eigvalsh(stack)), axis=1)
        if np.any(norms > self.bound_r * (1 + 1e-12)):
            raise PreconditionError(
                f"observable norm {norms.max():.6g} exceeds the declared bound r={self.bound_r}"
            )
        object.__setattr__(self, "matrices", stack)

    def __len__(self):
        return len(self.assignments)


def make_observables(kind, n_vertices, shape, r, seed=0, center_weights=None):
    """Vertex observables of one of the built-in kinds.

    ``random``: independent :func:`random_hermitian` draws (vertex ``i`` uses
    spawn child ``i`` of ``seed``); ``constant``: ``r * I`` everywhere;
    ``signed``: ``+r * I`` on even vertices and ``-r * I`` on odd ones.
    With ``center_weights`` (a probability vector) the weighted mean is
    subtracted and the bound is widened to the largest resulting norm.
    """
    shape = as_shape(shape)
    if kind == "random":
        gs = [random_hermitian(shape, r, indexed_stream(seed, i)) for i in range(n_vertices)]
    elif kind == "constant":
        eye = identity(shape)
        gs = [refold(r * eye.unfold(), shape)] * n_vertices
    elif kind == "signed":
        eye = identity(shape).unfold()
        gs = [refold((r if i % 2 == 0 else -r) * eye, shape) for i in range(n_vertices)]
    else:
        raise PreconditionError(f"unknown observable kind {kind!r}; expected one of {OBSERVABLE_KINDS}")
    bound = r
    if center_weights is not None:
        w = np.asarray(center_weights, dtype=np.float64)
        mean = np.einsum("i,ijk->jk", w, np.array([g.unfold() for g in gs]))
        gs = [refold(g.unfold() - mean, shape) for g in gs]
        bound = max(r, max(float(np.max(np.abs(np.linalg.eigvalsh(g.unfold())))) for g in gs))
    return ObservableMap(tuple(gs), float(bound), shape)


def _check_connected(m):
    ncomp, labels = connected_components(m.weights > 0, directed=False)
    if ncomp > 1:
        raise DisconnectedGraphError("random walk needs a connected graph",
                                     sorted(np.bincount(labels).tolist(), reverse=True))


def stationary_distribution(m):
    _check_connected(m)
    return m.degrees / m.degrees.sum()


class WalkSampler:
    """Precomputed cumulative rows for inverse-CDF stepping on ``P``."""

    def __init__(self, m):
        _check_connected(m)
        pi = m.degrees / m.degrees.sum()
        self.n = len(pi)
        self.cum = np.ascontiguousarray(np.cumsum(m.transition, axis=1))
        self.last_nz = np.ascontiguousarray(
            [int(np.flatnonzero(row > 0)[-1]) for row in m.transition], dtype=np.int64
        )
        self.start_cum = np.ascontiguousarray(np.cumsum(pi))
        self.start_last = int(np.flatnonzero(pi > 0)[-1])

    def uniforms(self, seed, trials, K):
        return np.array([indexed_stream(seed, t).random(K) for t in trials]).reshape(len(trials), K)

    def walks(self, u):
        return kernels.walk_indices(self.cum, self.last_nz, self.start_cum, self.start_last,
                                    np.ascontiguousarray(u))


def sample_walk(m, K, seed, trial=0):
    """Vertex sequence ``v_1..v_K`` of trial ``trial`` under master ``seed``."""
    if int(K) != K or K < 1:
        raise PreconditionError("walk length K must be an integer >= 1")
    sampler = WalkSampler(m)
    return sampler.walks(sampler.uniforms(seed, [trial], int(K)))[0]


def walk_statistic(walk, obs, p, k):
    """``||f(sum_t g(v_t))||_(k)`` for a single walk."""
    total = np.zeros_like(obs.matrices[0])
    for v in walk:
        total = total + obs.matrices[v]
    return ky_fan_norm(apply_polynomial(HermitianTensor(total.reshape(obs.shape.full), obs.shape), p), k)


def walk_sums(walks, obs):
    """Per-walk sums ``sum_t g(v_t)``, accumulated in step order."""
    total = np.zeros((walks.shape[0],) + obs.matrices.shape[1:], dtype=obs.matrices.dtype)
    for step in range(walks.shape[1]):
        total = total + obs.matrices[walks[:, step]]
    return total


def batch_statistics(walks, obs, p, k):
    """:func:`walk_statistic` for many walks at once.

    ``f(S)`` shares eigenvectors with ``S``, so its singular values are
    ``|f(lambda_j)|`` and the Ky Fan norm is the sum of the ``k`` largest.
    """
    vals = np.linalg.eigvalsh(walk_sums(walks, obs))
    mags = np.sort(np.abs(p(vals)), axis=1)[:, ::-1]
    return mags[:, :k].sum(axis=1)


def assumption3_margin(walks, obs, p, ts=(0.1, 0.5, 1.0)):
    """Smallest eigenvalue of ``f(exp(tS)) - exp(t f(S))`` over walks and ``t``.

    Both operators are spectral functions of the Hermitian sum ``S``, so the
    difference is diagonal in the eigenbasis of ``S`` and its eigenvalues are
    ``f(exp(t lam)) - exp(t f(lam))``.
    """
    vals = np.linalg.eigvalsh(walk_sums(walks, obs))
    worst = math.inf
    with np.errstate(over="ignore"):
        for t in ts:
            diff = p(np.exp(t * vals)) - np.exp(t * p(vals))
            worst = min(worst, float(np.min(diff)))
    return worst


@dataclass(frozen=True, eq=False)
class TailEstimate:
    thresholds: np.ndarray
    probabilities: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    trials: int
    walk_length: int
    ky_fan_k: int
    counts: np.ndarray
    statistics: np.ndarray | None = None
    assumption3_margin: float = float("nan")

    @property
    def assumption3_ok(self):
        return self.assumption3_margin >= -1e-8

    def csv_rows(self):
        for i, th in enumerate(self.thresholds):
            yield (th, self.probabilities[i], self.ci_low[i], self.ci_high[i],
                   self.trials, self.walk_length, self.ky_fan_k)


def wilson_interval(successes, n, z=WILSON_Z):
    successes = np.asarray(successes, dtype=np.float64)
    phat = successes / n
    denom = 1 + z**2 / n
    centre = (phat + z**2 / (2 * n)) / denom
    half = z * np.sqrt(phat * (1 - phat) / n + z**2 / (4 * n**2)) / denom
    # Clamp rounding so the interval always contains the point estimate.
    return np.minimum(np.maximum(centre - half, 0.0), phat), np.maximum(np.minimum(centre + half, 1.0), phat)


def default_thresholds(K, r, p, n=50, stretch=1.0):
    """``n`` points spanning ``[0, stretch * K * r * f(1)]``."""
    return np.linspace(0.0, stretch * K * r * p.scale, n)


def resolve_workers(workers=None):
    if workers is None:
        workers = int(os.environ.get("MWL_THREADS", "1") or 1)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def estimate_tail(m, obs, p, K, trials, thresholds, k, seed, workers=None,
                  keep_statistics=False, spot_check_walks=64):
    """Monte Carlo exceedance frequencies of the walk statistic.

    Probabilities are ``count(stat >= theta) / trials`` with 95% Wilson
    intervals. ``workers`` (default from ``MWL_THREADS``, 0 = all cores)
    spreads trial chunks over threads without changing any result.
    """
    if trials < 100:
        raise PreconditionError("trials must be >= 100")
    if int(K) != K or K < 1:
        raise PreconditionError("walk length K must be an integer >= 1")
    n_shape = obs.shape.total
    if int(k) != k or not 1 <= k <= n_shape:
        raise PreconditionError(f"k must be an integer in [1, {n_shape}]")
    if len(obs) != m.n_vertices:
        raise PreconditionError("one observable per vertex is required")
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if np.any(np.diff(thresholds) < 0):
        raise PreconditionError("thresholds must be ascending")
    sampler = WalkSampler(m)
    K, k = int(K), int(k)
    chunks = [range(lo, min(lo + _TRIAL_CHUNK, trials)) for lo in range(0, trials, _TRIAL_CHUNK)]

    def run(chunk):
        walks = sampler.walks(sampler.uniforms(seed, chunk, K))
        return walks, batch_statistics(walks, obs, p, k)

    n_workers = resolve_workers(workers)
    if n_workers == 1 or len(chunks) == 1:
        results = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, chunks))
    stats = np.concatenate([r[1] for r in results])
    counts = (stats[:, None] >= thresholds[None, :]).sum(axis=0)
    lo, hi = wilson_interval(counts, trials)
    margin = assumption3_margin(results[0][0][:spot_check_walks], obs, p)
    return TailEstimate(thresholds, counts / trials, lo, hi, int(trials), K, k, counts,
                        stats if keep_statistics else None, margin)
