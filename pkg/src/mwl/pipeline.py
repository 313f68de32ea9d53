"""Pipeline stages shared by the command-line tools.

Each stage is a plain function of the config (and earlier stage outputs);
:func:`run_experiment` chains them and records wall-clock timings, which are
the only nondeterministic numbers it produces.
"""
from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .chernoff import GapSource, bound_for_gap, corollary_bounds
from .errors import CoverageError, MWLError, PreconditionError
from .graph import assemble_matrices, build_graph
from .manifold import (
    circle_lattice,
    estimate_voronoi_measures,
    laplace_beltrami_eigenvalue,
    laplace_beltrami_spectrum,
    sample_epsilon_net,
    uniform_sampling,
)
from .spectral import (
    ALGEBRAIC,
    ABSOLUTE,
    EnvelopeParams,
    fit_envelope_constant,
    measure_laplacian_spectrum,
    summarize,
)
from .walk import default_thresholds, estimate_tail, make_observables

FIT_EIGENVALUES = 5


@contextmanager
def stage(name, timings=None):
    """Time a block and tag any library error raised inside it with ``name``."""
    t0 = time.perf_counter()
    try:
        yield
    except MWLError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise
    finally:
        if timings is not None:
            timings[name] = time.perf_counter() - t0


def make_sampling(cfg):
    """Vertices and Voronoi measures as configured."""
    s = cfg.sampling
    d = cfg.sphere
    if s.method == "lattice":
        return circle_lattice(s.n_points, d.radius)
    if s.method == "uniform":
        net = uniform_sampling(d, s.n_points, s.seed, s.probes)
    else:
        net = sample_epsilon_net(d, s.epsilon, s.seed, s.probes)
        if not net.coverage_verified:
            raise CoverageError(
                f"epsilon-net failed the coverage check (max probe gap {net.max_gap:.6g} > {s.epsilon})"
            )
    mc = max(s.mc_points, 10 * net.n_points)
    return estimate_voronoi_measures(net, mc, s.seed)


def graph_kappa(cfg, sampling):
    return cfg.graph.kappa if cfg.graph.kappa is not None else cfg.graph.kappa_factor * sampling.epsilon


def make_graph(cfg, sampling=None):
    sampling = make_sampling(cfg) if sampling is None else sampling
    return build_graph(sampling, graph_kappa(cfg, sampling), cfg.graph.include_self_weight)


def thresholds(cfg):
    th = cfg.bound.theta
    if th.values is not None:
        return np.asarray(th.values, dtype=np.float64)
    return default_thresholds(cfg.walk.K, cfg.walk.r, cfg.poly, th.n, th.stretch)


def run_walk(cfg, m, thetas=None, workers=None, keep_statistics=False):
    w = cfg.walk
    pi = m.degrees / m.degrees.sum()
    obs = make_observables(w.observable, m.n_vertices, cfg.shape, w.r, w.seed,
                           pi if w.center else None)
    th = thresholds(cfg) if thetas is None else thetas
    return estimate_tail(m, obs, cfg.poly, w.K, w.trials, th, cfg.bound.ky_fan_k, w.seed,
                         workers, keep_statistics)


def envelope_params(cfg, g):
    eps = g.epsilon
    if not (eps is not None and math.isfinite(eps) and eps > 0):
        raise PreconditionError("the graph carries no sampling epsilon; envelope bounds need it")
    return EnvelopeParams(cfg.bound.envelope_C_const, eps, g.kappa, g.manifold.curvature_bound)


def envelope_degree(m, index=1):
    """Measure-normalized degree ``d_i / mu_i`` of vertex ``index``.

    The envelopes live on the scale of the measure-normalized Laplacian, so
    ``Phi(lambda_M) / (d_i / mu_i)`` is the analogue of ``lambda_L / d_i``.
    """
    return float(m.degrees[index] / m.measures[index])


def gap_sources(cfg, g, m, summary):
    """Every gap the bound table is evaluated at, with provenance.

    Returns ``(sources, extras)`` where ``extras`` records the envelope inputs.
    """
    conv = cfg.bound.gap_convention
    other = ALGEBRAIC if conv == ABSOLUTE else ABSOLUTE
    sources = []
    for c in (conv, other):
        lam2 = float(summary.with_convention(c).second_largest)
        sources.append(GapSource("exact_spectrum", 1.0 - lam2, {"convention": c, "second_eigenvalue": lam2}))
    lam = float(summary.laplacian_eigs[1])
    deg = float(summary.degrees[1])
    sources.append(GapSource("eq7_formula", lam / deg, {"lambda_L": lam, "degree": deg, "index": 1}))
    extras = {}
    if summary.measure_laplacian_eigs is not None and g.epsilon is not None and math.isfinite(g.epsilon):
        env = envelope_params(cfg, g)
        lam_m = laplace_beltrami_eigenvalue(2, g.manifold, cfg.manifold.scale_by_radius)
        deg_n = envelope_degree(m)
        extras = {"lambda_M": lam_m, "degree_sum": deg_n, "C_const": env.C_const,
                  "epsilon": env.epsilon, "kappa": env.kappa, "curvature_bound": env.curvature_bound,
                  "measured_lambda": float(summary.measure_laplacian_eigs[1])}
        extras["env"] = env
    return sources, extras


def bound_rows(cfg, g, m, summary, thetas):
    """Bound reports for each positive threshold and each gap source."""
    sources, extras = gap_sources(cfg, g, m, summary)
    b = cfg.bound
    reports = []
    flags = {"lower_clamped": False, "monotone": True}
    for theta in thetas:
        if theta <= 0:
            continue
        p = cfg.bound_params(float(theta))
        for src in sources:
            reports.append(bound_for_gap(p, src, b.t_max, b.tol))
        if extras:
            cb = corollary_bounds(p, extras["lambda_M"], extras["env"], extras["degree_sum"],
                                  b.t_max, b.tol)
            flags["lower_clamped"] |= cb.lower_clamped
            flags["monotone"] &= bool(cb.monotonicity)
            reports.extend([cb.lower, cb.upper])
    extras = {k: v for k, v in extras.items() if k != "env"}
    return reports, extras, flags


@dataclass
class ExperimentResult:
    config: object
    graph: object
    matrices: object
    summary: object
    tail: object
    bounds: list
    envelope: dict
    flags: dict
    timings: dict = field(default_factory=dict)


def run_experiment(cfg, workers=None):
    timings = {}
    with stage("sampling", timings):
        sampling = make_sampling(cfg)
    with stage("graph", timings):
        g = make_graph(cfg, sampling)
        m = assemble_matrices(g)
    with stage("spectrum", timings):
        summary = summarize(m, cfg.bound.gap_convention)
    with stage("walk", timings):
        th = thresholds(cfg)
        tail = run_walk(cfg, m, th, workers)
    with stage("bound", timings):
        bounds, env, flags = bound_rows(cfg, g, m, summary, th)
    return ExperimentResult(cfg, g, m, summary, tail, bounds, env, flags, timings)


def fit_envelope_from_graphs(graphs, count=FIT_EIGENVALUES, scale_by_radius=False):
    """Least-squares envelope constant over several refinements of one manifold.

    Uses the first ``count`` eigenvalues of the measure-normalized Laplacian
    against the sphere spectrum with multiplicities.
    """
    if len(graphs) < 1:
        raise PreconditionError("need at least one graph")
    d0 = graphs[0].manifold
    levels = []
    for g in graphs:
        if g.manifold != d0:
            raise PreconditionError(f"mismatched manifolds: {g.manifold} vs {d0}")
        if not (g.epsilon is not None and math.isfinite(g.epsilon)):
            raise PreconditionError("every graph must carry its sampling epsilon")
        eigs = measure_laplacian_spectrum(assemble_matrices(g))[:count]
        lam_m = laplace_beltrami_spectrum(len(eigs), d0, scale_by_radius)
        levels.append((eigs, lam_m, g.epsilon, g.kappa, d0.curvature_bound))
    return fit_envelope_constant(levels), levels

