import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_weights
from mwl.errors import PreconditionError
from mwl.graph import assemble_matrices, build_graph, matrices_from_weights
from mwl.manifold import Sphere, circle_lattice, laplace_beltrami_eigenvalue
from mwl.spectral import (
    ABSOLUTE,
    ALGEBRAIC,
    EnvelopeParams,
    eq7_map,
    eq7_residuals,
    fit_envelope_constant,
    laplacian_spectrum,
    measure_laplacian_spectrum,
    multiplicity_pattern,
    phi_lower,
    phi_upper,
    second_eigenvalue,
    sphere_phi,
    summarize,
    transition_spectrum,
)

ENV = dict(epsilon=0.1, kappa=0.4, curvature_bound=1.0)


def test_two_vertex_spectra():
    m = matrices_from_weights([[0, 1.0], [1.0, 0]])
    np.testing.assert_allclose(laplacian_spectrum(m), [0, 2], atol=1e-15)
    np.testing.assert_allclose(transition_spectrum(m), [1, -1], atol=1e-15)
    s = summarize(m)
    assert s.gap_absolute == pytest.approx(0.0, abs=1e-15)
    assert s.gap_algebraic == pytest.approx(2.0, abs=1e-15)


def test_triangle_gaps(triangle):
    s = summarize(triangle, ALGEBRAIC)
    assert s.second_largest == pytest.approx(-0.5)
    assert s.gap == pytest.approx(1.5)
    assert s.with_convention(ABSOLUTE).gap == pytest.approx(0.5)
    assert s.eq7_max_residual <= 1e-10


def test_residual_check_on_demand(triangle):
    np.testing.assert_allclose(laplacian_spectrum(triangle, check_residual=True), [0, 3, 3], atol=1e-12)


@pytest.mark.parametrize("lam,deg,expected", [(0.0, 5.0, 1.0), (2.0, 1.0, -1.0), (3.0, 2.0, -0.5)])
def test_eq7_map(lam, deg, expected):
    assert eq7_map(lam, deg) == expected


def test_eq7_map_needs_positive_degree():
    with pytest.raises(PreconditionError):
        eq7_map(1.0, 0.0)


def test_eq7_residual_irregular_path(path3):
    res = eq7_residuals(path3)
    assert res.max() > 1e-3
    np.testing.assert_allclose(res, [0.0, 0.5, 1.0], atol=1e-12)


@pytest.mark.parametrize("n", [12, 60, 120])
def test_eq7_exact_on_lattice(n):
    m = assemble_matrices(build_graph(circle_lattice(n), 4 * math.pi / n))
    assert summarize(m).eq7_max_residual <= 1e-10


def test_lattice_spectrum_has_pairs():
    m = assemble_matrices(build_graph(circle_lattice(30), 4 * math.pi / 30))
    lam = laplacian_spectrum(m)
    assert abs(lam[0]) < 1e-10 * lam[-1]
    assert lam[1] > 1e-6 * lam[-1]
    np.testing.assert_allclose(lam[1:29:2], lam[2:30:2], rtol=1e-9)


@given(st.integers(3, 8), st.floats(0.5, 3.0), st.integers(0, 2**32 - 1))
def test_regular_spectrum_consistency(n, w, seed):
    # circulant graphs are regular: L = d (I - P)
    offs = np.random.default_rng(seed).integers(1, n // 2 + 1)
    weights = np.zeros((n, n))
    for i in range(n):
        for o in {1, int(offs)}:
            weights[i, (i + o) % n] = weights[(i + o) % n, i] = w
    m = matrices_from_weights(weights)
    d = m.degrees[0]
    np.testing.assert_allclose(np.sort((1 - transition_spectrum(m)) * d), laplacian_spectrum(m), atol=1e-9)


@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_summary_invariants(n, seed):
    m = matrices_from_weights(random_weights(np.random.default_rng(seed), n))
    s = summarize(m)
    assert abs(s.laplacian_eigs[0]) <= 1e-10 * max(1.0, s.laplacian_eigs[-1])
    assert s.transition_eigs[0] == pytest.approx(1.0, abs=1e-10)
    assert s.gap_absolute >= -1e-12
    assert s.gap_algebraic >= s.gap_absolute - 1e-12


def test_second_eigenvalue_conventions():
    eigs = [1.0, 0.3, -0.8]
    assert second_eigenvalue(eigs, ALGEBRAIC) == 0.3
    assert second_eigenvalue(eigs, ABSOLUTE) == 0.8
    with pytest.raises(PreconditionError):
        second_eigenvalue(eigs, "third")


def test_measure_laplacian_on_lattice_is_scaled_laplacian():
    s = circle_lattice(40)
    m = assemble_matrices(build_graph(s, 4 * math.pi / 40))
    np.testing.assert_allclose(measure_laplacian_spectrum(m), laplacian_spectrum(m) / s.measures[0],
                               rtol=1e-9, atol=1e-9)


def test_envelope_oracles():
    p = EnvelopeParams(1.0, **ENV)
    assert phi_upper(1.0, p) == pytest.approx(1.81, rel=1e-14)
    assert phi_lower(1.0, p) == pytest.approx(0.19, rel=1e-13)
    assert phi_lower(0.0, p) == phi_upper(0.0, p) == 0.0
    q = EnvelopeParams(0.0, **ENV)
    assert phi_lower(2.5, q) == phi_upper(2.5, q) == 2.5


def test_sphere_phi_oracles():
    p = EnvelopeParams(1.0, **ENV)
    assert sphere_phi(1, Sphere(2), p, "lower") == sphere_phi(1, Sphere(2), p, "upper") == 0.0
    assert sphere_phi(2, Sphere(2), EnvelopeParams(0.0, **ENV), "upper") == 2.0
    assert sphere_phi(2, Sphere(2), p, "upper") == pytest.approx(2 + 0.41 * 2 + 0.4 * 2**1.5, rel=1e-14)
    assert sphere_phi(2, Sphere(2), p, "upper") == pytest.approx(3.9514, abs=1e-4)
    with pytest.raises(PreconditionError):
        sphere_phi(2, Sphere(2), p, "middle")


@given(st.integers(1, 6), st.integers(1, 3), st.floats(0, 5), st.floats(0.01, 1), st.floats(0.02, 2))
def test_sphere_phi_composition(i, d, c, eps, kappa):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = EnvelopeParams(c, eps, kappa, 1.0)
    lam = laplace_beltrami_eigenvalue(i, Sphere(d))
    assert sphere_phi(i, Sphere(d), p, "lower") == phi_lower(lam, p)
    assert sphere_phi(i, Sphere(d), p, "upper") == phi_upper(lam, p)
    assert phi_lower(lam, p) <= lam <= phi_upper(lam, p)


def test_envelope_warns_when_epsilon_exceeds_kappa():
    with pytest.warns(UserWarning, match="loose"):
        EnvelopeParams(1.0, 0.5, 0.4, 1.0)


def test_envelope_rejects_bad_values():
    with pytest.raises(PreconditionError):
        EnvelopeParams(-1.0, **ENV)
    with pytest.raises(PreconditionError):
        EnvelopeParams(1.0, 0.0, 0.4, 1.0)
    with pytest.raises(PreconditionError):
        phi_lower(-1.0, EnvelopeParams(1.0, **ENV))


def test_fit_recovers_planted_constant():
    rng = np.random.default_rng(0)
    levels = []
    for eps in (0.08, 0.04, 0.02):
        kappa = 4 * eps
        lm = np.array([0.0, 1, 1, 4, 4])
        p = EnvelopeParams(2.0, eps, kappa, 1.0)
        noise = 1 + 0.02 * rng.standard_normal(5)
        graph = lm + np.array([phi_upper(x, p) - x for x in lm]) * noise
        levels.append((graph, lm, eps, kappa, 1.0))
    fit = fit_envelope_constant(levels)
    assert not fit.degenerate
    assert fit.C_const == pytest.approx(2.0, rel=0.05)


def test_fit_degenerate_on_identical_levels():
    lv = (np.array([0.0, 0.9, 1.1]), np.array([0.0, 1, 1]), 0.1, 0.4, 1.0)
    with pytest.warns(UserWarning, match="degenerate"):
        fit = fit_envelope_constant([lv, lv])
    assert fit.degenerate


def test_fit_is_nonnegative():
    lm = np.array([0.0, 1, 1])
    lv = [(lm, lm, 0.1, 0.4, 1.0), (lm, lm, 0.05, 0.2, 1.0)]
    assert fit_envelope_constant(lv).C_const == 0.0


def test_multiplicity_pattern():
    ok, splits = multiplicity_pattern([0.0, 1.0, 1.02, 4.0, 4.1, 9.0, 9.2, 16.0])
    assert ok and len(splits) == 3
    ok, _ = multiplicity_pattern([0.0, 1.0, 1.5, 4.0, 4.1, 9.0, 9.2, 16.0])
    assert not ok
