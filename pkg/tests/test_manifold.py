import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mwl.errors import CoverageError, MeasureError, PreconditionError
from mwl.manifold import (
    Sphere,
    circle_lattice,
    covering_radius,
    estimate_voronoi_measures,
    geodesic_distance,
    laplace_beltrami_eigenvalue,
    laplace_beltrami_spectrum,
    make_sampling,
    sample_epsilon_net,
    sphere_multiplicity,
    uniform_sampling,
    verify_coverage,
)
from mwl.rng import substream


def test_sphere_constants():
    s1, s2 = Sphere(1), Sphere(2, 2.0)
    assert s1.diameter == math.pi and s1.injectivity_radius == math.pi
    assert s1.total_volume == pytest.approx(2 * math.pi, rel=1e-15)
    assert s2.total_volume == pytest.approx(16 * math.pi, rel=1e-15)
    assert s2.curvature_bound == 0.25
    assert Sphere(3).total_volume == pytest.approx(2 * math.pi**2, rel=1e-14)


def test_sphere_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        Sphere(0)
    with pytest.raises(PreconditionError):
        Sphere(2, -1.0)


@pytest.mark.parametrize("i,d,expected", [(1, 1, 0), (2, 1, 1), (3, 1, 4), (2, 2, 2), (3, 2, 6), (2, 3, 3)])
def test_laplace_beltrami_closed_form(i, d, expected):
    assert laplace_beltrami_eigenvalue(i, Sphere(d)) == expected


def test_laplace_beltrami_radius_switch():
    d = Sphere(2, 2.0)
    assert laplace_beltrami_eigenvalue(3, d) == 6
    assert laplace_beltrami_eigenvalue(3, d, scale_by_radius=True) == pytest.approx(1.5)


def test_spectrum_with_multiplicities():
    np.testing.assert_array_equal(laplace_beltrami_spectrum(7, Sphere(1)), [0, 1, 1, 4, 4, 9, 9])
    np.testing.assert_array_equal(laplace_beltrami_spectrum(9, Sphere(2)), [0, 2, 2, 2, 6, 6, 6, 6, 6])
    assert [sphere_multiplicity(k, 2) for k in range(4)] == [1, 3, 5, 7]
    assert [sphere_multiplicity(k, 1) for k in range(4)] == [1, 2, 2, 2]


def test_geodesic_distance_oracles():
    d = Sphere(2, 3.0)
    x = np.array([3.0, 0, 0])
    assert geodesic_distance(x, -x, d) == pytest.approx(3 * math.pi, rel=1e-15)
    assert geodesic_distance(x, np.array([0, 3.0, 0]), d) == pytest.approx(1.5 * math.pi, rel=1e-15)
    assert geodesic_distance(x, x, d) == 0.0
    # atan2 form keeps relative accuracy for nearly coincident points
    a = 1e-9
    y = 3.0 * np.array([math.cos(a), math.sin(a), 0.0])
    assert geodesic_distance(x, y, d) == pytest.approx(3e-9, rel=1e-6)


unit = st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


@given(st.lists(unit, min_size=3, max_size=3))
def test_distance_is_a_metric(vs):
    d = Sphere(2)
    pts = np.array([np.array(v) / np.linalg.norm(v) for v in vs])
    dist = d.pairwise_distances(pts)
    assert np.array_equal(dist, dist.T)
    assert np.all(dist >= 0) and np.all(dist <= math.pi + 1e-12)
    assert dist[0, 2] <= dist[0, 1] + dist[1, 2] + 1e-12


def test_check_points_rejects_off_manifold():
    with pytest.raises(PreconditionError):
        make_sampling(Sphere(1), [[1.0, 0.0], [0.5, 0.0]], 0.1)
    with pytest.raises(PreconditionError):
        make_sampling(Sphere(1), [[1.0, 0.0, 0.0]], 0.1)


def test_uniform_samples_lie_on_sphere():
    d = Sphere(2, 1.5)
    pts = d.sample_uniform(substream(0, "t"), 1000)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.5, rtol=1e-12)
    # crude isotropy: mean near the origin
    assert np.linalg.norm(pts.mean(axis=0)) < 0.15


def test_epsilon_net_covers_and_is_deterministic():
    d = Sphere(2)
    a = sample_epsilon_net(d, 0.4, seed=3)
    b = sample_epsilon_net(d, 0.4, seed=3)
    assert a.coverage_verified and a.max_gap <= 0.4
    np.testing.assert_array_equal(a.coords, b.coords)
    ok, gap = verify_coverage(a, probes=50_000, seed=99)
    assert ok and gap <= 0.4
    # separation: farthest-point nets are packings as well
    dist = d.pairwise_distances(a.coords) + np.eye(a.n_points) * 10
    assert dist.min() > 0.4 / 2


def test_epsilon_net_errors():
    with pytest.raises(PreconditionError):
        sample_epsilon_net(Sphere(1), 4.0, 0)
    with pytest.raises(CoverageError):
        sample_epsilon_net(Sphere(2), 0.001, 0)


def test_epsilon_equal_to_diameter_gives_single_vertex():
    s = sample_epsilon_net(Sphere(1), math.pi, 0)
    assert s.n_points == 1 and s.coverage_verified


def test_voronoi_measures_sum_to_volume():
    d = Sphere(2)
    s = estimate_voronoi_measures(sample_epsilon_net(d, 0.5, 1), 100_000, 2)
    assert s.measures.sum() == pytest.approx(d.total_volume, rel=1e-12)
    assert np.all(s.measures > 0)


def test_voronoi_measures_match_lattice_cells():
    lat = circle_lattice(8)
    s = estimate_voronoi_measures(make_sampling(Sphere(1), lat.coords, lat.epsilon), 400_000, 5)
    np.testing.assert_allclose(s.measures, 2 * math.pi / 8, rtol=0.03)


def test_empty_voronoi_cell_is_reported():
    coords = [[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]
    s = make_sampling(Sphere(1), coords, 1.0)
    with pytest.raises(MeasureError) as err:
        estimate_voronoi_measures(s, 1000, 0)
    assert err.value.empty_vertices == [1]


def test_circle_lattice_and_covering_radius():
    s = circle_lattice(12, radius=2.0)
    assert s.measures.sum() == pytest.approx(4 * math.pi)
    assert covering_radius(s) == pytest.approx(2.0 * math.pi / 12, rel=1e-12)
    u = uniform_sampling(Sphere(1), 50, seed=1)
    assert u.coverage_verified
    ang = np.sort(np.arctan2(u.coords[:, 1], u.coords[:, 0]))
    gaps = np.diff(np.r_[ang, ang[0] + 2 * math.pi])
    assert u.epsilon == pytest.approx(gaps.max() / 2, rel=1e-12)
