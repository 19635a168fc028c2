import math

import numpy as np
import pytest

from sasaki_tube_verify.catalog import list_manifolds, load_manifold
from sasaki_tube_verify.chart_geometry import (
    acs_covariant_derivative,
    check_manifold_invariants,
    christoffel,
    christoffel_from_jet,
    conjugated_structure,
    covariant_derivative,
    curvature,
    integrate_geodesic,
    metric_covariant_derivative,
    orthonormal_frame,
    probe_points,
    sample_box,
    sectional_curvature,
    verify_fermi_chart,
)
from sasaki_tube_verify.exceptions import ArityError, OutsideDomain, SingularMetric
from sasaki_tube_verify.scalar_expr import ExprProgram


def test_sphere_christoffel_symbols(sphere):
    gamma = christoffel(sphere, (0.3, 0.2))
    assert gamma[1, 0, 0] == pytest.approx(math.cos(0.2) * math.sin(0.2), abs=1e-12)
    assert gamma[0, 0, 1] == pytest.approx(-math.tan(0.2), abs=1e-12)
    assert gamma[0, 1, 0] == pytest.approx(-math.tan(0.2), abs=1e-12)


def test_halfplane_christoffel_symbols(halfplane):
    gamma = christoffel(halfplane, (0.0, 2.0))
    assert gamma[0, 0, 1] == pytest.approx(-0.5)
    assert gamma[1, 0, 0] == pytest.approx(0.5)
    assert gamma[1, 1, 1] == pytest.approx(-0.5)


def test_flat_christoffels_vanish(euclidean2):
    assert np.all(christoffel(euclidean2, (0.5, -1.0)) == 0.0)


@pytest.mark.parametrize("name", ["sphere_fermi", "halfplane", "line1_curved", "conformal_r6"])
def test_symbolic_christoffels_match_jet(name):
    m = load_manifold(name)
    program = ExprProgram(e for plane in m.christoffel_grid for row in plane for e in row)
    for x in probe_points(m, 10):
        exact = program.run(x).reshape(m.dim, m.dim, m.dim)
        np.testing.assert_allclose(exact, christoffel(m, x), atol=1e-10)


def test_sphere_sectional_curvature_is_one(sphere):
    for x in probe_points(sphere, 10):
        assert sectional_curvature(sphere, x, (1, 0), (0, 1)) == pytest.approx(1.0, abs=1e-8)


def test_halfplane_sectional_curvature_is_minus_one(halfplane):
    for x in probe_points(halfplane, 10):
        assert sectional_curvature(halfplane, x, (1, 0), (0, 1)) == pytest.approx(-1.0, abs=1e-8)


def test_curvature_symmetries(sphere):
    r = curvature(sphere, (0.3, 0.4))
    np.testing.assert_allclose(r, -r.transpose(0, 1, 3, 2), atol=1e-12)
    bianchi = r + r.transpose(0, 2, 3, 1) + r.transpose(0, 3, 1, 2)
    assert np.max(np.abs(bianchi)) <= 1e-9


def test_constant_metric_is_flat(euclidean4):
    assert np.all(curvature(euclidean4, (0.1, 0.2, 0.3, 0.4)) == 0.0)


@pytest.mark.parametrize("entry", list_manifolds(), ids=lambda e: e.name)
def test_metric_is_parallel(entry):
    m = load_manifold(entry.name)
    for x in probe_points(m, 5):
        assert np.max(np.abs(metric_covariant_derivative(m, x))) <= 1e-9


def test_constant_structure_is_parallel_on_the_plane(euclidean2):
    assert np.all(covariant_derivative(euclidean2, euclidean2.acs, (0.2, 0.3)) == 0.0)


def test_conformal_structure_is_not_parallel(conformal_r6):
    p = np.zeros(6)
    nabla = acs_covariant_derivative(conformal_r6, p)
    assert np.max(np.abs(nabla)) > 0.1
    np.testing.assert_allclose(nabla, covariant_derivative(conformal_r6, conformal_r6.acs, p))


def test_straight_line_geodesic(euclidean2):
    path = integrate_geodesic(euclidean2, (0, 0), (1, 0), 1.0)
    np.testing.assert_allclose(path.endpoint, (1.0, 0.0), atol=1e-12)
    assert not path.truncated


def test_equator_is_a_geodesic(sphere):
    path = integrate_geodesic(sphere, (0, 0), (1, 0), math.pi / 2)
    np.testing.assert_allclose(path.endpoint, (math.pi / 2, 0.0), atol=1e-9)


def test_halfplane_vertical_geodesic_is_exponential(halfplane):
    path = integrate_geodesic(halfplane, (0, 1), (0, 1), 1.0)
    np.testing.assert_allclose(path.endpoint, (0.0, math.e), atol=1e-6)
    assert path.speed_drift(halfplane) <= 1e-6


def test_geodesic_integrator_is_fourth_order(sphere):
    p, v = (0.1, 0.3), (0.8, 0.4)
    reference = integrate_geodesic(sphere, p, v, 1.0, steps=1024).endpoint
    coarse = np.max(np.abs(integrate_geodesic(sphere, p, v, 1.0, steps=16).endpoint - reference))
    fine = np.max(np.abs(integrate_geodesic(sphere, p, v, 1.0, steps=32).endpoint - reference))
    assert coarse / fine >= 8.0


def test_geodesic_leaving_the_box_is_truncated(euclidean2):
    path = integrate_geodesic(euclidean2, (1.5, 0), (1, 0), 2.0)
    assert path.truncated
    assert path.endpoint[0] < 2.0


def test_geodesic_argument_checks(euclidean2):
    with pytest.raises(ArityError):
        integrate_geodesic(euclidean2, (0, 0), (1, 0), 1.0, steps=8)
    with pytest.raises(OutsideDomain):
        integrate_geodesic(euclidean2, (5, 0), (1, 0), 1.0)


def test_sphere_orthonormal_frame(sphere):
    framed = orthonormal_frame(sphere, (0.3, 0.2))
    np.testing.assert_allclose(framed.frame, np.diag([1 / math.cos(0.2), 1.0]), atol=1e-14)
    assert framed.gram_residual(sphere.metric_at((0.3, 0.2))) <= 1e-12


def test_singular_metric_is_rejected():
    with pytest.raises(SingularMetric):
        christoffel_from_jet(np.diag([1.0, -1.0]), np.zeros((2, 2, 2)))


def test_points_outside_the_box_are_rejected(sphere):
    with pytest.raises(OutsideDomain):
        sphere.metric_at((0.0, 1.5))
    with pytest.raises(ArityError):
        sphere.metric_at((0.0, 0.1, 0.2))


def test_sample_box_is_seeded_and_inside():
    domain = ((-1.0, 1.0), (0.0, 2.0))
    first = sample_box(domain, 16, seed=3)
    np.testing.assert_array_equal(first, sample_box(domain, 16, seed=3))
    assert np.all(first[:, 0] >= -0.9) and np.all(first[:, 0] <= 0.9)
    assert np.all(first[:, 1] >= 0.1) and np.all(first[:, 1] <= 1.9)


@pytest.mark.parametrize("entry", list_manifolds(), ids=lambda e: e.name)
def test_catalog_satisfies_invariants(entry):
    assert check_manifold_invariants(load_manifold(entry.name, validate=False)) == []


def test_conjugated_structure_stays_hermitian(euclidean4):
    rotated = conjugated_structure(euclidean4, [(0, 1), (1, 2)], [[0.3, 0, 0, 0.2], [0, 0.5, 0, 0]])
    assert rotated.tube is None
    assert check_manifold_invariants(rotated) == []
    assert np.max(np.abs(acs_covariant_derivative(rotated, (0.1, 0.2, 0.3, 0.4)))) > 1e-3


def test_fermi_chart_of_the_equator(sphere, equator_tube):
    report = verify_fermi_chart(sphere, equator_tube, samples=4)
    assert report.passed
    assert report.max_deviation <= 1e-6


def test_halfplane_chart_is_not_adapted(halfplane):
    from sasaki_tube_verify.tube_deformation import AdaptedTube

    report = verify_fermi_chart(halfplane, AdaptedTube.from_manifold(halfplane), samples=2)
    assert not report.passed
    assert report.max_deviation >= 0.1
    assert report.failures
