import math

import numpy as np
import pytest

from sasaki_tube_verify.chart_geometry import check_manifold_invariants, probe_points
from sasaki_tube_verify.exceptions import ArityError, MissingBaseACS
from sasaki_tube_verify.scalar_expr import parse_expr
from sasaki_tube_verify.tangent_bundle import (
    LiftKind,
    build_bundle_acs,
    build_sasaki,
    bundle_with_acs,
    check_bracket_identities,
    connection_map,
    coordinate_field,
    lift,
    lift_frame,
    pi_star,
    sasaki_reconstruction_residual,
)
from sasaki_tube_verify.tube_deformation import quaternion_residual

BUNDLE_POINT = (0.3, 0.2, 0.4, -0.3)


def test_sasaki_metric_on_the_null_section(sphere_bundle):
    c2 = math.cos(0.2) ** 2
    g_hat = sphere_bundle.chart.metric_at((0.3, 0.2, 0.0, 0.0))
    np.testing.assert_allclose(g_hat, np.diag([c2, 1.0, c2, 1.0]), atol=1e-15)


def test_flat_base_gives_product_metric(euclidean2):
    b = build_sasaki(euclidean2)
    assert b.chart.dim == 4
    assert b.chart.coordinates == ("x1", "x2", "v1", "v2")
    np.testing.assert_array_equal(b.chart.metric_at((0.1, 0.2, 0.3, 0.4)), np.eye(4))


def test_horizontal_lift_on_the_sphere(sphere_bundle):
    u = (0.0, 0.2, 1.0, 0.0)
    expected = (1.0, 0.0, 0.0, -math.cos(0.2) * math.sin(0.2))
    np.testing.assert_allclose(lift(sphere_bundle, u, (1, 0), LiftKind.HORIZONTAL), expected)
    np.testing.assert_allclose(lift(sphere_bundle, u, (1, 0), "vertical"), (0, 0, 1, 0))


def test_connection_map_splits_lifts(sphere_bundle):
    x_vec = np.array([0.7, -0.2])
    horizontal = lift(sphere_bundle, BUNDLE_POINT, x_vec, LiftKind.HORIZONTAL)
    vertical = lift(sphere_bundle, BUNDLE_POINT, x_vec, LiftKind.VERTICAL)
    assert np.max(np.abs(connection_map(sphere_bundle, BUNDLE_POINT, horizontal))) <= 1e-15
    np.testing.assert_allclose(connection_map(sphere_bundle, BUNDLE_POINT, vertical), x_vec)
    np.testing.assert_allclose(pi_star(sphere_bundle, horizontal), x_vec)
    assert np.all(pi_star(sphere_bundle, vertical) == 0.0)


def test_metric_reconstruction(sphere_bundle, halfplane_bundle):
    rng = np.random.default_rng(7)
    for b, u in ((sphere_bundle, BUNDLE_POINT), (halfplane_bundle, (0.1, 1.3, 0.5, 0.2))):
        for _ in range(5):
            w1, w2 = rng.standard_normal(4), rng.standard_normal(4)
            assert sasaki_reconstruction_residual(b, u, w1, w2) <= 1e-12


def test_lift_frame_is_orthonormal(sphere_bundle, halfplane_bundle):
    for b, u in ((sphere_bundle, BUNDLE_POINT), (halfplane_bundle, (0.1, 1.3, 0.5, 0.2))):
        frame = lift_frame(b, u)
        assert frame.matrix().shape == (4, 4)
        assert frame.gram_residual(b.chart.metric_at(u)) <= 1e-12


def test_split_checks_arity(sphere_bundle):
    with pytest.raises(ArityError):
        sphere_bundle.split((0.0, 0.1, 0.2))


@pytest.mark.parametrize("which", ["J1", "J2", "J3"])
def test_bundle_structures_are_hermitian(sphere_bundle, which):
    chart = bundle_with_acs(sphere_bundle, which)
    assert chart.acs is not None
    assert check_manifold_invariants(chart, probe_points(chart, 8)) == []


def test_structures_satisfy_quaternion_relations(sphere_bundle, halfplane_bundle):
    for b in (sphere_bundle, halfplane_bundle):
        charts = [bundle_with_acs(b, which) for which in ("J1", "J2", "J3")]
        for u in probe_points(b.chart, 6):
            j1, j2, j3 = (c.acs_at(u) for c in charts)
            assert quaternion_residual(j1, j2, j3, b.chart.metric_at(u)) <= 1e-10


def test_j1_swaps_lifts(sphere_bundle):
    j1 = bundle_with_acs(sphere_bundle, "J1").acs_at(BUNDLE_POINT)
    x_vec = (0.4, 0.9)
    horizontal = lift(sphere_bundle, BUNDLE_POINT, x_vec, LiftKind.HORIZONTAL)
    vertical = lift(sphere_bundle, BUNDLE_POINT, x_vec, LiftKind.VERTICAL)
    np.testing.assert_allclose(j1 @ horizontal, vertical, atol=1e-14)
    np.testing.assert_allclose(j1 @ vertical, -horizontal, atol=1e-14)


def test_j2_needs_a_base_structure(line_curved):
    b = build_sasaki(line_curved)
    structures = build_bundle_acs(b)
    assert structures.j2 is None
    with pytest.raises(MissingBaseACS):
        structures.get("J2")
    with pytest.raises(MissingBaseACS):
        build_bundle_acs(b, require_base_acs=True)


def test_structure_cache_is_reused(sphere_bundle):
    assert build_bundle_acs(sphere_bundle) is build_bundle_acs(sphere_bundle)
    assert bundle_with_acs(sphere_bundle, "J2") is bundle_with_acs(sphere_bundle, "J2")


@pytest.mark.parametrize(
    "u", [(0.3, 0.2, 0.4, -0.3), (-1.0, 0.6, 0.1, 0.8), (2.0, -0.9, -0.5, 0.5)]
)
def test_lift_bracket_identities_on_the_sphere(sphere_bundle, u):
    y_field = (parse_expr("0", 2), parse_expr("x1 + 1", 2))
    report = check_bracket_identities(sphere_bundle, coordinate_field(2, 0), y_field, u)
    assert report.passed, report.model_dump()


def test_lift_bracket_identities_on_the_halfplane(halfplane_bundle):
    y_field = (parse_expr("x2", 2), parse_expr("x1*x2", 2))
    x_field = (parse_expr("1", 2), parse_expr("x1", 2))
    report = check_bracket_identities(halfplane_bundle, x_field, y_field, (0.2, 1.1, 0.3, -0.6))
    assert report.passed
    assert report.max_residual <= 1e-6
