import numpy as np
import pytest

from sasaki_tube_verify.catalog import load_fixtures
from sasaki_tube_verify.chart_geometry import (
    conjugated_structure,
    orthonormal_frame,
    random_orthonormal_frame,
)
from sasaki_tube_verify.exceptions import BadCase, MissingBaseACS, NotOrthonormal
from sasaki_tube_verify.hermitian_analysis import (
    CASE_TRIPLES,
    GH_CLASSES,
    beta,
    bundle_h_direct,
    case_lifts,
    contains,
    gh_classify,
    h1_closed_form,
    h2_closed_form,
    h_tensor_array,
    kaehler_form_codifferential,
    lattice_violations,
    second_fundamental_tensor,
)
from sasaki_tube_verify.tangent_bundle import build_sasaki

TRIPLES = [(0, 1, 0), (1, 0, 1), (0, 0, 1), (1, 1, 0), (0, 1, 1)]


def _frame_triples(base, u):
    frame = orthonormal_frame(base, u[: base.dim]).frame
    for picks in TRIPLES:
        yield tuple(frame[:, i] for i in picks)


def test_fixture_case_hhv(sphere_bundle):
    fixture = load_fixtures("sphere_fermi")["h_case_2_1"]
    u = np.concatenate([fixture["point"], fixture["fiber"]])
    x, y, z = (np.asarray(fixture[key], float) for key in ("x", "y", "z"))
    direct = bundle_h_direct(sphere_bundle, "J1", u, *case_lifts(sphere_bundle, u, 2, x, y, z))
    assert direct == pytest.approx(fixture["expected"], abs=1e-9)
    assert h1_closed_form(2, sphere_bundle, u, x, y, z) == pytest.approx(-0.025, abs=1e-12)


@pytest.mark.parametrize("case", sorted(CASE_TRIPLES))
@pytest.mark.parametrize("bundle", ["sphere_bundle", "halfplane_bundle"])
def test_j1_closed_forms_match_direct(request, bundle, case):
    b = request.getfixturevalue(bundle)
    u = np.array([0.3, 1.2, 0.4, -0.3])
    for x, y, z in _frame_triples(b.base, u):
        direct = bundle_h_direct(b, "J1", u, *case_lifts(b, u, case, x, y, z))
        assert direct == pytest.approx(h1_closed_form(case, b, u, x, y, z), abs=1e-8)


@pytest.mark.parametrize("case", sorted(CASE_TRIPLES))
@pytest.mark.parametrize("bundle", ["sphere_bundle", "halfplane_bundle"])
def test_j2_closed_forms_match_direct(request, bundle, case):
    b = request.getfixturevalue(bundle)
    u = np.array([-0.5, 0.9, -0.2, 0.6])
    for x, y, z in _frame_triples(b.base, u):
        direct = bundle_h_direct(b, "J2", u, *case_lifts(b, u, case, x, y, z))
        assert direct == pytest.approx(h2_closed_form(case, b, u, x, y, z), abs=1e-8)


def test_printed_hvh_sign_disagrees(sphere_bundle):
    u = np.array([0.3, 0.2, 0.4, -0.3])
    frame = orthonormal_frame(sphere_bundle.base, u[:2]).frame
    x, y, z = frame[:, 0], frame[:, 1], frame[:, 0]
    direct = bundle_h_direct(sphere_bundle, "J2", u, *case_lifts(sphere_bundle, u, 3, x, y, z))
    printed = h2_closed_form(3, sphere_bundle, u, x, y, z, printed=True)
    assert abs(direct) > 1e-3
    assert printed == pytest.approx(-direct, abs=1e-8)


def test_j2_on_horizontal_lifts_is_the_base_tensor(euclidean4):
    base = conjugated_structure(euclidean4, [(1, 2)], [[0.0, 0.5, 0.0, 0.0]])
    b = build_sasaki(base)
    u = np.array([0.1, 0.2, 0.3, 0.4, 0.2, -0.1, 0.3, 0.0])
    e = np.eye(4)
    x, y, z = e[1], e[0], e[3]
    direct = bundle_h_direct(b, "J2", u, *case_lifts(b, u, 1, x, y, z))
    base_h = second_fundamental_tensor(base, u[:4], x, y, z)
    assert abs(base_h) > 1e-3
    assert direct == pytest.approx(base_h, abs=1e-8)


def test_null_section_is_kaehler_for_j1(sphere_bundle):
    u = np.array([0.3, 0.2, 0.0, 0.0])
    for case in (2, 3, 4, 5):
        for x, y, z in _frame_triples(sphere_bundle.base, u):
            assert h1_closed_form(case, sphere_bundle, u, x, y, z) == pytest.approx(0.0, abs=1e-15)


def test_case_and_structure_errors(sphere_bundle, line_curved):
    e = np.eye(2)
    u = (0.0, 0.0, 0.1, 0.0)
    with pytest.raises(BadCase):
        h1_closed_form(9, sphere_bundle, u, e[0], e[1], e[0])
    with pytest.raises(BadCase):
        case_lifts(sphere_bundle, u, 0, e[0], e[1], e[0])
    with pytest.raises(MissingBaseACS):
        h2_closed_form(2, build_sasaki(line_curved), (0.0, 0.1), (1.0,), (1.0,), (1.0,))
    with pytest.raises(MissingBaseACS):
        h_tensor_array(line_curved, (0.0,))


def test_vectors_must_be_orthonormal(sphere):
    with pytest.raises(NotOrthonormal):
        second_fundamental_tensor(sphere, (0.3, 0.2), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


def test_evaluation_paths_agree(conformal_r6, euclidean4):
    rotated = conjugated_structure(euclidean4, [(0, 1), (1, 2)], [[0.2, 0.4, 0, 0], [0, 0, 0.7, 0]])
    for m, p in ((conformal_r6, np.full(6, 0.2)), (rotated, (0.1, -0.4, 0.3, 0.5))):
        a = h_tensor_array(m, p, "A")
        b = h_tensor_array(m, p, "B")
        np.testing.assert_allclose(a, b, atol=1e-10)
        assert np.max(np.abs(b)) > 1e-3
    with pytest.raises(ValueError):
        h_tensor_array(conformal_r6, np.zeros(6), "C")


def test_surfaces_are_kaehler(sphere, halfplane):
    assert np.max(np.abs(h_tensor_array(sphere, (0.3, 0.2)))) <= 1e-12
    assert np.max(np.abs(h_tensor_array(halfplane, (0.3, 1.2)))) <= 1e-12


def test_beta_of_conformal_metric(conformal_r6):
    p = np.zeros(6)
    assert beta(conformal_r6, p, np.eye(6)[0]) == pytest.approx(-0.6, abs=1e-10)
    assert beta(conformal_r6, p, np.eye(6)[3]) == pytest.approx(0.0, abs=1e-12)


def test_codifferential_is_frame_independent(conformal_r6):
    p = np.full(6, 0.3)
    rng = np.random.default_rng(4)
    frame = random_orthonormal_frame(conformal_r6, p, rng).frame
    np.testing.assert_allclose(
        kaehler_form_codifferential(conformal_r6, p),
        kaehler_form_codifferential(conformal_r6, p, frame),
        atol=1e-12,
    )


def test_containment_lattice():
    assert contains("U", "K")
    assert contains("SK", "U1+U3")
    assert contains("U2+U4", "U4")
    assert not contains("U1", "U2")
    assert not contains("QK", "U3")
    assert len(GH_CLASSES) == 16
    assert lattice_violations({"K": True, "U1": False, "U": True}) == ["K holds but U1 fails"]


def test_flat_standard_structure_is_in_every_class(kahler_r6):
    report = gh_classify(kahler_r6, points=3, vectors=3)
    expected = load_fixtures("kahler_r6")["expected_members"]
    assert sorted(report.members()) == sorted(expected)
    assert report.lattice_consistent
    assert report.valid_dimension
    assert report.table_n == 3.0
    assert report.classes["K"].samples == 9


def test_conformal_structure_classes(conformal_r6):
    report = gh_classify(conformal_r6, points=4, vectors=4, seed=2)
    expected = load_fixtures("conformal_r6")["expected_members"]
    assert sorted(report.members()) == sorted(expected)
    assert not report.is_member("K")
    assert report.classes["SK"].residual > 0.1
    assert report.lattice_consistent


def test_low_dimension_is_flagged(euclidean2):
    report = gh_classify(euclidean2, points=2, vectors=2)
    assert not report.valid_dimension
    assert report.is_member("K")


def test_classification_needs_a_structure(line_curved):
    with pytest.raises(MissingBaseACS):
        gh_classify(line_curved)
