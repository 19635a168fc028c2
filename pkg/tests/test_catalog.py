import numpy as np
import pytest
import yaml

from sasaki_tube_verify import catalog
from sasaki_tube_verify.catalog import (
    list_manifolds,
    load_fixtures,
    load_manifold,
    manifold_from_mapping,
    serialize_manifold,
)
from sasaki_tube_verify.chart_geometry import probe_points
from sasaki_tube_verify.exceptions import InvariantViolation, ManifestError

BUILTIN = {
    "conformal_r6",
    "euclidean1",
    "euclidean2",
    "euclidean4",
    "halfplane",
    "kahler_r6",
    "line1_curved",
    "sphere_fermi",
}

BAD_ACS = {
    "name": "bad_acs",
    "dimension": 2,
    "coordinates": ["x1", "x2"],
    "domain": [[-1.0, 1.0], [-1.0, 1.0]],
    "metric": [["1", "0"], ["1"]],
    "acs": [["0", "-2"], ["1", "0"]],
}


@pytest.fixture
def catalog_override(monkeypatch, tmp_path):
    def fake_setting(name, default=None):
        return str(tmp_path) if name == "SASAKI_TUBE_CATALOG_DIR" else default

    monkeypatch.setattr(catalog, "setting", fake_setting)
    return tmp_path


def test_builtin_catalog():
    entries = list_manifolds()
    assert {e.name for e in entries} == BUILTIN
    by_name = {e.name: e for e in entries}
    assert by_name["sphere_fermi"].dimension == 2
    assert by_name["sphere_fermi"].has_acs
    assert not by_name["line1_curved"].has_acs
    assert by_name["kahler_r6"].dimension == 6


def test_loaded_chart_fields(sphere):
    assert sphere.name == "sphere_fermi"
    assert sphere.coordinates == ("x1", "x2")
    assert sphere.domain == ((-3.0, 3.0), (-1.4, 1.4))
    assert sphere.tube == {"tangential": 1, "epsilon": 0.4, "center": [0.0]}


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_serialized_manifest_reloads(name, tmp_path):
    m = load_manifold(name)
    path = tmp_path / f"{name}.yaml"
    path.write_text(serialize_manifold(m), encoding="utf-8")
    again = load_manifold(str(path))
    assert again.dim == m.dim
    assert again.domain == m.domain
    for x in probe_points(m, 4):
        np.testing.assert_allclose(again.metric_at(x), m.metric_at(x), rtol=1e-14)
        if m.has_acs:
            np.testing.assert_allclose(again.acs_at(x), m.acs_at(x), rtol=1e-14)


def test_unknown_manifold_names_the_catalog():
    with pytest.raises(ManifestError) as excinfo:
        load_manifold("no_such_manifold")
    message = str(excinfo.value)
    assert "no_such_manifold" in message
    assert "sphere_fermi" in message


def test_missing_manifest_file(tmp_path):
    with pytest.raises(ManifestError):
        load_manifold(str(tmp_path / "absent.yaml"))


def test_catalog_directory_override(catalog_override):
    (catalog_override / "bad_acs.yaml").write_text(yaml.safe_dump(BAD_ACS), encoding="utf-8")
    (catalog_override / "bad_acs.fixtures.yaml").write_text("flat_inner_full: true\n")
    assert [e.name for e in list_manifolds()] == ["bad_acs"]
    assert load_fixtures("bad_acs") == {"flat_inner_full": True}
    with pytest.raises(InvariantViolation) as excinfo:
        load_manifold("bad_acs")
    assert excinfo.value.violations
    assert load_manifold("bad_acs", validate=False).has_acs


def test_malformed_manifests_name_their_source():
    with pytest.raises(ManifestError, match="missing field"):
        manifold_from_mapping({"name": "x", "dimension": 1}, source="inline")
    with pytest.raises(ManifestError, match="inline"):
        manifold_from_mapping({**BAD_ACS, "metric": [["1", "0"], ["sqrt("]]}, source="inline")
    with pytest.raises(ManifestError):
        manifold_from_mapping({**BAD_ACS, "metric": [["1", "0"]]})
    with pytest.raises(ManifestError):
        manifold_from_mapping({**BAD_ACS, "tube": {"epsilon": 0.3}})


def test_invalid_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("name: [unclosed\n", encoding="utf-8")
    with pytest.raises(ManifestError, match="invalid YAML"):
        load_manifold(str(path))


def test_fixtures(sphere):
    fixtures = load_fixtures("sphere_fermi")
    assert fixtures["h_case_2_1"]["expected"] == -0.025
    assert fixtures["flat_inner_full"] is True
    assert load_fixtures("euclidean4") == {}
    assert load_fixtures("conformal_r6")["beta_d1"] == -0.6


def test_fixtures_beside_a_manifest_file(copied_sphere):
    m = load_manifold(str(copied_sphere))
    assert m.name == "sphere_copy"
    assert m.source == str(copied_sphere)
    assert load_fixtures(m)["h_case_2_1"]["expected"] == -0.025
    assert load_fixtures("sphere_copy") == {}


def test_fixtures_fall_back_to_the_catalog(tmp_path):
    manifest = tmp_path / "plane.yaml"
    manifest.write_text(
        (catalog.catalog_dir() / "conformal_r6.yaml").read_text(encoding="utf-8"),
        encoding="utf-8",
    )
    m = load_manifold(str(manifest))
    assert load_fixtures(m)["beta_d1"] == -0.6
    assert load_fixtures(load_manifold("conformal_r6"))["beta_d1"] == -0.6
