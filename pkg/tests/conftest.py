import os
import sys

import pytest
import yaml

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from sasaki_tube_verify.catalog import catalog_dir, load_manifold  # noqa: E402
from sasaki_tube_verify.tangent_bundle import build_sasaki  # noqa: E402
from sasaki_tube_verify.tube_deformation import (  # noqa: E402
    AdaptedTube,
    build_kaehler_tube,
    deform_field,
)


@pytest.fixture(autouse=True)
def default_catalog(monkeypatch):
    """Keep every test on the shipped catalog and a fixed default seed."""
    monkeypatch.delenv("SASAKI_TUBE_CATALOG_DIR", raising=False)
    monkeypatch.delenv("SASAKI_TUBE_SEED", raising=False)


@pytest.fixture(scope="session")
def euclidean2():
    return load_manifold("euclidean2")


@pytest.fixture(scope="session")
def euclidean4():
    return load_manifold("euclidean4")


@pytest.fixture(scope="session")
def sphere():
    return load_manifold("sphere_fermi")


@pytest.fixture(scope="session")
def halfplane():
    return load_manifold("halfplane")


@pytest.fixture(scope="session")
def line_curved():
    return load_manifold("line1_curved")


@pytest.fixture(scope="session")
def conformal_r6():
    return load_manifold("conformal_r6")


@pytest.fixture(scope="session")
def kahler_r6():
    return load_manifold("kahler_r6")


@pytest.fixture(scope="session")
def sphere_bundle(sphere):
    return build_sasaki(sphere)


@pytest.fixture(scope="session")
def halfplane_bundle(halfplane):
    return build_sasaki(halfplane)


@pytest.fixture(scope="session")
def equator_tube(sphere):
    return AdaptedTube.from_manifold(sphere)


@pytest.fixture(scope="session")
def equator_metric(sphere, equator_tube):
    return deform_field(sphere.metric_grid, equator_tube)


@pytest.fixture(scope="session")
def sphere_kaehler_tube(sphere):
    return build_kaehler_tube(sphere, epsilon=0.4)


@pytest.fixture
def copied_sphere(tmp_path):
    """The sphere manifest and its fixtures under a name the catalog does not know."""
    data = yaml.safe_load((catalog_dir() / "sphere_fermi.yaml").read_text(encoding="utf-8"))
    data["name"] = "sphere_copy"
    manifest = tmp_path / "sphere_copy.yaml"
    manifest.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    fixtures = (catalog_dir() / "sphere_fermi.fixtures.yaml").read_text(encoding="utf-8")
    (tmp_path / "sphere_copy.fixtures.yaml").write_text(fixtures, encoding="utf-8")
    return manifest
