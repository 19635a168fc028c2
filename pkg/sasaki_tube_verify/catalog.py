#!/usr/bin/python
"""Manifest catalog: built-in manifolds, fixture files and YAML export."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml
from agent_utilities.base_utilities import get_logger
from agent_utilities.core.config import setting

from sasaki_tube_verify.chart_geometry import ChartManifold, check_manifold_invariants
from sasaki_tube_verify.exceptions import (
    ArityError,
    ExpressionSyntaxError,
    InvariantViolation,
    ManifestError,
)
from sasaki_tube_verify.scalar_expr import parse_expr, to_text
from sasaki_tube_verify.verification_models import ManifoldCatalogEntry

logger = get_logger(__name__)

REQUIRED_FIELDS = ("name", "dimension", "coordinates", "domain", "metric")
FIXTURE_SUFFIX = ".fixtures.yaml"


def package_root() -> Path:
    return Path(__file__).resolve().parent.parent


def _load_yaml(path: Path) -> dict[str, Any]:
    return yaml.safe_load(path.read_text(encoding="utf-8")) or {}


def catalog_dir() -> Path:
    override = setting("SASAKI_TUBE_CATALOG_DIR", None)
    if override:
        return Path(override)
    return package_root() / "sasaki_tube_verify" / "manifolds"


def _manifest_paths(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.glob("*.yaml") if not p.name.endswith(FIXTURE_SUFFIX)
    )


def _expr_rows(rows: Any, dim: int, source: str, label: str):
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ManifestError(f"{source}: '{label}' must be a list of rows")
    return tuple(tuple(parse_expr(str(cell), dim) for cell in row) for row in rows)


def manifold_from_mapping(
    data: dict[str, Any], source: str = "<mapping>", path: Path | None = None
) -> ChartManifold:
    """Build a chart from a manifest mapping.

    ``path`` is recorded on the chart so fixtures can be found beside the manifest.

    :raises ManifestError: If a field is missing or malformed; the message names ``source``.
    """
    missing = [f for f in REQUIRED_FIELDS if f not in data]
    if missing:
        raise ManifestError(f"{source}: missing field(s) {missing}")
    try:
        dim = int(data["dimension"])
        domain = tuple((float(lo), float(hi)) for lo, hi in data["domain"])
        tube = data.get("tube")
        if tube is not None and not {"tangential", "epsilon"} <= set(tube):
            raise ManifestError(f"{source}: tube needs 'tangential' and 'epsilon'")
        return ChartManifold(
            name=str(data["name"]),
            dim=dim,
            coordinates=tuple(str(c) for c in data["coordinates"]),
            domain=domain,
            metric_upper=_expr_rows(data["metric"], dim, source, "metric"),
            acs=_expr_rows(data["acs"], dim, source, "acs") if data.get("acs") else None,
            description=str(data.get("description", "")),
            tube=dict(tube) if tube else None,
            source=str(path) if path is not None else None,
        )
    except (ArityError, ExpressionSyntaxError) as exc:
        raise ManifestError(f"{source}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{source}: malformed manifest ({exc})") from exc


def manifold_to_mapping(m: ChartManifold) -> dict[str, Any]:
    data: dict[str, Any] = {
        "name": m.name,
        "dimension": m.dim,
        "coordinates": list(m.coordinates),
        "domain": [[lo, hi] for lo, hi in m.domain],
        "metric": [[to_text(e) for e in row] for row in m.metric_upper],
    }
    if m.acs is not None:
        data["acs"] = [[to_text(e) for e in row] for row in m.acs]
    if m.description:
        data["description"] = m.description
    if m.tube:
        data["tube"] = dict(m.tube)
    return data


def serialize_manifold(m: ChartManifold) -> str:
    return yaml.safe_dump(manifold_to_mapping(m), sort_keys=False, default_flow_style=None)


def _resolve(name_or_path: str) -> Path:
    candidate = Path(name_or_path)
    if candidate.suffix in (".yaml", ".yml") or candidate.exists():
        if not candidate.is_file():
            raise ManifestError(f"Manifest file {candidate} does not exist")
        return candidate
    directory = catalog_dir()
    path = directory / f"{name_or_path}.yaml"
    if not path.is_file():
        known = [p.stem for p in _manifest_paths(directory)]
        raise ManifestError(
            f"Unknown manifold {name_or_path!r} in catalog {directory}. Known: {known}"
        )
    return path


def load_manifold(name_or_path: str, validate: bool = True) -> ChartManifold:
    """
    Load a built-in manifold by name, or a manifest file by path.

    :param name_or_path: Catalog name or path to a ``.yaml`` manifest.
    :type name_or_path: str
    :param validate: Check positivity of the metric and ``J`` identities at probe points.
    :type validate: bool
    :return: The chart.
    :rtype: ChartManifold
    :raises ManifestError: If the manifest cannot be found or parsed.
    :raises InvariantViolation: If ``validate`` finds violations.
    """
    path = _resolve(name_or_path)
    try:
        data = _load_yaml(path)
    except yaml.YAMLError as exc:
        raise ManifestError(f"{path}: invalid YAML ({exc})") from exc
    m = manifold_from_mapping(data, source=str(path), path=path)
    if validate:
        violations = check_manifold_invariants(m)
        if violations:
            raise InvariantViolation(f"{m.name} violates chart invariants", violations)
    logger.debug("Loaded manifold %s from %s", m.name, path)
    return m


def list_manifolds() -> list[ManifoldCatalogEntry]:
    entries = []
    for path in _manifest_paths(catalog_dir()):
        data = _load_yaml(path)
        entries.append(
            ManifoldCatalogEntry(
                name=str(data.get("name", path.stem)),
                dimension=int(data.get("dimension", 0)),
                has_acs=bool(data.get("acs")),
                path=str(path),
                description=str(data.get("description", "")),
            )
        )
    return entries


def fixture_candidates(manifold: ChartManifold | str) -> list[Path]:
    """Fixture files to try, most specific first.

    A chart read from a manifest file looks for ``<stem>.fixtures.yaml`` in the
    same directory before the catalog entry of the same name.
    """
    candidates: list[Path] = []
    if isinstance(manifold, ChartManifold):
        if manifold.source:
            manifest = Path(manifold.source)
            candidates.append(manifest.with_name(f"{manifest.stem}{FIXTURE_SUFFIX}"))
        name = manifold.name
    else:
        name = manifold
    fallback = catalog_dir() / f"{name}{FIXTURE_SUFFIX}"
    if fallback not in candidates:
        candidates.append(fallback)
    return candidates


def load_fixtures(manifold: ChartManifold | str) -> dict[str, Any]:
    """Suite fixtures stored beside the manifest, or an empty mapping.

    :param manifold: A loaded chart, or a catalog name.
    :type manifold: ChartManifold | str
    :return: The fixture mapping of the first candidate file that exists.
    :rtype: dict[str, Any]
    """
    for path in fixture_candidates(manifold):
        if path.is_file():
            logger.debug("Using fixtures %s", path)
            return _load_yaml(path)
    return {}
