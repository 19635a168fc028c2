#!/usr/bin/python
"""Named verification suites and the batch runner."""

from __future__ import annotations

import sys
import time
from collections.abc import Callable
from typing import Any

import numpy as np
from agent_utilities.base_utilities import get_logger
from pydantic import ValidationError

from sasaki_tube_verify import __version__
from sasaki_tube_verify.catalog import load_fixtures, load_manifold
from sasaki_tube_verify.chart_geometry import (
    ChartManifold,
    acs_covariant_derivative,
    christoffel,
    curvature,
    probe_points,
    random_orthonormal_frame,
    sample_box,
    verify_fermi_chart,
)
from sasaki_tube_verify.exceptions import ManifestError, MissingBaseACS
from sasaki_tube_verify.hermitian_analysis import (
    CASE_TRIPLES,
    bundle_h_direct,
    case_lifts,
    gh_classify,
    h1_closed_form,
    h2_closed_form,
    second_fundamental_tensor,
)
from sasaki_tube_verify.reports import export_table
from sasaki_tube_verify.scalar_expr import ONE, ZERO, ExprProgram, add, coord, grid_program
from sasaki_tube_verify.tangent_bundle import (
    BundleChart,
    build_bundle_acs,
    build_sasaki,
    bundle_with_acs,
    check_bracket_identities,
    coordinate_field,
    lift_frame,
    sasaki_reconstruction_residual,
)
from sasaki_tube_verify.tube_deformation import (
    AdaptedTube,
    RegionTag,
    build_hyper_stage,
    build_kaehler_tube,
    deform_field,
    exterior_curvature_control,
    interface_continuity,
    quaternion_residual,
    radial_decompose,
    radial_profile,
    sample_region,
    verify_flat_inner,
    verify_parallel_J,
    verify_totally_geodesic,
)
from sasaki_tube_verify.verification_models import CheckRecord, RunReport, SuiteConfig

logger = get_logger(__name__)

EXACT_TOL = 1e-9
FLAT_CURVATURE_TOL = 1e-12
CURVED_H_FLOOR = 1e-3
KAEHLER_EPSILON = 0.4
# Suites that integrate geodesics or difference twice use at most this many points.
HEAVY_SAMPLES = 4


def _record(
    name: str,
    anchor: str,
    residual: float,
    tolerance: float,
    binding: bool = True,
    **extra: Any,
) -> CheckRecord:
    return CheckRecord(
        name=name,
        anchor=anchor,
        residual=float(residual),
        tolerance=tolerance,
        passed=bool(residual <= tolerance),
        binding=binding,
        **extra,
    )


def _floor_record(name: str, anchor: str, value: float, floor: float, **extra: Any) -> CheckRecord:
    """A check that a measured quantity is at least ``floor``."""
    return CheckRecord(
        name=name,
        anchor=anchor,
        value=float(value),
        tolerance=floor,
        passed=bool(value >= floor),
        **extra,
    )


def _is_flat(m: ChartManifold, seed: int) -> bool:
    return all(
        float(np.max(np.abs(curvature(m, x)))) <= FLAT_CURVATURE_TOL
        for x in probe_points(m, 6, seed)
    )


def _constant_metric(m: ChartManifold) -> bool:
    return all(e.is_const for row in m.metric_upper for e in row)


def _frozen_pair_kaehler(m: ChartManifold, seed: int) -> bool:
    """Whether diag(g(x), g(x)) with the standard block J is Kaehler: d_k g_ij symmetric in k, i."""
    for x in probe_points(m, 6, seed):
        dg = m.metric_derivatives_at(x)
        if float(np.max(np.abs(dg - dg.transpose(1, 0, 2)))) > FLAT_CURVATURE_TOL:
            return False
    return True


def _bundle_points(b: BundleChart, count: int, seed: int) -> np.ndarray:
    return sample_box(b.chart.domain, count, seed=seed, margin=0.1)


def _case_configurations(b: BundleChart, count: int, seed: int):
    """Bundle points with base vectors picked from random orthonormal frames.

    Vectors may repeat within a triple.
    """
    rng = np.random.default_rng(seed)
    for u in _bundle_points(b, count, seed):
        x, _ = b.split(u)
        frame = random_orthonormal_frame(b.base, x, rng).frame
        picks = rng.integers(0, b.n, size=3)
        yield u, tuple(frame[:, i] for i in picks)


# sasaki


def sasaki_suite(m: ChartManifold, cfg: SuiteConfig, fixtures: dict) -> list[CheckRecord]:
    b = build_sasaki(m)
    rng = np.random.default_rng(cfg.seed)
    points = _bundle_points(b, cfg.samples, cfg.seed)
    reconstruction = frame_defect = 0.0
    for u in points:
        g_hat = b.chart.metric_at(u)
        frame_defect = max(frame_defect, lift_frame(b, u).gram_residual(g_hat))
        w1, w2 = rng.standard_normal(2 * b.n), rng.standard_normal(2 * b.n)
        reconstruction = max(reconstruction, sasaki_reconstruction_residual(b, u, w1, w2))
    records = [
        _record(
            "sasaki reconstruction",
            "g_hat(A, B) = g(pi A, pi B) + g(K A, K B)",
            reconstruction,
            EXACT_TOL,
        ),
        _record(
            "lift frame orthonormality",
            "horizontal and vertical lifts of an orthonormal frame are orthonormal",
            frame_defect,
            EXACT_TOL,
        ),
    ]

    n = b.n
    x_field = coordinate_field(n, 0)
    y_field = tuple(add(coord(0), ONE) if k == n - 1 else ZERO for k in range(n))
    worst = {"vv": 0.0, "hv": 0.0, "proj": 0.0, "curv": 0.0}
    for u in points:
        report = check_bracket_identities(b, x_field, y_field, u, tol=cfg.tol)
        worst["vv"] = max(worst["vv"], report.vertical_vertical)
        worst["hv"] = max(worst["hv"], report.horizontal_vertical)
        worst["proj"] = max(worst["proj"], report.horizontal_projection)
        worst["curv"] = max(worst["curv"], report.horizontal_curvature)
    records += [
        _record("bracket vertical-vertical", "[X^v, Y^v] = 0", worst["vv"], cfg.tol),
        _record("bracket horizontal-vertical", "[X^h, Y^v] = (nabla_X Y)^v", worst["hv"], cfg.tol),
        _record("bracket projection", "pi [X^h, Y^h] = [X, Y]", worst["proj"], cfg.tol),
        _record("bracket curvature", "K [X^h, Y^h] = R(X, Y)U", worst["curv"], cfg.tol),
    ]

    structures = build_bundle_acs(b)
    defect = 0.0
    for u in points:
        g_hat = b.chart.metric_at(u)
        j1 = grid_program(structures.j1).run(u).reshape(2 * n, 2 * n)
        if structures.j2 is None:
            eye = np.eye(2 * n)
            defect = max(
                defect,
                float(np.max(np.abs(j1 @ j1 + eye))),
                float(np.max(np.abs(j1.T @ g_hat @ j1 - g_hat))),
            )
            continue
        j2 = grid_program(structures.j2).run(u).reshape(2 * n, 2 * n)
        j3 = grid_program(structures.j3).run(u).reshape(2 * n, 2 * n)
        defect = max(defect, quaternion_residual(j1, j2, j3, g_hat))
    records.append(
        _record(
            "bundle structure identities",
            "J_a^2 = -I, J1 J2 = -J2 J1 = J3, g_hat-orthogonal",
            defect,
            EXACT_TOL,
        )
    )

    symbolic = 0.0
    grid = ExprProgram(e for plane in m.christoffel_grid for row in plane for e in row)
    for x in probe_points(m, cfg.samples, cfg.seed):
        exact = grid.run(x).reshape(m.dim, m.dim, m.dim)
        symbolic = max(symbolic, float(np.max(np.abs(exact - christoffel(m, x)))))
    records.append(
        _record(
            "christoffel symbolic vs jet",
            "Christoffel symbols from the metric jet",
            symbolic,
            cfg.tol,
        )
    )
    return records


# h-cases


def h_cases_suite(m: ChartManifold, cfg: SuiteConfig, fixtures: dict) -> list[CheckRecord]:
    b = build_sasaki(m)
    structures = ["J1"] + (["J2"] if m.acs is not None else [])
    configurations = list(_case_configurations(b, cfg.samples, cfg.seed))
    records: list[CheckRecord] = []
    for which in structures:
        closed = h1_closed_form if which == "J1" else h2_closed_form
        for case, kinds in CASE_TRIPLES.items():
            worst = printed_worst = 0.0
            for u, (x, y, z) in configurations:
                direct = bundle_h_direct(b, which, u, *case_lifts(b, u, case, x, y, z))
                worst = max(worst, abs(direct - closed(case, b, u, x, y, z)))
                if which == "J2" and case == 3:
                    printed = h2_closed_form(case, b, u, x, y, z, printed=True)
                    printed_worst = max(printed_worst, abs(direct - printed))
            records.append(
                _record(
                    f"{which} case {case}",
                    f"h of ({which}, g_hat) on ({kinds}) lifts",
                    worst,
                    cfg.tol,
                )
            )
            if which == "J2" and case == 3:
                records.append(
                    _record(
                        f"{which} case 3 as printed",
                        "printed global sign of the hvh case",
                        printed_worst,
                        cfg.tol,
                        binding=False,
                    )
                )

    fixture = fixtures.get("h_case_2_1")
    if fixture:
        u = np.concatenate([fixture["point"], fixture["fiber"]])
        x, y, z = (np.asarray(fixture[key], float) for key in ("x", "y", "z"))
        expected = float(fixture["expected"])
        direct = bundle_h_direct(b, "J1", u, *case_lifts(b, u, 2, x, y, z))
        closed_value = h1_closed_form(2, b, u, x, y, z)
        for label, value in (("direct", direct), ("closed form", closed_value)):
            records.append(
                _record(
                    f"J1 case 2 fixture ({label})",
                    fixture.get("provenance", "fixture"),
                    abs(value - expected),
                    cfg.tol,
                    value=value,
                    expected=expected,
                )
            )

    if m.acs is not None:
        kernel = doubled = 0.0
        for u, (x, y, z) in configurations:
            direct = bundle_h_direct(b, "J2", u, *case_lifts(b, u, 1, x, y, z))
            base_h = second_fundamental_tensor(m, b.split(u)[0], x, y, z)
            kernel = max(kernel, abs(direct - base_h))
            doubled = max(doubled, abs(direct - 2.0 * base_h))
        records.append(
            _record("J2 horizontal kernel", "h2 on horizontal lifts equals base h", kernel, cfg.tol)
        )
        records.append(
            _record(
                "J2 horizontal kernel doubled",
                "h2 on horizontal lifts equals twice base h",
                doubled,
                cfg.tol,
                binding=False,
            )
        )

    largest = 0.0
    for u, (x, y, z) in configurations:
        for case in (2, 4, 5):
            largest = max(
                largest, abs(bundle_h_direct(b, "J1", u, *case_lifts(b, u, case, x, y, z)))
            )
    if _is_flat(m, cfg.seed):
        j1_chart = bundle_with_acs(b, "J1")
        nabla = max(
            float(np.max(np.abs(acs_covariant_derivative(j1_chart, u))))
            for u, _ in configurations
        )
        records.append(_record("J1 Kaehler over flat base", "h1 = 0", largest, EXACT_TOL))
        records.append(_record("J1 parallel over flat base", "nabla J1 = 0", nabla, EXACT_TOL))
    else:
        records.append(
            _floor_record(
                "J1 not Kaehler over curved base", "h1 != 0 off the null section", largest, CURVED_H_FLOOR
            )
        )
    return records


# deformation


def _profile_records(pf, tube: AdaptedTube, fixtures: dict, cfg: SuiteConfig) -> list[CheckRecord]:
    records: list[CheckRecord] = []
    eps = tube.epsilon
    for t, expected in ((eps / 4.0, 0.0), (0.75 * eps, 0.5 * eps), (eps, eps), (1.25 * eps, 1.25 * eps)):
        records.append(
            _record(
                "radial profile",
                "rho(t) = 0, 2t - eps, t",
                abs(radial_profile(t, eps) - expected),
                EXACT_TOL,
                t=t,
                value=radial_profile(t, eps),
                expected=expected,
            )
        )
    deformed = fixtures.get("deformed_metric") or {}
    i, j = deformed.get("component", [0, 0])
    for sample in deformed.get("samples", []):
        rp = radial_decompose(tube, sample["point"])
        value = float(pf(sample["point"])[i, j])
        expected = float(sample["expected"])
        records.append(
            _record(
                f"deformed metric g[{i}][{j}]",
                "value at the retracted point",
                abs(value - expected),
                cfg.tol,
                region=rp.region.value,
                t=rp.t,
                value=value,
                expected=expected,
            )
        )
    foot = tube.foot(
        [0.5 * (lo + hi) for lo, hi in tube.ambient.domain[: tube.tangential]]
        + [0.0] * tube.transverse
    )
    direction = np.zeros(tube.ambient.dim)
    direction[tube.tangential] = 1.0 / np.sqrt(tube.transverse_metric(foot)[0, 0])
    for t in np.linspace(0.0, 1.5 * eps, 16):
        x = foot + t * direction
        if not tube.ambient.contains(x):
            continue
        value, tag = pf.evaluate(x)
        records.append(
            CheckRecord(
                name="deformed metric profile",
                anchor="plot row",
                passed=True,
                binding=False,
                region=tag.value,
                t=float(t),
                value=float(value[0, 0]),
                expected=float(tube.ambient.metric_at(x)[0, 0]),
            )
        )
    return records


def deformation_suite(m: ChartManifold, cfg: SuiteConfig, fixtures: dict) -> list[CheckRecord]:
    if not m.tube:
        raise ManifestError(f"{m.name} declares no tube; the deformation suite needs one")
    tube = AdaptedTube.from_manifold(m, cfg.epsilon)
    heavy = min(cfg.samples, HEAVY_SAMPLES)
    fermi = _fermi_record(tube, heavy, cfg)
    pf = deform_field(m.metric_grid, tube)
    records = [fermi] + _profile_records(pf, tube, fixtures, cfg)

    continuity = interface_continuity(pf, cfg.samples, cfg.seed, cfg.continuity_tol)
    records.append(
        _record(
            "interface continuity",
            "deformed field is continuous across both interfaces",
            max(continuity.inner_interface, continuity.outer_interface),
            cfg.continuity_tol,
        )
    )
    isometry = 0.0
    for foot in sample_box(m.domain[: tube.tangential], cfg.samples, cfg.seed, 0.1):
        x = tube.foot(np.concatenate([foot, np.zeros(tube.transverse)]))
        isometry = max(isometry, float(np.max(np.abs(pf(x) - m.metric_at(x)))))
    records.append(
        _record("submanifold isometry", "g~ = g on the submanifold", isometry, 1e-12)
    )

    geodesic = verify_totally_geodesic(
        pf, samples=heavy, tol=cfg.tol, drift_tol=cfg.geodesic_tol, seed=cfg.seed
    )
    records += [
        _record(
            "totally geodesic (algebraic)",
            "transverse Christoffels vanish on the submanifold",
            geodesic.algebraic_residual,
            cfg.tol,
        ),
        _record(
            "totally geodesic (drift)",
            "tangent geodesics stay on the submanifold",
            geodesic.drift,
            cfg.geodesic_tol,
            detail=f"{geodesic.launches} launches, {geodesic.truncated} truncated",
        ),
    ]
    records += _flat_inner_records(pf, heavy, cfg, bool(fixtures.get("flat_inner_full")))

    control = exterior_curvature_control(pf, heavy, cfg.seed)
    records.append(
        _record(
            "exterior curvature control",
            "deformation leaves the exterior untouched",
            control.max_residual,
            cfg.flat_tol,
        )
    )
    for value in control.sectional:
        records.append(
            CheckRecord(
                name="exterior sectional curvature",
                anchor="observation",
                passed=True,
                binding=False,
                region=RegionTag.EXTERIOR.value,
                value=value,
            )
        )
    return records


def _fermi_record(tube: AdaptedTube, samples: int, cfg: SuiteConfig) -> CheckRecord:
    report = verify_fermi_chart(
        tube.ambient, tube, samples=samples, tol=cfg.geodesic_tol, seed=cfg.seed
    )
    return _record(
        "adapted chart",
        "transverse coordinate rays are unit-speed geodesics",
        report.max_deviation,
        cfg.geodesic_tol,
        detail=f"{report.truncated} truncated" if report.truncated else None,
    )


def _flat_inner_records(pf, samples: int, cfg: SuiteConfig, bind_full: bool) -> list[CheckRecord]:
    report = verify_flat_inner(pf, samples=samples, tol=cfg.flat_tol, seed=cfg.seed)
    records = [
        _record(
            "inner flatness (transverse block)",
            "curvature of the deformed metric on the inner disk",
            report.transverse_residual,
            cfg.flat_tol,
            region=RegionTag.INNER_DISK.value,
        ),
        _record(
            "inner flatness (all blocks)",
            "curvature of the deformed metric on the inner disk",
            report.max_residual,
            cfg.flat_tol,
            binding=bind_full,
            region=RegionTag.INNER_DISK.value,
        ),
    ]
    for label, value in report.blocks.items():
        records.append(
            _record(
                f"inner curvature block {label}",
                "observation",
                value,
                cfg.flat_tol,
                binding=False,
                region=RegionTag.INNER_DISK.value,
            )
        )
    return records


# kaehler-tube


def _feet(fixtures: dict, key: str) -> list[list[float]] | None:
    feet = fixtures.get(key)
    return [list(map(float, f)) for f in feet] if feet else None


def kaehler_tube_suite(m: ChartManifold, cfg: SuiteConfig, fixtures: dict) -> list[CheckRecord]:
    kt = build_kaehler_tube(m, epsilon=cfg.epsilon or KAEHLER_EPSILON)
    heavy = min(cfg.samples, HEAVY_SAMPLES)
    flat = _is_flat(m, cfg.seed)
    records = [_fermi_record(kt.tube, heavy, cfg)]

    geodesic = verify_totally_geodesic(
        kt.metric, samples=heavy, tol=cfg.tol, drift_tol=cfg.geodesic_tol, seed=cfg.seed
    )
    records += [
        _record(
            "null section totally geodesic (algebraic)",
            "transverse Christoffels vanish on the null section",
            geodesic.algebraic_residual,
            cfg.tol,
        ),
        _record(
            "null section totally geodesic (drift)",
            "horizontal geodesics stay on the null section",
            geodesic.drift,
            cfg.geodesic_tol,
            detail=f"{geodesic.launches} launches, {geodesic.truncated} truncated",
        ),
    ]
    records += _flat_inner_records(kt.metric, heavy, cfg, bind_full=_constant_metric(m))

    stationary = _feet(fixtures, "stationary_feet")
    anywhere = verify_parallel_J(
        kt.metric, kt.structures["J1"], samples=heavy, tol=cfg.parallel_tol,
        seed=cfg.seed, structure="J1",
    )
    records.append(
        _record(
            "J1~ parallel on the inner disk",
            "nabla~ J1~ = 0",
            anywhere.max_residual,
            cfg.parallel_tol,
            binding=_frozen_pair_kaehler(m, cfg.seed),
            region=RegionTag.INNER_DISK.value,
        )
    )
    if stationary:
        points = sample_region(kt.tube, RegionTag.INNER_DISK, heavy, cfg.seed, feet=stationary)
        above = verify_parallel_J(
            kt.metric, kt.structures["J1"], points=points, tol=cfg.parallel_tol, structure="J1"
        )
        records.append(
            _record(
                "J1~ parallel above stationary feet",
                "nabla~ J1~ = 0 where the base metric is stationary",
                above.max_residual,
                cfg.parallel_tol,
                region=RegionTag.INNER_DISK.value,
            )
        )

    exterior = sample_region(kt.tube, RegionTag.EXTERIOR, heavy, cfg.seed)
    source = kt.source("J1")
    nabla = max(
        (float(np.max(np.abs(acs_covariant_derivative(source, u)))) for u in exterior),
        default=0.0,
    )
    if flat:
        records.append(
            _record("J1 parallel outside the tube", "flat base", nabla, EXACT_TOL,
                    region=RegionTag.EXTERIOR.value)
        )
    else:
        records.append(
            _floor_record(
                "J1 not parallel outside the tube",
                "curved base, v != 0",
                nabla,
                CURVED_H_FLOOR,
                region=RegionTag.EXTERIOR.value,
            )
        )

    if "J2" in kt.structures:
        j2 = verify_parallel_J(
            kt.metric, kt.structures["J2"], samples=heavy, tol=cfg.parallel_tol,
            seed=cfg.seed, structure="J2",
        )
        records.append(
            _record(
                "J2~ parallel on the inner disk",
                "observation",
                j2.max_residual,
                cfg.parallel_tol,
                binding=False,
                region=RegionTag.INNER_DISK.value,
            )
        )
        expected = fixtures.get("tube_expected_members")
        if expected is not None:
            points = sample_region(kt.tube, RegionTag.INNER_DISK, heavy, cfg.seed)
            report = gh_classify(
                kt.deformed("J2"), vectors=3, tol=cfg.tol, seed=cfg.seed, sample_points=points
            )
            records += _class_records(report, expected, prefix="J2~ inner tube ")
    return records


# hyper


def hyper_suite(m: ChartManifold, cfg: SuiteConfig, fixtures: dict) -> list[CheckRecord]:
    flat = _is_flat(m, cfg.seed)
    stationary = _feet(fixtures, "stationary_feet")
    samples = min(cfg.samples, HEAVY_SAMPLES)
    epsilon = cfg.epsilon or KAEHLER_EPSILON
    report = build_hyper_stage(
        m, epsilon, samples=samples, seed=cfg.seed, tol=cfg.parallel_tol * 10, feet=stationary
    )
    bind_parallel = flat or stationary is not None
    records = [
        _record(
            "quaternion identities",
            "J1 J2 = -J2 J1 = J3 on the stage-2 tube",
            report.quaternion_residual,
            report.quaternion_tolerance,
        ),
        _record(
            "stage-1 J1~ parallel",
            "inner tube of T(M) is Kaehler",
            report.stage1_parallel_residual,
            report.tolerance,
            binding=bind_parallel,
        ),
    ]
    for which, value in report.parallel_residuals.items():
        records.append(
            _record(
                f"stage-2 {which}~ parallel",
                "hyperKaehler inner tube",
                value,
                report.tolerance,
                binding=bind_parallel,
            )
        )
    off = _feet(fixtures, "nonstationary_feet")
    if off:
        away = build_hyper_stage(m, epsilon, samples=2, seed=cfg.seed, tol=report.tolerance, feet=off)
        records.append(
            CheckRecord(
                name="stage-2 J1~ parallel away from stationary feet",
                anchor="observation",
                value=away.parallel_residuals["J1"],
                tolerance=report.tolerance,
                passed=away.parallel_residuals["J1"] <= report.tolerance,
                binding=False,
            )
        )
    return records


# classify


def _class_records(report, expected: list[str] | None, prefix: str = "") -> list[CheckRecord]:
    records = [
        CheckRecord(
            name=f"{prefix}lattice consistency",
            anchor="membership is monotone in the class lattice",
            passed=report.lattice_consistent,
        )
    ]
    expected_set = set(expected) if expected is not None else None
    for label, entry in report.classes.items():
        if expected_set is None:
            passed, binding = True, False
        else:
            passed, binding = entry.member == (label in expected_set), True
        records.append(
            CheckRecord(
                name=f"{prefix}class {label}",
                anchor="member" if entry.member else "not a member",
                residual=entry.residual,
                tolerance=report.tolerance,
                passed=passed,
                binding=binding,
                detail=None if report.valid_dimension else "table stated for dimension >= 6",
            )
        )
    return records


def classify_suite(m: ChartManifold, cfg: SuiteConfig, fixtures: dict) -> list[CheckRecord]:
    report = gh_classify(m, points=cfg.samples, vectors=5, tol=cfg.tol, seed=cfg.seed)
    return _class_records(report, fixtures.get("expected_members"))


SUITE_RUNNERS: dict[str, Callable[[ChartManifold, SuiteConfig, dict], list[CheckRecord]]] = {
    "sasaki": sasaki_suite,
    "h-cases": h_cases_suite,
    "deformation": deformation_suite,
    "kaehler-tube": kaehler_tube_suite,
    "hyper": hyper_suite,
    "classify": classify_suite,
}


def _selected(m: ChartManifold, suite: str) -> list[str]:
    if suite != "all":
        return [suite]
    selected = ["sasaki", "h-cases"]
    if m.tube:
        selected.append("deformation")
    selected.append("kaehler-tube")
    if m.dim <= 2:
        selected.append("hyper")
    if m.acs is not None:
        selected.append("classify")
    return selected


def run_suite(config: SuiteConfig | None = None, **kwargs: Any) -> RunReport:
    """
    Run a named suite against a catalog manifold or manifest file.

    :param config: Full configuration; keyword arguments build one when omitted.
    :type config: SuiteConfig | None
    :return: Every check record with the overall verdict.
    :rtype: RunReport
    :raises ManifestError: If the manifold cannot be loaded.
    :raises UnknownSuite: If the suite id is not known.
    :raises InvariantViolation: If the manifold fails its own invariants.
    """
    try:
        cfg = config or SuiteConfig(**kwargs)
        started = time.perf_counter()
        m = load_manifold(cfg.manifold)
        fixtures = load_fixtures(m)
        records: list[CheckRecord] = []
        for suite in _selected(m, cfg.suite):
            if suite == "classify" and m.acs is None:
                raise MissingBaseACS(f"{m.name} carries no almost complex structure")
            logger.info("Running %s suite on %s", suite, m.name)
            records.extend(SUITE_RUNNERS[suite](m, cfg, fixtures))
        report = RunReport(
            suite=cfg.suite,
            manifold=m.name,
            records=records,
            wall_time=time.perf_counter() - started,
            engine_version=__version__,
            config=cfg,
            passed=all(r.passed for r in records if r.binding),
        )
        if not report.passed:
            logger.info(
                "%s/%s failed: %s", cfg.suite, m.name, [r.name for r in report.failures()]
            )
        if cfg.out:
            export_table(report, cfg.out, cfg.format)
        return report
    except ValidationError as ve:
        print(f"Invalid parameters or response data: {ve.errors()}", file=sys.stderr)
        raise
    except Exception as e:
        print(f"Operation failed: {type(e).__name__}", file=sys.stderr)
        raise
