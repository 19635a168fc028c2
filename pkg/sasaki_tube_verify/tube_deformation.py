#!/usr/bin/python
"""Tensor deformation on an adapted tube and the verifiers built on it.

A tube is described in a chart whose first ``k`` coordinates run along the
submanifold and whose remaining coordinates are transverse, the submanifold
being ``{x_k.. = center}``. A point ``x`` decomposes into its foot point, the
radius ``t`` (transverse block measured with the foot-point metric) and a unit
direction. A deformed field takes at ``x`` the source components at the
retracted point ``foot + rho(t) * direction``:

* inner disk ``t <= eps/2``: ``rho = 0``, components frozen at the foot point
* annulus ``eps/2 < t < eps``: ``rho = 2t - eps``
* exterior ``t >= eps``: the source field itself
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from agent_utilities.base_utilities import get_logger

from sasaki_tube_verify.chart_geometry import (
    ChartManifold,
    Grid,
    acs_covariant_derivative,
    christoffel_from_jet,
    curvature,
    curvature_from_christoffel,
    integrate_geodesic,
    sample_box,
    verify_fermi_chart,
)
from sasaki_tube_verify.exceptions import (
    ArityError,
    BoundaryGuardViolation,
    EmptyInnerTube,
    ManifestError,
    MissingBaseACS,
    OutsideDomain,
)
from sasaki_tube_verify.scalar_expr import ExprProgram, grid_program, substitute
from sasaki_tube_verify.tangent_bundle import (
    BundleChart,
    build_bundle_acs,
    build_sasaki,
    bundle_with_acs,
)
from sasaki_tube_verify.verification_models import (
    ContinuityReport,
    FermiChartReport,
    FlatInnerReport,
    HyperStageReport,
    ParallelReport,
    TotallyGeodesicReport,
)

logger = get_logger(__name__)


class RegionTag(str, Enum):
    INNER_DISK = "inner_disk"
    ANNULUS = "annulus"
    EXTERIOR = "exterior"
    BOUNDARY_GUARD = "boundary_guard"


OPEN_REGIONS = (RegionTag.INNER_DISK, RegionTag.ANNULUS, RegionTag.EXTERIOR)


@dataclass(frozen=True, eq=False)
class AdaptedTube:
    """A constant-radius tube around ``{x_k.. = center}`` in an adapted chart.

    :param ambient: The chart carrying the tube.
    :param tangential: Number ``k`` of coordinates along the submanifold.
    :param epsilon: Tube radius.
    :param center: Transverse coordinates of the submanifold.
    :param guard_fraction: Width of the guard shells, as a fraction of ``epsilon``.
    :param step_fraction: Finite-difference step, as a fraction of ``epsilon``.
    """

    ambient: ChartManifold
    tangential: int
    epsilon: float
    center: tuple[float, ...] = ()
    guard_fraction: float = 1e-3
    step_fraction: float = 1e-4

    def __post_init__(self) -> None:
        n, k = self.ambient.dim, self.tangential
        if not 0 < k < n:
            raise ArityError(f"Tangential count must be in 1..{n - 1}, got {k}")
        if self.epsilon <= 0:
            raise ArityError(f"Tube radius must be positive, got {self.epsilon}")
        if not self.center:
            object.__setattr__(self, "center", tuple(0.0 for _ in range(n - k)))
        if len(self.center) != n - k:
            raise ArityError(f"Tube center needs {n - k} transverse coordinates")
        for c, (lo, hi) in zip(self.center, self.ambient.domain[k:], strict=True):
            if c - self.epsilon < lo or c + self.epsilon > hi:
                raise OutsideDomain(
                    f"Tube of radius {self.epsilon} around {c} leaves the interval ({lo}, {hi})"
                )

    @classmethod
    def from_manifold(cls, m: ChartManifold, epsilon: float | None = None) -> AdaptedTube:
        """The tube declared in the manifest of ``m``, optionally with another radius."""
        if not m.tube:
            raise ManifestError(f"{m.name} declares no tube")
        return cls(
            ambient=m,
            tangential=int(m.tube["tangential"]),
            epsilon=float(epsilon if epsilon is not None else m.tube["epsilon"]),
            center=tuple(float(c) for c in m.tube.get("center", ())),
        )

    @property
    def transverse(self) -> int:
        return self.ambient.dim - self.tangential

    @property
    def guard(self) -> float:
        return self.guard_fraction * self.epsilon

    @property
    def step(self) -> float:
        return self.step_fraction * self.epsilon

    def foot(self, x: Sequence[float]) -> np.ndarray:
        return np.concatenate([np.asarray(x, float)[: self.tangential], self.center])

    def transverse_metric(self, foot: np.ndarray) -> np.ndarray:
        k = self.tangential
        return self.ambient.metric_at(foot)[k:, k:]


@dataclass(frozen=True)
class RadialPoint:
    point: np.ndarray
    foot: np.ndarray
    t: float
    direction: np.ndarray
    region: RegionTag
    tag: RegionTag


def radial_profile(t: float, epsilon: float) -> float:
    """Retraction radius: 0 on the inner disk, ``2t - eps`` on the annulus, ``t`` outside."""
    if t <= epsilon / 2.0:
        return 0.0
    if t < epsilon:
        return 2.0 * t - epsilon
    return t


def _region(t: float, epsilon: float) -> RegionTag:
    if t <= epsilon / 2.0:
        return RegionTag.INNER_DISK
    if t < epsilon:
        return RegionTag.ANNULUS
    return RegionTag.EXTERIOR


def radial_decompose(tube: AdaptedTube, x: Sequence[float]) -> RadialPoint:
    point = tube.ambient.require_point(x)
    foot = tube.foot(point)
    offset = point[tube.tangential :] - np.asarray(tube.center)
    t = float(np.sqrt(max(offset @ tube.transverse_metric(foot) @ offset, 0.0)))
    direction = offset / t if t > 0.0 else np.zeros_like(offset)
    region = _region(t, tube.epsilon)
    guarded = min(abs(t - tube.epsilon / 2.0), abs(t - tube.epsilon)) < tube.guard
    tag = RegionTag.BOUNDARY_GUARD if guarded else region
    return RadialPoint(point, foot, t, direction, region, tag)


def _retracted(tube: AdaptedTube, rp: RadialPoint, region: RegionTag) -> np.ndarray:
    if region is RegionTag.INNER_DISK:
        return rp.foot
    if region is RegionTag.EXTERIOR:
        return rp.point
    out = rp.foot.copy()
    out[tube.tangential :] += (2.0 * rp.t - tube.epsilon) * rp.direction
    return out


def retract(tube: AdaptedTube, x: Sequence[float]) -> np.ndarray:
    """The point ``foot + rho(t) * direction`` whose source values ``x`` takes."""
    rp = radial_decompose(tube, x)
    return _retracted(tube, rp, rp.region)


@dataclass(frozen=True, eq=False)
class PiecewiseField:
    """A tensor field deformed on a tube, evaluated region by region."""

    source: Grid
    tube: AdaptedTube
    valence: tuple[int, int] = (0, 2)

    @cached_property
    def _program(self) -> ExprProgram:
        return grid_program(self.source)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.source), len(self.source[0])

    def source_at(self, y: Sequence[float]) -> np.ndarray:
        return self._program.run(y).reshape(self.shape)

    def value_in(self, x: Sequence[float], region: RegionTag) -> np.ndarray:
        """Value of the formula of ``region`` at ``x``, whatever region ``x`` is in."""
        return self.source_at(_retracted(self.tube, radial_decompose(self.tube, x), region))

    def evaluate(self, x: Sequence[float]) -> tuple[np.ndarray, RegionTag]:
        rp = radial_decompose(self.tube, x)
        return self.source_at(_retracted(self.tube, rp, rp.region)), rp.tag

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return self.evaluate(x)[0]

    def derivative(self, x: Sequence[float]) -> np.ndarray:
        """Central differences ``[l, row, col]`` with stencils kept inside one region.

        :raises BoundaryGuardViolation: If ``x`` lies in a guard shell or a stencil
            point falls into another region.
        """
        rp = radial_decompose(self.tube, x)
        if rp.tag is RegionTag.BOUNDARY_GUARD:
            raise BoundaryGuardViolation(
                f"t={rp.t:.6g} is within {self.tube.guard:.1e} of a region interface"
            )
        h = self.tube.step
        dim = len(rp.point)
        out = np.empty((dim,) + self.shape)
        for l in range(dim):
            shift = np.zeros(dim)
            shift[l] = h
            sides = []
            for point in (rp.point + shift, rp.point - shift):
                side = radial_decompose(self.tube, point)
                if side.region is not rp.region:
                    raise BoundaryGuardViolation(
                        f"Difference stencil at {rp.point.tolist()} crosses into {side.region.value}"
                    )
                sides.append(self.source_at(_retracted(self.tube, side, side.region)))
            out[l] = (sides[0] - sides[1]) / (2.0 * h)
        return out


def deform_field(
    field_grid: Grid, tube: AdaptedTube, valence: tuple[int, int] = (0, 2)
) -> PiecewiseField:
    return PiecewiseField(source=field_grid, tube=tube, valence=valence)


def deformed_christoffel(pf: PiecewiseField, x: Sequence[float]) -> np.ndarray:
    """Christoffel symbols of a deformed metric from region-aware differences."""
    return christoffel_from_jet(pf(x), pf.derivative(x))


def deformed_curvature(pf: PiecewiseField, x: Sequence[float]) -> np.ndarray:
    """``R[l, k, i, j]`` of a deformed metric, differencing the deformed Christoffels."""
    point = np.asarray(x, dtype=float)
    region = radial_decompose(pf.tube, point).region
    gamma = deformed_christoffel(pf, point)
    h = pf.tube.step
    dgamma = np.empty((len(point),) + gamma.shape)
    for a in range(len(point)):
        shift = np.zeros(len(point))
        shift[a] = h
        for side in (point + shift, point - shift):
            if radial_decompose(pf.tube, side).region is not region:
                raise BoundaryGuardViolation(
                    f"Curvature stencil at {point.tolist()} crosses a region interface"
                )
        dgamma[a] = (
            deformed_christoffel(pf, point + shift) - deformed_christoffel(pf, point - shift)
        ) / (2.0 * h)
    return curvature_from_christoffel(gamma, dgamma)


@dataclass(frozen=True, eq=False)
class DeformedStructure:
    """A deformed metric, optionally with a deformed almost complex structure,
    exposed through the same jet interface as a chart."""

    metric: PiecewiseField
    acs: PiecewiseField | None = None
    name: str = "deformed"

    @property
    def dim(self) -> int:
        return self.metric.tube.ambient.dim

    @property
    def domain(self) -> tuple[tuple[float, float], ...]:
        return self.metric.tube.ambient.domain

    def contains(self, x: Sequence[float]) -> bool:
        return self.metric.tube.ambient.contains(x)

    def tag_at(self, x: Sequence[float]) -> RegionTag:
        return radial_decompose(self.metric.tube, x).tag

    def metric_at(self, x: Sequence[float]) -> np.ndarray:
        return self.metric(x)

    def metric_derivatives_at(self, x: Sequence[float]) -> np.ndarray:
        return self.metric.derivative(x)

    def christoffel_at(self, x: Sequence[float]) -> np.ndarray:
        return deformed_christoffel(self.metric, x)

    def _require_acs(self) -> PiecewiseField:
        if self.acs is None:
            raise MissingBaseACS(f"{self.name} carries no almost complex structure")
        return self.acs

    def acs_at(self, x: Sequence[float]) -> np.ndarray:
        return self._require_acs()(x)

    def acs_derivatives_at(self, x: Sequence[float]) -> np.ndarray:
        return self._require_acs().derivative(x)


# Sampling


def sample_region(
    tube: AdaptedTube,
    region: RegionTag | str,
    count: int,
    seed: int = 0,
    feet: Sequence[Sequence[float]] | None = None,
    margin: float = 0.1,
    max_tries: int | None = None,
) -> np.ndarray:
    """Seeded points of one open region, kept clear of the guard shells.

    Tangential coordinates come from ``feet`` when given (cycled), otherwise
    from a Halton sample of the tangential box. Radii are drawn uniformly in
    the region's radius range shrunk by two guard widths.
    """
    region = RegionTag(region)
    if region not in OPEN_REGIONS:
        raise ArityError("Sampling targets an open region, not the guard shells")
    rng = np.random.default_rng(seed)
    eps, pad = tube.epsilon, 2.0 * tube.guard
    radii = {
        RegionTag.INNER_DISK: (0.0, eps / 2.0 - pad),
        RegionTag.ANNULUS: (eps / 2.0 + pad, eps - pad),
        RegionTag.EXTERIOR: (eps + pad, 1.5 * eps),
    }[region]
    max_tries = max_tries or 20 * count
    if feet is None:
        tangential = sample_box(tube.ambient.domain[: tube.tangential], max_tries, seed, margin)
    else:
        feet = [np.asarray(f, dtype=float)[: tube.tangential] for f in feet]
        tangential = np.array([feet[i % len(feet)] for i in range(max_tries)])
    points: list[np.ndarray] = []
    for attempt in range(max_tries):
        if len(points) == count:
            break
        foot = np.concatenate([tangential[attempt], tube.center])
        if not tube.ambient.contains(foot):
            continue
        raw = rng.standard_normal(tube.transverse)
        direction = raw / np.sqrt(raw @ tube.transverse_metric(foot) @ raw)
        t = rng.uniform(*radii)
        candidate = foot.copy()
        candidate[tube.tangential :] += t * direction
        if not tube.ambient.contains(candidate):
            continue
        if radial_decompose(tube, candidate).tag is region:
            points.append(candidate)
    if len(points) < count:
        logger.warning(
            "Found %d of %d sample points in region %s", len(points), count, region.value
        )
    return np.array(points).reshape(len(points), tube.ambient.dim)


def interface_continuity(
    pf: PiecewiseField, samples: int = 8, seed: int = 0, tol: float = 1e-8
) -> ContinuityReport:
    """Compare the formulas of adjacent regions at points on both interfaces."""
    tube = pf.tube
    rng = np.random.default_rng(seed)
    feet = sample_box(tube.ambient.domain[: tube.tangential], samples, seed, 0.1)
    worst = {"inner": 0.0, "outer": 0.0}
    pairs = {
        "inner": (tube.epsilon / 2.0, RegionTag.INNER_DISK, RegionTag.ANNULUS),
        "outer": (tube.epsilon, RegionTag.ANNULUS, RegionTag.EXTERIOR),
    }
    for tangential in feet:
        foot = np.concatenate([tangential, tube.center])
        raw = rng.standard_normal(tube.transverse)
        direction = raw / np.sqrt(raw @ tube.transverse_metric(foot) @ raw)
        for key, (radius, left, right) in pairs.items():
            x = foot.copy()
            x[tube.tangential :] += radius * direction
            if not tube.ambient.contains(x):
                continue
            gap = float(np.max(np.abs(pf.value_in(x, left) - pf.value_in(x, right))))
            worst[key] = max(worst[key], gap)
    return ContinuityReport(
        samples=len(feet),
        inner_interface=worst["inner"],
        outer_interface=worst["outer"],
        tolerance=tol,
        passed=max(worst.values()) <= tol,
    )


# Tube verifiers


def verify_totally_geodesic(
    pf: PiecewiseField,
    samples: int = 4,
    tol: float = 1e-6,
    drift_tol: float = 1e-6,
    duration: float = 1.0,
    steps: int = 256,
    seed: int = 0,
) -> TotallyGeodesicReport:
    """Check that the submanifold is totally geodesic for the deformed metric.

    The algebraic check bounds the transverse Christoffel symbols
    ``Gamma^l_ij`` (``i, j`` tangential, ``l`` transverse) at submanifold points;
    the dynamic check launches deformed geodesics tangent to the submanifold
    and records their largest transverse drift.
    """
    tube = pf.tube
    k = tube.tangential
    structure = DeformedStructure(pf, name="totally-geodesic")
    rng = np.random.default_rng(seed)
    feet = sample_box(tube.ambient.domain[:k], samples, seed, 0.25)
    algebraic, drift, launches, truncated = 0.0, 0.0, 0, 0
    for tangential in feet:
        foot = np.concatenate([tangential, tube.center])
        gamma = deformed_christoffel(pf, foot)
        algebraic = max(algebraic, float(np.max(np.abs(gamma[k:, :k, :k]))))
        g = pf(foot)
        directions = [np.eye(k)[i] for i in range(k)]
        if k > 1:
            directions.append(rng.standard_normal(k))
        for raw in directions:
            velocity = np.concatenate([raw, np.zeros(tube.transverse)])
            velocity /= np.sqrt(velocity @ g @ velocity)
            path = integrate_geodesic(structure, foot, velocity, duration, steps)
            launches += 1
            truncated += int(path.truncated)
            offset = path.points[:, k:] - np.asarray(tube.center)
            drift = max(drift, float(np.max(np.abs(offset))))
            logger.debug("Launch from %s: drift %.3e", foot.tolist(), drift)
    return TotallyGeodesicReport(
        algebraic_samples=len(feet),
        algebraic_residual=algebraic,
        algebraic_tolerance=tol,
        launches=launches,
        drift=drift,
        drift_tolerance=drift_tol,
        truncated=truncated,
        passed=algebraic <= tol and drift <= drift_tol,
    )


def _block_label(indices: tuple[int, ...], k: int) -> str:
    return "".join("T" if i < k else "N" for i in indices)


def verify_flat_inner(
    pf: PiecewiseField,
    samples: int = 6,
    tol: float = 1e-6,
    seed: int = 0,
    points: np.ndarray | None = None,
) -> FlatInnerReport:
    """Largest deformed curvature component on inner-disk samples, per index block."""
    tube = pf.tube
    if points is None:
        points = sample_region(tube, RegionTag.INNER_DISK, samples, seed)
    if len(points) == 0:
        raise EmptyInnerTube("No inner-disk sample points")
    dim, k = tube.ambient.dim, tube.tangential
    blocks: dict[str, float] = {}
    for x in points:
        r = np.abs(deformed_curvature(pf, x))
        for idx in np.ndindex(*r.shape):
            label = _block_label(idx, k)
            blocks[label] = max(blocks.get(label, 0.0), float(r[idx]))
    transverse = blocks.get("N" * 4, 0.0)
    worst = max(blocks.values())
    logger.debug("Inner curvature blocks over %d points of dim %d: %s", len(points), dim, blocks)
    return FlatInnerReport(
        samples=len(points),
        max_residual=worst,
        transverse_residual=transverse,
        blocks=dict(sorted(blocks.items())),
        tolerance=tol,
        passed=worst <= tol,
        transverse_passed=transverse <= tol,
    )


@dataclass(frozen=True)
class ExteriorControl:
    samples: int
    max_residual: float
    sectional: list[float] = field(default_factory=list)


def exterior_curvature_control(
    pf: PiecewiseField, samples: int = 4, seed: int = 0
) -> ExteriorControl:
    """Deformed against source curvature at exterior points.

    ``sectional`` holds the sectional curvature of the first two coordinate
    directions at each sample, computed from the deformed metric.
    """
    tube = pf.tube
    points = sample_region(tube, RegionTag.EXTERIOR, samples, seed)
    worst, sectional = 0.0, []
    for x in points:
        deformed = deformed_curvature(pf, x)
        worst = max(worst, float(np.max(np.abs(deformed - curvature(tube.ambient, x)))))
        g = pf(x)
        e0, e1 = np.eye(len(x))[0], np.eye(len(x))[1]
        r_xyy = np.einsum("lkij,k,i,j->l", deformed, e1, e0, e1)
        area = g[0, 0] * g[1, 1] - g[0, 1] ** 2
        sectional.append(float(r_xyy @ g @ e0 / area))
    return ExteriorControl(samples=len(points), max_residual=worst, sectional=sectional)


def verify_parallel_J(
    metric: PiecewiseField,
    acs: PiecewiseField,
    samples: int = 6,
    region: RegionTag | str = RegionTag.INNER_DISK,
    tol: float = 1e-5,
    seed: int = 0,
    points: np.ndarray | None = None,
    structure: str = "J",
) -> ParallelReport:
    """Largest component of ``nabla J`` for the deformed pair over one region."""
    region = RegionTag(region)
    if points is None:
        points = sample_region(metric.tube, region, samples, seed)
    if len(points) == 0:
        raise EmptyInnerTube(f"No sample points in region {region.value}")
    pair = DeformedStructure(metric, acs, name=structure)
    worst = 0.0
    for x in points:
        worst = max(worst, float(np.max(np.abs(acs_covariant_derivative(pair, x)))))
    return ParallelReport(
        structure=structure,
        region=region.value,
        samples=len(points),
        max_residual=worst,
        tolerance=tol,
        passed=worst <= tol,
        points=[list(map(float, x)) for x in points],
    )


# Kaehler tube on the null section of TM


@dataclass(frozen=True, eq=False)
class KaehlerTube:
    """The deformed Sasaki metric and structures on a tube around the null section."""

    bundle: BundleChart
    tube: AdaptedTube
    metric: PiecewiseField
    structures: dict[str, PiecewiseField]

    def deformed(self, which: str = "J1") -> DeformedStructure:
        return DeformedStructure(
            self.metric, self.structures[which], name=f"{self.bundle.chart.name}[{which}]~"
        )

    def source(self, which: str = "J1") -> ChartManifold:
        return bundle_with_acs(self.bundle, which)

    def fermi_check(self, samples: int = 4, seed: int = 0, tol: float = 1e-5) -> FermiChartReport:
        return verify_fermi_chart(self.bundle.chart, self.tube, samples=samples, tol=tol, seed=seed)

    def inner_chart(self, which: str = "J1", name: str | None = None) -> ChartManifold:
        """The inner-disk pair as a smooth chart of dimension ``2n``.

        Components on the inner disk are the source components at ``v = 0``;
        the export substitutes the fiber coordinates accordingly.
        """
        n = self.bundle.n
        zero_fiber = {n + j: 0.0 for j in range(n)}
        upper = tuple(
            tuple(substitute(e, zero_fiber) for e in row) for row in self.bundle.chart.metric_upper
        )
        acs = tuple(
            tuple(substitute(e, zero_fiber) for e in row) for row in self.structures[which].source
        )
        half = self.tube.epsilon / 2.0
        base = self.bundle.base
        return ChartManifold(
            name=name or f"{base.name}_inner",
            dim=2 * n,
            coordinates=self.bundle.chart.coordinates,
            domain=tuple(base.domain) + tuple((-half, half) for _ in range(n)),
            metric_upper=upper,
            acs=acs,
            description=f"Inner Kaehler tube of T({base.name}) with {which}",
        )


def build_kaehler_tube(
    base: ChartManifold,
    epsilon: float = 0.4,
    fiber_bound: float | None = None,
    guard_fraction: float = 1e-3,
    step_fraction: float = 1e-4,
) -> KaehlerTube:
    """Deform the Sasaki metric and J1 (and J2, J3 when the base has J) on the
    tube ``{|v|_g <= epsilon}`` around the null section of ``T(base)``.

    :param base: Base chart.
    :type base: ChartManifold
    :param epsilon: Tube radius in the base metric.
    :type epsilon: float
    :param fiber_bound: Half-width of the fiber box; defaults to ``3 * epsilon``.
    :type fiber_bound: float | None
    :return: The bundle, its tube and the deformed fields.
    :rtype: KaehlerTube
    """
    bundle = build_sasaki(base, fiber_bound=fiber_bound or 3.0 * epsilon)
    tube = AdaptedTube(
        ambient=bundle.chart,
        tangential=base.dim,
        epsilon=epsilon,
        guard_fraction=guard_fraction,
        step_fraction=step_fraction,
    )
    acs = build_bundle_acs(bundle)
    structures = {"J1": deform_field(acs.j1, tube, (1, 1))}
    if acs.j2 is not None:
        structures["J2"] = deform_field(acs.j2, tube, (1, 1))
        structures["J3"] = deform_field(acs.j3, tube, (1, 1))
    logger.info("Built Kaehler tube over %s with epsilon=%s", base.name, epsilon)
    return KaehlerTube(
        bundle=bundle,
        tube=tube,
        metric=deform_field(bundle.chart.metric_grid, tube, (0, 2)),
        structures=structures,
    )


def quaternion_residual(j1: np.ndarray, j2: np.ndarray, j3: np.ndarray, g: np.ndarray) -> float:
    """Largest defect of ``Ja^2 = -I``, ``J1 J2 = J3 = -J2 J1`` and ``Ja^T g Ja = g``."""
    eye = np.eye(len(g))
    defects = [j @ j + eye for j in (j1, j2, j3)]
    defects += [j1 @ j2 - j3, j2 @ j1 + j3]
    defects += [j.T @ g @ j - g for j in (j1, j2, j3)]
    return max(float(np.max(np.abs(d))) for d in defects)


def build_hyper_stage(
    base: ChartManifold,
    epsilon: float = 0.4,
    samples: int = 4,
    seed: int = 0,
    tol: float = 1e-4,
    quaternion_tol: float = 1e-8,
    feet: Sequence[Sequence[float]] | None = None,
) -> HyperStageReport:
    """Iterate the Kaehler tube: export the inner tube of ``T(base)`` as a chart
    and deform ``J1, J2, J3`` of its own tangent bundle.

    ``feet`` are base points; stage-2 samples are taken in the inner tube over
    stage-1 points lying above them.

    :raises EmptyInnerTube: If no stage-2 inner-disk sample point is found.
    """
    stage1 = build_kaehler_tube(base, epsilon)
    export = stage1.inner_chart()
    stage2 = build_kaehler_tube(export, epsilon / 2.0)
    stage2_feet = None
    if feet is not None:
        rng = np.random.default_rng(seed)
        half = epsilon / 4.0
        stage2_feet = [
            np.concatenate([np.asarray(f, float), rng.uniform(-half, half, base.dim)])
            for f in feet
        ]
    points = sample_region(stage2.tube, RegionTag.INNER_DISK, samples, seed, feet=stage2_feet)
    if len(points) == 0:
        raise EmptyInnerTube(f"No stage-2 inner-disk points over {base.name}")
    stage1_points = sample_region(
        stage1.tube,
        RegionTag.INNER_DISK,
        samples,
        seed,
        feet=None if feet is None else [np.asarray(f, float) for f in feet],
    )
    stage1_report = verify_parallel_J(
        stage1.metric, stage1.structures["J1"], points=stage1_points, tol=tol, structure="J1"
    )
    quaternion = 0.0
    for x in points:
        quaternion = max(
            quaternion,
            quaternion_residual(
                stage2.structures["J1"](x),
                stage2.structures["J2"](x),
                stage2.structures["J3"](x),
                stage2.metric(x),
            ),
        )
    parallel = {
        which: verify_parallel_J(
            stage2.metric, stage2.structures[which], points=points, tol=tol, structure=which
        ).max_residual
        for which in ("J1", "J2", "J3")
    }
    passed = (
        quaternion <= quaternion_tol
        and stage1_report.passed
        and all(value <= tol for value in parallel.values())
    )
    logger.info("Hyper stage over %s: quaternion %.2e, parallel %s", base.name, quaternion, parallel)
    return HyperStageReport(
        base=base.name,
        stage1_dimension=export.dim,
        stage2_dimension=stage2.bundle.chart.dim,
        samples=len(points),
        quaternion_residual=quaternion,
        stage1_parallel_residual=stage1_report.max_residual,
        parallel_residuals=parallel,
        tolerance=tol,
        quaternion_tolerance=quaternion_tol,
        passed=passed,
    )
