#!/usr/bin/python
"""Riemannian geometry on a single coordinate chart.

Index storage order is fixed throughout the engine:

* metric derivatives ``dg[l, i, j] = d_l g_ij`` and ``ddg[a, b, i, j] = d_a d_b g_ij``
* Christoffel symbols ``gamma[k, i, j] = Gamma^k_ij``
* curvature ``R[l, k, i, j] = R^l_kij`` with
  ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``,
  so ``(R(X, Y)Z)^l = R[l, k, i, j] Z^k X^i Y^j``
* almost complex structures ``J[k, j] = J^k_j`` (column ``j`` is ``J d_j``) and
  ``dJ[l, k, j] = d_l J^k_j``
"""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import TYPE_CHECKING, Protocol, runtime_checkable

import numpy as np
from agent_utilities.base_utilities import get_logger
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.stats import qmc

from sasaki_tube_verify.exceptions import (
    ArityError,
    DomainExit,
    MissingBaseACS,
    OutsideDomain,
    SingularMetric,
)
from sasaki_tube_verify.scalar_expr import (
    ONE,
    ZERO,
    ExprProgram,
    ScalarExpr,
    add,
    const,
    coord,
    cos,
    differentiate,
    mul,
    neg,
    simplify,
    sin,
)
from sasaki_tube_verify.verification_models import FermiChartReport

if TYPE_CHECKING:
    from sasaki_tube_verify.tube_deformation import AdaptedTube

logger = get_logger(__name__)

Grid = tuple[tuple[ScalarExpr, ...], ...]


@runtime_checkable
class MetricJet(Protocol):
    """Anything that can report a metric and its first derivatives at a point."""

    dim: int

    def contains(self, x: Sequence[float]) -> bool: ...

    def metric_at(self, x: Sequence[float]) -> np.ndarray: ...

    def metric_derivatives_at(self, x: Sequence[float]) -> np.ndarray: ...

    def christoffel_at(self, x: Sequence[float]) -> np.ndarray: ...


@runtime_checkable
class HermitianJet(MetricJet, Protocol):
    """A metric jet that also carries an almost complex structure."""

    def acs_at(self, x: Sequence[float]) -> np.ndarray: ...

    def acs_derivatives_at(self, x: Sequence[float]) -> np.ndarray: ...


# Zero-aware symbolic helpers


def sx_mul(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if a.is_zero() or b.is_zero():
        return ZERO
    if a.is_one():
        return b
    if b.is_one():
        return a
    return mul(a, b)


def sx_add(terms: Sequence[ScalarExpr]) -> ScalarExpr:
    kept = [t for t in terms if not t.is_zero()]
    if not kept:
        return ZERO
    return simplify(add(*kept))


def sx_sub(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if b.is_zero():
        return a
    if a.is_zero():
        return simplify(neg(b))
    return simplify(add(a, neg(b)))


def sx_div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if a.is_zero():
        return ZERO
    if b.is_one():
        return a
    return simplify(a / b)


def sx_matmul(a: Sequence[Sequence[ScalarExpr]], b: Sequence[Sequence[ScalarExpr]]) -> Grid:
    rows, inner, cols = len(a), len(b), len(b[0])
    return tuple(
        tuple(sx_add([sx_mul(a[i][k], b[k][j]) for k in range(inner)]) for j in range(cols))
        for i in range(rows)
    )


def sx_transpose(a: Sequence[Sequence[ScalarExpr]]) -> Grid:
    return tuple(tuple(a[i][j] for i in range(len(a))) for j in range(len(a[0])))


def symbolic_inverse(grid: Sequence[Sequence[ScalarExpr]]) -> Grid:
    """Gauss-Jordan inverse without pivoting; valid for positive definite grids."""
    n = len(grid)
    work = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(grid)]
    for c in range(n):
        pivot = work[c][c]
        if pivot.is_zero():
            raise SingularMetric(f"Zero pivot in column {c} of symbolic inverse")
        work[c] = [sx_div(entry, pivot) for entry in work[c]]
        for r in range(n):
            if r == c or work[r][c].is_zero():
                continue
            factor = work[r][c]
            work[r] = [sx_sub(work[r][j], sx_mul(factor, work[c][j])) for j in range(2 * n)]
    return tuple(tuple(row[n:]) for row in work)


@lru_cache(maxsize=256)
def _grid_programs(grid: Grid) -> tuple[ExprProgram, ExprProgram, int, int]:
    rows, cols = len(grid), len(grid[0])
    dim = max((max(e.coords) + 1 for row in grid for e in row if e.coords), default=0)
    values = ExprProgram(e for row in grid for e in row)
    derivs = ExprProgram(
        differentiate(e, l) for l in range(dim) for row in grid for e in row
    )
    return values, derivs, rows, cols


def grid_jet(grid: Grid, x: Sequence[float], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Values and first partials ``[l, row, col]`` of an expression grid at ``x``."""
    values, derivs, rows, cols = _grid_programs(grid)
    value = values.run(x).reshape(rows, cols)
    used = len(derivs) // (rows * cols) if rows * cols else 0
    partial = np.zeros((dim, rows, cols))
    if used:
        partial[:used] = derivs.run(x).reshape(used, rows, cols)
    return value, partial


@dataclass(frozen=True, eq=False)
class ChartManifold:
    """A Riemannian manifold described by a single chart.

    Only the upper triangle of the metric is stored: ``metric_upper[i]`` holds
    the entries ``g_ij`` for ``j >= i``. The optional ``acs`` is a full grid with
    ``acs[k][j] = J^k_j``.
    """

    name: str
    dim: int
    coordinates: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    metric_upper: Grid
    acs: Grid | None = None
    description: str = ""
    tube: dict | None = field(default=None)
    # manifest file the chart was read from, if any
    source: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        n = self.dim
        if n < 1:
            raise ArityError(f"Dimension must be positive, got {n}")
        if len(self.coordinates) != n or len(self.domain) != n:
            raise ArityError(
                f"{self.name}: expected {n} coordinate names and domain intervals"
            )
        for lo, hi in self.domain:
            if not lo < hi:
                raise ArityError(f"{self.name}: empty domain interval ({lo}, {hi})")
        if len(self.metric_upper) != n or any(
            len(row) != n - i for i, row in enumerate(self.metric_upper)
        ):
            raise ArityError(f"{self.name}: metric must list the upper triangle rows")
        if self.acs is not None and (
            len(self.acs) != n or any(len(row) != n for row in self.acs)
        ):
            raise ArityError(f"{self.name}: acs must be a {n}x{n} grid")
        for e in self._all_expressions():
            if e.coords and max(e.coords) >= n:
                raise ArityError(
                    f"{self.name}: expression uses x{max(e.coords) + 1} beyond dimension {n}"
                )

    def _all_expressions(self):
        for row in self.metric_upper:
            yield from row
        if self.acs is not None:
            for row in self.acs:
                yield from row

    @property
    def has_acs(self) -> bool:
        return self.acs is not None

    @cached_property
    def metric_grid(self) -> Grid:
        n = self.dim
        return tuple(
            tuple(
                self.metric_upper[min(i, j)][abs(j - i)] for j in range(n)
            )
            for i in range(n)
        )

    @cached_property
    def _pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.dim) for j in range(i, self.dim)]

    @cached_property
    def _metric_program(self) -> ExprProgram:
        return ExprProgram(self.metric_upper[i][j - i] for i, j in self._pairs)

    @cached_property
    def _dmetric_program(self) -> ExprProgram:
        return ExprProgram(
            differentiate(self.metric_upper[i][j - i], l)
            for l in range(self.dim)
            for i, j in self._pairs
        )

    @cached_property
    def _ddmetric_program(self) -> ExprProgram:
        exprs = []
        for a in range(self.dim):
            for b in range(a, self.dim):
                for i, j in self._pairs:
                    exprs.append(
                        differentiate(differentiate(self.metric_upper[i][j - i], a), b)
                    )
        return ExprProgram(exprs)

    def _unpack_symmetric(self, flat: np.ndarray) -> np.ndarray:
        n = self.dim
        out = np.empty((n, n))
        for value, (i, j) in zip(flat, self._pairs, strict=True):
            out[i, j] = out[j, i] = value
        return out

    def contains(self, x: Sequence[float]) -> bool:
        if len(x) != self.dim:
            return False
        return all(lo < xi < hi for xi, (lo, hi) in zip(x, self.domain, strict=True))

    def require_point(self, x: Sequence[float]) -> np.ndarray:
        point = np.asarray(x, dtype=float)
        if point.shape != (self.dim,):
            raise ArityError(f"{self.name}: expected {self.dim} coordinates, got {point.shape}")
        if not self.contains(point):
            raise OutsideDomain(f"{self.name}: point {point.tolist()} outside domain box")
        return point

    def metric_at(self, x: Sequence[float]) -> np.ndarray:
        return self._unpack_symmetric(self._metric_program.run(self.require_point(x)))

    def metric_derivatives_at(self, x: Sequence[float]) -> np.ndarray:
        n = self.dim
        flat = self._dmetric_program.run(self.require_point(x)).reshape(n, -1)
        return np.stack([self._unpack_symmetric(row) for row in flat])

    def metric_second_derivatives_at(self, x: Sequence[float]) -> np.ndarray:
        n = self.dim
        flat = self._ddmetric_program.run(self.require_point(x))
        width = len(self._pairs)
        out = np.empty((n, n, n, n))
        offset = 0
        for a in range(n):
            for b in range(a, n):
                block = self._unpack_symmetric(flat[offset : offset + width])
                out[a, b] = out[b, a] = block
                offset += width
        return out

    def require_acs(self) -> Grid:
        if self.acs is None:
            raise MissingBaseACS(f"{self.name} carries no almost complex structure")
        return self.acs

    def acs_at(self, x: Sequence[float]) -> np.ndarray:
        value, _ = grid_jet(self.require_acs(), self.require_point(x), self.dim)
        return value

    def acs_derivatives_at(self, x: Sequence[float]) -> np.ndarray:
        _, partial = grid_jet(self.require_acs(), self.require_point(x), self.dim)
        return partial

    def christoffel_at(self, x: Sequence[float]) -> np.ndarray:
        return christoffel(self, x)

    @cached_property
    def inverse_metric_grid(self) -> Grid:
        return symbolic_inverse(self.metric_grid)

    @cached_property
    def christoffel_grid(self) -> tuple[Grid, ...]:
        """Symbolic ``Gamma^k_ij`` as ``christoffel_grid[k][i][j]``."""
        n = self.dim
        g = self.metric_grid
        dg = [[[differentiate(g[i][j], l) for j in range(n)] for i in range(n)] for l in range(n)]
        first = [
            [
                [
                    sx_mul(
                        const(0.5),
                        sx_sub(sx_add([dg[i][k][j], dg[j][i][k]]), dg[k][i][j]),
                    )
                    for j in range(n)
                ]
                for i in range(n)
            ]
            for k in range(n)
        ]
        ginv = self.inverse_metric_grid
        return tuple(
            tuple(
                tuple(
                    sx_add([sx_mul(ginv[k][m], first[m][i][j]) for m in range(n)])
                    for j in range(n)
                )
                for i in range(n)
            )
            for k in range(n)
        )

    def with_acs(self, acs: Grid | None, name: str | None = None) -> ChartManifold:
        return dataclasses.replace(self, acs=acs, name=name or self.name)


# Connection and curvature


def _cholesky(g: np.ndarray):
    try:
        return cho_factor(g, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise SingularMetric(f"Metric is not positive definite: {exc}") from exc


def first_kind_christoffel(dg: np.ndarray) -> np.ndarray:
    """``Gamma_{k,ij} = (d_i g_kj + d_j g_ik - d_k g_ij) / 2`` stored ``[k, i, j]``."""
    return 0.5 * (
        np.einsum("ikj->kij", dg) + np.einsum("jik->kij", dg) - dg
    )


def christoffel_from_jet(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    factor = _cholesky(g)
    rhs = first_kind_christoffel(dg).reshape(n, n * n)
    gamma = cho_solve(factor, rhs).reshape(n, n, n)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def christoffel_derivatives_from_jet(
    g: np.ndarray, dg: np.ndarray, ddg: np.ndarray, gamma: np.ndarray
) -> np.ndarray:
    """``dgamma[a, l, i, j] = d_a Gamma^l_ij`` from the second metric jet."""
    n = g.shape[0]
    d_first = 0.5 * (
        np.einsum("aimj->amij", ddg)
        + np.einsum("ajim->amij", ddg)
        - ddg
    )
    rhs = d_first - np.einsum("amp,pij->amij", dg, gamma)
    factor = _cholesky(g)
    solved = cho_solve(factor, rhs.transpose(1, 0, 2, 3).reshape(n, n**3))
    return solved.reshape(n, n, n, n).transpose(1, 0, 2, 3)


def curvature_from_christoffel(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """``R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik``."""
    return (
        np.einsum("iljk->lkij", dgamma)
        - np.einsum("jlik->lkij", dgamma)
        + np.einsum("lim,mjk->lkij", gamma, gamma)
        - np.einsum("ljm,mik->lkij", gamma, gamma)
    )


def christoffel(m: ChartManifold, p: Sequence[float]) -> np.ndarray:
    """Christoffel symbols of the second kind at ``p``.

    :param m: The chart.
    :type m: ChartManifold
    :param p: Point inside the domain box.
    :type p: Sequence[float]
    :return: Array ``gamma[k, i, j] = Gamma^k_ij``.
    :rtype: numpy.ndarray
    :raises SingularMetric: If the metric is not positive definite at ``p``.
    """
    return christoffel_from_jet(m.metric_at(p), m.metric_derivatives_at(p))


def curvature(m: ChartManifold, p: Sequence[float]) -> np.ndarray:
    """Riemann tensor ``R[l, k, i, j]`` at ``p``."""
    g = m.metric_at(p)
    dg = m.metric_derivatives_at(p)
    gamma = christoffel_from_jet(g, dg)
    dgamma = christoffel_derivatives_from_jet(g, dg, m.metric_second_derivatives_at(p), gamma)
    return curvature_from_christoffel(gamma, dgamma)


def curvature_operator(
    riemann: np.ndarray, x: np.ndarray, y: np.ndarray, z: np.ndarray
) -> np.ndarray:
    """``R(X, Y)Z`` for a curvature array in engine storage order."""
    return np.einsum("lkij,k,i,j->l", riemann, z, x, y)


def sectional_curvature(
    m: ChartManifold, p: Sequence[float], x: Sequence[float], y: Sequence[float]
) -> float:
    g = m.metric_at(p)
    x, y = np.asarray(x, float), np.asarray(y, float)
    r_xyy = curvature_operator(curvature(m, p), x, y, y)
    area = (x @ g @ x) * (y @ g @ y) - (x @ g @ y) ** 2
    return float(r_xyy @ g @ x / area)


def covariant_derivative_arrays(
    gamma: np.ndarray, t: np.ndarray, dt: np.ndarray, valence: tuple[int, int]
) -> np.ndarray:
    """Covariant derivative of a (1,1) or (0,2) tensor from its values and partials.

    The result is indexed with the derivative direction first: for (1,1)
    ``D[i, k, j] = (nabla_i T)^k_j``; for (0,2) ``D[i, j, k] = (nabla_i T)_jk``.
    """
    if valence == (1, 1):
        return (
            dt
            + np.einsum("kil,lj->ikj", gamma, t)
            - np.einsum("lij,kl->ikj", gamma, t)
        )
    if valence == (0, 2):
        return (
            dt
            - np.einsum("lij,lk->ijk", gamma, t)
            - np.einsum("lik,jl->ijk", gamma, t)
        )
    raise ArityError(f"Unsupported valence {valence}; expected (1, 1) or (0, 2)")


def covariant_derivative(
    m: MetricJet,
    t: Grid,
    p: Sequence[float],
    valence: tuple[int, int] = (1, 1),
) -> np.ndarray:
    """Covariant derivative of the expression tensor field ``t`` at ``p``.

    For (1,1) fields this is the index expansion
    ``d_i T^k_j + Gamma^k_il T^l_j - Gamma^l_ij T^k_l``.
    """
    point = np.asarray(p, dtype=float)
    value, partial = grid_jet(t, point, m.dim)
    return covariant_derivative_arrays(m.christoffel_at(point), value, partial, valence)


def metric_covariant_derivative(m: MetricJet, p: Sequence[float]) -> np.ndarray:
    return covariant_derivative_arrays(
        m.christoffel_at(p), m.metric_at(p), m.metric_derivatives_at(p), (0, 2)
    )


def acs_covariant_derivative(m: HermitianJet, p: Sequence[float]) -> np.ndarray:
    """``D[i, k, j] = (nabla_i J)^k_j``."""
    return covariant_derivative_arrays(
        m.christoffel_at(p), m.acs_at(p), m.acs_derivatives_at(p), (1, 1)
    )


# Geodesics


@dataclass(frozen=True)
class GeodesicPath:
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    truncated: bool = False

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]

    def speed_drift(self, m: MetricJet) -> float:
        speeds = [v @ m.metric_at(x) @ v for x, v in zip(self.points, self.velocities, strict=True)]
        return float(max(abs(s - speeds[0]) for s in speeds))


def integrate_geodesic(
    m: MetricJet,
    p: Sequence[float],
    v: Sequence[float],
    duration: float,
    steps: int = 256,
    strict: bool = False,
) -> GeodesicPath:
    """Classical fourth-order Runge-Kutta integration of the geodesic equation.

    :param m: Any metric jet (a chart or a deformed structure).
    :type m: MetricJet
    :param p: Initial point.
    :type p: Sequence[float]
    :param v: Initial velocity in coordinates.
    :type v: Sequence[float]
    :param duration: Total parameter time.
    :type duration: float
    :param steps: Number of uniform steps, at least 16.
    :type steps: int
    :param strict: Raise :class:`DomainExit` instead of returning a truncated path.
    :type strict: bool
    :return: Sampled path; ``truncated`` is set when the domain box was left.
    :rtype: GeodesicPath
    """
    if steps < 16:
        raise ArityError(f"Geodesic integration needs at least 16 steps, got {steps}")
    x = np.asarray(p, dtype=float)
    u = np.asarray(v, dtype=float)
    if x.shape != (m.dim,) or u.shape != (m.dim,):
        raise ArityError(f"Point and velocity must have {m.dim} components")
    if not m.contains(x):
        raise OutsideDomain(f"Geodesic start {x.tolist()} outside domain")
    h = duration / steps

    def accel(pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
        if not m.contains(pos):
            raise OutsideDomain(f"stage point {pos.tolist()} outside domain")
        return -np.einsum("kij,i,j->k", m.christoffel_at(pos), vel, vel)

    times, points, velocities = [0.0], [x.copy()], [u.copy()]
    truncated = False
    for step in range(steps):
        try:
            k1x, k1v = u, accel(x, u)
            k2x, k2v = u + 0.5 * h * k1v, accel(x + 0.5 * h * k1x, u + 0.5 * h * k1v)
            k3x, k3v = u + 0.5 * h * k2v, accel(x + 0.5 * h * k2x, u + 0.5 * h * k2v)
            k4x, k4v = u + h * k3v, accel(x + h * k3x, u + h * k3v)
        except OutsideDomain:
            truncated = True
            break
        x_next = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        u = u + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        x = x_next
        if not m.contains(x):
            truncated = True
            break
        times.append((step + 1) * h)
        points.append(x.copy())
        velocities.append(u.copy())
    path = GeodesicPath(np.array(times), np.array(points), np.array(velocities), truncated)
    if truncated:
        logger.warning("Geodesic left the domain after t=%.6g", times[-1])
        if strict:
            raise DomainExit(f"Geodesic left the domain after t={times[-1]:.6g}", path)
    return path


# Frames and sampling


@dataclass(frozen=True)
class FramedPoint:
    point: np.ndarray
    frame: np.ndarray

    def gram_residual(self, metric: np.ndarray) -> float:
        gram = self.frame.T @ metric @ self.frame
        return float(np.max(np.abs(gram - np.eye(len(gram)))))


def orthonormal_frame(m: MetricJet, p: Sequence[float]) -> FramedPoint:
    """Gram-Schmidt of the coordinate basis against ``g_p`` in coordinate order.

    The result is upper triangular, equal to the inverse transpose of the
    lower Cholesky factor of ``g_p``.
    """
    point = np.asarray(p, dtype=float)
    g = m.metric_at(point)
    try:
        lower = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(f"Metric is not positive definite at {point.tolist()}") from exc
    inverse = solve_triangular(lower, np.eye(len(g)), lower=True)
    return FramedPoint(point, inverse.T)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def random_orthonormal_frame(
    m: MetricJet, p: Sequence[float], rng: np.random.Generator
) -> FramedPoint:
    base = orthonormal_frame(m, p)
    return FramedPoint(base.point, base.frame @ random_rotation(m.dim, rng))


def sample_box(
    domain: Sequence[tuple[float, float]],
    count: int,
    seed: int = 0,
    margin: float = 0.05,
) -> np.ndarray:
    """Seeded scrambled Halton samples in the box shrunk by ``margin`` per side."""
    lo = np.array([a for a, _ in domain], dtype=float)
    hi = np.array([b for _, b in domain], dtype=float)
    width = hi - lo
    unit = qmc.Halton(d=len(domain), scramble=True, seed=seed).random(count)
    return lo + margin * width + unit * (1.0 - 2.0 * margin) * width


def probe_points(
    m: ChartManifold, count: int = 100, seed: int = 0, margin: float = 0.05
) -> np.ndarray:
    return sample_box(m.domain, count, seed, margin)


def check_manifold_invariants(
    m: ChartManifold, points: np.ndarray | None = None, tol: float = 1e-10
) -> list[str]:
    """Return violations of the chart's type invariants at probe points."""
    points = probe_points(m, 20) if points is None else points
    violations: list[str] = []
    for x in points:
        g = m.metric_at(x)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            violations.append(f"metric not positive definite at {x.tolist()}")
            continue
        if m.acs is None:
            continue
        j = m.acs_at(x)
        square = np.max(np.abs(j @ j + np.eye(m.dim)))
        if square > tol:
            violations.append(f"J^2 + I residual {square:.3e} at {x.tolist()}")
        isometry = np.max(np.abs(j.T @ g @ j - g))
        if isometry > tol:
            violations.append(f"g(JX, JY) - g(X, Y) residual {isometry:.3e} at {x.tolist()}")
    return violations


# Structure builders


def _plane_rotation(n: int, i: int, j: int, angle: ScalarExpr) -> Grid:
    rows = [[ONE if a == b else ZERO for b in range(n)] for a in range(n)]
    c, s = cos(angle), sin(angle)
    rows[i][i] = c
    rows[j][j] = c
    rows[i][j] = simplify(neg(s))
    rows[j][i] = s
    return tuple(tuple(r) for r in rows)


def conjugated_structure(
    base: ChartManifold,
    planes: Sequence[tuple[int, int]],
    coefficients: Sequence[Sequence[float]],
    name: str | None = None,
) -> ChartManifold:
    """Rotate the constant structure of a flat chart by coordinate-dependent rotations.

    The result is ``Q(x) J Q(x)^T`` where ``Q`` is the ordered product of plane
    rotations, the rotation in ``planes[r]`` having angle
    ``sum_j coefficients[r][j] * x_j``. ``base`` must have the identity metric
    so that ``Q`` stays orthogonal for it.
    """
    j0 = base.require_acs()
    if len(planes) != len(coefficients):
        raise ArityError("Each rotation plane needs one coefficient row")
    n = base.dim
    q: Grid = tuple(tuple(ONE if a == b else ZERO for b in range(n)) for a in range(n))
    for (i, j), row in zip(planes, coefficients, strict=True):
        if len(row) != n:
            raise ArityError(f"Coefficient rows must have {n} entries")
        angle = sx_add([sx_mul(const(c), coord(k)) for k, c in enumerate(row) if c != 0.0])
        q = sx_matmul(q, _plane_rotation(n, i, j, angle))
    acs = sx_matmul(sx_matmul(q, j0), sx_transpose(q))
    return dataclasses.replace(
        base,
        name=name or f"{base.name}_rotated",
        acs=acs,
        description=f"{base.name} with its complex structure conjugated by plane rotations",
        tube=None,
    )


# Adapted chart check


def _transverse_block(m: MetricJet, foot: np.ndarray, k: int) -> np.ndarray:
    return m.metric_at(foot)[k:, k:]


def verify_fermi_chart(
    m: ChartManifold,
    tube: AdaptedTube,
    samples: int = 8,
    t_max: float | None = None,
    steps: int = 64,
    tol: float = 1e-5,
    seed: int = 0,
) -> FermiChartReport:
    """Check that transverse coordinate rays are unit-speed geodesics.

    For sampled foot points ``p`` on the submanifold and unit transverse
    directions ``xi`` (unit in the foot-point metric), the geodesic from ``p``
    with velocity ``xi`` is integrated and compared against ``p + t xi``.
    """
    k = tube.tangential
    t_max = tube.epsilon if t_max is None else t_max
    rng = np.random.default_rng(seed)
    tangential_box = m.domain[:k]
    feet = sample_box(tangential_box, samples, seed=seed, margin=0.1)
    center = np.asarray(tube.center, dtype=float)
    worst = 0.0
    truncated = 0
    failures: list[str] = []
    for tangential in feet:
        foot = np.concatenate([tangential, center])
        block = _transverse_block(m, foot, k)
        directions = [np.eye(m.dim - k)[a] * s for a in range(m.dim - k) for s in (1.0, -1.0)]
        if m.dim - k > 1:
            directions.extend(rng.standard_normal(m.dim - k) for _ in range(2))
        for raw in directions:
            xi = raw / np.sqrt(raw @ block @ raw)
            velocity = np.concatenate([np.zeros(k), xi])
            path = integrate_geodesic(m, foot, velocity, t_max, steps)
            ray = foot + np.outer(path.times, velocity)
            deviation = float(np.max(np.abs(path.points - ray)))
            if path.truncated:
                truncated += 1
                failures.append(f"geodesic from {foot.tolist()} left the domain")
            if deviation > worst:
                worst = deviation
            if deviation > tol:
                failures.append(
                    f"deviation {deviation:.3e} from {foot.tolist()} along {xi.tolist()}"
                )
    passed = worst <= tol and truncated == 0
    if not passed:
        logger.info("%s: chart is not adapted to the tube (max deviation %.3e)", m.name, worst)
    return FermiChartReport(
        manifold=m.name,
        tangential=k,
        samples=len(feet),
        t_max=t_max,
        max_deviation=worst,
        tolerance=tol,
        truncated=truncated,
        passed=passed,
        failures=failures[:20],
    )
