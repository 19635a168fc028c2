#!/usr/bin/python
"""The Sasaki metric, lifts, connection map and the structures J1, J2, J3 on TM.

Bundle points are ``U = (x^1..x^n, v^1..v^n)`` with fiber coordinates taken
against the coordinate frame of the base. With ``N^k_i = Gamma^k_ij v^j`` the
horizontal lift of ``d_i`` is ``d/dx^i - N^k_i d/dv^k`` and the vertical lift is
``d/dv^i``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from agent_utilities.base_utilities import get_logger

from sasaki_tube_verify.chart_geometry import (
    ChartManifold,
    Grid,
    christoffel,
    curvature,
    curvature_operator,
    orthonormal_frame,
    sx_add,
    sx_matmul,
    sx_mul,
)
from sasaki_tube_verify.exceptions import ArityError, MissingBaseACS
from sasaki_tube_verify.scalar_expr import (
    ONE,
    ZERO,
    ExprProgram,
    ScalarExpr,
    coord,
    differentiate,
    neg,
    simplify,
)
from sasaki_tube_verify.verification_models import BracketReport

logger = get_logger(__name__)

VectorField = tuple[ScalarExpr, ...]


class LiftKind(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True, eq=False)
class BundleChart:
    """The induced chart on TM together with its base."""

    base: ChartManifold
    chart: ChartManifold
    fiber_bound: float
    _structures: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.base.dim

    def split(self, u: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        point = np.asarray(u, dtype=float)
        if point.shape != (2 * self.n,):
            raise ArityError(f"Bundle points have {2 * self.n} coordinates, got {point.shape}")
        return point[: self.n], point[self.n :]


def _fiber(n: int) -> list[ScalarExpr]:
    return [coord(n + j) for j in range(n)]


def _nonlinear_connection(base: ChartManifold) -> list[list[ScalarExpr]]:
    """``N[k][i] = Gamma^k_ij v^j`` as expressions in bundle coordinates."""
    n = base.dim
    gamma = base.christoffel_grid
    v = _fiber(n)
    return [
        [sx_add([sx_mul(gamma[k][i][j], v[j]) for j in range(n)]) for i in range(n)]
        for k in range(n)
    ]


def build_sasaki(base: ChartManifold, fiber_bound: float = 1.0) -> BundleChart:
    """Build the Sasaki metric on the induced chart of TM.

    :param base: Base chart of dimension ``n``.
    :type base: ChartManifold
    :param fiber_bound: Half-width of the fiber box ``|v|_inf <= fiber_bound``.
    :type fiber_bound: float
    :return: The bundle chart of dimension ``2n``.
    :rtype: BundleChart
    """
    n = base.dim
    g = base.metric_grid
    big_n = _nonlinear_connection(base)
    # lowered[l][i] = g_lk N^k_i
    lowered = [
        [sx_add([sx_mul(g[l][k], big_n[k][i]) for k in range(n)]) for i in range(n)]
        for l in range(n)
    ]

    def entry(a: int, b: int) -> ScalarExpr:
        if a < n and b < n:
            return sx_add(
                [g[a][b]] + [sx_mul(lowered[l][a], big_n[l][b]) for l in range(n)]
            )
        if a < n:
            return lowered[b - n][a]
        return g[a - n][b - n]

    upper = tuple(tuple(entry(a, b) for b in range(a, 2 * n)) for a in range(2 * n))
    chart = ChartManifold(
        name=f"T({base.name})",
        dim=2 * n,
        coordinates=tuple(base.coordinates) + tuple(f"v{j + 1}" for j in range(n)),
        domain=tuple(base.domain) + tuple((-fiber_bound, fiber_bound) for _ in range(n)),
        metric_upper=upper,
        description=f"Sasaki metric on the tangent bundle of {base.name}",
    )
    logger.debug("Built Sasaki chart over %s", base.name)
    return BundleChart(base=base, chart=chart, fiber_bound=fiber_bound)


def connection_map(b: BundleChart, u: Sequence[float], w: Sequence[float]) -> np.ndarray:
    """``K(W)^k = W_v^k + Gamma^k_ij(x) W_x^i v^j``."""
    x, v = b.split(u)
    w = np.asarray(w, dtype=float)
    return w[b.n :] + np.einsum("kij,i,j->k", christoffel(b.base, x), w[: b.n], v)


def pi_star(b: BundleChart, w: Sequence[float]) -> np.ndarray:
    return np.asarray(w, dtype=float)[: b.n]


def lift(
    b: BundleChart, u: Sequence[float], x_vec: Sequence[float], kind: LiftKind | str
) -> np.ndarray:
    """Horizontal ``(X, -Gamma(X, v))`` or vertical ``(0, X)`` lift at ``u``."""
    x, v = b.split(u)
    vec = np.asarray(x_vec, dtype=float)
    if LiftKind(kind) is LiftKind.VERTICAL:
        return np.concatenate([np.zeros(b.n), vec])
    return np.concatenate([vec, -np.einsum("kij,i,j->k", christoffel(b.base, x), vec, v)])


@dataclass(frozen=True)
class LiftFrame:
    point: np.ndarray
    base_frame: np.ndarray
    horizontal: np.ndarray
    vertical: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.hstack([self.horizontal, self.vertical])

    def gram_residual(self, metric: np.ndarray) -> float:
        m = self.matrix()
        return float(np.max(np.abs(m.T @ metric @ m - np.eye(m.shape[1]))))


def lift_frame(
    b: BundleChart, u: Sequence[float], frame: np.ndarray | None = None
) -> LiftFrame:
    x, _ = b.split(u)
    base_frame = orthonormal_frame(b.base, x).frame if frame is None else np.asarray(frame)
    horizontal = np.column_stack([lift(b, u, e, LiftKind.HORIZONTAL) for e in base_frame.T])
    vertical = np.column_stack([lift(b, u, e, LiftKind.VERTICAL) for e in base_frame.T])
    return LiftFrame(np.asarray(u, dtype=float), base_frame, horizontal, vertical)


def sasaki_reconstruction_residual(
    b: BundleChart, u: Sequence[float], w1: Sequence[float], w2: Sequence[float]
) -> float:
    """``|g_hat(W1, W2) - g(pi W1, pi W2) - g(K W1, K W2)|``."""
    x, _ = b.split(u)
    g = b.base.metric_at(x)
    w1, w2 = np.asarray(w1, float), np.asarray(w2, float)
    lhs = w1 @ b.chart.metric_at(u) @ w2
    rhs = pi_star(b, w1) @ g @ pi_star(b, w2) + connection_map(b, u, w1) @ g @ connection_map(
        b, u, w2
    )
    return float(abs(lhs - rhs))


# Almost complex structures


@dataclass(frozen=True)
class BundleStructures:
    j1: Grid
    j2: Grid | None = None
    j3: Grid | None = None

    def get(self, which: str) -> Grid:
        grid = {"J1": self.j1, "J2": self.j2, "J3": self.j3}[which]
        if grid is None:
            raise MissingBaseACS(f"{which} needs an almost complex structure on the base")
        return grid


def _block(top_left, top_right, bottom_left, bottom_right) -> Grid:
    rows = [list(a) + list(b) for a, b in zip(top_left, top_right, strict=True)]
    rows += [list(a) + list(b) for a, b in zip(bottom_left, bottom_right, strict=True)]
    return tuple(tuple(r) for r in rows)


def _identity(n: int) -> Grid:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def _zeros(n: int) -> Grid:
    return tuple(tuple(ZERO for _ in range(n)) for _ in range(n))


def _negated(grid: Grid) -> Grid:
    return tuple(tuple(simplify(neg(e)) if not e.is_zero() else ZERO for e in row) for row in grid)


def build_bundle_acs(
    b: BundleChart, base_acs: Grid | None = None, require_base_acs: bool = False
) -> BundleStructures:
    """J1, J2 and J3 in the coordinate basis of the bundle chart.

    In the lift basis ``(h_1..h_n, v_1..v_n)`` the structures are the constant
    blocks ``J1 = [[0, -I], [I, 0]]``, ``J2 = diag(J, -J)`` and ``J3 = J1 J2``;
    they are carried to coordinates by ``P = [[I, 0], [-N, I]]``.
    """
    cached = b._structures.get("acs")
    if cached is not None and base_acs is None:
        if require_base_acs and cached.j2 is None:
            raise MissingBaseACS(f"{b.base.name} carries no almost complex structure")
        return cached
    n = b.n
    base_acs = base_acs if base_acs is not None else b.base.acs
    if base_acs is None and require_base_acs:
        raise MissingBaseACS(f"{b.base.name} carries no almost complex structure")
    big_n = _nonlinear_connection(b.base)
    eye, zero = _identity(n), _zeros(n)
    n_grid = tuple(tuple(row) for row in big_n)
    p = _block(eye, zero, _negated(n_grid), eye)
    p_inv = _block(eye, zero, n_grid, eye)

    def to_coordinates(block: Grid) -> Grid:
        return sx_matmul(sx_matmul(p, block), p_inv)

    j1_block = _block(zero, _negated(eye), eye, zero)
    j1 = to_coordinates(j1_block)
    j2 = j3 = None
    if base_acs is not None:
        j2_block = _block(base_acs, zero, zero, _negated(base_acs))
        j2 = to_coordinates(j2_block)
        j3 = to_coordinates(sx_matmul(j1_block, j2_block))
    structures = BundleStructures(j1, j2, j3)
    if base_acs is b.base.acs:
        b._structures["acs"] = structures
    return structures


def bundle_with_acs(b: BundleChart, which: str = "J1") -> ChartManifold:
    """The bundle chart carrying ``J1``, ``J2`` or ``J3`` as its structure."""
    key = f"chart:{which}"
    if key not in b._structures:
        grid = build_bundle_acs(b).get(which)
        b._structures[key] = b.chart.with_acs(grid, name=f"{b.chart.name}[{which}]")
    return b._structures[key]


# Lift vector fields and brackets


def horizontal_lift_field(b: BundleChart, x_field: VectorField) -> VectorField:
    n = b.n
    gamma = b.base.christoffel_grid
    v = _fiber(n)
    vertical = [
        simplify(
            neg(
                sx_add(
                    [
                        sx_mul(sx_mul(gamma[k][i][j], x_field[i]), v[j])
                        for i in range(n)
                        for j in range(n)
                    ]
                )
            )
        )
        for k in range(n)
    ]
    return tuple(x_field) + tuple(vertical)


def vertical_lift_field(b: BundleChart, x_field: VectorField) -> VectorField:
    return tuple(ZERO for _ in range(b.n)) + tuple(x_field)


def vector_field_bracket(a: VectorField, c: VectorField) -> VectorField:
    """Lie bracket ``[A, C]^k = A^j d_j C^k - C^j d_j A^k``."""
    dim = len(a)
    return tuple(
        sx_add(
            [sx_mul(a[j], differentiate(c[k], j)) for j in range(dim)]
            + [simplify(neg(sx_mul(c[j], differentiate(a[k], j)))) for j in range(dim)]
        )
        for k in range(dim)
    )


def evaluate_field(field_: VectorField, p: Sequence[float]) -> np.ndarray:
    return ExprProgram(field_).run(p)


def bracket_curvature_operator(
    base: ChartManifold,
    x: Sequence[float],
    a: Sequence[float],
    c: Sequence[float],
    z: Sequence[float],
) -> np.ndarray:
    """Curvature operator in the sign of the horizontal bracket identity.

    ``K[A^h, C^h]`` at ``U`` equals this operator applied to ``(A, C, U)``;
    it is the negative of :func:`curvature_operator` in the engine convention.
    """
    return -curvature_operator(
        curvature(base, x), np.asarray(a, float), np.asarray(c, float), np.asarray(z, float)
    )


def check_bracket_identities(
    b: BundleChart,
    x_field: VectorField,
    y_field: VectorField,
    u: Sequence[float],
    tol: float = 1e-6,
) -> BracketReport:
    """Compare the brackets of lift fields against their closed forms at ``u``.

    The covariant derivative in ``[X^h, Y^v] = (nabla_X Y)^v`` is taken at the
    foot point ``pi(U)``.
    """
    n = b.n
    point = np.asarray(u, dtype=float)
    x, v = b.split(point)
    xh, yh = horizontal_lift_field(b, x_field), horizontal_lift_field(b, y_field)
    xv, yv = vertical_lift_field(b, x_field), vertical_lift_field(b, y_field)

    vv = evaluate_field(vector_field_bracket(xv, yv), point)

    x_val = evaluate_field(x_field, x)
    y_val = evaluate_field(y_field, x)
    dy = np.array([[evaluate_field((differentiate(y_field[k], i),), x)[0] for k in range(n)] for i in range(n)])
    nabla_xy = x_val @ dy + np.einsum("kij,i,j->k", christoffel(b.base, x), x_val, y_val)
    hv = evaluate_field(vector_field_bracket(xh, yv), point) - np.concatenate(
        [np.zeros(n), nabla_xy]
    )

    hh = evaluate_field(vector_field_bracket(xh, yh), point)
    base_bracket = evaluate_field(vector_field_bracket(tuple(x_field), tuple(y_field)), x)
    projection = pi_star(b, hh) - base_bracket
    curvature_part = connection_map(b, point, hh) - bracket_curvature_operator(
        b.base, x, x_val, y_val, v
    )
    return BracketReport(
        point=point.tolist(),
        vertical_vertical=float(np.max(np.abs(vv))),
        horizontal_vertical=float(np.max(np.abs(hv))),
        horizontal_projection=float(np.max(np.abs(projection))),
        horizontal_curvature=float(np.max(np.abs(curvature_part))),
        tolerance=tol,
    )


def coordinate_field(n: int, i: int) -> VectorField:
    """The coordinate field ``d_i`` as constant expressions."""
    return tuple(ONE if k == i else ZERO for k in range(n))
