#!/usr/bin/python
"""The tensor h of an almost Hermitian pair, its closed forms on TM, and the
Gray-Hervella classifier.

``h(X, Y, Z) = 1/2 g(J (nabla_X J) Y, Z)`` throughout. Two evaluation paths are
kept side by side: path ``"A"`` expands ``1/2 (g(nabla_X Y, Z) - g(nabla_X JY, JZ))``
for constant-coefficient extensions of the vectors, path ``"B"`` uses the
covariant derivative of ``J`` directly.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from agent_utilities.base_utilities import get_logger

from sasaki_tube_verify.chart_geometry import (
    ChartManifold,
    HermitianJet,
    acs_covariant_derivative,
    orthonormal_frame,
    random_orthonormal_frame,
    sample_box,
)
from sasaki_tube_verify.exceptions import BadCase, MissingBaseACS, NotOrthonormal
from sasaki_tube_verify.tangent_bundle import (
    BundleChart,
    LiftKind,
    bracket_curvature_operator,
    bundle_with_acs,
    lift,
)
from sasaki_tube_verify.verification_models import GHClassEntry, GHClassReport

logger = get_logger(__name__)

GRAM_TOL = 1e-8

# Lift kinds of (X, Y, Z) per case, h = horizontal, v = vertical.
CASE_TRIPLES: dict[int, str] = {
    1: "hhh",
    2: "hhv",
    3: "hvh",
    4: "vhh",
    5: "vvv",
    6: "vvh",
    7: "vhv",
    8: "hvv",
}


def _require_acs(m: HermitianJet) -> None:
    if isinstance(m, ChartManifold):
        m.require_acs()


def _check_orthonormal(
    g: np.ndarray, vectors: Sequence[np.ndarray], tol: float = GRAM_TOL
) -> None:
    distinct: list[np.ndarray] = []
    for vec in vectors:
        if not any(np.allclose(vec, seen, rtol=0.0, atol=1e-12) for seen in distinct):
            distinct.append(vec)
    frame = np.column_stack(distinct)
    residual = float(np.max(np.abs(frame.T @ g @ frame - np.eye(len(distinct)))))
    if residual > tol:
        raise NotOrthonormal(
            f"Vectors are not orthonormal (Gram residual {residual:.3e} > {tol:.0e})"
        )


def h_tensor_array(m: HermitianJet, p: Sequence[float], path: str = "B") -> np.ndarray:
    """``T[i, j, k] = h(d_i, d_j, d_k)`` at ``p`` in chart coordinates.

    :param m: A chart with an almost complex structure, or any Hermitian jet.
    :type m: HermitianJet
    :param p: Point in the domain.
    :type p: Sequence[float]
    :param path: ``"A"`` for the two covariant derivative form, ``"B"`` for ``nabla J``.
    :type path: str
    :return: The h tensor in the coordinate basis.
    :rtype: numpy.ndarray
    """
    _require_acs(m)
    point = np.asarray(p, dtype=float)
    g = m.metric_at(point)
    j = m.acs_at(point)
    if path == "A":
        gamma = m.christoffel_at(point)
        dj = m.acs_derivatives_at(point)
        first = np.einsum("lij,lk->ijk", gamma, g)
        nabla_j = dj.transpose(0, 2, 1) + np.einsum("lim,mj->ijl", gamma, j)
        second = np.einsum("ijl,ls,sk->ijk", nabla_j, g, j)
        return 0.5 * (first - second)
    if path == "B":
        d = acs_covariant_derivative(m, point)
        return 0.5 * np.einsum("sk,ikj,st->ijt", j, d, g)
    raise ValueError(f"Unknown evaluation path {path!r}; expected 'A' or 'B'")


def second_fundamental_tensor(
    m: HermitianJet,
    p: Sequence[float],
    x: Sequence[float],
    y: Sequence[float],
    z: Sequence[float],
    path: str = "B",
    check: bool = True,
) -> float:
    """``h(X, Y, Z)`` for orthonormal ``X, Y, Z`` at ``p``.

    Repeated vectors are allowed; orthonormality is checked on the distinct ones.

    :raises NotOrthonormal: If the distinct vectors fail the Gram check.
    :raises MissingBaseACS: If ``m`` carries no almost complex structure.
    """
    vectors = [np.asarray(v, dtype=float) for v in (x, y, z)]
    if check:
        _check_orthonormal(m.metric_at(p), vectors)
    tensor = h_tensor_array(m, p, path)
    return float(np.einsum("ijk,i,j,k->", tensor, *vectors))


def frame_tensor(tensor: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Components ``H[a, b, c] = T(e_a, e_b, e_c)`` against the columns of ``frame``."""
    return np.einsum("ijk,ia,jb,kc->abc", tensor, frame, frame, frame)


# The one-form beta


def kaehler_form_codifferential(
    m: HermitianJet, p: Sequence[float], frame: np.ndarray | None = None
) -> np.ndarray:
    """``delta Phi(W) = -sum_a g((nabla_{e_a} J) e_a, W)`` as a covector.

    ``frame`` defaults to the Gram-Schmidt frame at ``p``; any orthonormal
    frame gives the same result.
    """
    _require_acs(m)
    point = np.asarray(p, dtype=float)
    e = orthonormal_frame(m, point).frame if frame is None else np.asarray(frame)
    d = acs_covariant_derivative(m, point)
    trace = np.einsum("ikj,ia,ja->k", d, e, e)
    return -(m.metric_at(point) @ trace)


def beta_form(
    m: HermitianJet, p: Sequence[float], frame: np.ndarray | None = None
) -> np.ndarray:
    """Covector ``beta_j`` with ``2 beta(X) = delta Phi(JX)``."""
    point = np.asarray(p, dtype=float)
    return 0.5 * kaehler_form_codifferential(m, point, frame) @ m.acs_at(point)


def beta(
    m: HermitianJet,
    p: Sequence[float],
    x: Sequence[float],
    frame: np.ndarray | None = None,
) -> float:
    return float(beta_form(m, p, frame) @ np.asarray(x, dtype=float))


# Closed forms on the tangent bundle


def _case(case: int) -> str:
    if case not in CASE_TRIPLES:
        raise BadCase(f"Case must be one of 1..8, got {case!r}")
    return CASE_TRIPLES[case]


def _foot_data(b: BundleChart, u: Sequence[float], vectors):
    x, v = b.split(u)
    g = b.base.metric_at(x)
    vecs = [np.asarray(w, dtype=float) for w in vectors]
    _check_orthonormal(g, vecs)
    return x, v, g, vecs


def _rg(b: BundleChart, x, g, v):
    """``(A, C, D) -> g(R_flat(A, C) D, U)`` at the foot point."""

    def term(a, c, d) -> float:
        return float(bracket_curvature_operator(b.base, x, a, c, d) @ g @ v)

    return term


def h1_closed_form(
    case: int,
    b: BundleChart,
    u: Sequence[float],
    x: Sequence[float],
    y: Sequence[float],
    z: Sequence[float],
) -> float:
    """Closed form of ``h`` for ``(J1, g_hat)`` on the lifts named by ``case``.

    ``R_flat`` below is the curvature operator returned by
    :func:`bracket_curvature_operator`.

    :raises BadCase: If ``case`` is not in 1..8.
    """
    _case(case)
    foot, fiber, g, (xv, yv, zv) = _foot_data(b, u, (x, y, z))
    r = _rg(b, foot, g, fiber)
    if case in (1, 6, 7, 8):
        return 0.0
    if case == 2:
        return -0.25 * (r(xv, yv, zv) + r(zv, xv, yv))
    if case == 3:
        return -0.25 * (r(zv, xv, yv) + r(xv, yv, zv))
    if case == 4:
        return -0.25 * r(zv, yv, xv)
    return 0.25 * r(zv, yv, xv)


def h2_closed_form(
    case: int,
    b: BundleChart,
    u: Sequence[float],
    x: Sequence[float],
    y: Sequence[float],
    z: Sequence[float],
    base: ChartManifold | None = None,
    printed: bool = False,
) -> float:
    """Closed form of ``h`` for ``(J2, g_hat)`` on the lifts named by ``case``.

    ``base`` overrides the almost Hermitian base (defaults to ``b.base``).
    Case 3 returns ``+1/4 (g(R_flat(X, Z)Y, U) + g(R_flat(X, JZ)JY, U))``; with
    ``printed=True`` it returns the negative of that, as the table prints it.

    :raises BadCase: If ``case`` is not in 1..8.
    :raises MissingBaseACS: If the base carries no almost complex structure.
    """
    _case(case)
    base = b.base if base is None else base
    if base.acs is None:
        raise MissingBaseACS(f"{base.name} carries no almost complex structure")
    foot, fiber, g, (xv, yv, zv) = _foot_data(b, u, (x, y, z))
    if case in (5, 6, 7):
        return 0.0
    if case in (1, 8):
        return second_fundamental_tensor(base, foot, xv, yv, zv, check=False)
    j = base.acs_at(foot)
    r = _rg(b, foot, g, fiber)
    if case == 2:
        return -0.25 * (r(xv, yv, zv) + r(xv, j @ yv, j @ zv))
    if case == 3:
        value = 0.25 * (r(xv, zv, yv) + r(xv, j @ zv, j @ yv))
        return -value if printed else value
    return -0.25 * (r(zv, yv, xv) - r(j @ zv, j @ yv, xv))


def case_lifts(
    b: BundleChart,
    u: Sequence[float],
    case: int,
    x: Sequence[float],
    y: Sequence[float],
    z: Sequence[float],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kinds = _case(case)
    return tuple(
        lift(b, u, vec, LiftKind.HORIZONTAL if kind == "h" else LiftKind.VERTICAL)
        for kind, vec in zip(kinds, (x, y, z), strict=True)
    )


def bundle_h_direct(
    b: BundleChart,
    which: str,
    u: Sequence[float],
    w1: Sequence[float],
    w2: Sequence[float],
    w3: Sequence[float],
    path: str = "B",
) -> float:
    """``h`` of ``(J_which, g_hat)`` computed on the bundle chart itself."""
    return second_fundamental_tensor(bundle_with_acs(b, which), u, w1, w2, w3, path=path)


# Gray-Hervella classes


@dataclass(frozen=True)
class GHClass:
    label: str
    components: frozenset[int]
    condition: str


def _gh(label: str, components: tuple[int, ...], condition: str) -> GHClass:
    return GHClass(label, frozenset(components), condition)


GH_CLASSES: tuple[GHClass, ...] = (
    _gh("K", (), "h = 0"),
    _gh("U1", (1,), "h(X, X, Z) = 0"),
    _gh("U2", (2,), "cyclic sum of h(X, Y, Z) = 0"),
    _gh("U3", (3,), "h(X, Y, Z) - h(JX, JY, Z) = beta = 0"),
    _gh("U4", (4,), "h = c [<X,Y>b(Z) - <X,Z>b(Y) - <X,JY>b(JZ) + <X,JZ>b(JY)]"),
    _gh("QK", (1, 2), "h(X, Y, JZ) = h(JX, Y, Z)"),
    _gh("H", (3, 4), "h(X, Y, JZ) = -h(JX, Y, Z)"),
    _gh("U1+U3", (1, 3), "h(X, X, Y) - h(JX, JX, Y) = beta = 0"),
    _gh("U2+U4", (2, 4), "cyclic sum of h(X, Y, JZ) + 2c <JX, Y> b(Z) = 0"),
    _gh("U1+U4", (1, 4), "h(X, X, Y) = -c [<X,Y>b(X) - |X|^2 b(Y) - <X,JY>b(JX)]"),
    _gh("U2+U3", (2, 3), "cyclic sum of h(X, Y, JZ) + h(JX, Y, Z) = beta = 0"),
    _gh("SK", (1, 2, 3), "beta = 0"),
    _gh(
        "U1+U2+U4",
        (1, 2, 4),
        "h(X,Y,JZ) - h(JX,Y,Z) = 2c [<X,Y>b(JZ) - <X,Z>b(JY) + <X,JY>b(Z) - <X,JZ>b(Y)]",
    ),
    _gh("U1+U3+U4", (1, 3, 4), "h(X, JX, Y) + h(JX, X, Y) = 0"),
    _gh("U2+U3+U4", (2, 3, 4), "cyclic sum of h(X, Y, JZ) + h(JX, Y, Z) = 0"),
    _gh("U", (1, 2, 3, 4), "no condition"),
)

GH_BY_LABEL: dict[str, GHClass] = {c.label: c for c in GH_CLASSES}


def contains(outer: str, inner: str) -> bool:
    """Whether class ``inner`` is contained in class ``outer``."""
    return GH_BY_LABEL[inner].components <= GH_BY_LABEL[outer].components


def _cyclic(t: np.ndarray) -> np.ndarray:
    return t + t.transpose(1, 2, 0) + t.transpose(2, 0, 1)


def _polarized(t: np.ndarray) -> np.ndarray:
    return t + t.transpose(1, 0, 2)


def _max(*arrays: np.ndarray) -> float:
    return max((float(np.max(np.abs(a))) if np.size(a) else 0.0) for a in arrays)


def gh_residuals(
    h: np.ndarray, jf: np.ndarray, b: np.ndarray, table_n: float
) -> dict[str, float]:
    """Residual of every class condition for one orthonormal frame.

    ``h[a, b, c]`` is the tensor in the frame, ``jf[a, b] = g(e_a, J e_b)`` and
    ``b[a] = beta(e_a)``. Conditions quadratic in ``X`` are polarized.
    """
    dim = len(b)
    delta = np.eye(dim)
    c = 1.0 / (2.0 * (table_n - 1.0)) if table_n > 1 else 0.0
    bj = jf.T @ b
    h_jz = np.einsum("abd,dc->abc", h, jf)
    h_jx = np.einsum("dbc,da->abc", h, jf)
    h_jy = np.einsum("adc,db->abc", h, jf)
    h_jxjy = np.einsum("dec,da,eb->abc", h, jf, jf)
    # <JX, Y> = g(J e_a, e_b)
    omega_jx_y = jf.T

    u4 = h - c * (
        np.einsum("ab,c->abc", delta, b)
        - np.einsum("ac,b->abc", delta, b)
        - np.einsum("ab,c->abc", jf, bj)
        + np.einsum("ac,b->abc", jf, bj)
    )
    u1u4 = h + c * (
        np.einsum("ac,b->abc", delta, b)
        - np.einsum("ab,c->abc", delta, b)
        - np.einsum("ac,b->abc", jf, bj)
    )
    u1u2u4 = h_jz - h_jx - 2.0 * c * (
        np.einsum("ab,c->abc", delta, bj)
        - np.einsum("ac,b->abc", delta, bj)
        + np.einsum("ab,c->abc", jf, b)
        - np.einsum("ac,b->abc", jf, b)
    )
    u2u4_coefficient = 2.0 * c
    return {
        "K": _max(h),
        "U1": _max(_polarized(h)),
        "U2": _max(_cyclic(h)),
        "U3": _max(h - h_jxjy, b),
        "U4": _max(u4),
        "QK": _max(h_jz - h_jx),
        "H": _max(h_jz + h_jx),
        "U1+U3": _max(_polarized(h - h_jxjy), b),
        "U2+U4": _max(
            _cyclic(h_jz + u2u4_coefficient * np.einsum("ab,c->abc", omega_jx_y, b))
        ),
        "U1+U4": _max(_polarized(u1u4)),
        "U2+U3": _max(_cyclic(h_jz + h_jx), b),
        "SK": _max(b),
        "U1+U2+U4": _max(u1u2u4),
        "U1+U3+U4": _max(_polarized(h_jy + h_jx)),
        "U2+U3+U4": _max(_cyclic(h_jz + h_jx)),
        "U": 0.0,
    }


def lattice_violations(members: dict[str, bool]) -> list[str]:
    """Pairs where a class is a member but a class containing it is not."""
    return [
        f"{inner} holds but {outer} fails"
        for inner, inner_member in members.items()
        if inner_member
        for outer, outer_member in members.items()
        if not outer_member and contains(outer, inner)
    ]


def gh_classify(
    m: HermitianJet,
    points: int = 20,
    vectors: int = 10,
    tol: float = 1e-6,
    seed: int = 0,
    table_n: float | None = None,
    sample_points: np.ndarray | None = None,
    name: str | None = None,
) -> GHClassReport:
    """Sample every row of the classification table on random orthonormal frames.

    :param m: Any Hermitian jet with a ``domain`` box, or explicit ``sample_points``.
    :type m: HermitianJet
    :param points: Number of sample points drawn from the domain box.
    :type points: int
    :param vectors: Number of random orthonormal frames per point.
    :type vectors: int
    :param tol: Membership tolerance on the max residual.
    :type tol: float
    :param seed: Seed of the point sampler and the frame rotations.
    :type seed: int
    :param table_n: The table's ``n``; defaults to half the real dimension.
    :type table_n: float | None
    :return: Membership, residual and sample count per class.
    :rtype: GHClassReport
    """
    _require_acs(m)
    dim = m.dim
    table_n = dim / 2.0 if table_n is None else float(table_n)
    if sample_points is None:
        sample_points = sample_box(m.domain, points, seed=seed, margin=0.1)
    rng = np.random.default_rng(seed)
    worst = {c.label: 0.0 for c in GH_CLASSES}
    frames = 0
    for p in sample_points:
        tensor = h_tensor_array(m, p)
        beta_coordinates = beta_form(m, p)
        j = m.acs_at(p)
        g = m.metric_at(p)
        for _ in range(vectors):
            e = random_orthonormal_frame(m, p, rng).frame
            residuals = gh_residuals(
                frame_tensor(tensor, e), e.T @ g @ j @ e, beta_coordinates @ e, table_n
            )
            for label, value in residuals.items():
                worst[label] = max(worst[label], value)
            frames += 1
    members = {label: value <= tol for label, value in worst.items()}
    violations = lattice_violations(members)
    if violations:
        logger.warning(
            "Classification of %s is not lattice consistent: %s",
            name or getattr(m, "name", "structure"),
            "; ".join(violations),
        )
    return GHClassReport(
        manifold=name or getattr(m, "name", "structure"),
        dimension=dim,
        table_n=table_n,
        valid_dimension=dim >= 6,
        tolerance=tol,
        seed=seed,
        points=len(sample_points),
        vectors=vectors,
        classes={
            label: GHClassEntry(member=members[label], residual=worst[label], samples=frames)
            for label in worst
        },
        lattice_consistent=not violations,
    )
