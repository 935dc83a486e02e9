"""Generic engine for normal homogeneous spaces SO(n)/K realized as orbits.

A realization is described by a :class:`HomogeneousSetup`: orthonormal bases
of the isotropy algebra k and its complement m in so(n), the action, its
differential at the identity, and a local section b -> Q_b with Q_b . b0 = b.
Points and tangents are plain numpy arrays handled only by the setup
callables, so the same code serves flags and spheres.

Vocabulary used below:

* the fixed lift of a field W is the function b -> W_bar(b) in m whose
  infinitesimal action at b gives W(b);
* the translated lift V(b) is the right-translated horizontal lift, which
  lives in Ad(Q_b) m and has the same infinitesimal action at b.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Literal

import numpy as np

from .errors import CutLocus, DerivativeUnavailable, IllConditioned, SectionDomain
from .flag import (
    FlagPoint,
    FlagSignature,
    FlagTangent,
    as_signature,
    fiber_frame,
    local_section_flag,
    skew_from_tangent,
    standard_flag,
)
from .linalg import EPS, Array, DerivConfig, bracket, central_diff, expm_orthogonal, inner, norm

Point = Any
Tangent = Any
Field = Callable[[Point], Tangent]


@dataclass(frozen=True)
class HomogeneousSetup:
    """Data of an orbit realization of SO(n)/K with the quotient metric."""

    n: int
    k_basis: tuple[Array, ...]
    m_basis: tuple[Array, ...]
    origin: Point
    action: Callable[[Array, Point], Point]
    diff_action: Callable[[Array, Point], Tangent]
    push_tangent: Callable[[Array, Tangent], Tangent]
    horizontal_lift: Callable[[Tangent, Point, Array], Array]
    section: Callable[[Point], Array]
    frame: Callable[[Point], Array] | None = None
    name: str = ""


def check_setup(setup: HomogeneousSetup, tol: float = 1e-12) -> None:
    """Raise ValueError if the bases or the section violate their invariants."""
    basis = list(setup.k_basis) + list(setup.m_basis)
    gram = np.array([[inner(a, b) for b in basis] for a in basis])
    if np.abs(gram - np.eye(len(basis))).max() > tol:
        raise ValueError(f"{setup.name}: k and m bases are not jointly orthonormal")
    if len(basis) != setup.n * (setup.n - 1) // 2:
        raise ValueError(f"{setup.name}: k and m do not span so(n)")
    for a in setup.k_basis:
        for b in setup.k_basis:
            c = bracket(a, b)
            if norm(_project(c, setup.m_basis)) > 1e-10 * max(1.0, norm(c)):
                raise ValueError(f"{setup.name}: k is not closed under the bracket")
    for a in setup.k_basis:
        if np.abs(setup.diff_action(a, setup.origin)).max() > 1e-10:
            raise ValueError(f"{setup.name}: k does not fix the origin")
    if np.abs(setup.section(setup.origin) - np.eye(setup.n)).max() > 1e-10:
        raise ValueError(f"{setup.name}: the section is not the identity at the origin")


def _coords(u: Array, basis) -> Array:
    return np.array([inner(u, e) for e in basis])


def _project(u: Array, basis) -> Array:
    if len(basis) == 0:
        return np.zeros_like(u)
    return np.tensordot(_coords(u, basis), np.stack(basis), axes=1)


# -- basic operations ------------------------------------------------------------

def fundamental_field(u: Array, b: Point, setup: HomogeneousSetup) -> Tangent:
    return setup.diff_action(u, b)


def fiber_point(b: Point, setup: HomogeneousSetup) -> Array:
    """Q_b from the section, or the fallback frame outside its domain."""
    try:
        return setup.section(b)
    except (SectionDomain, CutLocus):
        if setup.frame is None:
            raise
        return setup.frame(b)


def adjoint_basis(b: Point, setup: HomogeneousSetup) -> list[Array]:
    q = setup.section(b)
    return [q @ e @ q.T for e in setup.m_basis]


def lift_gram_matrix(b: Point, setup: HomogeneousSetup, q: Array | None = None) -> Array:
    """A[k, l] = <e_l, Q_b e_k Q_b^T>; equals the identity at the origin."""
    q = setup.section(b) if q is None else q
    m = np.stack(setup.m_basis)
    moved = q @ m @ q.T
    a = 0.5 * np.einsum("lab,kab->kl", m, moved)
    cond = np.linalg.cond(a)
    if not cond < 1.0 / (100.0 * EPS):
        raise IllConditioned(f"matrix A has condition number {cond:.3e}")
    return a


def translated_lift_value(v: Tangent, b: Point, setup: HomogeneousSetup, q: Array | None = None) -> Array:
    """Right-translated horizontal lift of the tangent v at b, an element of Ad(Q_b) m."""
    q = fiber_point(b, setup) if q is None else q
    return setup.horizontal_lift(v, b, q) @ q.T


def fixed_lift_value(v: Tangent, b: Point, setup: HomogeneousSetup) -> Array:
    """The element of m pushed by Q_b onto the horizontal lift of v."""
    q = setup.section(b)
    vb = translated_lift_value(v, b, setup, q)
    moved = [q @ e @ q.T for e in setup.m_basis]
    rhs = np.array([inner(vb, e) for e in moved])
    # coefficient of moved_k in the expansion of sum_l u_l e_l is A[k, l] u_l
    u = np.linalg.solve(lift_gram_matrix(b, setup, q), rhs)
    return np.tensordot(u, np.stack(setup.m_basis), axes=1)


def fixed_lift(x: Field, b: Point, setup: HomogeneousSetup) -> Array:
    return fixed_lift_value(x(b), b, setup)


def decompose_field(w: Field, b: Point, setup: HomogeneousSetup) -> Array:
    """Coordinates of the fixed lift of w(b) in the basis of m."""
    return _coords(fixed_lift(w, b, setup), setup.m_basis)


# -- connection ------------------------------------------------------------------------

LiftMode = Literal["fixed", "translated"]


def _lift_fn(mode: LiftMode, setup: HomogeneousSetup) -> Callable[[Tangent, Point], Array]:
    if mode == "fixed":
        return lambda v, b: fixed_lift_value(v, b, setup)
    if mode == "translated":
        return lambda v, b: translated_lift_value(v, b, setup)
    raise ValueError(f"unknown lift mode {mode!r}")


def connection_origin(z: Field, w: Field, setup: HomogeneousSetup,
                      cfg: DerivConfig = DerivConfig(), mode: LiftMode = "fixed") -> Tangent:
    """Covariant derivative of w along z at the origin.

    The derivative of the lifted field is assembled from central differences
    along the geodesics t -> exp(t e_k) . b0, one per basis direction, weighted
    by the coordinates of the lift of z(b0).
    """
    if cfg.mode == "exact":
        raise DerivativeUnavailable("the generic engine differentiates lifts numerically")
    b0 = setup.origin
    lift = _lift_fn(mode, setup)
    eye = np.eye(setup.n)
    z_bar = setup.horizontal_lift(z(b0), b0, eye)
    w_bar = setup.horizontal_lift(w(b0), b0, eye)
    coeffs = _coords(z_bar, setup.m_basis)
    h = cfg.step_for(1.0)
    d_w = np.zeros((setup.n, setup.n))
    for c, e in zip(coeffs, setup.m_basis):
        if c == 0.0:
            continue

        def along(t: float, e=e) -> Array:
            b = setup.action(expm_orthogonal(t * e), b0)
            return lift(w(b), b)

        d_w += c * central_diff(along, h, cfg.richardson, cfg.max_rel_change)
    return setup.diff_action(d_w - 0.5 * bracket(z_bar, w_bar), b0)


def _translated(f: Field, q: Array, setup: HomogeneousSetup) -> Field:
    """Pushforward of f by the isometry b -> Q^T . b."""
    qt = q.T
    return lambda b: setup.push_tangent(qt, f(setup.action(q, b)))


def _lifts_at_origin(x: Field, y: Field, beta: Point, setup: HomogeneousSetup,
                     q_beta: Array | None):
    q = fiber_point(beta, setup) if q_beta is None else q_beta
    xb, yb = _translated(x, q, setup), _translated(y, q, setup)
    b0 = setup.origin
    eye = np.eye(setup.n)
    x_bar = setup.horizontal_lift(xb(b0), b0, eye)
    y_bar = setup.horizontal_lift(yb(b0), b0, eye)
    return q, xb, yb, x_bar, y_bar


def connection_any(x: Field, y: Field, beta: Point, setup: HomogeneousSetup,
                   cfg: DerivConfig = DerivConfig(), q_beta: Array | None = None,
                   mode: LiftMode = "translated") -> Tangent:
    """Covariant derivative of y along x at an arbitrary point beta.

    The fields are pulled back to the origin by Q_beta, the lift of the pulled
    back y is differentiated along the geodesic from the origin in the lifted
    direction of x, and the result is pushed forward again.
    """
    if cfg.mode == "exact":
        raise DerivativeUnavailable("the generic engine differentiates lifts numerically")
    q, _, yb, x_bar, y_bar = _lifts_at_origin(x, y, beta, setup, q_beta)
    b0 = setup.origin
    lift = _lift_fn(mode, setup)

    def along(t: float) -> Array:
        b = setup.action(expm_orthogonal(t * x_bar), b0)
        return lift(yb(b), b)

    d_v = central_diff(along, cfg.step_for(norm(x_bar)), cfg.richardson, cfg.max_rel_change)
    u0 = bracket(x_bar, y_bar)
    return setup.push_tangent(q, setup.diff_action(d_v - 0.5 * u0, b0))


def bracket_term(x: Field, y: Field, beta: Point, setup: HomogeneousSetup,
                 q_beta: Array | None = None) -> Tangent:
    """The correction -(1/2) phi(U0) of connection_any, which vanishes on symmetric spaces."""
    q, _, _, x_bar, y_bar = _lifts_at_origin(x, y, beta, setup, q_beta)
    return setup.push_tangent(q, setup.diff_action(-0.5 * bracket(x_bar, y_bar), setup.origin))


def curvature_any(x: Field, y: Field, beta: Point, setup: HomogeneousSetup,
                  q_beta: Array | None = None) -> float:
    """<R(X,Y)Y, X> = |U_k|^2 + |U_m|^2 / 4 with U the bracket of the lifts."""
    *_, x_bar, y_bar = _lifts_at_origin(x, y, beta, setup, q_beta)
    u = bracket(x_bar, y_bar)
    uk = _project(u, setup.k_basis)
    um = _project(u, setup.m_basis)
    return inner(uk, uk) + 0.25 * inner(um, um)


def bracket_condition(setup: HomogeneousSetup, tol: float = 1e-12) -> bool:
    """True iff [m, m] lies in k."""
    for i, a in enumerate(setup.m_basis):
        for b in setup.m_basis[i + 1:]:
            if norm(_project(bracket(a, b), setup.m_basis)) > tol:
                return False
    return True


# -- flag realization --------------------------------------------------------------

def _unit_skew(n: int, a: int, b: int) -> Array:
    e = np.zeros((n, n))
    e[b, a], e[a, b] = 1.0, -1.0
    return e


def flag_bases(sig) -> tuple[tuple[Array, ...], tuple[Array, ...]]:
    sig = as_signature(sig)
    owner = np.concatenate([[i] * q for i, q in enumerate(sig.q)])
    k, m = [], []
    for a in range(sig.n):
        for b in range(a + 1, sig.n):
            (k if owner[a] == owner[b] else m).append(_unit_skew(sig.n, a, b))
    return tuple(k), tuple(m)


def flag_setup(sig) -> HomogeneousSetup:
    """Flags of the given signature; points and tangents are (r, n, n) stacks."""
    sig = as_signature(sig)
    k, m = flag_bases(sig)
    p0 = standard_flag(sig)

    def action(q: Array, b: Array) -> Array:
        return q @ b @ q.T

    def diff_action(u: Array, b: Array) -> Array:
        return u @ b - b @ u

    def push_tangent(q: Array, v: Array) -> Array:
        return q @ v @ q.T

    def horizontal_lift(v: Array, b: Array, q: Array) -> Array:
        return skew_from_tangent(FlagTangent(FlagPoint(sig, b), v)) @ q

    def section(b: Array) -> Array:
        return local_section_flag(p0, np.eye(sig.n), FlagPoint(sig, b))

    def frame(b: Array) -> Array:
        return fiber_frame(FlagPoint(sig, b))

    return HomogeneousSetup(sig.n, k, m, p0.mats, action, diff_action, push_tangent,
                            horizontal_lift, section, frame, name=f"flag{sig.q}")


def flag_array_field(field, sig: FlagSignature | None = None) -> Field:
    """Adapt a flag VectorField to the array convention of the engine."""
    sig_ = None if sig is None else as_signature(sig)

    def f(b: Array) -> Array:
        s = sig_ or FlagSignature(tuple(int(round(np.trace(m))) for m in b))
        return field(FlagPoint(s, b)).deltas

    return f


# -- sphere realization ---------------------------------------------------------------

def sphere_setup(n: int) -> HomogeneousSetup:
    """Unit sphere S^(n-1) = SO(n)/SO(n-1), points are unit vectors, origin e_1."""
    k = tuple(_unit_skew(n, a, b) for a in range(1, n) for b in range(a + 1, n))
    m = tuple(_unit_skew(n, 0, a) for a in range(1, n))
    e1 = np.eye(n)[0]

    def section(x: Array) -> Array:
        c = float(x[0])
        if 1.0 + c < 1e-12:
            raise SectionDomain("the antipode of the origin is outside the section domain")
        y = x - c * e1
        return (np.eye(n) + np.outer(y, e1) - np.outer(e1, y)
                + (c - 1.0) * np.outer(e1, e1) - np.outer(y, y) / (1.0 + c))

    def frame(x: Array) -> Array:
        # Householder reflection e_1 -> x, with a column flip to land in SO(n)
        v = e1 - x
        vv = float(v @ v)
        q = np.eye(n) if vv < 1e-30 else np.eye(n) - 2.0 * np.outer(v, v) / vv
        if np.linalg.det(q) < 0:
            q[:, -1] = -q[:, -1]
        return q

    return HomogeneousSetup(
        n, k, m, e1,
        action=lambda q, x: q @ x,
        diff_action=lambda u, x: u @ x,
        push_tangent=lambda q, v: q @ v,
        horizontal_lift=lambda v, x, q: (np.outer(v, x) - np.outer(x, v)) @ q,
        section=section, frame=frame, name=f"sphere{n - 1}",
    )
