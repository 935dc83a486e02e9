"""Independent oracles for connection and curvature on flag manifolds.

Nothing here uses the closed-form lift, metric, connection or curvature
formulas of the flag module. The only closed form borrowed is the exp map,
which is needed to move along the manifold. Instead:

* horizontal lifts are found by least squares against the differential of
  the orbital map restricted to the block-off-diagonal skew matrices;
* the metric is the so(n) norm of that lift;
* covariant derivatives come from the bi-invariant connection on SO(n)
  pushed down through the submersion Q -> Q.P0;
* Lie brackets and curvature come from finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DerivativeUnavailable, NotTangent
from .flag import (
    FlagPoint,
    FlagSignature,
    FlagTangent,
    differential_orbital,
    fiber_frame,
    flag_connection,
    flag_geodesic,
    standard_flag,
)
from .grassmann import GrassTangent, Projector
from .linalg import (
    Array,
    DerivConfig,
    bracket,
    central_diff,
    expm_orthogonal,
    inner,
    skew_part,
)
from .vectorfield import VectorField


@dataclass(frozen=True)
class GroupField:
    """Left-trivialized vector field Q -> Q w(Q) on SO(n).

    ``dir_deriv(Q, a)``, if given, is d/dt w(Q exp(t a)) at t = 0.
    """

    eval: Callable[[Array], Array]
    dir_deriv: Callable[[Array, Array], Array] | None = None

    def __call__(self, q: Array) -> Array:
        return self.eval(q)


def left_invariant(a: Array) -> GroupField:
    a = np.asarray(a, dtype=float)
    return GroupField(lambda q: a, lambda q, d: np.zeros_like(a))


def group_connection(a: GroupField, b: GroupField, q: Array,
                     cfg: DerivConfig = DerivConfig()) -> Array:
    """Bi-invariant Levi-Civita derivative of B along A at Q (left trivialized)."""
    return _group_connection_at(a(q), b, q, cfg)


def _group_connection_at(alpha: Array, b: GroupField, q: Array, cfg: DerivConfig) -> Array:
    if cfg.mode == "exact":
        if b.dir_deriv is None:
            raise DerivativeUnavailable("group field has no dir_deriv")
        d = b.dir_deriv(q, alpha)
    else:
        h = cfg.step_for(float(np.sqrt(max(inner(alpha, alpha), 0.0))))
        d = central_diff(lambda t: b(q @ expm_orthogonal(t * alpha)), h,
                         cfg.richardson, cfg.max_rel_change)
    return skew_part(d + 0.5 * bracket(alpha, b(q)))


# -- submersion machinery ----------------------------------------------------------

def _offdiag_basis(sig: FlagSignature) -> list[Array]:
    n = sig.n
    owner = np.concatenate([[i] * q for i, q in enumerate(sig.q)])
    basis = []
    for a in range(n):
        for b in range(a + 1, n):
            if owner[a] != owner[b]:
                e = np.zeros((n, n))
                e[b, a], e[a, b] = 1.0, -1.0
                basis.append(e)
    return basis


class _Submersion:
    def __init__(self, sig: FlagSignature):
        self.sig = sig
        self.p0 = standard_flag(sig)
        self.basis = _offdiag_basis(sig)
        # columns: the orbital differential at the identity of each basis element
        self.cols = np.stack([np.ravel(differential_orbital(np.eye(sig.n), e, self.p0).deltas)
                              for e in self.basis], axis=1)

    def fit(self, deltas: Array, q: Array) -> tuple[Array, float]:
        """Least-squares horizontal w with (Q [w, P0_i] Q^T)_i ~ deltas, and the misfit."""
        target = np.ravel(q.T @ deltas @ q)
        coef, *_ = np.linalg.lstsq(self.cols, target, rcond=None)
        resid = float(np.linalg.norm(self.cols @ coef - target))
        return np.tensordot(coef, np.stack(self.basis), axes=1), resid

    def lift(self, deltas: Array, q: Array, tol: float = 1e-7) -> Array:
        w, resid = self.fit(deltas, q)
        if resid > tol * max(1.0, float(np.linalg.norm(deltas))):
            raise NotTangent(f"no horizontal lift: residual {resid:.3e}")
        return w

    def point(self, q: Array) -> FlagPoint:
        m = q @ self.p0.mats @ q.T
        return FlagPoint(self.sig, 0.5 * (m + np.swapaxes(m, -1, -2)))


def oracle_lift(d: FlagTangent, q: Array | None = None) -> Array:
    """Left-trivialized horizontal lift of d at a frame Q of its base."""
    sub = _Submersion(d.base.sig)
    q = fiber_frame(d.base) if q is None else q
    return sub.lift(d.deltas, q)


def oracle_metric(a: FlagTangent, b: FlagTangent) -> float:
    sub = _Submersion(a.base.sig)
    q = fiber_frame(a.base)
    return inner(sub.lift(a.deltas, q), sub.lift(b.deltas, q))


def lift_field(x: VectorField, sig: FlagSignature) -> GroupField:
    sub = _Submersion(sig)
    return GroupField(lambda q: sub.lift(x(sub.point(q)).deltas, q))


def submersion_connection_oracle(x: VectorField | None, y: VectorField, beta: FlagPoint,
                                 cfg: DerivConfig = DerivConfig(), q: Array | None = None,
                                 x_value: FlagTangent | None = None) -> FlagTangent:
    """Covariant derivative pushed down from the bi-invariant metric on SO(n).

    The first slot is tensorial, so ``x_value`` may replace the field X.
    """
    sub = _Submersion(beta.sig)
    q = fiber_frame(beta) if q is None else q
    xv = x(beta) if x_value is None else x_value
    alpha = sub.lift(xv.deltas, q)
    yg = GroupField(lambda g: sub.lift(y(sub.point(g)).deltas, g))
    gamma = _group_connection_at(alpha, yg, q, cfg)
    return FlagTangent(beta, differential_orbital(q, gamma, sub.p0).deltas)


def lie_bracket_fd(x: VectorField, y: VectorField, beta: FlagPoint, h: float,
                   richardson: bool = False) -> FlagTangent:
    """[X, Y] = D_X Y - D_Y X, ambient derivatives along geodesics."""
    xb, yb = x(beta), y(beta)
    dyx = central_diff(lambda t: y(flag_geodesic(beta, xb, t)).deltas, h, richardson)
    dxy = central_diff(lambda t: x(flag_geodesic(beta, yb, t)).deltas, h, richardson)
    return FlagTangent(beta, dyx - dxy)


def _oracle_field(x: VectorField | None, y: VectorField, cfg: DerivConfig) -> VectorField:
    return VectorField(lambda p: submersion_connection_oracle(x, y, p, cfg))


def fd_riemann_sectional(x: VectorField, y: VectorField, beta: FlagPoint,
                         cfg: DerivConfig = DerivConfig()) -> float:
    """<R(X,Y)Y, X> from nested oracle connections and an fd Lie bracket."""
    speed = max(oracle_norm(x(beta)), oracle_norm(y(beta)))
    h_in = cfg.step_for(speed)
    h_out = float(np.sqrt(h_in))
    inner_cfg = DerivConfig(step=h_in, richardson=cfg.richardson, max_rel_change=cfg.max_rel_change)
    outer_cfg = DerivConfig(step=h_out, richardson=cfg.richardson,
                            max_rel_change=cfg.max_rel_change)
    w_yy = _oracle_field(y, y, inner_cfg)
    w_xy = _oracle_field(x, y, inner_cfg)
    t1 = submersion_connection_oracle(x, w_yy, beta, outer_cfg)
    t2 = submersion_connection_oracle(y, w_xy, beta, outer_cfg)
    lb = lie_bracket_fd(x, y, beta, h_in, cfg.richardson)
    t3 = submersion_connection_oracle(None, y, beta, inner_cfg, x_value=lb)
    r = FlagTangent(beta, t1.deltas - t2.deltas - t3.deltas)
    return oracle_metric(r, x(beta))


def oracle_norm(d: FlagTangent) -> float:
    return float(np.sqrt(max(oracle_metric(d, d), 0.0)))


def residual_norm(d: FlagTangent) -> float:
    """Metric norm of the tangent part plus the Frobenius size of the rest.

    Finite-difference residuals are tangent only up to truncation error, so
    both parts count.
    """
    sub = _Submersion(d.base.sig)
    w, resid = sub.fit(d.deltas, fiber_frame(d.base))
    return float(np.sqrt(max(inner(w, w), 0.0))) + resid


ConnectionFn = Callable[[VectorField, VectorField, FlagPoint, DerivConfig], FlagTangent]


def metric_compat_torsion_check(x: VectorField, y: VectorField, z: VectorField,
                                beta: FlagPoint, cfg: DerivConfig = DerivConfig(),
                                connection: ConnectionFn = flag_connection) -> tuple[float, float]:
    """Residuals of metric compatibility and zero torsion at beta."""
    xb = x(beta)
    h = cfg.step_for(oracle_norm(xb))
    step_cfg = DerivConfig(step=h, richardson=cfg.richardson, max_rel_change=cfg.max_rel_change)

    def g_yz(t: float) -> float:
        p = flag_geodesic(beta, xb, t)
        return oracle_metric(y(p), z(p))

    x_gyz = float(central_diff(g_yz, h, cfg.richardson, cfg.max_rel_change))
    nxy = connection(x, y, beta, step_cfg)
    nxz = connection(x, z, beta, step_cfg)
    compat = abs(x_gyz - oracle_metric(nxy, z(beta)) - oracle_metric(y(beta), nxz))
    nyx = connection(y, x, beta, step_cfg)
    lb = lie_bracket_fd(x, y, beta, h, cfg.richardson)
    tors = residual_norm(FlagTangent(beta, nxy.deltas - nyx.deltas - lb.deltas))
    return compat, tors


# -- Grassmann bridges ---------------------------------------------------------------

def grassmann_as_flag_field(y: VectorField, q: int) -> VectorField:
    """A Grassmann field viewed on two-block flags (P, I - P)."""

    def ev(p: FlagPoint) -> FlagTangent:
        d = y(Projector(p.mats[0], q)).mat
        return FlagTangent(p, np.stack([d, -d]))

    return VectorField(ev)


def grassmann_flag_metric_ratio(p: Projector, d: GrassTangent) -> float:
    """Measured ratio between the two-block flag metric and the Grassmann metric."""
    sig = FlagSignature((p.q, p.n - p.q))
    base = FlagPoint(sig, np.stack([p.mat, np.eye(p.n) - p.mat]))
    t = FlagTangent(base, np.stack([d.mat, -d.mat]))
    flag_sq = oracle_metric(t, t)
    # Grassmann side: squared Euclidean length of the Stiefel horizontal lift
    stiefel_sq = float(np.sum((d.mat @ p.basis()) ** 2))
    return flag_sq / stiefel_sq
