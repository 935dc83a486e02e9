"""Grassmannian of rank-q projectors: exp, log, cut locus, Stiefel lifts.

Points are orthogonal projectors P (symmetric, idempotent, trace q). Tangent
vectors at P are symmetric matrices with D = DP + PD. The Riemannian metric
is the one making P -> U U^T a submersion from the Stiefel manifold with the
Euclidean metric, so |D|^2 = tr(P D D).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    BaseMismatch,
    CutLocus,
    DimensionMismatch,
    FrameNotInFiber,
    InvalidProjector,
    NotTangent,
)
from .linalg import (
    ANGLE_TOL,
    EPS,
    TOL_CONSTRAINT,
    Array,
    DerivConfig,
    bracket,
    central_diff,
    expm_orthogonal,
    logm_orthogonal,
    range_basis,
    require_exact,
    sym_part,
)
from .vectorfield import VectorField


@dataclass(frozen=True, eq=False)
class Projector:
    """Rank-q orthogonal projector on R^n."""

    mat: Array
    q: int

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def basis(self) -> Array:
        return range_basis(self.mat, self.q)


@dataclass(frozen=True, eq=False)
class StiefelFrame:
    """n x q matrix with orthonormal columns."""

    mat: Array

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def q(self) -> int:
        return self.mat.shape[1]


@dataclass(frozen=True, eq=False)
class GrassTangent:
    base: Projector
    mat: Array


def projector_residual(m: Array, q: int) -> float:
    sym = np.linalg.norm(m - m.T)
    idem = np.linalg.norm(m @ m - m)
    rank = abs(np.trace(m) - q)
    return float(max(sym, idem, rank))


def spectral_round(m: Array, q: int) -> Array:
    u = range_basis(m, q)
    return u @ u.T


def make_projector(mat, q: int | None = None, tol: float = TOL_CONSTRAINT) -> Projector:
    """Validate a projector, renormalizing small residuals.

    Residuals up to ``tol`` are kept (after symmetrization); up to ``100*tol``
    the matrix is snapped back by spectral rounding; anything larger raises
    ``InvalidProjector``.
    """
    m = np.array(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidProjector(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if q is None:
        q = int(round(float(np.trace(m))))
    if not 1 <= q <= n - 1:
        raise InvalidProjector(f"rank {q} outside [1, {n - 1}]")
    res = projector_residual(m, q)
    if res > 100 * tol:
        raise InvalidProjector(f"projector residual {res:.3e} exceeds {100 * tol:.1e}")
    if res > tol:
        m = spectral_round(m, q)
    return Projector(sym_part(m), q)


def projector_from_basis(u: Array) -> Projector:
    u = np.asarray(u, dtype=float)
    return Projector(sym_part(u @ u.T), u.shape[1])


def make_frame(mat, tol: float = TOL_CONSTRAINT) -> StiefelFrame:
    u = np.array(mat, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    res = np.linalg.norm(u.T @ u - np.eye(u.shape[1]))
    if res > tol:
        raise InvalidProjector(f"frame orthonormality residual {res:.3e} exceeds {tol:.1e}")
    return StiefelFrame(u)


def tangent_residual(p: Array, d: Array) -> float:
    return float(max(np.linalg.norm(d - d.T), np.linalg.norm(d - (d @ p + p @ d))))


def make_tangent(base: Projector, mat, tol: float = TOL_CONSTRAINT) -> GrassTangent:
    d = np.array(mat, dtype=float)
    if d.shape != base.mat.shape:
        raise DimensionMismatch(f"tangent shape {d.shape} vs base {base.mat.shape}")
    res = tangent_residual(base.mat, d)
    if res > tol:
        raise NotTangent(f"tangency residual {res:.3e} exceeds {tol:.1e}")
    return GrassTangent(base, sym_part(d))


def tangent_projection(p: Array, m: Array) -> Array:
    """Orthogonal projection of a matrix onto the tangent space at P."""
    s = sym_part(m)
    return s @ p + p @ s - 2.0 * p @ s @ p


def _same_shape(p: Projector, r: Projector) -> None:
    if p.n != r.n or p.q != r.q:
        raise DimensionMismatch(f"(n, q) = ({p.n}, {p.q}) vs ({r.n}, {r.q})")


def _overlap_singular_values(p: Projector, r: Projector) -> Array:
    return np.linalg.svd(p.basis().T @ r.basis(), compute_uv=False)


def in_cut_locus(p: Projector, r: Projector, rank_tol: float | None = None) -> bool:
    """True iff range(R) contains a direction orthogonal to range(P)."""
    _same_shape(p, r)
    s = _overlap_singular_values(p, r)
    if rank_tol is None:
        rank_tol = p.n * EPS * max(float(s[0]), 1.0)
    return bool(s[-1] < rank_tol)


def principal_angles(p: Projector, r: Projector) -> Array:
    """Principal angles between range(P) and range(R), nondecreasing."""
    _same_shape(p, r)
    s = _overlap_singular_values(p, r)
    return np.sort(np.arccos(np.clip(s, 0.0, 1.0)))


def grassmann_log(p: Projector, r: Projector, rank_tol: float | None = None,
                  angle_tol: float = ANGLE_TOL) -> GrassTangent:
    """Tangent D at P with grassmann_exp(P, D) = R."""
    if in_cut_locus(p, r, rank_tol):
        raise CutLocus("R has a principal angle of pi/2 with P")
    n = p.n
    eye = np.eye(n)
    rot = (eye - 2.0 * r.mat) @ (eye - 2.0 * p.mat)
    omega = 0.5 * logm_orthogonal(rot, angle_tol)
    return GrassTangent(p, sym_part(bracket(omega, p.mat)))


def grassmann_exp(p: Projector, d: GrassTangent) -> Projector:
    if d.base is not p and not np.allclose(d.base.mat, p.mat, atol=TOL_CONSTRAINT):
        raise BaseMismatch("tangent is not based at P")
    g = expm_orthogonal(bracket(d.mat, p.mat))
    return Projector(sym_part(g @ p.mat @ g.T), p.q)


def grassmann_distance(p: Projector, r: Projector) -> float:
    return grassmann_norm(grassmann_log(p, r))


def grassmann_metric(d1: GrassTangent, d2: GrassTangent) -> float:
    """tr(P D1 D2), the metric induced from the Euclidean Stiefel metric."""
    return float(np.trace(d1.base.mat @ d1.mat @ d2.mat))


def grassmann_norm(d: GrassTangent) -> float:
    return float(np.sqrt(max(grassmann_metric(d, d), 0.0)))


def stiefel_exp(u: StiefelFrame, d: Array, tol: float = TOL_CONSTRAINT) -> StiefelFrame:
    """Geodesic of the Euclidean metric on the Stiefel manifold at t = 1."""
    um = u.mat
    d = np.asarray(d, dtype=float)
    if d.shape != um.shape:
        raise DimensionMismatch(f"direction shape {d.shape} vs frame {um.shape}")
    a = um.T @ d
    if np.linalg.norm(a + a.T) > tol:
        raise NotTangent("U^T D is not skew")
    a = 0.5 * (a - a.T)
    q = um.shape[1]
    c = d.T @ d
    block = np.block([[a, -c], [np.eye(q), a]])
    e = expm(block)[:, :q]
    h = np.hstack([um, d]) @ e @ expm(-a)
    return StiefelFrame(h)


def horizontal_lift_stiefel(d: GrassTangent, u: StiefelFrame, tol: float = TOL_CONSTRAINT) -> Array:
    if np.linalg.norm(u.mat @ u.mat.T - d.base.mat) > tol:
        raise FrameNotInFiber("U U^T differs from the base projector")
    return d.mat @ u.mat


def grassmann_holonomy(p: Projector, r: Projector, u: StiefelFrame,
                       tol: float = TOL_CONSTRAINT) -> StiefelFrame:
    """Endpoint of the horizontal lift through U of the geodesic from P to R."""
    d = grassmann_log(p, r)
    return stiefel_exp(u, horizontal_lift_stiefel(d, u, tol))


def grassmann_connection(x: VectorField, y: VectorField, beta: Projector,
                         cfg: DerivConfig = DerivConfig()) -> GrassTangent:
    """Covariant derivative of Y along X at beta.

    With G(t) the geodesic through beta in direction X(beta), the result is
    [W', beta] where W' = d/dt [Y(G(t)), G(t)] at t = 0.
    """
    xb = x(beta)
    if cfg.mode == "exact":
        dy = require_exact(y.dir_deriv)(beta, xb)
        w_dot = bracket(dy, beta.mat) + bracket(y(beta).mat, xb.mat)
    else:
        speed = grassmann_norm(xb)

        def w(t: float) -> Array:
            g = grassmann_exp(beta, GrassTangent(beta, t * xb.mat))
            return bracket(y(g).mat, g.mat)

        w_dot = central_diff(w, cfg.step_for(speed), cfg.richardson, cfg.max_rel_change)
    return GrassTangent(beta, sym_part(bracket(w_dot, beta.mat)))
