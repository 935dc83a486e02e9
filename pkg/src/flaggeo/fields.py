"""Concrete smooth vector fields on flags and Grassmannians.

Every field here has the form Y_i(P) = [Z(P), P_i] with Z a skew-valued
polynomial in the projector entries:

    Z(P) = S0 + sum_i sk(B_i P_i) + sum_i sk(C_i P_i D_i P_i),   sk(M) = M - M^T.

Such Y is tangent at every flag, is defined (and polynomial) on all of the
ambient space, and has an exact directional derivative, so it serves both
finite-difference and exact derivative modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flag import FlagPoint, FlagTangent, as_signature
from .grassmann import GrassTangent, Projector
from .linalg import Array, random_skew
from .vectorfield import VectorField


def _sk(m: Array) -> Array:
    return m - np.swapaxes(m, -1, -2)


def _br(a: Array, stack: Array) -> Array:
    return a @ stack - stack @ a


@dataclass(frozen=True, eq=False)
class SkewPolynomial:
    """Skew-valued polynomial Z(P) in the matrices of a flag stack."""

    s0: Array
    lin: Array = field(default=None)
    quad_c: Array = field(default=None)
    quad_d: Array = field(default=None)

    def value(self, mats: Array) -> Array:
        z = np.array(self.s0, dtype=float)
        if self.lin is not None:
            z = z + _sk(np.einsum("iab,ibc->ac", self.lin, mats))
        if self.quad_c is not None:
            z = z + _sk(np.einsum("iab,ibc,icd,ide->ae", self.quad_c, mats, self.quad_d, mats))
        return z

    def derivative(self, mats: Array, dmats: Array) -> Array:
        dz = np.zeros_like(np.asarray(self.s0, dtype=float))
        if self.lin is not None:
            dz = dz + _sk(np.einsum("iab,ibc->ac", self.lin, dmats))
        if self.quad_c is not None:
            dz = dz + _sk(np.einsum("iab,ibc,icd,ide->ae", self.quad_c, dmats, self.quad_d, mats)
                          + np.einsum("iab,ibc,icd,ide->ae", self.quad_c, mats, self.quad_d, dmats))
        return dz

    def to_dict(self) -> dict:
        out = {"s0": self.s0}
        if self.lin is not None:
            out["lin"] = list(self.lin)
        if self.quad_c is not None:
            out["quad_c"] = list(self.quad_c)
            out["quad_d"] = list(self.quad_d)
        return out


def random_skew_polynomial(n: int, r: int, rng: np.random.Generator, scale: float = 1.0,
                           degree: int = 2) -> SkewPolynomial:
    s0 = random_skew(n, rng, scale)
    lin = scale * rng.standard_normal((r, n, n)) / np.sqrt(n) if degree >= 1 else None
    qc = qd = None
    if degree >= 2:
        qc = scale * rng.standard_normal((r, n, n)) / np.sqrt(n)
        qd = rng.standard_normal((r, n, n)) / np.sqrt(n)
    return SkewPolynomial(s0, lin, qc, qd)


# -- flag fields ------------------------------------------------------------------

def flag_field(poly: SkewPolynomial) -> VectorField:
    """Y_i(P) = [Z(P), P_i]."""

    def ev(p: FlagPoint) -> FlagTangent:
        y = _br(poly.value(p.mats), p.mats)
        return FlagTangent(p, 0.5 * (y + np.swapaxes(y, -1, -2)))

    def dd(p: FlagPoint, d: FlagTangent) -> Array:
        z = poly.value(p.mats)
        dz = poly.derivative(p.mats, d.deltas)
        return _br(dz, p.mats) + _br(z, d.deltas)

    return VectorField(ev, dd)


def fundamental_flag_field(u: Array) -> VectorField:
    """The field P -> ([u, P_i])_i generated by a fixed skew matrix."""
    return flag_field(SkewPolynomial(np.asarray(u, dtype=float)))


def random_flag_field(sig, rng: np.random.Generator, scale: float = 1.0,
                      degree: int = 2) -> VectorField:
    sig = as_signature(sig)
    return flag_field(random_skew_polynomial(sig.n, sig.r, rng, scale, degree))


def scaled_flag_field(f, df, y: VectorField) -> VectorField:
    """f * Y for a scalar function f with derivative df(P, D)."""

    def ev(p: FlagPoint) -> FlagTangent:
        return FlagTangent(p, f(p) * y(p).deltas)

    dd = None
    if y.dir_deriv is not None:
        def dd(p: FlagPoint, d: FlagTangent) -> Array:
            return df(p, d) * y(p).deltas + f(p) * np.asarray(y.dir_deriv(p, d))

    return VectorField(ev, dd)


def sum_flag_fields(*fields: VectorField) -> VectorField:
    def ev(p: FlagPoint) -> FlagTangent:
        return FlagTangent(p, sum(f(p).deltas for f in fields))

    dd = None
    if all(f.dir_deriv is not None for f in fields):
        def dd(p, d):
            return sum(np.asarray(f.dir_deriv(p, d)) for f in fields)

    return VectorField(ev, dd)


# -- Grassmann fields ----------------------------------------------------------------

def grassmann_field(poly: SkewPolynomial) -> VectorField:
    """Y(P) = [Z(P), P] for a single-projector polynomial."""

    def ev(p: Projector) -> GrassTangent:
        y = _br(poly.value(p.mat[None]), p.mat)
        return GrassTangent(p, 0.5 * (y + y.T))

    def dd(p: Projector, d: GrassTangent) -> Array:
        z = poly.value(p.mat[None])
        dz = poly.derivative(p.mat[None], d.mat[None])
        return _br(dz, p.mat) + _br(z, d.mat)

    return VectorField(ev, dd)


def fundamental_grassmann_field(u: Array) -> VectorField:
    return grassmann_field(SkewPolynomial(np.asarray(u, dtype=float)))


def random_grassmann_field(n: int, rng: np.random.Generator, scale: float = 1.0,
                           degree: int = 2) -> VectorField:
    return grassmann_field(random_skew_polynomial(n, 1, rng, scale, degree))
