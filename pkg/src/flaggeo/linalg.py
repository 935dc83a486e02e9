"""Shared numerical helpers: so(n) algebra, orthogonal exp/log, derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

from .errors import DerivativeUnavailable, LogBranch, NotOrthogonal, NotSkew, StepTooLarge

EPS = float(np.finfo(float).eps)
TOL_CONSTRAINT = 1e-8
ANGLE_TOL = 1e-8

Array = NDArray[np.float64]


# -- so(n) ------------------------------------------------------------------

def bracket(a: Array, b: Array) -> Array:
    """Matrix commutator ab - ba."""
    return a @ b - b @ a


def inner(a: Array, b: Array) -> float:
    """Bi-invariant inner product on so(n): half the Frobenius pairing."""
    return 0.5 * float(np.sum(a * b))


def norm(a: Array) -> float:
    return float(np.sqrt(max(inner(a, a), 0.0)))


def skew_part(m: Array) -> Array:
    return 0.5 * (m - m.T)


def sym_part(m: Array) -> Array:
    return 0.5 * (m + m.T)


def check_skew(m: Array, tol: float = TOL_CONSTRAINT) -> Array:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSkew(f"expected a square matrix, got shape {m.shape}")
    res = np.linalg.norm(m + m.T)
    if res > tol:
        raise NotSkew(f"skew residual {res:.3e} exceeds {tol:.1e}")
    return skew_part(m)


def orthogonality_residual(q: Array) -> float:
    return float(np.linalg.norm(q.T @ q - np.eye(q.shape[1])))


def check_orthogonal(q: Array, tol: float = TOL_CONSTRAINT) -> Array:
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise NotOrthogonal(f"expected a square matrix, got shape {q.shape}")
    res = orthogonality_residual(q)
    if res > tol:
        raise NotOrthogonal(f"orthogonality residual {res:.3e} exceeds {tol:.1e}")
    return q


def polar_orthogonal(m: Array) -> Array:
    """Closest orthogonal matrix (orthogonal polar factor)."""
    u, _, vt = np.linalg.svd(m)
    return u @ vt


def expm_orthogonal(omega: Array) -> Array:
    """Exponential of a skew matrix, re-orthogonalized if rounding drifted."""
    q = sla.expm(omega)
    n = q.shape[0]
    if orthogonality_residual(q) > 10.0 * EPS * n:
        q = polar_orthogonal(q)
    return q


def logm_orthogonal(q: Array, angle_tol: float = ANGLE_TOL) -> Array:
    """Principal real logarithm of a special orthogonal matrix.

    Uses the real Schur form: for a normal matrix it is block diagonal with
    1x1 blocks equal to +-1 and 2x2 rotation blocks. Each rotation block is
    replaced by its angle in (-pi, pi). An eigenvalue at -1 (angle within
    ``angle_tol`` of pi) has no principal real log and raises ``LogBranch``.
    """
    t, z = sla.schur(q, output="real")
    n = t.shape[0]
    log_t = np.zeros_like(t)
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            a = 0.5 * (t[i, i] + t[i + 1, i + 1])
            b = 0.5 * (t[i + 1, i] - t[i, i + 1])
            theta = np.arctan2(b, a)
            if np.pi - abs(theta) < angle_tol:
                raise LogBranch(f"rotation angle {theta:.17g} at the branch cut")
            log_t[i, i + 1] = -theta
            log_t[i + 1, i] = theta
            i += 2
        else:
            if t[i, i] < 0.0:
                raise LogBranch("real eigenvalue -1 has no principal real logarithm")
            i += 1
    return skew_part(z @ log_t @ z.T)


def range_basis(p: Array, q: int | None = None) -> Array:
    """Orthonormal basis of the range of a projector (eigenvalues above 1/2)."""
    w, v = np.linalg.eigh(sym_part(p))
    keep = w > 0.5
    if q is not None and int(keep.sum()) != q:
        keep = np.zeros_like(keep)
        keep[-q:] = True
    return v[:, keep]


# -- random instances -------------------------------------------------------

def random_orthogonal(n: int, rng: np.random.Generator, special: bool = True) -> Array:
    """Haar-distributed orthogonal matrix via QR with sign correction."""
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    if special and np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def random_skew(n: int, rng: np.random.Generator, scale: float = 1.0) -> Array:
    a = rng.standard_normal((n, n))
    return scale * (a - a.T) / 2.0


def random_symmetric(n: int, rng: np.random.Generator, scale: float = 1.0) -> Array:
    a = rng.standard_normal((n, n))
    return scale * (a + a.T) / 2.0


# -- derivatives --------------------------------------------------------------

@dataclass(frozen=True)
class DerivConfig:
    """How to take the t-derivatives that appear in connection formulas.

    ``step=None`` selects the default policy eps^(1/3) * (1 + |X|). With
    ``richardson`` the central difference is combined at h and h/2, and
    ``max_rel_change`` (if set) bounds the relative disagreement between the
    two; exceeding it raises ``StepTooLarge``.
    """

    mode: Literal["central_fd", "exact"] = "central_fd"
    step: float | None = None
    richardson: bool = False
    max_rel_change: float | None = None

    def __post_init__(self):
        if self.mode not in ("central_fd", "exact"):
            raise ValueError(f"unknown derivative mode {self.mode!r}")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")

    def step_for(self, speed: float) -> float:
        if self.step is not None:
            return self.step
        return EPS ** (1.0 / 3.0) * (1.0 + speed)


def central_diff(f: Callable[[float], Array], h: float, richardson: bool = False,
                 max_rel_change: float | None = None) -> Array:
    """d/dt f(t) at t = 0 by a central difference, optionally extrapolated."""
    d1 = (np.asarray(f(h)) - np.asarray(f(-h))) / (2.0 * h)
    if not richardson:
        return d1
    d2 = (np.asarray(f(h / 2)) - np.asarray(f(-h / 2))) / h
    if max_rel_change is not None:
        scale = max(float(np.linalg.norm(d2)), 1e-300)
        change = float(np.linalg.norm(d2 - d1)) / scale
        if change > max_rel_change:
            raise StepTooLarge(f"step {h:.3e}: relative change {change:.3e} under halving")
    return (4.0 * d2 - d1) / 3.0


def require_exact(dir_deriv, what: str = "field"):
    if dir_deriv is None:
        raise DerivativeUnavailable(f"exact mode requested but the {what} has no dir_deriv")
    return dir_deriv
