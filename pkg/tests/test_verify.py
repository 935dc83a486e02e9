import numpy as np
import pytest

from flaggeo.fields import fundamental_flag_field, random_flag_field
from flaggeo.flag import FlagTangent, fiber_frame, flag_connection, flag_sectional, standard_flag
from flaggeo.grassmann import make_tangent
from flaggeo.linalg import DerivConfig, bracket, expm_orthogonal, random_orthogonal, random_skew
from flaggeo.suites import random_flag, random_flag_tangent, random_projector
from flaggeo.vectorfield import VectorField
from flaggeo.verify import (
    GroupField,
    fd_riemann_sectional,
    grassmann_flag_metric_ratio,
    group_connection,
    left_invariant,
    metric_compat_torsion_check,
    oracle_lift,
    submersion_connection_oracle,
)


def zero_field(p):
    return FlagTangent(p, np.zeros_like(p.mats))


ZERO = VectorField(zero_field, lambda p, d: np.zeros_like(p.mats))


def test_left_invariant_connection(rng):
    a, b = random_skew(4, rng), random_skew(4, rng)
    q = random_orthogonal(4, rng)
    got = group_connection(left_invariant(a), left_invariant(b), q)
    assert np.allclose(got, 0.5 * bracket(a, b), atol=1e-14)
    assert np.allclose(group_connection(left_invariant(a), left_invariant(a), q), 0.0)


def test_geodesic_self_derivative_vanishes(rng):
    # right-invariant field Q -> B Q, left trivialized as Q^T B Q; along
    # Q0 exp(t a) with B = Q0 a Q0^T it is the geodesic velocity, elsewhere not
    a = random_skew(3, rng)
    q0 = random_orthogonal(3, rng)
    b = q0 @ a @ q0.T
    field = GroupField(lambda q: q.T @ b @ q)
    q = q0 @ expm_orthogonal(0.3 * a)
    assert np.abs(field(q @ expm_orthogonal(0.1 * random_skew(3, rng))) - a).max() > 1e-3
    assert np.abs(group_connection(field, field, q)).max() < 1e-8


def test_oracle_zero_field(rng):
    p = random_flag((1, 2), rng)
    x = random_flag_field((1, 2), rng)
    assert np.allclose(submersion_connection_oracle(x, ZERO, p).deltas, 0.0)


def test_oracle_matches_closed_form(rng):
    sig = (1, 2, 2)
    p = random_flag(sig, rng)
    x, y = random_flag_field(sig, rng), random_flag_field(sig, rng)
    want = flag_connection(x, y, p, DerivConfig(mode="exact")).deltas
    got = submersion_connection_oracle(x, y, p).deltas
    assert np.linalg.norm(got - want) <= 1e-6 * np.linalg.norm(want)


def test_oracle_fiber_independent(rng):
    sig = (2, 1, 2)
    p = random_flag(sig, rng)
    x, y = random_flag_field(sig, rng), random_flag_field(sig, rng)
    q = fiber_frame(p)
    k = np.eye(5)
    k[:2, :2] = random_orthogonal(2, rng)
    k[3:, 3:] = random_orthogonal(2, rng)
    a = submersion_connection_oracle(x, y, p, q=q).deltas
    b = submersion_connection_oracle(x, y, p, q=q @ k).deltas
    assert np.allclose(a, b, atol=1e-8)


def test_oracle_lift_is_horizontal(rng):
    p = random_flag((1, 1, 2), rng)
    d = random_flag_tangent(p, rng)
    w = oracle_lift(d, fiber_frame(p))
    mask = p.sig.block_mask()
    assert np.allclose(w[mask], 0.0)


def test_fd_curvature_zero_on_equal_fields(rng):
    sig = (1, 1, 1)
    p = random_flag(sig, rng)
    x = random_flag_field(sig, rng)
    assert fd_riemann_sectional(x, x, p) == pytest.approx(0.0, abs=1e-4)


def test_fd_curvature_projective_plane():
    p = standard_flag((1, 2))
    u = np.zeros((3, 3))
    u[1, 0], u[0, 1] = 1.0, -1.0
    v = np.zeros((3, 3))
    v[2, 0], v[0, 2] = 1.0, -1.0
    k = fd_riemann_sectional(fundamental_flag_field(u), fundamental_flag_field(v), p)
    assert k == pytest.approx(1.0, abs=1e-4)


def test_fd_curvature_matches_closed_form(rng):
    sig = (1, 1, 1)
    p = random_flag(sig, rng)
    x, y = random_flag_field(sig, rng, scale=0.5), random_flag_field(sig, rng, scale=0.5)
    k = fd_riemann_sectional(x, y, p, DerivConfig(richardson=True))
    want = flag_sectional(x(p), y(p))
    assert k == pytest.approx(want, abs=1e-4 * max(1.0, abs(want)))


def test_compat_torsion_zero_fields(rng):
    p = random_flag((1, 2), rng)
    assert metric_compat_torsion_check(ZERO, ZERO, ZERO, p) == (0.0, 0.0)


def test_compat_torsion_fundamental_fields(rng):
    sig = (1, 1, 2)
    p = random_flag(sig, rng)
    fields = [fundamental_flag_field(random_skew(4, rng)) for _ in range(3)]
    compat, tors = metric_compat_torsion_check(*fields, p)
    assert compat < 1e-5 and tors < 1e-5


def test_compat_torsion_second_order(rng):
    sig = (1, 2)
    p = random_flag(sig, rng)
    x, y, z = (random_flag_field(sig, rng) for _ in range(3))
    c1, t1 = metric_compat_torsion_check(x, y, z, p, DerivConfig(step=1e-2))
    c2, t2 = metric_compat_torsion_check(x, y, z, p, DerivConfig(step=5e-3))
    assert c1 / c2 == pytest.approx(4.0, rel=0.1)
    assert t1 / t2 == pytest.approx(4.0, rel=0.1)


def test_two_block_metric_ratio(rng):
    # measured, not assumed: the quotient metric on (P, I - P) equals the Stiefel one
    p = random_projector(5, 2, rng)
    w = random_skew(5, rng)
    d = make_tangent(p, 0.5 * ((w @ p.mat - p.mat @ w) + (w @ p.mat - p.mat @ w).T))
    assert grassmann_flag_metric_ratio(p, d) == pytest.approx(1.0, rel=1e-10)
