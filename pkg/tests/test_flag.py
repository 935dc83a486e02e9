import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flaggeo.errors import CutLocus, DegeneratePlane, FrameNotInFiber, InvalidFlag, NotTangent
from flaggeo.fields import fundamental_flag_field, random_flag_field
from flaggeo.flag import (
    FlagPoint,
    FlagSignature,
    FlagTangent,
    differential_orbital,
    fiber_frame,
    fiber_representative,
    flag_connection,
    flag_exp,
    flag_metric,
    flag_residual,
    flag_sectional,
    flag_tangent_residual,
    frame_generates,
    horizontal_lift,
    local_section_flag,
    make_flag,
    make_flag_tangent,
    projection,
    skew_from_tangent,
    standard_flag,
    tangent_from_skew,
    vertical_horizontal_split,
)
from flaggeo.linalg import DerivConfig, bracket, random_orthogonal, random_skew
from flaggeo.suites import random_flag, random_flag_tangent
from flaggeo.verify import oracle_metric


def unit(n, a, b):
    e = np.zeros((n, n))
    e[b, a], e[a, b] = 1.0, -1.0
    return e


def test_signature_blocks():
    sig = FlagSignature((1, 2, 2))
    assert sig.n == 5 and sig.r == 3
    assert sig.blocks[1] == slice(1, 3)
    with pytest.raises(InvalidFlag):
        FlagSignature((3,))


def test_standard_flag_is_valid():
    p = standard_flag((2, 1, 3))
    assert flag_residual(p.mats, p.sig) == 0.0


def test_make_flag_rejects_overlap():
    with pytest.raises(InvalidFlag):
        make_flag([np.diag([1.0, 0.0]), np.diag([1.0, 1.0]) * 0.5])


def test_make_flag_snaps_small_residual(rng):
    p = random_flag((1, 2), rng)
    noisy = make_flag(p.mats + 1e-8 * rng.standard_normal(p.mats.shape), (1, 2))
    assert flag_residual(noisy.mats, noisy.sig) < 1e-12


def test_tangent_validation(rng):
    p = random_flag((1, 1, 1), rng)
    d = random_flag_tangent(p, rng)
    assert flag_tangent_residual(p, d.deltas) < 1e-12
    with pytest.raises(NotTangent):
        make_flag_tangent(p, d.deltas + np.eye(3)[None])


def test_skew_roundtrip_and_horizontality(rng):
    p = random_flag((2, 1, 2), rng)
    d = random_flag_tangent(p, rng)
    w = skew_from_tangent(d)
    assert np.allclose(tangent_from_skew(w, p).deltas, d.deltas, atol=1e-13)
    q = fiber_frame(p)
    vert, _ = vertical_horizontal_split(q.T @ w @ q, p.sig)
    assert np.allclose(vert, 0.0, atol=1e-13)


def test_differential_orbital_matches_curve(rng):
    sig = (1, 2)
    q = random_orthogonal(3, rng)
    w = random_skew(3, rng)
    p0 = standard_flag(sig)
    h = 1e-6
    fd = (projection(q @ (np.eye(3) + h * w), sig).mats
          - projection(q @ (np.eye(3) - h * w), sig).mats) / (2 * h)
    assert np.allclose(differential_orbital(q, w, p0).deltas, fd, atol=1e-8)


def test_metric_matches_oracle(rng):
    p = random_flag((1, 2, 2), rng)
    a, b = random_flag_tangent(p, rng), random_flag_tangent(p, rng)
    assert flag_metric(a, b) == pytest.approx(oracle_metric(a, b), rel=1e-9)


def test_horizontal_lift_requires_fiber(rng):
    p = random_flag((1, 2), rng)
    d = random_flag_tangent(p, rng)
    with pytest.raises(FrameNotInFiber):
        horizontal_lift(d, np.eye(3))
    q = fiber_frame(p)
    assert frame_generates(q, p)


def test_exp_stays_on_manifold(rng):
    p = random_flag((2, 2, 1), rng)
    d = random_flag_tangent(p, rng, scale=2.0)
    r = flag_exp(p, d)
    assert flag_residual(r.mats, r.sig) < 1e-12


def test_connection_exact_matches_fd(rng):
    sig = (1, 1, 2)
    p = random_flag(sig, rng)
    x, y = random_flag_field(sig, rng), random_flag_field(sig, rng)
    exact = flag_connection(x, y, p, DerivConfig(mode="exact")).deltas
    fd = flag_connection(x, y, p).deltas
    assert np.allclose(fd, exact, atol=1e-7)


def test_fundamental_fields_connection():
    # at the standard flag: -(1/2) of the orbit differential of [u, v]
    sig = (1, 1, 1)
    p = standard_flag(sig)
    u, v = unit(3, 0, 1), unit(3, 1, 2)
    got = flag_connection(fundamental_flag_field(u), fundamental_flag_field(v), p,
                          DerivConfig(mode="exact")).deltas
    want = -0.5 * tangent_from_skew(bracket(u, v), p).deltas
    assert np.allclose(got, want, atol=1e-14)
    assert np.abs(got).max() > 0.1


def test_projective_plane_curvature():
    p = standard_flag((1, 2))
    x, y = tangent_from_skew(unit(3, 0, 1), p), tangent_from_skew(unit(3, 0, 2), p)
    assert flag_sectional(x, y, normalized=True) == pytest.approx(1.0, abs=1e-14)


def test_curvature_symmetries(rng):
    p = random_flag((1, 2, 2), rng)
    x, y = random_flag_tangent(p, rng), random_flag_tangent(p, rng)
    assert flag_sectional(x, x) == pytest.approx(0.0, abs=1e-12)
    assert flag_sectional(x, y) == pytest.approx(flag_sectional(y, x), rel=1e-12)
    assert flag_sectional(2 * x, y) == pytest.approx(4 * flag_sectional(x, y), rel=1e-12)
    assert flag_sectional(x, y) >= 0.0
    with pytest.raises(DegeneratePlane):
        flag_sectional(x, 3 * x, normalized=True)


def test_section_identity_and_projection(rng):
    p = random_flag((2, 1, 2), rng)
    q = fiber_representative(p)
    assert np.allclose(local_section_flag(p, q, p), q, atol=1e-13)
    r = flag_exp(p, random_flag_tangent(p, rng, scale=0.3))
    s = local_section_flag(p, q, r)
    assert np.allclose(projection(s, p.sig).mats, r.mats, atol=1e-12)


def test_section_cut_locus_names_block():
    p = standard_flag((1, 2))
    swap = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    r = FlagPoint(p.sig, np.stack([swap @ m @ swap for m in p.mats]))
    with pytest.raises(CutLocus) as info:
        local_section_flag(p, np.eye(3), r)
    assert info.value.block == 0


@settings(max_examples=25, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 2), (1, 1, 1), (2, 1, 2), (1, 2, 1, 2)]))
def test_geodesic_speed_is_constant(seed, sig):
    rng = np.random.default_rng(seed)
    p = random_flag(sig, rng)
    d = random_flag_tangent(p, rng)
    r = flag_exp(p, 0.7 * d)
    # the velocity at the endpoint is the same skew matrix carried over
    w = skew_from_tangent(d)
    assert oracle_metric(FlagTangent(r, tangent_from_skew(w, r).deltas),
                         FlagTangent(r, tangent_from_skew(w, r).deltas)) == pytest.approx(
        flag_metric(d, d), rel=1e-9)
