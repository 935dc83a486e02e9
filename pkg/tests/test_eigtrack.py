import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flaggeo.eigtrack import (
    default_cluster_tol,
    eigenflag,
    eigenframe_check,
    lift_length_check,
    polynomial_curve,
    track,
)
from flaggeo.errors import (
    AmbiguousClustering,
    CutLocusReached,
    NonGeneric,
    SignatureChange,
    ValidationError,
)
from flaggeo.grassmann import StiefelFrame
from flaggeo.linalg import random_orthogonal, random_symmetric
from flaggeo.suites import projector_at_angles, random_projector, rotating_curve


def crossing_curve(x_cross):
    return polynomial_curve([np.diag([1.0, 1.0 - x_cross, -5.0]), np.diag([0.0, 1.0, 0.0])])


def test_eigenflag_orders_and_clusters():
    f = eigenflag(np.diag([1.0, 3.0, 3.0, -2.0]))
    assert f.signature == (2, 1, 1)
    assert np.allclose(f.eigenvalues, [3.0, 1.0, -2.0])
    assert np.allclose(f.projectors[0], np.diag([0.0, 1.0, 1.0, 0.0]))


def test_eigenflag_ambiguous_band():
    with pytest.raises(AmbiguousClustering):
        eigenflag(np.diag([1.0, 1.0 + 1.5e-8]), cluster_tol=1e-8)
    assert eigenflag(np.diag([1.0, 1.0 + 0.5e-8]), cluster_tol=1e-8).signature == (2,)


def test_non_generic():
    f = eigenflag(2.0 * np.eye(3))
    assert f.non_generic
    with pytest.raises(NonGeneric):
        f.flag


def test_eigenframe_check_sees_wrong_frame():
    s = np.diag([2.0, 1.0])
    assert eigenframe_check(np.eye(2), s) == 0.0
    assert eigenframe_check(np.array([[0.0, 1.0], [1.0, 0.0]]), s) > 1.0


def test_rotating_curve_is_tracked():
    grid = np.linspace(-1.4, 1.4, 100)
    res = track(rotating_curve(), 0.0, grid)
    assert res.complete
    assert np.nanmax(res.residuals) < 1e-9
    # the section follows the rotation: first column is (cos x, sin x)
    for x, q in zip(grid, res.frames):
        assert abs(q[:, 0] @ [np.cos(x), np.sin(x)]) == pytest.approx(1.0, abs=1e-6)


def test_boundary_at_cut_locus():
    grid = np.linspace(-1.6, 1.6, 50)
    res = track(rotating_curve(), 0.0, grid)
    assert not res.complete
    assert res.boundary == {"right": 49, "left": 0}
    assert np.all(np.abs(grid[res.in_domain]) < np.pi / 2)
    with pytest.raises(CutLocusReached) as info:
        track(rotating_curve(), 0.0, grid, strict=True)
    assert info.value.partial.in_domain.sum() == res.in_domain.sum()


def test_coarse_grid_is_refined_not_a_crossing():
    grid = np.linspace(-3.0, 3.0, 7)
    res = track(rotating_curve(), 0.0, grid)
    assert res.boundary == {"right": 5, "left": 1}
    assert res.in_domain.tolist() == [False, False, True, True, True, False, False]


@pytest.mark.parametrize("x_cross", [0.0, 0.3137, -0.77])
def test_crossing_reports_straddling_cell(x_cross):
    grid = np.linspace(-1.0, 1.0, 10)
    with pytest.raises(SignatureChange) as info:
        track(crossing_curve(x_cross), -0.9, grid)
    lo, hi = info.value.extra["grid_cell"]
    assert lo <= x_cross <= hi
    i = info.value.extra["index"]
    assert grid[i - 1] == lo and grid[i] == hi


def test_tracking_leftwards_crossing():
    grid = np.linspace(-1.0, 1.0, 10)
    with pytest.raises(SignatureChange) as info:
        track(crossing_curve(-0.3), 0.9, grid)
    lo, hi = info.value.extra["grid_cell"]
    assert lo <= -0.3 <= hi


def test_user_frame_and_orientation(rng):
    s0 = np.diag([3.0, 2.0, 1.0])
    c = polynomial_curve([s0, random_symmetric(3, rng, 0.1)])
    q0 = np.diag([1.0, -1.0, 1.0])
    res = track(c, 0.0, np.linspace(-0.5, 0.5, 11), q0=q0)
    assert np.linalg.det(res.frames[5]) == pytest.approx(-1.0)
    res_so = track(c, 0.0, np.linspace(-0.5, 0.5, 11), q0=q0, special_orthogonal=True)
    assert np.linalg.det(res_so.frames[5]) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        track(c, 0.0, [0.0, 0.1], q0=np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 1]]))


def test_grid_validation():
    with pytest.raises(ValidationError):
        track(rotating_curve(), 0.0, [0.1, 0.0])
    with pytest.raises(ValidationError):
        track(rotating_curve(), 0.0, [0.0, 5.0])


def test_parallel_matches_serial(rng):
    c = polynomial_curve([np.diag([4.0, 2.0, 1.0, 0.0]), random_symmetric(4, rng, 0.3)])
    grid = np.linspace(-1.0, 1.0, 40)
    a = track(c, 0.0, grid)
    b = track(c, 0.0, grid, jobs=4)
    assert a.boundary == b.boundary
    for fa, fb in zip(a.frames, b.frames):
        assert (fa is None and fb is None) or np.array_equal(fa, fb)


def test_lift_length_equals_distance(rng):
    p = random_projector(6, 2, rng)
    r = projector_at_angles(p, [0.4, 1.2], rng)
    u = StiefelFrame(p.basis() @ random_orthogonal(2, rng, special=False))
    lift, base = lift_length_check(p, r, u, 1000)
    assert lift == pytest.approx(base, abs=1e-9)
    assert base == pytest.approx(np.hypot(0.4, 1.2), abs=1e-12)


@settings(max_examples=30, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1))
def test_clustering_stable_under_small_perturbation(seed):
    rng = np.random.default_rng(seed)
    n = 5
    q = random_orthogonal(n, rng)
    vals = np.array([3.0, 3.0, 1.0, 0.5, 0.5])
    s = q @ np.diag(vals) @ q.T
    tol = 1e-3
    e = random_symmetric(n, rng)
    e *= (tol / 10) / np.linalg.norm(e, 2)
    assert eigenflag(s + e, tol).signature == eigenflag(s, tol).signature == (2, 1, 2)
    assert default_cluster_tol(s) == pytest.approx(3e-8)
