import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from flaggeo.errors import LogBranch, NotOrthogonal, NotSkew, StepTooLarge
from flaggeo.linalg import (
    DerivConfig,
    EPS,
    bracket,
    central_diff,
    check_orthogonal,
    check_skew,
    expm_orthogonal,
    inner,
    logm_orthogonal,
    norm,
    random_orthogonal,
    random_skew,
    range_basis,
)


def test_inner_is_half_trace():
    a = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert inner(a, a) == pytest.approx(1.0)
    assert norm(a) == pytest.approx(1.0)


def test_bracket_antisymmetric(rng):
    a, b = random_skew(4, rng), random_skew(4, rng)
    assert np.allclose(bracket(a, b), -bracket(b, a))
    assert np.allclose(bracket(a, a), 0.0)


def test_expm_orthogonal_rotation():
    w = np.array([[0.0, -0.3], [0.3, 0.0]])
    g = expm_orthogonal(w)
    assert np.allclose(g, [[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]], atol=1e-15)


def test_logm_inverts_expm(rng):
    for n in (2, 3, 5, 8):
        w = random_skew(n, rng, 0.4)
        assert np.allclose(logm_orthogonal(expm_orthogonal(w)), w, atol=1e-12)


def test_logm_rejects_half_turn():
    with pytest.raises(LogBranch):
        logm_orthogonal(np.diag([-1.0, -1.0, 1.0]))


def test_checks():
    with pytest.raises(NotSkew):
        check_skew(np.eye(2))
    with pytest.raises(NotOrthogonal):
        check_orthogonal(2 * np.eye(3))


def test_random_orthogonal_special(rng):
    q = random_orthogonal(5, rng)
    assert np.allclose(q.T @ q, np.eye(5), atol=1e-14)
    assert np.linalg.det(q) == pytest.approx(1.0)


def test_range_basis():
    p = np.diag([1.0, 0.0, 1.0])
    u = range_basis(p, 2)
    assert np.allclose(u @ u.T, p)


def test_default_step_policy():
    cfg = DerivConfig()
    assert cfg.step_for(0.0) == pytest.approx(EPS ** (1 / 3))
    assert cfg.step_for(2.0) == pytest.approx(3 * EPS ** (1 / 3))
    assert DerivConfig(step=1e-3).step_for(5.0) == 1e-3
    with pytest.raises(ValueError):
        DerivConfig(mode="spline")


def test_central_diff_orders():
    f = np.sin
    plain = central_diff(f, 1e-2)
    rich = central_diff(f, 1e-2, richardson=True)
    assert abs(plain - 1.0) > 1e-6
    assert abs(rich - 1.0) < 1e-10


def test_step_too_large():
    with pytest.raises(StepTooLarge):
        central_diff(lambda t: np.sin(50 * t), 0.5, richardson=True, max_rel_change=1e-3)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(arrays(np.float64, (4, 4), elements=st.floats(-0.6, 0.6)))
def test_log_exp_property(a):
    w = (a - a.T) / 2
    assert np.allclose(logm_orthogonal(expm_orthogonal(w)), w, atol=1e-11)
