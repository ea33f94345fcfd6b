import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssfilt import (
    DimensionError,
    ScanConfig,
    StateSpaceSystem,
    Strategy,
    TransferFunction,
    backward_recurrence,
    filter_backward,
    filter_forward,
    filter_reverse_time,
    recurrence,
    recurrence_vjp,
    tf_to_ss,
    transpose_system,
)
from ssfilt.scan import recurrence_reverse_time
from ssfilt.verify import (
    GRAD_NAMES,
    compare_bundles,
    finite_difference_grads,
    oracle_dv0,
    oracle_kronecker_dA,
    random_stable_system,
)

from .conftest import make_case, rel_err


def grads(sys, v0, x, dy, cfg=ScanConfig()):
    _, tape = filter_forward(sys, v0, x, cfg)
    return filter_backward(tape, dy, cfg, return_adjoint=True)


def test_scalar_vjp_example():
    # v = [0, 1, 0.5]; upstream gradient on v(2) only
    A = np.array([[0.5]])
    traj = recurrence(A, [0.0], [[1.0], [0.0]])
    np.testing.assert_array_equal(traj.ravel(), [0.0, 1.0, 0.5])
    dA, dv0, dz = recurrence_vjp(A, [0.0], None, traj, np.array([[1.0], [1.0]]))
    np.testing.assert_allclose(dz.ravel(), [1.5, 1.0])
    np.testing.assert_allclose(dA, [[1.0]])
    np.testing.assert_allclose(dv0, [0.75])


def test_pure_delay_gradients():
    sys = tf_to_ss(TransferFunction([0, 1], [1, 0]))
    g = grads(sys, [2.0], [1.0, 2.0, 3.0], [1.0, 0.0, 0.0])
    # y = [v0, x0, x1]: only v0 sees dy(0)
    np.testing.assert_allclose(g.dv0, [1.0])
    np.testing.assert_allclose(g.dx, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(g.dC, [2.0])
    np.testing.assert_allclose(g.dA, [[0.0]])


def test_pure_gain_like_system():
    sys = StateSpaceSystem([[0.0]], [0.0], [0.0], 2.5)
    x = np.array([1.0, -1.0, 4.0])
    dy = np.array([0.5, 1.0, 2.0])
    g = grads(sys, None, x, dy)
    np.testing.assert_allclose(g.dx, 2.5 * dy)
    assert g.dD == pytest.approx(float(dy @ x))


def test_single_sample():
    sys = random_stable_system(3, 0.9, 0)
    v0 = np.array([1.0, 2.0, 3.0])
    g = grads(sys, v0, [0.7], [1.3])
    np.testing.assert_allclose(g.dv0, 1.3 * sys.C)
    np.testing.assert_allclose(g.dx, [1.3 * sys.D])
    np.testing.assert_allclose(g.dC, 1.3 * v0)
    np.testing.assert_array_equal(g.dA, np.zeros((3, 3)))


@pytest.mark.parametrize("k", range(12))
def test_matches_finite_differences(k):
    sys, v0, x, dy = make_case(k)
    report = compare_bundles(grads(sys, v0, x, dy), finite_difference_grads(sys, v0, x, dy), 1e-5, 1e-8)
    assert report.passed, report.format()


@pytest.mark.parametrize("cfg", [ScanConfig(Strategy.BLOCKED, 3, 17), ScanConfig(Strategy.DIAGONAL, 2, 33)])
@pytest.mark.parametrize("k", range(4))
def test_strategies_agree_on_gradients(cfg, k):
    sys, v0, x, dy = make_case(k, lengths=(300,))
    ref = grads(sys, v0, x, dy)
    other = grads(sys, v0, x, dy, cfg)
    tol = 1e-6 if cfg.strategy is Strategy.DIAGONAL else 1e-9
    for name in GRAD_NAMES:
        assert rel_err(getattr(other, name), getattr(ref, name)) < tol, name


@pytest.mark.parametrize("k", range(5))
def test_dx_is_transposed_filter_in_reverse(k):
    sys, _, x, dy = make_case(k)
    g = grads(sys, None, x, dy)
    np.testing.assert_array_equal(g.dx, filter_reverse_time(transpose_system(sys), None, dy))


@pytest.mark.parametrize("k", range(5))
def test_backward_recurrence_is_reverse_time_recurrence(k):
    sys, _, x, dy = make_case(k)
    dv = np.random.default_rng(k).standard_normal((x.size, sys.M))
    np.testing.assert_array_equal(backward_recurrence(sys.A, dv), recurrence_reverse_time(sys.A.T, None, dv))


@pytest.mark.parametrize("seed", range(4))
def test_kronecker_dA(seed):
    sys = random_stable_system(2, 0.9, seed)
    rng = np.random.default_rng(seed)
    v0, x, dy = rng.standard_normal(2), rng.standard_normal(4), rng.standard_normal(4)
    _, tape = filter_forward(sys, v0, x)
    g = filter_backward(tape, dy)
    np.testing.assert_allclose(g.dA, oracle_kronecker_dA(sys, tape.states, dy), atol=1e-9)


@pytest.mark.parametrize("k", range(6))
def test_dv0_closed_form(k):
    sys, v0, x, dy = make_case(k)
    g = grads(sys, v0, x, dy)
    np.testing.assert_allclose(g.dv0, sys.A.T @ g.dz[0] + dy[0] * sys.C, rtol=0, atol=1e-12)
    assert rel_err(g.dv0, oracle_dv0(sys, dy)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 40), st.integers(0, 10_000), st.floats(-3, 3))
def test_linear_in_upstream(M, N, seed, alpha):
    sys = random_stable_system(M, 0.9, seed)
    rng = np.random.default_rng(seed)
    v0, x, dy1, dy2 = rng.standard_normal(M), rng.standard_normal(N), rng.standard_normal(N), rng.standard_normal(N)
    g1, g2 = grads(sys, v0, x, dy1), grads(sys, v0, x, dy2)
    g = grads(sys, v0, x, alpha * dy1 + dy2)
    for name in GRAD_NAMES:
        np.testing.assert_allclose(
            getattr(g, name), alpha * np.asarray(getattr(g1, name)) + getattr(g2, name), atol=1e-9
        )


def test_shape_errors():
    sys = random_stable_system(2, 0.9, 0)
    _, tape = filter_forward(sys, None, np.ones(5))
    with pytest.raises(DimensionError):
        filter_backward(tape, np.ones(4))
    with pytest.raises(DimensionError):
        backward_recurrence(sys.A, np.ones((5, 3)))
    with pytest.raises(DimensionError):
        recurrence_vjp(sys.A, None, np.ones((5, 2)), tape.states[:3], np.ones((5, 2)))


def test_single_precision_gradients():
    sys, v0, x, dy = make_case(1, lengths=(200,))
    g64 = grads(sys, v0, x, dy)
    g32 = grads(sys.astype(np.float32), v0.astype(np.float32), x.astype(np.float32), dy.astype(np.float32))
    assert g32.dA.dtype == np.float32
    for name in GRAD_NAMES:
        assert rel_err(getattr(g32, name), getattr(g64, name)) < 1e-4, name
