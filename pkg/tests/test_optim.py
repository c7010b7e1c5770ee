import numpy as np
import pytest

from mwe_complexity.errors import NonFiniteObjective
from mwe_complexity.optim import (
    LbfgsConfig,
    Status,
    backtracking,
    finite_difference_gradient,
    minimize,
    strong_wolfe,
    two_loop,
)


def quadratic(x):
    return 0.5 * float(x @ x), x.copy()


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


def accelerated_gd_with_restarts(fg, x0, iters=200000, tol=1e-13):
    """Independent oracle: Nesterov steps, Armijo step size, restart on ascent."""
    x = np.array(x0, dtype=np.float64)
    y = x.copy()
    t, step = 1.0, 1e-3
    fx, _ = fg(x)
    for _ in range(iters):
        fy, gy = fg(y)
        if np.max(np.abs(gy)) < tol:
            return y
        while True:
            xn = y - step * gy
            fn, _ = fg(xn)
            if fn <= fy - 0.5 * step * gy @ gy:
                break
            step *= 0.5
        if fn > fx:
            t, y = 1.0, x.copy()
            continue
        tn = (1 + np.sqrt(1 + 4 * t * t)) / 2
        y = xn + (t - 1) / tn * (xn - x)
        x, fx, t = xn, fn, tn
        step *= 1.1
    return x


def test_quadratic_dim10():
    res = minimize(quadratic, np.ones(10), LbfgsConfig(grad_tol=1e-8))
    assert res.status is Status.CONVERGED
    assert res.grad_norm <= 1e-8 and res.iterations <= 50
    assert np.allclose(res.x, 0.0, atol=1e-8)


def test_rosenbrock_matches_oracle():
    oracle = accelerated_gd_with_restarts(rosenbrock, [-1.2, 1.0])
    assert np.max(np.abs(oracle - 1.0)) < 1e-10
    res = minimize(rosenbrock, np.array([-1.2, 1.0]), LbfgsConfig(grad_tol=1e-10))
    assert np.max(np.abs(res.x - oracle)) <= 1e-6
    assert np.max(np.abs(res.x - 1.0)) <= 1e-6


def test_least_squares_matches_normal_equations():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(20, 5))
    b = rng.normal(size=20)
    closed = np.linalg.solve(A.T @ A, A.T @ b)

    def fg(x):
        r = A @ x - b
        return 0.5 * float(r @ r), A.T @ r

    res = minimize(fg, np.zeros(5), LbfgsConfig(grad_tol=1e-10))
    assert np.max(np.abs(res.x - closed)) <= 1e-8


def test_armijo_holds_on_every_step():
    cfg = LbfgsConfig(grad_tol=1e-10)
    res = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg)
    assert res.trace
    for f_before, f_after, t, slope in res.trace:
        assert slope < 0
        assert f_after <= f_before + cfg.c1 * t * slope + 1e-15


def test_two_loop_reproduces_inverse_hessian_with_conjugate_pairs():
    rng = np.random.default_rng(1)
    n = 6
    M = rng.normal(size=(n, n))
    A = M @ M.T + n * np.eye(n)
    # A-conjugate directions: eigenvectors of A
    _, vecs = np.linalg.eigh(A)
    pairs = []
    for k in range(n):
        s = vecs[:, k] * (k + 1)
        y = A @ s
        pairs.append((s, y, 1.0 / (s @ y)))
    g = rng.normal(size=n)
    assert np.allclose(two_loop(g, pairs), np.linalg.solve(A, g), rtol=1e-10, atol=1e-12)


def test_two_loop_without_pairs_is_identity():
    g = np.array([1.0, -2.0])
    assert np.array_equal(two_loop(g, []), g)


def test_line_searches_satisfy_their_conditions():
    x = np.array([-1.2, 1.0])
    f0, g0 = rosenbrock(x)
    p = -g0
    slope = float(g0 @ p)
    t0 = 1.0 / np.linalg.norm(g0)
    t, f1, g1, _ = strong_wolfe(rosenbrock, x, f0, slope, p, t0)
    assert t is not None
    assert f1 <= f0 + 1e-4 * t * slope
    assert abs(g1 @ p) <= 0.9 * abs(slope)
    t, f1, _, _ = backtracking(rosenbrock, x, f0, slope, p, 1.0)
    assert t is not None and f1 <= f0 + 1e-4 * t * slope


def test_max_iters_and_nonfinite():
    res = minimize(rosenbrock, np.array([-1.2, 1.0]), LbfgsConfig(max_iters=3))
    assert res.status is Status.MAX_ITERS and res.iterations == 3
    with pytest.raises(NonFiniteObjective):
        minimize(lambda x: (float("nan"), x), np.ones(2))


def test_ascent_only_objective_fails_line_search():
    # wrong-signed gradient: no step along -g decreases f
    res = minimize(lambda x: (float(x @ x), -2 * x), np.ones(3))
    assert res.status is Status.LINE_SEARCH_FAILED


def test_config_validation():
    with pytest.raises(ValueError):
        LbfgsConfig(c1=0.9, c2=0.1)
    with pytest.raises(ValueError):
        LbfgsConfig(memory=0)


def test_finite_difference_examples():
    g = finite_difference_gradient(lambda x: float(x[0] ** 2), np.array([3.0]))
    assert g[0] == pytest.approx(6.0, abs=1e-8)
    w = np.array([1.5, -2.0, 0.25])
    for h in (1e-2, 1e-5, 0.5):
        assert np.allclose(finite_difference_gradient(lambda x: float(w @ x) + 4.0,
                                                      np.zeros(3), h), w, atol=1e-9)


def test_finite_difference_polynomial_second_order():
    # f = x0^3 x1 + 2 x2^2 x3 - x4^4 + x0 x4, gradient derived by hand
    def f(x):
        return x[0] ** 3 * x[1] + 2 * x[2] ** 2 * x[3] - x[4] ** 4 + x[0] * x[4]

    def grad(x):
        return np.array([3 * x[0] ** 2 * x[1] + x[4], x[0] ** 3, 4 * x[2] * x[3],
                         2 * x[2] ** 2, -4 * x[4] ** 3 + x[0]])

    x = np.array([0.7, -1.3, 0.4, 2.0, -0.9])
    err1 = np.max(np.abs(finite_difference_gradient(f, x, 1e-2) - grad(x)))
    err2 = np.max(np.abs(finite_difference_gradient(f, x, 5e-3) - grad(x)))
    assert err1 < 1e-3
    assert err2 == pytest.approx(err1 / 4, rel=0.05)   # halving h quarters the error
