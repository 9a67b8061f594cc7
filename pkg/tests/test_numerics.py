import numpy as np
import pytest
from hypothesis import given, strategies as st

from chamberflow import numerics


def test_gauss_legendre_exactness():
    grid = numerics.gauss_legendre(2)
    assert abs(grid.integrate(grid.points()[:, 0] ** 2) - 2 / 3) < 1e-14


def test_trapezoid_periodic_cos_squared():
    grid = numerics.trapezoid_periodic(16)
    assert abs(grid.integrate(np.cos(grid.points()[:, 0]) ** 2) - np.pi) < 1e-12


def test_gauss_legendre_rejects_empty_rule():
    with pytest.raises(ValueError):
        numerics.gauss_legendre(0)


def test_adaptive_truncation_gaussian_tail():
    val, radius = numerics.integrate_adaptive(
        lambda p: np.exp(-p[:, 0] ** 2), lambda r: numerics.gauss_legendre(80, -r, r), radius=1.0, tol=1e-10)
    assert abs(val - np.sqrt(np.pi)) < 1e-9
    assert radius >= 4.0


def test_adaptive_truncation_reports_failure():
    with pytest.raises(numerics.QuadratureError):
        numerics.integrate_adaptive(lambda p: 1.0 / (1 + np.abs(p[:, 0])),
                                    lambda r: numerics.gauss_legendre(40, -r, r), max_doublings=2)


def test_sinh_sinh_rule_algebraic_decay():
    grid = numerics.sinh_sinh_rule(120, 4.0)
    x = grid.points()[:, 0]
    assert abs(grid.integrate(1.0 / (1 + x**2)) - np.pi) < 1e-10


def test_tensor_rule_mass():
    grid = numerics.tensor_gauss_legendre(5, [(0, 2), (-1, 3)])
    assert abs(grid.mass() - 8.0) < 1e-13
    assert np.all(grid.weights() > 0)


def test_support_box_and_chunks():
    box = numerics.support_box(lambda p: numerics.bump(np.linalg.norm(p - 0.5, axis=1) / 0.2), [(-1, 1)] * 2, 41)
    for lo, hi in box:
        assert lo < 0.3 and hi > 0.7 and lo > 0.0
    grid = numerics.tensor_gauss_legendre(30, box)
    direct = grid.integrate(np.sum(grid.points(), axis=1))
    assert abs(numerics.integrate_chunked(lambda p: np.sum(p, axis=1), grid, chunk=7) - direct) < 1e-12
    assert numerics.support_box(lambda p: np.zeros(len(p)), [(-1, 1)], 11) is None


def test_fd_hessian_quadratic_exact():
    A = np.array([[2.0, 0.5, 0.1], [0.5, -1.0, 0.3], [0.1, 0.3, 4.0]])
    # truncation error vanishes for quadratics, so a coarse step isolates roundoff
    H = numerics.fd_hessian(lambda x: 0.5 * x @ A @ x + x[0], np.array([0.2, -0.1, 0.4]), step=0.05)
    assert np.max(np.abs(H - A)) < 1e-10
    assert np.max(np.abs(H - H.T)) < 1e-8


def test_fd_gradient_order_two():
    errs = []
    for step in (0.1, 0.05, 0.025):
        g = numerics.fd_gradient(lambda x: np.sin(x[0]), np.array([0.7]), step=step, richardson=False)
        errs.append(abs(g[0] - np.cos(0.7)))
    assert abs(errs[0] / errs[2] - 16) < 0.5


def test_fd_step_underflow_guard():
    with pytest.raises(numerics.FiniteDifferenceError):
        numerics.fd_gradient(lambda x: x[0], np.array([1.0]), step=1e-15)


def test_loglog_fit_exact_power_law():
    fit = numerics.loglog_fit([(h, 3 * h**1.5) for h in (0.2, 0.1, 0.05)])
    assert abs(fit.slope - 1.5) < 1e-12
    assert abs(numerics.loglog_fit([(h, 2.0) for h in (0.2, 0.1, 0.05)]).slope) < 1e-12


def test_loglog_fit_degenerate():
    with pytest.raises(numerics.DegenerateFitError):
        numerics.loglog_fit([(0.1, 1.0)] * 3)
    with pytest.raises(numerics.DegenerateFitError):
        numerics.loglog_fit([(0.1, 1.0), (0.05, 2.0)])


def test_loglog_fit_noisy_slope():
    rng = np.random.default_rng(1)
    hs = 0.2 / 2 ** np.arange(6)
    fit = numerics.loglog_fit([(h, h**2 * np.exp(0.01 * rng.normal())) for h in hs])
    assert abs(fit.slope - 2) < 5 * fit.residual / np.std(np.log(hs)) + 1e-3


def test_deterministic_net_is_reproducible():
    a = numerics.deterministic_net([(0, 1), (-2, 2)], 100, seed=3)
    b = numerics.deterministic_net([(0, 1), (-2, 2)], 100, seed=3)
    assert np.array_equal(a, b)
    assert a[:, 1].min() >= -2 and a[:, 1].max() <= 2


@given(st.floats(-3, 3), st.floats(0.1, 1.0), st.floats(0.05, 1.0))
def test_plateau_bounds(r, inner, gap):
    v = float(numerics.plateau(r, inner, inner + gap))
    assert 0.0 <= v <= 1.0
    if r <= inner:
        assert v == 1.0
    if r >= inner + gap:
        assert v == 0.0


@given(st.floats(-0.99, 0.99))
def test_bump_even_and_positive(r):
    assert float(numerics.bump(r)) == pytest.approx(float(numerics.bump(-r)))
    assert 0 < float(numerics.bump(r)) <= 1.0
