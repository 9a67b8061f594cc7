import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chamberflow import boundary, lie, numerics

seeds = st.integers(0, 2**31 - 1)
groups = st.sampled_from([2, 3])
A = boundary.horocycle_bracket


@given(seeds, groups)
def test_action_is_a_group_action(seed, n):
    rng = np.random.default_rng(seed)
    g1, g2 = lie.random_sl(n, 2, rng)
    k = lie.random_so(n, 1, rng)[0]
    lhs = boundary.act(g1, boundary.act(g2, k))
    assert boundary.same_boundary_point(lhs, boundary.act(g1 @ g2, k))


@given(seeds, groups)
def test_canonical_representative_is_m_invariant(seed, n):
    rng = np.random.default_rng(seed)
    k = lie.random_so(n, 1, rng)[0]
    for m in boundary.m_group(n):
        assert boundary.same_boundary_point(k @ m, k)


@given(seeds, groups)
def test_horocycle_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    g, h = lie.random_sl(n, 2, rng)
    k = lie.random_so(n, 1, rng)[0]
    gk = boundary.act(g, k)
    assert np.max(np.abs(A(g @ h, gk) - A(h, k) - A(g, gk))) < 1e-10
    assert np.max(np.abs(A(np.linalg.inv(g), k) + A(g, gk))) < 1e-10


@given(seeds, groups)
def test_horocycle_facts(seed, n):
    rng = np.random.default_rng(seed)
    g, gamma = lie.random_sl(n, 2, rng)
    w0 = lie.weyl_group(n).longest.matrix
    bp, bm = boundary.b_plus(n), boundary.b_minus(n)
    assert np.allclose(A(g, boundary.act(g, bp)), lie.iwasawa_H(g), atol=1e-10)
    assert np.allclose(A(np.linalg.inv(g), bp), -lie.iwasawa_H(g), atol=1e-10)
    assert np.allclose(A(g, boundary.act(g, bm)), lie.iwasawa_H(g @ w0), atol=1e-10)
    assert np.allclose(A(np.linalg.inv(g), bm), -lie.iwasawa_H(g @ w0), atol=1e-10)
    assert np.allclose(lie.iwasawa_H(gamma @ g),
                       lie.iwasawa_H(g) + A(gamma, boundary.act(gamma @ g, bp)), atol=1e-10)


def test_bracket_at_origin_vanishes(rng):
    k = lie.random_so(3, 5, rng)
    assert np.max(np.abs(A(np.eye(3), k))) < 1e-12


def test_boundary_grid_masses():
    for n, size in ((2, 16), (3, 8)):
        grid = boundary.boundary_grid(n, size)
        assert abs(np.sum(grid.weights) - 1) < 1e-13
    grid = boundary.boundary_grid(3, 16)
    T = boundary.density(grid, lambda k: k[..., 2, 0] ** 2)
    # the third coordinate of a uniform point on the sphere has second moment 1/3
    assert abs(T.integrate() - 1 / 3) < 1e-12


def test_density_rejects_bad_weights():
    grid = boundary.boundary_grid(2, 8)
    bad = boundary.BoundaryGrid(2, grid.k, grid.weights * 2, grid.params, grid.shape)
    with pytest.raises(ValueError):
        boundary.BoundaryDensity(bad, np.ones(8))


def test_trig_interpolation_off_grid():
    grid = boundary.boundary_grid(2, 32)
    T = boundary.BoundaryDensity(grid, np.cos(2 * grid.params[:, 0]) + 0.5)
    phi = np.array([0.123, 1.7])
    assert np.allclose(T.evaluate(lie.rotation2(phi)), np.cos(2 * phi) + 0.5, atol=1e-12)


def test_poisson_transform_of_constant_at_origin():
    T = boundary.constant_density(boundary.boundary_grid(2, 64))
    assert abs(boundary.poisson_transform(np.array([0.3j, -0.3j]), T, np.eye(2)) - 1) < 1e-14


def test_poisson_weyl_invariance_and_laplacian(rng):
    T = boundary.constant_density(boundary.boundary_grid(2, 128))
    nu = np.array([0.7, -0.7])
    pts = lie.random_sl(2, 20, rng)
    diff = boundary.poisson_transform(1j * nu, T, pts) - boundary.poisson_transform(-1j * nu, T, pts)
    assert np.max(np.abs(diff)) < 1e-6

    def u(z):
        return boundary.poisson_transform(1j * nu, T, boundary.h2_group_element(np.atleast_1d(z)))

    z = np.array([0.3 + 1.4j])
    ratio = boundary.laplace_beltrami_h2(u, z)[0] / u(z)[0]
    expect = -(lie.dual_norm(nu) ** 2 + lie.dual_norm(lie.rho_vector(2)) ** 2)
    assert abs(ratio - expect) / abs(expect) < 1e-3


def test_poisson_resolution_check_raises():
    grid = boundary.boundary_grid(2, 4)
    T = boundary.density(grid, lambda k: np.exp(3 * k[..., 0, 1]))
    with pytest.raises(numerics.QuadratureError):
        boundary.poisson_transform(np.array([2j, -2j]), T, lie.exp_a(np.array([1.0, -1.0])), check=True)


def test_e_function_identity_and_poles():
    R = lie.weyl_group(2)
    ident = R.weyl_elements[0]
    assert ident.is_identity()
    assert boundary.e_function_inverse(ident, np.array([0.3, -0.3]), 2) == 1
    alpha = R.positive_roots[0]
    # Gamma(1/4 + z/2) has a pole at z = -1/2
    assert boundary.e_function_inverse(R.longest, -0.5 * alpha, 2) == boundary.POLE
    assert boundary.e_function(R.longest, -0.5 * alpha, 2) == 0
    z = 0.8
    expect = complex(np.exp(np.log(__import__("scipy").special.gamma(0.75 + z / 2))
                            + np.log(__import__("scipy").special.gamma(0.25 + z / 2))))
    assert abs(boundary.e_function_inverse(R.longest, z * alpha, 2) - expect) < 1e-12


@pytest.mark.parametrize("n,size,tol", [(2, 128, 1e-9), (3, 16, 1e-9)])
def test_principal_series_cocycle(rng, n, size, tol):
    grid = boundary.boundary_grid(n, size)
    f = boundary.density(grid, lambda k: 1.0 + 0.3 * k[..., 0, 0] ** 2)
    nu = lie.random_regular_dual(n, 1, rng)[0]
    g1, g2 = lie.random_sl(n, 2, rng, scale=0.4)
    twice = boundary.principal_series_act(nu, g1, boundary.principal_series_act(nu, g2, f))
    assert np.max(np.abs(twice.values - boundary.principal_series_act(nu, g1 @ g2, f).values)) < tol


def test_principal_series_on_grid_samples(rng):
    grid = boundary.boundary_grid(2, 128)
    f = boundary.BoundaryDensity(grid, 1.0 + 0.3 * np.cos(2 * grid.params[:, 0]))
    nu = np.array([0.4, -0.4])
    g1, g2 = lie.random_sl(2, 2, rng, scale=0.4)
    twice = boundary.principal_series_act(nu, g1, boundary.principal_series_act(nu, g2, f))
    assert np.max(np.abs(twice.values - boundary.principal_series_act(nu, g1 @ g2, f).values)) < 1e-9


@pytest.mark.parametrize("n,size", [(2, 256), (3, 40)])
def test_principal_series_unitarity(rng, n, size):
    grid = boundary.boundary_grid(n, size)
    f = boundary.density(grid, lambda k: 1.0 + 0.3 * k[..., 0, 0] * k[..., 1, 0])
    nu = lie.random_regular_dual(n, 1, rng)[0]
    g = lie.random_sl(n, 1, rng, scale=0.4)[0]
    moved = boundary.principal_series_act(nu, g, f)
    assert abs(moved.l2_norm() - f.l2_norm()) / f.l2_norm() < 1e-6


@given(seeds, groups)
def test_phi_map_matches_fd(seed, n):
    rng = np.random.default_rng(seed)
    g = lie.random_sl(n, 1, rng)[0]
    theta = lie.random_regular_dual(n, 1, rng)[0]
    alg = boundary.phi_map(g, theta).covec
    fd = boundary.phi_map_fd(g, theta).covec
    assert np.max(np.abs(alg - fd)) < 1e-6


def test_heckman_limit_order(rng):
    xi = lie.p_basis(3)[3] + 0.5 * lie.p_basis(3)[0] - 0.7 * lie.p_basis(3)[4]
    fit = numerics.loglog_fit([(t, boundary.heckman_error(xi, t)) for t in (0.2, 0.1, 0.05, 0.025)])
    assert fit.slope >= 1


@given(seeds, groups)
def test_open_cell_roundtrip(seed, n):
    rng = np.random.default_rng(seed)
    g = lie.random_sl(n, 1, rng)[0]
    k1, k2 = boundary.pair_of(g)
    rep = boundary.open_cell_membership(k1, k2)
    assert rep is not None
    b1, b2 = boundary.pair_of(rep)
    assert boundary.same_boundary_point(b1, k1) and boundary.same_boundary_point(b2, k2)
    assert boundary.flags_transverse(k1, k2)


def test_open_cell_special_pairs():
    for n in (2, 3):
        assert boundary.open_cell_membership(boundary.b_plus(n), boundary.b_plus(n)) is None
        g = boundary.open_cell_membership(boundary.b_plus(n), boundary.b_minus(n))
        assert np.allclose(g, np.eye(n), atol=1e-12)


def test_open_cell_agrees_with_transversality_oracle(rng):
    k1 = lie.random_so(3, 300, rng)
    k2 = lie.random_so(3, 300, rng)
    _, ok = boundary.open_cell_batch(k1, k2)
    oracle = np.array([boundary.flags_transverse(a, b) for a, b in zip(k1, k2)])
    assert np.array_equal(ok, oracle)


def test_near_degenerate_pair_warns():
    n = 2
    eps = 1e-12
    k1 = lie.rotation2(0.0)
    k2 = lie.rotation2(eps)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert boundary.open_cell_membership(k1, k2) is None
    assert any(issubclass(w.category, boundary.NearDegeneratePairWarning) for w in caught)


@given(seeds, groups)
def test_psi_roundtrip_and_sigma(seed, n):
    rng = np.random.default_rng(seed)
    g = lie.random_sl(n, 1, rng)[0]
    b1, b2, H = boundary.psi_map(g)
    assert boundary.same_gm(boundary.psi_inverse(b1, b2, H), g, tol=1e-8)
    s = boundary.section_sigma(b1, b2)
    assert boundary.same_boundary_point(boundary.pair_of(s)[0], b1)
