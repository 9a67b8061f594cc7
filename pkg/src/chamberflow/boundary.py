"""Boundary B = K/M: horocycle bracket, plane waves, Poisson transform,
e-functions, principal series and the map to the cotangent bundle."""

from dataclasses import dataclass, field
from typing import Callable, Optional
import warnings

import numpy as np
from scipy.special import gamma as gamma_fn

from . import lie, numerics


class NearDegeneratePairWarning(UserWarning):
    """A boundary pair lies numerically close to the complement of the open cell."""


# ---------------------------------------------------------------- boundary points

def canonical_boundary(k):
    """Canonical representative of kM.

    Columns 0..n-2 are flipped (together with the last column, which keeps the
    flip inside M) so that their first nonzero entry is positive.
    """
    k = np.array(k, dtype=float, copy=True)
    n = k.shape[-1]
    for j in range(n - 1):
        col = k[..., :, j]
        first = np.argmax(np.abs(col) > 1e-12, axis=-1)
        lead = np.take_along_axis(col, first[..., None], axis=-1)[..., 0]
        flip = np.where(lead < 0, -1.0, 1.0)
        k[..., :, j] *= flip[..., None]
        k[..., :, n - 1] *= flip[..., None]
    return k


def m_group(n):
    """The finite group M as an array of diagonal sign matrices."""
    out = []
    for bits in range(2 ** n):
        s = np.array([-1.0 if bits >> i & 1 else 1.0 for i in range(n)])
        if np.prod(s) > 0:
            out.append(np.diag(s))
    return np.array(out)


def b_plus(n):
    return np.eye(n)


def b_minus(n):
    R = lie.weyl_group(n)
    return canonical_boundary(R.longest.matrix)


def act(g, k):
    """g.kM = k(gk)M (broadcast)."""
    return canonical_boundary(lie.iwasawa_k(np.asarray(g) @ np.asarray(k)))


def same_boundary_point(k1, k2, tol=1e-9):
    return np.max(np.abs(canonical_boundary(k1) - canonical_boundary(k2)), axis=(-2, -1)) < tol


# ---------------------------------------------------------------- horocycle bracket and plane waves

def horocycle_bracket(g, k):
    """A(gK, kM) = -H(g^{-1} k) as diagonal coordinates (broadcast)."""
    return -lie.iwasawa_H(np.linalg.solve(g, k))


def plane_wave(lam, k, g):
    """e_{lam,b}(x) = exp((lam + rho) A(x, b)) for x = g.o, b = kM."""
    n = np.shape(g)[-1]
    A = horocycle_bracket(g, k)
    expo = lie.pair(np.asarray(lam) + lie.rho_vector(n), A)
    return np.exp(expo)


# ---------------------------------------------------------------- quadrature on K/M

@dataclass(frozen=True)
class BoundaryGrid:
    """Quadrature on K (total mass 1); integrates M-invariant functions over K/M."""

    n: int
    k: np.ndarray
    weights: np.ndarray
    params: np.ndarray
    shape: tuple

    @property
    def size(self):
        return len(self.weights)


def boundary_grid(n, size=None):
    """Angle grid on [0, pi) for n = 2; Euler ZYZ grid on SO(3) for n = 3.

    ``size`` is the node count (n = 2) or nodes per Euler angle (n = 3).
    """
    if n == 2:
        size = size or 64
        phi = np.pi * np.arange(size) / size
        w = np.full(size, 1.0 / size)
        return BoundaryGrid(2, lie.rotation2(phi), w, phi[:, None], (size,))
    if n == 3:
        if np.isscalar(size) or size is None:
            size = (size or 24,) * 3
        na, nb, ng = size
        a, wa = numerics.trapezoid_periodic(na).axes[0]
        b, wb = numerics.gauss_legendre(nb, 0.0, np.pi).axes[0]
        c, wc = numerics.trapezoid_periodic(ng).axes[0]
        A, B, C = np.meshgrid(a, b, c, indexing="ij")
        W = np.multiply.outer(np.multiply.outer(wa / (2 * np.pi), wb * np.sin(b) / 2), wc / (2 * np.pi))
        k = lie.euler_zyz(A.ravel(), B.ravel(), C.ravel())
        return BoundaryGrid(3, k, W.ravel(), np.stack([A.ravel(), B.ravel(), C.ravel()], -1), (na, nb, ng))
    raise ValueError("boundary grids are provided for n = 2, 3")


def refine(grid):
    if grid.n == 2:
        return boundary_grid(2, 2 * grid.shape[0])
    return boundary_grid(3, tuple(2 * s for s in grid.shape))


@dataclass(frozen=True)
class BoundaryDensity:
    """Samples of a smooth density on K/M against the normalised measure db.

    ``func`` (optional) evaluates the density at arbitrary rotations.
    """

    grid: BoundaryGrid
    values: np.ndarray
    func: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if abs(np.sum(self.grid.weights) - 1.0) > 1e-10:
            raise ValueError("boundary quadrature weights must sum to 1")

    def integrate(self, other=None):
        vals = self.values if other is None else self.values * other
        return np.dot(self.grid.weights, vals)

    def evaluate(self, k):
        if self.func is not None:
            return self.func(k)
        if self.grid.n == 2:
            return trig_interpolate(self.values, angle_mod_m(k))
        raise ValueError("off-grid evaluation on SO(3) needs a density function")

    def l2_norm(self):
        return float(np.sqrt(np.real(self.integrate(np.conj(self.values)))))


def density(grid, func):
    return BoundaryDensity(grid, np.asarray(func(grid.k)), func)


def constant_density(grid, value=1.0):
    return density(grid, lambda k: np.full(np.shape(k)[:-2], value, dtype=complex))


def angle_mod_m(k):
    """Angle in [0, pi) of a rotation in SO(2) modulo {+-1}."""
    return np.mod(np.arctan2(k[..., 1, 0], k[..., 0, 0]), np.pi)


def trig_interpolate(values, phi):
    """Evaluate the trigonometric interpolant of pi-periodic equispaced samples."""
    values = np.asarray(values)
    N = len(values)
    coef = np.fft.fft(values) / N
    freqs = np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        coef = coef.copy()
        nyq = N // 2
        coef[nyq] *= 0.5
        coef = np.append(coef, coef[nyq])
        freqs = np.append(freqs, nyq)
        freqs[nyq] = -nyq
    phi = np.asarray(phi)
    return np.exp(2j * np.outer(phi.ravel(), freqs)) @ coef if phi.ndim else np.exp(2j * phi * freqs) @ coef


# ---------------------------------------------------------------- Poisson transform and e-functions

def poisson_transform(lam, T, g, check=False, tol=1e-5):
    """P_lam(T)(x) = int_B exp((lam + rho) A(x, b)) T(db) at x = g.o (g may be a stack)."""
    g = np.asarray(g, dtype=float)
    single = g.ndim == 2
    gs = g[None] if single else g
    vals = np.array([np.dot(T.grid.weights * T.values, plane_wave(lam, T.grid.k, gi)) for gi in gs])
    if check:
        if T.func is None:
            raise ValueError("resolution check needs a density function")
        fine = density(refine(T.grid), T.func)
        vals_fine = poisson_transform(lam, fine, gs)
        change = np.max(np.abs(vals_fine - vals) / np.maximum(np.abs(vals_fine), 1e-300))
        if change > tol:
            raise numerics.QuadratureError(f"boundary grid under-resolved: doubling changes value by {change:.2e}")
    return vals[0] if single else vals


def laplace_beltrami_h2(u, z, step=1e-2):
    """Killing-metric Laplacian on the upper half-plane, 4th-order stencil.

    ``u`` takes complex points z = x + iy. With ds^2 = 2 (dx^2 + dy^2)/y^2
    the operator is (y^2/2)(d_xx + d_yy).
    """
    def second(e):
        return (-u(z + 2 * e) + 16 * u(z + e) - 30 * u(z) + 16 * u(z - e) - u(z - 2 * e)) / (12 * step**2)

    return 0.5 * np.imag(z) ** 2 * (second(step) + second(1j * step))


def h2_group_element(z):
    """g = [[sqrt y, x/sqrt y], [0, 1/sqrt y]] with g.i = z."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    r = np.sqrt(y)
    g = np.zeros(z.shape + (2, 2))
    g[..., 0, 0], g[..., 0, 1], g[..., 1, 1] = r, x / r, 1 / r
    return g


POLE = complex(np.inf, 0.0)


def e_function_inverse(w, lam, n):
    """Product of Gamma factors over positive roots sent to negative roots by w.

    Each root contributes Gamma(m/4 + 1/2 + <lam,a0>/2) Gamma(m/4 + m2/2 + <lam,a0>/2)
    with a0 = a/<a,a>, m = 1 and m2 = 0 on SL(n, R). Returns ``POLE`` when an
    argument is a nonpositive integer.
    """
    R = lie.weyl_group(n)
    lam = np.asarray(lam, dtype=complex)
    total = complex(1.0)
    for alpha, m in zip(R.positive_roots, R.multiplicities):
        if lie.dual_inner(w.act(alpha), R.rho) > 0:
            continue
        z = lie.dual_inner(lam, alpha) / lie.dual_inner(alpha, alpha)
        for arg in (m / 4 + 0.5 + z / 2, m / 4 + z / 2):
            if abs(arg.imag) < 1e-14 and arg.real <= 0 and abs(arg.real - round(arg.real)) < 1e-14:
                return POLE
            total *= complex(gamma_fn(arg))
    return total


def e_function(w, lam, n):
    inv = e_function_inverse(w, lam, n)
    return 0j if inv == POLE else 1.0 / inv


# ---------------------------------------------------------------- principal series

def principal_series_act(nu, g, f):
    """(pi_nu(g) f)(kM) = f(k(g^{-1}k)M) exp(-(i nu + rho) H(g^{-1}k))."""
    n = f.grid.n
    nu = np.asarray(nu, dtype=float)
    ginv = np.linalg.inv(g)
    rho = lie.rho_vector(n)

    def func(k):
        fac = lie.iwasawa_decompose(ginv @ k)
        return f.evaluate(fac.k) * np.exp(-lie.pair(1j * nu + rho, fac.H))

    return BoundaryDensity(f.grid, func(f.grid.k), func)


# ---------------------------------------------------------------- cotangent map

@dataclass(frozen=True)
class CotangentVector:
    """Covector at g.o in the frame dL_g(o) e_j, e_j the orthonormal basis of p."""

    base: np.ndarray
    covec: np.ndarray


def phi_map(g, theta):
    """[g, theta]: theta extended by zero on the orthocomplement of a."""
    n = np.shape(g)[-1]
    diag = np.array([np.diag(e) for e in lie.p_basis(n)])
    return CotangentVector(np.asarray(g), diag @ np.asarray(theta, dtype=float))


def phi_map_fd(g, theta, step=1e-4):
    """Finite-difference differential of x -> theta(A(x, b)) with b = g.b+."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    b = lie.iwasawa_k(g)
    basis = lie.p_basis(n)

    def F(t):
        x = g @ lie.exp_sym(np.tensordot(t, basis, axes=(0, 0)))
        return lie.pair(theta, horocycle_bracket(x, b))

    return CotangentVector(g, numerics.fd_gradient(F, np.zeros(len(basis)), step=step))


def heckman_error(xi, t):
    """|| H(exp t xi)/t - p_a(xi) || for symmetric traceless xi."""
    H = lie.iwasawa_decompose(lie.exp_sym(t * np.asarray(xi))).H
    return float(lie.avector_norm(H / t - lie.p_projection_a(xi)))


# ---------------------------------------------------------------- open cell

def _unit_lower_factor(Z):
    """L of the Doolittle factorisation Z = L D U without pivoting (batched)."""
    n = Z.shape[-1]
    U = np.array(Z, dtype=float, copy=True)
    L = np.broadcast_to(np.eye(n), Z.shape).copy()
    for j in range(n - 1):
        piv = U[..., j, j]
        for i in range(j + 1, n):
            L[..., i, j] = U[..., i, j] / piv
            U[..., i, :] -= L[..., i, j, None] * U[..., j, :]
    return L


def bruhat_minors(k1, k2):
    """Leading principal minors of Z = w0^{-1} k2^{-1} k1 (all nonzero iff the pair is in the open cell)."""
    n = np.shape(k1)[-1]
    w0 = lie.weyl_group(n).longest.matrix
    Z = w0.T @ np.swapaxes(k2, -1, -2) @ k1
    minors = np.stack([np.linalg.det(Z[..., :j, :j]) for j in range(1, n)], axis=-1)
    return minors, Z


def open_cell_batch(k1, k2, degenerate_tol=1e-10):
    """Batched open-cell representatives: returns (g, ok) with g = k2 w0 L where ok."""
    k1, k2 = np.broadcast_arrays(np.asarray(k1, dtype=float), np.asarray(k2, dtype=float))
    n = k1.shape[-1]
    minors, Z = bruhat_minors(k1, k2)
    ok = np.min(np.abs(minors), axis=-1) >= degenerate_tol
    Zs = np.where(ok[..., None, None], Z, np.eye(n))
    g = k2 @ lie.weyl_group(n).longest.matrix @ _unit_lower_factor(Zs)
    return g, ok


def open_cell_membership(k1, k2, degenerate_tol=1e-10):
    """Return g with (k1 M, k2 M) = g.(b+, b-) if the pair lies in the open cell, else None.

    Write w0^{-1} k2^{-1} k1 = L D U (leading minors nonzero); then g = k2 w0 L.
    Pairs whose decisive minor is below ``degenerate_tol`` are treated as
    outside; a warning flags them unless the minor vanishes to roundoff.
    """
    minors, _ = bruhat_minors(k1, k2)
    smallest = float(np.min(np.abs(minors)))
    if smallest < degenerate_tol:
        if smallest > 1e-14:
            warnings.warn(f"decisive minor {smallest:.2e} below {degenerate_tol:g}", NearDegeneratePairWarning)
        return None
    g, _ = open_cell_batch(k1, k2, degenerate_tol)
    return g


def flags_transverse(k1, k2, tol=1e-10):
    """Independent test: the flags spanned by leading columns are in general position."""
    n = k1.shape[-1]
    dets = [abs(np.linalg.det(np.hstack([k1[:, :i], k2[:, :n - i]]))) for i in range(1, n)]
    return min(dets) > tol


def pair_of(g):
    """(g.b+, g.b-) for a group element g."""
    n = np.shape(g)[-1]
    return act(g, b_plus(n)), act(g, lie.weyl_group(n).longest.matrix)


def canonical_gm(g):
    """Canonical representative of gM (canonical k-part)."""
    g = np.asarray(g, dtype=float)
    k = lie.iwasawa_k(g)
    m = np.swapaxes(k, -1, -2) @ canonical_boundary(k)
    m = np.round(m)
    return g @ m


def section_sigma(k1, k2):
    """sigma(gMA) = k n' M for g = k n' a (KNA order); None outside the open cell."""
    g = open_cell_membership(k1, k2)
    if g is None:
        return None
    k, nprime, _ = lie.kna_decompose(g)
    return canonical_gm(k @ nprime)


def flat_point(k1, k2):
    """z_{b,b'} = sigma(b, b').o returned as a group element."""
    return section_sigma(k1, k2)


def psi_map(g):
    """Psi(gM) = (g.b+, g.b-, H(g))."""
    b1, b2 = pair_of(g)
    return b1, b2, lie.iwasawa_decompose(g).H


def psi_inverse(k1, k2, H):
    s = section_sigma(k1, k2)
    if s is None:
        return None
    return canonical_gm(s @ lie.exp_a(H))


def same_gm(g1, g2, tol=1e-9):
    return np.max(np.abs(canonical_gm(g1) - canonical_gm(g2))) < tol
