"""Weights d_{nu,nu'}, weighted Radon transforms on G/M and Patterson-Sullivan pairings."""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import boundary, lie, numerics


@dataclass(frozen=True)
class WeightSpec:
    """Spectral pair (nu, nu') with optional semiclassical rescaling nu/h."""

    nu: np.ndarray
    nu_prime: np.ndarray
    h: Optional[float] = None

    def __post_init__(self):
        if self.h is not None and not self.h > 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "nu", np.asarray(self.nu, dtype=float))
        object.__setattr__(self, "nu_prime", np.asarray(self.nu_prime, dtype=float))

    @property
    def effective(self):
        s = 1.0 if self.h is None else 1.0 / self.h
        return self.nu * s, self.nu_prime * s

    def translation_exponent(self):
        """nu + w0.nu' (the A-character of d)."""
        n = len(self.nu)
        nu, nup = self.effective
        return nu + lie.weyl_group(n).w0_act(nup)


def weight_d(g, w):
    """d_{nu,nu'}(gM) = exp((i nu + rho) H(g)) exp((i nu' + rho) H(g w0)) (broadcast)."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    R = lie.weyl_group(n)
    nu, nup = w.effective
    rho = R.rho
    e1 = lie.pair(1j * nu + rho, lie.iwasawa_H(g))
    e2 = lie.pair(1j * nup + rho, lie.iwasawa_H(g @ R.longest.matrix))
    return np.exp(e1 + e2)


# ---------------------------------------------------------------- flats

def _flat_sqdist(M, t, basis):
    """Squared distance from o to M exp(t).o along the flat (batched)."""
    n = M.shape[-1]
    d2 = lie.killing_scale(n) * np.sum(lie.log_singular_values(M * np.exp(t @ basis)[..., None, :]) ** 2, axis=-1)
    return np.where(np.isfinite(d2), d2, np.inf)


def flat_projection(g, center, tol=1e-12, max_iter=60):
    """Closest point of the flat gA.o to center.o (batched over g).

    Returns (H*, distance) with H* in diagonal coordinates. The squared
    distance is strictly convex along the flat; damped Newton steps with
    finite-difference derivatives and backtracking converge globally.
    """
    g = np.asarray(g, dtype=float)
    single = g.ndim == 2
    M = np.linalg.solve(center, g[None] if single else g)
    n = M.shape[-1]
    l = n - 1
    basis = lie.a_basis(n)
    P = M.shape[0]
    t = np.zeros((P, l))
    eps = 1e-4
    eye = np.eye(l) * eps
    f0 = _flat_sqdist(M, t, basis)
    for _ in range(max_iter):
        grad = np.zeros((P, l))
        hess = np.zeros((P, l, l))
        fp = [_flat_sqdist(M, t + eye[j], basis) for j in range(l)]
        fm = [_flat_sqdist(M, t - eye[j], basis) for j in range(l)]
        for j in range(l):
            grad[:, j] = (fp[j] - fm[j]) / (2 * eps)
            hess[:, j, j] = (fp[j] - 2 * f0 + fm[j]) / eps**2
            for i in range(j):
                fpp = _flat_sqdist(M, t + eye[i] + eye[j], basis)
                fmm = _flat_sqdist(M, t - eye[i] - eye[j], basis)
                fpm = _flat_sqdist(M, t + eye[i] - eye[j], basis)
                fmp = _flat_sqdist(M, t - eye[i] + eye[j], basis)
                hess[:, i, j] = hess[:, j, i] = (fpp + fmm - fpm - fmp) / (4 * eps**2)
        # convexity: fall back to gradient steps if the FD Hessian is not positive
        hess += np.eye(l) * 1e-12
        bad = np.linalg.eigvalsh(hess)[:, 0] <= 0
        hess[bad] = np.eye(l)
        step = -np.linalg.solve(hess, grad[..., None])[..., 0]
        alpha = np.ones(P)
        for _ in range(30):
            trial = _flat_sqdist(M, t + alpha[:, None] * step, basis)
            worse = (trial > f0 + 1e-14 * np.maximum(1.0, f0)) & (alpha > 1e-8)
            if not np.any(worse):
                break
            alpha[worse] *= 0.5
        t = t + alpha[:, None] * step
        f0 = _flat_sqdist(M, t, basis)
        if np.max(np.abs(alpha[:, None] * step)) < tol:
            break
    H = t @ basis
    d = np.sqrt(np.maximum(f0, 0.0))
    return (H[0], float(d[0])) if single else (H, d)


# ---------------------------------------------------------------- test functions on G/M

@dataclass(frozen=True)
class GMFunction:
    """Smooth compactly supported function on G/M.

    ``func`` evaluates stacks of group elements. ``fiber_ball(g)`` (batched)
    returns (H0, radius) with H0 in diagonal coordinates such that a -> f(g a)
    vanishes for log a outside the Killing ball around H0; radius 0 means the
    whole fibre misses the support. ``center``/``radius`` bound the X-support.
    """

    func: Callable
    fiber_ball: Callable
    center: np.ndarray
    radius: float

    def __call__(self, g):
        return self.func(np.asarray(g, dtype=float))

    def right_translate(self, H):
        """f^a(gM) = f(gaM) with log a = H."""
        H = np.asarray(H, dtype=float)
        a = lie.exp_a(H)
        base = self

        def ball(g):
            H0, r = base.fiber_ball(g)
            return H0 - H, r

        return GMFunction(lambda g: base.func(g @ a), ball, self.center,
                          self.radius + float(lie.avector_norm(H)))

    def left_translate(self, gamma):
        """f_gamma(gM) = f(gamma^{-1} gM)."""
        gamma = np.asarray(gamma, dtype=float)
        ginv = np.linalg.inv(gamma)
        base = self
        return GMFunction(lambda g: base.func(ginv @ g), lambda g: base.fiber_ball(ginv @ g),
                          gamma @ self.center, self.radius)

    def weyl_flip(self):
        """f^{w0}(gM) = f(g w0 M)."""
        n = self.center.shape[-1]
        w0 = lie.weyl_group(n).longest
        base = self

        def ball(g):
            # f(g a w0) = f(g w0 a') with log a' = w0^{-1}.log a
            H0, r = base.fiber_ball(g @ w0.matrix)
            return w0.act(H0), r

        return GMFunction(lambda g: base.func(g @ w0.matrix), ball, self.center, self.radius)

    def scaled(self, factor):
        base = self
        return replace(self, func=lambda g: factor * base.func(g))


def boundary_profile(vectors, scales):
    """M-invariant function on K: exp(sum_j s_j <v_j, k e_j>^2)."""
    vectors = np.asarray(vectors, dtype=float)
    scales = np.asarray(scales, dtype=float)

    def phi(k):
        proj = np.einsum("...ij,ij->...j", k[..., :, : len(scales)], vectors.T)
        return np.exp(np.sum(scales * proj**2, axis=-1))

    return phi


def _radial_function(center, radius, radial, profile):
    center = np.asarray(center, dtype=float)
    profile = profile or (lambda k: np.ones(k.shape[:-2]))

    def func(g):
        d = lie.x_distance(center, g)
        out = radial(d)
        live = out > 0
        if np.any(live):
            k = lie.iwasawa_k(g[live]) if g.ndim > 2 else lie.iwasawa_k(g)
            out = out.astype(complex)
            out[live] = out[live] * profile(k)
        return out

    def ball(g):
        H0, dmin = flat_projection(g, center)
        # CAT(0): d(c, q)^2 >= d(c, p)^2 + d(p, q)^2 for p the projection onto the flat
        r = np.sqrt(np.maximum(radius**2 - dmin**2, 0.0)) * (1 + 1e-6) + 1e-6
        return H0, np.where(dmin < radius, r, 0.0)

    return GMFunction(func, ball, center, float(radius))


def bump_function(center, radius, profile=None):
    """f(g) = bump(d(g.o, center.o)/radius) * profile(k(g))."""
    return _radial_function(center, radius, lambda d: numerics.bump(d / radius), profile)


def gaussian_bump(center, sigma, profile=None, cut=7.0):
    """exp(-d^2/(2 sigma^2)) cut off smoothly between cut*sigma and (cut+1)*sigma."""
    radius = (cut + 1.0) * sigma

    def radial(d):
        return np.exp(-0.5 * (d / sigma) ** 2) * numerics.plateau(d, cut * sigma, radius)

    return _radial_function(center, radius, radial, profile)


def zero_function(n):
    return GMFunction(lambda g: np.zeros(np.shape(g)[:-2]),
                      lambda g: (np.zeros(np.shape(g)[:-1]), np.zeros(np.shape(g)[:-2])), np.eye(n), 0.0)


# ---------------------------------------------------------------- Radon transform

def fiber_nodes(n, npoints):
    """Unit trapezoid pattern on [-1, 1]^l with weights including (2 pi)^{-l/2}.

    Integrands are smooth and vanish to all orders at the box edges, where
    the trapezoid rule is spectrally accurate.
    """
    l = n - 1
    grid = numerics.QuadratureGrid(tuple(numerics.trapezoid_periodic(npoints, -1.0, 1.0).axes * l))
    return grid.points(), grid.weights() * lie.a_measure_factor(n)


def weighted_radon(f, w, g, npoints=None, chunk=1500):
    """R_{nu,nu'} f(gMA) = int_A d_{nu,nu'}(ga) f(ga) da (batched over g)."""
    g = np.asarray(g, dtype=float)
    single = g.ndim == 2
    g = g[None] if single else g
    n = g.shape[-1]
    npoints = npoints or (161 if n == 2 else 81)
    basis = lie.a_basis(n)
    unit, wts = fiber_nodes(n, npoints)
    out = np.zeros(len(g), dtype=complex)
    H0, r = f.fiber_ball(g)
    live = np.flatnonzero(r > 0)
    for start in range(0, len(live), chunk):
        idx = live[start:start + chunk]
        t0 = H0[idx] @ basis.T * lie.killing_scale(n)
        t = t0[:, None, :] + r[idx, None, None] * unit[None]
        ga = g[idx, None] @ lie.exp_a(t @ basis)
        vals = f(ga.reshape(-1, n, n)).reshape(len(idx), -1)
        nz = vals != 0
        dv = np.zeros_like(vals, dtype=complex)
        dv[nz] = weight_d(ga[nz], w) * vals[nz]
        out[idx] = (dv @ wts) * r[idx] ** (n - 1)
    return out[0] if single else out


def radon_at_pair(f, w, k1, k2, npoints=None):
    """R f as a function on B x B, extended by zero off the open cell (batched)."""
    g, ok = boundary.open_cell_batch(k1, k2)
    vals = np.zeros(ok.shape, dtype=complex)
    if np.any(ok):
        vals[ok] = weighted_radon(f, w, g[ok], npoints)
    return vals if np.ndim(ok) else complex(vals)


def radon_growth_fit(f, w, targets, factors=(1, 2, 4, 8)):
    """Log-log fit of sup |R_{s nu, s nu'} f| over targets against s."""
    pairs = []
    for s in factors:
        ws = WeightSpec(s * w.nu, s * w.nu_prime)
        pairs.append((float(s), float(np.max(np.abs(weighted_radon(f, ws, np.asarray(targets)))))))
    return numerics.loglog_fit(pairs)


# ---------------------------------------------------------------- Patterson-Sullivan pairings on SL(2)

@dataclass(frozen=True)
class PSPairing:
    """Boundary densities T, T' on a common SL(2) grid, with spectral pair (nu, nu')."""

    T: boundary.BoundaryDensity
    T_prime: boundary.BoundaryDensity
    weights: WeightSpec


def ps_weight(p):
    """Radon weight (nu, -w0.nu') used by the pairing."""
    n = p.T.grid.n
    return WeightSpec(p.weights.nu, -lie.weyl_group(n).w0_act(p.weights.nu_prime), p.weights.h)


def radon_table(f, w, grid, npoints=None):
    """R f on all pairs of a boundary grid (zero on the diagonal)."""
    N = grid.size
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    return radon_at_pair(f, w, grid.k[i.ravel()], grid.k[j.ravel()], npoints).reshape(N, N)


def ps_pairing(f, p, npoints=None, table=None):
    """<f, PS> = int_{B x B} R_{nu,-w0 nu'} f(b, b') T(db) T'(db')."""
    if p.T.grid.n != 2:
        raise NotImplementedError("pairings over B x B are implemented for SL(2)")
    w = ps_weight(p)
    if table is None:
        table = radon_table(f, w, p.T.grid, npoints)
    wt = p.T.grid.weights
    return complex((wt * p.T.values) @ table @ (wt * p.T_prime.values))


def gamma_transform(T, gamma, mu):
    """Density S(c) = exp((i mu - rho) A(gamma.o, gamma.c)) tau(gamma.c).

    Pairing against S equals pairing the gamma-pushed integrand against T,
    using d(gamma.b)/db = exp(-2 rho A(gamma.o, gamma.b)).
    """
    n = T.grid.n
    rho = lie.rho_vector(n)
    mu = np.asarray(mu, dtype=complex)

    def func(k):
        gk = boundary.act(gamma, k)
        A = boundary.horocycle_bracket(gamma, gk)
        return np.exp(lie.pair(1j * mu - rho, A)) * T.evaluate(gk)

    return boundary.density(T.grid, func)


def ps_gamma_sides(f, p, gamma, npoints=None):
    """Return (<f_gamma, PS_{T,T'}>, <f, PS_{S,S'}>) with S, S' the gamma-transforms."""
    n = p.T.grid.n
    w = ps_weight(p)
    lhs = ps_pairing(f.left_translate(gamma), p, npoints)
    S = gamma_transform(p.T, gamma, w.nu)
    Sp = gamma_transform(p.T_prime, gamma, w.nu_prime)
    rhs = ps_pairing(f, PSPairing(S, Sp, p.weights), npoints)
    return lhs, rhs


def ps_conjugate_sides(f, p, npoints=None):
    """Return (<f, PS(T,T'; nu,nu')>, <f^{w0}, PS(T',T; -w0 nu', -w0 nu)>)."""
    n = p.T.grid.n
    w0 = lie.weyl_group(n).w0_act
    lhs = ps_pairing(f, p, npoints)
    swapped = PSPairing(p.T_prime, p.T, WeightSpec(-w0(p.weights.nu_prime), -w0(p.weights.nu), p.weights.h))
    rhs = ps_pairing(f.weyl_flip(), swapped, npoints)
    return lhs, rhs


# ---------------------------------------------------------------- fundamental domains

def nak_element(x, s, phi):
    """n_x diag(e^s, e^-s) k_phi in SL(2)."""
    x, s, phi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, s, phi)))
    g = np.zeros(x.shape + (2, 2))
    g[..., 0, 0], g[..., 0, 1], g[..., 1, 1] = 1.0, x, 1.0
    a = np.zeros(x.shape + (2, 2))
    a[..., 0, 0], a[..., 1, 1] = np.exp(s), np.exp(-s)
    return g @ a @ lie.rotation2(phi)


def periodic_partition(center, width, period, orbit=6):
    """chi(s) = u(s) / sum_{|m| <= orbit} u(s + m period) with u a bump of half-width ``width``."""
    def u(s):
        return numerics.bump((np.asarray(s) - center) / width)

    def chi(s):
        s = np.asarray(s, dtype=float)
        total = sum(u(s + m * period) for m in range(-orbit, orbit + 1))
        out = np.zeros_like(s)
        live = u(s) > 0
        out[live] = u(s)[live] / total[live]
        return out

    chi.support = (center - width, center + width)
    return chi


def fundamental_cutoff_consistency(F, period, chi1, chi2, decay=8.0, npoints=(160, 240, 16)):
    """Pairings of chi_j F over SL(2)/M for two fundamental cutoffs of the group <a_period>.

    ``F`` is a function on group elements invariant under left translation by
    diag(e^period, e^-period); in coordinates g = n_x a_s k_phi it must decay in
    x e^{-2s} (|x e^{-2s}| > ``decay`` is treated as outside the support).
    Haar measure in these coordinates is e^{-2s} dx ds dphi.
    Returns (pairing1, pairing2, residual).
    """
    vals = []
    for chi in (chi1, chi2):
        lo, hi = chi.support
        s, ws = numerics.gauss_legendre(npoints[0], lo, hi).axes[0]
        y, wy = numerics.gauss_legendre(npoints[1], -decay, decay).axes[0]
        phi, wp = numerics.trapezoid_periodic(npoints[2], 0.0, np.pi).axes[0]
        S, Y, P = np.meshgrid(s, y, phi, indexing="ij")
        X = Y * np.exp(2 * S)
        W = np.einsum("i,j,k->ijk", ws * chi(s), wy, wp)
        # dx = e^{2s} dy on each s-slice, times the Haar density e^{-2s}
        vals.append(complex(np.sum(W * F(nak_element(X, S, P)))))
    return vals[0], vals[1], abs(vals[0] - vals[1]) / max(abs(vals[0]), 1e-300)
