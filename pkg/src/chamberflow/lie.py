"""SL(n, R): Cartan and Iwasawa structure, roots, Weyl group, measures.

Conventions
-----------
Group and algebra elements are plain ``numpy`` arrays of shape (..., n, n);
all routines broadcast over leading axes. ``K = SO(n)``, ``A`` = positive
diagonals, ``N`` = upper unipotent, ``M`` = diagonal sign matrices of
determinant one. The Killing form is ``<X, Y> = 2n tr(XY)``.

Elements of ``a`` are stored as their diagonal (length n, summing to 0).
Elements of ``a*`` are stored as the vector ``c`` with ``lam(H) = sum c_i H_i``;
roots are then ``e_i - e_j`` and the Killing inner product on ``a*`` reads
``<lam, mu> = c . d / (2n)``.
"""

from dataclasses import dataclass
from functools import lru_cache
import itertools
from math import gamma, pi, sqrt

import numpy as np
import scipy.linalg

from . import numerics

DET_TOL = 1e-12
TRACE_TOL = 1e-12
PIVOT_TOL = 1e-14


class DegenerateInputError(ValueError):
    """Input is numerically singular."""


# ---------------------------------------------------------------- validation

def as_group_element(mat):
    """Validate a matrix (or stack) as an element of SL(n, R) with 2 <= n <= 4."""
    g = np.asarray(mat, dtype=float)
    if g.ndim < 2 or g.shape[-1] != g.shape[-2] or not 2 <= g.shape[-1] <= 4:
        raise ValueError(f"expected square matrices of size 2..4, got shape {g.shape}")
    det = np.linalg.det(g)
    if np.any(np.abs(det - 1.0) > DET_TOL * max(1.0, float(np.max(np.abs(g))) ** g.shape[-1])):
        raise ValueError(f"determinant deviates from 1 by {np.max(np.abs(det - 1)):.2e}")
    return g


def as_algebra_element(mat):
    X = np.asarray(mat, dtype=float)
    tr = np.trace(X, axis1=-2, axis2=-1)
    if np.any(np.abs(tr) > TRACE_TOL):
        raise ValueError(f"trace {np.max(np.abs(tr)):.2e} is not zero")
    return X


def as_avector(coords):
    c = np.asarray(coords, dtype=float)
    if np.any(np.abs(c.sum(axis=-1)) > 1e-12 * max(1.0, float(np.max(np.abs(c))))):
        raise ValueError("a-coordinates must sum to zero")
    return c


def project_dual(coords):
    """Representative summing to zero of a functional on traceless diagonals."""
    c = np.asarray(coords)
    return c - c.mean(axis=-1, keepdims=True)


# ---------------------------------------------------------------- Killing form

def killing_scale(n):
    return 2 * n


def killing_form(X, Y):
    n = np.shape(X)[-1]
    return killing_scale(n) * np.einsum("...ij,...ji->...", X, Y)


def dual_inner(lam, mu):
    """Killing inner product of two elements of a* (bilinear, no conjugation)."""
    lam, mu = np.asarray(lam), np.asarray(mu)
    n = lam.shape[-1]
    return np.sum(lam * mu, axis=-1) / killing_scale(n)


def dual_norm(lam):
    return np.sqrt(np.real(dual_inner(lam, np.conj(lam))))


def avector_norm(H):
    H = np.asarray(H)
    return np.sqrt(killing_scale(H.shape[-1]) * np.sum(H * H, axis=-1))


def pair(lam, H):
    """Evaluate lam(H) for lam in a*_C and H in a."""
    return np.sum(np.asarray(lam) * np.asarray(H), axis=-1)


def a_basis(n):
    """Killing-orthonormal basis of a as rows of diagonal coordinates."""
    raw = np.zeros((n - 1, n))
    for i in range(n - 1):
        raw[i, i], raw[i, i + 1] = 1.0, -1.0
    q, _ = np.linalg.qr(raw.T)
    return q.T / sqrt(killing_scale(n))


def p_basis(n):
    """Killing-orthonormal basis of p (symmetric traceless): a-part first."""
    mats = [np.diag(v) for v in a_basis(n)]
    s = 1.0 / sqrt(2 * killing_scale(n))
    for i, j in itertools.combinations(range(n), 2):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = s
        mats.append(E)
    return np.array(mats)


def n_basis(n):
    """Orthonormal basis E_ij / sqrt(2n) of the upper nilpotent algebra.

    Orthonormal for the positive form -<X, theta Y> = 2n tr(X Y^T).
    Returns (matrices, index pairs).
    """
    pairs = list(itertools.combinations(range(n), 2))
    mats = np.zeros((len(pairs), n, n))
    for m, (i, j) in enumerate(pairs):
        mats[m, i, j] = 1.0 / sqrt(killing_scale(n))
    return mats, pairs


def p_projection_a(X):
    """Killing-orthogonal projection of X in p onto a, as diagonal coordinates."""
    return np.diagonal(np.asarray(X), axis1=-2, axis2=-1).copy()


# ---------------------------------------------------------------- small matrix functions

def cartan_involution(g):
    return np.swapaxes(np.linalg.inv(g), -1, -2)


def exp_sym(X):
    """Exponential of symmetric matrices via eigendecomposition."""
    w, v = np.linalg.eigh(X)
    return np.einsum("...ij,...j,...kj->...ik", v, np.exp(w), v)


def log_spd(P):
    w, v = np.linalg.eigh(P)
    return np.einsum("...ij,...j,...kj->...ik", v, np.log(w), v)


def expm_nilpotent(X):
    """Exponential of strictly triangular matrices (finite series)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    out = np.broadcast_to(np.eye(n), X.shape).copy()
    term = out.copy()
    for k in range(1, n):
        term = term @ X / k
        out = out + term
    return out


def expm(X):
    return scipy.linalg.expm(X)


def exp_a(H):
    """diag(exp H) for diagonal coordinates H (batched)."""
    H = np.asarray(H, dtype=float)
    out = np.zeros(H.shape + (H.shape[-1],))
    idx = np.arange(H.shape[-1])
    out[..., idx, idx] = np.exp(H)
    return out


def unipotent_from_entries(entries, n, lower=False):
    """Upper (or lower) unipotent matrices from their off-diagonal entries.

    Entries are ordered like ``itertools.combinations(range(n), 2)``.
    """
    entries = np.asarray(entries, dtype=float)
    out = np.broadcast_to(np.eye(n), entries.shape[:-1] + (n, n)).copy()
    for m, (i, j) in enumerate(itertools.combinations(range(n), 2)):
        if lower:
            out[..., j, i] = entries[..., m]
        else:
            out[..., i, j] = entries[..., m]
    return out


def unipotent_entries(u, lower=False):
    n = u.shape[-1]
    cols = []
    for i, j in itertools.combinations(range(n), 2):
        cols.append(u[..., j, i] if lower else u[..., i, j])
    return np.stack(cols, axis=-1)


def nilpotent_exp_coords(t, n):
    """n = exp(sum t_m X_m) for the orthonormal basis of the nilpotent algebra."""
    mats, _ = n_basis(n)
    X = np.tensordot(np.asarray(t, dtype=float), mats, axes=(-1, 0))
    return expm_nilpotent(X)


def rotation2(phi):
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def euler_zyz(alpha, beta, gamma_):
    """SO(3) elements Rz(alpha) Ry(beta) Rz(gamma) (broadcast)."""
    def rz(t):
        c, s = np.cos(t), np.sin(t)
        z, o = np.zeros_like(t), np.ones_like(t)
        return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)

    def ry(t):
        c, s = np.cos(t), np.sin(t)
        z, o = np.zeros_like(t), np.ones_like(t)
        return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)

    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, beta, gamma_)))
    return rz(a) @ ry(b) @ rz(c)


# ---------------------------------------------------------------- Iwasawa decomposition

@dataclass(frozen=True)
class IwasawaFactors:
    """g = k exp(H) n with k in SO(n), H diagonal coordinates, n unipotent."""

    k: np.ndarray
    H: np.ndarray
    n: np.ndarray

    def reconstruct(self):
        return self.k @ exp_a(self.H) @ self.n


def iwasawa_decompose(g):
    """Iwasawa factors via QR with positive diagonal of R (batched)."""
    g = np.asarray(g, dtype=float)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    if np.any(np.abs(d) < PIVOT_TOL):
        raise DegenerateInputError("QR pivot below 1e-14")
    sign = np.sign(d)
    k = q * sign[..., None, :]
    r = r * sign[..., :, None]
    a = np.abs(d)
    n = r / a[..., :, None]
    H = np.log(a)
    H = H - H.mean(axis=-1, keepdims=True)
    return IwasawaFactors(k, H, n)


def iwasawa_H(g):
    """H(g) from leading Gram minors of g^T g (fast path, batched).

    With g = k a n one has g^T g = n^T a^2 n, so a_1 ... a_j is the square
    root of the j-th leading principal minor.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    c = [g[..., :, j] for j in range(n)]
    minors = [np.ones(g.shape[:-2])]
    d1 = np.sum(c[0] ** 2, axis=-1)
    minors.append(d1)
    if n >= 3:
        if n == 3:
            d2 = np.sum(np.cross(c[0], c[1]) ** 2, axis=-1)
        else:
            gram = np.einsum("...ki,...kj->...ij", g[..., :, :2], g[..., :, :2])
            d2 = np.linalg.det(gram)
        minors.append(d2)
    if n == 4:
        gram = np.einsum("...ki,...kj->...ij", g[..., :, :3], g[..., :, :3])
        minors.append(np.linalg.det(gram))
    minors.append(np.ones(g.shape[:-2]))
    logs = np.log(np.stack(minors, axis=-1))
    H = 0.5 * np.diff(logs, axis=-1)
    return H


def iwasawa_k(g):
    return iwasawa_decompose(g).k


def iwasawa_cocycle_check(g1, g2, k):
    """|| H(g1 g2 k) - H(g1 k(g2 k)) - H(g2 k) || (Killing norm, batched)."""
    lhs = iwasawa_decompose(g1 @ g2 @ k).H
    f2 = iwasawa_decompose(g2 @ k)
    rhs = iwasawa_decompose(g1 @ f2.k).H + f2.H
    return avector_norm(lhs - rhs)


def kna_decompose(g):
    """g = k n' a with n' = a n a^{-1}."""
    f = iwasawa_decompose(g)
    a = exp_a(f.H)
    ainv = exp_a(-f.H)
    return f.k, a @ f.n @ ainv, f.H


def ank_decompose(g):
    """g = a n k (from the Iwasawa factors of g^{-1})."""
    f = iwasawa_decompose(np.linalg.inv(g))
    # g^{-1} = k a n  =>  g = n^{-1} a^{-1} k^{-1} = a^{-1} (a n^{-1} a^{-1}) k^{-1}
    a_inv = exp_a(-f.H)
    n_inv = np.linalg.inv(f.n)
    nprime = exp_a(f.H) @ n_inv @ a_inv
    return -f.H, nprime, np.swapaxes(f.k, -1, -2)


def nak_decompose(g):
    """g = n a k, returned as (n, H, k)."""
    f = iwasawa_decompose(np.linalg.inv(g))
    return np.linalg.inv(f.n), -f.H, np.swapaxes(f.k, -1, -2)


# ---------------------------------------------------------------- symmetric space X = G/K

def log_singular_values(g):
    """Logs of the singular values of unimodular matrices, largest first (batched).

    Extreme values come from the top eigenvalues of g g^T and (g g^T)^{-1},
    which eigvalsh resolves to relative accuracy even for badly conditioned g;
    the middle value (n = 3) follows from the unit determinant.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    top = 0.5 * np.log(np.linalg.eigvalsh(g @ np.swapaxes(g, -1, -2))[..., ::-1])
    if n == 2:
        return np.stack([top[..., 0], -top[..., 0]], axis=-1)
    if n == 3:
        ginv = np.linalg.inv(g)
        low = -0.5 * np.log(np.linalg.eigvalsh(np.swapaxes(ginv, -1, -2) @ ginv)[..., -1])
        return np.stack([top[..., 0], -top[..., 0] - low, low], axis=-1)
    return top


def x_distance(g1, g2=None):
    """Riemannian distance (Killing metric) between g1.o and g2.o."""
    g = np.asarray(g1, dtype=float) if g2 is None else np.linalg.solve(g1, g2)
    n = g.shape[-1]
    return np.sqrt(killing_scale(n) * np.sum(log_singular_values(g) ** 2, axis=-1))


def unipotent_entry_bound(radius, n):
    """Bound on |entries| of unipotent u with d(o, u.o) <= radius.

    The largest eigenvalue of u u^T is at most exp(2 radius / sqrt(2n)) and
    each row of u has a unit diagonal entry.
    """
    return float(np.sqrt(np.expm1(2 * radius / np.sqrt(killing_scale(n)))))


def x_point(g):
    """Canonical representative of g.o: the symmetric positive square root of g g^T."""
    P = g @ np.swapaxes(g, -1, -2)
    return exp_sym(0.5 * log_spd(P))


def x_exp(g, v):
    """Geodesic exponential at g.o of the tangent vector with frame coordinates v.

    The frame at g.o is the left translate of the orthonormal basis of p.
    Returns group elements g exp(sum v_j e_j) whose orbit point is the result.
    """
    n = g.shape[-1]
    X = np.tensordot(np.asarray(v, dtype=float), p_basis(n), axes=(-1, 0))
    return g @ exp_sym(X)


# ---------------------------------------------------------------- roots and Weyl group

@dataclass(frozen=True)
class WeylElement:
    perm: tuple
    matrix: np.ndarray

    def act(self, coords):
        """Action on a or a* coordinates: (w.c)[perm[i]] = c[i]."""
        coords = np.asarray(coords)
        out = np.empty_like(coords)
        out[..., list(self.perm)] = coords
        return out

    def is_identity(self):
        return self.perm == tuple(range(len(self.perm)))


def weyl_representative(perm):
    n = len(perm)
    P = np.zeros((n, n))
    for i, p in enumerate(perm):
        P[p, i] = 1.0
    if np.linalg.det(P) < 0:
        P[:, 0] *= -1.0
    return P


@dataclass(frozen=True)
class RootDatum:
    n: int
    positive_roots: np.ndarray
    multiplicities: np.ndarray
    rho: np.ndarray
    weyl_elements: tuple
    w0: int
    C_N: float
    nbar_norm: float

    @property
    def rank(self):
        return self.n - 1

    @property
    def dim_n(self):
        return int(np.sum(self.multiplicities))

    @property
    def longest(self):
        return self.weyl_elements[self.w0]

    def w0_act(self, coords):
        return self.longest.act(coords)

    def is_regular(self, lam, tol=1e-10):
        vals = np.abs(np.asarray(self.positive_roots) @ np.asarray(lam)) / killing_scale(self.n)
        return bool(np.all(vals > tol))

    def root_pairings(self, lam):
        return np.asarray(self.positive_roots) @ np.asarray(lam) / killing_scale(self.n)


def positive_roots(n):
    roots = []
    for i, j in itertools.combinations(range(n), 2):
        r = np.zeros(n)
        r[i], r[j] = 1.0, -1.0
        roots.append(r)
    return np.array(roots)


@lru_cache(maxsize=None)
def weyl_group(n):
    if not 2 <= n <= 4:
        raise ValueError("n must be 2, 3 or 4")
    roots = positive_roots(n)
    mult = np.ones(len(roots), dtype=int)
    rho = 0.5 * (mult[:, None] * roots).sum(axis=0)
    elems = tuple(WeylElement(p, weyl_representative(p)) for p in itertools.permutations(range(n)))
    w0 = [e.perm for e in elems].index(tuple(range(n - 1, -1, -1)))
    C_N, nbar = normalize_measures(n)
    return RootDatum(n, roots, mult, rho, elems, w0, C_N, nbar)


def rho_vector(n):
    return 0.5 * positive_roots(n).sum(axis=0)


# ---------------------------------------------------------------- measures

def gk_nbar_integral(n):
    """Closed-form product value of the N-bar integral of exp(-2 rho H) (Lebesgue entries).

    Each positive root e_i - e_j contributes sqrt(pi) Gamma(z/2) / Gamma((z+1)/2)
    with z = j - i.
    """
    total = 1.0
    for i, j in itertools.combinations(range(n), 2):
        z = j - i
        total *= sqrt(pi) * gamma(z / 2) / gamma((z + 1) / 2)
    return total


def _nbar_density(entries, n):
    nbar = unipotent_from_entries(entries, n, lower=True)
    two_rho = 2 * rho_vector(n)
    return np.exp(-pair(two_rho, iwasawa_H(nbar)))


def _nbar_adapted(q):
    """Map adapted coordinates to lower unipotent entries; returns (entries, jacobian).

    For n = 3 the entries (x, y, z) of [[1,0,0],[x,1,0],[y,z,1]] are written as
    y = x z + w, x = -z w/(1+z^2) + sqrt(1+z^2+w^2)/(1+z^2) p, and (z, w) in
    polar form with radius r. This straightens the ridge of the integrand
    along y = x z. Input columns are (p, r, angle).
    """
    if q.shape[-1] == 1:
        return q, np.ones(q.shape[:-1])
    p, r, phi = q[..., 0], q[..., 1], q[..., 2]
    z, w = r * np.cos(phi), r * np.sin(phi)
    d = 1.0 + r**2
    x = -z * w / (1 + z**2) + np.sqrt(d) / (1 + z**2) * p
    y = x * z + w
    return np.stack([x, y, z], axis=-1), r * np.sqrt(d) / (1 + z**2)


def _half_line_rule(npoints, radius, cap=1e30):
    """Gauss-Legendre in v on [0, R] pulled back by r = sinh(sinh(v)), r < cap."""
    v, w = numerics.gauss_legendre(npoints, 0.0, radius).axes[0]
    inner = np.sinh(v)
    keep = inner < np.arcsinh(cap)
    v, w, inner = v[keep], w[keep], inner[keep]
    return numerics.QuadratureGrid(((np.sinh(inner), w * np.cosh(inner) * np.cosh(v)),), (radius,))


def nbar_integral(n, radius, points_per_unit=12):
    """Quadrature of exp(-2 rho H(nbar)) over lower unipotent entries (Lebesgue).

    Double-exponential rules truncated at ``radius`` in the mapped variables.
    """
    npts = int(points_per_unit * radius)
    if n == 2:
        grid = numerics.sinh_sinh_rule(npts, radius)
    elif n == 3:
        # cap |entries| at 1e9: the dropped tail is below 1e-8 while larger
        # entries lose the cancellation y - x z = -w to roundoff
        grid = (numerics.sinh_sinh_rule(npts, radius, cap=1e9)
                * _half_line_rule(npts // 2, radius, cap=1e9) * numerics.trapezoid_periodic(16))
    else:
        raise ValueError("quadrature path implemented for n = 2, 3")

    def integrand(q):
        entries, jac = _nbar_adapted(q)
        with np.errstate(over="ignore", invalid="ignore"):
            val = _nbar_density(entries, n) * jac
        return np.where(np.isfinite(val), val, 0.0)

    return float(numerics.integrate_chunked(integrand, grid))


@lru_cache(maxsize=None)
def normalize_measures(n, tol=1e-6):
    """Return (C_N, nbar_norm).

    ``nbar_norm`` multiplies Lebesgue measure on unipotent entries so that the
    N-bar integral of exp(-2 rho H) equals one; the same scalar defines dn.
    ``C_N`` is dn divided by the Riemannian volume of the left-invariant metric
    built from 2n tr(X Y^T), i.e. nbar_norm * (2n)^(-dim N / 2).
    For n = 4 the six-dimensional quadrature is replaced by the product formula.
    """
    dim = n * (n - 1) // 2
    if n in (2, 3):
        vals = []
        for radius in (6.0, 8.0, 10.0):
            vals.append(nbar_integral(n, radius))
            if len(vals) > 1 and abs(vals[-1] - vals[-2]) > tol * abs(vals[-1]):
                raise numerics.QuadratureError(
                    f"N-bar normalisation changed by {abs(vals[-1] - vals[-2]):.2e} between radii"
                )
        integral = vals[-1]
    else:
        integral = gk_nbar_integral(n)
    nbar_norm = 1.0 / integral
    C_N = nbar_norm * killing_scale(n) ** (-dim / 2)
    return C_N, nbar_norm


def a_measure_factor(n):
    """Factor (2 pi)^(-l/2) multiplying Euclidean (Killing) measure on a and A."""
    return (2 * pi) ** (-(n - 1) / 2)


def eta_conjugation_check(n_elem, w0_matrix=None, step=1e-4):
    """Return (w0 n w0^{-1}, Jacobian determinant of eta on unipotent coordinates)."""
    n_elem = np.asarray(n_elem, dtype=float)
    dim = n_elem.shape[-1]
    w0 = weyl_representative(tuple(range(dim - 1, -1, -1))) if w0_matrix is None else w0_matrix
    eta = lambda u: w0 @ u @ np.linalg.inv(w0)
    result = eta(n_elem)
    if np.max(np.abs(np.triu(result, 1))) > 1e-12 or np.max(np.abs(np.diag(result) - 1)) > 1e-12:
        raise AssertionError("eta(n) is not lower unipotent")

    def coords(t):
        return unipotent_entries(eta(unipotent_from_entries(t, dim)), lower=True)

    jac = numerics.fd_gradient(coords, unipotent_entries(n_elem), step=step)
    return result, float(np.linalg.det(jac))


def haar_integral_check(F, box, npoints=(48, 64, 64), nak_points=(48, 96, 96)):
    """Compare KAN- and NAK-form Haar integrals on SL(2, R).

    ``F(phi, t, s)`` is a test function in KAN coordinates g = k_phi exp(t E) n_s,
    where E is the unit vector of a and k_phi the rotation by phi; it must
    vanish outside ``box = ((t0, t1), (s0, s1))`` (phi ranges over the circle).
    Returns (kan_value, nak_value, relative residual).
    """
    n = 2
    _, c_n = normalize_measures(n)
    e_a = a_basis(n)[0]
    two_rho_e = pair(2 * rho_vector(n), e_a)
    a_fac = a_measure_factor(n)

    def g_coords(g):
        f = iwasawa_decompose(g)
        phi = np.mod(np.arctan2(f.k[..., 1, 0], f.k[..., 0, 0]), 2 * pi)
        t = pair(f.H, e_a) * killing_scale(n)
        return phi, t, f.n[..., 0, 1]

    (t0, t1), (s0, s1) = box
    grid = (numerics.trapezoid_periodic(npoints[0]) * numerics.gauss_legendre(npoints[1], t0, t1)
            * numerics.gauss_legendre(npoints[2], s0, s1))
    p = grid.points()
    kan = grid.integrate(F(p[:, 0], p[:, 1], p[:, 2]) * np.exp(two_rho_e * p[:, 1]))
    kan *= a_fac * c_n / (2 * pi)

    def nak_integrand(q):
        nn = unipotent_from_entries(q[:, 2:3], n)
        a = exp_a(np.outer(q[:, 1], e_a))
        g = nn @ a @ rotation2(q[:, 0])
        return F(*g_coords(g)) * np.exp(-two_rho_e * q[:, 1])

    # g = n a k has |t| <= d(o, g.o) <= reach and d(o, n.o) <= 2 reach
    corners = unipotent_from_entries(np.array([[s0], [s1]]), n)
    reach = float(max(abs(t0), abs(t1)) + np.max(x_distance(corners)))
    s_bound = unipotent_entry_bound(2 * reach, n)

    def ts_live(q):
        phis = np.linspace(0, 2 * pi, 13)[:-1]
        out = np.zeros(len(q))
        for phi in phis:
            full = np.column_stack([np.full(len(q), phi), q])
            out = np.maximum(out, np.abs(nak_integrand(full)))
        return out

    box2 = numerics.support_box(ts_live, ((-reach, reach), (-s_bound, s_bound)), npoints=61)
    if box2 is None:
        return float(kan), 0.0, abs(kan)
    nak_grid = (numerics.trapezoid_periodic(nak_points[0])
                * numerics.gauss_legendre(nak_points[1], *box2[0])
                * numerics.gauss_legendre(nak_points[2], *box2[1]))
    nak = numerics.integrate_chunked(nak_integrand, nak_grid) * a_fac * c_n / (2 * pi)
    scale = max(abs(kan), abs(nak))
    return float(kan), float(nak), (abs(kan - nak) / scale if scale > 0 else 0.0)


# ---------------------------------------------------------------- sampling

def random_sl(n, size, rng, scale=0.7):
    """Random elements exp(X) with X traceless Gaussian of entry s.d. scale/sqrt(n)."""
    X = rng.normal(scale=scale / sqrt(n), size=(size, n, n))
    X -= np.eye(n) * (np.trace(X, axis1=-2, axis2=-1) / n)[:, None, None]
    return expm(X)


def random_so(n, size, rng):
    """Haar-random rotations (QR of Gaussian matrices with sign fix)."""
    z = rng.normal(size=(size, n, n))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]
    bad = np.linalg.det(q) < 0
    q[bad, :, 0] *= -1
    return q


def random_regular_dual(n, size, rng, scale=2.0, margin=0.1):
    """Random regular elements of a* (root pairings bounded away from 0)."""
    out = []
    roots = positive_roots(n)
    while len(out) < size:
        c = project_dual(rng.normal(scale=scale, size=n))
        if np.min(np.abs(roots @ c)) / killing_scale(n) > margin:
            out.append(c)
    return np.array(out)
