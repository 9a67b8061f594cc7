"""Phase functions, admissible pairs, stationary phase on N and the oscillatory integrals I_h, F_h."""

from dataclasses import dataclass
import itertools
import warnings

import numpy as np

from . import boundary, lie, numerics, radon


class OscillationUnderresolvedError(numerics.QuadratureError):
    """Node budget too small for the phase variation over the support."""


class RegularityError(ValueError):
    """A spectral parameter lies on (or within tolerance of) a Weyl wall."""


class HessianConditioningWarning(UserWarning):
    """The finite-difference Hessian is badly conditioned (near-wall parameter)."""


WALL_TOL = 1e-10


# ---------------------------------------------------------------- phase functions

def phase_psi(g, k1, k2, nu, nu_prime):
    """psi(x, b, b', nu, nu') = nu A(x, b) - (w0.nu') A(x, b') at x = g.o (broadcast)."""
    n = np.shape(g)[-1]
    w0nup = lie.weyl_group(n).w0_act(np.asarray(nu_prime))
    return (lie.pair(nu, boundary.horocycle_bracket(g, k1))
            - lie.pair(w0nup, boundary.horocycle_bracket(g, k2)))


def phase_psi_an(g, w, H, nmat, nu, nu_prime):
    """Same phase at x = g a n.o for the pair (g.b+, g w.b+), log a = H.

    nu H(g) - (w0 nu') H(g w) + (nu - w w0 nu') log a + (w0 nu') H(n^{-1} w).
    """
    n = np.shape(g)[-1]
    w0nup = lie.weyl_group(n).w0_act(np.asarray(nu_prime))
    ww0nup = w.act(w0nup)
    return (lie.pair(nu, lie.iwasawa_H(g)) - lie.pair(w0nup, lie.iwasawa_H(g @ w.matrix))
            + lie.pair(np.asarray(nu) - ww0nup, H)
            + lie.pair(w0nup, lie.iwasawa_H(np.linalg.inv(nmat) @ w.matrix)))


def density_rho(g, k1, k2):
    """exp(psi(x, b, b', rho, rho)) = exp(rho (A(x, b) + A(x, b')))."""
    n = np.shape(g)[-1]
    rho = lie.rho_vector(n)
    return np.exp(phase_psi(g, k1, k2, rho, rho))


def phase_gradient_x(g, k1, k2, nu, nu_prime, step=1e-5):
    """Gradient of x -> psi at x = g.o in the frame dL_g(o) e_j."""
    n = g.shape[-1]
    basis = lie.p_basis(n)

    def F(t):
        return phase_psi(g @ lie.exp_sym(np.tensordot(t, basis, axes=(0, 0))), k1, k2, nu, nu_prime)

    return numerics.fd_gradient(F, np.zeros(len(basis)), step=step)


# ---------------------------------------------------------------- admissible pairs

def is_admissible(nu, nu_prime, tol=WALL_TOL):
    """True iff nu != w.nu' for every nontrivial Weyl element (Killing norm > tol)."""
    nu = np.asarray(nu, dtype=float)
    R = lie.weyl_group(len(nu))
    for w in R.weyl_elements:
        if w.is_identity():
            continue
        if lie.dual_norm(nu - w.act(nu_prime)) <= tol:
            return False
    return True


def is_admissible_bruteforce(nu, nu_prime, tol=WALL_TOL):
    """Independent oracle: compare nu with every nontrivial coordinate permutation of nu'."""
    nu = np.asarray(nu, dtype=float)
    nup = np.asarray(nu_prime, dtype=float)
    n = len(nu)
    for perm in itertools.permutations(range(n)):
        if perm == tuple(range(n)):
            continue
        permuted = nup[np.argsort(perm)]
        if np.sqrt(np.sum((nu - permuted) ** 2) / (2 * n)) <= tol:
            return False
    return True


def admissibility_lattice(n, count=50):
    """``count`` lattice points of a* containing walls, the origin and W-orbits."""
    if n == 2:
        s = (np.arange(count) - count // 2) / 4.0
        return np.stack([s, -s], axis=-1)
    side = int(np.ceil(np.sqrt(count)))
    pts = []
    for p, q in itertools.product(range(-(side // 2), side - side // 2), repeat=2):
        pts.append((p, q, -p - q))
        if len(pts) == count:
            break
    return np.array(pts, dtype=float) / 2.0


# ---------------------------------------------------------------- phase on N

def psi_mu(mu, t):
    """psi_mu(n) = mu H(n^{-1} w0) for n = exp(sum t_j X_j), X_j orthonormal in the nilpotent algebra."""
    t = np.asarray(t, dtype=float)
    n = int(round((1 + np.sqrt(1 + 8 * t.shape[-1])) / 2))
    w0 = lie.weyl_group(n).longest.matrix
    ninv = lie.nilpotent_exp_coords(-t, n)
    return lie.pair(mu, lie.iwasawa_H(ninv @ w0))


def _check_regular(mu, tol=WALL_TOL):
    R = lie.weyl_group(len(mu))
    if not R.is_regular(mu, tol):
        raise RegularityError(f"ADualVector {mu} lies within {tol:g} of a wall")
    return R


@dataclass(frozen=True)
class HessianReport:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    signature: int
    absdet: float
    symmetry_residual: float
    noise_floor: float


def hessian_S(mu, step=1e-3):
    """Finite-difference Hessian of psi_mu at e in orthonormal exponential coordinates."""
    mu = np.asarray(mu, dtype=float)
    R = _check_regular(mu)
    d = R.dim_n
    S = numerics.fd_hessian(lambda t: float(psi_mu(mu, t)), np.zeros(d), step=step)
    eig = np.linalg.eigvalsh(0.5 * (S + S.T))
    floor = numerics.fd_noise_floor(float(np.max(np.abs(mu))), step / 2)
    if np.min(np.abs(eig)) < 10 * floor:
        raise numerics.FiniteDifferenceError(
            f"smallest Hessian eigenvalue {np.min(np.abs(eig)):.2e} below 10x FD noise floor {floor:.2e}")
    if np.min(np.abs(eig)) < 1e-2 * np.max(np.abs(eig)):
        warnings.warn(f"Hessian condition number {np.max(np.abs(eig)) / np.min(np.abs(eig)):.1e}",
                      HessianConditioningWarning)
    return HessianReport(S, eig, int(np.sum(np.sign(eig))), float(abs(np.prod(eig))),
                         float(np.max(np.abs(S - S.T))), floor)


def hessian_closed_form(mu):
    """(signature, |det|) = (sum sign<mu, a> m_a, prod |<mu, a>|^{m_a})."""
    R = lie.weyl_group(len(mu))
    p = R.root_pairings(mu)
    return int(np.sum(np.sign(p) * R.multiplicities)), float(np.prod(np.abs(p) ** R.multiplicities))


@dataclass(frozen=True)
class CriticalPointReport:
    gradient_at_e: float
    min_gradient_off_e: float
    floor: float
    count: int

    @property
    def unique(self):
        return self.gradient_at_e < 1e-7 and self.min_gradient_off_e > self.floor


def _batched_gradient(F, T, step=1e-5):
    d = T.shape[-1]
    grads = np.zeros_like(T)
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        grads[:, j] = (F(T + e) - F(T - e)) / (2 * step)
    return grads


def critical_points_psi_mu(mu, box_radius=3.0, exclude=0.2, count=10_000, seed=0):
    """Gradient of psi_mu at e and its minimum over a sample net outside a ball around e."""
    mu = np.asarray(mu, dtype=float)
    R = _check_regular(mu)
    d = R.dim_n
    g0 = float(np.linalg.norm(numerics.fd_gradient(lambda t: float(psi_mu(mu, t)), np.zeros(d))))
    net = numerics.deterministic_net([(-box_radius, box_radius)] * d, count, seed)
    net = net[np.linalg.norm(net, axis=1) > exclude]
    grads = _batched_gradient(lambda T: psi_mu(mu, T), net)
    floor = 1e-3 * float(np.min(np.abs(R.root_pairings(mu))))
    return CriticalPointReport(g0, float(np.min(np.linalg.norm(grads, axis=1))), floor, len(net))


def sign_change_scan(mu, radius=6.0, npoints=4001):
    """SL(2): locations where d psi_mu / dt changes sign on [-radius, radius]."""
    t = np.linspace(-radius, radius, npoints)
    dpsi = _batched_gradient(lambda T: psi_mu(mu, T), t[:, None])[:, 0]
    idx = np.flatnonzero(dpsi[:-1] * dpsi[1:] < 0)
    roots = np.concatenate([0.5 * (t[idx] + t[idx + 1]), t[dpsi == 0]])
    return np.sort(roots)


# ---------------------------------------------------------------- kappa

def kappa(mu, signature=None):
    """C_N (prod |<mu, a>|^{m_a})^{-1/2} exp(i pi s / 4)."""
    mu = np.asarray(mu, dtype=float)
    R = _check_regular(mu)
    s, absdet = hessian_closed_form(mu)
    if signature is not None:
        s = signature
    return R.C_N * absdet ** -0.5 * np.exp(1j * np.pi * s / 4)


# ---------------------------------------------------------------- cutoff on the open cell

@dataclass(frozen=True)
class CutoffBeta:
    """beta(b, b') = plateau(d(center.o, flat(b, b')); radius, radius + margin).

    Equal to 1 on every pair whose flat meets the ball of ``radius`` around
    center.o. The lift evaluates beta on (g.b+, g.b-), so it is constant on
    A-orbits by construction.
    """

    center: np.ndarray
    radius: float
    margin: float

    def profile(self, dist):
        return numerics.plateau(dist, self.radius, self.radius + self.margin)

    def at_pair(self, k1, k2):
        g, ok = boundary.open_cell_batch(k1, k2)
        out = np.zeros(np.shape(ok))
        if np.any(ok):
            _, dist = radon.flat_projection(np.asarray(g)[ok] if np.ndim(ok) else g, self.center)
            out[ok] = self.profile(dist)
        return out if np.ndim(ok) else float(out)

    def lift(self, g):
        k1, k2 = boundary.pair_of(g)
        return self.at_pair(k1, k2)

    def support_distance(self):
        return self.radius + self.margin


def cutoff_for(f, margin=0.5):
    return CutoffBeta(f.center, f.radius, margin)


# ---------------------------------------------------------------- resolved quadrature on boxes

@dataclass(frozen=True)
class BoxRule:
    points_per_wave: float = 8.0
    min_nodes: int = 24
    max_nodes: int = 2000
    max_total: float = 6e7
    scan: int = 21


def _phase_gradient_bound(phase, box, scan, live):
    """Largest coordinate derivative of ``phase`` over live scan points (per axis)."""
    axes = [np.linspace(lo, hi, scan) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = phase(pts).reshape(mesh[0].shape)
    keep = live(pts).reshape(mesh[0].shape)
    bounds = []
    for j, ax in enumerate(axes):
        dv = np.abs(np.diff(vals, axis=j)) / (ax[1] - ax[0])
        kv = np.logical_or(np.take(keep, range(scan - 1), axis=j), np.take(keep, range(1, scan), axis=j))
        bounds.append(float(np.max(dv[kv])) if np.any(kv) else 0.0)
    return np.array(bounds)


def resolved_integral(integrand, phase, live, box, h, rule=BoxRule(), grid_scale=1.0, chunk=100_000):
    """Trapezoid integral over a box of a smooth integrand vanishing near the box edges.

    The box is first shrunk to the live region; nodes per axis resolve the
    phase/h variation with ``points_per_wave`` nodes per wavelength.
    Returns (value, nodes per axis).
    """
    live_box = numerics.support_box(lambda q: live(q), box, npoints=rule.scan)
    if live_box is None:
        return 0j, ()
    slopes = _phase_gradient_bound(phase, live_box, rule.scan, live) / h
    lengths = np.array([hi - lo for lo, hi in live_box])
    need = np.ceil(grid_scale * rule.points_per_wave * lengths * slopes / (2 * np.pi)).astype(int)
    nodes = np.maximum(need, int(np.ceil(grid_scale * rule.min_nodes)))
    if np.any(nodes > rule.max_nodes) or np.prod(nodes.astype(float)) > rule.max_total:
        raise OscillationUnderresolvedError(
            f"need {nodes.tolist()} nodes per axis for h = {h:g}; budget is {rule.max_nodes} "
            f"per axis and {rule.max_total:g} in total")
    grid = numerics.QuadratureGrid(tuple(
        numerics.trapezoid_periodic(int(m), lo, hi).axes[0] for m, (lo, hi) in zip(nodes, live_box)))
    return complex(numerics.integrate_chunked(integrand, grid, chunk)), tuple(int(m) for m in nodes)


# ---------------------------------------------------------------- I_h

def _mu_of(nu_prime):
    n = len(nu_prime)
    return lie.weyl_group(n).w0_act(np.asarray(nu_prime, dtype=float))


def n_integral(f, g, mu, h, rule=BoxRule(), grid_scale=1.0):
    """int_N f(g n M) exp(i mu H(n^{-1} w0)/h) dbar n with dbar n = exp(-rho H(n^{-1} w0)) dn."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    R = lie.weyl_group(n)
    w0 = R.longest.matrix
    rho = R.rho
    reach = float(lie.x_distance(g, f.center)) + f.radius
    if not reach < np.inf:
        return 0j, ()
    bound = lie.unipotent_entry_bound(reach, n)
    box = [(-bound, bound)] * R.dim_n

    def mats(q):
        return lie.unipotent_from_entries(q, n)

    def live(q):
        return np.abs(f(g @ mats(q))) > 0

    def phase(q):
        return lie.pair(mu, lie.iwasawa_H(np.linalg.inv(mats(q)) @ w0))

    def integrand(q):
        u = mats(q)
        Hn = lie.iwasawa_H(np.linalg.inv(u) @ w0)
        return f(g @ u) * np.exp(1j * lie.pair(mu, Hn) / h - lie.pair(rho, Hn)) * R.nbar_norm

    return resolved_integral(integrand, phase, live, box, h, rule, grid_scale)


def I_h_integral(f, beta, g, nu, nu_prime, h, rule=BoxRule(), grid_scale=1.0):
    """I_h(gM) = beta^(gM) int_N f(g n M) exp(i (w0 nu') H(n^{-1} w0)/h) dbar n."""
    if not 0 < h <= 1:
        raise ValueError("h must lie in (0, 1]")
    if not is_admissible(nu, nu_prime):
        raise RegularityError("(nu, nu') is not admissible")
    bhat = float(beta.lift(g)) if beta is not None else 1.0
    if bhat == 0.0:
        return 0j
    val, _ = n_integral(f, g, _mu_of(nu_prime), h, rule, grid_scale)
    return bhat * val


def I_h_prediction(f, g, nu_prime, h):
    """Leading term kappa(w0 nu') (2 pi h)^{dim N/2} f(gM)."""
    mu = _mu_of(nu_prime)
    d = lie.weyl_group(len(mu)).dim_n
    return kappa(mu) * (2 * np.pi * h) ** (d / 2) * complex(f(np.asarray(g)[None])[0])


# ---------------------------------------------------------------- F_h and the exact identity

def F_h_integral(f, k1, k2, nu, nu_prime, h, rule=BoxRule(), grid_scale=1.0):
    """F_h(b, b') = int_X f(x, b) e^{psi(x,b,b',rho,rho)} e^{i psi(x,b,b',nu,nu')/h} dx.

    Evaluated in coordinates x = c a n.o centred on the support of f, with
    dx = da dn; f(x, b) is f at the element of G/M sending (o, b+) to (x, b).
    """
    c = np.asarray(f.center, dtype=float)
    n = c.shape[-1]
    R = lie.weyl_group(n)
    l, d = n - 1, R.dim_n
    basis = lie.a_basis(n)
    r = f.radius
    bound = lie.unipotent_entry_bound(2 * r, n)
    box = [(-r, r)] * l + [(-bound, bound)] * d

    def elem(q):
        return c @ lie.exp_a(q[:, :l] @ basis) @ lie.unipotent_from_entries(q[:, l:], n)

    def gm_point(x):
        kprime = lie.iwasawa_k(np.linalg.solve(x, np.broadcast_to(k1, x.shape)))
        return x @ kprime

    def live(q):
        return lie.x_distance(c, elem(q)) < r

    def phase(q):
        return phase_psi(elem(q), k1, k2, nu, nu_prime)

    def integrand(q):
        x = elem(q)
        out = np.zeros(len(q), dtype=complex)
        m = lie.x_distance(c, x) < r
        if np.any(m):
            xs = x[m]
            out[m] = (f(gm_point(xs)) * density_rho(xs, k1, k2)
                      * np.exp(1j * phase_psi(xs, k1, k2, nu, nu_prime) / h))
        return out * lie.a_measure_factor(n) * R.nbar_norm

    return resolved_integral(integrand, phase, live, box, h, rule, grid_scale)[0]


def radon_side(f, beta, g, nu, nu_prime, h, rule=BoxRule(), a_rule=None, grid_scale=1.0):
    """int_A d_h(gaM) I_h(gaM) da with d_h = d_{nu/h, -w0 nu'/h}."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    R = lie.weyl_group(n)
    l = n - 1
    basis = lie.a_basis(n)
    a_rule = a_rule or BoxRule(min_nodes=rule.min_nodes, max_nodes=rule.max_nodes, scan=9)
    w = radon.WeightSpec(nu, -R.w0_act(nu_prime), h)
    # A(g^{-1} x, b+) is 1-Lipschitz in x and equals log a on g a N.o
    Hc = -lie.iwasawa_H(np.linalg.solve(f.center, g))
    tc = basis @ Hc * lie.killing_scale(n)
    box = [(tc[j] - f.radius, tc[j] + f.radius) for j in range(l)]
    mu = _mu_of(nu_prime)
    bhat = float(beta.lift(g)) if beta is not None else 1.0

    def ga(q):
        return g @ lie.exp_a(q @ basis)

    def integrand(q):
        elems = ga(q)
        vals = np.array([n_integral(f, e, mu, h, rule, grid_scale)[0] for e in elems])
        return radon.weight_d(elems, w) * vals * bhat * lie.a_measure_factor(n)

    def phase(q):
        # oscillation of d_h along the fibre is exp(i (nu - nu') log a / h)
        return lie.pair(np.asarray(nu) - np.asarray(nu_prime), q @ basis)

    def live(q):
        return np.ones(len(q), dtype=bool)

    return resolved_integral(integrand, phase, live, box, h, a_rule, grid_scale)[0]


@dataclass(frozen=True)
class IdentityReport:
    lhs: complex
    rhs: complex
    residual: float
    lhs_change: float = float("nan")
    rhs_change: float = float("nan")

    def unresolved_sides(self, tol):
        """Sides whose value moved by more than ``tol`` (relative) under grid refinement."""
        return [name for name, ch in (("lhs", self.lhs_change), ("rhs", self.rhs_change)) if ch > tol]


def identity_beta_Fh(f, beta, k1, k2, nu, nu_prime, h, rule=BoxRule(), grid_scale=1.0, refine=None):
    """Compare beta(b, b') F_h(b, b') with R(d_h I_h)(gMA) for (b, b') = g.(b+, b-).

    With ``refine`` (a grid-scale factor) both sides are recomputed on the
    refined grids and the relative changes are reported.
    """
    g = boundary.open_cell_membership(k1, k2)
    if g is None:
        raise ValueError("target pair is outside the open cell")
    b = float(beta.at_pair(k1, k2))

    def sides(scale):
        lhs = b * F_h_integral(f, k1, k2, nu, nu_prime, h, rule, scale) if b else 0j
        rhs = radon_side(f, beta, g, nu, nu_prime, h, rule, grid_scale=scale)
        return lhs, rhs

    lhs, rhs = sides(grid_scale)
    changes = (float("nan"), float("nan"))
    if refine:
        lhs2, rhs2 = sides(grid_scale * refine)
        changes = (abs(lhs2 - lhs) / (abs(lhs2) + 1e-30), abs(rhs2 - rhs) / (abs(rhs2) + 1e-30))
        lhs, rhs = lhs2, rhs2
    return IdentityReport(lhs, rhs, abs(lhs - rhs) / (abs(lhs) + 1e-30), *changes)


# ---------------------------------------------------------------- stationary points in x

@dataclass(frozen=True)
class StationaryReport:
    point: np.ndarray
    gradient_norm: float
    flat_distance: float
    converged: bool


def stationary_point(k1, k2, nu, nu_prime, x0, tol=1e-9):
    """Minimise |grad_x psi|^2 from x0 and report the distance of the result to the flat of (b, b')."""
    from scipy.optimize import least_squares

    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[-1]
    basis = lie.p_basis(n)

    def point(t):
        return x0 @ lie.exp_sym(np.tensordot(t, basis, axes=(0, 0)))

    def residual(t):
        return phase_gradient_x(point(t), k1, k2, nu, nu_prime)

    sol = least_squares(residual, np.zeros(len(basis)), xtol=1e-14, ftol=1e-14, gtol=1e-14)
    x = point(sol.x)
    gnorm = float(np.linalg.norm(residual(sol.x)))
    g = boundary.open_cell_membership(k1, k2)
    dist = float(radon.flat_projection(g, x)[1]) if g is not None else float("inf")
    return StationaryReport(x, gnorm, dist, gnorm < tol)


def decay_fit(values_by_h):
    """Log-log fit of |F_h| over an h sweep (exact zeros floored)."""
    hs = [h for h, _ in values_by_h]
    return numerics.loglog_fit(list(zip(hs, numerics.floor_values([v for _, v in values_by_h]))))
