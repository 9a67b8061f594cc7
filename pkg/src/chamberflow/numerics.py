"""Shared numerical kernel: quadrature rules, finite differences, order fits."""

from dataclasses import dataclass, field
import itertools

import numpy as np
from numpy.polynomial.legendre import leggauss


class QuadratureError(RuntimeError):
    """A quadrature failed to converge or was under-resolved."""


class FiniteDifferenceError(RuntimeError):
    """A finite-difference step was unusable."""


class DegenerateFitError(ValueError):
    """Log-log data cannot determine a slope."""


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product quadrature rule.

    ``axes`` holds one ``(nodes, weights)`` pair per dimension; the full
    rule is the outer product. ``radii`` records truncation radii when the
    rule comes from a truncated infinite domain.
    """

    axes: tuple
    radii: tuple = ()
    kind: str = "product"

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(len(x) for x, _ in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def points(self):
        """Return nodes as an array of shape (size, ndim)."""
        mesh = np.meshgrid(*[x for x, _ in self.axes], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def weights(self):
        w = self.axes[0][1]
        for _, wj in self.axes[1:]:
            w = np.multiply.outer(w, wj)
        return np.asarray(w).ravel()

    def integrate(self, values):
        """Integrate samples given in ``points()`` order (trailing axes allowed)."""
        values = np.asarray(values)
        return np.tensordot(self.weights(), values, axes=(0, 0))

    def __mul__(self, other):
        return QuadratureGrid(self.axes + other.axes, self.radii + other.radii)

    def mass(self):
        return float(np.sum(self.weights()))


def gauss_legendre(npoints, a=-1.0, b=1.0):
    """Gauss-Legendre rule on [a, b], exact to degree 2*npoints - 1."""
    if npoints < 1:
        raise ValueError("npoints must be >= 1")
    x, w = leggauss(int(npoints))
    half = 0.5 * (b - a)
    return QuadratureGrid(((0.5 * (a + b) + half * x, half * w),))


def trapezoid_periodic(npoints, a=0.0, b=2 * np.pi):
    """Equispaced rule for periodic integrands on [a, b)."""
    if npoints < 1:
        raise ValueError("npoints must be >= 1")
    h = (b - a) / npoints
    x = a + h * np.arange(npoints)
    return QuadratureGrid(((x, np.full(npoints, h)),))


def tensor_gauss_legendre(npoints, box):
    """Tensor Gauss-Legendre rule on a box [(lo, hi), ...]."""
    if np.isscalar(npoints):
        npoints = [npoints] * len(box)
    grid = QuadratureGrid(())
    for n, (lo, hi) in zip(npoints, box):
        grid = grid * gauss_legendre(n, lo, hi)
    return grid


def sinh_sinh_rule(npoints, radius, cap=1e30):
    """Gauss-Legendre in u on [-R, R] pulled back by s = sinh(sinh(u)).

    Integrates over the whole real line; algebraically decaying integrands
    become doubly exponentially decaying in u. Nodes with |s| > cap are
    dropped; callers choose the cap so the discarded tail is negligible.
    """
    u, w = gauss_legendre(npoints, -radius, radius).axes[0]
    inner = np.sinh(u)
    keep = np.abs(inner) < np.arcsinh(cap)
    u, w, inner = u[keep], w[keep], inner[keep]
    s = np.sinh(inner)
    jac = np.cosh(inner) * np.cosh(u)
    return QuadratureGrid(((s, w * jac),), radii=(radius,), kind="sinh-sinh")


def integrate_adaptive(integrand, make_grid, radius=2.0, tol=1e-6, max_doublings=6):
    """Integrate by doubling the truncation radius until the change is below ``tol``.

    ``make_grid(radius)`` returns a QuadratureGrid; ``integrand`` maps an
    array of points (m, d) to values (m,). Returns (value, radius).
    """
    prev = None
    for _ in range(max_doublings + 1):
        grid = make_grid(radius)
        val = grid.integrate(integrand(grid.points()))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val, radius
        prev = val
        radius *= 2.0
    raise QuadratureError(
        f"truncation did not converge: last change {abs(val - prev):.3e} at radius {radius / 2}"
    )


def support_box(func, box, npoints=25, threshold=0.0, chunk=200_000):
    """Shrink ``box`` to the extent where |func| > threshold on a uniform scan.

    The result is padded by one and a half scan cells per side (clipped to
    ``box``). Returns None when nothing is found.
    """
    axes = [np.linspace(lo, hi, npoints) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    live = np.zeros(len(pts), dtype=bool)
    for i in range(0, len(pts), chunk):
        live[i:i + chunk] = np.abs(func(pts[i:i + chunk])) > threshold
    if not np.any(live):
        return None
    lo = pts[live].min(axis=0)
    hi = pts[live].max(axis=0)
    cell = np.array([(b - a) / (npoints - 1) for a, b in box])
    return tuple((max(a, l - 1.5 * c), min(b, h + 1.5 * c))
                 for (a, b), l, h, c in zip(box, lo, hi, cell))


def integrate_chunked(func, grid, chunk=200_000):
    """Apply ``func`` to grid points in chunks and return the weighted sum."""
    pts = grid.points()
    wts = grid.weights()
    total = 0.0
    for i in range(0, len(wts), chunk):
        total = total + np.dot(wts[i:i + chunk], func(pts[i:i + chunk]))
    return total


# ---------------------------------------------------------------- finite differences

def _check_step(point, step):
    scale = max(1.0, float(np.max(np.abs(point)))) if np.size(point) else 1.0
    if step <= 0 or step < 1e3 * np.finfo(float).eps * scale:
        raise FiniteDifferenceError(f"step {step:g} underflows at scale {scale:g}")


def _central_gradient(f, x, step):
    d = x.size
    g = None
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        diff = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step)
        if g is None:
            g = np.zeros((d,) + diff.shape, dtype=diff.dtype)
        g[j] = diff
    return g


def fd_gradient(f, point, step=1e-4, richardson=True):
    """Central-difference gradient, optionally with one Richardson level (order 4).

    ``f`` may return an array; the gradient then has shape (d,) + f.shape.
    """
    x = np.asarray(point, dtype=float).ravel()
    _check_step(x, step)
    g1 = _central_gradient(f, x, step)
    if not richardson:
        return g1
    g2 = _central_gradient(f, x, step / 2)
    return (4 * g2 - g1) / 3


def _central_hessian(f, x, step):
    d = x.size
    f0 = f(x)
    hess = np.zeros((d, d), dtype=np.result_type(f0, float))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = step
        hess[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / step**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = step
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * step**2)
            hess[i, j] = hess[j, i] = val
    return hess


def fd_hessian(f, point, step=1e-3, richardson=True):
    """Central-difference Hessian of a scalar function, symmetric by construction."""
    x = np.asarray(point, dtype=float).ravel()
    _check_step(x, step)
    h1 = _central_hessian(f, x, step)
    if not richardson:
        return h1
    h2 = _central_hessian(f, x, step / 2)
    return (4 * h2 - h1) / 3


def fd_noise_floor(fscale, step):
    """Rough roundoff level of a second difference with the given step."""
    return 16 * np.finfo(float).eps * max(1.0, abs(fscale)) / step**2


# ---------------------------------------------------------------- order fits

@dataclass(frozen=True)
class FitReport:
    slope: float
    intercept: float
    residual: float
    h_values: tuple = field(default_factory=tuple)
    values: tuple = field(default_factory=tuple)

    def predict(self, h):
        return np.exp(self.intercept) * np.asarray(h) ** self.slope


def loglog_fit(pairs, min_points=3):
    """Least-squares fit of log|value| = slope * log h + intercept.

    ``pairs`` is an iterable of (h, value). The residual is the RMS of the
    fit in log space.
    """
    pairs = [(float(h), abs(v)) for h, v in pairs]
    if len(pairs) < min_points:
        raise DegenerateFitError(f"need at least {min_points} points, got {len(pairs)}")
    h = np.array([p[0] for p in pairs])
    v = np.array([p[1] for p in pairs])
    if np.any(h <= 0) or np.any(v <= 0):
        raise DegenerateFitError("log-log fit needs positive h and nonzero values")
    lh, lv = np.log(h), np.log(v)
    if np.ptp(lh) == 0:
        raise DegenerateFitError("all h values are equal")
    design = np.stack([lh, np.ones_like(lh)], axis=1)
    coef, *_ = np.linalg.lstsq(design, lv, rcond=None)
    res = float(np.sqrt(np.mean((design @ coef - lv) ** 2)))
    return FitReport(float(coef[0]), float(coef[1]), res, tuple(h), tuple(v))


def floor_values(values, floor=1e-300):
    """Clamp magnitudes from below so that exact zeros survive a log fit."""
    return [max(abs(v), floor) for v in values]


def deterministic_net(box, count, seed=0):
    """Reproducible quasi-uniform sample net in a box (scrambled Halton)."""
    from scipy.stats import qmc

    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    sampler = qmc.Halton(d=len(box), scramble=True, seed=seed)
    return qmc.scale(sampler.random(count), lo, hi)


def product_index(shape):
    return itertools.product(*[range(s) for s in shape])


# ---------------------------------------------------------------- smooth cutoffs

def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, smooth in between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    a = np.exp(-1.0 / ti)
    b = np.exp(-1.0 / (1.0 - ti))
    out[inside] = a / (a + b)
    out[t >= 1] = 1.0
    return out


def plateau(r, inner, outer):
    """1 for r <= inner, 0 for r >= outer, C-infinity in between."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - inner) / (outer - inner))


def bump(r):
    """Unit-height C-infinity bump exp(1 - 1/(1 - r^2)) supported in |r| < 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out
