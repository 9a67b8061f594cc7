"""Verification suites, configuration validation and report emission for the command line."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import csv
import io
import json
import time

import numpy as np

from . import boundary, lie, numerics, oscint, quantize, radon

SCHEMA_VERSION = 1
GROUPS = ("sl2", "sl3")
SUITES = ("iwasawa", "boundary", "radon", "oscint", "quantize", "all")
DEFAULT_H = (0.2, 0.1, 0.05, 0.025)
TABLE_COLUMNS = ("h", "value_re", "value_im", "predicted", "rel_error")


class ConfigError(ValueError):
    """Invalid suite configuration; ``line`` locates the offending entry in a config file."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class SuiteConfig:
    group: str = "sl2"
    suite: str = "iwasawa"
    h_list: tuple = DEFAULT_H
    tolerances: dict = field(default_factory=dict)
    grid_sizes: dict = field(default_factory=dict)
    tol_scale: float = 1.0
    grid_scale: float = 1.0
    seed: int = 0
    out: str = "report.json"
    jobs: int = 1

    @property
    def n(self):
        return int(self.group[2])

    def tol(self, key, default):
        return self.tolerances.get(key, default) * self.tol_scale

    def grid(self, key, default):
        return int(round(self.grid_sizes.get(key, default) * self.grid_scale))


def validate(cfg, lines=None):
    """Raise ConfigError unless ``cfg`` is usable; ``lines`` maps keys to config-file lines."""
    lines = lines or {}
    if cfg.group not in GROUPS:
        raise ConfigError(f"group must be one of {GROUPS}, got {cfg.group!r}", lines.get("group"))
    if cfg.suite not in SUITES:
        raise ConfigError(f"suite must be one of {SUITES}, got {cfg.suite!r}", lines.get("suite"))
    hs = list(cfg.h_list)
    where = lines.get("h_list")
    if not hs:
        raise ConfigError("h_list is empty", where)
    if any(not isinstance(h, (int, float)) or not 0 < h <= 1 for h in hs):
        raise ConfigError("h_list entries must lie in (0, 1]", where)
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("h_list must be strictly decreasing", where)
    for key, val in cfg.tolerances.items():
        if not isinstance(val, (int, float)) or not val > 0:
            raise ConfigError(f"tolerance {key!r} must be positive", lines.get(f"tolerances.{key}", lines.get("tolerances")))
    for key, val in cfg.grid_sizes.items():
        if not isinstance(val, (int, float)) or not val > 0:
            raise ConfigError(f"grid size {key!r} must be positive", lines.get(f"grid_sizes.{key}", lines.get("grid_sizes")))
    if not cfg.tol_scale > 0 or not cfg.grid_scale > 0:
        raise ConfigError("tol_scale and grid_scale must be positive")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1", lines.get("jobs"))
    return cfg


def _key_lines(text):
    """Line number of the first occurrence of each quoted key (nested keys dotted)."""
    out = {}
    stack = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith('"') and '":' in stripped:
            key = stripped[1:stripped.index('":')]
            dotted = ".".join(stack + [key]) if stack else key
            out.setdefault(dotted, lineno)
            out.setdefault(key, lineno)
            if stripped.rstrip(",").endswith("{"):
                stack.append(key)
        if stripped.startswith("}") and stack:
            stack.pop()
    return out


def load_config(path, **overrides):
    """Read a JSON config file, apply overrides and validate."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", exc.lineno) from None
    lines = _key_lines(text)
    known = set(SuiteConfig.__dataclass_fields__)
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", lines.get(key))
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "h_list" in data:
        data["h_list"] = tuple(data["h_list"])
    return validate(SuiteConfig(**data), lines)


# ---------------------------------------------------------------- records

@dataclass
class ReportRecord:
    test_id: str
    anchor: str
    measured: float
    tolerance: float
    passed: bool
    runtime: float = 0.0
    expected: str = ""
    table: list = field(default_factory=list)


def _record(test_id, anchor, measured, tolerance, expected="< tolerance", passed=None, table=None):
    measured = float(measured)
    ok = bool(measured < tolerance) if passed is None else bool(passed)
    return ReportRecord(test_id, anchor, measured, float(tolerance), ok, 0.0, expected, table or [])


def _table_row(h, value, predicted):
    value = complex(value)
    predicted = complex(predicted)
    return {"h": float(h), "value_re": value.real, "value_im": value.imag,
            "predicted": abs(predicted), "rel_error": abs(value - predicted) / max(abs(predicted), 1e-300)}


# ---------------------------------------------------------------- checks

def check_iwasawa(cfg):
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    g = lie.random_sl(n, 1000, rng)
    rec = np.max(np.abs(lie.iwasawa_decompose(g).reconstruct() - g))
    g2 = lie.random_sl(n, 1000, rng)
    k = lie.random_so(n, 1000, rng)
    coc = np.max(lie.iwasawa_cocycle_check(g, g2, k))
    return [_record(f"iwasawa.reconstruction.{cfg.group}", "g = k exp(H(g)) n", rec, cfg.tol("iwasawa", 1e-10)),
            _record(f"iwasawa.cocycle.{cfg.group}", "H(g1 g2 k) = H(g1 k(g2 k)) + H(g2 k)", coc,
                    cfg.tol("iwasawa", 1e-10))]


def check_boundary(cfg):
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    g, h = lie.random_sl(n, 1000, rng), lie.random_sl(n, 1000, rng)
    k = lie.random_so(n, 1000, rng)
    A = boundary.horocycle_bracket
    gk = boundary.act(g, k)
    eq1 = np.max(np.abs(A(g @ h, gk) - A(h, k) - A(g, gk)))
    eq2 = np.max(np.abs(A(np.linalg.inv(g), k) + A(g, gk)))
    facts = np.max(np.abs(A(g, boundary.act(g, boundary.b_plus(n))) - lie.iwasawa_H(g)))
    tol = cfg.tol("boundary", 1e-10)
    recs = [_record(f"boundary.equivariance.{cfg.group}", "A(g.x, g.b) = A(x, b) + A(g.o, g.b)", eq1, tol),
            _record(f"boundary.inverse.{cfg.group}", "A(g^-1.o, b) = -A(g.o, g.b)", eq2, tol),
            _record(f"boundary.facts.{cfg.group}", "A(g.o, g.b+) = H(g)", facts, tol)]
    grid = boundary.boundary_grid(n, cfg.grid("boundary", 128 if n == 2 else 40))
    smooth = boundary.density(grid, lambda kk: 1.0 + 0.3 * kk[..., 0, 0] ** 2)
    nu = lie.random_regular_dual(n, 1, rng)[0]
    g1, g2 = lie.random_sl(n, 2, rng, scale=0.4)
    step = boundary.principal_series_act(nu, g1, boundary.principal_series_act(nu, g2, smooth))
    direct = boundary.principal_series_act(nu, g1 @ g2, smooth)
    coc = np.max(np.abs(step.values - direct.values))
    unit = abs(boundary.principal_series_act(nu, g1, smooth).l2_norm() - smooth.l2_norm()) / smooth.l2_norm()
    recs.append(_record(f"boundary.principal_series_cocycle.{cfg.group}", "pi(g1) pi(g2) = pi(g1 g2)", coc,
                        cfg.tol("principal_series", 1e-9)))
    recs.append(_record(f"boundary.principal_series_unitary.{cfg.group}", "||pi(g) f|| = ||f||", unit,
                        cfg.tol("principal_series", 1e-6)))
    if n == 2:
        T = boundary.constant_density(boundary.boundary_grid(2, cfg.grid("poisson", 128)))
        nu2 = np.array([0.7, -0.7])
        pts = lie.random_sl(2, 20, rng)
        winv = np.max(np.abs(boundary.poisson_transform(1j * nu2, T, pts)
                             - boundary.poisson_transform(-1j * nu2, T, pts)))
        recs.append(_record("boundary.poisson_weyl.sl2", "P_{i nu}(1) = P_{-i nu}(1)", winv, cfg.tol("poisson", 1e-6)))
        z = 0.3 + 1.4j

        def u(zz):
            return boundary.poisson_transform(1j * nu2, T, boundary.h2_group_element(np.atleast_1d(zz)))

        lap = boundary.laplace_beltrami_h2(u, np.array([z]))[0] / u(z)[0]
        expect = -(lie.dual_norm(nu2) ** 2 + lie.dual_norm(lie.rho_vector(2)) ** 2)
        recs.append(_record("boundary.poisson_laplacian.sl2", "Delta P = -(|nu|^2 + |rho|^2) P",
                            abs(lap - expect) / abs(expect), cfg.tol("poisson", 1e-3)))
    return recs


def _radon_function(n, rng):
    c = lie.random_sl(n, 1, rng, scale=0.3)[0]
    prof = radon.boundary_profile([np.linspace(1.0, 0.3, n)], [0.5])
    return radon.bump_function(c, 1.2, prof), c


def check_radon(cfg):
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    f, c = _radon_function(n, rng)
    w = radon.WeightSpec(lie.random_regular_dual(n, 1, rng)[0], lie.random_regular_dual(n, 1, rng)[0])
    g = c @ lie.random_so(n, 1, rng)[0]
    H = 0.3 * (lie.a_basis(n).T @ rng.normal(size=n - 1))
    base = radon.weighted_radon(f, w, g)
    moved = radon.weighted_radon(f.right_translate(H), w, g)
    law = abs(moved - np.exp(-1j * lie.pair(w.translation_exponent(), H)) * base) / (abs(base) + 1e-300)
    gamma = lie.random_sl(n, 1, rng, scale=0.5)[0]
    ft = f.left_translate(gamma)
    lhs = radon.weighted_radon(ft, w, gamma @ g)
    rhs = radon.weighted_radon(f, w, g) * _gamma_factor(gamma, g, w)
    geq = abs(lhs - rhs) / (abs(rhs) + 1e-300)
    recs = [_record(f"radon.translation.{cfg.group}", "R(f^a)(gMA) = exp(-i (nu + w0 nu') log a) R f(gMA)", law,
                    cfg.tol("radon", 1e-8)),
            _record(f"radon.equivariance.{cfg.group}", "R(f o gamma^-1)(gamma g) = j(gamma, g) R f(g)", geq,
                    cfg.tol("radon_equivariance", 1e-7))]
    if n == 2:
        grid = boundary.boundary_grid(2, cfg.grid("ps", 128))
        nu, nup = np.array([0.8, -0.8]), np.array([0.5, -0.5])
        T = boundary.density(grid, lambda k: 1.0 + 0.4 * k[..., 0, 0] * k[..., 1, 0])
        Tp = boundary.density(grid, lambda k: 1.0 + 0.3 * k[..., 0, 0] ** 2)
        p = radon.PSPairing(T, Tp, radon.WeightSpec(nu, nup))
        gam = lie.random_sl(2, 1, rng, scale=0.3)[0]
        lhs, rhs = radon.ps_gamma_sides(f, p, gam)
        recs.append(_record("radon.ps_gamma.sl2", "PS(gamma T, gamma T') = PS(T, T') for invariant pairs",
                            abs(lhs - rhs) / (abs(rhs) + 1e-300), cfg.tol("ps", 1e-6)))
    return recs


def _gamma_factor(gamma, g, w):
    """exp((i nu + rho) A(gamma.o, gamma g.b+) + (i nu' + rho) A(gamma.o, gamma g.b-))."""
    n = g.shape[-1]
    R = lie.weyl_group(n)
    nu, nup = w.effective
    A = boundary.horocycle_bracket
    e1 = lie.pair(1j * nu + R.rho, A(gamma, boundary.act(gamma @ g, np.eye(n))))
    e2 = lie.pair(1j * nup + R.rho, A(gamma, boundary.act(gamma @ g, R.longest.matrix)))
    return np.exp(e1 + e2)


def _oscint_setup(n):
    if n == 2:
        c = lie.exp_a(np.array([0.1, -0.1])) @ lie.rotation2(0.3)
        prof = radon.boundary_profile([[1.0, 0.3]], [0.5])
        return c, radon.bump_function(c, 1.0, prof), np.array([4.0, -4.0]), np.array([5.0, -5.0])
    c = lie.exp_a(np.array([0.1, 0.05, -0.15])) @ lie.euler_zyz(0.3, 0.5, 0.2)
    prof = radon.boundary_profile([[1.0, 0.3, 0.2]], [0.5])
    return c, radon.bump_function(c, 1.0, prof), np.array([4.0, 1.0, -5.0]), np.array([10.0, 2.0, -12.0])


def check_oscint(cfg):
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    R = lie.weyl_group(n)
    mismatches, det_err = 0, 0.0
    for mu in lie.random_regular_dual(n, 20, rng):
        rep = oscint.hessian_S(mu)
        s, d = oscint.hessian_closed_form(mu)
        mismatches += int(rep.signature != s)
        det_err = max(det_err, abs(rep.absdet - d) / d)
    recs = [_record(f"oscint.hessian_signature.{cfg.group}", "sgn S(mu) = sum sign<mu, a> m_a", mismatches, 0.5,
                    expected="0 mismatches"),
            _record(f"oscint.hessian_det.{cfg.group}", "|det S(mu)| = prod |<mu, a>|^m_a", det_err,
                    cfg.tol("hessian", 1e-4))]
    cp = oscint.critical_points_psi_mu(R.rho, seed=cfg.seed)
    recs.append(_record(f"oscint.critical_point.{cfg.group}", "grad psi_mu = 0 only at n = e", cp.gradient_at_e, 1e-7,
                        passed=cp.unique))
    c, f, nu, nup = _oscint_setup(n)
    rule = oscint.BoxRule(points_per_wave=4, min_nodes=16)
    table, pairs = [], []
    for h in cfg.h_list:
        val, _ = oscint.n_integral(f, c, oscint._mu_of(nup), h, rule, cfg.grid_scale)
        table.append(_table_row(h, val, oscint.I_h_prediction(f, c, nup, h)))
        pairs.append((h, val))
    target = R.dim_n / 2
    band = cfg.tol("slope", 0.05 if n == 2 else 0.1)
    if len(pairs) >= 2:
        slope = numerics.loglog_fit(pairs, min_points=2).slope
        recs.append(_record(f"oscint.I_h_slope.{cfg.group}", "I_h ~ kappa(w0 nu') (2 pi h)^{dim N/2} f(gM)",
                            abs(slope - target), band, expected=f"slope {target} +- {band}", table=table))
    return recs


def check_quantize(cfg):
    recs = []
    z0 = 0.3 + 1.2j

    def u(elems):
        zz = quantize._upper_point(elems)
        return np.exp(-np.abs(zz - (0.2 + 1.0j)) ** 2) * (1 + 0.5 * zz.real)

    h0 = cfg.h_list[0]
    ident = abs(quantize.QuantizedOperator(quantize.constant_symbol(), h0).apply(u, z0)
                - u(boundary.h2_group_element(np.array([z0])))[0])
    recs.append(_record("quantize.identity.sl2", "Op_h(1) u = u", ident, cfg.tol("quantize", 1e-4)))
    k = lie.rotation2(0.7)
    theta = np.array([0.8, -0.8])
    xi = quantize.phi_covector(z0, k, theta)
    center = np.array([0.3, -0.2])
    sym = quantize.Symbol(lambda z, x: np.exp(-0.5 * np.sum((x - center) ** 2, axis=-1)))
    exact = float(np.exp(-0.5 * np.sum((xi - center) ** 2)))
    table, pairs = [], []
    for h in cfg.h_list:
        val = quantize.noneuclidean_symbol(quantize.QuantizedOperator(sym, h), k, theta, z0, cfg.grid_scale)
        table.append(_table_row(h, val, exact))
        pairs.append((h, val - exact))
    if len(pairs) >= 2:
        order = numerics.loglog_fit(pairs, min_points=2).slope
        recs.append(_record("quantize.noneuclidean_order.sl2", "a~_h = a(xi) + i h D a(xi) + O(h^2)",
                            1.0 - order, 0.0, expected="order >= 1", passed=order >= 1 - 0.05, table=table))
    samples = [(0.3 + 1.2j, lie.rotation2(0.7)), (-0.4 + 0.8j, lie.rotation2(2.0)), (1.1 + 2.0j, lie.rotation2(-0.4))]
    vals, spread = quantize.character_link(quantize.metric_symbol(), theta, h0, samples)
    recs.append(_record("quantize.character_spread.sl2", "Op_h(p) e = chi(p) e", spread, cfg.tol("character", 1e-6)))
    return recs


CHECKS = {"iwasawa": check_iwasawa, "boundary": check_boundary, "radon": check_radon,
          "oscint": check_oscint, "quantize": check_quantize}


def _run_one(name, cfg):
    t0 = time.perf_counter()
    if name == "quantize" and cfg.group != "sl2":
        return []
    recs = CHECKS[name](cfg)
    elapsed = time.perf_counter() - t0
    for r in recs:
        r.runtime = elapsed / max(len(recs), 1)
    return recs


def run_suite(cfg):
    """Run the configured suites and return the list of records."""
    validate(cfg)
    names = list(CHECKS) if cfg.suite == "all" else [cfg.suite]
    if cfg.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, names, [cfg] * len(names)))
    else:
        results = [_run_one(name, cfg) for name in names]
    return [r for group in results for r in group]


# ---------------------------------------------------------------- output

def emit_convergence_table(rows):
    """CSV text with fixed columns, rows sorted by descending h."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in sorted(rows, key=lambda r: -r["h"]):
        writer.writerow({k: repr(float(row[k])) for k in TABLE_COLUMNS})
    return buf.getvalue()


def parse_convergence_table(text):
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


def write_report(records, cfg, path=None):
    """Write the JSON report and one CSV per convergence table; returns the written paths."""
    path = path or cfg.out
    cfg_dict = asdict(cfg)
    cfg_dict["h_list"] = list(cfg.h_list)
    payload = {"schema_version": SCHEMA_VERSION, "config": cfg_dict,
               "all_passed": all(r.passed for r in records),
               "records": [asdict(r) for r in records]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    written = [path]
    stem = path[:-5] if path.endswith(".json") else path
    for r in records:
        if r.table:
            csv_path = f"{stem}.{r.test_id}.csv"
            with open(csv_path, "w", newline="") as fh:
                fh.write(emit_convergence_table(r.table))
            written.append(csv_path)
    return written
