"""Stationary phase on N: watch |I_h| follow (2 pi h)^{dim N / 2} as h shrinks.

Run with ``python3 demos/stationary_phase_sweep.py [sl2|sl3]``. The SL(3) sweep
takes about a minute on one core.
"""

import sys

import numpy as np

from chamberflow import harness, numerics, oscint


def main(group="sl2"):
    n = int(group[2])
    center, f, nu, nu_prime = harness._oscint_setup(n)
    rule = oscint.BoxRule(points_per_wave=4, min_nodes=16)
    beta = oscint.cutoff_for(f)
    print(f"{group}: nu' = {nu_prime}, kappa(w0 nu') = {oscint.kappa(oscint._mu_of(nu_prime)):.4f}")
    rows = []
    for h in harness.DEFAULT_H:
        val = oscint.I_h_integral(f, beta, center, nu, nu_prime, h, rule)
        pred = oscint.I_h_prediction(f, center, nu_prime, h)
        rows.append((h, val))
        print(f"  h = {h:<6} I_h = {val:.6f}  leading term = {pred:.6f}  ratio = {abs(val / pred):.4f}")
    fit = numerics.loglog_fit(rows)
    print(f"  fitted slope {fit.slope:.3f} (dim N / 2 = {n * (n - 1) / 4})")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "sl2")
