"""Two independent quadratures of one number: beta F_h on X against the A-fibre integral of d_h I_h.

Run with ``python3 demos/exact_identity.py``.
"""

import numpy as np

from chamberflow import boundary, lie, oscint, radon


def main():
    center = lie.exp_a(np.array([0.1, -0.1])) @ lie.rotation2(0.3)
    f = radon.gaussian_bump(center, 0.15, radon.boundary_profile([[1.0, 0.3]], [0.5]))
    beta = oscint.cutoff_for(f)
    nu, nu_prime = np.array([2.5, -2.5]), np.array([2.0, -2.0])
    for h in (0.2, 0.1):
        for angle in (-0.8, 0.0, 0.8):
            k1, k2 = boundary.pair_of(center @ lie.rotation2(angle))
            rep = oscint.identity_beta_Fh(f, beta, k1, k2, nu, nu_prime, h)
            print(f"h = {h}, target angle {angle:+.1f}: X side {rep.lhs:.8f}, fibre side {rep.rhs:.8f}, "
                  f"relative residual {rep.residual:.1e}")
    # a pair whose flats miss the support: both sides decay faster than any power of h
    k1, k2 = boundary.pair_of(lie.exp_a(np.array([1.5, -1.5])) @ center @ lie.rotation2(0.4))
    vals = [(h, oscint.F_h_integral(f, k1, k2, nu_prime, nu_prime, h)) for h in (0.2, 0.1, 0.05)]
    print("separated pair |F_h|:", ", ".join(f"{abs(v):.1e}" for _, v in vals))


if __name__ == "__main__":
    main()
