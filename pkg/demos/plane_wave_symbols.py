"""Quantized symbols acting on hyperbolic plane waves.

The operator multiplies a plane wave by its non-euclidean symbol, which tends
to a(Phi(x, b, theta)) with a purely imaginary first correction. Run with
``python3 demos/plane_wave_symbols.py``.
"""

import numpy as np

from chamberflow import lie, quantize


def main():
    z = 0.3 + 1.2j
    k, theta = lie.rotation2(0.7), np.array([0.8, -0.8])
    xi = quantize.phi_covector(z, k, theta)
    center = np.array([0.3, -0.2])
    sym = quantize.Symbol(lambda zz, x: np.exp(-0.5 * np.sum((x - center) ** 2, axis=-1)).astype(complex))
    exact = quantize.symbol_value(sym, z, xi)
    print(f"a(Phi) = {exact.real:.8f}")
    for h in (0.2, 0.1, 0.05, 0.025):
        val = quantize.noneuclidean_symbol(quantize.QuantizedOperator(sym, h), k, theta, z)
        print(f"  h = {h:<6} real error {val.real - exact.real:+.2e}  imaginary part {val.imag:+.2e}")
    nu = theta
    samples = [(0.3 + 1.2j, lie.rotation2(0.7)), (-0.4 + 0.8j, lie.rotation2(2.0)), (1.1 + 2.0j, lie.rotation2(-0.4))]
    vals, spread = quantize.character_link(quantize.metric_symbol(), nu, 0.1, samples)
    print(f"|xi|^2 on plane waves: {vals[0].real:.10f} at every sample (spread {spread:.1e}), "
          f"|nu|^2 = {lie.dual_norm(nu) ** 2:.10f}")


if __name__ == "__main__":
    main()
