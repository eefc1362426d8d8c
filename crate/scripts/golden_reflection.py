"""Writes reference reflection coefficients and their capacitance derivative.

The derivative uses the chain rule through the impedance, independently of
the rational form used by the library.
"""
import sys

import numpy as np

L1, L2, R, Z0 = 2.5e-9, 0.7e-9, 1.0, 50.0


def coefficient(f, c):
    jw = 2j * np.pi * f
    b = jw * L2 + R + 1.0 / (jw * c)
    z = jw * L1 * b / (jw * L1 + b)
    db = -1.0 / (jw * c * c)
    dz = (jw * L1) ** 2 / (jw * L1 + b) ** 2 * db
    phi = (z - Z0) / (z + Z0)
    dphi = 2.0 * Z0 * dz / (z + Z0) ** 2
    return phi, np.conj(dphi)


def main(path):
    fs = np.linspace(2.35e9, 2.45e9, 11)
    cs = np.linspace(0.2e-12, 3e-12, 15)
    with open(path, "w") as out:
        out.write("f_hz,c_f,phi_re,phi_im,dphi_conj_re,dphi_conj_im\n")
        for f in map(float, fs):
            for c in map(float, cs):
                p, d = map(complex, coefficient(f, c))
                out.write(f"{f!r},{c!r},{p.real!r},{p.imag!r},{d.real!r},{d.imag!r}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data/reflection_golden.csv")
