#!/usr/bin/env python3
"""Writes a C++ header of reference values computed in 50-digit arithmetic with mpmath."""

import sys

import mpmath as mp

mp.mp.dps = 50

BESSEL_J = [(10, "5"), (0, "0.001"), (3, "0.1"), (25, "2"), (5, "30"), (40, "10")]
BESSEL_Y = [(8, "2"), (1, "0.5"), (5, "30"), (0, "0.001")]
MIE_CASES = [("1", "1", "1"), ("2", "1", "0.5"), ("0.5", "1", "0"), ("4", "1", "5")]
MIE_ANGLES = ["0", "1/3", "1/2", "2/3", "1"]  # θ as a fraction of π


def sph_j(n, x):
    return mp.sqrt(mp.pi / (2 * x)) * mp.besselj(n + mp.mpf(1) / 2, x)


def sph_y(n, x):
    return mp.sqrt(mp.pi / (2 * x)) * mp.bessely(n + mp.mpf(1) / 2, x)


def sph_h(n, x):
    return sph_j(n, x) + 1j * sph_y(n, x)


def mie_farfield(k, a, lam, theta):
    """u∞(θ) for ∂_r u + iλu = 0 on r = a, incident e^{ikz}."""
    x = k * a
    total = mp.mpc(0)
    t = mp.cos(theta)
    n = 0
    while True:
        j, h = sph_j(n, x), sph_h(n, x)
        dj = mp.diff(lambda s: sph_j(n, s), x)
        dh = mp.diff(lambda s: sph_h(n, s), x)
        c = -(k * dj + 1j * lam * j) / (k * dh + 1j * lam * h)
        term = (2 * n + 1) * c * mp.legendre(n, t)
        total += term
        if n > x + 10 and abs((2 * n + 1) * c) < mp.mpf(10) ** -40:
            break
        n += 1
    return -1j / k * total


def fmt(v):
    return mp.nstr(v, 20, min_fixed=-3, max_fixed=3)


def arg(text):
    return repr(float(mp.mpf(text)))


def main(path):
    out = ["#pragma once", "", "// Generated by tests/oracles/gen_golden.py; do not edit.", "",
           "namespace golden {", "",
           "struct BesselValue { int n; double x; double value; };", "",
           "struct MieValue { double k, a, lambda, theta_over_pi, re, im; };", ""]
    out.append("inline constexpr BesselValue kSphBesselJ[] = {")
    for n, x in BESSEL_J:
        out.append(f"    {{{n}, {arg(x)}, {fmt(sph_j(n, mp.mpf(x)))}}},")
    out.append("};")
    out.append("")
    out.append("inline constexpr BesselValue kSphBesselY[] = {")
    for n, x in BESSEL_Y:
        out.append(f"    {{{n}, {arg(x)}, {fmt(sph_y(n, mp.mpf(x)))}}},")
    out.append("};")
    out.append("")
    out.append("inline constexpr MieValue kMieFarField[] = {")
    for k, a, lam in MIE_CASES:
        for frac in MIE_ANGLES:
            num, _, den = frac.partition("/")
            fr = mp.mpf(num) / mp.mpf(den or 1)
            u = mie_farfield(mp.mpf(k), mp.mpf(a), mp.mpf(lam), mp.pi * fr)
            out.append(f"    {{{arg(k)}, {arg(a)}, {arg(lam)}, {fmt(fr)}, {fmt(u.real)}, "
                       f"{fmt(u.imag)}}},")
    out.append("};")
    out.append("")
    out.append("} // namespace golden")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "golden_values.hpp")
