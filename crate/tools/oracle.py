#!/usr/bin/env python3
"""Independent reference values for the test suites.

Writes fixtures/rho_fixtures.json. Everything here is computed with mpmath
(and scipy for the brute-force shell quadrature), without touching the Rust
code paths the fixtures are used to check.

    python3 tools/oracle.py [--skip-shell]
"""
import argparse
import json
import math
import pathlib

import mpmath as mp

mp.mp.dps = 40


def rho(n, mu):
    """rho_n(mu) = pi^-(n+1) / (2^n n!) * int_R exp(-mu x) (x / sinh x)^n dx."""
    def f(x):
        if x == 0:
            return mp.mpf(1)
        return mp.e ** (-mu * x) * (x / mp.sinh(x)) ** n

    val, err = mp.quad(f, [-mp.inf, -1, 0, 1, mp.inf], error=True)
    pref = mp.pi ** (-(n + 1)) / (2 ** n * mp.factorial(n))
    return pref * val, abs(pref * err)


def koranyi_sphere_measure(d):
    """S_d = 4 sqrt(pi) (2 Gamma(5/4))^d / Gamma((d+2)/4).

    From int exp(-||xi||^4) dxi computed two ways: as a product of 1-D
    integrals, and in anisotropic polar coordinates.
    """
    return 4 * mp.sqrt(mp.pi) * (2 * mp.gamma(mp.mpf(5) / 4)) ** d / mp.gamma(mp.mpf(d + 2) / 4)


def shell_box_quadrature():
    """Brute-force Cartesian quadrature of int_{1<=||xi||<=e} ||xi||^-4 dxi, d = 2."""
    from scipy import integrate

    e4 = math.e ** 4

    def inner(x0, x1):
        hi = e4 - x0 * x0 - x1 ** 4
        if hi <= 0:
            return 0.0
        lo = 1.0 - x0 * x0 - x1 ** 4
        f = lambda x2: (x0 * x0 + x1 ** 4 + x2 ** 4) ** -1.0
        top = hi ** 0.25
        if lo <= 0:
            return 2 * integrate.quad(f, 0, top, epsabs=1e-13, epsrel=1e-12)[0]
        return 2 * integrate.quad(f, lo ** 0.25, top, epsabs=1e-13, epsrel=1e-12)[0]

    def middle(x0):
        top = (e4 - x0 * x0) ** 0.25
        pts = []
        if x0 * x0 < 1:
            pts = [(1 - x0 * x0) ** 0.25]
        return 2 * integrate.quad(lambda x1: inner(x0, x1), 0, top, points=pts or None,
                                  epsabs=1e-11, epsrel=1e-11, limit=200)[0]

    top0 = math.e ** 2
    return 2 * integrate.quad(middle, 0, top0, points=[1.0], epsabs=1e-10,
                              epsrel=1e-10, limit=200)[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--skip-shell", action="store_true")
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "rho_fixtures.json"))
    args = ap.parse_args()

    rho_entries = []
    for n in (1, 2, 3):
        mus = sorted({0.0, 0.25, 0.5, 0.9, -0.5} | ({1.0, 1.5, -1.0} if n >= 2 else set())
                     | ({2.0, 2.5} if n >= 3 else set()))
        for mu in mus:
            v, e = rho(n, mp.mpf(mu))
            rho_entries.append({"n": n, "mu": mu, "value": float(v), "error_bound": max(float(e), 2.0 ** -52 * abs(float(v)))})

    sphere = {"d": 2, "closed_form": float(koranyi_sphere_measure(2))}
    if not args.skip_shell:
        sphere["shell_box_quadrature"] = shell_box_quadrature()

    out = {
        "generator": "tools/oracle.py",
        "rho": rho_entries,
        "koranyi_sphere_measure": sphere,
        "integral_x_over_sinh_half_line": float(mp.pi ** 2 / 4),
    }
    pathlib.Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
