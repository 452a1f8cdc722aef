#!/usr/bin/env python3
"""Independent high-precision reference values frozen into the C++ test suites.

Run with `python3 tests/oracles/compute_oracles.py`. Nothing in here shares code
with the library; every value is obtained by quadrature in mpmath/scipy or by a
plain NumPy Monte-Carlo loop.
"""
import math

import mpmath as mp
import numpy as np
from scipy import integrate

mp.mp.dps = 30


def hat(x):
    return max(0.0, 1.0 - abs(x))


def hat_gagliardo_autocorrelation(s):
    """(1-s) * double integral of |f(x)-f(y)|^2/|x-y|^(1+2s) for the unit hat.

    Uses E = 2(1-s) int_0^inf z^(-1-2s) D(z) dz with D(z) = int |f(x)-f(x+z)|^2 dx,
    a piecewise polynomial built from the cubic B-spline autocorrelation of the hat.
    """
    s = mp.mpf(s)
    near = 2 / (2 - 2 * s) - 1 / (3 - 2 * s)
    mid = mp.quad(lambda z: z ** (-1 - 2 * s) * (mp.mpf(4) / 3 - (2 - z) ** 3 / 3), [1, 2])
    far = (mp.mpf(4) / 3) * mp.power(2, -2 * s) / (2 * s)
    return 2 * (1 - s) * (near + mid + far)


def hat_gagliardo_fourier(s):
    """Same quantity through Plancherel and closed-form Mellin transforms of 1 - cos."""
    s = mp.mpf(s)
    alpha = 2 * s
    c_s = 4 * (-mp.gamma(-alpha) * mp.cos(mp.pi * alpha / 2))
    beta = 2 * s - 3
    xi_integral = 2 * (-mp.gamma(beta) * mp.cos(mp.pi * beta / 2) * (4 - mp.power(2, -beta)))
    return (1 - s) * c_s * 2 * xi_integral / (2 * mp.pi)


def k_constant(p, n):
    omega = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    mean = math.gamma((p + 1) / 2) * math.gamma(n / 2) / (math.sqrt(math.pi) * math.gamma((n + p) / 2))
    return omega * mean


def radial_bump_grad_norm_p(p, n, radius=1.0):
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    g = lambda r: (4 * r * (radius ** 2 - r ** 2) / radius ** 4) ** p * area * r ** (n - 1)
    return float(mp.quad(g, [0, radius]))


def chi(s):
    if s <= 0.5:
        return 1.0
    if s >= 1.0:
        return 0.0
    t = (s - 0.5) / 0.5
    return 1.0 - (3 * t * t - 2 * t ** 3)


def dchi(s):
    if s <= 0.5 or s >= 1.0:
        return 0.0
    t = (s - 0.5) / 0.5
    return -(6 * t - 6 * t * t) / 0.5


def linear_cutoff_grad(x, y, w, radius):
    r = math.hypot(x, y)
    s = r / radius
    lin = w[0] * x + w[1] * y
    gx, gy = w[0] * chi(s), w[1] * chi(s)
    if r > 0:
        d = dchi(s) / radius
        gx += lin * d * x / r
        gy += lin * d * y / r
    return gx, gy


def linear_cutoff_grad_sq(w, radius):
    def integrand(theta, r):
        gx, gy = linear_cutoff_grad(r * math.cos(theta), r * math.sin(theta), w, radius)
        return (gx * gx + gy * gy) * r
    val, _ = integrate.dblquad(integrand, 0, radius, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-12)
    return val


def square_sphere_form(g, p):
    """int over the boundary of [-1,1]^2 of |g.v|^p dlength (l-infinity unit sphere, cone measure)."""
    total = 0.0
    for fixed in (1.0, -1.0):
        total += integrate.quad(lambda t: abs(g[0] * fixed + g[1] * t) ** p, -1, 1, epsabs=1e-14)[0]
        total += integrate.quad(lambda t: abs(g[0] * t + g[1] * fixed) ** p, -1, 1, epsabs=1e-14)[0]
    return total


def weighted_bump_reference(anchor, radius=1.0):
    """int |grad f|^2 (2 + sin x1) dx for the radial bump."""
    def integrand(theta, r):
        x1 = anchor[0] + r * math.cos(theta)
        g = 4 * r * (radius ** 2 - r ** 2) / radius ** 4
        return g * g * (2 + math.sin(x1)) * r
    val, _ = integrate.dblquad(integrand, 0, radius, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-12)
    return val


def heisenberg_ball_volume_mc(samples, seed):
    rng = np.random.default_rng(seed)
    total = 0
    chunk = 1_000_000
    for _ in range(samples // chunk):
        a = rng.uniform(-1, 1, chunk)
        b = rng.uniform(-1, 1, chunk)
        t = rng.uniform(-0.25, 0.25, chunk)
        total += np.count_nonzero((a * a + b * b) ** 2 + 16 * t * t < 1)
    frac = total / samples
    box = 4 * 0.5
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


def synthetic_extrapolation():
    hs = [0.1, 0.05, 0.025, 0.0125]
    return [(h, 1.5 + 0.7 * h - 2.0 * h * h) for h in hs]


if __name__ == "__main__":
    print("Gagliardo hat energies (autocorrelation route | Fourier route)")
    for s in (0.5, 0.6, 0.7, 0.9, 0.95, 0.99, 0.999):
        # alpha = 2s = 1 sits on a removable Gamma pole; nudge off it
        s_f = mp.mpf(s) + (mp.mpf("1e-25") if s == 0.5 else 0)
        print(f"  s={s}: {mp.nstr(hat_gagliardo_autocorrelation(s), 17)} | {mp.nstr(hat_gagliardo_fourier(s_f), 17)}")
    print("Gagliardo 1D energy-weighted tail 2(1-s) delta^(-sp)/(sp), s=0.99 p=2 delta=1:",
          repr(2 * 0.01 / (0.99 * 2)))
    for p in (1.5, 2.0, 3.0):
        for n in (1, 2, 3):
            print(f"K_(p={p},N={n}) = {k_constant(p, n)!r}")
    print("radial bump |grad|^2, N=2:", repr(radial_bump_grad_norm_p(2, 2)), "4pi/3 =", repr(4 * math.pi / 3))
    print("radial bump |grad|^3, N=2:", repr(radial_bump_grad_norm_p(3, 2)))
    lc = linear_cutoff_grad_sq((1.0, 0.5), 1.0)
    print("linear cutoff w=(1,.5) R=1 |grad|^2:", repr(lc))
    print("square sphere form p=2 g=(1,0):", repr(square_sphere_form((1.0, 0.0), 2.0)), "(16/3 expected)")
    print("square sphere form p=2 g=(0.6,0.8):", repr(square_sphere_form((0.6, 0.8), 2.0)))
    print("square sphere form p=3 g=(0.6,0.8):", repr(square_sphere_form((0.6, 0.8), 3.0)))
    print("weighted bump reference anchor (0.5,0):", repr(weighted_bump_reference((0.5, 0.0))))
    print("Heisenberg ball volume closed form pi^2/8 =", repr(math.pi ** 2 / 8))
    print("Heisenberg ball volume MC (1e7):", heisenberg_ball_volume_mc(10_000_000, 20240611), flush=True)
    print("Lip_delta radial bump centre delta=0.1 (max of 2r - r^3 on (0, 0.1]):", repr(2 * 0.1 - 0.1 ** 3))
    print("synthetic extrapolation data:", synthetic_extrapolation())
