"""Independent reference values frozen into the test-suite.

Nothing here imports optlab.  Values are printed with 17 significant digits.

* Black-Scholes: discounted payoff integrated against the lognormal density
  with mpmath at 30 digits.
* Standard normal CDF: density integrated with mpmath.
* Heston characteristic function: the original 1993 formulation (not the
  rearranged one used by the library) in 40-digit arithmetic.
* Heston call: P1 and P2 integrated with mpmath over [0, inf) using the
  Albrecher et al. (2007) rearrangement written out independently here.  The
  original formulation is not used for the prices because its complex log
  crosses the principal branch for long maturities (at T = 2 it gives a deep
  in-the-money price below the no-arbitrage floor).
* Heston call Monte Carlo: 10**6 paths, Euler scheme with full truncation of
  the variance, 250 steps per year, antithetic-free, fixed seed.

Run: ``python3 scripts/compute_oracles.py`` (the Monte Carlo part takes about
a minute).
"""
import sys

import mpmath as mp
import numpy as np

mp.mp.dps = 40
PARAMS = dict(v0=0.04, kappa=2.0, theta=0.04, sigma_v=0.5, rho=-0.7)


def bs_lognormal(S, K, r, T, sigma):
    S, K, r, T, sigma = (mp.mpf(v) for v in (S, K, r, T, sigma))
    mu = mp.log(S) + (r - sigma**2 / 2) * T
    sd = sigma * mp.sqrt(T)
    dens = lambda s: mp.exp(-((mp.log(s) - mu) ** 2) / (2 * sd**2)) / (s * sd * mp.sqrt(2 * mp.pi))
    val = mp.quad(lambda s: (s - K) * dens(s), [K, S, 2 * S, 10 * S, mp.inf])
    return mp.exp(-r * T) * val


def norm_cdf(x):
    return mp.quad(lambda t: mp.exp(-t * t / 2), [-mp.inf, x]) / mp.sqrt(2 * mp.pi)


def heston_cf_original(phi, S, r, T, j, v0, kappa, theta, sigma_v, rho):
    """Heston (1993) f_j(phi) with lambda = 0."""
    phi = mp.mpc(phi)
    i = mp.mpc(0, 1)
    u = mp.mpf(0.5) if j == 1 else mp.mpf(-0.5)
    b = kappa - rho * sigma_v if j == 1 else mp.mpf(kappa)
    a = kappa * theta
    x = mp.log(S)
    d = mp.sqrt((rho * sigma_v * phi * i - b) ** 2 - sigma_v**2 * (2 * u * phi * i - phi**2))
    g = (b - rho * sigma_v * phi * i + d) / (b - rho * sigma_v * phi * i - d)
    C = r * phi * i * T + a / sigma_v**2 * (
        (b - rho * sigma_v * phi * i + d) * T - 2 * mp.log((1 - g * mp.exp(d * T)) / (1 - g)))
    D = (b - rho * sigma_v * phi * i + d) / sigma_v**2 * (1 - mp.exp(d * T)) / (1 - g * mp.exp(d * T))
    return mp.exp(C + D * v0 + i * phi * x)


def heston_cf_trap(phi, S, r, T, j, v0, kappa, theta, sigma_v, rho):
    """Same f_j with d -> -d, which keeps the log argument off the branch cut."""
    phi = mp.mpc(phi)
    i = mp.mpc(0, 1)
    u = mp.mpf(0.5) if j == 1 else mp.mpf(-0.5)
    b = kappa - rho * sigma_v if j == 1 else mp.mpf(kappa)
    a = kappa * theta
    d = mp.sqrt((rho * sigma_v * phi * i - b) ** 2 - sigma_v**2 * (2 * u * phi * i - phi**2))
    bm = b - rho * sigma_v * phi * i
    c = (bm - d) / (bm + d)
    e = mp.exp(-d * T)
    C = r * phi * i * T + a / sigma_v**2 * ((bm - d) * T - 2 * mp.log((1 - c * e) / (1 - c)))
    D = (bm - d) / sigma_v**2 * (1 - e) / (1 - c * e)
    return mp.exp(C + D * v0 + i * phi * mp.log(S))


def heston_call_quad(S, K, r, T, p):
    lnK = mp.log(K)
    probs = []
    for j in (1, 2):
        f = lambda phi: mp.re(mp.exp(-1j * phi * lnK) * heston_cf_trap(phi, S, r, T, j, **p) / (1j * phi))
        probs.append(mp.mpf(0.5) + mp.quad(f, [0, 5, 20, 60, 200, mp.inf]) / mp.pi)
    return S * probs[0] - K * mp.exp(-r * T) * probs[1]


def heston_call_mc(S, K, r, T, p, n_paths=10**6, steps_per_year=250, seed=12345, chunk=200_000):
    rng = np.random.default_rng(seed)
    n_steps = int(round(steps_per_year * T))
    dt = T / n_steps
    payoffs = []
    rho = p["rho"]
    for start in range(0, n_paths, chunk):
        m = min(chunk, n_paths - start)
        x = np.full(m, np.log(S))
        v = np.full(m, p["v0"])
        for _ in range(n_steps):
            z1 = rng.standard_normal(m)
            z2 = rho * z1 + np.sqrt(1 - rho * rho) * rng.standard_normal(m)
            vp = np.maximum(v, 0.0)
            x += (r - 0.5 * vp) * dt + np.sqrt(vp * dt) * z1
            v += p["kappa"] * (p["theta"] - vp) * dt + p["sigma_v"] * np.sqrt(vp * dt) * z2
        payoffs.append(np.maximum(np.exp(x) - K, 0.0))
    pay = np.exp(-r * T) * np.concatenate(payoffs)
    return pay.mean(), pay.std(ddof=1) / np.sqrt(n_paths)


def show(label, value):
    print(f"{label} = {mp.nstr(value, 17)}")


if __name__ == "__main__":
    show("bs_call(100,100,0.05,1,0.2)", bs_lognormal(100, 100, 0.05, 1, 0.2))
    show("bs_call(55,60,0.03,0.5,0.35)", bs_lognormal(55, 60, 0.03, 0.5, 0.35))
    show("norm_cdf(-1.959964)", norm_cdf(mp.mpf("-1.959964")))
    for j in (1, 2):
        z = heston_cf_original(1, 100, 0.05, 1, j, **PARAMS)
        assert abs(z - heston_cf_trap(1, 100, 0.05, 1, j, **PARAMS)) < mp.mpf(10) ** -30
        show(f"heston_cf_j{j}(u=1).real", mp.re(z))
        show(f"heston_cf_j{j}(u=1).imag", mp.im(z))
    show("heston_call(100,100,0.05,1) quad", heston_call_quad(100, 100, 0.05, 1, PARAMS))
    show("heston_call(60,20,0.05,2) quad", heston_call_quad(60, 20, 0.05, 2, PARAMS))
    show("heston_call(55,70,0.02,0.5) quad", heston_call_quad(55, 70, 0.02, 0.5, PARAMS))
    if "--no-mc" not in sys.argv:
        mean, se = heston_call_mc(100.0, 100.0, 0.05, 1.0, PARAMS)
        print(f"heston_call(100,100,0.05,1) mc = {mean:.17g} se = {se:.17g}")
