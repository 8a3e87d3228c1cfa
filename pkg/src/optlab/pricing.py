"""European call pricing: Black-Scholes closed form and Heston quadrature.

Scalar entry points (``bs_call``, ``heston_call``...) take a
:class:`PricingInputs` record and price one contract.  The ``*_array``
variants price whole columns at once and are what dataset generation uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .exceptions import InvalidArgumentError, NumericalError

__all__ = [
    "PricingInputs",
    "HestonParams",
    "QuadratureConfig",
    "PAPER_HESTON",
    "norm_cdf",
    "bs_call",
    "bs_put",
    "bs_call_array",
    "heston_char_fn",
    "heston_call",
    "heston_put",
    "heston_call_array",
    "heston_probabilities",
]

_SQRT2 = math.sqrt(2.0)


def _finite(name, value):
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True, slots=True)
class PricingInputs:
    """One European call scenario.

    Attributes
    ----------
    S : float
        Spot price, > 0.
    K : float
        Strike, > 0.
    r : float
        Continuously compounded risk-free rate, >= 0.
    T : float
        Time to maturity in years, >= 0.
    sigma : float
        Annualised Black-Scholes volatility, >= 0.  Ignored by the Heston pricer.
    """

    S: float
    K: float
    r: float
    T: float
    sigma: float

    def __post_init__(self):
        for name in ("S", "K", "r", "T", "sigma"):
            _finite(name, getattr(self, name))
        if self.S <= 0 or self.K <= 0:
            raise InvalidArgumentError(f"S and K must be positive, got S={self.S}, K={self.K}")
        if self.T < 0 or self.sigma < 0:
            raise InvalidArgumentError(f"T and sigma must be non-negative, got T={self.T}, sigma={self.sigma}")
        if self.r < 0:
            raise InvalidArgumentError(f"r must be non-negative, got {self.r}")


@dataclass(frozen=True)
class HestonParams:
    """Heston stochastic-volatility parameters (defaults: the fixed literature set)."""

    v0: float = 0.04
    kappa: float = 2.0
    theta: float = 0.04
    sigma_v: float = 0.5
    rho: float = -0.7

    def __post_init__(self):
        for name in ("v0", "kappa", "theta", "sigma_v", "rho"):
            _finite(name, getattr(self, name))
        if self.kappa <= 0:
            raise InvalidArgumentError(f"kappa must be positive, got {self.kappa}")
        if min(self.v0, self.theta, self.sigma_v) < 0:
            raise InvalidArgumentError("v0, theta and sigma_v must be non-negative")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidArgumentError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.v0 == 0 and self.sigma_v > 0:
            # the little-trap arrangement degenerates when v0 = 0 and sigma_v > 0
            raise InvalidArgumentError("v0 = 0 with sigma_v > 0 is not supported")


PAPER_HESTON = HestonParams()


@dataclass(frozen=True)
class QuadratureConfig:
    """Integration settings for the Heston probabilities.

    The integral over ``[0, truncation_bound]`` is evaluated with
    ``node_count`` nodes and again with twice as many.  If the two prices
    differ by more than ``tolerance`` the node count keeps doubling until
    ``max_nodes`` is reached, after which a :class:`NumericalError` is raised.

    ``scheme`` is ``"gauss-legendre"`` (one rule on the whole interval) or
    ``"composite"`` (16-point panels; doubling halves the panel width).
    """

    node_count: int = 128
    truncation_bound: float = 200.0
    scheme: str = "gauss-legendre"
    tolerance: float = 1e-8
    max_nodes: int = 2048

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise InvalidArgumentError(f"node_count must be an integer >= 16, got {self.node_count}")
        if not self.truncation_bound > 0:
            raise InvalidArgumentError("truncation_bound must be positive")
        if self.scheme not in ("gauss-legendre", "composite"):
            raise InvalidArgumentError(f"unknown quadrature scheme {self.scheme!r}")
        if self.scheme == "composite" and self.node_count % 16:
            raise InvalidArgumentError("composite scheme needs node_count divisible by 16")
        if not self.tolerance > 0:
            raise InvalidArgumentError("tolerance must be positive")
        if self.max_nodes < 2 * self.node_count:
            raise InvalidArgumentError("max_nodes must allow at least one doubling")


DEFAULT_QUADRATURE = QuadratureConfig()
_MAX_TAIL_PANELS = 16


# ---------------------------------------------------------------------------
# Black-Scholes


def norm_cdf(x: float) -> float:
    """Standard normal CDF."""
    x = float(x)
    if not math.isfinite(x):
        raise InvalidArgumentError(f"norm_cdf needs a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def _phi(x):
    # norm_cdf without the finiteness check; d1/d2 may overflow to +-inf
    return 0.5 * math.erfc(-x / _SQRT2)


def _bs_d1_d2(S, K, r, T, sigma):
    """``(d1, d2)``, or None when ``sigma * sqrt(T)`` underflows to zero."""
    vol = sigma * math.sqrt(T)
    if vol == 0.0:
        return None
    d1 = (math.log(S / K) + (r + 0.5 * sigma * sigma) * T) / vol
    return d1, d1 - vol


def bs_call(inputs: PricingInputs) -> float:
    """Black-Scholes price of a European call.

    ``T == 0`` returns the payoff ``max(S - K, 0)`` and ``sigma == 0``
    returns the discounted intrinsic value ``max(S - K e^{-rT}, 0)``.
    """
    S, K, r, T, sigma = inputs.S, inputs.K, inputs.r, inputs.T, inputs.sigma
    if T == 0:
        return max(S - K, 0.0)
    disc = K * math.exp(-r * T)
    d = _bs_d1_d2(S, K, r, T, sigma)
    if d is None:
        return max(S - disc, 0.0)
    return S * _phi(d[0]) - disc * _phi(d[1])


def bs_put(inputs: PricingInputs) -> float:
    """Black-Scholes European put, from its own closed form (not via parity)."""
    S, K, r, T, sigma = inputs.S, inputs.K, inputs.r, inputs.T, inputs.sigma
    if T == 0:
        return max(K - S, 0.0)
    disc = K * math.exp(-r * T)
    d = _bs_d1_d2(S, K, r, T, sigma)
    if d is None:
        return max(disc - S, 0.0)
    return disc * _phi(-d[1]) - S * _phi(-d[0])


def _check_columns(S, K, r, T, sigma=None):
    cols = [np.atleast_1d(np.asarray(c, dtype=np.float64)) for c in (S, K, r, T)]
    if sigma is not None:
        cols.append(np.atleast_1d(np.asarray(sigma, dtype=np.float64)))
    cols = np.broadcast_arrays(*cols)
    for name, c in zip("SKrTs", cols):
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError(f"non-finite values in column {name}")
    S, K, r, T = cols[:4]
    if np.any(S <= 0) or np.any(K <= 0):
        raise InvalidArgumentError("S and K must be positive")
    if np.any(T < 0) or np.any(r < 0):
        raise InvalidArgumentError("T and r must be non-negative")
    if sigma is not None and np.any(cols[4] < 0):
        raise InvalidArgumentError("sigma must be non-negative")
    return cols


def bs_call_array(S, K, r, T, sigma) -> np.ndarray:
    """Vectorised :func:`bs_call` over broadcastable columns."""
    S, K, r, T, sigma = _check_columns(S, K, r, T, sigma)
    disc = K * np.exp(-r * T)
    out = np.maximum(S - disc, 0.0)
    live = sigma * np.sqrt(T) > 0
    expired = T == 0
    out[expired] = np.maximum(S[expired] - K[expired], 0.0)
    if np.any(live):
        s, k, rr, t, v = S[live], K[live], r[live], T[live], sigma[live]
        vol = v * np.sqrt(t)
        d1 = (np.log(s / k) + (rr + 0.5 * v * v) * t) / vol
        out[live] = s * ndtr(d1) - disc[live] * ndtr(d1 - vol)
    return out


# ---------------------------------------------------------------------------
# Heston


def _log_cf(u, x0, r, T, p: HestonParams, j: int):
    """log of the Heston characteristic function phi_j, little-trap form.

    ``u`` is complex and broadcasts against the row columns ``x0`` (= ln S),
    ``r`` and ``T``.
    """
    iu = 1j * u
    uj = 0.5 if j == 1 else -0.5
    b = p.kappa - p.rho * p.sigma_v if j == 1 else p.kappa
    sv2 = p.sigma_v * p.sigma_v
    q = 2.0 * uj * iu - u * u
    beta = b - p.rho * p.sigma_v * iu
    d = np.sqrt(beta * beta - sv2 * q)
    e = np.exp(-d * T)
    # (beta - d) / sigma_v^2 rewritten so it stays finite as sigma_v -> 0
    ratio = q / (beta + d)
    if p.sigma_v > 0:
        g = (beta - d) / (beta + d)
        log_term = np.log((1.0 - g * e) / (1.0 - g)) / sv2
    else:
        log_term = ratio / (beta + d) * (1.0 - e)
    C = r * iu * T + p.kappa * p.theta * (ratio * T - 2.0 * log_term)
    D = ratio * (1.0 - e) / (1.0 - (beta - d) / (beta + d) * e)
    return C + D * p.v0 + iu * x0


def heston_char_fn(u, inputs: PricingInputs, params: HestonParams = PAPER_HESTON, j: int = 2):
    """Characteristic function phi_j(u) of ln S_T under the Heston model.

    ``j = 2`` is the risk-neutral measure, ``j = 1`` the share measure.
    ``u`` may be a complex scalar or array.
    """
    if j not in (1, 2):
        raise InvalidArgumentError(f"j must be 1 or 2, got {j}")
    if not inputs.T > 0:
        raise InvalidArgumentError(f"the characteristic function needs T > 0, got T={inputs.T}")
    u = np.asarray(u, dtype=np.complex128)
    out = np.exp(_log_cf(u, math.log(inputs.S), inputs.r, inputs.T, params, j))
    return complex(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _rule(scheme: str, n: int, upper: float):
    if scheme == "gauss-legendre":
        x, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * upper * (x + 1.0), 0.5 * upper * w
    x16, w16 = np.polynomial.legendre.leggauss(16)
    panels = n // 16
    h = upper / panels
    left = np.arange(panels)[:, None] * h
    x = (left + 0.5 * h * (x16 + 1.0)).ravel()
    w = np.tile(0.5 * h * w16, panels)
    return x, w


def _probabilities(x0, lnK, r, T, p, nodes, weights):
    """P1, P2 for row columns (shape (n, 1)) using the given rule."""
    u = nodes[None, :]
    out = []
    for j in (1, 2):
        integrand = np.exp(_log_cf(u, x0, r, T, p, j) - 1j * u * lnK) / (1j * u)
        out.append(0.5 + (integrand.real @ weights) / math.pi)
    return out


def _call_from_probs(S, K, r, T, P1, P2):
    P1 = np.clip(P1, 0.0, 1.0)
    P2 = np.clip(P2, 0.0, 1.0)
    disc = K * np.exp(-r * T)
    price = S * P1 - disc * P2
    # clip residual quadrature noise into the no-arbitrage band
    return np.clip(price, np.maximum(S - disc, 0.0), S)


@lru_cache(maxsize=64)
def _panel(scheme: str, n: int, lower: float, width: float):
    x, w = _rule(scheme, n, width)
    return lower + x, w


def _converged(rows, quad: QuadratureConfig, evaluate):
    """Run ``evaluate(nodes, weights)`` until the result is stable.

    The node count on ``[0, U]`` doubles until two successive prices agree
    within the tolerance.  The truncation is then checked by appending a
    panel ``[U, 2U]`` at the same node density; while a new panel moves any
    price by more than the tolerance (very short maturities decay slowly in
    ``u``) further panels of width ``U`` are appended.
    """
    upper = float(quad.truncation_bound)
    n = quad.node_count
    prev = evaluate(*_rule(quad.scheme, n, upper))
    while True:
        n *= 2
        nodes, weights = _rule(quad.scheme, n, upper)
        cur = evaluate(nodes, weights)
        diff = np.abs(cur - prev)
        if np.all(diff <= quad.tolerance):
            break
        if 2 * n > quad.max_nodes:
            worst = int(np.argmax(diff))
            raise NumericalError(
                "Heston quadrature did not converge",
                row=int(rows[worst]),
                previous=float(prev[worst]),
                last=float(cur[worst]),
                nodes=n,
                truncation_bound=upper,
            )
        prev = cur

    for k in range(1, _MAX_TAIL_PANELS + 1):
        px, pw = _panel(quad.scheme, n, k * upper, upper)
        nodes, weights = np.concatenate([nodes, px]), np.concatenate([weights, pw])
        extended = evaluate(nodes, weights)
        tail = np.abs(extended - cur)
        if np.all(tail <= quad.tolerance):
            return cur
        cur = extended
    worst = int(np.argmax(tail))
    raise NumericalError(
        "Heston integrand not negligible beyond the truncation bound",
        row=int(rows[worst]),
        tail=float(tail[worst]),
        truncation_bound=(_MAX_TAIL_PANELS + 1) * upper,
    )


def heston_probabilities(inputs: PricingInputs, params=PAPER_HESTON, quad=DEFAULT_QUADRATURE, node_count=None):
    """Return the two risk-neutral probabilities (P1, P2) at a fixed node count."""
    if not inputs.T > 0:
        raise InvalidArgumentError("Heston probabilities need T > 0")
    n = node_count or quad.node_count
    nodes, weights = _rule(quad.scheme, n, quad.truncation_bound)
    P1, P2 = _probabilities(
        math.log(inputs.S), math.log(inputs.K), inputs.r, inputs.T, params, nodes, weights
    )
    return float(np.ravel(P1)[0]), float(np.ravel(P2)[0])


def heston_call_array(S, K, r, T, params: HestonParams = PAPER_HESTON,
                      quad: QuadratureConfig = DEFAULT_QUADRATURE, chunk: int = 2048) -> np.ndarray:
    """Vectorised Heston call prices.  Rows with ``T == 0`` get the payoff."""
    S, K, r, T = _check_columns(S, K, r, T)
    S, K, r, T = (np.ascontiguousarray(c.ravel()) for c in (S, K, r, T))
    out = np.maximum(S - K, 0.0)
    live = np.flatnonzero(T > 0)
    for start in range(0, live.size, chunk):
        rows = live[start:start + chunk]
        s, k, rr, t = (c[rows][:, None] for c in (S, K, r, T))
        x0, lnK = np.log(s), np.log(k)

        def evaluate(nodes, weights):
            P1, P2 = _probabilities(x0, lnK, rr, t, params, nodes, weights)
            return _call_from_probs(s[:, 0], k[:, 0], rr[:, 0], t[:, 0], P1, P2)

        out[rows] = _converged(rows, quad, evaluate)
    return out


def heston_call(inputs: PricingInputs, params: HestonParams = PAPER_HESTON,
                quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Heston European call ``S P1 - K e^{-rT} P2``; ``T == 0`` returns the payoff."""
    if inputs.T == 0:
        return max(inputs.S - inputs.K, 0.0)
    x0, lnK = math.log(inputs.S), math.log(inputs.K)
    S, K, r, T = inputs.S, inputs.K, inputs.r, inputs.T

    def evaluate(nodes, weights):
        P1, P2 = _probabilities(x0, lnK, r, T, params, nodes, weights)
        return _call_from_probs(S, K, r, T, P1, P2)

    return float(np.ravel(_converged(np.zeros(1, dtype=int), quad, evaluate))[0])


def heston_put(inputs: PricingInputs, params: HestonParams = PAPER_HESTON,
               quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Heston European put from a single-integral representation.

    Uses the risk-neutral characteristic function on the shifted contour
    ``u - i/2``::

        P = K e^{-rT} - sqrt(S K) e^{-rT/2} / pi
              * int_0^inf Re[e^{i u k} phi_X(u - i/2)] / (u^2 + 1/4) du

    with ``k = ln(S/K) + rT`` and ``X = ln(S_T / S) - rT``.  None of the
    integrands behind :func:`heston_call` are reused, so put-call parity
    between the two is a genuine cross-check of the quadrature.
    """
    S, K, r, T = inputs.S, inputs.K, inputs.r, inputs.T
    if T == 0:
        return max(K - S, 0.0)
    x0 = math.log(S)
    k = math.log(S / K) + r * T
    scale = math.sqrt(S * K) * math.exp(-0.5 * r * T) / math.pi
    disc = K * math.exp(-r * T)

    def evaluate(nodes, weights):
        z = nodes - 0.5j
        log_phi_x = _log_cf(z, x0, r, T, params, 2) - 1j * z * (x0 + r * T)
        integrand = (np.exp(1j * nodes * k + log_phi_x)).real / (nodes * nodes + 0.25)
        put = disc - scale * (integrand @ weights)
        return np.atleast_1d(np.clip(put, max(disc - S, 0.0), disc))

    return float(_converged(np.zeros(1, dtype=int), quad, evaluate)[0])
