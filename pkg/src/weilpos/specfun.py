"""Scalar special functions and Gauss-Legendre rules.

Everything here is vectorized over numpy arrays where that is cheap, pure,
and free of hidden state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as _leg

__all__ = [
    "QuadratureRule",
    "ThetaValue",
    "gauss_legendre",
    "sine_integral",
    "trigamma",
    "digamma_complex",
    "loggamma_complex",
    "riemann_siegel_theta",
    "theta_prime",
]

# Bernoulli numbers B_2 .. B_18
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6,
              -3617 / 510, 43867 / 798)

SI_SWITCH = 50.0
_SI_PANEL_NODES = 20


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def on(self, a, b):
        """Nodes and weights mapped to [a, b]; a and b may be arrays."""
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights


@dataclass(frozen=True)
class ThetaValue:
    t: float
    theta: float
    theta_prime: float


def gauss_legendre(order: int) -> QuadratureRule:
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 10_000:
        raise ValueError(f"order must be an integer in [1, 10000], got {order!r}")
    x, w = _leg.leggauss(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(nodes=x, weights=w, order=int(order))


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite argument")


# ---------------------------------------------------------------------------
# Sine integral
# ---------------------------------------------------------------------------

def _si_panels(ax):
    """Si on [0, SI_SWITCH] by composite Gauss-Legendre on unit panels."""
    g, w = _leg.leggauss(_SI_PANEL_NODES)
    knots = np.arange(0.0, SI_SWITCH + 1.0)
    t = 0.5 * (knots[:-1, None] + knots[1:, None]) + 0.5 * g
    panel = 0.5 * np.sum(w * np.sinc(t / np.pi), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(panel)))
    k = np.minimum(np.floor(ax), SI_SWITCH - 1).astype(int)
    lo = knots[k]
    half = 0.5 * (ax - lo)
    tt = lo[:, None] + half[:, None] * (g + 1.0)
    part = half * np.sum(w * np.sinc(tt / np.pi), axis=1)
    return cum[k] + part


def _si_asymptotic(ax):
    """Si = pi/2 - f cos x - g sin x with the auxiliary asymptotic series."""
    inv2 = 1.0 / (ax * ax)
    f = np.ones_like(ax)
    g = np.ones_like(ax)
    tf = np.ones_like(ax)
    tg = np.ones_like(ax)
    for k in range(1, 40):
        tf = -tf * (2 * k - 1) * (2 * k) * inv2
        tg = -tg * (2 * k) * (2 * k + 1) * inv2
        f += tf
        g += tg
        if np.max(np.abs(tf)) < 1e-18 and np.max(np.abs(tg)) < 1e-18:
            break
    f /= ax
    g *= inv2
    return 0.5 * np.pi - f * np.cos(ax) - g * np.sin(ax)


def sine_integral(x):
    """Si(x) = int_0^x sin(t)/t dt for scalar or array x."""
    arr = np.asarray(x, dtype=float)
    _check_finite(arr)
    flat = arr.ravel()
    ax = np.abs(flat)
    out = np.empty_like(ax)
    small = ax <= SI_SWITCH
    if np.any(small):
        out[small] = _si_panels(ax[small])
    if np.any(~small):
        out[~small] = _si_asymptotic(ax[~small])
    out = np.copysign(out, flat).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Polygamma
# ---------------------------------------------------------------------------

TRIGAMMA_SWITCH = 12.0


def trigamma(x):
    """psi'(x) for x > 0: upward recurrence, then the asymptotic series."""
    arr = np.asarray(x, dtype=float)
    _check_finite(arr)
    if np.any(arr <= 0):
        raise ValueError("trigamma requires x > 0")
    z = arr.copy()
    acc = np.zeros_like(z)
    while True:
        low = z < TRIGAMMA_SWITCH
        if not np.any(low):
            break
        acc = acc + np.where(low, 1.0 / (z * z), 0.0)
        z = np.where(low, z + 1.0, z)
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    p = inv * inv2
    for b in _BERNOULLI[:8]:
        series += b * p
        p = p * inv2
    out = acc + inv + 0.5 * inv2 + series
    return float(out) if out.ndim == 0 else out


def _shift_count(z):
    need = np.ceil(np.maximum(0.0, 15.0 - np.abs(z))).astype(int)
    return need


def loggamma_complex(z):
    """Principal log Gamma for Re z > 0 (Stirling after recurrence shifts)."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= 0):
        raise ValueError("loggamma_complex requires Re z > 0")
    n = _shift_count(z)
    acc = np.zeros_like(z)
    w = z.copy()
    for k in range(int(n.max(initial=0))):
        active = n > k
        acc = acc - np.where(active, np.log(np.where(active, w, 1.0)), 0.0)
        w = np.where(active, w + 1.0, w)
    inv = 1.0 / w
    inv2 = inv * inv
    s = np.zeros_like(w)
    p = inv
    for j, b in enumerate(_BERNOULLI, start=1):
        s += b / (2 * j * (2 * j - 1)) * p
        p = p * inv2
    out = (w - 0.5) * np.log(w) - w + 0.5 * math.log(2 * math.pi) + s + acc
    return out


def digamma_complex(z):
    """psi(z) for Re z > 0."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= 0):
        raise ValueError("digamma_complex requires Re z > 0")
    n = _shift_count(z)
    acc = np.zeros_like(z)
    w = z.copy()
    for k in range(int(n.max(initial=0))):
        active = n > k
        acc = acc - np.where(active, 1.0 / w, 0.0)
        w = np.where(active, w + 1.0, w)
    inv = 1.0 / w
    inv2 = inv * inv
    s = np.zeros_like(w)
    p = inv2
    for j, b in enumerate(_BERNOULLI, start=1):
        s += b / (2 * j) * p
        p = p * inv2
    return np.log(w) - 0.5 * inv - s + acc


_LOG_PI = math.log(math.pi)


def theta_prime(t):
    """theta'(t) = (-log pi + Re psi(1/4 + i t/2)) / 2, vectorized."""
    arr = np.asarray(t, dtype=float)
    _check_finite(arr)
    out = 0.5 * (-_LOG_PI + digamma_complex(0.25 + 0.5j * arr).real)
    return float(out) if out.ndim == 0 else out


def riemann_siegel_theta(t: float) -> ThetaValue:
    t = float(t)
    _check_finite(t)
    if t == 0.0:
        theta = 0.0
    else:
        # theta is odd; evaluate at |t| so the sign symmetry is exact
        a = abs(t)
        theta = -0.5 * a * _LOG_PI + float(loggamma_complex(0.25 + 0.5j * a).imag)
        if t < 0:
            theta = -theta
    return ThetaValue(t=t, theta=theta, theta_prime=theta_prime(abs(t)))
