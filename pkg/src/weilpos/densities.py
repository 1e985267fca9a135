"""Trace densities and the scalar constants derived from them.

Multiplicative variable rho > 0, additive variable x = log rho.  All
densities are even under rho -> 1/rho; point masses at rho = 1 are kept
out of the sampled arrays and added explicitly in the quadratic forms.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import integrate, optimize
from scipy.linalg import toeplitz

from . import LOG2
from .prolate import ProlateBasis, basis_hash, eval_xi, eval_xi_prime, fourier_image, lambda_bound
from .specfun import gauss_legendre, sine_integral

__all__ = [
    "DensitySamples",
    "delta",
    "delta_oracle",
    "tau_density",
    "delta_hat",
    "delta_hat_tail_error",
    "q_delta_additive",
    "negativity_radius",
    "weighted_negativity_radius",
    "triangle_limit",
    "apply_Q",
    "apply_YY",
    "epsilon",
    "epsilon_tail",
    "epsilon_terms",
    "epsilon_prime_one",
    "q_epsilon",
    "chi_norm",
    "tail_term",
    "tail_bound",
    "quadratic_form_DQ",
    "quadratic_form_EQ",
]

TWO_PI = 2.0 * math.pi
KINDS = ("delta", "delta_hat", "tau", "q_delta_additive", "epsilon", "q_epsilon", "chi_norm")
DEFAULT_MODES = 11
INNER_ORDER = 48


@dataclass(frozen=True)
class DensitySamples:
    grid: np.ndarray
    values: np.ndarray
    kind: str
    truncation_modes: int = 0
    tail_bound: float = 0.0
    quadrature_order: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite density values")
        if self.kind == "delta" and np.any(np.asarray(self.values) <= 0):
            raise ValueError("delta must be positive")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["grid", "value", "tail_bound"])
        for g, v in zip(self.grid, self.values):
            w.writerow([f"{g:.17g}", f"{v:.17g}", f"{self.tail_bound:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = asdict(self)
        doc["grid"] = [float(g) for g in self.grid]
        doc["values"] = [float(v) for v in self.values]
        return json.dumps(doc, indent=1, sort_keys=True)


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# S(u) = Si(u)/u and its first two derivatives
# ---------------------------------------------------------------------------

_SERIES_CUT = 2.0
_NS = 24
_k = np.arange(_NS, dtype=float)
_SC = np.array([(-1.0) ** k / ((2 * k + 1) * math.factorial(2 * int(k) + 1)) for k in _k])


def _si_ratio(u, deriv: int = 0):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < _SERIES_CUT
    if np.any(small):
        us = u[small]
        u2 = us * us
        if deriv == 0:
            c = _SC
            out[small] = np.polynomial.polynomial.polyval(u2, c)
        elif deriv == 1:
            c = _SC[1:] * 2 * _k[1:]  # coefficient of u^{2k-1}
            out[small] = us * np.polynomial.polynomial.polyval(u2, c)
        else:
            c = _SC[1:] * 2 * _k[1:] * (2 * _k[1:] - 1)  # of u^{2k-2}
            out[small] = np.polynomial.polynomial.polyval(u2, c)
    big = ~small
    if np.any(big):
        ub = u[big]
        si = sine_integral(ub)
        s, co = np.sin(ub), np.cos(ub)
        if deriv == 0:
            out[big] = si / ub
        elif deriv == 1:
            out[big] = (s - si) / ub**2
        else:
            out[big] = (co - s / ub) / ub**2 - 2.0 * (s - si) / ub**3
    return out


# ---------------------------------------------------------------------------
# delta, tau, delta_hat
# ---------------------------------------------------------------------------

def delta(rho):
    """Closed form of the trace remainder, symmetric under rho -> 1/rho."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be > 0")
    r = np.where(rho < 1.0, 1.0 / rho, rho)
    out = 2.0 * np.sqrt(r) * (_si_ratio(TWO_PI * (1.0 + r)) + _si_ratio(TWO_PI * (r - 1.0)))
    return _scalar_or_array(out)


def delta_oracle(rho: float) -> float:
    """4 sqrt(rho) int_0^1 cos(2 pi rho t) cos(2 pi t) (-log t) dt by QUADPACK."""
    if not 1.0 <= rho <= 100.0:
        raise ValueError("oracle valid for 1 <= rho <= 100")
    val, err = integrate.quad(lambda t: math.cos(TWO_PI * rho * t) * math.cos(TWO_PI * t),
                              0.0, 1.0, weight="alg-loga", wvar=(0.0, 0.0), limit=400,
                              epsabs=1e-14, epsrel=1e-13)
    if not np.isfinite(val) or err > 1e-9:
        raise RuntimeError(f"oracle quadrature failed at rho={rho} (err {err:.2e})")
    return -4.0 * math.sqrt(rho) * val


def tau_density(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0) or np.any(rho == 1.0):
        raise ValueError("tau density needs rho > 0, rho != 1")
    out = 0.5 * np.sqrt(rho) * (1.0 / (1.0 + rho) + 1.0 / np.abs(1.0 - rho))
    return _scalar_or_array(out)


def delta_hat_tail_error(cutoff: float) -> float:
    """Bound on the part of delta_hat beyond cutoff not captured analytically.

    delta - tau is at most (1+o(1)) rho^{-3/2}/pi^2 in size for large rho;
    2 int_R^inf rho^{-5/2} drho / pi^2 is (4/3) R^{-3/2}/pi^2.  The factor
    1.1 covers the o(1).
    """
    return 1.1 * (4.0 / 3.0) * cutoff ** -1.5 / math.pi**2


def _tau_tail(t, cutoff):
    # int_U^inf 2 cos(t u) sum_k e^{-(1/2+2k)u} du with U = log R
    u = math.log(cutoff)
    out = np.zeros_like(t)
    k = 0
    while True:
        a = 0.5 + 2 * k
        if math.exp(-a * u) < 1e-30:
            break
        out += 2.0 * math.exp(-a * u) * (a * np.cos(t * u) - t * np.sin(t * u)) / (a * a + t * t)
        k += 1
    return out


def delta_hat(t, cutoff: float = 2000.0, quadrature_order: int = 20, panel: float = 0.25):
    """Fourier transform of delta in the multiplicative variable.

    int_1^R delta(rho) 2 cos(t log rho) drho/rho on panels of width `panel`,
    plus the analytic transform of tau beyond R.  Even in t by construction.
    """
    if cutoff < 1e3:
        raise ValueError("cutoff must be >= 1e3 to certify the tail")
    t = np.asarray(t, dtype=float)
    flat = np.abs(t.ravel())
    rule = gauss_legendre(quadrature_order)
    n_pan = int(math.ceil((cutoff - 1.0) / panel))
    edges = np.linspace(1.0, cutoff, n_pan + 1)
    r, w = rule.on(edges[:-1], edges[1:])
    r, w = r.ravel(), w.ravel()
    weight = 2.0 * w * delta(r) / r
    logr = np.log(r)
    out = np.empty_like(flat)
    step = max(1, 40_000_000 // r.size)
    for s in range(0, flat.size, step):
        out[s:s + step] = np.cos(np.outer(flat[s:s + step], logr)) @ weight
    out += _tau_tail(flat, cutoff)
    return _scalar_or_array(out.reshape(t.shape))


# ---------------------------------------------------------------------------
# Q applied to delta in the additive variable
# ---------------------------------------------------------------------------

def _q_delta_raw(x):
    x = np.asarray(x, dtype=float)
    ex = np.exp(x)
    p = TWO_PI * ex
    a = TWO_PI * (1.0 + ex)
    b = TWO_PI * (ex - 1.0)
    d1 = _si_ratio(a, 1) + _si_ratio(b, 1)
    d2 = _si_ratio(a, 2) + _si_ratio(b, 2)
    return -2.0 * np.exp(0.5 * x) * (2.0 * p * d1 + p * p * d2)


def q_delta_additive(x):
    """(-d^2/dx^2 + 1/4) delta(e^x) for x > 0 (smooth part only)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be > 0")
    return _scalar_or_array(_q_delta_raw(x))


def _q_sign_changes(upper: float, n_scan: int = 4000):
    xs = np.linspace(0.0, upper, n_scan + 1)
    vals = _q_delta_raw(xs)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(optimize.brentq(lambda z: float(_q_delta_raw(z)), xs[i], xs[i + 1],
                                     xtol=1e-15))
    return roots


def _abs_integral(breaks, weight_fn=None, order: int = 24):
    rule = gauss_legendre(order)
    breaks = np.asarray(breaks)
    x, w = rule.on(breaks[:-1], breaks[1:])
    vals = np.abs(_q_delta_raw(x))
    if weight_fn is not None:
        vals = vals * weight_fn(x)
    return float(np.sum(w * vals))


def negativity_radius(upper: float = 0.5) -> float:
    """Smallest s with int_0^s |Q delta(e^x)| dx = 1."""
    zeros = _q_sign_changes(upper)

    def mass(s):
        b = [0.0] + [z for z in zeros if z < s] + [s]
        return _abs_integral(b) - 1.0

    return optimize.brentq(mass, 1e-3, upper, xtol=1e-13)


def weighted_negativity_radius(upper: float = 0.5, n_shells: int = 4000) -> float:
    """Radius when |Q delta| on (s/k, s/(k-1)] carries the weight cos(pi/(k+1)).

    The weight comes from the sharp bound on a positive definite function
    supported in [-s, s] at the point x, through k = ceil(s/x).
    """
    zeros = _q_sign_changes(upper)

    def mass(s):
        shells = [s / k for k in range(1, n_shells + 1)]
        b = np.unique(np.array([0.0] + [z for z in zeros if z < s] + shells))
        weight = lambda x: np.cos(math.pi / (np.ceil(s / x) + 1.0))
        return _abs_integral(b, weight) - 1.0

    return optimize.brentq(mass, 1e-3, upper, xtol=1e-13)


def triangle_limit(support: float = LOG2, order: int = 400) -> float:
    """D(Q f) for the tent f(x) = (support - |x|)_+ ."""
    if support <= 0:
        return -0.0
    rule = gauss_legendre(order)
    x, w = rule.on(0.0, support)
    return float(-2.0 * support + 2.0 * np.sum(w * (support - x) * _q_delta_raw(x)))


# ---------------------------------------------------------------------------
# Q and its inverse on compactly supported samples
# ---------------------------------------------------------------------------

def _spectral_wavenumbers(n, step):
    return TWO_PI * np.fft.rfftfreq(n, d=step)


def _check_compact(values, tol_rel=1e-8, width=1):
    scale = max(np.max(np.abs(values)), 1e-300)
    edge = max(np.max(np.abs(values[:width])), np.max(np.abs(values[-width:])))
    if edge > tol_rel * scale:
        raise ValueError("support touches the grid boundary")


def apply_Q(values, step: float, method: str = "spectral"):
    """(-d^2/dx^2 + 1/4) on samples over a uniform grid in x = log rho.

    "spectral" needs the samples to vanish near both ends.  "fd8" uses an
    eighth-order central stencil and leaves the four edge samples at NaN.
    """
    g = np.asarray(values, dtype=float)
    if method == "spectral":
        _check_compact(g)
        k = _spectral_wavenumbers(g.size, step)
        return np.fft.irfft(np.fft.rfft(g) * (k * k + 0.25), n=g.size)
    if method == "fd8":
        c = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
        out = np.full_like(g, np.nan)
        d2 = np.convolve(g, c[::-1], mode="valid") / step**2
        out[4:-4] = -d2 + 0.25 * g[4:-4]
        return out
    raise ValueError(f"unknown method {method!r}")


def _antiderivative(h, step):
    """int_{x_0}^{x} h for compactly supported samples, spectrally accurate."""
    n = h.size
    mean = h.mean()
    k = _spectral_wavenumbers(n, step)
    H = np.fft.rfft(h - mean)
    H[1:] /= 1j * k[1:]
    H[0] = 0.0
    if n % 2 == 0:
        H[-1] = 0.0
    prim = np.fft.irfft(H, n=n)
    prim += mean * step * np.arange(n)
    return prim - prim[0]


def apply_YY(values, step: float, x0: float = 0.0):
    """Compactly supported g with Q g = f, for f vanishing at rho^{+-1/2}.

    k(x) = e^{x/2} int_{-inf}^x e^{-y/2} f(y) dy and
    g(x) = e^{-x/2} int_x^inf e^{y/2} k(y) dy.
    x0 is the abscissa of the first sample.
    """
    f = np.asarray(values, dtype=float)
    _check_compact(f)
    x = x0 + step * np.arange(f.size)
    # centre the exponentials to keep them O(1)
    xc = x - 0.5 * (x[0] + x[-1])
    k = np.exp(0.5 * xc) * _antiderivative(np.exp(-0.5 * xc) * f, step)
    inner = np.exp(0.5 * xc) * k
    acc = _antiderivative(inner, step)
    g = np.exp(-0.5 * xc) * (acc[-1] - acc)
    # rounding leaves a homogeneous solution a e^{x/2} + b e^{-x/2}; pin both ends to 0
    basis_ends = np.array([[np.exp(0.5 * xc[0]), np.exp(-0.5 * xc[0])],
                           [np.exp(0.5 * xc[-1]), np.exp(-0.5 * xc[-1])]])
    a, b = np.linalg.solve(basis_ends, [g[0], g[-1]])
    g = g - a * np.exp(0.5 * xc) - b * np.exp(-0.5 * xc)
    _check_compact(g, tol_rel=1e-6, width=2)
    return g


# ---------------------------------------------------------------------------
# epsilon, Q epsilon
# ---------------------------------------------------------------------------

def _weights(basis: ProlateBasis, n_modes: int):
    if not 1 <= n_modes <= basis.n_max:
        raise ValueError(f"n_modes must be in 1..{basis.n_max}")
    lam = np.asarray(basis.lam[:n_modes])
    return lam, lam / (1.0 - lam * lam)


def _inner_nodes(rho, order):
    rule = gauss_legendre(order)
    lo = 1.0 / rho
    x, w = rule.on(lo, np.ones_like(lo))
    return x, w


def _fold(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be > 0")
    return np.where(rho < 1.0, 1.0 / rho, rho)


def epsilon(rho, basis: ProlateBasis, n_modes: int = DEFAULT_MODES,
            quadrature_order: int = INNER_ORDER, chunk: int = 1024):
    """sum_n lambda/(1-lambda^2) sqrt(rho) int_{1/rho}^1 xi_n(x) eta_n(rho x) dx."""
    r = _fold(rho)
    flat = r.ravel()
    if np.any(flat > 4.0):
        raise ValueError("epsilon is evaluated for 1/4 <= rho <= 4")
    _, coef = _weights(basis, n_modes)
    modes = range(n_modes)
    out = np.empty_like(flat)
    for s in range(0, flat.size, chunk):
        rr = flat[s:s + chunk]
        x, w = _inner_nodes(rr, quadrature_order)
        xi = np.stack([eval_xi(basis, n, x) for n in modes], axis=-1)
        eta, _ = fourier_image(basis, rr[:, None] * x, modes)
        per_mode = np.sqrt(rr)[:, None] * np.einsum("pq,pqn->pn", w, xi * eta)
        out[s:s + chunk] = per_mode @ coef
    return _scalar_or_array(out.reshape(r.shape))


def epsilon_tail(n_modes: int, rho_max: float = 4.0) -> float:
    """Bound on modes >= n_modes in epsilon: |term_n| <= 2 sqrt(rho) b_n/(1 - b_n^2)."""
    total = 0.0
    n = n_modes
    while True:
        b = lambda_bound(n)
        term = 2.0 * math.sqrt(rho_max) * b / (1.0 - b * b)
        total += term
        if term < 1e-40:
            return total
        n += 1


def epsilon_terms(basis: ProlateBasis, n_modes: int | None = None) -> np.ndarray:
    """t(n) = lambda(n)^2 xi_n(1)^2 / (1 - lambda(n)^2)."""
    n_modes = basis.n_max if n_modes is None else n_modes
    lam, coef = _weights(basis, n_modes)
    return lam * coef * np.asarray(basis.xi_at_one[:n_modes]) ** 2


def epsilon_prime_one(basis: ProlateBasis) -> float:
    """Right derivative of epsilon at rho = 1."""
    if basis.n_max < 6:
        raise ValueError("basis needs at least 6 modes")
    return float(math.fsum(epsilon_terms(basis)))


def q_epsilon(rho, basis: ProlateBasis, n_modes: int = DEFAULT_MODES,
              quadrature_order: int = INNER_ORDER, chunk: int = 1024):
    """(value, certified_tail) of (-(rho d/drho)^2 + 1/4) epsilon at rho >= 1.

    Per mode, with eta = lambda xi^an:
      sqrt(rho) int_{1/rho}^1 x xi'(x) rho x eta'(rho x) dx
      + lambda rho^{-3/2} xi'(1/rho) xi(1) - rho^{3/2} xi(1) eta'(rho),
    weighted by lambda/(1-lambda^2).
    """
    r = np.asarray(rho, dtype=float)
    flat = r.ravel()
    if np.any(flat < 1.0) or np.any(flat > 2.0 + 1e-12):
        raise ValueError("q_epsilon is evaluated for 1 <= rho <= 2")
    lam, coef = _weights(basis, n_modes)
    modes = range(n_modes)
    xi1 = np.asarray(basis.xi_at_one[:n_modes])
    out = np.empty_like(flat)
    for s in range(0, flat.size, chunk):
        rr = flat[s:s + chunk]
        x, w = _inner_nodes(rr, quadrature_order)
        dxi = np.stack([eval_xi_prime(basis, n, x) for n in modes], axis=-1)
        _, deta = fourier_image(basis, rr[:, None] * x, modes)
        rx = rr[:, None] * x
        integral = np.sqrt(rr)[:, None] * np.einsum("pq,pqn->pn", w * x * rx, dxi * deta)
        dxi_inv = np.stack([eval_xi_prime(basis, n, 1.0 / rr) for n in modes], axis=-1)
        _, deta_r = fourier_image(basis, rr, modes)
        boundary = (rr ** -1.5)[:, None] * dxi_inv * (xi1 * lam) - (rr ** 1.5)[:, None] * xi1 * deta_r
        out[s:s + chunk] = (integral + boundary) @ coef
    # exact zero at rho = 1: empty integral, cancelling boundary terms
    out[flat == 1.0] = 0.0
    return _scalar_or_array(out.reshape(r.shape)), tail_bound(n_modes - 1)


def chi_norm(x, basis: ProlateBasis, eps_prime: float | None = None, **kw):
    """Q epsilon(e^|x|) / (2 eps'(1+)) for |x| <= log 2."""
    x = np.abs(np.asarray(x, dtype=float))
    if eps_prime is None:
        eps_prime = epsilon_prime_one(basis)
    val, _ = q_epsilon(np.exp(x), basis, **kw)
    return val / (2.0 * eps_prime)


# ---------------------------------------------------------------------------
# Certified remainder for the prolate sums
# ---------------------------------------------------------------------------

def _p_poly(n):
    pi = math.pi
    return (16 * n * n + 8 * (1 + 3 * pi) * n + (4 + math.sqrt(2.0)) * math.sqrt(4 * n + 1)
            + 32 * pi * pi + 24 * pi + 2)


def tail_term(n: int) -> float:
    """2^{2n+2} pi^{2n+3/2} p(n) ((2n)!)^2 / ((4n)! Gamma(2n+3/2))."""
    lg = math.lgamma
    log_t = ((2 * n + 2) * math.log(2.0) + (2 * n + 1.5) * math.log(math.pi)
             + math.log(_p_poly(n)) + 2 * lg(2 * n + 1) - lg(4 * n + 1) - lg(2 * n + 1.5))
    return math.exp(log_t)


def tail_bound(N: int) -> float:
    """sum_{n > N} tail_term(n), closed by a geometric series once terms are tiny."""
    if N < 3:
        raise ValueError("N must be >= 3")
    total = 0.0
    n = N + 1
    prev = tail_term(n)
    while True:
        total += prev
        nxt = tail_term(n + 1)
        if nxt < 1e-40:
            ratio = nxt / prev
            if ratio < 1.0:
                return total + nxt / (1.0 - ratio)
        prev = nxt
        n += 1


# ---------------------------------------------------------------------------
# Quadratic forms on the symmetric interval
# ---------------------------------------------------------------------------

def _trap_weights(n, step):
    w = np.full(n, step)
    w[0] = w[-1] = 0.5 * step
    return w


def _check_support(x, xi, half=0.5 * LOG2):
    outside = np.abs(x) > half + 1e-12
    if np.any(outside & (np.asarray(xi) != 0)):
        raise ValueError("xi must be supported in [-log2/2, log2/2]")


def _form(xi, step, kernel_at_lags, atom, x0):
    xi = np.asarray(xi, dtype=float)
    n = xi.size
    x = x0 + step * np.arange(n)
    _check_support(x, xi)
    w = _trap_weights(n, step)
    K = toeplitz(kernel_at_lags(step * np.arange(n)))
    wx = w * xi
    return float(-atom * np.dot(wx, xi) + wx @ K @ wx)


def quadratic_form_DQ(xi, step: float, x0: float | None = None) -> float:
    """-2 |xi|^2 + double integral of xi(x) xi(y) Q delta(e^{|x-y|})."""
    xi = np.asarray(xi, dtype=float)
    x0 = -0.5 * step * (xi.size - 1) if x0 is None else x0
    return _form(xi, step, _q_delta_raw, 2.0, x0)


def quadratic_form_EQ(xi, step: float, basis: ProlateBasis, x0: float | None = None) -> float:
    """-2 eps'(1+) |xi|^2 + double integral of xi(x) xi(y) Q epsilon(e^{|x-y|})."""
    xi = np.asarray(xi, dtype=float)
    x0 = -0.5 * step * (xi.size - 1) if x0 is None else x0
    kern = lambda v: q_epsilon(np.exp(v), basis)[0]
    return _form(xi, step, kern, 2.0 * epsilon_prime_one(basis), x0)


def samples(kind: str, grid, values, basis: ProlateBasis | None = None, **meta) -> DensitySamples:
    prov = {"basis_hash": basis_hash(basis)} if basis is not None else {}
    return DensitySamples(np.asarray(grid, float), np.asarray(values, float), kind,
                          provenance=prov, **meta)
