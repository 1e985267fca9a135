"""Even prolate spheroidal functions at bandwidth 2*pi.

The operator W = -d/dx (1 - x^2) d/dx + (2 pi x)^2 is tridiagonal in the
normalized even Legendre basis sqrt(k + 1/2) P_k, k = 0, 2, 4, ...  Each
eigenvector gives xi_n on [0, 1], normalized by int_0^1 xi_n^2 = 1 and
signed so that xi_n(1) > 0.  lambda(n) is the eigenvalue of the truncated
Fourier transform, 2 int_0^1 cos(2 pi x y) xi_n(y) dy = lambda(n) xi_n(x).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as _leg
from scipy.linalg import eigh_tridiagonal

from .specfun import gauss_legendre

__all__ = [
    "BANDWIDTH",
    "ProlateBasis",
    "build_basis",
    "eval_xi",
    "eval_xi_prime",
    "eval_xi_an",
    "fourier_image",
    "lambda_bound",
    "basis_to_json",
    "basis_from_json",
    "save_basis_binary",
    "load_basis_binary",
    "basis_hash",
]

BANDWIDTH = 2.0 * math.pi
FORMAT_VERSION = 1
# Gauss-Legendre order on [0, 1] for the cosine/sine transforms; resolves
# cos(2 pi x y) xi_n(y) to machine precision for x <= 4 and n < 16.
TRANSFORM_ORDER = 128
LAMBDA_FLOOR = 1e-300


@dataclass(frozen=True)
class ProlateBasis:
    bandwidth: float
    n_max: int
    legendre_order: int
    coefficients: np.ndarray  # (n_max, n_even) over sqrt(k+1/2) P_k, k even
    chi: np.ndarray
    lam: np.ndarray
    xi_at_one: np.ndarray

    @property
    def n_even(self) -> int:
        return self.coefficients.shape[1]

    def legendre_series(self, n: int) -> np.ndarray:
        """Coefficients of xi_n in the ordinary Legendre basis P_0, P_1, ..."""
        _check_index(self, n)
        k = 2 * np.arange(self.n_even)
        full = np.zeros(2 * self.n_even - 1)
        full[k] = math.sqrt(2.0) * self.coefficients[n] * np.sqrt(k + 0.5)
        return full


def _check_index(basis, n):
    if not 0 <= int(n) < basis.n_max:
        raise IndexError(f"mode {n} outside 0..{basis.n_max - 1}")


def _tridiagonal(n_even: int, c: float):
    k = 2.0 * np.arange(n_even)
    diag = k * (k + 1) + c * c * (2 * k * k + 2 * k - 1) / ((2 * k - 1) * (2 * k + 3))
    kk = k[:-1]
    off = c * c * (kk + 1) * (kk + 2) / ((2 * kk + 3) * np.sqrt((2 * kk + 1) * (2 * kk + 5)))
    return diag, off


def _lambda_probe(series, x0, rule):
    y, w = rule.on(0.0, 1.0)
    vals = _leg.legval(y, series)
    return 2.0 * np.sum(w * np.cos(BANDWIDTH * x0 * y) * vals) / _leg.legval(x0, series)


def build_basis(n_max: int = 12, legendre_order: int | None = None,
                tol: float = 1e-12) -> ProlateBasis:
    """Lowest n_max even prolate modes.

    legendre_order is the highest Legendre degree kept (even terms only).
    tol bounds the absolute disagreement between two probe evaluations of
    lambda(n).
    """
    if n_max < 6:
        raise ValueError("n_max must be >= 6")
    if legendre_order is None:
        legendre_order = 4 * n_max + 60
    if legendre_order < 4 * n_max + 60:
        raise ValueError("legendre_order must be >= 4*n_max + 60")
    n_even = legendre_order // 2 + 1
    diag, off = _tridiagonal(n_even, BANDWIDTH)
    try:
        chi, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_max - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError("tridiagonal eigensolver did not converge") from exc

    k = 2 * np.arange(n_even)
    at_one = np.sqrt(2.0) * (vecs * np.sqrt(k + 0.5)[:, None]).sum(axis=0)
    vecs = vecs * np.sign(at_one)
    coeffs = np.ascontiguousarray(vecs.T)

    rule = gauss_legendre(legendre_order + 64)
    grid = np.linspace(0.0, 1.0, 401)
    lam = np.empty(n_max)
    xi1 = np.empty(n_max)
    partial = ProlateBasis(BANDWIDTH, n_max, legendre_order, coeffs, chi,
                           np.zeros(n_max), np.zeros(n_max))
    for n in range(n_max):
        series = partial.legendre_series(n)
        vals = np.abs(_leg.legval(grid, series))
        order = np.argsort(vals)[::-1]
        x0 = grid[order[0]]
        # second probe: largest value at least 0.1 away from the first
        x1 = next(grid[i] for i in order if abs(grid[i] - x0) > 0.1)
        l0 = _lambda_probe(series, x0, rule)
        l1 = _lambda_probe(series, x1, rule)
        if abs(l0 - l1) > tol:
            raise RuntimeError(f"probe disagreement {abs(l0 - l1):.3e} for mode {n}; "
                               "increase legendre_order")
        lam[n] = l0
        xi1[n] = _leg.legval(1.0, series)
    for arr in (coeffs, chi, lam, xi1):
        arr.setflags(write=False)
    return ProlateBasis(BANDWIDTH, n_max, legendre_order, coeffs, chi, lam, xi1)


def eval_xi(basis: ProlateBasis, n: int, x):
    """xi_n(x) on [0, 1], extended by 0 beyond 1 (the cutoff)."""
    series = basis.legendre_series(n)
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= 1.0, _leg.legval(x, series), 0.0)
    return float(out) if out.ndim == 0 else out


def eval_xi_prime(basis: ProlateBasis, n: int, x):
    """Derivative of the Legendre series of xi_n (valid on [0, 1])."""
    series = _leg.legder(basis.legendre_series(n))
    out = _leg.legval(np.asarray(x, dtype=float), series)
    return float(out) if np.ndim(out) == 0 else out


def fourier_image(basis: ProlateBasis, x, modes=None, order: int = TRANSFORM_ORDER):
    """eta_n(x) = 2 int_0^1 cos(2 pi x y) xi_n(y) dy and its x-derivative.

    Returns two arrays of shape x.shape + (len(modes),).  Since eta_n equals
    lambda(n) times the analytic continuation of xi_n, this is the
    cancellation-free way to use continued modes with tiny lambda.
    """
    if modes is None:
        modes = range(basis.n_max)
    modes = list(modes)
    rule = gauss_legendre(order)
    y, w = rule.on(0.0, 1.0)
    xi_y = np.stack([eval_xi(basis, n, y) for n in modes], axis=-1)  # (q, k)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    val = np.empty((flat.size, len(modes)))
    der = np.empty((flat.size, len(modes)))
    wc = (2.0 * w)[:, None] * xi_y
    ws = (-2.0 * BANDWIDTH * w * y)[:, None] * xi_y
    step = 4096
    for s in range(0, flat.size, step):
        phase = BANDWIDTH * np.outer(flat[s:s + step], y)
        val[s:s + step] = np.cos(phase) @ wc
        der[s:s + step] = np.sin(phase) @ ws
    shape = x.shape + (len(modes),)
    return val.reshape(shape), der.reshape(shape)


def eval_xi_an(basis: ProlateBasis, n: int, x, order: int = TRANSFORM_ORDER):
    """Analytic continuation of xi_n and its derivative, for x >= 0."""
    _check_index(basis, n)
    lam = basis.lam[n]
    if abs(lam) < LAMBDA_FLOOR:
        raise ValueError(f"lambda({n}) too small to continue xi_n")
    val, der = fourier_image(basis, x, [n], order)
    val, der = val[..., 0] / lam, der[..., 0] / lam
    if val.ndim == 0:
        return float(val), float(der)
    return val, der


def lambda_bound(n: int) -> float:
    """2^{2n} pi^{2n+1/2} ((2n)!)^2 / ((4n)! Gamma(2n+3/2)), via log-gamma."""
    if n < 0:
        raise ValueError("n must be >= 0")
    lg = math.lgamma
    log_b = (2 * n * math.log(2.0) + (2 * n + 0.5) * math.log(math.pi)
             + 2 * lg(2 * n + 1) - lg(4 * n + 1) - lg(2 * n + 1.5))
    return math.exp(log_b)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def basis_to_json(basis: ProlateBasis) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "bandwidth": float(basis.bandwidth),
        "n_max": int(basis.n_max),
        "legendre_order": int(basis.legendre_order),
        "modes": [
            {
                "chi": float(basis.chi[n]),
                "lambda": float(basis.lam[n]),
                "xi_at_one": float(basis.xi_at_one[n]),
                "coefficients": [float(c) for c in basis.coefficients[n]],
            }
            for n in range(basis.n_max)
        ],
    }
    return json.dumps(doc, indent=1)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def basis_from_json(text: str) -> ProlateBasis:
    doc = json.loads(text)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported basis format {doc.get('format_version')!r}")
    modes = doc["modes"]
    return ProlateBasis(
        bandwidth=float(doc["bandwidth"]),
        n_max=int(doc["n_max"]),
        legendre_order=int(doc["legendre_order"]),
        coefficients=_frozen([m["coefficients"] for m in modes]),
        chi=_frozen([m["chi"] for m in modes]),
        lam=_frozen([m["lambda"] for m in modes]),
        xi_at_one=_frozen([m["xi_at_one"] for m in modes]),
    )


def save_basis_binary(basis: ProlateBasis, path) -> None:
    header = np.array([FORMAT_VERSION, basis.n_max, basis.legendre_order], dtype=np.int64)
    with open(path, "wb") as fh:
        np.savez(fh, header=header, bandwidth=np.float64(basis.bandwidth),
                 coefficients=basis.coefficients, chi=basis.chi,
                 lam=basis.lam, xi_at_one=basis.xi_at_one)


def load_basis_binary(path) -> ProlateBasis:
    with np.load(path) as z:
        version, n_max, lorder = (int(v) for v in z["header"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported basis format {version}")
        return ProlateBasis(float(z["bandwidth"]), n_max, lorder,
                            _frozen(z["coefficients"]), _frozen(z["chi"]),
                            _frozen(z["lam"]), _frozen(z["xi_at_one"]))


def basis_hash(basis: ProlateBasis) -> str:
    return hashlib.sha256(basis_to_json(basis).encode()).hexdigest()
