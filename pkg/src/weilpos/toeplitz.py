"""Lattice discretization of the Q epsilon quadratic form.

On the lattice j*omega, |j| <= m, the form becomes the symmetric Toeplitz
matrix with symbol s_k = omega Q epsilon(e^{k omega}) / (2 eps'(1+)).  Its
largest eigenvalue is compared with 1; the top eigenvector, seen as a
polynomial, has all of its roots on the unit circle, and those roots give
a positive decomposition of lambda_1 I - T into rank-one Toeplitz atoms.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, toeplitz

from . import HALF_LOG2
from .densities import epsilon_prime_one, q_epsilon
from .prolate import ProlateBasis

__all__ = [
    "ToeplitzSpectrum",
    "RootSet",
    "CanonicalDecomposition",
    "matched_omega",
    "build_toeplitz",
    "spectrum_top",
    "max_eigvec_roots",
    "canonical_decomposition",
    "toeplitz_frobenius",
    "decomposition_to_csv",
]

ROOT_TOL = 1e-6
NEG_WEIGHT_TOL = 1e-8


@dataclass(frozen=True)
class ToeplitzSpectrum:
    omega: float
    half_length: float
    dim: int
    symbol: np.ndarray
    top_eigenvalues: np.ndarray
    max_eigvec: np.ndarray

    @property
    def m(self) -> int:
        return (self.dim - 1) // 2

    def matrix(self) -> np.ndarray:
        return toeplitz(self.symbol)


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray           # all dim-1 roots, polished
    angles: np.ndarray          # alpha_j from the roots with positive argument, ascending
    max_deviation: float        # max | |z| - 1 | before projection
    distance_to_minus_one: float
    label_scale: float


@dataclass(frozen=True)
class CanonicalDecomposition:
    lambda_max: float
    roots: np.ndarray
    angles: np.ndarray
    weights: np.ndarray
    residual: float             # Frobenius norm of S - reconstruction
    relative_residual: float
    omega: float


def matched_omega(half_length: float, omega: float) -> float:
    """Lattice step with the same m whose 2m+1 cells tile [-L, L] exactly."""
    m = int(math.floor(half_length / omega))
    return 2.0 * half_length / (2 * m + 1)


def _top(symbol: np.ndarray, k: int):
    dim = symbol.size
    k = min(k, dim)
    vals, vecs = eigh(toeplitz(symbol), subset_by_index=(dim - k, dim - 1))
    return vals[::-1].copy(), vecs[:, -1].copy()


def build_toeplitz(omega: float, half_length: float, basis: ProlateBasis,
                   n_modes: int = 11, n_top: int = 3) -> ToeplitzSpectrum:
    if not 1e-4 <= omega <= 1e-2:
        raise ValueError("omega must lie in [1e-4, 1e-2]")
    if half_length > HALF_LOG2 + 1e-12:
        raise ValueError("half_length must be <= log(2)/2")
    # inclusive lattice: |j| omega <= half_length
    m = int(math.floor(half_length / omega + 1e-12))
    dim = 2 * m + 1
    rho = np.exp(omega * np.arange(dim))
    rho[-1] = min(rho[-1], 2.0)
    qe, _ = q_epsilon(rho, basis, n_modes=n_modes)
    symbol = omega * qe / (2.0 * epsilon_prime_one(basis))
    symbol[0] = 0.0 if abs(symbol[0]) < 1e-12 else symbol[0]
    vals, vec = _top(symbol, n_top)
    vec = _symmetrize(vec)
    for a in (symbol, vals, vec):
        a.setflags(write=False)
    return ToeplitzSpectrum(omega, half_length, dim, symbol, vals, vec)


def _symmetrize(v):
    # the top eigenvector is even under index reversal; remove rounding noise
    v = 0.5 * (v + v[::-1])
    v = v / np.linalg.norm(v)
    return v if v[v.size // 2] >= 0 else -v


def spectrum_top(spec: ToeplitzSpectrum, k: int):
    """k largest eigenvalues (descending) and the unit top eigenvector."""
    if not 1 <= k <= spec.dim:
        raise ValueError("k out of range")
    if k <= spec.top_eigenvalues.size:
        return spec.top_eigenvalues[:k].copy(), spec.max_eigvec.copy()
    vals, vec = _top(np.asarray(spec.symbol), k)
    return vals, _symmetrize(vec)


def _horner(coeffs_high_first, z):
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in coeffs_high_first:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _polish(c_high, z, steps=3):
    for _ in range(steps):
        p, dp = _horner(c_high, z)
        step = np.where(dp != 0, p / np.where(dp != 0, dp, 1), 0)
        cand = z - step
        pc, _ = _horner(c_high, cand)
        accept = np.abs(pc) <= np.abs(p)
        z = np.where(accept, cand, z)
    return z


def max_eigvec_roots(spec: ToeplitzSpectrum, label_scale: str = "dim") -> RootSet:
    """Roots of sum_j v_j z^j for the top eigenvector v.

    label_scale "dim" maps argument theta to alpha = dim theta / (2 pi);
    "dim+1" uses (dim + 1) instead.
    """
    vals = spec.top_eigenvalues
    if vals.size > 1 and vals[0] - vals[1] <= 1e-6:
        raise ValueError("top eigenvalue is not simple")
    v = np.asarray(spec.max_eigvec)
    c_high = v[::-1]
    roots = np.roots(c_high)  # companion matrix, balanced by LAPACK
    roots = _polish(c_high, roots.astype(complex))
    dev = float(np.max(np.abs(np.abs(roots) - 1.0)))
    if dev > ROOT_TOL:
        raise ValueError(f"root off the unit circle by {dev:.2e}")
    theta = np.angle(roots)
    scale = {"dim": spec.dim, "dim+1": spec.dim + 1}[label_scale]
    pos = np.sort(theta[theta > 0])
    return RootSet(roots=roots / np.abs(roots), angles=pos * scale / (2.0 * math.pi),
                   max_deviation=dev, distance_to_minus_one=float(np.min(np.abs(roots + 1.0))),
                   label_scale=float(scale))


def toeplitz_frobenius(first_row) -> float:
    """Frobenius norm of the symmetric Toeplitz matrix with this first row."""
    r = np.asarray(first_row, dtype=float)
    n = r.size
    mult = np.concatenate([[n], 2.0 * (n - np.arange(1, n))])
    scale = float(np.max(np.abs(r))) if n else 0.0
    if scale == 0.0:
        return 0.0
    r = r / scale
    return scale * float(math.sqrt(math.fsum(mult * r * r)))


def canonical_decomposition(spec: ToeplitzSpectrum, roots: RootSet | None = None
                            ) -> CanonicalDecomposition:
    """lambda_1 I - T as lambda_1/dim sum_j d_j (e(z_j) + e(conj z_j)).

    e(z)_{jk} = z^{j-k}; the weights solve the first-row moment system in
    least squares.
    """
    if roots is None:
        roots = max_eigvec_roots(spec)
    lam = float(spec.top_eigenvalues[0])
    dim = spec.dim
    theta = 2.0 * math.pi * roots.angles / roots.label_scale
    target = -np.asarray(spec.symbol, dtype=float)
    target[0] += lam
    k = np.arange(dim)
    moments = (lam / dim) * 2.0 * np.cos(np.outer(k, theta))
    weights, *_ = np.linalg.lstsq(moments, target, rcond=None)
    if np.any(weights < -NEG_WEIGHT_TOL):
        j = int(np.argmin(weights))
        raise ValueError(f"negative weight d({j + 1}) = {weights[j]:.3e}")
    resid = toeplitz_frobenius(moments @ weights - target)
    rel = resid / toeplitz_frobenius(target)
    z = np.exp(1j * theta)
    return CanonicalDecomposition(lam, np.concatenate([z, z.conj()]), roots.angles.copy(),
                                  weights, resid, rel, spec.omega)


def decomposition_to_csv(dec: CanonicalDecomposition) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "alpha", "d", "omega"])
    for j, (a, d) in enumerate(zip(dec.angles, dec.weights), start=1):
        w.writerow([j, f"{a:.17g}", f"{d:.17g}", f"{dec.omega:.17g}"])
    return buf.getvalue()
