"""Continuous finite-rank model built from the lattice decomposition.

The angles alpha_n and weights d(n) of the canonical decomposition define a
trigonometric approximant of chi and an operator T on l^2(Z) (Fourier basis
of the interval of length log 2):

    T = lambda (I - sum_{n != 0} d(|n|) xi_{alpha_n} xi_{alpha_n}^T),
    (xi_alpha)_k = sinc(alpha - k),

with alpha_n = n and d(n) = 1 for n > m.  Its top eigenvector is the
sampled product h(j); the second eigenvalue is bounded through the
d-weighted Gram matrix of the vectors xi_{alpha}.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigvalsh, svdvals

from . import LOG2
from .specfun import gauss_legendre, trigamma

__all__ = [
    "TrigApproximant",
    "HVector",
    "ModelSpectrum",
    "LemspecResult",
    "tau_trig",
    "l1_distance",
    "build_h",
    "h_eval",
    "sinc_tail",
    "t_matrix",
    "compression_bound",
    "spectrum_model",
    "lemspec_route",
    "spectrum_to_csv",
]

MAX_N = 10_000


@dataclass(frozen=True)
class TrigApproximant:
    m: int
    lambda_max: float
    alphas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.alphas) != self.m or len(self.weights) != self.m:
            raise ValueError("need m angles and m weights")
        if self.m > 1 and np.any(np.diff(self.alphas) <= 0):
            raise ValueError("angles must be strictly increasing")

    @classmethod
    def from_decomposition(cls, dec, m: int | None = None) -> "TrigApproximant":
        m = len(dec.angles) if m is None else m
        return cls(m, float(dec.lambda_max), np.array(dec.angles[:m]), np.array(dec.weights[:m]))

    @classmethod
    def from_csv(cls, text: str, lambda_max: float) -> "TrigApproximant":
        rows = list(csv.DictReader(io.StringIO(text)))
        rows.sort(key=lambda r: int(r["j"]))
        alphas = np.array([float(r["alpha"]) for r in rows])
        weights = np.array([float(r["d"]) for r in rows])
        return cls(len(rows), lambda_max, alphas, weights)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "alpha", "d"])
        for j, (a, d) in enumerate(zip(self.alphas, self.weights), start=1):
            w.writerow([j, f"{a:.17g}", f"{d:.17g}"])
        return buf.getvalue()

    def truncated(self, m: int) -> "TrigApproximant":
        return TrigApproximant(m, self.lambda_max, self.alphas[:m].copy(), self.weights[:m].copy())

    def full_lattice(self, N: int):
        """alpha_k and d(|k|) for k = -N..N; index 0 carries weight 0."""
        alpha = np.arange(-N, N + 1, dtype=float)
        d = np.ones(2 * N + 1)
        m = self.m
        alpha[N + 1:N + 1 + m] = self.alphas
        alpha[N - m:N] = -self.alphas[::-1]
        d[N + 1:N + 1 + m] = self.weights
        d[N - m:N] = self.weights[::-1]
        d[N] = 0.0
        return alpha, d


@dataclass(frozen=True)
class HVector:
    m: int
    values: np.ndarray      # h(j) for j = -m..m
    l2_norm: float
    xi0_overlap: float

    def at(self, j: int) -> float:
        return float(self.values[j + self.m])


@dataclass(frozen=True)
class ModelSpectrum:
    compression_order: int
    eigenvalues: np.ndarray     # descending
    c0: float
    parity: np.ndarray          # +1 even, -1 odd, per returned eigenvector
    vectors: np.ndarray         # columns, same order as eigenvalues
    compression_bound: float


@dataclass(frozen=True)
class LemspecResult:
    N: int
    e: float
    e_prime: float
    eps: float
    j_min: float
    j_max: float
    r: float
    norm_sym: float
    norm_antisym: float
    s: float
    eps1: float
    eps1_within: bool
    betas: np.ndarray           # smallest few eigenvalues of the weighted Gram matrix
    beta2: float
    lambda2_bound: float


# ---------------------------------------------------------------------------
# Trigonometric approximant
# ---------------------------------------------------------------------------

def tau_trig(x, approx: TrigApproximant):
    """(2 lambda/log 2)[1/2 + sum_n cos(2 pi n x/log2) - d(n) cos(2 pi alpha_n x/log2)]."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if np.any(np.abs(flat) > LOG2 + 1e-12):
        raise ValueError("|x| must be <= log 2")
    w = 2.0 * math.pi * flat / LOG2
    total = np.full_like(flat, 0.5)
    comp = np.zeros_like(flat)
    for n in range(1, approx.m + 1):
        term = np.cos(n * w) - approx.weights[n - 1] * np.cos(approx.alphas[n - 1] * w)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    out = (2.0 * approx.lambda_max / LOG2) * total
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def l1_distance(approx: TrigApproximant, chi, order: int = 8, panels: int | None = None,
                return_parts: bool = False):
    """2 int_0^{log 2} |tau(x) - chi(x)| dx, panels no wider than log2/(4m).

    chi is a callable on arrays of x in [0, log 2].
    """
    if panels is None:
        panels = max(4 * approx.m, 64)
    edges = np.linspace(0.0, LOG2, panels + 1)
    x, w = gauss_legendre(order).on(edges[:-1], edges[1:])
    x, w = x.ravel(), w.ravel()
    c = np.asarray(chi(x), dtype=float)
    t = tau_trig(x, approx)
    val = 2.0 * float(np.sum(w * np.abs(t - c)))
    return (val, x, w, c) if return_parts else val


# ---------------------------------------------------------------------------
# Product eigenvector
# ---------------------------------------------------------------------------

def _check_alphas(alphas):
    a = np.asarray(alphas, dtype=float)
    gap = np.abs(a - np.round(a))
    if np.any(gap < 1e-12):
        raise ValueError("an angle coincides with an integer")
    return a


def build_h(alphas, m: int | None = None) -> HVector:
    """h(j) = sinc(j) prod_{n<=m} (1 - j^2/alpha_n^2)/(1 - j^2/n^2) at integers.

    At j = n the removable limit of sinc(z)/(1 - z^2/n^2) is (-1)^{n+1}/2.
    """
    a = _check_alphas(alphas)
    m = a.size if m is None else m
    a = a[:m]
    n = np.arange(1, m + 1, dtype=float)
    j = n[:, None]
    num = 1.0 - (j / a[None, :]) ** 2
    den = 1.0 - (j / n[None, :]) ** 2
    np.fill_diagonal(den, 1.0)
    ratio = num / den
    logabs = np.sum(np.log(np.abs(ratio)), axis=1)
    sign = np.prod(np.sign(ratio), axis=1)
    pos = 0.5 * (-1.0) ** (n + 1) * sign * np.exp(logabs)
    values = np.concatenate([pos[::-1], [1.0], pos])
    norm = math.sqrt(1.0 + 2.0 * math.fsum(pos * pos))
    for arr in (values,):
        arr.setflags(write=False)
    return HVector(m, values, norm, 1.0 / norm)


def h_eval(z, alphas):
    """The entire function h at real z (sinc form, finite product)."""
    a = _check_alphas(alphas)
    z = np.asarray(z, dtype=float)
    n = np.arange(1, a.size + 1, dtype=float)
    zz = z.ravel()[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (1.0 - (zz / a) ** 2) / (1.0 - (zz / n) ** 2)
    out = np.sinc(z.ravel()) * np.prod(ratio, axis=1)
    return out.reshape(z.shape)


# ---------------------------------------------------------------------------
# Operator T in the Fourier basis
# ---------------------------------------------------------------------------

def sinc_tail(alpha, N):
    """sum_{|k| >= N} sinc(alpha - k)^2 = sin^2(pi alpha)/pi^2 (psi'(N - alpha) + psi'(N + alpha))."""
    alpha = np.asarray(alpha, dtype=float)
    return np.sin(math.pi * alpha) ** 2 / math.pi**2 * (trigamma(N - alpha) + trigamma(N + alpha))


def compression_bound(M: int, approx: TrigApproximant) -> float:
    """2 lambda sum_n d(n) (tail of xi_{alpha_n} beyond |k| = M)^{1/2}."""
    tails = sinc_tail(approx.alphas, M + 1)
    return 2.0 * approx.lambda_max * float(np.sum(approx.weights * np.sqrt(tails)))


def t_matrix(M: int, approx: TrigApproximant):
    """(T_{jk})_{|j|,|k|<=M} and the norm bound for the discarded part."""
    m = approx.m
    if M < m:
        raise ValueError("M must be >= m")
    k = np.arange(-M, M + 1, dtype=float)
    a = np.concatenate([-approx.alphas[::-1], approx.alphas])
    d = np.concatenate([approx.weights[::-1], approx.weights])
    S = np.sinc(a[:, None] - k[None, :])
    T = -(S.T * d) @ S
    T[np.diag_indices_from(T)] += (np.abs(k) <= m)
    T *= approx.lambda_max
    T = 0.5 * (T + T.T)
    return T, compression_bound(M, approx)


def spectrum_model(M: int, approx: TrigApproximant, k: int = 5) -> ModelSpectrum:
    T, bound = t_matrix(M, approx)
    dim = T.shape[0]
    vals, vecs = eigh(T, subset_by_index=(dim - k, dim - 1))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    parity = np.where(np.linalg.norm(vecs - vecs[::-1], axis=0)
                      <= np.linalg.norm(vecs + vecs[::-1], axis=0), 1, -1)
    return ModelSpectrum(M, vals, float(abs(vecs[M, 0])), parity, vecs, bound)


# ---------------------------------------------------------------------------
# Second-eigenvalue bound through the weighted Gram matrix
# ---------------------------------------------------------------------------

def _bordered(core, G, corner, sign=1.0):
    """[[core, G^{1/2}], [sign G^{1/2}, corner I]]: the same nontrivial spectrum
    as [[core, W], [sign W^T, corner I]] when G = W W^T."""
    w, U = np.linalg.eigh(G)
    root = (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T
    n = core.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[:n, :n] = core
    out[:n, n:] = root
    out[n:, :n] = sign * root
    out[n:, n:] = corner * np.eye(n)
    return out


@dataclass
class _Gram:
    J: np.ndarray       # full matrix (dense route) or core block
    G: np.ndarray | None  # coupling Gram matrix C C^T (reduced route)
    d: np.ndarray       # weights on the matrix index range


def _gram(N: int, approx: TrigApproximant, dense_limit: int) -> _Gram:
    alpha, d = approx.full_lattice(N)
    m = approx.m
    if 2 * N + 1 <= dense_limit or N < 2 * m + 1:
        J = np.sinc(alpha[:, None] - alpha[None, :])
        J[N, :] = 0.0
        J[:, N] = 0.0
        J[N, N] = 1.0
        return _Gram(J, None, d)
    core = slice(N - m, N + m + 1)
    ac = alpha[core]
    J = np.sinc(ac[:, None] - ac[None, :])
    J[m, :] = 0.0
    J[:, m] = 0.0
    J[m, m] = 1.0
    outer = np.concatenate([np.arange(-N, -m), np.arange(m + 1, N + 1)]).astype(float)
    G = np.zeros((2 * m + 1, 2 * m + 1))
    for s in range(0, outer.size, 2048):
        C = np.sinc(ac[:, None] - outer[None, s:s + 2048])
        C[m, :] = 0.0
        G += C @ C.T
    return _Gram(J, G, d[core])


def lemspec_route(N: int, approx: TrigApproximant, h: HVector | None = None,
                  n_betas: int = 6, dense_limit: int = 4001) -> LemspecResult:
    """Spectral data of A = J D for indices |k| <= N, and the lambda_2 bound.

    J is the Gram matrix of xi_{alpha_k} with the index 0 replaced by the
    unit vector of the top eigenvector (orthogonal to all xi_{alpha_k},
    k != 0, since h vanishes at every alpha_k).  D = diag(d(|k|)), d(0) = 0.
    Outside |k| <= m the matrices are the identity plus a rank <= 2m+1
    coupling, which the reduced route handles exactly.
    """
    m = approx.m
    if not m < N <= MAX_N:
        raise ValueError(f"need m < N <= {MAX_N}")
    if h is not None and h.m != m:
        raise ValueError("h vector does not match the approximant")
    tails = sinc_tail(approx.alphas, N)
    e = math.sqrt(2.0 * math.fsum(tails))
    e_prime = math.sqrt(2.0 * math.fsum(approx.weights**2 * tails))
    eps = max(e, e_prime)

    g = _gram(N, approx, dense_limit)
    d = g.d
    sq = np.sqrt(d)
    if g.G is None:
        J = g.J
        jv = eigvalsh(J)
        B = sq[:, None] * J * sq[None, :]
        beta = eigvalsh(B)
        A = J * d[None, :]
        norm_sym = float(np.max(np.abs(eigvalsh(0.5 * (A + A.T)))))
        norm_anti = float(svdvals(0.5 * (A - A.T))[0])
    else:
        Jc, G = g.J, g.G
        jv = eigvalsh(_bordered(Jc, G, 1.0))
        Bc = sq[:, None] * Jc * sq[None, :]
        beta = eigvalsh(_bordered(Bc, sq[:, None] * G * sq[None, :], 1.0))
        Ac = Jc * d[None, :]
        plus, minus = 0.5 * (1.0 + d), 0.5 * (1.0 - d)
        sym = _bordered(0.5 * (Ac + Ac.T), plus[:, None] * G * plus[None, :], 1.0)
        anti = _bordered(0.5 * (Ac - Ac.T), minus[:, None] * G * minus[None, :], 0.0, -1.0)
        norm_sym = float(np.max(np.abs(eigvalsh(sym))))
        norm_anti = float(svdvals(anti)[0])
        # directions orthogonal to the coupling carry eigenvalue 1 for J and B
        jv = np.concatenate([jv, [1.0]])
        beta = np.concatenate([beta, [1.0]])
    j_min, j_max = float(jv.min()), float(jv.max())
    r = j_min - e
    s = norm_sym + norm_anti + eps
    ratio = s / r
    eps1 = 0.5 * ratio**1.5 * e + math.sqrt(ratio) * eps + 0.5 * ratio * e
    floor = 11.0 * eps
    beta = np.sort(beta)
    above = beta[beta > floor]
    beta2 = float(above[0])
    lam2 = approx.lambda_max * (1.0 - (beta2 - floor))
    return LemspecResult(N, e, e_prime, eps, j_min, j_max, r, norm_sym, norm_anti, s,
                         eps1, eps1 <= floor, beta[:n_betas].copy(), beta2, lam2)


def spectrum_to_csv(spec: ModelSpectrum) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue", "parity"])
    for i, (v, p) in enumerate(zip(spec.eigenvalues, spec.parity)):
        w.writerow([i, f"{v:.17g}", int(p)])
    return buf.getvalue()
