"""Positivity restoration by one rank-one term, and the resulting constants.

With b = lambda_max - 1 (excess of the top eigenvalue), c = 1 - lambda_2 (gap
below 1) and kappa the overlap between the top eigenvector and xi_0, the
form <xi|(I - T) xi> + a |<xi_0|xi>|^2 is bounded below by the smaller
eigenvalue of [[a k^2 - b, a k s], [a k s, a s^2 + c]], s^2 = 1 - k^2.
Arithmetic is carried out in decimal with 40 digits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from decimal import Decimal, getcontext, ROUND_CEILING

from . import LOG2

__all__ = [
    "KAPPA",
    "EPS1",
    "PositivityCertificate",
    "LowerBound",
    "restore_positivity",
    "minimal_weight",
    "assemble_certificate",
    "lower_bound_report",
]

KAPPA = 0.94865
EPS1 = 0.00122
PRECISION = 40


def _dec(x) -> Decimal:
    return Decimal(repr(float(x)))


@dataclass(frozen=True)
class PositivityCertificate:
    b: float
    c_gap: float
    kappa: float
    a: float
    a_min: float
    eps2: float
    eps1: float
    eps_prime_one: float
    gamma: float
    c_final: float
    feasible: bool

    def to_json(self) -> str:
        sources = {
            "b": ("lambda_max of the finite-rank model minus 1", 1e-3),
            "c_gap": ("1 minus the certified bound on lambda_2", 2e-3),
            "kappa": ("overlap of the top eigenvector with xi_0 (conservative)", 0.0),
            "a": ("rank-one weight used", 0.0),
            "a_min": ("smallest 3-decimal weight with margin above eps1", 0.0),
            "eps2": ("lower bound of the restored form", 1e-4),
            "eps1": ("L1 distance of the trigonometric approximant", 1e-4),
            "eps_prime_one": ("right derivative of epsilon at 1", 5e-3),
            "gamma": ("2 eps'(1+) a", 5e-3),
            "c_final": ("4 gamma / log 2", 3e-2),
            "feasible": ("eps2 > eps1", 0.0),
        }
        doc = {k: {"value": v, "tolerance": sources[k][1], "source": sources[k][0]}
               for k, v in asdict(self).items()}
        return json.dumps(doc, indent=1, sort_keys=True)

    def summary(self) -> str:
        rows = [(k, v) for k, v in asdict(self).items()]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def restore_positivity(a: float, b: float, c_gap: float, kappa: float):
    """(feasible, margin): margin is the smaller eigenvalue of the 2x2 form."""
    if a < 0 or b < 0 or c_gap < 0 or not 0.0 <= kappa <= 1.0:
        raise ValueError("arguments out of range")
    getcontext().prec = PRECISION
    A, B, C, K = _dec(a), _dec(b), _dec(c_gap), _dec(kappa)
    k2 = K * K
    feasible = (A + C >= B) and (B * (A + C) <= A * (B + C) * k2)
    disc = (A + B + C) ** 2 - 4 * A * (B + C) * k2
    margin = (A - B + C - disc.sqrt()) / 2
    return bool(feasible), float(margin)


def minimal_weight(b: float, c_gap: float, kappa: float, eps1: float,
                   decimals: int = 3) -> float:
    """Smallest a, rounded up to `decimals`, with margin(a) > eps1.

    The margin increases with a (a rank-one PSD term is added) towards
    c k^2 - b s^2.
    """
    ceiling = c_gap * kappa**2 - b * (1.0 - kappa**2)
    if ceiling <= eps1:
        raise ValueError("no weight restores positivity beyond eps1")
    ok = lambda a: restore_positivity(a, b, c_gap, kappa)[1] > eps1
    hi = 1.0
    while not ok(hi):
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    q = Decimal(1).scaleb(-decimals)
    a = float(_dec(hi).quantize(q, rounding=ROUND_CEILING))
    while not ok(a):  # rounding boundary
        a = float(_dec(a) + q)
    return a


def assemble_certificate(lambda_max: float, lambda2_bound: float, eps_prime_one: float,
                         kappa: float = KAPPA, eps1: float = EPS1,
                         a: float | None = None) -> PositivityCertificate:
    """Certificate from the model's top eigenvalue and the lambda_2 bound.

    a defaults to the bisection value; an explicit a must be feasible
    with margin above eps1.
    """
    b = lambda_max - 1.0
    c_gap = 1.0 - lambda2_bound
    a_min = minimal_weight(b, c_gap, kappa, eps1)
    a_used = a_min if a is None else float(a)
    feasible, eps2 = restore_positivity(a_used, b, c_gap, kappa)
    if not (feasible and eps2 > eps1):
        raise ValueError(f"weight a={a_used} does not restore positivity (margin {eps2:.5f})")
    getcontext().prec = PRECISION
    gamma = 2 * _dec(eps_prime_one) * _dec(a_used)
    c_final = 4 * gamma / _dec(LOG2)
    return PositivityCertificate(b, c_gap, kappa, a_used, a_min, eps2, eps1, eps_prime_one,
                                 float(gamma), float(c_final), True)


@dataclass(frozen=True)
class LowerBound:
    chain: float        # 0.1 eps'(1+) * 4/log 2, valid when lambda_1 - eps1 >= 1.05
    witness: float      # 2 eps'(1+) (lambda_1 - eps1 - 1) (4/log 2) / overlap^2
    overlap: float
    useful: bool


def lower_bound_report(lambda1: float, overlap: float, eps_prime_one: float,
                       eps1: float = EPS1) -> LowerBound:
    """Coefficient C in E(g * g^*) >= C |g^(0)|^2 for a near-top eigenvector.

    The form is at least 2 eps'(1+)(lambda_1 - eps1 - 1)|xi|^2 and
    |<xi_0|xi>|^2 = (4/log 2)|g^(0)|^2.
    """
    excess = lambda1 - eps1 - 1.0
    if excess < 0.05:
        raise ValueError("spectral excess below 0.05: no lower bound")
    chain = 2.0 * eps_prime_one * 0.05 * 4.0 / LOG2
    if abs(overlap) < 1e-14:
        return LowerBound(chain, 0.0, 0.0, False)
    witness = 2.0 * eps_prime_one * excess * (4.0 / LOG2) / overlap**2
    return LowerBound(chain, witness, abs(overlap), True)
