"""Reproduction checks for every quoted number, grouped by criterion."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import HALF_LOG2
from . import certificate as cert
from . import densities as dens
from . import specfun
from .pipeline import TABLE_OMEGA, Pipeline

__all__ = ["Check", "CRITERIA", "run_criterion", "run_all", "format_check", "KNOWN_UNATTAINABLE"]

LAMBDA_REF = [0.999971, -0.979485, 0.524086, -0.0589766, 0.00273233, -0.0000762914]
T_REF = [11.9719, 8.77574, 2.20528, 0.0433983, 0.000125459]
ALPHA_REF = [1.33371, 2.10964, 3.07018]
D_REF = [1.17111, 1.12443]

# checks that cannot hold for the stated construction; see the README
KNOWN_UNATTAINABLE = {"8: -1 among the roots"}


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    value: float
    expected: str
    passed: bool

    @property
    def key(self) -> str:
        return f"{self.criterion}: {self.name}"


def _near(c, name, value, target, tol):
    return Check(c, name, float(value), f"{target} +- {tol}", bool(abs(value - target) <= tol))


def _within(c, name, value, lo, hi, lo_open=False):
    ok = (lo < value if lo_open else lo <= value) and value <= hi
    return Check(c, name, float(value), f"in {'(' if lo_open else '['}{lo}, {hi}]", bool(ok))


def _less(c, name, value, bound):
    return Check(c, name, float(value), f"< {bound}", bool(value < bound))


def _at_least(c, name, value, bound):
    return Check(c, name, float(value), f">= {bound}", bool(value >= bound))


def c1(p: Pipeline):
    lam = p.basis.lam
    return [_near(1, f"lambda({n})", lam[n], LAMBDA_REF[n], 1e-5) for n in range(6)]


def c2(p: Pipeline):
    b = p.basis
    return [_near(2, "sum lambda^2", math.fsum(b.lam**2), 2.237484835, 1e-7),
            _near(2, "sum lambda^2 xi(1)^2", math.fsum(b.lam**2 * b.xi_at_one**2), 2.0, 1e-6)]


def c3(p: Pipeline):
    rho = np.logspace(0.0, 1.0, 50)
    diff = max(abs(dens.delta(r) - dens.delta_oracle(r)) for r in rho)
    return [_less(3, "max |delta - oracle| on 50 points", diff, 1e-8),
            _near(3, "delta(1)", dens.delta(1.0), 2.237484835, 1e-8)]


def c4(p: Pipeline):
    t = np.round(np.arange(-1000, 1001) * 0.01, 12)
    val = 2.0 * specfun.theta_prime(t) + dens.delta_hat(t)
    return [_at_least(4, "min 2 theta' + delta_hat on [-10, 10]", float(val.min()), -1e-6)]


def c5(p: Pipeline):
    return [_near(5, "negativity radius", dens.negativity_radius(), 0.097542, 5e-4),
            _near(5, "weighted negativity radius", dens.weighted_negativity_radius(), 0.14043, 5e-4),
            _near(5, "triangle limit", dens.triangle_limit(), 2.98699, 1e-3)]


def c6(p: Pipeline):
    t = dens.epsilon_terms(p.basis)
    out = [_near(6, "eps'(1+)", p.eps_prime, 22.9965, 5e-3)]
    out += [_near(6, f"t({n})", t[n], T_REF[n], 1e-3) for n in range(5)]
    out.append(_less(6, "|Q eps(1)|", abs(dens.q_epsilon(1.0, p.basis)[0]), 1e-12 + 1e-300))
    out.append(_within(6, "tail_bound(10)", dens.tail_bound(10), 2.3e-12, 2.366e-12))
    return out


def c7(p: Pipeline):
    s = p.toeplitz(1e-3)
    return [_near(7, "lambda_1 at omega=1e-3", s.top_eigenvalues[0], 1.05177, 2e-3),
            _near(7, "lambda_2 at omega=1e-3", s.top_eigenvalues[1], 0.687925, 2e-3)]


def c8(p: Pipeline, extended: bool = True):
    out = []
    runs = [("1/2000", 1.0 / 2000, 5e-3)]
    if extended:
        runs.append(("1/5000", TABLE_OMEGA, 2e-3))
    for label, om, tol in runs:
        r = p.roots(om)
        d = p.decomposition(om)
        out.append(_less(8, f"max ||z|-1|, omega {label}", r.max_deviation, 1e-8 + 1e-300))
        if label == "1/2000":
            out.append(_less(8, "-1 among the roots", r.distance_to_minus_one, 1e-6))
        for j in range(3):
            out.append(_near(8, f"alpha_{j + 1}, omega {label}", r.angles[j], ALPHA_REF[j], tol))
        for j in range(2):
            out.append(_near(8, f"d({j + 1}), omega {label}", d.weights[j], D_REF[j], tol))
        out.append(Check(8, f"min d(j) > 0, omega {label}", float(d.weights.min()), "> 0",
                         bool(d.weights.min() > 0)))
        out.append(_less(8, f"relative residual, omega {label}", d.relative_residual, 1e-6))
    return out


def c9(p: Pipeline):
    return [_near(9, "L1 distance, m=1732", p.l1(p.approximant()), 0.00122, 1e-4)]


def c10(p: Pipeline):
    h = p.h()
    return [_near(10, "|h|", h.l2_norm, 1.05143, 2e-3),
            _within(10, "overlap 1/|h|", h.xi0_overlap, 0.948, 0.952)]


def c11(p: Pipeline):
    s = p.model(1733)
    ev = s.eigenvalues
    return [_near(11, "lambda_max", ev[0], 1.05158, 1e-3),
            _near(11, "lambda_2", ev[1], 0.686494, 1e-3),
            _near(11, "lambda_3", ev[2], 0.0288921, 5e-4),
            _near(11, "c0", s.c0, 0.951067, 1e-3),
            Check(11, "second eigenvector odd", float(s.parity[1]), "-1", bool(s.parity[1] == -1))]


def c12(p: Pipeline, extended: bool = True):
    r = p.lemspec(2000)
    out = [_near(12, "max(e, e') at N=2000", r.eps, 0.017, 2e-3),
           _near(12, "e(N) at N=2000", r.e, 0.0145, 2e-3),
           _within(12, "J spectrum min", r.j_min, 0.31 - 5e-3, 1.35 + 5e-3),
           _within(12, "J spectrum max", r.j_max, 0.31 - 5e-3, 1.35 + 5e-3),
           _near(12, "r", r.r, 0.299, 5e-3),
           _near(12, "s", r.s, 1.578, 5e-3)]
    if extended:
        x = p.lemspec(10000)
        out += [_near(12, "eps(N) at N=10000", x.eps, 0.00740487, 5e-4),
                _near(12, "beta_2 at N=10000", x.beta2, 0.347112, 2e-3),
                Check(12, "lambda_2 bound at N=10000", x.lambda2_bound, "<= 0.772216 + 0.002",
                      bool(x.lambda2_bound <= 0.772216 + 2e-3))]
    return out


def c13(p: Pipeline):
    ok, margin = cert.restore_positivity(0.064, 0.05158, 0.227784, cert.KAPPA)
    c = cert.assemble_certificate(1.05158, 0.772216, 22.9965, a=0.064)
    return [_near(13, "margin at the operating point", margin, 0.00441, 1e-4),
            Check(13, "margin > eps1", margin, f"> {cert.EPS1}", bool(ok and margin > cert.EPS1)),
            _near(13, "gamma", c.gamma, 2.94355, 5e-3),
            _within(13, "c_final", c.c_final, 13.0, 17.0, lo_open=True)]


def c14(p: Pipeline):
    from .cache import ResultCache
    import tempfile

    out = []
    # round trip Q o Y*Y on a bump with vanishing moments at +-i/2
    h = 0.004
    x = np.arange(-3.0, 3.0 + h / 2, h)
    m = np.abs(x) < 1
    g = np.zeros_like(x)
    u = x[m]
    g[m] = np.exp(-1.0 / (1.0 - u * u))
    d1 = lambda y: -2 * y / (1 - y * y) ** 2
    d2 = lambda y: (-2 * (1 - y * y) ** 2 - 8 * y * y * (1 - y * y)) / (1 - y * y) ** 4
    f = np.zeros_like(x)
    f[m] = -(d1(u) ** 2 + d2(u)) * g[m] + 0.25 * g[m]
    rt = dens.apply_Q(dens.apply_YY(f, h, x0=x[0]), h)
    out.append(_less(14, "Q(Y*Y f) - f", float(np.max(np.abs(rt - f))), 1e-6))
    # analytic derivatives against central differences
    fd = lambda fn, z, e: (-fn(z + 2 * e) + 8 * fn(z + e) - 8 * fn(z - e) + fn(z - 2 * e)) / (12 * e)
    zs = np.array([0.5, 3.0, 17.0])
    th = lambda t: specfun.riemann_siegel_theta(t).theta
    err = max(abs(fd(th, z, 1e-3) - specfun.theta_prime(z)) for z in zs)
    out.append(_less(14, "theta' vs differences", err, 1e-6))
    xs = np.array([0.1, 0.3, 0.6])
    dx = lambda y: dens.delta(np.exp(y))
    e = 1e-3
    d2fd = lambda fn, z: (-fn(z + 2 * e) + 16 * fn(z + e) - 30 * fn(z) + 16 * fn(z - e)
                         - fn(z - 2 * e)) / (12 * e * e)
    err = max(abs(-d2fd(dx, z) + 0.25 * dx(z) - dens.q_delta_additive(z)) for z in xs)
    out.append(_less(14, "Q delta vs differences", err, 1e-6))
    ex = lambda y: dens.epsilon(np.exp(y), p.basis)
    err = max(abs(-d2fd(ex, z) + 0.25 * ex(z) - dens.q_epsilon(math.exp(z), p.basis)[0])
              for z in xs)
    out.append(_less(14, "Q eps vs differences", err, 1e-6))
    # parity of the raw top eigenvector
    from scipy.linalg import eigh, toeplitz as tpz
    sym = p.toeplitz(1e-3).symbol
    _, v = eigh(tpz(sym), subset_by_index=(sym.size - 1, sym.size - 1))
    v = v[:, 0]
    out.append(_less(14, "top eigenvector even", float(np.max(np.abs(v - v[::-1]))), 1e-10))
    # deterministic cache payloads
    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for _ in range(2):
            q = Pipeline(ResultCache(tmp + f"/{len(blobs)}"))
            s = q.toeplitz(1e-2)
            blobs.append(s.symbol.tobytes() + s.max_eigvec.tobytes())
        out.append(Check(14, "byte-identical reruns", 0.0, "identical", blobs[0] == blobs[1]))
    return out


CRITERIA = {1: c1, 2: c2, 3: c3, 4: c4, 5: c5, 6: c6, 7: c7, 8: c8, 9: c9, 10: c10,
            11: c11, 12: c12, 13: c13, 14: c14}


def run_criterion(n: int, p: Pipeline, extended: bool = True):
    fn = CRITERIA[n]
    t0 = time.perf_counter()
    checks = fn(p, extended) if n in (8, 12) else fn(p)
    return checks, time.perf_counter() - t0


def format_check(c: Check) -> str:
    status = "PASS" if c.passed else "FAIL"
    return f"[{status}] criterion {c.criterion:>2} | {c.name}: {c.value:.10g} (expected {c.expected})"


def run_all(p: Pipeline, extended: bool = True, echo=print):
    checks = []
    for n in CRITERIA:
        got, dt = run_criterion(n, p, extended)
        for c in got:
            echo(format_check(c))
        echo(f"        criterion {n:>2} took {dt:.1f} s")
        checks.extend(got)
    return checks
