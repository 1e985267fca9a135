"""Cached end-to-end computation shared by the command line and the report."""

from __future__ import annotations

import numpy as np

from . import HALF_LOG2, __version__
from . import densities as dens
from . import model as mdl
from . import toeplitz as tp
from .cache import ResultCache
from .prolate import ProlateBasis, basis_from_json, basis_hash, basis_to_json, build_basis

__all__ = ["Pipeline", "TABLE_OMEGA", "TABLE_M"]

# lattice behind the m = 1732 angle/weight tables: 2m+1 cells tile [-L, L]
TABLE_OMEGA = tp.matched_omega(HALF_LOG2, 1.0 / 5000)
TABLE_M = 1732


def _floats(a):
    return [float(x) for x in np.asarray(a).ravel()]


class Pipeline:
    def __init__(self, cache: ResultCache | None = None, n_max: int = 12,
                 legendre_order: int | None = None):
        self.cache = cache if cache is not None else ResultCache(enabled=False)
        self.n_max = n_max
        self.legendre_order = legendre_order
        self._basis: ProlateBasis | None = None
        self._memo: dict = {}

    # -- basis ---------------------------------------------------------------
    @property
    def basis(self) -> ProlateBasis:
        if self._basis is None:
            params = {"n_max": self.n_max, "legendre_order": self.legendre_order,
                      "version": __version__}
            text = self.cache.memo("prolate", params, lambda: basis_to_json(
                build_basis(self.n_max, self.legendre_order)))
            self._basis = basis_from_json(text)
        return self._basis

    @property
    def basis_hash(self) -> str:
        return basis_hash(self.basis)

    @property
    def eps_prime(self) -> float:
        return dens.epsilon_prime_one(self.basis)

    def _cached(self, command, params, compute):
        key = (command, tuple(sorted(params.items())))
        if key not in self._memo:
            self._memo[key] = self.cache.memo(command, params, compute, self.basis_hash)
        return self._memo[key]

    # -- lattice ---------------------------------------------------------------
    def toeplitz(self, omega: float, half_length: float = HALF_LOG2, n_top: int = 3
                 ) -> tp.ToeplitzSpectrum:
        def compute():
            s = tp.build_toeplitz(omega, half_length, self.basis, n_top=n_top)
            return {"omega": s.omega, "half_length": s.half_length, "dim": s.dim,
                    "symbol": _floats(s.symbol), "top": _floats(s.top_eigenvalues),
                    "vec": _floats(s.max_eigvec)}
        p = self._cached("toeplitz", {"omega": omega, "half_length": half_length,
                                      "n_top": n_top}, compute)
        return tp.ToeplitzSpectrum(p["omega"], p["half_length"], p["dim"], np.array(p["symbol"]),
                                   np.array(p["top"]), np.array(p["vec"]))

    def roots(self, omega: float, half_length: float = HALF_LOG2, label: str = "dim"
              ) -> tp.RootSet:
        def compute():
            r = tp.max_eigvec_roots(self.toeplitz(omega, half_length), label)
            return {"re": _floats(r.roots.real), "im": _floats(r.roots.imag),
                    "angles": _floats(r.angles), "dev": r.max_deviation,
                    "minus_one": r.distance_to_minus_one, "scale": r.label_scale}
        p = self._cached("roots", {"omega": omega, "half_length": half_length, "label": label},
                         compute)
        return tp.RootSet(np.array(p["re"]) + 1j * np.array(p["im"]), np.array(p["angles"]),
                          p["dev"], p["minus_one"], p["scale"])

    def decomposition(self, omega: float, half_length: float = HALF_LOG2, label: str = "dim"
                      ) -> tp.CanonicalDecomposition:
        def compute():
            d = tp.canonical_decomposition(self.toeplitz(omega, half_length),
                                           self.roots(omega, half_length, label))
            return {"lam": d.lambda_max, "angles": _floats(d.angles),
                    "weights": _floats(d.weights), "resid": d.residual,
                    "rel": d.relative_residual, "omega": d.omega}
        p = self._cached("decompose", {"omega": omega, "half_length": half_length,
                                       "label": label}, compute)
        ang = np.array(p["angles"])
        z = np.exp(2j * np.pi * ang / self.roots(omega, half_length, label).label_scale)
        return tp.CanonicalDecomposition(p["lam"], np.concatenate([z, z.conj()]), ang,
                                         np.array(p["weights"]), p["resid"], p["rel"], p["omega"])

    # -- continuous model --------------------------------------------------------
    def approximant(self, m: int = TABLE_M, omega: float = TABLE_OMEGA) -> mdl.TrigApproximant:
        dec = self.decomposition(omega)
        return mdl.TrigApproximant.from_decomposition(dec, m)

    def l1(self, approx: mdl.TrigApproximant) -> float:
        params = {"m": approx.m, "lam": approx.lambda_max,
                  "tables": canonical_digest(approx)}
        ep = self.eps_prime
        return self._cached("approx", params, lambda: mdl.l1_distance(
            approx, lambda x: dens.chi_norm(x, self.basis, ep)))

    def h(self, approx: mdl.TrigApproximant | None = None) -> mdl.HVector:
        approx = approx if approx is not None else self.approximant()
        return mdl.build_h(approx.alphas)

    def model(self, M: int = 1733, approx: mdl.TrigApproximant | None = None
              ) -> mdl.ModelSpectrum:
        approx = approx if approx is not None else self.approximant()

        def compute():
            s = mdl.spectrum_model(M, approx, k=3)
            return {"vals": _floats(s.eigenvalues), "c0": s.c0, "parity": [int(p) for p in s.parity],
                    "bound": s.compression_bound, "v0": _floats(s.vectors[:, 0]),
                    "v1": _floats(s.vectors[:, 1])}
        p = self._cached("model", {"M": M, "tables": canonical_digest(approx)}, compute)
        vecs = np.stack([p["v0"], p["v1"]], axis=1)
        return mdl.ModelSpectrum(M, np.array(p["vals"]), p["c0"], np.array(p["parity"]), vecs,
                                 p["bound"])

    def lemspec(self, N: int, approx: mdl.TrigApproximant | None = None) -> mdl.LemspecResult:
        approx = approx if approx is not None else self.approximant()

        def compute():
            r = mdl.lemspec_route(N, approx)
            doc = {k: getattr(r, k) for k in r.__dataclass_fields__}
            doc["betas"] = _floats(r.betas)
            doc["eps1_within"] = bool(r.eps1_within)
            return doc
        p = dict(self._cached("lemspec", {"N": N, "tables": canonical_digest(approx)}, compute))
        p["betas"] = np.array(p["betas"])
        return mdl.LemspecResult(**p)


def canonical_digest(approx: mdl.TrigApproximant) -> str:
    import hashlib
    return hashlib.sha256(approx.to_csv().encode() + repr(approx.lambda_max).encode()).hexdigest()
