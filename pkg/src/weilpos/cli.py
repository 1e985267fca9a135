"""Command line: one subcommand per computed artifact, plus a full report."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import HALF_LOG2, __version__
from . import certificate as cert
from . import densities as dens
from . import model as mdl
from . import specfun
from . import toeplitz as tp
from .cache import ResultCache, canonical_json
from .pipeline import TABLE_OMEGA, Pipeline

LAYOUT = ("tables", "spectra", "certificates", "manifests")


class Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        for sub in LAYOUT:
            (self.out / sub).mkdir(parents=True, exist_ok=True)
        cache = ResultCache(args.cache_dir, enabled=not args.no_cache)
        self.pipe = Pipeline(cache, n_max=getattr(args, "nmax", 12),
                             legendre_order=getattr(args, "lorder", None))
        self.outputs: list[tuple[str, str]] = []
        self.t0 = time.perf_counter()

    def write(self, sub: str, name: str, text: str) -> Path:
        path = self.out / sub / name
        data = text.encode()
        path.write_bytes(data)
        self.outputs.append((str(path), hashlib.sha256(data).hexdigest()))
        return path

    def manifest(self, command: str, params: dict) -> None:
        doc = {"command": command, "parameters": params, "basis_hash": self.pipe.basis_hash,
               "outputs": [list(o) for o in self.outputs],
               "wall_time": time.perf_counter() - self.t0, "tool_version": __version__}
        tag = hashlib.sha256(canonical_json({"c": command, "p": params}).encode()).hexdigest()[:12]
        path = self.out / "manifests" / f"{command}-{tag}.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True))


def _g(x) -> str:
    return f"{float(x):.17g}"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_g(v) if isinstance(v, (float, np.floating)) else str(v) for v in r)
              for r in rows]
    return "\n".join(lines) + "\n"


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _table_approx(run: Run, args):
    if getattr(args, "alphas", None):
        text = Path(args.alphas).read_text()
        lam = args.lam if args.lam is not None else run.pipe.decomposition(TABLE_OMEGA).lambda_max
        approx = mdl.TrigApproximant.from_csv(text, lam)
        m = getattr(args, "m", None)
        return approx.truncated(m) if m else approx
    return run.pipe.approximant(getattr(args, "m", None) or 1732)


# ---------------------------------------------------------------------------

def cmd_prolate(run: Run, args):
    b = run.pipe.basis
    rows = [(n, float(b.chi[n]), float(b.lam[n]), float(b.xi_at_one[n])) for n in range(b.n_max)]
    run.write("tables", "prolate.csv", _csv(["n", "chi", "lambda", "xi_at_one"], rows))
    for n, _, lam, _ in rows[:6]:
        print(f"lambda({n}) = {lam:.9g}")
    return {"nmax": args.nmax, "lorder": args.lorder}


def cmd_delta(run: Run, args):
    rho = np.linspace(1.0, args.rho_max, args.grid)
    vals = dens.delta(rho)
    s = dens.samples("delta", rho, vals, run.pipe.basis)
    run.write("tables", "delta.csv", s.to_csv())
    run.write("tables", "delta.json", s.to_json())
    print(f"delta(1) = {vals[0]:.12g}")
    return {"grid": args.grid, "rho_max": args.rho_max}


def cmd_delta_hat(run: Run, args):
    t = np.linspace(0.0, args.tmax, int(round(args.tmax / args.step)) + 1)
    vals = dens.delta_hat(t, cutoff=args.cutoff)
    s = dens.samples("delta_hat", t, vals, run.pipe.basis,
                     tail_bound=dens.delta_hat_tail_error(args.cutoff), quadrature_order=20)
    run.write("tables", "delta_hat.csv", s.to_csv())
    print(f"delta_hat(0) = {vals[0]:.10g}; tail error <= {s.tail_bound:.2e}")
    return {"tmax": args.tmax, "cutoff": args.cutoff, "step": args.step}


def cmd_lcheck(run: Run, args):
    t = np.round(np.arange(-1000, 1001) * 0.01, 12)
    v = 2.0 * specfun.theta_prime(t) + dens.delta_hat(t, cutoff=args.cutoff)
    i = int(np.argmin(v))
    run.write("tables", "lcheck.csv", _csv(["t", "value"], zip(t, v)))
    print(f"min 2theta'+delta_hat = {v[i]:.10g} at t = {t[i]:g}")
    return {"cutoff": args.cutoff}


def cmd_qdelta(run: Run, args):
    res = {}
    if args.radius or not args.triangle:
        res["radius"] = dens.negativity_radius()
        res["weighted_radius"] = dens.weighted_negativity_radius()
    if args.triangle or not args.radius:
        res["triangle_limit"] = dens.triangle_limit()
    x = np.linspace(1e-4, HALF_LOG2 * 2, 2000)
    run.write("tables", "q_delta.csv", _csv(["x", "value"], zip(x, dens.q_delta_additive(x))))
    run.write("tables", "q_delta_constants.json", _json(res))
    for k, v in res.items():
        print(f"{k} = {v:.10g}")
    return {"radius": args.radius, "triangle": args.triangle}


def cmd_epsilon(run: Run, args):
    b = run.pipe.basis
    t = dens.epsilon_terms(b)
    rho = np.linspace(1.0, 2.0, 201)
    s = dens.samples("epsilon", rho, dens.epsilon(rho, b), b, truncation_modes=11,
                     tail_bound=dens.epsilon_tail(11), quadrature_order=dens.INNER_ORDER)
    run.write("tables", "epsilon.csv", s.to_csv())
    run.write("tables", "epsilon_terms.csv", _csv(["n", "t"], enumerate(t)))
    print(f"eps'(1+) = {run.pipe.eps_prime:.10g}")
    return {}


def cmd_qepsilon(run: Run, args):
    b = run.pipe.basis
    x = np.linspace(0.0, 2 * HALF_LOG2, 694)
    vals = dens.chi_norm(x, b, n_modes=args.modes)
    s = dens.samples("chi_norm", x, vals, b, truncation_modes=args.modes,
                     tail_bound=dens.tail_bound(args.modes - 1), quadrature_order=dens.INNER_ORDER)
    run.write("tables", "chi.csv", s.to_csv())
    print(f"Q eps(1) = {dens.q_epsilon(1.0, b, args.modes)[0]:.3g}; tail <= {s.tail_bound:.4g}")
    return {"modes": args.modes}


def cmd_tails(run: Run, args):
    rows = [(n, dens.tail_bound(n)) for n in range(3, args.N + 1)]
    run.write("tables", "tails.csv", _csv(["N", "tail_bound"], rows))
    print(f"tail_bound({args.N}) = {dens.tail_bound(args.N):.6g}")
    return {"N": args.N}


def cmd_toeplitz(run: Run, args):
    s = run.pipe.toeplitz(args.omega, args.half_length, n_top=max(3, args.eig))
    vals, _ = tp.spectrum_top(s, args.eig)
    tag = f"{args.omega:.6g}"
    run.write("spectra", f"toeplitz-{tag}.csv", _csv(["k", "eigenvalue"], enumerate(vals)))
    run.write("spectra", f"symbol-{tag}.csv", _csv(["k", "s_k"], enumerate(s.symbol)))
    print(f"dim = {s.dim}")
    for v in vals:
        print(f"{v:.9g}")
    return {"omega": args.omega, "half_length": args.half_length, "eig": args.eig}


def _omega(args):
    return tp.matched_omega(HALF_LOG2, args.omega) if args.matched else args.omega


def cmd_angles(run: Run, args):
    om = _omega(args)
    r = run.pipe.roots(om, label=args.label)
    run.write("tables", f"angles-{om:.8g}.csv",
              _csv(["j", "alpha", "omega"], [(j + 1, a, om) for j, a in enumerate(r.angles)]))
    print(f"max ||z|-1| = {r.max_deviation:.2e}; distance of -1 to the roots = "
          f"{r.distance_to_minus_one:.3e}")
    print("alpha_1..3 = " + ", ".join(f"{a:.6f}" for a in r.angles[:3]))
    return {"omega": args.omega, "matched": args.matched, "label": args.label}


def cmd_decompose(run: Run, args):
    om = _omega(args)
    d = run.pipe.decomposition(om, label=args.label)
    run.write("tables", f"decomposition-{om:.8g}.csv", tp.decomposition_to_csv(d))
    print(f"lambda_max = {d.lambda_max:.9g}; relative residual = {d.relative_residual:.2e}")
    print("d(1..2) = " + ", ".join(f"{w:.6f}" for w in d.weights[:2]))
    return {"omega": args.omega, "matched": args.matched, "label": args.label}


def cmd_approx(run: Run, args):
    approx = _table_approx(run, args)
    dist = run.pipe.l1(approx)
    run.write("tables", f"approx-m{approx.m}.json", _json({"m": approx.m, "l1": dist}))
    print(f"L1 distance (m={approx.m}) = {dist:.6g}")
    return {"m": args.m, "alphas": args.alphas}


def cmd_model(run: Run, args):
    approx = _table_approx(run, args)
    if args.route == "pn":
        s = run.pipe.model(args.M, approx)
        h = run.pipe.h(approx)
        run.write("spectra", f"model-M{args.M}.csv", mdl.spectrum_to_csv(s))
        print("eigenvalues: " + ", ".join(f"{v:.7g}" for v in s.eigenvalues))
        print(f"c0 = {s.c0:.7g}; |h| = {h.l2_norm:.7g}; compression bound = "
              f"{s.compression_bound:.4g}")
    else:
        r = run.pipe.lemspec(args.N, approx)
        doc = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
               for k, v in r.__dict__.items()}
        run.write("spectra", f"lemspec-N{args.N}.json", _json(doc))
        print(f"e = {r.e:.6g}, e' = {r.e_prime:.6g}, J in [{r.j_min:.4f}, {r.j_max:.4f}], "
              f"r = {r.r:.4f}, s = {r.s:.4f}")
        print(f"beta_2 = {r.beta2:.6g}; lambda_2 <= {r.lambda2_bound:.6g}")
    return {"M": args.M, "route": args.route, "N": args.N, "alphas": args.alphas}


def cmd_certify(run: Run, args):
    if args.reference_inputs:
        lam_max, lam2, ep = 1.05158, 0.772216, 22.9965
    else:
        lam_max = float(run.pipe.model(1733).eigenvalues[0])
        lam2 = run.pipe.lemspec(args.N).lambda2_bound
        ep = run.pipe.eps_prime
    c = cert.assemble_certificate(lam_max, lam2, ep, kappa=args.kappa, eps1=args.eps1, a=args.a)
    run.write("certificates", "certificate.json", c.to_json())
    low = cert.lower_bound_report(lam_max, run.pipe.h().xi0_overlap, ep, args.eps1)
    run.write("certificates", "lower_bound.json", _json(low.__dict__))
    print(c.summary())
    print(f"lower bound chain = {low.chain:.5g}; witness = {low.witness:.5g}")
    return {"a": args.a, "kappa": args.kappa, "eps1": args.eps1, "N": args.N,
            "reference_inputs": args.reference_inputs}


def cmd_report(run: Run, args):
    from . import acceptance
    checks = acceptance.run_all(run.pipe, extended=not args.quick)
    rows = [(c.criterion, c.name, c.value, c.expected, "PASS" if c.passed else "FAIL")
            for c in checks]
    run.write("tables", "report.csv", _csv(["criterion", "check", "value", "expected", "status"],
                                           [(a, f'"{b}"', v, f'"{e}"', s) for a, b, v, e, s in rows]))
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)} of {len(checks)} checks passed")
    run.exit_code = 0 if not failed else 1
    return {"quick": args.quick}


COMMANDS = {
    "prolate": cmd_prolate, "delta": cmd_delta, "delta-hat": cmd_delta_hat, "lcheck": cmd_lcheck,
    "qdelta": cmd_qdelta, "epsilon": cmd_epsilon, "qepsilon": cmd_qepsilon, "tails": cmd_tails,
    "toeplitz": cmd_toeplitz, "angles": cmd_angles, "decompose": cmd_decompose,
    "approx": cmd_approx, "model": cmd_model, "certify": cmd_certify, "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weilpos", description=__doc__)
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--cache-dir", default=None, help="cache directory (default: $WEILPOS_CACHE)")
    ap.add_argument("--no-cache", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prolate")
    p.add_argument("--nmax", type=int, default=12)
    p.add_argument("--lorder", type=int, default=None)
    p = sub.add_parser("delta")
    p.add_argument("--grid", type=int, default=1000)
    p.add_argument("--rho-max", type=float, default=10.0)
    p = sub.add_parser("delta-hat")
    p.add_argument("--tmax", type=float, default=50.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--cutoff", type=float, default=2000.0)
    p = sub.add_parser("lcheck")
    p.add_argument("--cutoff", type=float, default=2000.0)
    p = sub.add_parser("qdelta")
    p.add_argument("--radius", action="store_true")
    p.add_argument("--triangle", action="store_true")
    sub.add_parser("epsilon")
    p = sub.add_parser("qepsilon")
    p.add_argument("--modes", type=int, default=11)
    p = sub.add_parser("tails")
    p.add_argument("--N", type=int, default=10)
    p = sub.add_parser("toeplitz")
    p.add_argument("--omega", type=float, default=1e-3)
    p.add_argument("--half-length", type=float, default=HALF_LOG2)
    p.add_argument("--eig", type=int, default=2)
    for name in ("angles", "decompose"):
        p = sub.add_parser(name)
        p.add_argument("--omega", type=float, default=1.0 / 2000)
        p.add_argument("--matched", action="store_true",
                       help="use the step whose 2m+1 cells tile the interval exactly")
        p.add_argument("--label", choices=("dim", "dim+1"), default="dim")
    for name in ("approx", "model"):
        p = sub.add_parser(name)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--alphas", default=None, help="CSV with columns j,alpha,d")
        p.add_argument("--ds", default=None, help="ignored when --alphas has a d column")
        p.add_argument("--lam", type=float, default=None, help="lambda_max for external tables")
        if name == "model":
            p.add_argument("--M", type=int, default=1733)
            p.add_argument("--route", choices=("pn", "lemspec"), default="pn")
            p.add_argument("--N", type=int, default=2000)
    p = sub.add_parser("certify")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--kappa", type=float, default=cert.KAPPA)
    p.add_argument("--eps1", type=float, default=cert.EPS1)
    p.add_argument("--N", type=int, default=10000)
    p.add_argument("--reference-inputs", action="store_true",
                   help="use lambda_max=1.05158, lambda_2<=0.772216, eps'=22.9965")
    p = sub.add_parser("report")
    p.add_argument("--quick", action="store_true", help="skip the omega=1/5000 and N=10000 runs")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = Run(args)
    run.exit_code = 0
    params = COMMANDS[args.command](run, args)
    run.manifest(args.command, params)
    return run.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
