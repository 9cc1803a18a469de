"""Command line entry point: ``shellvar <subcommand> [flags]``.

Parameters may come from a YAML run config (``--config``); explicit flags
override it.  Every run writes ``<subcommand>_config.json`` with the fully
resolved parameters next to its outputs in ``--out``.

Exit codes: 0 success, 1 a verification failed, 2 bad usage or config,
3 a numeric cap refused the request.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import counting, experiments, exponents, geometry, spectral
from .domain import Shell, load_domain
from .errors import CapExceededError, DomainError, DomainSpecError

DEFAULTS = {
    "common": {"domain": "superball4.cfg", "out": "runs", "workers": 1, "seed": 1},
    "exponents": {"alpha": None, "json": False},
    "geometry": {"directions": None, "random": 0, "eps0": None},
    "count": {"rho": None, "r": None, "t": None, "shift": None, "axis": None, "check": False},
    "spectral": {"r": 2.0, "t": 0.5, "cutoff": 6, "policy": "numeric", "tol": 1e-9},
    "variance": {"r": 2.0, "t": 0.5, "samples": 100_000, "method": "mc", "cutoff": 6,
                 "tol": 1e-8},
    "sweep": {"C": 1.0, "alpha": 2.0, "r_list": "20,40,80", "samples": 100_000},
    "counterexample": {"C": 1.0, "k_list": "8,16,32,64", "samples": 100_000},
    "verify": {"r": 2.0, "t": 0.5, "samples": 100_000, "cutoff": 6},
}


class UsageError(Exception):
    pass


def _floats(text, n=None):
    try:
        vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse numbers from {text!r}") from exc
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} numbers, got {len(vals)} in {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shellvar", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"shellvar {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--domain", help="domain config file or bundled name "
                        "(superball4.cfg, two_block.cfg, flat_faces.cfg, sphere.cfg)")
        sp.add_argument("--config", help="YAML run config; flags override its values")
        sp.add_argument("--out", help="output directory (default: runs)")
        sp.add_argument("--workers", type=int, help="parallel workers (results do not depend on it)")
        sp.add_argument("--seed", type=int, help="RNG seed for shifts and random directions")

    s = sub.add_parser("exponents", help="exact exponent table and admissibility")
    common(s)
    s.add_argument("--alpha", help="thinning exponent to test, e.g. 2 or 5/2")
    s.add_argument("--json", action="store_true", default=None, help="print JSON instead of text")

    s = sub.add_parser("geometry", help="support points, curvature, brackets, level-set curvature")
    common(s)
    s.add_argument("--directions", help="semicolon separated directions, e.g. '1,1,1;1,2,3'")
    s.add_argument("--random", type=int, help="number of random directions to add")
    s.add_argument("--eps0", type=float, help="chart threshold |xi_q|/|xi| (default 1/(2 sqrt d))")

    s = sub.add_parser("count", help="exact lattice point count in a dilate or shell")
    common(s)
    s.add_argument("--rho", type=float, help="dilation factor (single dilate)")
    s.add_argument("--r", type=float, help="shell central radius")
    s.add_argument("--t", type=float, help="shell thickness")
    s.add_argument("--shift", help="shift u as comma separated numbers; random from --seed if absent")
    s.add_argument("--axis", type=int, help="fiber axis, 1-based (default: last)")
    s.add_argument("--check", action="store_true", default=None,
                   help="cross-check against brute force")

    s = sub.add_parser("spectral", help="truncated Parseval sum with per-mode breakdown")
    common(s)
    s.add_argument("--r", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--cutoff", type=int, help="modes with 0 < |n|_inf <= cutoff")
    s.add_argument("--policy", choices=["numeric", "mixed"])
    s.add_argument("--tol", type=float, help="relative quadrature tolerance")

    s = sub.add_parser("variance", help="variance of the shell count by one method")
    common(s)
    s.add_argument("--r", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--samples", type=int)
    s.add_argument("--method", choices=["mc", "covariogram", "parseval"])
    s.add_argument("--cutoff", type=int, help="Parseval cutoff")
    s.add_argument("--tol", type=float, help="covariogram overlap tolerance")

    s = sub.add_parser("sweep", help="variance/volume along t = C r^-alpha")
    common(s)
    s.add_argument("--C", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--r-list", dest="r_list", help="comma separated radii")
    s.add_argument("--samples", type=int)

    s = sub.add_parser("counterexample", help="flat-faced domain with t = C k^-2")
    common(s)
    s.add_argument("--C", type=float)
    s.add_argument("--k-list", dest="k_list", help="comma separated integers >= 4")
    s.add_argument("--samples", type=int)

    s = sub.add_parser("verify", help="Monte Carlo / covariogram / Parseval agreement")
    common(s)
    s.add_argument("--r", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--samples", type=int)
    s.add_argument("--cutoff", type=int)
    return p


def resolve(args) -> dict:
    """Defaults, then the run config, then explicit flags."""
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[args.command])
    if args.config:
        try:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"cannot read run config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("run config must be a mapping")
        unknown = set(data) - set(cfg)
        if unknown:
            raise UsageError(f"unknown run config keys: {', '.join(sorted(unknown))}")
        cfg.update(data)
    for k, v in vars(args).items():
        if k in ("command", "config") or v is None:
            continue
        cfg[k] = v
    cfg["command"] = args.command
    return cfg


def _write_config(cfg: dict, out: Path, domain):
    out.mkdir(parents=True, exist_ok=True)
    rec = dict(cfg)
    rec["domain_spec"] = domain.to_dict()
    rec["version"] = __version__
    (out / f"{cfg['command']}_config.json").write_text(json.dumps(rec, indent=2, default=str))


def _write_csv(path: Path, columns, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


# ---------------------------------------------------------------- commands

def cmd_exponents(cfg, domain, out):
    tab = exponents.exponent_table(domain)
    alpha = Fraction(str(cfg["alpha"])) if cfg["alpha"] is not None else None
    data = tab.to_dict()
    if alpha is not None:
        data["alpha"] = str(alpha)
        data["admissible"] = tab.admissible(alpha)
    (out / "exponents.json").write_text(json.dumps(data, indent=2))
    if cfg["json"]:
        print(json.dumps(data, indent=2))
    else:
        print(exponents.format_table(tab, alpha))
    return 0


def cmd_geometry(cfg, domain, out):
    d = domain.dim
    dirs = []
    if cfg["directions"]:
        dirs = [_floats(chunk, d) for chunk in str(cfg["directions"]).split(";") if chunk.strip()]
    if cfg["random"]:
        rng = np.random.default_rng(cfg["seed"])
        dirs += rng.normal(size=(int(cfg["random"]), d)).tolist()
    if not dirs:
        dirs = [[1.0] * d]
    eps0 = cfg["eps0"] if cfg["eps0"] is not None else geometry.epsilon0(d)
    rows = []
    for xi in dirs:
        xi = np.asarray(xi, dtype=float)
        pt = geometry.support_point(domain, xi)
        q = int(np.argmax(np.abs(xi))) + 1
        lo, hi = geometry.curvature_bounds(domain, xi, q, eps0)
        try:
            kt = geometry.level_set_curvature(domain, xi)
        except DomainError:
            kt = float("nan")
        rows.append([*xi, *pt.location, pt.curvature, q, lo, hi, kt, float(pt.location @ xi)])
    cols = ([f"xi{i}" for i in range(1, d + 1)] + [f"x{i}" for i in range(1, d + 1)]
            + ["K", "q", "lower", "upper", "K_level_set", "h"])
    _write_csv(out / "geometry.csv", cols, rows)
    print(",".join(cols))
    for r in rows:
        print(",".join(f"{v:.10g}" for v in r))
    return 0


def cmd_count(cfg, domain, out):
    d = domain.dim
    if cfg["shift"] is not None:
        u = np.asarray(_floats(cfg["shift"], d))
    else:
        u = np.random.default_rng(cfg["seed"]).random(d) - 0.5
    if cfg["rho"] is not None:
        ro, ri = float(cfg["rho"]), 0.0
    elif cfg["r"] is not None and cfg["t"] is not None:
        sh = Shell(float(cfg["r"]), float(cfg["t"]))
        ro, ri = sh.outer, sh.inner
    else:
        raise UsageError("count needs --rho or both --r and --t")
    res = counting.count(domain, ro, ri, u, axis=cfg["axis"], workers=int(cfg["workers"]))
    rec = {"count": res.count, "radius_outer": ro, "radius_inner": ri, "shift": list(res.shift),
           "fibers_scanned": res.fibers_scanned, "fibers_flagged": res.fibers_flagged,
           "seconds": res.seconds}
    status = 0
    if cfg["check"]:
        t0 = time.perf_counter()
        bf = counting.brute_force_count(domain, ro, u)
        if ri > 0:
            bf -= counting.brute_force_count(domain, ri, u)
        rec["brute_force"] = bf
        rec["brute_force_seconds"] = time.perf_counter() - t0
        if bf != res.count:
            status = 1
    (out / "count.json").write_text(json.dumps(rec, indent=2))
    print(res.count)
    print(f"# fibers {res.fibers_scanned}, {res.seconds:.3f} s", file=sys.stderr)
    if "brute_force" in rec:
        print(f"# brute force {rec['brute_force']}: {'match' if status == 0 else 'MISMATCH'}",
              file=sys.stderr)
    return status


def cmd_spectral(cfg, domain, out):
    sh = Shell(float(cfg["r"]), float(cfg["t"]))
    res = spectral.parseval_partial(domain, sh, int(cfg["cutoff"]), cfg["policy"],
                                    float(cfg["tol"]), keep_terms=True)
    d = domain.dim
    rows = []
    for term in res.terms:
        mc = spectral.classify_mode(term.mode)
        rows.append([*term.mode, mc.stratum, abs(term.transform_value) ** 2, term.method])
    _write_csv(out / "spectral_terms.csv",
               [f"n{i}" for i in range(1, d + 1)] + ["stratum", "abs2", "method"], rows)
    summary = {"sum": res.value, "by_stratum": res.by_stratum, "tail_estimate": res.tail_estimate,
               "tail_by_stratum": res.tail_by_stratum, "tail_corrected": res.tail_corrected,
               "cutoff": res.cutoff, "policy": res.policy, "methods": res.methods,
               "skipped": res.skipped, "tail_note": res.tail_note,
               "note": "rows list orthant representatives; multiplicity 2^stratum"}
    (out / "spectral_summary.json").write_text(json.dumps(summary, indent=2, default=float))
    print(json.dumps(summary, indent=2, default=float))
    return 0


def cmd_variance(cfg, domain, out):
    sh = Shell(float(cfg["r"]), float(cfg["t"]))
    m = cfg["method"]
    if m == "mc":
        est = experiments.mc_variance(domain, sh, int(cfg["samples"]), int(cfg["seed"]),
                                      workers=int(cfg["workers"]))
    elif m == "covariogram":
        est = experiments.covariogram_variance(domain, sh, float(cfg["tol"]))
    else:
        est = experiments.parseval_variance(domain, sh, int(cfg["cutoff"]))
    rec = est.to_dict()
    (out / f"variance_{m}.json").write_text(json.dumps(rec, indent=2, default=float))
    print(json.dumps(rec, indent=2, default=float))
    return 0


def cmd_sweep(cfg, domain, out):
    rs = _floats(cfg["r_list"])
    rows = experiments.theorem_sweep(domain, float(cfg["C"]), float(cfg["alpha"]), rs,
                                     int(cfg["samples"]), int(cfg["seed"]), int(cfg["workers"]))
    experiments.write_report(rows, out / "sweep.csv", experiments.SWEEP_COLUMNS,
                             {**cfg, "domain_spec": domain.to_dict()})
    for r in rows:
        print(", ".join(f"{k}={r[k]}" for k in experiments.SWEEP_COLUMNS))
    return 0


def cmd_counterexample(cfg, domain, out):
    ks = [int(k) for k in _floats(cfg["k_list"])]
    rows, slope = experiments.counterexample_run(float(cfg["C"]), ks, int(cfg["samples"]),
                                                 int(cfg["seed"]), int(cfg["workers"]), domain)
    experiments.write_report(rows, out / "counterexample.csv", experiments.COUNTEREXAMPLE_COLUMNS,
                             {**cfg, "domain_spec": domain.to_dict(), "slope": slope})
    for r in rows:
        print(", ".join(f"{k}={r[k]}" for k in experiments.COUNTEREXAMPLE_COLUMNS))
    print(f"log-log slope of ratio vs k: {slope:.4f}")
    return 0


def cmd_verify(cfg, domain, out):
    sh = Shell(float(cfg["r"]), float(cfg["t"]))
    tri = experiments.oracle_triangle(domain, sh, int(cfg["samples"]), int(cfg["seed"]),
                                      int(cfg["cutoff"]), int(cfg["workers"]))
    rec = {k: tri[k].to_dict() for k in ("mc", "covariogram", "parseval")}
    rec["agree"] = tri["agree"]
    rec["ok"] = tri["ok"]
    (out / "verify.json").write_text(json.dumps(rec, indent=2, default=float))
    for k in ("mc", "covariogram", "parseval"):
        e = tri[k]
        print(f"{k:12s} {e.value:12.6f} +- {e.stderr:.3g}")
    for k, v in tri["agree"].items():
        print(f"{k:22s} {'agree' if v else 'DISAGREE'}")
    return 0 if tri["ok"] else 1


COMMANDS = {
    "exponents": cmd_exponents, "geometry": cmd_geometry, "count": cmd_count,
    "spectral": cmd_spectral, "variance": cmd_variance, "sweep": cmd_sweep,
    "counterexample": cmd_counterexample, "verify": cmd_verify,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        if args.command == "counterexample" and args.domain is None and "domain" not in (
                yaml.safe_load(Path(args.config).read_text()) if args.config else {}):
            cfg["domain"] = "flat_faces.cfg"
        domain = load_domain(cfg["domain"])
        out = Path(cfg["out"])
        _write_config(cfg, out, domain)
        return COMMANDS[args.command](cfg, domain, out)
    except (UsageError, DomainSpecError) as exc:
        print(f"shellvar: error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"shellvar: error: {exc}", file=sys.stderr)
        return 2
    except CapExceededError as exc:
        print(f"shellvar: refused: {exc} (cap {exc.cap_name})", file=sys.stderr)
        return 3


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
