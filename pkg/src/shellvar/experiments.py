"""End-to-end runs: Monte Carlo variance, the covariogram oracle, sweeps.

Reports are CSV files opened in append mode, each with a JSON sidecar that
records the resolved configuration of every run appended to it.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .counting import shell_counts
from .domain import DomainSpec, Shell, flat_faces, shell_volume, volume
from .errors import CapExceededError, DomainError
from .exponents import exponent_table
from .quadrature import overlap_volume
from .spectral import parseval_partial

MIN_SAMPLES = 100
COVARIOGRAM_CAP = 4.0


@dataclass
class VarianceEstimate:
    value: float
    stderr: float
    samples: int
    seed: int | None
    method: str
    shell_volume: float
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.value / self.shell_volume

    def to_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------ Monte Carlo

def mc_variance(domain: DomainSpec, shell: Shell, samples: int, seed: int,
                workers: int = 1, axis=None, backend=None) -> VarianceEstimate:
    """Mean of (N(u_i) - vol)^2 over counter-based uniform shifts u_i."""
    if samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples")
    t0 = time.perf_counter()
    counts = shell_counts(domain, shell, seed, samples, workers=workers, axis=axis,
                          backend=backend)
    V = shell_volume(domain, shell)
    dev2 = (counts - V) ** 2
    n = len(counts)
    # np.sum reduces pairwise in a fixed order, so the value is reproducible
    value = float(np.sum(dev2) / n)
    stderr = float(np.std(dev2, ddof=1) / math.sqrt(n))
    mean = float(np.sum(counts) / n)
    mean_se = float(np.std(counts, ddof=1) / math.sqrt(n))
    extra = {
        "mean_count": mean,
        "mean_stderr": mean_se,
        "max_count": int(counts.max()),
        "seconds": time.perf_counter() - t0,
        "workers": workers,
    }
    return VarianceEstimate(value, stderr, n, int(seed), "monte-carlo", V, extra)


# ------------------------------------------------------------ covariogram

def covariogram_variance(domain: DomainSpec, shell: Shell, tol: float = 1e-8,
                         cap: float = COVARIOGRAM_CAP) -> VarianceEstimate:
    """sum_m vol(A cap (A - m)) - vol(A)^2 for the shell A.

    With A = O minus I, the overlap splits as g_OO - g_OI - g_IO + g_II,
    each an intersection of two convex dilates.  Symmetry gives
    g_IO(m) = g_OI(m) and evenness in each coordinate of m; the m = 0 term
    is vol(A).  ``tol`` is the absolute tolerance per overlap volume; the
    reported stderr is the sum of the quadrature error estimates.
    """
    if shell.outer > cap:
        raise CapExceededError("r+t/2", shell.outer, cap, "covariogram cost grows like r^d")
    t0 = time.perf_counter()
    d = domain.dim
    a, b = shell.outer, shell.inner
    V = shell_volume(domain, shell)
    M = int(math.ceil(2 * a))
    total = V
    err = 0.0
    nint = 0
    ax = np.arange(M + 1)
    grid = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    for m in grid:
        if not m.any():
            continue
        mult = 2 ** int(np.count_nonzero(m))
        g = 0.0
        e = 0.0
        for (s1, s2, w) in ((a, a, 1.0), (a, b, -2.0), (b, b, 1.0)):
            # the boxes [-s1, s1]^d and [-s2, s2]^d - m must overlap
            if np.any(m >= s1 + s2):
                continue
            v, ev = overlap_volume(domain, s1, s2, m, tol)
            nint += 1
            g += w * v
            e += abs(w) * ev
        total += mult * g
        err += mult * e
    value = total - V * V
    extra = {"overlaps": nint, "seconds": time.perf_counter() - t0, "tol": tol}
    return VarianceEstimate(float(value), float(err), 0, None, "covariogram", V, extra)


def parseval_variance(domain: DomainSpec, shell: Shell, cutoff: int, policy: str = "numeric",
                      tol: float = 1e-9) -> VarianceEstimate:
    """Truncated Parseval sum; the stated uncertainty is the tail estimate."""
    t0 = time.perf_counter()
    res = parseval_partial(domain, shell, cutoff, policy, tol)
    V = shell_volume(domain, shell)
    extra = {
        "cutoff": cutoff,
        "policy": policy,
        "by_stratum": {str(k): v for k, v in res.by_stratum.items()},
        "tail_by_stratum": {str(k): v for k, v in res.tail_by_stratum.items()},
        "tail_corrected": res.tail_corrected,
        "tail_note": res.tail_note,
        "seconds": time.perf_counter() - t0,
    }
    return VarianceEstimate(res.value, abs(res.tail_estimate), 0, None, "parseval", V, extra)


def agree(e1: VarianceEstimate, e2: VarianceEstimate, k: float = 3.0) -> bool:
    return abs(e1.value - e2.value) <= k * math.hypot(e1.stderr, e2.stderr)


def oracle_triangle(domain: DomainSpec, shell: Shell, samples: int = 100_000, seed: int = 1,
                    cutoff: int = 6, workers: int = 1) -> dict:
    mc = mc_variance(domain, shell, samples, seed, workers=workers)
    cov = covariogram_variance(domain, shell)
    par = parseval_variance(domain, shell, cutoff)
    pairs = {
        "mc-covariogram": agree(mc, cov),
        "mc-parseval": agree(mc, par),
        "covariogram-parseval": agree(cov, par),
    }
    return {"mc": mc, "covariogram": cov, "parseval": par, "agree": pairs,
            "ok": all(pairs.values())}


# ------------------------------------------------------------------ sweeps

def _admissibility(domain: DomainSpec, alpha):
    tab = exponent_table(domain)
    ok = tab.admissible(Fraction(alpha).limit_denominator(10 ** 6))
    label = "admissible" if ok else f"inadmissible (threshold {tab.threshold})"
    return tab, ok, label


def theorem_sweep(domain: DomainSpec, C: float, alpha: float, r_list, samples: int, seed: int,
                  workers: int = 1) -> list[dict]:
    """MC variance along t = C r^-alpha for each r."""
    tab, ok, label = _admissibility(domain, alpha)
    d = domain.dim
    limit_target = None
    if abs(alpha - (d - 1)) < 1e-12 and tab.remark13_applicable:
        limit_target = volume(domain) * d * C
    rows = []
    for r in r_list:
        t = C * r ** (-alpha)
        shell = Shell(float(r), float(t))
        est = mc_variance(domain, shell, samples, seed, workers=workers)
        V = est.shell_volume
        mean, mse = est.extra["mean_count"], est.extra["mean_stderr"]
        rows.append({
            "r": float(r),
            "t": t,
            "variance": est.value,
            "stderr": est.stderr,
            "shell_volume": V,
            "ratio": est.value / V,
            "target": limit_target if limit_target is not None else float("nan"),
            "admissible": label,
            "mean_count": mean,
            "mean_stderr": mse,
            "expectation_ok": abs(mean - V) <= 3 * mse,
            "seconds": est.extra["seconds"],
        })
    return rows


def loglog_slope(x, y) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)


def counterexample_run(C: float, k_list, samples: int, seed: int, workers: int = 1,
                       domain: DomainSpec | None = None) -> tuple[list[dict], float]:
    """Variance vs volume for x1^6 + x2^6 + x3^10 <= 1 with r = k, t = C k^-2."""
    domain = flat_faces() if domain is None else domain
    rows = []
    for k in k_list:
        if int(k) != k or k < 4:
            raise DomainError("k must be an integer >= 4")
        t = C * k ** -2.0
        shell = Shell(float(k), t)
        est = mc_variance(domain, shell, samples, seed, workers=workers)
        rows.append({
            "k": int(k),
            "t": t,
            "variance": est.value,
            "stderr": est.stderr,
            "volume": est.shell_volume,
            "volume_formula": volume(domain) * (3 * C + 2 * (t / 2) ** 3),
            "ratio": est.value / est.shell_volume,
            "k^(2/5)": k ** 0.4,
            "mean_count": est.extra["mean_count"],
            "mean_stderr": est.extra["mean_stderr"],
            "seconds": est.extra["seconds"],
        })
    slope = loglog_slope([r["k"] for r in rows], [r["ratio"] for r in rows]) if len(rows) > 1 \
        else float("nan")
    return rows, slope


# ---------------------------------------------------------------- reports

SWEEP_COLUMNS = ["r", "t", "variance", "stderr", "shell_volume", "ratio", "target", "admissible"]
COUNTEREXAMPLE_COLUMNS = ["k", "t", "variance", "volume", "ratio", "k^(2/5)"]


def write_report(rows: list[dict], path, columns, config: dict) -> Path:
    """Append rows to a CSV (header on creation) and a run record to its sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists()
    with path.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        if new:
            w.writeheader()
        for row in rows:
            w.writerow(row)
    side = path.with_suffix(path.suffix + ".json")
    runs = json.loads(side.read_text())["runs"] if side.exists() else []
    runs.append({"version": __version__, "rows": len(rows), "config": config,
                 "data": [{k: _jsonable(v) for k, v in r.items()} for r in rows]})
    side.write_text(json.dumps({"csv": path.name, "columns": columns, "runs": runs},
                               indent=2, default=_jsonable))
    return path


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v
