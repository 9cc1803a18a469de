"""Exact lattice point counts in shifted dilates and shells.

Counting runs over fibers parallel to one axis (the last by default).  For
each integer point of the remaining coordinates the fiber is an interval
whose half length follows from the closed-form graph height, so the number
of lattice points on it is a difference of a floor and a ceiling.

Every fiber computes its endpoints twice, once with the height pushed out by
a rigorous float error bound plus 1e-9 and once pulled in by the same amount.
When the two integer counts differ the fiber is flagged, and the points on
it are decided one by one: float evaluation of F with a margin first, exact
rational arithmetic when that is inconclusive.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _jit
from ._jit import njit
from .domain import DomainSpec, Shell, defining_value
from .errors import CapExceededError, DomainError

SUM_ERR = 1e-12       # bound on the float error of block sums of values <= ~d
EDGE_MARGIN = 1e-9    # distance to an integer below which an endpoint is a tie
MEMBER_MARGIN = 1e-10
BRUTE_FORCE_CAP = 12.0


@dataclass(frozen=True)
class CountResult:
    count: int
    radius_outer: float
    radius_inner: float
    shift: tuple
    fibers_scanned: int
    fibers_flagged: int = 0
    seconds: float = 0.0


# ------------------------------------------------------------------ kernels

@njit
def _fiber_bounds(Sblk, nb, p, mexp, om, rho, uq):
    """Certain-inside and possibly-inside integer counts on one fiber.

    ``Sblk`` holds the block sums of the other coordinates scaled by rho.
    Returns (count_lo, count_hi, kmin, kmax) where [kmin, kmax] spans every
    integer that might lie in the fiber.
    """
    rest = 0.0
    for j in range(nb):
        if j != p:
            v = Sblk[j]
            rest += v if mexp[j] == 1.0 else v ** mexp[j]
    base = 1.0 - rest
    dl = SUM_ERR
    if base <= -dl:
        return 0, 0, 1, 0
    s = Sblk[p]
    if mexp[p] == 1.0:
        a = base - s
        da = 2.0 * dl
    else:
        bh = (base + dl) ** (1.0 / mexp[p])
        bl = max(base - dl, 0.0) ** (1.0 / mexp[p])
        a = base ** (1.0 / mexp[p]) - s if base > 0.0 else -s
        da = max(bh - a - s, a + s - bl) + dl
    if a + da <= 0.0:
        return 0, 0, 1, 0
    inv = 1.0 / om
    if a > 1e-6:
        H = a ** inv
        # first-order bound, doubled; the relative error da/a is below 1e-5 here
        eH = 2.0 * (da / a) * H * inv + 1e-15
        Hhi = H + eH
        Hlo = H - eH
    else:
        Hhi = (a + da) ** inv
        Hlo = (a - da) ** inv if a - da > 0.0 else -1.0
    R = rho * Hhi + EDGE_MARGIN
    kmin = math.ceil(-R - uq)
    kmax = math.floor(R - uq)
    chi = kmax - kmin + 1
    if chi < 0:
        chi = 0
    if Hlo < 0.0:
        clo = 0
    else:
        r = rho * Hlo - EDGE_MARGIN
        clo = math.floor(r - uq) - math.ceil(-r - uq) + 1
        if clo < 0:
            clo = 0
    return clo, chi, kmin, kmax


@njit
def _tables(omega, others, u, rho, lo, n):
    m = others.shape[0]
    T = np.empty((m, n))
    for i in range(m):
        l = others[i]
        for j in range(n):
            y = (lo[i] + j + u[l]) / rho
            T[i, j] = y ** omega[l]
    return T


@njit
def count_kernel(omega, blk, mexp, q, rho_o, rho_i, u, first_lo, first_hi):
    """Fused fiber pass; returns (outer - inner count, flagged fibers, fibers).

    ``rho_i <= 0`` counts the single dilate ``rho_o``.  The first non-fiber
    coordinate is restricted to integers in [first_lo, first_hi].
    """
    d = omega.shape[0]
    nb = mexp.shape[0]
    others = np.empty(d - 1, dtype=np.int64)
    j = 0
    for l in range(d):
        if l != q:
            others[j] = l
            j += 1
    m = d - 1
    lo = np.empty(m, dtype=np.int64)
    hi = np.empty(m, dtype=np.int64)
    n = 0
    for i in range(m):
        l = others[i]
        lo[i] = math.ceil(-rho_o - u[l])
        hi[i] = math.floor(rho_o - u[l])
        if hi[i] - lo[i] + 1 > n:
            n = hi[i] - lo[i] + 1
    if first_lo > lo[0]:
        first_lo_eff = first_lo
    else:
        first_lo_eff = lo[0]
    first_hi_eff = min(first_hi, hi[0])
    if first_hi_eff < first_lo_eff or n <= 0:
        return 0, 0, 0
    To = _tables(omega, others, u, rho_o, lo, n)
    has_inner = rho_i > 0.0
    if has_inner:
        Ti = _tables(omega, others, u, rho_i, lo, n)
    else:
        Ti = To
    pq = blk[q]
    omq = omega[q]
    uq = u[q]
    So = np.zeros(nb)
    Si = np.zeros(nb)
    idx = lo.copy()
    idx[0] = first_lo_eff
    total = 0
    nflag = 0
    nfib = 0
    while True:
        for b in range(nb):
            So[b] = 0.0
            Si[b] = 0.0
        for i in range(m):
            b = blk[others[i]]
            k = idx[i] - lo[i]
            So[b] += To[i, k]
            if has_inner:
                Si[b] += Ti[i, k]
        nfib += 1
        clo, chi, _, _ = _fiber_bounds(So, nb, pq, mexp, omq, rho_o, uq)
        if clo != chi:
            nflag += 1
        total += clo
        if has_inner and chi > 0:
            ilo, ihi, _, _ = _fiber_bounds(Si, nb, pq, mexp, omq, rho_i, uq)
            if ilo != ihi:
                nflag += 1
            total -= ilo
        # odometer over the non-fiber coordinates, last index fastest
        i = m - 1
        while i >= 0:
            idx[i] += 1
            top = first_hi_eff if i == 0 else hi[i]
            if idx[i] <= top:
                break
            idx[i] = lo[i] if i > 0 else first_lo_eff
            i -= 1
        if i < 0:
            break
    return total, nflag, nfib


@njit
def mc_kernel(omega, blk, mexp, q, rho_o, rho_i, U, out, flags):
    """Shell counts for each row of U (shifts), written to ``out``."""
    big = 1 << 40
    for s in range(U.shape[0]):
        c, f, _ = count_kernel(omega, blk, mexp, q, rho_o, rho_i, U[s], -big, big)
        out[s] = c
        flags[s] = f


# ------------------------------------------------------------ numpy twin

def _fiber_bounds_np(Sblk, p, mexp, om, rho, uq):
    """Vectorized ``_fiber_bounds`` over rows of Sblk (same formulas)."""
    nb = Sblk.shape[1]
    rest = np.zeros(len(Sblk))
    for j in range(nb):
        if j != p:
            v = Sblk[:, j]
            rest += v if mexp[j] == 1.0 else v ** mexp[j]
    base = 1.0 - rest
    dl = SUM_ERR
    s = Sblk[:, p]
    with np.errstate(invalid="ignore", divide="ignore"):
        if mexp[p] == 1.0:
            a = base - s
            da = np.full_like(a, 2.0 * dl)
        else:
            bh = (base + dl).clip(min=0) ** (1.0 / mexp[p])
            bl = np.maximum(base - dl, 0.0) ** (1.0 / mexp[p])
            a = np.where(base > 0, np.maximum(base, 0) ** (1.0 / mexp[p]) - s, -s)
            da = np.maximum(bh - a - s, a + s - bl) + dl
        inv = 1.0 / om
        big = a > 1e-6
        H = np.where(big, np.maximum(a, 0) ** inv, 0.0)
        eH = np.where(big, 2.0 * (da / np.where(big, a, 1.0)) * H * inv + 1e-15, 0.0)
        Hhi = np.where(big, H + eH, np.maximum(a + da, 0.0) ** inv)
        Hlo = np.where(big, H - eH, np.where(a - da > 0, np.maximum(a - da, 0.0) ** inv, -1.0))
    dead = (base <= -dl) | (a + da <= 0.0)
    R = rho * Hhi + EDGE_MARGIN
    kmin = np.ceil(-R - uq).astype(np.int64)
    kmax = np.floor(R - uq).astype(np.int64)
    chi = np.maximum(kmax - kmin + 1, 0)
    r = rho * Hlo - EDGE_MARGIN
    clo = np.where(Hlo < 0, 0, np.maximum(np.floor(r - uq) - np.ceil(-r - uq) + 1, 0)).astype(np.int64)
    chi = np.where(dead, 0, chi)
    clo = np.where(dead, 0, clo)
    return clo, chi, kmin, kmax


def _fiber_grid(d, q, rho_o, u, first_lo=None, first_hi=None):
    others = [l for l in range(d) if l != q]
    ranges = []
    for i, l in enumerate(others):
        lo = math.ceil(-rho_o - u[l])
        hi = math.floor(rho_o - u[l])
        if i == 0:
            if first_lo is not None:
                lo = max(lo, first_lo)
            if first_hi is not None:
                hi = min(hi, first_hi)
        ranges.append(np.arange(lo, hi + 1))
    if any(len(r) == 0 for r in ranges):
        return others, np.zeros((0, d - 1), dtype=np.int64)
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d - 1)
    return others, grid


def _block_sums_scaled(domain, others, grid, u, rho):
    nb = domain.n_blocks
    S = np.zeros((len(grid), nb))
    for i, l in enumerate(others):
        S[:, domain.block_index[l]] += ((grid[:, i] + u[l]) / rho) ** domain.omega[l]
    return S


def _member(domain: DomainSpec, n, u, rho) -> bool:
    """Exact test of F((n + u)/rho) <= 1 for one integer point."""
    x = (np.asarray(n, dtype=np.float64) + u) / rho
    f = defining_value(domain, x)
    if abs(f - 1.0) > MEMBER_MARGIN:
        return f < 1.0
    rho_f = Fraction(float(rho))
    y = [(Fraction(int(ni)) + Fraction(float(ui))) / rho_f for ni, ui in zip(n, u)]
    total = Fraction(0)
    for p, (s, e) in enumerate(domain.blocks):
        bs = sum((y[l] ** domain.inner_exponents[l] for l in range(s - 1, e)), Fraction(0))
        total += bs ** domain.outer_exponents[p]
    return total <= 1


def _count_numpy(domain, q, rho, u, first_lo=None, first_hi=None):
    """(count, flagged, fibers) for one dilate with exact tie resolution."""
    d = domain.dim
    others, grid = _fiber_grid(d, q, rho, u, first_lo, first_hi)
    if len(grid) == 0:
        return 0, 0, 0
    S = _block_sums_scaled(domain, others, grid, u, rho)
    p = int(domain.block_index[q])
    clo, chi, kmin, kmax = _fiber_bounds_np(S, p, domain.m, domain.omega[q], rho, u[q])
    total = int(clo.sum())
    flagged = np.nonzero(clo != chi)[0]
    for f in flagged:
        # certain points are exactly the clo central ones; test every candidate
        total -= int(clo[f])
        for k in range(int(kmin[f]), int(kmax[f]) + 1):
            n = np.insert(grid[f], q, k)
            if _member(domain, n, u, rho):
                total += 1
    return total, len(flagged), len(grid)


# -------------------------------------------------------------- public API

def _check_shift(domain, u):
    if u is None:
        return np.zeros(domain.dim)
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.shape != (domain.dim,):
        raise DomainError(f"shift must have {domain.dim} components")
    return u


def _axis(domain, axis):
    q = domain.dim if axis is None else int(axis)
    if not 1 <= q <= domain.dim:
        raise DomainError(f"fiber axis {axis} outside 1..{domain.dim}")
    return q - 1


def _chunks(lo, hi, k):
    n = hi - lo + 1
    k = max(1, min(k, n))
    edges = [lo + (n * i) // k for i in range(k + 1)]
    return [(edges[i], edges[i + 1] - 1) for i in range(k) if edges[i + 1] > edges[i]]


def _count_pair(domain, rho_o, rho_i, u, q, workers, backend):
    """Fused (outer - inner) count; rho_i = 0 for a single dilate."""
    d = domain.dim
    first = 0 if q != 0 else 1
    lo = math.ceil(-rho_o - u[first])
    hi = math.floor(rho_o - u[first])
    if hi < lo:
        return 0, 0, 0
    parts = _chunks(lo, hi, workers)
    use_numba = (backend or ("numba" if _jit.USE_NUMBA else "numpy")) == "numba"
    omega = np.asarray(domain.omega, dtype=np.float64)
    blk = np.asarray(domain.block_index, dtype=np.int64)
    mexp = np.asarray(domain.m, dtype=np.float64)

    def run(rng):
        a, b = rng
        if use_numba:
            c, fl, nf = count_kernel(omega, blk, mexp, q, rho_o, rho_i, u, a, b)
            if fl == 0:
                return c, 0, nf
        co, flo, nf = _count_numpy(domain, q, rho_o, u, a, b)
        ci, fli = (0, 0)
        if rho_i > 0:
            ci, fli, _ = _count_numpy(domain, q, rho_i, u, a, b)
        return co - ci, flo + fli, nf

    if len(parts) == 1 or workers <= 1:
        results = [run(r) for r in parts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, parts))
    del d
    return (sum(r[0] for r in results), sum(r[1] for r in results), sum(r[2] for r in results))


def count(domain: DomainSpec, rho_outer: float, rho_inner: float = 0.0, u=None,
          axis=None, workers: int = 1, backend=None) -> CountResult:
    """Count #{n : gauge(n+u) <= rho_outer} - #{n : gauge(n+u) <= rho_inner}."""
    if not rho_outer > 0:
        raise DomainError("radius must be positive")
    if rho_inner < 0 or rho_inner > rho_outer:
        raise DomainError("inner radius must lie in [0, outer radius]")
    u = _check_shift(domain, u)
    q = _axis(domain, axis)
    t0 = time.perf_counter()
    c, fl, nf = _count_pair(domain, float(rho_outer), float(rho_inner), u, q, workers, backend)
    return CountResult(int(c), float(rho_outer), float(rho_inner), tuple(u.tolist()), nf, fl,
                       time.perf_counter() - t0)


def count_dilate(domain: DomainSpec, rho: float, u=None, **kw) -> int:
    return count(domain, rho, 0.0, u, **kw).count


def count_shell(domain: DomainSpec, shell: Shell, u=None, **kw) -> int:
    return count(domain, shell.outer, shell.inner, u, **kw).count


def brute_force_count(domain: DomainSpec, rho: float, u=None, cap: float = BRUTE_FORCE_CAP) -> int:
    """Scan the whole box [-ceil(rho)-1, ceil(rho)+1]^d; D lies in the unit cube."""
    if rho > cap:
        raise CapExceededError("rho", rho, cap, "brute force is a small-radius oracle")
    if not rho > 0:
        raise DomainError("radius must be positive")
    u = _check_shift(domain, u)
    d = domain.dim
    R = math.ceil(rho) + 1
    ax = np.arange(-R, R + 1)
    pts = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    f = defining_value(domain, (pts + u) / rho)
    total = int(np.sum(f < 1.0 - MEMBER_MARGIN))
    for i in np.nonzero(np.abs(f - 1.0) <= MEMBER_MARGIN)[0]:
        total += _member(domain, pts[i], u, rho)
    return total


def brute_force_shell(domain: DomainSpec, shell: Shell, u=None) -> int:
    return brute_force_count(domain, shell.outer, u) - brute_force_count(domain, shell.inner, u)


# ---------------------------------------------------------- shift sampling

def philox_shifts(seed: int, start: int, stop: int, d: int) -> np.ndarray:
    """Shifts for sample indices [start, stop), uniform on [-1/2, 1/2)^d.

    Sample i uses the i-th group of d doubles of a Philox stream keyed by
    ``seed``; the generator is advanced to the block, so any chunk can be
    produced independently.
    """
    bg = np.random.Philox(key=int(seed))
    k = start * d
    # each counter step yields four 64-bit words, one per double
    bg.advance(k // 4)
    g = np.random.Generator(bg)
    skip = k % 4
    if skip:
        g.random(skip)
    return g.random((stop - start, d)) - 0.5


def shell_counts(domain: DomainSpec, shell: Shell, seed: int, samples: int,
                 workers: int = 1, axis=None, backend=None, chunk: int = 2048) -> np.ndarray:
    """Counts N(u_i) for i < samples; identical for any worker count."""
    q = _axis(domain, axis)
    d = domain.dim
    use_numba = (backend or ("numba" if _jit.USE_NUMBA else "numpy")) == "numba"
    omega = np.asarray(domain.omega, dtype=np.float64)
    blk = np.asarray(domain.block_index, dtype=np.int64)
    mexp = np.asarray(domain.m, dtype=np.float64)
    bounds = [(a, min(a + chunk, samples)) for a in range(0, samples, chunk)]

    def run(b):
        a, e = b
        U = philox_shifts(seed, a, e, d)
        out = np.empty(e - a, dtype=np.int64)
        if use_numba:
            flags = np.empty(e - a, dtype=np.int64)
            mc_kernel(omega, blk, mexp, q, shell.outer, shell.inner, U, out, flags)
            redo = np.nonzero(flags)[0]
        else:
            redo = np.arange(e - a)
        for s in redo:
            co, _, _ = _count_numpy(domain, q, shell.outer, U[s])
            ci, _, _ = _count_numpy(domain, q, shell.inner, U[s])
            out[s] = co - ci
        return out

    if workers <= 1:
        parts = [run(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, bounds))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
