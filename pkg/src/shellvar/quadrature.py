"""Nested adaptive Gauss-Kronrod quadrature over fibers of the domain family.

Every integral needed by the package (volume, Fourier transform of the
indicator, overlap volumes for the covariogram) has the same shape: the last
coordinate is integrated in closed form over a fiber interval whose half
length comes from the graph height, and the remaining coordinates are
integrated by nested 1-D adaptive rules.  The two innermost adaptive levels
live in a compiled kernel; any further leading coordinates (d >= 4) are
handled by ``scipy.integrate.quad`` around it.

Integrand kinds
---------------
KIND_FT
    orthant integrand ``prod_l cos(2 pi xi_l x_l)`` over ``[0, H]`` fibers;
    multiplying by ``2**d`` gives the transform of the indicator, and
    ``xi = 0`` gives the volume.
KIND_OVERLAP
    the length of the intersection of the fibers of two dilated, translated
    copies ``a*D`` and ``b*D - m``, integrated over the whole space.
"""

import math

import numpy as np
from scipy import integrate

from ._jit import njit

KIND_FT = 0
KIND_OVERLAP = 1

# Kronrod 15 / Gauss 7 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

LIMIT = 2000
MIN_WIDTH_REL = 1e-13
ROUNDOFF = 50 * 2.220446049250313e-16


@njit
def fiber_half_length(omega, blk, mexp, x, k, scale, shift, sgn):
    """Half length of the fiber of ``scale*D - sgn*shift`` along axis ``k``.

    Only ``x[0:k]`` is read; the fiber is centred at ``-sgn*shift[k]``.
    Returns 0 when the prefix lies outside the projection.
    """
    p = blk[k]
    rest = 0.0
    s = 0.0
    acc = 0.0
    cur = 0
    for l in range(k):
        y = (x[l] + sgn * shift[l]) / scale
        v = y ** omega[l]
        b = blk[l]
        if b == p:
            s += v
            continue
        if b != cur:
            rest += acc ** mexp[cur]
            acc = 0.0
            cur = b
        acc += v
    if cur != p:
        rest += acc ** mexp[cur]
    if rest >= 1.0:
        return 0.0
    a = (1.0 - rest) ** (1.0 / mexp[p]) - s
    if a <= 0.0:
        return 0.0
    return scale * a ** (1.0 / omega[k])


@njit
def _fiber_interval(omega, blk, mexp, x, k, kind, a, b, shift):
    """Integration interval for coordinate ``k`` given ``x[0:k]``."""
    if kind == KIND_FT:
        return 0.0, fiber_half_length(omega, blk, mexp, x, k, 1.0, shift, 0.0)
    ha = fiber_half_length(omega, blk, mexp, x, k, a, shift, 0.0)
    hb = fiber_half_length(omega, blk, mexp, x, k, b, shift, 1.0)
    if ha <= 0.0 or hb <= 0.0:
        return 0.0, 0.0
    lo = max(-ha, -shift[k] - hb)
    hi = min(ha, -shift[k] + hb)
    if hi <= lo:
        return 0.0, 0.0
    return lo, hi


@njit
def _innermost(omega, blk, mexp, x, kind, xi, a, b, shift):
    d = x.shape[0]
    lo, hi = _fiber_interval(omega, blk, mexp, x, d - 1, kind, a, b, shift)
    if hi <= lo:
        return 0.0
    if kind == KIND_FT:
        w = xi[d - 1]
        if w == 0.0:
            return hi
        return math.sin(2.0 * math.pi * w * hi) / (2.0 * math.pi * w)
    return hi - lo


@njit
def _weight(kind, xi, k, t):
    if kind == KIND_FT and xi[k] != 0.0:
        return math.cos(2.0 * math.pi * xi[k] * t)
    return 1.0


@njit
def _qk_error(resk, resg, fv, fv2, hl):
    """QUADPACK error scaling of the Kronrod-Gauss difference, plus roundoff floor."""
    mean = 0.5 * resk
    resasc = _WGK[7] * abs(fv[7] - mean)
    resabs = _WGK[7] * abs(fv[7])
    for j in range(7):
        resasc += _WGK[j] * (abs(fv[j] - mean) + abs(fv2[j] - mean))
        resabs += _WGK[j] * (abs(fv[j]) + abs(fv2[j]))
    resasc *= abs(hl)
    resabs *= abs(hl)
    err = abs((resk - resg) * hl)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    # below the floor the estimate is roundoff and bisection cannot help
    floor = ROUNDOFF * resabs
    return max(err, floor), floor


@njit
def _heap_push(heap, key, nh, idx):
    heap[nh] = idx
    j = nh
    while j > 0:
        p = (j - 1) // 2
        if key[heap[p]] >= key[heap[j]]:
            break
        heap[p], heap[j] = heap[j], heap[p]
        j = p
    return nh + 1


@njit
def _heap_pop(heap, key, nh):
    top = heap[0]
    nh -= 1
    heap[0] = heap[nh]
    j = 0
    while True:
        l = 2 * j + 1
        if l >= nh:
            break
        r = l + 1
        c = r if (r < nh and key[heap[r]] > key[heap[l]]) else l
        if key[heap[j]] >= key[heap[c]]:
            break
        heap[c], heap[j] = heap[j], heap[c]
        j = c
    return top, nh


@njit
def _eval_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, t, tol):
    x[k] = t
    v = _innermost(omega, blk, mexp, x, kind, xi, a, b, shift)
    return v * _weight(kind, xi, k, t), 0.0


@njit
def _rule_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, u, v, tol, fv, fv2):
    """Kronrod 15-point rule on [u, v]: (result, error, roundoff floor)."""
    c = 0.5 * (u + v)
    hl = 0.5 * (v - u)
    fc, ec = _eval_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, c, tol)
    fv[7] = fc
    resk = fc * _WGK[7]
    resg = fc * _WG[3]
    einner = ec * _WGK[7]
    for j in range(7):
        dx = hl * _XGK[j]
        f1, e1 = _eval_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, c - dx, tol)
        f2, e2 = _eval_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, c + dx, tol)
        fv[j] = f1
        fv2[j] = f2
        resk += _WGK[j] * (f1 + f2)
        einner += _WGK[j] * (e1 + e2)
        if j % 2 == 1:
            resg += _WG[j // 2] * (f1 + f2)
    err, floor = _qk_error(resk, resg, fv, fv2, hl)
    return resk * hl, err + einner * hl, floor


@njit
def _adapt_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, lo, hi, tol):
    """Globally adaptive integral over coordinate k on [lo, hi] to absolute tol."""
    width = hi - lo
    # inner integrals are weighted by at most 1 and integrated over width
    inner_tol = 0.1 * tol / width
    npan = 1 + int(abs(xi[k]) * width) if kind == KIND_FT else 1
    npan = min(npan, LIMIT // 4)
    A = np.empty(LIMIT)
    B = np.empty(LIMIT)
    R = np.empty(LIMIT)
    E = np.empty(LIMIT)
    heap = np.empty(LIMIT, dtype=np.int64)
    fv = np.empty(8)
    fv2 = np.empty(7)
    nh = 0
    h0 = width / npan
    total_e = 0.0
    for i in range(npan):
        A[i] = lo + i * h0
        B[i] = lo + (i + 1) * h0 if i < npan - 1 else hi
        R[i], E[i], fl = _rule_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift,
                                   A[i], B[i], inner_tol, fv, fv2)
        total_e += E[i]
        if E[i] > fl:
            nh = _heap_push(heap, E, nh, i)
    n = npan
    minw = MIN_WIDTH_REL * width
    while total_e > tol and nh > 0 and n < LIMIT:
        i, nh = _heap_pop(heap, E, nh)
        u = A[i]
        v = B[i]
        if v - u < minw:
            continue
        c = 0.5 * (u + v)
        r1, e1, fl1 = _rule_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, u, c,
                                inner_tol, fv, fv2)
        r2, e2, fl2 = _rule_fiber(omega, blk, mexp, x, k, kind, xi, a, b, shift, c, v,
                                inner_tol, fv, fv2)
        total_e += e1 + e2 - E[i]
        B[i] = c
        R[i] = r1
        E[i] = e1
        A[n] = c
        B[n] = v
        R[n] = r2
        E[n] = e2
        if e1 > fl1:
            nh = _heap_push(heap, E, nh, i)
        if e2 > fl2:
            nh = _heap_push(heap, E, nh, n)
        n += 1
    total = 0.0
    errsum = 0.0
    for i in range(n):
        total += R[i]
        errsum += E[i]
    return total, errsum


@njit
def _eval_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, t, tol):
    x[k] = t
    lo, hi = _fiber_interval(omega, blk, mexp, x, k + 1, kind, a, b, shift)
    if hi <= lo:
        return 0.0, 0.0
    v, e = _adapt_fiber(omega, blk, mexp, x, k + 1, kind, xi, a, b, shift, lo, hi, tol)
    wt = _weight(kind, xi, k, t)
    return v * wt, e * abs(wt)


@njit
def _rule_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, u, v, tol, fv, fv2):
    """Kronrod 15-point rule on [u, v]: (result, error, roundoff floor)."""
    c = 0.5 * (u + v)
    hl = 0.5 * (v - u)
    fc, ec = _eval_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, c, tol)
    fv[7] = fc
    resk = fc * _WGK[7]
    resg = fc * _WG[3]
    einner = ec * _WGK[7]
    for j in range(7):
        dx = hl * _XGK[j]
        f1, e1 = _eval_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, c - dx, tol)
        f2, e2 = _eval_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, c + dx, tol)
        fv[j] = f1
        fv2[j] = f2
        resk += _WGK[j] * (f1 + f2)
        einner += _WGK[j] * (e1 + e2)
        if j % 2 == 1:
            resg += _WG[j // 2] * (f1 + f2)
    err, floor = _qk_error(resk, resg, fv, fv2, hl)
    return resk * hl, err + einner * hl, floor


@njit
def _adapt_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, lo, hi, tol):
    """Globally adaptive integral over coordinate k on [lo, hi] to absolute tol."""
    width = hi - lo
    # inner integrals are weighted by at most 1 and integrated over width
    inner_tol = 0.1 * tol / width
    npan = 1 + int(abs(xi[k]) * width) if kind == KIND_FT else 1
    npan = min(npan, LIMIT // 4)
    A = np.empty(LIMIT)
    B = np.empty(LIMIT)
    R = np.empty(LIMIT)
    E = np.empty(LIMIT)
    heap = np.empty(LIMIT, dtype=np.int64)
    fv = np.empty(8)
    fv2 = np.empty(7)
    nh = 0
    h0 = width / npan
    total_e = 0.0
    for i in range(npan):
        A[i] = lo + i * h0
        B[i] = lo + (i + 1) * h0 if i < npan - 1 else hi
        R[i], E[i], fl = _rule_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift,
                                   A[i], B[i], inner_tol, fv, fv2)
        total_e += E[i]
        if E[i] > fl:
            nh = _heap_push(heap, E, nh, i)
    n = npan
    minw = MIN_WIDTH_REL * width
    while total_e > tol and nh > 0 and n < LIMIT:
        i, nh = _heap_pop(heap, E, nh)
        u = A[i]
        v = B[i]
        if v - u < minw:
            continue
        c = 0.5 * (u + v)
        r1, e1, fl1 = _rule_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, u, c,
                                inner_tol, fv, fv2)
        r2, e2, fl2 = _rule_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, c, v,
                                inner_tol, fv, fv2)
        total_e += e1 + e2 - E[i]
        B[i] = c
        R[i] = r1
        E[i] = e1
        A[n] = c
        B[n] = v
        R[n] = r2
        E[n] = e2
        if e1 > fl1:
            nh = _heap_push(heap, E, nh, i)
        if e2 > fl2:
            nh = _heap_push(heap, E, nh, n)
        n += 1
    total = 0.0
    errsum = 0.0
    for i in range(n):
        total += R[i]
        errsum += E[i]
    return total, errsum


@njit
def tail_integral(omega, blk, mexp, x, kind, xi, a, b, shift, tol):
    """Integral over the last three coordinates with ``x[0:d-3]`` fixed."""
    d = x.shape[0]
    k = d - 3
    lo, hi = _fiber_interval(omega, blk, mexp, x, k, kind, a, b, shift)
    if hi <= lo:
        return 0.0, 0.0
    return _adapt_inner(omega, blk, mexp, x, k, kind, xi, a, b, shift, lo, hi, tol)


def _prefix_integral(arrs, x, k, kind, xi, a, b, shift, tol):
    """Integrate coordinates k..d-1; coordinates below d-3 use scipy quad."""
    omega, blk, mexp = arrs
    d = x.shape[0]
    if k == d - 3:
        return tail_integral(omega, blk, mexp, x, kind, xi, a, b, shift, tol)
    lo, hi = _fiber_interval(omega, blk, mexp, x, k, kind, a, b, shift)
    if hi <= lo:
        return 0.0, 0.0
    inner_tol = 0.1 * tol / (hi - lo)
    errs = []

    def f(t):
        x[k] = t
        v, e = _prefix_integral(arrs, x, k + 1, kind, xi, a, b, shift, inner_tol)
        wt = math.cos(2.0 * math.pi * xi[k] * t) if kind == KIND_FT else 1.0
        errs.append(abs(wt) * e)
        return v * wt

    limit = 200 + 4 * int(abs(xi[k]) * (hi - lo))
    val, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=0.0, limit=limit)
    # the inner errors are spread over the interval; their mean times width bounds them
    inner = (hi - lo) * (sum(errs) / len(errs)) if errs else 0.0
    return val, err + inner


def domain_arrays(domain):
    return (np.asarray(domain.omega, dtype=np.float64),
            np.asarray(domain.block_index, dtype=np.int64),
            np.asarray(domain.m, dtype=np.float64))


def orthant_ft(domain, xi, tol):
    """``(I, err)`` with ``I = int over the positive orthant of D of prod cos``."""
    arrs = domain_arrays(domain)
    d = domain.dim
    xi = np.abs(np.asarray(xi, dtype=np.float64).reshape(d))
    x = np.zeros(d)
    shift = np.zeros(d)
    return _prefix_integral(arrs, x, 0, KIND_FT, xi, 1.0, 1.0, shift, tol)


def overlap_volume(domain, a, b, m, tol):
    """``(vol(a*D intersect (b*D - m)), err)``."""
    arrs = domain_arrays(domain)
    d = domain.dim
    x = np.zeros(d)
    xi = np.zeros(d)
    shift = np.asarray(m, dtype=np.float64).reshape(d).copy()
    return _prefix_integral(arrs, x, 0, KIND_OVERLAP, xi, float(a), float(b), shift, tol)
