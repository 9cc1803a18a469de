"""The Fourier side: transforms of indicators, main terms and Parseval sums.

Every domain of the family is symmetric under each coordinate reflection,
so the transform of its indicator is real and even in each coordinate:

    chi_hat(xi) = 2^d * integral over the positive orthant of prod_l cos(2 pi xi_l x_l).

Mode sums therefore run over representatives with nonnegative coordinates,
weighted by 2^(number of nonzero coordinates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import sici

from . import quadrature
from .domain import DomainSpec, Shell, shell_volume, volume
from .errors import CapExceededError, DomainError
from .geometry import gaussian_curvatures, support_points, surface_integral

FT_CAP = 64.0
DEFAULT_FT_TOL = 1e-9

NUMERIC = "numeric-quadrature"
ASYMPTOTIC = "asymptotic-main-term"


@dataclass(frozen=True)
class ModeClass:
    mode: tuple
    stratum: int
    degenerate: bool


@dataclass(frozen=True)
class SpectralTerm:
    mode: tuple
    transform_value: complex
    main_term: float | None
    method: str
    uncertainty: float = 0.0


def classify_mode(n) -> ModeClass:
    n = tuple(int(v) for v in n)
    j = sum(1 for v in n if v != 0)
    if j == 0:
        raise DomainError("the zero mode has no stratum")
    return ModeClass(n, j, j < len(n))


# ---------------------------------------------------------------- transforms

def ft_indicator(domain: DomainSpec, xi, tol: float = DEFAULT_FT_TOL, cap: float = FT_CAP,
                 with_error: bool = False):
    """Numeric transform of the indicator of D at frequency xi.

    Absolute error target ``tol * vol(D)``.  Frequencies with |xi| > cap are
    refused; the asymptotic path applies there.
    """
    xi = np.asarray(xi, dtype=np.float64).reshape(domain.dim)
    nrm = float(np.linalg.norm(xi))
    if nrm > cap:
        raise CapExceededError("|xi|", nrm, cap, "use the asymptotic main term")
    if nrm == 0.0:
        v, e = volume(domain, with_error=True)
        return (complex(v, 0.0), e) if with_error else complex(v, 0.0)
    scale = 2 ** domain.dim
    v, e = quadrature.orthant_ft(domain, xi, tol * volume(domain) / scale)
    out = complex(scale * v, 0.0)
    return (out, scale * e) if with_error else out


def _graded_rule(lo, hi, width, ng, levels=40, ratio=0.25):
    """Uniform Gauss panels of about ``width`` with geometric grading at hi."""
    L = hi - lo
    if L <= 0:
        return np.zeros(0), np.zeros(0)
    npan = max(1, int(math.ceil(L / width)))
    edges = list(lo + L * np.arange(npan) / npan)
    # refine the last panel geometrically toward the endpoint singularity
    a = edges[-1]
    for _ in range(levels):
        edges.append(a + (hi - a) * (1 - ratio))
        a = edges[-1]
    edges.append(hi)
    e = np.array(edges)
    t, w = np.polynomial.legendre.leggauss(ng)
    mid = 0.5 * (e[1:] + e[:-1])
    half = 0.5 * (e[1:] - e[:-1])
    return (mid[:, None] + half[:, None] * t).ravel(), (half[:, None] * w).ravel()


def ft_indicator_tensor(domain: DomainSpec, xi, ppu: float = 4.0, ng: int = 12) -> float:
    """Independent tensor-product rule for the transform (test oracle).

    Gauss-Legendre panels of width 1/(ppu (1 + |xi|)) with geometric grading
    into each fiber endpoint, closed form in the last coordinate.  Fully
    vectorized; memory grows like (nodes per axis)^(d-1).
    """
    xi = np.abs(np.asarray(xi, dtype=np.float64).reshape(domain.dim))
    d = domain.dim
    width = 1.0 / (ppu * (1.0 + np.linalg.norm(xi)))
    omega = np.asarray(domain.omega, dtype=np.float64)
    blk = np.asarray(domain.block_index, dtype=np.int64)
    mexp = np.asarray(domain.m, dtype=np.float64)
    zero = np.zeros(d)

    def heights(P, k):
        # vectorized fiber half length along axis k given P[:, :k]
        out = np.empty(len(P))
        x = np.zeros(d)
        for i in range(len(P)):
            x[:k] = P[i, :k]
            out[i] = quadrature.fiber_half_length(omega, blk, mexp, x, k, 1.0, zero, 0.0)
        return out

    P = np.zeros((1, 0))
    W = np.ones(1)
    for k in range(d - 1):
        Hk = heights(np.hstack([P, np.zeros((len(P), d - k))]), k) if k else np.ones(1)
        newP, newW = [], []
        for i in range(len(P)):
            nodes, wts = _graded_rule(0.0, Hk[i], width, ng)
            if len(nodes) == 0:
                continue
            newP.append(np.hstack([np.repeat(P[i:i + 1], len(nodes), axis=0), nodes[:, None]]))
            newW.append(W[i] * wts * np.cos(2 * np.pi * xi[k] * nodes))
        P = np.vstack(newP)
        W = np.concatenate(newW)
    Hl = heights(np.hstack([P, np.zeros((len(P), 1))]), d - 1)
    if xi[d - 1] == 0:
        inner = Hl
    else:
        inner = np.sin(2 * np.pi * xi[d - 1] * Hl) / (2 * np.pi * xi[d - 1])
    return float(2 ** d * np.sum(W * inner))


def leading_amplitude(domain: DomainSpec, xi) -> float:
    """a(xi) = K^(-1/2) sin(2 pi x(xi).xi - (d-1) pi/4) / pi."""
    xi = np.asarray(xi, dtype=np.float64).reshape(domain.dim)
    if np.any(xi == 0):
        raise DomainError("leading amplitude needs every coordinate of xi nonzero")
    x = support_points(domain, xi)[0]
    K = float(gaussian_curvatures(domain, x)[0])
    if K <= 0:
        raise DomainError("curvature vanishes at the support point")
    h = float(x @ xi)
    d = domain.dim
    return math.sin(2 * math.pi * h - (d - 1) * math.pi / 4) / (math.pi * math.sqrt(K))


def leading_envelope(domain: DomainSpec, xi) -> float:
    """pi^-1 K^-1/2 |xi|^(-(d+1)/2), the size of the leading term."""
    xi = np.asarray(xi, dtype=np.float64).reshape(domain.dim)
    x = support_points(domain, xi)[0]
    K = float(gaussian_curvatures(domain, x)[0])
    return 1.0 / (math.pi * math.sqrt(K)) * np.linalg.norm(xi) ** (-(domain.dim + 1) / 2)


def asymptotic_gap(domain: DomainSpec, direction, s: float, points: int = 9,
                   tol: float = DEFAULT_FT_TOL) -> float:
    """Largest |chi_hat - a |xi|^-(d+1)/2| over one oscillation period near s,
    relative to the envelope.

    ``direction`` is normalized; the window is s +- P/2 with P = 1/h(direction),
    the period of the leading term in |xi|.
    """
    v = np.asarray(direction, dtype=np.float64)
    v = v / np.linalg.norm(v)
    h = float(support_points(domain, v)[0] @ v)
    period = 1.0 / h
    d = domain.dim
    worst = 0.0
    for sk in s + period * (np.arange(points) / (points - 1) - 0.5):
        xi = sk * v
        num = ft_indicator(domain, xi, tol).real
        lead = leading_amplitude(domain, xi) * sk ** (-(d + 1) / 2)
        worst = max(worst, abs(num - lead) / leading_envelope(domain, xi))
    return worst


def ft_shell(domain: DomainSpec, shell: Shell, n, method: str = NUMERIC,
             tol: float = DEFAULT_FT_TOL, cap: float = FT_CAP) -> complex:
    """Transform of the shell indicator at mode n via the dilation identity."""
    return shell_term(domain, shell, n, method, tol, cap).transform_value


def shell_term(domain: DomainSpec, shell: Shell, n, method: str = NUMERIC,
               tol: float = DEFAULT_FT_TOL, cap: float = FT_CAP) -> SpectralTerm:
    n = np.asarray(n, dtype=np.float64).reshape(domain.dim)
    if not np.any(n):
        raise DomainError("mode must be nonzero")
    d = domain.dim
    mc = classify_mode(n)
    A = main_term_A(domain, shell, n) if not mc.degenerate else None
    if method == NUMERIC:
        ro, ri = shell.outer, shell.inner
        fo, eo = ft_indicator(domain, ro * n, tol, cap, with_error=True)
        fi, ei = ft_indicator(domain, ri * n, tol, cap, with_error=True)
        val = ro ** d * fo - ri ** d * fi
        return SpectralTerm(mc.mode, val, A, NUMERIC, ro ** d * eo + ri ** d * ei)
    if method == ASYMPTOTIC:
        if A is None:
            raise DomainError("degenerate modes have no asymptotic main term")
        # the lower-order remainder has no explicit constant; report its scale
        return SpectralTerm(mc.mode, complex(A, 0.0), A, ASYMPTOTIC, float("nan"))
    raise DomainError(f"unknown method {method!r}")


def main_term_A(domain: DomainSpec, shell: Shell, n) -> float:
    """2/pi r^((d-1)/2) |n|^(-(d+1)/2) K^(-1/2) cos(2 pi r h - (d-1) pi/4) sin(pi t h)."""
    n = np.asarray(n, dtype=np.float64).reshape(domain.dim)
    if np.any(n == 0):
        raise DomainError("main term needs a mode with every coordinate nonzero")
    return float(main_terms(domain, shell, n[None, :])[0])


def _mode_geometry(domain, modes):
    X = support_points(domain, modes)
    K = gaussian_curvatures(domain, X)
    h = np.einsum("ij,ij->i", X, modes)
    return K, h


def main_terms(domain: DomainSpec, shell: Shell, modes) -> np.ndarray:
    modes = np.atleast_2d(np.asarray(modes, dtype=np.float64))
    d = domain.dim
    K, h = _mode_geometry(domain, modes)
    nn = np.linalg.norm(modes, axis=1)
    r, t = shell.r, shell.t
    return (2 / np.pi * r ** ((d - 1) / 2) * nn ** (-(d + 1) / 2) / np.sqrt(K)
            * np.cos(2 * np.pi * r * h - np.pi * (d - 1) / 4) * np.sin(np.pi * t * h))


def xy_summands(domain: DomainSpec, shell: Shell, modes):
    """Per-mode X and Y summands (no multiplicity)."""
    modes = np.atleast_2d(np.asarray(modes, dtype=np.float64))
    d = domain.dim
    K, h = _mode_geometry(domain, modes)
    nn = np.linalg.norm(modes, axis=1)
    r, t = shell.r, shell.t
    X = 2 / np.pi ** 2 * r ** (d - 1) * nn ** (-d - 1) / K * np.sin(np.pi * t * h) ** 2
    Y = X * np.cos(4 * np.pi * r * h - (d - 1) * np.pi / 2)
    return X, Y


# ---------------------------------------------------------- mode enumeration

def orthant_modes(d: int, cutoff: int, shell_index: int | None = None):
    """Nonnegative nonzero modes with |n|_inf <= cutoff, ordered by |n|_inf then lexicographically.

    Returns (modes, multiplicity) where multiplicity = 2^(nonzero count).
    """
    if shell_index is not None:
        ks = [shell_index]
    else:
        ks = range(1, cutoff + 1)
    out = []
    for k in ks:
        for n in product(range(k + 1), repeat=d):
            if max(n) == k:
                out.append(n)
    modes = np.array(out, dtype=np.int64).reshape(-1, d)
    mult = 2 ** np.count_nonzero(modes, axis=1)
    return modes, mult


def full_modes(d: int, cutoff: int):
    """All nonzero modes with |n|_inf <= cutoff, same shell ordering."""
    out = []
    for k in range(1, cutoff + 1):
        for n in product(range(-k, k + 1), repeat=d):
            if max(abs(v) for v in n) == k:
                out.append(n)
    return np.array(out, dtype=np.int64).reshape(-1, d)


# ------------------------------------------------------------ Parseval sums

@dataclass
class ParsevalResult:
    value: float
    by_stratum: dict
    tail_estimate: float
    tail_by_stratum: dict
    cutoff: int
    policy: str
    methods: dict
    skipped: int
    tail_note: str
    terms: list = field(default_factory=list, repr=False)

    @property
    def tail_corrected(self) -> float:
        return self.value + self.tail_estimate


def x_tail_integral(domain: DomainSpec, shell: Shell, radius: float, sup_norm: bool = True,
                    n: int = 64) -> float:
    """Integral-comparison estimate of the X sum beyond ``radius``.

    Sum over modes -> integral over frequencies; the Gauss map turns the
    angular integral weighted by 1/K into a boundary integral, leaving

        2 pi^-2 r^(d-1) int_bd int_R^inf s^-2 sin^2(pi t s h) ds dsigma,

    with h = y.n and R = radius / |n|_inf (sup_norm) or radius.  The radial
    integral is c (sin^2 z / z + pi/2 - Si(2 z)), c = pi t h, z = c R.
    """
    d = domain.dim

    def f(Y, N):
        h = np.einsum("ij,ij->i", Y, N)
        R = radius / np.abs(N).max(axis=1) if sup_norm else np.full(len(Y), radius)
        c = np.pi * shell.t * h
        z = c * R
        si, _ = sici(2 * z)
        return c * (np.sin(z) ** 2 / z + np.pi / 2 - si)

    return 2 / np.pi ** 2 * shell.r ** (d - 1) * surface_integral(domain, f, n)


def _power_tail(k, totals, cutoff):
    """Fit totals ~ C k^-p on the upper half of shells; return (tail, p)."""
    k = np.asarray(k, dtype=np.float64)
    T = np.asarray(totals, dtype=np.float64)
    sel = (k >= max(2, cutoff // 2)) & (T > 0)
    if sel.sum() < 2:
        return 0.0, float("nan")
    slope, icpt = np.polyfit(np.log(k[sel]), np.log(T[sel]), 1)
    p = -slope
    C = math.exp(icpt)
    if p <= 1.0:
        return float("inf"), p
    # sum over k > cutoff ~ integral from cutoff + 1/2
    return C * (cutoff + 0.5) ** (1 - p) / (p - 1), p


def parseval_partial(domain: DomainSpec, shell: Shell, cutoff: int, policy: str = "numeric",
                     tol: float = DEFAULT_FT_TOL, cap: float = FT_CAP,
                     keep_terms: bool = False) -> ParsevalResult:
    """Truncated sum of |chi_hat_shell(n)|^2 over 0 < |n|_inf <= cutoff.

    policy "numeric" evaluates every mode by quadrature and refuses modes
    beyond the cap; "mixed" switches stratum-d modes to the main term when
    (r + t/2)|n| exceeds the cap and skips degenerate ones there.
    """
    if cutoff < 1:
        raise DomainError("cutoff must be at least 1")
    if policy not in ("numeric", "mixed"):
        raise DomainError(f"unknown policy {policy!r}")
    d = domain.dim
    modes, mult = orthant_modes(d, cutoff)
    strata = np.count_nonzero(modes, axis=1)
    ro = shell.outer
    vals = np.zeros(len(modes))
    methods = {NUMERIC: 0, ASYMPTOTIC: 0}
    skipped = 0
    terms = []
    for i, n in enumerate(modes):
        within = ro * np.linalg.norm(n) <= cap
        if within:
            term = shell_term(domain, shell, n, NUMERIC, tol, cap)
        elif policy == "numeric":
            raise CapExceededError("(r+t/2)|n|", ro * float(np.linalg.norm(n)), cap,
                                   "lower the cutoff or use policy 'mixed'")
        elif strata[i] == d:
            term = shell_term(domain, shell, n, ASYMPTOTIC)
        else:
            skipped += 1
            continue
        methods[term.method] += 1
        vals[i] = abs(term.transform_value) ** 2
        if keep_terms:
            terms.append(term)
    weighted = vals * mult
    by_stratum = {j: float(np.sum(weighted[strata == j])) for j in range(1, d + 1)}
    total = float(np.sum(weighted))
    # tail beyond the cutoff
    tail = {}
    tail[d] = x_tail_integral(domain, shell, cutoff + 0.5)
    kinf = modes.max(axis=1)
    for j in range(1, d):
        ks = np.arange(1, cutoff + 1)
        totals = [np.sum(weighted[(kinf == k) & (strata == j)]) for k in ks]
        tail[j], _ = _power_tail(ks, totals, cutoff)
    note = ("stratum-d tail from the integral comparison of the X sum; degenerate strata "
            "tails from power-law fits of shell totals")
    if skipped:
        note += f"; {skipped} degenerate modes above the cap were skipped"
    return ParsevalResult(total, by_stratum, float(sum(tail.values())), tail, cutoff, policy,
                          methods, skipped, note, terms)


# ------------------------------------------------------------- X and Y sums

@dataclass
class XSumResult:
    partial: float
    tail: float
    cutoff: int
    target: float

    @property
    def total(self) -> float:
        return self.partial + self.tail

    @property
    def ratio(self) -> float:
        return self.total / self.target


def _stratum_d_orthant(d, cutoff):
    ax = np.arange(1, cutoff + 1)
    return np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)


def x_sum(domain: DomainSpec, shell: Shell, cutoff: int, tail: bool = True) -> XSumResult:
    """X(r,t) over stratum-d modes with |n|_inf <= cutoff, plus the integral tail."""
    d = domain.dim
    modes = _stratum_d_orthant(d, cutoff)
    X, _ = xy_summands(domain, shell, modes)
    partial = float(2 ** d * np.sum(X))
    tl = x_tail_integral(domain, shell, cutoff + 0.5) if tail else 0.0
    target = volume(domain) * d * shell.r ** (d - 1) * shell.t
    return XSumResult(partial, tl, cutoff, target)


def y_sum(domain: DomainSpec, shell: Shell, cutoff: int) -> float:
    d = domain.dim
    modes = _stratum_d_orthant(d, cutoff)
    _, Y = xy_summands(domain, shell, modes)
    return float(2 ** d * np.sum(Y))


def x_partial(domain: DomainSpec, shell: Shell, cutoff: int) -> float:
    return x_sum(domain, shell, cutoff, tail=False).partial


__all__ = [
    "ModeClass", "SpectralTerm", "classify_mode", "ft_indicator", "ft_indicator_tensor",
    "leading_amplitude", "leading_envelope", "asymptotic_gap", "ft_shell", "shell_term",
    "main_term_A", "main_terms", "xy_summands", "orthant_modes", "full_modes",
    "parseval_partial", "ParsevalResult", "x_sum", "y_sum", "x_tail_integral", "XSumResult",
    "shell_volume",
]
