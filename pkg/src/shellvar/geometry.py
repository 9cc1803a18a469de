"""Differential geometry of the boundary: support points, curvature, caps.

Axis indices (``q``, ``chart_axis``) are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    DomainSpec,
    defining_gradient,
    defining_hessian,
    defining_value,
    gauge,
    gauge_many,
)
from .errors import ConvergenceError, DomainError

# the ratio |xi_q|/|xi| that guarantees a usable chart along axis q
def epsilon0(d: int) -> float:
    return 1.0 / (2.0 * math.sqrt(d))


@dataclass(frozen=True)
class SurfacePoint:
    location: np.ndarray
    normal: np.ndarray
    curvature: float
    chart_axis: int

    @property
    def support_value(self) -> float:
        return float(self.location @ self.normal)


# ------------------------------------------------------------ support points

def _solve_block_mu(L, logm, mexp, logc, beta, iters=60):
    """Solve log m + (m-1) log S(s) + s = L for s = log mu, batched.

    ``logc``/``beta`` have shape (N, k); entries with logc = -inf drop out.
    Returns s, log S(s) and d(log S)/ds.
    """
    with np.errstate(invalid="ignore"):
        s0 = (L[:, None] - logm - (mexp - 1) * logc) / (1 + (mexp - 1) * beta)
    s0 = np.where(np.isfinite(logc), s0, np.inf)
    s = s0.min(axis=1)
    # each single-term root lies right of the true root; Newton from the
    # right on a convex increasing function converges monotonically
    for _ in range(iters):
        e = logc + beta * s[:, None]
        emax = e.max(axis=1, keepdims=True)
        w = np.exp(e - emax)
        S = w.sum(axis=1)
        logS = np.log(S) + emax[:, 0]
        rho = (w * beta).sum(axis=1) / S
        g = logm + (mexp - 1) * logS + s - L
        gp = (mexp - 1) * rho + 1.0
        step = g / gp
        s = s - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(s))):
            break
    e = logc + beta * s[:, None]
    emax = e.max(axis=1, keepdims=True)
    w = np.exp(e - emax)
    S = w.sum(axis=1)
    logS = np.log(S) + emax[:, 0]
    rho = (w * beta).sum(axis=1) / S
    return s, logS, rho


def support_points(domain: DomainSpec, xi, max_iter: int = 200) -> np.ndarray:
    """Maximizers x(xi) of xi.x over D for each row of ``xi`` (batched).

    The Lagrange conditions decouple by block: for coordinate l of block p,
    x_l = (mu_p |xi_l| / omega_l)^(1/(omega_l - 1)) with a block multiplier
    mu_p tied to the global multiplier by m_p S_p^(m_p-1) mu_p = lambda.
    The scalar lambda is found by safeguarded Newton on
    log sum_p S_p^m_p = 0 in log lambda.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    N, d = xi.shape
    if d != domain.dim:
        raise DomainError(f"directions must have {domain.dim} components")
    nrm = np.linalg.norm(xi, axis=1)
    if np.any(nrm == 0):
        raise DomainError("support point needs a nonzero direction")
    a = np.abs(xi) / nrm[:, None]
    w = domain.omega
    beta = w / (w - 1)
    with np.errstate(divide="ignore"):
        logc_all = beta * (np.log(a) - np.log(w))
    blocks = []
    for p, (s, e) in enumerate(domain.blocks):
        sl = slice(s - 1, e)
        active = np.isfinite(logc_all[:, sl]).any(axis=1)
        blocks.append((sl, float(domain.m[p]), active))

    def evaluate(L):
        total_log = np.full(N, -np.inf)
        parts = []
        for sl, mp, active in blocks:
            lc = logc_all[:, sl]
            lcs = np.where(active[:, None], lc, 0.0)
            s, logS, rho = _solve_block_mu(L, math.log(mp), mp, lcs, beta[sl])
            s = np.where(active, s, -np.inf)
            logS = np.where(active, logS, -np.inf)
            total_log = np.logaddexp(total_log, mp * logS)
            parts.append((s, logS, rho, mp, active))
        return total_log, parts

    # bracket for lambda = |grad F| at the support point of a unit direction
    lo = np.full(N, math.log(2.0 / math.sqrt(d)) - 1.0)
    hi = np.full(N, math.log(math.sqrt(d) * float(np.max(domain.m[domain.block_index] * w))) + 1.0)
    L = 0.5 * (lo + hi)
    for _ in range(max_iter):
        G, parts = evaluate(L)
        lo = np.where(G < 0, L, lo)
        hi = np.where(G >= 0, L, hi)
        # dG/dL from implicit differentiation of each block equation
        num = np.zeros(N)
        for s, logS, rho, mp, active in parts:
            dsdL = 1.0 / ((mp - 1) * rho + 1.0)
            contrib = np.exp(mp * logS - G) * mp * rho * dsdL
            num += np.where(active, contrib, 0.0)
        newL = L - G / num
        bad = ~((newL > lo) & (newL < hi))
        newL = np.where(bad, 0.5 * (lo + hi), newL)
        done = np.abs(newL - L) <= 1e-15 * np.maximum(1.0, np.abs(L))
        L = newL
        if np.all(done | (hi - lo <= 1e-15)):
            break
    else:
        raise ConvergenceError("support point multiplier did not converge")
    _, parts = evaluate(L)
    x = np.zeros((N, d))
    for (sl, mp, active), (s, logS, rho, _, _) in zip(blocks, parts):
        mu = np.where(active, s, 0.0)
        lx = (mu[:, None] + np.log(np.where(a[:, sl] > 0, a[:, sl], 1.0)) - np.log(w[sl])) / (w[sl] - 1)
        xs = np.where(a[:, sl] > 0, np.exp(lx), 0.0)
        x[:, sl] = np.where(active[:, None], xs, 0.0)
    return np.sign(xi) * x


def support_point(domain: DomainSpec, xi) -> SurfacePoint:
    x = support_points(domain, xi)[0]
    return surface_point(domain, x)


def support_function(domain: DomainSpec, xi) -> np.ndarray:
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    return np.einsum("ij,ij->i", support_points(domain, xi), xi)


def outward_normal(domain: DomainSpec, x) -> np.ndarray:
    g = defining_gradient(domain, x)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def surface_point(domain: DomainSpec, x) -> SurfacePoint:
    x = np.asarray(x, dtype=np.float64)
    n = outward_normal(domain, x)
    q = int(np.argmax(np.abs(n))) + 1
    return SurfacePoint(x, n, gaussian_curvature(domain, x), q)


# ------------------------------------------------------------------ curvature

def graph_derivatives(domain: DomainSpec, x, q=None):
    """Gradient and Hessian of the graph x_q = f(x_hat) through x.

    ``q`` defaults to the axis maximizing |n_q|.  Implicit differentiation
    of F(x_hat, f(x_hat)) = 1 with closed-form partials of F.
    """
    x = np.asarray(x, dtype=np.float64)
    g = defining_gradient(domain, x)
    H = defining_hessian(domain, x)
    if q is None:
        q = int(np.argmax(np.abs(g))) + 1
    i = q - 1
    others = [j for j in range(domain.dim) if j != i]
    Fq = g[i]
    if Fq == 0.0:
        raise DomainError(f"axis {q} is tangent at {x.tolist()}")
    grad = -g[others] / Fq
    Hoo = H[np.ix_(others, others)]
    Hoq = H[others, i]
    hess = -(Hoo + np.outer(Hoq, grad) + np.outer(grad, Hoq) + H[i, i] * np.outer(grad, grad)) / Fq
    return grad, hess, q


def gaussian_curvature(domain: DomainSpec, x) -> float:
    """K = |det D^2 f| / (1 + |D f|^2)^((d+1)/2) in the best graph chart."""
    grad, hess, _ = graph_derivatives(domain, x)
    det = np.linalg.det(hess)
    if det == 0.0:
        return 0.0
    return float(abs(det) / (1.0 + grad @ grad) ** ((domain.dim + 1) / 2))


def curvature_at_direction(domain: DomainSpec, xi) -> np.ndarray:
    xi = np.atleast_2d(xi)
    X = support_points(domain, xi)
    return np.array([gaussian_curvature(domain, x) for x in X])


def curvature_bounds(domain: DomainSpec, xi, q: int, eps0: float | None = None):
    """The two products bracketing K(x(xi)) up to constants.

    lower uses exponents (m_{q,i} w_i - 2)/(m_{q,i} w_i - 1) and upper
    (w_i - 2)/(w_i - 1), over i != q.
    """
    from .exponents import coupling

    xi = np.asarray(xi, dtype=np.float64)
    d = domain.dim
    eps0 = epsilon0(d) if eps0 is None else eps0
    r = np.abs(xi) / np.linalg.norm(xi)
    if r[q - 1] < eps0:
        raise DomainError(f"|xi_q|/|xi| = {r[q - 1]:.4g} below eps0 = {eps0:.4g}")
    lower = 1.0
    upper = 1.0
    for i in range(1, d + 1):
        if i == q:
            continue
        mw = coupling(domain, q, i) * domain.inner_exponents[i - 1]
        w = domain.inner_exponents[i - 1]
        lower *= r[i - 1] ** ((mw - 2) / (mw - 1))
        upper *= r[i - 1] ** ((w - 2) / (w - 1))
    return float(lower), float(upper)


def level_set_curvature(domain: DomainSpec, xi) -> float:
    """Gaussian curvature at xi of the level set {eta : h(eta) = h(xi)}.

    The level set of the support function is a dilate of the polar body, and
    polar duality gives K~ = h^2 / (|xi|^(d+1) K(x) |x|^(d+1)) with x = x(xi).
    """
    xi = np.asarray(xi, dtype=np.float64)
    if np.any(xi == 0):
        raise DomainError("level-set curvature needs every coordinate of xi nonzero")
    x = support_points(domain, xi)[0]
    K = gaussian_curvature(domain, x)
    if K <= 0.0:
        raise DomainError("curvature vanishes at the support point")
    d = domain.dim
    h = float(x @ xi)
    return h * h / (np.linalg.norm(xi) ** (d + 1) * K * np.linalg.norm(x) ** (d + 1))


# --------------------------------------------------------- surface integrals

def _gauss_legendre(n, a, b):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def _sphere_rule(k: int, n: int):
    """Product rule on S^k (unit vectors in R^(k+1)); returns (nodes, weights)."""
    if k == 1:
        phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(2 * n, np.pi / n)
    th, wt = _gauss_legendre(n, 0.0, np.pi)
    sub, wsub = _sphere_rule(k - 1, n)
    nodes = []
    weights = []
    for t, w in zip(th, wt):
        nodes.append(np.column_stack([np.full(len(sub), np.cos(t)), np.sin(t) * sub]))
        weights.append(w * np.sin(t) ** (k - 1) * wsub)
    return np.vstack(nodes), np.concatenate(weights)


def _frame(v0):
    """Orthonormal basis of the complement of unit vector v0 (rows)."""
    d = len(v0)
    M = np.eye(d) - np.outer(v0, v0)
    u, s, _ = np.linalg.svd(M)
    return u[:, :d - 1].T


def _radial_density(domain: DomainSpec, V):
    """Surface element R^(d-1)/(v.n) for boundary points y = R v."""
    R = 1.0 / gauge_many(domain, V)
    Y = R[:, None] * V
    nY = outward_normal(domain, Y)
    dens = R ** (domain.dim - 1) / np.einsum("ij,ij->i", V, nY)
    return Y, nY, dens


def surface_integral(domain: DomainSpec, func, n: int = 48) -> float:
    """Integral over the boundary of ``func(Y, nY)`` (vectorized over rows).

    Uses the radial parametrization over the unit sphere.
    """
    V, w = _sphere_rule(domain.dim - 1, n)
    Y, nY, dens = _radial_density(domain, V)
    return float(np.sum(w * dens * func(Y, nY)))


def surface_area(domain: DomainSpec, n: int = 48) -> float:
    return surface_integral(domain, lambda Y, nY: np.ones(len(Y)), n)


def cap_measure(domain: DomainSpec, point: SurfacePoint, lam: float,
                n_theta: int = 48, n_dir: int = 48) -> float:
    """Surface measure of {y on the boundary : dist(y, T_x) < lam}.

    Polar coordinates on the sphere of directions around x/|x|: along each
    half great circle the height y.n decreases monotonically from h at x to
    -h at -x, so the cap is {theta < theta_max(w)} with theta_max found by
    bisection.  Gauss-Legendre in theta, a product rule over w.
    """
    x = np.asarray(point.location, dtype=np.float64)
    n = np.asarray(point.normal, dtype=np.float64)
    h = float(x @ n)
    if not (0 < lam < 2 * h):
        raise DomainError(f"cap height {lam} outside (0, {2 * h:.6g})")
    d = domain.dim
    level = h - lam
    v0 = x / np.linalg.norm(x)
    E = _frame(v0)
    W, ww = _sphere_rule(d - 2, n_dir)
    dirs = W @ E                                # unit vectors orthogonal to v0

    def height(theta):
        V = np.cos(theta)[:, None] * v0 + np.sin(theta)[:, None] * dirs
        R = 1.0 / gauge_many(domain, V)
        return R * (V @ n)

    lo = np.zeros(len(dirs))
    hi = np.full(len(dirs), np.pi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        above = height(mid) > level
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    tmax = 0.5 * (lo + hi)
    t, wt = np.polynomial.legendre.leggauss(n_theta)
    total = 0.0
    for j in range(len(dirs)):
        th = 0.5 * tmax[j] * (t + 1.0)
        V = np.cos(th)[:, None] * v0 + np.sin(th)[:, None] * dirs[j]
        _, _, dens = _radial_density(domain, V)
        total += ww[j] * 0.5 * tmax[j] * np.sum(wt * dens * np.sin(th) ** (d - 2))
    return float(total)


def cap_bound_scale(domain: DomainSpec, xi, lam: float) -> float:
    """prod over i != q of min{lam^(1/(m_{q,i} w_i)), lam^(1/2) (|xi_i|/|xi|)^(-(m w - 2)/(2(m w - 1)))}.

    The shape of the cap-measure estimate with |xi| = 1/lam; constants are
    omitted.  ``q`` is the axis of the largest |xi_q|.
    """
    from .exponents import coupling

    xi = np.asarray(xi, dtype=np.float64)
    r = np.abs(xi) / np.linalg.norm(xi)
    q = int(np.argmax(r)) + 1
    out = 1.0
    for i in range(1, domain.dim + 1):
        if i == q:
            continue
        mw = coupling(domain, q, i) * domain.inner_exponents[i - 1]
        a = lam ** (1.0 / mw)
        b = math.inf if r[i - 1] == 0 else lam ** 0.5 * r[i - 1] ** (-(mw - 2) / (2 * (mw - 1)))
        out *= min(a, b)
    return out


def check_boundary(domain: DomainSpec, x, tol: float = 1e-9):
    if abs(gauge(domain, x) - 1.0) > tol:
        raise DomainError(f"point {np.asarray(x).tolist()} is not on the boundary")


__all__ = [
    "SurfacePoint", "support_point", "support_points", "support_function", "surface_point",
    "outward_normal", "graph_derivatives", "gaussian_curvature", "curvature_at_direction",
    "curvature_bounds", "gaussian_curvatures", "level_set_curvature", "cap_measure", "cap_bound_scale",
    "surface_integral", "surface_area", "epsilon0", "defining_value",
]


def gaussian_curvatures(domain: DomainSpec, X) -> np.ndarray:
    """Batched ``gaussian_curvature`` over rows of X (same chart rule)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    N, d = X.shape
    w = domain.omega
    g = defining_gradient(domain, X)
    # batched Hessian of F
    pw = X ** w
    d1 = w * X ** (w - 1)
    d2 = w * (w - 1) * X ** (w - 2)
    Hs = np.zeros((N, d, d))
    for p, (s, e) in enumerate(domain.blocks):
        sl = slice(s - 1, e)
        mp = domain.m[p]
        Sp = pw[:, sl].sum(axis=1)
        c1 = mp * Sp ** (mp - 1)
        c2 = mp * (mp - 1) * Sp ** (mp - 2) if mp > 1 else np.zeros(N)
        gp = d1[:, sl]
        Hs[:, sl, sl] = c2[:, None, None] * gp[:, :, None] * gp[:, None, :]
        idx = np.arange(s - 1, e)
        Hs[:, idx, idx] += c1[:, None] * d2[:, sl]
    qs = np.argmax(np.abs(g), axis=1)
    K = np.zeros(N)
    for i in range(d):
        sel = np.nonzero(qs == i)[0]
        if len(sel) == 0:
            continue
        others = [j for j in range(d) if j != i]
        Fq = g[sel, i]
        grad = -g[sel][:, others] / Fq[:, None]
        Hoo = Hs[sel][:, others][:, :, others]
        Hoq = Hs[sel][:, others, i]
        Hqq = Hs[sel, i, i]
        hess = -(Hoo + Hoq[:, :, None] * grad[:, None, :] + grad[:, :, None] * Hoq[:, None, :]
                 + Hqq[:, None, None] * grad[:, :, None] * grad[:, None, :]) / Fq[:, None, None]
        det = np.linalg.det(hess)
        K[sel] = np.abs(det) / (1.0 + np.einsum("ij,ij->i", grad, grad)) ** ((d + 1) / 2)
    return K
