"""Independent oracles shared by the module and acceptance tests."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from shellvar import defining_gradient, defining_value
from shellvar.domain import gauge_many
from shellvar.geometry import support_points


def exact_count(dom, rho, u):
    """Rational-arithmetic enumeration over the bounding box (independent oracle)."""
    rho = Fraction(rho)
    u = [Fraction(v) for v in u]
    R = math.ceil(rho) + 1
    total = 0
    for n in itertools.product(range(-R, R + 1), repeat=dom.dim):
        y = [(n[i] + u[i]) / rho for i in range(dom.dim)]
        F = sum(sum(y[i] ** dom.inner_exponents[i] for i in range(s - 1, e)) ** dom.outer_exponents[p]
                for p, (s, e) in enumerate(dom.blocks))
        total += F <= 1
    return total


def random_boundary(dom, n, rng, floor=0.15):
    """Boundary points whose coordinates are all bounded away from zero."""
    V = rng.normal(size=(4 * n, dom.dim))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    V = V[np.all(np.abs(V) > floor, axis=1)][:n]
    return V / gauge_many(dom, V)[:, None]


def fd_curvature(dom, x):
    """K from high-precision numerical derivatives of the explicit graph x_q = f(x_hat)."""
    mpmath = pytest.importorskip("mpmath")
    x = np.abs(np.asarray(x, float))
    q = int(np.argmax(np.abs(defining_gradient(dom, x)))) + 1
    others = [i for i in range(dom.dim) if i != q - 1]
    p = dom.block_index[q - 1]

    def f(*y):
        z = [mpmath.mpf(0)] * dom.dim
        for i, v in zip(others, y):
            z[i] = v
        S = [sum(z[i] ** dom.omega[i] for i in range(s - 1, e)) for s, e in dom.blocks]
        rest = sum(S[j] ** dom.m[j] for j in range(dom.n_blocks) if j != p)
        return ((1 - rest) ** (mpmath.mpf(1) / dom.m[p]) - S[p]) ** (mpmath.mpf(1) / dom.omega[q - 1])

    k = dom.dim - 1
    with mpmath.workdps(40):
        y0 = [mpmath.mpf(float(x[i])) for i in others]
        g = np.array([float(mpmath.diff(f, y0, tuple(int(a == i) for a in range(k)))) for i in range(k)])
        H = np.zeros((k, k))
        for i in range(k):
            for j in range(k):
                order = [0] * k
                order[i] += 1
                order[j] += 1
                H[i, j] = float(mpmath.diff(f, y0, tuple(order)))
    return abs(np.linalg.det(H)) / (1 + g @ g) ** ((dom.dim + 1) / 2)


def goldman_level_set_curvature(dom, xi, h=1e-3):
    """Curvature of {h(eta) = h(xi)} from a finite-difference Hessian of h."""
    xi = np.asarray(xi, float)
    g = support_points(dom, xi)[0]       # grad h = x(xi)

    def H(h):
        out = np.zeros((3, 3))
        for i in range(3):
            ei = np.zeros(3)
            ei[i] = h
            out[:, i] = (support_points(dom, xi + ei)[0] - support_points(dom, xi - ei)[0]) / (2 * h)
        return (out + out.T) / 2

    Hm = (4 * H(h / 2) - H(h)) / 3
    B = np.zeros((4, 4))
    B[:3, :3] = Hm
    B[:3, 3] = g
    B[3, :3] = g
    return -np.linalg.det(B) / np.linalg.norm(g) ** 4


def enumerate_shell(dom, r_outer, r_inner, u):
    """Shell count by testing every point of the bounding box, with no fibers."""
    R = math.ceil(r_outer) + 1
    ax = np.arange(-R, R + 1, dtype=np.float64)
    total = 0
    for a in ax:
        g = np.stack(np.meshgrid(a, ax, ax, indexing="ij"), -1).reshape(-1, 3) + u
        Fo = defining_value(dom, g / r_outer)
        Fi = defining_value(dom, g / r_inner)
        total += int(np.sum((Fo <= 1) & (Fi > 1)))
    return total
