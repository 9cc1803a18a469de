"""The domain family, its defining function, gauge and volume.

A domain is described by a partition of the coordinates into contiguous
blocks, an outer exponent ``m_p`` per block and an even inner exponent
``omega_l`` per coordinate.  The body is ``D = {F <= 1}`` with

    F(x) = sum_p ( sum_{l in block p} x_l**omega_l ) ** m_p .

Coordinate indices in configs and in every public ``q``/``l`` argument are
1-based; numpy arrays are indexed from 0 as usual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .errors import DomainError, DomainSpecError
from . import quadrature

GAUGE_RTOL = 1e-12
DEFAULT_VOLUME_RTOL = 1e-10


@dataclass(frozen=True)
class DomainSpec:
    """Parameters of one member of the domain family.

    ``blocks`` holds 1-based inclusive ``(start, end)`` pairs.  ``strict``
    False marks the sanity mode in which ``omega_l = 2`` is allowed (so the
    unit ball is available as a geometry oracle).
    """

    dim: int
    blocks: tuple
    outer_exponents: tuple
    inner_exponents: tuple
    strict: bool = True
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(int(v) for v in b) for b in self.blocks))
        object.__setattr__(self, "outer_exponents", tuple(int(v) for v in self.outer_exponents))
        object.__setattr__(self, "inner_exponents", tuple(int(v) for v in self.inner_exponents))
        _validate(self)

    @cached_property
    def omega(self) -> np.ndarray:
        a = np.array(self.inner_exponents, dtype=np.float64)
        a.flags.writeable = False
        return a

    @cached_property
    def m(self) -> np.ndarray:
        a = np.array(self.outer_exponents, dtype=np.float64)
        a.flags.writeable = False
        return a

    @cached_property
    def block_index(self) -> np.ndarray:
        """0-based block number of each coordinate."""
        idx = np.empty(self.dim, dtype=np.int64)
        for p, (s, e) in enumerate(self.blocks):
            idx[s - 1:e] = p
        idx.flags.writeable = False
        return idx

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def to_dict(self) -> dict:
        out = {
            "dim": self.dim,
            "blocks": [list(b) for b in self.blocks],
            "outer_exponents": list(self.outer_exponents),
            "inner_exponents": list(self.inner_exponents),
        }
        if not self.strict:
            out["sanity"] = True
        if self.name:
            out["name"] = self.name
        return out

    def to_text(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def _validate(spec: DomainSpec):
    d = spec.dim
    if d < 3:
        raise DomainSpecError("dim", f"dimension must be at least 3, got {d}")
    if not spec.blocks:
        raise DomainSpecError("blocks", "at least one block is required")
    expect = 1
    for s, e in spec.blocks:
        if s != expect or e < s:
            raise DomainSpecError(
                "blocks", f"blocks must be contiguous nonempty ranges covering 1..{d} in order; "
                f"got {list(spec.blocks)}")
        expect = e + 1
    if expect != d + 1:
        raise DomainSpecError("blocks", f"blocks must end at {d}; got {list(spec.blocks)}")
    if len(spec.outer_exponents) != len(spec.blocks):
        raise DomainSpecError("outer_exponents", "need one outer exponent per block")
    for mp in spec.outer_exponents:
        if mp < 1:
            raise DomainSpecError("outer_exponents", f"outer exponents must be >= 1, got {mp}")
    if len(spec.inner_exponents) != d:
        raise DomainSpecError("inner_exponents", f"need {d} inner exponents")
    for l, w in enumerate(spec.inner_exponents, start=1):
        if w % 2:
            raise DomainSpecError("inner_exponents", f"omega_{l} = {w} is odd")
        if w < 2:
            raise DomainSpecError("inner_exponents", f"omega_{l} = {w} is below 2")
        if w < 4 and spec.strict:
            raise DomainSpecError(
                "inner_exponents",
                f"omega_{l} = {w} < 4 requires the explicit sanity flag")


@dataclass(frozen=True)
class Shell:
    """The shell (r + t/2) D minus (r - t/2) D."""

    r: float
    t: float

    def __post_init__(self):
        if not (self.t > 0 and self.r - self.t / 2 > 0):
            raise DomainError(f"invalid shell r={self.r}, t={self.t}: need t > 0 and r - t/2 > 0")

    @property
    def outer(self) -> float:
        return self.r + self.t / 2

    @property
    def inner(self) -> float:
        return self.r - self.t / 2


# ---------------------------------------------------------------- parsing

_REQUIRED = ("dim", "blocks", "outer_exponents", "inner_exponents")


def parse_domain_spec(text) -> DomainSpec:
    """Build a spec from YAML text or an already-parsed mapping."""
    if isinstance(text, str):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise DomainSpecError("syntax", str(exc)) from exc
    else:
        data = text
    if not isinstance(data, dict):
        raise DomainSpecError("syntax", "domain config must be a mapping")
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise DomainSpecError("missing", f"missing keys: {', '.join(missing)}")
    unknown = set(data) - set(_REQUIRED) - {"sanity", "name"}
    if unknown:
        raise DomainSpecError("unknown", f"unknown keys: {', '.join(sorted(unknown))}")
    try:
        blocks = [tuple(b) for b in data["blocks"]]
        if any(len(b) != 2 for b in blocks):
            raise ValueError("each block is a [start, end] pair")
        for v in [*sum(blocks, ()), *data["outer_exponents"], *data["inner_exponents"], data["dim"]]:
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"non-integer entry {v!r}")
    except (TypeError, ValueError) as exc:
        raise DomainSpecError("syntax", str(exc)) from exc
    return DomainSpec(
        dim=int(data["dim"]),
        blocks=blocks,
        outer_exponents=data["outer_exponents"],
        inner_exponents=data["inner_exponents"],
        strict=not bool(data.get("sanity", False)),
        name=str(data.get("name", "")),
    )


def builtin_domains() -> list[str]:
    root = resources.files("shellvar") / "domains"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def load_domain(path) -> DomainSpec:
    """Load a domain from a file path, or from a bundled config by file name."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        res = resources.files("shellvar") / "domains" / p.name
        if not res.is_file():
            raise DomainSpecError("file", f"no such domain file: {path}")
        text = res.read_text()
    spec = parse_domain_spec(text)
    if not spec.name:
        object.__setattr__(spec, "name", p.stem)
    return spec


# ------------------------------------------------------------- factories

def superball(omega: int = 4, dim: int = 3) -> DomainSpec:
    return DomainSpec(dim, [(1, dim)], [1], [omega] * dim, name=f"superball{omega}")


def unit_ball(dim: int = 3) -> DomainSpec:
    return DomainSpec(dim, [(1, dim)], [1], [2] * dim, strict=False, name="sphere")


def two_block() -> DomainSpec:
    """(x1^4 + x2^6)^5 + x3^8 <= 1, the mixed-block worked example."""
    return DomainSpec(3, [(1, 2), (3, 3)], [5, 1], [4, 6, 8], name="two_block")


def flat_faces() -> DomainSpec:
    """x1^6 + x2^6 + x3^10 <= 1, for which alpha = 2 is not admissible."""
    return DomainSpec(3, [(1, 3)], [1], [6, 6, 10], name="flat_faces")


# --------------------------------------------------------- defining function

def _block_sums(domain: DomainSpec, x: np.ndarray) -> np.ndarray:
    pw = x ** domain.omega
    return np.stack([pw[..., s - 1:e].sum(axis=-1) for s, e in domain.blocks], axis=-1)


def defining_value(domain: DomainSpec, x):
    """F(x); accepts a point or an array of points on the last axis."""
    x = np.asarray(x, dtype=np.float64)
    S = _block_sums(domain, x)
    out = (S ** domain.m).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def defining_gradient(domain: DomainSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    S = _block_sums(domain, x)
    bi = domain.block_index
    m = domain.m[bi]
    Sl = S[..., bi]
    outer = m * Sl ** (m - 1)
    return outer * domain.omega * x ** (domain.omega - 1)


def defining_hessian(domain: DomainSpec, x) -> np.ndarray:
    """Closed-form Hessian of F at a single point."""
    x = np.asarray(x, dtype=np.float64)
    d = domain.dim
    S = _block_sums(domain, x)
    bi = domain.block_index
    w = domain.omega
    g = w * x ** (w - 1)            # d S_p / d x_l
    gg = w * (w - 1) * x ** (w - 2)  # d^2 S_p / d x_l^2
    H = np.zeros((d, d))
    for p, (s, e) in enumerate(domain.blocks):
        mp = domain.m[p]
        sl = slice(s - 1, e)
        Sp = S[p]
        c1 = mp * Sp ** (mp - 1)
        c2 = mp * (mp - 1) * Sp ** (mp - 2) if mp > 1 else 0.0
        gp = g[sl]
        H[sl, sl] = c2 * np.outer(gp, gp)
        H[sl, sl] += np.diag(c1 * gg[sl])
    del bi
    return H


# -------------------------------------------------------------------- gauge

def gauge(domain: DomainSpec, x) -> float:
    """Minkowski functional: the unique rho with F(x/rho) = 1 (0 at the origin)."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    mx = float(x.max())
    if mx == 0.0:
        return 0.0
    y = x / mx

    def phi(lam):
        return defining_value(domain, y / lam) - 1.0

    # F(y/1) >= 1 and F(y/d) <= 1 bracket the root
    lo, hi = 1.0, float(domain.dim)
    while (hi - lo) > 1e-3 * lo:
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0:
            lo = mid
        else:
            hi = mid
    # phi is convex and decreasing in lam; Newton from the left is monotone
    lam = lo
    for _ in range(100):
        f = phi(lam)
        df = -float(defining_gradient(domain, y / lam) @ y) / lam ** 2
        if df == 0.0:
            break
        step = -f / df
        lam_new = lam + step
        if not (lo <= lam_new <= hi):
            lam_new = 0.5 * (lo + hi)
        if abs(lam_new - lam) <= 0.01 * GAUGE_RTOL * lam:
            lam = lam_new
            break
        if phi(lam_new) > 0:
            lo = lam_new
        else:
            hi = lam_new
        lam = lam_new
    return lam * mx


def gauge_many(domain: DomainSpec, X) -> np.ndarray:
    """Vectorized gauge over rows of ``X`` (same algorithm, batched)."""
    X = np.abs(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    mx = X.max(axis=1)
    out = np.zeros(len(X))
    nz = mx > 0
    Y = X[nz] / mx[nz, None]
    lo = np.ones(len(Y))
    hi = np.full(len(Y), float(domain.dim))
    while np.any(hi - lo > 1e-3 * lo):
        mid = 0.5 * (lo + hi)
        pos = defining_value(domain, Y / mid[:, None]) > 1.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    lam = lo.copy()
    for _ in range(60):
        Z = Y / lam[:, None]
        f = defining_value(domain, Z) - 1.0
        df = -np.einsum("ij,ij->i", defining_gradient(domain, Z), Y) / lam ** 2
        new = lam - f / df
        new = np.where((new >= lo) & (new <= hi), new, 0.5 * (lo + hi))
        done = np.abs(new - lam) <= 0.01 * GAUGE_RTOL * lam
        lam = new
        if done.all():
            break
    out[nz] = lam * mx[nz]
    return out


# ------------------------------------------------------------- graph patches

def graph_height(domain: DomainSpec, q: int, xhat) -> float:
    """Nonnegative x_q with F = 1, given the other coordinates in order.

    ``q`` is 1-based.  Inverting F block by block gives the height in closed
    form for every axis, including axes that share a block with others.
    """
    d = domain.dim
    if not (1 <= q <= d):
        raise DomainError(f"axis q={q} outside 1..{d}")
    xhat = np.asarray(xhat, dtype=np.float64).reshape(d - 1)
    x = np.insert(xhat, q - 1, 0.0)
    S = _block_sums(domain, x)
    p = int(domain.block_index[q - 1])
    rest = float(sum(S[j] ** domain.m[j] for j in range(domain.n_blocks) if j != p))
    base = rest + S[p] ** domain.m[p]
    if base > 1.0 + 1e-14:
        raise DomainError(f"point {xhat.tolist()} lies outside the projection along axis {q}")
    if rest >= 1.0:
        return 0.0
    a = (1.0 - rest) ** (1.0 / domain.m[p]) - S[p]
    if a <= 0.0:
        return 0.0
    return float(a ** (1.0 / domain.omega[q - 1]))


# ------------------------------------------------------------------- volume

@lru_cache(maxsize=64)
def _volume_cached(domain: DomainSpec, rtol: float) -> tuple:
    # a crude unit-scale bound on vol sets the absolute tolerance
    box = 2.0 ** domain.dim
    val, err = quadrature.orthant_ft(domain, np.zeros(domain.dim), rtol * box / 2 ** domain.dim)
    return float(val) * 2 ** domain.dim, float(err) * 2 ** domain.dim


def volume(domain: DomainSpec, rtol: float = DEFAULT_VOLUME_RTOL, with_error: bool = False):
    """Volume of D by nested fiber quadrature."""
    val, err = _volume_cached(domain, float(rtol))
    return (val, err) if with_error else val


def shell_volume(domain: DomainSpec, shell: Shell, rtol: float = DEFAULT_VOLUME_RTOL) -> float:
    d = domain.dim
    return (shell.outer ** d - shell.inner ** d) * volume(domain, rtol)


def superball_volume(omega: int, dim: int) -> float:
    """Closed form 2^d Gamma(1+1/w)^d / Gamma(1+d/w)."""
    return 2.0 ** dim * math.gamma(1 + 1 / omega) ** dim / math.gamma(1 + dim / omega)


def circumradius_bound(domain: DomainSpec) -> float:
    """D sits inside the unit cube, so sqrt(d) bounds |x| on D."""
    return math.sqrt(domain.dim)


def as_points(x: Sequence[float] | np.ndarray, d: int) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.shape[-1] != d:
        raise DomainError(f"expected points with {d} coordinates, got shape {a.shape}")
    return a
