"""Exact coupling constants m_{q,l}, exponents alpha_{q,j}, alpha_j and the threshold.

All public indices (q, l, j) are 1-based, as in the usual statement of the
exponent formulas.  Every value is a ``fractions.Fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from numbers import Integral

from .domain import DomainSpec
from .errors import DomainError


def _check_index(domain: DomainSpec, i: int, name: str):
    if not (isinstance(i, Integral) and not isinstance(i, bool) and 1 <= i <= domain.dim):
        raise DomainError(f"{name}={i!r} outside 1..{domain.dim}")


def block_of(domain: DomainSpec, l: int) -> int:
    """0-based block p(l) containing coordinate l (1-based)."""
    _check_index(domain, l, "l")
    for p, (s, e) in enumerate(domain.blocks):
        if s <= l <= e:
            return p
    raise AssertionError("blocks do not cover the index")  # unreachable after validation


def coupling(domain: DomainSpec, q: int, l: int) -> int:
    """m_{q,l}: 1 inside q's own block, else the outer exponent of l's block."""
    _check_index(domain, q, "q")
    pl = block_of(domain, l)
    if pl == block_of(domain, q):
        return 1
    return domain.outer_exponents[pl]


def _alpha_for_subset(domain: DomainSpec, q: int, S) -> Fraction:
    d = domain.dim
    j = len(S)
    tail = sum((Fraction(2, coupling(domain, q, l) * domain.inner_exponents[l - 1])
                for l in range(1, d + 1) if l not in S), Fraction(0))
    first = d - j - tail
    # j < d so the complement is nonempty and tail > 0
    return max(first, first / tail)


def alpha_qj(domain: DomainSpec, q: int, j: int) -> Fraction:
    """Maximum over j-subsets S containing q of the two bracketed expressions."""
    _check_index(domain, q, "q")
    d = domain.dim
    if not (isinstance(j, int) and 1 <= j <= d - 1):
        raise DomainError(f"j={j!r} outside 1..{d - 1}")
    others = [l for l in range(1, d + 1) if l != q]
    return max(_alpha_for_subset(domain, q, {q, *rest}) for rest in combinations(others, j - 1))


@dataclass(frozen=True)
class ExponentTable:
    coupling: tuple       # d x d, rows q, columns l
    alpha_qj: tuple       # d x (d-1)
    alpha_j: tuple        # d-1
    threshold: Fraction
    remark13_applicable: bool

    def admissible(self, alpha) -> bool:
        """Strict inequality alpha > threshold, compared exactly."""
        return Fraction(alpha) > self.threshold

    def to_dict(self) -> dict:
        def fr(v):
            return {"fraction": str(v), "decimal": float(v)}
        return {
            "coupling": [list(r) for r in self.coupling],
            "alpha_qj": [[fr(v) for v in row] for row in self.alpha_qj],
            "alpha_j": [fr(v) for v in self.alpha_j],
            "threshold": fr(self.threshold),
            "remark13_applicable": self.remark13_applicable,
        }


def exponent_table(domain: DomainSpec) -> ExponentTable:
    d = domain.dim
    cpl = tuple(tuple(coupling(domain, q, l) for l in range(1, d + 1)) for q in range(1, d + 1))
    aqj = tuple(tuple(alpha_qj(domain, q, j) for j in range(1, d)) for q in range(1, d + 1))
    aj = tuple(max(aqj[q][j] for q in range(d)) for j in range(d - 1))
    thr = max(aj)
    return ExponentTable(cpl, aqj, aj, thr, thr < d - 1)


def format_table(table: ExponentTable, alpha=None) -> str:
    """Aligned text rendering with fractions and decimals."""
    d = len(table.coupling)
    lines = ["alpha_{q,j}:"]
    for q, row in enumerate(table.alpha_qj, start=1):
        cells = [f"{str(v):>8} ({float(v):9.5f})" for v in row]
        lines.append(f"  q={q}: " + "  ".join(cells))
    lines.append("alpha_j:   " + "  ".join(f"{str(v)} ({float(v):.5f})" for v in table.alpha_j))
    lines.append(f"threshold: {table.threshold} ({float(table.threshold):.5f})")
    lines.append(f"threshold < d-1 = {d - 1}: {table.remark13_applicable}")
    if alpha is not None:
        verdict = "admissible" if table.admissible(alpha) else "inadmissible"
        lines.append(f"alpha = {Fraction(alpha)}: {verdict}")
    return "\n".join(lines)
