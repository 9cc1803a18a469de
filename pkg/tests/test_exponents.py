import time
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shellvar import superball
from shellvar.domain import DomainSpec
from shellvar.errors import DomainError
from shellvar.exponents import alpha_qj, block_of, coupling, exponent_table, format_table

F = Fraction


def test_block_of(tb, sb):
    assert block_of(tb, 1) == 0
    assert block_of(tb, 3) == 1
    assert {block_of(sb, l) for l in (1, 2, 3)} == {0}


def test_coupling(tb, sb):
    assert coupling(tb, 3, 1) == 5
    assert coupling(tb, 3, 2) == 5
    assert coupling(tb, 1, 3) == 1
    assert coupling(tb, 1, 2) == 1
    assert all(coupling(sb, q, l) == 1 for q in (1, 2, 3) for l in (1, 2, 3))


def test_index_errors(tb):
    for bad in (0, 4, 1.0, True):
        with pytest.raises(DomainError):
            block_of(tb, bad)
    with pytest.raises(DomainError):
        alpha_qj(tb, 1, 3)


def test_two_block_table(tb):
    t0 = time.perf_counter()
    tab = exponent_table(tb)
    assert time.perf_counter() - t0 < 1.0
    assert tab.alpha_qj == ((F(17, 7), F(3)), (F(5, 3), F(3)), (F(11), F(14)))
    assert all(isinstance(v, Fraction) for row in tab.alpha_qj for v in row)
    assert tab.alpha_j == (F(11), F(14))
    assert tab.threshold == 14
    assert not tab.remark13_applicable


def test_superball_table(sb):
    tab = exponent_table(sb)
    assert tab.alpha_j == (F(1), F(1))
    assert tab.threshold == 1
    assert tab.remark13_applicable
    assert tab.admissible(2) and not tab.admissible(1)


def test_flat_faces_threshold(ff):
    tab = exponent_table(ff)
    assert tab.threshold == 4
    assert not tab.admissible(2)
    assert not tab.admissible(4)        # strict inequality
    assert tab.admissible(F(41, 10))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([4, 6, 8, 10, 12, 20]), st.integers(3, 5))
def test_superball_closed_form(omega, d):
    # alpha_{q,j} = (d-j)(1-2/w) / min(1, 2(d-j)/w) for equal exponents and m = 1
    tab = exponent_table(superball(omega, d))
    for j in range(1, d):
        want = F(d - j) * (1 - F(2, omega)) / min(F(1), F(2 * (d - j), omega))
        assert all(tab.alpha_qj[q][j - 1] == want for q in range(d))


def test_threshold_is_max(tb):
    tab = exponent_table(tb)
    assert tab.threshold == max(v for row in tab.alpha_qj for v in row)


def test_format_and_dict(tb):
    tab = exponent_table(tb)
    text = format_table(tab, 15)
    for s in ("17/7", "5/3", "11", "14", "admissible"):
        assert s in text
    d = tab.to_dict()
    assert d["threshold"]["fraction"] == "14"
    assert d["alpha_qj"][0][0] == {"fraction": "17/7", "decimal": 17 / 7}


def test_four_dim_two_blocks():
    dom = DomainSpec(4, [(1, 2), (3, 4)], [2, 3], [4, 6, 4, 8])
    tab = exponent_table(dom)
    assert len(tab.alpha_qj) == 4 and len(tab.alpha_qj[0]) == 3
    assert tab.threshold == max(tab.alpha_j)
