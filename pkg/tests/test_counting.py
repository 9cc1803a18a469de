import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_shell, exact_count
from shellvar import Shell, superball, two_block
from shellvar.counting import (
    brute_force_count,
    brute_force_shell,
    count,
    count_dilate,
    count_shell,
    philox_shifts,
    shell_counts,
)
from shellvar.errors import CapExceededError, DomainError


def test_hand_count(sb):
    assert count_dilate(sb, 1.0, [0, 0, 0]) == 7
    assert count_dilate(sb, 1.0, [0, 0, 0], backend="numpy") == 7


def test_half_shift(sb):
    u = [0.5, 0, 0]
    assert count_dilate(sb, 1.0, u) == brute_force_count(sb, 1.0, u) == exact_count(sb, 1, u)


def test_origin_always_counted(tb):
    assert count_dilate(tb, 0.5) >= 1


def test_small_rho_far_shift(sb):
    assert brute_force_count(sb, 0.1, [0.3, 0.3, 0.3]) == 0
    assert count_dilate(sb, 0.1, [0.3, 0.3, 0.3]) == 0


def test_shell_example(sb):
    sh = Shell(3.0, 0.5)
    assert count_shell(sb, sh, [0, 0, 0]) == brute_force_shell(sb, sh, [0, 0, 0])


def test_empty_shell(sb):
    # the gauge of integer points near radius 2.5 along the axes never hits this window
    sh = Shell(2.5, 1e-6)
    assert count_shell(sb, sh, [0, 0, 0]) == 0


@pytest.mark.parametrize("dom", [superball(4, 3), two_block()], ids=["superball", "two_block"])
def test_exact_oracle_on_boundary_ties(dom):
    # rational radii and shifts put lattice points exactly on the boundary
    for rho, u in [(2, (0, 0, 0)), (3, (0, 0, 0)), (2, (Fraction(1, 2), 0, 0)),
                   (Fraction(5, 2), (Fraction(1, 2), Fraction(1, 2), 0)), (4, (0, 0, 0))]:
        want = exact_count(dom, rho, u)
        uf = [float(v) for v in u]
        assert count_dilate(dom, float(rho), uf) == want
        assert count_dilate(dom, float(rho), uf, backend="numpy") == want
        assert brute_force_count(dom, float(rho), uf) == want


@pytest.mark.parametrize("dom", [superball(4, 3), two_block()], ids=["superball", "two_block"])
def test_random_against_brute_force(dom):
    rng = np.random.default_rng(99)
    for _ in range(60):
        rho = rng.uniform(0.2, 8)
        u = rng.uniform(-0.5, 0.5, 3)
        bf = brute_force_count(dom, rho, u)
        assert count_dilate(dom, rho, u) == bf
        assert count_dilate(dom, rho, u, backend="numpy") == bf


@pytest.mark.parametrize("axis", [1, 2, 3])
def test_axis_invariance(tb, axis):
    u = [0.11, -0.27, 0.35]
    assert count_dilate(tb, 6.3, u, axis=axis) == brute_force_count(tb, 6.3, u)


def test_workers_invariance(tb):
    u = [0.1, 0.2, -0.3]
    vals = {count(tb, 17.5, 16.0, u, workers=w).count for w in (1, 2, 4, 8)}
    assert len(vals) == 1


def test_large_radius_against_volume(sb):
    # the count of a big dilate is vol * rho^3 up to a lower-order lattice error
    rho = 60.0
    c = count_dilate(sb, rho, [0.1, 0.2, 0.3])
    from shellvar import volume
    assert abs(c - volume(sb) * rho ** 3) / (volume(sb) * rho ** 3) < 2e-3


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 6.0), st.floats(0.0, 2.0),
       st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3))
def test_monotone_in_rho(rho, extra, u):
    dom = superball(4, 3)
    assert count_dilate(dom, rho, u) <= count_dilate(dom, rho + extra, u)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 6.0), st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3))
def test_shell_is_difference(r, u):
    dom = two_block()
    sh = Shell(r, 0.4)
    assert count_shell(dom, sh, u) == count_dilate(dom, sh.outer, u) - count_dilate(dom, sh.inner, u)


def test_errors(sb):
    with pytest.raises(CapExceededError):
        brute_force_count(sb, 13.0)
    with pytest.raises(DomainError):
        count(sb, -1.0)
    with pytest.raises(DomainError):
        count(sb, 2.0, 3.0)
    with pytest.raises(DomainError):
        count(sb, 2.0, u=[0.1, 0.2])
    with pytest.raises(DomainError):
        count(sb, 2.0, axis=4)


def test_count_result_fields(sb):
    res = count(sb, 5.0, 0.0, [0.1, 0.1, 0.1])
    assert res.fibers_scanned > 0 and res.seconds >= 0
    assert res.shift == (0.1, 0.1, 0.1)


def test_philox_chunk_independence():
    full = philox_shifts(7, 0, 1000, 3)
    for a, b in [(0, 1), (1, 5), (333, 777), (998, 1000), (5, 6)]:
        np.testing.assert_array_equal(philox_shifts(7, a, b, 3), full[a:b])
    assert full.min() >= -0.5 and full.max() < 0.5
    assert not np.array_equal(philox_shifts(8, 0, 10, 3), full[:10])


def test_philox_uniform():
    U = philox_shifts(1, 0, 200_000, 3)
    np.testing.assert_allclose(U.mean(axis=0), 0, atol=4 * math.sqrt(1 / 12 / len(U)))
    np.testing.assert_allclose(U.var(axis=0), 1 / 12, rtol=1e-2)


def test_shell_counts_deterministic(sb):
    sh = Shell(6.0, 0.3)
    base = shell_counts(sb, sh, 5, 3000, workers=1)
    for w in (4, 8):
        np.testing.assert_array_equal(shell_counts(sb, sh, 5, 3000, workers=w), base)
    np.testing.assert_array_equal(shell_counts(sb, sh, 5, 3000, chunk=101), base)
    np.testing.assert_array_equal(shell_counts(sb, sh, 5, 3000, backend="numpy", chunk=500), base)


def test_shell_counts_match_single_counts(tb):
    sh = Shell(4.0, 0.5)
    U = philox_shifts(3, 0, 50, 3)
    got = shell_counts(tb, sh, 3, 50)
    assert list(got) == [count_shell(tb, sh, u) for u in U]


def test_large_shell_against_enumeration(sb):
    sh = Shell(80.0, 80.0 ** -2)
    U = philox_shifts(1, 0, 8, 3)
    got = shell_counts(sb, sh, 1, 8)
    assert list(got) == [enumerate_shell(sb, sh.outer, sh.inner, u) for u in U]
