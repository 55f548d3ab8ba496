import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from oneshotnet import rng
from oneshotnet.errors import AllZeroError, OutOfUniverseError, ShapeMismatchError, ZeroConditioningError
from oneshotnet.exp_process import (ExpProcess, harmonic, harmonic_table, pfr_keys, pfr_select, rank_of,
                                    rank_rows, ranks, refine, refine_array, select_rows, verify_eprl,
                                    verify_pml, z_value)
from oneshotnet.finite_prob import JointDist, normalize

seeds64 = st.integers(0, 2**64 - 1)


def weights(m=st.integers(1, 10)):
    return m.flatmap(lambda k: arrays(float, k, elements=st.sampled_from([0.0, 0.05, 0.2, 0.5, 1.0, 3.0])))


# -- z values ------------------------------------------------------------------

def test_z_value_deterministic():
    p = ExpProcess(8, 3, 42)
    assert z_value(p, 5) == z_value(p, 5)
    assert z_value(p, 5) == p.z_values()[5]
    assert z_value(ExpProcess(8, 3, 42), 5) != z_value(ExpProcess(8, 4, 42), 5)
    with pytest.raises(OutOfUniverseError):
        z_value(p, 8)


def test_z_values_exp_moments():
    z = ExpProcess(10**6, 0, 2024).z_values()
    assert np.all(np.isfinite(z)) and np.all(z > 0)
    assert abs(z.mean() - 1.0) < 0.01
    assert abs((z > 1).mean() - math.exp(-1)) < 0.005


# -- selection -----------------------------------------------------------------------

def test_pfr_select_point_mass():
    for seed in range(20):
        assert pfr_select(ExpProcess(5, 0, seed), [0, 0, 0, 1, 0]) == 3


def test_pfr_select_errors():
    p = ExpProcess(3, 0, 1)
    with pytest.raises(AllZeroError):
        pfr_select(p, [0, 0, 0])
    with pytest.raises(ShapeMismatchError):
        pfr_select(p, [1, 1])


def test_pfr_select_two_point_race():
    z = rng.exp_table(rng.trial_seeds(5, 200_000), 0, 2)
    sel = select_rows(pfr_keys(z, [2 / 3, 1 / 3]))
    assert abs((sel == 0).mean() - 2 / 3) < 3 * math.sqrt(2 / 9 / 200_000) * 3


def test_pfr_select_matches_distribution():
    P = normalize([5, 1, 0, 3, 2, 0.5, 4, 1]).mass
    n = 10**6
    z = rng.exp_table(rng.trial_seeds(77, n), 0, P.size)
    emp = np.bincount(select_rows(pfr_keys(z, P)), minlength=P.size) / n
    assert emp[2] == 0
    assert 0.5 * np.abs(emp - P).sum() <= 3 * math.sqrt(P.size / n)


def test_tie_break_smallest_index():
    keys = np.array([[1.0, 0.5, 0.5, 2.0]])
    assert select_rows(keys)[0] == 1
    assert rank_rows(keys)[0].tolist() == [3, 1, 2, 4]


@given(weights(), seeds64, st.floats(1e-6, 1e6))
def test_scale_invariance(w, seed, c):
    assume(w.sum() > 0)
    p = ExpProcess(w.size, 0, seed)
    assert pfr_select(p, w) == pfr_select(p, c * w)
    assert np.array_equal(ranks(p, w), ranks(p, c * w))


@given(weights(), seeds64)
def test_ranks_are_permutation(w, seed):
    assume(w.sum() > 0)
    p = ExpProcess(w.size, 1, seed)
    r = ranks(p, w)
    assert sorted(r.tolist()) == list(range(1, w.size + 1))
    assert rank_of(p, w, pfr_select(p, w)) == 1
    pos, zero = r[w > 0], r[w == 0]
    if zero.size:
        assert pos.max() < zero.min()
        assert np.all(np.diff(zero) > 0)


def test_rank_single_support():
    p = ExpProcess(4, 0, 3)
    assert rank_of(p, [0, 0, 2, 0], 2) == 1
    with pytest.raises(OutOfUniverseError):
        rank_of(p, [1, 1, 1, 1], 4)


# -- refinement ------------------------------------------------------------------------

def test_harmonic():
    assert harmonic(1) == 1.0
    assert harmonic(4) == pytest.approx(25 / 12, abs=1e-15)
    h = harmonic_table(10**6)
    n = np.arange(1, 10**6 + 1)
    assert np.all(h <= np.log(n) + 1)
    with pytest.raises(ValueError):
        harmonic(0)


def test_refine_examples():
    q = JointDist.from_array([[0.2], [0.8]])
    r = refine(ExpProcess(1, 0, 9), q)
    assert np.allclose(r.mass, [[0.2], [0.8]]) and r.harmonic_number == 1.0
    qu = JointDist.from_array([0.1, 0.2, 0.3, 0.4])
    for seed in range(5):
        p = ExpProcess(4, 0, seed)
        m = refine(p, qu).mass
        assert m[pfr_select(p, qu.mass)] == pytest.approx(0.48, abs=1e-15)
        assert refine(p, qu).total == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ShapeMismatchError):
        refine(ExpProcess(3, 0, 0), qu)


def test_refine_sub_probability():
    q = JointDist.from_array([[0.25, 0.25, 0.0], [0.1, 0.2, 0.2]])
    r = refine(ExpProcess(3, 0, 4), q)
    assert 0 < r.total < 1
    assert r.mass[0, 2] == 0
    assert all(m > 0 for _, m in r.support)


@settings(max_examples=50)
@given(st.integers(1, 4), st.integers(1, 6), seeds64, st.data())
def test_refine_total(nv, nu, seed, data):
    q = data.draw(arrays(float, (nv, nu), elements=st.sampled_from([0.0, 0.1, 0.5, 1.0])))
    assume(q.sum() > 0)
    q = q / q.sum()
    m = refine_array(q, ExpProcess(nu, 0, seed).z_values())
    total = m.sum()
    assert 0 < total <= 1 + 1e-12
    full = all(np.all(row > 0) for row in q if row.sum() > 0)
    assert (abs(total - 1) < 1e-12) == full


# -- verifiers ---------------------------------------------------------------------------

def race_oracle(p0, q0):
    """E[rank under Q of element 0 | element 0 selected under P], two elements, by quadrature."""
    p1, q1 = 1 - p0, 1 - q0
    # z1 density e^{-z1}; element 0 wins under P iff z0 < p0/p1 z1, and loses under Q iff z0 >= q0/q1 z1
    a, b = q0 / q1, p0 / p1
    win = integrate.quad(lambda z1: math.exp(-z1) * (1 - math.exp(-b * z1)), 0, math.inf)[0]
    lose_q = integrate.quad(lambda z1: math.exp(-z1) * max(math.exp(-a * z1) - math.exp(-b * z1), 0.0),
                            0, math.inf)[0]
    return 1 + lose_q / win


def test_race_oracle_closed_form():
    assert race_oracle(0.9, 0.1) == pytest.approx(1 + 0.8 / 0.9, abs=1e-9)
    assert race_oracle(0.5, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_verify_pml_two_point():
    rep = verify_pml([0.9, 0.1], [0.1, 0.9], trials=100_000, seed=3)
    assert rep.ok
    row = rep.rows[0]
    assert row.ci_low <= race_oracle(0.9, 0.1) <= row.ci_high
    assert row.bound == pytest.approx(10.0)


def test_verify_pml_same_distribution():
    P = normalize([1, 2, 3, 4]).mass
    rep = verify_pml(P, P, trials=20_000, seed=1)
    assert rep.ok
    assert all(r.mean == 1.0 for r in rep.rows)
    assert all(r.bound == 2.0 for r in rep.rows)


def test_verify_pml_point_q():
    rep = verify_pml([0.3, 0.7], [1.0, 0.0], trials=20_000, seed=2)
    assert rep.rows[0].mean == 1.0 and rep.ok
    assert rep.rows[1].bound == math.inf


def test_verify_pml_deterministic():
    a = verify_pml([0.2, 0.3, 0.5], [0.5, 0.3, 0.2], trials=10_000, seed=8)
    b = verify_pml([0.2, 0.3, 0.5], [0.5, 0.3, 0.2], trials=10_000, seed=8)
    assert a.rows == b.rows


def test_verify_eprl_examples():
    rep = verify_eprl([1.0], JointDist.from_array([[0.4], [0.6]]), 0, trials=10_000, seed=1)
    assert rep.ok and rep.rows[0].mean == pytest.approx(1 / 0.4)
    m = 6
    rep = verify_eprl(np.full(m, 1 / m), JointDist.from_array(np.full(m, 1 / m)), (), trials=20_000, seed=2)
    assert rep.ok
    for r in rep.rows:
        assert r.mean == pytest.approx(harmonic(m))
        assert harmonic(m) <= (math.log(m) + 1) * 2
    rs = np.random.default_rng(0)
    q = JointDist.from_array(rs.random((3, 3)), normalize=True)
    for v in range(3):
        assert verify_eprl(normalize(rs.random(3)), q, v, trials=100_000, seed=v).ok
    with pytest.raises(ZeroConditioningError):
        verify_eprl([0.5, 0.5], JointDist.from_array([[0.0, 0.0], [0.5, 0.5]]), 0, trials=10_000)


def test_verify_eprl_matches_refine():
    # the estimator averages exactly 1 / refine(...)(v, selected)
    q = JointDist.from_array([[0.1, 0.2, 0.05], [0.3, 0.15, 0.2]])
    P = np.array([0.5, 0.3, 0.2])
    n = 3000
    rep = verify_eprl(P, q, 1, trials=n, seed=6)
    seeds = rng.trial_seeds(6, n)
    acc = {u: [] for u in range(3)}
    for s in seeds:
        p = ExpProcess(3, 0, int(s))
        u = pfr_select(p, P)
        acc[u].append(1 / refine(p, q).mass[1, u])
    for r in rep.rows:
        assert r.mean == pytest.approx(np.mean(acc[r.element]), rel=1e-12)
