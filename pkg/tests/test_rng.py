import numpy as np
import pytest

from oneshotnet import rng

# Philox4x32-10 known-answer vectors (Random123 distribution)
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("counter,key,expected", KAT)
def test_philox_known_answers(counter, key, expected):
    assert rng.philox_block(counter, key) == expected
    ref = rng.philox4x32(*counter, *key)
    assert tuple(int(w) for w in ref) == expected


def test_compiled_matches_reference():
    seeds = [0, 1, 2**63 + 5, 123456789]
    elems = np.array([0, 1, 2, 7, 2**33 + 1])
    got = rng.exp_at(seeds, 4, elems)
    for b, s in enumerate(seeds):
        assert np.array_equal(got[b], rng.reference_exp(s, 4, elems))
    table = rng.exp_table(seeds, 4, 9)
    for b, s in enumerate(seeds):
        assert np.array_equal(table[b], rng.reference_exp(s, 4, np.arange(9)))
    ts = rng.trial_seeds(17, 5, 3)
    assert [int(t) for t in ts] == [rng.reference_trial_seed(17, 3 + k) for k in range(5)]
    u = rng.uniforms(ts, 2, rng.ROLE_OUTPUT)
    assert u.tolist() == [rng.reference_uniform(int(t), 2, rng.ROLE_OUTPUT) for t in ts]


def test_frozen_values():
    assert [int(t) for t in rng.trial_seeds(11, 2, 5)] == [9536268382038040054, 12183611134501552080]
    assert rng.reference_uniform(9, 2, 1) == 0.5637514664011753
    assert rng.exp_at([5], 3, [2**40 + 3])[0, 0] == pytest.approx(4.61927683, abs=1e-8)


def test_streams_are_distinct():
    t = rng.trial_seeds(1, 4)
    assert not np.array_equal(rng.uniforms(t, 1, 0), rng.uniforms(t, 1, 1))
    assert not np.array_equal(rng.uniforms(t, 1, 0), rng.uniforms(t, 2, 0))
    assert not np.array_equal(rng.exp_table([3], 0, 6), rng.exp_table([3], 1, 6))
    assert np.array_equal(rng.trial_seeds(1, 10)[4:], rng.trial_seeds(1, 6, 4))


def test_uniforms_are_open_and_uniform():
    u = rng.sample_uniforms(99, 200_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005
    hist = np.bincount((u * 10).astype(int), minlength=10) / u.size
    assert np.max(np.abs(hist - 0.1)) < 0.005


def test_large_seeds_keep_low_bits():
    # a list mixing small and 64-bit seeds must not round through float64
    seeds = [3, 2**64 - 1, 2**53 + 1]
    got = rng.exp_at(seeds, 0, np.arange(3))
    for b, s in enumerate(seeds):
        assert np.array_equal(got[b], rng.reference_exp(s, 0, np.arange(3)))
    assert not np.array_equal(got[2], rng.reference_exp(2**53, 0, np.arange(3)))
