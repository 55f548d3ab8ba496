import math

import numpy as np
import pytest

from oneshotnet import rng
from oneshotnet.codec import (CodebookFamily, CodecPlan, best_trial_seed, decode_step, encode_step,
                              run_monte_carlo, simulate_batch, simulate_trial, wilson_interval)
from oneshotnet.network import build_ideal_joint
from oneshotnet.scenarios import channel_coding

import refcodec
from instances import bsc, micro_instances, pdcf_instance
from nets import chain_network, identity_coding


def cases():
    out = {k: (b.spec, b.aux, b.error_set) for k, b in micro_instances().items()}
    b = pdcf_instance()
    out["pdcf"] = (b.spec, b.aux, b.error_set)
    out["chain-123"] = chain_network((1, 2, 3), 2)
    out["chain-312"] = chain_network((3, 1, 2), 2, seed=1)
    out["chain-soft"] = chain_network((2, 3, 1), 1, seed=2)
    b = channel_coding([0.5, 0.5], bsc(0.49), 2)
    out["bsc49"] = (b.spec, b.aux, b.error_set)
    return out


@pytest.mark.parametrize("name", sorted(cases()))
def test_engine_matches_reference(name):
    spec, aux, e = cases()[name]
    ij = build_ideal_joint(spec, aux)
    plan = CodecPlan(ij)
    seeds = rng.trial_seeds(101, 150)
    res = simulate_batch(plan, e, seeds)
    for t, s in enumerate(seeds):
        ref = refcodec.trial(spec, aux, e, ij, s)
        assert {k: int(v[t]) for k, v in res.ideal.items()} == ref["ideal"]
        assert {k: int(v[t]) for k, v in res.actual.items()} == ref["actual"]
        for i in range(1, spec.N + 1):
            assert tuple(int(v) for v in res.decoded[i - 1][t]) == ref["decoded"][i]
        assert bool(res.failed[t]) == ref["failed"]
        assert bool(res.decode_error[t]) == ref["decode_error"]
        assert bool(res.ideal_error[t]) == ref["ideal_error"]
        assert bool(res.actual_error[t]) == ref["actual_error"]


def test_bsc049_error_rate_matches_reference():
    b = channel_coding([0.5, 0.5], bsc(0.49), 2)
    ij = b.ideal_joint()
    n_ref = 3000
    seeds = rng.trial_seeds(7, n_ref)
    ref = sum(refcodec.trial(b.spec, b.aux, b.error_set, ij, s)["actual_error"] for s in seeds)
    mc = run_monte_carlo(b.spec, b.aux, b.error_set, 7, 100_000)
    lo, hi = wilson_interval(ref, n_ref)
    # two independent 99% intervals overlap
    assert mc.actual.ci_low <= hi and lo <= mc.actual.ci_high
    assert 0.4 < mc.actual.point < 0.6


def test_identity_channel_errors():
    # the decoder is a PFR over the posterior {(x, 0), (x, 1)}, not a maximum-likelihood rule,
    # so it errs exactly when the weight of the other message at the received x is smaller
    spec, aux, e = identity_coding(2)
    seeds = rng.trial_seeds(3, 5000)
    res = simulate_batch(CodecPlan(build_ideal_joint(spec, aux)), e, seeds)
    z = rng.exp_table(seeds, 1, 4)
    x, m = res.actual["X1"], res.actual["Y1"]
    rows = np.arange(seeds.size)
    guess = (z[rows, 2 * x + 1] < z[rows, 2 * x]).astype(int)
    assert np.array_equal(res.actual_error, guess != m)
    assert not res.ideal_error.any()
    # three i.i.d. exponentials: P(z1 < z0 | z0 < z2) = 1/3
    assert abs(res.actual_error.mean() - 1 / 3) < 0.02


def test_traces_coincide_without_decode_error():
    for spec, aux, e in cases().values():
        res = simulate_batch(CodecPlan(build_ideal_joint(spec, aux)), e, rng.trial_seeds(5, 2000))
        clean = ~res.decode_error
        assert np.all(res.traces_equal[clean])
        assert np.all(~res.actual_error | res.ideal_error | res.decode_error)


def test_first_error_location():
    spec, aux, e = chain_network((1, 2, 3), 2)
    plan = CodecPlan(build_ideal_joint(spec, aux))
    seeds = rng.trial_seeds(9, 3000)
    res = simulate_batch(plan, e, seeds)
    hit = res.decode_error
    assert hit.any()
    assert np.all(res.first_error[hit, 0] == 4)
    assert set(res.first_error[hit, 1].tolist()) <= {1, 2}
    t = int(np.argmax(hit))
    tr = simulate_trial(spec, aux, e, int(seeds[t]), plan)
    assert tr.decode_error and tr.first_error[0] == 4
    assert tr.actual == {k: int(v[t]) for k, v in res.actual.items()}


def test_decode_and_encode_steps():
    b = channel_coding([0.5, 0.5], bsc(0.05), 4)
    ij = b.ideal_joint()
    seed = int(rng.trial_seeds(2, 1)[0])
    cb = CodebookFamily.for_aux(b.aux, seed)
    tr = simulate_trial(b.spec, b.aux, b.error_set, seed)
    assert decode_step(2, tr.actual["Y2"], cb, ij) == tr.decoded[2]
    u, x = encode_step(1, tr.actual["Y1"], (), cb, seed, b.spec, b.aux)
    assert (u, x) == (tr.actual["U1"], tr.actual["X1"])
    # node 1 looks up the codeword of message m: the best (x, m) among those with message m
    z = rng.exp_table([seed], 1, 8)[0]
    m = tr.actual["Y1"]
    assert u == min(range(m, 8, 4), key=lambda k: (z[k], k))


def test_determinism_across_threads_and_chunks():
    b = micro_instances()["relay"]
    runs = [run_monte_carlo(b.spec, b.aux, b.error_set, 11, 6000, chunk=c, n_jobs=j, keep_indicators=True)
            for c, j in ((None, 1), (500, 1), (777, 4))]
    for r in runs[1:]:
        for k in ("actual", "ideal", "decode"):
            assert np.array_equal(r.indicators[k], runs[0].indicators[k])
        assert r.actual == runs[0].actual


def test_monte_carlo_basic():
    spec, aux, e = identity_coding(2)
    from oneshotnet.network import ErrorSet
    mc = run_monte_carlo(spec, aux, ErrorSet.empty(), 1, 1000)
    assert mc.actual.successes == 0 and mc.ideal_exact == 0.0
    mc = run_monte_carlo(spec, aux, e, 1, 1000)
    assert mc.actual.ci_low <= mc.actual.point <= mc.actual.ci_high
    assert mc.dominance_violations == 0
    with pytest.raises(ValueError):
        run_monte_carlo(spec, aux, e, 1, 0)


def test_genie_consistency():
    b = micro_instances()["gp"]
    ij = b.ideal_joint()
    n = 100_000
    res = simulate_batch(CodecPlan(ij), b.error_set, rng.trial_seeds(4, n))
    names = list(ij.table.names)
    sizes = [ij.table.sizes[k] for k in names]
    flat = np.ravel_multi_index([res.ideal[k] for k in names], sizes)
    emp = np.bincount(flat, minlength=math.prod(sizes)) / n
    exact = ij.dense(names).ravel()
    assert 0.5 * np.abs(emp - exact).sum() <= 3 * math.sqrt(ij.n_atoms / n)


def test_best_trial_seed():
    b = micro_instances()["mac"]
    mc = run_monte_carlo(b.spec, b.aux, b.error_set, 21, 2000, keep_indicators=True)
    ind = mc.indicators["actual"]
    t, s = best_trial_seed(21, ind)
    assert ind[t] <= ind.mean()
    assert s == int(rng.trial_seeds(21, 2000)[t])
    assert not simulate_trial(b.spec, b.aux, b.error_set, s).actual_error


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.07
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)
    assert wilson_interval(100, 100)[1] == 1.0
