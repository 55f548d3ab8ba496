"""Coding scheme execution and coupled actual/ideal simulation.

The engine runs a chunk of trials at once. For each trial the public
randomness is one 64-bit seed: node ``i``'s codebook is the exponential
process with that key and process id ``i``, and the channel/output noise of
node ``i`` are single uniforms from the same key in a separate counter
domain. The ideal (genie) network and the actual network consume the same
codebooks and the same uniforms, so they coincide until a node decodes
wrongly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import rng
from .exp_process import ExpProcess, harmonic, pfr_keys, rank_rows, select_rows
from .network import (AuxStructure, ErrorSet, IdealJoint, NetworkSpec, build_ideal_joint, error_probability_ideal,
                      uname, xname, yname)

Z99 = NormalDist().inv_cdf(0.995)
CHUNK_BUDGET = 1 << 22


@dataclass(frozen=True)
class CodebookFamily:
    """One exponential process per node, all keyed by the same seed."""

    master_seed: int
    sizes: tuple

    def process(self, i: int) -> ExpProcess:
        return ExpProcess(self.sizes[i - 1], i, self.master_seed)

    @classmethod
    def for_aux(cls, aux: AuxStructure, seed: int):
        return cls(int(seed) & rng.MASK64, tuple(a.u_size for a in aux.nodes))


# -- per-node decoding plan ------------------------------------------------------

@dataclass
class NodePlan:
    i: int
    decode: tuple
    d_unique: int
    table: np.ndarray | None
    harmonics: tuple

    @property
    def d(self) -> int:
        return len(self.decode)


def _node_plan(ij: IdealJoint, i: int, cap: int | None = None) -> NodePlan:
    ax = ij.aux.node(i)
    if ax.d_unique == 0:
        return NodePlan(i, ax.decode, 0, None, ())
    names = [yname(i)] + [uname(a) for a in ax.decode]
    table = ij.dense(names, cap)
    hs = tuple(harmonic(ij.aux.node(a).u_size) for a in ax.decode)
    return NodePlan(i, ax.decode, ax.d_unique, table, hs)


class CodecPlan:
    """Decoding tables for every node, derived from the ideal joint."""

    def __init__(self, ij: IdealJoint, cap: int | None = None):
        self.ij = ij
        self.spec = ij.spec
        self.aux = ij.aux
        self.nodes = [_node_plan(ij, i, cap) for i in range(1, self.spec.N + 1)]
        self.u_sizes = tuple(a.u_size for a in self.aux.nodes)

    def per_trial_cost(self) -> int:
        cost = sum(self.u_sizes) + 8 * self.spec.N
        for p in self.nodes:
            if p.table is not None:
                cost += 4 * int(np.prod(p.table.shape[1:]))
        return cost


def _safe_div(a, b):
    return np.divide(a, b, out=np.zeros(np.broadcast_shapes(a.shape, b.shape)), where=b > 0)


def decode_batch(plan: NodePlan, y, z: dict):
    """Decode ``U_{a_1..a_d'}`` for a batch of observations.

    ``z[a]`` holds the codebook weights of node ``a``, shape ``(B, |U_a|)``.
    Returns ``(decoded, failed)``; failed trials hit a zero-probability
    conditioning event and carry ``-1`` from that point on.
    """
    y = np.asarray(y, dtype=np.int64)
    B = y.size
    dec = np.full((B, plan.d_unique), -1, dtype=np.int64)
    failed = np.zeros(B, dtype=bool)
    if plan.d_unique == 0:
        return dec, failed
    T = plan.table
    d = plan.d
    for j in range(plan.d_unique):
        idx = (y,) + tuple(np.where(failed, 0, dec[:, t]) for t in range(j))
        S = T[idx]  # (B, m_j, ..., m_d)
        mass = S.reshape(B, -1).sum(axis=1)
        failed |= mass <= 0
        Q = np.ones(B)
        for k in range(d - 1, j, -1):
            Mk = S.sum(axis=tuple(range(1, k - j + 1))) if k > j else S
            zk = z[plan.decode[k]]
            keys = pfr_keys(zk.reshape(zk.shape + (1,) * (Mk.ndim - 2)), Mk)
            r = np.moveaxis(rank_rows(np.moveaxis(keys, 1, -1)), -1, 1)
            Qb = Q[:, None, ...]
            Q = np.where((Mk > 0) & (Qb > 0), Qb / (r * plan.harmonics[k]), 0.0)
        cond = _safe_div(S, S.sum(axis=1, keepdims=True))
        Qt = (Q[:, None, ...] * cond).reshape(B, S.shape[1], -1).sum(axis=2)
        failed |= ~np.any(Qt > 0, axis=1)
        pick = select_rows(pfr_keys(z[plan.decode[j]], Qt))
        dec[:, j] = np.where(failed, -1, pick)
    return dec, failed


def _inverse_transform(rows, u):
    cum = np.cumsum(rows, axis=1)
    t = u * cum[:, -1]
    x = (cum <= t[:, None]).sum(axis=1)
    over = x >= rows.shape[1]
    if np.any(over):
        x[over] = rows.shape[1] - 1 - np.argmax(rows[over][:, ::-1] > 0, axis=1)
    return x


def _gather(table, parents, values: dict, B: int):
    if parents:
        return table[tuple(values[p] for p in parents)]
    return np.broadcast_to(table, (B, table.shape[-1]))


@dataclass
class BatchResult:
    seeds: np.ndarray
    ideal: dict
    actual: dict
    decoded: list
    failed: np.ndarray
    decode_error: np.ndarray
    first_error: np.ndarray
    ideal_error: np.ndarray
    actual_error: np.ndarray

    @property
    def traces_equal(self) -> np.ndarray:
        eq = np.ones(self.seeds.size, dtype=bool)
        for k in self.ideal:
            eq &= self.ideal[k] == self.actual[k]
        return eq


def simulate_batch(plan: CodecPlan, e: ErrorSet, seeds) -> BatchResult:
    seeds = np.ascontiguousarray(np.asarray(seeds, dtype=np.uint64))
    B = seeds.size
    spec, aux = plan.spec, plan.aux
    z: dict = {}
    ideal: dict = {}
    actual: dict = {}
    decoded = []
    failed = np.zeros(B, dtype=bool)
    dec_err = np.zeros(B, dtype=bool)
    first = np.zeros((B, 2), dtype=np.int64)
    for i in range(1, spec.N + 1):
        nd, ax, npl = spec.node(i), aux.node(i), plan.nodes[i - 1]
        z[i] = rng.exp_table(seeds, i, ax.u_size)
        u_ch = rng.uniforms(seeds, i, rng.ROLE_CHANNEL)
        u_out = rng.uniforms(seeds, i, rng.ROLE_OUTPUT)
        table = nd.channel.table
        ideal[yname(i)] = _inverse_transform(_gather(table, nd.parents, ideal, B), u_ch)
        actual[yname(i)] = _inverse_transform(_gather(table, nd.parents, actual, B), u_ch)

        dec, fail = decode_batch(npl, actual[yname(i)], z)
        decoded.append(dec)
        mism = fail.copy()
        for j, a in enumerate(ax.unique):
            wrong = dec[:, j] != ideal[uname(a)]
            fresh = wrong & ~dec_err & (first[:, 0] == 0)
            first[fresh] = (i, j + 1)
            mism |= wrong
        fresh = fail & (first[:, 0] == 0)
        first[fresh] = (i, 0)
        dec_err |= mism
        failed |= fail

        iv = dict(ideal)
        av = dict(actual)
        for j, a in enumerate(ax.unique):
            av[uname(a)] = np.where(dec[:, j] < 0, 0, dec[:, j])
        ideal[uname(i)] = select_rows(pfr_keys(z[i], _gather(ax.aux_kernel.table, ax.aux_parents, iv, B)))
        actual[uname(i)] = select_rows(pfr_keys(z[i], _gather(ax.aux_kernel.table, ax.aux_parents, av, B)))
        iv[uname(i)] = ideal[uname(i)]
        av[uname(i)] = actual[uname(i)]
        ideal[xname(i)] = _inverse_transform(_gather(ax.out_kernel.table, ax.out_parents, iv, B), u_out)
        actual[xname(i)] = _inverse_transform(_gather(ax.out_kernel.table, ax.out_parents, av, B), u_out)
    ideal_err = e.evaluate(ideal)
    actual_err = e.evaluate(actual) | failed
    return BatchResult(seeds, ideal, actual, decoded, failed, dec_err, first, ideal_err, actual_err)


# -- single-trial interface ----------------------------------------------------

@dataclass
class TrialTrace:
    seed: int
    actual: dict
    ideal: dict
    decoded: dict
    first_error: tuple | None
    actual_error: bool
    ideal_error: bool
    failed: bool

    @property
    def decode_error(self) -> bool:
        return self.first_error is not None


def _trace(res: BatchResult, aux: AuxStructure, t: int) -> TrialTrace:
    fe = tuple(int(v) for v in res.first_error[t])
    return TrialTrace(
        int(res.seeds[t]),
        {k: int(v[t]) for k, v in res.actual.items()},
        {k: int(v[t]) for k, v in res.ideal.items()},
        {i: tuple(int(v) for v in res.decoded[i - 1][t]) for i in range(1, len(aux.nodes) + 1)},
        fe if fe[0] else None,
        bool(res.actual_error[t]),
        bool(res.ideal_error[t]),
        bool(res.failed[t]),
    )


def simulate_trial(spec: NetworkSpec, aux: AuxStructure, e: ErrorSet, trial_seed: int,
                   plan: CodecPlan | None = None) -> TrialTrace:
    plan = plan or CodecPlan(build_ideal_joint(spec, aux))
    res = simulate_batch(plan, e, [int(trial_seed) & rng.MASK64])
    return _trace(res, aux, 0)


def decode_step(i: int, y_i: int, cb: CodebookFamily, ij: IdealJoint, plan: CodecPlan | None = None) -> tuple:
    """Decoded tuple ``(u_{a_1}, ..., u_{a_d'})`` at node ``i``; ``-1`` marks a zero-probability context."""
    npl = plan.nodes[i - 1] if plan is not None else _node_plan(ij, i)
    seeds = np.array([cb.master_seed], dtype=np.uint64)
    z = {a: rng.exp_table(seeds, a, cb.sizes[a - 1]) for a in npl.decode}
    dec, _ = decode_batch(npl, np.array([y_i]), z)
    return tuple(int(v) for v in dec[0])


def encode_step(i: int, y_i: int, decoded, cb: CodebookFamily, local_seed: int,
                spec: NetworkSpec, aux: AuxStructure) -> tuple[int, int]:
    """``(u_i, x_i)``: PFR on the auxiliary kernel row, then the output kernel sampled by inverse transform."""
    ax = aux.node(i)
    seeds = np.array([int(local_seed) & rng.MASK64], dtype=np.uint64)
    vals = {yname(i): np.array([y_i])}
    for a, v in zip(ax.unique, decoded):
        vals[uname(a)] = np.array([max(int(v), 0)])
    z = rng.exp_table([cb.master_seed], i, ax.u_size)
    u = select_rows(pfr_keys(z, _gather(ax.aux_kernel.table, ax.aux_parents, vals, 1)))
    vals[uname(i)] = u
    x = _inverse_transform(_gather(ax.out_kernel.table, ax.out_parents, vals, 1),
                           rng.uniforms(seeds, i, rng.ROLE_OUTPUT))
    return int(u[0]), int(x[0])


# -- Monte Carlo -----------------------------------------------------------------

def wilson_interval(successes: int, trials: int, z: float = Z99) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass
class MonteCarloEstimate:
    trials: int
    successes: int
    point: float
    ci_low: float
    ci_high: float
    seed: int

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int):
        lo, hi = wilson_interval(successes, trials)
        return cls(trials, successes, successes / trials if trials else 0.0, lo, hi, seed)

    @property
    def halfwidth(self) -> float:
        return (self.ci_high - self.ci_low) / 2


@dataclass
class MonteCarloResult:
    actual: MonteCarloEstimate
    coupling: MonteCarloEstimate
    ideal_exact: float
    ideal_empirical: MonteCarloEstimate
    dominance_violations: int
    indicators: dict = field(default_factory=dict)


def chunk_size(plan: CodecPlan, trials: int) -> int:
    return int(max(1, min(trials, CHUNK_BUDGET // max(plan.per_trial_cost(), 1))))


def run_monte_carlo(spec: NetworkSpec, aux: AuxStructure, e: ErrorSet, master_seed: int, trials: int,
                    ij: IdealJoint | None = None, chunk: int | None = None, n_jobs: int = 1,
                    keep_indicators: bool = False, cap: int | None = None) -> MonteCarloResult:
    """Coupled simulation of ``trials`` independent runs.

    Trial ``t`` uses the seed derived from ``(master_seed, t)``, so results do
    not depend on chunking or on the number of worker threads.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ij = ij or build_ideal_joint(spec, aux, cap)
    plan = CodecPlan(ij, cap)
    chunk = chunk or chunk_size(plan, trials)
    starts = list(range(0, trials, chunk))

    def work(start):
        n = min(chunk, trials - start)
        res = simulate_batch(plan, e, rng.trial_seeds(master_seed, n, start))
        viol = res.actual_error & ~(res.ideal_error | res.decode_error)
        return res.actual_error, res.ideal_error, res.decode_error, viol

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    act = np.concatenate([p[0] for p in parts])
    ide = np.concatenate([p[1] for p in parts])
    dec = np.concatenate([p[2] for p in parts])
    viol = np.concatenate([p[3] for p in parts])
    out = MonteCarloResult(
        MonteCarloEstimate.from_counts(int(act.sum()), trials, master_seed),
        MonteCarloEstimate.from_counts(int(dec.sum()), trials, master_seed),
        error_probability_ideal(ij, e),
        MonteCarloEstimate.from_counts(int(ide.sum()), trials, master_seed),
        int(viol.sum()),
    )
    if keep_indicators:
        out.indicators = {"actual": act, "ideal": ide, "decode": dec}
    return out


def best_trial_seed(master_seed: int, indicators) -> tuple[int, int]:
    """A trial whose error indicator is at most the batch mean: ``(trial index, seed)``."""
    ind = np.asarray(indicators)
    t = int(np.argmin(ind))
    return t, int(rng.trial_seeds(master_seed, 1, t)[0])
