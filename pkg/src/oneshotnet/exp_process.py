"""Exponential processes, Poisson functional representation and refinement.

An :class:`ExpProcess` is a lazily evaluated i.i.d. Exp(1) family indexed by a
finite universe. Selection compares ``log z - log w`` so that tiny weights do
not overflow; a zero weight maps to ``+inf`` and is never selected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import rng
from .errors import AllZeroError, NegativeWeightError, OutOfUniverseError, ShapeMismatchError, ZeroConditioningError
from .finite_prob import Alphabet, FiniteDist, JointDist

Z99 = NormalDist().inv_cdf(0.995)


def harmonic(n: int) -> float:
    """``sum_{i=1}^n 1/i``."""
    if n < 1:
        raise ValueError("harmonic number needs n >= 1")
    return math.fsum(1.0 / np.arange(1, n + 1, dtype=float))


def harmonic_table(n: int) -> np.ndarray:
    """``H_1 .. H_n`` as an array (entry ``k-1`` is ``H_k``)."""
    return np.cumsum(1.0 / np.arange(1, n + 1, dtype=float))


@dataclass(frozen=True)
class ExpProcess:
    universe: Alphabet
    process_id: int
    master_seed: int

    def __post_init__(self):
        if not isinstance(self.universe, Alphabet):
            object.__setattr__(self, "universe", Alphabet(int(self.universe)))
        object.__setattr__(self, "master_seed", int(self.master_seed) & rng.MASK64)
        object.__setattr__(self, "process_id", int(self.process_id))

    @property
    def size(self) -> int:
        return self.universe.size

    def z_values(self, elements=None) -> np.ndarray:
        """Weights at ``elements`` (all elements when omitted)."""
        if elements is None:
            return rng.exp_table([self.master_seed], self.process_id, self.size)[0]
        e = np.asarray(elements, dtype=np.int64)
        if e.size and (e.min() < 0 or e.max() >= self.size):
            raise OutOfUniverseError(f"element outside universe of size {self.size}")
        return rng.exp_at([self.master_seed], self.process_id, e.ravel())[0].reshape(e.shape)


def z_value(p: ExpProcess, u: int) -> float:
    return float(p.z_values([u])[0])


def _weights(p: ExpProcess, weights) -> np.ndarray:
    w = np.asarray(weights.mass if isinstance(weights, FiniteDist) else weights, dtype=float)
    if w.shape != (p.size,):
        raise ShapeMismatchError(f"weights of shape {w.shape} for universe of size {p.size}")
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise NegativeWeightError("weights must be non-negative")
    if not np.any(w > 0):
        raise AllZeroError("no positive weight")
    return w


def pfr_keys(z, w) -> np.ndarray:
    """Selection keys ``log z - log w`` with ``+inf`` at zero weight (broadcasting)."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(z) - np.log(w)


def select_rows(keys) -> np.ndarray:
    """Argmin along the last axis; ``np.argmin`` returns the first (smallest) index on ties."""
    return np.argmin(keys, axis=-1)


def rank_rows(keys) -> np.ndarray:
    """1-based ranks along the last axis; equal keys ordered by index."""
    order = np.argsort(keys, axis=-1, kind="stable")
    ranks = np.empty(order.shape, dtype=np.int64)
    pos = np.broadcast_to(np.arange(1, order.shape[-1] + 1, dtype=np.int64), order.shape)
    np.put_along_axis(ranks, order, pos, axis=-1)
    return ranks


def pfr_select(p: ExpProcess, weights) -> int:
    """Poisson functional representation: ``argmin_u z_u / w_u``."""
    w = _weights(p, weights)
    return int(select_rows(pfr_keys(p.z_values(), w)))


def ranks(p: ExpProcess, weights) -> np.ndarray:
    """Rank of every element in ascending ``z / w`` order."""
    w = _weights(p, weights)
    return rank_rows(pfr_keys(p.z_values(), w))


def rank_of(p: ExpProcess, weights, u: int) -> int:
    if not 0 <= int(u) < p.size:
        raise OutOfUniverseError(f"element {u} outside universe of size {p.size}")
    return int(ranks(p, weights)[int(u)])


@dataclass(frozen=True)
class RefinedMeasure:
    """Refinement of a joint over ``V x U``; ``mass`` has the joint's shape.

    May be a sub-probability measure when some conditional lacks full
    support; it is deliberately not renormalized.
    """

    mass: np.ndarray
    harmonic_number: float

    @property
    def total(self) -> float:
        return math.fsum(self.mass.ravel().tolist())

    @property
    def support(self) -> list:
        idx = np.argwhere(self.mass > 0)
        return [(tuple(int(i) for i in row), float(self.mass[tuple(row)])) for row in idx]


def refine_array(q, z) -> np.ndarray:
    """Refine a non-negative array ``q[..., u]`` by weights ``z[u]``.

    Leading axes play the role of ``V``. Ranks use the unnormalized rows,
    which is harmless since selection order is scale invariant.
    """
    q = np.asarray(q, dtype=float)
    m = q.shape[-1]
    h = harmonic(m)
    qv = q.sum(axis=-1, keepdims=True)
    r = rank_rows(pfr_keys(z, q))
    out = np.where(q > 0, qv / (r * h), 0.0)
    return out


def refine(p: ExpProcess, q: JointDist) -> RefinedMeasure:
    """Refinement of ``q`` (last axis is ``U``, the rest is ``V``) by ``p``."""
    if q.shape[-1] != p.size:
        raise ShapeMismatchError(f"U axis of size {q.shape[-1]}, process universe {p.size}")
    mass = refine_array(q.mass, p.z_values())
    mass.setflags(write=False)
    return RefinedMeasure(mass, harmonic(p.size))


# -- statistical verifiers ---------------------------------------------------

@dataclass
class VerifyRow:
    element: int
    count: int
    mean: float
    ci_low: float
    ci_high: float
    bound: float
    flagged: bool


@dataclass
class VerifyReport:
    kind: str
    trials: int
    seed: int
    rows: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [r for r in self.rows if r.flagged]

    @property
    def ok(self) -> bool:
        return not self.violations


def _mean_ci(count, total, total_sq):
    if count == 0:
        return math.nan, -math.inf, math.inf
    mean = total / count
    if count < 2:
        return mean, -math.inf, math.inf
    var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    half = Z99 * math.sqrt(var / count)
    return mean, mean - half, mean + half


def _rank_statistics(P, Q, trials, seed, chunk=1 << 15):
    """Per-element count, sum and sum of squares of ``rank_Q(U_P)`` over trials."""
    m = P.size
    count = np.zeros(m, dtype=np.int64)
    s1 = np.zeros(m)
    s2 = np.zeros(m)
    for start in range(0, trials, chunk):
        n = min(chunk, trials - start)
        seeds = rng.trial_seeds(seed, n, start)
        z = rng.exp_table(seeds, 0, m)
        kp = pfr_keys(z, P)
        sel = select_rows(kp)
        kq = pfr_keys(z, Q)
        # rank of the selected element under Q: one plus strictly better keys, ties by index
        ks = np.take_along_axis(kq, sel[:, None], axis=1)
        idx = np.arange(m)[None, :]
        better = (kq < ks) | ((kq == ks) & (idx < sel[:, None]))
        r = 1 + better.sum(axis=1)
        count += np.bincount(sel, minlength=m)
        s1 += np.bincount(sel, weights=r, minlength=m)
        s2 += np.bincount(sel, weights=r.astype(float) ** 2, minlength=m)
    return count, s1, s2


def _as_vector(d) -> np.ndarray:
    return np.asarray(d.mass if isinstance(d, (FiniteDist, JointDist)) else d, dtype=float)


def verify_pml(P, Q, trials: int, seed: int = 0) -> VerifyReport:
    """Monte Carlo check of ``E[rank_Q(U_P) | U_P = u] <= P(u)/Q(u) + 1``.

    A row is flagged only when its 99% lower confidence limit exceeds the bound.
    """
    P, Q = _as_vector(P), _as_vector(Q)
    if P.shape != Q.shape:
        raise ShapeMismatchError("P and Q must share a universe")
    if trials < 1:
        raise ValueError("trials must be positive")
    count, s1, s2 = _rank_statistics(P, Q, trials, seed)
    report = VerifyReport("pml", trials, seed)
    for u in range(P.size):
        if P[u] == 0:
            continue
        mean, lo, hi = _mean_ci(int(count[u]), s1[u], s2[u])
        bound = P[u] / Q[u] + 1 if Q[u] > 0 else math.inf
        report.rows.append(VerifyRow(u, int(count[u]), mean, lo, hi, bound, bool(lo > bound)))
    return report


def verify_eprl(P, q: JointDist, v, trials: int, seed: int = 0) -> VerifyReport:
    """Monte Carlo check of the refinement lemma at a fixed ``v``.

    Estimates ``E[1 / Q^U(v, U_P) | U_P = u]`` and compares against
    ``(ln|U| + 1) / Q_V(v) * (P(u) / Q_{U|V}(u|v) + 1)``.
    """
    P = _as_vector(P)
    qa = np.asarray(q.mass if isinstance(q, JointDist) else q, dtype=float)
    if qa.shape[-1] != P.size:
        raise ShapeMismatchError("U axis must match P's universe")
    v = tuple(np.atleast_1d(v).astype(int)) if qa.ndim > 1 else ()
    row = qa[v] if v else qa
    qv = row.sum()
    if qv <= 0:
        raise ZeroConditioningError(f"Q_V({v}) = 0")
    cond = row / qv
    m = P.size
    h = harmonic(m)
    count, s1, s2 = _rank_statistics(P, row, trials, seed)
    report = VerifyReport("eprl", trials, seed)
    scale = h / qv
    for u in range(m):
        if P[u] == 0:
            continue
        if cond[u] == 0:
            # refined mass is zero here, so both sides are infinite
            report.rows.append(VerifyRow(u, int(count[u]), math.inf, math.inf, math.inf, math.inf, False))
            continue
        mean, lo, hi = _mean_ci(int(count[u]), s1[u], s2[u])
        bound = (math.log(m) + 1) / qv * (P[u] / cond[u] + 1)
        report.rows.append(VerifyRow(u, int(count[u]), mean * scale, lo * scale, hi * scale, bound,
                                     bool(lo * scale > bound)))
    return report
