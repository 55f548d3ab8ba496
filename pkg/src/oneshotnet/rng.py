"""Counter-based randomness: Philox4x32-10 keyed by 64-bit seeds.

Every random quantity in the package is a pure function of a key and a
counter, so codebooks never need to be stored and results do not depend on
evaluation order. Counter layout ``(c0, c1, c2, c3)``:

==========================  =====================  ==========================
stream                      key                    counter
==========================  =====================  ==========================
exponential weights         codebook seed          (block lo, block hi, pid, 0)
per-trial noise uniforms    trial seed             (role, 0, node, 1)
trial seeds                 master seed            (trial lo, trial hi, 0, 2)
==========================  =====================  ==========================

Element ``u`` of a process uses block ``u // 2`` and the word pair
``(w0, w1)`` when ``u`` is even, ``(w2, w3)`` otherwise.
"""

from __future__ import annotations

import numba as nb
import numpy as np

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF
PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85

DOMAIN_EXP = 0
DOMAIN_NOISE = 1
DOMAIN_TRIAL = 2

ROLE_CHANNEL = 0
ROLE_OUTPUT = 1

_TWO_M53 = 2.0**-53


# -- numpy reference ---------------------------------------------------------

def philox4x32(c0, c1, c2, c3, k0, k1, rounds: int = 10):
    """Vectorized Philox4x32 on uint64-held 32-bit words (reference version)."""
    m32 = np.uint64(MASK32)
    m0, m1 = np.uint64(PHILOX_M0), np.uint64(PHILOX_M1)
    w0, w1 = np.uint64(PHILOX_W0), np.uint64(PHILOX_W1)
    s32 = np.uint64(32)
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3))
    k0 = np.asarray(k0, dtype=np.uint64)
    k1 = np.asarray(k1, dtype=np.uint64)
    for r in range(rounds):
        if r:
            k0 = (k0 + w0) & m32
            k1 = (k1 + w1) & m32
        p0 = c0 * m0
        p1 = c2 * m1
        c0, c1, c2, c3 = (p1 >> s32) ^ c1 ^ k0, p1 & m32, (p0 >> s32) ^ c3 ^ k1, p0 & m32
    return c0, c1, c2, c3


def _split(x):
    x = np.asarray(x, dtype=np.uint64)
    return x & np.uint64(MASK32), x >> np.uint64(32)


def _words_to_unit(hi, lo):
    x = (np.asarray(hi, dtype=np.uint64) << np.uint64(32)) | np.asarray(lo, dtype=np.uint64)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def reference_exp(seed: int, pid: int, elements) -> np.ndarray:
    """Exponential weights via the numpy reference (slow; used to cross-check)."""
    u = np.asarray(elements, dtype=np.uint64)
    k0, k1 = _split(np.uint64(seed))
    b0, b1 = _split(u >> np.uint64(1))
    w = philox4x32(b0, b1, np.uint64(pid), np.uint64(DOMAIN_EXP), k0, k1)
    odd = (u & np.uint64(1)).astype(bool)
    hi = np.where(odd, w[2], w[0])
    lo = np.where(odd, w[3], w[1])
    return -np.log(_words_to_unit(hi, lo))


def reference_uniform(seed: int, node: int, role: int) -> float:
    k0, k1 = _split(np.uint64(seed))
    w = philox4x32(role, 0, node, DOMAIN_NOISE, k0, k1)
    return float(_words_to_unit(w[0], w[1]))


def reference_trial_seed(master: int, trial: int) -> int:
    k0, k1 = _split(np.uint64(master))
    t0, t1 = _split(np.uint64(trial))
    w = philox4x32(t0, t1, 0, DOMAIN_TRIAL, k0, k1)
    return int((int(w[0]) << 32) | int(w[1]))


# -- compiled kernels --------------------------------------------------------

@nb.njit(cache=True, inline="always")
def _block(c0, c1, c2, c3, k0, k1):
    m = np.uint64(MASK32)
    for r in range(10):
        if r:
            k0 = (k0 + np.uint64(PHILOX_W0)) & m
            k1 = (k1 + np.uint64(PHILOX_W1)) & m
        p0 = c0 * np.uint64(PHILOX_M0)
        p1 = c2 * np.uint64(PHILOX_M1)
        c0, c1, c2, c3 = (p1 >> np.uint64(32)) ^ c1 ^ k0, p1 & m, (p0 >> np.uint64(32)) ^ c3 ^ k1, p0 & m
    return c0, c1, c2, c3


@nb.njit(cache=True, inline="always")
def _unit(hi, lo):
    x = (hi << np.uint64(32)) | lo
    return (np.float64(x >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16


@nb.njit(cache=True, nogil=True)
def _philox_batch(c0, c1, c2, c3, k0, k1):
    n = c0.shape[0]
    out = np.empty((n, 4), dtype=np.uint64)
    for t in range(n):
        w0, w1, w2, w3 = _block(c0[t], c1[t], c2[t], c3[t], k0[t], k1[t])
        out[t, 0] = w0
        out[t, 1] = w1
        out[t, 2] = w2
        out[t, 3] = w3
    return out


@nb.njit(cache=True, nogil=True)
def _exp_table(seeds, pid, m):
    n = seeds.shape[0]
    out = np.empty((n, m))
    mask = np.uint64(MASK32)
    for b in range(n):
        s = seeds[b]
        k0 = s & mask
        k1 = s >> np.uint64(32)
        for blk in range((m + 1) // 2):
            w0, w1, w2, w3 = _block(np.uint64(blk) & mask, np.uint64(blk) >> np.uint64(32),
                                    np.uint64(pid), np.uint64(0), k0, k1)
            u = 2 * blk
            out[b, u] = -np.log(_unit(w0, w1))
            if u + 1 < m:
                out[b, u + 1] = -np.log(_unit(w2, w3))
    return out


@nb.njit(cache=True, nogil=True)
def _exp_at(seeds, pid, elems):
    n, k = elems.shape
    out = np.empty((n, k))
    mask = np.uint64(MASK32)
    for b in range(n):
        s = seeds[b]
        k0 = s & mask
        k1 = s >> np.uint64(32)
        for e in range(k):
            u = elems[b, e]
            blk = u >> np.uint64(1)
            w0, w1, w2, w3 = _block(blk & mask, blk >> np.uint64(32), np.uint64(pid), np.uint64(0), k0, k1)
            if u & np.uint64(1):
                out[b, e] = -np.log(_unit(w2, w3))
            else:
                out[b, e] = -np.log(_unit(w0, w1))
    return out


@nb.njit(cache=True, nogil=True)
def _uniforms(seeds, node, role):
    n = seeds.shape[0]
    out = np.empty(n)
    mask = np.uint64(MASK32)
    for b in range(n):
        s = seeds[b]
        w0, w1, w2, w3 = _block(np.uint64(role), np.uint64(0), np.uint64(node), np.uint64(1),
                                s & mask, s >> np.uint64(32))
        out[b] = _unit(w0, w1)
    return out


@nb.njit(cache=True, nogil=True)
def _trial_seeds(master, start, n):
    out = np.empty(n, dtype=np.uint64)
    mask = np.uint64(MASK32)
    k0 = master & mask
    k1 = master >> np.uint64(32)
    for i in range(n):
        t = start + np.uint64(i)
        w0, w1, w2, w3 = _block(t & mask, t >> np.uint64(32), np.uint64(0), np.uint64(2), k0, k1)
        out[i] = (w0 << np.uint64(32)) | w1
    return out


# -- public wrappers ---------------------------------------------------------

def _seed_array(seeds) -> np.ndarray:
    if isinstance(seeds, np.ndarray) and seeds.dtype.kind in "ui":
        arr = seeds.astype(np.int64).view(np.uint64) if seeds.dtype.kind == "i" else seeds.astype(np.uint64)
    else:
        # go through python ints: mixed lists would otherwise be coerced to float64
        arr = np.array([int(s) & MASK64 for s in np.atleast_1d(np.asarray(seeds, dtype=object)).ravel()],
                       dtype=np.uint64)
    return np.ascontiguousarray(np.atleast_1d(arr).ravel())


def philox_block(counter, key) -> tuple[int, int, int, int]:
    """One Philox4x32-10 block; ``counter`` is 4 words, ``key`` is 2 words."""
    c = np.array([[int(v) & MASK32 for v in counter]], dtype=np.uint64)
    k = np.array([[int(v) & MASK32 for v in key]], dtype=np.uint64)
    out = _philox_batch(c[:, 0], c[:, 1], c[:, 2], c[:, 3], k[:, 0], k[:, 1])
    return tuple(int(w) for w in out[0])


def exp_table(seeds, pid: int, m: int) -> np.ndarray:
    """Exponential weights for elements ``0..m-1``, one row per seed: shape ``(len(seeds), m)``."""
    return _exp_table(_seed_array(seeds), int(pid), int(m))


def exp_at(seeds, pid: int, elements) -> np.ndarray:
    """Exponential weights at chosen elements; ``elements`` is ``(k,)`` or ``(len(seeds), k)``."""
    s = _seed_array(seeds)
    e = np.asarray(elements, dtype=np.uint64)
    if e.ndim == 1:
        e = np.broadcast_to(e, (s.size, e.size))
    return _exp_at(s, int(pid), np.ascontiguousarray(e))


def uniforms(seeds, node: int, role: int) -> np.ndarray:
    """One uniform in (0, 1) per seed for a (node, role) pair."""
    return _uniforms(_seed_array(seeds), int(node), int(role))


def trial_seeds(master: int, n: int, start: int = 0) -> np.ndarray:
    """Seeds of trials ``start .. start+n-1`` derived from ``master``."""
    return _trial_seeds(np.uint64(int(master) & MASK64), np.uint64(start), int(n))


def sample_uniforms(master: int, n: int, start: int = 0) -> np.ndarray:
    """Uniforms for draws ``start .. start+n-1`` of a plain sampling stream keyed by ``master``."""
    return _uniforms(trial_seeds(master, n, start), 0, ROLE_CHANNEL)
