"""
Relay rates and memoryless-limit margins
========================================

The partial decode-forward / compress-forward rate is a minimum of four
mutual-information expressions. Margins of the memoryless-limit condition
tell which n-letter bounds vanish as n grows.
"""

import numpy as np

from oneshotnet import scenarios as sc
from oneshotnet.bounds import admn_rate_check, pdcf_joint, pdcf_rate

rs = np.random.default_rng(5)


def noisy(shape, eps):
    t = rs.random(shape) * eps
    idx = rs.integers(0, shape[-1], shape[:-1])
    np.put_along_axis(t, idx[..., None], 1.0, -1)
    return t / t.sum(-1, keepdims=True)


b = sc.pdcf_relay(np.array([[0.45, 0.05], [0.05, 0.45]]), noisy((2, 2, 2), 0.05), noisy((2, 2, 2), 0.05),
                  rs.integers(0, 2, (2, 2, 2)), noisy((2, 2, 2, 2), 0.05), L=4, J=2)
r = pdcf_rate(pdcf_joint(b))
print("pdcf terms     ", np.round(r.terms, 4))
print("rate           ", round(r.rate, 4), "feasible", r.feasible)
print("constraint     ", np.round(r.constraint, 4))

# channel coding: margin = n I(X;Y) - log2 L
bsc = np.array([[0.89, 0.11], [0.11, 0.89]])
for n, L in ((2, 2), (4, 4), (6, 8)):
    m = admn_rate_check(sc.nfold(sc.channel_coding([0.5, 0.5], bsc, L), n).ideal_joint())[0]
    print(f"n={n} L={L}: lhs={m.lhs:.4f} rhs={m.rhs:.4f} margin={m.margin:.4f} strict={m.strict}")
