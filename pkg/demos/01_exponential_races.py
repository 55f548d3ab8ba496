"""
Exponential races, ranks and refinement
=======================================

Selecting ``argmin_u z_u / P(u)`` over i.i.d. Exp(1) weights returns a sample
of ``P``. The same weights also rank every other element, and the rank of
the selected element under a second distribution ``Q`` is small on average
whenever ``P`` and ``Q`` agree there.
"""

import numpy as np

from oneshotnet import rng
from oneshotnet.exp_process import (ExpProcess, harmonic, pfr_keys, pfr_select, ranks, refine, select_rows,
                                    verify_eprl, verify_pml)
from oneshotnet.finite_prob import JointDist

# one process, one selection
P = np.array([0.5, 0.2, 0.2, 0.1])
p = ExpProcess(4, process_id=0, master_seed=2024)
print("weights z        ", np.round(p.z_values(), 3))
print("selected element ", pfr_select(p, P))
print("ranks under P    ", ranks(p, P))

# many seeds at once: the selection frequency matches P
n = 200_000
z = rng.exp_table(rng.trial_seeds(7, n), 0, P.size)
freq = np.bincount(select_rows(pfr_keys(z, P)), minlength=P.size) / n
print("empirical        ", np.round(freq, 4), " target", P)

# refinement turns a distribution into a soft posterior indexed by rank
q = JointDist.from_array([0.1, 0.2, 0.3, 0.4])
r = refine(p, q)
print("refined masses   ", np.round(r.mass, 4), " total", round(r.total, 12))
print("top mass 1/H_4   ", round(1 / harmonic(4), 4))

# the rank lemma and its refinement version, checked by simulation
rep = verify_pml(P, [0.1, 0.3, 0.3, 0.3], trials=100_000, seed=1)
for row in rep.rows:
    print(f"u={row.element}  E[rank]={row.mean:.3f}  99% CI=({row.ci_low:.3f}, {row.ci_high:.3f})"
          f"  bound={row.bound:.3f}")
qv = JointDist.from_array([[0.1, 0.2, 0.1, 0.0], [0.2, 0.1, 0.1, 0.2]])
rep = verify_eprl(P, qv, 1, trials=100_000, seed=2)
print("refinement lemma violations:", len(rep.violations))
