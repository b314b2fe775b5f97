"""Fewer front ends and coarser phase shifters, paid for with more images.

Starting from the 7-element MRA, compare how the design error falls with the
number of component images for

* two front ends per side with continuous phases (exact once Q reaches the
  digital rank),
* one front end per side with continuous phases (needs four times as many),
* two front ends with 5-bit and 1-bit phase shifters (greedy design).

Run with ``python demos/02_hybrid_tradeoffs.py``.
"""

import numpy as np

from hybridbf import (closed_form_bank, coarray_problem, design, greedy_main, make_mra,
                      steer_target, sum_coarray, target_window)

mra = make_mra(7)
ca = sum_coarray(mra, mra)
prob = coarray_problem(mra, mra, steer_target(target_window("chebyshev", ca.n_sigma), ca, -0.4))
energy = float(np.vdot(prob.psi, prob.psi).real)
qs = list(range(1, 13))

curves = {}
for m in (2, 1):
    curves[f"M={m} B=inf"] = [np.sqrt(design(prob, m, m, None, q)[1] / energy) for q in qs]
for bits in (5, 1):
    # one greedy run yields the whole error-versus-Q trace
    _, trace = greedy_main(prob, 2, 2, bits, max(qs))
    curves[f"M=2 B={bits}"] = [np.sqrt(trace[q] / energy) for q in qs]

print(f"{'Q':>3} " + " ".join(f"{k:>11}" for k in curves))
for i, q in enumerate(qs):
    print(f"{q:>3} " + " ".join(f"{curves[k][i]:11.1e}" for k in curves))

# The closed forms give the worst-case image counts for any 7 x 7 matrix.
w = np.random.default_rng(0).standard_normal((7, 7))
print("\nClosed-form image counts for a generic 7 x 7 matrix:")
for arch in ("digital", "hybrid-inf", "hybrid-1bit", "analog-inf", "analog-1bit"):
    bank = closed_form_bank(arch, w)
    err = np.linalg.norm(bank.matrix() - w) / np.linalg.norm(w)
    print(f"  {arch:>12}: Q = {bank.q:>3}, reconstruction error {err:.1e}")
