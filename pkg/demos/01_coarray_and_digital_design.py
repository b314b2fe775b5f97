"""Walk through a sparse-array design from geometry to a digital weight bank.

A 7-element minimum-redundancy array has the same sum co-array as an
11-element uniform array, so it can synthesize the same two-way beam.  The
price is that one transmission is no longer enough: the weight matrix must be
split over several component images.  This script shows where that happens.

Run with ``python demos/01_coarray_and_digital_design.py``.
"""

import numpy as np

from hybridbf import (altmin, coarray_problem, make_mra, make_ula, q_lower_bound, steer_target,
                      sum_coarray, target_window)


def describe(name, geom):
    ca = sum_coarray(geom, geom)
    print(f"{name}: {geom.n} elements at {geom.positions.tolist()}")
    print(f"  co-array support {ca.support[0]}..{ca.support[-1]} "
          f"({ca.n_sigma} virtual elements), multiplicities {ca.multiplicity.tolist()}")
    return ca


ula, mra = make_ula(11), make_mra(7)
ca_ula = describe("ULA", ula)
ca_mra = describe("MRA", mra)
assert np.array_equal(ca_ula.support, ca_mra.support)

# Same 30 dB Chebyshev target on both co-arrays, steered off broadside.
base = target_window("chebyshev", ca_ula.n_sigma, 30.0)
print("\nRelative error of the digital design versus component images Q")
print(f"{'array':>6} {'bound':>6} " + " ".join(f"{'Q=' + str(q):>9}" for q in range(1, 5)))
for name, geom, ca in (("ULA", ula, ca_ula), ("MRA", mra, ca_mra)):
    prob = coarray_problem(geom, geom, steer_target(base, ca, 0.3))
    errs = []
    for q in range(1, 5):
        bank, _ = altmin(prob, q)
        errs.append(prob.relative_error(bank.matrix()))
    bound = q_lower_bound(geom.n, geom.n, ca.n_sigma)
    print(f"{name:>6} {bound:>6} " + " ".join(f"{e:9.1e}" for e in errs))

# The bound is reached: the ULA needs one image, the MRA two.
