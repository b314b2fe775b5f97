"""Image two point scatterers with a full and a sparse linear array.

Both arrays are designed for the same two-way beam.  Without noise the images
agree; with noise the sparse array, having fewer receive elements, shows a
higher background.  The sparse array uses 1-bit phase shifters here, so its
weights are redesigned for every pixel.

Run with ``python demos/03_imaging.py``.  Pass an output stem as the first
argument to also write ``<stem>_ula.npy`` / ``<stem>_mra_db.csv`` style files.
"""

import sys

import numpy as np

from hybridbf import (DirectionGrid, Scene, altmin, coarray_problem, form_image, greedy_main,
                      make_mra, make_ula, steer_target, sum_coarray, target_window)

ula, mra = make_ula(11), make_mra(7)
ca = sum_coarray(ula, ula)
target = target_window("chebyshev", ca.n_sigma, 30.0)
grid = DirectionGrid.uniform(128)
scene = Scene(np.array([-0.3, 0.25]), np.array([1.0, 0.5]), sigma2=0.0)

# Continuous phases: one broadside design is steered to every pixel.
ula_bank, _ = altmin(coarray_problem(ula, ula, target), 1)

# Quantized phases: a fresh greedy design per pixel, steered in the co-array.
mra_banks = []
for u in grid.u:
    prob = coarray_problem(mra, mra, steer_target(target, ca, u, reduced=True))
    bank, _ = greedy_main(prob, 2, 2, 1, 8)
    mra_banks.append(bank)

images = {}
for sigma2 in (0.0, 1.0):
    s = scene.with_sigma2(sigma2)
    images["ula", sigma2] = form_image(ula_bank, s, grid, ula, ula, seed=1)
    images["mra", sigma2] = form_image(mra_banks, s, grid, mra, mra, seed=1)

for name in ("ula", "mra"):
    clean = images[name, 0.0]
    noisy = images[name, 1.0]
    db = clean.db()
    # local maxima within 10 dB of the brightest pixel
    is_peak = (db > np.roll(db, 1)) & (db >= np.roll(db, -1)) & (db > -10)
    peaks = grid.u[is_peak]
    noise = np.mean(np.abs(noisy.values - clean.values) ** 2)
    print(f"{name.upper()}: peaks at u = {np.round(peaks, 3).tolist()}, "
          f"noise power {noise:.2f}")

if len(sys.argv) > 1:
    stem = sys.argv[1]
    for name in ("ula", "mra"):
        images[name, 1.0].save_npy(f"{stem}_{name}.npy")
        images[name, 1.0].save_db_csv(f"{stem}_{name}_db.csv")
    print(f"wrote {stem}_ula.npy, {stem}_mra.npy and the matching dB CSV files")
