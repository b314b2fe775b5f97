"""Shared kernels: phase quantization, ridge pseudo-inverse, truncated SVD."""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg

__all__ = [
    "normalize_bits",
    "is_continuous",
    "quantize_phase",
    "phase_indices",
    "on_lattice",
    "pinv_regularized",
    "lstsq_regularized",
    "svd_truncated",
]

TWO_PI = 2.0 * np.pi


def normalize_bits(bits):
    """Return ``None`` for continuous phase shifters, else a positive int."""
    if bits is None or (isinstance(bits, float) and math.isinf(bits)):
        return None
    if isinstance(bits, str) and bits.lower() in ("inf", "infinity", "none"):
        return None
    b = int(bits)
    if b != bits or b < 1:
        raise ValueError(f"bit depth must be a positive integer or infinite, got {bits!r}")
    return b


def is_continuous(bits) -> bool:
    return normalize_bits(bits) is None


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def phase_indices(phases, bits) -> np.ndarray:
    """Integer codebook indices ``k`` of the nearest phases ``2 pi k / 2^B``."""
    b = normalize_bits(bits)
    if b is None:
        raise ValueError("continuous phase shifters have no codebook indices")
    scaled = np.asarray(phases, dtype=float) * (2 ** (b - 1) / np.pi)
    return np.mod(_round_half_away(scaled), 2 ** b).astype(np.int64)


def quantize_phase(phases, bits) -> np.ndarray:
    """Project phases onto the uniform ``B``-bit codebook in ``[0, 2 pi)``.

    Rounding is half away from zero.  Quantization is carried out on the
    integer index so that outputs are exact multiples of ``pi / 2^(B-1)``.
    With ``bits`` infinite the input is returned unchanged.
    """
    b = normalize_bits(bits)
    phases = np.asarray(phases, dtype=float)
    if b is None:
        return phases.copy()
    return phase_indices(phases, b) * (np.pi / 2 ** (b - 1))


def on_lattice(phases, bits) -> bool:
    """True if every phase is exactly ``k * pi / 2^(B-1)``, ``0 <= k < 2^B``."""
    b = normalize_bits(bits)
    phases = np.asarray(phases, dtype=float)
    if b is None:
        return bool(np.all(np.isfinite(phases)))
    k = phase_indices(phases, b)
    return bool(np.all(k * (np.pi / 2 ** (b - 1)) == phases))


def pinv_regularized(x, alpha: float = 0.0) -> np.ndarray:
    """Diagonally loaded pseudo-inverse ``(X^H X + alpha I)^-1 X^H``.

    Raises ``numpy.linalg.LinAlgError`` if ``alpha == 0`` and ``X`` has
    deficient column rank.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    x = np.atleast_2d(np.asarray(x))
    xh = x.conj().T
    gram = xh @ x
    if alpha:
        gram = gram + alpha * np.eye(gram.shape[0])
    else:
        rank = np.linalg.matrix_rank(x)
        if rank < x.shape[1]:
            raise np.linalg.LinAlgError(
                f"rank-deficient least squares ({rank} < {x.shape[1]}) with alpha=0")
    return linalg.solve(gram, xh, assume_a="pos")


def lstsq_regularized(x, y, alpha: float = 0.0) -> np.ndarray:
    """Solve ``min ||y - X z||^2 + alpha ||z||^2``.

    ``alpha == 0`` uses the minimum-norm SVD solution, so rank deficiency is
    tolerated here (callers wanting the error use :func:`pinv_regularized`).
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if alpha == 0:
        return np.linalg.lstsq(x, y, rcond=None)[0]
    xh = x.conj().T
    gram = xh @ x
    gram.flat[::gram.shape[0] + 1] += alpha
    rhs = xh @ y
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(gram, rhs, rcond=None)[0]


def svd_truncated(x, q: int):
    """Top-``q`` singular triplets ``(U, s, V)`` with ``X ~ U diag(s) V^H``.

    Signs are fixed by rotating each left singular vector so that its first
    nonzero component is real and positive (the right vector gets the
    matching rotation).
    """
    x = np.atleast_2d(np.asarray(x))
    if not 1 <= q <= min(x.shape):
        raise ValueError(f"q={q} outside 1..{min(x.shape)}")
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    u, s, v = u[:, :q].copy(), s[:q].copy(), vh[:q].conj().T.copy()
    for i in range(q):
        nz = np.flatnonzero(np.abs(u[:, i]) > 1e-14 * max(1.0, np.abs(u[:, i]).max()))
        if nz.size:
            ph = u[nz[0], i] / abs(u[nz[0], i])
            u[:, i] *= ph.conj()
            v[:, i] *= ph.conj()
    return u, s, v
