"""
Exact hybrid and analog factorizations of a co-array weight matrix.

Every constructor here reproduces its input ``W`` exactly (up to rounding)
and so gives an upper bound on the number of component images each
architecture needs:

==============  ====  ======  =====================
architecture    M_x   bits    component images
==============  ====  ======  =====================
digital         N_x   n/a     rank(W)
hybrid          2     inf     rank(W)
hybrid          2     1       N_r N_t
analog          1     inf     4 rank(W)
analog          1     1       4 N_r N_t
==============  ====  ======  =====================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banks import DigitalBank, HybridBank
from .digital import svd_factorize

__all__ = [
    "InfeasibleDecomposition",
    "NotApplicable",
    "lemma1_factor",
    "lemma1_general",
    "lemma2_analog",
    "thm1_hybrid_cont",
    "thm2_hybrid_1bit",
    "lemma3_indices",
    "lemma3_flatten",
    "thm3_analog_cont",
    "thm4_analog_1bit",
    "SingleFrontEnd",
    "remark1_merge",
    "ARCHITECTURES",
    "closed_form_bank",
    "closed_form_image_count",
]

TWO_PI = 2 * np.pi


class InfeasibleDecomposition(ValueError):
    """The requested two-phasor amplitudes cannot reach every entry."""


class NotApplicable(ValueError):
    """Front ends can only be merged when all digital weights are equal."""


def _offsets(w: np.ndarray) -> tuple[np.ndarray, float]:
    mag = np.abs(w)
    peak = float(mag.max()) if mag.size else 0.0
    if peak == 0.0:
        return np.zeros_like(mag), 0.0
    # clip against |w_n| / max|w| exceeding 1 by roundoff
    return np.arccos(np.clip(mag / peak, 0.0, 1.0)), peak


def lemma1_factor(w):
    """Two-front-end exact factorization ``w = F c`` with continuous phases.

    ``F = exp(j(angle(w) +/- arccos(|w| / max|w|)))`` and
    ``c = max|w| / 2 * [1, 1]``.  A zero vector yields zero phases and
    ``c = 0``.

    Returns
    -------
    phases : ndarray, shape (N, 2)
    c : ndarray, shape (2,)
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    off, peak = _offsets(w)
    ang = np.angle(w)
    phases = np.mod(np.column_stack([ang + off, ang - off]), TWO_PI)
    return phases, np.full(2, peak / 2, dtype=complex)


def lemma1_general(w, c1: complex, c2: complex, rtol: float = 1e-12) -> np.ndarray:
    """Phases placing ``c1 e^{j p1} + c2 e^{j p2}`` on every entry of ``w``.

    Feasible iff, with ``|c1| >= |c2|`` after sorting,
    ``|c1| + |c2| >= max|w_n|`` and ``|c1| - |c2| <= min|w_n|``.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    a1, a2 = abs(c1), abs(c2)
    big, small = max(a1, a2), min(a1, a2)
    mag = np.abs(w)
    scale = max(big, float(mag.max()), 1e-300)
    if big + small < mag.max() - rtol * scale or big - small > mag.min() + rtol * scale:
        raise InfeasibleDecomposition(
            f"|c1|={a1:.6g}, |c2|={a2:.6g} cannot reach magnitudes in "
            f"[{mag.min():.6g}, {mag.max():.6g}]")
    ang = np.angle(w)
    p1 = np.empty_like(mag)
    p2 = np.empty_like(mag)
    nz = mag > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if a1 > 0:
            g1 = np.arccos(np.clip((mag ** 2 + a1 ** 2 - a2 ** 2) / (2 * mag * a1), -1, 1))
        else:
            g1 = np.zeros_like(mag)
        if a2 > 0:
            g2 = np.arccos(np.clip((mag ** 2 + a2 ** 2 - a1 ** 2) / (2 * mag * a2), -1, 1))
        else:
            g2 = np.zeros_like(mag)
    p1[nz] = ang[nz] - np.angle(c1) + g1[nz]
    p2[nz] = ang[nz] - np.angle(c2) - g2[nz]
    # zero entries: equal amplitudes in antiphase
    p1[~nz] = -np.angle(c1)
    p2[~nz] = np.pi - np.angle(c2)
    return np.mod(np.column_stack([p1, p2]), TWO_PI)


def lemma2_analog(w):
    """Best single-front-end approximation ``w ~ c f`` with continuous phases.

    Returns ``(phases, c, err)`` with ``f = exp(j angle(w))``,
    ``c = ||w||_1 / N`` and ``err = ||w - c f||^2``, which equals
    ``||w||_2^2 - ||w||_1^2 / N``.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    phases = np.mod(np.angle(w), TWO_PI)
    c = np.sum(np.abs(w)) / len(w)
    r = w - c * np.exp(1j * phases)
    return phases, complex(c), float(np.vdot(r, r).real)


def _as_digital(bank_or_w) -> DigitalBank:
    if isinstance(bank_or_w, (DigitalBank, HybridBank)):
        return bank_or_w.to_digital()
    return svd_factorize(bank_or_w)


def thm1_hybrid_cont(bank) -> HybridBank:
    """Continuous-phase hybrid bank with ``M_x = 2`` and the same ``Q``."""
    bank = _as_digital(bank)
    sides = []
    for w in (bank.w_t, bank.w_r):
        ph, cs = zip(*(lemma1_factor(w[:, q]) for q in range(bank.q)))
        sides.append((np.hstack(ph), np.column_stack(cs)))
    (p_t, c_t), (p_r, c_r) = sides
    return HybridBank(p_t, p_r, c_t, c_r, bits=None)


def _sqrt_entries(w: np.ndarray) -> np.ndarray:
    # principal branch; only the product c_r c_t matters
    return np.sqrt(np.asarray(w, dtype=complex))


def thm2_hybrid_1bit(w) -> HybridBank:
    """One-bit hybrid bank, ``M_x = 2``, one image per entry of ``W``.

    Image ``q`` (1-based) addresses entry ``(n_r, n_t)`` with
    ``n_r = 1 + (q-1) mod N_r`` and ``n_t = ceil(q / N_r)``.  Zero entries
    still produce an image (with zero digital weight).
    """
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    n_r, n_t = w.shape
    q_total = n_r * n_t
    q = np.arange(q_total)
    nr = q % n_r
    nt = q // n_r
    c = _sqrt_entries(w[nr, nt]) / 2
    sides = []
    for n, idx in ((n_t, nt), (n_r, nr)):
        ph = np.zeros((n, 2 * q_total))
        second = np.full((n, q_total), np.pi)
        second[idx, q] = 0.0
        ph[:, 1::2] = second
        sides.append(ph)
    cc = np.vstack([c, c])
    return HybridBank(sides[0], sides[1], cc, cc.copy(), bits=1)


def lemma3_indices(q: int, m_t: int, m_r: int) -> tuple[int, int, int]:
    """1-based ``(q_tilde, m_r, m_t)`` of analog image ``q`` (1-based)."""
    mm = m_r * m_t
    q_tilde = -(-q // mm)
    m_r_idx = -(-(1 + (q - 1) % mm) // m_t)
    m_t_idx = 1 + (q - 1) % m_t
    return q_tilde, m_r_idx, m_t_idx


def lemma3_flatten(bank: HybridBank) -> HybridBank:
    """Split each hybrid image into ``M_r M_t`` single-front-end images."""
    q_new = bank.q * bank.m_t * bank.m_r
    idx = np.array([lemma3_indices(q, bank.m_t, bank.m_r) for q in range(1, q_new + 1)]) - 1
    qt, mr, mt = idx.T
    ph_t = bank.phase_t[:, qt * bank.m_t + mt]
    ph_r = bank.phase_r[:, qt * bank.m_r + mr]
    c_t = bank.c_t[mt, qt][None, :]
    c_r = bank.c_r[mr, qt][None, :]
    return HybridBank(ph_t, ph_r, c_t, c_r, bits=bank.bits)


def thm3_analog_cont(bank) -> HybridBank:
    """Continuous-phase analog bank (``M_x = 1``) with ``4 Q`` images.

    Image ``q`` uses digital image ``ceil(q/4)`` with sign indices
    ``i_r = ceil((1 + (q-1) mod 4) / 2)`` and ``i_t = 1 + (q-1) mod 2``.
    """
    bank = _as_digital(bank)
    q = np.arange(1, 4 * bank.q + 1)
    q_tilde = (q - 1) // 4
    i_r = -(-(1 + (q - 1) % 4) // 2)
    i_t = 1 + (q - 1) % 2
    sides = []
    for w, i_x in ((bank.w_t, i_t), (bank.w_r, i_r)):
        ph = np.empty((w.shape[0], len(q)))
        c = np.empty(len(q), dtype=complex)
        for k, (qt, i) in enumerate(zip(q_tilde, i_x)):
            off, peak = _offsets(w[:, qt])
            ph[:, k] = np.angle(w[:, qt]) + (-1) ** (i + 1) * off
            c[k] = peak / 2
        sides.append((np.mod(ph, TWO_PI), c[None, :]))
    (p_t, c_t), (p_r, c_r) = sides
    return HybridBank(p_t, p_r, c_t, c_r, bits=None)


def thm4_analog_1bit(w) -> HybridBank:
    """One-bit analog bank with ``4 N_r N_t`` images and ``+/-1`` weights."""
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    n_r, n_t = w.shape
    q = np.arange(1, 4 * n_r * n_t + 1)
    i_r = -(-(1 + (q - 1) % 4) // 2)
    i_t = 1 + (q - 1) % 2
    nr = (-(-q // 4) - 1) % n_r
    nt = -(-q // (4 * n_r)) - 1
    c = _sqrt_entries(w[nr, nt])[None, :] / 2
    sides = []
    for n, idx, i_x in ((n_t, nt, i_t), (n_r, nr, i_r)):
        e = np.zeros((n, len(q)))
        e[idx, np.arange(len(q))] = 1.0
        f = (e - 1.0) * (-1.0) ** i_x + e
        sides.append(np.where(f > 0, 0.0, np.pi))
    return HybridBank(sides[0], sides[1], c, c.copy(), bits=1)


@dataclass(frozen=True, eq=False)
class SingleFrontEnd:
    """One front end feeding ``N M`` phase shifters (``M`` per element)."""

    phases: np.ndarray
    c: complex

    @property
    def n_phase_shifters(self) -> int:
        return self.phases.size

    def weights(self) -> np.ndarray:
        return self.c * np.exp(1j * self.phases).sum(axis=1)


def remark1_merge(phases, c, rtol: float = 1e-12) -> SingleFrontEnd:
    """Rewire ``M`` front ends with equal digital weights onto a single one."""
    phases = np.atleast_2d(np.asarray(phases, dtype=float))
    if phases.shape[0] == 1 and phases.shape[1] != 1 and np.ndim(c) == 0:
        phases = phases.T
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    if c.size != phases.shape[1]:
        raise ValueError("need one digital weight per phase-matrix column")
    if np.any(np.abs(c - c[0]) > rtol * max(1.0, abs(c[0]))):
        raise NotApplicable("digital weights are not a scaled all-ones vector")
    return SingleFrontEnd(phases, complex(c[0]))


ARCHITECTURES = ("digital", "hybrid-inf", "hybrid-1bit", "analog-inf", "analog-1bit")


def closed_form_bank(architecture: str, w):
    """Exact bank of the requested architecture for matrix ``W``."""
    if architecture == "digital":
        return svd_factorize(w)
    if architecture == "hybrid-inf":
        return thm1_hybrid_cont(svd_factorize(w))
    if architecture == "hybrid-1bit":
        return thm2_hybrid_1bit(w)
    if architecture == "analog-inf":
        return thm3_analog_cont(svd_factorize(w))
    if architecture == "analog-1bit":
        return thm4_analog_1bit(w)
    raise ValueError(f"unknown architecture {architecture!r}")


def closed_form_image_count(architecture: str, w) -> int:
    """Number of component images of :func:`closed_form_bank`."""
    w = np.atleast_2d(np.asarray(w))
    n_r, n_t = w.shape
    rank = svd_factorize(w).q
    counts = {"digital": rank, "hybrid-inf": rank, "hybrid-1bit": n_r * n_t,
              "analog-inf": 4 * rank, "analog-1bit": 4 * n_r * n_t}
    if architecture not in counts:
        raise ValueError(f"unknown architecture {architecture!r}")
    return counts[architecture]
