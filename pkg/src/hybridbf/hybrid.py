"""
Hybrid and fully analog beamformer design with quantized phase shifters.

The greedy solver builds the bank one component image at a time: a
rank-one digital solution of the current residual is converted to
``M_x`` quantized phase-shifter columns per side, after which all digital
weights of the bank are refitted by alternating least squares.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .banks import DigitalBank, HybridBank
from .closedform import (lemma1_factor, thm1_hybrid_cont, thm2_hybrid_1bit, thm3_analog_cont,
                         thm4_analog_1bit)
from .digital import DesignProblem, SolverConfig, altmin
from .numerics import lstsq_regularized, normalize_bits, quantize_phase
from .steering import unvec

__all__ = [
    "greedy_sub",
    "refine_digital",
    "greedy_main",
    "quantized_thm1",
    "MinQResult",
    "min_q_search",
    "normalize_tx",
    "bank_error",
    "pad_bank",
    "design",
    "closed_form_candidate",
]


def greedy_sub(w, m: int, bits=None, alpha: float = 0.0):
    """Approximate ``w`` by ``F c`` with ``m`` quantized phase-shifter columns.

    Pairs of columns come from the exact two-phasor split of the current
    residual, quantized to ``bits``; ``c`` is then refitted by least squares
    against ``w``.  An odd last column is the quantized phase of the
    residual.

    Parameters
    ----------
    w : array_like, shape (N,)
    m : int
        Number of front ends (columns of ``F``).
    bits : int or None
        Phase-shifter resolution, ``None`` for continuous phases.
    alpha : float
        Diagonal loading of the least-squares fits.

    Returns
    -------
    phases : ndarray, shape (N, m)
    c : ndarray, shape (m,)
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    bits = normalize_bits(bits)
    w = np.asarray(w, dtype=complex).reshape(-1)
    phases = np.zeros((len(w), m))
    c = np.zeros(m, dtype=complex)
    if not np.any(w):
        return phases, c
    res = w
    for k in range(m // 2):
        ph, _ = lemma1_factor(res)
        phases[:, 2 * k:2 * k + 2] = quantize_phase(ph, bits)
        f = np.exp(1j * phases[:, :2 * k + 2])
        c[:2 * k + 2] = lstsq_regularized(f, w, alpha)
        res = w - f @ c[:2 * k + 2]
    if m % 2:
        phases[:, -1] = quantize_phase(np.mod(np.angle(res), 2 * np.pi), bits)
        c = lstsq_regularized(np.exp(1j * phases), w, alpha)
    return phases, c


def _per_image(f: np.ndarray, q: int) -> np.ndarray:
    return f.reshape(f.shape[0], q, -1)


def _khatri_design(x, f):
    # x: (V, Q, N), f: (N, Q, M) -> (V, Q, M) with sum over N per image
    return np.matmul(x.transpose(1, 0, 2), f.transpose(1, 0, 2)).transpose(1, 0, 2)


def refine_digital(problem: DesignProblem, phase_t, phase_r, c_t,
                   cfg: SolverConfig | None = None, k_max: int = 10,
                   eps_max: float | None = None):
    """Refit digital weights of a bank with its analog phases held fixed.

    Alternates the Rx update (with ``C_t`` fixed) and the Tx update until
    the squared error drops to ``eps_max`` or ``k_max`` rounds are done.

    Returns
    -------
    c_t, c_r : ndarray
        ``M_t x Q`` and ``M_r x Q`` digital weights.
    trace : ndarray
        Squared error after every round.
    """
    cfg = cfg or SolverConfig()
    eps_max = cfg.threshold(problem.psi) if eps_max is None else eps_max
    c_t = np.atleast_2d(np.asarray(c_t, dtype=complex))
    q = c_t.shape[1]
    f_t = _per_image(np.exp(1j * np.asarray(phase_t)), q)     # (N_t, Q, M_t)
    f_r = _per_image(np.exp(1j * np.asarray(phase_r)), q)     # (N_r, Q, M_r)
    if f_t.shape[2] != c_t.shape[0]:
        raise ValueError("C_t rows must equal the Tx front-end count")
    m_t, m_r = f_t.shape[2], f_r.shape[2]
    psi = problem.psi
    c_r = np.zeros((m_r, q), complex)
    trace = []
    eps, k = np.inf, 0
    while k < k_max and eps > eps_max:
        w_t = np.einsum("tqm,mq->tq", f_t, c_t)
        x = _khatri_design(problem.rx_design(w_t).reshape(len(psi), q, -1), f_r)
        c_r = lstsq_regularized(x.reshape(len(psi), -1), psi, cfg.alpha).reshape(q, m_r).T
        w_r = np.einsum("rqm,mq->rq", f_r, c_r)
        x = _khatri_design(problem.tx_design(w_r).reshape(len(psi), -1, q).transpose(0, 2, 1), f_t)
        c_t = lstsq_regularized(x.reshape(len(psi), -1), psi, cfg.alpha).reshape(q, m_t).T
        w_t = np.einsum("tqm,mq->tq", f_t, c_t)
        eps = problem.error(w_r @ w_t.T)
        trace.append(eps)
        k += 1
    return c_t, c_r, np.asarray(trace)


def bank_error(problem: DesignProblem, bank=None) -> float:
    """Squared error of a bank; ``None`` stands for the empty (Q = 0) model."""
    if bank is None:
        return float(np.vdot(problem.psi, problem.psi).real)
    return problem.error(bank.matrix())


def greedy_main(problem: DesignProblem, m_t: int, m_r: int, bits, q: int,
                cfg: SolverConfig | None = None, inner_k_max: int = 10,
                keep_snapshots: bool = False):
    """Greedy hybrid design with ``q`` component images.

    Returns ``(bank, trace)`` where ``trace[k]`` is the squared error of the
    first ``k`` images (``trace[0] = ||psi||^2``).  Earlier images are
    never revisited apart from their digital weights, so one call yields the
    whole error-versus-Q curve.  With ``keep_snapshots`` a third element
    lists the bank after every image.
    """
    if q < 0 or m_t < 1 or m_r < 1:
        raise ValueError("need q >= 0 and at least one front end per side")
    cfg = cfg or SolverConfig()
    bits = normalize_bits(bits)
    psi = problem.psi
    eps_max = cfg.threshold(psi)
    sub_cfg = cfg.replace(eps_max=eps_max)
    trace = [float(np.vdot(psi, psi).real)]
    ph_t = np.zeros((problem.n_t, 0))
    ph_r = np.zeros((problem.n_r, 0))
    c_t = np.zeros((m_t, 0), complex)
    residual = psi
    bank = None
    snapshots = []
    for _ in range(q):
        digital, _ = altmin(problem.with_target(residual), 1, sub_cfg)
        pt, ct = greedy_sub(digital.w_t[:, 0], m_t, bits, cfg.alpha)
        pr, _ = greedy_sub(digital.w_r[:, 0], m_r, bits, cfg.alpha)
        ph_t = np.hstack([ph_t, pt])
        ph_r = np.hstack([ph_r, pr])
        c_t = np.hstack([c_t, ct[:, None]])
        c_t, c_r, _ = refine_digital(problem, ph_t, ph_r, c_t, cfg,
                                         inner_k_max, eps_max)
        bank = HybridBank(ph_t, ph_r, c_t, c_r, bits)
        residual = psi - problem.forward(bank.matrix())
        trace.append(float(np.vdot(residual, residual).real))
        if keep_snapshots:
            snapshots.append(bank)
    if keep_snapshots:
        return bank, np.asarray(trace), snapshots
    return bank, np.asarray(trace)


def quantized_thm1(problem: DesignProblem, q: int, bits,
                   cfg: SolverConfig | None = None, k_max: int = 100):
    """Baseline: quantize the exact two-front-end split of a digital solution.

    The digital rank-``q`` solution is split per image into two
    continuous-phase columns, the phases are quantized, and the digital
    weights are refitted with ``k_max`` alternating rounds.

    Returns ``(bank, squared_error)``.
    """
    cfg = cfg or SolverConfig()
    bits = normalize_bits(bits)
    digital, _ = altmin(problem, q, cfg)
    exact = thm1_hybrid_cont(digital)
    ph_t = quantize_phase(exact.phase_t, bits)
    ph_r = quantize_phase(exact.phase_r, bits)
    c_t, c_r, _ = refine_digital(problem, ph_t, ph_r, exact.c_t, cfg, k_max)
    bank = HybridBank(ph_t, ph_r, c_t, c_r, bits)
    return bank, bank_error(problem, bank)


@dataclass
class MinQResult:
    """Outcome of :func:`min_q_search`; ``q_min is None`` means infeasible."""

    q_min: int | None
    bank: object
    error: float | None
    errors: dict = field(default_factory=dict)
    fallback: bool = False

    @property
    def feasible(self) -> bool:
        return self.q_min is not None


def closed_form_candidate(problem: DesignProblem, m_t: int, m_r: int, bits, q: int):
    """One-bit closed-form bank for a least-squares ``W``, if ``q`` images suffice.

    One-bit phases lie on every ``B``-bit lattice, so the entrywise
    constructions bound the image count of any finite ``B``: ``N_r N_t``
    images with two or more front ends, ``4 N_r N_t`` with one.  Returns
    ``None`` when ``q`` is below that count or ``bits`` is continuous.
    """
    bits = normalize_bits(bits)
    m = min(m_t, m_r)
    need = problem.n_t * problem.n_r * (1 if m >= 2 else 4)
    if bits is None or q < need:
        return None
    z = lstsq_regularized(problem.sensing, problem.psi, 0.0)
    w = unvec(z, problem.n_r, problem.n_t)
    exact = thm2_hybrid_1bit(w) if m >= 2 else thm4_analog_1bit(w)
    exact = HybridBank(exact.phase_t, exact.phase_r, exact.c_t, exact.c_r, bits)
    return pad_bank(exact, m_t, m_r, q, problem.n_t, problem.n_r, bits)


def _greedy_evaluator(problem, m_t, m_r, bits, cfg, q_hi, inner_k_max):
    _, trace, snaps = greedy_main(problem, m_t, m_r, bits, q_hi, cfg,
                                  inner_k_max, keep_snapshots=True)

    def evaluate(q):
        bank, err = snaps[q - 1], float(trace[q])
        alt = closed_form_candidate(problem, m_t, m_r, bits, q)
        if alt is not None:
            alt_err = bank_error(problem, alt)
            if alt_err < err:
                return alt, alt_err
        return bank, err
    return evaluate


def _digital_evaluator(problem, cfg):
    def evaluate(q):
        bank, _ = altmin(problem, q, cfg)
        return bank, bank_error(problem, bank)
    return evaluate


def min_q_search(problem: DesignProblem, m_t: int = 2, m_r: int = 2, bits=None,
                 eps_max: float = 0.0, q_range=(1, 8),
                 cfg: SolverConfig | None = None,
                 method: str | Callable = "greedy",
                 inner_k_max: int = 10) -> MinQResult:
    """Smallest ``Q`` in ``q_range`` whose design error is at most ``eps_max``.

    ``q_range`` is an inclusive ``(lo, hi)`` pair or an explicit list.  The
    search bisects the error curve; if the evaluated errors turn out not to
    be non-increasing in ``Q``, every candidate below the bisection result
    is scanned upward instead.  ``method`` is ``"greedy"``, ``"digital"``
    or a callable ``q -> (bank, squared_error)``.
    """
    cfg = cfg or SolverConfig()
    if isinstance(q_range, tuple) and len(q_range) == 2:
        qs = list(range(int(q_range[0]), int(q_range[1]) + 1))
    else:
        qs = sorted({int(q) for q in q_range})
    if not qs or qs[0] < 1:
        raise ValueError("q_range must contain positive integers")
    if callable(method):
        evaluate = method
    elif method == "greedy":
        evaluate = _greedy_evaluator(problem, m_t, m_r, bits, cfg, qs[-1], inner_k_max)
    elif method == "digital":
        evaluate = _digital_evaluator(problem, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")

    cache = {}

    def get(i):
        q = qs[i]
        if q not in cache:
            cache[q] = evaluate(q)
        return cache[q]

    lo, hi = 0, len(qs) - 1
    if get(hi)[1] > eps_max:
        found = None
    else:
        while lo < hi:
            mid = (lo + hi) // 2
            if get(mid)[1] <= eps_max:
                hi = mid
            else:
                lo = mid + 1
        found = hi
    evaluated = sorted(cache)
    errs = [cache[q][1] for q in evaluated]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))
    fallback = False
    if not monotone:
        fallback = True
        stop = len(qs) if found is None else found
        for i in range(stop):
            if get(i)[1] <= eps_max:
                found = i
                break
    errors = {q: cache[q][1] for q in sorted(cache)}
    if found is None:
        return MinQResult(None, None, None, errors, fallback)
    bank, err = get(found)
    return MinQResult(qs[found], bank, err, errors, fallback)


def normalize_tx(bank):
    """Move each image's Tx peak magnitude onto the Rx side.

    Per image ``q``: ``w_r <- w_r * ||w_t||_inf`` and ``w_t <- w_t / ||w_t||_inf``,
    leaving ``W`` unchanged.  Images with an all-zero Tx weight are left
    as they are (a ``RuntimeWarning`` is issued).
    """
    w_t, _ = bank.weights()
    scale = np.abs(w_t).max(axis=0)
    zero = scale == 0
    if np.any(zero):
        warnings.warn(f"{int(zero.sum())} image(s) with zero Tx weights left unnormalized",
                      RuntimeWarning, stacklevel=2)
        scale = np.where(zero, 1.0, scale)
    if isinstance(bank, DigitalBank):
        return DigitalBank(bank.w_t / scale, bank.w_r * scale)
    if isinstance(bank, HybridBank):
        return HybridBank(bank.phase_t, bank.phase_r, bank.c_t / scale,
                          bank.c_r * scale, bank.bits)
    raise TypeError(f"cannot normalize {type(bank).__name__}")


def pad_bank(bank: HybridBank | None, m_t: int, m_r: int, q: int,
             n_t: int, n_r: int, bits=None) -> HybridBank:
    """Extend a bank to ``m_x`` front ends and ``q`` images with idle slots.

    Added phase shifters sit at phase 0 and added digital weights are 0, so
    the realized ``W`` is unchanged.
    """
    if bank is None:
        z = np.zeros
        return HybridBank(z((n_t, m_t * q)), z((n_r, m_r * q)),
                          z((m_t, q), complex), z((m_r, q), complex), bits)
    if bank.m_t > m_t or bank.m_r > m_r or bank.q > q:
        raise ValueError("cannot shrink a bank by padding")

    def grow(phase, c, m):
        ph = np.zeros((phase.shape[0], q, m))
        ph[:, :bank.q, :c.shape[0]] = phase.reshape(phase.shape[0], bank.q, -1)
        cc = np.zeros((m, q), complex)
        cc[:c.shape[0], :bank.q] = c
        return ph.reshape(phase.shape[0], -1), cc

    ph_t, c_t = grow(bank.phase_t, bank.c_t, m_t)
    ph_r, c_r = grow(bank.phase_r, bank.c_r, m_r)
    return HybridBank(ph_t, ph_r, c_t, c_r, bank.bits)


def design(problem: DesignProblem, m_t: int, m_r: int, bits, q: int,
           cfg: SolverConfig | None = None, inner_k_max: int = 10):
    """Best available ``q``-image design for a given architecture.

    Finite ``bits`` runs the greedy solver, falling back to the one-bit
    closed form once ``q`` reaches its image count.  Continuous phases use the exact
    closed-form splits of a digital solution instead: with two or more
    front ends per side the digital rank-``q`` solution carries over
    unchanged, while a single front end needs four images per digital
    image, so only ``q // 4`` digital images are realized (the remaining
    slots are idle).

    Returns ``(bank, squared_error)``.
    """
    cfg = cfg or SolverConfig()
    bits = normalize_bits(bits)
    if q < 1:
        raise ValueError("q must be at least 1")
    if bits is not None:
        bank, trace = greedy_main(problem, m_t, m_r, bits, q, cfg, inner_k_max)
        err = float(trace[-1])
        alt = closed_form_candidate(problem, m_t, m_r, bits, q)
        if alt is not None and bank_error(problem, alt) < err:
            return alt, bank_error(problem, alt)
        return bank, err
    if min(m_t, m_r) >= 2:
        digital, _ = altmin(problem, q, cfg)
        exact = thm1_hybrid_cont(digital)
    elif q >= 4:
        digital, _ = altmin(problem, q // 4, cfg)
        exact = thm3_analog_cont(digital)
    else:
        exact = None
    bank = pad_bank(exact, m_t, m_r, q, problem.n_t, problem.n_r)
    return bank, bank_error(problem, bank)
