"""
Fully digital image-addition design.

The design problem is ``min ||psi - S vec(W_r W_t^T)||^2`` where ``S`` is
either the transposed effective steering matrix (PSF domain, ``V`` rows)
or the co-array selection matrix (co-array domain, ``N_sigma`` rows).  It is
solved by alternating least squares from a spectral initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .banks import DigitalBank
from .geometry import ArrayGeometry, selection_matrix, sum_coarray
from .numerics import lstsq_regularized, svd_truncated
from .steering import (DirectionGrid, TargetSpec, effective_steering,
                       steering_matrix, unvec, vec)

__all__ = [
    "DesignProblem",
    "coarray_problem",
    "psf_problem",
    "DigitalBank",
    "SolverConfig",
    "spectral_init",
    "altmin",
    "svd_factorize",
]


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Linear measurement model ``psi = sensing @ vec(W)`` plus its target.

    ``sensing`` is ``V x N_t N_r`` (i.e. ``A^T``); columns follow the
    column-major vec of an ``N_r x N_t`` matrix.
    """

    sensing: np.ndarray
    psi: np.ndarray
    n_t: int
    n_r: int
    domain: str = "coarray"
    _s3: np.ndarray = field(init=False, repr=False)
    _rows: np.ndarray | None = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.sensing)
        psi = np.asarray(self.psi, dtype=complex).reshape(-1)
        if s.shape != (len(psi), self.n_t * self.n_r):
            raise ValueError(f"sensing matrix shape {s.shape} inconsistent with "
                             f"V={len(psi)}, N_t={self.n_t}, N_r={self.n_r}")
        object.__setattr__(self, "sensing", s)
        object.__setattr__(self, "psi", psi)
        # (V, N_t, N_r) view: vec index m = t * N_r + r
        object.__setattr__(self, "_s3", s.reshape(len(psi), self.n_t, self.n_r))
        object.__setattr__(self, "_rows", _selection_rows(s))

    @property
    def v(self) -> int:
        return len(self.psi)

    @property
    def a(self) -> np.ndarray:
        """Effective steering matrix ``A`` (``N_t N_r x V``)."""
        return self.sensing.T

    def with_target(self, psi) -> "DesignProblem":
        return DesignProblem(self.sensing, psi, self.n_t, self.n_r, self.domain)

    def forward(self, w: np.ndarray) -> np.ndarray:
        if self._rows is not None:
            return _scatter(self._rows, vec(w), self.v)
        return self.sensing @ vec(w)

    def error(self, w: np.ndarray, psi=None) -> float:
        psi = self.psi if psi is None else psi
        r = psi - self.forward(w)
        return float(np.vdot(r, r).real)

    def relative_error(self, w: np.ndarray) -> float:
        return float(np.sqrt(self.error(w)) / np.linalg.norm(self.psi))

    # Design matrices of the two linear subproblems.
    def rx_design(self, w_t: np.ndarray) -> np.ndarray:
        """``S (W_t kron I_Nr)``: maps vec(W_r) to psi for fixed ``W_t``."""
        q = w_t.shape[1]
        if self._rows is not None:
            flat = self._flat_index("rx", q)
            vals = np.broadcast_to(w_t[:, :, None], (self.n_t, q, self.n_r))
            return _scatter(flat, vals.ravel(), self.v * q * self.n_r).reshape(self.v, -1)
        x = np.matmul(self._s3.transpose(0, 2, 1), w_t)       # (V, N_r, Q)
        return x.transpose(0, 2, 1).reshape(self.v, -1)

    def tx_design(self, w_r: np.ndarray) -> np.ndarray:
        """``S (I_Nt kron W_r)``: maps vec(W_t^T) to psi for fixed ``W_r``."""
        q = w_r.shape[1]
        if self._rows is not None:
            flat = self._flat_index("tx", q)
            vals = np.broadcast_to(w_r[None, :, :], (self.n_t, self.n_r, q))
            return _scatter(flat, vals.ravel(), self.v * self.n_t * q).reshape(self.v, -1)
        return np.matmul(self._s3, w_r).reshape(self.v, -1)    # (V, N_t*Q)

    def _flat_index(self, side: str, q: int) -> np.ndarray:
        # flattened (row, column) targets of the scatter-add design matrices
        key = (side, q)
        if key not in self._cache:
            rows = self._rows.reshape(self.n_t, self.n_r)
            t = np.arange(self.n_t)
            r = np.arange(self.n_r)
            k = np.arange(q)
            if side == "rx":
                # entry (t, r) of the virtual array feeds row rows[t, r], column k N_r + r
                flat = (rows[:, None, :] * (q * self.n_r)
                        + k[None, :, None] * self.n_r + r[None, None, :])
            else:
                # column t Q + k
                flat = (rows[:, :, None] * (self.n_t * q)
                        + t[:, None, None] * q + k[None, None, :])
            self._cache[key] = flat.ravel()
        return self._cache[key]


def _selection_rows(s: np.ndarray):
    """Row index of the single unit entry per column, or None if ``s`` is not a selection."""
    if np.iscomplexobj(s) or s.size == 0:
        return None
    if not np.all((s == 0) | (s == 1)) or not np.all(s.sum(axis=0) == 1):
        return None
    return np.argmax(s, axis=0)


def _scatter(idx, vals, size):
    vals = np.asarray(vals)
    if not np.iscomplexobj(vals):
        return np.bincount(idx, weights=vals, minlength=size).astype(complex)
    out = np.empty(size, complex)
    out.real = np.bincount(idx, weights=vals.real, minlength=size)
    out.imag = np.bincount(idx, weights=vals.imag, minlength=size)
    return out


def coarray_problem(tx: ArrayGeometry, rx: ArrayGeometry, target) -> DesignProblem:
    """Co-array domain problem: ``S`` is the selection matrix."""
    vals = target.values if isinstance(target, TargetSpec) else np.asarray(target)
    sel = selection_matrix(tx, rx, sum_coarray(tx, rx))
    return DesignProblem(sel, vals, tx.n, rx.n, "coarray")


def psf_problem(tx: ArrayGeometry, rx: ArrayGeometry, grid: DirectionGrid,
                target, gain: str | None = None) -> DesignProblem:
    """PSF domain problem sampled on ``grid``."""
    vals = target.values if isinstance(target, TargetSpec) else np.asarray(target)
    a = effective_steering(steering_matrix(tx, grid, gain), steering_matrix(rx, grid, gain))
    return DesignProblem(a.T, vals, tx.n, rx.n, "psf")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration limits and regularization.

    ``eps_max`` is an absolute squared-error threshold; when ``None`` it is
    ``eps_rel * ||psi||^2``.
    """

    k_max: int = 100
    eps_max: float | None = None
    eps_rel: float = 1e-16
    alpha: float = 1e-9
    seed: int | None = None
    n_init: int = 1

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.n_init < 1:
            raise ValueError("n_init must be at least 1")

    def threshold(self, psi) -> float:
        if self.eps_max is not None:
            return float(self.eps_max)
        return self.eps_rel * float(np.vdot(psi, psi).real)

    def replace(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


def _solve(x, y, alpha):
    # alpha == 0 falls back to the minimum-norm solution, so every half step
    # is still an exact least-squares minimizer when a factor loses rank
    return lstsq_regularized(x, y, alpha)


def spectral_init(problem: DesignProblem, q: int, psi=None):
    """Spectral starting point ``W = sum_v psi_v mat(A[:, v])``.

    Returns ``(W, W_t)`` with ``W_t`` the conjugated top-``q`` right singular
    vectors of ``W``.
    """
    if not 1 <= q <= min(problem.n_t, problem.n_r):
        raise ValueError(f"q={q} must lie in 1..min(N_t, N_r)")
    psi = problem.psi if psi is None else np.asarray(psi)
    w = unvec(problem.sensing.T @ psi, problem.n_r, problem.n_t)
    _, _, v = svd_truncated(w, q)
    return w, v.conj()


def altmin(problem: DesignProblem, q: int, cfg: SolverConfig | None = None,
           w_t0: np.ndarray | None = None, *, half_steps: bool = False):
    """Alternating least squares for a rank-``q`` co-array weight matrix.

    Returns ``(bank, trace)`` where ``trace`` holds the squared error after
    every iteration (or after every half step if ``half_steps``).  With
    ``cfg.n_init > 1`` extra random starts drawn from ``cfg.seed`` are tried
    and the best result is kept.
    """
    cfg = cfg or SolverConfig()
    if q < 1:
        raise ValueError("q must be at least 1")
    q_eff = min(q, problem.n_t, problem.n_r)
    starts = []
    if w_t0 is not None:
        starts.append(np.asarray(w_t0, dtype=complex))
    else:
        starts.append(spectral_init(problem, q_eff)[1])
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.n_init - 1):
        starts.append(rng.standard_normal((problem.n_t, q_eff))
                      + 1j * rng.standard_normal((problem.n_t, q_eff)))
    best = None
    for w_t in starts:
        bank, trace = _altmin_run(problem, w_t, cfg, half_steps)
        if best is None or trace[-1] < best[1][-1]:
            best = (bank, trace)
    bank, trace = best
    if q_eff < q:
        pad_t = np.zeros((problem.n_t, q - q_eff), complex)
        pad_r = np.zeros((problem.n_r, q - q_eff), complex)
        bank = DigitalBank(np.hstack([bank.w_t, pad_t]), np.hstack([bank.w_r, pad_r]))
    return bank, trace


def _sq_norm(r) -> float:
    return float(np.vdot(r, r).real)


def _altmin_run(problem, w_t, cfg, half_steps):
    psi = problem.psi
    eps_max = cfg.threshold(psi)
    q = w_t.shape[1]
    trace = []
    eps = np.inf
    k = 0
    w_r = np.zeros((problem.n_r, q), complex)
    while k < cfg.k_max and eps > eps_max:
        x = problem.rx_design(w_t)
        z = _solve(x, psi, cfg.alpha)
        w_r = unvec(z, problem.n_r, q)
        if half_steps:
            trace.append(_sq_norm(psi - x @ z))
        x = problem.tx_design(w_r)
        z = _solve(x, psi, cfg.alpha)
        w_t = z.reshape(problem.n_t, q)
        # the design matrix reproduces S vec(W_r W_t^T) exactly
        eps = _sq_norm(psi - x @ z)
        trace.append(eps)
        k += 1
    return DigitalBank(w_t, w_r), np.asarray(trace)


def svd_factorize(w: np.ndarray, tol: float | None = None) -> DigitalBank:
    """Split ``W`` into ``rank(W)`` image pairs: ``W_r = U S``, ``W_t = conj(V)``."""
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    s_all = np.linalg.svd(w, compute_uv=False)
    if s_all[0] == 0:
        return DigitalBank(np.zeros((w.shape[1], 1)), np.zeros((w.shape[0], 1)))
    tol = max(w.shape) * np.finfo(float).eps * s_all[0] if tol is None else tol
    rank = max(1, int(np.sum(s_all > tol)))
    u, s, v = svd_truncated(w, rank)
    return DigitalBank(v.conj(), u * s)
