"""
Beamformer banks: the per-component-image weights of a design.

A :class:`DigitalBank` holds full weight vectors.  A :class:`HybridBank`
holds analog phase-shifter phases ``F_x = [F_x1, ..., F_xQ]`` (``N_x x M_x Q``)
and digital weights ``C_x`` (``M_x x Q``); ``M_x = 1`` is the fully analog
case.  Both expose :meth:`matrix` returning the co-array weight matrix
``W = sum_q w_rq w_tq^T``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _serial
from .numerics import normalize_bits, on_lattice, phase_indices

__all__ = ["DigitalBank", "HybridBank", "bank_from_dict", "load_bank", "save_bank"]


@dataclass(frozen=True, eq=False)
class DigitalBank:
    """Per-image Tx and Rx weights; column ``q`` is component image ``q``."""

    w_t: np.ndarray
    w_r: np.ndarray

    def __post_init__(self):
        w_t = np.atleast_2d(np.asarray(self.w_t, dtype=complex))
        w_r = np.atleast_2d(np.asarray(self.w_r, dtype=complex))
        if w_t.shape[1] != w_r.shape[1]:
            raise ValueError("Tx and Rx weight matrices have different image counts")
        if w_t.shape[1] < 1:
            raise ValueError("a bank needs at least one component image")
        object.__setattr__(self, "w_t", w_t)
        object.__setattr__(self, "w_r", w_r)

    @property
    def q(self) -> int:
        return self.w_t.shape[1]

    @property
    def n_t(self) -> int:
        return self.w_t.shape[0]

    @property
    def n_r(self) -> int:
        return self.w_r.shape[0]

    def matrix(self) -> np.ndarray:
        """Co-array weight matrix ``W_r W_t^T``."""
        return self.w_r @ self.w_t.T

    def weights(self):
        return self.w_t, self.w_r

    def to_digital(self) -> "DigitalBank":
        return self

    def validate(self):
        if not (np.all(np.isfinite(self.w_t)) and np.all(np.isfinite(self.w_r))):
            raise ValueError("bank contains non-finite weights")

    def to_dict(self) -> dict:
        return {"kind": "digital", "q": self.q,
                "w_t": _serial.pack(self.w_t), "w_r": _serial.pack(self.w_r)}

    @classmethod
    def from_dict(cls, record: dict) -> "DigitalBank":
        return cls(_serial.unpack(record["w_t"]), _serial.unpack(record["w_r"]))


def _per_image(f: np.ndarray, q: int, m: int) -> np.ndarray:
    # (N, M*Q) -> (N, Q, M); column q*M + m belongs to image q, front end m
    return f.reshape(f.shape[0], q, m)


@dataclass(frozen=True, eq=False)
class HybridBank:
    """Phase-shifter phases (radians) and digital weights for ``Q`` images.

    ``bits=None`` denotes continuous phase shifters.
    """

    phase_t: np.ndarray
    phase_r: np.ndarray
    c_t: np.ndarray
    c_r: np.ndarray
    bits: int | None = None

    def __post_init__(self):
        c_t = np.atleast_2d(np.asarray(self.c_t, dtype=complex))
        c_r = np.atleast_2d(np.asarray(self.c_r, dtype=complex))
        p_t = np.atleast_2d(np.asarray(self.phase_t, dtype=float))
        p_r = np.atleast_2d(np.asarray(self.phase_r, dtype=float))
        q = c_t.shape[1]
        if c_r.shape[1] != q or q < 1:
            raise ValueError("digital weight matrices must share Q >= 1 columns")
        if p_t.shape[1] != c_t.shape[0] * q or p_r.shape[1] != c_r.shape[0] * q:
            raise ValueError("phase matrices must have M_x * Q columns")
        object.__setattr__(self, "c_t", c_t)
        object.__setattr__(self, "c_r", c_r)
        object.__setattr__(self, "phase_t", p_t)
        object.__setattr__(self, "phase_r", p_r)
        object.__setattr__(self, "bits", normalize_bits(self.bits))

    @property
    def q(self) -> int:
        return self.c_t.shape[1]

    @property
    def m_t(self) -> int:
        return self.c_t.shape[0]

    @property
    def m_r(self) -> int:
        return self.c_r.shape[0]

    @property
    def n_t(self) -> int:
        return self.phase_t.shape[0]

    @property
    def n_r(self) -> int:
        return self.phase_r.shape[0]

    @property
    def f_t(self) -> np.ndarray:
        return np.exp(1j * self.phase_t)

    @property
    def f_r(self) -> np.ndarray:
        return np.exp(1j * self.phase_r)

    def weights(self):
        """Effective per-image element weights ``(W_t, W_r)`` = ``F_xq c_xq``."""
        w_t = np.einsum("nqm,mq->nq", _per_image(self.f_t, self.q, self.m_t), self.c_t)
        w_r = np.einsum("nqm,mq->nq", _per_image(self.f_r, self.q, self.m_r), self.c_r)
        return w_t, w_r

    def to_digital(self):
        return DigitalBank(*self.weights())

    def matrix(self) -> np.ndarray:
        w_t, w_r = self.weights()
        return w_r @ w_t.T

    def validate(self):
        """Check codebook membership of every phase."""
        for name in ("phase_t", "phase_r"):
            if not on_lattice(getattr(self, name), self.bits):
                raise ValueError(f"{name} not on the {self.bits}-bit phase lattice")
        if not (np.all(np.isfinite(self.c_t)) and np.all(np.isfinite(self.c_r))):
            raise ValueError("bank contains non-finite digital weights")

    def to_dict(self) -> dict:
        rec = {"kind": "hybrid", "q": self.q, "m_t": self.m_t, "m_r": self.m_r,
               "bits": self.bits,
               "c_t": _serial.pack(self.c_t), "c_r": _serial.pack(self.c_r)}
        for name in ("phase_t", "phase_r"):
            ph = getattr(self, name)
            if self.bits is None:
                rec[name] = _serial.pack(ph)
            else:
                # integer k with phase = 2 pi k / 2^B: bit-exact round trip
                rec[name] = _serial.pack(phase_indices(ph, self.bits))
        return rec

    @classmethod
    def from_dict(cls, record: dict) -> "HybridBank":
        bits = normalize_bits(record.get("bits"))
        phases = []
        for name in ("phase_t", "phase_r"):
            arr = _serial.unpack(record[name])
            if bits is not None:
                arr = arr * (np.pi / 2 ** (bits - 1))
            phases.append(arr)
        return cls(phases[0], phases[1], _serial.unpack(record["c_t"]),
                   _serial.unpack(record["c_r"]), bits)


def bank_from_dict(record: dict):
    kind = record.get("kind")
    if kind == "digital":
        return DigitalBank.from_dict(record)
    if kind == "hybrid":
        return HybridBank.from_dict(record)
    raise ValueError(f"unknown bank kind {kind!r}")


def save_bank(bank, path):
    with open(path, "w") as fh:
        json.dump(bank.to_dict(), fh)


def load_bank(path):
    with open(path) as fh:
        return bank_from_dict(json.load(fh))
