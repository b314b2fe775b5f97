"""
Array geometries on the half-wavelength integer lattice, sum co-arrays and
the selection matrix that maps Tx/Rx element pairs onto co-array positions.

Positions are integers in units of d = lambda/2.  Linear arrays are stored
as ``(N,)`` integer arrays, planar arrays as ``(N, 2)`` arrays of ``(x, z)``
pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Label",
    "ArrayGeometry",
    "SumCoarray",
    "make_ula",
    "make_mra",
    "make_ura",
    "make_boundary",
    "make_custom",
    "sum_coarray",
    "selection_matrix",
    "q_lower_bound",
    "MRA_TABLE",
]


class Label(str, Enum):
    ULA = "ULA"
    MRA = "MRA"
    URA = "URA"
    BOUNDARY = "BoundaryArray"
    CUSTOM = "Custom"


# Restricted additive bases: element sets on [0, L] whose pairwise sums cover
# [0, 2L] with L maximal for the element count.  Obtained by exhaustive
# search; every entry here is mirror-symmetric.
MRA_TABLE: dict[int, tuple[int, ...]] = {
    1: (0,),
    2: (0, 1),
    3: (0, 1, 2),
    4: (0, 1, 3, 4),
    5: (0, 1, 3, 5, 6),
    6: (0, 1, 3, 5, 7, 8),
    7: (0, 1, 3, 5, 7, 9, 10),
    8: (0, 1, 2, 5, 8, 11, 12, 13),
    9: (0, 1, 2, 5, 8, 11, 14, 15, 16),
    10: (0, 1, 3, 4, 9, 11, 16, 17, 19, 20),
}


def _center_shift(extent: int) -> int:
    # -ceil(extent/2): keeps the lattice integer and matches [-N/2, N/2-1]
    # for even-length ULAs.
    return -((extent + 1) // 2)


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions of one aperture.

    Parameters
    ----------
    positions : ndarray of int
        ``(N,)`` for linear arrays, ``(N, 2)`` for planar ``(x, z)`` arrays.
    label : Label
    """

    positions: np.ndarray
    label: Label = Label.CUSTOM

    def __post_init__(self):
        pos = np.asarray(self.positions)
        if pos.size == 0:
            raise ValueError("geometry must contain at least one element")
        if not np.issubdtype(pos.dtype, np.integer):
            if not np.all(np.equal(np.mod(pos, 1), 0)):
                raise ValueError("positions must lie on the integer lattice")
        pos = pos.astype(np.int64)
        if pos.ndim not in (1, 2) or (pos.ndim == 2 and pos.shape[1] != 2):
            raise ValueError("positions must have shape (N,) or (N, 2)")
        rows = pos.reshape(len(pos), -1)
        if len(np.unique(rows, axis=0)) != len(rows):
            raise ValueError("positions must be pairwise distinct")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "label", Label(self.label))

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return 1 if self.positions.ndim == 1 else 2

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, ArrayGeometry):
            return NotImplemented
        return (self.label == other.label
                and self.positions.shape == other.positions.shape
                and bool(np.all(self.positions == other.positions)))

    def __hash__(self):
        return hash((self.label, self.positions.tobytes()))

    def to_dict(self) -> dict:
        return {"label": self.label.value, "dim": self.dim,
                "positions": self.positions.tolist()}

    @classmethod
    def from_dict(cls, record: dict) -> "ArrayGeometry":
        pos = np.asarray(record["positions"], dtype=np.int64)
        dim = record.get("dim", 1 if pos.ndim == 1 else 2)
        if dim == 2:
            pos = pos.reshape(-1, 2)
        return cls(pos, Label(record.get("label", "Custom")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ArrayGeometry":
        return cls.from_dict(json.loads(text))


def make_ula(n: int) -> ArrayGeometry:
    """Uniform linear array of ``n`` elements centred at the origin."""
    if n < 1:
        raise ValueError(f"invalid array size {n}")
    return ArrayGeometry(np.arange(n) + _center_shift(n - 1), Label.ULA)


def make_mra(n: int) -> ArrayGeometry:
    """Minimum-redundancy linear array (contiguous sum co-array).

    Only the embedded catalogue (``n <= 10``) is supported; use
    :func:`make_custom` for anything else.
    """
    if n not in MRA_TABLE:
        raise ValueError(f"unsupported MRA size {n}; catalogue covers "
                         f"{min(MRA_TABLE)}..{max(MRA_TABLE)}")
    base = np.array(MRA_TABLE[n])
    return ArrayGeometry(base + _center_shift(int(base[-1])), Label.MRA)


def _square(side: int) -> np.ndarray:
    if side < 1:
        raise ValueError(f"invalid side length {side}")
    g = np.arange(side + 1) + _center_shift(side)
    xx, zz = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([xx.ravel(), zz.ravel()])


def make_ura(side: int) -> ArrayGeometry:
    """Square uniform rectangular array with ``side`` unit spacings per edge."""
    return ArrayGeometry(_square(side), Label.URA)


def make_boundary(side: int) -> ArrayGeometry:
    """Perimeter of the square URA of the same ``side``."""
    pts = _square(side)
    lo, hi = pts.min(), pts.max()
    on_edge = np.any((pts == lo) | (pts == hi), axis=1)
    return ArrayGeometry(pts[on_edge], Label.BOUNDARY)


def make_custom(positions) -> ArrayGeometry:
    return ArrayGeometry(np.asarray(positions), Label.CUSTOM)


@dataclass(frozen=True, eq=False)
class SumCoarray:
    """Distinct pairwise sums ``d_t + d_r`` and their multiplicities.

    ``support`` is sorted lexicographically and fixes the row order of the
    selection matrix.
    """

    support: np.ndarray
    multiplicity: np.ndarray
    n_t: int = field(default=0)
    n_r: int = field(default=0)

    @property
    def n_sigma(self) -> int:
        return len(self.support)

    @property
    def dim(self) -> int:
        return 1 if self.support.ndim == 1 else 2


def _pair_sums(tx: ArrayGeometry, rx: ArrayGeometry) -> np.ndarray:
    # Column m = t * N_r + r of the Kronecker ordering (r is the fast index).
    dt, dr = tx.positions, rx.positions
    if tx.dim == 1:
        return (dt[:, None] + dr[None, :]).reshape(-1)
    return (dt[:, None, :] + dr[None, :, :]).reshape(-1, 2)


def sum_coarray(tx: ArrayGeometry, rx: ArrayGeometry) -> SumCoarray:
    if tx.dim != rx.dim:
        raise ValueError("Tx and Rx geometries have different dimensionality")
    sums = _pair_sums(tx, rx)
    support, counts = np.unique(sums, axis=0, return_counts=True)
    support.setflags(write=False)
    counts.setflags(write=False)
    return SumCoarray(support, counts, tx.n, rx.n)


def _pair_rows(tx: ArrayGeometry, rx: ArrayGeometry, ca: SumCoarray) -> np.ndarray:
    sums = _pair_sums(tx, rx)
    if tx.dim == 1:
        idx = np.searchsorted(ca.support, sums)
        ok = (idx < ca.n_sigma) & (ca.support[np.minimum(idx, ca.n_sigma - 1)] == sums)
    else:
        lookup = {tuple(p): i for i, p in enumerate(ca.support.tolist())}
        idx = np.array([lookup.get(tuple(s), -1) for s in sums.tolist()])
        ok = idx >= 0
    if not np.all(ok):
        raise ValueError("co-array does not belong to these geometries")
    return idx


def selection_matrix(tx: ArrayGeometry, rx: ArrayGeometry,
                     ca: SumCoarray | None = None) -> np.ndarray:
    """Binary ``N_sigma x N_t N_r`` matrix mapping vec(W) onto the co-array.

    Column ``m`` (zero based) corresponds to Tx element ``m // N_r`` and Rx
    element ``m % N_r``, i.e. column-major vec of an ``N_r x N_t`` matrix.
    """
    if ca is None:
        ca = sum_coarray(tx, rx)
    if ca.n_t and (ca.n_t != tx.n or ca.n_r != rx.n):
        raise ValueError("co-array does not belong to these geometries")
    rows = _pair_rows(tx, rx, ca)
    if ca.dim != tx.dim:
        raise ValueError("co-array dimensionality mismatch")
    sel = np.zeros((ca.n_sigma, tx.n * rx.n))
    sel[rows, np.arange(tx.n * rx.n)] = 1.0
    if not np.array_equal(sel.sum(axis=1), ca.multiplicity):
        raise ValueError("co-array multiplicities inconsistent with geometries")
    return sel


def q_lower_bound(n_t: int, n_r: int, n_sigma: int) -> int:
    """Smallest rank able to reach an arbitrary co-array weighting.

    A rank-Q ``N_r x N_t`` matrix has ``Q (N_t + N_r - Q)`` degrees of
    freedom, which must cover ``n_sigma`` equations.  Evaluated in integers
    to avoid rounding at the boundary cases.
    """
    if n_sigma > n_t * n_r:
        raise ValueError("n_sigma cannot exceed n_t * n_r")
    q = 1
    while q * (n_t + n_r - q) < n_sigma:
        q += 1
    return q
