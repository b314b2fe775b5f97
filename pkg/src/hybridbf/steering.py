"""
Steering vectors, effective (Khatri-Rao) and co-array steering matrices,
point spread function evaluation and target generators.

Directions are handled in reduced coordinates: ``sin(phi)`` for linear
arrays and ``(sin(phi) sin(theta), cos(theta))`` for planar arrays, so that
the phase of an element at lattice position ``d`` is ``pi * d . u``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import windows

from .geometry import ArrayGeometry, SumCoarray

__all__ = [
    "DirectionGrid",
    "TargetSpec",
    "direction_to_u",
    "element_gain",
    "steering_vector",
    "steering_matrix",
    "effective_steering",
    "coarray_steering",
    "vec",
    "unvec",
    "psf_eval",
    "coarray_weights",
    "target_stochastic",
    "target_window",
    "window",
    "separable_target",
    "steer_target",
    "relative_error",
]


def vec(w: np.ndarray) -> np.ndarray:
    """Column-major vectorization (Rx index fastest for ``N_r x N_t``)."""
    return np.asarray(w).reshape(-1, order="F")


def unvec(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(x).reshape(rows, cols, order="F")


def direction_to_u(direction, dim: int) -> np.ndarray:
    """Map an azimuth (1-D) or ``(phi, theta)`` pair (2-D) to reduced coords."""
    if dim == 1:
        return np.atleast_1d(np.sin(np.asarray(direction, dtype=float)))
    phi, theta = np.asarray(direction, dtype=float).T
    u = np.column_stack([np.atleast_1d(np.sin(phi) * np.sin(theta)),
                         np.atleast_1d(np.cos(theta))])
    return u


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """``V`` scan or scatterer directions in reduced coordinates.

    ``u`` is ``(V,)`` for linear arrays and ``(V, 2)`` for planar arrays.
    Planar points outside the unit disc are not physical directions.
    """

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 0:
            u = u[None]
        if u.ndim == 2 and u.shape[1] == 1:
            u = u[:, 0]
        if len(u) < 1:
            raise ValueError("grid must contain at least one direction")
        if np.any(np.abs(u) > 1 + 1e-12):
            raise ValueError("reduced coordinates must lie in [-1, 1]")
        object.__setattr__(self, "u", u)

    @property
    def dim(self) -> int:
        return 1 if self.u.ndim == 1 else 2

    @property
    def v(self) -> int:
        return len(self.u)

    def __len__(self):
        return self.v

    @classmethod
    def from_angles(cls, phi, theta=None) -> "DirectionGrid":
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if np.any(np.abs(phi) > np.pi / 2 + 1e-12):
            raise ValueError("azimuth must lie in [-pi/2, pi/2]")
        if theta is None:
            return cls(np.sin(phi))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if np.any((theta < -1e-12) | (theta > np.pi + 1e-12)):
            raise ValueError("elevation must lie in [0, pi]")
        return cls(direction_to_u(np.column_stack([phi, theta]), 2))

    @classmethod
    def uniform(cls, v: int = 512) -> "DirectionGrid":
        """``v`` points uniformly spaced in ``sin(phi)`` over ``[-1, 1]``."""
        return cls(np.linspace(-1.0, 1.0, v))

    @classmethod
    def planar(cls, side: int = 64) -> "DirectionGrid":
        """``side x side`` grid over ``[-1, 1]^2``; x varies slowest."""
        g = np.linspace(-1.0, 1.0, side)
        xx, zz = np.meshgrid(g, g, indexing="ij")
        return cls(np.column_stack([xx.ravel(), zz.ravel()]))

    def visible(self) -> np.ndarray:
        if self.dim == 1:
            return np.ones(self.v, dtype=bool)
        return np.sum(self.u ** 2, axis=1) <= 1.0

    def to_dict(self) -> dict:
        return {"dim": self.dim, "u": self.u.tolist()}

    @classmethod
    def from_dict(cls, record: dict) -> "DirectionGrid":
        return cls(np.asarray(record["u"], dtype=float))


def element_gain(u: np.ndarray, gain: str) -> np.ndarray:
    """Element amplitude pattern at reduced coordinates ``u``.

    ``"omni"`` is unity; ``"sinusoidal"`` is ``cos(phi) sin(theta)``, which
    equals ``sqrt(1 - |u|^2)`` in reduced coordinates.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0] if u.ndim else 1
    if gain == "omni":
        return np.ones(n)
    if gain == "sinusoidal":
        r2 = u ** 2 if u.ndim == 1 else np.sum(u ** 2, axis=1)
        return np.sqrt(np.clip(1.0 - r2, 0.0, None))
    raise ValueError(f"unknown gain pattern {gain!r}")


def _default_gain(dim: int) -> str:
    return "omni" if dim == 1 else "sinusoidal"


def _phase(positions: np.ndarray, u: np.ndarray) -> np.ndarray:
    # (N, V) matrix of pi * d . u
    if positions.ndim == 1:
        return np.pi * np.outer(positions, u)
    return np.pi * (positions.astype(float) @ u.T)


def steering_matrix(geom: ArrayGeometry, grid: DirectionGrid,
                    gain: str | None = None) -> np.ndarray:
    """``N x V`` matrix whose columns are steering vectors on ``grid``."""
    if grid.dim != geom.dim:
        raise ValueError("grid and geometry dimensionality differ")
    gain = gain or _default_gain(geom.dim)
    return element_gain(grid.u, gain)[None, :] * np.exp(1j * _phase(geom.positions, grid.u))


def steering_vector(geom: ArrayGeometry, direction, gain: str | None = None) -> np.ndarray:
    """Steering vector toward an azimuth (linear) or ``(phi, theta)`` (planar)."""
    u = direction_to_u(direction, geom.dim)
    return steering_matrix(geom, DirectionGrid(u), gain)[:, 0]


def effective_steering(a_t: np.ndarray, a_r: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker (Khatri-Rao) product ``A_t (.) A_r``."""
    a_t = np.atleast_2d(a_t)
    a_r = np.atleast_2d(a_r)
    if a_t.shape[1] != a_r.shape[1]:
        raise ValueError("Tx and Rx steering matrices have different V")
    v = a_t.shape[1]
    return (a_t[:, None, :] * a_r[None, :, :]).reshape(-1, v)


def coarray_steering(ca: SumCoarray, grid: DirectionGrid,
                     gain: str | None = None) -> np.ndarray:
    """``N_sigma x V`` steering matrix of the virtual co-array elements.

    Each virtual element carries the two-way (Tx times Rx) element gain, so
    ``A = Sel^T A_sigma`` holds for any gain shared by all elements.
    """
    if grid.dim != ca.dim:
        raise ValueError("grid and co-array dimensionality differ")
    gain = gain or _default_gain(ca.dim)
    g = element_gain(grid.u, gain) ** 2
    return g[None, :] * np.exp(1j * _phase(ca.support, grid.u))


def psf_eval(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    """PSF ``A^T vec(W)`` of an ``N_r x N_t`` co-array weight matrix."""
    w = np.asarray(w)
    if w.size != a.shape[0]:
        raise ValueError(f"W has {w.size} entries, steering matrix has {a.shape[0]} rows")
    return a.T @ vec(w)


def coarray_weights(w: np.ndarray, sel: np.ndarray) -> np.ndarray:
    """Co-array weight vector ``Sel vec(W)``."""
    w = np.asarray(w)
    if w.size != sel.shape[1]:
        raise ValueError(f"W has {w.size} entries, selection matrix has {sel.shape[1]} columns")
    return sel @ vec(w)


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """Desired co-array weights (``domain="coarray"``) or sampled PSF."""

    values: np.ndarray
    domain: str = "coarray"

    def __post_init__(self):
        if self.domain not in ("coarray", "psf"):
            raise ValueError(f"unknown target domain {self.domain!r}")
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dict(self) -> dict:
        return {"domain": self.domain,
                "values": np.column_stack([self.values.real, self.values.imag]).tolist()}

    @classmethod
    def from_dict(cls, record: dict) -> "TargetSpec":
        pairs = np.asarray(record["values"], dtype=float).reshape(-1, 2)
        return cls(pairs[:, 0] + 1j * pairs[:, 1], record.get("domain", "coarray"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TargetSpec":
        return cls.from_dict(json.loads(text))


def target_stochastic(n_sigma: int, seed=None) -> TargetSpec:
    """Random co-array weights ``sqrt(r) exp(j phi)``, ``r ~ U(0,1)``, ``phi ~ U(0, 2pi)``."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.0, 1.0, n_sigma)
    phi = rng.uniform(0.0, 2 * np.pi, n_sigma)
    return TargetSpec(np.sqrt(r) * np.exp(1j * phi))


def window(kind: str, n: int, attenuation: float = 30.0) -> np.ndarray:
    """Real, symmetric, peak-normalized taper of length ``n``.

    ``hann`` drops the zero end points of the textbook window so that the
    outermost co-array elements keep nonzero weight.
    """
    if n < 1:
        raise ValueError("window length must be positive")
    kind = kind.lower()
    if kind in ("rect", "rectangular"):
        w = np.ones(n)
    elif kind in ("triangular", "triang", "bartlett"):
        w = windows.triang(n)
    elif kind == "hann":
        w = windows.hann(n + 2)[1:-1]
    elif kind in ("chebyshev", "chebwin", "dolph-chebyshev"):
        if attenuation <= 0:
            raise ValueError("Chebyshev attenuation must be positive (dB)")
        with warnings.catch_warnings():
            # scipy's note about spectral-analysis use does not apply to tapers
            warnings.simplefilter("ignore", UserWarning)
            w = windows.chebwin(n, attenuation) if n > 1 else np.ones(1)
    else:
        raise ValueError(f"unknown window {kind!r}")
    return w / np.max(w)


def target_window(kind: str, n_sigma: int, attenuation: float = 30.0) -> TargetSpec:
    return TargetSpec(window(kind, n_sigma, attenuation))


def separable_target(w_x: np.ndarray, w_z: np.ndarray) -> TargetSpec:
    """Planar co-array weights ``w_x (x) w_z`` for a full rectangular co-array.

    Matches the lexicographic ``(x, z)`` support ordering.
    """
    return TargetSpec(np.kron(np.asarray(w_x), np.asarray(w_z)))


def steer_target(spec: TargetSpec, ca: SumCoarray, direction, *,
                 reduced: bool = False) -> TargetSpec:
    """Move the PSF main lobe toward ``direction``.

    ``direction`` is an azimuth (linear) or ``(phi, theta)`` (planar), or a
    reduced coordinate if ``reduced`` is set.
    """
    if spec.domain != "coarray":
        raise ValueError("only co-array targets can be steered")
    if len(spec) != ca.n_sigma:
        raise ValueError("target length differs from co-array size")
    u = np.asarray(direction, dtype=float) if reduced else direction_to_u(direction, ca.dim)
    u = u.reshape(-1) if ca.dim == 1 else u.reshape(1, 2)
    phase = _phase(ca.support, u)[:, 0]
    return TargetSpec(spec.values * np.exp(-1j * phase))


def relative_error(target, achieved) -> float:
    """``||target - achieved||_2 / ||target||_2``."""
    t = target.values if isinstance(target, TargetSpec) else np.asarray(target)
    a = np.asarray(achieved)
    if t.shape != a.shape:
        raise ValueError("target and achieved vectors differ in length")
    nt = np.linalg.norm(t)
    if nt == 0:
        raise ValueError("relative error undefined for a zero target")
    return float(np.linalg.norm(t - a) / nt)
