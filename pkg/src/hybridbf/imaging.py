"""
Coherent far-field imaging with component-image addition.

Each pixel ``u`` is one or more transmissions; transmission ``q`` with
weights ``(w_t, w_r)`` returns

    y_q(u) = w_r^T A_r diag(gamma) A_t^T w_t + w_r^T n,   n ~ CN(0, sigma2 I)

and the pixel value is the sum over ``q``.  Noise is drawn from a generator
seeded by ``(seed, pixel index, q)``, so images do not depend on the order in
which pixels are computed.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .banks import DigitalBank, HybridBank
from .geometry import ArrayGeometry
from .hybrid import normalize_tx
from .steering import DirectionGrid, _default_gain, element_gain

__all__ = [
    "Scene",
    "scene_rough_surface",
    "measure",
    "ImageResult",
    "form_image",
    "steer_weights",
]


@dataclass(frozen=True, eq=False)
class Scene:
    """Point scatterers at reduced-coordinate directions ``u`` (``K x dim``)."""

    u: np.ndarray
    gamma: np.ndarray
    sigma2: float = 1.0

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=complex).reshape(-1)
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if len(u) != len(g):
            raise ValueError("need one reflectivity per scatterer direction")
        if self.sigma2 < 0:
            raise ValueError("noise variance must be nonnegative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "gamma", g)

    @property
    def k(self) -> int:
        return len(self.gamma)

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    def with_gamma(self, gamma) -> "Scene":
        return Scene(self.u, gamma, self.sigma2)

    def with_sigma2(self, sigma2: float) -> "Scene":
        return Scene(self.u, self.gamma, sigma2)


def scene_rough_surface(u, seed=None, sigma2: float = 1.0) -> Scene:
    """Rough-surface reflectivities at the given scatterer directions.

    ``gamma_k ~ CN(1/sqrt(2K), 1/(2K))`` i.i.d., ``K = len(u)``.
    """
    u = np.asarray(u, dtype=float)
    k = len(u)
    rng = np.random.default_rng(seed)
    if k == 0:
        return Scene(u.reshape(0, 1 if u.ndim < 2 else u.shape[1]), np.zeros(0), sigma2)
    z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    gamma = 1 / np.sqrt(2 * k) + np.sqrt(1 / (2 * k) / 2) * z
    return Scene(u, gamma, sigma2)


def _steering_at(geom: ArrayGeometry, u: np.ndarray, gain: str) -> np.ndarray:
    # N x K steering matrix at reduced coordinates u (K x dim)
    pos = geom.positions.reshape(geom.n, -1).astype(float)
    return element_gain(u if u.shape[1] > 1 else u[:, 0], gain) * np.exp(1j * np.pi * pos @ u.T)


def measure(scene: Scene, tx: ArrayGeometry, rx: ArrayGeometry, w_t, w_r,
            seed=None, gain: str | None = None) -> complex:
    """One transmission: signal plus a fresh noise draw at the Rx array."""
    w_t = np.asarray(w_t, dtype=complex).reshape(-1)
    w_r = np.asarray(w_r, dtype=complex).reshape(-1)
    if len(w_t) != tx.n or len(w_r) != rx.n:
        raise ValueError("weight lengths do not match the array sizes")
    gain = gain or _default_gain(tx.dim)
    y = 0j
    if scene.k:
        a_t = _steering_at(tx, scene.u, gain)
        a_r = _steering_at(rx, scene.u, gain)
        y = complex((w_r @ a_r) @ (scene.gamma * (a_t.T @ w_t)))
    if scene.sigma2 > 0:
        y += complex(w_r @ _noise(np.random.default_rng(seed), rx.n, scene.sigma2))
    return y


def _noise(rng, n, sigma2):
    return np.sqrt(sigma2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


@dataclass(frozen=True, eq=False)
class ImageResult:
    """Complex image over a direction grid; unevaluated pixels are masked."""

    grid: DirectionGrid
    values: np.ndarray
    q: np.ndarray
    mask: np.ndarray
    shape: tuple | None = None

    def __post_init__(self):
        if len(self.values) != self.grid.v:
            raise ValueError("one value per grid point is required")

    def db(self, floor: float = -60.0) -> np.ndarray:
        """Magnitude in dB relative to the peak, clipped at ``floor``."""
        mag = np.where(self.mask, np.abs(self.values), 0.0)
        peak = mag.max()
        if peak == 0:
            return np.full(len(mag), floor)
        with np.errstate(divide="ignore"):
            out = 20 * np.log10(mag / peak)
        return np.maximum(out, floor)

    def peak_index(self) -> int:
        return int(np.argmax(np.where(self.mask, np.abs(self.values), -1.0)))

    def _grid_shape(self):
        if self.shape is not None:
            return tuple(self.shape)
        if self.grid.dim == 2:
            side = int(round(np.sqrt(self.grid.v)))
            if side * side == self.grid.v:
                return (side, side)
        return (self.grid.v,)

    def save_npy(self, path):
        """Binary grid file: ``.npy`` header (shape, dtype) and complex values."""
        np.save(path, self.values.reshape(self._grid_shape()))

    def save_db_csv(self, path, floor: float = -60.0):
        db = self.db(floor).reshape(self._grid_shape())
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if db.ndim == 1:
                w.writerow(["u", "db"])
                for u, v in zip(self.grid.u, db):
                    w.writerow([f"{u:.6g}", f"{v:.4f}"])
            else:
                for row in db:
                    w.writerow([f"{v:.4f}" for v in row])


def steer_weights(geom: ArrayGeometry, w, u) -> np.ndarray:
    """Rotate element weights so the array looks toward reduced direction ``u``."""
    pos = geom.positions.reshape(geom.n, -1).astype(float)
    ph = np.exp(-1j * np.pi * pos @ np.atleast_1d(np.asarray(u, dtype=float)))
    return np.asarray(w) * ph[:, None]


def _prepared(bank, power):
    with warnings.catch_warnings():
        # idle images (zero Tx weight) are harmless here
        warnings.simplefilter("ignore", RuntimeWarning)
        bank = normalize_tx(bank)
    w_t, w_r = bank.weights()
    return np.sqrt(power) * w_t, w_r


def form_image(banks, scene: Scene, grid: DirectionGrid, tx: ArrayGeometry,
               rx: ArrayGeometry, seed=None, gain: str | None = None,
               power: float = 1.0, pixels=None, chunk_elems: int = 2_000_000,
               shape=None) -> ImageResult:
    """Image a scene, one pixel at a time, by summing component images.

    Parameters
    ----------
    banks : bank or sequence of banks
        A single bank designed for broadside is steered to every pixel by
        phase rotation (continuous phases only).  A sequence supplies one
        bank per grid point; entries for pixels outside ``pixels`` may be
        ``None``.
    pixels : array of int or bool mask, optional
        Grid points to evaluate; the rest are masked out.
    power : float
        Per-image transmit power (Tx weights scaled by ``sqrt(power)``)
        applied after Tx normalization.
    """
    if scene.dim != grid.dim:
        raise ValueError("scene and grid dimensionality differ")
    gain = gain or _default_gain(grid.dim)
    if pixels is None:
        idx = np.arange(grid.v)
    else:
        pixels = np.asarray(pixels)
        idx = np.flatnonzero(pixels) if pixels.dtype == bool else np.sort(pixels.astype(int))
    mask = np.zeros(grid.v, bool)
    mask[idx] = True

    single = isinstance(banks, (DigitalBank, HybridBank))
    if single:
        if isinstance(banks, HybridBank) and banks.bits is not None:
            raise ValueError("quantized phases cannot be steered; supply one bank per pixel")
        w_t0, w_r0 = _prepared(banks, power)
        q_max = w_t0.shape[1]
    else:
        if len(banks) != grid.v:
            raise ValueError("need one bank per grid point")
        missing = [int(p) for p in idx if banks[p] is None]
        if missing:
            raise ValueError(f"no bank for pixel(s) {missing[:5]}")
        prepared = {int(p): _prepared(banks[p], power) for p in idx}
        q_max = max(w[0].shape[1] for w in prepared.values())

    def weights_for(p):
        if single:
            u = grid.u[p]
            return steer_weights(tx, w_t0, u), steer_weights(rx, w_r0, u)
        w_t, w_r = prepared[int(p)]
        pad = q_max - w_t.shape[1]
        if pad:
            w_t = np.hstack([w_t, np.zeros((tx.n, pad))])
            w_r = np.hstack([w_r, np.zeros((rx.n, pad))])
        return w_t, w_r

    master = _seed_int(seed)
    values = np.zeros(grid.v, complex)
    qs = np.zeros(grid.v, int)
    if scene.k:
        a_t = _steering_at(tx, scene.u, gain)
        a_r = _steering_at(rx, scene.u, gain)
    step = max(1, chunk_elems // max(1, q_max * max(scene.k, 1)))
    for start in range(0, len(idx), step):
        block = idx[start:start + step]
        wt = np.empty((len(block), tx.n, q_max), complex)
        wr = np.empty((len(block), rx.n, q_max), complex)
        for i, p in enumerate(block):
            wt[i], wr[i] = weights_for(p)
        y = np.zeros((len(block), q_max), complex)
        if scene.k:
            st = np.einsum("pnq,nk->pqk", wt, a_t)
            sr = np.einsum("pnq,nk->pqk", wr, a_r)
            y += np.einsum("pqk,pqk,k->pq", sr, st, scene.gamma)
        if scene.sigma2 > 0:
            for i, p in enumerate(block):
                for q in range(q_max):
                    rng = np.random.default_rng([master, int(p), q])
                    y[i, q] += wr[i, :, q] @ _noise(rng, rx.n, scene.sigma2)
        values[block] = y.sum(axis=1)
        qs[block] = [q_max if single else banks[int(p)].q for p in block]
    return ImageResult(grid, values, qs, mask, shape)


def _seed_int(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    return int(seed)
