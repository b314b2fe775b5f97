"""
Config-driven sweeps over array size, component images, front ends and bits.

Every sweep is split into tasks (one per target realization) that each
return ``(cell, value)`` pairs; tasks are seeded from ``(seed, N, trial)``
so cells that differ only in ``Q``, ``B`` or ``M`` see the same targets,
and results do not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .closedform import (ARCHITECTURES, closed_form_bank, closed_form_image_count,
                         lemma3_flatten, thm1_hybrid_cont)
from .digital import SolverConfig, altmin, coarray_problem
from .geometry import (ArrayGeometry, make_boundary, make_custom, make_mra, make_ula,
                       make_ura, q_lower_bound, sum_coarray)
from .hybrid import design, greedy_main, min_q_search, quantized_thm1
from .imaging import Scene, form_image
from .numerics import normalize_bits
from .steering import (DirectionGrid, TargetSpec, effective_steering, psf_eval,
                       separable_target, steer_target, steering_matrix,
                       target_stochastic, window)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultTable",
    "KINDS",
    "make_array",
    "build_target",
    "percentile_nearest_rank",
    "run_experiment",
    "planar_study",
]

KINDS = ("altmin-sweep", "greedy-sweep", "b-sweep", "psf-plot", "tradeoff-sweep",
         "planar-imaging", "closedform-verify")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def make_array(kind: str, n=None, positions=None) -> ArrayGeometry:
    """Geometry from a short name: ``ula``, ``mra`` (``n`` elements),
    ``ura``, ``boundary`` (``n`` = side length) or ``custom``."""
    kind = kind.lower()
    try:
        if kind == "ula":
            return make_ula(int(n))
        if kind == "mra":
            return make_mra(int(n))
        if kind == "ura":
            return make_ura(int(n))
        if kind in ("boundary", "ba"):
            return make_boundary(int(n))
        if kind == "custom":
            return make_custom(positions)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown array kind {kind!r}")


def build_target(spec: dict, geom: ArrayGeometry, seed=None, direction=None,
                 reduced: bool = False) -> TargetSpec:
    """Co-array target from a config dict for a co-located array.

    ``{"kind": "stochastic"}`` or a window name with optional
    ``"attenuation"``; planar arrays get the separable product of the 1-D
    window over each co-array axis.
    """
    ca = sum_coarray(geom, geom)
    kind = spec.get("kind", "stochastic")
    if kind == "stochastic":
        tgt = target_stochastic(ca.n_sigma, seed)
    elif ca.dim == 1:
        tgt = TargetSpec(window(kind, ca.n_sigma, spec.get("attenuation", 30.0)))
    else:
        nx = len(np.unique(ca.support[:, 0]))
        nz = len(np.unique(ca.support[:, 1]))
        if nx * nz != ca.n_sigma:
            raise ConfigError("separable window targets need a full rectangular co-array")
        att = spec.get("attenuation", 40.0)
        tgt = separable_target(window(kind, nx, att), window(kind, nz, att))
    if direction is not None:
        tgt = steer_target(tgt, ca, direction, reduced=reduced)
    return tgt


def percentile_nearest_rank(values, p: float) -> float:
    """Nearest-rank percentile of the sorted sample (``p`` in percent)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return float("nan")
    rank = max(1, math.ceil(p / 100 * v.size))
    return float(v[rank - 1])


def _bits_list(raw):
    out = []
    for b in raw:
        try:
            out.append(normalize_bits(b))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad bit depth {b!r}") from exc
    return out


@dataclass
class ExperimentConfig:
    """Parameters of one sweep; see :data:`KINDS` for the available studies."""

    kind: str
    array: str = "ula"
    n: list = field(default_factory=lambda: [11])
    q: list = field(default_factory=lambda: [1, 2, 3, 4])
    bits: list = field(default_factory=lambda: [5])
    m: list = field(default_factory=lambda: [2])
    trials: int = 20
    seed: int = 0
    target: dict = field(default_factory=lambda: {"kind": "stochastic"})
    solver: dict = field(default_factory=dict)
    directions: int | None = None
    grid: int = 512
    planar: dict = field(default_factory=dict)
    include_runtime: bool = False
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        for name in ("n", "q", "bits", "m"):
            val = getattr(self, name)
            if not isinstance(val, (list, tuple)):
                val = [val]
            if len(val) == 0:
                raise ConfigError(f"parameter grid {name!r} is empty")
            setattr(self, name, list(val))
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        if any(int(q) < 0 for q in self.q) or any(int(m) < 1 for m in self.m):
            raise ConfigError("Q must be >= 0 and M >= 1")
        self.bits = _bits_list(self.bits)
        try:
            self.solver_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad solver settings: {exc}") from exc

    def solver_config(self) -> SolverConfig:
        keys = {"k_max", "eps_max", "eps_rel", "alpha", "n_init"}
        return SolverConfig(**{k: v for k, v in self.solver.items() if k in keys})

    @property
    def inner_k_max(self) -> int:
        return int(self.solver.get("inner_k_max", 10))

    @classmethod
    def from_dict(cls, record: dict) -> "ExperimentConfig":
        if not isinstance(record, dict) or "kind" not in record:
            raise ConfigError("config must be a JSON object with a 'kind' field")
        known = set(cls.__dataclass_fields__)
        unknown = set(record) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**record)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                record = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(record)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bits"] = [("inf" if b is None else b) for b in self.bits]
        return d


@dataclass
class ResultTable:
    """One row per parameter cell: parameters first, then statistics."""

    params: list
    rows: list
    stats: tuple = ("mean", "median", "p5", "p95", "n", "failures")
    include_runtime: bool = False

    @property
    def columns(self) -> list:
        cols = list(self.params) + list(self.stats)
        if self.include_runtime:
            cols.append("runtime_s")
        return cols

    def column(self, name: str) -> list:
        return [r.get(name) for r in self.rows]

    def lookup(self, **params) -> dict:
        for r in self.rows:
            if all(r.get(k) == v for k, v in params.items()):
                return r
        raise KeyError(params)

    @staticmethod
    def _fmt(v):
        if isinstance(v, (float, np.floating)):
            return "nan" if not np.isfinite(v) else f"{float(v):.6e}"
        if v is None:
            return "inf"
        return str(v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        w.writerow(cols)
        for r in self.rows:
            w.writerow([self._fmt(r.get(c)) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        cols = self.columns

        def clean(v):
            if isinstance(v, (float, np.floating)):
                return float(v) if np.isfinite(v) else None
            if isinstance(v, np.integer):
                return int(v)
            return v
        return json.dumps({"columns": cols,
                           "rows": [{c: clean(r.get(c)) for c in cols} for r in self.rows]},
                          indent=1)

    def save(self, path, fmt: str = "csv"):
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------- tasks

def _seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def _rel(err_sq, psi) -> float:
    return float(np.sqrt(max(err_sq, 0.0)) / np.linalg.norm(psi))


def _bkey(b):
    return "inf" if b is None else int(b)


def _task(spec):
    kind, cfg, args = spec
    t0 = time.perf_counter()
    try:
        out = _TASKS[kind](cfg, *args)
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        return [("__failed__", args, repr(exc))], time.perf_counter() - t0
    return out, time.perf_counter() - t0


def _altmin_task(cfg, n, trial):
    geom = make_array(cfg.array, n)
    tgt = build_target(cfg.target, geom, seed=_seed(cfg.seed, n, trial))
    prob = coarray_problem(geom, geom, tgt)
    scfg = cfg.solver_config()
    out = []
    for q in cfg.q:
        if q == 0:
            out.append(((n, 0), 1.0))
            continue
        bank, _ = altmin(prob, q, scfg)
        out.append(((n, q), prob.relative_error(bank.matrix())))
    return out


def _greedy_task(cfg, n, trial):
    geom = make_array(cfg.array, n)
    tgt = build_target(cfg.target, geom, seed=_seed(cfg.seed, n, trial))
    prob = coarray_problem(geom, geom, tgt)
    scfg = cfg.solver_config()
    out = []
    for m in cfg.m:
        for b in cfg.bits:
            _, trace = greedy_main(prob, m, m, b, max(cfg.q), scfg, cfg.inner_k_max)
            for q in cfg.q:
                out.append(((n, _bkey(b), m, q), _rel(trace[q], prob.psi)))
    return out


def _direction(cfg, trial, count):
    if count == 1:
        return 0.0
    return float(np.linspace(-np.pi / 2, np.pi / 2, count)[trial])


def _steered_problem(cfg, n, trial, count):
    geom = make_array(cfg.array, n)
    if cfg.target.get("kind", "stochastic") == "stochastic":
        tgt = build_target(cfg.target, geom, seed=_seed(cfg.seed, n, trial))
    else:
        tgt = build_target(cfg.target, geom, direction=_direction(cfg, trial, count))
    return coarray_problem(geom, geom, tgt)


def _bsweep_task(cfg, n, trial):
    prob = _steered_problem(cfg, n, trial, cfg.trials)
    scfg = cfg.solver_config()
    out = []
    q_max = max(cfg.q)
    for m in cfg.m:
        for b in cfg.bits:
            _, trace = greedy_main(prob, m, m, b, q_max, scfg, cfg.inner_k_max)
            for q in cfg.q:
                out.append((("greedy", n, m, _bkey(b), q), _rel(trace[q], prob.psi)))
    for q in cfg.q:
        if q == 0:
            continue
        digital, _ = altmin(prob, q, scfg)
        out.append((("digital", n, 0, "inf", q), prob.relative_error(digital.matrix())))
        for b in cfg.bits:
            _, err = quantized_thm1(prob, q, b, scfg)
            out.append((("thm1-quantized", n, 2, _bkey(b), q), _rel(err, prob.psi)))
    return out


def _tradeoff_task(cfg, n, trial):
    count = cfg.directions or cfg.trials
    prob = _steered_problem(cfg, n, trial, count)
    scfg = cfg.solver_config()
    out = []
    q_max = max(cfg.q)
    for m in cfg.m:
        for b in cfg.bits:
            if b is None:
                for q in cfg.q:
                    err = float(np.vdot(prob.psi, prob.psi).real) if q == 0 else \
                        design(prob, m, m, None, q, scfg)[1]
                    out.append(((n, m, "inf", q), _rel(err, prob.psi)))
            else:
                _, trace = greedy_main(prob, m, m, b, q_max, scfg, cfg.inner_k_max)
                for q in cfg.q:
                    out.append(((n, m, int(b), q), _rel(trace[q], prob.psi)))
    return out


def _closedform_task(cfg, n, trial):
    # one random n x n matrix per requested rank
    out = []
    for rank in cfg.q:
        rank = int(rank)
        if not 1 <= rank <= n:
            raise ValueError(f"rank {rank} impossible for a {n} x {n} matrix")
        rng = np.random.default_rng(_seed(cfg.seed, n, trial, rank))
        w = ((rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank)))
             @ (rng.standard_normal((rank, n)) + 1j * rng.standard_normal((rank, n))))
        expected = {"digital": rank, "hybrid-inf": rank, "hybrid-1bit": n * n,
                    "analog-inf": 4 * rank, "analog-1bit": 4 * n * n}
        for arch in ARCHITECTURES:
            bank = closed_form_bank(arch, w)
            err = np.linalg.norm(bank.matrix() - w) / np.linalg.norm(w)
            q_ok = bank.q == expected[arch] == closed_form_image_count(arch, w)
            out.append(((n, rank, arch), float(err) if q_ok else float("inf")))
        hyb = thm1_hybrid_cont(closed_form_bank("digital", w))
        flat = lemma3_flatten(hyb)
        err = np.linalg.norm(flat.matrix() - w) / np.linalg.norm(w)
        ok = flat.q == hyb.q * hyb.m_t * hyb.m_r and flat.m_t == flat.m_r == 1
        out.append(((n, rank, "lemma3"), float(err) if ok else float("inf")))
    return out


_TASKS = {
    "altmin-sweep": _altmin_task,
    "greedy-sweep": _greedy_task,
    "b-sweep": _bsweep_task,
    "tradeoff-sweep": _tradeoff_task,
    "closedform-verify": _closedform_task,
}

_PARAMS = {
    "altmin-sweep": ("N", "Q"),
    "greedy-sweep": ("N", "B", "M", "Q"),
    "b-sweep": ("method", "N", "M", "B", "Q"),
    "tradeoff-sweep": ("N", "M", "B", "Q"),
    "closedform-verify": ("N", "rank", "architecture"),
}


def _threads(requested) -> int:
    if requested is None:
        requested = os.environ.get("COARRAY_THREADS", 1)
    try:
        return max(1, int(requested))
    except ValueError as exc:
        raise ConfigError(f"bad thread count {requested!r}") from exc


def _map(tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_task, tasks))


def _aggregate(kind, cfg, results) -> ResultTable:
    cells: dict = {}
    times: dict = {}
    failures: dict = {}
    for out, elapsed in results:
        if out and out[0][0] == "__failed__":
            n_failed = out[0][1][0]
            failures[n_failed] = failures.get(n_failed, 0) + 1
            continue
        share = elapsed / max(1, len(out))
        for key, val in out:
            cells.setdefault(key, []).append(val)
            times[key] = times.get(key, 0.0) + share
    params = list(_PARAMS[kind])
    if kind == "altmin-sweep":
        params.append("q_bound")
    rows = []
    # insertion order follows task order, which is deterministic
    for key in cells:
        vals = np.asarray(cells[key], dtype=float)
        finite = vals[np.isfinite(vals)]
        row = dict(zip(_PARAMS[kind], key))
        if kind == "altmin-sweep":
            geom = make_array(cfg.array, key[0])
            row["q_bound"] = q_lower_bound(geom.n, geom.n, sum_coarray(geom, geom).n_sigma)
        row.update({
            "mean": float(finite.mean()) if finite.size else float("nan"),
            "median": float(np.median(finite)) if finite.size else float("nan"),
            "p5": percentile_nearest_rank(finite, 5),
            "p95": percentile_nearest_rank(finite, 95),
            "n": int(finite.size),
            # a failed task loses every cell of its array size
            "failures": int(vals.size - finite.size) + failures.get(row["N"], 0),
            "runtime_s": times.get(key, 0.0),
        })
        if kind == "closedform-verify":
            row["max"] = float(vals.max())
        rows.append(row)
    stats = ("mean", "median", "p5", "p95", "n", "failures")
    if kind == "closedform-verify":
        stats = stats + ("max",)
    return ResultTable(params, rows, stats, cfg.include_runtime)


def _psf_plot(cfg) -> ResultTable:
    n = cfg.n[0]
    geom = make_array(cfg.array, n)
    ca = sum_coarray(geom, geom)
    direction = cfg.target.get("direction", -np.pi / 4)
    tgt = build_target(cfg.target, geom, seed=_seed(cfg.seed, n, 0), direction=direction)
    prob = coarray_problem(geom, geom, tgt)
    grid = DirectionGrid.uniform(cfg.grid)
    a = steering_matrix(geom, grid)
    a_eff = effective_steering(a, a)
    from .steering import coarray_steering
    desired = coarray_steering(ca, grid).T @ tgt.values
    ref = np.abs(desired).max()
    scfg = cfg.solver_config()
    rows = []
    for m in cfg.m:
        for b in cfg.bits:
            for q in cfg.q:
                if q == 0:
                    continue
                bank, err = design(prob, m, m, b, q, scfg, cfg.inner_k_max)
                realized = psf_eval(bank.matrix(), a_eff)
                for u, d, r in zip(grid.u, desired, realized):
                    rows.append({"M": m, "B": _bkey(b), "Q": q, "u": float(u),
                                 "desired_db": _db(d, ref), "realized_db": _db(r, ref),
                                 "rel_error": _rel(err, prob.psi)})
    return ResultTable(["M", "B", "Q", "u"], rows,
                       ("desired_db", "realized_db", "rel_error"), False)


def _db(x, ref, floor=-60.0):
    mag = abs(x) / ref
    return max(floor, 20 * math.log10(mag)) if mag > 0 else floor


def _planar_table(cfg) -> ResultTable:
    p = dict(cfg.planar)
    p.setdefault("seed", cfg.seed)
    if cfg.bits and "bits" not in p:
        p["bits"] = cfg.bits[0]
    if "m" not in p:
        p["m"] = cfg.m[0]
    if "q" not in p:
        p["q"] = max(cfg.q)
    p.setdefault("alpha", cfg.solver.get("alpha", 1e-4))
    p.setdefault("eps_rel", cfg.solver.get("eps_rel", 1e-6))
    res = planar_study(**p)
    rows = [{"metric": k, "value": v} for k, v in res["metrics"].items()]
    return ResultTable(["metric"], rows, ("value",), False)


def run_experiment(cfg: ExperimentConfig, threads=None) -> ResultTable:
    """Run the sweep described by ``cfg`` and return its result table."""
    if cfg.kind == "psf-plot":
        return _psf_plot(cfg)
    if cfg.kind == "planar-imaging":
        return _planar_table(cfg)
    if cfg.kind in ("b-sweep", "tradeoff-sweep"):
        count = cfg.trials if cfg.kind == "b-sweep" else (cfg.directions or cfg.trials)
        tasks = [(cfg.kind, cfg, (n, t)) for n in cfg.n for t in range(count)]
    else:
        tasks = [(cfg.kind, cfg, (n, t)) for n in cfg.n for t in range(cfg.trials)]
    return _aggregate(cfg.kind, cfg, _map(tasks, _threads(threads)))


# ---------------------------------------------------------------- planar study

def _shape_scatterers(k: int, rng) -> np.ndarray:
    """``k`` points on a ring and a bar inside the visible disk."""
    n_ring = k // 2
    ang = rng.uniform(0, 2 * np.pi, n_ring)
    rad = rng.uniform(0.18, 0.26, n_ring)
    ring = np.column_stack([-0.35 + rad * np.cos(ang), 0.3 + rad * np.sin(ang)])
    bar = np.column_stack([rng.uniform(0.05, 0.55, k - n_ring),
                           rng.uniform(-0.5, -0.38, k - n_ring)])
    return np.vstack([ring, bar])


def _grid_distance(grid_side, i, j) -> int:
    # Chebyshev distance between flat indices on a side x side grid
    a = np.array(divmod(i, grid_side))
    b = np.array(divmod(j, grid_side))
    return int(np.abs(a - b).max())


def planar_study(side: int = 8, grid_side: int = 64, bits=5, m: int = 2, q: int = 8,
                 k: int = 1000, seed: int = 0, attenuation: float = 40.0,
                 alpha: float = 1e-4, eps_rel: float = 1e-6, sigma2: float = 1.0,
                 peak_gamma: float = 2.0, peak_index=None, hybrid: bool = True):
    """Planar imaging comparison: URA vs boundary array (digital and hybrid).

    Returns a dict with ``metrics`` (scalars), the designed banks and the
    images.  The hybrid boundary-array image uses one greedy design per
    visible pixel.
    """
    ura, ba = make_ura(side), make_boundary(side)
    ca = sum_coarray(ba, ba)
    w_dc = window("chebyshev", 2 * side + 1, attenuation)
    tgt = separable_target(w_dc, w_dc)
    scfg = SolverConfig(alpha=alpha, eps_rel=eps_rel)
    eps_abs = eps_rel * tgt.norm ** 2
    metrics = {}

    p_ura = coarray_problem(ura, ura, tgt)
    p_ba = coarray_problem(ba, ba, tgt)
    bank_ura, _ = altmin(p_ura, 1, scfg)
    search = min_q_search(p_ba, eps_max=eps_abs, q_range=(1, ba.n), cfg=scfg, method="digital")
    if not search.feasible:
        raise RuntimeError("no digital boundary-array design met the tolerance")
    bank_ba = search.bank
    metrics["ura_rel_error"] = p_ura.relative_error(bank_ura.matrix())
    metrics["ba_digital_q"] = search.q_min
    metrics["ba_rel_error"] = p_ba.relative_error(bank_ba.matrix())

    grid = DirectionGrid.planar(grid_side)
    vis = grid.visible()
    vgrid = DirectionGrid(grid.u[vis])
    psf_ura = psf_eval(bank_ura.matrix(), effective_steering(*(steering_matrix(ura, vgrid),) * 2))
    psf_ba = psf_eval(bank_ba.matrix(), effective_steering(*(steering_matrix(ba, vgrid),) * 2))
    dev = np.max(np.abs(psf_ura / np.abs(psf_ura).max() - psf_ba / np.abs(psf_ba).max()))
    metrics["psf_max_dev_db"] = float(20 * np.log10(max(dev, 1e-300)))

    rng = np.random.default_rng(_seed(seed, 7))
    u_rough = _shape_scatterers(k, rng)
    z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    gamma = 1 / np.sqrt(2 * k) + np.sqrt(1 / (4 * k)) * z
    if peak_index is None:
        peak_index = (grid_side * 5) // 8 * grid_side + (grid_side * 3) // 8
    u_peak = grid.u[peak_index]
    scene = Scene(np.vstack([u_rough, u_peak]), np.append(gamma, peak_gamma), sigma2)
    quiet = scene.with_sigma2(0.0)

    img_seed = _seed(seed, 11)
    images = {}
    images["ura_clean"] = form_image(bank_ura, quiet, grid, ura, ura, pixels=vis)
    images["ura"] = form_image(bank_ura, scene, grid, ura, ura, seed=img_seed, pixels=vis)
    images["ba_clean"] = form_image(bank_ba, quiet, grid, ba, ba, pixels=vis)
    images["ba"] = form_image(bank_ba, scene, grid, ba, ba, seed=img_seed, pixels=vis)
    for name in ("ura", "ba"):
        noise = images[name].values[vis] - images[name + "_clean"].values[vis]
        metrics[f"{name}_noise_power"] = float(np.mean(np.abs(noise) ** 2))
    ref_peak = images["ura_clean"].peak_index()
    metrics["reference_peak"] = ref_peak
    metrics["ba_peak_offset"] = _grid_distance(grid_side, images["ba"].peak_index(), ref_peak)

    banks = {"ura": bank_ura, "ba": bank_ba}
    if hybrid:
        t0 = time.perf_counter()
        per_pixel = [None] * grid.v
        errs = []
        for p in np.flatnonzero(vis):
            prob = coarray_problem(ba, ba, steer_target(tgt, ca, grid.u[p], reduced=True))
            bank, trace = greedy_main(prob, m, m, bits, q, scfg)
            bank.validate()
            per_pixel[p] = bank
            errs.append(_rel(trace[-1], prob.psi))
        metrics["hybrid_design_seconds"] = time.perf_counter() - t0
        metrics["hybrid_median_rel_error"] = float(np.median(errs))
        images["hybrid"] = form_image(per_pixel, scene, grid, ba, ba, seed=img_seed, pixels=vis)
        metrics["hybrid_peak_offset"] = _grid_distance(
            grid_side, images["hybrid"].peak_index(), ref_peak)
        banks["hybrid"] = per_pixel
    return {"metrics": metrics, "banks": banks, "images": images, "grid": grid}
