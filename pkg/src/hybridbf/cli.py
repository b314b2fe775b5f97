"""
Command-line entry point.

Exit codes: 0 success, 1 invalid configuration or missing file,
2 numerical failure, 3 a ``verify`` check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .banks import HybridBank, bank_from_dict
from .checks import run_checks
from .closedform import ARCHITECTURES, closed_form_bank
from .digital import SolverConfig, altmin, coarray_problem
from .experiments import ConfigError, ExperimentConfig, build_target, make_array, run_experiment
from .geometry import ArrayGeometry, sum_coarray
from .hybrid import design, greedy_main, min_q_search
from .imaging import Scene, form_image, scene_rough_surface
from .steering import (DirectionGrid, TargetSpec, effective_steering, psf_eval,
                       steer_target, steering_matrix)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class NumericalFailure(RuntimeError):
    pass


def _load_json(path) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _geometry(spec) -> ArrayGeometry:
    if not isinstance(spec, dict) or "array" not in spec:
        raise ConfigError("array spec must look like {\"array\": \"mra\", \"n\": 7}")
    return make_array(spec["array"], spec.get("n"), spec.get("positions"))


def _solver(record: dict) -> SolverConfig:
    keys = {"k_max", "eps_max", "eps_rel", "alpha", "n_init"}
    try:
        return SolverConfig(**{k: v for k, v in record.get("solver", {}).items() if k in keys})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver settings: {exc}") from exc


def _problem(record: dict, seed=None, direction=None):
    tx = _geometry(record.get("tx") or record.get("array"))
    rx = _geometry(record["rx"]) if record.get("rx") else tx
    ca = sum_coarray(tx, rx)
    tspec = dict(record.get("target", {"kind": "stochastic"}))
    if "values" in tspec:
        tgt = TargetSpec.from_dict(tspec)
        if len(tgt) != ca.n_sigma:
            raise ConfigError(f"target has {len(tgt)} entries, co-array has {ca.n_sigma}")
    else:
        if tx != rx:
            raise ConfigError("named targets need co-located Tx and Rx arrays")
        tseed = seed if seed is not None else tspec.get("seed", 0)
        try:
            tgt = build_target(tspec, tx, seed=tseed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if direction is None:
        direction = tspec.get("direction")
        reduced = bool(tspec.get("reduced", False))
    else:
        reduced = True
    if direction is not None:
        tgt = steer_target(tgt, ca, direction, reduced=reduced)
    return tx, rx, tgt, coarray_problem(tx, rx, tgt)


def _solve_bank(record: dict, prob, cfg):
    method = record.get("method", "auto")
    m_t = int(record.get("m_t", record.get("m", 2)))
    m_r = int(record.get("m_r", record.get("m", 2)))
    bits = record.get("bits", "inf")
    q = int(record.get("q", 1))
    inner = int(record.get("solver", {}).get("inner_k_max", 10))
    if method == "auto":
        return design(prob, m_t, m_r, bits, q, cfg, inner)[0]
    if method == "greedy":
        return greedy_main(prob, m_t, m_r, bits, q, cfg, inner)[0]
    if method == "digital":
        return altmin(prob, q, cfg)[0]
    if method == "min-q":
        eps = float(record.get("eps_rel", 1e-6)) * float(np.vdot(prob.psi, prob.psi).real)
        search = record.get("search", "greedy")
        res = min_q_search(prob, m_t, m_r, bits, eps, tuple(record.get("q_range", (1, 16))),
                           cfg, search, inner)
        if not res.feasible:
            raise NumericalFailure("no image count in range met the error tolerance")
        return res.bank
    if method in ARCHITECTURES:
        digital = altmin(prob, q, cfg)[0]
        return closed_form_bank(method, digital.matrix())
    raise ConfigError(f"unknown method {method!r}")


def _design_record(record, tx, rx, tgt, prob, bank) -> dict:
    bank.validate()
    return {"bank": bank.to_dict(), "tx": tx.to_dict(), "rx": rx.to_dict(),
            "target": tgt.to_dict(), "rel_error": prob.relative_error(bank.matrix()),
            "request": record}


def _write(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def cmd_solve(args) -> int:
    record = _load_json(args.config)
    tx, rx, tgt, prob = _problem(record, args.seed)
    bank = _solve_bank(record, prob, _solver(record))
    rec = _design_record(record, tx, rx, tgt, prob, bank)
    if not np.isfinite(rec["rel_error"]):
        raise NumericalFailure("design error is not finite")
    _write(json.dumps(rec) + "\n", args.out)
    print(f"Q={bank.q} relative error {rec['rel_error']:.3e}", file=sys.stderr)
    return EXIT_OK


def _load_design(path):
    record = _load_json(path)
    try:
        bank = bank_from_dict(record["bank"])
        tx = ArrayGeometry.from_dict(record["tx"])
        rx = ArrayGeometry.from_dict(record["rx"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a design file ({exc})") from exc
    return record, bank, tx, rx


def _grid(tx: ArrayGeometry, size) -> DirectionGrid:
    if tx.dim == 1:
        return DirectionGrid.uniform(int(size or 512))
    return DirectionGrid.planar(int(size or 64))


def cmd_psf(args) -> int:
    _, bank, tx, rx = _load_design(args.config)
    grid = _grid(tx, args.grid)
    a = effective_steering(steering_matrix(tx, grid), steering_matrix(rx, grid))
    psf = psf_eval(bank.matrix(), a)
    peak = np.abs(psf).max()
    with np.errstate(divide="ignore"):
        db = np.maximum(20 * np.log10(np.abs(psf) / peak), -60.0) if peak > 0 else \
            np.full(len(psf), -60.0)
    u = grid.u.reshape(grid.v, -1)
    cols = ["u"] if grid.dim == 1 else ["ux", "uz"]
    if args.format == "json":
        text = json.dumps({"columns": cols + ["re", "im", "db"],
                           "rows": [list(map(float, ui)) + [float(p.real), float(p.imag), float(d)]
                                    for ui, p, d in zip(u, psf, db)]})
    else:
        lines = [",".join(cols + ["re", "im", "db"])]
        for ui, p, d in zip(u, psf, db):
            lines.append(",".join([f"{x:.6e}" for x in ui]
                                  + [f"{p.real:.6e}", f"{p.imag:.6e}", f"{d:.4f}"]))
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    return EXIT_OK


def _scene(spec: dict, dim: int, seed) -> Scene:
    sigma2 = float(spec.get("sigma2", 1.0))
    if "u" in spec:
        u = np.asarray(spec["u"], dtype=float).reshape(-1, dim)
        gamma = np.asarray(spec.get("gamma", np.ones(len(u))), dtype=complex)
        return Scene(u, gamma, sigma2)
    if spec.get("kind") == "rough":
        rng = np.random.default_rng(seed)
        k = int(spec.get("k", 1000))
        if dim == 1:
            u = rng.uniform(-1, 1, (k, 1))
        else:
            r = np.sqrt(rng.uniform(0, 1, k))
            t = rng.uniform(0, 2 * np.pi, k)
            u = np.column_stack([r * np.cos(t), r * np.sin(t)])
        return scene_rough_surface(u, rng, sigma2)
    raise ConfigError("scene needs explicit 'u'/'gamma' or kind 'rough'")


def cmd_image(args) -> int:
    record = _load_json(args.config)
    if "design" not in record:
        raise ConfigError("image config needs a 'design' file")
    # design paths are relative to the config file
    design_path = os.path.join(os.path.dirname(os.path.abspath(args.config)), record["design"])
    design_rec, bank, tx, rx = _load_design(design_path)
    seed = args.seed if args.seed is not None else record.get("seed", 0)
    grid = _grid(tx, record.get("grid"))
    scene = _scene(record.get("scene", {"kind": "rough"}), grid.dim, seed)
    pixels = grid.visible()
    banks = bank
    if isinstance(bank, HybridBank) and bank.bits is not None:
        # quantized phases cannot be steered: redesign for every pixel
        request = design_rec.get("request", {})
        cfg = _solver(request)
        banks = [None] * grid.v
        for p in np.flatnonzero(pixels):
            _, _, _, prob = _problem(request, direction=grid.u[p])
            b = _solve_bank(request, prob, cfg)
            b.validate()
            banks[p] = b
    img = form_image(banks, scene, grid, tx, rx, seed=seed,
                     power=float(record.get("power", 1.0)), pixels=pixels)
    if not np.all(np.isfinite(img.values)):
        raise NumericalFailure("image contains non-finite values")
    out = args.out or "image"
    img.save_npy(out + ".npy")
    img.save_db_csv(out + "_db.csv")
    print(f"wrote {out}.npy and {out}_db.csv", file=sys.stderr)
    return EXIT_OK


def cmd_experiment(args) -> int:
    record = _load_json(args.config)
    if args.seed is not None:
        record["seed"] = args.seed
    cfg = ExperimentConfig.from_dict(record)
    table = run_experiment(cfg, threads=args.threads)
    out = args.out or cfg.output
    text = table.to_csv() if args.format == "csv" else table.to_json()
    _write(text, out)
    return EXIT_OK


def cmd_verify(args) -> int:
    trials = int(args.trials)
    seed = args.seed if args.seed is not None else 0
    results = run_checks(trials, seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridbf",
                                     description="Image-addition beamformer design and imaging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_help):
        p.add_argument("--config", help=config_help)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=None)
        return p

    common(sub.add_parser("solve", help="design one bank"), "design problem JSON")
    p = common(sub.add_parser("psf", help="PSF trace of a designed bank"), "design JSON from solve")
    p.add_argument("--grid", type=int, default=None, help="grid points (linear) or side (planar)")
    common(sub.add_parser("image", help="simulate an image"), "imaging JSON")
    common(sub.add_parser("experiment", help="run a sweep"), "experiment JSON")
    p = common(sub.add_parser("verify", help="closed-form and invariant checks"), "unused")
    p.add_argument("--trials", type=int, default=200)
    return parser


_COMMANDS = {"solve": cmd_solve, "psf": cmd_psf, "image": cmd_image,
             "experiment": cmd_experiment, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid configuration ({exc})", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
