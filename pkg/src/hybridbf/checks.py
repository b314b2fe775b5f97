"""
Randomized self-checks shared by ``hybridbf verify`` and the test suite.

Each check draws its own random cases from a seeded generator and counts
the cases that violate the property.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closedform import (closed_form_bank, lemma2_analog, lemma3_flatten,
                         thm1_hybrid_cont)
from .digital import SolverConfig, altmin, coarray_problem
from .geometry import ArrayGeometry, selection_matrix, sum_coarray
from .numerics import on_lattice, quantize_phase
from .steering import (DirectionGrid, coarray_steering, effective_steering,
                       steering_matrix, target_stochastic)

__all__ = ["CheckResult", "check_quantizer", "check_selection", "check_altmin_monotone",
           "check_closed_forms", "check_lemma2", "run_checks"]


@dataclass
class CheckResult:
    name: str
    trials: int
    failures: int
    worst: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.failures}/{self.trials} failures (worst {self.worst:.3g})"


def _cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _random_geometry(rng, planar: bool) -> ArrayGeometry:
    if planar:
        side = int(rng.integers(2, 6))
        cells = rng.choice(side * side, size=int(rng.integers(1, side * side + 1)), replace=False)
        return ArrayGeometry(np.column_stack(np.divmod(cells, side)) - side // 2)
    span = int(rng.integers(1, 16))
    n = int(rng.integers(1, span + 1))
    return ArrayGeometry(np.sort(rng.choice(span, size=n, replace=False)) - span // 2)


def check_quantizer(trials: int = 1000, seed=0) -> CheckResult:
    """Lattice membership, idempotence, nesting and half-step error bound."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(trials):
        b = int(rng.integers(1, 17))
        x = rng.uniform(-20, 20, 8)
        # exact lattice points and ties as well as generic values
        x[:2] = rng.integers(-50, 50, 2) * np.pi / 2 ** b
        qx = quantize_phase(x, b)
        gap = np.abs(np.angle(np.exp(1j * (x - qx))))
        ok = (on_lattice(qx, b) and np.array_equal(quantize_phase(qx, b), qx)
              and on_lattice(qx, b + 1) and np.all(gap <= np.pi / 2 ** b + 1e-9)
              and np.all((qx >= 0) & (qx < 2 * np.pi)))
        bad += not ok
    return CheckResult("quantizer lattice/nesting/idempotence", trials, bad)


def check_selection(trials: int = 1000, seed=0) -> CheckResult:
    """Column sums of one, row sums equal to multiplicity, ``A = Sel^T A_sigma``."""
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(trials):
        planar = bool(rng.integers(0, 2))
        tx, rx = _random_geometry(rng, planar), _random_geometry(rng, planar)
        ca = sum_coarray(tx, rx)
        sel = selection_matrix(tx, rx, ca)
        if planar:
            r = np.sqrt(rng.uniform(0, 1, 5))
            t = rng.uniform(0, 2 * np.pi, 5)
            grid = DirectionGrid(np.column_stack([r * np.cos(t), r * np.sin(t)]))
        else:
            grid = DirectionGrid(rng.uniform(-1, 1, 5))
        a = effective_steering(steering_matrix(tx, grid), steering_matrix(rx, grid))
        dev = float(np.abs(a - sel.T @ coarray_steering(ca, grid)).max())
        worst = max(worst, dev)
        ok = (np.all(sel.sum(axis=0) == 1) and np.array_equal(sel.sum(axis=1), ca.multiplicity)
              and dev <= 1e-12)
        bad += not ok
    return CheckResult("selection matrix identities", trials, bad, worst)


def check_altmin_monotone(trials: int = 1000, seed=0) -> CheckResult:
    """Squared error never increases over AltMin half steps (``alpha = 0``)."""
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    cfg = SolverConfig(k_max=8, alpha=0.0, eps_rel=0.0)
    for _ in range(trials):
        g = _random_geometry(rng, False)
        ca = sum_coarray(g, g)
        prob = coarray_problem(g, g, target_stochastic(ca.n_sigma, rng))
        q = int(rng.integers(1, g.n + 1))
        _, trace = altmin(prob, q, cfg, half_steps=True)
        scale = float(np.vdot(prob.psi, prob.psi).real)
        rise = float(np.max(np.diff(trace), initial=0.0)) / scale
        worst = max(worst, rise)
        bad += rise > 1e-10
    return CheckResult("altmin monotone objective", trials, bad, worst)


def check_closed_forms(trials: int = 50, seed=0, max_size: int = 8,
                       max_rank: int = 4) -> CheckResult:
    """All closed-form banks reproduce ``W`` with the documented image counts."""
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(trials):
        n_r, n_t = (int(v) for v in rng.integers(1, max_size + 1, 2))
        rank = int(rng.integers(1, min(max_rank, n_r, n_t) + 1))
        w = _cplx(rng, n_r, rank) @ _cplx(rng, rank, n_t)
        expected = {"hybrid-inf": rank, "hybrid-1bit": n_r * n_t,
                    "analog-inf": 4 * rank, "analog-1bit": 4 * n_r * n_t}
        banks = {arch: closed_form_bank(arch, w) for arch in expected}
        hyb = thm1_hybrid_cont(closed_form_bank("digital", w))
        banks["lemma3"] = lemma3_flatten(hyb)
        expected["lemma3"] = hyb.m_t * hyb.m_r * hyb.q
        ok = True
        for arch, bank in banks.items():
            err = np.linalg.norm(bank.matrix() - w) / np.linalg.norm(w)
            worst = max(worst, float(err))
            ok &= err <= 1e-10 and bank.q == expected[arch]
        bad += not ok
    return CheckResult("closed-form reconstructions", trials, bad, worst)


def check_lemma2(trials: int = 100, seed=0) -> CheckResult:
    """Single-front-end error equals ``||w||_2^2 - ||w||_1^2 / N``."""
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 33))
        w = _cplx(rng, n) * rng.uniform(0.1, 10)
        _, _, err = lemma2_analog(w)
        l2 = float(np.vdot(w, w).real)
        formula = l2 - np.sum(np.abs(w)) ** 2 / n
        dev = abs(err - formula) / l2
        worst = max(worst, dev)
        bad += dev > 1e-12
    return CheckResult("single front end optimal value", trials, bad, worst)


def run_checks(trials: int = 1000, seed=0) -> list[CheckResult]:
    return [
        check_quantizer(trials, seed),
        check_selection(trials, seed),
        check_altmin_monotone(trials, seed),
        check_closed_forms(max(1, trials // 20), seed),
        check_lemma2(max(1, trials // 10), seed),
    ]
