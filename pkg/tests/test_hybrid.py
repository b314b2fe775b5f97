import numpy as np
import pytest

from hybridbf.banks import DigitalBank, HybridBank
from hybridbf.closedform import thm1_hybrid_cont
from hybridbf.digital import SolverConfig, altmin, coarray_problem
from hybridbf.geometry import make_custom, make_mra, make_ula, selection_matrix, sum_coarray
from hybridbf.hybrid import (_khatri_design, bank_error, closed_form_candidate, design,
                             greedy_main, greedy_sub, min_q_search, normalize_tx, pad_bank,
                             quantized_thm1, refine_digital)
from hybridbf.numerics import on_lattice
from hybridbf.steering import TargetSpec, steer_target, target_stochastic, target_window, vec


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def problem_for(geom, seed=0):
    ca = sum_coarray(geom, geom)
    return coarray_problem(geom, geom, target_stochastic(ca.n_sigma, seed))


def cheb_problem(geom, phi=0.0):
    ca = sum_coarray(geom, geom)
    return coarray_problem(geom, geom, steer_target(target_window("chebyshev", ca.n_sigma), ca, phi))


class TestGreedySub:
    def test_continuous_two_columns_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            w = cplx(rng, 9)
            ph, c = greedy_sub(w, 2, None)
            assert np.linalg.norm(np.exp(1j * ph) @ c - w) <= 1e-10 * np.linalg.norm(w)

    def test_one_bit_many_columns(self):
        rng = np.random.default_rng(1)
        w = cplx(rng, 8)
        ph, c = greedy_sub(w, 16, 1)
        assert np.linalg.norm(np.exp(1j * ph) @ c - w) <= 1e-6 * np.linalg.norm(w)

    def test_equal_magnitudes_single_column(self):
        w = np.exp(1j * np.array([0.3, -1.2, 2.0, 0.0]))
        ph, c = greedy_sub(w, 1, None)
        assert np.allclose(np.exp(1j * ph) @ c, w, atol=1e-14)

    @pytest.mark.parametrize("m,bits", [(1, 3), (2, 1), (3, 4), (4, 2)])
    def test_lattice_and_orthogonal_residual(self, m, bits):
        rng = np.random.default_rng(m)
        w = cplx(rng, 7)
        ph, c = greedy_sub(w, m, bits)
        assert ph.shape == (7, m) and on_lattice(ph, bits)
        f = np.exp(1j * ph)
        r = w - f @ c
        # least-squares residual is orthogonal to the columns used
        assert np.abs(f.conj().T @ r).max() <= 1e-8 * np.linalg.norm(w)

    def test_zero(self):
        ph, c = greedy_sub(np.zeros(4), 2, 3)
        assert np.all(c == 0) and np.all(ph == 0)

    def test_bad_m(self):
        with pytest.raises(ValueError):
            greedy_sub(np.ones(3), 0)


class TestKhatriDesign:
    def test_against_literal_columns(self):
        g = make_mra(5)
        p = problem_for(g)
        rng = np.random.default_rng(0)
        q, m_r = 3, 2
        w_t = cplx(rng, 5, q)
        f_r = np.exp(1j * rng.uniform(0, 2 * np.pi, (5, q, m_r)))
        got = _khatri_design(p.rx_design(w_t).reshape(p.v, q, 5), f_r)
        for k in range(q):
            for m in range(m_r):
                col = p.forward(np.outer(f_r[:, k, m], w_t[:, k]))
                assert np.allclose(got[:, k, m], col)


class TestRefine:
    def test_scalar_case(self):
        g = make_mra(4)
        p = problem_for(g, 3)
        rng = np.random.default_rng(0)
        pt, pr = rng.uniform(0, 2 * np.pi, (4, 1)), rng.uniform(0, 2 * np.pi, (4, 1))
        c_t, c_r, _ = refine_digital(p, pt, pr, np.ones((1, 1)), SolverConfig(alpha=0.0))
        col = p.sensing @ np.kron(np.exp(1j * pt[:, 0]), np.exp(1j * pr[:, 0]))
        best = np.vdot(col, p.psi) / np.vdot(col, col)
        assert np.isclose(c_t[0, 0] * c_r[0, 0], best)

    def test_exact_bank_not_degraded(self):
        p = problem_for(make_mra(6), 1)
        digital, _ = altmin(p, 3)
        exact = thm1_hybrid_cont(digital)
        before = bank_error(p, exact)
        c_t, c_r, trace = refine_digital(p, exact.phase_t, exact.phase_r, exact.c_t,
                                         SolverConfig(eps_rel=0.0), k_max=5)
        after = bank_error(p, HybridBank(exact.phase_t, exact.phase_r, c_t, c_r))
        assert after <= before + 1e-9 * np.vdot(p.psi, p.psi).real

    def test_zero_target(self):
        g = make_ula(3)
        p = coarray_problem(g, g, TargetSpec(np.zeros(5)))
        c_t, c_r, _ = refine_digital(p, np.zeros((3, 2)), np.zeros((3, 2)), np.ones((2, 1)),
                                     SolverConfig(eps_rel=0.0))
        assert np.allclose(c_r, 0) and np.allclose(c_t @ c_r.T, 0)


class TestGreedyMain:
    def test_more_images_help(self):
        p = problem_for(make_ula(11), 0)
        _, trace = greedy_main(p, 2, 2, 5, 8)
        assert trace[8] < trace[2]

    def test_trace_head_is_target_energy(self):
        p = problem_for(make_mra(5), 0)
        bank, trace = greedy_main(p, 2, 2, 3, 0)
        assert bank is None
        assert trace[0] == pytest.approx(np.vdot(p.psi, p.psi).real)
        assert bank_error(p, None) == trace[0]

    def test_bank_structure(self):
        p = problem_for(make_mra(6), 2)
        bank, trace = greedy_main(p, 2, 3, 4, 5)
        bank.validate()
        assert (bank.q, bank.m_t, bank.m_r, bank.bits) == (5, 2, 3, 4)
        assert np.allclose(np.abs(bank.f_t), 1.0)
        assert bank_error(p, bank) == pytest.approx(trace[-1], rel=1e-9)

    def test_snapshots_match_trace(self):
        p = problem_for(make_mra(5), 1)
        _, trace, snaps = greedy_main(p, 2, 2, 2, 4, keep_snapshots=True)
        for k, b in enumerate(snaps, start=1):
            assert b.q == k
            assert bank_error(p, b) == pytest.approx(trace[k], rel=1e-9)

    def test_continuous_matches_digital_via_thm1(self):
        p = cheb_problem(make_mra(7), 0.3)
        digital, _ = altmin(p, 2)
        bank, err = design(p, 2, 2, None, 2)
        assert abs(np.sqrt(err) - np.sqrt(bank_error(p, digital))) <= 1e-6 * np.linalg.norm(p.psi)

    def test_validation(self):
        with pytest.raises(ValueError):
            greedy_main(problem_for(make_ula(2)), 0, 2, 1, 1)


class TestQuantizedThm1:
    def test_approaches_digital_at_high_resolution(self):
        p = cheb_problem(make_mra(7), 0.2)
        digital, _ = altmin(p, 2)
        _, err16 = quantized_thm1(p, 2, 16)
        _, err2 = quantized_thm1(p, 2, 2)
        d = p.relative_error(digital.matrix())
        rel16 = np.sqrt(err16) / np.linalg.norm(p.psi)
        assert abs(rel16 - d) < 1e-3
        assert err16 < err2

    def test_phases_on_lattice(self):
        p = cheb_problem(make_mra(5))
        bank, _ = quantized_thm1(p, 2, 3)
        bank.validate()


class TestMinQ:
    def test_digital_rank_recovered(self):
        tx, rx = make_custom([0, 1, 2]), make_custom([0, 3, 6])
        rng = np.random.default_rng(0)
        for rank in (1, 2, 3):
            w = cplx(rng, 3, rank) @ cplx(rng, rank, 3)
            p = coarray_problem(tx, rx, TargetSpec(selection_matrix(tx, rx) @ vec(w)))
            res = min_q_search(p, 2, 2, None, 1e-12 * np.linalg.norm(w) ** 2, (1, 3))
            assert res.q_min == rank

    def test_infinite_tolerance(self):
        res = min_q_search(problem_for(make_mra(5)), 2, 2, 3, np.inf, (2, 6))
        assert res.q_min == 2

    def test_one_bit_bound(self):
        g = make_ula(2)
        for seed in range(10):
            res = min_q_search(problem_for(g, seed), 2, 2, 1, 1e-10, (1, 8))
            assert res.feasible and res.q_min <= 4

    def test_infeasible(self):
        res = min_q_search(problem_for(make_mra(7)), 1, 1, 1, 1e-20, (1, 2))
        assert not res.feasible and res.bank is None

    def test_fallback_scan(self):
        # a non-monotone error curve is scanned from the start of the range
        errs = {1: 1.0, 2: 0.05, 3: 0.5, 4: 1.0, 5: 0.9, 6: 0.0}
        res = min_q_search(None, method=lambda q: (q, errs[q]), eps_max=0.1, q_range=(1, 6))
        assert res.q_min == 2 and res.fallback

    def test_explicit_list(self):
        res = min_q_search(None, method=lambda q: (q, 1.0 / q), eps_max=0.3, q_range=[8, 2, 4])
        assert res.q_min == 4

    def test_bad_range(self):
        with pytest.raises(ValueError):
            min_q_search(None, method=lambda q: (q, 0.0), q_range=(0, 3))


class TestNormalize:
    def test_example(self):
        b = normalize_tx(DigitalBank(np.array([[2.0], [1.0]]), np.array([[1.0], [1.0]])))
        assert np.allclose(b.w_t[:, 0], [1, 0.5]) and np.allclose(b.w_r[:, 0], [2, 2])

    def test_idempotent_and_invariant(self):
        rng = np.random.default_rng(0)
        b = DigitalBank(cplx(rng, 4, 3), cplx(rng, 5, 3))
        n = normalize_tx(b)
        assert np.allclose(np.abs(n.w_t).max(axis=0), 1.0)
        assert np.allclose(normalize_tx(n).w_t, n.w_t)
        for q in range(3):
            before = np.outer(b.w_r[:, q], b.w_t[:, q])
            after = np.outer(n.w_r[:, q], n.w_t[:, q])
            assert np.abs(before - after).max() <= 1e-15 * max(1, np.abs(before).max()) * 10

    def test_hybrid(self):
        p = problem_for(make_mra(5))
        bank, _ = greedy_main(p, 2, 2, 3, 3)
        n = normalize_tx(bank)
        assert np.allclose(n.matrix(), bank.matrix())
        assert np.array_equal(n.phase_t, bank.phase_t)
        assert np.allclose(np.abs(n.weights()[0]).max(axis=0), 1.0)

    def test_zero_image_warns(self):
        b = DigitalBank(np.zeros((2, 1)), np.ones((2, 1)))
        with pytest.warns(RuntimeWarning):
            normalize_tx(b)


class TestDesign:
    def test_pad_keeps_matrix(self):
        p = problem_for(make_mra(5))
        bank, _ = greedy_main(p, 2, 2, 3, 2)
        padded = pad_bank(bank, 3, 4, 5, 5, 5, 3)
        assert (padded.m_t, padded.m_r, padded.q) == (3, 4, 5)
        assert np.allclose(padded.matrix(), bank.matrix())
        with pytest.raises(ValueError):
            pad_bank(padded, 2, 2, 5, 5, 5)

    def test_analog_continuous_needs_four(self):
        p = cheb_problem(make_ula(5))
        _, err3 = design(p, 1, 1, None, 3)
        _, err4 = design(p, 1, 1, None, 4)
        assert err3 == pytest.approx(np.vdot(p.psi, p.psi).real)
        assert err4 <= 1e-12 * np.vdot(p.psi, p.psi).real

    def test_closed_form_candidate(self):
        p = problem_for(make_ula(2), 1)
        assert closed_form_candidate(p, 2, 2, 3, 3) is None
        assert closed_form_candidate(p, 2, 2, None, 9) is None
        bank = closed_form_candidate(p, 2, 2, 3, 4)
        bank.validate()
        assert bank_error(p, bank) <= 1e-20
        analog = closed_form_candidate(p, 1, 1, 2, 16)
        assert analog.q == 16 and bank_error(p, analog) <= 1e-20
