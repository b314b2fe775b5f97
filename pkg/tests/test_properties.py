import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hybridbf.banks import DigitalBank, HybridBank
from hybridbf.closedform import (InfeasibleDecomposition, lemma1_factor, lemma1_general,
                                 lemma2_analog, lemma3_flatten, thm1_hybrid_cont,
                                 thm2_hybrid_1bit, thm3_analog_cont, thm4_analog_1bit)
from hybridbf.digital import SolverConfig, altmin, coarray_problem, svd_factorize
from hybridbf.geometry import make_custom, selection_matrix, sum_coarray
from hybridbf.hybrid import normalize_tx
from hybridbf.numerics import on_lattice, quantize_phase
from hybridbf.steering import (DirectionGrid, coarray_steering, effective_steering,
                               steering_matrix, target_stochastic)

SETTINGS = settings(max_examples=60, deadline=None)

bits_st = st.integers(1, 12)
phase_st = st.floats(-50, 50, allow_nan=False)
seed_st = st.integers(0, 2 ** 32 - 1)


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@st.composite
def positions(draw, max_n=7, span=15):
    return draw(st.lists(st.integers(-span, span), min_size=1, max_size=max_n, unique=True))


@st.composite
def matrices(draw, max_side=6):
    n_r = draw(st.integers(1, max_side))
    n_t = draw(st.integers(1, max_side))
    rank = draw(st.integers(1, min(n_r, n_t, 4)))
    rng = np.random.default_rng(draw(seed_st))
    return cplx(rng, n_r, rank) @ cplx(rng, rank, n_t)


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class TestQuantizerProperties:
    @SETTINGS
    @given(phase_st, bits_st)
    def test_lattice_range_idempotent(self, x, b):
        q = quantize_phase(x, b)
        assert 0 <= q < 2 * np.pi
        assert on_lattice(q, b)
        assert quantize_phase(q, b) == q

    @SETTINGS
    @given(phase_st, bits_st)
    def test_error_bound(self, x, b):
        d = np.angle(np.exp(1j * (quantize_phase(x, b) - x)))
        assert abs(d) <= np.pi / 2 ** b + 1e-9

    @SETTINGS
    @given(phase_st, bits_st)
    def test_nesting(self, x, b):
        assert on_lattice(quantize_phase(x, b), b + 1)


class TestCoarrayProperties:
    @SETTINGS
    @given(positions(), positions())
    def test_selection_sums(self, pt, pr):
        tx, rx = make_custom(pt), make_custom(pr)
        ca = sum_coarray(tx, rx)
        sel = selection_matrix(tx, rx, ca)
        assert np.all(sel.sum(axis=0) == 1)
        assert np.array_equal(sel.sum(axis=1), ca.multiplicity)
        assert ca.multiplicity.sum() == tx.n * rx.n

    @SETTINGS
    @given(positions(5, 8), positions(5, 8), st.lists(st.floats(-1, 0.999), min_size=1, max_size=6))
    def test_steering_identity(self, pt, pr, u):
        tx, rx = make_custom(pt), make_custom(pr)
        grid = DirectionGrid(np.array(u))
        ca = sum_coarray(tx, rx)
        a = effective_steering(steering_matrix(tx, grid), steering_matrix(rx, grid))
        b = selection_matrix(tx, rx, ca).T @ coarray_steering(ca, grid)
        assert np.abs(a - b).max() <= 1e-12 * max(1, np.abs(a).max())


class TestClosedFormProperties:
    @SETTINGS
    @given(st.integers(1, 12), seed_st)
    def test_lemma1_exact(self, n, seed):
        w = cplx(np.random.default_rng(seed), n)
        ph, c = lemma1_factor(w)
        assert np.linalg.norm(np.exp(1j * ph) @ c - w) <= 1e-12 * np.linalg.norm(w)

    @SETTINGS
    @given(st.integers(1, 8), seed_st, st.floats(0.01, 3), st.floats(0.01, 3))
    def test_lemma1_general_feasibility(self, n, seed, a1, a2):
        rng = np.random.default_rng(seed)
        w = cplx(rng, n)
        c1, c2 = a1 * np.exp(1j * rng.uniform(0, 6)), a2 * np.exp(1j * rng.uniform(0, 6))
        mag = np.abs(w)
        big, small = max(a1, a2), min(a1, a2)
        slack = min(big + small - mag.max(), mag.min() - (big - small))
        assume(abs(slack) > 1e-6)
        if slack > 0:
            ph = lemma1_general(w, c1, c2)
            assert np.abs(np.exp(1j * ph) @ [c1, c2] - w).max() <= 1e-9 * max(1, mag.max())
        else:
            try:
                lemma1_general(w, c1, c2)
            except InfeasibleDecomposition:
                pass
            else:
                raise AssertionError("infeasible amplitudes were accepted")

    @SETTINGS
    @given(st.integers(1, 12), seed_st)
    def test_lemma2_value(self, n, seed):
        w = cplx(np.random.default_rng(seed), n)
        _, _, err = lemma2_analog(w)
        formula = np.linalg.norm(w) ** 2 - np.sum(np.abs(w)) ** 2 / n
        assert abs(err - formula) <= 1e-12 * np.linalg.norm(w) ** 2

    @SETTINGS
    @given(matrices())
    def test_theorems_exact_and_counts(self, w):
        n_r, n_t = w.shape
        rank = svd_factorize(w).q
        d = svd_factorize(w)
        for bank, q in ((thm1_hybrid_cont(d), rank), (thm2_hybrid_1bit(w), n_r * n_t),
                        (thm3_analog_cont(d), 4 * rank), (thm4_analog_1bit(w), 4 * n_r * n_t)):
            assert bank.q == q
            assert rel(bank.matrix(), w) <= 1e-10
        assert on_lattice(thm2_hybrid_1bit(w).phase_t, 1)
        assert on_lattice(thm4_analog_1bit(w).phase_r, 1)

    @SETTINGS
    @given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), seed_st)
    def test_lemma3_preserves(self, m_t, m_r, q, seed):
        rng = np.random.default_rng(seed)
        bank = HybridBank(rng.uniform(0, 7, (4, m_t * q)), rng.uniform(0, 7, (3, m_r * q)),
                          cplx(rng, m_t, q), cplx(rng, m_r, q))
        flat = lemma3_flatten(bank)
        assert flat.q == m_t * m_r * q
        assert rel(flat.matrix(), bank.matrix()) <= 1e-12


class TestSolverProperties:
    @settings(max_examples=15, deadline=None)
    @given(positions(6, 10), seed_st, st.integers(1, 2))
    def test_altmin_monotone(self, pos, seed, q):
        g = make_custom(pos)
        ca = sum_coarray(g, g)
        p = coarray_problem(g, g, target_stochastic(ca.n_sigma, seed))
        _, trace = altmin(p, min(q, g.n), SolverConfig(alpha=0.0, k_max=15), half_steps=True)
        assert np.all(np.diff(trace) <= 1e-10 * np.vdot(p.psi, p.psi).real)

    @SETTINGS
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 3), seed_st)
    def test_normalize_preserves(self, n_t, n_r, q, seed):
        rng = np.random.default_rng(seed)
        b = DigitalBank(cplx(rng, n_t, q), cplx(rng, n_r, q))
        n = normalize_tx(b)
        assert rel(n.matrix(), b.matrix()) <= 1e-12
        assert np.allclose(np.abs(n.w_t).max(axis=0), 1.0)
