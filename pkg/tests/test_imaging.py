import numpy as np
import pytest

from hybridbf.banks import DigitalBank
from hybridbf.closedform import thm1_hybrid_cont
from hybridbf.digital import altmin, coarray_problem
from hybridbf.geometry import make_boundary, make_mra, make_ula, sum_coarray
from hybridbf.hybrid import greedy_main, normalize_tx
from hybridbf.imaging import ImageResult, Scene, form_image, measure, scene_rough_surface
from hybridbf.steering import (DirectionGrid, effective_steering, psf_eval, steering_matrix,
                               target_stochastic)


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def digital_bank(geom, q=1, seed=0):
    ca = sum_coarray(geom, geom)
    bank, _ = altmin(coarray_problem(geom, geom, target_stochastic(ca.n_sigma, seed)), q)
    return bank


class TestScene:
    def test_rough_mean(self):
        k = 100_000
        s = scene_rough_surface(np.zeros(k), seed=0)
        mean = 1 / np.sqrt(2 * k)
        se = np.sqrt(1 / (2 * k) / k)
        assert abs(s.gamma.mean() - mean) <= 3 * se
        assert np.var(s.gamma) == pytest.approx(1 / (2 * k), rel=0.02)

    def test_reproducible(self):
        u = np.linspace(-0.5, 0.5, 7)
        assert np.array_equal(scene_rough_surface(u, 3).gamma, scene_rough_surface(u, 3).gamma)
        assert scene_rough_surface(u).sigma2 == 1.0

    def test_empty_scene_is_pure_noise(self):
        g = make_ula(3)
        s = scene_rough_surface(np.zeros(0), seed=0)
        assert s.k == 0
        bank = DigitalBank(np.ones((3, 1)), np.ones((3, 1)))
        img = form_image(bank, s, DirectionGrid.uniform(5), g, g, seed=1)
        assert np.all(img.values != 0)
        quiet = form_image(bank, s.with_sigma2(0.0), DirectionGrid.uniform(5), g, g, seed=1)
        assert np.all(quiet.values == 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            Scene(np.zeros(2), np.zeros(3))
        with pytest.raises(ValueError):
            Scene(np.zeros(1), np.zeros(1), sigma2=-1)


class TestMeasure:
    def test_matched_unit_weights(self):
        tx, rx = make_ula(3), make_ula(4)
        u = 0.3
        s = Scene(np.array([u]), np.array([1.0]), sigma2=0.0)
        w_t = np.exp(-1j * np.pi * tx.positions * u)
        w_r = np.exp(-1j * np.pi * rx.positions * u)
        assert np.isclose(measure(s, tx, rx, w_t, w_r), 12)

    def test_planar_gain_enters_squared(self):
        g = make_boundary(2)
        u = np.array([[0.3, 0.4]])
        s = Scene(u, np.array([1.0]), sigma2=0.0)
        w = np.exp(-1j * np.pi * g.positions @ u[0])
        assert np.isclose(measure(s, g, g, w, w), g.n ** 2 * (1 - 0.25))

    def test_silent_scene(self):
        g = make_ula(3)
        s = Scene(np.array([0.1]), np.array([0.0]), sigma2=0.0)
        assert measure(s, g, g, np.ones(3), np.ones(3)) == 0

    def test_linear_in_gamma(self):
        g = make_mra(4)
        rng = np.random.default_rng(0)
        s = Scene(np.array([0.1, -0.6]), cplx(rng, 2), sigma2=0.0)
        w_t, w_r = cplx(rng, 4), cplx(rng, 4)
        one = measure(s, g, g, w_t, w_r)
        assert np.isclose(measure(s.with_gamma(2 * s.gamma), g, g, w_t, w_r), 2 * one)

    def test_matches_psf(self):
        g = make_mra(5)
        rng = np.random.default_rng(1)
        w = cplx(rng, 5, 5)
        u = np.array([0.2, -0.45])
        a = effective_steering(steering_matrix(g, DirectionGrid(u)), steering_matrix(g, DirectionGrid(u)))
        psf = psf_eval(w, a)
        for k in range(2):
            s = Scene(u[k:k + 1], np.array([1.0]), sigma2=0.0)
            bank_y = sum(measure(s, g, g, w_t, w_r) for w_t, w_r in _rank_one_terms(w))
            assert np.isclose(bank_y, psf[k])

    def test_noise_seeded(self):
        g = make_ula(3)
        s = Scene(np.zeros(0), np.zeros(0), sigma2=1.0)
        assert measure(s, g, g, np.ones(3), np.ones(3), seed=4) == measure(
            s, g, g, np.ones(3), np.ones(3), seed=4)

    def test_shape_mismatch(self):
        g = make_ula(3)
        with pytest.raises(ValueError):
            measure(Scene(np.zeros(1), np.ones(1)), g, g, np.ones(2), np.ones(3))


def _rank_one_terms(w):
    # W = sum over columns of e_t: w[:, t] (Rx) times unit Tx vector e_t
    n_r, n_t = w.shape
    for t in range(n_t):
        e = np.zeros(n_t)
        e[t] = 1.0
        yield e, w[:, t]


class TestFormImage:
    def test_noiseless_point_matches_psf(self):
        g = make_ula(11)
        bank = digital_bank(g)
        grid = DirectionGrid.uniform(64)
        s = Scene(np.array([0.0]), np.array([1.0]), sigma2=0.0)
        img = form_image(bank, s, grid, g, g)
        # steering to u_p moves the scatterer to -u_p in the pattern
        w = normalize_tx(bank).matrix()
        shifted = DirectionGrid(-grid.u)
        a = effective_steering(steering_matrix(g, shifted), steering_matrix(g, shifted))
        assert np.abs(img.values - psf_eval(w, a)).max() <= 1e-10 * np.abs(img.values).max()

    def test_noise_variance(self):
        g = make_mra(5)
        bank = digital_bank(g, 2)
        grid = DirectionGrid.uniform(4000)
        s = Scene(np.zeros(0), np.zeros(0), sigma2=1.0)
        img = form_image(bank, s, grid, g, g, seed=0)
        _, w_r = normalize_tx(bank).weights()
        expected = np.sum(np.abs(w_r) ** 2)
        assert np.mean(np.abs(img.values) ** 2) == pytest.approx(expected, rel=0.1)

    def test_image_addition(self):
        g = make_mra(4)
        rng = np.random.default_rng(2)
        b1 = DigitalBank(cplx(rng, 4, 1), cplx(rng, 4, 1))
        b2 = DigitalBank(cplx(rng, 4, 1), cplx(rng, 4, 1))
        both = DigitalBank(np.hstack([b1.w_t, b2.w_t]), np.hstack([b1.w_r, b2.w_r]))
        grid = DirectionGrid.uniform(16)
        s = Scene(np.array([0.1, -0.3]), cplx(rng, 2), sigma2=0.0)
        total = form_image(both, s, grid, g, g).values
        parts = form_image(b1, s, grid, g, g).values + form_image(b2, s, grid, g, g).values
        assert np.allclose(total, parts)

    def test_order_independent_noise(self):
        g = make_ula(3)
        bank = DigitalBank(np.ones((3, 2)), np.ones((3, 2)))
        grid = DirectionGrid.uniform(10)
        s = Scene(np.array([0.2]), np.array([1.0]), sigma2=1.0)
        full = form_image(bank, s, grid, g, g, seed=5)
        part = form_image(bank, s, grid, g, g, seed=5, pixels=[7, 2], chunk_elems=1)
        assert np.allclose(part.values[[2, 7]], full.values[[2, 7]])
        assert not part.mask[0]

    def test_per_pixel_banks(self):
        g = make_mra(5)
        ca = sum_coarray(g, g)
        p = coarray_problem(g, g, target_stochastic(ca.n_sigma, 0))
        bank, _ = greedy_main(p, 2, 2, 3, 2)
        grid = DirectionGrid.uniform(3)
        s = Scene(np.array([0.0]), np.array([1.0]), sigma2=0.0)
        img = form_image([bank] * 3, s, grid, g, g)
        assert np.allclose(img.values, img.values[0])
        assert np.isclose(img.values[0], normalize_tx(bank).matrix().sum())
        assert img.q.tolist() == [2, 2, 2]

    def test_missing_bank(self):
        g = make_ula(3)
        bank = DigitalBank(np.ones((3, 1)), np.ones((3, 1)))
        s = Scene(np.zeros(1), np.ones(1))
        with pytest.raises(ValueError):
            form_image([bank, None, bank], s, DirectionGrid.uniform(3), g, g)
        img = form_image([bank, None, bank], s, DirectionGrid.uniform(3), g, g, pixels=[0, 2])
        assert not img.mask[1]

    def test_quantized_bank_not_steered(self):
        g = make_mra(5)
        ca = sum_coarray(g, g)
        bank, _ = greedy_main(coarray_problem(g, g, target_stochastic(ca.n_sigma, 0)), 2, 2, 3, 1)
        with pytest.raises(ValueError):
            form_image(bank, Scene(np.zeros(1), np.ones(1)), DirectionGrid.uniform(3), g, g)

    def test_hybrid_continuous_matches_digital(self):
        g = make_ula(5)
        bank = digital_bank(g, 1, seed=3)
        grid = DirectionGrid.uniform(12)
        s = Scene(np.array([0.25]), np.array([1.0]), sigma2=0.0)
        a = form_image(bank, s, grid, g, g).values
        b = form_image(thm1_hybrid_cont(bank), s, grid, g, g).values
        assert np.allclose(a, b)

    def test_power_scales_signal(self):
        g = make_ula(3)
        bank = DigitalBank(np.ones((3, 1)), np.ones((3, 1)))
        grid = DirectionGrid.uniform(4)
        s = Scene(np.array([0.0]), np.array([1.0]), sigma2=0.0)
        one = form_image(bank, s, grid, g, g).values
        four = form_image(bank, s, grid, g, g, power=4.0).values
        assert np.allclose(four, 2 * one)


class TestImageResult:
    def test_db_and_peak(self):
        grid = DirectionGrid.uniform(4)
        img = ImageResult(grid, np.array([1, 10, 1e-5, 0.1]), np.ones(4, int), np.ones(4, bool))
        assert img.peak_index() == 1
        assert np.allclose(img.db(), [-20, 0, -60, -40])

    def test_files(self, tmp_path):
        grid = DirectionGrid.planar(4)
        vals = np.arange(16) + 1j
        img = ImageResult(grid, vals, np.ones(16, int), np.ones(16, bool))
        img.save_npy(tmp_path / "x.npy")
        assert np.load(tmp_path / "x.npy").shape == (4, 4)
        img.save_db_csv(tmp_path / "x.csv")
        assert len((tmp_path / "x.csv").read_text().splitlines()) == 4

    def test_length_check(self):
        with pytest.raises(ValueError):
            ImageResult(DirectionGrid.uniform(3), np.zeros(2), np.zeros(3, int), np.ones(3, bool))
