import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersive_sinr.errors import InvalidDimensionError, NotACovarianceError
from dispersive_sinr.numerics import (
    bessel_j0,
    chebyshev_window,
    dft_matrix,
    gtr,
    sample_gaussian_process,
)

from oracles import gtr_loops, j0_series, j0_series_float64


class TestDftMatrix:
    def test_size_one_is_identity(self):
        assert np.allclose(dft_matrix(1), [[1.0]])

    def test_size_two(self):
        expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        np.testing.assert_allclose(dft_matrix(2), expected, atol=1e-15)

    def test_unitary_size_eight(self):
        f = dft_matrix(8)
        np.testing.assert_allclose(f @ f.conj().T, np.eye(8), atol=1e-13)

    @pytest.mark.parametrize("k", [1, 2, 8, 64, 2048])
    def test_unitarity_frobenius(self, k):
        f = dft_matrix(k)
        residual = f @ f.conj().T - np.eye(k)
        assert np.linalg.norm(residual) < 1e-12

    def test_zero_size_rejected(self):
        with pytest.raises(InvalidDimensionError):
            dft_matrix(0)


class TestBesselJ0:
    def test_at_zero(self):
        assert bessel_j0(0.0) == 1.0

    def test_first_root_against_series_bisection(self):
        # Locate the first positive root of the float64 series by bisection.
        lo, hi = 2.0, 3.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if j0_series_float64(mid)[0] > 0:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        assert abs(root - 2.404825557695773) < 1e-12
        assert abs(bessel_j0(root)) < 1e-10

    def test_value_at_one_with_interval_bound(self):
        value, bound = j0_series_float64(1.0)
        assert bound < 1e-15
        assert abs(value - 0.7651976865579666) < 1e-14
        assert abs(bessel_j0(1.0) - value) <= bound + 1e-13

    def test_series_agreement_on_range(self):
        xs = np.linspace(0.0, 50.0, 1000)
        ours = bessel_j0(xs)
        reference = np.array([j0_series(x) for x in xs])
        assert np.abs(ours - reference).max() < 1e-12

    def test_large_argument_accuracy(self):
        import mpmath

        for x in (1e2, 1e3, 1e4):
            with mpmath.workdps(40):
                reference = float(mpmath.besselj(0, mpmath.mpf(x)))
            assert abs(bessel_j0(x) - reference) < 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            bessel_j0(np.inf)
        with pytest.raises(ValueError):
            bessel_j0(np.nan)


class TestChebyshevWindow:
    def test_length_one(self):
        win = chebyshev_window(1, 40.0)
        np.testing.assert_array_equal(win.values, [1.0])

    def test_sidelobe_attenuation_74_taps(self):
        win = chebyshev_window(74, 40.0)
        spectrum = np.abs(np.fft.fft(win.values, 4096))
        spectrum /= spectrum.max()
        # The mainlobe ends at the first local minimum away from DC.
        edge = 1
        while spectrum[edge + 1] < spectrum[edge]:
            edge += 1
        sidelobe_db = 20 * np.log10(spectrum[edge:4096 - edge].max())
        assert abs(sidelobe_db + 40.0) < 0.1

    def test_exact_symmetry(self):
        for length in (2, 5, 64, 74):
            win = chebyshev_window(length, 40.0).values
            np.testing.assert_array_equal(win, win[::-1])

    def test_spectrum_even_symmetric(self):
        win = chebyshev_window(31, 50.0).values
        mag = np.abs(np.fft.fft(win, 512))
        np.testing.assert_allclose(mag[1:], mag[1:][::-1], rtol=1e-9)

    def test_invalid_arguments(self):
        with pytest.raises(InvalidDimensionError):
            chebyshev_window(0, 40.0)
        with pytest.raises(ValueError):
            chebyshev_window(8, -3.0)

    @given(st.integers(min_value=1, max_value=96),
           st.floats(min_value=20.0, max_value=100.0))
    @settings(max_examples=25, deadline=None)
    def test_symmetric_real_peak_normalized(self, length, attenuation):
        win = chebyshev_window(length, attenuation).values
        assert win.dtype == np.float64
        np.testing.assert_array_equal(win, win[::-1])
        assert win.max() == pytest.approx(1.0, abs=1e-12)


class TestGtr:
    def test_identity(self):
        out = gtr(np.eye(5))
        np.testing.assert_array_equal(out, [5, 0, 0, 0, 0])

    def test_two_by_two(self):
        a, b, c, d = 1.0, 2.0, 3.0, 4.0
        out = gtr(np.array([[a, b], [c, d]]))
        np.testing.assert_array_equal(out, [a + d, b + c])

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        np.testing.assert_array_equal(gtr(a), gtr_loops(a))

    def test_rejects_non_square(self):
        with pytest.raises(InvalidDimensionError):
            gtr(np.ones((3, 4)))

    @given(st.integers(min_value=1, max_value=12), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_total_sum_property(self, n, seed):
        # Integer entries make the regrouped sums exact in float64.
        a = np.random.default_rng(seed).integers(-50, 50, size=(n, n)).astype(float)
        assert gtr(a).sum() == a.sum()


class TestGaussianProcessSampler:
    def test_white_covariance(self):
        draws = sample_gaussian_process(np.eye(8), rng=5, n=100_000)
        cov = draws @ draws.conj().T / draws.shape[1]
        assert np.abs(cov - np.eye(8)).max() < 0.03

    def test_fully_correlated_is_constant(self):
        corr = np.ones((64, 64))
        for seed in range(5):
            draw = sample_gaussian_process(corr, rng=seed)
            assert np.abs(draw - draw[0]).max() < 1e-6

    def test_jakes_second_order_statistics(self):
        import scipy.linalg

        from dispersive_sinr.channel import time_corr
        from dispersive_sinr.numerics import bessel_j0

        k, n_draws = 256, 100_000
        tc = time_corr("jakes", k, fd_ts=1e-3)
        draws = sample_gaussian_process(scipy.linalg.toeplitz(tc.values), rng=7,
                                        n=n_draws)
        for lag in (1, 10, 100):
            emp = (draws[lag:] * draws[:-lag].conj()).mean().real
            target = bessel_j0(2 * np.pi * 1e-3 * lag)
            assert abs(emp - target) / abs(target) < 0.02

    def test_rejects_indefinite_matrix(self):
        corr = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(NotACovarianceError):
            sample_gaussian_process(corr, rng=0)

    def test_rejects_asymmetric(self):
        corr = np.array([[1.0, 0.5], [0.1, 1.0]])
        with pytest.raises(NotACovarianceError):
            sample_gaussian_process(corr, rng=0)
