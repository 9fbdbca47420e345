import numpy as np
import pytest
import scipy.linalg

from dispersive_sinr.channel import (
    PowerDelayProfile,
    beta_for_tau_rms,
    circular_channel_matrix,
    doppler_cov,
    exp_pdp,
    freq_corr,
    sample_realization,
    sample_tap_gains,
    speed_to_fdts,
    time_corr,
    vehb_pdp,
)
from dispersive_sinr.errors import (
    ConfigurationError,
    InvalidDimensionError,
    NotACovarianceError,
    UnsupportedRegimeError,
)
from dispersive_sinr.numerics import bessel_j0

from oracles import unitary_dft


class TestExpPdp:
    def test_zero_decay_single_tap(self):
        pdp = exp_pdp(0.0, 5, 3)
        np.testing.assert_array_equal(pdp.delays, [0])
        np.testing.assert_array_equal(pdp.powers, [1.0])
        assert pdp.max_delay == 0
        assert pdp.rms_delay == 0.0

    def test_geometric_normalization(self):
        pdp = exp_pdp(0.5, 3, 1)
        np.testing.assert_allclose(pdp.powers, [4 / 7, 2 / 7, 1 / 7], rtol=1e-14)

    def test_rms_delay_matches_moment_oracle(self):
        pdp = exp_pdp(0.9, 60, 8)
        delays = pdp.delays.astype(float)
        mean = np.average(delays, weights=pdp.powers)
        rms = np.sqrt(np.average((delays - mean) ** 2, weights=pdp.powers))
        assert abs(pdp.rms_delay - rms) < 1e-9
        assert abs(pdp.mean_delay - mean) < 1e-9

    def test_span_limit_enforced(self):
        with pytest.raises(UnsupportedRegimeError):
            exp_pdp(0.5, 10, 4, max_delay=30)
        exp_pdp(0.5, 10, 4, max_delay=36)  # boundary passes

    def test_unit_power(self):
        for beta in (0.1, 0.5, 0.99):
            assert abs(exp_pdp(beta, 40, 2).powers.sum() - 1.0) <= 1e-12

    def test_invalid_arguments(self):
        with pytest.raises(ConfigurationError):
            exp_pdp(1.0, 3, 1)
        with pytest.raises(ConfigurationError):
            exp_pdp(0.5, 0, 1)


class TestProfileValidation:
    def test_first_delay_must_be_zero(self):
        with pytest.raises(ConfigurationError):
            PowerDelayProfile(np.array([1, 2]), np.array([0.5, 0.5]))

    def test_delays_strictly_increasing(self):
        with pytest.raises(ConfigurationError):
            PowerDelayProfile(np.array([0, 2, 2]), np.array([0.4, 0.3, 0.3]))

    def test_powers_must_sum_to_one(self):
        with pytest.raises(ConfigurationError):
            PowerDelayProfile(np.array([0, 1]), np.array([0.6, 0.6]))


class TestVehicularB:
    def test_rms_delay_at_reference_rate(self):
        assert 61.1 <= vehb_pdp().rms_delay <= 62.1

    def test_unit_power_any_scaling(self):
        for scaling in (1.0, 0.5, 0.25, 2.0):
            assert abs(vehb_pdp(scaling).powers.sum() - 1.0) <= 1e-12

    def test_half_rate_halves_rms_delay(self):
        full = vehb_pdp().rms_delay
        half = vehb_pdp(0.5).rms_delay
        # Quantization to the coarser grid moves taps by up to half a sample.
        assert abs(2.0 * half - full) < 1.0

    def test_missing_data_file(self):
        with pytest.raises(ConfigurationError):
            vehb_pdp(data_file="/nonexistent/taps.txt")

    def test_env_override(self, tmp_path, monkeypatch):
        (tmp_path / "itu_veh_b.txt").write_text("0 0.0\n100 -3.0\n")
        monkeypatch.setenv("DISPERSIVE_SINR_DATA", str(tmp_path))
        pdp = vehb_pdp()
        assert pdp.n_taps == 2
        assert abs(pdp.powers.sum() - 1.0) <= 1e-12


class TestTimeCorr:
    def test_zero_doppler_all_ones(self):
        tc = time_corr("jakes", 64, fd_ts=0.0)
        np.testing.assert_array_equal(tc.values, np.ones(64))

    def test_lag_zero_is_one(self):
        for tc in (time_corr("jakes", 8, fd_ts=1e-3), time_corr("static", 8),
                   time_corr("custom", 8, values=bessel_j0(0.3 * np.arange(8)))):
            assert tc.values[0] == pytest.approx(1.0, abs=1e-12)

    def test_jakes_value_at_large_lag(self):
        tc = time_corr("jakes", 1001, fd_ts=1.5e-3)
        assert abs(tc.values[1000] - bessel_j0(3 * np.pi)) < 1e-12

    def test_sequence_extension(self):
        tc = time_corr("jakes", 8, fd_ts=1e-3)
        ext = tc.sequence(32)
        assert ext.size == 32
        np.testing.assert_allclose(ext[:8], tc.values)

    def test_custom_rejects_indefinite(self):
        values = np.ones(6)
        values[1:] = -0.9  # not a valid correlation sequence
        with pytest.raises(NotACovarianceError):
            time_corr("custom", 6, values=values)

    def test_custom_cannot_extend(self):
        tc = time_corr("custom", 4, values=[1.0, 0.5, 0.2, 0.1])
        with pytest.raises(InvalidDimensionError):
            tc.sequence(8)


class TestFreqCorr:
    def test_single_tap_is_flat(self):
        rf = freq_corr(exp_pdp(0.0, 1, 1), 16)
        np.testing.assert_allclose(rf, np.ones(32), atol=1e-14)

    def test_zero_lag_is_total_power(self):
        rf = freq_corr(exp_pdp(0.7, 12, 2), 32)
        assert rf[0] == pytest.approx(1.0, abs=1e-12)
        assert np.abs(rf).max() <= 1.0 + 1e-12

    def test_hermitian_in_lag(self):
        n = 16
        rf = freq_corr(exp_pdp(0.6, 8, 1), n)
        for dk in range(1, 2 * n):
            assert rf[(-dk) % (2 * n)] == pytest.approx(np.conj(rf[dk]), abs=1e-13)

    def test_dense_exponential_closed_form(self):
        # Dense profile (stretch 1, one tap per sample): the lag sum has the
        # geometric closed form; compare on the even lags against the printed
        # form, which uses the opposite DFT sign convention, so one global
        # constant relates ours to its conjugate.
        n, beta, taps = 64, 0.83, 64
        pdp = exp_pdp(beta, taps, 1)
        rf = freq_corr(pdp, n)
        rho0 = pdp.powers[0]
        dks = np.arange(1, 17)
        closed = (rho0 / np.sqrt(n)) * (1 - beta ** n * np.exp(2j * np.pi * dks)) \
            / (1 - beta * np.exp(2j * np.pi * dks / n))
        ratio = rf[2 * dks] / np.conj(closed)
        np.testing.assert_allclose(ratio, np.full_like(ratio, ratio[0]), rtol=1e-9)
        assert ratio[0] == pytest.approx(np.sqrt(n), rel=1e-9)


class TestDopplerCov:
    def test_static_concentrates_at_dc(self):
        rd = doppler_cov(time_corr("static", 32), 32)
        expected = np.zeros((32, 32))
        expected[0, 0] = 32.0
        np.testing.assert_allclose(rd, expected, atol=1e-10)

    def test_trace_equals_size(self):
        for fdts in (0.0, 3e-5, 1e-4, 1.5e-3):
            rd = doppler_cov(time_corr("jakes", 64, fd_ts=fdts), 64)
            assert abs(np.trace(rd).real - 64.0) < 1e-9
            assert abs(np.trace(rd).imag) < 1e-9

    def test_hermitian_psd(self):
        rd = doppler_cov(time_corr("jakes", 64, fd_ts=1e-3), 64)
        np.testing.assert_allclose(rd, rd.conj().T, atol=1e-11)
        eig = np.linalg.eigvalsh(0.5 * (rd + rd.conj().T))
        assert eig.min() >= -1e-9 * 64

    def test_matches_explicit_transform(self):
        tc = time_corr("jakes", 24, fd_ts=2e-3)
        f = unitary_dft(24)
        explicit = f @ scipy.linalg.toeplitz(tc.values) @ f.conj().T
        np.testing.assert_allclose(doppler_cov(tc, 24), explicit, atol=1e-12)


class TestSampleRealization:
    def test_static_constant_in_time(self):
        pdp = exp_pdp(0.5, 4, 2)
        real = sample_realization(pdp, time_corr("static", 64), 64, rng=3)
        spread = np.abs(real.taps - real.taps[:, :1]).max()
        assert spread < 1e-6

    def test_cross_tap_independence(self):
        pdp = exp_pdp(0.9, 2, 1)
        gains = sample_tap_gains(pdp, time_corr("jakes", 8, fd_ts=1e-3), 8,
                                 rng=11, count=10_000)
        a = gains[:, 0, 0] / np.sqrt(pdp.powers[0])
        b = gains[:, 1, 0] / np.sqrt(pdp.powers[1])
        corr = np.abs(np.mean(a * np.conj(b)))
        assert corr < 0.03

    def test_time_correlation_at_lag_fifty(self):
        pdp = exp_pdp(0.0, 1, 1)
        span = 72
        gains = sample_tap_gains(pdp, time_corr("jakes", span, fd_ts=1e-3), span,
                                 rng=2, count=100_000)
        proc = gains[:, 0, :]
        emp = (proc[:, 50:] * np.conj(proc[:, :-50])).mean().real
        target = bessel_j0(2 * np.pi * 1e-3 * 50)
        assert abs(emp - target) / target < 0.03

    def test_per_tap_variance(self):
        pdp = exp_pdp(0.6, 3, 1)
        gains = sample_tap_gains(pdp, time_corr("static", 4), 4, rng=9,
                                 count=100_000)
        var = np.mean(np.abs(gains[:, :, 0]) ** 2, axis=0)
        np.testing.assert_allclose(var, pdp.powers, rtol=0.02)


class TestCircularChannelMatrix:
    def test_static_single_tap_scaled_identity(self):
        pdp = exp_pdp(0.0, 1, 1)
        block, fft_len = 9, 16
        real = sample_realization(pdp, time_corr("static", 64), block + fft_len,
                                  rng=1, origin=-block, block_len=block)
        mat = circular_channel_matrix(real, 1, fft_len)
        h = real.taps[0, block]
        np.testing.assert_allclose(mat, h * np.eye(fft_len), atol=1e-12)

    def test_static_multipath_is_circulant(self):
        pdp = exp_pdp(0.7, 3, 2)
        block, fft_len = 9, 16
        real = sample_realization(pdp, time_corr("static", 64), block + fft_len,
                                  rng=4, origin=-block, block_len=block)
        mat = circular_channel_matrix(real, 1, fft_len)
        f = unitary_dft(fft_len)
        diagonalized = f @ mat @ f.conj().T
        off = diagonalized - np.diag(np.diag(diagonalized))
        assert np.abs(off).max() < 1e-10

    def test_time_varying_two_tap_layout(self):
        # Hand-build the expected matrix: entry (r, c) carries the tap at
        # lag (r - c) mod 8 evaluated at input time c.
        pdp = PowerDelayProfile(np.array([0, 2]), np.array([0.5, 0.5]))
        fft_len, block = 8, 4
        real = sample_realization(pdp, time_corr("jakes", 32, fd_ts=5e-2),
                                  block + fft_len, rng=8, origin=-block,
                                  block_len=block)
        mat = circular_channel_matrix(real, 1, fft_len)
        expected = np.zeros((fft_len, fft_len), dtype=complex)
        for c in range(fft_len):
            expected[c % fft_len, c] = real.tap_block(c, 1)[0, 0]
            expected[(c + 2) % fft_len, c] = real.tap_block(c, 1)[1, 0]
        np.testing.assert_array_equal(mat, expected)

    def test_span_mismatch_rejected(self):
        pdp = exp_pdp(0.0, 1, 1)
        real = sample_realization(pdp, time_corr("static", 8), 8, rng=0,
                                  origin=0, block_len=4)
        with pytest.raises(InvalidDimensionError):
            circular_channel_matrix(real, 1, 16)


class TestHelpers:
    def test_beta_bisection_roundtrip(self):
        for tau in (2.0, 10.0, 61.6):
            beta = beta_for_tau_rms(tau, 119, 8)
            assert abs(exp_pdp(beta, 119, 8).rms_delay - tau) < 1e-6

    def test_beta_bisection_rejects_unreachable(self):
        with pytest.raises(ConfigurationError):
            beta_for_tau_rms(1000.0, 10, 1)

    def test_speed_conversion(self):
        fdts = speed_to_fdts(50.0, 2.5e9, 15.36e6)
        f_d = (50.0 / 3.6) * 2.5e9 / 299792458.0
        assert fdts == pytest.approx(f_d / 15.36e6, rel=1e-12)
        assert fdts == pytest.approx(7.54e-6, rel=1e-2)
