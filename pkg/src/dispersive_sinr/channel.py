"""WSSUS channel statistics and time-varying channel realizations.

Power delay profiles (exponential and ITU Vehicular B), Jakes/static
time correlation, the frequency-lag correlation and Doppler covariance
on the 2N grid, and correlated tap-process sampling for the Monte Carlo
oracle.

Conventions: tap delays are integer sample indices; tap powers sum to
one; the tap process at delay ``d`` has variance ``rho_d`` and time
correlation ``R_t``; taps at distinct delays are independent.  A
realization stores ``h[i, t]``, the gain of tap ``i`` at (input) sample
time ``t``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import (
    ConfigurationError,
    InvalidDimensionError,
    NotACovarianceError,
    UnsupportedRegimeError,
)
from .numerics import bessel_j0, gaussian_factor

__all__ = [
    "PowerDelayProfile",
    "TimeCorr",
    "SpectralStats",
    "ChannelRealization",
    "exp_pdp",
    "vehb_pdp",
    "time_corr",
    "freq_corr",
    "doppler_cov",
    "spectral_stats",
    "sample_realization",
    "sample_tap_gains",
    "circular_channel_matrix",
    "beta_for_tau_rms",
    "speed_to_fdts",
    "VEHB_BASE_SAMPLE_RATE_HZ",
]

#: Sample rate at which the shipped Vehicular-B tap table quantizes to the
#: delay spread used by the verification scenarios (1024-subcarrier grid
#: over 15.36 MHz).
VEHB_BASE_SAMPLE_RATE_HZ = 15.36e6

_DATA_ENV_VAR = "DISPERSIVE_SINR_DATA"


@dataclass
class PowerDelayProfile:
    """Discrete power delay profile on the sample grid.

    ``delays`` are strictly increasing integer sample indices starting
    at zero; ``powers`` are linear tap variances summing to one.
    """

    delays: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=np.int64)
        self.powers = np.asarray(self.powers, dtype=float)
        if self.delays.ndim != 1 or self.delays.shape != self.powers.shape:
            raise InvalidDimensionError("delays and powers must be matching 1-D arrays")
        if self.delays.size < 1:
            raise InvalidDimensionError("profile needs at least one tap")
        if self.delays[0] != 0:
            raise ConfigurationError("first tap delay must be 0")
        if np.any(np.diff(self.delays) <= 0):
            raise ConfigurationError("tap delays must be strictly increasing")
        if np.any(self.powers < 0):
            raise ConfigurationError("tap powers must be non-negative")
        if abs(self.powers.sum() - 1.0) > 1e-12:
            raise ConfigurationError("tap powers must sum to 1 within 1e-12")

    @classmethod
    def from_taps(cls, delays, powers) -> "PowerDelayProfile":
        """Build a unit-power profile, normalizing the given powers."""
        powers = np.asarray(powers, dtype=float)
        total = powers.sum()
        if total <= 0:
            raise ConfigurationError("total tap power must be positive")
        return cls(np.asarray(delays, dtype=np.int64), powers / total)

    @property
    def n_taps(self) -> int:
        return self.delays.size

    @property
    def max_delay(self) -> int:
        """Channel memory order D in samples."""
        return int(self.delays[-1])

    @property
    def mean_delay(self) -> float:
        """First moment of the profile, in samples."""
        return float(np.dot(self.powers, self.delays))

    @property
    def rms_delay(self) -> float:
        """Standard deviation of the profile, in samples."""
        m1 = self.mean_delay
        m2 = float(np.dot(self.powers, self.delays.astype(float) ** 2))
        return float(np.sqrt(max(m2 - m1 * m1, 0.0)))


def exp_pdp(beta: float, n_taps: int, stretch: int = 1,
            max_delay: int | None = None) -> PowerDelayProfile:
    """Exponentially decaying profile: taps at 0, stretch, 2*stretch, ...
    with powers proportional to beta**i, normalized to unit sum.

    When ``max_delay`` is given (typically N - L), a delay span beyond it
    raises :class:`UnsupportedRegimeError`, since only the directly
    preceding symbol may then contribute interference.
    """
    if not 0.0 <= beta < 1.0:
        raise ConfigurationError("decay factor must lie in [0, 1)")
    n_taps = int(n_taps)
    stretch = int(stretch)
    if n_taps < 1 or stretch < 1:
        raise ConfigurationError("n_taps and stretch must be positive")
    if beta == 0.0:
        n_taps = 1
    span = (n_taps - 1) * stretch
    if max_delay is not None and span > max_delay:
        raise UnsupportedRegimeError(
            f"tap span {span} exceeds the supported delay limit {max_delay}"
        )
    delays = stretch * np.arange(n_taps, dtype=np.int64)
    powers = beta ** np.arange(n_taps, dtype=float) if n_taps > 1 else np.ones(1)
    return PowerDelayProfile.from_taps(delays, powers)


def _resolve_data_file(name: str, explicit: str | os.PathLike | None = None) -> Path:
    if explicit is not None:
        path = Path(explicit)
        if not path.is_file():
            raise ConfigurationError(f"PDP data file not found: {path}")
        return path
    override = os.environ.get(_DATA_ENV_VAR)
    if override:
        path = Path(override) / name
        if not path.is_file():
            raise ConfigurationError(f"PDP data file not found: {path}")
        return path
    path = Path(str(resources.files("dispersive_sinr").joinpath("data").joinpath(name)))
    if not path.is_file():
        raise ConfigurationError(f"bundled PDP data file missing: {path}")
    return path


def vehb_pdp(sample_rate_scaling: float = 1.0,
             data_file: str | os.PathLike | None = None) -> PowerDelayProfile:
    """ITU Vehicular-B profile quantized to the sample grid.

    Tap delays and powers come from the shipped table (rows of
    ``delay_ns power_db``); the sample rate is
    ``VEHB_BASE_SAMPLE_RATE_HZ * sample_rate_scaling``.  Taps that land
    on the same sample after quantization are merged.
    """
    if sample_rate_scaling <= 0:
        raise ConfigurationError("sample_rate_scaling must be positive")
    path = _resolve_data_file("itu_veh_b.txt", data_file)
    table = np.loadtxt(path, comments="#", ndmin=2)
    if table.shape[1] != 2:
        raise ConfigurationError(f"expected two columns (delay_ns power_db) in {path}")
    rate = VEHB_BASE_SAMPLE_RATE_HZ * sample_rate_scaling
    delays = np.round(table[:, 0] * 1e-9 * rate).astype(np.int64)
    powers = 10.0 ** (table[:, 1] / 10.0)
    merged: dict[int, float] = {}
    for d, p in zip(delays, powers):
        merged[int(d)] = merged.get(int(d), 0.0) + p
    uniq = np.array(sorted(merged), dtype=np.int64)
    return PowerDelayProfile.from_taps(uniq, [merged[int(d)] for d in uniq])


def beta_for_tau_rms(tau_rms: float, n_taps: int, stretch: int = 1,
                     tol: float = 1e-6) -> float:
    """Solve the decay factor whose profile has the requested rms delay
    spread (samples), by bisection on the monotone moment equation.
    """
    if tau_rms < 0:
        raise ConfigurationError("tau_rms must be non-negative")
    if tau_rms == 0:
        return 0.0
    hi_limit = exp_pdp(1.0 - 1e-12, n_taps, stretch).rms_delay
    if tau_rms >= hi_limit:
        raise ConfigurationError(
            f"tau_rms {tau_rms} unreachable: {n_taps} taps at stretch {stretch} "
            f"top out at {hi_limit:.3f} samples"
        )
    lo, hi = 0.0, 1.0 - 1e-12
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        if exp_pdp(mid, n_taps, stretch).rms_delay < tau_rms:
            lo = mid
        else:
            hi = mid
        if abs(exp_pdp(mid, n_taps, stretch).rms_delay - tau_rms) < tol:
            return mid
    return 0.5 * (lo + hi)


def speed_to_fdts(speed_kmh: float, carrier_hz: float, sample_rate_hz: float) -> float:
    """Normalized Doppler f_D * T_s from speed, carrier and sample rate."""
    c = 299792458.0
    f_d = (speed_kmh / 3.6) * carrier_hz / c
    return f_d / sample_rate_hz


@dataclass
class TimeCorr:
    """Tap-gain correlation across time lags.

    ``model`` is ``"jakes"``, ``"static"`` or ``"custom"``.  ``values``
    holds R_t on lags 0..max_lag-1; Jakes/static models can extend it on
    demand, a custom sequence cannot.
    """

    model: str
    fd_ts: float | None
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise InvalidDimensionError("correlation sequence must be 1-D, non-empty")
        if abs(self.values[0] - 1.0) > 1e-12:
            raise NotACovarianceError("R_t(0) must equal 1")
        if np.any(np.abs(self.values) > 1.0 + 1e-12):
            raise NotACovarianceError("|R_t| must not exceed 1")

    @property
    def max_lag(self) -> int:
        return self.values.size

    def sequence(self, n_lags: int) -> np.ndarray:
        """R_t on lags 0..n_lags-1, regenerating for analytic models."""
        n_lags = int(n_lags)
        if n_lags <= self.max_lag:
            return self.values[:n_lags]
        if self.model == "static":
            return np.ones(n_lags)
        if self.model == "jakes":
            return _jakes_sequence(self.fd_ts, n_lags)
        raise InvalidDimensionError(
            f"custom correlation provides {self.max_lag} lags, {n_lags} requested"
        )


def _jakes_sequence(fd_ts: float, n_lags: int) -> np.ndarray:
    return bessel_j0(2.0 * np.pi * fd_ts * np.arange(n_lags, dtype=float))


def time_corr(model: str, max_lag: int, fd_ts: float | None = None,
              values=None) -> TimeCorr:
    """Build a :class:`TimeCorr` for the Jakes, static or custom model.

    Jakes: R_t(dn) = J0(2*pi*fd_ts*dn).  Static: R_t = 1.  Custom
    sequences are validated to form a PSD Toeplitz matrix.
    """
    max_lag = int(max_lag)
    if max_lag < 1:
        raise InvalidDimensionError("max_lag must be at least 1")
    model = model.lower()
    if model == "jakes":
        if fd_ts is None or fd_ts < 0:
            raise ConfigurationError("jakes model needs fd_ts >= 0")
        return TimeCorr("jakes", float(fd_ts), _jakes_sequence(fd_ts, max_lag))
    if model == "static":
        return TimeCorr("static", 0.0, np.ones(max_lag))
    if model == "custom":
        if values is None:
            raise ConfigurationError("custom model needs an explicit sequence")
        seq = np.asarray(values, dtype=float)[:max_lag]
        toep = scipy.linalg.toeplitz(seq)
        lam_min = scipy.linalg.eigvalsh(toep).min()
        if lam_min < -1e-9 * np.trace(toep):
            raise NotACovarianceError(
                f"custom correlation is not PSD (min eigenvalue {lam_min:.3e})"
            )
        return TimeCorr("custom", fd_ts, seq)
    raise ConfigurationError(f"unknown time-correlation model: {model!r}")


def freq_corr(pdp: PowerDelayProfile, n: int) -> np.ndarray:
    """Frequency correlation of the profile on the 2N lag grid.

    ``R_f[dk] = sum_p rho_p * exp(-1j*pi*d_p*dk/n)`` for lags
    dk = 0..2n-1 (phase step pi/n, so the sequence is 2n-periodic and
    Hermitian in the lag: R_f(-dk) = conj(R_f(dk))).
    """
    if n < 1:
        raise InvalidDimensionError("n must be positive")
    lags = np.arange(2 * n)
    phase = np.exp(-1j * np.pi * np.outer(pdp.delays, lags) / n)
    return phase.T @ pdp.powers


def doppler_cov(tcorr: TimeCorr, size: int, validate: bool = True) -> np.ndarray:
    """Doppler covariance R_D = F * Toeplitz(R_t) * F^H with the unitary
    size-point DFT and unit tap power.

    Hermitian PSD with trace equal to ``size``.  ``validate`` checks the
    Toeplitz matrix for PSD-ness (within -1e-9 * trace) before
    transforming.
    """
    size = int(size)
    seq = tcorr.sequence(size)
    toep = scipy.linalg.toeplitz(seq)
    if validate:
        lam_min = scipy.linalg.eigvalsh(toep).min()
        if lam_min < -1e-9 * np.trace(toep):
            raise NotACovarianceError(
                f"time correlation is not PSD at size {size} "
                f"(min eigenvalue {lam_min:.3e})"
            )
    # F A F^H: unitary DFT over rows, unitary IDFT over columns.
    out = np.fft.fft(toep, axis=0, norm="ortho")
    out = np.fft.ifft(out, axis=1, norm="ortho")
    return out


@dataclass
class SpectralStats:
    """Frequency correlation (2N lags) and Doppler covariance (2N x 2N)."""

    rf: np.ndarray
    rd: np.ndarray

    def __post_init__(self):
        if self.rd.shape[0] != self.rd.shape[1] or self.rf.shape[0] != self.rd.shape[0]:
            raise InvalidDimensionError("rf length must match rd dimension")


def spectral_stats(pdp: PowerDelayProfile, tcorr: TimeCorr, n: int,
                   validate: bool = True) -> SpectralStats:
    """Bundle ``freq_corr`` and ``doppler_cov`` on the 2N grid."""
    return SpectralStats(freq_corr(pdp, n), doppler_cov(tcorr, 2 * n, validate=validate))


@dataclass
class ChannelRealization:
    """One draw of the tap processes over a contiguous time span.

    ``taps[i, t]`` is the gain of the tap at ``delays[i]`` at absolute
    sample time ``origin + t``.  ``block_len`` is the multicarrier symbol
    length N + L, so symbol ``m`` occupies absolute times
    ``[(m - 1) * block_len, m * block_len)`` for m in {0 (previous),
    1 (current)} with the current detection window starting at 0.
    """

    delays: np.ndarray
    taps: np.ndarray
    origin: int
    block_len: int

    @property
    def span(self) -> int:
        return self.taps.shape[1]

    def tap_block(self, t_start: int, length: int) -> np.ndarray:
        """Tap gains over absolute times [t_start, t_start + length)."""
        i0 = t_start - self.origin
        if i0 < 0 or i0 + length > self.span:
            raise InvalidDimensionError(
                f"requested times [{t_start}, {t_start + length}) outside the "
                f"sampled span [{self.origin}, {self.origin + self.span})"
            )
        return self.taps[:, i0:i0 + length]


def sample_tap_gains(pdp: PowerDelayProfile, tcorr: TimeCorr, span: int,
                     rng, count: int = 1) -> np.ndarray:
    """Correlated tap gains, shape (count, n_taps, span).

    Each tap is an independent complex Gaussian process with variance
    ``rho_i`` and time correlation R_t; the factorization of the span
    Toeplitz matrix is shared across taps and realizations.
    """
    span = int(span)
    if span < 1:
        raise InvalidDimensionError("span must be positive")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    factor = gaussian_factor(scipy.linalg.toeplitz(tcorr.sequence(span)))
    n_taps = pdp.n_taps
    z = (rng.standard_normal((span, count * n_taps))
         + 1j * rng.standard_normal((span, count * n_taps))) / np.sqrt(2.0)
    gains = (factor @ z).T.reshape(count, n_taps, span)
    gains *= np.sqrt(pdp.powers)[None, :, None]
    return gains


def sample_realization(pdp: PowerDelayProfile, tcorr: TimeCorr, span: int,
                       rng, origin: int | None = None,
                       block_len: int | None = None) -> ChannelRealization:
    """Draw one :class:`ChannelRealization` over ``span`` samples.

    By default the span is centred so that it covers the previous and
    current symbol of a ``block_len``-sample waveform: origin is
    ``-block_len``.  Pass ``origin`` explicitly for other framings.
    """
    if block_len is None:
        block_len = span // 2
    if origin is None:
        origin = -block_len
    gains = sample_tap_gains(pdp, tcorr, span, rng, count=1)[0]
    return ChannelRealization(pdp.delays.copy(), gains, int(origin), int(block_len))


def circular_channel_matrix(real: ChannelRealization, symbol_index: int,
                            fft_len: int) -> np.ndarray:
    """Time-variant circular convolution matrix of one symbol, size
    ``fft_len x fft_len``.

    Entry (r, c) is the gain of the tap at lag ``(r - c) mod fft_len`` at
    the time of input sample ``c`` of the symbol's frame; symbol frames
    start at ``(symbol_index - 1) * block_len``.
    """
    frame_start = (symbol_index - 1) * real.block_len
    block = real.tap_block(frame_start, fft_len)  # (n_taps, fft_len)
    out = np.zeros((fft_len, fft_len), dtype=complex)
    cols = np.arange(fft_len)
    for i, d in enumerate(real.delays):
        out[(cols + int(d)) % fft_len, cols] = block[i]
    return out
