"""Transmit-side symbol construction for CP-, ZP- and UF-OFDM and the
frequency-domain transmit/receive matrices of the interference analysis.

Framing convention: a multicarrier symbol occupies ``block_len = N + L``
samples.  Analysis happens in a 2N-sample detection-window frame whose
sample 0 is the start of the current symbol's window.  Within that frame
the transmit support is

* CP: ``[0, N+L)`` (cyclic prefix then body),
* ZP: ``[L, L+N)`` (the guard ahead of the body is the zero postfix of
  the preceding symbol's stream block),
* UF: ``[0, N+L)`` (body convolved with the length L+1 subband filter).

The stream block returned by :func:`modulate` is ``[prefix, body]`` for
CP, ``[body, zeros]`` for ZP and the filtered block for UF; for ZP the
detection window therefore starts L samples before the stream block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, InvalidDimensionError, UnsupportedRegimeError
from .numerics import chebyshev_window, dft_matrix

__all__ = [
    "WaveformKind",
    "SystemConfig",
    "PulseMatrix",
    "ReceiveMatrices",
    "design_subband_filter",
    "time_columns",
    "front_end",
    "modulate",
    "demodulate",
    "pulse_matrix",
    "receive_matrices",
]


class WaveformKind(str, Enum):
    CP = "cp"
    ZP = "zp"
    UF = "uf"

    @classmethod
    def parse(cls, value) -> "WaveformKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"unknown waveform kind: {value!r}") from None


@dataclass
class SystemConfig:
    """Multicarrier system dimensions and receiver window.

    ``filter_len`` must equal ``cp_len + 1`` so the UF-OFDM symbol matches
    the CP/ZP symbol length (equal spectral efficiency).  Subbands are
    ``rb_size`` contiguous subcarriers each, starting at the entries of
    ``subband_offsets``; ``None`` means one subband centred in the band.
    """

    n: int = 1024
    cp_len: int = 73
    filter_len: int = 74
    rb_size: int = 12
    subband_offsets: tuple = None
    noise_floor_db: float = -40.0
    filter_attenuation_db: float = 40.0
    window: np.ndarray = None

    def __post_init__(self):
        if self.n < 2 or self.cp_len < 1:
            raise ConfigurationError("need n >= 2 and cp_len >= 1")
        if self.filter_len != self.cp_len + 1:
            raise ConfigurationError("filter_len must equal cp_len + 1")
        if self.rb_size < 1 or self.rb_size > self.n:
            raise ConfigurationError("rb_size must lie in [1, n]")
        if self.subband_offsets is None:
            self.subband_offsets = ((self.n - self.rb_size) // 2,)
        self.subband_offsets = tuple(int(o) for o in self.subband_offsets)
        taken = np.zeros(self.n, dtype=bool)
        for off in self.subband_offsets:
            if off < 0 or off + self.rb_size > self.n:
                raise ConfigurationError(f"subband at {off} exceeds the band")
            if taken[off:off + self.rb_size].any():
                raise ConfigurationError("subbands must be disjoint")
            taken[off:off + self.rb_size] = True
        if self.window is None:
            self.window = np.ones(self.block_len)
        self.window = np.asarray(self.window, dtype=float)
        if self.window.shape != (self.block_len,):
            raise ConfigurationError(f"window must have length {self.block_len}")
        if self.window.min() < 0.0 or self.window.max() > 1.0:
            raise ConfigurationError("window entries must lie in [0, 1]")

    @property
    def block_len(self) -> int:
        return self.n + self.cp_len

    @property
    def fft_len(self) -> int:
        return 2 * self.n

    @property
    def n_subbands(self) -> int:
        return len(self.subband_offsets)

    @property
    def noise_power(self) -> float:
        return 10.0 ** (self.noise_floor_db / 10.0)

    def occupied(self) -> np.ndarray:
        """Occupied subcarrier indices, subband after subband."""
        return np.concatenate(
            [off + np.arange(self.rb_size) for off in self.subband_offsets]
        )

    def subband_center(self, subband: int) -> float:
        """Centre frequency of a subband in subcarrier units."""
        return self.subband_offsets[subband] + (self.rb_size - 1) / 2.0

    def subband_of(self, subcarrier: int) -> int:
        for b, off in enumerate(self.subband_offsets):
            if off <= subcarrier < off + self.rb_size:
                return b
        raise ConfigurationError(f"subcarrier {subcarrier} is not allocated")


def design_subband_filter(cfg: SystemConfig, subband: int) -> np.ndarray:
    """Complex FIR taps (length ``filter_len``) for one subband.

    A Dolph-Chebyshev prototype is modulated to the subband centre and
    scaled so the per-subband transmit symbol carries unit average power
    per QAM symbol (data symbols are uncorrelated with unit variance, the
    filter would otherwise change the transmit power).
    """
    if not 0 <= subband < cfg.n_subbands:
        raise ConfigurationError(f"subband {subband} out of range")
    proto = chebyshev_window(cfg.filter_len, cfg.filter_attenuation_db).values
    taps = np.arange(cfg.filter_len)
    # Per-subcarrier transmit power depends only on the offset from the
    # subband centre, so the normalization is identical for every subband.
    mean_power = 0.0
    for r in range(cfg.rb_size):
        delta = r - (cfg.rb_size - 1) / 2.0
        q = proto * np.exp(-2j * np.pi * delta * taps / cfg.n)
        ramp = np.convolve(q, np.ones(cfg.n))
        mean_power += np.vdot(ramp, ramp).real / cfg.n
    mean_power /= cfg.rb_size
    center = cfg.subband_center(subband)
    return proto * np.exp(2j * np.pi * center * taps / cfg.n) / np.sqrt(mean_power)


def time_columns(cfg: SystemConfig, kind) -> np.ndarray:
    """Window-frame transmit basis, shape (block_len, n).

    Column k is the time signal of subcarrier k carrying a unit symbol,
    within the detection-window frame (see the module docstring for the
    per-waveform support).
    """
    kind = WaveformKind.parse(kind)
    n, L, block = cfg.n, cfg.cp_len, cfg.block_len
    cols = np.zeros((block, n), dtype=complex)
    k = np.arange(n, dtype=np.int64)
    if kind in (WaveformKind.CP, WaveformKind.ZP):
        s = np.arange(block, dtype=np.int64)
        phase = np.mod(np.outer((s - L) % n, k), n)
        tone = np.exp(2j * np.pi * phase / n) / np.sqrt(n)
        if kind is WaveformKind.CP:
            cols = tone
        else:
            cols[L:L + n, :] = tone[L:L + n, :]
        return cols
    body = np.exp(2j * np.pi * np.mod(np.outer(np.arange(n, dtype=np.int64), k), n) / n)
    body /= np.sqrt(n)
    for b, off in enumerate(cfg.subband_offsets):
        g = design_subband_filter(cfg, b)
        for r in range(cfg.rb_size):
            cols[:, off + r] = np.convolve(g, body[:, off + r])
    return cols


def front_end(cfg: SystemConfig, kind) -> np.ndarray:
    """Receiver front-end acting on the windowed detection-window samples,
    shape (n, block_len); includes the receive window.

    CP/ZP: guard removal followed by the unitary N-point FFT.  UF: the
    even rows of the unitary 2N-point FFT of the N+L samples, scaled by
    sqrt(2) so a through connection has unit gain.
    """
    kind = WaveformKind.parse(kind)
    n, L, block = cfg.n, cfg.cp_len, cfg.block_len
    k = np.arange(n, dtype=np.int64)
    fe = np.zeros((n, block), dtype=complex)
    if kind in (WaveformKind.CP, WaveformKind.ZP):
        s = np.arange(L, block, dtype=np.int64)
        phase = np.mod(np.outer(k, (s - L) % n), n)
        fe[:, L:] = np.exp(-2j * np.pi * phase / n) / np.sqrt(n)
    else:
        s = np.arange(block, dtype=np.int64)
        phase = np.mod(np.outer(k, s % n), n)
        fe = np.exp(-2j * np.pi * phase / n) / np.sqrt(n)
    return fe * cfg.window[None, :]


def modulate(cfg: SystemConfig, kind, qam: np.ndarray) -> np.ndarray:
    """One transmit stream block (``block_len`` samples) from QAM symbols.

    ``qam`` has shape (n_subbands, rb_size), one row per allocated
    subband.  CP prepends the last L IFFT samples, ZP appends L zeros
    after the body, UF filters each subband (unit average transmit power
    per QAM symbol after the filter normalization).
    """
    kind = WaveformKind.parse(kind)
    qam = np.asarray(qam, dtype=complex)
    if qam.shape != (cfg.n_subbands, cfg.rb_size):
        raise InvalidDimensionError(
            f"qam must have shape ({cfg.n_subbands}, {cfg.rb_size})"
        )
    n, L = cfg.n, cfg.cp_len
    if kind is WaveformKind.UF:
        out = np.zeros(cfg.block_len, dtype=complex)
        for b, off in enumerate(cfg.subband_offsets):
            spec = np.zeros(n, dtype=complex)
            spec[off:off + cfg.rb_size] = qam[b]
            out += np.convolve(design_subband_filter(cfg, b), np.fft.ifft(spec, norm="ortho"))
        return out
    spec = np.zeros(n, dtype=complex)
    for b, off in enumerate(cfg.subband_offsets):
        spec[off:off + cfg.rb_size] = qam[b]
    body = np.fft.ifft(spec, norm="ortho")
    if kind is WaveformKind.CP:
        return np.concatenate([body[-L:], body])
    return np.concatenate([body, np.zeros(L, dtype=complex)])


def demodulate(cfg: SystemConfig, kind, window_samples: np.ndarray) -> np.ndarray:
    """Per-subband symbol estimates from one detection window
    (``block_len`` samples in the window frame), shape
    (n_subbands, rb_size).  No equalization is applied.
    """
    kind = WaveformKind.parse(kind)
    window_samples = np.asarray(window_samples, dtype=complex)
    if window_samples.shape != (cfg.block_len,):
        raise InvalidDimensionError(f"expected {cfg.block_len} window samples")
    spectrum = front_end(cfg, kind) @ window_samples
    return np.stack([spectrum[off:off + cfg.rb_size] for off in cfg.subband_offsets])


@dataclass
class PulseMatrix:
    """Frequency-domain transmit matrix T (2N x N) with cached T @ T^H."""

    kind: WaveformKind
    matrix: np.ndarray
    _gamma: np.ndarray = field(default=None, repr=False)

    @property
    def gamma(self) -> np.ndarray:
        if self._gamma is None:
            self._gamma = self.matrix @ self.matrix.conj().T
        return self._gamma

    def active_gamma(self, active: np.ndarray) -> np.ndarray:
        """T_act @ T_act^H over the given subcarrier columns."""
        cols = self.matrix[:, np.asarray(active, dtype=int)]
        return cols @ cols.conj().T


def _shift_grid(fft_len: int, count: int, transpose: bool) -> np.ndarray:
    """Index grid realizing circshift-by-2k rows/columns."""
    base = np.arange(fft_len, dtype=np.int64)
    shift = 2 * np.arange(count, dtype=np.int64)
    if transpose:  # W[k, c] = row0[(c - 2k) % fft_len]
        return (base[None, :] - shift[:, None]) % fft_len
    return (base[:, None] - shift[None, :]) % fft_len  # T[r, k] = col0[(r - 2k) %]


def _column_phases(n: int, lag: int) -> np.ndarray:
    """exp(-2j*pi*k*lag/n) for k = 0..n-1 with exact phase reduction."""
    k = np.arange(n, dtype=np.int64)
    return np.exp(-2j * np.pi * np.mod(k * lag, n) / n)


def pulse_matrix(cfg: SystemConfig, kind, method: str = "fast") -> PulseMatrix:
    """Transmit pulse-shaping matrix T mapping QAM symbols to the 2N
    frequency grid: F_2N applied to the zero-padded window-frame signal.

    ``method="fast"`` uses the circulant structure (each column is the
    first column cyclically shifted by 2k with a constant phase, plus a
    per-subband diagonal filter response for UF); ``method="direct"``
    multiplies the defining matrices and is meant for validation.
    """
    kind = WaveformKind.parse(kind)
    n, L, fft_len = cfg.n, cfg.cp_len, cfg.fft_len
    if method == "direct":
        f_n_h = dft_matrix(n).conj().T
        construct = np.zeros((fft_len, n), dtype=complex)
        if kind is WaveformKind.CP:
            construct[:L, :] = np.eye(n)[-L:]
            construct[L:L + n, :] = np.eye(n)
            construct = construct @ f_n_h
        elif kind is WaveformKind.ZP:
            construct[L:L + n, :] = np.eye(n)
            construct = construct @ f_n_h
        else:
            for b, off in enumerate(cfg.subband_offsets):
                taps = design_subband_filter(cfg, b)
                toep = np.zeros((cfg.block_len, n), dtype=complex)
                for t in range(n):
                    toep[t:t + taps.size, t] = taps
                construct[:cfg.block_len, off:off + cfg.rb_size] = (
                    toep @ f_n_h[:, off:off + cfg.rb_size]
                )
        return PulseMatrix(kind, dft_matrix(fft_len) @ construct)
    if method != "fast":
        raise ValueError(f"unknown method: {method!r}")
    if kind in (WaveformKind.CP, WaveformKind.ZP):
        layout = np.zeros(fft_len, dtype=complex)
        if kind is WaveformKind.CP:
            layout[:cfg.block_len] = 1.0
        else:
            layout[L:L + n] = 1.0
        col0 = np.fft.fft(layout, norm="ortho") / np.sqrt(n)
        t = col0[_shift_grid(fft_len, n, transpose=False)]
        t *= _column_phases(n, L)[None, :]
        return PulseMatrix(kind, t)
    base0 = np.zeros(fft_len, dtype=complex)
    base0[:n] = 1.0
    col0 = np.sqrt(2.0) * np.fft.fft(base0, norm="ortho")
    t = col0[_shift_grid(fft_len, n, transpose=False)].astype(complex)
    gain = np.zeros((fft_len, n), dtype=complex)
    for b, off in enumerate(cfg.subband_offsets):
        g = np.zeros(fft_len, dtype=complex)
        taps = design_subband_filter(cfg, b)
        g[:taps.size] = taps
        gain[:, off:off + cfg.rb_size] = np.fft.fft(g, norm="ortho")[:, None]
    return PulseMatrix(kind, t * gain)


@dataclass
class ReceiveMatrices:
    """Frequency-domain detection and ISI receive matrices (N x 2N)."""

    kind: WaveformKind
    max_delay: int
    w_d: np.ndarray
    w_i: np.ndarray


def receive_matrices(cfg: SystemConfig, kind, max_delay: int,
                     method: str = "fast") -> ReceiveMatrices:
    """Receive matrices W_D (detection) and W_I (ISI) for channel memory
    ``max_delay``; requires ``max_delay <= N - L`` so only the directly
    preceding symbol interferes.

    For CP/ZP the ISI window is entirely removed with the guard whenever
    ``max_delay <= L``, making W_I exactly zero.  UF has no time guard,
    so W_I is nonzero for any ``max_delay >= 1``.
    """
    kind = WaveformKind.parse(kind)
    n, L, fft_len, block = cfg.n, cfg.cp_len, cfg.fft_len, cfg.block_len
    d = int(max_delay)
    if d < 0 or d > n - L:
        raise UnsupportedRegimeError(
            f"max delay {d} outside the supported range [0, {n - L}]"
        )
    v = cfg.window
    if method == "direct":
        f_n = dft_matrix(n)
        f2 = dft_matrix(fft_len)
        wd_time = np.zeros((block, fft_len), dtype=complex)
        wd_time[:, :block] = np.diag(v)
        wi_time = np.zeros((block, fft_len), dtype=complex)
        for s in range(d):
            wi_time[s, block + s] = v[s]
        if kind in (WaveformKind.CP, WaveformKind.ZP):
            c_r = np.zeros((n, block), dtype=complex)
            c_r[:, L:] = np.eye(n)
            fe = f_n @ c_r
        else:
            fe = np.sqrt(2.0) * f2[::2, :block]
        return ReceiveMatrices(kind, d, fe @ wd_time @ f2.conj().T,
                               fe @ wi_time @ f2.conj().T)
    if method != "fast":
        raise ValueError(f"unknown method: {method!r}")

    def rows_from_layout(layout: np.ndarray, phase_lag: int) -> np.ndarray:
        row0 = np.fft.ifft(layout, norm="ortho") / np.sqrt(n)
        rows = row0[_shift_grid(fft_len, n, transpose=True)]
        rows *= np.conj(_column_phases(n, phase_lag))[:, None]
        return rows

    d_layout = np.zeros(fft_len, dtype=complex)
    i_layout = np.zeros(fft_len, dtype=complex)
    if kind in (WaveformKind.CP, WaveformKind.ZP):
        d_layout[L:block] = v[L:]
        if d > L:
            i_layout[block + L:block + d] = v[L:d]
        w_d = rows_from_layout(d_layout, L)
        w_i = rows_from_layout(i_layout, 2 * L)
    else:
        d_layout[:block] = v
        if d > 0:
            i_layout[block:block + d] = v[:d]
        w_d = rows_from_layout(d_layout, 0)
        w_i = rows_from_layout(i_layout, L)
    return ReceiveMatrices(kind, d, w_d, w_i)
