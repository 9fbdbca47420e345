"""Monte Carlo link simulator used as the independent oracle.

Sampled channel realizations are propagated through the exact time-
domain transmit/receive chains; signal, ICI and ISI contributions are
separated per realization by linearity (the per-subcarrier column path
for the signal, the remaining current-symbol columns for ICI, the
previous symbol for ISI).  Powers are measured before noise; the noise
floor is added analytically by the reporting layer, which keeps noise
variance out of the estimator.

Determinism: realization batches draw from generators seeded by
``SeedSequence(seed, spawn_key=(batch_index,))`` and are reduced in
batch order, so results depend only on (spec, batch_size), not on
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PowerDelayProfile, TimeCorr, sample_tap_gains
from .errors import ConfigurationError, InvalidDimensionError
from .waveform import SystemConfig, WaveformKind, front_end, time_columns

__all__ = ["SimSpec", "EmpiricalBreakdown", "simulate", "estimate_error"]

DEFAULT_BATCH = 2048


@dataclass
class SimSpec:
    """One simulation campaign: system, waveform, channel, size, seed."""

    cfg: SystemConfig
    kind: WaveformKind
    pdp: PowerDelayProfile
    tcorr: TimeCorr
    n_realizations: int
    seed: int = 0
    qam_order: int = 4

    def __post_init__(self):
        self.kind = WaveformKind.parse(self.kind)
        if self.n_realizations < 1:
            raise ConfigurationError("need at least one realization")
        if self.qam_order < 2 or (self.qam_order & (self.qam_order - 1)) != 0:
            raise ConfigurationError("qam_order must be a power of two >= 2")


@dataclass
class EmpiricalBreakdown:
    """Per-subcarrier power estimates with standard errors."""

    subcarriers: np.ndarray
    p_signal: np.ndarray
    p_ici: np.ndarray
    p_isi: np.ndarray
    se_signal: np.ndarray
    se_ici: np.ndarray
    se_isi: np.ndarray
    n_realizations: int


def _qam_symbols(rng: np.random.Generator, shape, order: int) -> np.ndarray:
    """Uniform unit-average-power square QAM (order 4 = QPSK)."""
    m = int(round(np.sqrt(order)))
    if m * m != order:
        raise ConfigurationError("qam_order must be a square (4, 16, 64, ...)")
    levels = 2 * rng.integers(0, m, size=shape) - (m - 1)
    levels_q = 2 * rng.integers(0, m, size=shape) - (m - 1)
    scale = np.sqrt(2.0 * (m * m - 1) / 3.0)
    return (levels + 1j * levels_q) / scale


@dataclass
class BatchTerms:
    """Separated frequency-domain terms for one realization batch, plus
    the draws that produced them (exposed for reconstruction tests)."""

    sym_cur: np.ndarray
    sym_prev: np.ndarray
    gains: np.ndarray
    y_signal: np.ndarray
    y_ici: np.ndarray
    y_isi: np.ndarray


class _Simulator:
    """Precomputed transmit basis and front end for one spec."""

    def __init__(self, spec: SimSpec):
        cfg, pdp = spec.cfg, spec.pdp
        if pdp.max_delay > cfg.n - cfg.cp_len:
            raise ConfigurationError(
                f"channel memory {pdp.max_delay} exceeds supported "
                f"N - L = {cfg.n - cfg.cp_len}"
            )
        self.spec = spec
        self.block = cfg.block_len
        self.active = cfg.occupied()
        self.cols = time_columns(cfg, spec.kind)[:, self.active]  # (block, n_act)
        self.fe = front_end(cfg, spec.kind)[self.active]          # (n_act, block)
        self.delays = [int(d) for d in pdp.delays]

    def batch(self, rng: np.random.Generator, count: int) -> BatchTerms:
        """Draw ``count`` realizations and separate signal/ICI/ISI terms.

        The taps are applied at their input sample time (tap i weights
        the sample transmitted at t, arriving at t + delay_i), matching
        the analytic channel convention.
        """
        spec, block, cols = self.spec, self.block, self.cols
        n_act = self.active.size
        sym_cur = _qam_symbols(rng, (count, n_act), spec.qam_order)
        sym_prev = _qam_symbols(rng, (count, n_act), spec.qam_order)
        gains = sample_tap_gains(spec.pdp, spec.tcorr, 2 * block, rng, count=count)
        h_cur = gains[:, :, block:]

        # Current symbol, per-column convolution for unit symbols.
        y_col = np.zeros((count, n_act, block), dtype=complex)
        for i, d in enumerate(self.delays):
            y_col[:, :, d:] += h_cur[:, i, None, :block - d] * cols[:block - d, :].T[None]
        # Previous symbol: only its convolution tail spills into the window.
        x_prev = (cols @ sym_prev.T).T
        y_isi_time = np.zeros((count, block), dtype=complex)
        for i, d in enumerate(self.delays):
            if d > 0:
                y_isi_time[:, :d] += gains[:, i, block - d:block] * x_prev[:, block - d:block]

        y_sig = np.einsum("ks,bks->bk", self.fe, y_col) * sym_cur
        y_tot = np.einsum("bk,bks,qs->bq", sym_cur, y_col, self.fe, optimize=True)
        return BatchTerms(sym_cur, sym_prev, gains,
                          y_sig, y_tot - y_sig, y_isi_time @ self.fe.T)


def simulate(spec: SimSpec, batch_size: int = DEFAULT_BATCH) -> EmpiricalBreakdown:
    """Run the campaign and estimate P_S, P_ICI, P_ISI per subcarrier.

    Per realization, one correlated channel draw spans the previous and
    current symbol; QAM symbols are drawn independently for both.  The
    three contributions reconstruct the received window exactly (before
    noise), so the split is exact per realization, not just on average.
    """
    sim = _Simulator(spec)
    n_act = sim.active.size
    sums = np.zeros((3, n_act))
    sq_sums = np.zeros((3, n_act))
    done = 0
    batch_idx = 0
    while done < spec.n_realizations:
        b = min(batch_size, spec.n_realizations - done)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=spec.seed, spawn_key=(batch_idx,))
        )
        terms = sim.batch(rng, b)
        for row, term in enumerate((terms.y_signal, terms.y_ici, terms.y_isi)):
            p = np.abs(term) ** 2
            sums[row] += p.sum(axis=0)
            sq_sums[row] += (p * p).sum(axis=0)
        done += b
        batch_idx += 1

    n = spec.n_realizations
    means = sums / n
    if n > 1:
        var = np.maximum(sq_sums / n - means ** 2, 0.0)
        se = np.sqrt(var / (n - 1))
    else:
        se = np.full_like(means, np.nan)
    return EmpiricalBreakdown(
        subcarriers=sim.active.copy(),
        p_signal=means[0], p_ici=means[1], p_isi=means[2],
        se_signal=se[0], se_ici=se[1], se_isi=se[2],
        n_realizations=n,
    )


def estimate_error(emp: EmpiricalBreakdown) -> np.ndarray:
    """Standard-error radii of the power estimates, shape (3, n_active):
    rows are signal, ICI, ISI.  Requires at least two realizations."""
    if emp.n_realizations < 2:
        raise InvalidDimensionError("standard errors need n_realizations >= 2")
    return np.stack([emp.se_signal, emp.se_ici, emp.se_isi])
