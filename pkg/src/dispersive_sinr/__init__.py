"""Closed-form signal/ICI/ISI and SINR analysis for CP-, ZP- and UF-OFDM
over doubly dispersive WSSUS channels, with an embedded Monte Carlo
link simulator for verification and a scenario runner CLI.
"""

from .channel import (
    PowerDelayProfile,
    SpectralStats,
    TimeCorr,
    beta_for_tau_rms,
    doppler_cov,
    exp_pdp,
    freq_corr,
    sample_realization,
    spectral_stats,
    speed_to_fdts,
    time_corr,
    vehb_pdp,
)
from .errors import (
    ConfigurationError,
    DispersiveSinrError,
    InvalidDimensionError,
    NotACovarianceError,
    UnsupportedRegimeError,
    VerificationError,
)
from .montecarlo import EmpiricalBreakdown, SimSpec, estimate_error, simulate
from .numerics import (
    WindowCoefficients,
    bessel_j0,
    chebyshev_window,
    dft_matrix,
    gtr,
    sample_gaussian_process,
)
from .sinr import (
    DownlinkEngine,
    PowerBreakdown,
    SinrReport,
    UplinkUser,
    analyze,
    corr_kernel,
    isi_power,
    signal_ici_power,
    signal_power,
    sinr_report,
    uplink_compose,
)
from .waveform import (
    PulseMatrix,
    ReceiveMatrices,
    SystemConfig,
    WaveformKind,
    demodulate,
    design_subband_filter,
    modulate,
    pulse_matrix,
    receive_matrices,
)

__version__ = "0.1.0"
