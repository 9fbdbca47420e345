"""Deterministic mathematical primitives shared by all other modules.

Unitary DFT matrices, the zero-order Bessel function, Dolph-Chebyshev
window design, the generalized (cyclic-diagonal) trace and correlated
complex Gaussian sampling.  Everything here is a pure function of its
inputs; the sampler is pure given its generator state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.signal
import scipy.special

from .errors import InvalidDimensionError, NotACovarianceError

__all__ = [
    "WindowCoefficients",
    "dft_matrix",
    "bessel_j0",
    "chebyshev_window",
    "gtr",
    "gaussian_factor",
    "sample_gaussian_process",
]


def dft_matrix(k: int) -> np.ndarray:
    """Unitary k-point DFT matrix with entries exp(-2j*pi*m*n/k)/sqrt(k).

    The inverse transform is the conjugate transpose.
    """
    k = int(k)
    if k < 1:
        raise InvalidDimensionError("DFT size must be at least 1")
    idx = np.arange(k, dtype=np.int64)
    # Reduce m*n mod k before forming the phase so large sizes stay at
    # machine accuracy (the raw product overflows the exact float range).
    phase = np.mod(np.outer(idx, idx), k)
    return np.exp(-2j * np.pi * phase / k) / np.sqrt(k)


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Accepts scalars or arrays; rejects non-finite input.  Accuracy is
    better than 1e-12 absolute over |x| <= 1e4.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("bessel_j0 requires finite input")
    out = scipy.special.j0(arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


@dataclass
class WindowCoefficients:
    """Real symmetric window, peak-normalized to 1.

    ``design_attenuation`` is the sidelobe level (dB below the spectral
    mainlobe) the window was designed for.
    """

    values: np.ndarray
    design_attenuation: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise InvalidDimensionError("window must be a non-empty 1-D sequence")

    def __len__(self) -> int:
        return self.values.size


def chebyshev_window(length: int, attenuation_db: float) -> WindowCoefficients:
    """Dolph-Chebyshev window with equiripple sidelobes ``attenuation_db``
    below the spectral mainlobe peak.
    """
    length = int(length)
    if length < 1:
        raise InvalidDimensionError("window length must be at least 1")
    if attenuation_db <= 0:
        raise ValueError("attenuation must be positive (dB)")
    if length == 1:
        return WindowCoefficients(np.ones(1), attenuation_db)
    with warnings.catch_warnings():
        # scipy warns below 45 dB about spectral-analysis suitability;
        # the design itself is exact at any attenuation.
        warnings.simplefilter("ignore", UserWarning)
        w = scipy.signal.windows.chebwin(length, at=attenuation_db, sym=True)
    w = w / w.max()
    w = 0.5 * (w + w[::-1])  # enforce exact symmetry
    return WindowCoefficients(w, attenuation_db)


def gtr(a: np.ndarray) -> np.ndarray:
    """Generalized trace: sums along cyclically shifted diagonals.

    For a square n x n matrix, ``gtr(a)[j] = sum_i a[(i + j) % n, i]``,
    so ``gtr(a)[0]`` is the ordinary trace.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidDimensionError("gtr requires a square matrix")
    n = a.shape[0]
    cols = np.arange(n)
    rows = (cols[None, :] + cols[:, None]) % n  # rows[j, i] = (i + j) % n
    return a[rows, cols[None, :]].sum(axis=1)


def gaussian_factor(corr: np.ndarray) -> np.ndarray:
    """Symmetric factor B with B @ B.T = corr for a real PSD matrix.

    Uses an eigendecomposition and clips small negative eigenvalues to
    zero; Jakes correlation matrices are numerically rank deficient at
    small Doppler, so a Cholesky factor would either fail or need an
    additive jitter that pollutes the degenerate (constant) modes.
    Raises :class:`NotACovarianceError` when an eigenvalue falls below
    ``-10 * eps`` with ``eps = 1e-10 * trace / K``.
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise InvalidDimensionError("correlation matrix must be square")
    if not np.allclose(corr, corr.T, atol=1e-10):
        raise NotACovarianceError("correlation matrix must be symmetric")
    k = corr.shape[0]
    eps = 1e-10 * np.trace(corr) / k
    eigval, eigvec = np.linalg.eigh(corr)
    if eigval.min() < -10.0 * eps:
        raise NotACovarianceError(
            f"matrix has eigenvalue {eigval.min():.3e}, below -10*eps = {-10 * eps:.3e}"
        )
    # Eigenvalues within 1e-12 of the dominant one are numerical zeros of
    # a rank-deficient matrix (e.g. the all-ones static limit); keeping
    # them would leak O(1e-6) noise into the degenerate modes.
    floor = 1e-12 * max(eigval.max(), 0.0)
    eigval = np.where(eigval > floor, eigval, 0.0)
    return eigvec * np.sqrt(eigval)


def sample_gaussian_process(corr: np.ndarray, rng, n: int | None = None) -> np.ndarray:
    """Zero-mean circularly symmetric complex Gaussian vector(s) with
    covariance ``corr`` (real symmetric Toeplitz, unit diagonal).

    ``rng`` is a :class:`numpy.random.Generator` or a seed.  Returns a
    length-K vector, or a (K, n) array when ``n`` is given.
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise InvalidDimensionError("correlation matrix must be square")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-8):
        raise NotACovarianceError("correlation matrix must have unit diagonal")
    factor = gaussian_factor(corr)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    k = corr.shape[0]
    m = 1 if n is None else int(n)
    z = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2.0)
    out = factor @ z
    return out[:, 0] if n is None else out
