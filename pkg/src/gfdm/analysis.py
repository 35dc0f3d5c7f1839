"""Complexity accounting, spectral (OOB) and PAPR analysis."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.signal

from .errors import InvalidArgument, UnsupportedSizeError
from .precoding import Domain, encode, precoding_mults
from .modem import core_transmit
from .simulation import STREAM_PSD, bits_per_symbol, frame_rng, map_symbols

OOB_FLOOR_DB = -200.0


class Impl(str, Enum):
    PROPOSED_TD = "proposed_td"
    REFERENCE_FD = "reference_fd"
    OFDM = "ofdm"


def _log2(n, what):
    if n < 1 or n & (n - 1):
        raise UnsupportedSizeError(f"{what}={n} must be a power of two for the n*log2(n) cost model")
    return n.bit_length() - 1


@dataclass(frozen=True)
class ComplexityReport:
    scheme: str
    domain: str
    K: int
    M: int
    L: int
    core_mults: int
    precoding_mults: int
    n_symbols: int = None
    model_note: str = ""

    @property
    def N(self):
        return self.K * self.M

    @property
    def total_mults(self):
        return self.core_mults + self.precoding_mults

    @property
    def per_symbol(self):
        return self.total_mults / (self.n_symbols or self.N)


def pipeline_mults(impl, domain="FT", K=1, M=1, L=2, n_symbols=None):
    """Complex multiplications per block for one modem implementation.

    * ``proposed_td``: one length-N element-wise product per subsymbol
      (``M*N``) plus the precoding cost of ``domain``.
    * ``ofdm``: a single N-point FFT, ``N*log2(N)``; pass ``K=N, M=1``.
    * ``reference_fd``: ``N*log2(N) + L*(N + M*log2(M))``. This is a model
      of the frequency-domain prior-art modem, with L the filter span in
      subcarriers; it is not a measured count.
    """
    impl = Impl(impl)
    K, M = int(K), int(M)
    N = K * M
    if impl is Impl.OFDM:
        return ComplexityReport("ofdm", "-", K, M, 0, N * _log2(N, "N"), 0, n_symbols)
    if not 1 <= L <= K:
        raise InvalidArgument(f"L must lie in [1, K={K}], got {L}")
    if impl is Impl.PROPOSED_TD:
        d = Domain(domain)
        return ComplexityReport(impl.value, d.value, K, M, L, M * N, precoding_mults(d, K, M), n_symbols)
    core = N * _log2(N, "N") + L * (N + M * _log2(M, "M"))
    return ComplexityReport(impl.value, "FT", K, M, L, core, 0, n_symbols,
                            "reconstructed cost model, not a published count")


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    bin_freqs: np.ndarray
    power_db: np.ndarray
    nfft: int
    segments: int


def psd_welch(source, nfft, segments, window="hann", reference=None, block_len=None):
    """Welch PSD of a continuous stream made by concatenating generated blocks.

    ``source(start, count)`` returns ``count`` consecutive blocks as a
    ``(count, N)`` array. Segments of ``nfft`` samples overlap by half.
    Frequencies are normalized and ascending in [-0.5, 0.5).
    The result is scaled so the mean over ``reference`` (a boolean mask
    over bins) is 0 dB; by default the reference is every bin within 3 dB of
    the peak.
    """
    if segments < 8:
        raise InvalidArgument(f"need at least 8 segments, got {segments}")
    if window not in ("rect", "hann"):
        raise InvalidArgument(f"unknown window {window!r}")
    step = nfft // 2
    needed = nfft + (segments - 1) * step
    if block_len is None:
        block_len = source(0, 1).shape[-1]
    if nfft < block_len:
        raise InvalidArgument(f"nfft={nfft} must be >= the block length {block_len}")
    count = -(-needed // block_len)
    stream = source(0, count).reshape(-1)[:needed]
    win = "boxcar" if window == "rect" else "hann"
    f, p = scipy.signal.welch(stream, fs=1.0, window=win, nperseg=nfft, noverlap=nfft - step,
                              detrend=False, return_onesided=False, scaling="density")
    f = np.fft.fftshift(f)
    p = np.fft.fftshift(p)
    if reference is None:
        reference = p >= 0.5 * p.max()
    ref = np.mean(p[reference])
    with np.errstate(divide="ignore"):
        power_db = 10 * np.log10(p / ref)
    power_db = np.maximum(power_db, OOB_FLOOR_DB)
    return PsdEstimate(f, power_db, nfft, segments)


def oob_db(psd, inband, oob):
    """Mean out-of-band power relative to mean in-band power, in dB."""
    inband = np.asarray(inband, dtype=bool)
    oob = np.asarray(oob, dtype=bool)
    if not inband.any() or not oob.any():
        raise InvalidArgument("in-band and out-of-band sets must be non-empty")
    if np.any(inband & oob):
        raise InvalidArgument("in-band and out-of-band sets overlap")
    lin = 10.0 ** (psd.power_db / 10.0)
    num, den = lin[oob].mean(), lin[inband].mean()
    if num <= 0 or den <= 0:
        return OOB_FLOOR_DB
    return max(float(10 * np.log10(num / den)), OOB_FLOOR_DB)


def band_masks(psd, lo_bin, hi_bin, guard_bins, n_bins):
    """In-band and out-of-band masks for an allocation ``[lo_bin, hi_bin]``.

    Bin indices refer to an ``n_bins``-point grid centred on DC (negative
    indices below DC); everything further than ``guard_bins`` from the
    allocation counts as out of band.
    """
    b = psd.bin_freqs * n_bins
    inband = (b >= lo_bin - 0.5) & (b <= hi_bin + 0.5)
    oob = (b < lo_bin - guard_bins - 0.5) | (b > hi_bin + guard_bins + 0.5)
    return inband, oob


def papr(x):
    """Peak-to-average power ratio in dB along the last axis."""
    x = np.asarray(x)
    p = np.abs(x) ** 2
    mean = p.mean(axis=-1)
    if np.any(mean == 0):
        raise InvalidArgument("PAPR of an all-zero signal is undefined")
    return 10 * np.log10(p.max(axis=-1) / mean)


@dataclass(frozen=True, eq=False)
class PaprCcdf:
    thresholds_db: np.ndarray
    exceed_prob: np.ndarray
    blocks: int

    def level_at(self, prob):
        """Smallest threshold whose exceedance probability is at most ``prob``."""
        idx = np.flatnonzero(self.exceed_prob <= prob)
        if idx.size == 0:
            raise InvalidArgument(f"CCDF never drops to {prob} within the threshold grid")
        return float(self.thresholds_db[idx[0]])


def papr_ccdf(source, nblocks, thresholds, chunk=512):
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(np.diff(thresholds) < 0):
        raise InvalidArgument("thresholds must be ascending")
    values = np.concatenate([
        papr(source(start, min(chunk, nblocks - start))) for start in range(0, nblocks, chunk)])
    exceed = (values[:, None] > thresholds[None, :]).mean(axis=0)
    return PaprCcdf(thresholds, exceed, nblocks)


def block_source(params, g, scheme, constellation="QPSK", seed=0, purpose=STREAM_PSD):
    """Deterministic random-data block generator; block i depends only on (seed, purpose, i)."""
    n_bits = params.n_active * bits_per_symbol(constellation)

    def source(start, count):
        bits = np.stack([frame_rng(seed, purpose, 0, start + i).integers(0, 2, n_bits, dtype=np.uint8)
                         for i in range(count)])
        D = params.make_grid(map_symbols(bits, constellation))
        return core_transmit(encode(D, scheme), g)

    return source


def centered_indices(count, size):
    """``count`` contiguous indices centred on 0, taken modulo ``size``."""
    return np.arange(-(count // 2), count - count // 2) % size

