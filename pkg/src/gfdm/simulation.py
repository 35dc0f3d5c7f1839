"""Link-level Monte-Carlo harness.

Transmit chain: bits -> symbols -> grid -> encode -> core_transmit -> add_cp.
Receive chain: remove_cp -> fde -> core_receive -> decode -> demap.
Equalization always runs before demodulation, so the demodulator only sees a
flat effective channel.

SNR is Es/N0 per transmitted data symbol. Es is the mean energy that one
unit-energy constellation point puts on air through the precoder and the
unit-energy prototype filter (1 for standard GFDM). Noise is added after the
channel filter.
"""

from dataclasses import dataclass, field
from enum import Enum
from math import erfc, sqrt

import numpy as np

from .errors import InvalidArgument, SpectralNullError
from .filters import RxMode, make_receiver
from .modem import core_receive, core_transmit
from .precoding import decode, encode

# seed-stream purposes; the per-frame generator is SeedSequence([seed, purpose, snr_index, frame])
STREAM_SER = 1
STREAM_PSD = 2
STREAM_PAPR = 3


class Constellation(str, Enum):
    QPSK = "QPSK"
    QAM16 = "QAM16"


# Gray-coded levels per axis; the first bit picks the sign (0 -> +)
_AXIS_LEVELS = {
    Constellation.QPSK: np.array([1.0, -1.0]),
    Constellation.QAM16: np.array([3.0, 1.0, -3.0, -1.0]),  # 00, 01, 10, 11
}


def bits_per_symbol(constellation):
    return 2 * (len(_AXIS_LEVELS[Constellation(constellation)]).bit_length() - 1)


def constellation_points(constellation):
    """All points, indexed by the integer value of their bit label (MSB first)."""
    c = Constellation(constellation)
    levels = _AXIS_LEVELS[c]
    half = bits_per_symbol(c) // 2
    idx = np.arange(1 << (2 * half))
    pts = levels[idx >> half] + 1j * levels[idx & ((1 << half) - 1)]
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def map_symbols(bits, constellation):
    bits = np.asarray(bits, dtype=np.uint8)
    bps = bits_per_symbol(constellation)
    if bits.shape[-1] % bps:
        raise InvalidArgument(f"bit count {bits.shape[-1]} is not a multiple of {bps}")
    groups = bits.reshape(bits.shape[:-1] + (-1, bps))
    labels = groups @ (1 << np.arange(bps - 1, -1, -1))
    return constellation_points(constellation)[labels]


def demap_symbols(symbols, constellation):
    """Minimum-distance hard decisions back to bits."""
    pts = constellation_points(constellation)
    bps = bits_per_symbol(constellation)
    symbols = np.asarray(symbols)
    labels = np.argmin(np.abs(symbols[..., None] - pts) ** 2, axis=-1)
    bits = (labels[..., None] >> np.arange(bps - 1, -1, -1)) & 1
    return bits.reshape(symbols.shape[:-1] + (-1,)).astype(np.uint8)


def add_cp(x, cp_length):
    x = np.asarray(x)
    if not 0 <= cp_length < x.shape[-1]:
        raise InvalidArgument(f"cp_length must be in [0, {x.shape[-1]}), got {cp_length}")
    if cp_length == 0:
        return x.copy()
    return np.concatenate([x[..., -cp_length:], x], axis=-1)


def remove_cp(y, cp_length):
    y = np.asarray(y)
    if not 0 <= cp_length < y.shape[-1]:
        raise InvalidArgument(f"cp_length must be in [0, {y.shape[-1]}), got {cp_length}")
    return y[..., cp_length:].copy()


@dataclass(frozen=True, eq=False)
class ChannelConfig:
    impulse_response: np.ndarray = field(default_factory=lambda: np.ones(1, dtype=complex))
    cp_length: int = 0
    snr_db: float = float("inf")
    seed: int = 0

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.impulse_response, dtype=complex))
        if h.ndim != 1 or h.size == 0 or not np.any(h):
            raise InvalidArgument("impulse_response must be a non-zero vector")
        if self.cp_length < 0 or self.cp_length < h.size - 1:
            raise InvalidArgument(
                f"cp_length={self.cp_length} is shorter than the channel memory {h.size - 1}")
        object.__setattr__(self, "impulse_response", h)

    @property
    def noise_variance(self):
        """N0 for unit symbol energy."""
        return 10.0 ** (-self.snr_db / 10.0)


def awgn(shape, variance, rng):
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel(x_cp, cfg, rng=None, symbol_energy=1.0):
    """Linear convolution with the channel (tail dropped) plus complex AWGN."""
    x_cp = np.asarray(x_cp, dtype=complex)
    h = cfg.impulse_response
    y = h[0] * x_cp
    for lag in range(1, min(h.size, x_cp.shape[-1])):
        y[..., lag:] += h[lag] * x_cp[..., :-lag]
    if np.isfinite(cfg.snr_db):
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        y = y + awgn(y.shape, symbol_energy * cfg.noise_variance, rng)
    return y


def fde(y, cfg, mode="ZF", noise_variance=None):
    """One-tap frequency-domain equalizer for a CP-stripped block."""
    y = np.asarray(y, dtype=complex)
    N = y.shape[-1]
    if cfg.impulse_response.size > N:
        raise InvalidArgument("channel is longer than the block")
    H = np.fft.fft(cfg.impulse_response, N)
    Y = np.fft.fft(y, axis=-1)
    if RxMode(mode) is RxMode.ZF:
        bad = np.flatnonzero(np.abs(H) < 1e-12)
        if bad.size:
            raise SpectralNullError(
                f"channel has a spectral null at bin {bad[0]}; ZF equalization is undefined",
                bin_index=int(bad[0]))
        X = Y / H
    elif RxMode(mode) is RxMode.MMSE:
        s = cfg.noise_variance if noise_variance is None else noise_variance
        if not np.isfinite(s):
            s = 0.0
        X = Y * np.conj(H) / (np.abs(H) ** 2 + s)
    else:
        raise InvalidArgument(f"unsupported equalizer mode {mode}")
    return np.fft.ifft(X, axis=-1)


def qpsk_ser_theory(snr_db):
    """Exact QPSK SER over AWGN, ``2Q(sqrt(g)) - Q(sqrt(g))^2`` with ``g = Es/N0``."""
    if np.isposinf(snr_db):
        return 0.0
    q = 0.5 * erfc(sqrt(10.0 ** (snr_db / 10.0)) / sqrt(2.0))
    return 2.0 * q - q * q


@dataclass(frozen=True)
class LinkResult:
    snr_db: float
    symbol_errors: int
    symbols_sent: int

    @property
    def ser(self):
        return self.symbol_errors / self.symbols_sent


def symbol_energy(params, g, scheme):
    """Mean transmitted energy per active unit-energy data symbol."""
    basis = np.zeros((params.n_active, params.n_active), dtype=complex)
    np.fill_diagonal(basis, 1.0)
    x = core_transmit(encode(params.make_grid(basis), scheme), g)
    return float(np.mean(np.sum(np.abs(x) ** 2, axis=-1)))


def transmit(D, g, scheme, counter=None):
    return core_transmit(encode(D, scheme), g, counter)


def receive(y, gamma, scheme, counter=None):
    """Coefficient estimation followed by precoding removal.

    Receive windows follow the demodulator normalization, in which the
    K-point DFT after folding is unscaled. With exact-inverse precoding the
    folded coefficients therefore carry a 1/K gain, undone here.
    """
    K, M = scheme.K, scheme.M
    return decode(K * core_receive(y, gamma, K, M, counter), scheme)


def frame_rng(seed, purpose, point, frame):
    return np.random.default_rng(np.random.SeedSequence([int(seed), purpose, point, frame]))


def run_ser(params, g, scheme, rx_mode, channel, snr_list, min_errors=100, max_frames=10000,
            seed=0, constellation="QPSK", fde_mode="ZF", chunk=256):
    """Symbol error rate for each SNR point.

    Every frame draws its bits and noise from its own generator, so results
    depend only on ``seed`` (not on ``chunk``). A point stops at the first
    frame where the cumulative error count reaches ``min_errors``, or after
    ``max_frames`` frames.
    """
    if max_frames < 1:
        raise InvalidArgument("max_frames must be >= 1")
    rx_mode = RxMode(rx_mode)
    bps = bits_per_symbol(constellation)
    n_bits = params.n_active * bps
    es = symbol_energy(params, g, scheme)
    fixed_rx = None if rx_mode is RxMode.MMSE else make_receiver(g, rx_mode)
    results = []
    for point, snr_db in enumerate(snr_list):
        cfg = ChannelConfig(channel.impulse_response, channel.cp_length, snr_db, seed)
        n0 = cfg.noise_variance if np.isfinite(snr_db) else 0.0
        gamma = fixed_rx or make_receiver(g, rx_mode, n0)
        # noise-to-signal power per sample, for the MMSE equalizer
        fde_nsr = n0 * params.N / params.n_active
        errors = sent = 0
        frame = 0
        while frame < max_frames and errors < min_errors:
            count = min(chunk, max_frames - frame)
            rngs = [frame_rng(seed, STREAM_SER, point, frame + i) for i in range(count)]
            bits = np.stack([r.integers(0, 2, n_bits, dtype=np.uint8) for r in rngs])
            D = params.make_grid(map_symbols(bits, constellation))
            tx = add_cp(transmit(D, g, scheme), cfg.cp_length)
            y = apply_channel(tx, ChannelConfig(cfg.impulse_response, cfg.cp_length), symbol_energy=es)
            if np.isfinite(snr_db):
                y = y + np.stack([awgn(y.shape[-1], es * cfg.noise_variance, r) for r in rngs])
            y = fde(remove_cp(y, cfg.cp_length), cfg, fde_mode, fde_nsr)
            rx_bits = demap_symbols(params.extract(receive(y, gamma, scheme)), constellation)
            wrong = np.any(rx_bits.reshape(count, -1, bps) != bits.reshape(count, -1, bps), axis=-1)
            per_frame = np.cumsum(wrong.sum(axis=-1)) + errors
            stop = np.flatnonzero(per_frame >= min_errors)
            used = count if stop.size == 0 else int(stop[0]) + 1
            errors = int(per_frame[used - 1])
            sent += used * params.n_active
            frame += used
        results.append(LinkResult(float(snr_db), errors, sent))
    return results
