"""Transmit prototype and receive filter synthesis."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidArgument, SingularMatrixError
from .modem import GfdmParams, build_mod_matrix, mod_matrix_cond

COND_LIMIT = 1e10


class FilterKind(str, Enum):
    RC_TIME = "rc_time"
    RRC_TIME = "rrc_time"
    RECT_TD = "rect_td"
    DIRICHLET = "dirichlet"


class RxMode(str, Enum):
    MF = "MF"
    ZF = "ZF"
    MMSE = "MMSE"


@dataclass(frozen=True, eq=False)
class PrototypeFilter:
    kind: FilterKind
    K: int
    M: int
    rolloff: float
    taps: np.ndarray

    @property
    def N(self):
        return self.K * self.M


@dataclass(frozen=True, eq=False)
class ReceiverFilter:
    mode: RxMode
    taps: np.ndarray
    noise_variance: float = 0.0
    cond: float = None


def raised_cosine(t, alpha):
    """Raised-cosine pulse with unit symbol period, evaluated at times ``t``."""
    t = np.asarray(t, dtype=float)
    den = 1.0 - (2.0 * alpha * t) ** 2
    sing = np.isclose(den, 0.0, atol=1e-12)
    safe = np.where(sing, 1.0, den)
    h = np.sinc(t) * np.cos(np.pi * alpha * t) / safe
    if alpha > 0:
        h = np.where(sing, np.pi / 4 * np.sinc(1.0 / (2.0 * alpha)), h)
    return h


def root_raised_cosine(t, alpha):
    """Root-raised-cosine pulse with unit symbol period."""
    t = np.asarray(t, dtype=float)
    if alpha == 0:
        return np.sinc(t)
    h = np.empty_like(t)
    at_zero = np.isclose(t, 0.0, atol=1e-12)
    at_sing = np.isclose(np.abs(t), 1.0 / (4.0 * alpha), atol=1e-12)
    rest = ~(at_zero | at_sing)
    tr = t[rest]
    h[rest] = (np.sin(np.pi * tr * (1 - alpha)) + 4 * alpha * tr * np.cos(np.pi * tr * (1 + alpha))) / (
        np.pi * tr * (1 - (4 * alpha * tr) ** 2))
    h[at_zero] = 1.0 - alpha + 4.0 * alpha / np.pi
    h[at_sing] = alpha / np.sqrt(2) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * alpha)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * alpha)))
    return h


def _centered_times(K, M):
    # sample n holds the pulse at n - N//2 after rotating the peak to index 0
    N = K * M
    n = np.arange(N)
    return ((n + N // 2) % N - N // 2) / K


def dirichlet_bins(K, M):
    """The M contiguous DFT bins (mod N) centred on DC."""
    N = K * M
    return np.arange(-(M // 2), (M + 1) // 2) % N


def make_prototype(kind, K, M, rolloff=0.0):
    kind = FilterKind(kind)
    K, M = int(K), int(M)
    if K < 1 or M < 1:
        raise InvalidArgument(f"K and M must be >= 1, got K={K}, M={M}")
    rolloff = float(rolloff)
    if not 0.0 <= rolloff <= 1.0:
        raise InvalidArgument(f"rolloff must lie in [0, 1], got {rolloff}")
    N = K * M
    if kind is FilterKind.RC_TIME:
        taps = raised_cosine(_centered_times(K, M), rolloff).astype(complex)
    elif kind is FilterKind.RRC_TIME:
        taps = root_raised_cosine(_centered_times(K, M), rolloff).astype(complex)
    elif kind is FilterKind.RECT_TD:
        taps = np.zeros(N, dtype=complex)
        taps[:K] = 1.0
    else:
        G = np.zeros(N, dtype=complex)
        G[dirichlet_bins(K, M)] = 1.0
        taps = np.fft.ifft(G)
    taps = taps / np.linalg.norm(taps)
    taps.setflags(write=False)
    return PrototypeFilter(kind, K, M, rolloff, taps)


def make_receiver(g, mode, noise_variance=0.0):
    """Receive window for the MF, ZF or MMSE demodulator.

    ZF and MMSE windows are taken from the first row of the dense receiver
    matrix (``A^-1`` or ``A^H (A A^H + s I)^-1``). Both matrices keep the
    time-frequency shift structure of ``A``, so that single row determines
    the whole receiver.
    """
    mode = RxMode(mode)
    noise_variance = float(noise_variance)
    if noise_variance < 0:
        raise InvalidArgument(f"noise_variance must be >= 0, got {noise_variance}")
    if mode is RxMode.MF:
        return ReceiverFilter(mode, g.taps)

    cond = mod_matrix_cond(g.taps, g.K, g.M)
    A = build_mod_matrix(GfdmParams(g.K, g.M), g)
    if mode is RxMode.ZF:
        if not cond < COND_LIMIT:
            raise SingularMatrixError(
                f"modulation matrix is singular for ZF (cond={cond:.3g})", cond=cond)
        # row 0 of A^-1, conjugated
        e0 = np.zeros(g.N, dtype=complex)
        e0[0] = 1.0
        taps = np.conj(np.linalg.solve(A.T, e0))
    else:
        R = A @ A.conj().T + noise_variance * np.eye(g.N)
        taps = np.linalg.solve(R, A[:, 0])
    taps.setflags(write=False)
    return ReceiverFilter(mode, taps, noise_variance, cond)
