"""GFDM modulation and demodulation.

Three equivalent modulator/demodulator pairs live here:

* ``*_ref``: the dense N x N modulation matrix ``A``. O(N^2); kept as the
  correctness oracle and for small experiments.
* ``*_fd``: circular convolution carried out with N-point DFTs, one pass per
  subcarrier.
* ``*_td``: element-wise multiplication in the time domain, one pass per
  subsymbol, with a K-point (I)DFT per subsymbol.

``core_transmit`` / ``core_receive`` are the transform-free halves of the
time-domain path; any precoding (including the K-point (I)DFT of standard
GFDM) is applied outside them.

Grids are K x M arrays (rows are subcarriers, columns subsymbols). All
functions accept extra leading batch axes on grids and sample vectors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .numerics import as_vector


def _taps(g):
    return as_vector(getattr(g, "taps", g), "filter taps")


@dataclass(frozen=True)
class GfdmParams:
    K: int
    M: int
    active_subcarriers: tuple = None
    active_subsymbols: tuple = None

    def __post_init__(self):
        if int(self.K) < 1 or int(self.M) < 1:
            raise InvalidArgument(f"K and M must be >= 1, got K={self.K}, M={self.M}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "M", int(self.M))
        for name, size in (("active_subcarriers", self.K), ("active_subsymbols", self.M)):
            val = getattr(self, name)
            val = tuple(range(size)) if val is None else tuple(sorted({int(i) for i in val}))
            if not val:
                raise InvalidArgument(f"{name} must be non-empty")
            if val[0] < 0 or val[-1] >= size:
                raise InvalidArgument(f"{name} out of range 0..{size - 1}")
            object.__setattr__(self, name, val)

    @property
    def N(self):
        return self.K * self.M

    @property
    def shape(self):
        return (self.K, self.M)

    @property
    def mask(self):
        """Boolean K x M array marking the active resources."""
        m = np.zeros(self.shape, dtype=bool)
        m[np.ix_(self.active_subcarriers, self.active_subsymbols)] = True
        return m

    @property
    def n_active(self):
        return len(self.active_subcarriers) * len(self.active_subsymbols)

    def make_grid(self, symbols):
        """Place ``n_active`` symbols (per block) on the active resources.

        Symbols fill the grid in column-stacking order restricted to the
        active set; inactive entries are exactly zero.
        """
        symbols = np.asarray(symbols, dtype=complex)
        if symbols.shape[-1] != self.n_active:
            raise InvalidArgument(
                f"expected {self.n_active} symbols per block, got {symbols.shape[-1]}")
        batch = symbols.shape[:-1]
        D = np.zeros(batch + (self.M, self.K), dtype=complex)
        D[..., self.mask.T] = symbols
        return np.swapaxes(D, -1, -2)

    def extract(self, D):
        """Inverse of :meth:`make_grid`."""
        D = np.asarray(D)
        return np.swapaxes(D, -1, -2)[..., self.mask.T]


def _check_grid(D, N):
    D = np.asarray(D, dtype=complex)
    if D.ndim < 2 or D.shape[-1] * D.shape[-2] != N:
        raise InvalidArgument(f"grid shape {D.shape} does not match filter length {N}")
    return D


def _check_signal(y, N):
    y = as_vector(y, "y")
    if y.shape[-1] != N:
        raise InvalidArgument(f"signal length {y.shape[-1]} does not match N={N}")
    return y


def build_mod_matrix(p, g):
    """Dense modulation matrix; column ``k + m*K`` is ``roll(g, m*K) * exp(2j*pi*k*n/K)``."""
    K, M, N = p.K, p.M, p.N
    g = _taps(g)
    if g.shape != (N,):
        raise InvalidArgument(f"filter length {g.shape[-1]} does not match N={N}")
    n = np.arange(N)
    k = np.arange(K)
    carriers = np.exp(2j * np.pi * np.outer(n, k) / K)  # N x K
    shifted = np.stack([np.roll(g, m * K) for m in range(M)], axis=1)  # N x M
    A = carriers[:, :, None] * shifted[:, None, :]  # N x K x M
    return A.reshape(N, N, order="F")


def modulate_ref(D, A):
    D = _check_grid(D, A.shape[0])
    d = np.swapaxes(D, -1, -2).reshape(D.shape[:-2] + (-1,))
    return d @ A.T


def demodulate_ref(y, A_rx, shape):
    """Dense demodulation ``A_rx^H y`` where ``A_rx`` is built from the receive filter."""
    y = _check_signal(y, A_rx.shape[0])
    d = y @ A_rx.conj()
    K, M = shape
    return np.swapaxes(d.reshape(d.shape[:-1] + (M, K)), -1, -2)


def modulate_fd(D, g):
    g = _taps(g)
    N = g.shape[-1]
    D = _check_grid(D, N)
    K, M = D.shape[-2:]
    G = np.fft.fft(g)
    Dm = np.tile(np.fft.fft(D, axis=-1), (1,) * (D.ndim - 1) + (K,))  # ... x K x N
    X = np.zeros(D.shape[:-2] + (N,), dtype=complex)
    for k in range(K):
        X += np.roll(G, k * M) * Dm[..., k, :]
    return np.fft.ifft(X, axis=-1)


def demodulate_fd(y, gamma, K, M):
    """Frequency-domain demodulation; one N-bin product and M-fold sum per subcarrier."""
    gamma = _taps(gamma)
    N = gamma.shape[-1]
    if K * M != N:
        raise InvalidArgument(f"K*M={K * M} does not match filter length {N}")
    y = _check_signal(y, N)
    Y = np.fft.fft(y, axis=-1)
    Gc = np.conj(np.fft.fft(gamma))
    out = np.empty(y.shape[:-1] + (K, M), dtype=complex)
    for k in range(K):
        Z = Gc * np.roll(Y, -k * M, axis=-1)
        folded = Z.reshape(Z.shape[:-1] + (K, M)).sum(axis=-2)
        # sampling the N-point inverse at n = mK is an M-point inverse scaled by 1/K
        out[..., k, :] = np.fft.ifft(folded, axis=-1) / K
    return out


def _shift_table(M):
    q = np.arange(M)
    return (q[:, None] - q[None, :]) % M  # [q, m] -> (q - m) mod M


class MultCounter:
    """Tally of complex multiplications performed by the core kernels."""

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)


def core_transmit(delta, g, counter=None):
    """Pulse-shape and sum the coefficient columns, ``sum_m roll(g, mK) * tile(delta[:, m], M)``.

    Written per residue ``r = n mod K``: sample ``qK + r`` of the output is
    ``sum_m g[((q - m) mod M) K + r] * delta[r, m]``, i.e. one length-N
    element-wise product for every subsymbol.
    """
    g = _taps(g)
    N = g.shape[-1]
    delta = _check_grid(delta, N)
    K, M = delta.shape[-2:]
    gp = g.reshape(M, K)[_shift_table(M)].transpose(2, 0, 1)  # [r, q, m]
    batch = delta.shape[:-2]
    if counter is not None:
        counter.add(gp.size * int(np.prod(batch, dtype=int)))
    # one (M x M) @ (M x batch) product per residue r
    cols = np.moveaxis(delta.reshape((-1, K, M)), 0, -1)  # [r, m, b]
    x = np.moveaxis(gp @ cols, -1, 0)  # [b, r, q]
    return np.swapaxes(x, -1, -2).reshape(batch + (N,))


def core_receive(y, gamma, K, M, counter=None):
    """Windowed M-fold accumulation per subsymbol.

    Column m of the result is ``fold_accumulate(conj(roll(gamma, mK)) * y, M)``.
    """
    gamma = _taps(gamma)
    N = gamma.shape[-1]
    if K * M != N:
        raise InvalidArgument(f"K*M={K * M} does not match filter length {N}")
    y = _check_signal(y, N)
    gp = np.conj(gamma).reshape(M, K)[_shift_table(M)].transpose(2, 1, 0)  # [r, m, q]
    batch = y.shape[:-1]
    if counter is not None:
        counter.add(gp.size * int(np.prod(batch, dtype=int)))
    cols = np.moveaxis(y.reshape((-1, M, K)), 0, -1).swapaxes(0, 1)  # [r, q, b]
    out = np.moveaxis(gp @ cols, -1, 0)  # [b, r, m]
    return out.reshape(batch + (K, M))


def modulate_td(D, g, counter=None):
    D = np.asarray(D, dtype=complex)
    K = D.shape[-2]
    # W_K^H applied to every column
    delta = K * np.fft.ifft(D, axis=-2)
    return core_transmit(delta, g, counter)


def demodulate_td(y, gamma, K, M, counter=None):
    return np.fft.fft(core_receive(y, gamma, K, M, counter), axis=-2)


def polyphase_spectrum(g, K, M):
    """M-point DFT of every polyphase component ``g[r::K]`` (M x K).

    The modulation matrix is, up to a row/column permutation, block diagonal
    with K circulant M x M blocks whose first columns are ``g[r::K]``, so its
    singular values are ``sqrt(K) * |polyphase_spectrum|``.
    """
    g = _taps(g)
    return np.fft.fft(g.reshape(M, K), axis=0)


def mod_matrix_cond(g, K, M):
    """Exact 2-norm condition number of the modulation matrix without an SVD."""
    s = np.abs(polyphase_spectrum(g, K, M))
    smin = s.min()
    return np.inf if smin == 0 else float(s.max() / smin)
