"""Block precoding of the K x M data grid.

A scheme is a pair ``(T_c, T_r)`` applied as ``Delta = T_c @ D @ T_r``. The
four DFT presets choose which grid axis carries frequency-domain data:

====  ============  ============
name  T_c           T_r
====  ============  ============
FT    W_K^H         I_M   (standard GFDM)
TT    I_K           I_M
FF    W_K^H         W_M^H
TF    I_K           W_M^H
====  ============  ============

``W_n`` is the unnormalized DFT matrix, so ``W_n^H`` has inverse ``W_n / n``.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidArgument, SingularMatrixError, UnsupportedSizeError
from .numerics import as_matrix, dft_matrix

COND_LIMIT = 1e10


class Domain(str, Enum):
    FT = "FT"
    TT = "TT"
    FF = "FF"
    TF = "TF"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class PrecodingScheme:
    domain: Domain
    T_c: np.ndarray
    T_r: np.ndarray
    S_c: np.ndarray
    S_r: np.ndarray

    @property
    def K(self):
        return self.T_c.shape[0]

    @property
    def M(self):
        return self.T_r.shape[0]


def _idft_matrix(n):
    # (W_n^H, its inverse W_n / n)
    W = dft_matrix(n)
    return W.conj().T, W / n


def domain_scheme(domain, K, M):
    domain = Domain(domain)
    if domain is Domain.CUSTOM:
        raise InvalidArgument("use custom_scheme() for custom precoders")
    if K < 1 or M < 1:
        raise InvalidArgument(f"K and M must be >= 1, got K={K}, M={M}")
    if domain in (Domain.FT, Domain.FF):
        T_c, S_c = _idft_matrix(K)
    else:
        T_c = S_c = np.eye(K, dtype=complex)
    if domain in (Domain.FF, Domain.TF):
        T_r, S_r = _idft_matrix(M)
    else:
        T_r = S_r = np.eye(M, dtype=complex)
    return PrecodingScheme(domain, T_c, T_r, S_c, S_r)


def custom_scheme(T_c, T_r):
    """Scheme from arbitrary square invertible factors (Walsh-Hadamard, DCT, ...)."""
    T_c = as_matrix(T_c, "T_c")
    T_r = as_matrix(T_r, "T_r")
    for name, T in (("T_c", T_c), ("T_r", T_r)):
        if T.shape[0] != T.shape[1]:
            raise InvalidArgument(f"{name} must be square, got {T.shape}")
        cond = np.linalg.cond(T)
        if not cond < COND_LIMIT:
            raise SingularMatrixError(f"{name} is not invertible (cond={cond:.3g})", cond=cond)
    return PrecodingScheme(Domain.CUSTOM, T_c, T_r, np.linalg.inv(T_c), np.linalg.inv(T_r))


def _check_shape(D, s):
    D = np.asarray(D, dtype=complex)
    if D.shape[-2:] != (s.K, s.M):
        raise InvalidArgument(f"grid shape {D.shape[-2:]} does not match scheme {(s.K, s.M)}")
    return D


def _sandwich(left, D, right):
    # left @ D @ right for a batch of grids, as two flat matrix products
    K, M = D.shape[-2:]
    batch = D.shape[:-2]
    rows = D.reshape(-1, M) @ right  # [(b, k), m]
    cols = left @ np.moveaxis(rows.reshape((-1, K, M)), 0, 1).reshape(K, -1)  # [k, (b, m)]
    return np.moveaxis(cols.reshape(K, -1, M), 1, 0).reshape(batch + (K, M))


def encode(D, s):
    return _sandwich(s.T_c, _check_shape(D, s), s.T_r)


def decode(delta, s):
    return _sandwich(s.S_c, _check_shape(delta, s), s.S_r)


def general_matrix(s):
    """N x N precoder ``T_r^T kron T_c`` acting on ``vec(D)``."""
    return np.kron(s.T_r.T, s.T_c)


def _log2_exact(n, what):
    if n < 1 or n & (n - 1):
        raise UnsupportedSizeError(f"{what}={n} is not a power of two; the n*log2(n) count does not apply")
    return n.bit_length() - 1


def precoding_mults(domain, K, M):
    """Complex multiplications spent on precoding, counting n*log2(n) per n-point FFT."""
    domain = Domain(domain)
    if domain is Domain.TT:
        return 0
    if domain is Domain.CUSTOM:
        raise InvalidArgument("no closed-form count for custom schemes")
    total = 0
    if domain in (Domain.FT, Domain.FF):
        total += M * K * _log2_exact(K, "K")
    if domain in (Domain.FF, Domain.TF):
        total += K * M * _log2_exact(M, "M")
    return total


def dense_precoding_mults(s):
    """Multiplications of a plain matrix-product precoder, ignoring trivial factors."""
    total = 0
    if not np.array_equal(s.T_c, np.eye(s.K)):
        total += s.K * s.K * s.M
    if not np.array_equal(s.T_r, np.eye(s.M)):
        total += s.K * s.M * s.M
    return total
