"""Complex DFT and index-manipulation kernels shared by every other module.

Conventions used throughout the package:

* ``dft`` is the unnormalized forward transform, ``idft`` carries the 1/N.
  Multiplying by the N-point DFT matrix ``W_N`` is ``dft``; ``W_N^H`` is
  ``N * idft``.
* ``circ_shift(v, s)`` delays: ``out[n] = v[(n - s) mod N]``.
* ``vec`` stacks columns, so a K x M grid is enumerated with the row
  (subcarrier) index running fastest.

Vector functions operate on the last axis and broadcast over any leading
batch axes.
"""

import numpy as np
import scipy.linalg

from .errors import InvalidArgument


def as_vector(v, name="v"):
    """Coerce to a complex ndarray and check it is non-empty and finite."""
    a = np.asarray(v, dtype=complex)
    if a.ndim == 0 or a.shape[-1] == 0:
        raise InvalidArgument(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument(f"{name} contains NaN or Inf")
    return a


def as_matrix(A, name="A"):
    a = np.asarray(A, dtype=complex)
    if a.ndim != 2 or a.size == 0:
        raise InvalidArgument(f"{name} must be a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument(f"{name} contains NaN or Inf")
    return a


def dft(v):
    """Unnormalized DFT, ``V[f] = sum_n v[n] exp(-2j*pi*f*n/N)``.

    Any length is accepted; numpy's pocketfft backend handles non
    power-of-two sizes (odd subsymbol counts) without falling back to O(N^2).
    """
    return np.fft.fft(as_vector(v), axis=-1)


def idft(V):
    """Inverse of :func:`dft`, including the 1/N factor."""
    return np.fft.ifft(as_vector(V, "V"), axis=-1)


def dft_matrix(n):
    """The n x n matrix ``W_n`` with entries ``exp(-2j*pi*f*k/n)``."""
    if n < 1:
        raise InvalidArgument("DFT size must be >= 1")
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n)


def circ_shift(v, s):
    v = as_vector(v)
    return np.roll(v, int(s) % v.shape[-1], axis=-1)


def fold_accumulate(u, M):
    """Sum the M consecutive length-K chunks of ``u`` (N = K*M).

    Every M-th bin of the N-point DFT of ``u`` equals the K-point DFT of the
    result: ``dft(u)[k*M] == dft(fold_accumulate(u, M))[k]``.
    """
    u = as_vector(u, "u")
    N = u.shape[-1]
    if M < 1 or N % M:
        raise InvalidArgument(f"M={M} does not divide the vector length {N}")
    return u.reshape(u.shape[:-1] + (M, N // M)).sum(axis=-2)


def repeat_tile(v, times):
    """Concatenate ``v`` with itself ``times`` times (the ``1 x I`` repetition)."""
    if times < 1:
        raise InvalidArgument(f"times must be >= 1, got {times}")
    v = as_vector(v)
    return np.tile(v, (1,) * (v.ndim - 1) + (times,))


def repetition_matrix(times, n):
    """Dense ``1_{times,1} kron I_n``; ``repetition_matrix(t, n) @ v == repeat_tile(v, t)``."""
    return np.kron(np.ones((times, 1)), np.eye(n))


def kron(A, B):
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def vec(D):
    """Column-stacking vectorization."""
    return as_matrix(D, "D").reshape(-1, order="F")


def unvec(v, rows, cols):
    v = as_vector(v)
    if v.ndim != 1 or rows * cols != v.size:
        raise InvalidArgument(f"cannot reshape {v.size} elements into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def circulant(p):
    """Circulant matrix whose first column is ``p``; column j is ``circ_shift(p, j)``."""
    p = as_vector(p, "p")
    if p.ndim != 1:
        raise InvalidArgument("circulant expects a 1-D vector")
    return scipy.linalg.circulant(p)


def unit_vector(n, k):
    e = np.zeros(n, dtype=complex)
    e[k] = 1.0
    return e
