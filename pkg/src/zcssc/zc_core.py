"""
Prime-length Zadoff-Chu sequences and all-shift circular correlation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError

# below this length the O(P^2) circulant product beats the FFT round trip
DIRECT_THRESHOLD = 64

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@lru_cache(maxsize=65536)
def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def largest_prime_leq(m: int) -> int:
    if m < 2:
        raise ParameterError(f"no prime <= {m}")
    while not is_prime(m):
        m -= 1
    return m


@dataclass(frozen=True)
class ZcRoot:
    P: int
    r: int

    def __post_init__(self):
        if not is_prime(self.P):
            raise ParameterError(f"ZC length {self.P} is not prime")
        if not 1 <= self.r <= self.P - 1:
            raise ParameterError(f"root {self.r} outside [1, {self.P - 1}]")


@lru_cache(maxsize=4096)
def _zc(P: int, r: int) -> np.ndarray:
    k = np.arange(P, dtype=np.int64)
    # reduce the phase numerator mod 2P before scaling to keep it exact for large P
    num = (r * (k * (k + 1))) % (2 * P)
    seq = np.exp(-1j * np.pi * num / P)
    seq.flags.writeable = False
    return seq


def zc_sequence(root: ZcRoot) -> np.ndarray:
    """
    Zadoff-Chu sequence ``exp(-j*pi*r*k*(k+1)/P)``, k = 0..P-1.

    The returned array is shared and read-only.
    """
    return _zc(root.P, root.r)


def cyclic_shift(seq: np.ndarray, s: int) -> np.ndarray:
    """Return ``out[k] = seq[(k + s) mod P]``."""
    seq = np.asarray(seq)
    P = seq.shape[-1]
    if not 0 <= s < P:
        raise ParameterError(f"shift {s} outside [0, {P})")
    return np.roll(seq, -s, axis=-1)


@lru_cache(maxsize=4096)
def _reference_spectrum(P: int, r: int) -> np.ndarray:
    spec = np.fft.fft(np.conj(_zc(P, r)))
    spec.flags.writeable = False
    return spec


def _fft_correlate(received: np.ndarray, ref_spectra: np.ndarray) -> np.ndarray:
    # with w = conj(z): sum_k y[k] w[k+s] = IFFT(W(f) * Y(-f)), Y(-f) = conj(FFT(conj y)(f))
    return np.fft.ifft(ref_spectra * np.conj(np.fft.fft(np.conj(received), axis=-1)), axis=-1)


@lru_cache(maxsize=1024)
def _shift_matrix(P: int, r: int) -> np.ndarray:
    idx = (np.arange(P)[:, None] + np.arange(P)[None, :]) % P  # [s, k]
    mat = np.conj(_zc(P, r)[idx])
    mat.flags.writeable = False
    return mat


def correlate_direct(received: np.ndarray, root: ZcRoot) -> np.ndarray:
    """O(P^2) reference: ``out[s] = sum_k y[k] * conj(z_r((k+s) mod P))``."""
    received = np.asarray(received, dtype=complex)
    if received.shape != (root.P,):
        raise ParameterError(f"received length {received.shape} != ({root.P},)")
    return _shift_matrix(root.P, root.r) @ received


def correlate_all_shifts(received: np.ndarray, root: ZcRoot) -> np.ndarray:
    """
    Correlate ``received`` against every cyclic shift of one ZC root.

    Parameters
    ----------
    received : complex array, length P
    root : ZcRoot

    Returns
    -------
    out : complex array, length P
        ``out[s] = sum_k received[k] * conj(z_r((k + s) mod P))``
    """
    received = np.asarray(received, dtype=complex)
    if received.shape != (root.P,):
        raise ParameterError(f"received length {received.shape} != ({root.P},)")
    if root.P <= DIRECT_THRESHOLD:
        return _shift_matrix(root.P, root.r) @ received
    return _fft_correlate(received, _reference_spectrum(root.P, root.r))


def correlate_roots(received: np.ndarray, P: int, roots) -> np.ndarray:
    """All-shift correlations of one vector against several roots; row i belongs to ``roots[i]``."""
    received = np.asarray(received, dtype=complex)
    if received.shape != (P,):
        raise ParameterError(f"received length {received.shape} != ({P},)")
    refs = np.stack([_reference_spectrum(P, int(r)) for r in roots])
    return _fft_correlate(received[None, :], refs)


def correlate_batch(received: np.ndarray, P: int, roots) -> np.ndarray:
    """Row-wise all-shift correlation: row i of ``received`` against ``roots[i]``."""
    received = np.asarray(received, dtype=complex)
    if received.ndim != 2 or received.shape[1] != P or received.shape[0] != len(roots):
        raise ParameterError(f"received shape {received.shape} does not match {len(roots)} roots of length {P}")
    refs = np.stack([_reference_spectrum(P, int(r)) for r in roots])
    return _fft_correlate(received, refs)
