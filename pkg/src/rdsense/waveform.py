"""Zadoff-Chu probing sequence and circular-correlation range profiles.

Scaling convention (fixed throughout the package): with reference sequence
``x`` of length N and receive block ``rx``,

    bins[d] = (1/N) * sum_n rx[n] * conj(x[(n - d) mod N])

computed in the frequency domain. Because |X[f]|^2 = N for a Zadoff-Chu
sequence, a unit-amplitude echo at integer delay d gives |bins[d]| = 1, and
energy satisfies N * sum|bins|^2 = sum|rx|^2.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft
from sklearn.base import BaseEstimator, TransformerMixin


def zadoff_chu(length: int, root: int) -> np.ndarray:
    """Generate a unit-magnitude Zadoff-Chu sequence.

    Even length: x[n] = exp(-j pi root n^2 / length).
    Odd length:  x[n] = exp(-j pi root n (n+1) / length).
    """
    if length < 2:
        raise ValueError(f"length must be >= 2, got {length}")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root={root} not coprime with length={length}")
    n = np.arange(length, dtype=np.int64)
    if length % 2 == 0:
        num = root * n * n
    else:
        num = root * n * (n + 1)
    # reduce the integer numerator mod 2*length before going to float so
    # the phase stays exact for large n
    phase = -np.pi * (num % (2 * length)) / length
    return np.exp(1j * phase)


def range_profile(rx: np.ndarray, reference: np.ndarray, workers: int | None = None) -> np.ndarray:
    """Circular cross-correlation of ``rx`` against ``reference``.

    Accepts a single block (N,) or a stack (P, N); correlates along the last
    axis. Output has the same shape; bin d holds the correlation at lag d
    under the module-level scaling convention.
    """
    rx = np.asarray(rx)
    reference = np.asarray(reference)
    n = reference.shape[-1]
    if rx.shape[-1] != n:
        raise ValueError(f"rx length {rx.shape[-1]} != reference length {n}")
    ref_fft_conj = np.conj(sfft.fft(reference))
    spec = sfft.fft(rx, axis=-1, workers=workers)
    return sfft.ifft(spec * ref_fft_conj, axis=-1, workers=workers) / n


class RangeCorrelator(TransformerMixin, BaseEstimator):
    """Stateless transformer turning receive blocks into range profiles.

    The conjugate reference spectrum is cached at construction so that
    per-frame work is two batched FFTs.
    """

    def __init__(self, reference: np.ndarray, workers: int = -1):
        self.reference = np.asarray(reference)
        self.workers = workers
        self._n = self.reference.shape[-1]
        # 1/N output scaling folded into the cached reference spectrum
        self._ref_fft_conj = np.conj(sfft.fft(self.reference)) / self._n
        self._ref_fft_conj32 = self._ref_fft_conj.astype(np.complex64)

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        if X.shape[-1] != self._n:
            raise ValueError(f"block length {X.shape[-1]} != reference length {self._n}")
        # stay in the input precision: single-precision blocks get the
        # single-precision reference spectrum
        ref = self._ref_fft_conj32 if X.dtype == np.complex64 else self._ref_fft_conj
        spec = sfft.fft(X, axis=-1, workers=self.workers)
        spec *= ref
        return sfft.ifft(spec, axis=-1, workers=self.workers, overwrite_x=True)
