"""Discrete time-frequency analysis on C^M.

Conventions used throughout the package:

* Vectors are functions on Z_M; all index arithmetic is cyclic (mod M).
* Inner products are conjugate-linear in the **second** argument,
  ``<u, v> = sum_m u(m) * conj(v(m))``.
* The forward DFT is unnormalized, ``F x(l) = sum_m x(m) e^{-2 pi i m l / M}``
  (numpy's convention); the inverse carries the 1/M factor.
* The time-frequency shift applies translation first, then modulation.
  The opposite order differs by a unimodular factor and would silently
  corrupt every relative phase downstream, so it is fixed here once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .validation import check_rng, check_signal

__all__ = [
    "translate",
    "modulate",
    "time_freq_shift",
    "dft",
    "idft",
    "inner",
    "Lattice",
    "GaborFrame",
    "stft_coefficients",
    "sample_window_uniform_sphere",
    "sample_window_gaussian",
    "least_squares_reconstruct",
    "full_spark_check",
    "RankDeficientFrameError",
]

WINDOW_ENTRY_FLOOR = 1e-12


class RankDeficientFrameError(ValueError):
    """The selected frame vectors do not span C^M."""


def translate(x, k: int) -> np.ndarray:
    """Cyclic time shift: output(m) = x(m - k mod M)."""
    x = np.asarray(x)
    return np.roll(x, k % x.shape[0])


def modulate(x, l: int) -> np.ndarray:
    """Frequency shift: pointwise multiplication by e^{2 pi i l m / M}."""
    x = np.asarray(x)
    M = x.shape[0]
    return x * np.exp(2j * np.pi * (l % M) * np.arange(M) / M)


def time_freq_shift(x, shift) -> np.ndarray:
    """Apply translation by k then modulation by l, shift = (k, l)."""
    k, l = shift
    return modulate(translate(x, k), l)


def dft(x) -> np.ndarray:
    """Unnormalized forward DFT."""
    return np.fft.fft(np.asarray(x, dtype=np.complex128))


def idft(x) -> np.ndarray:
    """Inverse DFT with the 1/M factor, so idft(dft(x)) == x."""
    return np.fft.ifft(np.asarray(x, dtype=np.complex128))


def inner(u, v) -> complex:
    """<u, v> with conjugation on the second argument."""
    return complex(np.vdot(np.asarray(v), np.asarray(u)))


@dataclass(frozen=True)
class Lattice:
    """A time-frequency lattice F x Z_M with a fixed enumeration order.

    Points are enumerated by the position of the time shift in
    ``time_shifts`` first, then by frequency shift, so the point
    ``(time_shifts[p], l)`` has flat index ``p * M + l``.
    """

    time_shifts: tuple
    M: int

    def __post_init__(self):
        shifts = tuple(int(k) % self.M for k in self.time_shifts)
        if len(set(shifts)) != len(shifts):
            raise ValueError(f"time shifts must be distinct mod M, got {shifts}")
        if self.M < 2:
            raise ValueError("M must be at least 2")
        object.__setattr__(self, "time_shifts", shifts)

    @classmethod
    def evenly_spaced(cls, M: int, count: int) -> "Lattice":
        """Lattice with ``count`` evenly spread time shifts (subgroup when count | M)."""
        if not 1 <= count <= M:
            raise ValueError(f"need 1 <= count <= M, got count={count}, M={M}")
        return cls(tuple(k * M // count for k in range(count)), M)

    @property
    def K(self) -> int:
        return len(self.time_shifts)

    def __len__(self) -> int:
        return self.K * self.M

    def labels(self) -> np.ndarray:
        """(|lattice|, 2) array of (k, l) pairs in enumeration order."""
        out = np.empty((len(self), 2), dtype=np.int64)
        for p, k in enumerate(self.time_shifts):
            out[p * self.M : (p + 1) * self.M, 0] = k
            out[p * self.M : (p + 1) * self.M, 1] = np.arange(self.M)
        return out

    def index(self, k: int, l: int) -> int:
        return self.time_shifts.index(k % self.M) * self.M + (l % self.M)


@dataclass(frozen=True, eq=False)
class GaborFrame:
    """Time-frequency shifts of a window over a lattice.

    The frame vector at lattice point (k, l) is exactly
    ``modulate(translate(window, k), l)``.
    """

    window: np.ndarray
    lattice: Lattice
    _shifted_windows: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.window, dtype=np.complex128).copy()
        if g.ndim != 1 or g.shape[0] != self.lattice.M:
            raise ValueError("window length must equal the lattice dimension M")
        if not np.any(g):
            raise ValueError("window must be nonzero")
        g.setflags(write=False)
        object.__setattr__(self, "window", g)
        shifted = np.stack([np.roll(g, k) for k in self.lattice.time_shifts])
        shifted.setflags(write=False)
        object.__setattr__(self, "_shifted_windows", shifted)

    @property
    def M(self) -> int:
        return self.lattice.M

    def vector(self, shift) -> np.ndarray:
        return time_freq_shift(self.window, shift)

    def shifted_window(self, position: int) -> np.ndarray:
        """T_k window for the lattice's position-th time shift."""
        return self._shifted_windows[position]

    def synthesis_matrix(self, indices=None) -> np.ndarray:
        """M x n matrix whose columns are the frame vectors.

        ``indices`` selects a subset of lattice points (flat indices,
        enumeration order); None takes the whole lattice.
        """
        M = self.M
        harmonics = np.exp(2j * np.pi * np.outer(np.arange(M), np.arange(M)) / M)
        blocks = [harmonics * w[:, None] for w in self._shifted_windows]
        full = np.concatenate(blocks, axis=1)
        if indices is None:
            return full
        return full[:, np.asarray(indices, dtype=np.intp)]


def stft_coefficients(x, frame: GaborFrame) -> np.ndarray:
    """All frame coefficients <x, pi(k,l) g> over the lattice, via the FFT.

    For each time shift k the coefficients over l are the DFT of the
    signal multiplied by the conjugated shifted window.
    """
    x = check_signal(x, frame.M)
    masked = x[None, :] * np.conj(frame._shifted_windows)
    return np.fft.fft(masked, axis=1).reshape(-1)


def sample_window_uniform_sphere(M: int, rng=None, max_tries: int = 64) -> np.ndarray:
    """Draw a window uniformly from the complex unit sphere in C^M.

    Normalizes a vector of i.i.d. complex Gaussian entries.  Re-draws if the
    norm underflows or any entry is below the floor needed for mask division
    in the measurement stage (both probability ~0 events).
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    rng = check_rng(rng)
    for _ in range(max_tries):
        h = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        norm = np.linalg.norm(h)
        if norm < 1e-150:
            continue
        g = h / norm
        if np.min(np.abs(g)) >= WINDOW_ENTRY_FLOOR:
            return g
    raise RuntimeError(f"failed to draw a usable window in {max_tries} tries")


def sample_window_gaussian(M: int, rng=None, max_tries: int = 64) -> np.ndarray:
    """Draw a window with i.i.d. standard complex Gaussian entries.

    Unlike the sphere draw this keeps the natural O(sqrt(M)) norm; the same
    near-zero-entry guard applies.
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    rng = check_rng(rng)
    for _ in range(max_tries):
        g = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / np.sqrt(2.0)
        if np.min(np.abs(g)) >= WINDOW_ENTRY_FLOOR:
            return g
    raise RuntimeError(f"failed to draw a usable window in {max_tries} tries")


def least_squares_reconstruct(frame: GaborFrame, coefficients, indices=None) -> np.ndarray:
    """Recover the signal whose frame coefficients best match ``coefficients``.

    Solves ``min_x || Phi^* x - c ||_2`` over the selected frame subset with a
    numerically stable least-squares solve (no explicit Gram inverse); this is
    the canonical dual-frame reconstruction when the subset spans C^M.

    Raises RankDeficientFrameError when the subset does not span.
    """
    c = np.asarray(coefficients, dtype=np.complex128)
    analysis = frame.synthesis_matrix(indices).conj().T
    if analysis.shape[0] != c.shape[0]:
        raise ValueError(
            f"got {c.shape[0]} coefficients for {analysis.shape[0]} frame vectors"
        )
    if analysis.shape[0] < frame.M:
        raise RankDeficientFrameError(
            f"need at least M={frame.M} frame vectors, got {analysis.shape[0]}"
        )
    solution, _, rank, _ = np.linalg.lstsq(analysis, c, rcond=None)
    if rank < frame.M:
        raise RankDeficientFrameError(
            f"analysis matrix has rank {rank} < M={frame.M}"
        )
    return solution


def full_spark_check(frame: GaborFrame, tol: float = 1e-10, max_subsets: int = 10**6) -> bool:
    """True iff every M-subset of frame vectors is linearly independent.

    Singularity is judged scale-free: |det| must exceed ``tol`` times the
    product of the subset's column norms.  Combinatorial; refuses instances
    with more than ``max_subsets`` subsets.
    """
    M = frame.M
    n = len(frame.lattice)
    if n < M:
        raise ValueError(f"frame with {n} vectors cannot be full spark in C^{M}")
    if math.comb(n, M) > max_subsets:
        raise ValueError(
            f"refusing full-spark check with {math.comb(n, M)} subsets (> {max_subsets})"
        )
    synthesis = frame.synthesis_matrix()
    norms = np.linalg.norm(synthesis, axis=0)
    for subset in combinations(range(n), M):
        cols = list(subset)
        scale = float(np.prod(norms[cols]))
        if abs(np.linalg.det(synthesis[:, cols])) <= tol * scale:
            return False
    return True
