"""Input validation helpers shared by the estimator and the functional API."""

from __future__ import annotations

import numbers

import numpy as np


def check_rng(seed=None) -> np.random.Generator:
    """Turn ``seed`` into a numpy Generator.

    Accepts None (fresh entropy), an integer seed, a SeedSequence, or an
    existing Generator (returned as-is).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a Generator from {seed!r}")


def check_signal(x, M=None) -> np.ndarray:
    """Validate a single signal: 1-D, complex128, length >= 2."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise ValueError(f"signal must be 1-D, got shape {x.shape}")
    if x.shape[0] < 2:
        raise ValueError("signal length must be at least 2")
    if M is not None and x.shape[0] != M:
        raise ValueError(f"signal length {x.shape[0]} does not match M={M}")
    return x


def check_signal_matrix(X) -> np.ndarray:
    """Validate a batch of signals as a 2-D (n_samples, M) complex array.

    A single 1-D signal is promoted to one row.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected 1-D or 2-D input, got shape {X.shape}")
    if X.shape[1] < 2:
        raise ValueError("signal dimension must be at least 2")
    return np.ascontiguousarray(X, dtype=np.complex128)


def check_measurement_matrix(B, n_measurements) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    if B.ndim == 1:
        B = B[None, :]
    if B.ndim != 2 or B.shape[1] != n_measurements:
        raise ValueError(
            f"expected measurement rows of length {n_measurements}, got shape {B.shape}"
        )
    return B


def check_fraction(value, name, inclusive_low=False) -> float:
    value = float(value)
    low_ok = value >= 0.0 if inclusive_low else value > 0.0
    if not (low_ok and value <= 1.0):
        raise ValueError(f"{name} must lie in (0, 1], got {value}")
    return value
