"""Scikit-learn style front end.

``GaborPhaseRetrieval`` behaves like a random-projection transformer whose
transform is the phaseless measurement map and whose inverse transform runs
the reconstruction pipeline, so it composes with pipelines, ``clone``, and
grid search.  ``fit`` only needs the signal dimension: it draws the random
measurement design (window, time-shift set, frequency-offset set).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .gabor import GaborFrame, Lattice, sample_window_uniform_sphere
from .measurement import (
    MeasurementEnsemble,
    NoiseModel,
    build_difference_set,
    build_edge_set,
    measure,
)
from .polarization import reconstruct_noiseless
from .robust import RobustParams, TrimParams, reconstruct_noisy
from .validation import check_measurement_matrix, check_signal_matrix

__all__ = ["GaborPhaseRetrieval"]


class GaborPhaseRetrieval(TransformerMixin, BaseEstimator):
    """Phase retrieval from time-frequency structured magnitude measurements.

    Parameters
    ----------
    time_shifts : int or sequence of int
        Number of time shifts (evenly spread over Z_M) or an explicit list.
    d : float
        Intensity of the Bernoulli frequency-offset draw; larger values give
        a denser, better-connected measurement graph.
    sigma : float
        Standard deviation of additive Gaussian noise applied by
        ``transform`` to the squared magnitudes (0 for clean measurements).
    mode : {"robust", "noiseless"}
        Reconstruction pipeline used by ``inverse_transform``.
    alpha, beta, tau
        Robust-pipeline knobs: keep-fractions of the two trims and the
        spectral-gap target of the clustering stage.
    random_state : int, optional
        Seeds the design draw and the per-sample noise streams.

    Attributes
    ----------
    window_ : ndarray
        Unit-norm random window backing the measurement frame.
    frame_ : GaborFrame
    edge_set_ : EdgeSet
    n_measurements_ : int
    """

    def __init__(
        self,
        time_shifts=2,
        d=3.0,
        sigma=0.0,
        mode="robust",
        alpha=0.95,
        beta=0.95,
        tau=0.1,
        random_state=None,
    ):
        self.time_shifts = time_shifts
        self.d = d
        self.sigma = sigma
        self.mode = mode
        self.alpha = alpha
        self.beta = beta
        self.tau = tau
        self.random_state = random_state

    def fit(self, X, y=None):
        """Draw the measurement design for signals with X.shape[1] entries."""
        X = check_signal_matrix(X)
        M = X.shape[1]
        if self.mode not in ("robust", "noiseless"):
            raise ValueError(f"mode must be 'robust' or 'noiseless', got {self.mode!r}")
        entropy = self.random_state if self.random_state is not None else np.random.SeedSequence().entropy
        self._entropy = int(entropy)
        rng_g = np.random.default_rng(np.random.SeedSequence([self._entropy, 0]))
        rng_c = np.random.default_rng(np.random.SeedSequence([self._entropy, 1]))
        if np.isscalar(self.time_shifts):
            lattice = Lattice.evenly_spaced(M, int(self.time_shifts))
        else:
            lattice = Lattice(tuple(self.time_shifts), M)
        self.window_ = sample_window_uniform_sphere(M, rng_g)
        self.frame_ = GaborFrame(self.window_, lattice)
        self.difference_set_ = build_difference_set(M, self.d, rng_c)
        self.edge_set_ = build_edge_set(lattice, self.difference_set_)
        self.n_features_in_ = M
        self.n_measurements_ = len(lattice) + 3 * len(self.edge_set_)
        return self

    def _check_fitted(self):
        if not hasattr(self, "frame_"):
            raise RuntimeError("this GaborPhaseRetrieval instance is not fitted yet")

    def _noise_for_sample(self, index: int) -> NoiseModel:
        if self.sigma <= 0:
            return NoiseModel.none()
        seed = int(
            np.random.SeedSequence([self._entropy, 2, int(index)]).generate_state(1, np.uint64)[0]
        )
        return NoiseModel("gaussian", self.sigma, seed)

    def measure_one(self, x, sample_index: int = 0):
        """Full MeasurementEnsemble for a single signal."""
        self._check_fitted()
        return measure(x, self.frame_, self.edge_set_, self._noise_for_sample(sample_index))

    def transform(self, X) -> np.ndarray:
        """Phaseless measurements, one row per signal.

        Columns are the lattice-ordered vertex values followed by the edge
        triples in canonical order.  Rows are reproducible: sample i always
        sees the same noise stream for a given random_state.
        """
        self._check_fitted()
        X = check_signal_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"signals have dimension {X.shape[1]}, design was fit for {self.n_features_in_}"
            )
        out = np.empty((X.shape[0], self.n_measurements_))
        for i, x in enumerate(X):
            out[i] = self.measure_one(x, i).to_vector()
        return out

    def inverse_transform(self, B) -> np.ndarray:
        """Reconstruct one signal per measurement row (up to global phase)."""
        self._check_fitted()
        B = check_measurement_matrix(B, self.n_measurements_)
        template = MeasurementEnsemble(
            lattice=self.frame_.lattice,
            edge_set=self.edge_set_,
            vertex_values=np.zeros(len(self.frame_.lattice)),
            edge_values=np.zeros((len(self.edge_set_), 3)),
        )
        out = np.empty((B.shape[0], self.n_features_in_), dtype=np.complex128)
        params = RobustParams(trim=TrimParams(self.alpha, self.beta), tau=self.tau)
        for i, row in enumerate(B):
            ensemble = template.with_values_from(row)
            if self.mode == "noiseless":
                out[i] = reconstruct_noiseless(ensemble, self.frame_)
            else:
                out[i], _ = reconstruct_noisy(ensemble, self.frame_, params)
        return out
