import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from gaborphase import GaborPhaseRetrieval, global_phase_error
from conftest import random_unit_signal


def signals(n, M, rng):
    return np.stack([random_unit_signal(M, rng) for _ in range(n)])


class TestSklearnProtocol:
    def test_get_set_params_round_trip(self):
        est = GaborPhaseRetrieval(time_shifts=3, d=5.0, sigma=1e-4, random_state=7)
        params = est.get_params()
        assert params["d"] == 5.0
        rebuilt = GaborPhaseRetrieval().set_params(**params)
        assert rebuilt.get_params() == params

    def test_clone_preserves_params(self):
        est = GaborPhaseRetrieval(time_shifts=4, tau=0.2, random_state=3)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_pipeline_composition(self, rng):
        X = signals(2, 16, rng)
        pipe = Pipeline([("measurements", GaborPhaseRetrieval(random_state=0))])
        B = pipe.fit_transform(X)
        assert B.shape[0] == 2

    def test_unfitted_raises(self, rng):
        est = GaborPhaseRetrieval()
        with pytest.raises(RuntimeError, match="not fitted"):
            est.transform(signals(1, 8, rng))


class TestMeasurementTransform:
    def test_fit_draws_design(self, rng):
        X = signals(1, 16, rng)
        est = GaborPhaseRetrieval(time_shifts=2, d=3.0, random_state=1).fit(X)
        assert est.n_features_in_ == 16
        assert est.window_.shape == (16,)
        assert est.n_measurements_ == len(est.frame_.lattice) + 3 * len(est.edge_set_)

    def test_same_seed_same_design(self, rng):
        X = signals(1, 16, rng)
        a = GaborPhaseRetrieval(random_state=5).fit(X)
        b = GaborPhaseRetrieval(random_state=5).fit(X)
        assert np.array_equal(a.window_, b.window_)
        assert a.difference_set_.members == b.difference_set_.members

    def test_transform_shape_and_determinism(self, rng):
        X = signals(3, 16, rng)
        est = GaborPhaseRetrieval(sigma=1e-4, random_state=2).fit(X)
        B1 = est.transform(X)
        B2 = est.transform(X)
        assert B1.shape == (3, est.n_measurements_)
        assert np.array_equal(B1, B2)

    def test_explicit_time_shift_list(self, rng):
        X = signals(1, 12, rng)
        est = GaborPhaseRetrieval(time_shifts=[0, 4, 8], random_state=0).fit(X)
        assert est.frame_.lattice.time_shifts == (0, 4, 8)

    def test_dimension_mismatch_rejected(self, rng):
        est = GaborPhaseRetrieval(random_state=0).fit(signals(1, 16, rng))
        with pytest.raises(ValueError, match="dimension"):
            est.transform(signals(1, 8, rng))


class TestInverseTransform:
    def test_clean_round_trip_robust(self, rng):
        X = signals(2, 16, rng)
        est = GaborPhaseRetrieval(sigma=0.0, mode="robust", random_state=4).fit(X)
        recovered = est.inverse_transform(est.transform(X))
        for got, want in zip(recovered, X):
            assert global_phase_error(got, want) < 1e-8

    def test_clean_round_trip_noiseless_mode(self, rng):
        X = signals(2, 16, rng)
        est = GaborPhaseRetrieval(sigma=0.0, mode="noiseless", random_state=4).fit(X)
        recovered = est.inverse_transform(est.transform(X))
        for got, want in zip(recovered, X):
            assert global_phase_error(got, want) < 1e-8

    def test_noisy_round_trip_close(self, rng):
        X = signals(1, 32, rng)
        est = GaborPhaseRetrieval(sigma=1e-4, mode="robust", random_state=8).fit(X)
        recovered = est.inverse_transform(est.transform(X))
        assert global_phase_error(recovered[0], X[0]) < 0.1

    def test_wrong_width_rejected(self, rng):
        est = GaborPhaseRetrieval(random_state=0).fit(signals(1, 16, rng))
        with pytest.raises(ValueError):
            est.inverse_transform(np.zeros((1, 7)))

    def test_bad_mode_rejected(self, rng):
        with pytest.raises(ValueError, match="mode"):
            GaborPhaseRetrieval(mode="magic").fit(signals(1, 8, rng))
