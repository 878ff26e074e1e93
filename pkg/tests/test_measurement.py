import numpy as np
import pytest

from gaborphase import (
    DifferenceSet,
    EmptyDifferenceSetError,
    Lattice,
    NoiseModel,
    build_difference_set,
    build_edge_set,
    edge_vector,
    inner,
    mask_vector,
    measure,
    sample_window_uniform_sphere,
)
from conftest import make_frame, random_unit_signal


def naive_ensemble(x, frame, edge_set):
    """All measurements through explicit inner products (oracle route)."""
    labels = frame.lattice.labels()
    vertex = np.array([abs(inner(x, frame.vector(tuple(lab)))) ** 2 for lab in labels])
    edge = np.empty((len(edge_set), 3))
    for e, (i, j) in enumerate(edge_set.vertices):
        s1, s2 = tuple(labels[i]), tuple(labels[j])
        for t in range(3):
            edge[e, t] = abs(inner(x, edge_vector(frame, s1, s2, t))) ** 2
    return vertex, edge


class TestDifferenceSet:
    def test_symmetric_closure(self):
        c = DifferenceSet.from_generator({1}, 6)
        assert c.members == (1, 5)

    def test_zero_only_generator_is_empty(self):
        with pytest.raises(EmptyDifferenceSetError):
            DifferenceSet.from_generator({0}, 6)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            DifferenceSet((1,), 6)

    def test_empty_draw_raises(self):
        # tiny intensity plus a seed whose draw misses every offset
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            try:
                build_difference_set(8, 1e-6, rng)
            except EmptyDifferenceSetError:
                return
        pytest.fail("no empty draw found at near-zero intensity")

    def test_probability_clamped_for_large_d(self, rng):
        c = build_difference_set(16, 144.0, rng)
        assert c.members == tuple(range(1, 16))

    def test_mean_size_monte_carlo_band(self):
        M, d = 128, 10.0
        sizes = [
            len(build_difference_set(M, d, np.random.default_rng(seed)))
            for seed in range(1000)
        ]
        nominal = 2.0 * d * np.log(M) * (M - 1) / M
        assert 0.5 * nominal <= np.mean(sizes) <= 2.0 * nominal


class TestEdgeSet:
    def test_reference_instance_counts(self):
        # M=6, F={0,3}, C={2,3,4}: 12 vertices of degree 6, 36 edges
        lat = Lattice((0, 3), 6)
        diff = DifferenceSet((2, 3, 4), 6)
        edges = build_edge_set(lat, diff)
        assert len(edges) == 36
        degrees = edges.degree_counts()
        assert degrees.shape == (12,)
        assert np.all(degrees == 6)

    def test_single_shift_symmetric_pair_is_cycle(self):
        lat = Lattice((0,), 8)
        diff = DifferenceSet((3, 5), 8)
        edges = build_edge_set(lat, diff)
        assert np.all(edges.degree_counts() == 2)

    def test_degree_audit_brute_force(self, rng):
        M = 10
        lat = Lattice((1, 4, 7), M)
        diff = DifferenceSet.from_generator({2, 5}, M)
        edges = build_edge_set(lat, diff)
        # recount by scanning all pairs of lattice points
        labels = lat.labels()
        count = np.zeros(len(lat), dtype=int)
        members = set(diff.members)
        for a in range(len(lat)):
            for b in range(a + 1, len(lat)):
                if (labels[b, 1] - labels[a, 1]) % M in members:
                    count[a] += 1
                    count[b] += 1
        assert np.array_equal(count, edges.degree_counts())
        assert np.all(count == lat.K * len(diff))

    def test_canonical_orientation_and_uniqueness(self, rng):
        lat = Lattice((0, 2), 7)
        diff = DifferenceSet.from_generator({1, 3}, 7)
        edges = build_edge_set(lat, diff)
        assert np.all(edges.vertices[:, 0] < edges.vertices[:, 1])
        as_tuples = {tuple(e) for e in edges.vertices}
        assert len(as_tuples) == len(edges)


class TestEdgeAndMaskVectors:
    def test_equal_endpoints_double(self, rng):
        frame = make_frame(6, 2, rng)
        v = edge_vector(frame, (0, 1), (0, 1), 0)
        assert np.allclose(v, 2 * frame.vector((0, 1)))

    def test_cube_roots_sum_to_zero(self, rng):
        frame = make_frame(6, 2, rng)
        s1, s2 = (0, 2), (3, 4)
        total = sum(edge_vector(frame, s1, s2, t) for t in range(3))
        assert np.allclose(total, 3 * frame.vector(s1), atol=1e-12)

    def test_constant_window_mask(self):
        g = np.ones(5, dtype=complex)
        assert np.allclose(mask_vector(g, 0, 2, 2, 0), 2 * np.ones(5))

    def test_mask_values_on_circle_about_one(self, rng):
        g = sample_window_uniform_sphere(7, rng)
        radii = np.stack([np.abs(mask_vector(g, 3, 1, 4, t) - 1.0) for t in range(3)])
        assert np.max(np.abs(radii - radii[0])) < 1e-12

    def test_mask_route_matches_edge_vector(self, rng):
        M = 8
        frame = make_frame(M, 2, rng)
        k1, k2 = frame.lattice.time_shifts
        for l1, c in [(0, 3), (2, 5), (7, 1)]:
            l2 = (l1 + c) % M
            direct = edge_vector(frame, (k1, l1), (k2, l2), 1)
            masked = mask_vector(frame.window, c, k1, k2, 1) * frame.vector((k1, l1))
            assert np.max(np.abs(direct - masked)) < 1e-12

    def test_mask_rejects_near_zero_window(self):
        g = np.array([1.0, 1e-14, 1.0, 1.0], dtype=complex)
        with pytest.raises(ValueError, match="near-zero"):
            mask_vector(g, 1, 0, 2, 0)

    def test_masked_fft_magnitudes_match_inner_products(self, rng):
        # one masked transform yields a whole row of edge magnitudes
        M = 8
        frame = make_frame(M, 2, rng)
        x = random_unit_signal(M, rng)
        k1, k2 = frame.lattice.time_shifts
        c = 3
        for t in range(3):
            p = mask_vector(frame.window, c, k1, k2, t)
            transform = np.fft.fft(x * np.conj(p) * np.conj(np.roll(frame.window, k1)))
            for l in range(M):
                reference = abs(inner(x, edge_vector(frame, (k1, l), (k2, (l + c) % M), t)))
                assert abs(abs(transform[l]) - reference) < 1e-10


class TestMeasure:
    def test_zero_signal_yields_pure_noise(self, rng):
        M = 8
        frame = make_frame(M, 2, rng)
        edges = build_edge_set(frame.lattice, DifferenceSet.from_generator({1, 3}, M))
        noise = NoiseModel("gaussian", 1e-3, 99)
        ens = measure(np.zeros(M, dtype=complex), frame, edges, noise)
        expected = noise.draw(ens.measurement_count)
        assert np.array_equal(ens.to_vector(), expected)

    def test_global_phase_invariance(self, rng):
        M = 8
        frame = make_frame(M, 2, rng)
        edges = build_edge_set(frame.lattice, DifferenceSet.from_generator({1, 3}, M))
        x = random_unit_signal(M, rng)
        a = measure(x, frame, edges).to_vector()
        b = measure(np.exp(1j * 0.73) * x, frame, edges).to_vector()
        assert np.max(np.abs(a - b)) < 1e-12

    @pytest.mark.parametrize("M", [4, 8, 16])
    def test_fast_path_matches_naive_oracle(self, M, rng):
        frame = make_frame(M, 2, rng)
        edges = build_edge_set(frame.lattice, DifferenceSet.from_generator({1, M - 3}, M))
        x = random_unit_signal(M, rng)
        ens = measure(x, frame, edges)
        vertex, edge = naive_ensemble(x, frame, edges)
        assert np.max(np.abs(ens.vertex_values - vertex)) < 1e-10
        assert np.max(np.abs(ens.edge_values - edge)) < 1e-10

    def test_noiseless_values_nonnegative(self, rng):
        M = 8
        frame = make_frame(M, 2, rng)
        edges = build_edge_set(frame.lattice, DifferenceSet.from_generator({2}, M))
        ens = measure(random_unit_signal(M, rng), frame, edges)
        assert np.all(ens.vertex_values >= 0)
        assert np.all(ens.edge_values >= 0)

    def test_measurement_count_identity(self, rng):
        M = 12
        frame = make_frame(M, 3, rng)
        diff = DifferenceSet.from_generator({1, 5}, M)
        edges = build_edge_set(frame.lattice, diff)
        ens = measure(random_unit_signal(M, rng), frame, edges)
        K, C = frame.lattice.K, len(diff)
        assert ens.measurement_count == K * M + 3 * K * K * C * M // 2

    def test_noise_add_subtract_restores_bit_for_bit(self, rng):
        M = 8
        frame = make_frame(M, 2, rng)
        edges = build_edge_set(frame.lattice, DifferenceSet.from_generator({1, 3}, M))
        x = random_unit_signal(M, rng)
        clean = measure(x, frame, edges)
        noisy = measure(x, frame, edges, NoiseModel("gaussian", 1e-9, 4242))
        restored = noisy.denoised()
        assert np.array_equal(restored.vertex_values, clean.vertex_values)
        assert np.array_equal(restored.edge_values, clean.edge_values)

    def test_vector_round_trip(self, rng):
        M = 8
        frame = make_frame(M, 2, rng)
        edges = build_edge_set(frame.lattice, DifferenceSet.from_generator({1}, M))
        ens = measure(random_unit_signal(M, rng), frame, edges)
        rebuilt = ens.with_values_from(ens.to_vector())
        assert np.array_equal(rebuilt.vertex_values, ens.vertex_values)
        assert np.array_equal(rebuilt.edge_values, ens.edge_values)


class TestNoiseModel:
    def test_none_is_zero(self):
        assert np.array_equal(NoiseModel.none().draw(5), np.zeros(5))

    def test_seeded_reproducibility(self):
        model = NoiseModel("gaussian", 0.5, 7)
        assert np.array_equal(model.draw(100), model.draw(100))

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            NoiseModel("poisson", 1.0, 0)
