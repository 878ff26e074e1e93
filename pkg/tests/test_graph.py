import numpy as np
import pytest

from gaborphase import (
    DifferenceSet,
    Lattice,
    MeasurementGraph,
    adjacency_matrix,
    build_difference_set,
    build_edge_set,
    expansion_ratio,
    fourier_bias,
    largest_connected_component,
    normalized_spectral_gap,
    spectral_gap,
    spectral_gap_closed_form,
)
from gaborphase.graph import spectrum_summary
from gaborphase.io import export_graph


def pristine_graph(lattice, diff):
    edges = build_edge_set(lattice, diff)
    return MeasurementGraph.from_edge_set(edges, np.ones(len(lattice)))


def simple_graph(n, edge_list):
    return MeasurementGraph(
        n_vertices=n,
        edges=np.array(edge_list, dtype=np.int64),
        vertex_weights=np.ones(n),
    )


class TestAdjacency:
    def test_four_cycle(self):
        A = adjacency_matrix(Lattice((0,), 4), DifferenceSet((1, 3), 4))
        expected = np.array(
            [[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]], dtype=float
        )
        assert np.array_equal(A, expected)

    def test_reference_instance_row_sums(self):
        A = adjacency_matrix(Lattice((0, 3), 6), DifferenceSet((2, 3, 4), 6))
        assert A.shape == (12, 12)
        assert np.array_equal(A, A.T)
        assert np.all(A.sum(axis=0) == 6)

    def test_kronecker_formula_matches_edge_list(self, rng):
        lat = Lattice((0, 2, 5), 9)
        diff = DifferenceSet.from_generator({1, 4}, 9)
        from_formula = adjacency_matrix(lat, diff)
        from_edges = pristine_graph(lat, diff).adjacency()
        assert np.array_equal(from_formula, from_edges)

    def test_eigenvalue_identity(self):
        # nontrivial eigenvalues are K times the indicator transform values
        lat = Lattice((0, 3), 6)
        diff = DifferenceSet((2, 3, 4), 6)
        vals = np.sort(np.linalg.eigvalsh(adjacency_matrix(lat, diff)))
        transform = np.real(np.fft.fft(diff.indicator()))
        expected = np.sort(np.concatenate([lat.K * transform, np.zeros(6 * (lat.K - 1))]))
        assert np.max(np.abs(vals - expected)) < 1e-8


class TestFourierBias:
    def test_full_set_has_zero_bias(self):
        assert fourier_bias(list(range(6)), 6) < 1e-12

    def test_singleton_bias_one(self):
        assert abs(fourier_bias([2], 6) - 1.0) < 1e-12

    def test_reference_value_brute_force(self):
        diff = DifferenceSet((2, 3, 4), 6)
        # brute-force unnormalized transform of the indicator
        values = [
            abs(sum(np.exp(-2j * np.pi * c * m / 6) for c in (2, 3, 4)))
            for m in range(1, 6)
        ]
        assert abs(fourier_bias(diff) - max(values)) < 1e-12
        assert abs(fourier_bias(diff) - 2.0) < 1e-12


class TestSpectralGap:
    def test_reference_instance_both_routes(self):
        lat = Lattice((0, 3), 6)
        diff = DifferenceSet((2, 3, 4), 6)
        closed = spectral_gap_closed_form(diff)
        eig = spectral_gap(pristine_graph(lat, diff))
        assert abs(closed - 1.0 / 3.0) < 1e-12
        assert abs(closed - eig) < 1e-10

    def test_degenerate_set_gap_zero(self):
        diff = DifferenceSet((3,), 6)  # bias equals |C|
        assert abs(spectral_gap_closed_form(diff)) < 1e-12

    def test_routes_agree_on_random_instances(self):
        rng = np.random.default_rng(5)
        for trial in range(50):
            M = int(rng.integers(6, 65))
            K = int(rng.integers(1, 4))
            shifts = tuple(sorted(rng.choice(M, size=K, replace=False).tolist()))
            diff = build_difference_set(M, float(rng.uniform(1.0, 6.0)), rng)
            closed = spectral_gap_closed_form(diff)
            eig = spectral_gap(pristine_graph(Lattice(shifts, M), diff))
            assert abs(closed - eig) < 1e-10

    def test_bernoulli_gap_bound(self):
        # dense regime: the draw saturates and the gap is near 1
        hits = 0
        for seed in range(100):
            diff = build_difference_set(256, 144.0, np.random.default_rng(seed))
            if spectral_gap_closed_form(diff) >= 0.5:
                hits += 1
        assert hits >= 95

    def test_bernoulli_gap_bound_sparse_regime(self):
        # genuine Bernoulli draws still clear 1 - 6/sqrt(d)
        d = 50.0
        hits = 0
        for seed in range(100):
            diff = build_difference_set(4096, d, np.random.default_rng(seed))
            if spectral_gap_closed_form(diff) >= 1.0 - 6.0 / np.sqrt(d):
                hits += 1
        assert hits >= 95

    def test_empty_graph_rejected(self):
        g = simple_graph(3, [[0, 1]]).delete_vertices([0, 1, 2])
        with pytest.raises(ValueError):
            spectral_gap(g)


class TestNormalizedGap:
    def test_disconnected_is_zero(self):
        g = simple_graph(4, [[0, 1], [2, 3]])
        assert normalized_spectral_gap(g) == 0.0

    def test_complete_graph_value(self):
        # K_4: normalized Laplacian eigenvalues are 0 and 4/3
        g = simple_graph(4, [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
        assert abs(normalized_spectral_gap(g) - 4.0 / 3.0) < 1e-12


class TestComponents:
    def test_pristine_graph_connected(self):
        lat = Lattice((0, 3), 6)
        diff = DifferenceSet((2, 3, 4), 6)
        comp = largest_connected_component(pristine_graph(lat, diff))
        assert comp.size == 12

    def test_isolated_vertex_excluded(self):
        lat = Lattice((0,), 6)
        diff = DifferenceSet((1, 5), 6)  # 6-cycle
        g = pristine_graph(lat, diff).delete_vertices([1, 5])
        comp = largest_connected_component(g)
        assert 0 not in comp
        assert comp.size == 3  # vertices 2,3,4

    def test_tie_break_smallest_index(self):
        g = simple_graph(4, [[0, 1], [2, 3]])
        assert set(largest_connected_component(g)) == {0, 1}

    def test_deletion_robustness_bound(self):
        # removing eps*n vertices leaves a component of (1 - 2 eps / gap) n
        lat = Lattice.evenly_spaced(32, 2)
        diff = build_difference_set(32, 4.0, np.random.default_rng(0))
        gap = spectral_gap_closed_form(diff)
        graph = pristine_graph(lat, diff)
        n = len(lat)
        eps_n = int(np.floor(min(gap / 6.0, 0.2) * n))
        assert eps_n >= 1
        eps = eps_n / n
        bound = (1.0 - 2.0 * eps / gap) * n
        for seed in range(100):
            victims = np.random.default_rng(seed).choice(n, size=eps_n, replace=False)
            comp = largest_connected_component(graph.delete_vertices(victims))
            assert comp.size >= bound


class TestExpansionRatio:
    def test_four_cycle(self):
        g = simple_graph(4, [[0, 1], [1, 2], [2, 3], [0, 3]])
        assert abs(expansion_ratio(g) - 1.0) < 1e-12

    def test_complete_graph(self):
        g = simple_graph(4, [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
        assert abs(expansion_ratio(g) - 2.0) < 1e-12

    def test_disconnected_graph_zero(self):
        g = simple_graph(4, [[0, 1], [2, 3]])
        assert expansion_ratio(g) == 0.0

    def test_refuses_large_graphs(self):
        g = simple_graph(17, [[i, i + 1] for i in range(16)])
        with pytest.raises(ValueError):
            expansion_ratio(g)


class TestCheegerSandwich:
    def test_small_pristine_instances(self):
        cases = [
            (Lattice((0,), 4), DifferenceSet((1, 3), 4)),
            (Lattice((0,), 5), DifferenceSet((1, 4), 5)),
            (Lattice((0,), 8), DifferenceSet((1, 4, 7), 8)),
            (Lattice((0, 2), 4), DifferenceSet((1, 3), 4)),
            (Lattice((0, 3), 6), DifferenceSet((2, 3, 4), 6)),
            (Lattice((0, 1), 8), DifferenceSet((2, 6), 8)),
            (Lattice((0, 2, 4), 5), DifferenceSet((1, 4), 5)),
        ]
        for lat, diff in cases:
            graph = pristine_graph(lat, diff)
            if graph.n_alive > 16:
                continue
            summary = spectrum_summary(graph, diff)
            d = lat.K * len(diff)
            h = expansion_ratio(graph)
            assert (d - summary.extreme) / 2.0 <= (d - summary.second) / 2.0
            assert (d - summary.second) / 2.0 <= h + 1e-9
            assert h <= np.sqrt(2.0 * d * (d - summary.second)) + 1e-9


class TestGraphMechanics:
    def test_deletion_removes_incident_edges(self):
        g = simple_graph(4, [[0, 1], [1, 2], [2, 3]])
        pruned = g.delete_vertices([1])
        assert pruned.degrees().tolist() == [0, 0, 1, 1]
        # original untouched
        assert g.degrees().tolist() == [1, 2, 2, 1]

    def test_unit_modulus_weights_enforced(self):
        with pytest.raises(ValueError, match="unit modulus"):
            MeasurementGraph(
                n_vertices=2,
                edges=np.array([[0, 1]]),
                vertex_weights=np.ones(2),
                edge_weights=np.array([0.5 + 0j]),
            )

    def test_export_graph_fixture_format(self, tmp_path):
        g = simple_graph(4, [[0, 1], [1, 2], [2, 3]]).delete_vertices([3])
        edges_path = tmp_path / "edges.csv"
        weights_path = tmp_path / "weights.csv"
        export_graph(g, edges_path, weights_path)
        assert edges_path.read_text().splitlines() == ["v1,v2", "0,1", "1,2"]
        lines = weights_path.read_text().splitlines()
        assert lines[0] == "vertex,weight"
        assert len(lines) == 4
