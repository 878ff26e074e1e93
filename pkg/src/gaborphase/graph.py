"""The graph of measurements: vertices are lattice points, edges are the
pairs whose relative phase gets measured.

The pristine graph is regular with a circulant-Kronecker adjacency, so its
spectral gap has a closed form through the Fourier bias of the difference
set.  After deletions the graph is generally irregular; spectral quantities
then use the normalized adjacency.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components as _sparse_components

from .gabor import Lattice
from .measurement import DifferenceSet, EdgeSet

__all__ = [
    "MeasurementGraph",
    "SpectrumSummary",
    "adjacency_matrix",
    "fourier_bias",
    "spectral_gap_closed_form",
    "spectral_gap",
    "normalized_spectral_gap",
    "connected_components",
    "largest_connected_component",
    "expansion_ratio",
    "spectrum_summary",
]

DENSE_EIG_LIMIT = 4096
UNIT_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MeasurementGraph:
    """Immutable snapshot of the measurement graph.

    Vertices are flat lattice indices 0..n-1.  ``edges`` stores every
    canonical (i < j) pair ever built; an edge is active iff both endpoints
    are alive, so vertex deletion is just a new alive mask.  Edge weights,
    when present, are unit-modulus relative phases aligned with ``edges``.
    """

    n_vertices: int
    edges: np.ndarray                      # (m, 2) int
    vertex_weights: np.ndarray             # (n,)
    edge_weights: np.ndarray | None = None  # (m,) complex, |w| = 1
    alive: np.ndarray = None               # (n,) bool

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.vertex_weights, dtype=np.float64)
        if weights.shape != (self.n_vertices,):
            raise ValueError("vertex weight count does not match n_vertices")
        alive = self.alive
        if alive is None:
            alive = np.ones(self.n_vertices, dtype=bool)
        alive = np.asarray(alive, dtype=bool).copy()
        if self.edge_weights is not None:
            ew = np.asarray(self.edge_weights, dtype=np.complex128)
            if ew.shape != (edges.shape[0],):
                raise ValueError("edge weight count does not match edges")
            if np.any(np.abs(np.abs(ew) - 1.0) > UNIT_WEIGHT_TOL):
                raise ValueError("edge weights must be unit modulus")
            ew.setflags(write=False)
            object.__setattr__(self, "edge_weights", ew)
        for name, arr in (("edges", edges), ("vertex_weights", weights), ("alive", alive)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edge_set(cls, edge_set: EdgeSet, vertex_weights, edge_weights=None) -> "MeasurementGraph":
        return cls(
            n_vertices=len(edge_set.lattice),
            edges=edge_set.vertices,
            vertex_weights=vertex_weights,
            edge_weights=edge_weights,
        )

    @property
    def n_alive(self) -> int:
        return int(np.count_nonzero(self.alive))

    def alive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    def active_edge_mask(self) -> np.ndarray:
        return self.alive[self.edges[:, 0]] & self.alive[self.edges[:, 1]]

    def degrees(self) -> np.ndarray:
        """Degree of every vertex in the alive subgraph (dead vertices: 0)."""
        active = self.edges[self.active_edge_mask()]
        return np.bincount(active.reshape(-1), minlength=self.n_vertices)

    def delete_vertices(self, indices) -> "MeasurementGraph":
        alive = self.alive.copy()
        alive[np.asarray(indices, dtype=np.intp)] = False
        return replace(self, alive=alive)

    def keep_vertices(self, indices) -> "MeasurementGraph":
        alive = np.zeros(self.n_vertices, dtype=bool)
        alive[np.asarray(indices, dtype=np.intp)] = True
        return replace(self, alive=alive & self.alive)

    def induced(self):
        """Compact view of the alive subgraph.

        Returns (vertices, edges, weights): original indices of the alive
        vertices, active edges re-indexed into 0..n'-1, and the matching
        edge weights (None if the graph is unweighted).
        """
        vertices = self.alive_indices()
        rank = np.full(self.n_vertices, -1, dtype=np.int64)
        rank[vertices] = np.arange(vertices.size)
        mask = self.active_edge_mask()
        edges = rank[self.edges[mask]]
        weights = None if self.edge_weights is None else self.edge_weights[mask]
        return vertices, edges, weights

    def adjacency(self, induced: bool = True) -> np.ndarray:
        """Dense 0/1 adjacency of the alive subgraph."""
        if induced:
            _, edges, _ = self.induced()
            n = self.n_alive
        else:
            edges = self.edges[self.active_edge_mask()]
            n = self.n_vertices
        A = np.zeros((n, n))
        A[edges[:, 0], edges[:, 1]] = 1.0
        A[edges[:, 1], edges[:, 0]] = 1.0
        return A


@dataclass(frozen=True)
class SpectrumSummary:
    """Adjacency spectrum of a (pristine) measurement graph."""

    eigenvalues: np.ndarray = field(repr=False)  # sorted descending
    extreme: float      # max(|lambda_2|, |lambda_n|)
    second: float       # lambda_2
    gap: float          # (d - extreme) / d with d the mean degree
    bias: float | None = None


def adjacency_matrix(lattice: Lattice, diff_set: DifferenceSet) -> np.ndarray:
    """Pristine adjacency as all-ones (K x K) kron circulant(indicator of C)."""
    M = lattice.M
    indicator = diff_set.indicator()
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    circulant = indicator[idx]
    return np.kron(np.ones((lattice.K, lattice.K)), circulant)


def fourier_bias(diff_set_or_members, M: int | None = None) -> float:
    """max_{m != 0} |DFT of the set indicator|; small means pseudorandom."""
    if isinstance(diff_set_or_members, DifferenceSet):
        indicator = diff_set_or_members.indicator()
    else:
        if M is None:
            raise ValueError("M is required when passing raw members")
        indicator = np.zeros(M)
        indicator[[int(c) % M for c in diff_set_or_members]] = 1.0
    spectrum = np.abs(np.fft.fft(indicator))
    return float(np.max(spectrum[1:]))


def spectral_gap_closed_form(diff_set: DifferenceSet) -> float:
    """Spectral gap of the pristine graph: 1 - bias / |C|."""
    return 1.0 - fourier_bias(diff_set) / len(diff_set)


def spectral_gap(graph: MeasurementGraph) -> float:
    """Adjacency-eigenvalue spectral gap (d - max(|l2|, |ln|)) / d.

    ``d`` is the mean degree of the alive subgraph; on the pristine regular
    graph this agrees with the closed form to eigensolver accuracy.
    """
    n = graph.n_alive
    if n == 0:
        raise ValueError("spectral gap of an empty graph")
    _, edges, _ = graph.induced()
    if edges.shape[0] == 0:
        raise ValueError("spectral gap of an edgeless graph")
    d = 2.0 * edges.shape[0] / n
    if n <= DENSE_EIG_LIMIT:
        vals = np.linalg.eigvalsh(graph.adjacency())
        extreme = max(abs(vals[-2]), abs(vals[0]))
    else:
        A = sp.coo_matrix(
            (np.ones(2 * edges.shape[0]),
             (np.concatenate([edges[:, 0], edges[:, 1]]),
              np.concatenate([edges[:, 1], edges[:, 0]]))),
            shape=(n, n),
        ).tocsr()
        top = np.sort(spla.eigsh(A, k=2, which="LA", return_eigenvectors=False, tol=1e-8))
        bottom = spla.eigsh(A, k=1, which="SA", return_eigenvectors=False, tol=1e-8)
        extreme = max(abs(top[0]), abs(bottom[0]))
    return (d - extreme) / d


def _normalized_laplacian(graph: MeasurementGraph):
    """(L, degrees) of the alive subgraph, L = I - D^{-1/2} A D^{-1/2}."""
    _, edges, _ = graph.induced()
    n = graph.n_alive
    deg = np.bincount(edges.reshape(-1), minlength=n).astype(float)
    if np.any(deg == 0):
        return None, deg
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(n)
    w = inv_sqrt[edges[:, 0]] * inv_sqrt[edges[:, 1]]
    L[edges[:, 0], edges[:, 1]] -= w
    L[edges[:, 1], edges[:, 0]] -= w
    return L, deg


def normalized_spectral_gap(graph: MeasurementGraph) -> float:
    """Second-smallest eigenvalue of the normalized Laplacian.

    This is the gap notion used once regularity is lost to deletions; it is
    0 for disconnected graphs and defined as 1 for a single vertex.
    """
    n = graph.n_alive
    if n == 0:
        raise ValueError("spectral gap of an empty graph")
    if n == 1:
        return 1.0
    L, deg = _normalized_laplacian(graph)
    if L is None:
        return 0.0
    if n <= DENSE_EIG_LIMIT:
        vals = np.linalg.eigvalsh(L)
    else:
        vals = np.sort(spla.eigsh(sp.csr_matrix(L), k=2, which="SA",
                                  return_eigenvectors=False, tol=1e-8))
    return float(max(vals[1], 0.0))


def connected_components(graph: MeasurementGraph) -> list[np.ndarray]:
    """Components of the alive subgraph as arrays of original vertex indices,
    sorted by (size descending, smallest contained index ascending)."""
    vertices, edges, _ = graph.induced()
    n = vertices.size
    if n == 0:
        return []
    adj = sp.coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    n_comp, labels = _sparse_components(adj, directed=False)
    comps = [vertices[labels == c] for c in range(n_comp)]
    comps.sort(key=lambda c: (-c.size, int(c.min())))
    return comps


def largest_connected_component(graph: MeasurementGraph) -> np.ndarray:
    """Vertex set of a maximum-size component (ties: smallest vertex index)."""
    comps = connected_components(graph)
    if not comps:
        raise ValueError("graph has no alive vertices")
    return comps[0]


def expansion_ratio(graph: MeasurementGraph, max_vertices: int = 16) -> float:
    """Exact edge expansion min_{|S| <= n/2} |boundary(S)| / |S|.

    Exhaustive over all vertex subsets; test-support only, refuses graphs
    with more than ``max_vertices`` alive vertices.
    """
    vertices, edges, _ = graph.induced()
    n = vertices.size
    if n > max_vertices:
        raise ValueError(f"expansion_ratio refuses graphs with more than {max_vertices} vertices")
    if n < 2:
        raise ValueError("expansion ratio needs at least 2 vertices")
    best = np.inf
    for size in range(1, n // 2 + 1):
        for subset in combinations(range(n), size):
            in_s = np.zeros(n, dtype=bool)
            in_s[list(subset)] = True
            boundary = np.count_nonzero(in_s[edges[:, 0]] ^ in_s[edges[:, 1]])
            best = min(best, boundary / size)
    return float(best)


def spectrum_summary(graph: MeasurementGraph, diff_set: DifferenceSet | None = None) -> SpectrumSummary:
    vals = np.sort(np.linalg.eigvalsh(graph.adjacency()))[::-1]
    extreme = float(max(abs(vals[1]), abs(vals[-1])))
    _, edges, _ = graph.induced()
    d = 2.0 * edges.shape[0] / graph.n_alive
    return SpectrumSummary(
        eigenvalues=vals,
        extreme=extreme,
        second=float(vals[1]),
        gap=(d - extreme) / d,
        bias=None if diff_set is None else fourier_bias(diff_set),
    )
