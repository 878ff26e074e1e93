"""Noise-robust reconstruction pipeline.

Stages, in order: trim vertices with the smallest and largest measurements
(unreliable phase estimates), prune with spectral clustering until the
normalized spectral gap clears a target, estimate all coefficient phases at
once by angular synchronization on the connection Laplacian, then solve the
least-squares system with moduli taken from the vertex measurements.
Failures carry the stage they occurred in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .gabor import GaborFrame, RankDeficientFrameError
from .graph import (
    DENSE_EIG_LIMIT,
    MeasurementGraph,
    largest_connected_component,
    normalized_spectral_gap,
)
from .measurement import MeasurementEnsemble
from .polarization import measurement_graph
from .validation import check_fraction

__all__ = [
    "TrimParams",
    "RobustParams",
    "StageFailure",
    "trim_vertices",
    "spectral_clustering",
    "connection_laplacian",
    "angular_synchronization",
    "RobustDiagnostics",
    "reconstruct_noisy",
]

SYNC_ENTRY_FLOOR = 1e-12


class StageFailure(RuntimeError):
    """A robust-pipeline stage failed; ``stage`` identifies which."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class TrimParams:
    """Keep-fractions for the two trims: remove floor((1-alpha)|V|) smallest
    then floor((1-beta)|V|) largest vertex weights, fractions of the
    original vertex count."""

    alpha: float = 0.95
    beta: float = 0.95

    def __post_init__(self):
        check_fraction(self.alpha, "alpha")
        check_fraction(self.beta, "beta")
        if self.alpha + self.beta <= 1.0:
            raise ValueError("alpha + beta must exceed 1 so trims keep some vertices")


@dataclass(frozen=True)
class RobustParams:
    """Knobs of the noisy pipeline.

    Defaults are the fast presets (small fuzz parameters suffice in
    practice); the guarantee-scale choice is time_shifts=12, d=144.
    """

    trim: TrimParams = field(default_factory=TrimParams)
    tau: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")


def trim_vertices(graph: MeasurementGraph, params: TrimParams) -> MeasurementGraph:
    """Delete the smallest- then largest-weight vertices.

    Ties are broken by lattice order: among equal weights the smaller index
    is removed first.  Counts are fractions of the vertex count at entry.
    """
    n = graph.n_alive
    # epsilon guard so fractions like 1 - 0.8 floor to their intended counts
    n_small = int(np.floor((1.0 - params.alpha) * n + 1e-9))
    n_large = int(np.floor((1.0 - params.beta) * n + 1e-9))
    if n_small + n_large >= n:
        raise ValueError("trims would delete every vertex")
    alive = graph.alive_indices()
    weights = graph.vertex_weights[alive]
    if n_small:
        order = np.lexsort((alive, weights))
        graph = graph.delete_vertices(alive[order[:n_small]])
        keep = np.ones(alive.size, dtype=bool)
        keep[order[:n_small]] = False
        alive, weights = alive[keep], weights[keep]
    if n_large:
        order = np.lexsort((alive, -weights))
        graph = graph.delete_vertices(alive[order[:n_large]])
    return graph


def _fiedler_vector(L: np.ndarray):
    """(second smallest eigenvalue, its eigenvector) of a symmetric matrix."""
    if L.shape[0] <= DENSE_EIG_LIMIT:
        vals, vecs = np.linalg.eigh(L)
        return float(vals[1]), vecs[:, 1]
    vals, vecs = spla.eigsh(sp.csr_matrix(L), k=2, which="SA", tol=1e-8)
    order = np.argsort(vals)
    return float(vals[order[1]]), vecs[:, order[1]]


def spectral_clustering(graph: MeasurementGraph, tau: float, min_vertices: int = 1) -> MeasurementGraph:
    """Prune the graph until its normalized spectral gap reaches ``tau``.

    Operates on the largest connected component.  Each round takes the
    eigenvector for the second-smallest eigenvalue of the normalized
    Laplacian, sweeps prefix cuts of the vertices ordered by the scaled
    eigenvector entries, and removes the side of the minimum-conductance cut
    with the smaller degree sum.

    Raises StageFailure("clustering") if the graph drops below
    ``min_vertices`` before the gap target is met.
    """
    while True:
        component = largest_connected_component(graph)
        if component.size < graph.n_alive:
            graph = graph.keep_vertices(component)
        if graph.n_alive < min_vertices:
            raise StageFailure(
                "clustering",
                f"clustered below frame size: {graph.n_alive} < {min_vertices}",
            )
        if graph.n_alive == 1 or normalized_spectral_gap(graph) >= tau:
            return graph

        vertices, edges, _ = graph.induced()
        n = vertices.size
        deg = np.bincount(edges.reshape(-1), minlength=n).astype(float)
        inv_sqrt = 1.0 / np.sqrt(deg)
        L = np.eye(n)
        w = inv_sqrt[edges[:, 0]] * inv_sqrt[edges[:, 1]]
        L[edges[:, 0], edges[:, 1]] -= w
        L[edges[:, 1], edges[:, 0]] -= w
        _, u = _fiedler_vector(L)

        order = np.argsort(inv_sqrt * u, kind="stable")
        position = np.empty(n, dtype=np.int64)
        position[order] = np.arange(n)
        # cut size for every prefix via interval increments
        lo = np.minimum(position[edges[:, 0]], position[edges[:, 1]])
        hi = np.maximum(position[edges[:, 0]], position[edges[:, 1]])
        delta = np.zeros(n + 1)
        np.add.at(delta, lo + 1, 1.0)
        np.add.at(delta, hi + 1, -1.0)
        cuts = np.cumsum(delta)[1:n]            # prefix sizes 1..n-1
        vol = np.cumsum(deg[order])[: n - 1]
        total = 2.0 * edges.shape[0]
        conductance = cuts / np.minimum(vol, total - vol)
        best = int(np.argmin(conductance))
        prefix = order[: best + 1]
        if vol[best] <= total - vol[best]:
            drop = vertices[prefix]
        else:
            complement = np.ones(n, dtype=bool)
            complement[prefix] = False
            drop = vertices[complement]
        graph = graph.delete_vertices(drop)


def connection_laplacian(graph: MeasurementGraph) -> sp.csr_matrix:
    """I - D^{-1/2} conj(A) D^{-1/2} over the alive subgraph.

    A is the Hermitian unit-modulus weighted adjacency; D counts the edges
    actually carrying weights.
    """
    if graph.edge_weights is None:
        raise ValueError("connection Laplacian needs a phase-weighted graph")
    vertices, edges, weights = graph.induced()
    n = vertices.size
    deg = np.bincount(edges.reshape(-1), minlength=n).astype(float)
    if np.any(deg == 0):
        raise ValueError("connection Laplacian needs every vertex to carry an edge")
    inv_sqrt = 1.0 / np.sqrt(deg)
    scale = inv_sqrt[edges[:, 0]] * inv_sqrt[edges[:, 1]]
    off = -np.conj(weights) * scale
    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)])
    vals = np.concatenate([off, np.conj(off), np.ones(n, dtype=np.complex128)])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def angular_synchronization(graph: MeasurementGraph):
    """Estimate all vertex phases from the pairwise relative phases.

    Takes the eigenvector of the smallest eigenvalue of the connection
    Laplacian and returns its entrywise phases; with consistent (noiseless)
    edge weights this reproduces the true coefficient phases up to one
    global phase.  The global phase is fixed by making the largest-modulus
    eigenvector entry real positive.

    Returns (phases, kept): unit-modulus phases for the alive vertices and a
    mask of entries with enough eigenvector mass to be trusted; vertices
    below the floor are flagged out rather than fabricated.
    """
    L = connection_laplacian(graph)
    n = L.shape[0]
    if n <= DENSE_EIG_LIMIT:
        _, vecs = np.linalg.eigh(L.toarray())
        u = vecs[:, 0]
    else:
        # smallest eigenpair of L through the largest of 2I - L
        shifted = sp.identity(n, format="csr") * 2.0 - L
        _, vecs = spla.eigsh(shifted, k=1, which="LA", tol=1e-8)
        u = vecs[:, 0]
    anchor = int(np.argmax(np.abs(u)))
    u = u * (np.conj(u[anchor]) / abs(u[anchor]))
    kept = np.abs(u) >= SYNC_ENTRY_FLOOR
    phases = np.zeros(n, dtype=np.complex128)
    phases[kept] = u[kept] / np.abs(u[kept])
    return phases, kept


@dataclass(frozen=True)
class RobustDiagnostics:
    surviving_vertices: int
    achieved_gap: float
    sigma_min: float
    dropped_phases: int = 0

    def to_dict(self) -> dict:
        return {
            "surviving_vertices": self.surviving_vertices,
            "achieved_gap": self.achieved_gap,
            "sigma_min": self.sigma_min,
            "dropped_phases": self.dropped_phases,
        }


def reconstruct_noisy(
    ensemble: MeasurementEnsemble,
    frame: GaborFrame,
    params: RobustParams | None = None,
):
    """Noise-robust reconstruction; exact (up to global phase) when noise is zero.

    Returns (signal_estimate, diagnostics).  Negative vertex measurements
    are clamped to zero where square roots are taken.  Failures raise
    StageFailure with the stage name, or RankDeficientFrameError from the
    final solve.
    """
    params = params or RobustParams()
    graph = measurement_graph(ensemble, require_positive_vertices=False)
    graph = trim_vertices(graph, params.trim)
    graph = spectral_clustering(graph, params.tau, min_vertices=frame.M)
    achieved_gap = normalized_spectral_gap(graph)

    phases, kept = angular_synchronization(graph)
    vertices = graph.alive_indices()
    support = vertices[kept]
    if support.size < frame.M:
        raise StageFailure(
            "synchronization",
            f"only {support.size} usable phases < M={frame.M}",
        )
    moduli = np.sqrt(np.maximum(ensemble.vertex_values[support], 0.0))
    coefficients = phases[kept] * moduli

    analysis = frame.synthesis_matrix(support).conj().T
    singular = np.linalg.svd(analysis, compute_uv=False)
    if singular[-1] <= singular[0] * frame.M * np.finfo(float).eps:
        raise RankDeficientFrameError(
            f"surviving subframe is rank deficient (sigma_min={singular[-1]:.3e})"
        )
    estimate, _, _, _ = np.linalg.lstsq(analysis, coefficients, rcond=None)
    diagnostics = RobustDiagnostics(
        surviving_vertices=int(support.size),
        achieved_gap=float(achieved_gap),
        sigma_min=float(singular[-1]),
        dropped_phases=int(np.count_nonzero(~kept)),
    )
    return estimate, diagnostics
