"""Relative-phase extraction and the noiseless reconstruction pipeline.

Three extra magnitude measurements per vertex pair, mixed with cube roots of
unity, determine the unimodular ratio between the phases of the two frame
coefficients.  Propagating these ratios over a spanning tree of the
measurement graph recovers every coefficient up to one global phase, after
which a least-squares solve against the surviving subframe returns the
signal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .gabor import GaborFrame, least_squares_reconstruct
from .graph import MeasurementGraph, largest_connected_component
from .measurement import OMEGA, MeasurementEnsemble

__all__ = [
    "RelativePhase",
    "relative_phase",
    "edge_relative_phases",
    "measurement_graph",
    "PropagationState",
    "propagate_phases",
    "reconstruct_noiseless",
    "ComponentTooSmallError",
]

RHO_FLOOR = 1e-14


class ComponentTooSmallError(RuntimeError):
    """The surviving connected component has fewer vertices than M."""


@dataclass(frozen=True)
class RelativePhase:
    """Unimodular phase ratio between two frame coefficients.

    ``value`` is meaningful only when ``defined``; reversing the edge
    orientation conjugates it.
    """

    value: complex
    defined: bool
    edge: tuple | None = None


def relative_phase(b1: float, b2: float, triple) -> RelativePhase:
    """Recover the relative phase from one edge's three mixed magnitudes.

    ``(1/3) sum_t omega^t triple[t]`` equals conj(a1) * a2 for the two
    underlying coefficients; dividing by sqrt(b1 b2) and renormalizing gives
    the unit-modulus phase ratio.  Undefined when either vertex measurement
    is nonpositive or the mixed sum is numerically zero.
    """
    triple = np.asarray(triple, dtype=np.float64)
    if triple.shape != (3,):
        raise ValueError("expected exactly three edge measurements")
    if b1 <= 0 or b2 <= 0:
        return RelativePhase(value=0j, defined=False)
    rho = (triple[0] + OMEGA * triple[1] + OMEGA**2 * triple[2]) / 3.0
    if abs(rho) < RHO_FLOOR:
        return RelativePhase(value=0j, defined=False)
    return RelativePhase(value=complex(rho / abs(rho)), defined=True)


def edge_relative_phases(ensemble: MeasurementEnsemble, require_positive_vertices: bool = True):
    """Vectorized relative phases for every edge of an ensemble.

    Returns (values, defined): unit-modulus phases in canonical edge order
    and the mask of edges where the phase is defined.  The polarization
    identity needs both vertex measurements positive; the noisy pipeline
    normalizes the mixed sum directly and only requires it to be nonzero
    (pass ``require_positive_vertices=False``).
    """
    edges = ensemble.edge_set.vertices
    mixed = ensemble.edge_values @ np.array([1.0, OMEGA, OMEGA**2]) / 3.0
    magnitude = np.abs(mixed)
    defined = magnitude >= RHO_FLOOR
    if require_positive_vertices:
        b = ensemble.vertex_values
        defined &= (b[edges[:, 0]] > 0) & (b[edges[:, 1]] > 0)
    values = np.zeros(len(ensemble.edge_set), dtype=np.complex128)
    np.divide(mixed, magnitude, out=values, where=defined)
    return values, defined


def measurement_graph(
    ensemble: MeasurementEnsemble,
    weighted: bool = True,
    require_positive_vertices: bool = True,
) -> MeasurementGraph:
    """Build the measurement graph from an ensemble.

    Vertex weights are the vertex measurements.  With ``weighted``, edges
    carry the relative-phase estimates; edges whose phase is undefined are
    dropped from the graph entirely (they carry no usable information and
    would distort degree counts downstream).
    """
    if not weighted:
        return MeasurementGraph.from_edge_set(ensemble.edge_set, ensemble.vertex_values)
    values, defined = edge_relative_phases(ensemble, require_positive_vertices)
    return MeasurementGraph(
        n_vertices=len(ensemble.lattice),
        edges=ensemble.edge_set.vertices[defined],
        vertex_weights=ensemble.vertex_values,
        edge_weights=values[defined],
    )


@dataclass(frozen=True)
class PropagationState:
    """Outcome of breadth-first phase propagation from a root vertex."""

    coefficients: np.ndarray   # (n,) complex, 0 where unassigned
    assigned: np.ndarray       # (n,) bool
    root: int
    visit_order: np.ndarray    # assigned vertices in visit order

    def __post_init__(self):
        for name in ("coefficients", "assigned", "visit_order"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def propagate_phases(graph: MeasurementGraph, root: int) -> PropagationState:
    """Assign coefficient estimates by BFS from ``root``.

    The root gets the real nonnegative value sqrt(b_root); every newly
    reached vertex w (parent v) gets ``phase(v -> w) * unit(c_v) * sqrt(b_w)``.
    The queue expands neighbors in lattice order, which makes the visit
    order, and hence the result on inconsistent phase data, deterministic.
    Only the tree edges of the BFS influence the outcome.
    """
    if graph.edge_weights is None:
        raise ValueError("propagation needs a phase-weighted graph")
    if not graph.alive[root]:
        raise ValueError(f"root {root} is not alive")
    b = graph.vertex_weights
    if b[root] <= 0:
        raise ValueError("root must have positive weight")

    # Directed adjacency over alive vertices; reversing an edge conjugates
    # its phase.
    mask = graph.active_edge_mask()
    e = graph.edges[mask]
    w = graph.edge_weights[mask]
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    phase = np.concatenate([w, np.conj(w)])
    order = np.lexsort((dst, src))
    src, dst, phase = src[order], dst[order], phase[order]
    indptr = np.zeros(graph.n_vertices + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=graph.n_vertices), out=indptr[1:])

    n = graph.n_vertices
    coeff = np.zeros(n, dtype=np.complex128)
    assigned = np.zeros(n, dtype=bool)
    coeff[root] = np.sqrt(b[root])
    assigned[root] = True
    visit = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        lo, hi = indptr[v], indptr[v + 1]
        nbrs = dst[lo:hi]
        fresh = ~assigned[nbrs]
        if not np.any(fresh):
            continue
        targets = nbrs[fresh]
        unit = coeff[v] / abs(coeff[v])
        coeff[targets] = phase[lo:hi][fresh] * unit * np.sqrt(np.maximum(b[targets], 0.0))
        assigned[targets] = True
        visit.extend(targets.tolist())
        queue.extend(targets.tolist())
    return PropagationState(
        coefficients=coeff,
        assigned=assigned,
        root=root,
        visit_order=np.asarray(visit, dtype=np.int64),
    )


def _best_root(graph: MeasurementGraph, component: np.ndarray) -> int:
    """Maximum-weight vertex of the component (ties: smallest index)."""
    weights = graph.vertex_weights[component]
    return int(component[np.argmax(weights)])


def reconstruct_noiseless(ensemble: MeasurementEnsemble, frame: GaborFrame) -> np.ndarray:
    """Exact reconstruction from noiseless phaseless measurements.

    Deletes zero-weight vertices (relative threshold), keeps the largest
    connected component, propagates phases from the best-conditioned root,
    and solves the least-squares system on the surviving subframe.  The
    result equals the measured signal up to one global phase.

    Raises ComponentTooSmallError (surviving component smaller than M) or
    RankDeficientFrameError (subframe does not span), as distinct failures.
    """
    graph = measurement_graph(ensemble)
    b = graph.vertex_weights
    threshold = 1e-14 * np.max(b) if b.size else 0.0
    dead = np.flatnonzero(b <= threshold)
    if dead.size:
        graph = graph.delete_vertices(dead)
    if graph.n_alive == 0:
        raise ComponentTooSmallError("all vertex measurements are zero")
    component = largest_connected_component(graph)
    if component.size < frame.M:
        raise ComponentTooSmallError(
            f"largest component has {component.size} vertices < M={frame.M}"
        )
    graph = graph.keep_vertices(component)
    state = propagate_phases(graph, _best_root(graph, component))
    support = np.flatnonzero(state.assigned)
    return least_squares_reconstruct(frame, state.coefficients[support], support)
