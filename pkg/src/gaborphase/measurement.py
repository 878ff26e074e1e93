"""Measurement ensemble construction.

The ensemble consists of vertex measurements ``b = |<x, pi(lambda) g>|^2``
over a lattice and, for each graph edge, three extra magnitudes
``|<x, pi(lambda1) g + omega^t pi(lambda2) g>|^2`` with omega the cube root
of unity.  Everything is computed through masked FFTs: for a fixed parameter
triple (c, k1, k2) the edge vectors are a pointwise mask applied to the
vertex frame vectors, so all frequencies come out of a single transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gabor import GaborFrame, Lattice, WINDOW_ENTRY_FLOOR
from .validation import check_rng, check_signal

__all__ = [
    "OMEGA",
    "DifferenceSet",
    "EmptyDifferenceSetError",
    "build_difference_set",
    "EdgeSet",
    "build_edge_set",
    "NoiseModel",
    "mask_vector",
    "edge_vector",
    "MeasurementEnsemble",
    "measure",
]

OMEGA = np.exp(2j * np.pi / 3)

# Keep the batched mask arrays under ~64 MB regardless of instance size.
_MAX_BATCH_ENTRIES = 1 << 21


class EmptyDifferenceSetError(RuntimeError):
    """The Bernoulli draw produced an empty difference set; re-seed and retry."""


@dataclass(frozen=True)
class DifferenceSet:
    """A symmetric set C = D u (-D) \\ {0} of candidate frequency offsets."""

    members: tuple
    M: int
    intensity: float = float("nan")

    def __post_init__(self):
        C = tuple(sorted(int(c) % self.M for c in self.members))
        if len(set(C)) != len(C):
            raise ValueError("difference set members must be distinct")
        if 0 in C:
            raise ValueError("difference set must not contain 0")
        if set(C) != {(-c) % self.M for c in C}:
            raise ValueError("difference set must be symmetric mod M")
        if not C:
            raise EmptyDifferenceSetError("empty difference set")
        object.__setattr__(self, "members", C)

    @classmethod
    def from_generator(cls, D, M: int, intensity: float = float("nan")) -> "DifferenceSet":
        """Build the symmetric closure of a generator set D."""
        C = {d % M for d in D} | {(-d) % M for d in D}
        C.discard(0)
        if not C:
            raise EmptyDifferenceSetError("empty difference set")
        return cls(tuple(sorted(C)), M, intensity)

    def __len__(self) -> int:
        return len(self.members)

    def indicator(self) -> np.ndarray:
        ind = np.zeros(self.M)
        ind[list(self.members)] = 1.0
        return ind


def build_difference_set(M: int, d: float, rng=None) -> DifferenceSet:
    """Draw C = D u (-D) \\ {0} with i.i.d. Bernoulli(d log M / M) membership in D.

    The success probability is clamped to 1, so large ``d`` at small ``M``
    degenerates to the full set of nonzero offsets.  Expected size is
    O(log M) in the genuine Bernoulli regime.
    """
    if M < 3:
        raise ValueError("M must be at least 3")
    if d <= 0:
        raise ValueError("intensity d must be positive")
    rng = check_rng(rng)
    p = min(1.0, d * np.log(M) / M)
    mask = rng.random(M) < p
    D = np.flatnonzero(mask)
    return DifferenceSet.from_generator(D.tolist(), M, intensity=float(d))


@dataclass(frozen=True, eq=False)
class EdgeSet:
    """Undirected measurement-graph edges over a lattice, stored once each.

    ``vertices[e] = (i, j)`` holds flat lattice indices with i < j (the
    canonical orientation).  Per edge, the derived parameters of the mask
    route are stored: the frequency offset ``c = l2 - l1`` and the time-shift
    positions of both endpoints.
    """

    lattice: Lattice
    diff_set: DifferenceSet
    vertices: np.ndarray        # (m, 2) int, canonical i < j
    offsets: np.ndarray         # (m,) c for the canonical orientation
    k1_positions: np.ndarray    # (m,)
    k2_positions: np.ndarray    # (m,)

    def __post_init__(self):
        for name in ("vertices", "offsets", "k1_positions", "k2_positions"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def l1(self) -> np.ndarray:
        return self.vertices[:, 0] % self.lattice.M

    def degree_counts(self) -> np.ndarray:
        return np.bincount(self.vertices.reshape(-1), minlength=len(self.lattice))


def build_edge_set(lattice: Lattice, diff_set: DifferenceSet) -> EdgeSet:
    """Connect lattice points whose frequency offset lies in the difference set.

    Every vertex of the resulting graph has degree K * |C| and the number of
    stored (undirected) edges is K^2 * M * |C| / 2.
    """
    if lattice.M != diff_set.M:
        raise ValueError("lattice and difference set dimensions differ")
    K, M = lattice.K, lattice.M
    C = np.asarray(diff_set.members, dtype=np.int64)
    # Directed enumeration hits every ordered pair exactly once.
    p1, p2, c, l = np.meshgrid(
        np.arange(K), np.arange(K), C, np.arange(M), indexing="ij"
    )
    i = (p1 * M + l).reshape(-1)
    j = (p2 * M + (l + c) % M).reshape(-1)
    keep = i < j
    i, j = i[keep], j[keep]
    order = np.lexsort((j, i))
    i, j = i[order], j[order]
    l1, l2 = i % M, j % M
    return EdgeSet(
        lattice=lattice,
        diff_set=diff_set,
        vertices=np.stack([i, j], axis=1),
        offsets=(l2 - l1) % M,
        k1_positions=i // M,
        k2_positions=j // M,
    )


@dataclass(frozen=True)
class NoiseModel:
    """Additive i.i.d. real Gaussian noise on the squared magnitudes.

    ``kind`` is "none" or "gaussian"; sigma is the standard deviation of each
    noise entry.  Values are drawn from a counter-based (Philox) stream keyed
    by ``seed``, so the same model always reproduces the same noise vector.
    """

    kind: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls("none", 0.0, 0)

    @property
    def active(self) -> bool:
        return self.kind != "none" and self.sigma > 0

    def draw(self, count: int) -> np.ndarray:
        if not self.active:
            return np.zeros(count)
        gen = np.random.Generator(np.random.Philox(key=self.seed))
        return gen.normal(0.0, self.sigma, size=count)


def mask_vector(g, c: int, k1: int, k2: int, t: int) -> np.ndarray:
    """Pointwise mask turning a vertex frame vector into an edge vector.

    ``mask(m) = 1 + e^{2 pi i (c m / M + t / 3)} g(m - k2) / g(m - k1)``.
    Requires every window entry used in the denominator to be bounded away
    from zero (guaranteed for sphere-sampled windows).
    """
    g = np.asarray(g, dtype=np.complex128)
    M = g.shape[0]
    denom = np.roll(g, k1 % M)
    if np.min(np.abs(denom)) < WINDOW_ENTRY_FLOOR:
        raise ValueError("mask division by near-zero window entry")
    m = np.arange(M)
    phase = np.exp(2j * np.pi * ((c % M) * m / M + t / 3.0))
    return 1.0 + phase * np.roll(g, k2 % M) / denom


def edge_vector(frame: GaborFrame, shift1, shift2, t: int) -> np.ndarray:
    """pi(shift1) g + omega^t pi(shift2) g."""
    if t not in (0, 1, 2):
        raise ValueError("t must be in {0, 1, 2}")
    return frame.vector(shift1) + OMEGA**t * frame.vector(shift2)


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """Phaseless measurements of one signal: vertex values plus edge triples.

    ``vertex_values[idx]`` follows lattice enumeration order and
    ``edge_values[e, t]`` follows the edge set's canonical order.  Noiseless
    values are nonnegative; noisy values may be negative and are stored
    as-is (consumers clamp where square roots are taken).  When noise was
    applied the drawn noise vectors are kept alongside.
    """

    lattice: Lattice
    edge_set: EdgeSet
    vertex_values: np.ndarray   # (|lattice|,)
    edge_values: np.ndarray     # (|edges|, 3)
    noise: NoiseModel = field(default_factory=NoiseModel.none)
    vertex_noise: np.ndarray | None = None
    edge_noise: np.ndarray | None = None

    def __post_init__(self):
        for name in ("vertex_values", "edge_values"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.vertex_values.shape != (len(self.lattice),):
            raise ValueError("vertex value count does not match the lattice")
        if self.edge_values.shape != (len(self.edge_set), 3):
            raise ValueError("edge value shape does not match the edge set")

    @property
    def measurement_count(self) -> int:
        return self.vertex_values.size + self.edge_values.size

    def to_vector(self) -> np.ndarray:
        """Flatten to one row: vertex values, then edge triples (edge-major)."""
        return np.concatenate([self.vertex_values, self.edge_values.reshape(-1)])

    def with_values_from(self, vector) -> "MeasurementEnsemble":
        """Same design, values replaced from a flat vector (see to_vector)."""
        vector = np.asarray(vector, dtype=np.float64)
        n_v = len(self.lattice)
        if vector.shape != (self.measurement_count,):
            raise ValueError(
                f"expected {self.measurement_count} values, got {vector.shape}"
            )
        return MeasurementEnsemble(
            lattice=self.lattice,
            edge_set=self.edge_set,
            vertex_values=vector[:n_v],
            edge_values=vector[n_v:].reshape(-1, 3),
        )

    def denoised(self) -> "MeasurementEnsemble":
        """Subtract the recorded noise vectors (identity for noiseless data)."""
        if self.vertex_noise is None:
            return self
        return MeasurementEnsemble(
            lattice=self.lattice,
            edge_set=self.edge_set,
            vertex_values=self.vertex_values - self.vertex_noise,
            edge_values=self.edge_values - self.edge_noise,
        )


def measure(x, frame: GaborFrame, edge_set: EdgeSet, noise: NoiseModel | None = None) -> MeasurementEnsemble:
    """Measure a signal through the full ensemble via the masked-FFT fast path.

    Edge measurements are grouped by parameter triple (c, k1, k2): each group
    shares one mask per t, so the three magnitudes of every edge in the group
    come out of three length-M transforms.
    """
    x = check_signal(x, frame.M)
    if frame.lattice != edge_set.lattice:
        raise ValueError("frame and edge set use different lattices")
    noise = noise or NoiseModel.none()
    M = frame.M

    shifted = frame._shifted_windows                       # (K, M), T_k g rows
    vertex_coeff = np.fft.fft(x[None, :] * np.conj(shifted), axis=1)
    vertex_values = np.abs(vertex_coeff).reshape(-1) ** 2

    triples, triple_index = np.unique(
        np.stack([edge_set.offsets, edge_set.k1_positions, edge_set.k2_positions], axis=1),
        axis=0,
        return_inverse=True,
    )
    edge_values = np.empty((len(edge_set), 3))
    t_phase = np.exp(2j * np.pi * np.arange(3) / 3.0)
    m = np.arange(M)
    l1 = edge_set.l1
    batch = max(1, _MAX_BATCH_ENTRIES // (3 * M))
    for start in range(0, triples.shape[0], batch):
        stop = min(start + batch, triples.shape[0])
        c = triples[start:stop, 0]
        p1 = triples[start:stop, 1]
        p2 = triples[start:stop, 2]
        ratio = shifted[p2] / shifted[p1]                  # (r, M)
        carrier = np.exp(2j * np.pi * np.outer(c, m) / M)  # (r, M)
        masks = 1.0 + carrier[:, None, :] * t_phase[None, :, None] * ratio[:, None, :]
        y = x[None, None, :] * np.conj(masks) * np.conj(shifted[p1])[:, None, :]
        coeff = np.fft.fft(y, axis=2)                      # (r, 3, M)
        in_batch = (triple_index >= start) & (triple_index < stop)
        edge_values[in_batch] = (
            np.abs(coeff[triple_index[in_batch] - start, :, l1[in_batch]]) ** 2
        )

    if noise.active:
        draws = noise.draw(len(frame.lattice) + 3 * len(edge_set))
        vertex_noise = draws[: len(frame.lattice)]
        edge_noise = draws[len(frame.lattice) :].reshape(-1, 3)
        return MeasurementEnsemble(
            lattice=frame.lattice,
            edge_set=edge_set,
            vertex_values=vertex_values + vertex_noise,
            edge_values=edge_values + edge_noise,
            noise=noise,
            vertex_noise=vertex_noise,
            edge_noise=edge_noise,
        )
    return MeasurementEnsemble(
        lattice=frame.lattice,
        edge_set=edge_set,
        vertex_values=vertex_values,
        edge_values=edge_values,
        noise=noise,
    )
