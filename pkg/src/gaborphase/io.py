"""File formats: signals, measurement ensembles, graph dumps, diagnostics.

All floats are written with ``repr`` so round trips are lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .gabor import Lattice
from .measurement import DifferenceSet, MeasurementEnsemble, build_edge_set

__all__ = [
    "SignalFormatError",
    "read_signal",
    "write_signal",
    "read_ensemble",
    "write_ensemble",
    "export_graph",
    "write_diagnostics",
]


class SignalFormatError(ValueError):
    """A signal or ensemble file failed to parse; the message names the line."""


def write_signal(path, x) -> None:
    """Text format: header ``M=<int>``, then one ``re,im`` line per entry."""
    x = np.asarray(x, dtype=np.complex128)
    lines = [f"M={x.shape[0]}"]
    lines += [f"{float(z.real)!r},{float(z.imag)!r}" for z in x]
    Path(path).write_text("\n".join(lines) + "\n")


def read_signal(path) -> np.ndarray:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("M="):
        raise SignalFormatError(f"{path}: line 1: expected header 'M=<int>'")
    try:
        M = int(text[0][2:])
    except ValueError:
        raise SignalFormatError(f"{path}: line 1: bad dimension {text[0]!r}") from None
    entries = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise SignalFormatError(
                f"{path}: line {lineno}: expected 're,im', got {line!r}"
            )
        try:
            entries.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise SignalFormatError(
                f"{path}: line {lineno}: non-numeric entry {line!r}"
            ) from None
    if len(entries) != M:
        raise SignalFormatError(
            f"{path}: header says M={M} but found {len(entries)} entries"
        )
    return np.asarray(entries, dtype=np.complex128)


def write_ensemble(path, ensemble: MeasurementEnsemble, seed: int | None = None) -> None:
    """CSV with kind V/E rows; the comment header records the design.

    Vertex rows fill (k1, l1) and leave (k2, l2, t) empty; edge rows fill
    everything.  Row order is lattice order then canonical edge order with
    t-major triples, matching ``MeasurementEnsemble.to_vector``.
    """
    lat = ensemble.lattice
    meta = {
        "M": lat.M,
        "F": list(lat.time_shifts),
        "C": list(ensemble.edge_set.diff_set.members),
        "seed": seed if seed is not None else ensemble.noise.seed,
        "sigma": ensemble.noise.sigma,
        "kind": ensemble.noise.kind,
    }
    labels = lat.labels()
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        fh.write("kind,k1,l1,k2,l2,t,value\n")
        for (k, l), value in zip(labels, ensemble.vertex_values):
            fh.write(f"V,{k},{l},,,,{float(value)!r}\n")
        edges = ensemble.edge_set.vertices
        for e in range(edges.shape[0]):
            k1, l1 = labels[edges[e, 0]]
            k2, l2 = labels[edges[e, 1]]
            for t in range(3):
                fh.write(f"E,{k1},{l1},{k2},{l2},{t},{float(ensemble.edge_values[e, t])!r}\n")


def read_ensemble(path):
    """Parse an ensemble CSV; returns (ensemble, meta).

    The edge set is rebuilt from the recorded difference set, and every row
    is checked against the derived design, so a file cannot silently
    disagree with its own header.
    """
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SignalFormatError(f"{path}: line 1: missing ensemble header")
    try:
        meta = json.loads(lines[0][1:].strip())
        lattice = Lattice(tuple(meta["F"]), int(meta["M"]))
        diff = DifferenceSet(tuple(meta["C"]), int(meta["M"]))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise SignalFormatError(f"{path}: line 1: bad header ({exc})") from None
    if len(lines) < 2 or lines[1] != "kind,k1,l1,k2,l2,t,value":
        raise SignalFormatError(f"{path}: line 2: bad column header")
    edge_set = build_edge_set(lattice, diff)
    vertex_values = np.full(len(lattice), np.nan)
    edge_values = np.full((len(edge_set), 3), np.nan)
    edge_lookup = {
        (int(i), int(j)): e for e, (i, j) in enumerate(edge_set.vertices)
    }
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise SignalFormatError(f"{path}: line {lineno}: expected 7 fields")
        kind = parts[0]
        try:
            if kind == "V":
                idx = lattice.index(int(parts[1]), int(parts[2]))
                vertex_values[idx] = float(parts[6])
            elif kind == "E":
                i = lattice.index(int(parts[1]), int(parts[2]))
                j = lattice.index(int(parts[3]), int(parts[4]))
                e = edge_lookup.get((min(i, j), max(i, j)))
                if e is None:
                    raise SignalFormatError(
                        f"{path}: line {lineno}: edge not in the derived design"
                    )
                edge_values[e, int(parts[5])] = float(parts[6])
            else:
                raise SignalFormatError(
                    f"{path}: line {lineno}: unknown row kind {kind!r}"
                )
        except SignalFormatError:
            raise
        except ValueError:
            raise SignalFormatError(
                f"{path}: line {lineno}: malformed row {line!r}"
            ) from None
    if np.any(np.isnan(vertex_values)) or np.any(np.isnan(edge_values)):
        raise SignalFormatError(f"{path}: incomplete ensemble (missing rows)")
    ensemble = MeasurementEnsemble(
        lattice=lattice,
        edge_set=edge_set,
        vertex_values=vertex_values,
        edge_values=edge_values,
    )
    return ensemble, meta


def export_graph(graph, edges_path, weights_path) -> None:
    """Edge-list CSV (v1,v2) plus vertex-weight CSV for test fixtures."""
    mask = graph.active_edge_mask()
    with open(edges_path, "w") as fh:
        fh.write("v1,v2\n")
        for i, j in graph.edges[mask]:
            fh.write(f"{i},{j}\n")
    with open(weights_path, "w") as fh:
        fh.write("vertex,weight\n")
        for v in graph.alive_indices():
            fh.write(f"{v},{float(graph.vertex_weights[v])!r}\n")


def write_diagnostics(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
