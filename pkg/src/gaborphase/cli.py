"""Command-line interface.

Subcommands: ``measure``, ``reconstruct``, ``experiment``.  Runs are driven
by a JSON config with flag overrides; the effective config is echoed so any
run is reproducible from its output header alone.

Seed discipline: the window is drawn from substream (seed, 0), the
frequency-offset set from (seed, 1), measurement noise from (seed, 2).

Exit codes: 0 ok, 2 config error, 3 reconstruction failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from .analysis import (
    DEFAULT_GRIDS,
    EXPERIMENT_KINDS,
    ExperimentConfig,
    ExperimentRecord,
    global_phase_error,
    run_experiment,
)
from .gabor import GaborFrame, Lattice, RankDeficientFrameError, sample_window_uniform_sphere
from .io import (
    SignalFormatError,
    read_ensemble,
    read_signal,
    write_diagnostics,
    write_ensemble,
    write_signal,
)
from .measurement import NoiseModel, build_difference_set, build_edge_set, measure
from .polarization import ComponentTooSmallError, reconstruct_noiseless
from .robust import RobustParams, StageFailure, TrimParams, reconstruct_noisy

__all__ = ["RunConfig", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RECONSTRUCTION = 3
EXIT_IO = 4


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one CLI run; JSON-serializable without loss."""

    M: int = 64
    F: object = 2           # count of evenly spread time shifts, or explicit list
    d: float = 3.0
    sigma: float = 1e-3
    alpha: float = 0.95
    beta: float = 0.95
    tau: float = 0.1
    mode: str = "robust"
    seed: int = 0
    trials: int = 50
    grid: list | None = None
    output: str | None = None
    jobs: int = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def lattice(self) -> Lattice:
        if isinstance(self.F, (list, tuple)):
            return Lattice(tuple(int(k) for k in self.F), self.M)
        return Lattice.evenly_spaced(self.M, int(self.F))

    def validate(self) -> "RunConfig":
        if self.mode not in ("noiseless", "robust"):
            raise ValueError(f"mode must be 'noiseless' or 'robust', got {self.mode!r}")
        if self.M < 2:
            raise ValueError("M must be at least 2")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        self.lattice()
        return self


def _load_config(args) -> RunConfig:
    config = RunConfig()
    if args.config:
        try:
            text = open(args.config).read()
        except OSError as exc:
            raise SignalFormatError(f"cannot read config: {exc}")
        config = RunConfig.from_json(text)
    overrides = {}
    for name in ("M", "F", "d", "sigma", "alpha", "beta", "tau", "mode",
                 "seed", "trials", "output", "jobs"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        config = replace(config, **overrides)
    return config.validate()


def _window_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), 0]))


def _diffset_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), 1]))


def _noise_seed(seed: int) -> int:
    return int(np.random.SeedSequence([int(seed), 2]).generate_state(1, np.uint64)[0])


def _echo(config: RunConfig) -> None:
    print(f"# config {config.to_json()}", file=sys.stderr)


def cmd_measure(args) -> int:
    config = _load_config(args)
    _echo(config)
    x = read_signal(args.signal)
    if x.shape[0] != config.M:
        raise ValueError(f"signal has length {x.shape[0]}, config says M={config.M}")
    lattice = config.lattice()
    frame = GaborFrame(sample_window_uniform_sphere(config.M, _window_rng(config.seed)), lattice)
    diff = build_difference_set(config.M, config.d, _diffset_rng(config.seed))
    edges = build_edge_set(lattice, diff)
    if config.mode == "robust" and config.sigma > 0:
        noise = NoiseModel("gaussian", config.sigma, _noise_seed(config.seed))
    else:
        noise = NoiseModel.none()
    ensemble = measure(x, frame, edges, noise)
    out = config.output or "ensemble.csv"
    write_ensemble(out, ensemble, seed=config.seed)
    print(f"measurements={ensemble.measurement_count} |C|={len(diff)} -> {out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    config = _load_config(args)
    _echo(config)
    ensemble, meta = read_ensemble(args.ensemble)
    if meta["M"] != config.M:
        raise ValueError(f"ensemble has M={meta['M']}, config says M={config.M}")
    lattice = ensemble.lattice
    seed = int(meta.get("seed", config.seed))
    frame = GaborFrame(sample_window_uniform_sphere(config.M, _window_rng(seed)), lattice)
    if config.mode == "noiseless":
        estimate = reconstruct_noiseless(ensemble, frame)
        diagnostics = {"surviving_vertices": None, "achieved_gap": None, "sigma_min": None}
    else:
        params = RobustParams(trim=TrimParams(config.alpha, config.beta), tau=config.tau)
        estimate, diag = reconstruct_noisy(ensemble, frame, params)
        diagnostics = diag.to_dict()

    error = None
    if args.truth:
        truth = read_signal(args.truth)
        error = global_phase_error(estimate, truth)
        print(f"error={error!r}")
    out = config.output or "reconstruction.txt"
    write_signal(out, estimate)
    payload = {
        **diagnostics,
        "error": error,
        "noise_norm": None,
        "seed": seed,
        "params": json.loads(config.to_json()),
    }
    if args.diagnostics:
        write_diagnostics(args.diagnostics, payload)
    print(f"reconstructed M={config.M} -> {out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = _load_config(args)
    _echo(config)
    if args.kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment kind {args.kind!r} (choose from {EXPERIMENT_KINDS})")
    grid = tuple(config.grid) if config.grid else DEFAULT_GRIDS[args.kind]
    n_shifts = len(config.F) if isinstance(config.F, (list, tuple)) else int(config.F)
    exp = ExperimentConfig(
        kind=args.kind,
        grid=grid,
        M=config.M,
        n_time_shifts=n_shifts,
        d=config.d,
        sigma=config.sigma,
        trials=config.trials,
        seed=config.seed,
        alpha=config.alpha,
        beta=config.beta,
        tau=config.tau,
        mode=config.mode,
    )

    def progress(done, total):
        if done % 10 == 0 or done == total:
            print(f"\r{args.kind}: {done}/{total} trials", file=sys.stderr, end="")

    records = run_experiment(exp, jobs=config.jobs, progress=progress)
    print(file=sys.stderr)
    out = config.output or f"{args.kind}.csv"
    write_records(out, records, exp)
    n_ok = sum(r.status == "ok" for r in records)
    print(f"{len(records)} trials ({n_ok} ok) -> {out}")
    return EXIT_OK


def write_records(path, records, exp_config: ExperimentConfig) -> None:
    header = {k: (list(v) if isinstance(v, tuple) else v)
              for k, v in asdict(exp_config).items()}
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(ExperimentRecord.CSV_FIELDS) + "\n")
        for record in records:
            fh.write(record.csv_row() + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaborphase",
        description="Phase retrieval from time-frequency structured magnitude measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=["noiseless", "robust"])
        p.add_argument("--output")
        p.add_argument("--jobs", type=int)
        p.add_argument("--M", type=int)
        p.add_argument("--F", type=int)
        p.add_argument("--d", type=float)
        p.add_argument("--sigma", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--trials", type=int)

    p_measure = sub.add_parser("measure", help="measure a signal file into an ensemble CSV")
    add_common(p_measure)
    p_measure.add_argument("signal", help="input signal file")
    p_measure.set_defaults(func=cmd_measure)

    p_rec = sub.add_parser("reconstruct", help="reconstruct a signal from an ensemble CSV")
    add_common(p_rec)
    p_rec.add_argument("ensemble", help="input ensemble CSV")
    p_rec.add_argument("--truth", help="reference signal file for error reporting")
    p_rec.add_argument("--diagnostics", help="write a diagnostics JSON here")
    p_rec.set_defaults(func=cmd_reconstruct)

    p_exp = sub.add_parser("experiment", help="run a sweep and emit CSV records")
    add_common(p_exp)
    p_exp.add_argument("kind", help=f"one of {', '.join(EXPERIMENT_KINDS)}")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SignalFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (StageFailure, ComponentTooSmallError, RankDeficientFrameError) as exc:
        stage = getattr(exc, "stage", exc.__class__.__name__)
        print(f"reconstruction failed [{stage}]: {exc}", file=sys.stderr)
        return EXIT_RECONSTRUCTION
    except (ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
