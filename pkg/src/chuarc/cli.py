"""Command-line entry points.

Exit codes: 0 success, 1 validation error (bad config or arguments),
2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import circuit as circ
from . import experiment as exp
from . import lwe as lwe_mod
from . import plots, tasks
from .config import config_digest, default_config, parse_config, seed_for, serialize_config
from .errors import ChuaRcError, ConfigurationError, InputDomainError
from .pipeline import nmse, predict


def _load_config(args):
    if args.config:
        cfg = parse_config(args.config)
    else:
        kind = getattr(args, "task", None) or "polynomial"
        cfg = default_config(profile=args.profile, task_kind=kind)
    if getattr(args, "task", None):
        cfg = replace(cfg, task=replace(cfg.task, kind=args.task))
        if args.task.startswith("lwe") and cfg.lwe is None:
            cfg = replace(cfg, lwe=lwe_mod.LweParams())
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "n_cases", None):
        cfg = replace(cfg, n_cases=args.n_cases)
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    dt = args.dt or 1.0 / cfg.reservoir.sample_rate
    drive = None
    if args.drive_amplitude > 0.0:
        drive = circ.sine_drive(args.drive_amplitude, args.drive_frequency, args.t_end, 1.0 / dt)
    trace = circ.integrate(cfg.circuit, circ.DEFAULT_INITIAL_STATE, drive, args.t_end, dt)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trace.csv"
    circ.trace_to_csv(trace, path, config_digest(cfg))
    print(f"wrote {path} ({trace.n_samples} samples)")
    return 0


def _cmd_bifurcate(args) -> int:
    cfg = _load_config(args)
    values = [args.start + i * (args.stop - args.start) / (args.steps - 1)
              for i in range(args.steps)]
    points = circ.bifurcation_scan(
        vary=args.param,
        values=values,
        fixed=cfg.circuit,
        tap=args.tap,
        drive_frequency=args.drive_frequency,
        drive_amplitude=args.drive_amplitude,
        dt=args.dt,
        t_end=args.t_end,
        jobs=args.jobs,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"bifurcation_{args.param}.csv"
    circ.bifurcation_to_csv(points, path, config_digest(cfg))
    failed = [p.value for p in points if p.error]
    print(f"wrote {path} ({len(points)} points, {len(failed)} failed)")
    return 0


def _cmd_spectrum(args) -> int:
    cfg = _load_config(args)
    header, rows, _ = plots._read_csv(args.trace)
    if args.tap not in header:
        raise ConfigurationError("tap", f"{args.tap} not in trace columns {header}")
    if len(rows) < 2:
        raise ConfigurationError("trace", "need at least 2 samples")
    idx = header.index(args.tap)
    t0, t1 = float(rows[0][0]), float(rows[1][0])
    samples = [float(r[idx]) for r in rows]
    freqs, mags = circ.power_spectrum(samples, t1 - t0)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "spectrum.csv"
    circ.spectrum_to_csv(freqs, mags, path, config_digest(cfg))
    print(f"wrote {path} ({len(freqs)} bins)")
    return 0


def _cmd_dataset(args) -> int:
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.task.kind.startswith("lwe"):
        # same stream the experiment harness uses for this master seed
        seed = seed_for(cfg.master_seed, "dataset")
        rng = np.random.default_rng([seed, 0x6C7765])
        params = cfg.lwe or lwe_mod.LweParams()
        pk = lwe_mod.keygen(params, rng)
        cases = lwe_mod.generate_testcases(params, cfg.n_cases, rng, pk=pk)
        path = out / "lwe_cases.json"
        lwe_mod.save_dataset(cases, pk, seed, path)
        lwe_mod.save_keypair(params, pk, out / "lwe_key.json", out / "lwe_secret.json")
        n_cases = len(cases)
    else:
        dataset = exp.build_dataset(cfg)
        path = out / f"dataset_{cfg.task.kind}.csv"
        tasks.dataset_to_csv(dataset, path, config_digest(cfg))
        n_cases = dataset.n_cases
    print(f"wrote {path} ({n_cases} cases)")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    report = exp.run_experiment(cfg, jobs=args.jobs)
    line = f"mean NMSE {report.mean_nmse:.6f}, median {report.median_nmse:.6f}"
    if report.accuracy is not None:
        line += f", accuracy {report.accuracy:.3f}"
    print(f"{cfg.task.kind}: {line}; artifacts in {cfg.out_dir}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_config(args)
    weight = exp.load_weight(args.weight, expected_digest=config_digest(cfg))
    dataset = exp.build_dataset(cfg)
    states = exp.simulate_cases(cfg, dataset, jobs=args.jobs)
    estimates = [predict(weight, s) for s in states]
    report = nmse(estimates, [np.atleast_1d(np.asarray(t, dtype=float)) for t in dataset.teachers])
    print(f"eval {cfg.task.kind}: mean NMSE {report.mean:.6f}, median {report.median:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    grid = exp.SweepGrid(
        resistances=exp.axis_values(args.r_start, args.r_stop, args.r_step),
        v_centers=exp.axis_values(args.vc_start, args.vc_stop, args.vc_step),
        range_width=args.range_width,
        n_masks=tuple(args.n_masks) if args.n_masks else None,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    cells = exp.run_sweep(cfg, grid, jobs=args.jobs, out_path=path)
    failed = sum(1 for c in cells if c.error)
    print(f"wrote {path} ({len(cells)} cells, {failed} failed)")
    if args.svg:
        plots.render_plot(path, out / "sweep.svg")
        print(f"wrote {out / 'sweep.svg'}")
    return 0


def _cmd_plot(args) -> int:
    kind = plots.render_plot(args.csv, args.out_svg, kind=args.kind)
    print(f"wrote {args.out_svg} ({kind})")
    return 0


def _cmd_show_config(args) -> int:
    cfg = _load_config(args)
    print(json.dumps(serialize_config(cfg), indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chuarc",
                                     description="Chua-circuit reservoir computer laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_jobs=True):
        p.add_argument("--config", help="JSON config file (missing fields take defaults)")
        p.add_argument("--profile", default="desk", choices=("full", "desk"))
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory")
        if with_jobs:
            p.add_argument("--jobs", type=int, default=exp.default_jobs(),
                           help="worker processes (env CHUARC_JOBS)")

    p = sub.add_parser("simulate", help="integrate the circuit and dump a trace CSV")
    common(p, with_jobs=False)
    p.add_argument("--t-end", type=float, default=20e-3)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--drive-amplitude", type=float, default=0.0)
    p.add_argument("--drive-frequency", type=float, default=100.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bifurcate", help="sweep a parameter and record steady-state extrema")
    common(p)
    p.add_argument("--param", required=True, choices=circ.SWEEPABLE)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=41)
    p.add_argument("--tap", default=circ.TAP_DIODE, choices=(circ.TAP_DIODE, circ.TAP_INDUCTOR))
    p.add_argument("--drive-amplitude", type=float, default=0.0)
    p.add_argument("--drive-frequency", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=1e-6)
    p.add_argument("--t-end", type=float, default=None)
    p.set_defaults(func=_cmd_bifurcate)

    p = sub.add_parser("spectrum", help="DFT magnitude of one tap of a trace CSV")
    common(p, with_jobs=False)
    p.add_argument("--trace", required=True)
    p.add_argument("--tap", default=circ.TAP_DIODE)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("dataset", help="generate a task dataset (CSV, or JSON for LWE)")
    common(p, with_jobs=False)
    p.add_argument("--task", default=None, choices=tasks.TASK_KINDS)
    p.add_argument("--n-cases", type=int, default=None)
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("train", help="run a full experiment and persist the weight")
    common(p)
    p.add_argument("--task", default=None, choices=tasks.TASK_KINDS)
    p.add_argument("--n-cases", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="re-score a saved weight on a fresh dataset")
    common(p)
    p.add_argument("--task", default=None, choices=tasks.TASK_KINDS)
    p.add_argument("--weight", required=True)
    p.add_argument("--n-cases", type=int, default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="grid of experiments over resistance and voltage centre")
    common(p)
    p.add_argument("--task", default=None, choices=tasks.TASK_KINDS)
    p.add_argument("--n-cases", type=int, default=None)
    p.add_argument("--r-start", type=float, default=1600.0)
    p.add_argument("--r-stop", type=float, default=2000.0)
    p.add_argument("--r-step", type=float, default=80.0)
    p.add_argument("--vc-start", type=float, default=0.4)
    p.add_argument("--vc-stop", type=float, default=1.2)
    p.add_argument("--vc-step", type=float, default=0.2)
    p.add_argument("--range-width", type=float, default=0.6)
    p.add_argument("--n-masks", type=int, nargs="*", default=None)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="render a CSV artifact to SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--out-svg", required=True)
    p.add_argument("--kind", default=None)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("show-config", help="print the resolved configuration")
    common(p, with_jobs=False)
    p.add_argument("--task", default=None, choices=tasks.TASK_KINDS)
    p.set_defaults(func=_cmd_show_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, InputDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ChuaRcError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
