"""Command-line surface.

Subcommands:
  run <scenario> [--out DIR] [--dt X]   integrate a scenario, write trace CSV
                                        and metrics JSON (autopilot bench when
                                        the scenario has test_inputs)
  validate <scenario>                   structural and gain checks only;
                                        prints spectra and gain floors
  tgo <scenario>                        initial true and estimated time-to-go
  metrics <trace.csv>                   recompute metrics from a saved trace
  sweep <scenario> --param a.b.c --values v1,v2,...  [--jobs N] [--out DIR]
                                        parallel one-run-per-value sweep

Scenarios are file paths or names of bundled scenarios.  The output
directory resolves as --out, then $SALVOSIM_OUTDIR, then the scenario's own
output.directory, then the working directory.  Exit codes: 0 ok, 1 scenario
validation problem, 2 runtime failure.
"""

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from salvosim import guidance as gd
from salvosim import observer as ob
from salvosim.engagement import geometry_arrays, time_to_go_arrays
from salvosim.graph import follower_spectrum, leader_partition, mirror_fiedler
from salvosim.scenario import (
    ScenarioError,
    load_scenario,
    parse_scenario,
    resolve_scenario_path,
)
from salvosim.simulator import (
    InvalidAfterEvent,
    NonFiniteState,
    Trace,
    metrics_from_trace,
    run_autopilot_test,
    run_scenario,
)

ENV_OUTDIR = "SALVOSIM_OUTDIR"


def _load(arg):
    return load_scenario(resolve_scenario_path(arg))


def _outdir(args, cfg):
    directory = getattr(args, "out", None) or os.environ.get(ENV_OUTDIR) or cfg.output_dir or "."
    os.makedirs(directory, exist_ok=True)
    return directory


def _fmt_vec(values, fmt="%.2f"):
    return "[" + ", ".join(fmt % v for v in values) + "]"


def _write_metrics(metrics, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics.as_flat_dict(), fh, indent=2, sort_keys=False)
        fh.write("\n")


def cmd_run(args):
    cfg = _load(args.scenario)
    outdir = _outdir(args, cfg)
    if cfg.test_inputs is not None:
        results = run_autopilot_test(cfg, dt=args.dt)
        for kind, trace in results.items():
            path = os.path.join(outdir, f"{cfg.name}_{kind}.csv")
            trace.to_csv(path)
            worst = float(np.max(np.abs(trace.s[trace.t >= cfg.autopilot_horizon])))
            print(f"{kind}: wrote {path}; max |tracking error| after horizon = {worst:.4g} m/s^2")
        return 0
    trace, metrics = run_scenario(cfg, dt=args.dt)
    trace_path = os.path.join(outdir, f"{cfg.name}_trace.csv")
    metrics_path = os.path.join(outdir, f"{cfg.name}_metrics.json")
    trace.to_csv(trace_path)
    _write_metrics(metrics, metrics_path)
    print(f"wrote {trace_path} and {metrics_path}")
    _print_metrics(metrics)
    return 0


def _print_metrics(metrics):
    for key, value in metrics.as_flat_dict().items():
        print(f"  {key} = {value}")


def cmd_validate(args):
    cfg = _load(args.scenario)
    spectrum = follower_spectrum(leader_partition(cfg.sensing, 0).follower_laplacian)
    b_floor = ob.beta_floor(spectrum)
    e_floor = gd.eta_floor(cfg.actuation)
    beta = cfg.observer_beta if not cfg.beta_auto else ob.AUTO_BETA_MARGIN * b_floor
    eta = cfg.guidance_eta if not cfg.eta_auto else gd.AUTO_ETA_MARGIN * e_floor
    print(f"{cfg.name}: valid ({cfg.n_agents} agents)")
    print(f"  sensing weights = {_fmt_vec(spectrum.weights, '%.4f')}")
    print(f"  min eig of symmetrized form = {spectrum.min_eig_sym:.6f}")
    print(f"  weight range = [{spectrum.min_weight:.4f}, {spectrum.max_weight:.4f}]")
    print(f"  actuation mirror Fiedler value = {mirror_fiedler(cfg.actuation):.6f}")
    print(f"  observer beta floor = {b_floor:.6f} (beta = {beta:.6f}, alpha = {cfg.observer_alpha})")
    print(f"  guidance eta floor = {e_floor:.6f} (eta = {eta:.6f}, zeta = {cfg.guidance_zeta})")
    return 0


def cmd_tgo(args):
    cfg = _load(args.scenario)
    kappa = 4.0 * cfg.nav_gain - 2.0
    r, _th, sigma, _ = geometry_arrays(cfg.position_m[:, 0], cfg.position_m[:, 1],
                                       cfg.heading_rad, cfg.speed, cfg.target_m)
    true_tgo = time_to_go_arrays(r, sigma, cfg.speed, kappa)
    r_e, _th, sigma_e, _ = geometry_arrays(cfg.position_m[:, 0], cfg.position_m[:, 1],
                                           cfg.heading_rad, cfg.speed, cfg.estimate_m)
    est_tgo = time_to_go_arrays(r_e, sigma_e, cfg.speed, kappa)
    print(f"initial true time-to-go (s):      {_fmt_vec(true_tgo)}")
    print(f"initial estimated time-to-go (s): {_fmt_vec(est_tgo)}")
    return 0


def cmd_metrics(args):
    trace = Trace.from_csv(args.trace)
    metrics = metrics_from_trace(trace)
    _print_metrics(metrics)
    return 0


def _set_dotted(mapping, dotted, value):
    keys = dotted.split(".")
    node = mapping
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise KeyError(dotted)
        node = node[key]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise KeyError(dotted)
    node[keys[-1]] = value


def _sweep_one(payload):
    raw, name, value = payload
    cfg = parse_scenario(raw, name=name)
    _trace, metrics = run_scenario(cfg)
    return value, metrics.as_flat_dict()


def cmd_sweep(args):
    cfg = _load(args.scenario)
    values = []
    for token in args.values.split(","):
        token = token.strip()
        try:
            values.append(json.loads(token))
        except json.JSONDecodeError:
            values.append(token)
    jobs = []
    for value in values:
        raw = copy.deepcopy(cfg.raw)
        try:
            _set_dotted(raw, args.param, value)
        except KeyError:
            print(f"error: parameter path {args.param!r} not present in the scenario",
                  file=sys.stderr)
            return 1
        jobs.append((raw, f"{cfg.name}[{args.param}={value}]", value))
    workers = args.jobs or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(job) for job in jobs]

    rows = []
    for value, flat in results:
        rows.append((value, flat))
        spread = flat.get("spread_s")
        worst_miss = max((v for k, v in flat.items() if k.endswith("_miss_m") and v is not None),
                         default=math.nan)
        print(f"{args.param}={value}: spread_s={spread} max_miss_m={worst_miss} "
              f"consensus_time_s={flat.get('consensus_time_s')}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"{cfg.name}_sweep.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump([{"value": v, "metrics": m} for v, m in rows], fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="salvosim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a scenario and write trace/metrics")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--dt", type=float, default=None, help="override integration step (s)")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="graph and gain checks; print floors")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=cmd_validate)

    p_tgo = sub.add_parser("tgo", help="print initial true/estimated time-to-go")
    p_tgo.add_argument("scenario")
    p_tgo.set_defaults(func=cmd_tgo)

    p_met = sub.add_parser("metrics", help="recompute metrics from a trace CSV")
    p_met.add_argument("trace")
    p_met.set_defaults(func=cmd_metrics)

    p_sw = sub.add_parser("sweep", help="run the scenario once per parameter value")
    p_sw.add_argument("scenario")
    p_sw.add_argument("--param", required=True, help="dotted scenario key, e.g. times.dt")
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    p_sw.add_argument("--jobs", type=int, default=None, help="parallel workers")
    p_sw.add_argument("--out", default=None, help="write sweep results JSON here")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    except (InvalidAfterEvent, NonFiniteState, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
