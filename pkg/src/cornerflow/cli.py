"""Command-line interface.

Subcommands: analyze-eos, check-hypothesis, solve, validate, export, preset.
Exit codes: 0 success, 2 config error, 3 hypothesis fail, 4 solver fail,
5 audit fail.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import exports, pipeline, validation
from .config import PRESETS, ScenarioConfig, config_to_ini, load_config, preset
from .eos import build_delta_bar_profile, make_eos, sound_speed
from .errors import ConfigError, CornerFlowError
from .monitor import hypothesis_check

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_SOLVER = 4
EXIT_AUDIT = 5

_EOS_FLAGS = ("A", "gamma", "A1", "B1", "gamma1", "gamma2", "g", "k",
              "mu", "kappa0", "S1")


def _add_eos_flags(p):
    p.add_argument("--eos", required=True, help="EOS family name")
    for flag in _EOS_FLAGS:
        p.add_argument(f"--{flag}", type=float, default=None)
    p.add_argument("--tau0", type=float, default=1.0)


def _eos_from_args(args):
    params = {k: getattr(args, k) for k in _EOS_FLAGS if getattr(args, k) is not None}
    return make_eos(args.eos, **params)


def _add_scenario_source(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--preset", help="named preset scenario")
    g.add_argument("--config", help="path to an INI scenario file")
    p.add_argument("--n", type=int, default=None, help="override grid_n")
    p.add_argument("--out", default=None, help="output directory")


def _scenario_from_args(args) -> ScenarioConfig:
    cfg = preset(args.preset) if args.preset else load_config(args.config)
    if args.n:
        cfg = replace(cfg, grid_n=args.n)
    return cfg


def _outdir(args, cfg):
    out = args.out or os.path.join("runs", cfg.label)
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------


def cmd_analyze_eos(args):
    m = _eos_from_args(args)
    prof = build_delta_bar_profile(m, args.tau0, args.tau_max, args.samples)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    exports.write_profile_csv(os.path.join(out, "eos_profile.csv"), prof, m)
    exports.write_json(os.path.join(out, "eos_profile.json"), {
        "label": m.label, "tau0": args.tau0, "tau_max": args.tau_max,
        "extrema": prof.extrema, "delta_bar_star": prof.delta_bar_star,
        "tail_bound": prof.tail_bound})
    print(f"{m.label}: delta_bar(tau0)={prof.delta_bar[0]:.6f}, "
          f"extrema={prof.extrema}, delta_bar*~{prof.delta_bar_star:.6f} "
          f"(tail bound {prof.tail_bound:.2e})")
    print(f"wrote eos_profile.csv / eos_profile.json in {out}")
    return EXIT_OK


def cmd_check_hypothesis(args):
    m = _eos_from_args(args)
    c0 = sound_speed(m, args.tau0)
    u0 = args.u0 if args.u0 is not None else args.mach0 * c0
    rep = hypothesis_check(m, u0, args.tau0, args.tau_max)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        exports.write_json(os.path.join(args.out, "hypothesis.json"), rep.to_dict())
    mid = np.degrees(rep.alpha0 + 0.5 * np.pi)
    print(f"{m.label}: 2*dbar0+chi in [{np.degrees(rep.condition_left.min()):.2f},"
          f" {np.degrees(rep.condition_left.max()):.2f}] deg,"
          f" alpha0+90 = {mid:.2f} deg, 4*dbar0 = {np.degrees(rep.condition_right):.2f} deg")
    print(f"hypothesis: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_HYPOTHESIS


def _write_run_artifacts(out, res):
    cfg = res.config
    exports.write_config_echo(os.path.join(out, "config.ini"), cfg)
    if res.hypothesis is not None and "hypothesis" in cfg.outputs:
        exports.write_json(os.path.join(out, "hypothesis.json"),
                           res.hypothesis.to_dict())
    if res.grid is None:
        return
    if "grid" in cfg.outputs:
        exports.write_grid_csv(os.path.join(out, "grid.csv"), res.grid)
        exports.save_grid_npz(os.path.join(out, "grid.npz"), res.grid)
    if "curves" in cfg.outputs:
        exports.write_curve_csv(os.path.join(out, "pq.csv"), res.pq)
        exports.write_curve_csv(os.path.join(out, "pr.csv"), res.pr)
    if res.vacuum is not None and "vacuum" in cfg.outputs:
        slopes = pipeline.level_curve_slope_report(res)
        exports.write_vacuum(os.path.join(out, "vacuum.csv"),
                             os.path.join(out, "vacuum.json"),
                             res.vacuum, slope_bound=res.slope_bound,
                             extra={"levels": slopes["levels"]})
    if res.audit is not None and "audit" in cfg.outputs:
        exports.write_json(os.path.join(out, "audit.json"), res.audit.to_dict())
    if res.residuals and "residuals" in cfg.outputs:
        payload = {k: (v.to_dict() if hasattr(v, "to_dict") else v)
                   for k, v in res.residuals.items()}
        exports.write_json(os.path.join(out, "residuals.json"), payload)


def cmd_solve(args):
    cfg = _scenario_from_args(args)
    out = _outdir(args, cfg)
    try:
        res = pipeline.run_scenario(cfg)
    except CornerFlowError as e:
        print(f"solver failed: {e}", file=sys.stderr)
        return EXIT_SOLVER
    _write_run_artifacts(out, res)
    if not res.hypothesis_ok:
        print("hypothesis FAIL; no solve attempted (diagnostic written)")
        return EXIT_HYPOTHESIS
    for line in res.audit.summary_lines():
        print(line)
    print(f"vacuum frontier tau={res.vacuum.tau_frontier:.6g}, "
          f"Lipschitz {res.vacuum.lipschitz:.4f} vs bound {res.slope_bound:.4f}")
    print(f"artifacts in {out}")
    if not res.audit.passed:
        return EXIT_AUDIT
    if not pipeline.ceilings_ok(res):
        print("residual ceilings exceeded", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def cmd_validate(args):
    cfg = _scenario_from_args(args)
    out = _outdir(args, cfg)
    resolutions = [int(s) for s in args.resolutions.split(",")]
    worst = 0.0
    for name, triple in validation.SYNTHETIC_FIELDS.items():
        rep = validation.commutator_check(triple)
        worst = max(worst, rep.max_abs)
        print(f"commutator[{name}]: max {rep.max_abs:.3e}")
    if worst > 1e-10:
        print("commutator identity violated", file=sys.stderr)
        return EXIT_SOLVER
    try:
        table = pipeline.convergence_for_scenario(cfg, resolutions)
    except CornerFlowError as e:
        print(f"solver failed: {e}", file=sys.stderr)
        return EXIT_SOLVER
    exports.write_convergence_csv(os.path.join(out, "convergence.csv"), table)
    for row in table.rows:
        print(f"{row.metric:<18} values={['%.3e' % v for v in row.values]} "
              f"orders={['%.2f' % o for o in row.orders]}")
    print(f"first-order-or-better: {table.meets_first_order}")
    return EXIT_OK if table.meets_first_order else EXIT_SOLVER


def cmd_export(args):
    import json as _json
    grid = exports.load_grid_npz(os.path.join(args.run, "grid.npz"))
    meta = {}
    respath = os.path.join(args.run, "residuals.json")
    if os.path.exists(respath):
        res = _json.load(open(respath))
        meta["residual_maxima"] = {k: v.get("max_abs") for k, v in res.items()
                                   if isinstance(v, dict) and "max_abs" in v}
    cfgpath = os.path.join(args.run, "config.ini")
    if os.path.exists(cfgpath):
        from .config import load_config
        meta["scenario"] = load_config(cfgpath).label
    if args.what == "grid":
        if args.format == "csv":
            exports.write_grid_csv(os.path.join(args.run, "grid_export.csv"), grid)
            print("wrote grid_export.csv")
        else:
            exports.write_json(os.path.join(args.run, "grid_export.json"),
                               exports.grid_to_json_payload(grid, meta))
            print("wrote grid_export.json")
        return EXIT_OK
    raise ConfigError(f"unknown export target '{args.what}'")


def cmd_preset(args):
    if args.dump:
        print(config_to_ini(preset(args.dump)), end="")
        return EXIT_OK
    for name in sorted(PRESETS):
        cfg = PRESETS[name]
        print(f"{name:<10} {cfg.eos_family} u0={cfg.u0:.6g} tau0={cfg.tau0} "
              f"theta={cfg.theta:.6g} n={cfg.grid_n}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="cornerflow",
                                description="corner-expansion characteristic solver")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze-eos", help="delta-bar profile tables for an EOS")
    _add_eos_flags(pa)
    pa.add_argument("--tau-max", type=float, default=100.0)
    pa.add_argument("--samples", type=int, default=129)
    pa.add_argument("--out", default=None)
    pa.set_defaults(fn=cmd_analyze_eos)

    ph = sub.add_parser("check-hypothesis", help="angle-window admissibility check")
    _add_eos_flags(ph)
    ph.add_argument("--u0", type=float, default=None)
    ph.add_argument("--mach0", type=float, default=1.3,
                    help="u0 as a multiple of c0 when --u0 absent")
    ph.add_argument("--tau-max", type=float, default=100.0)
    ph.add_argument("--out", default=None)
    ph.set_defaults(fn=cmd_check_hypothesis)

    ps = sub.add_parser("solve", help="run the full construction and audits")
    _add_scenario_source(ps)
    ps.set_defaults(fn=cmd_solve)

    pv = sub.add_parser("validate", help="oracle suite and refinement study")
    _add_scenario_source(pv)
    pv.add_argument("--resolutions", default="16,32,64")
    pv.set_defaults(fn=cmd_validate)

    pe = sub.add_parser("export", help="re-export artifacts from a run directory")
    pe.add_argument("--run", required=True)
    pe.add_argument("--what", default="grid", choices=("grid",))
    pe.add_argument("--format", default="csv", choices=("csv", "json"))
    pe.set_defaults(fn=cmd_export)

    pp = sub.add_parser("preset", help="list or dump embedded presets")
    pp.add_argument("--dump", default=None)
    pp.set_defaults(fn=cmd_preset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CornerFlowError as e:
        print(f"solver failed: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
