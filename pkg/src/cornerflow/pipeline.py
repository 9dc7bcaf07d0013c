"""Scenario orchestration: waves -> goursat -> monitor -> validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import goursat, monitor, validation, waves
from .config import ScenarioConfig
from .eos import build_delta_bar_profile, delta_bar, sound_speed
from .errors import ConfigError


@dataclass
class RunResult:
    config: ScenarioConfig
    eos: object
    alpha0: float
    eps1: float
    eps2: float
    tau_end: float
    profile: object = None
    hypothesis: object = None
    pq: object = None
    pr: object = None
    grid: object = None
    audit: object = None
    vacuum: object = None
    residuals: dict = field(default_factory=dict)
    slope_bound: float = None

    @property
    def hypothesis_ok(self):
        return self.hypothesis is not None and self.hypothesis.passed


def derive_tau_end(cfg: ScenarioConfig, eos) -> float:
    """Solved tau range: the wall alignment of the centered fan or the
    vacuum threshold, whichever the expansion meets first."""
    if cfg.tau_end is not None:
        if cfg.tau_end <= cfg.tau0:
            raise ConfigError("tau_end must exceed tau0")
        return cfg.tau_end
    wave = waves.CenteredWave(eos, cfg.u0, cfg.tau0)
    _, tau_w, _ = wave.vacuum_alpha(cfg.theta, c_frac=cfg.c_vac_frac)
    return tau_w


def run_scenario(cfg: ScenarioConfig, solve_only: bool = False,
                 skip_hypothesis_gate: bool = False) -> RunResult:
    """Execute the full construction; stops early (grid None) when the
    admissibility hypothesis fails, unless the gate is skipped."""
    eos = cfg.validate()
    a0 = monitor.alpha0_at_P(eos, cfg.u0, cfg.tau0)
    eps1 = cfg.eps1 if cfg.eps1 is not None else 0.05 * delta_bar(eos, cfg.tau0)
    eps2 = cfg.eps2 if cfg.eps2 is not None else 0.1 * (a0 + 0.5 * math.pi)
    tau_end = derive_tau_end(cfg, eos)
    out = RunResult(config=cfg, eos=eos, alpha0=a0, eps1=eps1, eps2=eps2,
                    tau_end=tau_end)

    out.profile = build_delta_bar_profile(eos, cfg.tau0, 8.0 * tau_end, 96)
    out.hypothesis = monitor.hypothesis_check(eos, cfg.u0, cfg.tau0,
                                              8.0 * tau_end, profile=out.profile)
    if not out.hypothesis.passed and not skip_hypothesis_gate:
        return out

    out.pq = waves.curve_PQ(eos, cfg.u0, cfg.tau0, tau_end, cfg.grid_n)
    out.pr = waves.curve_PR_with_states(eos, cfg.u0, cfg.tau0, tau_end, cfg.grid_n)
    c0 = sound_speed(eos, cfg.tau0)
    out.grid = goursat.march_grid(out.pq, out.pr, eos, cfg.tol,
                                  max_iter=cfg.max_iter,
                                  c_vac=cfg.c_vac_frac * c0, eps2=eps2,
                                  phi_tol=cfg.phi_tol)
    if solve_only:
        return out

    out.audit = monitor.audit_grid(out.grid, eos, out.profile, a0, eps1, eps2,
                                   m1=monitor.m1_bound(out.pq, out.pr),
                                   omega_convention=cfg.omega_convention)
    out.vacuum = goursat.extract_vacuum_boundary(out.grid,
                                                 cfg.c_vac_frac * c0)
    chi_f = out.profile.chi_at(out.vacuum.tau_frontier)
    out.slope_bound = 2.0 / math.sin(2.0 * delta_bar(eos, cfg.tau0) + chi_f - eps1)

    if "residuals" in cfg.outputs:
        out.residuals = dict(validation.decomposition_residual(out.grid, eos))
        out.residuals.update(validation.pde_residual(out.grid, eos))
        second = validation.second_order_residual(out.grid, eos)
        out.residuals["c_dminus_dplus_rho"] = second["c_dminus_dplus_rho"]
        out.residuals["c_dplus_dminus_rho"] = second["c_dplus_dminus_rho"]
        out.residuals["f_min"] = second["f_min"]
    return out


def ceilings_ok(result: RunResult) -> bool:
    """Drift and residual ceilings from the config (when set)."""
    cfg = result.config
    ok = True
    if result.grid is not None and cfg.drift_ceiling is not None:
        inter = result.grid.interior_mask()
        drift = float(np.max(np.abs(result.grid.phi_alt - result.grid.phi)[inter]))
        ok &= drift <= cfg.drift_ceiling
    if cfg.decomposition_ceiling is not None and result.residuals:
        for key in ("c_dplus_alpha", "c_dplus_beta", "c_dminus_alpha",
                    "c_dminus_beta"):
            if key in result.residuals:
                ok &= result.residuals[key].max_abs <= cfg.decomposition_ceiling
    return bool(ok)


def level_curve_slope_report(result: RunResult, n_levels: int = 8) -> dict:
    """Max |dxi/deta| per tau level against the slope bound."""
    grid = result.grid
    tau_f = result.vacuum.tau_frontier
    levels = np.linspace(grid.tau0, tau_f, n_levels + 1)[1:]
    rows = []
    for t in levels:
        pts = goursat.extract_level_curve(grid, float(t) * (1 - 1e-12))
        if len(pts) < 2:
            continue
        d = np.diff(pts, axis=0)
        keep = np.abs(d[:, 1]) > 1e-13
        slope = float(np.max(np.abs(d[keep, 0] / d[keep, 1]))) if keep.any() else 0.0
        rows.append({"tau": float(t), "max_slope": slope,
                     "bound": result.slope_bound,
                     "within": bool(slope <= result.slope_bound)})
    return {"levels": rows, "lipschitz": result.vacuum.lipschitz,
            "tau_frontier": result.vacuum.tau_frontier,
            "bound": result.slope_bound}


def convergence_for_scenario(cfg: ScenarioConfig, resolutions):
    """Refinement study with the scenario's physics, solve-only runs."""
    eos = cfg.validate()
    tau_end = derive_tau_end(cfg, eos)

    def solve_fn(n):
        from dataclasses import replace
        sub = replace(cfg, grid_n=int(n))
        res = run_scenario(sub, solve_only=True, skip_hypothesis_gate=True)
        return res.grid

    return validation.convergence_study(solve_fn, resolutions, eos)
