"""Scenario configuration: flat INI files with one section per module,
plus the embedded presets for the worked scenarios."""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace

from .eos import BUILTIN_FAMILIES, make_eos
from .errors import ConfigError

SCHEMA_VERSION = "1"

_EOS_PARAM_KEYS = ("A", "gamma", "A1", "B1", "gamma1", "gamma2", "g", "k",
                   "mu", "kappa0", "S1")


@dataclass
class ScenarioConfig:
    eos_family: str
    eos_params: dict
    u0: float
    tau0: float
    theta: float
    grid_n: int = 128
    tau_end: float = None          # derived from theta/c_vac when absent
    eps1: float = None             # default 0.05 * dbar(tau0)
    eps2: float = None             # default 0.1 * (alpha0 + pi/2)
    c_vac_frac: float = 1e-4
    tol: float = 1e-10
    max_iter: int = 50
    phi_tol: float = None
    workers: int = 1
    omega_convention: str = "delta"
    drift_ceiling: float = None
    decomposition_ceiling: float = None
    outputs: tuple = ("grid", "curves", "vacuum", "audit", "hypothesis", "residuals")
    label: str = "scenario"

    def validate(self):
        if self.eos_family not in BUILTIN_FAMILIES:
            raise ConfigError(f"unknown EOS family '{self.eos_family}'")
        if not (-0.5 * math.pi < self.theta < 0.0):
            raise ConfigError(f"theta={self.theta} outside (-pi/2, 0)")
        if self.grid_n < 8:
            raise ConfigError("grid_n must be >= 8")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.omega_convention not in ("delta", "sigma"):
            raise ConfigError("omega_convention must be 'delta' or 'sigma'")
        try:
            eos = make_eos(self.eos_family, **self.eos_params)
        except Exception as e:
            raise ConfigError(f"EOS construction failed: {e}") from e
        from .eos import sound_speed
        if self.u0 <= sound_speed(eos, self.tau0):
            raise ConfigError("u0 must exceed the inflow sound speed")
        return eos


def config_to_ini(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser()
    cp["eos"] = {"family": cfg.eos_family,
                 **{k: repr(v) for k, v in cfg.eos_params.items()}}
    cp["flow"] = {"u0": repr(cfg.u0), "tau0": repr(cfg.tau0),
                  "theta": repr(cfg.theta)}
    cp["grid"] = {"n": str(cfg.grid_n),
                  "tau_end": "" if cfg.tau_end is None else repr(cfg.tau_end),
                  "c_vac_frac": repr(cfg.c_vac_frac)}
    cp["monitor"] = {"eps1": "" if cfg.eps1 is None else repr(cfg.eps1),
                     "eps2": "" if cfg.eps2 is None else repr(cfg.eps2),
                     "omega": cfg.omega_convention}
    cp["solver"] = {"tol": repr(cfg.tol), "max_iter": str(cfg.max_iter),
                    "phi_tol": "" if cfg.phi_tol is None else repr(cfg.phi_tol),
                    "workers": str(cfg.workers)}
    cp["limits"] = {
        "drift_ceiling": "" if cfg.drift_ceiling is None else repr(cfg.drift_ceiling),
        "decomposition_ceiling": ("" if cfg.decomposition_ceiling is None
                                  else repr(cfg.decomposition_ceiling))}
    cp["outputs"] = {"targets": ",".join(cfg.outputs), "label": cfg.label}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _get(cp, section, key, cast, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key).strip()
    if raw == "":
        return default
    try:
        return cast(raw)
    except ValueError as e:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {e}") from e


def config_from_ini(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"INI parse error: {e}") from e
    if not cp.has_section("eos") or not cp.has_section("flow"):
        raise ConfigError("config needs [eos] and [flow] sections")
    family = _get(cp, "eos", "family", str)
    if family is None:
        raise ConfigError("[eos] family missing")
    params = {}
    for key in cp.options("eos"):
        if key == "family":
            continue
        if key not in [k.lower() for k in _EOS_PARAM_KEYS]:
            raise ConfigError(f"unknown EOS parameter '{key}'")
        canonical = next(k for k in _EOS_PARAM_KEYS if k.lower() == key)
        params[canonical] = _get(cp, "eos", key, float)
    u0 = _get(cp, "flow", "u0", float)
    tau0 = _get(cp, "flow", "tau0", float, 1.0)
    theta = _get(cp, "flow", "theta", float)
    if u0 is None or theta is None:
        raise ConfigError("[flow] u0 and theta are required")
    outputs = _get(cp, "outputs", "targets", str)
    cfg = ScenarioConfig(
        eos_family=family, eos_params=params, u0=u0, tau0=tau0, theta=theta,
        grid_n=_get(cp, "grid", "n", int, 128),
        tau_end=_get(cp, "grid", "tau_end", float),
        c_vac_frac=_get(cp, "grid", "c_vac_frac", float, 1e-4),
        eps1=_get(cp, "monitor", "eps1", float),
        eps2=_get(cp, "monitor", "eps2", float),
        omega_convention=_get(cp, "monitor", "omega", str, "delta"),
        tol=_get(cp, "solver", "tol", float, 1e-10),
        max_iter=_get(cp, "solver", "max_iter", int, 50),
        phi_tol=_get(cp, "solver", "phi_tol", float),
        workers=_get(cp, "solver", "workers", int, 1),
        drift_ceiling=_get(cp, "limits", "drift_ceiling", float),
        decomposition_ceiling=_get(cp, "limits", "decomposition_ceiling", float),
        outputs=tuple(s.strip() for s in outputs.split(",")) if outputs else
        ScenarioConfig.__dataclass_fields__["outputs"].default,
        label=_get(cp, "outputs", "label", str, "scenario"),
    )
    cfg.validate()
    return cfg


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_ini(fh.read())


# ---------------------------------------------------------------------------
# presets (wall angles pinned so the run truncates inside the regime where
# the level-slope bound chain applies; see decisions notes)

_SQRT3 = math.sqrt(3.0)
_SQRT2 = math.sqrt(2.0)

PRESETS = {
    "dam-break": ScenarioConfig(
        eos_family="shallow_water", eos_params={"g": 2.0, "k": 1.0},
        u0=2.0 * _SQRT3, tau0=1.0, theta=-0.246737209192,
        grid_n=256, drift_ceiling=1e-4, decomposition_ceiling=0.05,
        label="dam-break"),
    "mhd": ScenarioConfig(
        eos_family="magneto",
        eos_params={"A1": 1.0, "gamma": 5.0 / 3.0, "mu": 1.0, "kappa0": 1.0},
        u0=2.0 * 1.6329931618554518, tau0=1.0, theta=-0.224128835761,
        grid_n=128, drift_ceiling=1e-3, decomposition_ceiling=0.1,
        label="mhd"),
    "vdw": ScenarioConfig(
        eos_family="vdw", eos_params={"S1": 0.28, "gamma": 0.05},
        u0=1.3 * 0.3136854105265796, tau0=8.0, theta=-0.200212169576,
        grid_n=96, drift_ceiling=1e-3, decomposition_ceiling=0.1,
        label="vdw"),
    "poly": ScenarioConfig(
        eos_family="polytropic", eos_params={"A": 1.0, "gamma": 2.0},
        u0=2.1 * _SQRT2, tau0=1.0, theta=-0.25118027635488,
        grid_n=128, drift_ceiling=1e-3, decomposition_ceiling=0.1,
        label="poly"),
}


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (have {sorted(PRESETS)})")
    return replace(PRESETS[name])
