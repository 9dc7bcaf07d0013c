"""Deterministic CSV/JSON artifact writers (UTF-8, newline-terminated,
fixed column order, %.17g floats)."""

from __future__ import annotations

import json

import numpy as np

from .config import SCHEMA_VERSION, config_to_ini

GRID_COLUMNS = ("xi", "eta", "u", "v", "tau", "phi", "alpha", "beta",
                "status")
CURVE_COLUMNS = ("xi", "eta", "u", "v", "tau", "phi", "alpha", "beta")


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, payload: dict):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_grid_csv(path, grid):
    write_csv(path, GRID_COLUMNS, grid.to_rows())


def write_curve_csv(path, curve):
    rows = zip(curve.xi, curve.eta, curve.u, curve.v, curve.tau, curve.phi,
               curve.alpha, curve.beta)
    write_csv(path, CURVE_COLUMNS, rows)


def write_vacuum(csv_path, json_path, vacuum, slope_bound=None, extra=None):
    write_csv(csv_path, ("xi", "eta"), vacuum.points)
    payload = {"tau_frontier": vacuum.tau_frontier,
               "lipschitz": vacuum.lipschitz,
               "n_vertical_segments": vacuum.n_vertical,
               "slope_bound": slope_bound}
    if extra:
        payload.update(extra)
    write_json(json_path, payload)


def save_grid_npz(path, grid):
    np.savez(path, xi=grid.xi, eta=grid.eta, u=grid.u, v=grid.v, tau=grid.tau,
             phi=grid.phi, phi_alt=grid.phi_alt, alpha=grid.alpha,
             beta=grid.beta, c=grid.c, status=grid.status,
             tau0=np.array([grid.tau0]))


def load_grid_npz(path):
    from .goursat import CharGrid
    z = np.load(path)
    return CharGrid(xi=z["xi"], eta=z["eta"], u=z["u"], v=z["v"], tau=z["tau"],
                    phi=z["phi"], phi_alt=z["phi_alt"], alpha=z["alpha"],
                    beta=z["beta"], c=z["c"], status=z["status"],
                    tau0=float(z["tau0"][0]))


def grid_to_json_payload(grid, meta=None):
    base = {k: v for k, v in grid.meta.items() if not isinstance(v, list)}
    if meta:
        base.update(meta)
    return {"shape": list(grid.shape), "tau0": grid.tau0, "meta": base,
            "columns": list(GRID_COLUMNS),
            "row_order": "row-major in (i, j)",
            "rows": [list(r) for r in grid.to_rows()]}


def write_config_echo(path, cfg):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_to_ini(cfg))


def write_convergence_csv(path, table):
    header = ["metric"] + [f"n={n}" for n in table.resolutions] \
        + [f"order_{k}" for k in range(len(table.resolutions) - 1)]
    rows = []
    for r in table.rows:
        vals = list(r.values) + [""] * (len(table.resolutions) - len(r.values))
        orders = list(r.orders) + [""] * (len(table.resolutions) - 1 - len(r.orders))
        rows.append([r.metric] + vals + orders)
    write_csv(path, header, rows)


def write_profile_csv(path, profile, eos_model):
    from .eos import m_value
    rows = []
    taus = profile.tau_samples
    ms = [m_value(eos_model, float(t)) for t in taus]
    dm = np.gradient(ms, taus)
    for k, t in enumerate(taus):
        rows.append((t, ms[k], dm[k], profile.delta_bar[k], profile.psi[k],
                     profile.chi[k]))
    write_csv(path, ("tau", "m", "dm_dtau", "delta_bar", "psi", "chi"), rows)
