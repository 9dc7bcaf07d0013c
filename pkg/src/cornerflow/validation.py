"""Independent oracles: PDE residuals on a Cartesian probe lattice,
characteristic-decomposition residuals, the commutator identity on synthetic
fields, and refinement-order measurement.

The probe lattice keeps the PDE oracle independent of the solver's own
(characteristic-aligned) geometry. Decomposition residuals evaluate both
sides at segment midpoints, matching the second-order trapezoidal closure of
the net.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator

from .eos import EosModel
from .errors import FieldDegeneracyError, HullError, ParameterError
from .goursat import CharGrid
from .monitor import f_coefficient, _eval_dp_d2p


@dataclass
class ResidualReport:
    name: str
    max_abs: float
    l2: float
    grid_spacing: float
    n_points: int
    per_node: np.ndarray = None

    def to_dict(self):
        return {"name": self.name, "max_abs": self.max_abs, "l2": self.l2,
                "grid_spacing": self.grid_spacing, "n_points": self.n_points}


def _report(name, vals, h, keep_field=False):
    vals = np.asarray(vals)
    flat = vals[np.isfinite(vals)]
    return ResidualReport(name=name, max_abs=float(np.max(np.abs(flat))),
                          l2=float(np.sqrt(np.mean(flat ** 2))),
                          grid_spacing=float(h), n_points=int(flat.size),
                          per_node=vals if keep_field else None)


# ---------------------------------------------------------------------------
# PDE residual on a probe lattice


def _pde_residual_from_arrays(eos: EosModel, xs, ys, U, V, T):
    """Central-difference residuals of the self-similar system for sampled
    velocity/volume arrays on the lattice xs x ys (NaN marks missing)."""
    if np.sum(np.isfinite(T)) < 16:
        raise HullError("fewer than 4x4 valid probes inside the hull")
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    n = len(xs)

    def dx(F):
        out = np.full_like(F, np.nan)
        out[1:-1, :] = (F[2:, :] - F[:-2, :]) / (2 * hx)
        return out

    def dy(F):
        out = np.full_like(F, np.nan)
        out[:, 1:-1] = (F[:, 2:] - F[:, :-2]) / (2 * hy)
        return out

    X = xs[:, None] * np.ones((1, n))
    Y = np.ones((n, 1)) * ys[None, :]
    Up, Vp = U - X, V - Y
    rho = 1.0 / T
    _, dp, _ = _eval_dp_d2p(eos, np.where(np.isfinite(T), T, 1.0))
    dp = np.where(np.isfinite(T), dp, np.nan)
    mass = dx(rho * Up) + dy(rho * Vp) + 2.0 * rho
    mom_x = Up * dx(U) + Vp * dy(U) + T * dp * dx(T)
    mom_y = Up * dx(V) + Vp * dy(V) + T * dp * dy(T)
    h = max(hx, hy)
    return {
        "mass": _report("mass", mass, h),
        "momentum_xi": _report("momentum_xi", mom_x, h),
        "momentum_eta": _report("momentum_eta", mom_y, h),
    }


def pde_residual_on_field(eos: EosModel, field_fn, bounds, n_probe: int):
    """Central-difference residuals of the self-similar system for a field
    sampler (xi, eta) -> (u, v, tau) on an n x n lattice inside bounds."""
    (x0, x1), (y0, y1) = bounds
    if n_probe < 4:
        raise HullError("fewer than 4x4 probes fit")
    xs = np.linspace(x0, x1, n_probe)
    ys = np.linspace(y0, y1, n_probe)
    U = np.full((n_probe, n_probe), np.nan)
    V = np.full_like(U, np.nan)
    T = np.full_like(U, np.nan)
    for a, x in enumerate(xs):
        for b, y in enumerate(ys):
            out = field_fn(x, y)
            if out is not None:
                u, v, t = out
                if np.isfinite(u) and np.isfinite(v) and np.isfinite(t):
                    U[a, b], V[a, b], T[a, b] = u, v, t
    return _pde_residual_from_arrays(eos, xs, ys, U, V, T)


def _net_boundary_polygon(grid: CharGrid):
    """Outer boundary of the solved diamond: PQ, far C- chain, far C+ chain
    reversed, PR reversed. Rows/columns are clipped to their solved prefix."""
    ok = grid.ok_mask()
    n_i, n_j = grid.shape
    jmax = np.array([int(np.argmin(ok[i, :])) - 1 if not ok[i, :].all() else n_j - 1
                     for i in range(n_i)])
    imax = np.array([int(np.argmin(ok[:, j])) - 1 if not ok[:, j].all() else n_i - 1
                     for j in range(n_j)])
    poly = []
    for j in range(jmax[0] + 1):                      # along PQ
        poly.append((grid.xi[0, j], grid.eta[0, j]))
    jq = jmax[0]
    for i in range(1, imax[jq] + 1):                  # down the far C- chain
        poly.append((grid.xi[i, jq], grid.eta[i, jq]))
    ir = imax[0]
    for j in range(jmax[ir], 0, -1):                  # back along the far C+ chain
        if ok[ir, j]:
            poly.append((grid.xi[ir, j], grid.eta[ir, j]))
    for i in range(ir, -1, -1):                       # up PR to the corner
        poly.append((grid.xi[i, 0], grid.eta[i, 0]))
    return np.array(poly)


def pde_residual(grid: CharGrid, eos: EosModel, n_probe: int = None):
    """Interpolate the solved net to a Cartesian lattice clipped to the net's
    own boundary polygon and evaluate the three self-similar equations by
    central differences."""
    from matplotlib.path import Path

    ok = grid.ok_mask()
    pts = np.column_stack([grid.xi[ok], grid.eta[ok]])
    if len(pts) < 16:
        raise HullError("too few solved nodes")
    iu = LinearNDInterpolator(pts, grid.u[ok])
    iv = LinearNDInterpolator(pts, grid.v[ok])
    it = LinearNDInterpolator(pts, grid.tau[ok])
    if n_probe is None:
        n_probe = 2 * max(grid.shape)
    x0, x1 = pts[:, 0].min(), pts[:, 0].max()
    y0, y1 = pts[:, 1].min(), pts[:, 1].max()
    # keep stencils clear of boundary-adjacent sliver facets of the Delaunay
    # triangulation (consecutive boundary nodes are nearly collinear)
    h_net = max(np.nanmax(grid.arc_plus()), np.nanmax(grid.arc_minus()))
    margin = max(2.5 * max(x1 - x0, y1 - y0) / n_probe, 2.0 * h_net)
    path = Path(_net_boundary_polygon(grid))

    xs = np.linspace(x0, x1, n_probe)
    ys = np.linspace(y0, y1, n_probe)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    probes = np.column_stack([X.ravel(), Y.ravel()])
    inside = np.ones(len(probes), dtype=bool)
    for sx, sy in ((0, 0), (margin, 0), (-margin, 0), (0, margin), (0, -margin)):
        inside &= path.contains_points(probes + np.array([sx, sy]))
    inside = inside.reshape(X.shape)
    U = np.where(inside, iu(X, Y), np.nan)
    V = np.where(inside, iv(X, Y), np.nan)
    T = np.where(inside, it(X, Y), np.nan)
    return _pde_residual_from_arrays(eos, xs, ys, U, V, T)


# ---------------------------------------------------------------------------
# characteristic-decomposition residuals on the net


def decomposition_residual(grid: CharGrid, eos: EosModel):
    """Residuals of the four first-order decompositions, with directional
    differences along the net and coefficients at segment midpoints."""
    res = {}
    dpa, dpb = grid.d_plus(grid.alpha), grid.d_plus(grid.beta)
    dma, dmb = grid.d_minus(grid.alpha), grid.d_minus(grid.beta)
    dpt, dmt = grid.d_plus(grid.tau), grid.d_minus(grid.tau)
    pp, pm = grid.pair_ok_plus(), grid.pair_ok_minus()
    h = float(np.nanmean(grid.arc_plus()))

    def mids(f, axis):
        out = np.full(grid.shape, np.nan)
        if axis == 1:
            out[:, 1:] = 0.5 * (f[:, 1:] + f[:, :-1])
        else:
            out[1:, :] = 0.5 * (f[1:, :] + f[:-1, :])
        return out

    for axis, pair, da, db, dt, tagA, tagB in (
            (1, pp, dpa, dpb, dpt, "c_dplus_alpha", "c_dplus_beta"),
            (0, pm, dma, dmb, dmt, "c_dminus_alpha", "c_dminus_beta")):
        tm = mids(grid.tau, axis)[pair]
        dm = mids(grid.delta(), axis)[pair]
        _, dpv, d2pv = _eval_dp_d2p(eos, tm)
        cm = np.sqrt(-tm * tm * dpv)
        om = -(4.0 * dpv + tm * d2pv) / (tm * d2pv) - np.tan(dm) ** 2
        coef = tm * tm * d2pv / cm
        s2 = np.sin(dm) ** 2
        if axis == 1:
            rhs_a = 0.25 * coef * om * np.sin(2 * dm) * dt[pair]
            rhs_b = 0.5 * coef * np.tan(dm) * dt[pair] - 2.0 * s2
        else:
            rhs_a = -0.5 * coef * np.tan(dm) * dt[pair] + 2.0 * s2
            rhs_b = -0.25 * coef * om * np.sin(2 * dm) * dt[pair]
        res[tagA] = _report(tagA, cm * da[pair] - rhs_a, h)
        res[tagB] = _report(tagB, cm * db[pair] - rhs_b, h)
    return res


def second_order_residual(grid: CharGrid, eos: EosModel):
    """Second directional differences of rho against the second-order
    decomposition right sides; also checks f > 0 pointwise."""
    if min(grid.shape) < 3:
        raise ParameterError("need at least 3 nodes per direction")
    rho = 1.0 / grid.tau
    dpr, dmr = grid.d_plus(rho), grid.d_minus(rho)
    dm_dp = grid.d_minus(dpr)      # d- of (d+ rho)
    dp_dm = grid.d_plus(dmr)
    ok = grid.interior_mask()
    valid = ok & np.isfinite(dm_dp) & np.isfinite(dp_dm) & np.isfinite(dpr) & np.isfinite(dmr)
    t = grid.tau[valid]
    d = grid.delta()[valid]
    _, dpv, d2pv = _eval_dp_d2p(eos, t)
    c = np.sqrt(-t * t * dpv)
    f = f_coefficient(eos, t, d)
    pref = t ** 4 * d2pv / (4.0 * c * np.cos(d) ** 2)
    rhs_minus_plus = dpr[valid] * (np.sin(2 * d) + pref * (dpr[valid] + (f - 1.0) * dmr[valid]))
    rhs_plus_minus = dmr[valid] * (np.sin(2 * d) + pref * (dmr[valid] + (f - 1.0) * dpr[valid]))
    h = float(np.nanmean(grid.arc_plus()))
    return {
        "c_dminus_dplus_rho": _report("c_dminus_dplus_rho",
                                      c * dm_dp[valid] - rhs_minus_plus, h),
        "c_dplus_dminus_rho": _report("c_dplus_dminus_rho",
                                      c * dp_dm[valid] - rhs_plus_minus, h),
        "f_min": float(np.min(f)),
    }


# ---------------------------------------------------------------------------
# commutator identity on synthetic fields


@dataclass(frozen=True)
class SyntheticTriple:
    """Smooth scalar I and angle fields with hand-coded exact derivatives."""

    name: str
    I: callable
    Ix: callable
    Iy: callable
    Ixx: callable
    Ixy: callable
    Iyy: callable
    alpha: callable
    alpha_x: callable
    alpha_y: callable
    beta: callable
    beta_x: callable
    beta_y: callable


def _const(v):
    return lambda x, y: v


SYNTHETIC_FIELDS_VERSION = "1"

SYNTHETIC_FIELDS = {
    "constant": SyntheticTriple(
        "constant", _const(1.0), _const(0.0), _const(0.0), _const(0.0),
        _const(0.0), _const(0.0),
        _const(0.9), _const(0.0), _const(0.0),
        _const(-0.9), _const(0.0), _const(0.0)),
    "linear-xi": SyntheticTriple(
        "linear-xi", lambda x, y: x, _const(1.0), _const(0.0), _const(0.0),
        _const(0.0), _const(0.0),
        _const(0.7), _const(0.0), _const(0.0),
        _const(-0.6), _const(0.0), _const(0.0)),
    "bilinear-mild": SyntheticTriple(
        "bilinear-mild", lambda x, y: x * y, lambda x, y: y, lambda x, y: x,
        _const(0.0), _const(1.0), _const(0.0),
        lambda x, y: 0.9 + 0.05 * x, _const(0.05), _const(0.0),
        lambda x, y: -0.9 + 0.05 * y, _const(0.0), _const(0.05)),
    "trig": SyntheticTriple(
        "trig", lambda x, y: np.sin(x) * np.cos(y),
        lambda x, y: np.cos(x) * np.cos(y),
        lambda x, y: -np.sin(x) * np.sin(y),
        lambda x, y: -np.sin(x) * np.cos(y),
        lambda x, y: -np.cos(x) * np.sin(y),
        lambda x, y: -np.sin(x) * np.cos(y),
        lambda x, y: 0.7 + 0.1 * x + 0.05 * y, _const(0.1), _const(0.05),
        lambda x, y: -0.8 + 0.04 * x - 0.06 * y, _const(0.04), _const(-0.06)),
}


def commutator_check(triple: SyntheticTriple, n_probe: int = 11,
                     bounds=((0.0, 1.0), (0.0, 1.0))) -> ResidualReport:
    """Both sides of the normalized commutator relation with exact analytic
    derivatives; an identity for any smooth triple with alpha > beta."""
    (x0, x1), (y0, y1) = bounds
    xs = np.linspace(x0, x1, n_probe)
    ys = np.linspace(y0, y1, n_probe)
    worst = []
    for x in xs:
        for y in ys:
            a, b = triple.alpha(x, y), triple.beta(x, y)
            d2 = a - b
            s2d = math.sin(d2)
            if abs(s2d) < 1e-8:
                raise FieldDegeneracyError(f"sin 2*delta ~ 0 at ({x},{y})")
            ca, sa = math.cos(a), math.sin(a)
            cb, sb = math.cos(b), math.sin(b)
            Ix, Iy = triple.Ix(x, y), triple.Iy(x, y)
            Ixx, Ixy, Iyy = triple.Ixx(x, y), triple.Ixy(x, y), triple.Iyy(x, y)
            ax_, ay_ = triple.alpha_x(x, y), triple.alpha_y(x, y)
            bx_, by_ = triple.beta_x(x, y), triple.beta_y(x, y)
            dpI = ca * Ix + sa * Iy
            dmI = cb * Ix + sb * Iy
            # d/dxi and d/deta of (cos a Ix + sin a Iy)
            dpI_x = -sa * ax_ * Ix + ca * Ixx + ca * ax_ * Iy + sa * Ixy
            dpI_y = -sa * ay_ * Ix + ca * Ixy + ca * ay_ * Iy + sa * Iyy
            dmI_x = -sb * bx_ * Ix + cb * Ixx + cb * bx_ * Iy + sb * Ixy
            dmI_y = -sb * by_ * Ix + cb * Ixy + cb * by_ * Iy + sb * Iyy
            lhs = (cb * dpI_x + sb * dpI_y) - (ca * dmI_x + sa * dmI_y)
            dpb = ca * bx_ + sa * by_
            dma = cb * ax_ + sb * ay_
            c2d = math.cos(d2)
            rhs = ((c2d * dpb - dma) * dmI - (dpb - c2d * dma) * dpI) / s2d
            worst.append(lhs - rhs)
    return _report(f"commutator[{triple.name}]", worst, (x1 - x0) / (n_probe - 1))


# ---------------------------------------------------------------------------
# refinement-order measurement


@dataclass
class ConvergenceRow:
    metric: str
    values: list
    orders: list

    def to_dict(self):
        return {"metric": self.metric, "values": self.values, "orders": self.orders}


@dataclass
class ConvergenceTable:
    resolutions: list
    rows: list
    meets_first_order: bool

    def to_dict(self):
        return {"resolutions": self.resolutions,
                "rows": [r.to_dict() for r in self.rows],
                "meets_first_order": bool(self.meets_first_order)}

    def row(self, metric):
        for r in self.rows:
            if r.metric == metric:
                return r
        raise KeyError(metric)


def convergence_study(solve_fn, resolutions, eos: EosModel) -> ConvergenceTable:
    """Run solve_fn at each resolution (geometric progression, >= 3 entries)
    and measure observed orders of the Bernoulli drift, the four
    decomposition residuals, and the far-corner position."""
    resolutions = list(resolutions)
    if len(resolutions) < 3:
        raise ParameterError("need at least 3 resolutions")
    ratios = [resolutions[k + 1] / resolutions[k] for k in range(len(resolutions) - 1)]
    if any(abs(r - ratios[0]) > 1e-12 for r in ratios):
        raise ParameterError("resolutions must form a geometric progression")

    metrics = {"bernoulli_drift": [], "position": []}
    dec_keys = ["c_dplus_alpha", "c_dplus_beta", "c_dminus_alpha", "c_dminus_beta"]
    for k in dec_keys:
        metrics[k] = []
    corners = []
    for n in resolutions:
        grid = solve_fn(int(n))
        inter = grid.interior_mask()
        metrics["bernoulli_drift"].append(
            float(np.max(np.abs(grid.phi_alt - grid.phi)[inter])))
        dec = decomposition_residual(grid, eos)
        for k in dec_keys:
            metrics[k].append(dec[k].max_abs)
        corners.append((grid.xi[-1, -1], grid.eta[-1, -1]))

    # position error against the finest run
    ref = corners[-1]
    pos_err = [float(np.hypot(c[0] - ref[0], c[1] - ref[1])) for c in corners[:-1]]
    metrics["position"] = pos_err

    logr = math.log(ratios[0])
    rows = []
    ok_first = True
    for name, vals in metrics.items():
        orders = []
        for k in range(len(vals) - 1):
            if vals[k + 1] <= 0 or vals[k] <= 0:
                orders.append(math.nan)
                continue
            orders.append(math.log(vals[k] / vals[k + 1]) / logr)
        if any(np.isfinite(o) and vals[k + 1] > vals[k]
               for k, o in enumerate(orders)):
            warnings.warn(f"nonmonotone residual for {name}", RuntimeWarning)
        rows.append(ConvergenceRow(metric=name, values=vals, orders=orders))
        if name != "position" and orders and np.isfinite(orders[-1]):
            ok_first = ok_first and (orders[-1] >= 1.0 or vals[-1] < 1e-12)
    return ConvergenceTable(resolutions=resolutions, rows=rows,
                            meets_first_order=ok_first)
