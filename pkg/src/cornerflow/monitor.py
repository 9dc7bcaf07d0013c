"""Admissibility hypothesis, invariant regions, and grid audits.

Everything here *checks* a solved net against the bounds the existence
construction asserts; nothing mutates the grid. Box membership is strict at
interior nodes and non-strict on the boundary (the corner P legitimately
sits on the box edge).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eos import EosModel, build_delta_bar_profile, delta_bar, sound_speed
from .errors import SignConditionError, SubsonicError
from .goursat import CharGrid
from .waves import BoundaryCurve, interaction_point

_EDGE_TOL = 1e-10


def alpha0_at_P(eos: EosModel, u0: float, tau0: float) -> float:
    """C+ characteristic angle at P from the rationalized eigenvalue form
    (V^2-c^2)/(UV - c sqrt(q^2-c^2)), which stays finite at U = c."""
    c0 = sound_speed(eos, tau0)
    if u0 <= c0:
        raise SubsonicError(f"u0={u0} <= c0={c0}")
    _, eta_p = interaction_point(eos, u0, tau0)
    U, V = c0, -eta_p
    root = math.sqrt(U * U + V * V - c0 * c0)   # = eta_p
    lam = (V * V - c0 * c0) / (U * V - c0 * root)
    return math.atan(lam)


@dataclass
class HypothesisReport:
    delta_bar_0: float
    alpha0: float
    tau_samples: np.ndarray
    condition_left: np.ndarray      # 2*dbar(tau0) + chi(tau)
    condition_right: float          # 4*dbar(tau0)
    chi_max: float
    psi_max: float
    passed_per_sample: np.ndarray
    passed: bool

    def to_dict(self):
        return {
            "delta_bar_0": self.delta_bar_0,
            "alpha0": self.alpha0,
            "alpha0_plus_half_pi": self.alpha0 + 0.5 * math.pi,
            "condition_right": self.condition_right,
            "chi_max": self.chi_max,
            "psi_max": self.psi_max,
            "passed": bool(self.passed),
            "samples": [
                {"tau": float(t), "condition_left": float(l), "passed": bool(p)}
                for t, l, p in zip(self.tau_samples, self.condition_left,
                                   self.passed_per_sample)
            ],
        }


def hypothesis_check(eos: EosModel, u0: float, tau0: float, tau_max: float,
                     n_samples: int = 64, profile=None) -> HypothesisReport:
    """Evaluate 2*dbar(tau0)+chi(tau) < alpha0+pi/2 < 4*dbar(tau0) per sample."""
    if profile is None:
        profile = build_delta_bar_profile(eos, tau0, tau_max, max(n_samples, 16))
    a0 = alpha0_at_P(eos, u0, tau0)
    db0 = delta_bar(eos, tau0)
    mid = a0 + 0.5 * math.pi
    right = 4.0 * db0
    taus = profile.tau_samples
    left = 2.0 * db0 + profile.chi
    ok = (left < mid) & (mid < right)
    return HypothesisReport(
        delta_bar_0=db0, alpha0=a0, tau_samples=taus, condition_left=left,
        condition_right=right, chi_max=float(np.max(np.abs(profile.chi))),
        psi_max=float(np.max(profile.psi)), passed_per_sample=ok,
        passed=bool(np.all(ok)))


@dataclass(frozen=True)
class InvariantBox:
    """tau-dependent admissible region for (alpha, beta) plus margins."""

    tau: float
    alpha_range: tuple
    beta_range: tuple
    eps1: float
    eps2: float
    kind: str

    def margin(self, alpha, beta):
        """Smallest signed distance into the open region (cut included);
        negative means outside."""
        m = min(alpha - self.alpha_range[0], self.alpha_range[1] - alpha,
                beta - self.beta_range[0], self.beta_range[1] - beta)
        if self.eps2 > 0.0:
            m = min(m, (alpha - beta) - self.eps2)
        return m

    def contains(self, alpha, beta, strict=True):
        m = self.margin(alpha, beta)
        return m > 0.0 if strict else m >= -_EDGE_TOL


def invariant_box(profile, tau: float, eps1: float, alpha0: float,
                  eps2: float = 0.0) -> InvariantBox:
    """Admissible (alpha, beta) region at level tau built from the psi/chi
    envelopes; reduces to the monotone-case squares on one-signed stretches."""
    db0 = profile.delta_bar_at(profile.tau0)
    psi, chi = profile.psi_at(tau), profile.chi_at(tau)
    a_lo = -0.5 * math.pi - eps1 + 2.0 * db0 + chi
    a_hi = alpha0 + eps1 + psi
    b_lo = -0.5 * math.pi - eps1 - psi
    b_hi = alpha0 + eps1 - 2.0 * db0 - chi
    n_below = sum(1 for e in profile.extrema if e < tau)
    if n_below == 0:
        trend = profile.local_trend(tau)
        kind = "square-case-2" if trend < 0 else "square-case-1"
    else:
        kind = "pentagon"
    return InvariantBox(tau=float(tau), alpha_range=(a_lo, a_hi),
                        beta_range=(b_lo, b_hi), eps1=eps1, eps2=eps2, kind=kind)


# ---------------------------------------------------------------------------
# boundary-derivative envelopes


class BoundaryEnvelope:
    """Pointwise-in-tau minimum of (negative) boundary derivative traces."""

    def __init__(self, tau_q, val_q, tau_r, val_r, name):
        self.tau_q, self.val_q = np.asarray(tau_q, float), np.asarray(val_q, float)
        self.tau_r, self.val_r = np.asarray(tau_r, float), np.asarray(val_r, float)
        if np.any(self.val_q >= 0) or np.any(self.val_r >= 0):
            raise SignConditionError(f"{name}: boundary derivative >= 0")
        self.name = name

    def __call__(self, tau):
        a = np.interp(tau, self.tau_q, self.val_q)
        b = np.interp(tau, self.tau_r, self.val_r)
        return np.minimum(a, b)


def m1_bound(PQ: BoundaryCurve, PR: BoundaryCurve) -> BoundaryEnvelope:
    """M1(tau) = min of the discrete d+rho on PQ and d-rho on PR."""
    tq, vq = PQ.rho_derivative()
    tr, vr = PR.rho_derivative()
    return BoundaryEnvelope(tq, vq, tr, vr, "M1")


def m2_bound(PQ: BoundaryCurve, PR: BoundaryCurve, n_exp: int) -> BoundaryEnvelope:
    """M2(tau): same construction for the scaled traces rho^n d rho / sin^2 delta."""
    tq, vq = PQ.scaled_rho_derivative(n_exp)
    tr, vr = PR.scaled_rho_derivative(n_exp)
    return BoundaryEnvelope(tq, vq, tr, vr, "M2")


def _eval_dp_d2p(eos, tau):
    tau = np.asarray(tau, dtype=float)
    try:
        return tau, np.asarray(eos.dp(tau), float), np.asarray(eos.d2p(tau), float)
    except (TypeError, ValueError):
        dp = np.array([eos.dp(float(t)) for t in np.atleast_1d(tau)])
        d2p = np.array([eos.d2p(float(t)) for t in np.atleast_1d(tau)])
        return tau, dp.reshape(tau.shape), d2p.reshape(tau.shape)


def f_coefficient(eos: EosModel, tau, delta):
    """f = 2 sin^2(delta) - 8 p' cos^4(delta)/(tau p''), positive for any
    convex law."""
    tau, dp, d2p = _eval_dp_d2p(eos, tau)
    return 2.0 * np.sin(delta) ** 2 - 8.0 * dp * np.cos(delta) ** 4 / (tau * d2p)


def g_coefficient(eos: EosModel, tau, delta, n_exp):
    """Coupling coefficient of the scaled-gradient decomposition for the
    weight rho^n; monotone increasing in n."""
    tau, dp, d2p = _eval_dp_d2p(eos, tau)
    cos2 = np.cos(delta) ** 2
    m = -(4.0 * dp + tau * d2p) / (tau * d2p)
    om = m - np.tan(delta) ** 2
    f = 2.0 * np.sin(delta) ** 2 - 8.0 * dp * np.cos(delta) ** 4 / (tau * d2p)
    return (f - 4.0 * n_exp * dp * cos2 / (tau * d2p)
            - 2.0 * cos2 + 2.0 * om * cos2 ** 2 - 1.0)


def scan_f_exponent(grid: CharGrid, eos: EosModel, n_max: int = 400) -> int:
    """Smallest integer n making the scaled-decomposition coefficient
    positive at every solved node."""
    ok = grid.ok_mask()
    taus = grid.tau[ok]
    deltas = grid.delta()[ok]
    for n in range(n_max + 1):
        if np.all(g_coefficient(eos, taus, deltas, n) > 0):
            return n
    raise SignConditionError(f"no exponent up to {n_max} makes the coefficient positive")


# ---------------------------------------------------------------------------
# grid audit


@dataclass
class CheckResult:
    name: str
    total: int
    violations: int
    degenerate: int
    worst_margin: float

    def to_dict(self):
        return {"name": self.name, "total": self.total,
                "violations": self.violations, "degenerate": self.degenerate,
                "worst_margin": self.worst_margin}


@dataclass
class AuditReport:
    checks: list
    n_exp: int
    step_bound_value: float
    max_level_spacing: float
    boundary_rho_residual: float
    omega_convention: str
    passed: bool
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {"passed": bool(self.passed), "n_exp": self.n_exp,
                "step_bound": self.step_bound_value,
                "max_level_spacing": self.max_level_spacing,
                "boundary_rho_residual": self.boundary_rho_residual,
                "omega_convention": self.omega_convention,
                "checks": [c.to_dict() for c in self.checks],
                "notes": self.notes}

    def summary_lines(self):
        out = [f"audit: {'PASS' if self.passed else 'FAIL'} "
               f"(n_exp={self.n_exp}, omega={self.omega_convention})"]
        for c in self.checks:
            out.append(f"  {c.name:<28} {c.violations}/{c.total} violations"
                       f" (degenerate {c.degenerate}, worst margin {c.worst_margin:.3e})")
        return out


def _check(name, margins, degenerate_mask=None):
    margins = np.asarray(margins, dtype=float)
    if degenerate_mask is None:
        degenerate_mask = np.zeros(margins.shape, dtype=bool)
    live = ~degenerate_mask
    bad = int(np.sum(margins[live] < -_EDGE_TOL))
    worst = float(np.min(margins[live])) if np.any(live) else math.inf
    return CheckResult(name=name, total=int(margins.size), violations=bad,
                       degenerate=int(np.sum(degenerate_mask)), worst_margin=worst)


def audit_grid(grid: CharGrid, eos: EosModel, profile, alpha0: float,
               eps1: float, eps2: float, m1: BoundaryEnvelope = None,
               n_exp: int = None, omega_convention: str = "delta",
               chi_at_frontier: float = None) -> AuditReport:
    """Check every solved node against the invariant region, the opening
    cut, hyperbolicity, the ordering of tau, and the gradient envelopes."""
    ok = grid.ok_mask()
    interior = grid.interior_mask()
    checks = []

    # (alpha, beta) in its tau-level box; strictness by interior/boundary
    margins = []
    for i, j in zip(*np.nonzero(ok)):
        box = invariant_box(profile, grid.tau[i, j], eps1, alpha0, eps2)
        m = box.margin(grid.alpha[i, j], grid.beta[i, j])
        if not interior[i, j]:
            m += _EDGE_TOL  # non-strict on the boundary
        margins.append(m)
    checks.append(_check("invariant_box", margins))

    # opening cut and pseudo-Mach number
    d2 = (grid.alpha - grid.beta)[ok]
    checks.append(_check("opening_gt_eps2", d2 - eps2))
    q = np.hypot(grid.u - grid.xi, grid.v - grid.eta)[ok]
    checks.append(_check("mach_gt_1", q / grid.c[ok] - 1.0))

    # discrete monotonicity of tau along both families
    pp, pm = grid.pair_ok_plus(), grid.pair_ok_minus()
    checks.append(_check("d_plus_tau_pos", grid.d_plus(grid.tau)[pp]))
    checks.append(_check("d_minus_tau_pos", grid.d_minus(grid.tau)[pm]))

    # gradient envelopes
    rho = 1.0 / grid.tau
    if m1 is None:
        m1 = _envelope_from_grid_boundary(grid)
    deg_tol = 1e-14
    for name, dmat, pair in (("dp_rho", grid.d_plus(rho), pp),
                             ("dm_rho", grid.d_minus(rho), pm)):
        taum = _pair_mid_tau(grid, name)
        vals = dmat[pair]
        mids = taum[pair]
        lower = m1(mids)
        margin = np.minimum(vals - lower, -vals)
        checks.append(_check(f"{name}_in_M1_window", margin,
                             degenerate_mask=np.abs(vals) < deg_tol))

    if n_exp is None:
        n_exp = scan_f_exponent(grid, eos)
    m2 = _scaled_envelope_from_grid_boundary(grid, n_exp)
    dmid = grid.delta()
    for name, dmat, pair, axis in (("dp_rho_scaled", grid.d_plus(rho), pp, 1),
                                   ("dm_rho_scaled", grid.d_minus(rho), pm, 0)):
        taum = _pair_mid_tau(grid, name)
        dm = _pair_mid(grid, dmid, axis)
        vals = dmat[pair] * (1.0 / taum[pair]) ** n_exp / np.sin(dm[pair]) ** 2
        lower = m2(taum[pair])
        margin = np.minimum(vals - lower, -vals)
        checks.append(_check(f"{name}_in_M2_window", margin,
                             degenerate_mask=np.abs(vals) < deg_tol))

    # f > 0 everywhere
    fvals = f_coefficient(eos, grid.tau[ok], grid.delta()[ok])
    checks.append(_check("f_positive", fvals))

    # step-size rule vs the realized level spacing (reported, not enforced)
    from .goursat import max_complete_tau, level_curve_crossings, step_bound
    tau_f = max_complete_tau(grid)
    chi_f = profile.chi_at(tau_f) if chi_at_frontier is None else chi_at_frontier
    sb = step_bound(eos, grid.tau0, tau_f, float(m1(tau_f)), eps1, chi_f)
    pts = level_curve_crossings(grid, tau_f * (1.0 - 1e-12))
    max_sp = float(np.max(np.abs(np.diff(pts[:, 1])))) if len(pts) > 1 else 0.0

    # boundary d+rho on PQ against the closed form with the chosen omega
    res = _boundary_rho_residual(grid, eos, omega_convention)

    passed = all(c.violations == 0 for c in checks)
    return AuditReport(checks=checks, n_exp=n_exp, step_bound_value=float(sb),
                       max_level_spacing=max_sp, boundary_rho_residual=res,
                       omega_convention=omega_convention, passed=passed,
                       notes={"tau_frontier": float(tau_f),
                              "spacing_respects_bound": bool(max_sp < sb),
                              "boundary_membership": "non-strict",
                              "interior_membership": "strict"})


def _pair_mid_tau(grid, name):
    out = np.full(grid.shape, np.nan)
    if name.startswith("dp"):
        out[:, 1:] = 0.5 * (grid.tau[:, 1:] + grid.tau[:, :-1])
    else:
        out[1:, :] = 0.5 * (grid.tau[1:, :] + grid.tau[:-1, :])
    return out


def _pair_mid(grid, f, axis):
    out = np.full(grid.shape, np.nan)
    if axis == 1:
        out[:, 1:] = 0.5 * (f[:, 1:] + f[:, :-1])
    else:
        out[1:, :] = 0.5 * (f[1:, :] + f[:-1, :])
    return out


def _envelope_from_grid_boundary(grid):
    ds_q = np.hypot(np.diff(grid.xi[0, :]), np.diff(grid.eta[0, :]))
    vq = np.diff(1.0 / grid.tau[0, :]) / ds_q
    tq = 0.5 * (grid.tau[0, 1:] + grid.tau[0, :-1])
    ds_r = np.hypot(np.diff(grid.xi[:, 0]), np.diff(grid.eta[:, 0]))
    vr = np.diff(1.0 / grid.tau[:, 0]) / ds_r
    tr = 0.5 * (grid.tau[1:, 0] + grid.tau[:-1, 0])
    return BoundaryEnvelope(tq, vq, tr, vr, "M1")


def _scaled_envelope_from_grid_boundary(grid, n_exp):
    d = grid.delta()
    out = {}
    for key, (sl_t, sl_d) in (("q", (np.s_[0, :], np.s_[0, :])),
                              ("r", (np.s_[:, 0], np.s_[:, 0]))):
        tau_b = grid.tau[sl_t]
        xi_b, eta_b = grid.xi[sl_t], grid.eta[sl_t]
        ds = np.hypot(np.diff(xi_b), np.diff(eta_b))
        drho = np.diff(1.0 / tau_b) / ds
        tm = 0.5 * (tau_b[1:] + tau_b[:-1])
        dm = 0.5 * (d[sl_d][1:] + d[sl_d][:-1])
        out[key] = (tm, (1.0 / tm) ** n_exp * drho / np.sin(dm) ** 2)
    return BoundaryEnvelope(out["q"][0], out["q"][1], out["r"][0], out["r"][1], "M2")


def _boundary_rho_residual(grid, eos, omega_convention):
    """Along PQ, compare the discrete d+rho with -2 sin(2w) c rho^4 / p''
    where w is delta (default) or sigma (the exposed alternative reading)."""
    tau_b = grid.tau[0, :]
    ds = np.hypot(np.diff(grid.xi[0, :]), np.diff(grid.eta[0, :]))
    drho = np.diff(1.0 / tau_b) / ds
    tm = 0.5 * (tau_b[1:] + tau_b[:-1])
    if omega_convention == "delta":
        w = 0.5 * (grid.delta()[0, 1:] + grid.delta()[0, :-1])
    elif omega_convention == "sigma":
        sg = 0.5 * (grid.alpha + grid.beta)
        w = 0.5 * (sg[0, 1:] + sg[0, :-1])
    else:
        raise ValueError(f"unknown omega convention '{omega_convention}'")
    pred = np.array([-2.0 * math.sin(2.0 * wk) * sound_speed(eos, t) / (t ** 4 * eos.d2p(t))
                     for wk, t in zip(w, tm)])
    return float(np.max(np.abs(drho - pred)))
