"""Rarefaction-wave construction and the Goursat boundary curves.

The inflow (u0, 0, tau0) expands through a planar fan whose head sits at
xi = u0 - c0, and turns the corner through a centered fan whose states are
constant along rays from the origin. The two waves meet at P; the C+ curve
through the planar fan (PQ) and the C- curve through the centered fan (PR)
carry the boundary data for the interaction region.

Inside the planar fan U = c, which pins the fan relations

    u_r(tau) = u0 + int_{tau0}^{tau} c/s ds,      xi_hat = u_r - c(tau),

with d(xi_hat)/dtau = tau^2 p''/(2c) > 0 for any convex law. The centered
fan reduces to one quadrature: with qhat^2 = u0^2 - 2*int tau p' dtau,

    d(alpha)/dtau = -tau^2 p'' / (2 c sqrt(qhat^2 - c^2)) < 0,

and the state on the ray alpha is qhat*(cos sigma, sin sigma) with
sigma = alpha - asin(c/qhat).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .eos import EosModel, sound_speed
from .errors import (
    HyperbolicityError,
    MonotonicityError,
    RangeError,
    SignConditionError,
    SubsonicError,
    VacuumEndError,
)

_QUAD_KW = dict(limit=400, epsabs=1e-13, epsrel=1e-13)


def _quiet_quad(f, a, b):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return quad(f, a, b, **_QUAD_KW)[0]


@dataclass(frozen=True)
class GasState:
    u: float
    v: float
    tau: float


@dataclass
class BoundaryCurve:
    """Sampled characteristic curve carrying full states and angles.

    family is 'plus' for the C+ curve PQ, 'minus' for the C- curve PR.
    Arrays are index-aligned; tau strictly increases away from P.
    """

    family: str
    xi: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    tau: np.ndarray
    phi: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def tau_range(self):
        return float(self.tau[0]), float(self.tau[-1])

    def __len__(self):
        return len(self.tau)

    def arc_steps(self):
        return np.hypot(np.diff(self.xi), np.diff(self.eta))

    def rho_derivative(self):
        """Discrete normalized directional derivative of rho = 1/tau along
        the curve, attached to segment midpoints: (tau_mid, d rho)."""
        ds = self.arc_steps()
        drho = np.diff(1.0 / self.tau) / ds
        tmid = 0.5 * (self.tau[:-1] + self.tau[1:])
        return tmid, drho

    def alpha_derivative(self):
        ds = self.arc_steps()
        tmid = 0.5 * (self.tau[:-1] + self.tau[1:])
        return tmid, np.diff(self.alpha) / ds

    def scaled_rho_derivative(self, n_exp):
        """rho^n * d rho / sin^2 delta at segment midpoints."""
        tmid, drho = self.rho_derivative()
        dmid = 0.5 * ((self.alpha - self.beta)[:-1] + (self.alpha - self.beta)[1:]) / 2.0
        rho = 1.0 / tmid
        return tmid, rho ** n_exp * drho / np.sin(dmid) ** 2


def _angles_at(eos, xi, eta, u, v, tau):
    c = sound_speed(eos, tau)
    U, V = u - xi, v - eta
    q = np.hypot(U, V)
    if q <= c:
        raise HyperbolicityError(f"q={q} <= c={c} at (xi,eta)=({xi},{eta})")
    sigma = np.arctan2(V, U)
    delta = np.arcsin(c / q)
    return sigma + delta, sigma - delta


# ---------------------------------------------------------------------------
# planar rarefaction wave


class PlanarWave:
    """Planar fan of the 1-D gas/vacuum expansion, queried by xi_hat or tau."""

    def __init__(self, eos: EosModel, u0: float, tau0: float):
        eos.check_domain(tau0)
        self.eos, self.u0, self.tau0 = eos, u0, tau0
        self.c0 = sound_speed(eos, tau0)
        self.xi_head = u0 - self.c0
        # the fan map tau -> u_r - c must be strictly increasing; convexity
        # guarantees it analytically, but the contract checks numerically
        taus = np.geomspace(tau0, tau0 * 64, 25)
        vals = [self.xi_at_tau(t) for t in taus]
        if np.any(np.diff(vals) <= 0):
            raise MonotonicityError("tau -> u_r - c is not strictly increasing")

    def u_at_tau(self, tau):
        self.eos.check_domain(tau)
        val = _quiet_quad(lambda s: sound_speed(self.eos, s) / s, self.tau0, tau)
        return self.u0 + val

    def xi_at_tau(self, tau):
        return self.u_at_tau(tau) - sound_speed(self.eos, tau)

    def tau_at_xi(self, xi_hat, tau_cap=1e12):
        if xi_hat < self.xi_head - 1e-12 * max(1.0, abs(self.u0)):
            raise RangeError(f"xi_hat={xi_hat} ahead of the fan head {self.xi_head}")
        lo, hi = self.tau0, self.tau0 * 2.0
        while self.xi_at_tau(hi) < xi_hat:
            lo, hi = hi, hi * 4.0
            if hi > tau_cap:
                raise RangeError(f"xi_hat={xi_hat} beyond the vacuum edge of the fan")
        xtol = 1e-12 * max(1.0, abs(self.u0))
        return brentq(lambda t: self.xi_at_tau(t) - xi_hat, lo, hi,
                      xtol=xtol, maxiter=200)

    def state_at_xi(self, xi_hat) -> GasState:
        if xi_hat <= self.xi_head:
            if xi_hat < self.xi_head - 1e-12 * max(1.0, abs(self.u0)):
                raise RangeError(f"xi_hat={xi_hat} ahead of the fan head")
            return GasState(self.u0, 0.0, self.tau0)
        tau = self.tau_at_xi(xi_hat)
        return GasState(self.u_at_tau(tau), 0.0, tau)


def planar_wave_state(eos: EosModel, u0: float, tau0: float, xi_hat: float) -> GasState:
    """State (u_r, 0, tau_r) of the wave-aligned planar fan at xi_hat."""
    return PlanarWave(eos, u0, tau0).state_at_xi(xi_hat)


def interaction_point(eos: EosModel, u0: float, tau0: float):
    """Meeting point P of the planar fan head and the centered wave's
    leading ray: (u0 - c0, c0 sqrt((u0-c0)/(u0+c0)))."""
    c0 = sound_speed(eos, tau0)
    if u0 <= c0:
        raise SubsonicError(f"u0={u0} <= c0={c0}: inflow not pseudo-supersonic")
    return u0 - c0, c0 * np.sqrt((u0 - c0) / (u0 + c0))


# ---------------------------------------------------------------------------
# centered rarefaction wave


class CenteredWave:
    """Centered fan at the corner: states constant along rays eta = xi tan(alpha).

    The constancy is exact because the normal pseudo-velocity component
    W.n is invariant along a ray, so a ray that is characteristic at one
    radius is characteristic at all radii.
    """

    def __init__(self, eos: EosModel, u0: float, tau0: float, tau_hi: float = None):
        self.eos, self.u0, self.tau0 = eos, u0, tau0
        self.c0 = sound_speed(eos, tau0)
        if u0 <= self.c0:
            raise SubsonicError(f"u0={u0} <= c0={self.c0}")
        self.alpha0 = float(np.arcsin(self.c0 / u0))
        self._tau_hi = 0.0
        self._alpha_sol = None
        self._extend(tau_hi if tau_hi else tau0 * 4.0)

    def q_hat(self, tau):
        q2 = self.u0 ** 2 - 2.0 * self.eos.phi_between(self.tau0, tau)
        return np.sqrt(q2)

    def dalpha_dtau(self, tau):
        c = sound_speed(self.eos, tau)
        q = self.q_hat(tau)
        rad = q * q - c * c
        if rad <= 0:
            raise HyperbolicityError(f"centered fan lost q > c at tau={tau}")
        return -tau * tau * self.eos.d2p(tau) / (2.0 * c * np.sqrt(rad))

    def _extend(self, tau_hi):
        if tau_hi <= self._tau_hi:
            return
        sol = solve_ivp(lambda t, y: [self.dalpha_dtau(t)], (self.tau0, tau_hi),
                        [self.alpha0], method="DOP853", rtol=1e-13, atol=1e-14,
                        dense_output=True)
        if not sol.success:
            raise HyperbolicityError(f"centered fan integration failed: {sol.message}")
        self._alpha_sol, self._tau_hi = sol, tau_hi

    def alpha_at_tau(self, tau):
        if tau == self.tau0:
            return self.alpha0
        self._extend(tau)
        return float(self._alpha_sol.sol(tau)[0])

    def tau_at_alpha(self, alpha):
        if alpha > self.alpha0:
            raise RangeError(f"alpha={alpha} above the leading ray alpha0={self.alpha0}")
        hi = max(self._tau_hi, self.tau0 * 2.0)
        while self.alpha_at_tau(hi) > alpha:
            hi *= 2.0
            if hi > 1e14:
                raise RangeError(f"alpha={alpha} below the vacuum end of the fan")
        return brentq(lambda t: self.alpha_at_tau(t) - alpha, self.tau0, hi,
                      xtol=1e-14, maxiter=200)

    def state_at_tau(self, tau) -> GasState:
        a = self.alpha_at_tau(tau)
        q = self.q_hat(tau)
        delta = np.arcsin(sound_speed(self.eos, tau) / q)
        sigma = a - delta
        return GasState(q * np.cos(sigma), q * np.sin(sigma), tau)

    def state_at_alpha(self, alpha) -> GasState:
        return self.state_at_tau(self.tau_at_alpha(alpha))

    def sigma_at_tau(self, tau):
        q = self.q_hat(tau)
        return self.alpha_at_tau(tau) - np.arcsin(sound_speed(self.eos, tau) / q)

    def vacuum_alpha(self, theta: float, c_frac: float = 1e-6, tau_cap: float = 1e12):
        """Operational vacuum angle: the fan ends where c drops below
        c_frac*c0 or where the pseudo-flow aligns with the wall angle theta,
        whichever comes first (returned with the reason)."""
        lo, hi = self.tau0, self.tau0 * 2.0
        wall = lambda t: self.sigma_at_tau(t) - theta
        cvac = lambda t: sound_speed(self.eos, t) - c_frac * self.c0
        while wall(hi) > 0 and cvac(hi) > 0:
            lo, hi = hi, hi * 2.0
            if hi > tau_cap:
                return self.alpha_at_tau(tau_cap), tau_cap, "cap"
        if wall(hi) <= 0:
            t_wall = brentq(wall, lo, hi, xtol=1e-12)
        else:
            t_wall = np.inf
        if cvac(hi) <= 0:
            t_vac = brentq(cvac, lo, hi, xtol=1e-12)
        else:
            t_vac = np.inf
        t_end = min(t_wall, t_vac)
        reason = "wall" if t_wall <= t_vac else "vacuum"
        return self.alpha_at_tau(t_end), t_end, reason


def centered_wave_state(eos: EosModel, u0: float, tau0: float, alpha: float) -> GasState:
    """Principal-part state of the centered wave on the ray at angle alpha."""
    return CenteredWave(eos, u0, tau0).state_at_alpha(alpha)


# ---------------------------------------------------------------------------
# boundary curve PQ (C+ through the planar fan)


def _rk4(f, y, t, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def curve_PQ(eos: EosModel, u0: float, tau0: float, tau_end: float, n: int,
             substeps: int = 4) -> BoundaryCurve:
    """March the C+ characteristic from P through the planar fan with a
    classical fixed-step RK4 (substeps per sample interval), carrying the
    potential as an extra component of the same integration."""
    if tau_end <= tau0:
        raise RangeError("tau_end must exceed tau0")
    fan = PlanarWave(eos, u0, tau0)
    xi_p, eta_p = interaction_point(eos, u0, tau0)

    def rhs(t, y):
        eta, _ = y
        c = sound_speed(eos, t)
        if eta <= 0.0:
            raise HyperbolicityError("PQ integration: eta reached 0 (lambda+ vertical)")
        dxi = t * t * eos.d2p(t) / (2.0 * c)      # d xi / d tau in the fan
        lam = (c * c - eta * eta) / (2.0 * c * eta)
        dphi = c * dxi + (-eta) * (lam * dxi)     # U dxi + V deta
        return np.array([lam * dxi, dphi])

    taus = np.linspace(tau0, tau_end, n)
    q0 = np.hypot(u0 - xi_p, eta_p)
    phi0 = -0.5 * q0 * q0                          # pseudo-Bernoulli at P
    ys = np.empty((n, 2))
    ys[0] = (eta_p, phi0)
    y = ys[0].copy()
    for k in range(n - 1):
        h = (taus[k + 1] - taus[k]) / substeps
        t = taus[k]
        for _ in range(substeps):
            y = _rk4(rhs, y, t, h)
            t += h
        ys[k + 1] = y

    xi = np.array([fan.xi_at_tau(t) for t in taus])
    xi[0] = xi_p
    eta = ys[:, 0]
    phi = ys[:, 1]
    u = np.array([fan.u_at_tau(t) for t in taus])
    v = np.zeros(n)
    alpha = np.empty(n)
    for k in range(n):
        a, _ = _angles_at(eos, xi[k], eta[k], u[k], v[k], taus[k])
        alpha[k] = a
    beta = np.full(n, -0.5 * np.pi)                # U = c exactly in the fan

    curve = BoundaryCurve("plus", xi, eta, u, v, taus.copy(), phi, alpha, beta)
    _, drho = curve.rho_derivative()
    if np.any(drho >= 0):
        raise SignConditionError("d+rho >= 0 somewhere along PQ")
    return curve


def curve_PQ_closed_form(eos: EosModel, u0: float, tau0: float, tau: float):
    """Closed-form position of the C+ curve through the planar fan:
    xi = u0 - c + int c/s ds,
    eta^2 = (c/tau) [2 u0 tau0 c0/(u0+c0) + 2 int c ds - tau c]."""
    c0 = sound_speed(eos, tau0)
    c = sound_speed(eos, tau)
    i1 = _quiet_quad(lambda s: sound_speed(eos, s) / s, tau0, tau)
    i2 = _quiet_quad(lambda s: sound_speed(eos, s), tau0, tau)
    xi = u0 - c + i1
    eta2 = (c / tau) * (2.0 * u0 * tau0 * c0 / (u0 + c0) + 2.0 * i2 - tau * c)
    if eta2 < 0:
        raise VacuumEndError("PQ closed form: eta^2 < 0", tau_star=tau)
    return xi, np.sqrt(eta2)


# ---------------------------------------------------------------------------
# boundary curve PR (C- through the centered fan)


class PRCurve:
    """C- characteristic of the centered fan from P, integrated in tau.

    Position is r(tau)*(cos alpha, sin alpha) on the ray alpha(tau); the
    crossing relation gives dr/dalpha = -r cot(2 delta_loc) with delta_loc
    the local pseudo-Mach angle at radius r. The potential rides along as
    a second component.
    """

    def __init__(self, eos: EosModel, u0: float, tau0: float):
        self.eos, self.u0, self.tau0 = eos, u0, tau0
        self.wave = CenteredWave(eos, u0, tau0)
        xi_p, eta_p = interaction_point(eos, u0, tau0)
        self.start = (xi_p, eta_p)
        q0 = np.hypot(u0 - xi_p, -eta_p)
        self._y0 = np.array([np.hypot(xi_p, eta_p), -0.5 * q0 * q0])
        self._sol = None
        self._tau_hi = tau0

    def _rhs(self, t, y):
        r = y[0]
        a = self.wave.alpha_at_tau(t)
        st = self.wave.state_at_tau(t)
        ca, sa = np.cos(a), np.sin(a)
        s_t = st.u * ca + st.v * sa - r          # tangential pseudo-speed on ray
        c = sound_speed(self.eos, t)
        if s_t <= 0.0:
            raise VacuumEndError("PR curve: flow tangential component vanished",
                                 tau_star=t)
        dadt = self.wave.dalpha_dtau(t)
        drda = -r * (s_t * s_t - c * c) / (2.0 * s_t * c)
        drdt = drda * dadt
        # position derivative for the potential
        dxi = drdt * ca - r * sa * dadt
        deta = drdt * sa + r * ca * dadt
        U, V = st.u - r * ca, st.v - r * sa
        return np.array([drdt, U * dxi + V * deta])

    def _extend(self, tau):
        if self._sol is not None and tau <= self._tau_hi:
            return
        hi = max(tau, self.tau0 * 2.0)
        sol = solve_ivp(self._rhs, (self.tau0, hi), self._y0, method="DOP853",
                        rtol=1e-12, atol=1e-14, dense_output=True)
        if not sol.success:
            raise VacuumEndError(f"PR integration stopped: {sol.message}",
                                 tau_star=float(sol.t[-1]))
        self._sol, self._tau_hi = sol, hi

    def point(self, tau):
        if tau == self.tau0:
            return self.start
        self._extend(tau)
        r = float(self._sol.sol(tau)[0])
        a = self.wave.alpha_at_tau(tau)
        return r * np.cos(a), r * np.sin(a)

    def phi(self, tau):
        if tau == self.tau0:
            return float(self._y0[1])
        self._extend(tau)
        return float(self._sol.sol(tau)[1])


def curve_PR(eos: EosModel, u0: float, tau0: float, tau: float):
    """Position on the C- boundary curve of the centered fan at level tau."""
    if tau < tau0:
        raise RangeError("tau must be >= tau0 on PR")
    return PRCurve(eos, u0, tau0).point(tau)


def curve_PR_with_states(eos: EosModel, u0: float, tau0: float, tau_end: float,
                         n: int) -> BoundaryCurve:
    """Sample PR at n tau-levels, attach centered-wave states matched by tau,
    the path-integrated potential, and the characteristic angles; assert the
    boundary sign conditions d-rho < 0 and d-alpha < 0."""
    if tau_end <= tau0:
        raise RangeError("tau_end must exceed tau0")
    pr = PRCurve(eos, u0, tau0)
    taus = np.linspace(tau0, tau_end, n)
    xi = np.empty(n); eta = np.empty(n); u = np.empty(n); v = np.empty(n)
    phi = np.empty(n); alpha = np.empty(n); beta = np.empty(n)
    for k, t in enumerate(taus):
        xi[k], eta[k] = pr.point(t)
        st = pr.wave.state_at_tau(t)
        u[k], v[k] = st.u, st.v
        phi[k] = pr.phi(t)
        alpha[k], beta[k] = _angles_at(eos, xi[k], eta[k], u[k], v[k], t)
    curve = BoundaryCurve("minus", xi, eta, u, v, taus.copy(), phi, alpha, beta)
    _, drho = curve.rho_derivative()
    _, dalp = curve.alpha_derivative()
    if np.any(drho >= 0):
        raise SignConditionError("d-rho >= 0 somewhere along PR")
    if np.any(dalp >= 0):
        raise SignConditionError("d-alpha >= 0 somewhere along PR")
    return curve
