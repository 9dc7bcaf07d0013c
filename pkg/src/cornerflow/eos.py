"""Convex pressure laws p(tau) and the derived functionals the construction needs.

An EosModel carries analytic first and second derivatives (numerical
differentiation is reserved for tests) plus the antiderivative of tau*p'(tau),
which closes the pseudo-Bernoulli relation at every node solve. Builtin
families cover polytropic gas, two-term power laws (modified shallow water,
transverse-field magnetogasdynamics under the frozen law), and a van der Waals
type law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import (
    ConvexityError,
    EosDomainError,
    HypothesisError,
    ParameterError,
    ResolutionError,
    SingularEosError,
)

# kernel kinds understood by the numba fast path
KIND_TWO_TERM = 0  # p = A1*tau^e1 + B1*tau^e2
KIND_VDW = 1       # p = S1*(tau-1)^(-g-1) - tau^-2


@dataclass(frozen=True)
class EosModel:
    """Pressure law with analytic derivatives.

    ``int_tau_dp`` is an antiderivative of s*p'(s); differences of it give
    the exact integral in the pseudo-Bernoulli relation. ``kernel_kind`` and
    ``kernel_params`` describe the law to the compiled march kernel; custom
    models leave them unset and run on the fallback path. Evaluation is pure
    and reentrant (safe for concurrent read-only use).
    """

    p: Callable[[float], float]
    dp: Callable[[float], float]
    d2p: Callable[[float], float]
    tau_min: float
    label: str
    int_tau_dp: Optional[Callable[[float], float]] = None
    kernel_kind: int = -1
    kernel_params: tuple = field(default=())

    def check_domain(self, tau):
        if not np.all(np.asarray(tau) > self.tau_min):
            raise EosDomainError(
                f"{self.label}: tau={tau} not above tau_min={self.tau_min}")

    def phi_between(self, tau0, tau):
        """Exact integral of s*p'(s) from tau0 to tau."""
        if self.int_tau_dp is not None:
            return self.int_tau_dp(tau) - self.int_tau_dp(tau0)
        return quad(lambda s: s * self.dp(s), tau0, tau, limit=200)[0]


def sound_speed(eos: EosModel, tau: float) -> float:
    """c = sqrt(-tau^2 p'(tau)); errors if tau or p' leaves the valid regime."""
    eos.check_domain(tau)
    d = eos.dp(tau)
    if d >= 0.0:
        raise ConvexityError(f"{eos.label}: dp({tau}) = {d} >= 0")
    return float(np.sqrt(-tau * tau * d))


def kappa(eos: EosModel, tau: float) -> float:
    """kappa = -2 p' / (2 p' + tau p''); singular where the denominator dies."""
    eos.check_domain(tau)
    d, d2 = eos.dp(tau), eos.d2p(tau)
    den = 2.0 * d + tau * d2
    scale = max(abs(2.0 * d), abs(tau * d2), 1e-300)
    if abs(den) < 1e-14 * scale:
        raise SingularEosError(
            f"{eos.label}: 2p' + tau p'' vanishes at tau={tau}")
    return -2.0 * d / den


def mu_squared(eos: EosModel, tau: float) -> float:
    """mu^2 = 1/(1 + kappa) = (2p' + tau p'')/(tau p'')."""
    return 1.0 / (1.0 + kappa(eos, tau))


def m_value(eos: EosModel, tau: float) -> float:
    """m = (kappa-1)/(kappa+1), evaluated as -(4p' + tau p'')/(tau p'').

    The direct form stays finite across kappa's pole (2p' + tau p'' = 0,
    crossed by the van der Waals family at large tau).
    """
    eos.check_domain(tau)
    d, d2 = eos.dp(tau), eos.d2p(tau)
    if d2 == 0.0:
        raise SingularEosError(f"{eos.label}: p''({tau}) = 0")
    if d2 < 0.0:
        raise ConvexityError(f"{eos.label}: d2p({tau}) = {d2} <= 0")
    return -(4.0 * d + tau * d2) / (tau * d2)


def delta_bar(eos: EosModel, tau: float) -> float:
    """Critical pseudo-Mach angle arctan(sqrt(m)); needs m > 0."""
    m = m_value(eos, tau)
    if m <= 0.0:
        raise HypothesisError(f"{eos.label}: m({tau}) = {m} <= 0")
    return float(np.arctan(np.sqrt(m)))


def omega_value(eos: EosModel, tau: float, delta: float) -> float:
    """Omega(tau, delta) = m(tau) - tan(delta)^2."""
    return m_value(eos, tau) - np.tan(delta) ** 2


# ---------------------------------------------------------------------------
# delta-bar profile: extrema, psi/chi, tail estimate


@dataclass
class DeltaBarProfile:
    """Sampled delta_bar(tau) with extrema and the psi/chi envelopes.

    psi adds the accumulated |delta_bar'| to the net change, chi subtracts
    it; both are evaluated exactly by telescoping over the monotone
    segments between located extrema.
    """

    eos: EosModel
    tau0: float
    tau_max: float
    tau_samples: np.ndarray
    delta_bar: np.ndarray
    extrema: list
    psi: np.ndarray
    chi: np.ndarray
    delta_bar_star: float
    tail_bound: float

    def delta_bar_at(self, tau):
        return delta_bar(self.eos, float(tau))

    def _total_variation(self, tau):
        """Exact integral of |delta_bar'| from tau0 to tau (monotone telescoping)."""
        knots = [self.tau0] + [e for e in self.extrema if e < tau] + [float(tau)]
        tv = 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            tv += abs(self.delta_bar_at(b) - self.delta_bar_at(a))
        return tv

    def psi_at(self, tau):
        return self.delta_bar_at(tau) - self.delta_bar_at(self.tau0) + self._total_variation(tau)

    def chi_at(self, tau):
        return self.delta_bar_at(tau) - self.delta_bar_at(self.tau0) - self._total_variation(tau)

    def local_trend(self, tau):
        """Sign of delta_bar' on the monotone segment containing tau (0 if flat)."""
        lo = self.tau0
        hi = self.tau_max
        for e in self.extrema:
            if e <= tau:
                lo = e
            else:
                hi = e
                break
        d = self.delta_bar_at(hi) - self.delta_bar_at(lo)
        scale = max(abs(self.delta_bar_at(self.tau0)), 1e-12)
        if abs(d) < 1e-10 * scale:
            return 0
        return 1 if d > 0 else -1


def _fd_delta_bar_prime(eos, tau, rel=1e-6):
    h = rel * tau
    return (delta_bar(eos, tau + h) - delta_bar(eos, tau - h)) / (2 * h)


def build_delta_bar_profile(eos: EosModel, tau0: float, tau_max: float,
                            n_samples: int = 129) -> DeltaBarProfile:
    """Locate extrema of delta_bar by sign changes of a finite-difference
    derivative refined by bisection, then assemble psi/chi and a tail
    estimate of the large-tau limit."""
    if n_samples < 16:
        raise ParameterError("n_samples must be >= 16")
    if not (tau_max > tau0 > eos.tau_min):
        raise ParameterError("need tau_max > tau0 > tau_min")

    taus = np.geomspace(tau0, tau_max, n_samples)
    dbs = np.array([delta_bar(eos, t) for t in taus])
    dprime = np.array([_fd_delta_bar_prime(eos, t) for t in taus])

    # treat tiny slopes as zero (polytropic: m constant, delta_bar' == 0)
    scale = max(abs(dbs[0]), 1e-12)
    flat = np.abs(dprime) < 1e-9 * scale / tau0

    extrema = []
    prev_change = -2
    for k in range(n_samples - 1):
        if flat[k] or flat[k + 1]:
            continue
        if dprime[k] * dprime[k + 1] < 0.0:
            if prev_change == k - 1:
                raise ResolutionError(
                    f"adjacent sample intervals near tau={taus[k]:.6g} both bracket "
                    "a sign change of delta_bar'; increase n_samples")
            prev_change = k
            lo, hi = taus[k], taus[k + 1]
            flo = dprime[k]
            while hi - lo > 1e-8 * tau0:
                mid = 0.5 * (lo + hi)
                fm = _fd_delta_bar_prime(eos, mid)
                if flo * fm <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            extrema.append(0.5 * (lo + hi))

    # tail estimate: Richardson-style geometric extrapolation at tau_max
    d1 = delta_bar(eos, tau_max)
    d2_ = delta_bar(eos, 2.0 * tau_max)
    d4 = delta_bar(eos, 4.0 * tau_max)
    den = d2_ - d1
    if abs(den) < 1e-15:
        star, tail = d1, abs(d4 - d1)
    else:
        r = (d4 - d2_) / den
        if 0.0 < r < 0.95:
            star = d2_ + (d4 - d2_) / (1.0 - r)
            tail = abs(star - d1)
        else:
            star, tail = d4, abs(d4 - d1)

    prof = DeltaBarProfile(eos=eos, tau0=tau0, tau_max=tau_max,
                           tau_samples=taus, delta_bar=dbs, extrema=extrema,
                           psi=np.zeros_like(taus), chi=np.zeros_like(taus),
                           delta_bar_star=float(star), tail_bound=float(tail))
    prof.psi = np.array([prof.psi_at(t) for t in taus])
    prof.chi = np.array([prof.chi_at(t) for t in taus])
    return prof


# ---------------------------------------------------------------------------
# builtin families


def _two_term(A1, e1, B1, e2, tau_min, label):
    def p(t):
        return A1 * t ** e1 + B1 * t ** e2

    def dp(t):
        return A1 * e1 * t ** (e1 - 1) + B1 * e2 * t ** (e2 - 1)

    def d2p(t):
        return A1 * e1 * (e1 - 1) * t ** (e1 - 2) + B1 * e2 * (e2 - 1) * t ** (e2 - 2)

    def term_phi(a, e, t):
        # antiderivative of a*e*s^e
        if a == 0.0 or e == 0.0:
            return 0.0
        if e == -1.0:
            return a * e * np.log(t)
        return a * e * t ** (e + 1) / (e + 1)

    def int_tau_dp(t):
        return term_phi(A1, e1, t) + term_phi(B1, e2, t)

    return EosModel(p=p, dp=dp, d2p=d2p, tau_min=tau_min, label=label,
                    int_tau_dp=int_tau_dp, kernel_kind=KIND_TWO_TERM,
                    kernel_params=(A1, e1, B1, e2))


def polytropic(A: float, gamma: float) -> EosModel:
    """p = A tau^-gamma. Convex-decreasing for A > 0, gamma > 0."""
    if A <= 0 or gamma <= 0:
        raise ParameterError("polytropic needs A > 0 and gamma > 0")
    return _two_term(A, -gamma, 0.0, -2.0, 0.0, f"polytropic(A={A},gamma={gamma})")


def two_constant(A1: float, B1: float, gamma1: float, gamma2: float) -> EosModel:
    """p = A1 tau^gamma1 + B1 tau^gamma2 (exponents given literally)."""
    return _two_term(A1, gamma1, B1, gamma2, 0.0,
                     f"two_constant(A1={A1},B1={B1},g1={gamma1},g2={gamma2})")


def shallow_water(g: float, k: float = 0.0) -> EosModel:
    """Modified shallow water: p = k/tau + (g/2)/tau^2 with tau = 1/depth."""
    if g <= 0 or k < 0:
        raise ParameterError("shallow_water needs g > 0 and k >= 0")
    m = _two_term(k, -1.0, 0.5 * g, -2.0, 0.0, f"shallow_water(g={g},k={k})")
    return m


def magneto(A1: float, gamma: float, mu: float, kappa0: float) -> EosModel:
    """Transverse-field magnetogasdynamics with the frozen law folded in:
    p = A1 tau^-gamma + B1 tau^-2, B1 = mu kappa0^2 / 2."""
    B1 = 0.5 * mu * kappa0 ** 2
    if A1 <= 0 or gamma <= 0 or B1 <= 0:
        raise ParameterError("magneto needs A1 > 0, gamma > 0 and mu*kappa0^2 > 0")
    m = _two_term(A1, -gamma, B1, -2.0, 0.0,
                  f"magneto(A1={A1},gamma={gamma},B1={B1})")
    return m


def van_der_waals(S1: float, gamma: float) -> EosModel:
    """p = S1 (tau-1)^-(gamma+1) - tau^-2, valid for sufficiently large tau > 4."""
    if not (0.25 < S1 < 81.0 / 256.0):
        raise ParameterError("van_der_waals needs S1 in (1/4, 81/256)")
    if not (0.0 < gamma < 1.0):
        raise ParameterError("van_der_waals needs gamma in (0, 1)")
    gp = gamma + 1.0

    def p(t):
        return S1 * (t - 1.0) ** (-gp) - t ** -2

    def dp(t):
        return -S1 * gp * (t - 1.0) ** (-gp - 1.0) + 2.0 * t ** -3

    def d2p(t):
        return S1 * gp * (gp + 1.0) * (t - 1.0) ** (-gp - 2.0) - 6.0 * t ** -4

    def int_tau_dp(t):
        w = t - 1.0
        return S1 * gp * w ** -gamma / gamma + S1 * w ** (-gp) - 2.0 / t

    return EosModel(p=p, dp=dp, d2p=d2p, tau_min=4.0,
                    label=f"van_der_waals(S1={S1},gamma={gamma})",
                    int_tau_dp=int_tau_dp, kernel_kind=KIND_VDW,
                    kernel_params=(S1, gamma))


BUILTIN_FAMILIES = {
    "polytropic": polytropic,
    "two_constant": two_constant,
    "shallow_water": shallow_water,
    "magneto": magneto,
    "vdw": van_der_waals,
    "van_der_waals": van_der_waals,
}


def make_eos(family: str, **params) -> EosModel:
    """Construct a builtin EOS by family name (config entry point)."""
    if family not in BUILTIN_FAMILIES:
        raise ParameterError(f"unknown EOS family '{family}'")
    return BUILTIN_FAMILIES[family](**params)
