"""Goursat characteristic-net solver for the rarefaction interaction region.

The net is indexed (i, j): row i = 0 is the C+ boundary curve PQ, column
j = 0 is the C- boundary curve PR, and node (i, j) sits on the C+
characteristic launched from PR[i] and the C- characteristic launched from
PQ[j]. Predecessors of an interior node are L = (i, j-1) along C+ and
R = (i-1, j) along C-. Anti-diagonals are mutually independent.

Each node is closed by the characteristic compatibility relations, the
trapezoidal potential update, and the pseudo-Bernoulli root for tau (whose
left side is strictly decreasing, so the root is unique and bracketable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .eos import EosModel, sound_speed
from .errors import (
    ConvergenceError,
    DegenerateGeometryError,
    HyperbolicityError,
    PhiPathError,
    SignConditionError,
    VacuumEndError,
)
from .waves import BoundaryCurve

STATUS_BOUNDARY = 0
STATUS_SOLVED = 1
STATUS_VACUUM = 2
STATUS_FAILED = 3

STATUS_NAMES = {0: "boundary", 1: "solved", 2: "vacuum", 3: "failed"}


@dataclass(frozen=True)
class CharNode:
    """One point of the characteristic net."""

    xi: float
    eta: float
    u: float
    v: float
    tau: float
    phi: float
    alpha: float
    beta: float
    c: float
    phi_alt: float = math.nan   # potential re-integrated along the C- path

    @property
    def sigma(self):
        return 0.5 * (self.alpha + self.beta)

    @property
    def delta(self):
        return 0.5 * (self.alpha - self.beta)

    @property
    def q(self):
        return math.hypot(self.u - self.xi, self.v - self.eta)

    @property
    def mach(self):
        return 1.0 / math.sin(self.delta)


def _phi_callable(eos: EosModel, tau0: float, tau_hi_guess: float):
    """Exact-antiderivative difference Phi(tau) - Phi(tau0), dense-cached
    for models without an analytic antiderivative."""
    if eos.int_tau_dp is not None:
        base = eos.int_tau_dp(tau0)
        return lambda t: eos.int_tau_dp(t) - base
    state = {"hi": max(tau_hi_guess, tau0 * 4.0), "sol": None}

    def rebuild():
        state["sol"] = solve_ivp(lambda t, y: [t * eos.dp(t)],
                                 (tau0, state["hi"]), [0.0], method="DOP853",
                                 rtol=1e-13, atol=1e-14, dense_output=True)

    rebuild()

    def phi(t):
        if t > state["hi"]:
            state["hi"] = 2.0 * t
            rebuild()
        if t == tau0:
            return 0.0
        return float(state["sol"].sol(t)[0])

    return phi


def _bernoulli_root(q2, phi, phi_fn, dp_fn, tau_min, tau0, hint, tau_ceiling):
    """Unique root of q^2/2 + (Phi(tau)-Phi(tau0)) + phi = 0.

    The left side has derivative tau*p'(tau) < 0. Bracket by geometric
    expansion, then bisection-safeguarded Newton.
    """
    def g(t):
        return 0.5 * q2 + phi_fn(t) + phi

    lo = max(tau_min * (1.0 + 1e-12), 0.5 * tau0)
    if lo <= 0.0:
        lo = 0.5 * tau0
    glo = g(lo)
    if glo < 0.0:
        raise ConvergenceError(f"Bernoulli root below bracket start tau={lo}")
    hi = max(hint, lo * 1.0001)
    ghi = g(hi)
    while ghi > 0.0:
        hi *= 1.6
        if hi > tau_ceiling:
            raise VacuumEndError("Bernoulli root beyond the vacuum ceiling",
                                 tau_star=hi)
        ghi = g(hi)
    x = min(max(hint, lo), hi)
    for _ in range(100):
        gx = g(x)
        if gx > 0.0:
            lo = x
        else:
            hi = x
        dgx = x * dp_fn(x)
        step_ok = dgx != 0.0
        if step_ok:
            xn = x - gx / dgx
            if not (lo < xn < hi):
                xn = 0.5 * (lo + hi)
        else:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) < 1e-14 * max(1.0, x):
            return xn
        x = xn
    return x


def solve_node(L: CharNode, R: CharNode, eos: EosModel, tol: float = 1e-10,
               max_iter: int = 50, *, tau0: float = None, min_open: float = 1e-4,
               phi_tol: float = 1e-5, tau_ceiling: float = 1e14,
               phi_fn=None) -> CharNode:
    """Predictor-corrector solve of the node downstream of L (its C+
    predecessor) and R (its C- predecessor)."""
    if tau0 is None:
        tau0 = min(L.tau, R.tau)
    if phi_fn is None:
        phi_fn = _phi_callable(eos, tau0, max(L.tau, R.tau) * 4.0)

    aX, bX = L.alpha, R.beta
    xiX, etaX = 0.5 * (L.xi + R.xi), 0.5 * (L.eta + R.eta)
    uX, vX = 0.5 * (L.u + R.u), 0.5 * (L.v + R.v)
    tauX = max(L.tau, R.tau)
    converged = False
    for _ in range(max_iter):
        abar = 0.5 * (L.alpha + aX)
        bbar = 0.5 * (R.beta + bX)
        opening = abs(abar - bbar)
        if opening < min_open or opening > math.pi - min_open:
            raise DegenerateGeometryError(
                f"characteristic directions nearly parallel (|a-b|={opening:.3e})")
        ca, sa = math.cos(abar), math.sin(abar)
        cb, sb = math.cos(bbar), math.sin(bbar)
        det = cb * sa - ca * sb                       # sin(abar - bbar)
        s = (-sb * (R.xi - L.xi) + cb * (R.eta - L.eta)) / det
        xin = L.xi + s * ca
        etan = L.eta + s * sa

        a2 = 0.5 * (R.alpha + aX)                     # lambda+ average along C-
        b2 = 0.5 * (L.beta + bX)                      # lambda- average along C+
        n1x, n1y = -math.sin(b2), math.cos(b2)
        n2x, n2y = -math.sin(a2), math.cos(a2)
        cross12 = n1x * n2y - n1y * n2x               # sin(a2 - b2)
        pcoef = ((R.u - L.u) * n2y - (R.v - L.v) * n2x) / cross12
        un = L.u + pcoef * n1x
        vn = L.v + pcoef * n1y

        UL, VL = L.u - L.xi, L.v - L.eta
        UX, VX = un - xin, vn - etan
        phin = L.phi + 0.5 * ((UL + UX) * (xin - L.xi) + (VL + VX) * (etan - L.eta))

        q2 = UX * UX + VX * VX
        taun = _bernoulli_root(q2, phin, phi_fn, eos.dp, eos.tau_min, tau0,
                               tauX, tau_ceiling)
        cn = sound_speed(eos, taun)
        qn = math.sqrt(q2)
        if qn <= cn:
            raise HyperbolicityError(f"q={qn} <= c={cn} in node iterate")
        sg = math.atan2(VX, UX)
        dl = math.asin(cn / qn)
        an, bn = sg + dl, sg - dl

        scale = max(1.0, abs(xin), abs(etan), abs(un), abs(vn), taun)
        change = max(abs(xin - xiX), abs(etan - etaX), abs(un - uX),
                     abs(vn - vX), abs(taun - tauX), abs(an - aX), abs(bn - bX))
        xiX, etaX, uX, vX, tauX, aX, bX = xin, etan, un, vn, taun, an, bn
        phiX, cX = phin, cn
        if change < tol * scale:
            converged = True
            break
    if not converged:
        raise ConvergenceError(f"node fixed point not converged in {max_iter} iterations")

    UR, VR = R.u - R.xi, R.v - R.eta
    UX, VX = uX - xiX, vX - etaX
    phi_alt = R.phi + 0.5 * ((UR + UX) * (xiX - R.xi) + (VR + VX) * (etaX - R.eta))
    if abs(phi_alt - phiX) > max(10.0 * tol * max(1.0, abs(phiX)), phi_tol):
        raise PhiPathError(
            f"two-path potential mismatch {abs(phi_alt - phiX):.3e} "
            "(grid too coarse for the requested phi_tol)")
    return CharNode(xi=xiX, eta=etaX, u=uX, v=vX, tau=tauX, phi=phiX,
                    alpha=aX, beta=bX, c=cX, phi_alt=phi_alt)


# ---------------------------------------------------------------------------
# grid container


@dataclass
class CharGrid:
    """Characteristic net over the interaction region.

    Row i=0 carries PQ, column j=0 carries PR; status marks how far each
    chain reached. All arrays share shape (n_minus, n_plus).
    """

    xi: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    tau: np.ndarray
    phi: np.ndarray
    phi_alt: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    c: np.ndarray
    status: np.ndarray
    tau0: float
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.xi.shape

    def ok_mask(self):
        return self.status <= STATUS_SOLVED

    def interior_mask(self):
        m = self.status == STATUS_SOLVED
        m[0, :] = False
        m[:, 0] = False
        return m

    def node(self, i, j) -> CharNode:
        return CharNode(xi=float(self.xi[i, j]), eta=float(self.eta[i, j]),
                        u=float(self.u[i, j]), v=float(self.v[i, j]),
                        tau=float(self.tau[i, j]), phi=float(self.phi[i, j]),
                        alpha=float(self.alpha[i, j]), beta=float(self.beta[i, j]),
                        c=float(self.c[i, j]), phi_alt=float(self.phi_alt[i, j]))

    def delta(self):
        return 0.5 * (self.alpha - self.beta)

    def arc_plus(self):
        """Chord lengths of C+ segments: ds[i, j] spans (i, j-1) -> (i, j)."""
        ds = np.full(self.shape, np.nan)
        ds[:, 1:] = np.hypot(np.diff(self.xi, axis=1), np.diff(self.eta, axis=1))
        return ds

    def arc_minus(self):
        ds = np.full(self.shape, np.nan)
        ds[1:, :] = np.hypot(np.diff(self.xi, axis=0), np.diff(self.eta, axis=0))
        return ds

    def d_plus(self, f):
        """Normalized directional difference along C+ at (i, j), one-sided
        into the grid: (f[i,j] - f[i,j-1]) / chord."""
        out = np.full(self.shape, np.nan)
        out[:, 1:] = np.diff(f, axis=1)
        return out / self.arc_plus()

    def d_minus(self, f):
        out = np.full(self.shape, np.nan)
        out[1:, :] = np.diff(f, axis=0)
        return out / self.arc_minus()

    def pair_ok_plus(self):
        ok = self.ok_mask()
        out = np.zeros(self.shape, dtype=bool)
        out[:, 1:] = ok[:, 1:] & ok[:, :-1]
        return out

    def pair_ok_minus(self):
        ok = self.ok_mask()
        out = np.zeros(self.shape, dtype=bool)
        out[1:, :] = ok[1:, :] & ok[:-1, :]
        return out

    def to_rows(self):
        """Deterministic export, row-major in (i, j): one row per node."""
        n_i, n_j = self.shape
        rows = []
        for i in range(n_i):
            for j in range(n_j):
                rows.append((self.xi[i, j], self.eta[i, j], self.u[i, j],
                             self.v[i, j], self.tau[i, j], self.phi[i, j],
                             self.alpha[i, j], self.beta[i, j],
                             STATUS_NAMES[int(self.status[i, j])]))
        return rows


def _seed_grid(PQ: BoundaryCurve, PR: BoundaryCurve, eos: EosModel) -> CharGrid:
    if not np.allclose([PQ.xi[0], PQ.eta[0]], [PR.xi[0], PR.eta[0]],
                       rtol=0, atol=1e-9 * max(1.0, abs(PQ.xi[0]))):
        raise SignConditionError("PQ and PR do not share the corner point P")
    n_i, n_j = len(PR), len(PQ)
    shape = (n_i, n_j)
    arrays = {k: np.full(shape, np.nan) for k in
              ("xi", "eta", "u", "v", "tau", "phi", "phi_alt", "alpha", "beta", "c")}
    status = np.full(shape, STATUS_FAILED, dtype=np.int8)
    for k, src in (("xi", "xi"), ("eta", "eta"), ("u", "u"), ("v", "v"),
                   ("tau", "tau"), ("phi", "phi"), ("alpha", "alpha"), ("beta", "beta")):
        arrays[k][0, :] = getattr(PQ, src)
        arrays[k][:, 0] = getattr(PR, src)
    arrays["c"][0, :] = [sound_speed(eos, t) for t in PQ.tau]
    arrays["c"][:, 0] = [sound_speed(eos, t) for t in PR.tau]
    arrays["phi_alt"][0, :] = arrays["phi"][0, :]
    arrays["phi_alt"][:, 0] = arrays["phi"][:, 0]
    status[0, :] = STATUS_BOUNDARY
    status[:, 0] = STATUS_BOUNDARY
    return CharGrid(**arrays, status=status, tau0=float(PQ.tau[0]))


def march_grid(PQ: BoundaryCurve, PR: BoundaryCurve, eos: EosModel,
               tol: float = 1e-10, *, max_iter: int = 50, c_vac: float = None,
               eps2: float = 0.0, phi_tol: float = None,
               use_kernel: bool = None) -> CharGrid:
    """Fill the net diagonal-by-diagonal from the two boundary curves.

    Nodes on one anti-diagonal depend only on the previous diagonals, so
    they are safe to solve concurrently; both shipped paths solve them in
    index order for determinism. A chain is truncated (not the run) when a
    node reaches the vacuum threshold or fails; the run itself fails only
    if the corner cell does.
    """
    grid = _seed_grid(PQ, PR, eos)
    c0 = float(grid.c[0, 0])
    if c_vac is None:
        c_vac = 1e-4 * c0
    if phi_tol is None:
        h = float(max(np.max(PQ.arc_steps()), np.max(PR.arc_steps())))
        phi_tol = max(10.0 * tol, 10.0 * h ** 3)
    min_open = max(0.25 * eps2, 1e-4)
    tau0 = grid.tau0
    tau_ceiling = _tau_at_sound_speed(eos, tau0, c_vac)

    from . import _kernels
    if use_kernel is None:
        use_kernel = _kernels.kernel_available(eos)
    if use_kernel and _kernels.kernel_available(eos):
        _kernels.march_kernel(grid, eos, tol, max_iter, min_open, phi_tol,
                              c_vac, tau_ceiling, eps2)
    else:
        _march_pure(grid, eos, tol, max_iter, min_open, phi_tol, c_vac,
                    tau_ceiling, eps2)

    grid.meta.update(tol=tol, max_iter=max_iter, c_vac=c_vac, eps2=eps2,
                     phi_tol=phi_tol, kernel=bool(use_kernel and
                                                  _kernels.kernel_available(eos)))
    if grid.status[1, 1] == STATUS_FAILED:
        raise ConvergenceError("corner cell (1,1) failed; run aborted")
    return grid


def _tau_at_sound_speed(eos: EosModel, tau0: float, c_target: float,
                        tau_cap: float = 1e14):
    """Largest admissible tau: where c(tau) falls to c_target, or the cap
    for laws whose sound speed stays above it."""
    lo, hi = tau0, tau0 * 2.0
    while sound_speed(eos, hi) > c_target:
        lo, hi = hi, hi * 2.0
        if hi > tau_cap:
            return tau_cap
    from scipy.optimize import brentq
    return brentq(lambda t: sound_speed(eos, t) - c_target, lo, hi, xtol=1e-10)


def _march_pure(grid: CharGrid, eos, tol, max_iter, min_open, phi_tol,
                c_vac, tau_ceiling, eps2):
    n_i, n_j = grid.shape
    phi_fn = _phi_callable(eos, grid.tau0, max(grid.tau[0, -1], grid.tau[-1, 0]) * 8.0)
    failures = []
    for d in range(2, n_i + n_j - 1):
        for i in range(max(1, d - n_j + 1), min(d, n_i)):
            j = d - i
            if j < 1 or j >= n_j:
                continue
            sL, sR = grid.status[i, j - 1], grid.status[i - 1, j]
            if sL > STATUS_SOLVED or sR > STATUS_SOLVED:
                grid.status[i, j] = STATUS_VACUUM if STATUS_VACUUM in (sL, sR) \
                    else STATUS_FAILED
                continue
            L, R = grid.node(i, j - 1), grid.node(i - 1, j)
            try:
                X = solve_node(L, R, eos, tol, max_iter, tau0=grid.tau0,
                               min_open=min_open, phi_tol=phi_tol,
                               tau_ceiling=tau_ceiling, phi_fn=phi_fn)
            except VacuumEndError:
                grid.status[i, j] = STATUS_VACUUM
                continue
            except (HyperbolicityError, ConvergenceError, PhiPathError,
                    DegenerateGeometryError) as e:
                grid.status[i, j] = STATUS_FAILED
                failures.append((i, j, str(e)))
                continue
            if 0.5 * (X.alpha - X.beta) <= 0.5 * eps2:
                grid.status[i, j] = STATUS_FAILED
                failures.append((i, j, "delta <= eps2/2"))
                continue
            _store(grid, i, j, X,
                   STATUS_VACUUM if X.c < c_vac else STATUS_SOLVED)
    grid.meta["failures"] = failures


def _store(grid, i, j, X: CharNode, status):
    grid.xi[i, j] = X.xi
    grid.eta[i, j] = X.eta
    grid.u[i, j] = X.u
    grid.v[i, j] = X.v
    grid.tau[i, j] = X.tau
    grid.phi[i, j] = X.phi
    grid.phi_alt[i, j] = X.phi_alt
    grid.alpha[i, j] = X.alpha
    grid.beta[i, j] = X.beta
    grid.c[i, j] = X.c
    grid.status[i, j] = status


# ---------------------------------------------------------------------------
# step-size rule and curve extraction


def step_bound(eos: EosModel, tau0: float, tau_tilde: float, m1_value: float,
               eps1: float, chi_value: float) -> float:
    """Admissible level-curve spacing -sin(2*dbar(tau0)+chi-eps1)/(2*tau~*M1)."""
    from .eos import delta_bar
    if m1_value >= 0.0:
        raise SignConditionError(f"M1={m1_value} must be negative")
    arg = 2.0 * delta_bar(eos, tau0) + chi_value - eps1
    return -math.sin(arg) / (2.0 * tau_tilde * m1_value)


def level_curve_crossings(grid: CharGrid, tau_star: float):
    """Edge crossings of the tau = tau_star level, ordered along the
    anti-chain (ascending i, descending j)."""
    ok = grid.ok_mask()
    pts = []
    n_i, n_j = grid.shape
    for i in range(n_i):
        for j in range(n_j):
            if not ok[i, j]:
                continue
            for (i2, j2) in ((i, j + 1), (i + 1, j)):
                if i2 >= n_i or j2 >= n_j or not ok[i2, j2]:
                    continue
                t1, t2 = grid.tau[i, j], grid.tau[i2, j2]
                if (t1 - tau_star) * (t2 - tau_star) <= 0.0 and t1 != t2:
                    w = (tau_star - t1) / (t2 - t1)
                    key = 0.5 * (i + i2) - 0.5 * (j + j2)
                    pts.append((key, 0.5 * (i + i2),
                                grid.xi[i, j] + w * (grid.xi[i2, j2] - grid.xi[i, j]),
                                grid.eta[i, j] + w * (grid.eta[i2, j2] - grid.eta[i, j])))
    pts.sort(key=lambda z: (z[0], z[1]))
    return np.array([(x, y) for _, _, x, y in pts])


def extract_level_curve(grid: CharGrid, tau_star: float) -> np.ndarray:
    """Polyline of the tau level curve; empty if the level is outside the
    solved range."""
    if tau_star < grid.tau0:
        return np.empty((0, 2))
    if abs(tau_star - grid.tau0) < 1e-14 * max(1.0, grid.tau0):
        return np.array([[grid.xi[0, 0], grid.eta[0, 0]]])
    return level_curve_crossings(grid, tau_star)


def max_complete_tau(grid: CharGrid) -> float:
    """Largest tau whose level curve spans the full net: the smallest of
    the per-chain maxima over contiguously solved nodes."""
    n_i, n_j = grid.shape
    ok = grid.ok_mask()
    best = math.inf
    for i in range(n_i):
        t = -math.inf
        for j in range(n_j):
            if not ok[i, j]:
                break
            t = max(t, grid.tau[i, j])
        best = min(best, t)
    for j in range(n_j):
        t = -math.inf
        for i in range(n_i):
            if not ok[i, j]:
                break
            t = max(t, grid.tau[i, j])
        best = min(best, t)
    return best


@dataclass
class VacuumBoundary:
    points: np.ndarray
    tau_frontier: float
    lipschitz: float
    n_vertical: int


def extract_vacuum_boundary(grid: CharGrid, c_vac: float = None) -> VacuumBoundary:
    """Frontier level curve standing in for the gas/vacuum interface.

    The frontier level is the largest complete tau level (the truncation
    level of the marched domain); for laws whose sound speed reaches c_vac
    the truncation statuses pull that level down to c = c_vac themselves.
    Reports the discrete Lipschitz constant max |d xi / d eta|.
    """
    tau_f = max_complete_tau(grid)
    if not math.isfinite(tau_f) or tau_f <= grid.tau0:
        return VacuumBoundary(np.empty((0, 2)), grid.tau0, 0.0, 0)
    pts = level_curve_crossings(grid, tau_f * (1.0 - 1e-12))
    if len(pts) < 2:
        return VacuumBoundary(pts, tau_f, 0.0, 0)
    d = np.diff(pts, axis=0)
    small = np.abs(d[:, 1]) < 1e-13 * (np.abs(d[:, 0]) + 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = np.abs(d[:, 0] / d[:, 1])
    slopes = slopes[~small]
    lip = float(np.max(slopes)) if len(slopes) else 0.0
    return VacuumBoundary(pts, float(tau_f), lip, int(np.sum(small)))
