"""Compiled fast path for the net march (builtin EOS families only).

The kernel mirrors goursat._march_pure operation for operation; tests assert
the two paths agree. Selection: numba must import, the EosModel must carry
kernel parameters, and CORNERFLOW_NO_NUMBA must not be set.
"""

import math
import os

import numpy as np

from .eos import KIND_TWO_TERM, KIND_VDW

_DISABLED = os.environ.get("CORNERFLOW_NO_NUMBA", "") not in ("", "0")

try:
    if _DISABLED:
        raise ImportError("disabled by CORNERFLOW_NO_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # pragma: no cover - trivial shim
        def wrap(f):
            return f
        return wrap if not (args and callable(args[0])) else args[0]


def using_numba() -> bool:
    return HAS_NUMBA


def kernel_available(eos) -> bool:
    return HAS_NUMBA and eos.kernel_kind in (KIND_TWO_TERM, KIND_VDW)


_OK, _VACUUM, _FAILED = 1, 2, 3


@njit(cache=True)
def _k_dp(kind, prm, t):
    if kind == 0:
        return prm[0] * prm[1] * t ** (prm[1] - 1.0) + prm[2] * prm[3] * t ** (prm[3] - 1.0)
    g = prm[1]
    return -prm[0] * (g + 1.0) * (t - 1.0) ** (-g - 2.0) + 2.0 * t ** -3.0


@njit(cache=True)
def _k_c(kind, prm, t):
    return math.sqrt(-t * t * _k_dp(kind, prm, t))


@njit(cache=True)
def _k_phi(kind, prm, t):
    # antiderivative of s*p'(s)
    if kind == 0:
        out = 0.0
        for m in range(2):
            a = prm[2 * m]
            e = prm[2 * m + 1]
            if a != 0.0 and e != 0.0:
                if e == -1.0:
                    out += a * e * math.log(t)
                else:
                    out += a * e * t ** (e + 1.0) / (e + 1.0)
        return out
    S1, g = prm[0], prm[1]
    w = t - 1.0
    return S1 * (g + 1.0) * w ** -g / g + S1 * w ** (-g - 1.0) - 2.0 / t


@njit(cache=True)
def _k_root(kind, prm, q2, phi, phi0, tau_min, tau0, hint, ceiling):
    """Root of q2/2 + (Phi(t)-phi0) + phi = 0; returns (tau, status)."""
    lo = tau_min * (1.0 + 1e-12)
    if lo < 0.5 * tau0:
        lo = 0.5 * tau0
    glo = 0.5 * q2 + (_k_phi(kind, prm, lo) - phi0) + phi
    if glo < 0.0:
        return 0.0, _FAILED
    hi = hint if hint > lo * 1.0001 else lo * 1.0001
    ghi = 0.5 * q2 + (_k_phi(kind, prm, hi) - phi0) + phi
    while ghi > 0.0:
        hi *= 1.6
        if hi > ceiling:
            return hi, _VACUUM
        ghi = 0.5 * q2 + (_k_phi(kind, prm, hi) - phi0) + phi
    x = hint
    if x < lo:
        x = lo
    if x > hi:
        x = hi
    for _ in range(100):
        gx = 0.5 * q2 + (_k_phi(kind, prm, x) - phi0) + phi
        if gx > 0.0:
            lo = x
        else:
            hi = x
        dgx = x * _k_dp(kind, prm, x)
        if dgx != 0.0:
            xn = x - gx / dgx
            if not (lo < xn < hi):
                xn = 0.5 * (lo + hi)
        else:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) < 1e-14 * max(1.0, x):
            return xn, _OK
        x = xn
    return x, _OK


@njit(cache=True)
def _k_march(xi, eta, u, v, tau, phi, phi_alt, alpha, beta, c, status,
             kind, prm, tau0, tol, max_iter, min_open, phi_tol, c_vac,
             ceiling, eps2, tau_min):
    n_i, n_j = xi.shape
    phi0 = _k_phi(kind, prm, tau0)
    for d in range(2, n_i + n_j - 1):
        i_lo = 1 if d - n_j + 1 < 1 else d - n_j + 1
        i_hi = d if d < n_i else n_i
        for i in range(i_lo, i_hi):
            j = d - i
            if j < 1 or j >= n_j:
                continue
            sL = status[i, j - 1]
            sR = status[i - 1, j]
            if sL > 1 or sR > 1:
                status[i, j] = _VACUUM if (sL == _VACUUM or sR == _VACUUM) else _FAILED
                continue
            Lxi, Leta, Lu, Lv = xi[i, j - 1], eta[i, j - 1], u[i, j - 1], v[i, j - 1]
            Ltau, Lphi, La, Lb = tau[i, j - 1], phi[i, j - 1], alpha[i, j - 1], beta[i, j - 1]
            Rxi, Reta, Ru, Rv = xi[i - 1, j], eta[i - 1, j], u[i - 1, j], v[i - 1, j]
            Rtau, Rphi, Ra, Rb = tau[i - 1, j], phi[i - 1, j], alpha[i - 1, j], beta[i - 1, j]

            aX, bX = La, Rb
            xiX, etaX = 0.5 * (Lxi + Rxi), 0.5 * (Leta + Reta)
            uX, vX = 0.5 * (Lu + Ru), 0.5 * (Lv + Rv)
            tauX = Ltau if Ltau > Rtau else Rtau
            phiX, cX = 0.0, 0.0
            stat = _FAILED
            converged = False
            for _ in range(max_iter):
                abar = 0.5 * (La + aX)
                bbar = 0.5 * (Rb + bX)
                opening = abs(abar - bbar)
                if opening < min_open or opening > math.pi - min_open:
                    stat = _FAILED
                    converged = False
                    break
                ca, sa = math.cos(abar), math.sin(abar)
                cb, sb = math.cos(bbar), math.sin(bbar)
                det = cb * sa - ca * sb
                s = (-sb * (Rxi - Lxi) + cb * (Reta - Leta)) / det
                xin = Lxi + s * ca
                etan = Leta + s * sa

                a2 = 0.5 * (Ra + aX)
                b2 = 0.5 * (Lb + bX)
                n1x, n1y = -math.sin(b2), math.cos(b2)
                n2x, n2y = -math.sin(a2), math.cos(a2)
                cross12 = n1x * n2y - n1y * n2x
                pcoef = ((Ru - Lu) * n2y - (Rv - Lv) * n2x) / cross12
                un = Lu + pcoef * n1x
                vn = Lv + pcoef * n1y

                UL, VL = Lu - Lxi, Lv - Leta
                UX, VX = un - xin, vn - etan
                phin = Lphi + 0.5 * ((UL + UX) * (xin - Lxi) + (VL + VX) * (etan - Leta))
                q2 = UX * UX + VX * VX
                taun, rstat = _k_root(kind, prm, q2, phin, phi0, tau_min, tau0,
                                      tauX, ceiling)
                if rstat != _OK:
                    stat = rstat
                    converged = False
                    break
                cn = _k_c(kind, prm, taun)
                qn = math.sqrt(q2)
                if qn <= cn:
                    stat = _FAILED
                    converged = False
                    break
                sg = math.atan2(VX, UX)
                dl = math.asin(cn / qn)
                an, bn = sg + dl, sg - dl
                scale = max(1.0, abs(xin), abs(etan), abs(un), abs(vn), taun)
                change = max(abs(xin - xiX), abs(etan - etaX), abs(un - uX),
                             abs(vn - vX), abs(taun - tauX), abs(an - aX),
                             abs(bn - bX))
                xiX, etaX, uX, vX, tauX, aX, bX = xin, etan, un, vn, taun, an, bn
                phiX, cX = phin, cn
                if change < tol * scale:
                    converged = True
                    break
            if not converged:
                status[i, j] = stat
                continue
            UR, VR = Ru - Rxi, Rv - Reta
            UX, VX = uX - xiX, vX - etaX
            palt = Rphi + 0.5 * ((UR + UX) * (xiX - Rxi) + (VR + VX) * (etaX - Reta))
            lim = 10.0 * tol * max(1.0, abs(phiX))
            if phi_tol > lim:
                lim = phi_tol
            if abs(palt - phiX) > lim:
                status[i, j] = _FAILED
                continue
            if 0.5 * (aX - bX) <= 0.5 * eps2:
                status[i, j] = _FAILED
                continue
            xi[i, j] = xiX
            eta[i, j] = etaX
            u[i, j] = uX
            v[i, j] = vX
            tau[i, j] = tauX
            phi[i, j] = phiX
            phi_alt[i, j] = palt
            alpha[i, j] = aX
            beta[i, j] = bX
            c[i, j] = cX
            status[i, j] = _VACUUM if cX < c_vac else _OK


def march_kernel(grid, eos, tol, max_iter, min_open, phi_tol, c_vac,
                 tau_ceiling, eps2):
    prm = np.asarray(eos.kernel_params, dtype=np.float64)
    _k_march(grid.xi, grid.eta, grid.u, grid.v, grid.tau, grid.phi,
             grid.phi_alt, grid.alpha, grid.beta, grid.c, grid.status,
             eos.kernel_kind, prm, grid.tau0, tol, max_iter, min_open,
             phi_tol, c_vac, tau_ceiling, eps2, eos.tau_min)
