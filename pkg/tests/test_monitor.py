import math

import numpy as np
import pytest

from cornerflow import eos, goursat, monitor, waves
from cornerflow.errors import SignConditionError, SubsonicError

G2 = eos.polytropic(1.0, 2.0)
SW = eos.shallow_water(2.0, 1.0)
SW_U0 = 2.0 * eos.sound_speed(SW, 1.0)


def test_alpha0_rationalized_form():
    # closed form: alpha0 = asin(c0/u0); also agrees with the primary
    # eigenvalue formula evaluated just off the singular point U = c0
    for m, u0, t0 in ((G2, 3.0, 1.0), (SW, SW_U0, 1.0)):
        c0 = eos.sound_speed(m, t0)
        a0 = monitor.alpha0_at_P(m, u0, t0)
        assert abs(a0 - math.asin(c0 / u0)) < 1e-12
        _, eta_p = waves.interaction_point(m, u0, t0)
        for off in (1e-6, -1e-6):
            U, V = c0 * (1 + off), -eta_p
            q2 = U * U + V * V
            lam = (U * V + c0 * math.sqrt(q2 - c0 * c0)) / (U * U - c0 * c0)
            assert abs(math.atan(lam) - a0) < 1e-4


def test_alpha0_limit_near_sonic():
    a0 = monitor.alpha0_at_P(G2, np.sqrt(2.0) * (1 + 1e-10), 1.0)
    assert a0 > 1.57
    with pytest.raises(SubsonicError):
        monitor.alpha0_at_P(G2, 1.0, 1.0)


def test_hypothesis_polytropic_reduction():
    # chi = psi = 0, so the condition collapses to 2*dbar0 < a0+pi/2 < 4*dbar0
    rep = monitor.hypothesis_check(G2, 3.0, 1.0, 50.0)
    assert rep.chi_max < 1e-12 and rep.psi_max < 1e-12
    db0 = eos.delta_bar(G2, 1.0)
    assert np.allclose(rep.condition_left, 2 * db0)
    assert abs(rep.condition_right - 4 * db0) < 1e-14
    assert rep.passed


def test_hypothesis_fails_when_u0_low():
    rep = monitor.hypothesis_check(G2, 1.2 * np.sqrt(2.0), 1.0, 50.0)
    assert not rep.passed  # alpha0 + pi/2 beyond 4*dbar0


def test_hypothesis_monotone_in_alpha0():
    # raising u0 lowers alpha0; once passing on the right inequality it
    # cannot flip back to fail on that side
    passes = [monitor.hypothesis_check(G2, u0, 1.0, 20.0).passed
              for u0 in (1.8, 2.4, 3.0, 4.0, 8.0)]
    k = passes.index(True)
    assert all(passes[k:])


def test_hypothesis_vdw_left_tightening():
    m = eos.van_der_waals(0.28, 0.05)
    c0 = eos.sound_speed(m, 8.0)
    rep = monitor.hypothesis_check(m, 1.3 * c0, 8.0, 100.0)
    # chi < 0 lowers the left side as tau grows
    assert rep.condition_left[-1] < rep.condition_left[0]
    assert rep.passed


def test_invariant_box_at_tau0_and_widening():
    prof = eos.build_delta_bar_profile(SW, 1.0, 40.0, 64)
    a0 = monitor.alpha0_at_P(SW, SW_U0, 1.0)
    eps1 = 0.05 * eos.delta_bar(SW, 1.0)
    db0 = eos.delta_bar(SW, 1.0)
    box0 = monitor.invariant_box(prof, 1.0, eps1, a0)
    assert abs(box0.alpha_range[0] - (-np.pi / 2 - eps1 + 2 * db0)) < 1e-12
    assert abs(box0.alpha_range[1] - (a0 + eps1)) < 1e-12
    assert abs(box0.beta_range[0] - (-np.pi / 2 - eps1)) < 1e-12
    assert abs(box0.beta_range[1] - (a0 + eps1 - 2 * db0)) < 1e-12
    assert box0.kind == "square-case-1"
    # m' > 0: boxes only widen with tau on the alpha-upper/beta-lower sides
    b1, b2 = (monitor.invariant_box(prof, t, eps1, a0) for t in (2.0, 6.0))
    assert b2.alpha_range[1] > b1.alpha_range[1] > box0.alpha_range[1]
    assert b2.beta_range[0] < b1.beta_range[0] < box0.beta_range[0]
    assert b1.alpha_range[0] == b2.alpha_range[0]


def test_invariant_box_case2_vdw():
    m = eos.van_der_waals(0.28, 0.05)
    prof = eos.build_delta_bar_profile(m, 8.0, 200.0, 64)
    a0 = monitor.alpha0_at_P(m, 1.3 * eos.sound_speed(m, 8.0), 8.0)
    box = monitor.invariant_box(prof, 20.0, 0.03, a0)
    assert box.kind == "square-case-2"
    db0 = prof.delta_bar_at(8.0)
    want_lo = -np.pi / 2 - 0.03 + 2 * db0 + 2 * (prof.delta_bar_at(20.0) - db0)
    assert abs(box.alpha_range[0] - want_lo) < 1e-12
    assert abs(box.alpha_range[1] - (a0 + 0.03)) < 1e-12


def _dam_break_grid(n=33, tau_end=1.9):
    pq = waves.curve_PQ(SW, SW_U0, 1.0, tau_end, n)
    pr = waves.curve_PR_with_states(SW, SW_U0, 1.0, tau_end, n)
    return pq, pr, goursat.march_grid(pq, pr, SW)


def test_m1_bound_properties():
    pq, pr, _ = _dam_break_grid(17)
    m1 = monitor.m1_bound(pq, pr)
    for t in (1.1, 1.5, 1.85):
        assert m1(t) < 0
    same = monitor.m1_bound(pq, pq)
    tm, vq = pq.rho_derivative()
    assert abs(same(float(tm[3])) - vq[3]) < 1e-12


def test_scan_f_exponent_minimal():
    pq, pr, g = _dam_break_grid(17)
    n = monitor.scan_f_exponent(g, SW)
    ok = g.ok_mask()
    vals = monitor.g_coefficient(SW, g.tau[ok], g.delta()[ok], n)
    assert np.all(vals > 0)
    if n > 0:
        prev = monitor.g_coefficient(SW, g.tau[ok], g.delta()[ok], n - 1)
        assert np.min(prev) <= 0


def test_audit_dam_break_clean():
    pq, pr, g = _dam_break_grid(33)
    prof = eos.build_delta_bar_profile(SW, 1.0, 4.0 * 1.9, 64)
    a0 = monitor.alpha0_at_P(SW, SW_U0, 1.0)
    eps1 = 0.05 * eos.delta_bar(SW, 1.0)
    eps2 = 0.1 * (a0 + 0.5 * np.pi)
    rep = monitor.audit_grid(g, SW, prof, a0, eps1, eps2,
                             m1=monitor.m1_bound(pq, pr))
    assert rep.passed, [c.to_dict() for c in rep.checks if c.violations]
    assert rep.step_bound_value > 0
    assert rep.boundary_rho_residual < 0.02
    assert any(c.name == "f_positive" and c.violations == 0 for c in rep.checks)


def test_audit_flags_injected_fault():
    pq, pr, g = _dam_break_grid(17)
    prof = eos.build_delta_bar_profile(SW, 1.0, 4.0 * 1.9, 64)
    a0 = monitor.alpha0_at_P(SW, SW_U0, 1.0)
    eps1 = 0.05 * eos.delta_bar(SW, 1.0)
    eps2 = 0.1 * (a0 + 0.5 * np.pi)
    box = monitor.invariant_box(prof, g.tau[8, 8], eps1, a0, eps2)
    g.alpha[8, 8] = box.alpha_range[1] + 0.05   # push alpha out of the box
    rep = monitor.audit_grid(g, SW, prof, a0, eps1, eps2)
    bad = {c.name: c.violations for c in rep.checks if c.violations}
    assert bad.get("invariant_box", 0) == 1
    assert not rep.passed


def test_omega_convention_switch():
    pq, pr, g = _dam_break_grid(33)
    prof = eos.build_delta_bar_profile(SW, 1.0, 4.0 * 1.9, 64)
    a0 = monitor.alpha0_at_P(SW, SW_U0, 1.0)
    r_delta = monitor.audit_grid(g, SW, prof, a0, 0.03, 0.1,
                                 omega_convention="delta").boundary_rho_residual
    r_sigma = monitor.audit_grid(g, SW, prof, a0, 0.03, 0.1,
                                 omega_convention="sigma").boundary_rho_residual
    assert r_delta < 0.02
    assert r_sigma > 5 * r_delta


def test_boundary_envelope_sign_guard():
    with pytest.raises(SignConditionError):
        monitor.BoundaryEnvelope([1.0, 2.0], [-0.1, 0.2], [1.0, 2.0],
                                 [-0.1, -0.2], "M1")
