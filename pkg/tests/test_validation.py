import numpy as np
import pytest

from cornerflow import eos, goursat, validation, waves
from cornerflow.errors import FieldDegeneracyError, HullError, ParameterError

G2 = eos.polytropic(1.0, 2.0)
SW = eos.shallow_water(2.0, 1.0)
SW_U0 = 2.0 * eos.sound_speed(SW, 1.0)


def test_commutator_identity_all_shipped_triples():
    for name, triple in validation.SYNTHETIC_FIELDS.items():
        rep = validation.commutator_check(triple)
        assert rep.max_abs < 1e-10, name


def test_commutator_trivial_cases_exact():
    rep = validation.commutator_check(validation.SYNTHETIC_FIELDS["constant"])
    assert rep.max_abs < 1e-14
    rep = validation.commutator_check(validation.SYNTHETIC_FIELDS["linear-xi"])
    assert rep.max_abs < 1e-14


def test_commutator_degeneracy_guard():
    t = validation.SYNTHETIC_FIELDS["constant"]
    bad = validation.SyntheticTriple(
        "bad", t.I, t.Ix, t.Iy, t.Ixx, t.Ixy, t.Iyy,
        lambda x, y: 0.5, t.alpha_x, t.alpha_y,
        lambda x, y: 0.5 - 1e-12, t.beta_x, t.beta_y)
    with pytest.raises(FieldDegeneracyError):
        validation.commutator_check(bad)


def test_pde_residual_constant_state():
    def field(x, y):
        return 3.0, 0.0, 1.0
    reps = validation.pde_residual_on_field(G2, field, ((0.0, 1.0), (0.5, 1.5)), 12)
    for r in reps.values():
        assert r.max_abs < 1e-10


def test_pde_residual_planar_fan_second_order():
    fan = waves.PlanarWave(G2, 3.0, 1.0)
    head = fan.xi_head

    def field(x, y):
        tau = fan.tau_at_xi(x)
        return fan.u_at_tau(tau), 0.0, tau

    bounds = ((head + 0.3, head + 1.2), (0.3, 1.2))
    r1 = validation.pde_residual_on_field(G2, field, bounds, 11)
    r2 = validation.pde_residual_on_field(G2, field, bounds, 21)
    for key in ("mass", "momentum_xi"):
        ratio = r1[key].max_abs / max(r2[key].max_abs, 1e-300)
        assert ratio > 2.5, (key, ratio)


def test_pde_residual_hull_guard():
    def field(x, y):
        return None
    with pytest.raises(HullError):
        validation.pde_residual_on_field(G2, field, ((0, 1), (0, 1)), 8)


def _run(m, u0, tau_end, n):
    pq = waves.curve_PQ(m, u0, 1.0, tau_end, n)
    pr = waves.curve_PR_with_states(m, u0, 1.0, tau_end, n)
    return goursat.march_grid(pq, pr, m)


def test_pde_residual_on_solved_grid_improves():
    # probe spacing tied to the net (default) so refinement shows through
    vals = []
    for n in (17, 33):
        g = _run(SW, SW_U0, 1.9, n)
        reps = validation.pde_residual(g, SW)
        vals.append(max(r.l2 for r in reps.values()))
    assert vals[1] < vals[0]


def test_decomposition_residuals_converge():
    maxima = {}
    for n in (17, 33, 65):
        g = _run(SW, SW_U0, 1.9, n)
        dec = validation.decomposition_residual(g, SW)
        for k, r in dec.items():
            maxima.setdefault(k, []).append(r.max_abs)
    for k, vals in maxima.items():
        order = np.log2(vals[1] / vals[2])
        assert vals[2] < vals[1] < vals[0], k
        assert order > 1.0, (k, order, vals)


def test_decomposition_pq_boundary_relation():
    # on PQ, beta is constant, so relation 2 ties d+tau to 2 sin^2(delta);
    # the discrete residual there must be small and shrink with n
    res = []
    for n in (17, 65):
        g = _run(G2, 3.0, 2.5, n)
        dec = validation.decomposition_residual(g, G2)
        res.append(dec["c_dplus_beta"].max_abs)
    assert res[1] < res[0]


def test_second_order_residual_and_f():
    g = _run(SW, SW_U0, 1.9, 33)
    rep = validation.second_order_residual(g, SW)
    assert rep["f_min"] > 0
    g2 = _run(SW, SW_U0, 1.9, 65)
    rep2 = validation.second_order_residual(g2, SW)
    assert rep2["c_dminus_dplus_rho"].max_abs < rep["c_dminus_dplus_rho"].max_abs


def test_second_order_needs_three_nodes():
    g = _run(SW, SW_U0, 1.3, 2)
    with pytest.raises(ParameterError):
        validation.second_order_residual(g, SW)


def test_convergence_study_polytropic():
    def solve_fn(n):
        return _run(G2, 2.0 * np.sqrt(2.0), 2.5, n)

    table = validation.convergence_study(solve_fn, (16, 32, 64), G2)
    assert table.meets_first_order
    drift = table.row("bernoulli_drift")
    assert drift.orders[-1] > 1.5
    pos = table.row("position")
    assert pos.orders[-1] > 1.5 or pos.values[-1] < 1e-10


def test_convergence_study_input_validation():
    with pytest.raises(ParameterError):
        validation.convergence_study(lambda n: None, (16,), G2)
    with pytest.raises(ParameterError):
        validation.convergence_study(lambda n: None, (16, 24, 64), G2)
