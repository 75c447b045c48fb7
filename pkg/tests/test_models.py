import warnings

import numpy as np
import pytest

from schrodingerizer.dilation import build_dilation_step, evolutionary_step
from schrodingerizer.evolvers import EvolutionPlan, dense_expm_oracle
from schrodingerizer.grids import Grid, PGrid
from schrodingerizer.models import (
    QuadratureRule,
    build_black_scholes,
    build_boltzmann,
    build_convection,
    build_fokker_planck,
    build_heat,
    build_liouville,
    default_ordinates,
    exact_convection_solution,
    exact_heat_solution,
)
from schrodingerizer.ode import hermitian_split
from schrodingerizer.warp import IntegrateP, PointP, recover


def _hermiticity(terms, tol=1e-12):
    h = sum(term.dense() for term in terms)
    return np.abs(h - h.conj().T).max() <= tol * max(1.0, np.abs(h).max())


# ---------------------------------------------------------------------------
# heat
# ---------------------------------------------------------------------------


def test_heat_hamiltonian_hermitian_with_potential():
    model = build_heat(lambda x: np.cos(np.pi * x), Grid(-1, 1, 8), PGrid(-4, 4, 16))
    assert _hermiticity(model.h_terms())
    assert _hermiticity(model.hdiag_terms())


def test_heat_short_run_recovers_decay():
    grid = Grid(-1, 1, 16)
    pg = PGrid(-5, 5, 512, alpha_neg=10.0, left_support=-1.0)
    model = build_heat(None, grid, pg)
    u0 = np.sin(np.pi * grid.axis())
    t = 0.1
    traj = model.evolve(model.initial_state(u0), EvolutionPlan("exact_diagonal", dt=t, t_final=t))
    got = model.recover(model.wrap(traj.final, t), PointP())
    exact = np.exp(-np.pi**2 * t) * np.sin(np.pi * grid.axis())
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) <= 5e-3


def test_heat_integral_recovery_with_adequate_tail_window():
    # the integral recovery needs exp(-p) data surviving above p = 0 at the
    # final time: with R - s_max T well above the e-folding scale it meets
    # the same tolerance-and-rate contract as the point recovery
    grid = Grid(-1, 1, 16)
    t_star = 4.0 / np.pi**2
    u0 = np.sin(np.pi * grid.axis())
    exact = np.exp(-4.0) * np.sin(np.pi * grid.axis())
    errs = []
    for n in (512, 1024, 2048):
        pg = PGrid(-5, 15, n, alpha_neg=10.0, left_support=-1.0)
        model = build_heat(None, grid, pg)
        traj = model.evolve(
            model.initial_state(u0), EvolutionPlan("exact_diagonal", dt=t_star, t_final=t_star)
        )
        got = model.recover(model.wrap(traj.final, t_star), IntegrateP())
        errs.append(np.linalg.norm(got - exact) / np.linalg.norm(exact))
    assert errs[0] <= 2e-2
    slope = -np.polyfit(np.arange(3.0), np.log2(errs), 1)[0]
    assert slope >= 0.9


def test_exact_heat_solution_constant_potential():
    grid = Grid(-1, 1, 16)
    u0 = np.sin(np.pi * grid.axis()) + 0.2
    got = exact_heat_solution(u0, grid, 0.3, v_const=0.5)
    ref = np.exp((0.5 - np.pi**2) * 0.3) * np.sin(np.pi * grid.axis()) + 0.2 * np.exp(0.5 * 0.3)
    assert np.abs(got - ref).max() <= 1e-12


# ---------------------------------------------------------------------------
# convection
# ---------------------------------------------------------------------------


def test_convection_both_routes_translate():
    grid = Grid(-1, 1, 32)
    model = build_convection(grid, p_points=64)
    x = grid.axis()
    u0 = np.sin(np.pi * x)
    t = 0.3
    ref = np.sin(np.pi * (x - t))  # method of characteristics
    direct = model.evolve_direct(u0, t)
    assert np.linalg.norm(direct - ref) / np.linalg.norm(ref) <= 1e-10
    traj = model.evolve(model.initial_state(u0), EvolutionPlan("exact_diagonal", dt=t, t_final=t))
    from schrodingerizer.warp import WarpedState

    w = WarpedState(values=traj.final, pgrid=model.pgrid, t=t, grid=grid)
    warped = model.recover(w)
    assert np.linalg.norm(warped - ref) / np.linalg.norm(ref) <= 1e-10
    assert np.linalg.norm(exact_convection_solution(u0, grid, t) - ref) <= 1e-10


def test_convection_constant_data_is_invariant():
    grid = Grid(-1, 1, 16)
    model = build_convection(grid)
    u0 = np.full(16, 2.5)
    out = model.evolve_direct(u0, 1.7)
    assert np.abs(out - u0).max() <= 1e-12


def test_convection_2d_generator_real_diagonal():
    grid = Grid(-1, 1, 8, dims=2)
    model = build_convection(grid, p_points=16)
    entries = model.sin_entries()
    assert np.isrealobj(entries)
    mu = grid.mu()
    eta = model.pgrid.mu()
    ref = -(mu[:, None, None] + mu[None, :, None]) * eta[None, None, :] ** 2
    assert np.allclose(entries, ref.reshape(-1))
    assert _hermiticity(model.h_terms())


# ---------------------------------------------------------------------------
# Black-Scholes
# ---------------------------------------------------------------------------


def test_black_scholes_drift_cancels_at_balance():
    model = build_black_scholes(0.02, 0.2, Grid(-1, 1, 16), PGrid(-4, 4, 32))
    assert np.abs(model.phase_rates()).max() <= 1e-14


def test_black_scholes_mode_entries():
    # derived via the Hermitian split of the mode-space symbol
    # a(mu) = i(r - sigma^2/2) mu - (sigma^2/2 mu^2 + r)
    model = build_black_scholes(0.05, 0.2, Grid(-1, 1, 16), PGrid(-4, 4, 32))
    mu = model.grid.mu()
    eta = model.pgrid.mu()
    sym = 1j * (0.05 - 0.02) * mu - (0.02 * mu**2 + 0.05)
    ref = (-sym.real[:, None] * eta + sym.imag[:, None]).reshape(-1)
    assert np.allclose(model.mode_entries(), ref)
    assert _hermiticity(model.h_terms())


def test_black_scholes_split_commutes_and_factorises():
    model = build_black_scholes(0.05, 0.2, Grid(-1, 1, 8), PGrid(-4, 4, 16))
    assert model.commuting
    h1 = np.diag(model.contraction_rates())
    h2 = np.diag(model.phase_rates())
    assert np.abs(h1 @ h2 - h2 @ h1).max() == 0.0
    t = 0.8
    import scipy.linalg

    full = scipy.linalg.expm((h1 + 1j * h2) * t)
    factored = scipy.linalg.expm(h1 * t) @ scipy.linalg.expm(1j * h2 * t)
    assert np.abs(full - factored).max() <= 1e-10


def test_black_scholes_one_shot_dilation_equals_stepped():
    model = build_black_scholes(0.05, 0.2, Grid(-1, 1, 16), PGrid(-4, 4, 32))
    h1 = np.diag(model.contraction_rates())
    h2 = np.diag(model.phase_rates())
    psi = np.exp(-model.grid.axis() ** 2) + 0j
    t = 0.7
    one_shot, _ = evolutionary_step(build_dilation_step(h1, h2, t), psi)
    n_steps = 10
    step = build_dilation_step(h1, h2, t / n_steps)
    cur = psi.copy()
    for _ in range(n_steps):
        cur, _ = evolutionary_step(step, cur)
    assert np.abs(one_shot - cur).max() <= 1e-10


def test_black_scholes_end_to_end():
    grid = Grid(-1, 1, 16)
    pg = PGrid(-6, 8, 512, alpha_neg=10.0, left_support=-1.0)
    model = build_black_scholes(0.05, 0.2, grid, pg)
    u0 = np.sin(np.pi * grid.axis()) + 0.5 * np.cos(2 * np.pi * grid.axis())
    t = 0.7
    traj = model.evolve(model.initial_state(u0), EvolutionPlan("exact_diagonal", dt=t, t_final=t))
    got = model.recover(model.wrap(traj.final, t), PointP())
    ref = model.exact_solution(u0, t)
    assert np.linalg.norm(got - ref) / np.linalg.norm(ref) <= 1e-2


# ---------------------------------------------------------------------------
# Fokker-Planck
# ---------------------------------------------------------------------------


def _fp_pair(grid, pg, v, dv, d2v, sigma=1.0):
    cons = build_fokker_planck(v, sigma, grid, pg, form="conservation")
    heat = build_fokker_planck(v, sigma, grid, pg, form="heat_form", grad_v=[dv], lap_v=d2v)
    return cons, heat


def test_fokker_planck_zero_potential_reduces_to_heat():
    grid = Grid(-1, 1, 8)
    pg = PGrid(-4, 4, 16)
    heat_model = build_heat(None, grid, pg)
    dense_heat = sum(term.dense() for term in heat_model.h_terms())
    for form in ("conservation", "heat_form"):
        fp = build_fokker_planck(
            lambda x: 0.0 * x, 1.0, grid, pg, form=form,
            grad_v=[lambda x: 0.0 * x], lap_v=lambda x: 0.0 * x,
        )
        dense_fp = sum(term.dense() for term in fp.h_terms())
        assert np.abs(dense_fp - dense_heat).max() <= 1e-10


def test_fokker_planck_imaginary_time_potential():
    grid = Grid(-1, 1, 8)
    fp = build_fokker_planck(
        lambda x: x**2 / 2, 1.0, grid, PGrid(-4, 4, 16), form="heat_form",
        grad_v=[lambda x: x], lap_v=lambda x: np.ones_like(x),
    )
    assert np.allclose(fp.u_values, grid.axis() ** 2 / 4 - 0.5)


def test_fokker_planck_steady_state_residual():
    grid = Grid(-1, 1, 32)
    fp = build_fokker_planck(
        lambda x: 0.5 * np.cos(np.pi * x), 1.0, grid, PGrid(-4, 4, 32), form="conservation"
    )
    f_ss = fp.steady_state()
    res = np.linalg.norm(fp.conservation_generator() @ f_ss) / np.linalg.norm(f_ss)
    assert res <= 1e-8


def test_fokker_planck_forms_agree_after_change_of_variables():
    grid = Grid(-1, 1, 16)
    pg = PGrid(-14, 6, 1024, alpha_neg=10.0, left_support=-1.0)
    v = lambda x: 0.5 * np.cos(np.pi * x)
    cons, heat = _fp_pair(
        grid, pg, v,
        lambda x: -0.5 * np.pi * np.sin(np.pi * x),
        lambda x: -0.5 * np.pi**2 * np.cos(np.pi * x),
    )
    f0 = np.exp(-v(grid.axis())) + 0.3 * np.cos(np.pi * grid.axis())
    t = 0.2
    plan = EvolutionPlan("exact_diagonal", dt=t, t_final=t)
    f_cons = cons.recover(cons.wrap(cons.evolve(cons.initial_state(f0), plan).final, t), PointP())
    f_heat = heat.recover(heat.wrap(heat.evolve(heat.initial_state(f0), plan).final, t), PointP())
    assert np.linalg.norm(f_cons - f_heat) / np.linalg.norm(f_cons) <= 1e-6


def test_fokker_planck_hamiltonians_hermitian():
    grid = Grid(-1, 1, 8)
    pg = PGrid(-4, 4, 16)
    cons, heat = _fp_pair(
        grid, pg, lambda x: 0.3 * np.sin(np.pi * x),
        lambda x: 0.3 * np.pi * np.cos(np.pi * x),
        lambda x: -0.3 * np.pi**2 * np.sin(np.pi * x),
    )
    assert _hermiticity(cons.h_terms())
    assert _hermiticity(heat.h_terms())


def test_fokker_planck_overflow_guard():
    with pytest.raises(ValueError, match="overflow|rescale"):
        build_fokker_planck(lambda x: 1e4 * np.cos(np.pi * x), 0.01, Grid(-1, 1, 8), PGrid(-4, 4, 16))


def test_fokker_planck_spectral_fallback_warns():
    with pytest.warns(UserWarning, match="spectral"):
        build_fokker_planck(
            lambda x: 0.5 * np.cos(np.pi * x), 1.0, Grid(-1, 1, 16), PGrid(-4, 4, 16),
            form="heat_form",
        )


def test_fokker_planck_spectral_fallback_matches_analytic():
    grid = Grid(-1, 1, 16)
    pg = PGrid(-4, 4, 16)
    v = lambda x: 0.5 * np.cos(np.pi * x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        auto = build_fokker_planck(v, 1.0, grid, pg, form="heat_form")
    manual = build_fokker_planck(
        v, 1.0, grid, pg, form="heat_form",
        grad_v=[lambda x: -0.5 * np.pi * np.sin(np.pi * x)],
        lap_v=lambda x: -0.5 * np.pi**2 * np.cos(np.pi * x),
    )
    assert np.abs(auto.u_values - manual.u_values).max() <= 1e-10


# ---------------------------------------------------------------------------
# Boltzmann
# ---------------------------------------------------------------------------


def test_quadrature_validation():
    with pytest.raises(ValueError):
        QuadratureRule(points=np.array([[1.0], [-1.0]]), weights=np.array([0.4, 0.4]))
    with pytest.raises(ValueError):
        QuadratureRule(points=np.array([[1.0], [-1.0]]), weights=np.array([1.2, -0.2]))


def test_boltzmann_single_ordinate_is_pure_transport():
    grid = Grid(-1, 1, 16)
    pg = PGrid(-3, 5, 128, alpha_neg=10.0, left_support=-1.0)
    quad = QuadratureRule(points=np.array([[1.0]]), weights=np.array([1.0]))
    model = build_boltzmann(quad, grid, pg)
    assert np.abs(model.collision_matrix()).max() == 0.0
    f0 = 1 + 0.5 * np.cos(np.pi * grid.axis())
    t = 0.4
    plan = EvolutionPlan("trotter", dt=0.05, t_final=t)
    traj = model.evolve(model.initial_state(f0[None, :]), plan)
    got = model.recover(model.wrap(traj.final, t), PointP())[0]
    ref = exact_convection_solution(f0, grid, t)  # unit-speed translation
    assert np.linalg.norm(got - ref) / np.linalg.norm(ref) <= 1e-10


def test_boltzmann_two_point_collision_block():
    model = build_boltzmann(default_ordinates(), Grid(-1, 1, 8), PGrid(-3, 3, 32))
    c = model.collision_matrix()
    assert np.allclose(c + np.eye(2), [[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(np.sort(np.linalg.eigvalsh(c)), [-1.0, 0.0])


def test_boltzmann_weight_similarity_leaves_ordinate_diagonals_alone():
    quad = QuadratureRule(points=np.array([[1.0], [-1.0], [0.5]]), weights=np.array([0.5, 0.3, 0.2]))
    root = np.sqrt(quad.weights)
    lam = np.diag(quad.points[:, 0])
    conj = np.diag(root) @ lam @ np.diag(1.0 / root)
    assert np.array_equal(conj, lam)


def test_boltzmann_mass_conserved():
    grid = Grid(-1, 1, 16)
    pg = PGrid(-3, 5, 256, alpha_neg=10.0, left_support=-1.0)
    model = build_boltzmann(default_ordinates(), grid, pg)
    x = grid.axis()
    f0 = np.stack([1 + 0.5 * np.cos(np.pi * x), 1 + 0.2 * np.sin(np.pi * x)])
    plan = EvolutionPlan("trotter", dt=0.05, t_final=1.0, snapshot_times=(0.0, 0.5, 1.0))
    traj = model.evolve(model.initial_state(f0), plan)
    masses = [model.mass(model.recover(model.wrap(s, t), PointP())) for t, s in zip(traj.times, traj.states)]
    for m in masses[1:]:
        assert abs(m - masses[0]) <= 1e-10 * abs(masses[0])


def test_boltzmann_hamiltonian_hermitian():
    model = build_boltzmann(default_ordinates(), Grid(-1, 1, 8), PGrid(-3, 3, 16))
    assert _hermiticity(model.h_terms())


# ---------------------------------------------------------------------------
# density transport of a nonlinear flow
# ---------------------------------------------------------------------------


def test_liouville_zero_field_is_stationary():
    model = build_liouville(lambda x: 0.0 * x, Grid(-1, 1, 64), 0.3, 0.05)
    t = 1.0
    rho = dense_expm_oracle(model.system.a_mat, model.system.u0, t)
    assert np.abs(rho - model.system.u0).max() <= 1e-12
    assert model.moment(model.system.u0.real)[0] == pytest.approx(0.3, abs=1e-6)


def test_liouville_mass_conserved_along_flow():
    # the transport generator annihilates the constant functional exactly
    model = build_liouville(lambda x: -x, Grid(-1, 1, 64), 0.5, 0.05)
    m0 = model.mass(model.system.u0)
    for t in (0.3, 1.0):
        rho = dense_expm_oracle(model.system.a_mat, model.system.u0, t)
        assert abs(model.mass(rho.real) - m0) <= 1e-8 * abs(m0)


def test_liouville_moment_tracks_contracting_flow():
    grid = Grid(-1, 1, 128)
    model = build_liouville(lambda x: -x, grid, 0.5, 0.05)
    pg = PGrid(-4, 6, 512, alpha_neg=10.0, left_support=-1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sysm = model.schrodingerised(pg)
    for t, state in zip((0.5, 1.0), sysm.evolve([0.5, 1.0])):
        rho = recover(state, IntegrateP()).real
        assert model.moment(rho)[0] == pytest.approx(0.5 * np.exp(-t), abs=5e-3)


def test_liouville_support_guard():
    with pytest.raises(ValueError, match="wrap"):
        build_liouville(lambda x: -x, Grid(-1, 1, 64), 0.95, 0.05)


def test_heat_two_dimensional_end_to_end():
    # separable data decays mode by mode; the warp machinery is dimension
    # agnostic so the 2-D run must match the tensor-product exact solution
    grid = Grid(-1, 1, 8, dims=2)
    pg = PGrid(-5, 5, 256, alpha_neg=10.0, left_support=-1.0)
    model = build_heat(None, grid, pg)
    x = grid.axis()
    u0 = np.outer(np.sin(np.pi * x), np.cos(np.pi * x)).reshape(-1)
    t = 0.1
    traj = model.evolve(model.initial_state(u0), EvolutionPlan("exact_diagonal", dt=t, t_final=t))
    got = model.recover(model.wrap(traj.final, t), PointP())
    exact = np.exp(-2 * np.pi**2 * t) * u0
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) <= 1e-2
    assert np.linalg.norm(got - exact_heat_solution(u0, grid, t)) / np.linalg.norm(exact) <= 1e-2


def test_boltzmann_asymmetric_weights_conserve_mass():
    grid = Grid(-1, 1, 16)
    pg = PGrid(-3, 5, 128, alpha_neg=10.0, left_support=-1.0)
    quad = QuadratureRule(points=np.array([[1.0], [-1.0]]), weights=np.array([0.3, 0.7]))
    model = build_boltzmann(quad, grid, pg)
    x = grid.axis()
    f0 = np.stack([1 + 0.4 * np.cos(np.pi * x), 0.5 + 0.2 * np.sin(np.pi * x)])
    plan = EvolutionPlan("trotter", dt=0.1, t_final=1.0, snapshot_times=(0.0, 1.0))
    traj = model.evolve(model.initial_state(f0), plan)
    m0 = model.mass(model.recover(model.wrap(traj.states[0], 0.0), PointP()))
    m1 = model.mass(model.recover(model.wrap(traj.states[1], 1.0), PointP()))
    assert abs(m1 - m0) <= 1e-10 * abs(m0)
    assert _hermiticity(model.h_terms())
