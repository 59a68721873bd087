import numpy as np
import pytest

from proplab import (HermitianOperator, Potential, TimeDependentPotential,
                     build_adaptor, classify_spectrum, conformal_Q, diagonalize,
                     free_spectral_data, gaussian_state, laplacian, make_grid,
                     norm, semilinear_G, trajectory_linear)
from proplab.suites import (conformal_identity_residual, first_level_series,
                            gronwall_monitor, lens_identity_residual,
                            lens_positivity_value, morawetz_commutator_check,
                            morawetz_multiplier, morawetz_cancellation_check,
                            operator_identity_suite, positive_potential_suite,
                            timedep_suite, wall_trimmed)


def classified(grid, pot):
    m = laplacian(grid).matrix + np.diag(pot.v(grid.points))
    return classify_spectrum(diagonalize(HermitianOperator(m, grid, "H")))


def test_free_conformal_identity_residual_tiny():
    g = make_grid("line", 384, 20.0)
    spec = free_spectral_data(g)
    psi = gaussian_state(g, width=1.5)
    t, delta = 1.0, 3e-4
    times = np.array([t - delta, t, t + delta])
    traj = trajectory_linear(spec, psi, times)
    resid, bv = conformal_identity_residual(traj, spec, None, None, None, t, delta)
    assert bv == 0.0
    assert resid <= 1e-6


def test_conformal_identity_positive_potential():
    g = make_grid("line", 384, 20.0)
    pot = Potential.gaussian(1.0)
    spec = classified(g, pot)
    psi = gaussian_state(g, width=1.5)
    adaptor = build_adaptor(spec, conformal_Q(pot, g), 3.0)
    t, delta = 1.5, 5e-3
    traj = trajectory_linear(spec, psi, np.array([t - delta, t, t + delta]))
    resid, bv = conformal_identity_residual(traj, spec, pot, None, adaptor, t, delta)
    assert resid <= 5.0 * (delta**2 + g.h**2) + bv


def test_conformal_identity_negative_part_vanishes_for_wide_bump():
    # with V = e^{-(x/w)^2}, w > sqrt(2) L the profile 4V + 4x.grad V stays
    # nonnegative on the whole box, so the negative-part term is identically 0
    g = make_grid("line", 128, 8.0)
    pot = Potential.gaussian(1.0, width=12.0)
    f = 4.0 * pot.xdv(g.points) + 4.0 * pot.v(g.points)
    assert np.all(f >= 0)
    from proplab.adaptors import negative_part
    assert not np.any(negative_part(f))


def test_conformal_identity_residual_needs_positive_time():
    g = make_grid("line", 128, 8.0)
    spec = free_spectral_data(g)
    psi = gaussian_state(g)
    traj = trajectory_linear(spec, psi, np.array([0.5, 1.0]))
    with pytest.raises(ValueError, match="t \\+ shift > 0"):
        conformal_identity_residual(traj, spec, None, None, None, 0.0, 0.1)


def test_conformal_residual_convergence_ratio():
    # with the truncation term on the right side the residual is pure
    # O(h^2 + dt^2): halving both shrinks it by about 4
    def resid(n, delta):
        g = make_grid("line", n, 16.0)
        pot = Potential.gaussian(1.0)
        spec = classified(g, pot)
        psi = gaussian_state(g, width=1.5)
        adaptor = build_adaptor(spec, conformal_Q(pot, g), 2.0)
        t = 1.2
        traj = trajectory_linear(spec, psi, np.array([t - delta, t, t + delta]))
        r, _ = conformal_identity_residual(traj, spec, pot, None, adaptor, t, delta,
                                           include_truncation_term=True)
        return r

    r1, r2 = resid(256, 0.04), resid(513, 0.02)
    assert 3.5 <= r1 / r2 <= 4.5


def test_positive_potential_suite_gates_negative_v(line_grid):
    spec = free_spectral_data(line_grid)
    psi = gaussian_state(line_grid)
    traj = trajectory_linear(spec, psi, np.geomspace(1.0, 3.0, 10))
    with pytest.raises(ValueError, match="V >= 0"):
        positive_potential_suite(traj, Potential.gaussian(-1.0), 1.0)


def test_first_level_series_free_constant_conformal():
    # free flow keeps <C> constant, so the first-level functional is ~ sqrt(C/t);
    # the window stays inside the box-validity horizon of this small grid
    g = make_grid("line", 384, 30.0)
    spec = free_spectral_data(g)
    psi = gaussian_state(g, width=1.0)
    times = np.geomspace(1.0, 3.2, 10)
    traj = trajectory_linear(spec, psi, times)
    assert traj.validity_horizon >= times[-1]
    series = first_level_series(traj, Potential.zero(), times)
    slopes = np.diff(np.log(series.values)) / np.diff(np.log(times))
    assert np.allclose(slopes, -0.5, atol=1e-3)


def test_lens_positivity_free_and_errors(line_grid):
    spec = classify_spectrum(diagonalize(laplacian(line_grid)))
    val = lens_positivity_value(spec, Potential.zero(), 2.0)
    assert val >= -1e-8
    with pytest.raises(ValueError, match="t > 0"):
        lens_positivity_value(spec, Potential.zero(), 0.0)


def test_lens_identity_weak_residual_ratio():
    def resid(n):
        g = make_grid("line", n, 16.0)
        psi = gaussian_state(g, width=1.5)
        return lens_identity_residual(g, 1.5, psi)

    r1, r2 = resid(256), resid(513)
    assert 3.5 <= r1 / r2 <= 4.5


def test_semilinear_g_oracles():
    g_lin = semilinear_G(lambda z: 2.0 * z)
    for rho in (0.0, 0.5, 2.0):
        assert g_lin(rho) == pytest.approx(rho, abs=1e-10)  # lambda rho / 2 with lambda = 2
    g_const = semilinear_G(lambda z: 3.0)
    for rho in (0.0, 1.0, 4.0):
        assert g_const(rho) == pytest.approx(0.0, abs=1e-12)
    g_quad = semilinear_G(lambda z: z**2)
    for rho in (0.5, 1.0, 2.0):
        assert g_quad(rho) == pytest.approx(2.0 * rho**2 / 3.0, rel=1e-9)
    np.testing.assert_allclose(g_quad(np.array([0.5, 1.0])),
                               [2.0 / 3.0 * 0.25, 2.0 / 3.0], rtol=1e-9)


def test_gronwall_monitor_free_flow_decreasing():
    g = make_grid("line", 384, 30.0)
    spec = free_spectral_data(g)
    psi = gaussian_state(g, width=1.0)
    times = np.geomspace(1.0, 3.2, 10)
    traj = trajectory_linear(spec, psi, times)
    series, ok = gronwall_monitor(traj, 1.0, 0.05, times=times)
    assert ok
    assert np.all(np.diff(series.values) < 0)


def test_gronwall_sigma_zero_is_mass_plus_conformal():
    g = make_grid("line", 256, 20.0)
    spec = free_spectral_data(g)
    psi = gaussian_state(g, width=1.0)
    times = np.array([1.0, 2.0, 4.0])
    traj = trajectory_linear(spec, psi, times)
    series, _ = gronwall_monitor(traj, 0.0, 0.1, times=times)
    # sigma = 0 turns the weight term into the conserved mass
    from proplab.operators import apply_momentum
    for t, val in zip(series.times, series.values):
        u = traj.state_at(t)
        xp_u = g.points * u - 2.0 * t * apply_momentum(g, u)
        c_val = float(g.quad_weight * np.sum(np.abs(xp_u) ** 2))
        assert val == pytest.approx(c_val / t**2 + 1.0, rel=1e-9)


def test_morawetz_multiplier_guards(radial_grid):
    with pytest.raises(ValueError, match="positive"):
        morawetz_multiplier(radial_grid, -np.ones(radial_grid.n))


def test_morawetz_commutator_positivity_radial(radial_grid):
    g_samples = 1.0 / np.sqrt(1.0 + radial_grid.points**2)
    res = morawetz_commutator_check(radial_grid, g_samples)
    assert res.passed


def test_morawetz_commutator_unit_profile_reduces_to_dilation(line_grid):
    res = morawetz_commutator_check(line_grid, np.ones(line_grid.n))
    assert res.passed


def test_morawetz_commutator_sign_flip_fails(radial_grid):
    # a sign flip in the profile inverts the commutator: strongly indefinite
    g_samples = 1.0 / np.sqrt(1.0 + radial_grid.points**2)
    flipped = np.where(radial_grid.points > 10.0, 3.0 * g_samples, g_samples)
    gam = morawetz_multiplier(radial_grid, flipped)
    lap = laplacian(radial_grid)
    comm = 1j * (lap.matrix @ gam.matrix - gam.matrix @ lap.matrix)
    trimmed = wall_trimmed(comm, radial_grid)
    min_eig = float(np.linalg.eigvalsh(trimmed)[0])
    # decreasing a(r) region makes p a' p negative: detected
    assert min_eig < -1e-8 * np.linalg.norm(trimmed, 2)


def test_morawetz_cancellation_small_case():
    g = make_grid("radial3d", 200, 40.0)
    pot = Potential.gaussian(1.5, width=1.0, center=3.0)
    spec = classified(g, pot)
    g_samples = 1.0 / np.sqrt(1.0 + g.points**2)
    res, adaptor = morawetz_cancellation_check(g, spec, pot, g_samples, horizon=4.0)
    assert res.passed
    assert adaptor.residual_weighted >= 0.0


def test_operator_identity_suite_small():
    report = operator_identity_suite(256, 16.0, Potential.gaussian(1.0),
                                     state_width=1.5, dt_ref=0.01, abs_cap=5e-3)
    assert report.passed, report.render()


def test_positive_potential_constant_stable_under_refinement():
    # the measured constant of the uniform bound moves by < 20% when the
    # grid is refined by 1.5x
    def constant(n):
        g = make_grid("radial3d", n, 60.0)
        pot = Potential.gaussian(2.0)
        spec = classified(g, pot)
        psi = gaussian_state(g, width=1.0)
        times = np.geomspace(1.0, 4.0, 12)
        traj = trajectory_linear(spec, psi, times)
        from proplab.suites import conformal_energy_series
        series = conformal_energy_series(traj, pot, times)
        return series.values.max() / norm(g, psi, "Lnorm") ** 2

    c1, c2 = constant(256), constant(385)
    assert abs(c2 - c1) / c1 <= 0.20


def test_prob_scales_relate_on_free_flow():
    # on the free flow <C> is constant, so the three scales are related by
    # explicit powers of t
    g = make_grid("line", 256, 20.0)
    spec = free_spectral_data(g)
    psi = gaussian_state(g, width=1.2)
    times = np.array([1.0, 2.0, 4.0])
    traj = trajectory_linear(spec, psi, times)
    from proplab.observables import observable_series
    from proplab.suites import conformal_prob
    s1 = observable_series(traj, conformal_prob(g, None, None, None, "inverse_t"), times)
    s2 = observable_series(traj, conformal_prob(g, None, None, None, "iterated"), times)
    s3 = observable_series(traj, conformal_prob(g, None, None, None, "inverse_t2"), times)
    np.testing.assert_allclose(s2.values, s1.values * times, rtol=1e-9)
    np.testing.assert_allclose(s3.values, s1.values / times, rtol=1e-9)


def test_conformal_identity_with_shifted_time():
    # the (t+1)^{-1} scaling admits evaluation at small t, including t < 1
    g = make_grid("line", 256, 16.0)
    spec = free_spectral_data(g)
    psi = gaussian_state(g, width=1.5)
    t, delta = 0.3, 1e-3
    traj = trajectory_linear(spec, psi, np.array([t - delta, t, t + delta]))
    resid, _ = conformal_identity_residual(traj, spec, None, None, None, t, delta,
                                           shift=1.0)
    assert resid <= 1e-5


def test_timedep_suite_gaussian_profile_perturbation():
    # W(x,t) = (delta/(1+t)) e^{-x^2}: a separable perturbation whose time
    # derivative decays one power faster than the envelope requires
    g = make_grid("radial3d", 256, 60.0)
    pot = Potential.gaussian(0.5)
    spec = classified(g, pot)
    w = TimeDependentPotential.self_similar(0.05, 2.0, 1.0, profile="gaussian")
    psi = gaussian_state(g, width=1.0)
    report = timedep_suite(g, spec, pot, w, psi, t_end=5.0, dt=5e-3, sample_count=12)
    assert report.passed, report.render()


def test_timedep_suite_zero_w_reduces():
    # delta = 0 switches W off: the smooth energy expectation is exactly
    # conserved and the integration-by-parts identity reads 0 = 0
    g = make_grid("radial3d", 256, 60.0)
    pot = Potential.gaussian(0.5)
    spec = classified(g, pot)
    w0 = TimeDependentPotential.self_similar(0.0, 2.0, 0.5)
    psi = gaussian_state(g, width=1.0)
    report = timedep_suite(g, spec, pot, w0, psi, t_end=4.0, dt=0.01, sample_count=10)
    assert report.passed, report.render()
    # constant up to the O(dt^2) drift of the splitting itself
    f_series = report.series["asymptotic_energy"]
    assert np.abs(np.diff(f_series.values)).max() <= 1e-6
    ibp = [c for c in report.checks if "integration" in c.name][0]
    assert ibp.measured <= 1e-9
