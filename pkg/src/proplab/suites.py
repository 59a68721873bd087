"""Verification suites for the conformal, dilation and Morawetz estimates.

Each suite evaluates one cluster of claims along a computed flow and returns
an EstimateReport whose checks carry the measured value, the bound and the
verdict.  Inequalities stated up to an unknowable constant are
operationalized as: the measured ratio stays below the scenario's declared
cap and shows no growth trend (fitted slope <= 0.05) on the validity window.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.integrate
import scipy.optimize

from .adaptors import (AdaptorOperator, QSelection, build_adaptor,
                       commutator_remainder, negative_part, positive_part)
from .evolution import Trajectory, _SplitStepper, _run_split, kinetic_step
from .grids import Grid, norm, weight_vector
from .observables import (CheckResult, EstimateReport, ObservableSeries,
                          PropagationObservable, bounded_check,
                          expectation_value, fit_decay_rate, log_growth_fit,
                          trend_slope)
from .operators import (HermitianOperator, Potential, TimeDependentPotential,
                        apply_laplacian, apply_momentum, conformal_factor_dt,
                        conformal_factor_operator, laplacian, momentum,
                        position)
from .spectral import SpectralData, resolution_energy_limit

TREND_CAP = 0.05


# ---------------------------------------------------------------------------
# propagation observables at the three scales of the conformal identity


def conformal_prob(grid: Grid, potential: Potential | None,
                   w_t: TimeDependentPotential | None,
                   adaptor_matrix, scale: str = "inverse_t",
                   shift: float = 0.0, corrupt_db_dt: bool = False) -> PropagationObservable:
    """B(t) at one of the three scales used by the conformal estimates:

    * ``inverse_t``:  C(t)/t + 4t(V+W) + B
    * ``iterated``:   C(t) + t^2 V + t B
    * ``inverse_t2``: C(t)/t^2 + 4(V+W) + B/t

    with ts = t + shift replacing t when the initial time is moved to zero.
    ``corrupt_db_dt`` flips the sign of the analytic derivative; it exists
    for negative tests and must make the Heisenberg consistency fail.
    """
    x = grid.points
    v = potential.v(x) if potential is not None else np.zeros(grid.n)
    b = np.zeros((grid.n, grid.n), dtype=complex) if adaptor_matrix is None else adaptor_matrix

    def vw(t):
        total = v.copy()
        if w_t is not None:
            total = total + w_t.w(x, t)
        return total

    def builder(t):
        ts = t + shift
        if ts <= 0:
            raise ValueError("the scaled observable needs t + shift > 0")
        c = conformal_factor_operator(grid, t).matrix
        if scale == "inverse_t":
            m = c / ts + 4.0 * ts * np.diag(vw(t)) + b
        elif scale == "iterated":
            m = c + ts**2 * np.diag(v) + ts * b
        elif scale == "inverse_t2":
            m = c / ts**2 + 4.0 * np.diag(vw(t)) + b / ts
        else:
            raise ValueError(f"unknown scale {scale!r}")
        return HermitianOperator(m, grid, f"conformal[{scale}]({t:g})")

    def db_dt(t):
        ts = t + shift
        c = conformal_factor_operator(grid, t).matrix
        cdot = conformal_factor_dt(grid, t).matrix
        dtw = w_t.dt_w(x, t) if w_t is not None else 0.0
        if scale == "inverse_t":
            m = cdot / ts - c / ts**2 + 4.0 * np.diag(vw(t)) + 4.0 * ts * np.diag(np.broadcast_to(dtw, (grid.n,)))
        elif scale == "iterated":
            m = cdot + 2.0 * ts * np.diag(v) + b
        elif scale == "inverse_t2":
            m = cdot / ts**2 - 2.0 * c / ts**3 + 4.0 * np.diag(np.broadcast_to(dtw, (grid.n,))) - b / ts**2
        sign = -1.0 if corrupt_db_dt else 1.0
        return HermitianOperator(sign * m, grid, f"d/dt conformal[{scale}]")

    positive_factor = None
    free_case = (potential is None or potential.is_zero) and w_t is None
    if free_case and adaptor_matrix is None and scale == "inverse_t":
        # free flow: D_H (C/ts) = -(C factor)^* (C factor) exactly, with the
        # factor (x - 2tp)/ts and no remainder
        xm = position(grid).matrix
        pm = momentum(grid).matrix

        def positive_factor(t):
            return (xm - 2.0 * t * pm) / (t + shift)

    return PropagationObservable(label=f"conformal[{scale}]",
                                 builder=builder, db_dt=db_dt,
                                 positive_factor=positive_factor)


def free_conformal_prob(grid: Grid) -> PropagationObservable:
    """The unscaled conformal factor C(t), conserved by the free flow."""
    return PropagationObservable(
        label="conformal_factor",
        builder=lambda t: conformal_factor_operator(grid, t),
        db_dt=lambda t: conformal_factor_dt(grid, t))


# ---------------------------------------------------------------------------
# operator identities (weak form, with h-refinement ratios)


def _apply_dilation(grid: Grid, state):
    x = grid.points
    return 0.5 * (x * apply_momentum(grid, state) + apply_momentum(grid, x * state))


def dilation_identity_residual(grid: Grid, potential: Potential | None, state) -> float:
    """Weak residual of i[H, A] = 2(-lap) - x.grad V on one smooth state.

    <phi, i[H,A] phi> = -2 Im <H phi, A phi>, all matrix-free.  The gap is
    the O(h^2) mismatch between the central-difference momentum squared and
    the stencil Laplacian, plus the tridiagonal-versus-diagonal gap of i[V,A].
    """
    phi = np.asarray(state, dtype=complex)
    v = potential.v(grid.points) if potential is not None else 0.0
    h_phi = apply_laplacian(grid, phi) + v * phi
    a_phi = _apply_dilation(grid, phi)
    lhs = -2.0 * float(np.imag(grid.inner(h_phi, a_phi)))
    xdv = potential.xdv(grid.points) if potential is not None else 0.0
    rhs = 2.0 * float(np.real(grid.inner(phi, apply_laplacian(grid, phi)))) \
        - float(np.real(grid.inner(phi, xdv * phi)))
    return abs(lhs - rhs)


def free_conformal_residual(grid: Grid, state, t: float, dt_offset: float) -> float:
    """Residual of d/dt <C(t)/t> = -<C(t)>/t^2 along the exact free flow.

    The free flow conserves <C(t)> on the lattice (wall rows aside), so the
    residual isolates the centered-difference O(dt^2) error.
    """
    if t <= 0:
        raise ValueError("needs t > 0")
    x = grid.points

    def c_value(s):
        u = kinetic_step(grid, np.asarray(state, dtype=complex), s)
        xp_u = x * u - 2.0 * s * apply_momentum(grid, u)
        return float(grid.quad_weight * np.sum(np.abs(xp_u) ** 2))

    fwd = c_value(t + dt_offset) / (t + dt_offset)
    bwd = c_value(t - dt_offset) / (t - dt_offset)
    lhs = (fwd - bwd) / (2.0 * dt_offset)
    rhs = -c_value(t) / t**2
    return abs(lhs - rhs)


def operator_identity_suite(n: int, extent: float, potential: Potential,
                            state_width: float = 2.5, t_ref: float = 1.0,
                            dt_ref: float = 4e-3, abs_cap: float = 1e-4,
                            ratio_window=(3.5, 4.5)) -> EstimateReport:
    """Weak-form dilation-commutator and free conformal-conservation residuals
    with their refinement ratios (h and dt halved together)."""
    from .evolution import gaussian_state
    from .grids import make_grid

    report = EstimateReport("operator identities (weak form)")
    resids_eq4, resids_conf = [], []
    for level, (n_lvl, dt_lvl) in enumerate([(n, dt_ref), (2 * n + 1, dt_ref / 2.0)]):
        grid = make_grid("line", n_lvl, extent)
        phi = gaussian_state(grid, width=state_width)
        resids_eq4.append(dilation_identity_residual(grid, potential, phi))
        resids_conf.append(free_conformal_residual(grid, phi, t_ref, dt_lvl))

    report.add("dilation commutator residual", resids_eq4[0], abs_cap,
               resids_eq4[0] <= abs_cap)
    ratio4 = resids_eq4[0] / resids_eq4[1]
    report.add("dilation commutator h-halving ratio", ratio4, ratio_window[1],
               ratio_window[0] <= ratio4 <= ratio_window[1], note=f"window {ratio_window}")
    report.add("free conformal conservation residual", resids_conf[0], abs_cap,
               resids_conf[0] <= abs_cap)
    ratio_c = resids_conf[0] / resids_conf[1]
    report.add("free conformal refinement ratio", ratio_c, ratio_window[1],
               ratio_window[0] <= ratio_c <= ratio_window[1], note=f"window {ratio_window}")
    return report


# ---------------------------------------------------------------------------
# adapted conformal identity


def conformal_rhs_matrix(grid: Grid, potential: Potential | None,
                         w_t: TimeDependentPotential | None,
                         adaptor: AdaptorOperator | None, t: float,
                         shift: float = 0.0):
    """Right side of the adapted conformal identity at the 1/t scale:
    -C/ts^2 + [4 x.grad V + 4V]_- + (4 x.grad W + 4W + 4 ts dW/dt) + i[W, B]."""
    ts = t + shift
    x = grid.points
    m = -conformal_factor_operator(grid, t).matrix / ts**2
    if potential is not None:
        m = m + np.diag(negative_part(4.0 * potential.xdv(x) + 4.0 * potential.v(x))).astype(complex)
    if w_t is not None:
        w_term = 4.0 * w_t.xdw(x, t) + 4.0 * w_t.w(x, t) + 4.0 * ts * w_t.dt_w(x, t)
        m = m + np.diag(w_term).astype(complex)
        if adaptor is not None:
            wd = np.diag(w_t.w(x, t)).astype(complex)
            m = m + 1j * (wd @ adaptor.matrix - adaptor.matrix @ wd)
    return m


def conformal_identity_residual(traj: Trajectory, spec: SpectralData,
                                potential: Potential | None,
                                w_t: TimeDependentPotential | None,
                                adaptor: AdaptorOperator | None,
                                t: float, dt_offset: float,
                                shift: float = 0.0,
                                include_truncation_term: bool = False):
    """|d/dt <B(t)> - <RHS(t)>| for the adapted conformal identity.

    The derivative is a centered difference of the quadratic form, so the
    residual is O(dt_offset^2 + h^2) plus the adaptor truncation term, whose
    exact expectation is returned alongside for the tolerance budget.  With
    ``include_truncation_term`` the remainder matrix joins the right side,
    which isolates the pure O(dt^2 + h^2) behavior for convergence checks.
    Needs t > -shift (the 1/t scale) and samples at t, t +- dt_offset.
    """
    if t + shift <= 0:
        raise ValueError("conformal identity is evaluated at t + shift > 0")
    grid = traj.grid
    b_matrix = adaptor.matrix if adaptor is not None else None
    prob = conformal_prob(grid, potential, w_t, b_matrix, "inverse_t", shift=shift)
    fwd = expectation_value(grid, prob.builder(t + dt_offset).matrix, traj.state_at(t + dt_offset))
    bwd = expectation_value(grid, prob.builder(t - dt_offset).matrix, traj.state_at(t - dt_offset))
    lhs = (fwd - bwd) / (2.0 * dt_offset)
    state = traj.state_at(t)
    rhs_matrix = conformal_rhs_matrix(grid, potential, w_t, adaptor, t, shift)
    bv_term = 0.0
    if adaptor is not None and adaptor.horizon > 0:
        rem = commutator_remainder(spec, adaptor)
        if include_truncation_term:
            rhs_matrix = rhs_matrix - rem
        else:
            bv_term = abs(expectation_value(grid, rem, state))
    rhs = expectation_value(grid, rhs_matrix, state)
    return abs(lhs - rhs), bv_term


# ---------------------------------------------------------------------------
# positive potentials


def conformal_energy_series(traj: Trajectory, potential: Potential, times) -> ObservableSeries:
    """S(t) = ||(x - 2pt) psi||^2 + t^2 <V>, the quantity the sharp
    propagation estimate bounds by the initial L-norm squared."""
    grid = traj.grid
    x = grid.points
    v = potential.v(x)
    vals = []
    for t in times:
        u = traj.state_at(t)
        xp_u = x * u - 2.0 * t * apply_momentum(grid, u)
        c_val = float(grid.quad_weight * np.sum(np.abs(xp_u) ** 2))
        v_val = float(np.real(grid.inner(u, v * u)))
        vals.append(c_val + t**2 * v_val)
    return ObservableSeries(np.asarray(times, dtype=float), np.asarray(vals),
                            "conformal+potential energy")


def first_level_series(traj: Trajectory, potential: Potential, times) -> ObservableSeries:
    """sqrt(<C>/t + 4t<V>), the square root of the level-one propagation
    functional; it tracks the 1/sqrt(t) rate the first pass certifies for
    the L^6 norm before the estimate is iterated."""
    grid = traj.grid
    x = grid.points
    v = potential.v(x)
    vals = []
    for t in times:
        u = traj.state_at(t)
        xp_u = x * u - 2.0 * t * apply_momentum(grid, u)
        c_val = float(grid.quad_weight * np.sum(np.abs(xp_u) ** 2))
        v_val = float(np.real(grid.inner(u, v * u)))
        vals.append(math.sqrt(max(c_val / t + 4.0 * t * v_val, 0.0)))
    return ObservableSeries(np.asarray(times, dtype=float), np.asarray(vals), "first-level functional")


def lp_norm_series(traj: Trajectory, p: float, times) -> ObservableSeries:
    vals = [norm(traj.grid, traj.state_at(t), "Lp", p=p) for t in times]
    return ObservableSeries(np.asarray(times, dtype=float), np.asarray(vals), f"L{p} norm")


def positive_potential_suite(traj: Trajectory, potential: Potential,
                             lnorm0: float, fit_window=None,
                             energy_cap_ratio: float = 10.0,
                             l6_slope_window=(-1.25, -0.80),
                             first_level_window=(-0.70, -0.35)) -> EstimateReport:
    """Sharp propagation estimate for V >= 0, W = 0, and its decay corollaries.

    (a) sup_t [ ||(x-2pt)psi||^2 + t^2 <V> ] <= C Lnorm(psi(0))^2, C reported,
        with no growth trend;
    (b) fitted L^6 slope inside l6_slope_window (the iterated rate);
    (c) fitted slope of the first-level functional inside first_level_window.
    """
    grid = traj.grid
    if not potential.is_nonnegative(grid.points):
        raise ValueError("positive-potential suite is gated to V >= 0")
    report = EstimateReport("positive potentials (sharp propagation + decay)")
    times = traj.valid_window(*(fit_window or (None, None)))
    if traj.validity_horizon < traj.times[-1]:
        report.warnings.append(
            f"validity window ends at t={traj.validity_horizon:g} (boundary mass)")

    energy = conformal_energy_series(traj, potential, times)
    ratio = ObservableSeries(energy.times, energy.values / lnorm0**2, "energy/Lnorm^2")
    report.checks.append(bounded_check("uniform conformal+potential bound", ratio,
                                       cap=energy_cap_ratio, trend_cap=TREND_CAP))

    l6 = lp_norm_series(traj, 6.0, times)
    slope6, width6 = fit_decay_rate(l6)
    report.rates["L6"] = slope6
    report.add("L6 decay slope", slope6, l6_slope_window[1],
               l6_slope_window[0] <= slope6 <= l6_slope_window[1],
               note=f"window {l6_slope_window}, width {width6:.3f}")

    f1 = first_level_series(traj, potential, times)
    slope1, width1 = fit_decay_rate(f1)
    report.rates["first_level"] = slope1
    report.add("first-level decay slope", slope1, first_level_window[1],
               first_level_window[0] <= slope1 <= first_level_window[1],
               note=f"window {first_level_window}, width {width1:.3f}")
    return report


# ---------------------------------------------------------------------------
# general time-independent potentials


def iterated_bound_series(traj: Trajectory, potential: Potential, times) -> ObservableSeries:
    """<psi(t), t^2 [(-x.grad V)]_+ psi(t)>, the quantity that must stay
    of order one once the estimate is iterated."""
    grid = traj.grid
    prof = positive_part(-potential.xdv(grid.points))
    vals = []
    for t in times:
        u = traj.state_at(t)
        vals.append(t**2 * float(np.real(grid.inner(u, prof * u))))
    return ObservableSeries(np.asarray(times, dtype=float), np.asarray(vals),
                            "t^2 [(-x.grad V)]_+ expectation")


def lens_positivity_value(spec: SpectralData, potential: Potential, t: float,
                          e_max: float | None = None) -> float:
    """Smallest eigenvalue of the continuum compression of 4Vt + C(t)/t.

    The lens conjugation turns C(t)/t into 4t p^2, so on the continuum
    subspace the combination is 4t H up to O(1/t) mixing through the bound
    states; boundedness from below, uniformly in t, is the claim.  The band
    limit strips lattice modes whose discrete momentum misrepresents their
    energy.
    """
    if t <= 0:
        raise ValueError("lens positivity needs t > 0")
    grid = spec.grid
    if e_max is None:
        e_max = resolution_energy_limit(grid)
    cols, _ = spec.continuum_basis(e_max=e_max)
    x = position(grid).matrix
    p = momentum(grid).matrix
    xp = x - 2.0 * t * p
    v = potential.v(grid.points)
    m_cols = (v[:, None] * cols) * (4.0 * t) + (xp.conj().T @ (xp @ cols)) / t
    m = cols.conj().T @ m_cols
    m = 0.5 * (m + m.conj().T)
    return float(np.linalg.eigvalsh(m)[0])


def lens_identity_residual(grid: Grid, t: float, state) -> float:
    """Weak residual of C(t)/t = U_t (4t p^2) U_t^* on a smooth state,
    U_t = diag(e^{i x^2 / 4t}); O(h^2) on resolved states."""
    if t <= 0:
        raise ValueError("lens identity needs t > 0")
    x = grid.points
    u_phase = np.exp(1j * x**2 / (4.0 * t))
    s = np.asarray(state, dtype=complex)
    xp_s = x * s - 2.0 * t * apply_momentum(grid, s)
    lhs = float(grid.quad_weight * np.sum(np.abs(xp_s) ** 2)) / t
    chi = u_phase.conj() * s
    p_chi = apply_momentum(grid, chi)
    rhs = 4.0 * t * float(grid.quad_weight * np.sum(np.abs(p_chi) ** 2))
    return abs(lhs - rhs)


def general_potential_suite(spec: SpectralData, lap: HermitianOperator,
                            potential: Potential, traj: Trajectory,
                            lens_times, iterated_cap: float,
                            e_max: float | None = None) -> EstimateReport:
    """Conformal estimate machinery for potentials with negative parts:
    genericity margin, lens positivity uniform in t, iterated boundedness."""
    from .spectral import genericity_margin

    report = EstimateReport("general time-independent potentials")
    delta = genericity_margin(spec, lap)
    report.rates["delta_star"] = delta
    report.add("genericity margin delta* > 0", delta, 0.0, delta > 0.0)

    lens_times = np.asarray(lens_times, dtype=float)
    vals = np.array([lens_positivity_value(spec, potential, t, e_max=e_max) for t in lens_times])
    c_neg = np.maximum(0.0, -vals)
    scale = max(float(np.abs(vals).max()), 1.0)
    early = c_neg[: max(1, len(c_neg) // 2)]
    floor = max(float(early.max()), 1e-8 * scale)
    spread_ok = float(c_neg.max()) <= 2.0 * floor
    report.add("lens lower bound uniform in t", float(c_neg.max()), 2.0 * floor,
               spread_ok, note=f"min eig range [{vals.min():.3g}, {vals.max():.3g}]")

    times = traj.valid_window()
    iterated = iterated_bound_series(traj, potential, times)
    report.checks.append(bounded_check("iterated t^2 [(-x.grad V)]_+ bound",
                                       iterated, cap=iterated_cap, trend_cap=TREND_CAP))
    return report


# ---------------------------------------------------------------------------
# semilinear bookkeeping


def semilinear_G(F):
    """G(rho) = F(rho) - (1/rho) int_0^rho F(z) dz, with G(0) = 0.

    This is the perfect-derivative profile of a repulsive nonlinearity
    F(|psi|^2): the time derivative of <F> reorganizes into d/dt <G>.
    """

    def g(rho):
        rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.empty_like(rho_arr)
        for i, r in enumerate(rho_arr):
            if r == 0.0:
                out[i] = 0.0
                continue
            integral, _ = scipy.integrate.quad(F, 0.0, r)
            out[i] = F(r) - integral / r
        return out if np.ndim(rho) else float(out[0])

    return g


# ---------------------------------------------------------------------------
# time-dependent potentials


def _bump(center: float, halfwidth: float):
    def f(e):
        s = (np.asarray(e, dtype=float) - center) / halfwidth
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out
    return f


def timedep_suite(grid: Grid, spec: SpectralData, potential: Potential | None,
                  w_t: TimeDependentPotential, psi0,
                  t_end: float, dt: float, adaptor: AdaptorOperator | None = None,
                  disp_cap_ratio: float = 10.0, h1_cap_ratio: float = 4.0,
                  ibp_tol: float = 1e-4, expect_log_growth: bool = False,
                  sample_count: int = 16) -> EstimateReport:
    """Dispersive estimates under a time-dependent perturbation W(x, t).

    Runs its own Strang evolution from t=0, accumulating on [1, t_end]:
    (a) the dispersive integral int [ ||psi||_L6^2 + ||(x-2pt)psi/t||^2 ] dt/t
        against the L-norm at t=1 (bounded, or log-growing when the
        smallness constant is order one);
    (b) boundedness of the H^1 norm;
    (c) Cauchy decrease of <psi(t), f(H) psi(t)> for a smooth compactly
        supported f (asymptotic energy);
    (d) the time integration-by-parts identity
        int <4 dW/dt> = [<4W>] - int <4 (p.grad W + grad W.p)>.
    """
    x = grid.points
    report = EstimateReport("time-dependent potentials" + (" (log-growth regime)" if expect_log_growth else ""))

    stepper = _SplitStepper(grid, potential, w_t=w_t)
    u1, _ = _run_split(stepper, psi0, 0.0, 1.0, dt)
    lnorm1 = norm(grid, u1, "Lnorm")

    sample_ts = np.geomspace(1.0, t_end, sample_count)
    acc = {"disp": 0.0, "dtw": 0.0, "pgrad": 0.0, "t_prev": None, "prev": None}
    disp_partial, h1_series, f_series, m_series, sampled_ts = [], [], [], [], []
    f_of_h = _bump(center=1.0, halfwidth=1.0)
    f_diag = f_of_h(spec.eigenvalues)
    w2sig = weight_vector(grid, 2.0).samples  # sigma = 1 weight squared
    next_sample = 0

    def integrand(t, u):
        l6 = norm(grid, u, "Lp", p=6.0)
        xp_u = x * u - 2.0 * t * apply_momentum(grid, u)
        c_val = float(grid.quad_weight * np.sum(np.abs(xp_u) ** 2))
        disp = (l6**2 + c_val / t**2) / t
        dtw_val = 4.0 * float(np.real(grid.inner(u, w_t.dt_w(x, t) * u)))
        dw = w_t.dw(x, t)
        pu = apply_momentum(grid, u)
        pgrad = 4.0 * float(np.real(grid.inner(pu, dw * u) + grid.inner(u, dw * pu)))
        return disp, dtw_val, pgrad, c_val

    def observer(t, u):
        nonlocal next_sample
        if t < 1.0 - 1e-12:
            return
        vals = integrand(t, u)
        if acc["prev"] is not None:
            h = t - acc["t_prev"]
            acc["disp"] += 0.5 * h * (acc["prev"][0] + vals[0])
            acc["dtw"] += 0.5 * h * (acc["prev"][1] + vals[1])
            acc["pgrad"] += 0.5 * h * (acc["prev"][2] + vals[2])
        acc["prev"], acc["t_prev"] = vals, t
        if next_sample < len(sample_ts) and t >= sample_ts[next_sample] - 1e-9:
            sampled_ts.append(t)
            disp_partial.append(acc["disp"])
            h1_series.append(norm(grid, u, "H1"))
            coeff = spec.eigenvectors.conj().T @ u
            f_series.append(float(np.sum(f_diag * np.abs(coeff) ** 2) * grid.quad_weight))
            m_series.append(vals[3] / t**2 + float(np.real(grid.inner(u, w2sig * u))))
            next_sample += 1

    def boundary_terms(u, t):
        return 4.0 * float(np.real(grid.inner(u, w_t.w(x, t) * u)))

    w1_exp = boundary_terms(u1, 1.0)
    uT, tT = _run_split(stepper, u1, 1.0, t_end, dt, observer=observer)
    wT_exp = boundary_terms(uT, tT)

    ts_arr = np.asarray(sampled_ts)
    disp_arr = np.asarray(disp_partial)
    disp_series = ObservableSeries(ts_arr, np.maximum(disp_arr, 1e-300), "dispersive integral")

    if not expect_log_growth:
        ratio = ObservableSeries(ts_arr, disp_series.values / lnorm1**2, "dispersive/Lnorm^2")
        # convergence certificate: the per-decade increment dI/dlog t must die
        # (a bounded integral has derivative decaying faster than 1/t)
        incs = np.diff(disp_arr) / np.diff(np.log(ts_arr))
        deriv = ObservableSeries(ts_arr[1:], np.maximum(incs, 1e-300), "dI/dlogt")
        dslope = trend_slope(deriv)
        report.add("dispersive integral bounded", float(ratio.values.max()), disp_cap_ratio,
                   ratio.values.max() <= disp_cap_ratio and dslope <= -0.5,
                   note=f"increment decay slope {dslope:+.3f}")
    else:
        alpha, beta = log_growth_fit(disp_series)
        power_slope = trend_slope(disp_series.restricted(ts_arr[len(ts_arr) // 2], ts_arr[-1]))
        report.rates["log_coefficient"] = beta
        report.add("log-growth envelope", power_slope, 0.1,
                   math.isfinite(beta) and power_slope <= 0.1,
                   note=f"value ~ {alpha:.3g} + {beta:.3g} log t")

    h1 = ObservableSeries(ts_arr, np.asarray(h1_series), "H1 norm")
    report.checks.append(bounded_check("H1 norm bounded", ObservableSeries(
        ts_arr, h1.values / lnorm1, "H1/Lnorm"), cap=h1_cap_ratio, trend_cap=TREND_CAP))

    f_arr = np.asarray(f_series)
    incs = np.abs(np.diff(f_arr))
    half = max(1, len(incs) // 2)
    early_inc, late_inc = float(incs[:half].max()), float(incs[half:].max())
    report.add("asymptotic energy Cauchy decrease", late_inc, early_inc,
               late_inc <= early_inc + 1e-12,
               note=f"increments {early_inc:.3g} -> {late_inc:.3g}")

    # the identity's discretization share (momentum form vs the stencil the
    # flow actually uses) scales with h^2 times the magnitude of the terms
    ibp_gap = abs(acc["dtw"] - (wT_exp - w1_exp - acc["pgrad"]))
    ibp_scale = abs(acc["dtw"]) + abs(wT_exp - w1_exp) + abs(acc["pgrad"])
    ibp_bound = max(ibp_tol, grid.h**2 * ibp_scale)
    report.add("integration by parts over time", ibp_gap, ibp_bound, ibp_gap <= ibp_bound)

    report.rates["disp_integral"] = float(disp_arr[-1])
    report.series = {
        "dispersive_integral": disp_series,
        "h1_norm": h1,
        "asymptotic_energy": ObservableSeries(ts_arr, f_arr, "smooth energy expectation"),
        "gronwall_monitor": ObservableSeries(ts_arr, np.asarray(m_series), "gronwall monitor"),
    }
    return report


def gronwall_monitor(traj: Trajectory, sigma: float, d_const: float,
                     times=None) -> tuple[ObservableSeries, bool]:
    """M(s) = <psi(s), [ |x-2ps|^2/s^2 + <x>^{-2 sigma} ] psi(s)> and the flag
    M(t) <= M(t0) e^{d (t - t0)} for the scenario's declared d."""
    grid = traj.grid
    x = grid.points
    w2 = weight_vector(grid, 2.0 * sigma).samples
    ts = traj.valid_window() if times is None else np.asarray(times, dtype=float)
    ts = ts[ts > 0]
    vals = []
    for t in ts:
        u = traj.state_at(t)
        xp_u = x * u - 2.0 * t * apply_momentum(grid, u)
        c_val = float(grid.quad_weight * np.sum(np.abs(xp_u) ** 2))
        vals.append(c_val / t**2 + float(np.real(grid.inner(u, w2 * u))))
    series = ObservableSeries(ts, np.asarray(vals), "gronwall monitor")
    envelope = series.values[0] * np.exp(d_const * (ts - ts[0]))
    return series, bool(np.all(series.values <= envelope + 1e-12))


# ---------------------------------------------------------------------------
# adapted Morawetz estimate


def morawetz_multiplier(grid: Grid, g_samples) -> HermitianOperator:
    """gamma = G x p + p x G with G = diag g(r); Hermitian by symmetry."""
    g_samples = np.asarray(g_samples, dtype=float)
    if np.any(g_samples <= 0):
        raise ValueError("the Morawetz profile g must be positive")
    gx = np.diag(g_samples * grid.points).astype(complex)
    p = momentum(grid).matrix
    return HermitianOperator(gx @ p + p @ gx, grid, "gamma")


def wall_trimmed(matrix, grid: Grid):
    """Compression dropping the outermost grid point at each artificial wall.

    The Dirichlet wall carries the outgoing-flux term of the virial identity
    (corner entries of size 2 a(wall)/h^2); the zero-wall-flux subspace is
    where the continuum positivity statement lives.  The r=0 end of a radial
    grid is a physical node and keeps its row.
    """
    if grid.kind == "line":
        return matrix[1:-1, 1:-1]
    return matrix[:-1, :-1]


def morawetz_commutator_check(grid: Grid, g_samples, rtol: float = 1e-8) -> CheckResult:
    """min eig of the wall-interior compression of i[-lap, gamma] >= -rtol ||.||."""
    gam = morawetz_multiplier(grid, g_samples)
    lap = laplacian(grid)
    comm = 1j * (lap.matrix @ gam.matrix - gam.matrix @ lap.matrix)
    trimmed = wall_trimmed(comm, grid)
    scale = float(np.linalg.norm(trimmed, 2))
    min_eig = float(np.linalg.eigvalsh(trimmed)[0])
    return CheckResult("kinetic Morawetz commutator positivity", min_eig,
                       -rtol * scale, min_eig >= -rtol * scale,
                       note=f"scale {scale:.3g}")


def morawetz_cancellation_check(grid: Grid, spec: SpectralData, potential: Potential,
                                g_samples, horizon: float, sigma: float = 1.0) -> tuple[CheckResult, AdaptorOperator]:
    """Adaptor cancellation of the bad-sign potential commutator:
    [i[V, gamma]]_- + i[H, B_gamma] vanishes up to the truncation remainder,
    where B_gamma is built from Q = -[i[V, gamma]]_-."""
    x = grid.points
    profile = negative_part(-2.0 * g_samples * potential.xdv(x))
    q = QSelection("custom", -profile, provenance="-[i[V,gamma]]_- profile")
    adaptor = build_adaptor(spec, q, horizon, sigma=sigma)
    h_matrix = laplacian(grid).matrix + np.diag(potential.v(x)).astype(complex)
    comm = 1j * (h_matrix @ adaptor.matrix - adaptor.matrix @ h_matrix)
    total = np.diag(profile).astype(complex) + comm
    w = weight_vector(grid, sigma).samples
    measured = float(np.linalg.norm((w[:, None] * total) * w[None, :], 2))
    bound = adaptor.residual_weighted + 1e-8 * max(1.0, float(np.abs(profile).max()))
    return CheckResult("adaptor cancellation of [i[V,gamma]]_-", measured, bound,
                       measured <= bound, note=f"truncation residual {adaptor.residual_weighted:.3g}"), adaptor


def weighted_gradient_sq(grid: Grid, state, weight_samples_mid) -> float:
    """Midpoint-rule weighted gradient integral; on radial grids the state is
    converted to psi = u/r before differencing."""
    u = np.asarray(state, dtype=complex)
    if grid.kind == "line":
        psi = u
        r2 = np.ones(grid.n - 1)
        meas = grid.h
    else:
        psi = u / grid.points
        mid = 0.5 * (grid.points[1:] + grid.points[:-1])
        r2 = mid**2
        meas = 4.0 * math.pi * grid.h
    d = np.diff(psi) / grid.h
    return float(meas * np.sum(weight_samples_mid**2 * r2 * np.abs(d) ** 2))


def h_half_norm_sq(grid: Grid, state) -> float:
    """<u, (1 + (-lap))^{1/2} u> through the sine-transform calculus."""
    from scipy.fft import dst

    from .spectral import free_laplacian_eigenvalues

    c = dst(np.asarray(state, dtype=complex), type=1, norm="ortho")
    lam = free_laplacian_eigenvalues(grid)
    return float(grid.quad_weight * np.sum(np.sqrt(1.0 + lam) * np.abs(c) ** 2))


def smoothing_integral_fit(grid: Grid, potential: Potential | None,
                           w_t: TimeDependentPotential | None, psi0,
                           t_end: float, dt: float, eps_m: float, a: float,
                           checkpoints=None):
    """Accumulate the local-smoothing integral and fit
    I(T) ~ C sup_t ||psi||_{H^{1/2}}^2 + C' T^{1-a} with nonnegative C, C'."""
    if checkpoints is None:
        checkpoints = np.linspace(t_end / 6.0, t_end, 8)
    checkpoints = np.asarray(checkpoints, dtype=float)
    x = grid.points
    w_grad_mid = (1.0 + (0.5 * (x[1:] + x[:-1])) ** 2) ** (-(0.5 + eps_m) / 2.0)
    w_loc = (1.0 + x**2) ** (-(1.0 + eps_m))

    stepper = _SplitStepper(grid, potential, w_t=w_t)
    acc = {"val": 0.0, "prev": None, "t_prev": None, "sup_h": 0.0}
    partials = []
    next_cp = 0

    def density(t, u):
        grad = weighted_gradient_sq(grid, u, w_grad_mid)
        loc = float(grid.quad_weight * np.sum(w_loc * np.abs(u) ** 2))
        return grad + loc

    def observer(t, u):
        nonlocal next_cp
        val = density(t, u)
        if acc["prev"] is not None:
            acc["val"] += 0.5 * (t - acc["t_prev"]) * (acc["prev"] + val)
        acc["prev"], acc["t_prev"] = val, t
        acc["sup_h"] = max(acc["sup_h"], h_half_norm_sq(grid, u))
        if next_cp < len(checkpoints) and t >= checkpoints[next_cp] - 1e-9:
            partials.append((t, acc["val"]))
            next_cp += 1

    _run_split(stepper, psi0, 0.0, t_end, dt, observer=observer)
    ts = np.array([t for t, _ in partials])
    vals = np.array([v for _, v in partials])
    basis = np.column_stack([np.full_like(ts, acc["sup_h"]), ts ** (1.0 - a)])
    coeffs, _ = scipy.optimize.nnls(basis, vals)
    c0, c1 = float(coeffs[0]), float(coeffs[1])
    return (c0, c1), ObservableSeries(ts, vals, "smoothing integral"), acc["sup_h"]


def morawetz_suite(grid: Grid, spec: SpectralData, potential: Potential,
                   w_t: TimeDependentPotential | None, psi0,
                   g_samples=None, eps_m: float = 0.1, a: float = 0.5,
                   theta: float = 0.5, horizon: float = 6.0,
                   t_end: float = 10.0, dt: float = 2e-3,
                   refined_grid_factor: float = 1.5,
                   l6_times=None) -> EstimateReport:
    """Adapted Morawetz estimate: multiplier positivity, adaptor cancellation,
    the local-smoothing integral with its fitted constants (checked stable
    under grid refinement), and the theta-weighted conformal corollary."""
    from .grids import make_grid

    x = grid.points
    if g_samples is None:
        g_samples = 1.0 / np.sqrt(1.0 + x**2)
    if not potential.is_nonnegative(x):
        raise ValueError("the adapted Morawetz suite assumes V >= 0")

    report = EstimateReport("adapted Morawetz estimate")
    report.checks.append(morawetz_commutator_check(grid, g_samples))
    cancel, adaptor = morawetz_cancellation_check(grid, spec, potential, g_samples, horizon)
    report.checks.append(cancel)

    (c0, c1), smoothing, sup_h = smoothing_integral_fit(
        grid, potential, w_t, psi0, t_end, dt, eps_m, a)
    fitted = c0 * sup_h + c1 * smoothing.times ** (1.0 - a)
    fit_gap = float(np.abs(fitted - smoothing.values).max() / max(smoothing.values.max(), 1e-300))
    report.rates["smoothing_C"] = c0
    report.rates["smoothing_Cprime"] = c1
    report.add("smoothing integral envelope fit", fit_gap, 0.25, fit_gap <= 0.25,
               note=f"C={c0:.3g}, C'={c1:.3g}")

    refined_n = int(round(grid.n * refined_grid_factor)) | 1
    fine = make_grid(grid.kind, refined_n, grid.extent)
    psi0_fine = np.interp(fine.points, grid.points, np.asarray(psi0, dtype=complex).real) + \
        1j * np.interp(fine.points, grid.points, np.asarray(psi0, dtype=complex).imag)
    psi0_fine = psi0_fine / norm(fine, psi0_fine, "L2") * norm(grid, psi0, "L2")
    (c0f, c1f), _, _ = smoothing_integral_fit(fine, potential, w_t, psi0_fine, t_end, dt, eps_m, a)
    rel = max(abs(c0f - c0) / max(abs(c0), 1e-12), abs(c1f - c1) / max(abs(c1), 1e-12))
    report.add("smoothing constants stable under refinement", rel, 0.20, rel <= 0.20,
               note=f"refined C={c0f:.3g}, C'={c1f:.3g}")

    if l6_times is not None:
        stepper = _SplitStepper(grid, potential, w_t=w_t)
        vals = []
        u, t_cur = np.asarray(psi0, dtype=complex).copy(), 0.0
        for t in l6_times:
            u, t_cur = _run_split(stepper, u, t_cur, float(t), dt)
            vals.append(norm(grid, u, "Lp", p=6.0) ** 2)
        l6sq = ObservableSeries(np.asarray(l6_times, dtype=float), np.asarray(vals), "L6^2")
        slope, _ = fit_decay_rate(l6sq)
        report.rates["L6sq_theta"] = slope
        report.add("theta-weighted conformal corollary", slope, -theta + 0.1,
                   slope <= -theta + 0.1)
    return report
