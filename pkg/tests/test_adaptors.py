import numpy as np
import pytest

from proplab import (HermitianOperator, Potential, QSelection, build_adaptor,
                     adaptor_expectation_series, adapted_dilation,
                     classify_spectrum, conformal_Q, conformal_Q_termwise,
                     diagonalize, dilation_Q, laplacian, make_grid,
                     weighted_propagator_norm)
from proplab.adaptors import (commutator_closure_defect, commutator_remainder,
                              residual_weighted_scan)
from proplab.grids import Grid
from proplab.spectral import SpectralData, classify_spectrum as classify


def classified(grid, pot):
    h = HermitianOperator(laplacian(grid).matrix + np.diag(pot.v(grid.points)), grid, "H")
    return classify_spectrum(diagonalize(h)), h


def brute_force_adaptor(spec, q_samples, horizon, steps=4000):
    """Simpson quadrature of P_c [int_0^T e^{iHs}(-Q)e^{-iHs} ds] P_c built
    directly from matrix exponentials; independent of the kernel formula."""
    idx = spec.continuum_indices()
    cols = spec.eigenvectors[:, idx]
    e = spec.eigenvalues[idx]
    q = np.diag(q_samples).astype(complex)
    ss = np.linspace(0.0, horizon, steps + 1)
    w = np.ones(steps + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (ss[1] - ss[0]) / 3.0
    acc = np.zeros((len(idx), len(idx)), dtype=complex)
    phase0 = cols.conj().T @ (-q) @ cols
    for s, wk in zip(ss, w):
        ph = np.exp(1j * e * s)
        acc += wk * (ph[:, None] * phase0 * ph.conj()[None, :])
    return cols @ acc @ cols.conj().T


def test_conformal_q_closed_form():
    g = make_grid("line", 256, 10.0)
    pot = Potential.gaussian(1.0)
    q = conformal_Q(pot, g)
    x = g.points
    expect = np.where(np.abs(x) < 1.0 / np.sqrt(2.0), -4.0 * np.exp(-x**2) * (1.0 - 2.0 * x**2), 0.0)
    np.testing.assert_allclose(q.samples, expect, atol=1e-12)
    assert np.all(q.samples <= 0)


def test_conformal_q_zero_potential(line_grid):
    assert not np.any(conformal_Q(Potential.zero(), line_grid).samples)


def test_conformal_q_purely_repulsive(line_grid):
    # x.grad V <= -V everywhere makes the positive part vanish
    pot = Potential.custom(lambda x: 1.0 / (1.0 + x**2),
                           lambda x: -2.0 * x / (1.0 + x**2) ** 2, "lorentz")
    f = 4.0 * pot.xdv(line_grid.points) + 4.0 * pot.v(line_grid.points)
    assert np.all(f <= 4.0 / (1.0 + line_grid.points**2) + 1e-12)
    strong = Potential.custom(lambda x: (1.0 + x**2) ** -2,
                              lambda x: -4.0 * x * (1.0 + x**2) ** -3, "steep")
    fq = 4.0 * strong.xdv(line_grid.points) + 4.0 * strong.v(line_grid.points)
    mask = np.abs(line_grid.points) >= 1.0
    assert np.all(fq[mask] <= 1e-12)


def test_termwise_q_differs_and_is_nonpositive(line_grid):
    pot = Potential.gaussian(1.5, width=1.2)
    q1 = conformal_Q(pot, line_grid)
    q2 = conformal_Q_termwise(pot, line_grid)
    assert np.all(q2.samples <= 1e-15)
    assert np.abs(q1.samples - q2.samples).max() > 1e-3


def test_dilation_q_closed_form(line_grid):
    pot = Potential.gaussian(1.0)
    q = dilation_Q(pot, line_grid)
    x = line_grid.points
    np.testing.assert_allclose(q.samples, 2.0 * np.exp(-x**2) * (1.0 - x**2), atol=1e-12)


def test_dilation_q_homogeneity_oracle(line_grid):
    # mollified 1/|x| profile: x.grad V = -V away from the mollification core,
    # so Q = 2V + x.grad V ~ V there
    a = 0.3
    pot = Potential.custom(lambda x: (x**2 + a**2) ** -0.5,
                           lambda x: -x * (x**2 + a**2) ** -1.5, "mollified coulomb")
    q = dilation_Q(pot, line_grid)
    far = np.abs(line_grid.points) > 3.0
    np.testing.assert_allclose(q.samples[far], pot.v(line_grid.points)[far], rtol=2e-2)


def test_conformal_q_guard():
    g = make_grid("line", 64, 8.0)
    with pytest.raises(ValueError, match="nonpositive"):
        QSelection("conformal", np.ones(g.n), "bad")


def test_build_adaptor_trivial_cases(line_grid):
    spec, _ = classified(line_grid, Potential.gaussian(0.5))
    q = conformal_Q(Potential.zero(), line_grid)
    assert np.abs(build_adaptor(spec, q, 5.0).matrix).max() == 0.0
    q2 = conformal_Q(Potential.gaussian(0.5), line_grid)
    assert np.abs(build_adaptor(spec, q2, 0.0).matrix).max() == 0.0


def test_build_adaptor_matches_brute_force_three_level():
    # synthetic 3-level system, all continuum, random symmetric profile
    pts = np.array([1.0, 2.0, 3.0])
    grid = Grid(kind="line", n=3, h=1.0, extent=2.0, points=pts)
    rng = np.random.default_rng(7)
    e = np.array([1.0, 2.0, 4.0])
    spec = classify(SpectralData(grid=grid, eigenvalues=e, eigenvectors=np.eye(3)))
    q_samples = rng.normal(size=3)
    q = QSelection("custom", q_samples, "random")
    horizon = 3.7
    b = build_adaptor(spec, q, horizon)
    b_direct = brute_force_adaptor(spec, q_samples, horizon)
    assert np.abs(b.matrix - b_direct).max() <= 1e-6


def test_build_adaptor_matches_brute_force_small_grid():
    grid = make_grid("line", 12, 6.0)
    pot = Potential.gaussian(0.8)
    spec, _ = classified(grid, pot)
    q = conformal_Q(pot, grid)
    b = build_adaptor(spec, q, 2.5)
    b_direct = brute_force_adaptor(spec, q.samples, 2.5, steps=6000)
    assert np.abs(b.matrix - b_direct).max() <= 1e-6


def test_build_adaptor_linear_in_q(line_grid):
    pot = Potential.gaussian(1.0)
    spec, _ = classified(line_grid, pot)
    q = conformal_Q(pot, line_grid)
    b1 = build_adaptor(spec, q, 3.0)
    q2 = QSelection("custom", 2.0 * q.samples, "doubled")
    b2 = build_adaptor(spec, q2, 3.0)
    np.testing.assert_allclose(b2.matrix, 2.0 * b1.matrix, atol=1e-12)


def test_adaptor_invariants_and_closure(line_grid):
    pot = Potential.gaussian(1.5, width=1.3)
    spec, h = classified(line_grid, pot)
    q = conformal_Q(pot, line_grid)
    adaptor = build_adaptor(spec, q, 4.0)
    b = adaptor.matrix
    assert np.abs(b - b.conj().T).max() <= 1e-10
    from proplab import projector
    p_c = projector(spec, "continuous").matrix
    assert np.abs(b - p_c @ b @ p_c).max() <= 1e-10
    # -Q >= 0 makes the adaptor positive
    assert np.linalg.eigvalsh(b)[0] >= -1e-8 * adaptor.norm_bound
    defect = commutator_closure_defect(spec, h, adaptor)
    assert defect <= 1e-8 * np.abs(q.samples).max()


def test_flipped_q_breaks_positivity(line_grid):
    pot = Potential.gaussian(1.5, width=1.3)
    spec, _ = classified(line_grid, pot)
    q = conformal_Q(pot, line_grid).flipped()
    adaptor = build_adaptor(spec, q, 4.0)
    assert np.linalg.eigvalsh(adaptor.matrix)[0] < -1e-8 * adaptor.norm_bound


def test_residual_scan_monotone_within_horizon():
    grid = make_grid("radial3d", 256, 60.0)
    pot = Potential.gaussian(2.0)
    spec, _ = classified(grid, pot)
    q = conformal_Q(pot, grid)
    horizons = np.linspace(1.0, 6.0, 6)
    scan = residual_weighted_scan(spec, q, horizons)
    assert np.all(np.diff(scan) <= 1e-9)


def test_adaptor_warning_past_horizon(line_grid):
    pot = Potential.gaussian(1.0)
    spec, _ = classified(line_grid, pot)
    q = conformal_Q(pot, line_grid)
    adaptor = build_adaptor(spec, q, 8.0, validity_horizon=4.0)
    assert adaptor.warnings and "exceeds" in adaptor.warnings[0]


def test_expectation_series_zero_and_positive(line_grid):
    pot = Potential.gaussian(1.2)
    spec, _ = classified(line_grid, pot)
    zero_b = build_adaptor(spec, conformal_Q(Potential.zero(), line_grid), 3.0)
    phi = np.exp(-line_grid.points**2 / 2.0).astype(complex)
    ts, vals = adaptor_expectation_series(zero_b, spec, phi, np.linspace(0.5, 3, 6))
    assert np.abs(vals).max() == 0.0
    adaptor = build_adaptor(spec, conformal_Q(pot, line_grid), 3.0)
    _, vals = adaptor_expectation_series(adaptor, spec, phi, np.linspace(0.5, 3, 6))
    assert vals.min() >= -1e-8 * adaptor.norm_bound


def test_adapted_dilation_shape(line_grid):
    pot = Potential.gaussian(0.7)
    spec, _ = classified(line_grid, pot)
    op = adapted_dilation(spec, pot, 3.0)
    assert op.hermiticity_defect() <= 1e-9


def test_weighted_propagator_norm_contractions(line_grid):
    spec, _ = classified(line_grid, Potential.gaussian(1.0))
    assert weighted_propagator_norm(spec, 1.0, 0.0) <= 1.0 + 1e-9
    free = classify_spectrum(diagonalize(laplacian(line_grid)))
    assert weighted_propagator_norm(free, 0.0, 0.0) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        weighted_propagator_norm(spec, 1.0, -1.0)


def test_commutator_remainder_closes_identity(line_grid):
    pot = Potential.gaussian(1.0)
    spec, h = classified(line_grid, pot)
    q = conformal_Q(pot, line_grid)
    adaptor = build_adaptor(spec, q, 2.0)
    from proplab import projector
    p_c = projector(spec, "continuous").matrix
    comm = 1j * (h.matrix @ adaptor.matrix - adaptor.matrix @ h.matrix)
    q_proj = p_c @ np.diag(q.samples) @ p_c
    rem = commutator_remainder(spec, adaptor)
    assert np.abs(comm - q_proj + rem).max() <= 1e-10 * max(1.0, np.abs(q.samples).max())
