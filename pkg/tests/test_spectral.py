import numpy as np
import pytest

from proplab import (HermitianOperator, Potential, classify_spectrum,
                     diagonalize, free_spectral_data, function_of_H,
                     genericity_margin, laplacian, make_grid, multiplication,
                     projector)
from proplab.spectral import (BOUND, CONTINUUM, default_threshold,
                              free_laplacian_eigenvalues)


def hamiltonian(grid, pot):
    return HermitianOperator(laplacian(grid).matrix + np.diag(pot.v(grid.points)),
                             grid, "H")


def sturm_negative_count(diag, off):
    """Count eigenvalues below zero of a symmetric tridiagonal matrix via the
    signs of the LDL^T pivots (an oracle independent of the eigensolver)."""
    count = 0
    d = diag[0]
    if d < 0:
        count += 1
    for i in range(1, len(diag)):
        d = diag[i] - off[i - 1] ** 2 / d
        if d < 0:
            count += 1
    return count


def test_diagonalize_diagonal_input(line_grid, rng):
    v = np.sort(rng.normal(size=line_grid.n))
    spec = diagonalize(multiplication(line_grid, v))
    np.testing.assert_allclose(spec.eigenvalues, v, atol=1e-12)
    # eigenvectors are a signed permutation of the identity
    np.testing.assert_allclose(np.abs(spec.eigenvectors).max(axis=0), 1.0, atol=1e-12)


def test_diagonalize_two_by_two():
    g = make_grid("line", 8, 4.0)
    m = np.zeros((8, 8), dtype=complex)
    m[0, 1] = m[1, 0] = 1.0
    spec = diagonalize(HermitianOperator(m, g, "swap"))
    np.testing.assert_allclose(spec.eigenvalues[[0, -1]], [-1.0, 1.0], atol=1e-12)


def test_diagonalize_free_laplacian_closed_form(line_grid):
    spec = diagonalize(laplacian(line_grid))
    np.testing.assert_allclose(spec.eigenvalues,
                               free_laplacian_eigenvalues(line_grid), rtol=1e-10)


def test_diagonalize_invariants(line_grid):
    pot = Potential.gaussian(-5.0)
    h = hamiltonian(line_grid, pot)
    spec = diagonalize(h)
    phi = spec.eigenvectors
    scale = np.abs(h.matrix).max()
    assert np.abs(h.matrix @ phi - phi * spec.eigenvalues).max() <= 1e-10 * scale
    assert np.abs(phi.conj().T @ phi - np.eye(line_grid.n)).max() <= 1e-10
    recon = (phi * spec.eigenvalues) @ phi.conj().T
    assert np.abs(recon - h.matrix).max() <= 1e-9 * scale


def test_free_spectral_data_is_exact(line_grid):
    spec = free_spectral_data(line_grid)
    phi = spec.eigenvectors
    assert np.abs(phi.T @ phi - np.eye(line_grid.n)).max() <= 1e-10
    lap = laplacian(line_grid).matrix.real
    assert np.abs(phi @ np.diag(spec.eigenvalues) @ phi.T - lap).max() <= 1e-9 * lap.max()


def test_classification_free_has_no_bound_states(line_grid):
    spec = classify_spectrum(diagonalize(laplacian(line_grid)))
    assert len(spec.indices(BOUND)) == 0
    assert len(spec.indices(CONTINUUM)) == line_grid.n


def test_deep_well_bound_state_with_sturm_oracle():
    g = make_grid("line", 512, 20.0)
    pot = Potential.gaussian(-8.0)
    spec = classify_spectrum(diagonalize(hamiltonian(g, pot)))
    n_bound = len(spec.indices(BOUND))
    assert n_bound >= 1
    # independent count: negative LDL pivots of the tridiagonal H
    diag = 2.0 / g.h**2 + pot.v(g.points)
    off = np.full(g.n - 1, -1.0 / g.h**2)
    assert sturm_negative_count(diag, off) == np.sum(spec.eigenvalues < 0) == n_bound


def test_shifted_spectrum_reclassifies(line_grid):
    spec = classify_spectrum(diagonalize(laplacian(line_grid)))
    shift = spec.eigenvalues[10] + default_threshold(line_grid) * 4
    shifted = classify_spectrum(
        diagonalize(HermitianOperator(laplacian(line_grid).matrix
                                      - shift * np.eye(line_grid.n), line_grid, "H-c")))
    assert len(shifted.indices(BOUND)) >= 10


def test_projectors_free_and_well(line_grid):
    free = classify_spectrum(diagonalize(laplacian(line_grid)))
    p_c = projector(free, "continuous")
    np.testing.assert_allclose(p_c.matrix, np.eye(line_grid.n), atol=1e-10)

    spec = classify_spectrum(diagonalize(hamiltonian(line_grid, Potential.gaussian(-5.0))))
    p_c = projector(spec, "continuous")
    p_b = projector(spec, "bound")
    assert p_b.rank == len(spec.indices(BOUND))
    assert abs(np.trace(p_b.matrix).real - p_b.rank) <= 0.5
    for p in (p_c, p_b):
        assert np.abs(p.matrix @ p.matrix - p.matrix).max() <= 1e-10
        assert np.abs(p.matrix - p.matrix.conj().T).max() <= 1e-12
    assert np.abs(p_c.matrix @ p_b.matrix).max() <= 1e-10
    assert np.abs(p_c.matrix + p_b.matrix - np.eye(line_grid.n)).max() <= 1e-10


def test_bound_states_decay_exponentially():
    # box large enough that even the shallowest bound state (E ~ -0.4,
    # decay rate ~ e^{-1.3|x|}) leaves < 1e-6 of mass beyond L/2
    g = make_grid("line", 500, 25.0)
    spec = classify_spectrum(diagonalize(hamiltonian(g, Potential.gaussian(-5.0))))
    assert len(spec.indices(BOUND)) >= 2
    for k in spec.indices(BOUND):
        phi = spec.eigenvectors[:, k]
        outer = np.abs(g.points) > g.extent / 2.0
        assert np.sum(np.abs(phi[outer]) ** 2) <= 1e-6


def test_function_of_h(line_grid):
    spec = classify_spectrum(diagonalize(hamiltonian(line_grid, Potential.gaussian(1.0))))
    ident = function_of_H(spec, lambda e: np.ones_like(e))
    np.testing.assert_allclose(ident, np.eye(line_grid.n), atol=1e-10)
    h_back = function_of_H(spec, lambda e: e)
    h = hamiltonian(line_grid, Potential.gaussian(1.0)).matrix
    assert np.abs(h_back - h).max() <= 1e-10 * np.abs(h).max()
    u = function_of_H(spec, lambda e: np.exp(-1j * e * 0.7))
    assert np.abs(u @ u.conj().T - np.eye(line_grid.n)).max() <= 1e-10
    with np.errstate(divide="ignore"), pytest.raises(ValueError, match="undefined"):
        function_of_H(spec, lambda e: 1.0 / (e - spec.eigenvalues[3]))


def test_genericity_margin_free_is_one(line_grid):
    spec = classify_spectrum(diagonalize(laplacian(line_grid)))
    assert genericity_margin(spec, laplacian(line_grid)) == pytest.approx(1.0, abs=1e-10)


def test_genericity_margin_nonnegative_potential(line_grid, rng):
    pot = Potential.gaussian(2.0, width=1.5)
    spec = classify_spectrum(diagonalize(hamiltonian(line_grid, pot)))
    lap = laplacian(line_grid)
    delta = genericity_margin(spec, lap)
    assert delta >= 1.0 - 1e-8
    # random Rayleigh quotients over Ran P_c can only sit above delta*
    cols = spec.eigenvectors[:, spec.continuum_indices()]
    h = hamiltonian(line_grid, pot).matrix
    for _ in range(5):
        u = cols @ rng.normal(size=cols.shape[1])
        quot = float(np.real(np.vdot(u, h @ u) / np.vdot(u, lap.matrix @ u)))
        assert quot >= delta - 1e-8


def test_genericity_margin_phase_invariance(line_grid, rng):
    from dataclasses import replace
    pot = Potential.gaussian(-4.0)
    spec = classify_spectrum(diagonalize(hamiltonian(line_grid, pot)))
    lap = laplacian(line_grid)
    delta = genericity_margin(spec, lap)
    signs = rng.choice([-1.0, 1.0], size=line_grid.n)
    flipped = replace(spec, eigenvectors=spec.eigenvectors * signs)
    assert genericity_margin(flipped, lap) == pytest.approx(delta, abs=1e-8)
