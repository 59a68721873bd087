"""Diagonalization, bound/continuum classification, spectral projectors,
functional calculus and the genericity margin.

On a finite Dirichlet box the spectrum is discrete; the continuous subspace
is modeled as the E > eps_thr cloud, bound states as E < -eps_thr, and the
near-threshold band |E| <= eps_thr is flagged rather than fatal (suites that
assume no zero eigenvalue are gated on it).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .grids import Grid
from .operators import HermitianOperator

BOUND = "bound"
CONTINUUM = "continuum"
NEAR_THRESHOLD = "near_threshold"


def free_laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    """Closed-form Dirichlet stencil spectrum (2/h^2)(1 - cos(k pi/(n+1)))."""
    k = np.arange(1, grid.n + 1, dtype=float)
    return (2.0 / grid.h**2) * (1.0 - np.cos(k * np.pi / (grid.n + 1)))


def default_threshold(grid: Grid) -> float:
    """Half the smallest free-Laplacian eigenvalue on the same grid."""
    return 0.5 * float(free_laplacian_eigenvalues(grid)[0])


def resolution_energy_limit(grid: Grid, fraction: float = 0.5) -> float:
    """Upper edge of the lattice-resolved band, ``fraction * (4/h^2)``.

    Stencil modes near the band top carry maximal energy but near-zero
    central-difference momentum (the discrete group velocity vanishes at the
    lattice cutoff), so they are artifacts of the mesh, not continuum states.
    Spectral statements are verified below this limit; it tends to infinity
    with h -> 0.
    """
    return fraction * 4.0 / grid.h**2


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenpairs of a Hamiltonian plus (optional) classification tags."""

    grid: Grid
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    label: str = ""
    tags: np.ndarray | None = field(default=None, repr=False)
    eps_thr: float | None = None

    @property
    def classified(self) -> bool:
        return self.tags is not None

    def indices(self, tag: str) -> np.ndarray:
        if self.tags is None:
            raise ValueError("spectrum not classified yet")
        return np.flatnonzero(self.tags == tag)

    @property
    def near_threshold_count(self) -> int:
        return int(len(self.indices(NEAR_THRESHOLD)))

    def continuum_indices(self) -> np.ndarray:
        """Continuum plus near-threshold columns (so that P_c + P_b = I)."""
        if self.tags is None:
            raise ValueError("spectrum not classified yet")
        return np.flatnonzero(self.tags != BOUND)

    def continuum_basis(self, e_max: float | None = None):
        """Continuum eigenvector columns and energies, optionally band-limited."""
        idx = self.continuum_indices()
        if e_max is not None:
            idx = idx[self.eigenvalues[idx] <= e_max]
        return self.eigenvectors[:, idx], self.eigenvalues[idx]

    def evolve(self, state, t: float):
        """e^{-iHt} state through the eigenbasis."""
        c = self.eigenvectors.conj().T @ np.asarray(state, dtype=complex)
        return self.eigenvectors @ (np.exp(-1j * self.eigenvalues * t) * c)


def diagonalize(op: HermitianOperator) -> SpectralData:
    """Full eigendecomposition with orthonormal columns (LAPACK eigh)."""
    evals, evecs = scipy.linalg.eigh(op.matrix)
    if np.abs(op.matrix.imag).max() == 0.0:
        evecs = evecs.real.astype(float)
    return SpectralData(grid=op.grid, eigenvalues=evals, eigenvectors=evecs, label=op.label)


def free_spectral_data(grid: Grid) -> SpectralData:
    """Closed-form eigenpairs of the free Dirichlet stencil: the orthonormal
    sine basis sqrt(2/(n+1)) sin(j k pi/(n+1)) with the cosine spectrum."""
    n = grid.n
    j = np.arange(1, n + 1)
    basis = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(j, j) * np.pi / (n + 1))
    return SpectralData(grid=grid, eigenvalues=free_laplacian_eigenvalues(grid),
                        eigenvectors=basis, label="-lap (closed form)")


def classify_spectrum(spec: SpectralData, eps_thr: float | None = None) -> SpectralData:
    """Tag eigenpairs as bound (E < -eps), continuum (E > eps) or near_threshold."""
    eps = default_threshold(spec.grid) if eps_thr is None else float(eps_thr)
    tags = np.full(spec.eigenvalues.shape, CONTINUUM, dtype=object)
    tags[spec.eigenvalues < -eps] = BOUND
    tags[np.abs(spec.eigenvalues) <= eps] = NEAR_THRESHOLD
    return replace(spec, tags=tags, eps_thr=eps)


@dataclass(frozen=True, eq=False)
class Projector:
    matrix: np.ndarray = field(repr=False)
    rank: int
    which: str
    grid: Grid


def projector(spec: SpectralData, which: str) -> Projector:
    """Spectral projector P_c ('continuous') or P_b ('bound').

    Near-threshold states count toward the continuous side so that
    P_c + P_b = I holds exactly; their presence is reported separately.
    """
    if which == "continuous":
        idx = spec.continuum_indices()
    elif which == "bound":
        idx = spec.indices(BOUND)
    else:
        raise ValueError(f"which must be 'continuous' or 'bound', got {which!r}")
    cols = spec.eigenvectors[:, idx]
    m = (cols @ cols.conj().T).astype(complex)
    return Projector(matrix=m, rank=int(len(idx)), which=which, grid=spec.grid)


def function_of_H(spec: SpectralData, f) -> np.ndarray:
    """Phi f(E) Phi^dagger.  f must be finite on every eigenvalue."""
    fe = np.asarray(f(spec.eigenvalues))
    if not np.all(np.isfinite(fe)):
        bad = spec.eigenvalues[~np.isfinite(fe)][:3]
        raise ValueError(f"f undefined on the spectrum near E={bad}")
    return (spec.eigenvectors * fe) @ spec.eigenvectors.conj().T


def genericity_margin(spec: SpectralData, lap: HermitianOperator) -> float:
    """delta* = min over unit u in Ran P_c of <u, H u>/<u, -lap u>.

    Computed as the smallest generalized eigenvalue of the continuum-basis
    compressions (diag E_c, Phi_c^T (-lap) Phi_c).  The scenario passes the
    genericity gate iff delta* > 0.
    """
    idx = spec.continuum_indices()
    if len(idx) == 0:
        raise ValueError("empty continuum subspace")
    cols = spec.eigenvectors[:, idx]
    a = np.diag(spec.eigenvalues[idx])
    b = cols.conj().T @ lap.matrix @ cols
    b = 0.5 * (b + b.conj().T)
    vals = scipy.linalg.eigh(a, b.real if np.abs(b.imag).max() < 1e-13 else b,
                             eigvals_only=True)
    return float(vals[0])
