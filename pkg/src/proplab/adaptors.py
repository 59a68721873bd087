"""Construction of the adaptor operator B_V and the adapted dilation.

B_V solves the commutation equation i[H, B] = Q P_c on the continuous
subspace.  On a finite box the infinite-horizon time integral of the
conjugated profile diverges on the spectral diagonal, so the construction is
truncated at a horizon T:

    B(T) = P_c [ integral_0^T e^{iHs} (-Q) e^{-iHs} ds ] P_c,

assembled in the eigenbasis through the kernel
kappa(omega, T) = (e^{i omega T} - 1)/(i omega), kappa(0, T) = T.  The
truncation makes the commutation identity exact with a measurable remainder:

    i[H, B(T)] = P_c Q P_c - remainder(T),
    remainder(T) = P_c e^{iHT} Q e^{-iHT} P_c,

whose weighted norm ||<x>^{-sigma} remainder <x>^{-sigma}|| is the residual
diagnostic; local decay of the flow is exactly what drains it as T grows,
until wall reflections refocus the profile (keep T below half the
box-validity horizon).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, weight_vector
from .operators import HermitianOperator, Potential, dilation
from .spectral import SpectralData

POSITIVITY_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class QSelection:
    """Commutator target profile Q(x) with its provenance."""

    purpose: str  # conformal | dilation | custom
    samples: np.ndarray = field(repr=False)
    provenance: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("Q samples must be finite")
        if self.purpose == "conformal" and np.any(self.samples > 1e-12):
            raise ValueError("conformal Q must be nonpositive so that -Q >= 0")

    def flipped(self) -> "QSelection":
        """Sign-flipped copy for negative tests; purpose downgraded to custom."""
        return QSelection("custom", -self.samples, f"sign-flip of ({self.provenance})")


def positive_part(f):
    """[f]_+ = f where f >= 0 else 0, applied pointwise on grid samples."""
    return np.maximum(np.asarray(f), 0.0)


def negative_part(f):
    """[f]_- = f where f <= 0 else 0 (keeps its sign)."""
    return np.minimum(np.asarray(f), 0.0)


def conformal_Q(potential: Potential, grid: Grid) -> QSelection:
    """Q = -[4 x.grad V + 4 V]_+, the choice cancelling the bad-sign part of
    the conformal identity's right side."""
    x = grid.points
    f = 4.0 * potential.xdv(x) + 4.0 * potential.v(x)
    return QSelection("conformal", -positive_part(f),
                      provenance="-[4 x.grad V + 4 V]_+")


def conformal_Q_termwise(potential: Potential, grid: Grid) -> QSelection:
    """Alternative with the positive parts taken term by term:
    Q = -(4 [V]_+ + [x.grad V]_+)."""
    x = grid.points
    f = 4.0 * positive_part(potential.v(x)) + positive_part(potential.xdv(x))
    return QSelection("conformal", -f, provenance="-(4[V]_+ + [x.grad V]_+)")


def dilation_Q(potential: Potential, grid: Grid) -> QSelection:
    """Q = 2V + x.grad V, so that A + B_V obeys i[H, A + B_V] = 2H."""
    x = grid.points
    f = 2.0 * potential.v(x) + potential.xdv(x)
    return QSelection("dilation", f, provenance="2V + x.grad V")


@dataclass(frozen=True, eq=False)
class AdaptorOperator:
    """Truncated-horizon adaptor with its residual diagnostics."""

    op: HermitianOperator
    q: QSelection
    horizon: float
    sigma: float
    residual_weighted: float
    norm_bound: float
    warnings: tuple = ()

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix


def _continuum_phase_sandwich(spec: SpectralData, q_tilde, t: float):
    # P_c e^{iHt} Q e^{-iHt} P_c in the position basis, from the eigenbasis
    # compression q_tilde restricted to continuum columns
    ph = np.exp(1j * spec.eigenvalues * t)
    inner = (ph[:, None] * q_tilde) * ph.conj()[None, :]
    return inner


def build_adaptor(spec: SpectralData, q: QSelection, horizon: float,
                  sigma: float = 1.0, validity_horizon: float | None = None) -> AdaptorOperator:
    """Assemble B(T) in the continuum eigenbasis.

    Parameters
    ----------
    spec : classified spectral data of H.
    q : commutator target.
    horizon : truncation time T >= 0.
    sigma : weight exponent for the residual diagnostic.
    validity_horizon : box-validity horizon; a T beyond it gets a warning
        attached (reflections refocus the conjugated profile past it).
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    warnings = ()
    if validity_horizon is not None and horizon > validity_horizon:
        warnings = (f"horizon {horizon:g} exceeds box-validity horizon {validity_horizon:g}",)

    grid = spec.grid
    idx = spec.continuum_indices()
    cols = spec.eigenvectors[:, idx]
    e = spec.eigenvalues[idx]

    if horizon == 0.0 or not np.any(q.samples):
        b = np.zeros((grid.n, grid.n), dtype=complex)
        op = HermitianOperator(b, grid, "B(0)")
        return AdaptorOperator(op, q, float(horizon), float(sigma), 0.0, 0.0, warnings)

    q_tilde = cols.conj().T @ (q.samples[:, None] * cols)
    omega = e[:, None] - e[None, :]
    small = np.abs(omega) < 1e-13
    safe = np.where(small, 1.0, omega)
    kappa = np.where(small, horizon, (np.exp(1j * omega * horizon) - 1.0) / (1j * safe))
    b_tilde = -q_tilde * kappa
    b = cols @ b_tilde @ cols.conj().T
    b = 0.5 * (b + b.conj().T)  # scrub roundoff asymmetry
    op = HermitianOperator(b, grid, f"B_V(T={horizon:g})")

    w = weight_vector(grid, sigma).samples
    rem = cols @ _continuum_phase_sandwich(spec, q_tilde, horizon) @ cols.conj().T
    residual = float(np.linalg.norm((w[:, None] * rem) * w[None, :], 2))
    norm_bound = float(np.linalg.norm(b, 2))
    return AdaptorOperator(op, q, float(horizon), float(sigma), residual, norm_bound, warnings)


def commutator_remainder(spec: SpectralData, adaptor: AdaptorOperator) -> np.ndarray:
    """remainder(T) = P_c e^{iHT} Q e^{-iHT} P_c, the term closing the
    truncated commutation identity i[H, B] = P_c Q P_c - remainder."""
    idx = spec.continuum_indices()
    cols = spec.eigenvectors[:, idx]
    q_tilde = cols.conj().T @ (adaptor.q.samples[:, None] * cols)
    return cols @ _continuum_phase_sandwich(spec, q_tilde, adaptor.horizon) @ cols.conj().T


def commutator_closure_defect(spec: SpectralData, h_op: HermitianOperator,
                              adaptor: AdaptorOperator) -> float:
    """Max-norm defect of i[H, B] - P_c Q P_c + remainder(T); exact algebra,
    so this is roundoff-level regardless of physics."""
    b = adaptor.matrix
    comm = 1j * (h_op.matrix @ b - b @ h_op.matrix)
    idx = spec.continuum_indices()
    cols = spec.eigenvectors[:, idx]
    q_proj = cols @ (cols.conj().T @ (adaptor.q.samples[:, None] * cols)) @ cols.conj().T
    rem = commutator_remainder(spec, adaptor)
    return float(np.abs(comm - q_proj + rem).max())


def residual_weighted_scan(spec: SpectralData, q: QSelection, horizons,
                           sigma: float = 1.0) -> np.ndarray:
    """residual_weighted(T) over a grid of horizons (for monotonicity checks)."""
    grid = spec.grid
    idx = spec.continuum_indices()
    cols = spec.eigenvectors[:, idx]
    q_tilde = cols.conj().T @ (q.samples[:, None] * cols)
    w = weight_vector(grid, sigma).samples
    out = []
    for t in horizons:
        rem = cols @ _continuum_phase_sandwich(spec, q_tilde, t) @ cols.conj().T
        out.append(float(np.linalg.norm((w[:, None] * rem) * w[None, :], 2)))
    return np.asarray(out)


def adapted_dilation(spec: SpectralData, potential: Potential, horizon: float,
                     sigma: float = 1.0) -> HermitianOperator:
    """A + B_V with the dilation choice of Q, aiming at i[H, A + B_V] = 2H."""
    grid = spec.grid
    q = dilation_Q(potential, grid)
    b = build_adaptor(spec, q, horizon, sigma=sigma)
    return HermitianOperator(dilation(grid).matrix + b.matrix, grid, "A+B_V")


def adaptor_expectation_series(adaptor: AdaptorOperator, spec: SpectralData,
                               phi, times):
    """<phi(t), B phi(t)> along the flow phi(t) = e^{-iHt} phi.

    Returns (times, values); values of a positive adaptor stay above
    -1e-8 ||B|| and, for data with finite <x>-weighted norm, decay like the
    tail of the local-decay integral.
    """
    times = np.asarray(times, dtype=float)
    grid = spec.grid
    vals = np.empty(times.shape)
    for k, t in enumerate(times):
        u = spec.evolve(phi, t)
        vals[k] = grid.expectation(adaptor.matrix, u)
    return times, vals


def weighted_propagator_norm(spec: SpectralData, sigma: float, t: float,
                             e_max: float | None = None) -> float:
    """Largest singular value of W_sigma e^{-iHt} P_c W_sigma.

    ``e_max`` restricts P_c to the spectral band E <= e_max; decay fits use
    the box-transit limit so that no contributing mode has reflected inside
    the fit window (and the unresolved lattice band is excluded).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    grid = spec.grid
    w = weight_vector(grid, sigma).samples
    cols, e = spec.continuum_basis(e_max=e_max)
    wcols = w[:, None] * cols
    m = (wcols * np.exp(-1j * e * t)) @ wcols.conj().T
    return float(np.linalg.svd(m, compute_uv=False)[0])
