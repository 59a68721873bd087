"""Position-basis operators: Laplacian, momentum, dilation, potentials,
conformal factor, commutators and Heisenberg derivatives.

The kinetic operator is the 3-point Dirichlet stencil and the momentum is the
central difference; they are independent discretizations, so continuum
identities that mix them hold weakly on smooth states with O(h^2) error.
A few identities are exact on the uniform lattice up to wall rows, e.g.
i[-lap, x^2] = 2(xp + px) and i[-lap, xp + px] = 4 p^2; tests distinguish the
two classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import Grid

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense self-adjoint matrix tagged with its grid and a provenance label."""

    matrix: np.ndarray = field(repr=False)
    grid: Grid
    label: str = ""

    def __post_init__(self):
        m = self.matrix
        scale = float(np.abs(m).max()) or 1.0
        defect = float(np.abs(m - m.conj().T).max())
        if defect > HERMITICITY_RTOL * scale:
            raise ValueError(f"matrix {self.label!r} is not Hermitian: defect {defect:.2e}")

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def apply(self, state):
        return self.matrix @ state

    def expectation(self, state) -> float:
        return self.grid.expectation(self.matrix, state)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _require_same_grid(self, other)
        return HermitianOperator(self.matrix + other.matrix, self.grid,
                                 f"({self.label}+{other.label})")

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(self.matrix * float(scalar), self.grid,
                                 f"{scalar}*{self.label}")

    __rmul__ = __mul__


def _require_same_grid(a: HermitianOperator, b: HermitianOperator):
    if a.grid is not b.grid and (a.grid.kind != b.grid.kind or a.grid.n != b.grid.n
                                 or abs(a.grid.h - b.grid.h) > 1e-15):
        raise ValueError(f"operators {a.label!r} and {b.label!r} live on different grids")


def laplacian(grid: Grid) -> HermitianOperator:
    """Minus the second difference with Dirichlet walls: (2 d_ij - d_{|i-j|,1})/h^2.

    Symmetric positive definite; eigenvalues (2/h^2)(1 - cos(k pi/(n+1))).
    """
    n, h = grid.n, grid.h
    m = (np.diag(2.0 * np.ones(n)) - np.diag(np.ones(n - 1), 1)
         - np.diag(np.ones(n - 1), -1)) / h**2
    return HermitianOperator(m.astype(complex), grid, "-lap")


def apply_laplacian(grid: Grid, state):
    """Matrix-free action of the Dirichlet stencil."""
    out = 2.0 * np.asarray(state, dtype=complex)
    out[:-1] -= state[1:]
    out[1:] -= state[:-1]
    return out / grid.h**2


def momentum(grid: Grid) -> HermitianOperator:
    """p = -i d/dx by central differences; Hermitian by antisymmetry."""
    n, h = grid.n, grid.h
    m = np.zeros((n, n), dtype=complex)
    idx = np.arange(n - 1)
    m[idx, idx + 1] = -1j / (2.0 * h)
    m[idx + 1, idx] = 1j / (2.0 * h)
    return HermitianOperator(m, grid, "p")


def apply_momentum(grid: Grid, state):
    out = np.zeros(grid.n, dtype=complex)
    out[:-1] += -1j * np.asarray(state)[1:] / (2.0 * grid.h)
    out[1:] += 1j * np.asarray(state)[:-1] / (2.0 * grid.h)
    return out


def position(grid: Grid) -> HermitianOperator:
    return HermitianOperator(np.diag(grid.points).astype(complex), grid, "x")


def multiplication(grid: Grid, samples) -> HermitianOperator:
    """Diagonal operator from real samples (potentials, weights, Q profiles)."""
    samples = np.asarray(samples)
    if np.iscomplexobj(samples) and np.abs(samples.imag).max() > 0:
        raise ValueError("multiplication operator needs real samples")
    return HermitianOperator(np.diag(samples.real).astype(complex), grid, "mult")


def dilation(grid: Grid) -> HermitianOperator:
    """Generator of scaling A = (x p + p x)/2."""
    x = position(grid).matrix
    p = momentum(grid).matrix
    return HermitianOperator(0.5 * (x @ p + p @ x), grid, "A")


def conformal_factor_operator(grid: Grid, t: float) -> HermitianOperator:
    """|x - 2pt|^2 as the square of the Hermitian matrix x - 2tp; PSD."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    m = position(grid).matrix - 2.0 * t * momentum(grid).matrix
    return HermitianOperator(m.conj().T @ m, grid, f"C({t})")


def conformal_factor_dt(grid: Grid, t: float) -> HermitianOperator:
    """Analytic time derivative of the conformal factor: -2(xp+px) + 8t p^2."""
    x = position(grid).matrix
    p = momentum(grid).matrix
    return HermitianOperator(-2.0 * (x @ p + p @ x) + 8.0 * t * (p @ p), grid, f"dC/dt({t})")


def commutator_i(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """i[A, B]; Hermitian whenever both inputs are."""
    _require_same_grid(a, b)
    m = 1j * (a.matrix @ b.matrix - b.matrix @ a.matrix)
    return HermitianOperator(m, a.grid, f"i[{a.label},{b.label}]")


def heisenberg_derivative(h_op: HermitianOperator, b_op: HermitianOperator,
                          db_dt: HermitianOperator) -> HermitianOperator:
    """D_H B = i[H, B] + dB/dt, with dB/dt supplied analytically."""
    _require_same_grid(h_op, b_op)
    _require_same_grid(b_op, db_dt)
    m = commutator_i(h_op, b_op).matrix + db_dt.matrix
    return HermitianOperator(m, h_op.grid, f"D_H {b_op.label}")


def parity_matrix(grid: Grid) -> np.ndarray:
    """Order-reversing permutation; commutes with H for even potentials on the line."""
    if grid.kind != "line":
        raise ValueError("parity is a line-grid notion")
    return np.eye(grid.n)[::-1].copy()


class Potential:
    """Static potential with closed-form evaluators for V, grad V and x.grad V.

    Built from Gaussian terms a exp(-((x-c)/w)^2), which add with ``+``, or
    from arbitrary closed-form evaluator callables via ``custom``.
    """

    def __init__(self, terms=(), evaluators=None, label=""):
        self.terms = tuple(terms)  # (amplitude, width, center)
        self._evaluators = evaluators
        self._label = label

    @classmethod
    def zero(cls) -> "Potential":
        return cls()

    @classmethod
    def gaussian(cls, amplitude: float, width: float = 1.0, center: float = 0.0) -> "Potential":
        if width <= 0:
            raise ValueError("width must be positive")
        return cls([(float(amplitude), float(width), float(center))])

    @classmethod
    def custom(cls, v, dv, label="custom") -> "Potential":
        """Potential from closed-form evaluators for V and grad V."""
        return cls(evaluators=(v, dv), label=label)

    @property
    def is_zero(self) -> bool:
        return not self.terms and self._evaluators is None

    def __add__(self, other: "Potential") -> "Potential":
        if self._evaluators is not None or other._evaluators is not None:
            raise ValueError("custom potentials do not compose with +")
        return Potential(self.terms + other.terms)

    def v(self, x):
        x = np.asarray(x, dtype=float)
        if self._evaluators is not None:
            return np.asarray(self._evaluators[0](x), dtype=float)
        out = np.zeros_like(x)
        for a, w, c in self.terms:
            out += a * np.exp(-(((x - c) / w) ** 2))
        return out

    def dv(self, x):
        x = np.asarray(x, dtype=float)
        if self._evaluators is not None:
            return np.asarray(self._evaluators[1](x), dtype=float)
        out = np.zeros_like(x)
        for a, w, c in self.terms:
            out += a * np.exp(-(((x - c) / w) ** 2)) * (-2.0 * (x - c) / w**2)
        return out

    def xdv(self, x):
        """x . grad V, the dilation commutator profile i[V, A] = -x.grad V."""
        x = np.asarray(x, dtype=float)
        return x * self.dv(x)

    def is_nonnegative(self, x) -> bool:
        return bool(np.all(self.v(x) >= -1e-14))

    def describe(self) -> str:
        if self._evaluators is not None:
            return self._label
        if not self.terms:
            return "0"
        return " + ".join(f"{a:g}*exp(-((x-{c:g})/{w:g})^2)" for a, w, c in self.terms)


class TimeDependentPotential:
    """Separable time-dependent part W(x, t) with analytic t- and x-derivatives.

    The self-similar family is W = delta (1+t)^{-a} profile(x) with profile
    either the decay weight <x>^{-sigma} or a Gaussian bump.  Its time
    derivative obeys |dW/dt| <= a delta t^{-1} <x>^{-sigma}-type envelopes,
    the smallness that lets the conformal estimate bootstrap.
    """

    def __init__(self, amplitude: Callable, d_amplitude: Callable,
                 profile: Callable, d_profile: Callable, label: str = "W"):
        self.amplitude = amplitude
        self.d_amplitude = d_amplitude
        self.profile = profile
        self.d_profile = d_profile
        self.label = label

    @classmethod
    def none(cls) -> "TimeDependentPotential | None":
        return None

    @classmethod
    def self_similar(cls, delta: float, sigma: float, a: float,
                     profile: str = "weight") -> "TimeDependentPotential":
        if profile == "weight":
            prof = lambda x: (1.0 + np.asarray(x) ** 2) ** (-sigma / 2.0)
            dprof = lambda x: -sigma * np.asarray(x) * (1.0 + np.asarray(x) ** 2) ** (-sigma / 2.0 - 1.0)
        elif profile == "gaussian":
            prof = lambda x: np.exp(-np.asarray(x) ** 2)
            dprof = lambda x: -2.0 * np.asarray(x) * np.exp(-np.asarray(x) ** 2)
        else:
            raise ValueError(f"unknown profile {profile!r}")
        amp = lambda t: delta * (1.0 + t) ** (-a)
        damp = lambda t: -a * delta * (1.0 + t) ** (-a - 1.0)
        return cls(amp, damp, prof, dprof, label=f"self_similar(d={delta},s={sigma},a={a},{profile})")

    def w(self, x, t):
        return self.amplitude(t) * self.profile(x)

    def dt_w(self, x, t):
        return self.d_amplitude(t) * self.profile(x)

    def dw(self, x, t):
        return self.amplitude(t) * self.d_profile(x)

    def xdw(self, x, t):
        return np.asarray(x) * self.dw(x, t)
