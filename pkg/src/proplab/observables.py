"""Propagation observables, their time series along a flow, Heisenberg
consistency, the integrated propagation inequality and decay-rate fitting.

A propagation observable is a time-dependent self-adjoint family B(t) whose
Heisenberg derivative D_H B = i[H, B] + dB/dt splits into a nonnegative part
C(t)^* C(t) plus an integrable remainder g(t); integrating the derivative of
<psi(t), B(t) psi(t)> then bounds int ||C psi||^2 dt by sup <B> + ||g||_L1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .evolution import Trajectory
from .grids import Grid
from .operators import HermitianOperator

REALNESS_TOL = 1e-9
MIN_FIT_SAMPLES = 8


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("series times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series values must be finite")

    def restricted(self, lo: float, hi: float) -> "ObservableSeries":
        m = (self.times >= lo - 1e-12) & (self.times <= hi + 1e-12)
        return ObservableSeries(self.times[m], self.values[m], self.label)


@dataclass
class CheckResult:
    name: str
    measured: float
    bound: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"  [{flag}] {self.name}: measured {self.measured:.4g} vs bound {self.bound:.4g} {self.note}"


@dataclass
class EstimateReport:
    theorem: str
    checks: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    series: dict = field(default_factory=dict)

    def add(self, name, measured, bound, passed, note="") -> CheckResult:
        res = CheckResult(name, float(measured), float(bound), bool(passed), note)
        self.checks.append(res)
        return res

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        head = f"{self.theorem}: {'PASS' if self.passed else 'FAIL'}"
        lines = [head] + [c.line() for c in self.checks]
        for k, v in self.rates.items():
            lines.append(f"  rate {k} = {v:+.4f}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class PropagationObservable:
    """Builder bundle for a time-dependent observable family.

    ``builder(t)`` and ``db_dt(t)`` return HermitianOperators (dB/dt comes
    from the analytic formula of the family, never from differencing
    matrices).  ``positive_factor(t)``, when known, returns the matrix C(t)
    of the decomposition D_H B = C^*C + g, and ``g_values(t)`` the remainder.
    """

    label: str
    builder: Callable[[float], HermitianOperator]
    db_dt: Callable[[float], HermitianOperator]
    positive_factor: Callable[[float], np.ndarray] | None = None
    g_values: Callable[[float], float] | None = None


def expectation_value(grid: Grid, matrix, state) -> float:
    """Quadratic form with a realness guard for Hermitian inputs."""
    raw = grid.inner(state, matrix @ state)
    scale = max(1.0, abs(raw))
    if abs(raw.imag) > REALNESS_TOL * scale:
        raise ValueError(f"expectation has imaginary residue {raw.imag:.2e}")
    return float(raw.real)


def observable_series(traj: Trajectory, prob: PropagationObservable, times) -> ObservableSeries:
    """<psi(t), B(t) psi(t)> at the requested (sampled) times."""
    times = np.asarray(times, dtype=float)
    vals = np.empty(times.shape)
    for k, t in enumerate(times):
        state = traj.state_at(t)
        vals[k] = expectation_value(traj.grid, prob.builder(t).matrix, state)
    return ObservableSeries(times, vals, prob.label)


def heisenberg_consistency(traj: Trajectory, prob: PropagationObservable,
                           h_of_t: Callable[[float], HermitianOperator],
                           t: float, dt_offset: float) -> float:
    """|centered difference of <B> minus <i[H,B] + dB/dt>| at time t.

    The trajectory must sample t and t +- dt_offset.  On smooth states the
    residual is O(dt_offset^2 + h^2); a corrupted dB/dt blows it up.
    """
    grid = traj.grid
    fwd = expectation_value(grid, prob.builder(t + dt_offset).matrix, traj.state_at(t + dt_offset))
    bwd = expectation_value(grid, prob.builder(t - dt_offset).matrix, traj.state_at(t - dt_offset))
    lhs = (fwd - bwd) / (2.0 * dt_offset)
    state = traj.state_at(t)
    h_op = h_of_t(t)
    b_op = prob.builder(t)
    comm = 1j * (h_op.matrix @ b_op.matrix - b_op.matrix @ h_op.matrix)
    rhs = expectation_value(grid, comm + prob.db_dt(t).matrix, state)
    return abs(lhs - rhs)


def pres_check(b_series: ObservableSeries, c_norm_sq: ObservableSeries,
               g_abs_integral: float, tolerance: float = 1e-9) -> CheckResult:
    """Integrated propagation inequality:
    int ||C psi||^2 dt <= sup <B> + ||g||_L1 + tolerance."""
    integral = float(np.trapezoid(c_norm_sq.values, c_norm_sq.times))
    bound = float(np.max(b_series.values)) + abs(g_abs_integral) + tolerance
    return CheckResult("propagation inequality", integral, bound, integral <= bound,
                       note=f"slack {bound - integral:.3g}")


def pres_check_with_hooks(traj: Trajectory, prob: PropagationObservable, times,
                          g_abs_integral: float = 0.0, tolerance: float = 1e-9):
    """Propagation inequality through the PROB's own decomposition hooks.

    Returns (CheckResult, None), or (None, warning) when the observable
    carries no positive-part factor.  The factor convention is
    D_H B = +-(C^*C) + g; for a PSD observable both signs yield the same
    integrated bound.
    """
    if prob.positive_factor is None:
        return None, f"{prob.label}: no positive-part decomposition, propagation inequality skipped"
    times = np.asarray(times, dtype=float)
    b_series = observable_series(traj, prob, times)
    vals = []
    for t in times:
        c_factor = prob.positive_factor(t)
        cu = c_factor @ traj.state_at(t)
        vals.append(float(traj.grid.quad_weight * np.sum(np.abs(cu) ** 2)))
    c_series = ObservableSeries(times, np.asarray(vals), "||C psi||^2")
    g_total = abs(g_abs_integral)
    if prob.g_values is not None:
        g_samples = np.array([abs(prob.g_values(t)) for t in times])
        g_total += float(np.trapezoid(g_samples, times))
    return pres_check(b_series, c_series, g_total, tolerance), None


def fit_decay_rate(series: ObservableSeries, window: tuple[float, float] | None = None):
    """Least-squares slope of log(value) against log(t).

    Returns (slope, width) with width twice the slope's standard error.
    Non-positive values are dropped; at least 8 positive samples are needed
    inside the window.
    """
    ts, vs = series.times, series.values
    if window is not None:
        m = (ts >= window[0] - 1e-12) & (ts <= window[1] + 1e-12)
        ts, vs = ts[m], vs[m]
    keep = vs > 0
    ts, vs = ts[keep], vs[keep]
    if len(ts) < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} positive samples, got {len(ts)}")
    lx, ly = np.log(ts), np.log(vs)
    coeffs, cov = np.polyfit(lx, ly, 1, cov=True)
    slope = float(coeffs[0])
    width = 2.0 * float(np.sqrt(cov[0, 0]))
    return slope, width


def trend_slope(series: ObservableSeries) -> float:
    """Growth-trend reading of a (positive) series: fitted log-log slope,
    with zero returned for an identically tiny series."""
    if np.all(series.values <= 1e-300):
        return 0.0
    slope, _ = fit_decay_rate(series)
    return slope


def bounded_check(name: str, series: ObservableSeries, cap: float,
                  trend_cap: float = 0.05) -> CheckResult:
    """Operationalized "bounded up to a constant": the series stays below the
    declared cap and its fitted growth trend does not exceed trend_cap."""
    peak = float(np.max(series.values))
    slope = trend_slope(series)
    ok = peak <= cap and slope <= trend_cap
    return CheckResult(name, peak, cap, ok, note=f"trend {slope:+.3f} (cap {trend_cap})")


def log_growth_fit(series: ObservableSeries):
    """Fit value ~ alpha + beta log t; returns (alpha, beta)."""
    lx = np.log(series.times)
    beta, alpha = np.polyfit(lx, series.values, 1)
    return float(alpha), float(beta)
