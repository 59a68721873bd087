"""Scenario configuration, the shipped scenario library, and the pipeline
runner: grid -> operators -> spectrum -> adaptor -> trajectory -> suites,
with delimited-text series and a manifest persisted per run.

One scenario per config document.  The text format is strict INI-style
sections of ``key = value`` lines; unknown sections or keys are rejected
with their path, and ``parse_config(serialize_config(c)) == c``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .adaptors import (build_adaptor, conformal_Q, residual_weighted_scan,
                       weighted_propagator_norm)
from .evolution import (Trajectory, gaussian_state, eigenstate, snap_to_lattice,
                        trajectory_linear, trajectory_split, validity_horizon)
from .grids import make_grid, norm, transit_energy_limit
from .observables import EstimateReport, ObservableSeries, fit_decay_rate
from .operators import HermitianOperator, Potential, TimeDependentPotential, laplacian
from .spectral import (SpectralData, classify_spectrum, diagonalize,
                       free_spectral_data, projector, resolution_energy_limit)
from .suites import (conformal_identity_residual, conformal_prob,
                     general_potential_suite, gronwall_monitor,
                     morawetz_suite, operator_identity_suite,
                     positive_potential_suite, timedep_suite)


class ConfigError(ValueError):
    """Invalid scenario configuration (CLI exit code 2)."""


KNOWN_SUITES = ("operator_identities", "conformal_identity", "adaptor",
                "weighted_decay", "positive_potential", "general_potential",
                "timedep", "gronwall", "nls", "morawetz")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    suites: tuple = ()
    grid_kind: str = "line"
    grid_n: int = 512
    grid_extent: float = 20.0
    potential_terms: tuple = ()          # (amplitude, width, center) triples
    timedep_type: str = "none"           # none | self_similar | semilinear
    timedep_delta: float = 0.0
    timedep_sigma: float = 2.0
    timedep_a: float = 0.5
    timedep_profile: str = "weight"
    nonlinearity: float = 0.0
    state_recipe: str = "gaussian"       # gaussian | eigenstate
    state_center: float = 0.0
    state_width: float = 1.0
    state_momentum: float = 0.0
    state_k: int = 0
    lnorm_target: float = 0.0            # 0 disables rescaling
    method: str = "eigenbasis_exact"     # eigenbasis_exact | split_step2
    dt: float = 0.002
    t_max: float = 10.0
    samples: int = 16
    t0: float = 1.0
    t_b: float = 0.0                     # 0 means auto (half validity horizon)
    sigma: float = 1.0
    theta: float = 0.5
    eps_m: float = 0.1
    prob_scale: str = "inverse_t"
    eps_thr: float = 0.0                 # 0 means spacing-based default
    energy_cap: float = 10.0
    iterated_cap: float = 10.0
    disp_cap: float = 10.0
    h1_cap: float = 4.0
    conformal_coeff: float = 5.0
    fit_t_lo: float = 5.0
    fit_t_hi: float = 50.0
    t0_shift: bool = False
    expect_log_growth: bool = False
    corrupt_q_sign: bool = False
    corrupt_db_dt: bool = False
    waive_box_policy: bool = False


_SCHEMA = {
    "scenario": {"name": str, "suites": "suites"},
    "grid": {"kind": str, "n": int, "extent": float},
    "potential": {"gaussians": "gaussians"},
    "timedep": {"type": str, "delta": float, "sigma": float, "a": float,
                "profile": str, "lambda": float},
    "initial_state": {"recipe": str, "center": float, "width": float,
                      "momentum": float, "k": int, "lnorm_target": float},
    "evolution": {"method": str, "dt": float, "t_max": float, "samples": int,
                  "t0": float},
    "overrides": {"t_b": float, "sigma": float, "theta": float, "eps_m": float,
                  "prob_scale": str, "eps_thr": float, "energy_cap": float,
                  "iterated_cap": float, "disp_cap": float, "h1_cap": float,
                  "conformal_coeff": float, "fit_t_lo": float, "fit_t_hi": float,
                  "t0_shift": bool, "expect_log_growth": bool,
                  "corrupt_q_sign": bool, "corrupt_db_dt": bool,
                  "waive_box_policy": bool},
}

_FIELD_OF = {
    ("scenario", "name"): "name", ("scenario", "suites"): "suites",
    ("grid", "kind"): "grid_kind", ("grid", "n"): "grid_n",
    ("grid", "extent"): "grid_extent",
    ("potential", "gaussians"): "potential_terms",
    ("timedep", "type"): "timedep_type", ("timedep", "delta"): "timedep_delta",
    ("timedep", "sigma"): "timedep_sigma", ("timedep", "a"): "timedep_a",
    ("timedep", "profile"): "timedep_profile", ("timedep", "lambda"): "nonlinearity",
    ("initial_state", "recipe"): "state_recipe",
    ("initial_state", "center"): "state_center",
    ("initial_state", "width"): "state_width",
    ("initial_state", "momentum"): "state_momentum",
    ("initial_state", "k"): "state_k",
    ("initial_state", "lnorm_target"): "lnorm_target",
    ("evolution", "method"): "method", ("evolution", "dt"): "dt",
    ("evolution", "t_max"): "t_max", ("evolution", "samples"): "samples",
    ("evolution", "t0"): "t0",
}
for _key in _SCHEMA["overrides"]:
    _FIELD_OF[("overrides", _key)] = _key


def _parse_value(kind, raw: str, path: str):
    raw = raw.strip()
    try:
        if kind is str:
            return raw
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind == "suites":
            names = tuple(s.strip() for s in raw.split(",") if s.strip())
            for s in names:
                if s not in KNOWN_SUITES:
                    raise ConfigError(f"{path}: unknown suite {s!r}")
            return names
        if kind == "gaussians":
            if raw.lower() in ("none", ""):
                return ()
            terms = []
            for chunk in raw.split(";"):
                parts = chunk.split()
                if len(parts) != 3:
                    raise ValueError(chunk)
                terms.append(tuple(float(p) for p in parts))
            return tuple(terms)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: cannot parse value {raw!r}") from exc
    raise ConfigError(f"{path}: unhandled kind")


def parse_config(text: str) -> ScenarioConfig:
    """Parse one scenario document; unknown keys are rejected with their path."""
    values = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, raw = (p.strip() for p in stripped.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigError(f"[{section}]: unknown key {key!r}")
        path = f"[{section}].{key}"
        values[_FIELD_OF[(section, key)]] = _parse_value(_SCHEMA[section][key], raw, path)

    if "name" not in values:
        raise ConfigError("[scenario].name is required")
    config = ScenarioConfig(**values)
    _validate(config)
    return config


def _validate(config: ScenarioConfig):
    if config.grid_kind not in ("line", "radial3d"):
        raise ConfigError(f"[grid].kind: unknown kind {config.grid_kind!r}")
    if config.grid_n < 8 or config.grid_extent <= 0:
        raise ConfigError("[grid]: n >= 8 and extent > 0 required")
    if config.timedep_type not in ("none", "self_similar", "semilinear"):
        raise ConfigError(f"[timedep].type: unknown type {config.timedep_type!r}")
    if config.timedep_type == "self_similar" and not (0.0 < config.timedep_a < 1.0):
        raise ConfigError(f"[timedep].a: need 0 < a < 1, got {config.timedep_a}")
    if config.timedep_type == "semilinear" and config.nonlinearity < 0:
        raise ConfigError("[timedep].lambda: focusing (lambda < 0) is rejected")
    if config.method not in ("eigenbasis_exact", "split_step2"):
        raise ConfigError(f"[evolution].method: unknown method {config.method!r}")
    if config.dt <= 0:
        raise ConfigError("[evolution].dt must be positive")
    if config.state_recipe not in ("gaussian", "eigenstate"):
        raise ConfigError(f"[initial_state].recipe: unknown recipe {config.state_recipe!r}")
    if config.prob_scale not in ("inverse_t", "iterated", "inverse_t2"):
        raise ConfigError(f"[overrides].prob_scale: unknown scale {config.prob_scale!r}")
    for s in config.suites:
        if s not in KNOWN_SUITES:
            raise ConfigError(f"[scenario].suites: unknown suite {s!r}")


def serialize_config(config: ScenarioConfig) -> str:
    """Render a config document that parses back to an equal config."""
    def fmt(value):
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    lines = []
    for section, keys in _SCHEMA.items():
        body = []
        for key, kind in keys.items():
            fname = _FIELD_OF[(section, key)]
            value = getattr(config, fname)
            if kind == "suites":
                body.append(f"{key} = {', '.join(value)}")
            elif kind == "gaussians":
                rendered = "; ".join(" ".join(repr(float(x)) for x in term) for term in value)
                body.append(f"{key} = {rendered or 'none'}")
            else:
                body.append(f"{key} = {fmt(value)}")
        if body:
            lines.append(f"[{section}]")
            lines.extend(body)
            lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# shipped scenario library


def _shipped() -> dict[str, ScenarioConfig]:
    lib = {}
    lib["free"] = ScenarioConfig(
        name="free", suites=("operator_identities", "conformal_identity"),
        grid_kind="line", grid_n=1024, grid_extent=20.0,
        potential_terms=(), state_width=2.5,
        method="eigenbasis_exact", t_max=3.0, samples=12, dt=0.004)
    lib["positive_potential_radial"] = ScenarioConfig(
        name="positive_potential_radial",
        suites=("adaptor", "weighted_decay", "positive_potential", "conformal_identity"),
        grid_kind="radial3d", grid_n=768, grid_extent=120.0,
        potential_terms=((2.0, 1.0, 0.0),), state_width=1.0,
        method="eigenbasis_exact", t_max=14.0, samples=20, dt=0.004,
        fit_t_lo=5.0, fit_t_hi=50.0)
    lib["well_with_barrier"] = ScenarioConfig(
        name="well_with_barrier", suites=("general_potential",),
        grid_kind="radial3d", grid_n=768, grid_extent=120.0,
        potential_terms=((-6.0, 1.0, 1.5), (0.5, 1.0, 3.5)),
        state_width=1.0, method="eigenbasis_exact", t_max=14.0, samples=16)
    lib["self_similar_W"] = ScenarioConfig(
        name="self_similar_W", suites=("timedep", "gronwall", "conformal_identity"),
        grid_kind="radial3d", grid_n=768, grid_extent=120.0,
        potential_terms=((0.5, 1.0, 0.0),),
        timedep_type="self_similar", timedep_delta=0.05, timedep_sigma=2.0,
        timedep_a=0.5, state_width=1.0,
        method="split_step2", dt=0.002, t_max=10.0, samples=16)
    lib["cubic_nls_small"] = ScenarioConfig(
        name="cubic_nls_small", suites=("nls",),
        grid_kind="line", grid_n=2048, grid_extent=240.0,
        potential_terms=((0.2, 1.0, 0.0),),
        timedep_type="semilinear", nonlinearity=1.0,
        state_width=1.0, lnorm_target=0.18,
        method="split_step2", dt=0.001, t_max=30.0, samples=14,
        fit_t_lo=1.0, fit_t_hi=30.0)
    lib["morawetz_radial"] = ScenarioConfig(
        name="morawetz_radial", suites=("morawetz",),
        grid_kind="radial3d", grid_n=640, grid_extent=100.0,
        potential_terms=((1.5, 1.0, 3.0),),
        timedep_type="self_similar", timedep_delta=0.05, timedep_sigma=2.0,
        timedep_a=0.5, state_width=1.0,
        method="split_step2", dt=0.002, t_max=10.0, samples=12)
    return lib


SCENARIO_LIBRARY = _shipped()


def list_scenarios() -> list[str]:
    return sorted(SCENARIO_LIBRARY)


def load_scenario(name: str) -> ScenarioConfig:
    try:
        return SCENARIO_LIBRARY[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; shipped: {list_scenarios()}")


# ---------------------------------------------------------------------------
# the pipeline


@dataclass
class RunArtifact:
    config: ScenarioConfig
    run_dir: str
    passed: bool
    reports: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    series_files: list = field(default_factory=list)


class _Context:
    """Lazy pipeline state shared by the suites of one run."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.grid = make_grid(config.grid_kind, config.grid_n, config.grid_extent)
        self.warnings: list[str] = []
        terms = [Potential.gaussian(*t) for t in config.potential_terms]
        self.potential = sum(terms[1:], terms[0]) if terms else Potential.zero()
        self.w_t = None
        if config.timedep_type == "self_similar":
            self.w_t = TimeDependentPotential.self_similar(
                config.timedep_delta, config.timedep_sigma, config.timedep_a,
                profile=config.timedep_profile)
        self._spec = None
        self._traj = None
        self._adaptor = None
        self._psi0 = None
        self._horizon = None

    @property
    def spec(self) -> SpectralData:
        if self._spec is None:
            if not self.config.potential_terms:
                spec = free_spectral_data(self.grid)
            else:
                h_op = self.hamiltonian()
                spec = diagonalize(h_op)
            eps = self.config.eps_thr if self.config.eps_thr > 0 else None
            self._spec = classify_spectrum(spec, eps_thr=eps)
            n_thr = self._spec.near_threshold_count
            if n_thr:
                self.warnings.append(f"{n_thr} near-threshold eigenvalues present")
        return self._spec

    def hamiltonian(self) -> HermitianOperator:
        m = laplacian(self.grid).matrix + np.diag(self.potential.v(self.grid.points))
        return HermitianOperator(m, self.grid, "H")

    def h_of_t(self, t: float) -> HermitianOperator:
        m = self.hamiltonian().matrix
        if self.w_t is not None:
            m = m + np.diag(self.w_t.w(self.grid.points, t)).astype(complex)
        return HermitianOperator(m, self.grid, f"H({t:g})")

    @property
    def psi0(self):
        if self._psi0 is None:
            c = self.config
            if c.state_recipe == "gaussian":
                psi = gaussian_state(self.grid, c.state_center, c.state_width, c.state_momentum)
            else:
                psi = eigenstate(self.spec, c.state_k)
            if c.lnorm_target > 0:
                psi = psi * (c.lnorm_target / norm(self.grid, psi, "Lnorm"))
            self._psi0 = psi
        return self._psi0

    @property
    def horizon(self) -> float:
        """Box-validity horizon of the initial state under the exact flow."""
        if self._horizon is None:
            self._horizon = validity_horizon(self.spec, self.psi0, self.config.t_max)
            if self._horizon < self.config.t_max and not self.config.waive_box_policy:
                self.warnings.append(
                    f"validity horizon {self._horizon:g} < t_max {self.config.t_max:g};"
                    " estimates truncated at the horizon")
        return self._horizon

    @property
    def t_b(self) -> float:
        return self.config.t_b if self.config.t_b > 0 else 0.5 * self.horizon

    def sample_times(self, lo=None, hi=None, count=None, pad_offsets=()):
        c = self.config
        lo = c.t0 if lo is None else lo
        hi = min(c.t_max, self.horizon) if hi is None else hi
        count = c.samples if count is None else count
        base = np.geomspace(max(lo, 1e-6), max(hi, lo * 1.01), count)
        times = sorted(set(float(t) for t in base) |
                       {float(t + off) for t in base for off in pad_offsets})
        times = np.asarray(times)
        if c.method == "split_step2":
            times = snap_to_lattice(times, c.dt)
            times = times[times > 0]
        return np.unique(times)

    def trajectory(self, times) -> Trajectory:
        c = self.config
        if c.method == "eigenbasis_exact":
            return trajectory_linear(self.spec, self.psi0, times)
        return trajectory_split(self.grid, self.potential, self.w_t, self.psi0,
                                times, c.dt, nonlinearity=c.nonlinearity)

    def adaptor(self):
        if self._adaptor is None:
            q = conformal_Q(self.potential, self.grid)
            if self.config.corrupt_q_sign:
                q = q.flipped()
            self._adaptor = build_adaptor(self.spec, q, self.t_b,
                                          sigma=self.config.sigma,
                                          validity_horizon=self.horizon)
            self.warnings.extend(self._adaptor.warnings)
        return self._adaptor


def _suite_operator_identities(ctx: _Context) -> EstimateReport:
    c = ctx.config
    return operator_identity_suite(c.grid_n, c.grid_extent, ctx.potential,
                                   state_width=c.state_width, dt_ref=c.dt)


def _suite_conformal_identity(ctx: _Context) -> EstimateReport:
    c = ctx.config
    report = EstimateReport("adapted conformal identity")
    shift = 1.0 if c.t0_shift else 0.0
    delta = max(10.0 * c.dt, 0.02) if c.method == "split_step2" else c.dt
    t_lo = (0.5 if c.t0_shift else max(c.t0, 1.0))
    eval_ts = ctx.sample_times(lo=t_lo, hi=min(0.5 * ctx.horizon + c.t0, ctx.horizon),
                               count=4)
    eval_ts = eval_ts[eval_ts + shift - delta > 0]
    all_ts = np.unique(np.concatenate([eval_ts, eval_ts - delta, eval_ts + delta]))
    traj = ctx.trajectory(all_ts)
    adaptor = ctx.adaptor() if ctx.config.potential_terms else None
    cap_scheme = c.conformal_coeff * (delta**2 + ctx.grid.h**2)
    for t in eval_ts:
        resid, bv = conformal_identity_residual(traj, ctx.spec, ctx.potential,
                                                ctx.w_t, adaptor, float(t), delta,
                                                shift=shift)
        report.add(f"identity residual at t={t:g}", resid, cap_scheme + bv,
                   resid <= cap_scheme + bv)

    b_matrix = adaptor.matrix if adaptor is not None else None
    prob = conformal_prob(ctx.grid, ctx.potential, ctx.w_t, b_matrix,
                          "inverse_t", shift=shift, corrupt_db_dt=c.corrupt_db_dt)
    from .observables import heisenberg_consistency, observable_series
    scale_prob = conformal_prob(ctx.grid, ctx.potential, ctx.w_t, b_matrix,
                                c.prob_scale, shift=shift)
    report.series["prob_expectation"] = observable_series(traj, scale_prob, eval_ts)
    t_mid = float(eval_ts[len(eval_ts) // 2])
    h_resid = heisenberg_consistency(traj, prob, ctx.h_of_t, t_mid, delta)
    bv_mid = 0.0
    if adaptor is not None:
        from .adaptors import commutator_remainder
        from .observables import expectation_value
        rem = commutator_remainder(ctx.spec, adaptor)
        bv_mid = abs(expectation_value(ctx.grid, rem, traj.state_at(t_mid)))
    report.add("Heisenberg consistency", h_resid, cap_scheme + bv_mid,
               h_resid <= cap_scheme + bv_mid)

    if not c.potential_terms and ctx.w_t is None:
        series_ts = ctx.sample_times(lo=0.0, hi=min(2.0, c.t_max), count=9)
        traj2 = ctx.trajectory(series_ts)
        vals = []
        for t in series_ts:
            u = traj2.state_at(t)
            x = ctx.grid.points
            from .operators import apply_momentum
            xp_u = x * u - 2.0 * t * apply_momentum(ctx.grid, u)
            vals.append(float(ctx.grid.quad_weight * np.sum(np.abs(xp_u) ** 2)))
        vals = np.asarray(vals)
        drift = float(np.abs(vals - vals[0]).max() / vals[0])
        report.add("free conformal factor constant", drift, 1e-6, drift <= 1e-6)
        report.series["conformal_factor"] = ObservableSeries(series_ts, vals, "conformal factor")

    from .observables import pres_check_with_hooks
    pres, skip_reason = pres_check_with_hooks(traj, prob, eval_ts)
    if pres is None:
        report.warnings.append(skip_reason)
    else:
        report.checks.append(pres)
    return report


def _suite_adaptor(ctx: _Context) -> EstimateReport:
    report = EstimateReport("adaptor operator construction")
    adaptor = ctx.adaptor()
    spec = ctx.spec
    grid = ctx.grid
    b = adaptor.matrix
    scale = max(adaptor.norm_bound, 1e-30)

    herm = float(np.abs(b - b.conj().T).max())
    report.add("hermiticity", herm, 1e-10 * max(1.0, scale), herm <= 1e-10 * max(1.0, scale))

    p_c = projector(spec, "continuous").matrix
    supp = float(np.abs(b - p_c @ b @ p_c).max())
    report.add("continuous-subspace support", supp, 1e-10 * max(1.0, scale),
               supp <= 1e-10 * max(1.0, scale))

    min_eig = float(np.linalg.eigvalsh(b)[0]) if scale > 1e-20 else 0.0
    report.add("positivity (for -Q >= 0)", min_eig, -1e-8 * scale, min_eig >= -1e-8 * scale)

    from .adaptors import commutator_closure_defect
    closure = commutator_closure_defect(spec, ctx.hamiltonian(), adaptor)
    q_scale = max(float(np.abs(adaptor.q.samples).max()), 1e-30)
    report.add("truncated commutator closure", closure, 1e-8 * q_scale,
               closure <= 1e-8 * q_scale)

    horizons = np.linspace(max(adaptor.horizon / 4.0, 0.5), min(ctx.horizon, 2 * adaptor.horizon), 6)
    scan = residual_weighted_scan(spec, adaptor.q, horizons, sigma=ctx.config.sigma)
    monotone = bool(np.all(np.diff(scan) <= 1e-9 + 0.02 * scan[:-1]))
    report.add("weighted residual non-increasing in horizon", float(np.max(np.diff(scan))),
               0.0, monotone, note=f"scan {np.array2string(scan, precision=4)}")
    report.series["residual_scan"] = ObservableSeries(horizons, scan, "weighted residual vs horizon")

    times = ctx.sample_times(lo=max(ctx.config.t0, 0.5), hi=ctx.horizon, count=12)
    from .adaptors import adaptor_expectation_series
    ts, vals = adaptor_expectation_series(adaptor, spec, ctx.psi0, times)
    report.series["adaptor_expectation"] = ObservableSeries(ts, vals, "adaptor expectation")
    floor = -1e-8 * scale
    report.add("expectation nonnegative", float(vals.min()), floor, vals.min() >= floor)
    try:
        slope, _ = fit_decay_rate(ObservableSeries(ts, np.maximum(vals, 1e-300), "bv"),
                                  window=(ts[0], ts[-1]))
        ok = slope <= -0.8
    except ValueError:
        slope, ok = math.nan, False
    report.rates["adaptor_expectation"] = slope
    report.add("expectation decay slope <= -0.8", slope, -0.8, ok)
    return report


def _suite_weighted_decay(ctx: _Context) -> EstimateReport:
    c = ctx.config
    report = EstimateReport("pointwise weighted decay")
    e_cut = min(transit_energy_limit(ctx.grid, c.fit_t_hi),
                resolution_energy_limit(ctx.grid))
    ts = np.geomspace(c.fit_t_lo, c.fit_t_hi, 10)
    vals = np.array([weighted_propagator_norm(ctx.spec, c.sigma, float(t), e_max=e_cut)
                     for t in ts])
    series = ObservableSeries(ts, vals, "weighted propagator norm")
    report.series["weighted_norm"] = series
    slope, width = fit_decay_rate(series)
    report.rates["weighted_norm"] = slope
    report.add("weighted norm decay slope", slope, -0.80,
               -1.25 <= slope <= -0.80, note=f"band E<={e_cut:g}, width {width:.3f}")
    t0_val = weighted_propagator_norm(ctx.spec, c.sigma, 0.0, e_max=None)
    report.add("contraction at t=0", t0_val, 1.0, t0_val <= 1.0 + 1e-9)
    return report


def _suite_positive_potential(ctx: _Context) -> EstimateReport:
    c = ctx.config
    times = ctx.sample_times(lo=max(1.0, c.t0), hi=ctx.horizon, count=max(c.samples, 12))
    traj = ctx.trajectory(times)
    lnorm0 = norm(ctx.grid, ctx.psi0, "Lnorm")
    report = positive_potential_suite(traj, ctx.potential, lnorm0,
                                      fit_window=(max(1.5, c.t0), ctx.horizon),
                                      energy_cap_ratio=c.energy_cap)
    window = traj.valid_window(max(1.5, c.t0), ctx.horizon)
    report.series["l6_norm"] = _series_or_none(traj, window, p=6.0)
    from .suites import conformal_energy_series, first_level_series
    report.series["conformal_energy"] = conformal_energy_series(traj, ctx.potential, window)
    report.series["first_level"] = first_level_series(traj, ctx.potential, window)
    return report


def _series_or_none(traj, times, p):
    from .suites import lp_norm_series
    return lp_norm_series(traj, p, times)


def _suite_general_potential(ctx: _Context) -> EstimateReport:
    c = ctx.config
    p_c = projector(ctx.spec, "continuous").matrix
    psi = p_c @ ctx.psi0
    psi = psi / norm(ctx.grid, psi, "L2")
    horizon = validity_horizon(ctx.spec, psi, c.t_max)
    times = np.geomspace(max(c.t0, 1.0), max(horizon, c.t0 * 1.5), max(c.samples, 12))
    traj = trajectory_linear(ctx.spec, psi, times)
    lens_ts = np.geomspace(1.0, 50.0, 8)
    return general_potential_suite(ctx.spec, laplacian(ctx.grid), ctx.potential,
                                   traj, lens_ts, iterated_cap=c.iterated_cap,
                                   e_max=resolution_energy_limit(ctx.grid))


def _suite_timedep(ctx: _Context) -> EstimateReport:
    c = ctx.config
    adaptor = ctx.adaptor() if c.potential_terms else None
    return timedep_suite(ctx.grid, ctx.spec, ctx.potential, ctx.w_t, ctx.psi0,
                         t_end=min(c.t_max, max(ctx.horizon, 2.0)), dt=c.dt,
                         adaptor=adaptor, disp_cap_ratio=c.disp_cap,
                         h1_cap_ratio=c.h1_cap,
                         expect_log_growth=c.expect_log_growth)


def _suite_gronwall(ctx: _Context) -> EstimateReport:
    c = ctx.config
    report = EstimateReport("Gronwall monitor")
    times = ctx.sample_times(lo=max(1.0, c.t0), hi=ctx.horizon, count=max(c.samples, 12))
    traj = ctx.trajectory(times)
    d_const = max(c.timedep_delta, 1e-3)
    series, ok = gronwall_monitor(traj, c.sigma, d_const)
    report.series["gronwall_monitor"] = series
    report.add(f"monitor under e^(d(t-1)) envelope, d={d_const:g}",
               float(series.values.max()), float(series.values[0] * np.exp(d_const * (series.times[-1] - series.times[0]))),
               ok)
    return report


def _suite_nls(ctx: _Context) -> EstimateReport:
    from .evolution import evolve_nls
    c = ctx.config
    report = EstimateReport("defocusing cubic flow")
    grid = ctx.grid
    psi0 = ctx.psi0
    lam = c.nonlinearity

    times = ctx.sample_times(lo=c.fit_t_lo, hi=min(c.fit_t_hi, c.t_max), count=max(c.samples, 12))
    traj = trajectory_split(grid, ctx.potential, None, psi0, times, c.dt, nonlinearity=lam)
    mass0 = norm(grid, psi0, "L2") ** 2
    masses = np.array([norm(grid, s, "L2") ** 2 for s in traj.states])
    drift = float(np.abs(masses - mass0).max())
    report.add("mass conservation", drift, 1e-10, drift <= 1e-10)

    refs = {}
    for dt_k in (c.dt, c.dt / 2.0, c.dt / 4.0):
        refs[dt_k] = evolve_nls(grid, ctx.potential, lam, psi0, 1.0, dt_k).amplitudes
    d1 = norm(grid, refs[c.dt] - refs[c.dt / 2.0], "L2")
    d2 = norm(grid, refs[c.dt / 2.0] - refs[c.dt / 4.0], "L2")
    ratio = d1 / d2 if d2 > 0 else math.inf
    report.add("order-2 step convergence ratio", ratio, 4.5, 3.5 <= ratio <= 4.5)

    window = traj.valid_window(c.fit_t_lo, c.fit_t_hi)
    linf = ObservableSeries(window, np.array([norm(grid, traj.state_at(t), "Lp", p=math.inf)
                                              for t in window]), "sup norm")
    report.series["sup_norm"] = linf
    slope, width = fit_decay_rate(linf)
    report.rates["sup_norm"] = slope
    report.add("sup-norm decay slope <= -0.3", slope, -0.3, slope <= -0.3,
               note=f"width {width:.3f}")
    return report


def _suite_morawetz(ctx: _Context) -> EstimateReport:
    c = ctx.config
    l6_times = snap_to_lattice(np.geomspace(1.0, min(c.t_max, 10.0), 10), c.dt)
    return morawetz_suite(ctx.grid, ctx.spec, ctx.potential, ctx.w_t, ctx.psi0,
                          eps_m=c.eps_m, a=c.timedep_a, theta=c.theta,
                          horizon=ctx.t_b, t_end=min(c.t_max, 10.0), dt=c.dt,
                          l6_times=l6_times)


_SUITE_RUNNERS = {
    "operator_identities": _suite_operator_identities,
    "conformal_identity": _suite_conformal_identity,
    "adaptor": _suite_adaptor,
    "weighted_decay": _suite_weighted_decay,
    "positive_potential": _suite_positive_potential,
    "general_potential": _suite_general_potential,
    "timedep": _suite_timedep,
    "gronwall": _suite_gronwall,
    "nls": _suite_nls,
    "morawetz": _suite_morawetz,
}

#: suites that presume an H with no spectrum at zero
_NEEDS_CLEAN_THRESHOLD = {"adaptor", "weighted_decay", "general_potential"}


def run_scenario(config: ScenarioConfig, out_dir: str) -> RunArtifact:
    """Execute every selected suite and persist series, report and manifest.

    The pipeline is deterministic: identical config and version produce
    byte-identical series files.
    """
    run_dir = os.path.join(out_dir, config.name)
    os.makedirs(run_dir, exist_ok=True)
    ctx = _Context(config)
    reports: dict[str, EstimateReport] = {}
    skipped: dict[str, str] = {}

    for suite in config.suites:
        if suite in _NEEDS_CLEAN_THRESHOLD and ctx.spec.near_threshold_count > 0:
            skipped[suite] = "near-threshold spectrum: the suite assumes no zero eigenvalues"
            continue
        reports[suite] = _SUITE_RUNNERS[suite](ctx)

    passed = all(r.passed for r in reports.values()) and bool(reports)
    artifact = RunArtifact(config=config, run_dir=run_dir, passed=passed, reports=reports)

    for suite, report in reports.items():
        for key, series in report.series.items():
            if series is None:
                continue
            path = os.path.join(run_dir, f"{suite}__{key}.tsv")
            _write_series(path, series)
            artifact.series_files.append(path)

    manifest = {
        "name": config.name,
        "version": __version__,
        "passed": str(passed).lower(),
        "suites_run": ", ".join(reports) or "none",
        "suites_skipped": "; ".join(f"{k}: {v}" for k, v in skipped.items()) or "none",
        "validity_horizon": repr(ctx._horizon) if ctx._horizon is not None else "not probed",
        "warnings": "; ".join(ctx.warnings + sum((r.warnings for r in reports.values()), [])) or "none",
    }
    artifact.manifest = manifest
    with open(os.path.join(run_dir, "manifest.txt"), "w") as fh:
        for key, value in manifest.items():
            fh.write(f"{key} = {value}\n")
        fh.write("\n# config echo\n")
        for line in serialize_config(config).splitlines():
            fh.write(f"# {line}\n")

    with open(os.path.join(run_dir, "report.txt"), "w") as fh:
        for suite, report in reports.items():
            fh.write(report.render() + "\n\n")
        for suite, reason in skipped.items():
            fh.write(f"{suite}: SKIPPED ({reason})\n")
    return artifact


def _write_series(path: str, series: ObservableSeries):
    with open(path, "w") as fh:
        fh.write(f"# time\t{series.label}\n")
        for t, v in zip(series.times, series.values):
            fh.write(f"{t:.17e}\t{v:.17e}\n")


def render_report(run_dir: str) -> str:
    """Summary text of a finished run (manifest header plus suite table)."""
    manifest_path = os.path.join(run_dir, "manifest.txt")
    report_path = os.path.join(run_dir, "report.txt")
    if not os.path.isfile(manifest_path):
        raise ConfigError(f"no run found at {run_dir!r}")
    with open(manifest_path) as fh:
        manifest = fh.read()
    body = ""
    if os.path.isfile(report_path):
        with open(report_path) as fh:
            body = fh.read()
    return manifest + "\n" + body
