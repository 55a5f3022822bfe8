"""Experiment configuration, scenario registry and artifact writers."""
from __future__ import annotations

import configparser
import json
import logging
import math
import os
import re
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import diagnostics as dg
from .probes import (ConeParams, commutator_probe, cone_probe, identity_suite,
                     random_bandlimited, stein_derivative)
from .solver import (BlowUpError, SolverConfig, Trajectory, bo1d_soliton, evolve,
                     soliton_shape_error)
from .spectral import (BoundaryDecayWarning, Grid, RealField, fractional, inner, l2_norm,
                       make_grid, riesz, semigroup)

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "HBOLAB_OUTPUT_ROOT"

__all__ = [
    "ConfigError", "InitialData", "ExperimentConfig", "parse_config", "serialize_config",
    "SCENARIOS", "run_scenario", "emit_plot_data", "build_initial_data", "Criterion",
    "ScenarioResult", "OUTPUT_ROOT_ENV", "stein_family_study", "commutator_sweep",
]


class ConfigError(ValueError):
    pass


# -- config model --------------------------------------------------------------------------

INITIAL_KINDS = ("gaussian", "dx1_gaussian", "soliton", "custom_file")


@dataclass(frozen=True)
class InitialData:
    """Tagged initial datum.

    gaussian:      amplitude * exp(-|x - center|^2 / width^2)
    dx1_gaussian:  d/dx_1 of the gaussian above (zero mean)
    soliton:       4c / (1 + c^2 (x - x0)^2), d = 1
    custom_file:   values read with numpy.load (.npy) or numpy.loadtxt
    """

    kind: str = "gaussian"
    center: tuple = ()
    width: float = 1.0
    amplitude: float = 1.0
    c: float = 1.0
    x0: float = 0.0
    path: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    grid: tuple
    solver: SolverConfig
    initial_data: InitialData
    decay_exponents: tuple = (0.0, 1.0, 2.0)
    weight_N_list: tuple = (2.0, 4.0)
    seed: int = 0
    output_dir: str = "results"
    probe: dict = field(default_factory=dict)

    def make_grid(self) -> Grid:
        return make_grid(*self.grid)


_PI_RE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)?\s*\*?\s*pi\s*$")


def _num(text: str) -> float:
    m = _PI_RE.match(text)
    if m:
        return float(m.group(1) or 1.0) * math.pi
    return float(text)


def _int(text: str) -> int:
    v = int(text)
    return v


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(_num(p) for p in text.split(","))


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCHEMA: dict[str, dict[str, Callable[[str], object]]] = {
    "experiment": {"scenario": str, "seed": _int, "output_dir": str,
                   "decay_exponents": _floats, "weight_N_list": _floats},
    "grid": {"d": _int, "n": _int, "L": _num},
    "solver": {"dt": _num, "T": _num, "dealias_fraction": _num, "snapshot_every": _int,
               "nonlinear": _bool},
    "initial_data": {"kind": str, "center": _floats, "width": _num, "amplitude": _num,
                     "c": _num, "x0": _num, "path": str},
    "probe": {"cone_cap": _num, "cone_ratio": _num, "pairs": _int, "bandwidth": _int,
              "stein_b": _num},
}

DEFAULTS: dict[str, dict] = {
    "soliton_1d": {"grid": (1, 2048, 64 * math.pi), "dt": 1e-3, "T": 5.0,
                   "initial": InitialData("soliton", c=1.0, x0=0.0)},
    "conservation_2d": {"grid": (2, 256, 16.0), "dt": 5e-4, "T": 1.0,
                        "initial": InitialData("gaussian", width=1.0, amplitude=1.0)},
    "moment_law": {"grid": (2, 256, 16.0), "dt": 5e-4, "T": 0.5,
                   "initial": InitialData("dx1_gaussian", width=1.0, amplitude=1.0)},
    "t_star_demo": {"grid": (1, 32768, 1000.0), "dt": 1e-3, "T": 1.8,
                    "initial": InitialData("gaussian", center=(-0.5,), width=1.0, amplitude=2.0)},
    "decay_dichotomy": {"grid": (2, 256, 80.0), "dt": 1e-2, "T": 1.0,
                        "initial": InitialData("gaussian", width=1.0, amplitude=1.0)},
    "commutator_sweep": {"grid": (2, 128, math.pi), "dt": 1.0, "T": 1.0,
                         "initial": InitialData("gaussian")},
    "identity_suite": {"grid": (2, 128, 12.0), "dt": 1.0, "T": 1.0,
                       "initial": InitialData("gaussian")},
}


def _line_of(text: str, section: str, key: str | None = None) -> int:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if key is not None and cur == section:
            k = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            if k == key:
                return i
    return 0


def parse_config(text: str) -> ExperimentConfig:
    """Parse an INI document (sections experiment, grid, solver, initial_data, probe)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw: dict[str, dict] = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"line {_line_of(text, sec)}: unknown section [{sec}]")
        raw[sec] = {}
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"line {_line_of(text, sec, key)}: unknown key {sec}.{key}")
            try:
                raw[sec][key] = SCHEMA[sec][key](val)
            except (TypeError, ValueError) as exc:
                raise ConfigError(
                    f"line {_line_of(text, sec, key)}: bad value for {sec}.{key}: {exc}") from None
    exp = raw.get("experiment", {})
    scenario = exp.get("scenario")
    if scenario is None:
        raise ConfigError("missing experiment.scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"line {_line_of(text, 'experiment', 'scenario')}: unknown scenario "
                          f"{scenario!r}; expected one of {sorted(SCENARIOS)}")
    base = DEFAULTS[scenario]

    def check(cond, sec, key, msg):
        if not cond:
            raise ConfigError(f"line {_line_of(text, sec, key)}: {sec}.{key} {msg}")

    gsec = raw.get("grid", {})
    d, n, L = base["grid"]
    d, n, L = gsec.get("d", d), gsec.get("n", n), gsec.get("L", L)
    check(d in (1, 2, 3), "grid", "d", f"must be 1, 2 or 3 (got {d})")
    check(n >= 8 and (n & (n - 1)) == 0, "grid", "n", f"must be a power of two >= 8 (got {n})")
    check(L > 0, "grid", "L", f"must be positive (got {L})")

    ssec = raw.get("solver", {})
    dt, T = ssec.get("dt", base["dt"]), ssec.get("T", base["T"])
    check(dt > 0, "solver", "dt", f"must be positive (got {dt})")
    check(T >= dt, "solver", "T", f"must be >= dt (got {T})")
    frac = ssec.get("dealias_fraction", 2.0 / 3.0)
    check(0 < frac <= 1, "solver", "dealias_fraction", f"must lie in (0, 1] (got {frac})")
    snap = ssec.get("snapshot_every")
    check(snap is None or snap >= 1, "solver", "snapshot_every", f"must be >= 1 (got {snap})")
    solver = SolverConfig(dt, T, frac, snap, ssec.get("nonlinear", True))

    isec = raw.get("initial_data", {})
    init = replace(base["initial"], **isec)
    check(init.kind in INITIAL_KINDS, "initial_data", "kind",
          f"must be one of {INITIAL_KINDS} (got {init.kind!r})")
    if not init.center:
        init = replace(init, center=(0.0,) * d)
    check(len(init.center) == d, "initial_data", "center", f"needs {d} components")
    check(init.width > 0, "initial_data", "width", "must be positive")
    check(init.c > 0, "initial_data", "c", "must be positive")
    check(init.kind != "soliton" or d == 1, "initial_data", "kind", "soliton requires d = 1")
    check(init.kind != "custom_file" or bool(init.path), "initial_data", "path",
          "is required for custom_file")

    decay = exp.get("decay_exponents", (0.0, 1.0, 2.0))
    check(all(r >= 0 for r in decay), "experiment", "decay_exponents", "must be >= 0")
    wN = exp.get("weight_N_list", (2.0, 4.0))
    check(all(v > 0 for v in wN), "experiment", "weight_N_list", "must be positive")
    probe = dict(raw.get("probe", {}))
    for key in ("cone_cap", "cone_ratio", "pairs", "bandwidth"):
        if key in probe:
            check(probe[key] > 0, "probe", key, "must be positive")
    if "stein_b" in probe:
        check(0 < probe["stein_b"] < 1, "probe", "stein_b", "must lie in (0, 1)")
    return ExperimentConfig(scenario, (d, n, float(L)), solver, init, tuple(decay), tuple(wN),
                            exp.get("seed", 0), exp.get("output_dir", f"results/{scenario}"),
                            probe)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(float(x)) for x in v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    s = cfg.solver
    i = cfg.initial_data
    sections = {
        "experiment": {"scenario": cfg.scenario, "seed": cfg.seed, "output_dir": cfg.output_dir,
                       "decay_exponents": cfg.decay_exponents,
                       "weight_N_list": cfg.weight_N_list},
        "grid": {"d": cfg.grid[0], "n": cfg.grid[1], "L": cfg.grid[2]},
        "solver": {"dt": s.dt, "T": s.T, "dealias_fraction": s.dealias_fraction,
                   "snapshot_every": s.snapshot_every, "nonlinear": s.nonlinear},
        "initial_data": {"kind": i.kind, "center": i.center, "width": i.width,
                         "amplitude": i.amplitude, "c": i.c, "x0": i.x0},
        "probe": dict(sorted(cfg.probe.items())),
    }
    if i.path:
        sections["initial_data"]["path"] = i.path
    lines = []
    for sec, kv in sections.items():
        if not kv:
            continue
        lines.append(f"[{sec}]")
        lines += [f"{k} = {_fmt(v)}" for k, v in kv.items()]
        lines.append("")
    return "\n".join(lines)


# -- initial data ----------------------------------------------------------------------------

def build_initial_data(datum: InitialData, grid: Grid) -> RealField:
    if datum.kind == "soliton":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryDecayWarning)
            return bo1d_soliton(datum.c, datum.x0, grid)
    if datum.kind in ("gaussian", "dx1_gaussian"):
        c = datum.center or (0.0,) * grid.d
        w2 = datum.width ** 2

        def gauss(*x):
            return datum.amplitude * np.exp(-sum((xi - ci) ** 2 for xi, ci in zip(x, c)) / w2)

        if datum.kind == "gaussian":
            return grid.field(gauss)
        return grid.field(lambda *x: -2.0 * (x[0] - c[0]) / w2 * gauss(*x))
    if datum.kind == "custom_file":
        p = Path(datum.path)
        vals = np.load(p) if p.suffix == ".npy" else np.loadtxt(p)
        return RealField(grid, np.asarray(vals, dtype=float))
    raise ValueError(f"unknown initial data kind {datum.kind!r}")


# -- results ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class Criterion:
    name: str
    value: float
    threshold: float
    relation: str = "<="

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if not math.isfinite(v):
            return False
        return {"<=": v <= t, ">=": v >= t, "<": v < t}[self.relation]

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "relation": self.relation, "passed": self.passed}


@dataclass
class ScenarioResult:
    scenario: str
    criteria: list
    metrics: dict
    series: dict = field(default_factory=dict)
    trajectory: Trajectory | None = None
    runtime: float = 0.0
    blowup: str | None = None

    @property
    def passed(self) -> bool:
        return self.blowup is None and all(c.passed for c in self.criteria)

    def summary(self, cfg: ExperimentConfig) -> dict:
        return {"scenario": self.scenario, "seed": cfg.seed,
                "config": serialize_config(cfg).splitlines(),
                "passed": self.passed, "blowup": self.blowup,
                "criteria": [c.to_dict() for c in self.criteria],
                "metrics": self.metrics}


def _traj_drifts(traj: Trajectory) -> dict:
    I = np.array([r.I for r in traj.records])
    M = np.array([r.M for r in traj.records])
    H = np.array([r.H for r in traj.records])
    return {"I_drift": float(np.abs(I - I[0]).max()),
            "M_rel_drift": float(np.abs(M / M[0] - 1).max()),
            "H_rel_drift": float(np.abs(H / H[0] - 1).max())}


def _moment_series(traj: Trajectory, l: int) -> list:
    d = traj.grid.d
    b = tuple(int(a == l - 1) for a in range(d))
    return [(t, r.moments[b]) for t, r in zip(traj.times, traj.records)]


# -- scenarios -------------------------------------------------------------------------------

def _soliton(cfg: ExperimentConfig) -> ScenarioResult:
    g = cfg.make_grid()
    u0 = build_initial_data(cfg.initial_data, g)
    traj = evolve(u0, cfg.solver, cfg.decay_exponents)
    c = cfg.initial_data.c
    err, shift = soliton_shape_error(traj.states[-1], u0, c * cfg.solver.T)
    drifts = _traj_drifts(traj)
    crit = [Criterion("shape_error", err, 1e-4), Criterion("I_drift", drifts["I_drift"], 1e-12)]
    metrics = {"shape_error": err, "fitted_shift": shift, "expected_shift": c * cfg.solver.T,
               **drifts}
    series = {"mass": ("t I", [(t, r.I) for t, r in zip(traj.times, traj.records)]),
              "profile_final": ("x u", list(zip(g.x1d.tolist(), traj.states[-1].values.tolist())))}
    return ScenarioResult(cfg.scenario, crit, metrics, series, traj)


def _conservation(cfg: ExperimentConfig) -> ScenarioResult:
    g = cfg.make_grid()
    u0 = build_initial_data(cfg.initial_data, g)
    traj = evolve(u0, cfg.solver, cfg.decay_exponents)
    dr = _traj_drifts(traj)
    crit = [Criterion("I_drift", dr["I_drift"], 1e-12),
            Criterion("M_rel_drift", dr["M_rel_drift"], 1e-6),
            Criterion("H_rel_drift", dr["H_rel_drift"], 1e-5)]
    wn = {}
    for N in cfg.weight_N_list:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            w = dg.truncated_weight(g, N)
        wn[f"{N:g}"] = [dg.weighted_l2(traj.states[-1], w, r) for r in cfg.decay_exponents]
    series = {k: ("t " + k, [(t, getattr(r, k)) for t, r in zip(traj.times, traj.records)])
              for k in ("I", "M", "H")}
    return ScenarioResult(cfg.scenario, crit, {**dr, "truncated_weighted_norms_final": wn},
                          series, traj)


def _moment_law(cfg: ExperimentConfig) -> ScenarioResult:
    g = cfg.make_grid()
    u0 = build_initial_data(cfg.initial_data, g)
    traj = evolve(u0, cfg.solver, cfg.decay_exponents)
    M0 = traj.records[0].M
    s1, _ = dg.moment_slope(traj, 1)
    crit = [Criterion("slope_l1_rel_error", abs(s1 - M0 / 2) / (M0 / 2), 1e-3)]
    metrics = {"M0": M0, "slope_l1": s1, "expected_slope_l1": M0 / 2,
               "residual_l1": dg.moment_identity_residual(traj, 1)}
    series = {"moment_l1": ("t m_l1", _moment_series(traj, 1))}
    if g.d >= 2:
        m2 = np.array([v for _, v in _moment_series(traj, 2)])
        scale = max(1.0, float(np.abs(m2).max()), math.sqrt(M0))
        s2, _ = dg.moment_slope(traj, 2)
        crit.append(Criterion("moment_l2_variation_scaled", float(np.ptp(m2)) / scale, 1e-6))
        crit.append(Criterion("slope_l2_scaled", abs(s2) / scale, 1e-6))
        metrics.update(slope_l2=s2, residual_l2=dg.moment_identity_residual(traj, 2),
                       scale_l2=scale)
        series["moment_l2"] = ("t m_l2", _moment_series(traj, 2))
    return ScenarioResult(cfg.scenario, crit, metrics, series, traj)


def _t_star(cfg: ExperimentConfig) -> ScenarioResult:
    """Zero of int_0^t int x_1 u against t*, plus the two C_1 quadratures.

    The Duhamel route reads a frequency derivative at 0 and is exact only for
    zero-mean data, so the route comparison also runs on the zero-mean
    companion ``d/dx_1`` of the configured Gaussian (same grid, same solver).
    """
    g = cfg.make_grid()
    u0 = build_initial_data(cfg.initial_data, g)
    ts = dg.t_star(u0)
    if not ts > 0:
        raise ConfigError("t_star_demo needs int x_1 u0 < 0")
    traj = evolve(u0, cfg.solver, cfg.decay_exponents)
    cf = dg.c_functional(traj)
    zc = dg.first_zero_crossing(cf.times, cf.ibp)
    rel = abs(zc - ts) / ts if zc is not None else float("inf")
    crit = [Criterion("zero_crossing_rel_error", rel, 1e-2)]
    metrics = {"t_star": ts, "zero_crossing": zc, "c1_rel_discrepancy_datum":
               cf.relative_discrepancy, "c1_closed_form_rel_error_datum": cf.closed_form_error}
    series = {"c1_ibp": ("t c1", list(zip(cf.times.tolist(), cf.ibp.tolist()))),
              "c1_duhamel": ("t c1", list(zip(cf.times.tolist(), cf.duhamel.tolist())))}
    if cfg.initial_data.kind != "dx1_gaussian":
        # amplitude 4 keeps the companion's t* short enough that radiation stays in the box
        comp = replace(cfg.initial_data, kind="dx1_gaussian", amplitude=4.0)
        z0 = build_initial_data(comp, g)
        tz = dg.t_star(z0)
        sol = replace(cfg.solver, T=max(cfg.solver.dt, 1.25 * tz))
        ztraj = evolve(z0, sol, cfg.decay_exponents)
        zcf = dg.c_functional(ztraj)
        zzc = dg.first_zero_crossing(zcf.times, zcf.ibp)
        metrics.update(zero_mean_t_star=tz, zero_mean_zero_crossing=zzc,
                       c1_rel_discrepancy=zcf.relative_discrepancy,
                       c1_closed_form_rel_error=zcf.closed_form_error)
        crit.append(Criterion("c1_route_rel_discrepancy", zcf.relative_discrepancy, 1e-4))
    else:
        crit.append(Criterion("c1_route_rel_discrepancy", cf.relative_discrepancy, 1e-4))
    return ScenarioResult(cfg.scenario, crit, metrics, series, traj)


def _dichotomy(cfg: ExperimentConfig) -> ScenarioResult:
    g = cfg.make_grid()
    if g.d < 2:
        raise ConfigError("decay_dichotomy needs d >= 2")
    base = cfg.initial_data
    spec_nz = replace(base, kind="gaussian") if base.kind == "dx1_gaussian" else base
    u_nz = build_initial_data(spec_nz, g)
    u_z = build_initial_data(replace(spec_nz, kind="dx1_gaussian"), g)
    cone = ConeParams(ratio=cfg.probe.get("cone_ratio", 2 ** 0.25), cap=cfg.probe.get("cone_cap"))
    t = cfg.solver.T
    rep_nz = cone_probe(semigroup(u_nz, t), t, cone)
    rep_z = cone_probe(semigroup(u_z, t), t, cone)
    crit = [Criterion("exponent_nonzero_mean_deviation", abs(rep_nz.fitted_exponent + 1.0), 0.15),
            Criterion("exponent_zero_mean", rep_z.fitted_exponent, -0.3, ">=")]
    metrics = {"nonzero_mean": rep_nz.to_dict(), "zero_mean": rep_z.to_dict()}
    series = {"cone_nonzero_mean": ("log_xi log_mag", rep_nz.series()),
              "cone_zero_mean": ("log_xi log_mag", rep_z.series())}
    return ScenarioResult(cfg.scenario, crit, metrics, series)


ALPHAS_2D = ((1, 0), (1, 1), (2, 0))


def commutator_sweep(grid: Grid, pairs: int, bandwidth: int, seed: int,
                     alphas: Sequence[tuple] = ALPHAS_2D) -> dict:
    """Max ratio per alpha over ``pairs`` random band-limited (a, f) pairs on ``grid``."""
    out = {}
    for alpha in alphas:
        rng = np.random.default_rng(seed)
        ratios = []
        for _ in range(pairs):
            a = random_bandlimited(grid, bandwidth, rng, zero_mean=False)
            f = random_bandlimited(grid, bandwidth, rng)
            ratios.append(commutator_probe(a, f, alpha).ratio)
        out[alpha] = ratios
    return out


def _commutator(cfg: ExperimentConfig) -> ScenarioResult:
    d, n, L = cfg.grid
    if d != 2:
        raise ConfigError("commutator_sweep runs in d = 2")
    pairs = int(cfg.probe.get("pairs", 20))
    bw = int(cfg.probe.get("bandwidth", 8))
    coarse = commutator_sweep(make_grid(d, n, L), pairs, bw, cfg.seed)
    fine = commutator_sweep(make_grid(d, 2 * n, L), pairs, bw, cfg.seed)
    crit, metrics = [], {}
    rng = np.random.default_rng(cfg.seed + 1)
    g = make_grid(d, n, L)
    a = random_bandlimited(g, bw, rng, zero_mean=False)
    f = random_bandlimited(g, bw, rng)
    for alpha in ALPHAS_2D:
        key = "alpha_" + "".join(map(str, alpha))
        mc, mf = max(coarse[alpha]), max(fine[alpha])
        change = abs(mf - mc) / mc
        r1 = commutator_probe(a, f, alpha).ratio
        r2 = commutator_probe(3.7 * a, f, alpha).ratio
        scale = abs(r2 - r1) / r1
        crit += [Criterion(f"{key}_max_ratio_finite", float(np.isfinite(coarse[alpha]).all()), 1.0, ">="),
                 Criterion(f"{key}_refinement_change", change, 0.1, "<"),
                 Criterion(f"{key}_scaling_invariance", scale, 1e-12)]
        metrics[key] = {"max_ratio": mc, "max_ratio_refined": mf, "ratios": coarse[alpha]}
    return ScenarioResult(cfg.scenario, crit, metrics)


def stein_family_study(n: int = 64, L: float = 8.0, b: float = 0.5, members: int = 10) -> dict:
    """Two-route norm ratios and the Leibniz-type inequality on a 1D Gaussian family."""
    g = make_grid(1, n, L)
    fam = []
    for j in range(members):
        w = 0.6 + 0.08 * j
        c = -1.0 + 0.2 * j
        fam.append(g.field(lambda x, w=w, c=c: np.exp(-((x - c) / w) ** 2)))
    ratios, lhs_rhs = [], []
    stein = [stein_derivative(f, b) for f in fam]
    for f, sf in zip(fam, stein):
        route_a = l2_norm(f) + l2_norm(sf)
        route_b = l2_norm(f) + l2_norm(fractional(f, b))
        ratios.append(route_a / route_b)
    for j in range(members):
        f, h = fam[j], fam[(j + 1) % members]
        lhs = l2_norm(stein_derivative(f * h, b))
        rhs = l2_norm(f * stein[(j + 1) % members]) + l2_norm(h * stein[j])
        lhs_rhs.append(lhs / rhs)
    return {"ratios": ratios, "constant": max(ratios), "constant_min": min(ratios),
            "leibniz_ratios": lhs_rhs}


def _identity(cfg: ExperimentConfig) -> ScenarioResult:
    g = cfg.make_grid()
    t0 = time.perf_counter()
    rep = identity_suite(g, cfg.seed)
    crit = [Criterion(r.name, r.residual, r.threshold) for r in rep.results]
    rng = np.random.default_rng(cfg.seed)
    algebra = {}
    for d, n in ((1, 32), (2, 32), (3, 32)):
        gd = make_grid(d, n, 2 * math.pi)
        f = random_bandlimited(gd, 6, rng)
        h = random_bandlimited(gd, 6, rng)
        s = sum((riesz(riesz(f, l), l) for l in range(1, d + 1)), gd.zero_field())
        algebra[f"riesz_square_sum_d{d}"] = l2_norm(s + f) / l2_norm(f)
        algebra[f"riesz_antisymmetry_d{d}"] = (abs(inner(riesz(f, 1), h) + inner(f, riesz(h, 1)))
                                               / (l2_norm(f) * l2_norm(h)))
        algebra[f"semigroup_unitarity_d{d}"] = abs(l2_norm(semigroup(f, 1.3)) / l2_norm(f) - 1)
        algebra[f"semigroup_group_d{d}"] = (l2_norm(semigroup(semigroup(f, 0.4), 0.9)
                                                    - semigroup(f, 1.3)) / l2_norm(f))
    crit += [Criterion(k, v, 1e-12) for k, v in algebra.items()]
    b = cfg.probe.get("stein_b", 0.5)
    st = stein_family_study(64, b=b)
    st2 = stein_family_study(128, b=b)
    change = abs(st2["constant"] - st["constant"]) / st["constant"]
    crit.append(Criterion("stein_constant_refinement_change", change, 0.2))
    crit.append(Criterion("stein_leibniz_max_ratio", max(st["leibniz_ratios"]), 1.0))
    metrics = {"identities": rep.to_dict()["identities"], "algebra": algebra,
               "stein": {"n64": st, "n128": st2}}
    return ScenarioResult(cfg.scenario, crit, metrics)


SCENARIOS: dict[str, Callable[[ExperimentConfig], ScenarioResult]] = {
    "soliton_1d": _soliton,
    "conservation_2d": _conservation,
    "moment_law": _moment_law,
    "t_star_demo": _t_star,
    "decay_dichotomy": _dichotomy,
    "commutator_sweep": _commutator,
    "identity_suite": _identity,
}


# -- artifacts -------------------------------------------------------------------------------

def emit_plot_data(series: Sequence[tuple], path, header: str = "x y") -> Path:
    """Write two-column text with a one-line ``# header``."""
    rows = list(series)
    if not rows:
        raise ValueError("empty series")
    p = Path(path)
    lines = [f"# {header}"] + [f"{float(x):.17g} {float(y):.17g}" for x, y in rows]
    p.write_text("\n".join(lines) + "\n")
    return p


def output_dir_for(cfg: ExperimentConfig) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    out = Path(cfg.output_dir)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def _write_artifacts(cfg: ExperimentConfig, res: ScenarioResult, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    if res.trajectory is not None:
        (out / "diagnostics.csv").write_text(
            dg.records_to_csv(res.trajectory.records, cfg.grid[0], cfg.decay_exponents))
    (out / "summary.json").write_text(json.dumps(res.summary(cfg), indent=2, sort_keys=True,
                                                 default=_json_default) + "\n")
    for name, (header, rows) in res.series.items():
        if rows:
            emit_plot_data(rows, out / f"plot_{name}.dat", header)
    (out / "run_info.json").write_text(json.dumps({"runtime_s": res.runtime}) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def run_scenario(cfg: ExperimentConfig, write: bool = True) -> tuple[int, ScenarioResult]:
    """Run one scenario; returns (exit status, result).  0 pass, 1 criteria failed, 3 blow-up."""
    fn = SCENARIOS[cfg.scenario]
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryDecayWarning)
            res = fn(cfg)
    except BlowUpError as exc:
        res = ScenarioResult(cfg.scenario, [], {"blowup_time": exc.t}, {}, exc.partial,
                             blowup=str(exc))
    res.runtime = time.perf_counter() - t0
    log.info("%s finished in %.1f s", cfg.scenario, res.runtime)
    if write:
        _write_artifacts(cfg, res, output_dir_for(cfg))
    if res.blowup:
        return 3, res
    return (0 if res.passed else 1), res
