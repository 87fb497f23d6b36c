"""Configuration layer and scenario runners behind the command-line interface.

A run is described by a JSON file mirroring RunConfig; unknown keys are
rejected, complex values are written as [re, im] (a bare number means a real
value), and scalar fields may be overridden from the command line with
dotted paths (``time.dt=0.002``).  Output artifacts are plot-ready CSV and
plain-text reports, written with 17 significant digits and newline endings
so identical configs produce byte-identical files.

Exit codes: 0 success, 2 config errors, 3 physics-tolerance failures
(verify/algebra-check), 4 numerical failures.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import states
from .coefficients import (
    LabCoefficients,
    ModelParams,
    NormalModeData,
    ReservoirSpectrum,
    coefficients_from_spectrum,
    effective_detunings,
    normal_modes,
    physicality_screen,
)
from .errors import (
    CavityDuoError,
    ParseError,
    PhysicalityWarning,
    TableMismatch,
    ValidationError,
)
from .lindblad import (
    LiouvillianSpec,
    build_cat,
    build_coherent,
    evolve,
    export_density_matrix,
    verify_commutator_table,
)
from .propagator import aux_functions, constants

SCENARIOS = (
    "evolve-coherent",
    "evolve-cat",
    "sweep",
    "verify",
    "coefficients",
    "algebra-check",
)

SWEEPABLE = (
    "g", "omega_a", "omega_b",
    "k_aa", "k_ab", "k_ba", "k_bb",
    "d_aa", "d_ab", "d_ba", "d_bb",
)

TRAJECTORY_HEADER = (
    "t,va_re,va_im,vb_re,vb_im,a_re,a_im,b_re,b_im,"
    "purity_analytic,purity_oracle,delta_analytic,n_total,min_eig,trace_err"
)

SWEEP_HEADER = "value,slow_rate,fast_rate,final_delta,max_residual"

#: Windows (fractions of the run) used to read decay rates off log-amplitude
#: traces: the slow rate from the tail, the fast rate from the earliest part
#: before the slow component takes over.
SLOW_FIT_WINDOW = (0.75, 1.0)
FAST_FIT_WINDOW = (0.0, 0.10)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_NUMERICAL = 4


@dataclass(frozen=True)
class Tolerances:
    amplitude: float = 1e-6
    purity: float = 1e-5
    delta: float = 1e-5
    trace_distance: float = 1e-5


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    steps: int


@dataclass
class RunConfig:
    scenario: str
    params: ModelParams
    coeffs: LabCoefficients | None
    spectrum_path: Path | None
    tau_c: float | None
    v_a: complex | None
    v_b: complex | None
    w: complex | None
    phi: float
    t_max: float
    dt: float
    sample_every: int
    dim_a: int
    dim_b: int
    sweep: SweepSpec | None
    trials: int | None
    output: Path
    seed: int
    tolerances: Tolerances
    warnings: list


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _as_complex(value, field, errors):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    errors.append(f"{field}: expected a number or [re, im], got {value!r}")
    return 0j


def _as_float(value, field, errors):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    errors.append(f"{field}: expected a number, got {value!r}")
    return 0.0


def _as_int(value, field, errors):
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    errors.append(f"{field}: expected an integer, got {value!r}")
    return 0


def _check_keys(mapping, allowed, context, errors):
    for key in mapping:
        if key not in allowed:
            errors.append(f"{context}: unknown key '{key}'")


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply 'dotted.path=value' overrides to the raw config mapping."""
    for item in overrides or ():
        if "=" not in item:
            raise ParseError(f"override '{item}' must look like key=value")
        path, _, literal = item.partition("=")
        try:
            value = json.loads(literal)
        except json.JSONDecodeError:
            value = literal
        node = raw
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ParseError(f"override '{item}': '{part}' is not an object")
        node[parts[-1]] = value
    return raw


def parse_config(path, overrides=None, scenario: str | None = None) -> RunConfig:
    """Load, override, and validate a run configuration.

    Raises:
        ParseError: unreadable file or malformed JSON/override syntax.
        ValidationError: every violated invariant, collected in one message.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    raw = apply_overrides(raw, overrides)

    errors: list[str] = []
    _check_keys(
        raw,
        {
            "scenario", "params", "coeffs", "spectrum", "initial", "time",
            "cutoff", "sweep", "trials", "output", "seed", "tolerances",
        },
        "config",
        errors,
    )

    cfg_scenario = raw.get("scenario")
    if scenario is not None and cfg_scenario is not None and scenario != cfg_scenario:
        errors.append(
            f"scenario mismatch: CLI says '{scenario}', config says '{cfg_scenario}'"
        )
    scenario = scenario or cfg_scenario
    if scenario not in SCENARIOS:
        errors.append(f"scenario must be one of {', '.join(SCENARIOS)}; got {scenario!r}")
        raise ValidationError(errors)

    params_raw = raw.get("params")
    params = None
    if not isinstance(params_raw, dict):
        errors.append("params: required object with omega_a, omega_b, g")
    else:
        _check_keys(params_raw, {"omega_a", "omega_b", "g"}, "params", errors)
        try:
            params = ModelParams(
                omega_a=_as_float(params_raw.get("omega_a"), "params.omega_a", errors),
                omega_b=_as_float(params_raw.get("omega_b"), "params.omega_b", errors),
                g=_as_float(params_raw.get("g", 0.0), "params.g", errors),
            )
        except ValueError as exc:
            errors.append(f"params: {exc}")

    coeffs_raw = raw.get("coeffs")
    spectrum_raw = raw.get("spectrum")
    if (coeffs_raw is None) == (spectrum_raw is None):
        errors.append("exactly one of 'coeffs' or 'spectrum' must be present")
    coeffs = None
    if coeffs_raw is not None:
        if not isinstance(coeffs_raw, dict):
            errors.append("coeffs: must be an object")
        else:
            names = ("k_aa", "k_ab", "k_ba", "k_bb", "d_aa", "d_ab", "d_ba", "d_bb")
            _check_keys(coeffs_raw, set(names), "coeffs", errors)
            try:
                coeffs = LabCoefficients(
                    **{n: _as_float(coeffs_raw.get(n, 0.0), f"coeffs.{n}", errors) for n in names}
                )
            except ValueError as exc:
                errors.append(f"coeffs: {exc}")
    spectrum_path = None
    tau_c = None
    if spectrum_raw is not None:
        if not isinstance(spectrum_raw, dict):
            errors.append("spectrum: must be an object with path and tau_c")
        else:
            _check_keys(spectrum_raw, {"path", "tau_c"}, "spectrum", errors)
            if not isinstance(spectrum_raw.get("path"), str):
                errors.append("spectrum.path: required string")
            else:
                spectrum_path = (path.parent / spectrum_raw["path"]).resolve()
            tau_c = _as_float(spectrum_raw.get("tau_c"), "spectrum.tau_c", errors)
    if scenario == "coefficients" and spectrum_raw is None:
        errors.append("scenario 'coefficients' requires a spectrum input")

    initial_raw = raw.get("initial", {})
    v_a = v_b = w = None
    phi = 0.0
    if not isinstance(initial_raw, dict):
        errors.append("initial: must be an object")
        initial_raw = {}
    if "w" in initial_raw:
        _check_keys(initial_raw, {"w", "phi"}, "initial", errors)
        w = _as_complex(initial_raw["w"], "initial.w", errors)
        phi = _as_float(initial_raw.get("phi", 0.0), "initial.phi", errors)
        if w == 0:
            errors.append("initial.w: must be nonzero")
    elif initial_raw:
        _check_keys(initial_raw, {"v_a", "v_b"}, "initial", errors)
        v_a = _as_complex(initial_raw.get("v_a", 0.0), "initial.v_a", errors)
        v_b = _as_complex(initial_raw.get("v_b", 0.0), "initial.v_b", errors)
    needs_initial = scenario in ("evolve-coherent", "evolve-cat", "verify", "sweep")
    if needs_initial and not initial_raw:
        errors.append(f"scenario '{scenario}' requires an 'initial' block")
    if scenario == "evolve-coherent" and initial_raw and w is not None:
        errors.append("scenario 'evolve-coherent' needs v_a/v_b, not w")
    if scenario == "evolve-cat" and initial_raw and w is None:
        errors.append("scenario 'evolve-cat' needs w (and optional phi)")

    time_raw = raw.get("time", {})
    if not isinstance(time_raw, dict):
        errors.append("time: must be an object")
        time_raw = {}
    _check_keys(time_raw, {"t_max", "dt", "sample_every"}, "time", errors)
    t_max = _as_float(time_raw.get("t_max", 10.0), "time.t_max", errors)
    dt = _as_float(time_raw.get("dt", 1e-3), "time.dt", errors)
    sample_every = _as_int(time_raw.get("sample_every", 100), "time.sample_every", errors)
    if t_max < 0:
        errors.append("time.t_max: must be >= 0")
    if dt <= 0:
        errors.append("time.dt: must be > 0")
    if sample_every < 1:
        errors.append("time.sample_every: must be >= 1")

    cutoff_raw = raw.get("cutoff", {})
    if not isinstance(cutoff_raw, dict):
        errors.append("cutoff: must be an object")
        cutoff_raw = {}
    _check_keys(cutoff_raw, {"dim_a", "dim_b"}, "cutoff", errors)
    default_dim = 6 if scenario == "algebra-check" else 15
    dim_a = _as_int(cutoff_raw.get("dim_a", default_dim), "cutoff.dim_a", errors)
    dim_b = _as_int(cutoff_raw.get("dim_b", dim_a or default_dim), "cutoff.dim_b", errors)
    if dim_a < 2 or dim_b < 2:
        errors.append("cutoff: dimensions must be >= 2")

    sweep_raw = raw.get("sweep")
    if (sweep_raw is not None) != (scenario == "sweep"):
        errors.append("a sweep descriptor must be present iff scenario = sweep")
    sweep = None
    if sweep_raw is not None and isinstance(sweep_raw, dict):
        _check_keys(sweep_raw, {"parameter", "start", "stop", "steps"}, "sweep", errors)
        parameter = sweep_raw.get("parameter")
        if parameter not in SWEEPABLE:
            errors.append(f"sweep.parameter must be one of {', '.join(SWEEPABLE)}")
        sweep = SweepSpec(
            parameter=parameter if parameter in SWEEPABLE else "g",
            start=_as_float(sweep_raw.get("start"), "sweep.start", errors),
            stop=_as_float(sweep_raw.get("stop"), "sweep.stop", errors),
            steps=_as_int(sweep_raw.get("steps"), "sweep.steps", errors),
        )
        if sweep.steps < 1:
            errors.append("sweep.steps: must be >= 1")
    elif sweep_raw is not None:
        errors.append("sweep: must be an object")

    trials = raw.get("trials")
    if trials is not None:
        if scenario != "algebra-check":
            errors.append("'trials' is only valid for scenario algebra-check")
        trials = _as_int(trials, "trials", errors)
        if trials is not None and trials < 1:
            errors.append("trials: must be >= 1")

    tol_raw = raw.get("tolerances", {})
    tolerances = Tolerances()
    if not isinstance(tol_raw, dict):
        errors.append("tolerances: must be an object")
    else:
        _check_keys(
            tol_raw, {"amplitude", "purity", "delta", "trace_distance"}, "tolerances", errors
        )
        kwargs = {
            k: _as_float(v, f"tolerances.{k}", errors)
            for k, v in tol_raw.items()
        }
        tolerances = replace(tolerances, **kwargs)

    output = raw.get("output", "out")
    if not isinstance(output, str):
        errors.append("output: must be a string path")
        output = "out"
    seed = _as_int(raw.get("seed", 0), "seed", errors)

    if errors:
        raise ValidationError(errors)

    cfg = RunConfig(
        scenario=scenario,
        params=params,
        coeffs=coeffs,
        spectrum_path=spectrum_path,
        tau_c=tau_c,
        v_a=v_a,
        v_b=v_b,
        w=w,
        phi=phi,
        t_max=t_max,
        dt=dt,
        sample_every=sample_every,
        dim_a=dim_a,
        dim_b=dim_b,
        sweep=sweep,
        trials=trials,
        output=Path(output),
        seed=seed,
        tolerances=tolerances,
        warnings=[],
    )
    if cfg.coeffs is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PhysicalityWarning)
            physicality_screen(cfg.coeffs)
        cfg.warnings.extend(str(c.message) for c in caught)
    return cfg


def resolve_coefficients(cfg: RunConfig) -> tuple[LabCoefficients, NormalModeData | None]:
    """Coefficients straight from config, or via quadrature over the spectrum."""
    if cfg.coeffs is not None:
        return cfg.coeffs, None
    spectrum = ReservoirSpectrum.from_csv(cfg.spectrum_path, cfg.tau_c)
    nm = normal_modes(cfg.params)
    return coefficients_from_spectrum(spectrum, nm), nm


def fit_decay_rate(ts, amps, window=SLOW_FIT_WINDOW) -> float:
    """Least-squares slope of ln|amplitude| over a fractional time window."""
    ts = np.asarray(ts, dtype=float)
    amps = np.abs(np.asarray(amps))
    t_lo = window[0] * ts[-1]
    t_hi = window[1] * ts[-1]
    mask = (ts >= t_lo) & (ts <= t_hi) & (amps > 1e-290)
    if mask.sum() < 2:
        return math.nan
    slope = np.polyfit(ts[mask], np.log(amps[mask]), 1)[0]
    return -float(slope)


def _trace_distance(m1: np.ndarray, m2: np.ndarray) -> float:
    eigs = np.linalg.eigvalsh(m1 - m2)
    return 0.5 * float(np.abs(eigs).sum())


# ---------------------------------------------------------------------------
# Scenario runners
# ---------------------------------------------------------------------------

def _write_lines(path: Path, lines) -> None:
    path.write_text("\n".join(lines) + "\n")


def _analytic_rows(cfg: RunConfig, coeffs: LabCoefficients, sample_times):
    """Per-sample analytic observables for either initial-state family."""
    dets = effective_detunings(cfg.params, coeffs)
    pc = constants(dets, coeffs)
    rows = []
    if cfg.w is not None:
        cat = states.CatState(w=cfg.w, phi=cfg.phi)
        for t in sample_times:
            aux = aux_functions(t, pc, dets, coeffs)
            comps = states.cat_components(cat, t, pc, aux)
            mean_a, mean_b = states.cat_mean_amplitudes(cat, comps)
            ent = states.linear_entropy(cat, comps)
            resid = states.coherence_preservation_residual(cat, comps)
            rows.append(
                {
                    "t": t, "v_a": mean_a, "v_b": mean_b,
                    "purity": 1.0 - ent.delta, "delta": ent.delta,
                    "residual": resid, "comps": comps, "cat": cat,
                }
            )
    else:
        init = states.CoherentPair(cfg.v_a, cfg.v_b)
        for t in sample_times:
            aux = aux_functions(t, pc, dets, coeffs)
            vt = states.evolve_coherent_pair(init, t, pc, aux)
            rows.append(
                {
                    "t": t, "v_a": vt.v_a, "v_b": vt.v_b,
                    "purity": 1.0, "delta": 0.0, "residual": 0.0,
                }
            )
    return rows


def _run_trajectory(cfg: RunConfig, out_dir: Path, *, keep_states: bool):
    """Shared oracle+analytic machinery for evolve-* and verify scenarios."""
    coeffs, _ = resolve_coefficients(cfg)
    spec = LiouvillianSpec(cfg.params, coeffs)
    if cfg.w is not None:
        rho0 = build_cat(cfg.w, cfg.phi, cfg.dim_a, cfg.dim_b)
    else:
        rho0 = build_coherent(cfg.v_a, cfg.v_b, cfg.dim_a, cfg.dim_b)
    result = evolve(
        rho0, spec, cfg.t_max, cfg.dt, cfg.sample_every, keep_states=keep_states
    )
    sample_times = [s.t for s in result.samples]
    analytic = _analytic_rows(cfg, coeffs, sample_times)

    lines = [TRAJECTORY_HEADER]
    for sample, ana in zip(result.samples, analytic):
        d = sample.diag
        lines.append(",".join([
            _fmt(sample.t),
            _fmt(ana["v_a"].real), _fmt(ana["v_a"].imag),
            _fmt(ana["v_b"].real), _fmt(ana["v_b"].imag),
            _fmt(d.mean_a.real), _fmt(d.mean_a.imag),
            _fmt(d.mean_b.real), _fmt(d.mean_b.imag),
            _fmt(ana["purity"]), _fmt(d.purity),
            _fmt(ana["delta"]),
            _fmt(d.n_total), _fmt(d.min_eig), _fmt(abs(d.trace - 1.0)),
        ]))
    _write_lines(out_dir / "trajectory.csv", lines)
    return coeffs, result, analytic


def run_evolve(cfg: RunConfig, out_dir: Path, *, export_state: bool = False) -> int:
    _, result, analytic = _run_trajectory(cfg, out_dir, keep_states=False)
    if export_state:
        export_density_matrix(result.final, out_dir / "state.csv")
    dev_a = max(
        abs(s.diag.mean_a - a["v_a"]) for s, a in zip(result.samples, analytic)
    )
    dev_b = max(
        abs(s.diag.mean_b - a["v_b"]) for s, a in zip(result.samples, analytic)
    )
    print(f"wrote {out_dir / 'trajectory.csv'} ({len(result.samples)} rows)")
    print(f"max |<a>_oracle - <a>_analytic| = {dev_a:.3e}")
    print(f"max |<b>_oracle - <b>_analytic| = {dev_b:.3e}")
    for event in result.events:
        print(f"note: {event}")
    return EXIT_OK


def run_verify(cfg: RunConfig, out_dir: Path, *, export_state: bool = False) -> int:
    is_cat = cfg.w is not None
    coeffs, result, analytic = _run_trajectory(cfg, out_dir, keep_states=is_cat)
    if export_state:
        export_density_matrix(result.final, out_dir / "state.csv")
    tol = cfg.tolerances
    devs = {
        "mean_a": max(
            abs(s.diag.mean_a - a["v_a"]) for s, a in zip(result.samples, analytic)
        ),
        "mean_b": max(
            abs(s.diag.mean_b - a["v_b"]) for s, a in zip(result.samples, analytic)
        ),
        "purity": max(
            abs(s.diag.purity - a["purity"]) for s, a in zip(result.samples, analytic)
        ),
        "delta": max(
            abs((s.diag.trace.real - s.diag.purity) - a["delta"])
            for s, a in zip(result.samples, analytic)
        ),
    }
    limits = {
        "mean_a": tol.amplitude,
        "mean_b": tol.amplitude,
        "purity": tol.purity,
        "delta": tol.delta,
    }
    if is_cat:
        worst_td = 0.0
        for sample, ana in zip(result.samples, analytic):
            projected, _ = states.cat_density_matrix(
                ana["cat"], ana["comps"], cfg.dim_a, cfg.dim_b
            )
            worst_td = max(worst_td, _trace_distance(projected.data, sample.state.data))
        devs["trace_distance"] = worst_td
        limits["trace_distance"] = tol.trace_distance

    failed = [name for name in devs if devs[name] > limits[name]]
    lines = [f"verify scenario: {'cat' if is_cat else 'coherent'} initial state"]
    for name in devs:
        status = "FAIL" if name in failed else "PASS"
        lines.append(
            f"{status} max|{name} deviation| = {devs[name]:.6e} (tolerance {limits[name]:g})"
        )
    if is_cat:
        lines.append(
            "max analytic delta = "
            + f"{max(a['delta'] for a in analytic):.6e}"
        )
        lines.append(
            "max coherence residual = "
            + f"{max(a['residual'] for a in analytic):.6e}"
        )
    for event in result.events:
        lines.append(f"note: {event}")
    for warning in cfg.warnings:
        lines.append(f"warning: {warning}")
    lines.append("result: " + ("FAIL" if failed else "PASS"))
    _write_lines(out_dir / "report.txt", lines)
    print("\n".join(lines))
    return EXIT_TOLERANCE if failed else EXIT_OK


def _sweep_point(cfg: RunConfig, coeffs: LabCoefficients, value: float):
    parameter = cfg.sweep.parameter
    params = cfg.params
    if parameter in ("g", "omega_a", "omega_b"):
        params = replace(params, **{parameter: value})
    else:
        coeffs = replace(coeffs, **{parameter: value})
    n_rows = int(round(cfg.t_max / (cfg.dt * cfg.sample_every))) + 1
    ts = np.arange(n_rows) * (cfg.dt * cfg.sample_every)
    rows = _analytic_rows(replace(cfg, params=params), coeffs, ts)
    amp_a = [row["v_a"] for row in rows]
    amp_b = [row["v_b"] for row in rows]
    slow = fit_decay_rate(ts, amp_a, SLOW_FIT_WINDOW)
    fast = fit_decay_rate(ts, amp_b, FAST_FIT_WINDOW)
    final_delta = rows[-1]["delta"] if cfg.w is not None else math.nan
    max_resid = max(row["residual"] for row in rows) if cfg.w is not None else math.nan
    return value, slow, fast, final_delta, max_resid


def run_sweep(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> int:
    coeffs, _ = resolve_coefficients(cfg)
    sw = cfg.sweep
    if sw.steps == 1:
        values = [sw.start]
    else:
        values = [
            sw.start + i * (sw.stop - sw.start) / (sw.steps - 1) for i in range(sw.steps)
        ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda v: _sweep_point(cfg, coeffs, v), values))
    else:
        results = [_sweep_point(cfg, coeffs, v) for v in values]
    lines = [SWEEP_HEADER]
    for value, slow, fast, delta, resid in results:
        lines.append(",".join(_fmt(x) for x in (value, slow, fast, delta, resid)))
    _write_lines(out_dir / "sweep.csv", lines)
    print(f"wrote {out_dir / 'sweep.csv'} ({len(values)} points)")
    return EXIT_OK


def run_coefficients(cfg: RunConfig, out_dir: Path) -> int:
    spectrum = ReservoirSpectrum.from_csv(cfg.spectrum_path, cfg.tau_c)
    nm = normal_modes(cfg.params)
    coeffs = coefficients_from_spectrum(spectrum, nm)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PhysicalityWarning)
        min_eig = physicality_screen(coeffs)
    payload = {
        "normal_modes": {
            "omega_1": nm.omega_1,
            "omega_2": nm.omega_2,
            "cos_theta": nm.cos_theta,
            "sin_theta": nm.sin_theta,
        },
        "coeffs": {
            name: getattr(coeffs, name)
            for name in ("k_aa", "k_ab", "k_ba", "k_bb", "d_aa", "d_ab", "d_ba", "d_bb")
        },
        "damping_screen_min_eig": min_eig,
    }
    (out_dir / "coefficients.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    lines = [
        f"normal modes: omega_1 = {_fmt(nm.omega_1)}, omega_2 = {_fmt(nm.omega_2)}",
        f"mixing: cos_theta = {_fmt(nm.cos_theta)}, sin_theta = {_fmt(nm.sin_theta)}",
    ]
    for name in ("k_aa", "k_ab", "k_ba", "k_bb", "d_aa", "d_ab", "d_ba", "d_bb"):
        lines.append(f"{name} = {_fmt(getattr(coeffs, name))}")
    lines.append(f"damping screen min eigenvalue = {_fmt(min_eig)}")
    for c in caught:
        lines.append(f"warning: {c.message}")
    _write_lines(out_dir / "report.txt", lines)
    print("\n".join(lines))
    return EXIT_OK


def run_algebra_check(cfg: RunConfig, out_dir: Path) -> int:
    trials = cfg.trials if cfg.trials is not None else 20
    try:
        report = verify_commutator_table(cfg.dim_a, trials, cfg.seed)
        code = EXIT_OK
    except TableMismatch as exc:
        report = exc.report
        code = EXIT_TOLERANCE
    lines = [
        f"commutator algebra check: dim = {report.dim}, trials = {report.trials}, "
        f"seed = {report.seed}",
        f"max discrepancy = {report.max_discrepancy:.6e} (tolerance {report.tol:g})",
        f"worst pair = [{report.worst_pair[0]}, {report.worst_pair[1]}]",
        f"result: {'PASS' if report.passed else 'FAIL'}",
        "",
        "per-pair max discrepancy:",
    ]
    from .lindblad import SUPEROPERATOR_LABELS

    for i, row_label in enumerate(SUPEROPERATOR_LABELS):
        row = " ".join(f"{report.pair_discrepancy[i, j]:.2e}" for j in range(12))
        lines.append(f"{row_label:>6} {row}")
    _write_lines(out_dir / "report.txt", lines)
    print(lines[1])
    print(lines[3])
    return code


def run(cfg: RunConfig, out_dir=None, jobs: int = 1, export_state: bool = False) -> int:
    """Execute a validated configuration; returns the process exit code."""
    target = Path(out_dir) if out_dir is not None else cfg.output
    target.mkdir(parents=True, exist_ok=True)
    for message in cfg.warnings:
        print(f"warning: {message}")
    try:
        if cfg.scenario == "evolve-coherent" or cfg.scenario == "evolve-cat":
            return run_evolve(cfg, target, export_state=export_state)
        if cfg.scenario == "verify":
            return run_verify(cfg, target, export_state=export_state)
        if cfg.scenario == "sweep":
            return run_sweep(cfg, target, jobs=jobs)
        if cfg.scenario == "coefficients":
            return run_coefficients(cfg, target)
        if cfg.scenario == "algebra-check":
            return run_algebra_check(cfg, target)
        raise ValidationError([f"unknown scenario {cfg.scenario!r}"])
    except (ParseError, ValidationError):
        raise
    except CavityDuoError as exc:
        print(f"error ({type(exc).__name__}): {exc}")
        return EXIT_NUMERICAL
