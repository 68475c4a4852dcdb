import os
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from breather import __version__
from breather.config import settings
from breather.schemas.field_schema import SpatialGrid
from breather.schemas.report_schema import StabilityReport
from breather.schemas.run_schema import RunConfig
from breather.schemas.solver_schema import SolverConfig
from breather.services.field_core import perturb
from breather.services.observables import (
    FieldRecorder,
    TraceRecorder,
    breathing_metrics,
    com_deviation,
    peak_delay,
    refined_extrema,
    trace_series,
)
from breather.services.propagator import propagate
from breather.services.scenarios import ScenarioSpec, build_scenario
from breather.utils.enums import ModelKind, StabilityVerdict
from breather.utils.errors import BlowUpError, DomainError
from breather.utils.helpers import normalize_seeds, prepare_output_dir, utc_timestamp, write_csv, write_json
from breather.utils.logger import setup_logger

logger = setup_logger(__name__)

ENVELOPE_LOWER = 0.8
ENVELOPE_UPPER = 1.2
DELAY_PEAKS = 5


# =============================================================================
# SETUP HELPERS
# =============================================================================

def resolve_run(config: RunConfig, self_check: bool = True) -> Tuple[ScenarioSpec, SpatialGrid, SolverConfig, float]:
    """Scenario, grid, solver settings and horizon with the run's overrides applied."""
    scenario = build_scenario(config.scenario, self_check_residual=self_check, scale=config.scale)
    grid = scenario.grid(box=config.box, dx=config.dx)
    solver = SolverConfig(
        dt=config.dt or scenario.dt,
        splitting=config.splitting,
        linear_solver=config.linear_solver,
        snapshot_stride=config.snapshot_stride or settings.SNAPSHOT_STRIDE,
    )
    return scenario, grid, solver, config.horizon or scenario.horizon


def grid_metadata(grid: SpatialGrid, solver: SolverConfig) -> dict:
    return {
        "x_min": grid.x_min,
        "x_max": grid.x_max,
        "n_points": grid.n_points,
        "dx": grid.dx,
        "boundary": solver.boundary.value,
    }


def solver_metadata(solver: SolverConfig, simulation: Optional[dict] = None) -> dict:
    meta = {
        "dt": solver.dt,
        "splitting": solver.splitting.value,
        "linear_solver": solver.linear_solver.value,
        "snapshot_stride": solver.snapshot_stride,
    }
    if simulation is not None:
        meta.update({
            "steps": simulation["steps"],
            "dt_effective": simulation["dt"],
            "norm_drift": simulation["norm_drift"],
        })
    return meta


# =============================================================================
# PIPELINE TASKS
# =============================================================================

def simulate_task(scenario: ScenarioSpec, grid: SpatialGrid, solver: SolverConfig, horizon: float,
                  perturbation: float = 0.0, seed: int = 0, field_every: int = 0) -> dict:
    """Propagate the scenario's initial field (optionally perturbed) and record its trace."""
    label = f"{scenario.name}/seed={seed}"
    logger.info(f"[Scenario={scenario.name}] [Seed={seed}] Simulating to t={horizon:.6g} (perturbation {perturbation:g})")

    field = scenario.initial_field(grid)
    if perturbation > 0:
        field = perturb(field, perturbation, seed)

    trace = TraceRecorder()
    observers = [trace]
    fields = None
    if field_every > 0:
        fields = FieldRecorder(every=field_every)
        observers.append(fields)

    result = propagate(
        field, scenario.potential(), scenario.nonlinear_model(), solver,
        t0=0.0, t1=horizon, observers=observers, label=label,
    )
    return {
        "scenario": scenario.name,
        "seed": seed,
        "perturbation": perturbation,
        "trace": trace.frame(),
        "fields": fields.frame() if fields is not None else None,
        "steps": result.steps,
        "dt": result.dt,
        "norm_drift": result.norm_drift,
    }


def analyze_task(scenario: ScenarioSpec, simulation: dict) -> dict:
    """Breathing metrics, expected-value comparison and center-of-mass deviation of one trace."""
    trace: pd.DataFrame = simulation["trace"]
    report = breathing_metrics(trace_series(trace), fwhm_space=trace_series(trace, "fwhm_space"))
    expected_check = scenario.expected.compare(report) if scenario.expected is not None else None
    deviation = com_deviation(trace_series(trace, "com"), scenario.plan)

    if expected_check is not None:
        failed = [name for name, row in expected_check.items() if not row["ok"]]
        if failed:
            logger.warning(f"[Scenario={scenario.name}] [Seed={simulation['seed']}] Outside expected range: {failed}")
    logger.info(
        f"[Scenario={scenario.name}] [Seed={simulation['seed']}] period={report.period:.5g} "
        f"min={report.amplitude_min:.5g} max={report.amplitude_max:.5g} fwhm_time={report.fwhm_time:.4g}"
    )
    return {"report": report, "expected_check": expected_check, "com_deviation": deviation}


def write_outputs_task(run_dir: str, simulation: dict, summary: dict) -> Dict[str, str]:
    paths = {"trace": write_csv(simulation["trace"], os.path.join(run_dir, "trace.csv"))}
    if simulation.get("fields") is not None:
        paths["fields"] = write_csv(simulation["fields"], os.path.join(run_dir, "fields.csv"))
    paths["summary"] = write_json(summary, os.path.join(run_dir, "summary.json"))
    return paths


def build_summary(scenario: ScenarioSpec, grid: SpatialGrid, solver: SolverConfig, horizon: float,
                  simulation: dict, analysis: Optional[dict] = None, stability: Optional[StabilityReport] = None,
                  comparison: Optional[dict] = None, scale: Optional[float] = None) -> dict:
    report = None
    if analysis is not None:
        report = analysis["report"].model_dump(mode="json")
        report["com_deviation"] = analysis["com_deviation"]
    return {
        "schema": settings.SCHEMA_VERSION,
        "version": __version__,
        "created_at": utc_timestamp(),
        "scenario": {
            "name": scenario.name,
            "description": scenario.description,
            "model_kind": scenario.model_kind.value,
            "experimental": scenario.experimental,
            "nonlinearity": {str(k): v for k, v in scenario.spec.coefficients.items()},
        },
        "parameters": {"horizon": horizon, "box": grid.x_max, "dx": grid.dx, "dt": solver.dt, "scale": scale},
        "grid": grid_metadata(grid, solver),
        "solver": solver_metadata(solver, simulation),
        "report": report,
        "expected_check": analysis["expected_check"] if analysis is not None else None,
        "residual": {"gpe": scenario.residual, "tolerance": settings.RESIDUAL_TOL},
        "seed": simulation["seed"],
        "perturbation": simulation["perturbation"],
        "stability": stability.model_dump(mode="json") if stability is not None else None,
        "comparison": comparison,
    }


# =============================================================================
# STABILITY
# =============================================================================

def assess_stability(reference: pd.DataFrame, perturbed: Optional[pd.DataFrame], seed: int,
                     perturbation: float, horizon: float, detail: Optional[str] = None) -> StabilityReport:
    """
    Stable when the perturbed max-density envelope stays inside
    [0.8 min, 1.2 max] of the unperturbed envelope; `perturbed=None` is a blow-up.
    """
    ref_min = float(reference["max_density"].min())
    ref_max = float(reference["max_density"].max())
    if perturbed is None:
        return StabilityReport(
            seed=seed, perturbation=perturbation, horizon=horizon,
            reference_min=ref_min, reference_max=ref_max,
            verdict=StabilityVerdict.blow_up, detail=detail,
        )

    env_min = float(perturbed["max_density"].min())
    env_max = float(perturbed["max_density"].max())
    inside = env_min >= ENVELOPE_LOWER * ref_min and env_max <= ENVELOPE_UPPER * ref_max
    return StabilityReport(
        seed=seed, perturbation=perturbation, horizon=horizon,
        reference_min=ref_min, reference_max=ref_max,
        envelope_min=env_min, envelope_max=env_max,
        verdict=StabilityVerdict.stable if inside else StabilityVerdict.unstable,
        detail=detail,
    )


def _perturbed_trace(config: RunConfig, horizon: float, seed: int) -> Tuple[int, Optional[pd.DataFrame], Optional[str]]:
    """Worker: rebuilds the scenario from its name so nothing unpicklable crosses processes."""
    scenario, grid, solver, _ = resolve_run(config, self_check=False)
    try:
        simulation = simulate_task(scenario, grid, solver, horizon, config.perturb, seed)
    except BlowUpError as e:
        logger.error(f"[Scenario={scenario.name}] [Seed={seed}] Blow-up: {e.detail}")
        return seed, None, e.detail
    return seed, simulation["trace"], None


def stability_protocol(config: RunConfig, horizon: Optional[float] = None) -> List[StabilityReport]:
    """
    One unperturbed reference run plus one perturbed run per seed, seeds in
    parallel over `config.jobs` workers.
    """
    if config.perturb <= 0:
        raise DomainError("stability protocol needs a perturbation amplitude > 0")
    scenario, grid, solver, _ = resolve_run(config)
    if config.box is None and scenario.stability_box is not None:
        config = config.model_copy(update={"box": scenario.stability_box})
        grid = scenario.grid(box=config.box, dx=config.dx)
    horizon = horizon or config.horizon or scenario.stability_horizon
    seeds = normalize_seeds(config.seeds)

    logger.info(f"[Scenario={scenario.name}] Stability protocol: {len(seeds)} seeds, horizon {horizon:g}, jobs {config.jobs}")
    reference = simulate_task(scenario, grid, solver, horizon)["trace"]

    outcomes = Parallel(n_jobs=config.jobs)(
        delayed(_perturbed_trace)(config, horizon, seed) for seed in seeds
    )
    reports = [
        assess_stability(reference, trace, seed, config.perturb, horizon, detail)
        for seed, trace, detail in outcomes
    ]
    for report in reports:
        logger.info(f"[Scenario={scenario.name}] [Seed={report.seed}] Verdict: {report.verdict.value}")
    return reports


# =============================================================================
# MODEL COMPARISON
# =============================================================================

def compare_models(scenario: ScenarioSpec, twin: ScenarioSpec, grid: SpatialGrid, solver: SolverConfig,
                   horizon: float) -> dict:
    """
    Run a scenario and its twin with the other nonlinear model from the same
    initial field; delays are (nonpolynomial peak - cubic peak) over the first
    peaks both runs resolve.
    """
    primary = simulate_task(scenario, grid, solver, horizon)
    secondary = simulate_task(twin, grid, solver, horizon)
    runs = {scenario.model_kind: primary, twin.model_kind: secondary}
    cubic, npse = runs[ModelKind.cubic], runs[ModelKind.nonpolynomial]

    cubic_series, npse_series = trace_series(cubic["trace"]), trace_series(npse["trace"])
    n_common = min(DELAY_PEAKS, refined_extrema(cubic_series)[1].size, refined_extrema(npse_series)[1].size)
    delays = peak_delay(cubic_series, npse_series, max_peaks=n_common)
    values = np.array([d.delay for d in delays])

    # |g| max |psi|^2 with g = G3 a(t); constant a in the comparison scenario
    g = abs(scenario.spec.G3 * float(scenario.plan.evaluate(0.0).a))
    coupling_peak = g * float(npse["trace"]["max_density"].max())

    magnitudes = np.abs(values)
    signs = np.sign(values[values != 0])
    comparison = {
        "reference": ModelKind.cubic.value,
        "candidate": ModelKind.nonpolynomial.value,
        "coupling_peak": coupling_peak,
        "delays": [d.model_dump() for d in delays],
        "delay_sign": int(signs[0]) if signs.size and np.all(signs == signs[0]) else 0,
        "nondecreasing": bool(np.all(np.diff(magnitudes) >= 0)),
    }
    logger.info(
        f"[Scenario={scenario.name}] Comparison: max(g|psi|^2)={coupling_peak:.4f}, "
        f"delays={np.round(values, 4).tolist()}"
    )
    return {"primary": primary, "secondary": secondary, "delays": pd.DataFrame([d.model_dump() for d in delays]),
            "comparison": comparison}


# =============================================================================
# ENTRY POINTS
# =============================================================================

def _run_seed(config: RunConfig, seed: int, run_dir: str, residual: Optional[float] = None) -> dict:
    """One seed end to end. A known `residual` skips the self-check (it was done by the caller)."""
    scenario, grid, solver, horizon = resolve_run(config, self_check=residual is None)
    if residual is not None:
        scenario = scenario.model_copy(update={"residual": residual})

    stability = None
    if config.perturb > 0:
        reference = simulate_task(scenario, grid, solver, horizon)["trace"]
        try:
            simulation = simulate_task(scenario, grid, solver, horizon, config.perturb, seed, config.field_every)
        except BlowUpError as e:
            stability = assess_stability(reference, None, seed, config.perturb, horizon, e.detail)
            aborted = {"seed": seed, "perturbation": config.perturb, "steps": None, "dt": solver.dt, "norm_drift": None}
            write_json(
                build_summary(scenario, grid, solver, horizon, aborted, stability=stability, scale=config.scale),
                os.path.join(run_dir, "summary.json"),
            )
            raise
        stability = assess_stability(reference, simulation["trace"], seed, config.perturb, horizon)
    else:
        simulation = simulate_task(scenario, grid, solver, horizon, 0.0, seed, config.field_every)

    # trace first, so the data survives an analysis failure
    write_csv(simulation["trace"], os.path.join(run_dir, "trace.csv"))
    analysis = analyze_task(scenario, simulation)
    summary = build_summary(scenario, grid, solver, horizon, simulation, analysis, stability, scale=config.scale)
    write_outputs_task(run_dir, simulation, summary)
    return summary


def run_pipeline(config: RunConfig) -> List[dict]:
    """
    Simulate, analyze and write one run per seed. With several seeds each run
    gets its own `seed_<n>` subdirectory and runs go through joblib.
    """
    if config.compare is not None:
        return [run_comparison(config)]

    seeds = normalize_seeds(config.seeds)
    base_dir = prepare_output_dir(config.out, config.scenario)
    if len(seeds) == 1:
        return [_run_seed(config, seeds[0], base_dir)]

    residual = build_scenario(config.scenario, scale=config.scale).residual
    run_dirs = {seed: prepare_output_dir(base_dir, f"seed_{seed}") for seed in seeds}
    return Parallel(n_jobs=config.jobs)(
        delayed(_run_seed)(config, seed, run_dirs[seed], residual) for seed in seeds
    )


def run_comparison(config: RunConfig) -> dict:
    """Scenario against its twin with the `compare` model; writes both traces and the delays."""
    scenario, grid, solver, horizon = resolve_run(config)
    if config.compare is scenario.model_kind:
        raise DomainError(f"scenario '{scenario.name}' already uses the {scenario.model_kind.value} model")
    twin = scenario.model_copy(update={"name": f"{scenario.name}_{config.compare.value}", "model_kind": config.compare})

    run_dir = prepare_output_dir(config.out, config.scenario)
    result = compare_models(scenario, twin, grid, solver, horizon)
    primary = result["primary"]

    write_csv(primary["trace"], os.path.join(run_dir, "trace.csv"))
    write_csv(result["secondary"]["trace"], os.path.join(run_dir, f"trace_{config.compare.value}.csv"))
    write_csv(result["delays"], os.path.join(run_dir, "delays.csv"))

    summary = build_summary(scenario, grid, solver, horizon, primary, comparison=result["comparison"],
                            scale=config.scale)
    write_json(summary, os.path.join(run_dir, "summary.json"))
    return summary
