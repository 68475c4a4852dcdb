import functools
import json
import sys

import click
from pydantic import ValidationError
from tabulate import tabulate

from breather import __version__
from breather.config import settings
from breather.schemas.run_schema import RunConfig
from breather.services.scenarios import build_scenario, scenario_names, self_check
from breather.tasks.run_tasks import run_pipeline, stability_protocol
from breather.utils.enums import LinearSolver, ModelKind, SplittingScheme
from breather.utils.errors import BreatherError, ConfigError
from breather.utils.logger import setup_logger

logger = setup_logger(__name__)

STABILITY_PERTURBATION = 0.05


def handle_errors(command):
    """Structured error JSON on stderr and the error's exit code."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except BreatherError as e:
            logger.error(f"{type(e).__name__}: {e.detail}")
            click.echo(json.dumps(e.to_dict()), err=True)
            sys.exit(e.exit_code)
        except ValidationError as e:
            error = ConfigError(str(e))
            click.echo(json.dumps(error.to_dict()), err=True)
            sys.exit(error.exit_code)
    return wrapper


def run_options(command):
    """Overrides shared by `run` and `stability`."""
    options = [
        click.option("--scenario", "-s", required=True, help="Catalog entry (see `breather list`)"),
        click.option("--dt", type=float, default=None, help="Time step (scenario default)"),
        click.option("--dx", type=float, default=None, help="Grid spacing (scenario default)"),
        click.option("--box", type=float, default=None, help="Half-width of the box [-box, box]"),
        click.option("--horizon", type=float, default=None, help="Final time"),
        click.option("--perturb", type=float, default=None,
                     help="Relative noise amplitude (run: 0, stability: 0.05)"),
        click.option("--seed", "seeds", type=int, multiple=True, help="Noise seed; repeat for a sweep"),
        click.option("--snapshot-stride", type=int, default=None, help="Steps between trace rows"),
        click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory"),
        click.option("--jobs", type=int, default=1, show_default=True, help="Parallel runs for seed sweeps"),
        click.option("--scale", type=float, default=None, help="a for scalable scenarios"),
        click.option("--splitting", type=click.Choice([s.value for s in SplittingScheme]),
                     default=SplittingScheme.strang.value, show_default=True),
        click.option("--linear-solver", type=click.Choice([s.value for s in LinearSolver]),
                     default=LinearSolver.banded.value, show_default=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _config(scenario, seeds, splitting, linear_solver, **overrides) -> RunConfig:
    return RunConfig(
        scenario=scenario,
        seeds=list(seeds) or [0],
        splitting=SplittingScheme(splitting),
        linear_solver=LinearSolver(linear_solver),
        **overrides,
    )


@click.group()
@click.version_option(__version__, prog_name=settings.APP_NAME)
def cli():
    """Modulated breathers of the nonautonomous Gross-Pitaevskii equation."""


@cli.command("run")
@run_options
@click.option("--compare", type=click.Choice([k.value for k in ModelKind]), default=None,
              help="Also run the scenario with this nonlinear model and report peak delays")
@click.option("--field-every", type=int, default=0, show_default=True,
              help="Write every k-th snapshot's full field (0 = none)")
@handle_errors
def run(scenario, seeds, splitting, linear_solver, compare, **overrides):
    """Simulate a scenario and write trace.csv and summary.json."""
    if overrides.get("perturb") is None:
        overrides["perturb"] = 0.0
    config = _config(scenario, seeds, splitting, linear_solver,
                     compare=ModelKind(compare) if compare else None, **overrides)
    summaries = run_pipeline(config)

    rows = []
    for summary in summaries:
        report = summary.get("report") or {}
        stability = summary.get("stability") or {}
        rows.append([
            summary["seed"],
            report.get("period"),
            report.get("amplitude_min"),
            report.get("amplitude_max"),
            report.get("fwhm_time"),
            stability.get("verdict"),
        ])
    click.echo(tabulate(rows, headers=["seed", "period", "min", "max", "fwhm_time", "stability"], floatfmt=".5g"))
    comparison = summaries[0].get("comparison")
    if comparison:
        click.echo(f"max(g|psi|^2) = {comparison['coupling_peak']:.4f}")
        click.echo(tabulate([[d["peak_index"], d["delay"]] for d in comparison["delays"]],
                            headers=["peak", "delay"], floatfmt=".5g"))


@cli.command("stability")
@run_options
@handle_errors
def stability(scenario, seeds, splitting, linear_solver, **overrides):
    """Perturbed runs per seed against the unperturbed envelope."""
    if overrides.get("perturb") is None:
        overrides["perturb"] = STABILITY_PERTURBATION
    config = _config(scenario, seeds or (0, 1, 2, 3, 4), splitting, linear_solver, **overrides)
    reports = stability_protocol(config)
    click.echo(tabulate(
        [[r.seed, r.envelope_min, r.envelope_max, r.reference_min, r.reference_max, r.verdict.value] for r in reports],
        headers=["seed", "env_min", "env_max", "ref_min", "ref_max", "verdict"],
        floatfmt=".5g",
    ))


@cli.command("list")
def list_scenarios():
    """Scenario catalog."""
    rows = []
    for name in scenario_names():
        spec = build_scenario(name, self_check_residual=False)
        rows.append([name, spec.model_kind.value, spec.box, spec.dx, spec.dt, spec.horizon,
                     "yes" if spec.experimental else "", spec.description])
    click.echo(tabulate(rows, headers=["scenario", "model", "box", "dx", "dt", "horizon", "experimental", "description"]))


@cli.command("check")
@handle_errors
def check():
    """GPE residual of every scenario's modulated breather."""
    rows = []
    failed = False
    for name in scenario_names():
        spec = build_scenario(name, self_check_residual=False)
        residual = self_check(spec)
        ok = residual < settings.RESIDUAL_TOL
        failed = failed or (not ok and not spec.experimental)
        rows.append([name, residual, "ok" if ok else "FAIL", "yes" if spec.experimental else ""])
    click.echo(tabulate(rows, headers=["scenario", "gpe_residual", "status", "experimental"], floatfmt=".3e"))
    if failed:
        sys.exit(ConfigError.exit_code)


if __name__ == "__main__":
    cli()
