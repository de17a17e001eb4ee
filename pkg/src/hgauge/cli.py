"""Command line entry point: ``hgauge verify``."""
from __future__ import annotations

import sys

import click

from .report import emit_report
from .scenario import SUITES, ScenarioError, default_scenario_text, load_scenario, parse_scenario
from .suites import run_suite


def _p_list(ctx, param, value):
    if value is None:
        return None
    try:
        out = tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter("expected a comma separated list of integers") from None
    if not out or any(p < 0 for p in out):
        raise click.BadParameter("expected non-negative integers")
    return out


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Exact verifier for higher gauge theory identities."""


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False), help="Scenario file (default: the shipped default scenario).")
@click.option("--suite", "suites", multiple=True, type=click.Choice(("all",) + SUITES), help="Suite to run; repeatable.")
@click.option("--seed", type=int, help="Override the scenario seed.")
@click.option("--dim", type=click.IntRange(1, 12), help="Override the spacetime dimension.")
@click.option("--degree", type=click.IntRange(0, 8), help="Override the coefficient degree bound.")
@click.option("--n", "n", type=click.IntRange(1, 4), help="Override the symtrace arity.")
@click.option("--p", "p_list", callback=_p_list, help="Descent degrees, e.g. 0,1,2.")
@click.option("--json", "as_json", is_flag=True, help="Emit the machine-readable report.")
@click.option("--spot-check", is_flag=True, help="Also evaluate residual pieces at random rational points.")
@click.option("--workers", type=click.IntRange(1, 64), help="Worker threads for independent checks.")
@click.option("--no-timing", is_flag=True, help="Omit timing fields from the report.")
def verify(scenario_path, suites, seed, dim, degree, n, p_list, as_json, spot_check, workers, no_timing):
    """Run verification suites; exit status 0 iff every check passes."""
    try:
        if scenario_path:
            sc = load_scenario(scenario_path)
        else:
            sc = parse_scenario(default_scenario_text())
        sc = sc.with_overrides(
            seed=seed,
            dim=dim,
            degree=degree,
            n=n,
            descent_p=p_list,
            suites=tuple(suites) if suites else None,
        )
        report = run_suite(sc, workers=workers, spot_check=spot_check)
    except ScenarioError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    for w in sc.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(emit_report(report, "machine" if as_json else "human", timing=not no_timing), nl=False)
    if any(not s["ok"] for s in report.spot_checks):
        click.echo("warning: numeric spot check disagrees with the exact residual", err=True)
    sys.exit(report.exit_code())


@main.command("suites")
def list_suites():
    """List the available suites."""
    for s in SUITES:
        click.echo(s)


if __name__ == "__main__":  # pragma: no cover
    main()
