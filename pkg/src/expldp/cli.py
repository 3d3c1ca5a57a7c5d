"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import acceptance, legendre, rates, scenarios
from .errors import ExpLdpError, MeanOutsideDomain, UnknownScenario
from .families import builtin, builtin_names
from .models import builtin_model, model_names, uniform_prior
from .tables import Table


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise click.UsageError(f"could not parse vector {text!r}") from None


@click.group()
def main():
    """Rate functions for posteriors and constrained MLEs in curved
    exponential families."""


@main.group()
def scenario():
    """Run the registered worked-example pipelines."""


@scenario.command("list")
def scenario_list():
    for name in scenarios.scenario_names():
        click.echo(f"{name}: {scenarios.get_scenario(name).description}")


@scenario.command("run")
@click.argument("name")
@click.option("--outdir", default=".", type=click.Path(file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
def scenario_run(name, outdir, fmt):
    try:
        written = scenarios.scenario_run(name, outdir, fmt)
    except UnknownScenario as exc:
        raise click.UsageError(str(exc))
    except OSError as exc:
        raise click.ClickException(f"could not write outputs: {exc}")
    for path in written:
        click.echo(path)


@main.command("legendre")
@click.option("--family", "family_name", required=True,
              type=click.Choice(builtin_names()))
@click.option("--t", "t_text", required=True,
              help="mean point, comma-separated")
@click.option("--constraint", "constraint_name", default=None,
              type=click.Choice(model_names()),
              help="restrict the supremum to a builtin model")
@click.option("--json", "as_json", is_flag=True)
def legendre_cmd(family_name, t_text, constraint_name, as_json):
    """Convex conjugate (optionally constrained) at a mean point."""
    family = builtin(family_name)
    t = _parse_vector(t_text)
    try:
        if constraint_name is None:
            res = legendre.conjugate(family, t)
        else:
            model = builtin_model(constraint_name)
            res = legendre.conjugate_constrained(
                family, legendre.ConstraintSet.curve(model), t
            )
    except MeanOutsideDomain as exc:
        raise click.UsageError(str(exc))
    if as_json:
        click.echo(json.dumps(res.to_json(), sort_keys=True))
    else:
        click.echo(f"value {res.value:.12g}")
        if res.argmax is not None:
            click.echo("argmax " + ",".join(f"{v:.12g}" for v in res.argmax))
        click.echo(f"converged {res.converged} iterations {res.iterations} "
                   f"multiplicity_flag {res.multiplicity_flag}")


@main.group()
def rate():
    """Tabulate or evaluate rate functions."""


@rate.command("posterior")
@click.option("--model", "model_name", required=True,
              type=click.Choice(model_names()))
@click.option("--mu0", "mu0_text", required=True)
@click.option("--support", "support_text", required=True,
              help="prior support, 'lo,hi'")
@click.option("--grid", "grid_text", required=True, help="'lo,hi,count'")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def rate_posterior(model_name, mu0_text, support_text, grid_text, out_path):
    model = builtin_model(model_name)
    mu0 = _parse_vector(mu0_text)
    lo, hi = _parse_vector(support_text)
    g_lo, g_hi, g_n = _parse_vector(grid_text)
    prior = uniform_prior(model, float(lo), float(hi))
    try:
        table = rates.posterior_rate(
            prior, mu0, np.linspace(g_lo, g_hi, int(g_n))
        ).to_table("posterior_rate")
    except ExpLdpError as exc:
        raise click.UsageError(str(exc))
    _emit_table(table, out_path)


@rate.command("mle")
@click.option("--model", "model_name", required=True,
              type=click.Choice(model_names()))
@click.option("--theta0-coord", "theta0_coord", required=True, type=float,
              help="model coordinate of the sampling parameter")
@click.option("--grid", "grid_text", required=True, help="'lo,hi,count'")
@click.option("--method", type=click.Choice(["pythagoras", "line-minimize",
                                             "brute"]),
              default="line-minimize", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def rate_mle(model_name, theta0_coord, grid_text, method, out_path):
    model = builtin_model(model_name)
    theta0 = model.map(theta0_coord)
    g_lo, g_hi, g_n = _parse_vector(grid_text)
    rows = []
    try:
        for coord in np.linspace(g_lo, g_hi, int(g_n)):
            rows.append(
                (float(coord),
                 rates.contraction_rate(model, theta0, float(coord), method))
            )
    except ExpLdpError as exc:
        raise click.UsageError(str(exc))
    table = Table("mle_rate", ("coordinate", "rate"), rows,
                  {"kind": "mle", "method": method,
                   "theta0_coordinate": theta0_coord})
    _emit_table(table, out_path)


@rate.command("cramer")
@click.option("--family", "family_name", required=True,
              type=click.Choice(builtin_names()))
@click.option("--theta0", "theta0_text", required=True)
@click.option("--t", "t_text", required=True)
def rate_cramer(family_name, theta0_text, t_text):
    family = builtin(family_name)
    try:
        value = rates.cramer_rate(
            family, _parse_vector(theta0_text), _parse_vector(t_text)
        )
    except ExpLdpError as exc:
        raise click.UsageError(str(exc))
    click.echo(f"{value:.12g}")


def _emit_table(table: Table, out_path):
    if out_path is None:
        click.echo(table.csv_text(), nl=False)
    else:
        table.write_csv(out_path)
        click.echo(out_path)


@main.command("verify")
@click.option("--filter", "pattern", default=None,
              help="run only criteria whose name contains this substring")
def verify(pattern):
    """Run the acceptance suite; nonzero exit on any failure."""
    results = acceptance.verify_suite(pattern)
    click.echo(acceptance.format_report(results))
    if any(not r.passed for r in results):
        sys.exit(1)


if __name__ == "__main__":
    main()
