"""Command-line entry point: solve, gen-scenarios, validate, report.

``solve`` always writes the three result artifacts (``plan.json``,
``trace.csv``, ``summary.json``) whatever the terminal status, and exits 0
exactly when the solver proves optimality.  The ``RESILIA_SOLVER``
environment variable overrides the LP/MIP backend selection.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import click

from . import model, netio
from .bnp import BnpError, BnpOptions, solve_bnp
from .formulation import FormulationError, solve_extensive
from .lpbackend import OPTIMAL, BackendError, SolverConfig
from .oracle import DEFAULT_M_CAP, OracleError, solve_bruteforce
from .result import OUTPUT_PLAN, OUTPUT_SUMMARY, OUTPUT_TRACE, write_outputs
from .sbd import solve_sbd
from .scenariogen import StormSpec, generate

_COUNT_LABELS = (  # printing order: hardenings, edges, switches, generators
    ("hardenings", "n_h"),
    ("new_edges", "n_x"),
    ("new_switches", "n_t"),
    ("new_generators", "n_u"),
)


@click.group()
@click.version_option(package_name="resilia")
def main() -> None:
    """Resilient upgrade planning for distribution + control networks."""


def _load(network_path: str, scenarios_path: str | None):
    try:
        net = netio.load_network(network_path)
        scenarios = (netio.load_scenarios(scenarios_path, network=net)
                     if scenarios_path else [])
    except (netio.NetworkFormatError, netio.NetworkValidationError) as exc:
        raise click.ClickException(str(exc)) from exc
    return net, scenarios


def _override_resilience(net, eta_c, eta_t, tol):
    spec = net.resilience
    changes = {}
    if eta_c is not None:
        changes["eta_critical"] = eta_c
    if eta_t is not None:
        changes["eta_total"] = eta_t
    if tol is not None:
        changes["gap_tolerance"] = tol
    if not changes:
        return net
    return replace(net, resilience=replace(spec, **changes))


@main.command("solve")
@click.option("--network", "network_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Network description (JSON).")
@click.option("--scenarios", "scenarios_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Damage scenario file (JSON).")
@click.option("--algorithm", type=click.Choice(["bnp", "sbd", "extensive",
                                                "brute"]),
              default="bnp", show_default=True)
@click.option("--eta-c", type=float, default=None,
              help="Critical-load service floor override (fraction).")
@click.option("--eta-t", type=float, default=None,
              help="Total-load service floor override (fraction).")
@click.option("--tol", type=float, default=None,
              help="Relative optimality gap (default: the network's, 0.001).")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads handed to the backend.")
@click.option("--time-limit", type=float, default=None, help="Seconds.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Recorded in the summary; solvers are deterministic.")
@click.option("--out-dir", type=click.Path(file_okay=False), default="run",
              show_default=True)
@click.option("--no-pessimistic", is_flag=True,
              help="bnp: skip the pessimistic-pricing warm-up phase.")
@click.option("--no-optcut", is_flag=True,
              help="bnp: do not bound pricing by the incumbent cost.")
@click.option("--no-lexi", is_flag=True,
              help="bnp: skip the sparsest-vertex pricing stage.")
@click.option("--stabilized", is_flag=True,
              help="bnp: box-step dual stabilization at the root.")
@click.option("--sbd-add-all", is_flag=True,
              help="sbd: add every violated scenario per round, not one.")
@click.option("--m-cap", type=int, default=DEFAULT_M_CAP, show_default=True,
              help="brute: refuse catalogs larger than this.")
def cmd_solve(network_path, scenarios_path, algorithm, eta_c, eta_t, tol,
              threads, time_limit, seed, out_dir, no_pessimistic, no_optcut,
              no_lexi, stabilized, sbd_add_all, m_cap):
    """Pick the cheapest upgrade plan surviving every scenario."""
    net, scenarios = _load(network_path, scenarios_path)
    if not scenarios:
        raise click.ClickException("scenario file contains no scenarios")
    net = _override_resilience(net, eta_c, eta_t, tol)
    config = SolverConfig(threads=threads, seed=seed, time_limit_s=time_limit)

    started = time.perf_counter()
    try:
        if algorithm == "bnp":
            options = BnpOptions(pessimistic=not no_pessimistic,
                                 optcut=not no_optcut, lexi=not no_lexi,
                                 stabilized=stabilized, gap_tol=tol,
                                 time_limit=time_limit)
            result = solve_bnp(net, scenarios, config=config, options=options)
        elif algorithm == "sbd":
            result = solve_sbd(net, scenarios, config=config, gap_tol=tol,
                               add_all=sbd_add_all, time_limit=time_limit)
        elif algorithm == "extensive":
            result = solve_extensive(net, scenarios, config=config,
                                     gap_tol=tol, time_limit=time_limit)
        else:
            result = solve_bruteforce(net, scenarios, config=config,
                                      m_cap=m_cap, time_limit=time_limit)
    except (OracleError, BnpError, FormulationError, BackendError) as exc:
        raise click.ClickException(str(exc)) from exc

    result.stats["wall_time_s"] = round(time.perf_counter() - started, 6)
    result.stats["seed"] = seed
    result.stats["threads"] = threads
    paths = write_outputs(result, out_dir)

    obj = "-" if result.objective is None else f"{result.objective:.6g}"
    gap = "-" if result.gap is None else f"{result.gap:.3g}"
    click.echo(f"{algorithm}: {result.status}  objective={obj}  gap={gap}  "
               f"upgrades={sum(result.counts.values())}")
    if result.witness is not None:
        click.echo(f"witness scenario: {result.witness}")
    click.echo(f"wrote {paths['plan']}, {paths['trace']}, {paths['summary']}")
    sys.exit(0 if result.status == OPTIMAL else 1)


@main.command("gen-scenarios")
@click.option("--network", "network_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--count", type=int, required=True,
              help="Number of scenarios to draw.")
@click.option("--p", "-p", "probability", type=float, required=True,
              help="Per-mile line failure probability.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--shared-fate/--independent-links", default=False,
              show_default=True,
              help="Damage a line's attached comm link together with it.")
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False, writable=True))
def cmd_gen_scenarios(network_path, count, probability, seed, shared_fate,
                      out_path):
    """Sample damage scenarios from a per-mile failure model."""
    net, _ = _load(network_path, None)
    try:
        spec = StormSpec(p=probability, count=count, seed=seed,
                         shared_fate=shared_fate)
        scenarios = generate(net, spec)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    netio.save_scenarios(scenarios, out_path)
    damaged = sum(len(s.damaged) for s in scenarios)
    click.echo(f"wrote {count} scenarios ({damaged} damaged edges total) "
               f"to {out_path}")


@main.command("validate")
@click.option("--network", "network_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--scenarios", "scenarios_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
def cmd_validate(network_path, scenarios_path):
    """Check a network (and optionally a scenario file) for consistency."""
    try:
        net = netio.load_network(network_path)
    except (netio.NetworkFormatError, netio.NetworkValidationError) as exc:
        raise click.ClickException(str(exc)) from exc
    report = model.validate(net)
    if scenarios_path:
        try:
            doc_scenarios = netio.load_scenarios(scenarios_path)
        except netio.NetworkFormatError as exc:
            raise click.ClickException(str(exc)) from exc
        sreport = model.validate_scenarios(net, doc_scenarios)
        report.violations.extend(sreport.violations)
        report.warnings.extend(sreport.warnings)
    for line in report.warnings:
        click.echo(f"warning: {line}")
    for line in report.violations:
        click.echo(f"violation: {line}")
    if report.ok:
        click.echo(f"ok: {len(net.buses)} buses, {len(net.lines)} lines, "
                   f"{len(net.generators)} generators, "
                   f"{len(net.comm_nodes)} comm nodes, "
                   f"{net.catalog.m} catalog entries")
    sys.exit(0 if report.ok else 1)


@main.command("report")
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True,
              help="Emit one machine-readable JSON object.")
def cmd_report(run_dir, as_json):
    """Summarize a finished run directory (counts, objective, bounds)."""
    run = Path(run_dir)
    plan_path = run / OUTPUT_PLAN
    if not plan_path.exists():
        raise click.ClickException(f"no {OUTPUT_PLAN} in {run_dir}")
    plan = json.loads(plan_path.read_text())
    counts = plan.get("counts", {})
    total = sum(counts.values())

    trace_info: dict = {}
    trace_path = run / OUTPUT_TRACE
    if trace_path.exists():
        rows = trace_path.read_text().splitlines()
        trace_info["iterations"] = max(0, len(rows) - 1)
        if len(rows) > 1:
            last = rows[-1].split(",")
            trace_info["last_ub"] = last[2] or None
            trace_info["last_lb"] = last[3] or None

    summary_path = run / OUTPUT_SUMMARY
    stats = {}
    if summary_path.exists():
        stats = json.loads(summary_path.read_text()).get("stats", {})

    if as_json:
        click.echo(json.dumps({
            "algorithm": plan.get("algorithm"),
            "status": plan.get("status"),
            "objective": plan.get("objective"),
            "lower_bound": plan.get("lower_bound"),
            "upper_bound": plan.get("upper_bound"),
            "gap": plan.get("gap"),
            "counts": counts, "total_upgrades": total,
            "trace": trace_info, "stats": stats,
        }, indent=2, sort_keys=True))
        return
    click.echo(f"algorithm: {plan.get('algorithm')}")
    click.echo(f"status: {plan.get('status')}")
    click.echo(f"objective: {plan.get('objective')}")
    click.echo(f"bounds: lb={plan.get('lower_bound')} "
               f"ub={plan.get('upper_bound')} gap={plan.get('gap')}")
    click.echo("counts: " + "  ".join(
        f"{short}={counts.get(section, 0)}"
        for section, short in _COUNT_LABELS) + f"  total={total}")
    for section, _ in _COUNT_LABELS:
        chosen = plan.get("upgrades", {}).get(section, [])
        if chosen:
            click.echo(f"  {section}: {', '.join(chosen)}")
    if trace_info:
        click.echo(f"trace: {trace_info.get('iterations', 0)} rows, "
                   f"final lb={trace_info.get('last_lb')} "
                   f"ub={trace_info.get('last_ub')}")
    if "wall_time_s" in stats:
        click.echo(f"wall time: {stats['wall_time_s']} s")


if __name__ == "__main__":
    main()
