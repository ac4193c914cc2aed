# services/mixture_lab/cli.py
"""
Command-line front end for scenario files.

    python cli.py value fix1 Db E1 --t 2
    python cli.py upsilon fix1 Db Y1 --t 2
    python cli.py check fix1 [--only name]
    python cli.py universal fix1 Y1 --out U1
    python cli.py probe-extrema fix1 Y1 Mix --site "(o,0)" --eps 1/4 --t 2
    python cli.py probe-separability fix1 E1 --inside Db --outside Da --t 2

Reports go to stdout, diagnostics to stderr. Exit codes: 0 all checks
passed, 1 some check failed, 2 the scenario or the command was invalid.
"""
import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from app.core.config import settings
from app.core.errors import EXIT_FAILED, EXIT_INVALID, EXIT_OK, AlgebraError
from app.core.logging import setup_logger
from app.models.primitives import NodeBudget, parse_rational
from app.schemas.reports import CheckReport, ValueResultOut
from app.services import analysis
from app.services.scenarios import ScenarioBuilder, load_scenario, run, serialize_scenario, validate_document
from app.services.valuation import upsilon, value_interval

logger = setup_logger("cli")

VALUE_COLUMNS = ("agent", "target", "t", "value", "tail")
CHECK_COLUMNS = ("check_name", "op", "verdict", "depth")


def _parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="mixture-lab", description="Exact checks over agent mixtures and intelligence measures.")
    parser.add_argument("--format", choices=("json", "csv"), default=None, help="Report format (default: the scenario's output.format)")
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized probes")
    parser.add_argument("--max-nodes", dest="max_nodes", type=int, default=None, help="Node budget override")
    commands = parser.add_subparsers(dest="command", required=True)

    value = commands.add_parser("value", help="V_t of an agent in an environment")
    value.add_argument("scenario")
    value.add_argument("agent")
    value.add_argument("env")
    value.add_argument("--t", type=int, required=True)

    ups = commands.add_parser("upsilon", help="Weighted intelligence of an agent under a measure")
    ups.add_argument("scenario")
    ups.add_argument("agent")
    ups.add_argument("measure")
    ups.add_argument("--t", type=int, required=True)

    check = commands.add_parser("check", help="Run the scenario's checks in declaration order")
    check.add_argument("scenario")
    check.add_argument("--only", default=None)

    universal = commands.add_parser("universal", help="Add the universal environment of a measure to the scenario")
    universal.add_argument("scenario")
    universal.add_argument("measure")
    universal.add_argument("--out", required=True)

    extrema = commands.add_parser("probe-extrema", help="Patch an agent in both directions at a site")
    extrema.add_argument("scenario")
    extrema.add_argument("measure")
    extrema.add_argument("agent")
    extrema.add_argument("--site", required=True)
    extrema.add_argument("--eps", required=True)
    extrema.add_argument("--t", type=int, required=True)

    separability = commands.add_parser("probe-separability", help="Compare value ranges of two agent sets")
    separability.add_argument("scenario")
    separability.add_argument("env")
    separability.add_argument("--inside", required=True, help="Comma separated agent names")
    separability.add_argument("--outside", required=True, help="Comma separated agent names")
    separability.add_argument("--t", type=int, required=True)
    return parser.parse_args(argv)


def _names(text: str) -> List[str]:
    return [name.strip() for name in text.split(",") if name.strip()]


def _csv(columns: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buffer.getvalue()


def _emit_reports(reports: Sequence[CheckReport], fmt: str) -> None:
    if fmt == "csv":
        sys.stdout.write(_csv(CHECK_COLUMNS, ([r.check_name, r.op, r.verdict, r.depth] for r in reports)))
        return
    for report in reports:
        sys.stdout.write(report.model_dump_json(exclude_none=True) + "\n")


def _emit_value(agent: str, target: str, out: ValueResultOut, fmt: str) -> None:
    if fmt == "csv":
        sys.stdout.write(_csv(VALUE_COLUMNS, [[agent, target, out.t, out.value, out.tail]]))
    else:
        sys.stdout.write(out.model_dump_json() + "\n")


def _report_exit(report: CheckReport) -> int:
    return EXIT_OK if report.passed else EXIT_FAILED


def execute(args: argparse.Namespace) -> int:
    scenario = load_scenario(Path(args.scenario))
    fmt = args.format or scenario.output.format
    budget = NodeBudget(args.max_nodes or settings.MAX_NODES)

    if args.command == "check":
        result = run(scenario, seed=args.seed, max_nodes=args.max_nodes, only=args.only)
        _emit_reports(result.reports, fmt)
        return result.exit_code

    builder = ScenarioBuilder(scenario)
    if args.command == "value":
        result = value_interval(builder.agent(args.agent), builder.env(args.env), args.t, budget)
        _emit_value(args.agent, args.env, ValueResultOut.from_result(result), fmt)
        return EXIT_OK
    if args.command == "upsilon":
        result = upsilon(builder.measure(args.measure), builder.agent(args.agent), args.t, budget)
        _emit_value(args.agent, args.measure, ValueResultOut.from_result(result), fmt)
        return EXIT_OK
    if args.command == "universal":
        builder.measure(args.measure)
        document = scenario.model_dump(mode="json", exclude_none=True)
        document["environments"][args.out] = {"kind": "universal", "measure": args.measure}
        sys.stdout.write(serialize_scenario(validate_document(document)) + "\n")
        return EXIT_OK
    if args.command == "probe-extrema":
        report = analysis.extrema_probe(
            builder.measure(args.measure), builder.agent(args.agent), builder.history(args.site),
            parse_rational(args.eps), args.t, budget=budget,
        )
        _emit_reports([report], fmt)
        return _report_exit(report)
    if args.command == "probe-separability":
        report = analysis.separability_probe(
            builder.env(args.env), builder.agents_of(_names(args.inside)), builder.agents_of(_names(args.outside)),
            args.t, budget=budget,
        )
        _emit_reports([report], fmt)
        return _report_exit(report)
    raise ValueError(f"Unknown command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parse_args(argv)
    try:
        return execute(args)
    except AlgebraError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
