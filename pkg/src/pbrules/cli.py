"""Command line interface.

Subcommands: ``stats`` (corpus descriptives), ``run`` (one rule on one
file), ``compare`` (aggregate rule comparison), ``extremes`` (largest and
smallest rule effects).  Exit codes: 0 on success, 1 for usage errors,
2 for data errors (unreadable or ill-formed files, empty corpus).

``--dir`` defaults to the PB_DATA_DIR environment variable.  ``--config``
names a flat key=value file whose keys mirror the long option names;
explicit flags win over the config, the config wins over defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    compare_rules,
    extract_extremes,
    format_sig,
    instance_stats,
    stats_csv,
)
from .model import format_money, parse_money
from .pabulib import IngestFilter, PabulibParseError, ingest_directory, parse_pabulib
from .rules import (
    RULE_NAMES,
    SELECTION_BACKEND,
    RuleSpec,
    emit_trace,
    run_rule,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_CONFIG_KEYS = {
    "dir",
    "out",
    "raw_out",
    "skip_report",
    "format",
    "rules",
    "rule",
    "file",
    "epsilon",
    "max_iterations",
    "min_voters",
    "min_projects",
    "filter_defaults",
    "jobs",
    "trace",
    "ledger_out",
}


class _UsageError(Exception):
    pass


class _DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the contract here reserves 2
    # for data errors, so usage failures exit 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _load_config(path: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read config {path!r}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise _UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        dest = key.strip().replace("-", "_")
        if dest not in _CONFIG_KEYS:
            raise _UsageError(f"{path}:{lineno}: unknown config key {key.strip()!r}")
        mapping[dest] = value.strip()
    return mapping


def _apply_config(parser: argparse.ArgumentParser, mapping: dict[str, str]) -> None:
    # set_defaults keeps explicit flags winning; subparsers parse into a
    # fresh namespace, so each one needs the defaults as well
    parser.set_defaults(**mapping)
    for action in parser._actions:
        choices = getattr(action, "choices", None)
        if isinstance(choices, dict):
            for sub in choices.values():
                if isinstance(sub, argparse.ArgumentParser):
                    sub.set_defaults(**mapping)


def _as_int(value, flag: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise _UsageError(f"{flag} must be an integer, got {value!r}") from None


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="flat key=value config file")

    parser = _Parser(prog="pbrules", description=__doc__, parents=[common])
    parser.add_argument(
        "--version",
        action="version",
        version=f"pbrules {__version__} (selection backend: {SELECTION_BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_dir(p):
        p.add_argument("--dir", help="corpus directory of .pb files (default: $PB_DATA_DIR)")
        p.add_argument("--min-voters", default=None, help="skip files with fewer voters")
        p.add_argument("--min-projects", default=None, help="skip files with fewer projects")
        p.add_argument(
            "--filter-defaults",
            action="store_true",
            default=False,
            help="apply the study filter (>= 100 voters, >= 10 projects)",
        )
        p.add_argument("--skip-report", metavar="FILE", help="write skipped files as JSON lines")

    def add_star(p):
        p.add_argument("--epsilon", help="budget increment per completion round (money)")
        p.add_argument("--max-iterations", default=None, help="cap on completion rounds")

    p_stats = sub.add_parser("stats", parents=[common], help="per-instance corpus statistics")
    add_dir(p_stats)
    p_stats.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p_stats.add_argument("--format", choices=("csv", "json"), default="csv")

    p_run = sub.add_parser("run", parents=[common], help="run one rule on one file")
    p_run.add_argument("--file", help="a .pb file")
    p_run.add_argument("--rule", help=f"one of: {', '.join(RULE_NAMES)}")
    add_star(p_run)
    p_run.add_argument("--trace", action="store_true", default=False, help="print the purchase trace")
    p_run.add_argument("--ledger-out", metavar="FILE", help="write the full payment ledger as JSON")
    p_run.add_argument("--out", metavar="FILE", help="write the result JSON here instead of stdout")

    p_compare = sub.add_parser("compare", parents=[common], help="aggregate rule comparison")
    add_dir(p_compare)
    p_compare.add_argument(
        "--rules", default="greedcost,mes+,mes*+", help="comma-separated rule names"
    )
    add_star(p_compare)
    p_compare.add_argument("--jobs", default=None, help="parallel worker processes")
    p_compare.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p_compare.add_argument("--raw-out", metavar="FILE", help="write the per-instance table too")
    p_compare.add_argument("--format", choices=("csv", "json"), default="csv")

    p_extremes = sub.add_parser(
        "extremes", parents=[common], help="rank instances by rule effect"
    )
    add_dir(p_extremes)
    add_star(p_extremes)
    p_extremes.add_argument("--jobs", default=None, help="parallel worker processes")
    p_extremes.add_argument("--out", metavar="FILE", help="write the JSON report here")

    return parser


def _write_out(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _ingest(args) -> tuple:
    directory = args.dir or os.environ.get("PB_DATA_DIR")
    if not directory:
        raise _UsageError("no corpus directory: pass --dir or set PB_DATA_DIR")
    defaults = IngestFilter() if _as_bool(args.filter_defaults) else None
    min_voters = (
        _as_int(args.min_voters, "--min-voters")
        if args.min_voters is not None
        else (defaults.min_voters if defaults else 1)
    )
    min_projects = (
        _as_int(args.min_projects, "--min-projects")
        if args.min_projects is not None
        else (defaults.min_projects if defaults else 1)
    )
    ingest_filter = IngestFilter(min_voters=min_voters, min_projects=min_projects)
    try:
        result = ingest_directory(directory, ingest_filter)
    except (FileNotFoundError, NotADirectoryError, OSError) as exc:
        raise _DataError(str(exc)) from None
    if args.skip_report:
        Path(args.skip_report).write_text(
            "\n".join(result.skip_report_lines()) + ("\n" if result.skipped else ""),
            encoding="utf-8",
        )
    print(
        f"accepted {len(result.accepted)} instances, skipped {len(result.skipped)} files",
        file=sys.stderr,
    )
    if not result.accepted:
        raise _DataError(f"no instances accepted from {directory}")
    return result.accepted


def _star_kwargs(args) -> dict:
    kwargs: dict = {}
    if getattr(args, "epsilon", None):
        try:
            kwargs["epsilon"] = parse_money(args.epsilon)
        except ValueError as exc:
            raise _UsageError(f"--epsilon: {exc}") from None
    if getattr(args, "max_iterations", None) is not None:
        kwargs["max_iterations"] = _as_int(args.max_iterations, "--max-iterations")
    return kwargs


def _make_spec(name: str, args) -> RuleSpec:
    try:
        return RuleSpec.from_name(name, **_star_kwargs(args))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _cmd_stats(args) -> int:
    dataset = _ingest(args)
    rows = [instance_stats(instance, profile) for instance, profile in dataset]
    if args.format == "json":
        payload = [
            {
                "instance_id": r.instance_id,
                "voters": r.voters,
                "projects": r.projects,
                "budget": format_money(r.budget),
                "mean_project_cost_share": float(r.mean_project_cost_share),
                "scarcity": float(r.scarcity),
                "mean_ballot_cost_share": float(r.mean_ballot_cost_share),
            }
            for r in rows
        ]
        _write_out(json.dumps(payload, indent=2), args.out)
    else:
        _write_out(stats_csv(rows), args.out)
    return EXIT_OK


def _cmd_run(args) -> int:
    if not args.file:
        raise _UsageError("run needs --file")
    if not args.rule:
        raise _UsageError("run needs --rule")
    spec = _make_spec(args.rule, args)
    path = Path(args.file)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _DataError(f"cannot read {path}: {exc}") from None
    try:
        instance, profile = parse_pabulib(text, source=path.name)
    except PabulibParseError as exc:
        raise _DataError(f"{path}: {exc}") from None
    result = run_rule(spec, instance, profile)
    _write_out(json.dumps(result.to_json_dict(instance), indent=2), args.out)
    if args.ledger_out:
        if result.ledger is None:
            raise _UsageError(f"rule {result.rule} produces no payment ledger")
        Path(args.ledger_out).write_text(result.ledger.to_json(indent=2), encoding="utf-8")
    if _as_bool(args.trace):
        if result.ledger is None:
            raise _UsageError(f"rule {result.rule} produces no purchase trace")
        print(emit_trace(result.ledger, instance))
    return EXIT_OK


def _cmd_compare(args) -> int:
    dataset = _ingest(args)
    names = [name.strip() for name in str(args.rules).split(",") if name.strip()]
    if not names:
        raise _UsageError("--rules lists no rule names")
    specs = [_make_spec(name, args) for name in names]
    jobs = _as_int(args.jobs, "--jobs") if args.jobs is not None else 1
    report = compare_rules(dataset, specs, jobs=jobs)
    if args.format == "json":
        payload = {
            "rules": list(report.rules),
            "rows": [
                {
                    "metric": r.metric,
                    "rule": r.rule,
                    "n_instances": r.n_instances,
                    "mean": None if r.mean is None else float(format_sig(r.mean)),
                    "std_error": None if r.std_error is None else float(format_sig(r.std_error)),
                    "p_vs_baseline": None
                    if r.p_vs_baseline is None
                    else float(format_sig(r.p_vs_baseline)),
                    "significant": r.significant,
                }
                for r in report.rows
            ],
        }
        _write_out(json.dumps(payload, indent=2), args.out)
    else:
        _write_out(report.to_csv(), args.out)
    if args.raw_out:
        Path(args.raw_out).write_text(report.raw_csv(), encoding="utf-8")
    return EXIT_OK


def _cmd_extremes(args) -> int:
    dataset = _ingest(args)
    kwargs = _star_kwargs(args)
    spec = RuleSpec.from_name("mes*+", **kwargs)
    jobs = _as_int(args.jobs, "--jobs") if args.jobs is not None else 1
    try:
        report = extract_extremes(dataset, mes_spec=spec, jobs=jobs)
    except ValueError as exc:
        raise _DataError(str(exc)) from None
    _write_out(report.to_json(indent=2), args.out)
    return EXIT_OK


_COMMANDS = {
    "stats": _cmd_stats,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "extremes": _cmd_extremes,
}


def cli_main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    try:
        known, _ = probe.parse_known_args(argv)
        parser = _build_parser()
        if known.config:
            _apply_config(parser, _load_config(known.config))
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except _DataError as exc:
        print(f"pbrules: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
