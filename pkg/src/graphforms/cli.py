"""``graphforms`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import HorizonError, InputError, SolverError
from .report import COMMANDS, AnalysisConfig, emit_report, parse_graph_spec, run_analysis

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphforms",
                                description="Potential theory and boundary forms on weighted graphs.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", required=True, help="graph spec (JSON)")
    p.add_argument("--config", help="analysis config (JSON); defaults are embedded")
    p.add_argument("--output", help="report path (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"), help="report format (default from config: json)")
    return p


def _load_config(path: str | None) -> AnalysisConfig:
    if path is None:
        return AnalysisConfig()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be an object")
    return AnalysisConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        obj, beta = parse_graph_spec(args.input)
        report = run_analysis(obj, args.command, cfg, beta)
        text = emit_report(report, args.format or cfg.format, args.output)
    except (InputError, OSError, KeyError, TypeError) as exc:
        print(f"graphforms: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, HorizonError) as exc:
        print(f"graphforms: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.output is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
