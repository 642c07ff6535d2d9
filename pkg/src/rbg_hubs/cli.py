from __future__ import annotations
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import ExperimentConfig, build_config, describe_environment, load_config_file
from .errors import ConfigError, ExperimentError, RbgError
from .orchestration import ExperimentOrchestrator
from .output_writer import get_base_output_dir, render_json

EXIT_OK = 0
EXIT_EXPERIMENT = 1
EXIT_CONFIG = 2

SWEEPS = ("percolate", "zeta")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="Flat key = value config file; flags given here win")
    p.add_argument("--conn", help="Connection spec: boolean:<theta> | pboolean:<a>:<theta> | exp:<theta>, optional @p=<disp>")
    p.add_argument("--d", type=int, help="Ambient dimension (default 2)")
    p.add_argument("--lambda", dest="lam", type=float, help="Agent density")
    p.add_argument("--mu", type=float, help="Hub density")
    p.add_argument("--L", dest="L", help="Window side; a comma list or a:b:n for sweeps")
    p.add_argument("--reps", type=int, help="Replications per point")
    p.add_argument("--seed", type=int, help="Top-level seed (mandatory when sampling)")
    p.add_argument("--epsilon", type=float, help="Neglected moment mass for infinite-support truncation")
    p.add_argument("--workers", type=int, help="Worker processes (default: RBG_HUBS_WORKERS or 1)")
    p.add_argument("--out", help="Write artifacts into this directory instead of outputs/<experiment>/<run>")
    p.add_argument("--format", choices=["csv", "json"], help="Result file format")
    p.add_argument("--strict", action="store_true", default=None, help="Fail (exit 1) on censored thresholds")
    p.add_argument("--max-runs", type=int, default=None, help="Prune the oldest run dirs of this experiment beyond this count")
    p.add_argument("--json", action="store_true", help="Emit a machine-readable summary on stdout")
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rbg-hubs", description="Random bipartite geometric graph experiments")
    sub = p.add_subparsers(dest="subcommand", required=True)

    degrees = sub.add_parser("degrees", help="Palm Monte Carlo of hub degree, M and N")
    _add_common(degrees)

    theory = sub.add_parser("theory", help="Closed forms and quadratures")
    _add_common(theory)

    for name, text in (("percolate", "Percolation sweep at a fixed density"), ("zeta", "Unipartite critical density")):
        sp = sub.add_parser(name, help=text)
        _add_common(sp)
        sp.add_argument("--grid", help="Swept densities: a:b:n or a comma list")
        sp.add_argument("--criterion", choices=["wrap", "span", "fraction"], help="Finite-size percolation criterion")
        sp.add_argument("--fraction-threshold", type=float, help="Largest-component agent fraction (fraction criterion)")
        if name == "percolate":
            sp.add_argument("--fix", help="Fixed density, lambda=<v> or mu=<v>")

    figs = sub.add_parser("figs", help="Plot-ready data for the reference figures")
    figs.add_argument("figure", choices=["fig1", "fig2"])
    _add_common(figs)
    figs.add_argument("--p-grid", help="Dispersion values in (0, 1] for fig2")
    return p


FLAG_FIELDS = (
    "conn", "d", "lam", "mu", "L", "reps", "seed", "epsilon", "workers", "out", "format",
    "strict", "grid", "criterion", "fraction_threshold", "fix", "p_grid", "figure",
)


def _route_window(values: Dict[str, Any], subcommand: str) -> Dict[str, Any]:
    """``L`` names the single window for degrees and the window list for sweeps."""
    values = dict(values)
    if subcommand in SWEEPS and "L" in values:
        values.setdefault("L_list", values.pop("L"))
    elif "L" in values and isinstance(values["L"], str):
        try:
            values["L"] = float(values["L"])
        except ValueError as e:
            raise ConfigError(f"--L expects a number for {subcommand}, got {values['L']!r}") from e
    return values


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    file_values = load_config_file(args.config) if args.config else {}
    file_values.pop("subcommand", None)
    overrides = {k: getattr(args, k, None) for k in FLAG_FIELDS}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    overrides = _route_window(overrides, args.subcommand)
    overrides["subcommand"] = args.subcommand
    return build_config(_route_window(file_values, args.subcommand), **overrides)


def format_table(rows: List[Dict[str, Any]]) -> str:
    """Fixed-width text table; floats in 10 significant digits."""
    columns = list(rows[0])
    cells = [[f"{r[c]:.10g}" if isinstance(r[c], float) else str(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(line.rstrip() for line in lines)


def _fail(err: BaseException, code: int) -> int:
    payload = err.to_payload() if isinstance(err, RbgError) else {"error": type(err).__name__, "message": str(err)}
    payload["exit_code"] = code
    print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
    return code


def _audit_path(out: Optional[str]) -> str:
    base = Path(out).expanduser() if out else get_base_output_dir()
    return str(base / "run_log.jsonl")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as e:
        return _fail(e, EXIT_CONFIG)
    logging.getLogger(__name__).info("environment: %s", describe_environment())

    orchestrator = ExperimentOrchestrator(cfg, audit_path=_audit_path(cfg.out), max_runs=args.max_runs)
    try:
        outcome = orchestrator.run()
    except ExperimentError as e:
        return _fail(e, EXIT_EXPERIMENT)
    except ValueError as e:
        # precondition failures of the library (window too small, bad grid)
        return _fail(e, EXIT_CONFIG)

    if args.json:
        print(render_json({
            "experiment": outcome.experiment,
            "artifacts_path": str(outcome.run_dir),
            "summary": outcome.summary,
            "table": outcome.table,
            "metrics": orchestrator.metrics.snapshot(),
        }))
    else:
        print(f"=== {outcome.experiment} ===")
        for key, value in outcome.summary.items():
            print(f"{key}: {value}")
        if outcome.table:
            print()
            print(format_table(outcome.table))
        print(f"\nArtifacts saved to: {outcome.run_dir}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
