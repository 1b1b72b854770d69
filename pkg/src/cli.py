"""
Command-line entry point: `python -m src.cli <command> [options]`.

    list       cataloged scenarios
    sepfun     closed-form vs numeric separability function on a μ grid
    volumes    total/separable volumes and separability probabilities
    figures    normalized Dyson curves (CSV behind the joint plots)
    verify     acceptance suite (quick | full)
    reference  stored reference values
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

import polars as pl
from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel
from tqdm import tqdm

from src.acceptance import checks, run_check
from src.errors import NonConvergenceError, SeparabilityError, UnsupportedScenarioError
from src.schema.report import (
    CatalogEntry,
    EngineConfig,
    RunConfig,
    RunOutput,
    SepfunRow,
    tool_version,
)
from src.schema.scenario import Scenario, catalog, in_catalog, parse_scenario
from src.schema.util import flat_frame, pl_df_from_pydantic_list
from src.sepfun import dyson_report, mu_grid, sep_function_closed, sep_function_numeric
from src.volumes import reference_table, volume_report

load_dotenv()

REL_TOL = float(os.getenv("SEPFUN_REL_TOL", "1e-6"))
MAX_EVALS = int(float(os.getenv("SEPFUN_MAX_EVALS", "5e7")))
QMC_N = int(float(os.getenv("SEPFUN_QMC_N", str(2**22))))
QMC_REPLICATES = int(os.getenv("SEPFUN_QMC_REPLICATES", "8"))
SEED = int(os.getenv("SEPFUN_SEED", "20240601"))
GRID = int(os.getenv("SEPFUN_GRID", "201"))
MU_MAX = float(os.getenv("SEPFUN_MU_MAX", "2.0"))
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

EXIT_OK = 0
EXIT_IO = 1
EXIT_VERIFY_FAILED = 2
EXIT_UNSUPPORTED = 3
EXIT_NOT_CONVERGED = 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rel-tol", type=float, default=REL_TOL)
    common.add_argument("--max-evals", type=int, default=MAX_EVALS)
    common.add_argument("--qmc-n", type=int, default=QMC_N)
    common.add_argument("--replicates", type=int, default=QMC_REPLICATES)
    common.add_argument("--seed", type=int, default=SEED)
    common.add_argument("--format", choices=("table", "csv", "json"), default=None)
    common.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    common.add_argument("--log-level", default=LOG_LEVEL)
    common.add_argument(
        "--allow-unconverged", action="store_true", help="exit 0 even when an integral missed its tolerance"
    )

    parser = argparse.ArgumentParser(prog="sepfun", description="Separability functions and volumes of two-qubit states")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", parents=[common], help="list cataloged scenarios")
    p.add_argument("--metric", choices=("hs", "bures"))

    p = sub.add_parser("sepfun", parents=[common], help="closed-form vs numeric S(μ)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--metric", choices=("hs", "bures"))
    p.add_argument("--grid", type=int, default=GRID)
    p.add_argument("--mu-max", type=float, default=MU_MAX)
    p.add_argument("--engine", choices=("auto", "adaptive", "qmc"), default="auto")

    p = sub.add_parser("volumes", parents=[common], help="volumes and separability probabilities")
    p.add_argument("--scenario", action="append", default=[])
    p.add_argument("--metric", choices=("hs", "bures"))
    p.add_argument("--all", action="store_true", help="every scenario of the reference table")
    p.add_argument("--route", choices=("factorized", "direct"), default="factorized")
    p.add_argument("--engine", choices=("auto", "adaptive", "qmc"), default="auto")

    p = sub.add_parser("figures", parents=[common], help="normalized Dyson curves")
    p.add_argument("--metric", choices=("hs", "bures"), default="bures")
    p.add_argument("--family", choices=("single", "two"), default="single")
    p.add_argument("--grid", type=int, default=GRID)
    p.add_argument("--mu-max", type=float, default=MU_MAX)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")

    sub.add_parser("reference", parents=[common], help="print the reference table")
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    fmt = args.format or ("csv" if args.command == "figures" else "table")
    scenarios = getattr(args, "scenario", None) or []
    if isinstance(scenarios, str):
        scenarios = [scenarios]
    fields = {
        key: getattr(args, key)
        for key in ("metric", "all", "route", "engine", "family", "level", "grid", "mu_max")
        if getattr(args, key, None) is not None
    }
    return RunConfig(
        command=args.command,
        scenarios=scenarios,
        allow_unconverged=args.allow_unconverged,
        format=fmt,
        out=str(args.out) if args.out else None,
        engine_config=EngineConfig(
            rel_tol=args.rel_tol,
            max_evals=args.max_evals,
            qmc_n=args.qmc_n,
            replicates=args.replicates,
            seed=args.seed,
        ),
        **fields,
    )


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper())


def _progress(items: Sequence, desc: str):
    return tqdm(items, desc=desc, file=sys.stderr, disable=not sys.stderr.isatty())


def _run_columns(cfg: RunConfig) -> dict:
    """Provenance carried on every CSV row: tool version and the integration budgets."""
    columns = {"version": tool_version()}
    columns.update({f"engine_config.{key}": value for key, value in cfg.engine_config.model_dump().items()})
    return columns


def render(cfg: RunConfig, records: Sequence[BaseModel], summary: dict | None = None) -> str:
    summary = summary or {}
    if cfg.format == "json":
        output = RunOutput(
            run_config=cfg,
            records=[r.model_dump(mode="json") for r in records],
            summary=summary,
        )
        return output.model_dump_json(indent=2) + "\n"

    if cfg.format == "csv":
        if not records:
            return ""
        df = flat_frame(pl_df_from_pydantic_list(records))
        extra = [pl.lit(v).alias(k) for k, v in _run_columns(cfg).items() if k not in df.columns]
        return (df.with_columns(extra) if extra else df).write_csv()

    text = ""
    if records:
        with pl.Config(tbl_rows=-1, tbl_cols=-1, fmt_float="full"):
            text = str(flat_frame(pl_df_from_pydantic_list(records))) + "\n"
    for key, value in summary.items():
        text += f"{key}: {value}\n"
    text += f"version: {tool_version()}\n"
    text += f"engine_config: {cfg.engine_config.model_dump_json()}\n"
    return text


def emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
        return
    path = Path(cfg.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote {} to {}", cfg.command, path)


def _scenarios(cfg: RunConfig) -> list[Scenario]:
    scenarios = [parse_scenario(text, metric=cfg.metric) for text in cfg.scenarios]
    for s in scenarios:
        if not in_catalog(s):
            raise UnsupportedScenarioError(f"{s} is not a cataloged scenario; see `list`")
    return scenarios


def _require_converged(cfg: RunConfig, flags: list[bool]) -> None:
    """Runs after `emit`; raises NonConvergenceError unless `allow_unconverged` is set."""
    missed = flags.count(False)
    if not missed:
        return
    if cfg.allow_unconverged:
        logger.warning("non-convergence allowed: integrals={}, rel_tol={}", missed, cfg.engine_config.rel_tol)
        return
    raise NonConvergenceError(f"{missed} integral(s) did not reach rel_tol={cfg.engine_config.rel_tol}")


def cmd_list(cfg: RunConfig) -> int:
    rows = [
        CatalogEntry(
            scenario=s.label(),
            metric=s.metric,
            algebra=s.algebra_label,
            entries=s.label().split(":")[1],
            dimension=s.dimension,
            factorizable=s.is_factorizable,
            closed_form_density=True,
            separability_function=s.is_factorizable,
            separable_volume=s.is_factorizable,
        )
        for s in catalog(cfg.metric)
    ]
    emit(cfg, render(cfg, rows, {"scenarios": len(rows)}))
    return EXIT_OK


def cmd_sepfun(cfg: RunConfig) -> int:
    (s,) = _scenarios(cfg)
    engine = "adaptive" if cfg.engine == "auto" else cfg.engine
    rows = []
    flags = []
    for mu in _progress(mu_grid(cfg.grid, cfg.mu_max), f"S(μ) {s}"):
        closed = float(sep_function_closed(s, mu))
        result = sep_function_numeric(s, float(mu), engine, cfg.engine_config)
        flags.append(result.converged)
        rows.append(
            SepfunRow(
                scenario=s.label(),
                mu=float(mu),
                s_closed=closed,
                s_numeric=result.estimate,
                error_estimate=result.error_estimate,
                deviation=abs(result.estimate - closed),
            )
        )
    worst = max(r.deviation / abs(r.s_closed) if r.s_closed else r.deviation for r in rows)
    logger.info("separability function: scenario={}, points={}, max_rel_dev={}", s, len(rows), worst)
    emit(cfg, render(cfg, rows, {"max_rel_deviation": worst}))
    _require_converged(cfg, flags)
    return EXIT_OK


def cmd_volumes(cfg: RunConfig) -> int:
    if cfg.all:
        labels = list(dict.fromkeys(row.scenario for row in reference_table()))
        scenarios = [parse_scenario(label) for label in labels]
        if cfg.metric:
            scenarios = [s for s in scenarios if s.metric == cfg.metric]
    else:
        scenarios = _scenarios(cfg)
    if not scenarios:
        raise UnsupportedScenarioError("no scenario selected; pass --scenario or --all")

    reports = []
    for s in _progress(scenarios, "volumes"):
        report = volume_report(s, cfg.engine_config, cfg.route, cfg.engine)
        logger.info(
            "volumes: scenario={}, total={}, separable={}, probability={}, rel_dev={}",
            report.scenario,
            report.total,
            report.separable,
            report.probability,
            report.rel_dev_from_reference,
        )
        reports.append(report)
    deviations = [r.rel_dev_from_reference for r in reports if r.rel_dev_from_reference is not None]
    summary = {"max_rel_deviation": max(deviations)} if deviations else {}
    emit(cfg, render(cfg, reports, summary))
    _require_converged(cfg, [r.converged for r in reports])
    return EXIT_OK


def cmd_figures(cfg: RunConfig) -> int:
    report = dyson_report(cfg.metric or "bures", cfg.family, mu_grid(cfg.grid, cfg.mu_max))
    summary = {
        "max_dev_rc": report.max_dev_rc,
        "max_dev_rq": report.max_dev_rq,
        "max_dev_cq": report.max_dev_cq,
        "threshold": report.threshold,
        "exact": report.exact,
    }
    logger.info("dyson curves: metric={}, family={}, max_deviation={}", report.metric, report.family, report.max_deviation)
    emit(cfg, render(cfg, report.rows, summary))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    suite = checks(cfg.level, seed=cfg.engine_config.seed)
    results = [run_check(check, cfg.engine_config) for check in _progress(suite, f"verify {cfg.level}")]
    failed = [r.name for r in results if not r.passed]
    summary = {"checks": len(results), "failed": len(failed)}
    emit(cfg, render(cfg, results, summary))
    if failed:
        logger.error("verification failed: checks={}", ", ".join(failed))
        return EXIT_VERIFY_FAILED
    logger.info("verification passed: level={}, checks={}", cfg.level, len(results))
    return EXIT_OK


def cmd_reference(cfg: RunConfig) -> int:
    emit(cfg, render(cfg, reference_table()))
    return EXIT_OK


COMMANDS = {
    "list": cmd_list,
    "sepfun": cmd_sepfun,
    "volumes": cmd_volumes,
    "figures": cmd_figures,
    "verify": cmd_verify,
    "reference": cmd_reference,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        cfg = run_config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except UnsupportedScenarioError as exc:
        logger.error("unsupported scenario: {}", exc)
        return EXIT_UNSUPPORTED
    except NonConvergenceError as exc:
        logger.error("non-convergence: {}", exc)
        return EXIT_NOT_CONVERGED
    except SeparabilityError as exc:
        logger.error("{}: {}", type(exc).__name__, exc)
        return EXIT_UNSUPPORTED
    except ValueError as exc:
        logger.error("invalid input: {}", exc)
        return EXIT_UNSUPPORTED
    except OSError as exc:
        logger.error("cannot write output: path={}, error={}", getattr(exc, "filename", None), exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
