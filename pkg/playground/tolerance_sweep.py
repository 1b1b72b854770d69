import os
import sys
from pathlib import Path

import polars as pl
from dotenv import load_dotenv
from loguru import logger
from tqdm import tqdm

REPO_ROOT = Path(__file__).resolve().parent.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.append(str(REPO_ROOT))

from src.schema.report import EngineConfig
from src.schema.scenario import parse_scenario
from src.schema.util import flat_frame, pl_df_from_pydantic_list
from src.volumes import volume_report

load_dotenv()

# Scenarios whose reference values we want to watch converge
SCENARIOS = [
    "bures:[(2,3)]:real",
    "bures:[(2,3)]:complex",
    "bures:[(1,4),(2,3)]:real",
]
TOLERANCES = [1e-3, 1e-4, 1e-5, 1e-6]
OUTPUT_DIR = Path(os.getenv("SWEEP_OUTPUT_DIR", REPO_ROOT / "output"))


def sweep() -> pl.DataFrame:
    reports = []
    for label in tqdm(SCENARIOS, desc="scenarios"):
        s = parse_scenario(label)
        for rel_tol in TOLERANCES:
            report = volume_report(s, EngineConfig(rel_tol=rel_tol))
            logger.info(
                "scenario={}, rel_tol={}, total={}, evaluations={}, rel_dev={}",
                label,
                rel_tol,
                report.total,
                report.evaluations,
                report.rel_dev_from_reference,
            )
            reports.append(report)
    return flat_frame(pl_df_from_pydantic_list(reports))


if __name__ == "__main__":
    df = sweep()
    print(df.select("scenario", "engine_config.rel_tol", "total", "evaluations", "rel_dev_from_reference"))
    OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
    df.write_csv(OUTPUT_DIR / "tolerance_sweep.csv")
    logger.info("wrote {}", OUTPUT_DIR / "tolerance_sweep.csv")
