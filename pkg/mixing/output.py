"""Report files (report.json, bounds.csv, comparison.csv) and rounded console tables."""
import json
import logging
import os

import pandas as pd
from rich.table import Table

from config import OUTPUT_DIR
from mixing.bounds import BoundReport
from mixing.empirics import ComparisonTable
from mixing.utils import safe_value

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
BOUNDS_FILE = "bounds.csv"
COMPARISON_FILE = "comparison.csv"


def _get_output_dir(out: str | None = None) -> str:
    """Return the requested output dir, else the configured base, creating it."""
    d = out or OUTPUT_DIR
    os.makedirs(d, exist_ok=True)
    return d


def write_json(path: str, payload: dict) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(safe_value(payload), f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
    return path


def write_outputs(out: str | None, payload: dict, report: BoundReport,
                  comparison: ComparisonTable | None = None) -> dict:
    """Write the three report files; comparison.csv only when a comparison ran."""
    d = _get_output_dir(out)
    paths = {
        "report": write_json(os.path.join(d, REPORT_FILE), payload),
        "bounds": report.to_csv(os.path.join(d, BOUNDS_FILE)),
        "comparison": None,
    }
    if comparison is not None:
        paths["comparison"] = comparison.to_csv(os.path.join(d, COMPARISON_FILE))
    logger.info(f"wrote report files to {d}")
    return paths


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def csv_table(path: str, title: str, every: int = 1) -> Table:
    """Rounded console view of a report CSV; keeps every `every`-th row plus the last."""
    df = pd.read_csv(path)
    table = Table(title=title)
    for col in df.columns:
        table.add_column(str(col), justify="right")
    last = len(df) - 1
    for k, row in enumerate(df.itertuples(index=False)):
        if k % every and k != last:
            continue
        table.add_row(*(_fmt(v) for v in row))
    return table
