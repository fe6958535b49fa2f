"""Tabular views of a CorrelationReport and their export to disk."""
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from shared.models import ExportType
from app.core.config import settings
from app.core.logger import Logger
from app.schemas.evaluation import CorrelationReport

logger = Logger("report_export").get_logger()

REPORT_COLUMNS = [
    "subset", "n", "pearson", "spearman", "abs_pearson", "abs_spearman",
    "gamma1", "gamma2", "gamma3", "gamma4", "skipped_reason",
]
SCORE_COLUMNS = ["subset", "ref_path", "dist_path", "dmos", "score", "predicted_dmos"]

_EXTENSIONS = {
    ExportType.csv: "csv",
    ExportType.excel: "xlsx",
    ExportType.json: "json",
    ExportType.feather: "feather",
}


def report_frame(report: CorrelationReport) -> pd.DataFrame:
    rows = []
    for entry in report.subsets:
        gamma = entry.gamma.as_tuple() if entry.gamma else (None,) * 4
        rows.append({
            "subset": entry.subset,
            "n": entry.n,
            "pearson": entry.pearson,
            "spearman": entry.spearman,
            "abs_pearson": abs(entry.pearson) if entry.pearson is not None else None,
            "abs_spearman": abs(entry.spearman) if entry.spearman is not None else None,
            "gamma1": gamma[0],
            "gamma2": gamma[1],
            "gamma3": gamma[2],
            "gamma4": gamma[3],
            "skipped_reason": entry.skipped_reason or "",
        })
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def scores_frame(report: CorrelationReport) -> pd.DataFrame:
    rows = [
        {
            "subset": s.subset_label,
            "ref_path": s.ref_path,
            "dist_path": s.dist_path,
            "dmos": s.dmos,
            "score": s.score,
            "predicted_dmos": s.predicted_dmos,
        }
        for s in report.scores
    ]
    return pd.DataFrame(rows, columns=SCORE_COLUMNS)


def format_table(frame: pd.DataFrame) -> str:
    """Tab-separated text with 6 significant digits."""
    return frame.to_csv(sep="\t", index=False, float_format="%.6g", na_rep="")


def export_frame(
    frame: pd.DataFrame,
    export_type: Union[ExportType, str, None] = None,
    location: Union[str, Path, None] = None,
    filename: Optional[str] = None,
) -> Path:
    """Write ``frame`` as csv, excel, json or feather and return the file path."""
    export_type = ExportType(export_type or settings.DEFAULT_EXPORT_TYPE)
    extension = _EXTENSIONS[export_type]
    directory = Path(location or settings.DEFAULT_EXPORT_LOCATION)
    directory.mkdir(parents=True, exist_ok=True)

    if filename:
        if not filename.endswith(f".{extension}"):
            filename = f"{filename}.{extension}"
    else:
        timestamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")
        filename = f"report_{timestamp}.{extension}"
    filepath = directory / filename

    if export_type is ExportType.csv:
        frame.to_csv(filepath, index=False)
    elif export_type is ExportType.excel:
        frame.to_excel(filepath, index=False, engine="openpyxl")
    elif export_type is ExportType.json:
        frame.to_json(filepath, orient="records")
    elif export_type is ExportType.feather:
        frame.reset_index(drop=True).to_feather(filepath)

    logger.info(f"Exported {len(frame)} rows as {export_type.value} to {filepath}")
    return filepath
