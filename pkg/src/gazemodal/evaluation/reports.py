"""CSV, PGM and SVG artifacts for experiment results."""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from gazemodal.core.models import CLASS_NAMES, AucReport, OverlapReport, StudyRecord
from gazemodal.data.pgm import read_pgm, write_pgm
from gazemodal.errors import DataError
from gazemodal.evaluation.experiments import OVERLAP_COMPARISONS, ExperimentResult, OverlapRow
from gazemodal.evaluation.metrics import ATTENTION_CUTOFF, attention_overlap
from gazemodal.utils.logger import get_logger
from gazemodal.utils.plotting import plt, save_svg

logger = get_logger(__name__)

AUC_ROWS = [*CLASS_NAMES, "Average AUC"]
AUC_FILE = "auc.csv"
OVERLAP_FILE = "overlap.csv"
ATTENTION_DIR = "attention"
COMPOSITE_DIR = "composites"
FLOAT_FORMAT = "%.6f"


def _write_csv(frame: pd.DataFrame, path: Path, index: bool = True) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def auc_table(report: AucReport) -> pd.DataFrame:
    """Rows Normal/CHF/Pneumonia/Average AUC, columns Fold1..FoldK and Average."""
    columns = {f"Fold{i + 1}": fold.values() for i, fold in enumerate(report.per_fold)}
    columns["Average"] = report.overall.values()
    frame = pd.DataFrame(columns, index=AUC_ROWS)
    frame.index.name = "Class"
    return frame


def overlap_table(report: OverlapReport) -> pd.DataFrame:
    frame = pd.DataFrame(
        {"study_id": list(report.per_study), "overlap": list(report.per_study.values())},
        columns=["study_id", "overlap"],
    )
    return frame.sort_values("study_id", kind="mergesort").reset_index(drop=True)


def improvement_percent(without_loss: float, with_loss: float) -> str:
    """Relative gain truncated to a whole percent, e.g. 0.0565 to 0.1009 gives ``78%``."""
    if without_loss == 0:
        return "n/a"
    return f"{int((with_loss - without_loss) / without_loss * 100)}%"


def write_composite(record: StudyRecord, attention: np.ndarray, path: Path) -> Path:
    """Chest X-ray with the attention map overlaid and annotated boxes outlined."""
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(record.image, cmap="gray", vmin=0, vmax=255)
    shown = np.ma.masked_less_equal(attention.astype(np.float64), ATTENTION_CUTOFF)
    ax.imshow(shown, cmap="jet", alpha=0.45, vmin=0, vmax=255)
    for box in record.boxes:
        ax.add_patch(
            plt.Rectangle(
                (box.x_min - 0.5, box.y_min - 0.5),
                box.x_max - box.x_min,
                box.y_max - box.y_min,
                fill=False,
                edgecolor="lime",
                linewidth=1.2,
            )
        )
    ax.set_title(f"{record.study_id} ({record.label.display})")
    ax.axis("off")
    return save_svg(fig, path)


def emit_reports(
    result: ExperimentResult,
    out_dir: Union[str, Path],
    records: Optional[Sequence[StudyRecord]] = None,
    composites: int = 0,
) -> List[Path]:
    """Write ``<out_dir>/<experiment_id>/`` with the AUC table and attention artifacts.

    ``composites`` SVG overlays are drawn for the first annotated held-out studies
    when ``records`` are given.
    """
    root = Path(out_dir) / result.spec.experiment_id
    written = [_write_csv(auc_table(result.auc), root / AUC_FILE)]

    if result.overlap is not None:
        written.append(_write_csv(overlap_table(result.overlap), root / OVERLAP_FILE, index=False))
        for study_id in sorted(result.attention_maps):
            path = root / ATTENTION_DIR / f"{study_id}.pgm"
            path.parent.mkdir(parents=True, exist_ok=True)
            write_pgm(path, result.attention_maps[study_id])
            written.append(path)

    if composites and records is not None:
        annotated = [r for r in records if r.boxes and r.study_id in result.attention_maps]
        for record in sorted(annotated, key=lambda r: r.study_id)[:composites]:
            path = root / COMPOSITE_DIR / f"{record.study_id}.svg"
            written.append(write_composite(record, result.attention_maps[record.study_id], path))

    logger.info("reports_written", experiment=result.spec.experiment_id, files=len(written), path=str(root))
    return written


def emit_overlap_summaries(
    results: Dict[str, ExperimentResult],
    out_dir: Union[str, Path],
    titles: Optional[Dict[str, str]] = None,
    comparisons: Sequence[OverlapRow] = OVERLAP_COMPARISONS,
) -> List[Path]:
    """Mean/median overlap per attention experiment and the with/without heatmap-loss table."""
    out_dir = Path(out_dir)
    titles = titles or {}
    rows = []
    for experiment_id, result in results.items():
        if result.overlap is None:
            continue
        rows.append(
            {
                "Input": titles.get(experiment_id, result.spec.title),
                "Attention Overlap: Mean": result.overlap.mean,
                "Attention Overlap: Median": result.overlap.median,
            }
        )
    written = []
    if rows:
        written.append(_write_csv(pd.DataFrame(rows), out_dir / "attention_overlap.csv", index=False))

    summary = []
    for row in comparisons:
        if row.without_loss not in results or row.with_loss not in results:
            continue
        without_loss = results[row.without_loss].overlap.mean
        with_loss = results[row.with_loss].overlap.mean
        summary.append(
            {
                "Input Features": row.title,
                "Without Heatmap Loss": without_loss,
                "With Heatmap Loss": with_loss,
                "Improvement": improvement_percent(without_loss, with_loss),
            }
        )
    if summary:
        written.append(_write_csv(pd.DataFrame(summary), out_dir / "overlap_summary.csv", index=False))
    return written


def score_attention_dir(
    attention_dir: Union[str, Path], records: Sequence[StudyRecord], experiment_id: str = "attention"
) -> OverlapReport:
    """Score saved ``<study_id>.pgm`` maps against the boxes of annotated records."""
    attention_dir = Path(attention_dir)
    if not attention_dir.is_dir():
        raise DataError(f"attention directory not found: {attention_dir}")
    per_study = {}
    for record in records:
        path = attention_dir / f"{record.study_id}.pgm"
        if record.boxes and path.is_file():
            per_study[record.study_id] = attention_overlap(read_pgm(path), record.boxes)
    return OverlapReport(experiment_id=experiment_id, per_study=per_study)


def summarize_reports(out_dir: Union[str, Path]) -> pd.DataFrame:
    """Collect the ``Average`` column of every ``*/auc.csv`` under ``out_dir`` into one table."""
    out_dir = Path(out_dir)
    paths = sorted(out_dir.glob(f"*/{AUC_FILE}"))
    if not paths:
        raise DataError(f"no {AUC_FILE} files under {out_dir}")
    rows = {}
    for path in paths:
        table = pd.read_csv(path, index_col="Class")
        rows[path.parent.name] = table["Average"].reindex(AUC_ROWS)
    summary = pd.DataFrame(rows).T
    summary.index.name = "experiment"
    return summary


def write_summary(summary: pd.DataFrame, out_dir: Union[str, Path]) -> Path:
    return _write_csv(summary, Path(out_dir) / "summary.csv")
