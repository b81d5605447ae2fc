"""Load an on-disk study set back into validated records."""

import re
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from pydantic import ValidationError

from gazemodal.core.models import REPORT_SECTIONS, BoundingBox, FixationEvent, Heatmap, Label, StudyRecord
from gazemodal.data.heatmaps import amalgamate_heatmaps
from gazemodal.data.pgm import read_pgm
from gazemodal.data.synthetic import ANNOTATIONS_NAME, BOX_COLUMNS, FIXATION_COLUMNS, MANIFEST_COLUMNS
from gazemodal.errors import DataError, DatasetLoadError
from gazemodal.utils.logger import get_logger

logger = get_logger(__name__)

_SECTION_HEADER = re.compile(r"^(INDICATION|FINDINGS|IMPRESSION):[ \t]?", re.MULTILINE)


def parse_report(text: str) -> Dict[str, str]:
    """Split report text on line-anchored ``SECTION:`` headers; absent sections are empty."""
    headers = list(_SECTION_HEADER.finditer(text))
    sections = {section: "" for section in REPORT_SECTIONS}
    for i, match in enumerate(headers):
        end = headers[i + 1].start() if i + 1 < len(headers) else len(text)
        sections[match.group(1).lower()] = text[match.end() : end].strip()
    return sections


def read_report(path: Path) -> Dict[str, str]:
    try:
        return parse_report(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetLoadError("missing report", path=path) from None
    except UnicodeDecodeError as exc:
        raise DatasetLoadError(f"report is not UTF-8: {exc}", path=path) from exc


def _read_csv(path: Path, columns: List[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False)
    except FileNotFoundError:
        raise DatasetLoadError("missing CSV file", path=path) from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetLoadError(f"malformed CSV: {exc}", path=path) from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DatasetLoadError(f"CSV lacks columns {missing}", path=path)
    return frame


def read_fixations(path: Path) -> List[FixationEvent]:
    """Parse a fixation log and check it is sorted by start time."""
    frame = _read_csv(path, FIXATION_COLUMNS)
    try:
        events = [
            FixationEvent(t_start=row.t_start_ms, duration=row.duration_ms, x=row.x_norm, y=row.y_norm)
            for row in frame.itertuples(index=False)
        ]
    except ValidationError as exc:
        raise DatasetLoadError(f"invalid fixation: {exc.errors()[0]['msg']}", path=path) from exc
    if any(b.t_start < a.t_start for a, b in zip(events, events[1:])):
        raise DatasetLoadError("fixations are not sorted by start time", path=path)
    return events


def read_annotations(path: Path) -> Dict[str, List[BoundingBox]]:
    """Bounding boxes keyed by study; a missing file means no annotations."""
    if not path.exists():
        return {}
    frame = _read_csv(path, BOX_COLUMNS)
    boxes: Dict[str, List[BoundingBox]] = {}
    for row in frame.itertuples(index=False):
        try:
            box = BoundingBox(x_min=row.x_min, y_min=row.y_min, x_max=row.x_max, y_max=row.y_max)
        except ValidationError as exc:
            raise DatasetLoadError(
                f"invalid bounding box: {exc.errors()[0]['msg']}", study_id=str(row.study_id), path=path
            ) from exc
        boxes.setdefault(str(row.study_id), []).append(box)
    return boxes


def _gaze_files(root: Path, row) -> List[Path]:
    temporal_dir = root / row.temporal_dir
    frames = sorted(temporal_dir.glob("frame_*.pgm")) if temporal_dir.is_dir() else []
    return [root / row.fixations, root / row.static_heatmap, *frames] if frames else []


def _load_study(root: Path, row, boxes: Dict[str, List[BoundingBox]]) -> StudyRecord:
    study_id = str(row.study_id)
    try:
        label = Label(int(row.label))
    except ValueError:
        raise DatasetLoadError(f"label {row.label!r} outside {{1, 2, 3}}", study_id=study_id) from None

    try:
        image = read_pgm(root / row.image)
        report = read_report(root / row.report)
        fixations = read_fixations(root / row.fixations)
        frames = sorted((root / row.temporal_dir).glob("frame_*.pgm"))
        temporal = [Heatmap(values=read_pgm(frame)) for frame in frames]
        static = Heatmap(values=read_pgm(root / row.static_heatmap))
    except DatasetLoadError as exc:
        raise DatasetLoadError(exc.reason, study_id=study_id, path=exc.path) from exc

    if temporal and amalgamate_heatmaps(temporal) != static:
        raise DatasetLoadError(
            "static heatmap is not the amalgamation of its temporal frames",
            study_id=study_id,
            path=root / row.static_heatmap,
        )

    try:
        return StudyRecord(
            study_id=study_id,
            patient_id=str(row.patient_id),
            label=label,
            image=image,
            report=report,
            fixations=fixations,
            temporal=temporal,
            static=static,
            boxes=boxes.get(study_id, []),
        )
    except ValidationError as exc:
        raise DatasetLoadError(f"invalid record: {exc.errors()[0]['msg']}", study_id=study_id) from exc


def load_dataset(
    manifest: Union[str, Path],
    strict: bool = False,
    annotations: Optional[Union[str, Path]] = None,
) -> List[StudyRecord]:
    """Load every study named in ``manifest``.

    Studies whose gaze files are absent are left out with a warning, or raise
    when ``strict`` is set. Paths in the manifest are relative to its directory.
    """
    manifest = Path(manifest)
    if not manifest.is_file():
        raise DatasetLoadError("manifest not found", path=manifest)
    root = manifest.parent
    frame = _read_csv(manifest, MANIFEST_COLUMNS)
    boxes = read_annotations(Path(annotations) if annotations else root / ANNOTATIONS_NAME)

    records: List[StudyRecord] = []
    excluded = 0
    seen = set()
    for row in frame.itertuples(index=False):
        study_id = str(row.study_id)
        if study_id in seen:
            raise DatasetLoadError("duplicate study id in manifest", study_id=study_id, path=manifest)
        seen.add(study_id)

        gaze = _gaze_files(root, row)
        if not gaze or not all(path.is_file() for path in gaze):
            if strict:
                raise DatasetLoadError("missing gaze files", study_id=study_id, path=root / row.temporal_dir)
            logger.warning("study_excluded", study_id=study_id, reason="missing gaze files")
            excluded += 1
            continue
        records.append(_load_study(root, row, boxes))

    if not records:
        raise DataError(f"no loadable studies in {manifest}")
    logger.info("dataset_loaded", path=str(manifest), studies=len(records), excluded=excluded)
    return records
