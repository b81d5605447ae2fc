"""Property-based tests for AUC, attention overlap and patient-grouped folds."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gazemodal.core.models import BoundingBox, Heatmap, Label, StudyRecord
from gazemodal.data.folds import grouped_kfold
from gazemodal.evaluation.metrics import attention_overlap, binary_auc

pytestmark = pytest.mark.property

SIZE = 8


def labelled_scores():
    """Scores on a quarter grid with both classes present."""
    return (
        st.integers(min_value=2, max_value=30)
        .flatmap(
            lambda n: st.tuples(
                st.lists(st.integers(-20, 20), min_size=n, max_size=n),
                st.lists(st.integers(0, 1), min_size=n, max_size=n),
            )
        )
        .filter(lambda pair: 0 < sum(pair[1]) < len(pair[1]))
        .map(lambda pair: (np.array(pair[0]) / 4.0, np.array(pair[1])))
    )


@st.composite
def boxes(draw, size=SIZE):
    x0 = draw(st.integers(0, size - 1))
    y0 = draw(st.integers(0, size - 1))
    x1 = draw(st.integers(x0 + 1, size))
    y1 = draw(st.integers(y0 + 1, size))
    return BoundingBox(x_min=x0, y_min=y0, x_max=x1, y_max=y1)


grids = st.lists(st.integers(0, 255), min_size=SIZE * SIZE, max_size=SIZE * SIZE).map(
    lambda values: np.array(values, dtype=np.uint8).reshape(SIZE, SIZE)
)


class TestAucProperties:
    """Invariants of the Mann-Whitney AUC."""

    @given(labelled_scores())
    def test_in_unit_interval(self, data):
        """AUC lies in [0, 1]."""
        scores, labels = data
        assert 0.0 <= binary_auc(scores, labels) <= 1.0

    @given(labelled_scores())
    def test_monotone_transforms(self, data):
        """Strictly increasing maps of the scores leave AUC unchanged."""
        scores, labels = data
        auc = binary_auc(scores, labels)
        assert binary_auc(np.exp(scores), labels) == pytest.approx(auc, abs=1e-12)
        assert binary_auc(3.0 * scores + 1.0, labels) == pytest.approx(auc, abs=1e-12)

    @given(labelled_scores())
    def test_label_flip_complements(self, data):
        """Swapping the classes gives 1 - AUC."""
        scores, labels = data
        assert binary_auc(scores, labels) + binary_auc(scores, 1 - labels) == pytest.approx(1.0, abs=1e-12)

    @given(labelled_scores())
    def test_negated_scores_complement(self, data):
        """Reversing the ranking gives 1 - AUC."""
        scores, labels = data
        assert binary_auc(-scores, labels) == pytest.approx(1.0 - binary_auc(scores, labels), abs=1e-12)


class TestOverlapProperties:
    """Invariants of the attention-overlap score."""

    @given(grids, st.lists(boxes(), max_size=3))
    def test_in_unit_interval(self, grid, box_list):
        """The score lies in [0, 1]."""
        assert 0.0 <= attention_overlap(grid, box_list) <= 1.0

    @given(grids, boxes(), st.integers(0, 3), st.integers(0, 3))
    def test_enlarging_box_never_lowers(self, grid, box, grow_x, grow_y):
        """A box that contains another scores at least as high."""
        bigger = BoundingBox(
            x_min=max(0, box.x_min - grow_x),
            y_min=max(0, box.y_min - grow_y),
            x_max=min(SIZE, box.x_max + grow_x),
            y_max=min(SIZE, box.y_max + grow_y),
        )
        assert attention_overlap(grid, [bigger]) >= attention_overlap(grid, [box]) - 1e-12

    @given(grids, boxes(), st.integers(0, 2**32 - 1))
    def test_low_pixels_ignored(self, grid, box, seed):
        """Pixels at or below the cutoff may change freely within [0, 100]."""
        low = grid <= 100
        changed = grid.copy()
        changed[low] = np.random.default_rng(seed).integers(0, 101, size=int(low.sum()))
        assert attention_overlap(changed, [box]) == attention_overlap(grid, [box])

    @given(grids, boxes())
    def test_duplicate_boxes(self, grid, box):
        """Repeating a box does not change the score."""
        assert attention_overlap(grid, [box, box]) == attention_overlap(grid, [box])


def _records(patients):
    blank = Heatmap(values=np.zeros((4, 4), dtype=np.uint8))
    records = []
    for patient, count in enumerate(patients):
        for study in range(count):
            records.append(
                StudyRecord(
                    study_id=f"S{patient}_{study}",
                    patient_id=f"P{patient}",
                    label=Label.NORMAL,
                    image=np.zeros((4, 4), dtype=np.uint8),
                    report={"indication": "", "findings": "", "impression": ""},
                    temporal=[blank],
                    static=blank,
                )
            )
    return records


class TestFoldProperties:
    """Invariants of patient-grouped fold assignment."""

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(1, 4), min_size=5, max_size=25), st.integers(2, 5), st.integers(0, 1000))
    def test_partition_and_purity(self, patients, k, seed):
        """Every study gets one fold and each patient stays in one fold."""
        assume(len(patients) >= k)
        records = _records(patients)
        assignment = grouped_kfold(records, k, seed)
        assert set(assignment.assignment) == {r.study_id for r in records}
        assert all(0 <= fold < k for fold in assignment.assignment.values())
        folds_of = {}
        for record in records:
            folds_of.setdefault(record.patient_id, set()).add(assignment.assignment[record.study_id])
        assert all(len(folds) == 1 for folds in folds_of.values())

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(1, 4), min_size=5, max_size=25), st.integers(2, 5), st.integers(0, 1000))
    def test_balanced(self, patients, k, seed):
        """Fold sizes differ by at most the largest patient's study count."""
        assume(len(patients) >= k)
        sizes = grouped_kfold(_records(patients), k, seed).sizes()
        assert max(sizes) - min(sizes) <= max(patients)
