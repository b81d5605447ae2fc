"""Patient-grouped cross-validation folds."""

from typing import Dict, List, Sequence

import numpy as np

from gazemodal.config import derive_seed
from gazemodal.core.models import FoldAssignment, StudyRecord
from gazemodal.errors import ArgumentError


def grouped_kfold(records: Sequence[StudyRecord], k: int, seed: int) -> FoldAssignment:
    """Assign studies to ``k`` folds so that no patient spans two folds.

    Patients are shuffled by ``seed`` and dealt in turn; each goes to the fold
    with the fewest studies so far, ties broken by the round-robin cursor. With
    single-study patients this is a plain round-robin deal, and fold sizes never
    differ by more than the largest number of studies one patient owns.
    """
    if k < 2:
        raise ArgumentError(f"k must be at least 2, got {k}")

    by_patient: Dict[str, List[str]] = {}
    for record in records:
        by_patient.setdefault(record.patient_id, []).append(record.study_id)
    if len(by_patient) < k:
        raise ArgumentError(f"{len(by_patient)} patients cannot fill {k} folds")

    patients = sorted(by_patient)
    order = np.random.default_rng(derive_seed(seed, "folds")).permutation(len(patients))

    sizes = [0] * k
    patient_fold: Dict[str, int] = {}
    for turn, index in enumerate(order):
        patient = patients[int(index)]
        cursor = turn % k
        fold = min(range(k), key=lambda f: (sizes[f], (f - cursor) % k))
        patient_fold[patient] = fold
        sizes[fold] += len(by_patient[patient])

    assignment = {record.study_id: patient_fold[record.patient_id] for record in records}
    return FoldAssignment(k=k, assignment=assignment)
