"""Acceptance runs: AUC and attention-overlap orderings on a 600-study dataset.

Models are shrunk to fit a single-core budget: 32x32 images, encoder widths
4-8-16-32, four gaze frames, ten epochs at learning rate 3e-3. Classification
runs use 5 folds, overlap runs 3. ``ACCEPTANCE_MODEL`` and ``ACCEPTANCE_DATA``
hold the exact settings.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

import pytest

from gazemodal.data.synthetic import GenerationConfig, synthesize_corpus, synthesize_studies
from gazemodal.evaluation.experiments import (
    OVERLAP_COMPARISONS,
    ExperimentDataset,
    find_experiment,
    run_cv_experiment,
)
from gazemodal.text.skipgram import train_skipgram
from gazemodal.text.vocabulary import build_vocabulary, tokenize

pytestmark = [pytest.mark.integration, pytest.mark.slow]

SEED = 7

ACCEPTANCE_DATA = GenerationConfig(n_studies=600, image_size=32, temporal_frames=4, corpus_size=1000)

ACCEPTANCE_MODEL = {
    "image_size": 32,
    "channels": (4, 8, 16, 32),
    "frame_channels": (4, 8, 16),
    "frame_features": 16,
    "lstm_hidden": 8,
    "max_frames": 4,
    "epochs": 10,
    "batch_size": 16,
    "lr": 3e-3,
}

# Unsupervised decoders never see a gradient, so their maps differ only through
# encoder drift and initialization.
UNSUPERVISED_TOLERANCE = 0.02

SINGLE_MODALITY = ("img", "hmap_static", "hmap_temporal", "text_indication", "text_full")


@pytest.fixture(scope="module")
def dataset():
    """600 seeded studies plus skip-gram vectors from the separate corpus."""
    records = [study.record for study in synthesize_studies(ACCEPTANCE_DATA, SEED)]
    corpus = [tokenize(line) for line in synthesize_corpus(ACCEPTANCE_DATA, SEED)]
    vocab = build_vocabulary(corpus, min_count=2)
    embedding = train_skipgram(corpus, vocab, dim=50, window=5, negatives=5, epochs=5, seed=SEED)
    return ExperimentDataset(records=records, embedding=embedding)


def macro_auc(dataset, experiment_id):
    result = run_cv_experiment(find_experiment(experiment_id), dataset, k=5, seed=SEED, overrides=ACCEPTANCE_MODEL)
    return result.auc.overall.macro_avg


def mean_overlap(dataset, experiment_id):
    result = run_cv_experiment(find_experiment(experiment_id), dataset, k=3, seed=SEED, overrides=ACCEPTANCE_MODEL)
    assert result.overlap.per_study, experiment_id
    return result.overlap.mean


@pytest.fixture(scope="module")
def aucs(dataset):
    ids = SINGLE_MODALITY + ("img_text_indication",)
    return {experiment_id: macro_auc(dataset, experiment_id) for experiment_id in ids}


@pytest.fixture(scope="module")
def overlaps(dataset):
    ids = [id_ for row in OVERLAP_COMPARISONS for id_ in (row.without_loss, row.with_loss)]
    return {experiment_id: mean_overlap(dataset, experiment_id) for experiment_id in ids}


class TestClassificationOrdering:
    """Test the AUC ordering across input modalities."""

    def test_full_report_near_perfect(self, aucs):
        """Full report text reaches 0.95 and beats the image alone."""
        assert aucs["text_full"] >= 0.95
        assert aucs["text_full"] >= aucs["img"]

    def test_indication_fusion(self, aucs):
        """Image plus indication is no worse than its best part, within 0.02."""
        assert aucs["img_text_indication"] >= max(aucs["text_indication"], aucs["img"]) - 0.02

    @pytest.mark.parametrize("experiment_id", SINGLE_MODALITY)
    def test_single_modality_beats_chance(self, aucs, experiment_id):
        """Every single input carries class signal."""
        assert aucs[experiment_id] > 0.55


class TestExplainabilityOrdering:
    """Test attention overlap with and without heatmap supervision."""

    @pytest.mark.parametrize("row", OVERLAP_COMPARISONS, ids=lambda row: row.with_loss)
    def test_supervision_lifts_overlap(self, overlaps, row):
        """Each gaze-supervised model scores at least 1.3 times its unsupervised twin."""
        assert overlaps[row.with_loss] >= 1.3 * overlaps[row.without_loss]

    def test_supervised_maps_not_blank(self, overlaps):
        """Supervised maps keep attention above the cutoff inside the boxes."""
        for row in OVERLAP_COMPARISONS:
            assert overlaps[row.with_loss] > 0.0, row.with_loss

    def test_text_keeps_unsupervised_overlap(self, overlaps):
        """Adding text to an unsupervised model does not lower its overlap."""
        image_only = overlaps[OVERLAP_COMPARISONS[0].without_loss]
        for row in OVERLAP_COMPARISONS[1:]:
            assert overlaps[row.without_loss] >= image_only - UNSUPERVISED_TOLERANCE, row.without_loss
