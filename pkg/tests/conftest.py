"""Shared fixtures: a small generated dataset and a trained embedding."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np
import pytest
from hypothesis import settings

from gazemodal.core.models import Heatmap, Label, StudyRecord
from gazemodal.data.loader import load_dataset
from gazemodal.data.synthetic import GenerationConfig, generate_synthetic_dataset
from gazemodal.text.skipgram import train_skipgram
from gazemodal.text.vocabulary import build_vocabulary, tokenize

TINY_SEED = 11

settings.register_profile("gazemodal", deadline=None, max_examples=60)
settings.load_profile("gazemodal")


@pytest.fixture(scope="session")
def tiny_seed() -> int:
    return TINY_SEED


@pytest.fixture(scope="session")
def tiny_config() -> GenerationConfig:
    """Small images and few studies so whole pipelines run in seconds."""
    return GenerationConfig(n_studies=48, image_size=16, temporal_frames=4, corpus_size=80)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory, tiny_config):
    """A generated dataset on disk, shared read-only across tests."""
    return generate_synthetic_dataset(tiny_config, TINY_SEED, tmp_path_factory.mktemp("tiny"))


@pytest.fixture(scope="session")
def tiny_records(tiny_dataset):
    return load_dataset(tiny_dataset.manifest)


@pytest.fixture(scope="session")
def tiny_embedding(tiny_dataset):
    """Skip-gram vectors trained on the dataset's own corpus."""
    corpus = [tokenize(line) for line in tiny_dataset.corpus.read_text(encoding="utf-8").splitlines()]
    vocab = build_vocabulary(corpus, min_count=1)
    return train_skipgram(corpus, vocab, dim=8, window=2, negatives=2, epochs=2, seed=TINY_SEED)


@pytest.fixture
def make_record():
    """Factory for in-memory records with blank gaze data."""

    def _make(study_id="S1", patient_id="P1", label=Label.NORMAL, size=8, boxes=(), report=None):
        blank = Heatmap(values=np.zeros((size, size), dtype=np.uint8))
        return StudyRecord(
            study_id=study_id,
            patient_id=patient_id,
            label=label,
            image=np.full((size, size), 128, dtype=np.uint8),
            report=report or {"indication": "cough", "findings": "clear lungs", "impression": "normal"},
            temporal=[blank, blank],
            static=blank,
            boxes=list(boxes),
        )

    return _make
