"""Plain-text embedding tables: ``dim n_words`` header, one word per line, ``<AVG>`` last."""

from pathlib import Path
from typing import Union

import numpy as np

from gazemodal.errors import DatasetLoadError
from gazemodal.text.skipgram import EmbeddingModel
from gazemodal.text.vocabulary import Vocabulary

AVERAGE_TOKEN = "<AVG>"


def _row(token: str, values: np.ndarray) -> str:
    return " ".join([token, *(repr(float(v)) for v in values)]) + "\n"


def save_embeddings(model: EmbeddingModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{model.dim} {len(model.vocabulary)}\n")
        for token, vector in zip(model.vocabulary.words, model.input_vectors):
            handle.write(_row(token, vector))
        handle.write(_row(AVERAGE_TOKEN, model.average))
    return path


def load_embeddings(path: Union[str, Path]) -> EmbeddingModel:
    """Read a saved table back.

    Word counts are not stored, so every loaded token gets count 1 and the
    context vectors are absent.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise DatasetLoadError("missing embedding file", path=path) from None

    try:
        dim, n_words = (int(field) for field in lines[0].split())
        rows = [line.split(" ") for line in lines[1:]]
        if len(rows) != n_words + 1 or rows[-1][0] != AVERAGE_TOKEN:
            raise ValueError(f"expected {n_words} words followed by {AVERAGE_TOKEN}")
        if any(len(row) != dim + 1 for row in rows):
            raise ValueError(f"every row must hold a token and {dim} values")
        words = [row[0] for row in rows[:-1]]
        table = np.array([[float(v) for v in row[1:]] for row in rows[:-1]], dtype=np.float64).reshape(n_words, dim)
        average = np.array([float(v) for v in rows[-1][1:]], dtype=np.float64)
    except (IndexError, ValueError) as exc:
        raise DatasetLoadError(f"malformed embedding file: {exc}", path=path) from exc

    vocabulary = Vocabulary(
        entries={word: (index, 1) for index, word in enumerate(words)},
        min_count=1,
        total=n_words,
    )
    return EmbeddingModel(vocabulary=vocabulary, input_vectors=table, average=average)
