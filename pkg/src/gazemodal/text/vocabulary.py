"""Report tokenization and vocabulary construction."""

import re
from collections import Counter
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from gazemodal.errors import ArgumentError, EmptyInputError

_WORD = re.compile(r"[^\W_]+")
MIN_TOKEN_LENGTH = 3


def tokenize(text: str) -> List[str]:
    """Lowercase alphanumeric runs of three or more characters.

    Underscores separate tokens, so ``_____`` de-identification placeholders vanish.
    """
    return [token for token in _WORD.findall(text.lower()) if len(token) >= MIN_TOKEN_LENGTH]


class Vocabulary(BaseModel):
    """Token to ``(index, count)`` with dense indices in frequency order."""

    entries: Dict[str, Tuple[int, int]]
    min_count: int = Field(ge=1)
    total: int = Field(ge=0, description="Occurrences of kept tokens in the corpus")

    @model_validator(mode="after")
    def check_entries(self) -> "Vocabulary":
        indices = sorted(index for index, _ in self.entries.values())
        if indices != list(range(len(indices))):
            raise ValueError("vocabulary indices must be dense from 0")
        low = [token for token, (_, count) in self.entries.items() if count < self.min_count]
        if low:
            raise ValueError(f"tokens below min_count {self.min_count}: {low[:5]}")
        return self

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: object) -> bool:
        return token in self.entries

    def index(self, token: str) -> int:
        return self.entries[token][0]

    @property
    def words(self) -> List[str]:
        """Tokens in index order."""
        ordered = [""] * len(self.entries)
        for token, (index, _) in self.entries.items():
            ordered[index] = token
        return ordered

    @property
    def counts(self) -> np.ndarray:
        counts = np.zeros(len(self.entries), dtype=np.int64)
        for index, count in self.entries.values():
            counts[index] = count
        return counts

    def encode(self, tokens: Iterable[str]) -> List[int]:
        """Indices of in-vocabulary tokens, dropping the rest."""
        return [self.entries[t][0] for t in tokens if t in self.entries]


def build_vocabulary(corpus: Sequence[Sequence[str]], min_count: int) -> Vocabulary:
    """Index tokens seen at least ``min_count`` times, ordered by count then token."""
    if min_count < 1:
        raise ArgumentError(f"min_count must be at least 1, got {min_count}")
    counts = Counter(token for sentence in corpus for token in sentence)
    if not counts:
        raise EmptyInputError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        ((token, count) for token, count in counts.items() if count >= min_count),
        key=lambda item: (-item[1], item[0]),
    )
    return Vocabulary(
        entries={token: (index, count) for index, (token, count) in enumerate(kept)},
        min_count=min_count,
        total=sum(count for _, count in kept),
    )
