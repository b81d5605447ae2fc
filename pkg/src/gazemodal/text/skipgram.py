"""Skip-gram word embeddings trained with negative sampling."""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit, log_expit

from gazemodal.config import derive_seed, settings
from gazemodal.errors import ArgumentError, EmptyInputError
from gazemodal.text.vocabulary import Vocabulary, tokenize
from gazemodal.utils.logger import get_logger

logger = get_logger(__name__)

UNIGRAM_POWER = 0.75
LR_FLOOR = 1e-4
EVAL_PAIRS = 4096


class EmbeddingModel(BaseModel):
    """Input and context vector tables over a vocabulary, plus the mean input vector."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    vocabulary: Vocabulary
    input_vectors: np.ndarray
    output_vectors: Optional[np.ndarray] = None
    average: np.ndarray
    loss_trace: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_shapes(self) -> "EmbeddingModel":
        rows, dim = self.input_vectors.shape
        if rows != len(self.vocabulary):
            raise ValueError(f"{rows} vectors for a vocabulary of {len(self.vocabulary)}")
        if self.output_vectors is not None and self.output_vectors.shape != (rows, dim):
            raise ValueError("output vectors must match input vectors in shape")
        if self.average.shape != (dim,):
            raise ValueError(f"average embedding must have shape ({dim},)")
        return self

    @property
    def dim(self) -> int:
        return int(self.input_vectors.shape[1])

    def vector(self, token: str) -> np.ndarray:
        """Word vector, or the average embedding for an unknown token."""
        if token in self.vocabulary:
            return self.input_vectors[self.vocabulary.index(token)]
        return self.average


class SentenceEmbedding(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    vector: np.ndarray
    n_tokens: int = Field(ge=0)
    n_oov: int = Field(ge=0)

    @model_validator(mode="after")
    def check_counts(self) -> "SentenceEmbedding":
        if self.n_oov > self.n_tokens:
            raise ValueError(f"n_oov {self.n_oov} exceeds n_tokens {self.n_tokens}")
        return self


def average_embedding(model: EmbeddingModel) -> np.ndarray:
    if model.input_vectors.shape[0] == 0:
        raise EmptyInputError("average embedding of an empty vocabulary")
    return model.input_vectors.mean(axis=0)


def sentence_embedding(text: str, model: EmbeddingModel) -> SentenceEmbedding:
    """Sum of word vectors; out-of-vocabulary tokens contribute the average embedding."""
    tokens = tokenize(text)
    vector = np.zeros(model.dim)
    n_oov = 0
    for token in tokens:
        if token not in model.vocabulary:
            n_oov += 1
        vector = vector + model.vector(token)
    return SentenceEmbedding(vector=vector, n_tokens=len(tokens), n_oov=n_oov)


def _initial_tables(rng: np.random.Generator, size: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    bound = 0.5 / dim
    return rng.uniform(-bound, bound, size=(size, dim)), np.zeros((size, dim))


def _context_pairs(sentences: Sequence[Sequence[int]], window: int) -> np.ndarray:
    """Every ``(center, context)`` pair with ``0 < |offset| <= window`` inside one sentence."""
    pairs: List[Tuple[int, int]] = []
    for ids in sentences:
        for i, center in enumerate(ids):
            lo, hi = max(0, i - window), min(len(ids), i + window + 1)
            pairs.extend((center, ids[j]) for j in range(lo, hi) if j != i)
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def negative_distribution(vocab: Vocabulary) -> np.ndarray:
    """Unigram counts raised to the 3/4 power, normalized."""
    weights = vocab.counts.astype(np.float64) ** UNIGRAM_POWER
    return weights / weights.sum()


def expected_loss(
    w_in: np.ndarray, w_out: np.ndarray, pairs: np.ndarray, noise: np.ndarray, negatives: int
) -> float:
    """Mean negative-sampling loss over ``pairs`` with the negatives integrated out.

    Per pair: ``-log s(u_o . v_c) - k * sum_w P(w) log s(-u_w . v_c)``.
    """
    if len(pairs) == 0:
        return 0.0
    centers, inverse = np.unique(pairs[:, 0], return_inverse=True)
    negative_term = -negatives * (log_expit(-(w_in[centers] @ w_out.T)) @ noise)
    positive = -log_expit(np.einsum("bd,bd->b", w_in[pairs[:, 0]], w_out[pairs[:, 1]]))
    return float(np.mean(positive + negative_term[inverse.reshape(-1)]))


def train_skipgram(
    corpus: Sequence[Sequence[str]],
    vocab: Vocabulary,
    dim: int = 150,
    window: Optional[int] = None,
    negatives: Optional[int] = None,
    epochs: Optional[int] = None,
    seed: int = 0,
    lr: Optional[float] = None,
    batch_size: int = 128,
) -> EmbeddingModel:
    """Mini-batch SGD on the negative-sampling logistic loss.

    The learning rate decays linearly from ``lr`` to ``lr * 1e-4`` over all
    updates. After every epoch the expected loss over a fixed, seeded sample of
    at most ``EVAL_PAIRS`` pairs is appended to the model's loss trace.
    """
    window = settings.embedding_window if window is None else window
    negatives = settings.embedding_negatives if negatives is None else negatives
    epochs = settings.embedding_epochs if epochs is None else epochs
    lr = settings.embedding_lr if lr is None else lr
    if len(vocab) == 0:
        raise EmptyInputError("cannot train embeddings over an empty vocabulary")
    if window < 1 or negatives < 1 or dim < 1 or epochs < 0 or batch_size < 1:
        raise ArgumentError(
            f"need window, negatives, dim, batch_size >= 1 and epochs >= 0; got "
            f"window={window} negatives={negatives} dim={dim} epochs={epochs} batch_size={batch_size}"
        )

    rng = np.random.default_rng(derive_seed(seed, "embedding"))
    w_in, w_out = _initial_tables(rng, len(vocab), dim)
    pairs = _context_pairs([vocab.encode(sentence) for sentence in corpus], window)
    noise = negative_distribution(vocab)
    if len(pairs) > EVAL_PAIRS:
        eval_pairs = pairs[np.sort(rng.choice(len(pairs), size=EVAL_PAIRS, replace=False))]
    else:
        eval_pairs = pairs

    n_batches = -(-len(pairs) // batch_size)
    total_steps = max(1, epochs * n_batches)
    step = 0
    trace: List[float] = []
    for epoch in range(epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(pairs), batch_size):
            batch = pairs[order[start : start + batch_size]]
            centers, contexts = batch[:, 0], batch[:, 1]
            sampled = rng.choice(len(vocab), size=(len(batch), negatives), p=noise)
            rate = lr * max(LR_FLOOR, 1.0 - step / total_steps)
            step += 1

            v = w_in[centers]
            u_pos = w_out[contexts]
            u_neg = w_out[sampled]
            pos_score = np.einsum("bd,bd->b", v, u_pos)
            neg_score = np.einsum("bkd,bd->bk", u_neg, v)

            g_pos = expit(pos_score) - 1.0
            g_neg = expit(neg_score)
            grad_v = g_pos[:, None] * u_pos + np.einsum("bk,bkd->bd", g_neg, u_neg)
            np.add.at(w_out, contexts, -rate * g_pos[:, None] * v)
            np.add.at(w_out, sampled, -rate * g_neg[:, :, None] * v[:, None, :])
            np.add.at(w_in, centers, -rate * grad_v)

        mean_loss = expected_loss(w_in, w_out, eval_pairs, noise, negatives)
        trace.append(mean_loss)
        logger.debug("embedding_epoch", epoch=epoch, loss=mean_loss, pairs=len(pairs))

    model = EmbeddingModel(
        vocabulary=vocab,
        input_vectors=w_in,
        output_vectors=w_out,
        average=w_in.mean(axis=0),
        loss_trace=trace,
    )
    logger.info("embedding_trained", words=len(vocab), dim=dim, epochs=epochs, final_loss=trace[-1] if trace else None)
    return model
