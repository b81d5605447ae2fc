"""Report tokenization, skip-gram embeddings, sentence vectors and PCA."""

from gazemodal.text.pca import pca_project, plot_projection
from gazemodal.text.persistence import load_embeddings, save_embeddings
from gazemodal.text.skipgram import (
    EmbeddingModel,
    SentenceEmbedding,
    average_embedding,
    sentence_embedding,
    train_skipgram,
)
from gazemodal.text.vocabulary import Vocabulary, build_vocabulary, tokenize

__all__ = [
    "EmbeddingModel",
    "SentenceEmbedding",
    "Vocabulary",
    "average_embedding",
    "build_vocabulary",
    "load_embeddings",
    "pca_project",
    "plot_projection",
    "save_embeddings",
    "sentence_embedding",
    "tokenize",
    "train_skipgram",
]
