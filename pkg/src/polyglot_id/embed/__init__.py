from .skipgram import (EmbeddingError, EmbeddingModel, cosine, most_similar,
                       select_top_frequent, train_skipgram)
from .tsne import (Projection2D, TSNEError, joint_affinities, kl_divergence, kl_gradient,
                   tsne_project)

__all__ = [
    "EmbeddingError", "EmbeddingModel", "Projection2D", "TSNEError", "cosine",
    "joint_affinities", "kl_divergence", "kl_gradient", "most_similar",
    "select_top_frequent", "train_skipgram", "tsne_project",
]
