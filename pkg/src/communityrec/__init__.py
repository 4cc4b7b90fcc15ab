"""Hybrid community recommender.

Predicts which community a user will post to next by blending a
content-based filter over community text embeddings with a biased
nonnegative matrix factorization, plus the split/evaluation/explanation
harness around the two models.
"""

__version__ = "0.1.0"
