"""Biased nonnegative matrix factorization trained by SGD.

Observed cells of the rating matrix are approximated by

    a_hat[i, j] = mu + b_user[i] + b_item[j] + P[i] . Q[j]

where mu is the mean of the observed ratings (fixed, not learned).  The
objective sums, over observed cells only,

    (a[i, j] - a_hat[i, j])^2
        + lam * (||P[i]||^2 + ||Q[j]||^2 + b_user[i]^2 + b_item[j]^2)

i.e. the regularizer is re-counted for every observed entry, matching the
per-entry SGD update.  Factors are kept nonnegative by clamping at zero after
each update; biases may take any sign.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cbf import ScoreMatrix
from .corpus import RatingMatrix

logger = logging.getLogger(__name__)


@dataclass
class MfConfig:
    k: int = 16
    lam: float = 0.05
    learning_rate: float = 0.005
    epochs: int = 200
    seed: int = 0
    nonnegative: bool = True
    init_scale: float = 0.1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.init_scale <= 0.0:
            raise ValueError(f"init_scale must be > 0, got {self.init_scale}")


@dataclass
class MfModel:
    P: np.ndarray
    Q: np.ndarray
    mu: float
    b_user: np.ndarray
    b_item: np.ndarray
    config: MfConfig

    def __post_init__(self):
        m, k = self.P.shape
        n, k2 = self.Q.shape
        if k != k2 or k != self.config.k:
            raise ValueError(f"factor ranks disagree: P has {k}, Q has {k2}, config says {self.config.k}")
        if self.b_user.shape != (m,) or self.b_item.shape != (n,):
            raise ValueError("bias vector shapes do not match the factor matrices")
        for name, arr in (("P", self.P), ("Q", self.Q), ("b_user", self.b_user), ("b_item", self.b_item)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite values")
        if self.config.nonnegative and (self.P.min(initial=0.0) < 0.0 or self.Q.min(initial=0.0) < 0.0):
            raise ValueError("factors must be nonnegative under a nonnegative config")


def _entry_arrays(ratings: RatingMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Observed cells in sorted (i, j) order, as parallel index/value arrays."""
    if not ratings.entries:
        raise ValueError("rating matrix has no observed entries")
    items = sorted(ratings.entries.items())
    rows = np.array([i for (i, _), _ in items], dtype=np.int64)
    cols = np.array([j for (_, j), _ in items], dtype=np.int64)
    vals = np.array([v for _, v in items], dtype=np.float64)
    return rows, cols, vals


def _objective(
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
    mu: float,
    P: np.ndarray,
    Q: np.ndarray,
    b_user: np.ndarray,
    b_item: np.ndarray,
    lam: float,
) -> float:
    err = vals - mu - b_user[rows] - b_item[cols] - np.einsum("ij,ij->i", P[rows], Q[cols])
    reg = (
        (P[rows] ** 2).sum()
        + (Q[cols] ** 2).sum()
        + (b_user[rows] ** 2).sum()
        + (b_item[cols] ** 2).sum()
    )
    return float((err**2).sum() + lam * reg)


def loss(model: MfModel, ratings: RatingMatrix) -> float:
    """Regularized squared error of the model over the observed cells."""
    rows, cols, vals = _entry_arrays(ratings)
    return _objective(rows, cols, vals, model.mu, model.P, model.Q, model.b_user, model.b_item, model.config.lam)


def train(ratings: RatingMatrix, config: MfConfig) -> MfModel:
    """Fit the factorization with per-entry SGD.

    Args:
        ratings: sparse observed matrix; only its entries are ever visited.
        config: hyperparameters; ``config.seed`` fixes the factor
            initialization (uniform on [0, init_scale]) and the per-epoch
            visiting order, so training is bitwise deterministic.

    Returns:
        The fitted model.  ``mu`` is the mean observed rating and stays fixed
        throughout.

    Raises:
        ValueError: if the matrix has no entries, or if the objective goes
            non-finite (divergence), naming the epoch.
    """
    rows, cols, vals = _entry_arrays(ratings)
    mu = float(vals.mean())
    rng = np.random.default_rng(config.seed)
    P = rng.uniform(0.0, config.init_scale, size=(ratings.m, config.k))
    Q = rng.uniform(0.0, config.init_scale, size=(ratings.n, config.k))
    b_user = np.zeros(ratings.m)
    b_item = np.zeros(ratings.n)

    lr = config.learning_rate
    lam = config.lam
    nnz = rows.size
    for epoch in range(1, config.epochs + 1):
        for t in rng.permutation(nnz):
            i = rows[t]
            j = cols[t]
            p = P[i]
            q = Q[j]
            err = vals[t] - mu - b_user[i] - b_item[j] - p @ q
            b_user[i] += lr * (err - lam * b_user[i])
            b_item[j] += lr * (err - lam * b_item[j])
            # both factor updates read the pre-update partner
            p_new = p + lr * (err * q - lam * p)
            q_new = q + lr * (err * p - lam * q)
            if config.nonnegative:
                np.maximum(p_new, 0.0, out=p_new)
                np.maximum(q_new, 0.0, out=q_new)
            P[i] = p_new
            Q[j] = q_new
        objective = _objective(rows, cols, vals, mu, P, Q, b_user, b_item, lam)
        if not np.isfinite(objective):
            raise ValueError(f"training diverged (non-finite objective) at epoch {epoch}")
    return MfModel(P, Q, mu, b_user, b_item, config)


def predict_mf(model: MfModel) -> ScoreMatrix:
    """Dense score matrix mu + b_user[i] + b_item[j] + P[i] . Q[j]."""
    values = model.P @ model.Q.T + model.mu + model.b_user[:, None] + model.b_item[None, :]
    return ScoreMatrix(model.P.shape[0], model.Q.shape[0], values, "mf")


def gradients(
    model: MfModel, ratings: RatingMatrix
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`loss` w.r.t. (P, Q, b_user, b_item)."""
    rows, cols, vals = _entry_arrays(ratings)
    lam = model.config.lam
    err = vals - model.mu - model.b_user[rows] - model.b_item[cols] - np.einsum(
        "ij,ij->i", model.P[rows], model.Q[cols]
    )
    dP = np.zeros_like(model.P)
    dQ = np.zeros_like(model.Q)
    db_user = np.zeros_like(model.b_user)
    db_item = np.zeros_like(model.b_item)
    np.add.at(dP, rows, -2.0 * err[:, None] * model.Q[cols] + 2.0 * lam * model.P[rows])
    np.add.at(dQ, cols, -2.0 * err[:, None] * model.P[rows] + 2.0 * lam * model.Q[cols])
    np.add.at(db_user, rows, -2.0 * err + 2.0 * lam * model.b_user[rows])
    np.add.at(db_item, cols, -2.0 * err + 2.0 * lam * model.b_item[cols])
    return dP, dQ, db_user, db_item


@dataclass
class GradCheckReport:
    passed: bool
    max_rel_err: float
    worst_coord: str
    n_checked: int


def gradient_check(
    model: MfModel,
    ratings: RatingMatrix,
    step: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Every coordinate of P, Q and both bias vectors is checked.  A coordinate
    counts as matching when the relative error |analytic - fd| / max(|analytic|,
    |fd|) is below ``tol``; coordinates where both magnitudes are below 1e-4
    are treated as zero-gradient matches, since the finite-difference noise
    floor (~1e-9 on these objectives) would dominate the ratio there.  Meant
    for small instances (say up to 10x10 with k <= 4) with clamping disabled.

    Returns:
        A report with the worst relative error and the coordinate it occurred
        at; ``passed`` is False if any coordinate exceeds ``tol``.
    """
    rows, cols, vals = _entry_arrays(ratings)
    lam = model.config.lam
    P = model.P.copy()
    Q = model.Q.copy()
    b_user = model.b_user.copy()
    b_item = model.b_item.copy()

    def objective() -> float:
        return _objective(rows, cols, vals, model.mu, P, Q, b_user, b_item, lam)

    dP, dQ, db_user, db_item = gradients(model, ratings)
    max_rel = 0.0
    worst = "(none)"
    n_checked = 0
    for name, arr, grad in (
        ("P", P, dP),
        ("Q", Q, dQ),
        ("b_user", b_user, db_user),
        ("b_item", b_item, db_item),
    ):
        for idx in np.ndindex(arr.shape):
            n_checked += 1
            orig = arr[idx]
            arr[idx] = orig + step
            high = objective()
            arr[idx] = orig - step
            low = objective()
            arr[idx] = orig
            fd = (high - low) / (2.0 * step)
            analytic = float(grad[idx])
            scale = max(abs(analytic), abs(fd))
            if scale < 1e-4:
                continue
            rel = abs(analytic - fd) / scale
            if rel > max_rel:
                max_rel = rel
                worst = f"{name}[{', '.join(str(x) for x in idx)}]"
    return GradCheckReport(max_rel <= tol, max_rel, worst, n_checked)


def save_model(model: MfModel, path: str | Path) -> None:
    """JSON checkpoint; float values round-trip exactly through repr."""
    payload = {
        "format_version": 1,
        "config": {
            "k": model.config.k,
            "lam": model.config.lam,
            "learning_rate": model.config.learning_rate,
            "epochs": model.config.epochs,
            "seed": model.config.seed,
            "nonnegative": model.config.nonnegative,
            "init_scale": model.config.init_scale,
        },
        "mu": model.mu,
        "b_user": model.b_user.tolist(),
        "b_item": model.b_item.tolist(),
        "P": model.P.tolist(),
        "Q": model.Q.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> MfModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != 1:
        raise ValueError(f"{path}: unsupported checkpoint format_version {payload.get('format_version')!r}")
    config = MfConfig(**payload["config"])
    return MfModel(
        P=np.array(payload["P"], dtype=np.float64),
        Q=np.array(payload["Q"], dtype=np.float64),
        mu=float(payload["mu"]),
        b_user=np.array(payload["b_user"], dtype=np.float64),
        b_item=np.array(payload["b_item"], dtype=np.float64),
        config=config,
    )
