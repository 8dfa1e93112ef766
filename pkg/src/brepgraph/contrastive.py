"""Symmetric contrastive loss over paired shape/text embeddings.

The loss L2-normalizes raw embeddings, builds the cosine similarity matrix,
applies temperature-scaled row and column softmaxes, and averages the two
diagonal cross-entropies. Closed-form gradients with respect to the raw
embeddings (through the normalization Jacobian) and the temperature are
available, plus a central finite-difference checker.

Reductions over batch indices use exactly-rounded summation, so permuting
the batch leaves the loss value bit-identical, not just close.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12


@dataclass
class EmbeddingBatch:
    shape_embeddings: np.ndarray  # (N, D) raw, not normalized
    text_embeddings: np.ndarray   # (N, D)
    temperature: float

    def __post_init__(self):
        self.shape_embeddings = np.asarray(self.shape_embeddings, dtype=float)
        self.text_embeddings = np.asarray(self.text_embeddings, dtype=float)
        if self.shape_embeddings.shape != self.text_embeddings.shape:
            raise ValueError("shape/text embedding matrices must match")
        if self.shape_embeddings.ndim != 2 or self.shape_embeddings.shape[0] < 1:
            raise ValueError("embeddings must be a nonempty (N, D) matrix")
        if np.isnan(self.shape_embeddings).any() or np.isnan(self.text_embeddings).any():
            raise ValueError("embeddings contain NaN")
        if not self.temperature > 0.0:
            raise ValueError(f"temperature {self.temperature} must be > 0")


@dataclass
class LossResult:
    loss: float
    similarity: np.ndarray          # (N, N)
    row_softmax: np.ndarray         # P: rows sum to 1
    col_softmax: np.ndarray         # Q: columns sum to 1
    grad_shape: np.ndarray | None = None
    grad_text: np.ndarray | None = None
    grad_temperature: float | None = None


def l2_normalize(z: np.ndarray) -> np.ndarray:
    """Divide each row by its Euclidean norm; zero rows are an error."""
    z = np.asarray(z, dtype=float)
    norms = np.linalg.norm(z, axis=-1)
    bad = np.nonzero(norms <= NORM_TOL)[0]
    if bad.size:
        raise ValueError(f"row {int(bad[0])} has zero norm, cannot normalize")
    return z / norms[..., None]


def similarity_matrix(shape_unit: np.ndarray, text_unit: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities of pre-normalized rows."""
    shape_unit = np.asarray(shape_unit, dtype=float)
    text_unit = np.asarray(text_unit, dtype=float)
    if shape_unit.shape[1] != text_unit.shape[1]:
        raise ValueError("embedding widths differ")
    return shape_unit @ text_unit.T


def _fsum_rows(matrix: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in matrix])


def clip_loss(batch: EmbeddingBatch, want_grads: bool = False) -> LossResult:
    """Loss and, on request, analytic gradients.

    The row/column softmaxes subtract their max before exponentiation, so
    small temperatures stay finite. Gradients flow to the temperature through
    both softmax terms, unclamped.
    """
    tau = batch.temperature
    n = batch.shape_embeddings.shape[0]

    shape_norms = np.linalg.norm(batch.shape_embeddings, axis=1)
    text_norms = np.linalg.norm(batch.text_embeddings, axis=1)
    shape_unit = l2_normalize(batch.shape_embeddings)
    text_unit = l2_normalize(batch.text_embeddings)
    sim = similarity_matrix(shape_unit, text_unit)
    logits = sim / tau

    row_max = logits.max(axis=1)
    col_max = logits.max(axis=0)
    row_exp = np.exp(logits - row_max[:, None])
    col_exp = np.exp(logits - col_max[None, :])
    row_sum = _fsum_rows(row_exp)
    col_sum = _fsum_rows(col_exp.T)
    p = row_exp / row_sum[:, None]
    q = col_exp / col_sum[None, :]

    diag = np.arange(n)
    log_p_ii = logits[diag, diag] - row_max - np.log(row_sum)
    log_q_ii = logits[diag, diag] - col_max - np.log(col_sum)
    loss = -math.fsum(np.concatenate([log_p_ii, log_q_ii])) / (2.0 * n)

    result = LossResult(loss, sim, p, q)
    if not want_grads:
        return result

    grad_logits = (p + q) / (2.0 * n)
    grad_logits[diag, diag] -= 1.0 / n
    grad_sim = grad_logits / tau
    result.grad_temperature = float(-np.sum(grad_logits * sim) / (tau * tau))

    grad_shape_unit = grad_sim @ text_unit
    grad_text_unit = grad_sim.T @ shape_unit
    # back through row normalization: J = (I - u u^T) / |z|
    proj_s = np.einsum("ij,ij->i", grad_shape_unit, shape_unit)
    proj_t = np.einsum("ij,ij->i", grad_text_unit, text_unit)
    result.grad_shape = (grad_shape_unit - proj_s[:, None] * shape_unit) \
        / shape_norms[:, None]
    result.grad_text = (grad_text_unit - proj_t[:, None] * text_unit) \
        / text_norms[:, None]
    return result


def fd_check(batch: EmbeddingBatch, epsilon: float = 1e-4) -> float:
    """Max relative disagreement between analytic and central-difference
    gradients over every embedding coordinate and the temperature."""
    if not 1e-7 <= epsilon <= 1e-2:
        raise ValueError("epsilon must lie in [1e-7, 1e-2]")
    analytic = clip_loss(batch, want_grads=True)

    def loss_at(shape_z, text_z, tau):
        return clip_loss(EmbeddingBatch(shape_z, text_z, tau)).loss

    worst = 0.0

    def error(analytic_value, numeric_value):
        return abs(analytic_value - numeric_value) / max(1.0, abs(analytic_value))

    for which, grad in (("shape", analytic.grad_shape),
                        ("text", analytic.grad_text)):
        base = batch.shape_embeddings if which == "shape" else batch.text_embeddings
        for idx in np.ndindex(base.shape):
            bumped = base.copy()
            bumped[idx] += epsilon
            other = (bumped, batch.text_embeddings) if which == "shape" \
                else (batch.shape_embeddings, bumped)
            hi = loss_at(*other, batch.temperature)
            bumped[idx] -= 2 * epsilon
            other = (bumped, batch.text_embeddings) if which == "shape" \
                else (batch.shape_embeddings, bumped)
            lo = loss_at(*other, batch.temperature)
            worst = max(worst, error(grad[idx], (hi - lo) / (2 * epsilon)))

    hi = loss_at(batch.shape_embeddings, batch.text_embeddings,
                 batch.temperature + epsilon)
    lo = loss_at(batch.shape_embeddings, batch.text_embeddings,
                 batch.temperature - epsilon)
    worst = max(worst, error(analytic.grad_temperature, (hi - lo) / (2 * epsilon)))
    return worst
