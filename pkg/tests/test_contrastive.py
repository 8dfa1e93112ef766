import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brepgraph.contrastive import (
    EmbeddingBatch,
    clip_loss,
    fd_check,
    l2_normalize,
    similarity_matrix,
)

# -ln(e / (e + 1)) for the 2x2 identity-similarity batch at temperature 1,
# evaluated directly from the softmax definition ahead of the build.
IDENTITY_PAIR_LOSS = 0.3132616875182228


def random_batch(rng, n=4, d=8, tau=0.5):
    return EmbeddingBatch(rng.normal(size=(n, d)), rng.normal(size=(n, d)), tau)


class TestNormalize:
    def test_three_four_five(self):
        out = l2_normalize(np.array([[3.0, 4.0]]))
        assert np.allclose(out, [[0.6, 0.8]], atol=1e-15)

    def test_idempotent_on_unit_rows(self, rng):
        z = l2_normalize(rng.normal(size=(5, 7)))
        again = l2_normalize(z)
        assert np.max(np.abs(again - z)) <= 1e-15

    def test_zero_row_reports_index(self):
        z = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError, match="row 1"):
            l2_normalize(z)


class TestSimilarity:
    def test_orthonormal_self_match(self):
        eye = np.eye(4)
        assert np.array_equal(similarity_matrix(eye, eye), np.eye(4))

    def test_anti_aligned_diagonal(self):
        z = np.array([[1.0, 0.0], [0.0, 1.0]])
        sim = similarity_matrix(z, -z)
        assert sim[0, 0] == -1.0
        assert sim[1, 1] == -1.0

    def test_cauchy_schwarz_bound(self, rng):
        a = l2_normalize(rng.normal(size=(6, 12)))
        b = l2_normalize(rng.normal(size=(6, 12)))
        assert np.max(np.abs(similarity_matrix(a, b))) <= 1.0 + 1e-9

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            similarity_matrix(np.ones((2, 3)), np.ones((2, 4)))


class TestLossValues:
    def test_single_pair_is_exactly_zero(self, rng):
        batch = EmbeddingBatch(rng.normal(size=(1, 5)), rng.normal(size=(1, 5)), 0.7)
        result = clip_loss(batch, want_grads=True)
        assert result.loss == 0.0
        assert np.max(np.abs(result.grad_shape)) <= 1e-12
        assert np.max(np.abs(result.grad_text)) <= 1e-12
        assert abs(result.grad_temperature) <= 1e-12

    def test_uniform_similarity_gives_log_n(self):
        for n in (2, 3, 8):
            z = np.tile([1.0, 2.0, 2.0], (n, 1))
            batch = EmbeddingBatch(z, z.copy(), 0.37)
            assert abs(clip_loss(batch).loss - math.log(n)) <= 1e-12

    def test_identity_pair_matches_frozen_value(self):
        eye = np.eye(2)
        result = clip_loss(EmbeddingBatch(eye, eye.copy(), 1.0))
        assert abs(result.loss - IDENTITY_PAIR_LOSS) <= 1e-6

    def test_sharpening_temperature_drives_loss_down(self):
        eye = np.eye(2)
        losses = [clip_loss(EmbeddingBatch(eye, eye.copy(), tau)).loss
                  for tau in (1.0, 0.1, 0.01)]
        assert losses[0] > losses[1] > losses[2] >= 0.0

    def test_stochastic_matrices(self, rng):
        result = clip_loss(random_batch(rng, n=6, d=9))
        assert np.max(np.abs(result.row_softmax.sum(axis=1) - 1.0)) <= 1e-9
        assert np.max(np.abs(result.col_softmax.sum(axis=0) - 1.0)) <= 1e-9
        assert result.loss >= 0.0

    def test_temperature_must_be_positive(self, rng):
        with pytest.raises(ValueError):
            EmbeddingBatch(rng.normal(size=(2, 3)), rng.normal(size=(2, 3)), 0.0)

    def test_nan_rejected(self):
        z = np.ones((2, 3))
        bad = z.copy()
        bad[0, 1] = np.nan
        with pytest.raises(ValueError):
            EmbeddingBatch(bad, z, 1.0)


class TestLossProperties:
    def test_permutation_leaves_loss_bit_identical(self, rng):
        zb = rng.normal(size=(7, 5))
        zt = rng.normal(size=(7, 5))
        base = clip_loss(EmbeddingBatch(zb, zt, 0.3)).loss
        perm = rng.permutation(7)
        shuffled = clip_loss(EmbeddingBatch(zb[perm], zt[perm], 0.3)).loss
        assert shuffled == base

    def test_row_scaling_absorbed_by_normalization(self, rng):
        zb = rng.normal(size=(5, 6))
        zt = rng.normal(size=(5, 6))
        base = clip_loss(EmbeddingBatch(zb, zt, 0.5)).loss
        scaled = zb.copy()
        scaled[2] *= 37.5
        assert abs(clip_loss(EmbeddingBatch(scaled, zt, 0.5)).loss - base) <= 1e-12

    @given(st.integers(2, 6), st.floats(0.2, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_loss_nonnegative(self, n, tau):
        rng = np.random.default_rng(n * 1000 + int(tau * 100))
        result = clip_loss(random_batch(rng, n=n, d=5, tau=tau))
        assert result.loss >= 0.0


class TestGradients:
    def test_fd_agreement_random_batch(self, rng):
        batch = random_batch(rng, n=4, d=8, tau=0.5)
        assert fd_check(batch, 1e-4) <= 1e-5

    def test_fd_agreement_small_temperature(self, rng):
        batch = random_batch(rng, n=3, d=5, tau=0.15)
        assert fd_check(batch, 1e-4) <= 1e-5

    def test_symmetric_batch_has_symmetric_gradients(self, rng):
        z = rng.normal(size=(5, 7))
        result = clip_loss(EmbeddingBatch(z, z.copy(), 0.4), want_grads=True)
        assert np.allclose(result.grad_shape, result.grad_text, atol=1e-12)
        assert fd_check(EmbeddingBatch(z, z.copy(), 0.4), 1e-4) <= 1e-5

    def test_epsilon_range_enforced(self, rng):
        with pytest.raises(ValueError):
            fd_check(random_batch(rng), 1.0)
