import copy

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brepgraph.encoder import QFormerInput
from brepgraph.query_experts import (
    init_experts,
    mqe_forward,
    pooled_tokens,
    route,
    select_experts,
)

# softmax over the two selected logits (3, 2), evaluated directly
GATES_3_2 = (0.7310585786300049, 0.2689414213699951)


def random_qformer_input(rng, valid=6):
    matrix = np.zeros((128, 1408))
    matrix[:valid] = rng.normal(size=(valid, 1408))
    return QFormerInput(matrix, valid)


def randomize_outputs(params, rng):
    for g in range(params.expert_count):
        params.expert_out_w[g] = rng.normal(size=params.expert_out_w[g].shape)
        params.expert_out_b[g] = rng.normal(size=params.expert_out_b[g].shape)


class TestSelection:
    def test_top_two_with_gates(self):
        decision = select_experts(np.array([3.0, 1.0, 2.0, 0.0]), 2)
        assert decision.selected == [0, 2]
        assert np.allclose(decision.gates, GATES_3_2, atol=1e-9)

    def test_tie_breaks_to_lower_index(self):
        decision = select_experts(np.array([1.0, 1.0, 1.0, 1.0]), 2)
        assert decision.selected == [0, 1]
        assert np.array_equal(decision.gates, [0.5, 0.5])

    def test_all_experts_selected(self):
        logits = np.array([0.3, -1.0, 2.0])
        decision = select_experts(logits, 3)
        assert decision.selected == [0, 1, 2]
        full = np.exp(logits - logits.max())
        assert np.allclose(decision.gates, full / full.sum(), atol=1e-12)

    def test_active_count_validated(self):
        with pytest.raises(ValueError):
            select_experts(np.array([1.0, 2.0]), 3)
        with pytest.raises(ValueError):
            select_experts(np.array([1.0, 2.0]), 0)

    # logits on a 1e-6 grid: distinct values stay distinct after the shift
    # (a denormal gap would collapse into a rounding tie and legitimately
    # reroute), which is the regime the shift-invariance claim covers
    @given(st.lists(st.integers(-50_000_000, 50_000_000), min_size=4, max_size=4),
           st.integers(-100, 100))
    @settings(max_examples=60, deadline=None)
    def test_gate_sum_and_shift_invariance(self, raw, shift):
        logits = np.array(raw) / 1e6
        base = select_experts(logits, 2)
        assert len(base.selected) == 2
        assert base.selected == sorted(base.selected)
        assert np.all(base.gates >= 0.0)
        assert abs(base.gates.sum() - 1.0) <= 1e-9
        moved = select_experts(logits + shift, 2)
        assert moved.selected == base.selected
        assert np.max(np.abs(moved.gates - base.gates)) <= 1e-12


class TestForward:
    def test_zero_init_residual_identity(self, rng):
        params = init_experts(seed=5)
        x_qf = random_qformer_input(rng)
        out = mqe_forward(x_qf, params)
        assert np.array_equal(out.residual, np.zeros_like(out.base))
        assert np.array_equal(out.final, out.base)

    def test_single_active_expert_passes_through(self, rng):
        params = init_experts(seed=5, active_count=1)
        randomize_outputs(params, rng)
        x_qf = random_qformer_input(rng)
        out = mqe_forward(x_qf, params)
        assert out.routing.gates.shape == (1,)
        assert out.routing.gates[0] == 1.0
        expert = out.routing.selected[0]
        from brepgraph.encoder import cross_attend
        attended = cross_attend(params.expert_queries[expert], x_qf, params.cross)
        expected = attended @ params.expert_out_w[expert] + params.expert_out_b[expert]
        assert np.array_equal(out.residual, expected)

    def test_unselected_experts_cannot_influence_output(self, rng):
        params = init_experts(seed=9)
        randomize_outputs(params, rng)
        x_qf = random_qformer_input(rng)
        base_out = mqe_forward(x_qf, params)
        unselected = [g for g in range(params.expert_count)
                      if g not in base_out.routing.selected]
        tampered = copy.deepcopy(params)
        for g in unselected:
            tampered.expert_queries[g] = rng.normal(size=tampered.expert_queries[g].shape)
            tampered.expert_out_w[g] = np.full_like(tampered.expert_out_w[g], np.nan)
        out = mqe_forward(x_qf, tampered)
        assert out.routing.selected == base_out.routing.selected
        assert np.array_equal(out.final, base_out.final)

    def test_final_is_base_plus_residual(self, rng):
        params = init_experts(seed=2)
        randomize_outputs(params, rng)
        out = mqe_forward(random_qformer_input(rng), params)
        assert np.array_equal(out.final, out.base + out.residual)
        assert out.final.shape == (32, 64)

    def test_empty_sequence_rejected(self):
        params = init_experts(seed=1)
        with pytest.raises(ValueError):
            mqe_forward(QFormerInput(np.zeros((128, 1408)), 0), params)

    def test_router_uses_valid_rows_only(self, rng):
        params = init_experts(seed=3)
        x_qf = random_qformer_input(rng, valid=4)
        pooled = pooled_tokens(x_qf)
        assert np.array_equal(pooled, x_qf.matrix[:4].mean(axis=0))
        decision = route(pooled, params)
        assert len(decision.selected) == params.active_count
