"""Residual mixture of query experts over the query-interface sequence.

A frozen base query set produces the stable output; a sparse router picks
the top scoring expert query sets, whose outputs pass through per-expert
zero-initialized affines and blend by renormalized gates into a residual
correction. At initialization the correction is exactly zero, so inserting
the mechanism is a no-op; unselected experts can never influence the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoder import (
    CROSS_ATTN_DIM,
    CROSS_OUT_DIM,
    N_QUERIES,
    QF_WIDTH,
    CrossAttentionParams,
    QFormerInput,
    cross_attend,
    init_cross_attention,
)


@dataclass
class QueryExpertParams:
    base_queries: np.ndarray          # (N_QUERIES, query_width), frozen
    expert_queries: list[np.ndarray]  # k sets, same shape as base
    expert_out_w: list[np.ndarray]    # (out, out), zero at init
    expert_out_b: list[np.ndarray]    # (out,), zero at init
    router_w: np.ndarray              # (query_width, k)
    router_b: np.ndarray              # (k,)
    active_count: int
    cross: CrossAttentionParams

    @property
    def expert_count(self) -> int:
        return len(self.expert_queries)


@dataclass
class RoutingDecision:
    logits: np.ndarray
    selected: list[int]   # ascending expert indices, exactly G of them
    gates: np.ndarray     # aligned with selected; nonnegative, sums to 1


@dataclass
class ExpertOutput:
    base: np.ndarray
    residual: np.ndarray
    final: np.ndarray     # always base + residual elementwise
    routing: RoutingDecision


def init_experts(seed: int, expert_count: int = 4, active_count: int = 2,
                 n_queries: int = N_QUERIES, query_width: int = QF_WIDTH,
                 attn_dim: int = CROSS_ATTN_DIM,
                 out_width: int = CROSS_OUT_DIM) -> QueryExpertParams:
    """Seeded parameter set; expert output affines start at exactly zero."""
    if not 1 <= active_count <= expert_count:
        raise ValueError("need 1 <= active_count <= expert_count")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(query_width)
    u = lambda *shape: rng.uniform(-bound, bound, size=shape)
    base = u(n_queries, query_width)
    experts = [u(n_queries, query_width) for _ in range(expert_count)]
    router_w = u(query_width, expert_count)
    router_b = u(expert_count)
    cross = init_cross_attention(rng, query_width=query_width,
                                 key_width=QF_WIDTH, attn_dim=attn_dim,
                                 out_width=out_width)
    return QueryExpertParams(
        base_queries=base,
        expert_queries=experts,
        expert_out_w=[np.zeros((out_width, out_width)) for _ in range(expert_count)],
        expert_out_b=[np.zeros(out_width) for _ in range(expert_count)],
        router_w=router_w,
        router_b=router_b,
        active_count=active_count,
        cross=cross,
    )


def select_experts(logits: np.ndarray, active_count: int) -> RoutingDecision:
    """Top scoring experts by logit, ties to the lower index; gates are the
    softmax over the selected logits only."""
    logits = np.asarray(logits, dtype=float)
    k = logits.shape[0]
    if not 1 <= active_count <= k:
        raise ValueError(f"active_count {active_count} outside 1..{k}")
    order = np.lexsort((np.arange(k), -logits))
    selected = sorted(int(i) for i in order[:active_count])
    chosen = logits[selected]
    shifted = np.exp(chosen - chosen.max())
    gates = shifted / shifted.sum()
    return RoutingDecision(logits, selected, gates)


def pooled_tokens(x_qf: QFormerInput) -> np.ndarray:
    """Router conditioning: mean over the valid query-interface rows."""
    if x_qf.valid_length <= 0:
        raise ValueError("cannot pool an all-padding sequence")
    return x_qf.matrix[:x_qf.valid_length].mean(axis=0)


def route(pooled: np.ndarray, params: QueryExpertParams,
          active_count: int | None = None) -> RoutingDecision:
    logits = pooled @ params.router_w + params.router_b
    return select_experts(logits,
                          params.active_count if active_count is None
                          else active_count)


def mqe_forward(x_qf: QFormerInput, params: QueryExpertParams) -> ExpertOutput:
    """Base output plus gated residual from the selected experts only.

    Unselected experts are never evaluated, so their parameters cannot leak
    into the result.
    """
    decision = route(pooled_tokens(x_qf), params)
    base = cross_attend(params.base_queries, x_qf, params.cross)
    residual = np.zeros_like(base)
    for gate, expert in zip(decision.gates, decision.selected):
        attended = cross_attend(params.expert_queries[expert], x_qf, params.cross)
        correction = attended @ params.expert_out_w[expert] \
            + params.expert_out_b[expert]
        residual = residual + gate * correction
    return ExpertOutput(base, residual, base + residual, decision)
