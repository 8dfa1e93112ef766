"""Deterministic forward pass of the hierarchical face/edge/topology encoder.

Per node the three branch features concatenate to a 128-wide token
[topology(64) | edge(32) | face(32)]; attention pooling gives one global
128-vector per graph. Two heads hang off: an affine projection into the
text-embedding space (contrastive side) and a two-layer projection into the
128 x 1408 query-interface sequence with pad/truncate to 128 rows.

Weights are random but reproducible: the same seed yields bit-identical
parameters, and the whole forward pass is pure, so identical inputs give
bit-identical outputs in single-threaded use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import BrepGraph

FACE_WIDTH = 32
EDGE_WIDTH = 32
TOPO_WIDTH = 64
TOKEN_WIDTH = TOPO_WIDTH + EDGE_WIDTH + FACE_WIDTH  # 128
QF_WIDTH = 1408
QF_HIDDEN = 768
T_MAX = 128
N_QUERIES = 32
CONV_CHANNELS = 16
CROSS_ATTN_DIM = 64
CROSS_OUT_DIM = 64
LEAKY_SLOPE = 0.2


@dataclass
class CrossAttentionParams:
    w_query: np.ndarray
    b_query: np.ndarray
    w_key: np.ndarray
    b_key: np.ndarray
    w_value: np.ndarray
    b_value: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    @property
    def query_width(self) -> int:
        return self.w_query.shape[0]

    @property
    def out_width(self) -> int:
        return self.w_out.shape[1]


@dataclass
class GatLayerParams:
    w_attn: np.ndarray   # (3 * TOPO_WIDTH,)
    b_attn: float
    w_value: np.ndarray  # (TOPO_WIDTH, TOPO_WIDTH)
    b_value: np.ndarray


@dataclass
class EncoderParams:
    seed: int
    projection_width: int
    face_embed_w: np.ndarray
    face_embed_b: np.ndarray
    attn_q_w: np.ndarray
    attn_q_b: np.ndarray
    attn_k_w: np.ndarray
    attn_k_b: np.ndarray
    attn_v_w: np.ndarray
    attn_v_b: np.ndarray
    face_ff_w: np.ndarray
    face_ff_b: np.ndarray
    edge_kernel_w: np.ndarray
    edge_kernel_b: np.ndarray
    descriptor_w: np.ndarray
    descriptor_b: np.ndarray
    message_b: np.ndarray
    conv2d_1_w: np.ndarray
    conv2d_1_b: np.ndarray
    conv2d_2_w: np.ndarray
    conv2d_2_b: np.ndarray
    conv1d_1_w: np.ndarray
    conv1d_1_b: np.ndarray
    conv1d_2_w: np.ndarray
    conv1d_2_b: np.ndarray
    gat_layers: list[GatLayerParams]
    pool_w: np.ndarray
    pool_v: np.ndarray
    clip_w: np.ndarray
    clip_b: np.ndarray
    qf_w1: np.ndarray
    qf_b1: np.ndarray
    qf_w2: np.ndarray
    qf_b2: np.ndarray
    cross: CrossAttentionParams
    fans: dict[str, int] = field(default_factory=dict)

    def named_arrays(self):
        """Yield (name, array) for every parameter, matching ``fans`` keys."""
        skip = {"seed", "projection_width", "gat_layers", "cross", "fans"}
        for name in self.__dataclass_fields__:
            if name not in skip:
                yield name, getattr(self, name)
        for layer, gat in enumerate(self.gat_layers):
            yield f"gat{layer}_w_attn", gat.w_attn
            yield f"gat{layer}_b_attn", np.asarray(gat.b_attn)
            yield f"gat{layer}_w_value", gat.w_value
            yield f"gat{layer}_b_value", gat.b_value
        for name in ("w_query", "b_query", "w_key", "b_key", "w_value",
                     "b_value", "w_out", "b_out"):
            yield f"cross.{name}", getattr(self.cross, name)


@dataclass
class GlobalToken:
    vector: np.ndarray   # (128,)
    weights: np.ndarray  # (n,), nonnegative, sums to 1


@dataclass
class QFormerInput:
    matrix: np.ndarray   # (T_MAX, QF_WIDTH); rows past valid_length are zero
    valid_length: int


@dataclass
class EncodeResult:
    tokens: np.ndarray
    pooled: GlobalToken
    embedding: np.ndarray
    qformer: QFormerInput


def init_cross_attention(rng: np.random.Generator, query_width: int = QF_WIDTH,
                         key_width: int = QF_WIDTH, attn_dim: int = CROSS_ATTN_DIM,
                         out_width: int = CROSS_OUT_DIM) -> CrossAttentionParams:
    u = lambda fan, *shape: rng.uniform(-1.0 / math.sqrt(fan),
                                        1.0 / math.sqrt(fan), size=shape)
    return CrossAttentionParams(
        w_query=u(query_width, query_width, attn_dim),
        b_query=u(query_width, attn_dim),
        w_key=u(key_width, key_width, attn_dim),
        b_key=u(key_width, attn_dim),
        w_value=u(key_width, key_width, attn_dim),
        b_value=u(key_width, attn_dim),
        w_out=u(attn_dim, attn_dim, out_width),
        b_out=u(attn_dim, out_width),
    )


def init_encoder(seed: int, projection_width: int = 768) -> EncoderParams:
    """Seeded parameter set; identical seeds give bit-identical parameters.

    Every weight and bias is uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
    for its layer's fan-in, drawn in a fixed order.
    """
    if projection_width < 1:
        raise ValueError("projection_width must be >= 1")
    rng = np.random.default_rng(seed)
    fans: dict[str, int] = {}

    def u(name: str, fan: int, *shape):
        fans[name] = fan
        return rng.uniform(-1.0 / math.sqrt(fan), 1.0 / math.sqrt(fan),
                           size=shape)

    gat_layers = []
    params = EncoderParams(
        seed=seed,
        projection_width=projection_width,
        face_embed_w=u("face_embed_w", 10, 10, FACE_WIDTH),
        face_embed_b=u("face_embed_b", 10, FACE_WIDTH),
        attn_q_w=u("attn_q_w", FACE_WIDTH, FACE_WIDTH, FACE_WIDTH),
        attn_q_b=u("attn_q_b", FACE_WIDTH, FACE_WIDTH),
        attn_k_w=u("attn_k_w", FACE_WIDTH, FACE_WIDTH, FACE_WIDTH),
        attn_k_b=u("attn_k_b", FACE_WIDTH, FACE_WIDTH),
        attn_v_w=u("attn_v_w", FACE_WIDTH, FACE_WIDTH, FACE_WIDTH),
        attn_v_b=u("attn_v_b", FACE_WIDTH, FACE_WIDTH),
        face_ff_w=u("face_ff_w", FACE_WIDTH, FACE_WIDTH, FACE_WIDTH),
        face_ff_b=u("face_ff_b", FACE_WIDTH, FACE_WIDTH),
        edge_kernel_w=u("edge_kernel_w", 8, 8, EDGE_WIDTH * EDGE_WIDTH),
        edge_kernel_b=u("edge_kernel_b", 8, EDGE_WIDTH * EDGE_WIDTH),
        descriptor_w=u("descriptor_w", 10, 10, EDGE_WIDTH),
        descriptor_b=u("descriptor_b", 10, EDGE_WIDTH),
        message_b=u("message_b", EDGE_WIDTH, EDGE_WIDTH),
        conv2d_1_w=u("conv2d_1_w", 27, 27, CONV_CHANNELS),
        conv2d_1_b=u("conv2d_1_b", 27, CONV_CHANNELS),
        conv2d_2_w=u("conv2d_2_w", 9 * CONV_CHANNELS, 9 * CONV_CHANNELS, TOPO_WIDTH),
        conv2d_2_b=u("conv2d_2_b", 9 * CONV_CHANNELS, TOPO_WIDTH),
        conv1d_1_w=u("conv1d_1_w", 9, 9, CONV_CHANNELS),
        conv1d_1_b=u("conv1d_1_b", 9, CONV_CHANNELS),
        conv1d_2_w=u("conv1d_2_w", 3 * CONV_CHANNELS, 3 * CONV_CHANNELS, TOPO_WIDTH),
        conv1d_2_b=u("conv1d_2_b", 3 * CONV_CHANNELS, TOPO_WIDTH),
        gat_layers=gat_layers,
        pool_w=u("pool_w", TOKEN_WIDTH, TOKEN_WIDTH, TOKEN_WIDTH),
        pool_v=u("pool_v", TOKEN_WIDTH, TOKEN_WIDTH),
        clip_w=u("clip_w", TOKEN_WIDTH, TOKEN_WIDTH, projection_width),
        clip_b=u("clip_b", TOKEN_WIDTH, projection_width),
        qf_w1=u("qf_w1", TOKEN_WIDTH, TOKEN_WIDTH, QF_HIDDEN),
        qf_b1=u("qf_b1", TOKEN_WIDTH, QF_HIDDEN),
        qf_w2=u("qf_w2", QF_HIDDEN, QF_HIDDEN, QF_WIDTH),
        qf_b2=u("qf_b2", QF_HIDDEN, QF_WIDTH),
        cross=None,
        fans=fans,
    )
    for layer in range(2):
        gat_layers.append(GatLayerParams(
            w_attn=u(f"gat{layer}_w_attn", 3 * TOPO_WIDTH, 3 * TOPO_WIDTH),
            b_attn=float(u(f"gat{layer}_b_attn", 3 * TOPO_WIDTH)),
            w_value=u(f"gat{layer}_w_value", TOPO_WIDTH, TOPO_WIDTH, TOPO_WIDTH),
            b_value=u(f"gat{layer}_b_value", TOPO_WIDTH, TOPO_WIDTH),
        ))
    params.cross = init_cross_attention(rng)
    for name, fan in (("w_query", QF_WIDTH), ("b_query", QF_WIDTH),
                      ("w_key", QF_WIDTH), ("b_key", QF_WIDTH),
                      ("w_value", QF_WIDTH), ("b_value", QF_WIDTH),
                      ("w_out", CROSS_ATTN_DIM), ("b_out", CROSS_ATTN_DIM)):
        fans[f"cross.{name}"] = fan
    return params


def _softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    weights = np.exp(shifted)
    return weights / np.sum(weights, axis=axis, keepdims=True)


def _leaky(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, x, LEAKY_SLOPE * x)


# ---------------------------------------------------------------------------
# face branch
# ---------------------------------------------------------------------------

def face_branch(rows: np.ndarray, params: EncoderParams) -> np.ndarray:
    """Per-face feature: embed rows, one self-attention block with residual,
    a position-wise feed-forward with residual, then mean over rows."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] != 10:
        raise ValueError("face tensor must be a nonempty (rows, 10) matrix")
    x = rows @ params.face_embed_w + params.face_embed_b
    q = x @ params.attn_q_w + params.attn_q_b
    k = x @ params.attn_k_w + params.attn_k_b
    v = x @ params.attn_v_w + params.attn_v_b
    attn = _softmax(q @ k.T / math.sqrt(FACE_WIDTH), axis=1)
    x = x + attn @ v
    x = x + np.tanh(x @ params.face_ff_w + params.face_ff_b)
    return x.mean(axis=0)


# ---------------------------------------------------------------------------
# edge-conditioned branch
# ---------------------------------------------------------------------------

def edge_branch(graph: BrepGraph, params: EncoderParams) -> np.ndarray:
    """Neighbor-to-center message passing with edge-generated kernels.

    Each arc's 8-column row mean maps to a 32x32 kernel; the kernel hits the
    neighbor's embedded face descriptor and messages average per node.
    Isolated nodes see only the message bias.
    """
    n = graph.node_count
    descriptors = np.stack([
        node.rows.mean(axis=0) @ params.descriptor_w + params.descriptor_b
        for node in graph.nodes])
    sums = np.zeros((n, EDGE_WIDTH))
    counts = np.zeros(n)
    kernels: dict[int, np.ndarray] = {}
    for src, dst, tensor in graph.directed_arcs():
        kernel = kernels.get(id(tensor))
        if kernel is None:
            summary = tensor.rows.mean(axis=0)
            kernel = (summary @ params.edge_kernel_w
                      + params.edge_kernel_b).reshape(EDGE_WIDTH, EDGE_WIDTH)
            kernels[id(tensor)] = kernel
        sums[dst] += kernel @ descriptors[src]
        counts[dst] += 1.0
    messages = sums / np.maximum(counts, 1.0)[:, None]
    return np.tanh(params.message_b + messages)


# ---------------------------------------------------------------------------
# topology branch
# ---------------------------------------------------------------------------

def _conv2d_same(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3 'same' convolution; w is (9 * C_in, C_out), kernel taps row-major."""
    h, width, c_in = x.shape
    padded = np.zeros((h + 2, width + 2, c_in))
    padded[1:-1, 1:-1] = x
    taps = [padded[dy:dy + h, dx:dx + width] for dy in range(3) for dx in range(3)]
    patches = np.concatenate(taps, axis=-1)
    return patches.reshape(h * width, 9 * c_in) @ w + b


def _conv1d_same(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Width-3 'same' convolution; w is (3 * C_in, C_out)."""
    m, c_in = x.shape
    padded = np.zeros((m + 2, c_in))
    padded[1:-1] = x
    patches = np.concatenate([padded[d:d + m] for d in range(3)], axis=-1)
    return patches @ w + b


def _node_seed(node_rows: np.ndarray, grid_u: int, grid_v: int,
               params: EncoderParams) -> np.ndarray:
    grid = node_rows[:, 0:3].reshape(grid_u, grid_v, 3)
    h = np.tanh(_conv2d_same(grid, params.conv2d_1_w, params.conv2d_1_b)
                .reshape(grid_u, grid_v, CONV_CHANNELS))
    h = np.tanh(_conv2d_same(h, params.conv2d_2_w, params.conv2d_2_b))
    return h.mean(axis=0)


def _arc_feature(edge_rows: np.ndarray, params: EncoderParams) -> np.ndarray:
    seq = edge_rows[:, 0:3]
    h = np.tanh(_conv1d_same(seq, params.conv1d_1_w, params.conv1d_1_b))
    h = np.tanh(_conv1d_same(h, params.conv1d_2_w, params.conv1d_2_b))
    return h.mean(axis=0)


def topo_branch(graph: BrepGraph, params: EncoderParams) -> np.ndarray:
    """Convolutional node/arc encodings refined by two edge-featured
    graph-attention layers with a self-connection per node."""
    n = graph.node_count
    h = np.stack([_node_seed(node.rows, node.grid_u, node.grid_v, params)
                  for node in graph.nodes])
    arc_features: dict[int, np.ndarray] = {}
    incoming: list[list[tuple[int, np.ndarray]]] = [[] for _ in range(n)]
    for src, dst, tensor in graph.directed_arcs():
        feat = arc_features.get(id(tensor))
        if feat is None:
            feat = _arc_feature(tensor.rows, params)
            arc_features[id(tensor)] = feat
        incoming[dst].append((src, feat))

    zero_arc = np.zeros(TOPO_WIDTH)
    for layer in params.gat_layers:
        values = h @ layer.w_value + layer.b_value
        updated = np.empty_like(h)
        for i in range(n):
            sources = [i] + [src for src, _ in incoming[i]]
            feats = [zero_arc] + [feat for _, feat in incoming[i]]
            concat = np.concatenate(
                [np.broadcast_to(h[i], (len(sources), TOPO_WIDTH)),
                 h[sources], np.stack(feats)], axis=1)
            logits = _leaky(concat @ layer.w_attn + layer.b_attn)
            alpha = _softmax(logits)
            updated[i] = h[i] + alpha @ values[sources]
        h = updated
    return h


# ---------------------------------------------------------------------------
# tokens, pooling, heads
# ---------------------------------------------------------------------------

def node_tokens(graph: BrepGraph, params: EncoderParams) -> np.ndarray:
    """(n, 128) tokens: [topology | edge | face] per node."""
    topo = topo_branch(graph, params)
    edge = edge_branch(graph, params)
    face = np.stack([face_branch(node.rows, params) for node in graph.nodes])
    return np.concatenate([topo, edge, face], axis=1)


def global_pool(tokens: np.ndarray, params: EncoderParams) -> GlobalToken:
    """Attention-weighted sum: scores from a tanh bottleneck, softmax over
    nodes, weights applied to the tokens themselves."""
    scores = np.tanh(tokens @ params.pool_w) @ params.pool_v
    weights = _softmax(scores)
    return GlobalToken(weights @ tokens, weights)


def project_clip(pooled: np.ndarray, params: EncoderParams) -> np.ndarray:
    """Affine map into the text-embedding space; normalization happens in the
    loss, not here."""
    return pooled @ params.clip_w + params.clip_b


def project_qformer(tokens: np.ndarray, params: EncoderParams) -> QFormerInput:
    """Two-layer per-token projection to width 1408, then pad or truncate the
    sequence to exactly 128 rows (padding rows are zero)."""
    projected = np.tanh(tokens @ params.qf_w1 + params.qf_b1) @ params.qf_w2 \
        + params.qf_b2
    valid = min(projected.shape[0], T_MAX)
    matrix = np.zeros((T_MAX, QF_WIDTH))
    matrix[:valid] = projected[:valid]
    return QFormerInput(matrix, valid)


def cross_attend(queries: np.ndarray, x_qf: QFormerInput,
                 ca: CrossAttentionParams) -> np.ndarray:
    """Single-head cross-attention; padding rows are masked out of the
    softmax entirely."""
    if x_qf.valid_length <= 0:
        raise ValueError("cannot attend to an empty sequence")
    q = queries @ ca.w_query + ca.b_query
    k = x_qf.matrix @ ca.w_key + ca.b_key
    v = x_qf.matrix @ ca.w_value + ca.b_value
    logits = q @ k.T / math.sqrt(ca.w_query.shape[1])
    logits[:, x_qf.valid_length:] = -np.inf
    attn = _softmax(logits, axis=1)
    return (attn @ v) @ ca.w_out + ca.b_out


def encode_graph(graph: BrepGraph, params: EncoderParams) -> EncodeResult:
    """Full forward pass: tokens, pooled global token, both head outputs."""
    tokens = node_tokens(graph, params)
    pooled = global_pool(tokens, params)
    return EncodeResult(
        tokens=tokens,
        pooled=pooled,
        embedding=project_clip(pooled.vector, params),
        qformer=project_qformer(tokens, params),
    )
