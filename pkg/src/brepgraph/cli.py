"""Command-line surface for the Brep-to-graph pipeline.

Subcommands: parse, validate, sample, graph, encode, stats, loss,
check-grad, mqe-check. Output is line-oriented ``key=value`` text for
machine parsing. Exit codes: 0 success, 1 validation or check failure,
2 usage error. All randomness is seeded through ``--seed``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import encoder as enc
from . import query_experts as qe
from .contrastive import EmbeddingBatch, clip_loss, fd_check
from .graph import adjacency_stats, build_graph
from .model import BrepParseError, parse_brep, validate
from .sampler import SamplerConfig, sample_model

GRAD_TOLERANCE = 1e-5


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(face_min=args.nmin, face_max=args.nmax,
                         edge_min=args.mmin, edge_max=args.mmax)


def _add_sampler_flags(parser) -> None:
    parser.add_argument("--nmin", type=int, default=16,
                        help="face grid resolution at the smallest area")
    parser.add_argument("--nmax", type=int, default=32,
                        help="face grid resolution at the largest area")
    parser.add_argument("--mmin", type=int, default=16,
                        help="edge sample count at the shortest edge")
    parser.add_argument("--mmax", type=int, default=32,
                        help="edge sample count at the longest edge")


def _load_model(path: str):
    return parse_brep(Path(path).read_text())


def _degree_text(histogram: dict[int, int]) -> str:
    return ",".join(f"{deg}:{count}" for deg, count in sorted(histogram.items()))


def cmd_parse(args) -> int:
    try:
        model = _load_model(args.file)
    except (OSError, BrepParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"name={model.name} surfaces={len(model.surfaces)} "
          f"curves={len(model.curves)} faces={len(model.faces)} "
          f"edges={len(model.edges)}")
    return 0


def cmd_validate(args) -> int:
    try:
        model = parse_brep(Path(args.file).read_text())
        report = validate(model)
    except BrepParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for issue in report.issues:
        print(issue)
    print(f"errors={len(report.errors)} warnings={len(report.warnings)}")
    return 0 if report.ok else 1


def _sample_to_items(args):
    model = _load_model(args.file)
    cfg = _sampler_config(args)
    sampled = sample_model(model, cfg)
    graph = build_graph(sampled)
    return model, cfg, sampled, graph


def cmd_sample(args) -> int:
    try:
        model, cfg, sampled, graph = _sample_to_items(args)
    except (OSError, BrepParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for tensor in sampled.faces:
        print(f"face={tensor.face_index} resolution={tensor.resolution}")
    for tensor in sampled.edges:
        print(f"edge={tensor.edge_index} samples={tensor.count}")
    item = ds.DatasetItem(model.name, graph)
    ds.write_dataset([item], args.output, vars(cfg))
    stats = adjacency_stats(graph)
    print(f"written={args.output} items=1 nodes={stats.node_count} "
          f"arcs={stats.arc_count}")
    return 0


def cmd_graph(args) -> int:
    try:
        _, _, _, graph = _sample_to_items(args)
    except (OSError, BrepParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    stats = adjacency_stats(graph)
    print(f"nodes={stats.node_count} arcs={stats.arc_count} "
          f"seams={stats.seam_count} isolated={stats.isolated_count} "
          f"degrees={_degree_text(stats.degree_histogram)}")
    return 0


def cmd_encode(args) -> int:
    try:
        model, cfg, sampled, graph = _sample_to_items(args)
    except (OSError, BrepParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    params = enc.init_encoder(args.seed, args.d)
    result = enc.encode_graph(graph, params)
    item = ds.DatasetItem(model.name, graph, result.tokens, result.pooled.vector)
    ds.write_dataset([item], args.output, vars(cfg))
    print(f"nodes={graph.node_count} arcs={len(graph.arcs)} "
          f"valid_length={result.qformer.valid_length} "
          f"embedding_dim={result.embedding.shape[0]} "
          f"pooled_norm={np.linalg.norm(result.pooled.vector):.6g}")
    print(f"written={args.output}")
    return 0


def cmd_stats(args) -> int:
    try:
        manifest = ds.read_manifest(args.directory)
        items = ds.read_dataset(args.directory)
    except (OSError, ds.DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for index, item in enumerate(items):
        stats = adjacency_stats(item.graph)
        tokens = "yes" if item.node_tokens is not None else "no"
        print(f"item={index} name={item.name} nodes={stats.node_count} "
              f"arcs={stats.arc_count} isolated={stats.isolated_count} "
              f"degrees={_degree_text(stats.degree_histogram)} tokens={tokens}")
    print(f"items={manifest.item_count}")
    return 0


def _random_batch(args) -> EmbeddingBatch:
    rng = np.random.default_rng(args.seed)
    return EmbeddingBatch(rng.normal(size=(args.n, args.d)),
                          rng.normal(size=(args.n, args.d)), args.tau)


def cmd_loss(args) -> int:
    try:
        if args.file:
            zb, zt, tau = ds.read_embedding_batch(args.file)
            batch = EmbeddingBatch(zb, zt, tau)
        else:
            batch = _random_batch(args)
    except (OSError, ds.DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        ds.write_embedding_batch(args.output, batch.shape_embeddings,
                                 batch.text_embeddings, batch.temperature)
    result = clip_loss(batch)
    grad_err = fd_check(batch)
    print(f"loss={result.loss:.12g} grad_err={grad_err:.6g}")
    return 0


def cmd_check_grad(args) -> int:
    grad_err = fd_check(_random_batch(args))
    print(f"grad_err={grad_err:.6g}")
    return 0 if grad_err <= GRAD_TOLERANCE else 1


def cmd_mqe_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    matrix = np.zeros((enc.T_MAX, enc.QF_WIDTH))
    valid = int(rng.integers(3, 20))
    matrix[:valid] = rng.normal(size=(valid, enc.QF_WIDTH))
    x_qf = enc.QFormerInput(matrix, valid)

    checks: list[tuple[str, bool]] = []
    params = qe.init_experts(args.seed)
    fresh = qe.mqe_forward(x_qf, params)
    checks.append(("residual_identity",
                   np.array_equal(fresh.final, fresh.base)
                   and not fresh.residual.any()))

    for g in range(params.expert_count):
        params.expert_out_w[g] = rng.normal(size=params.expert_out_w[g].shape)
        params.expert_out_b[g] = rng.normal(size=params.expert_out_b[g].shape)
    live = qe.mqe_forward(x_qf, params)
    unselected = [g for g in range(params.expert_count)
                  if g not in live.routing.selected]
    for g in unselected:
        params.expert_queries[g] = rng.normal(size=params.expert_queries[g].shape)
        params.expert_out_w[g] = rng.normal(size=params.expert_out_w[g].shape)
    checks.append(("sparsity",
                   np.array_equal(qe.mqe_forward(x_qf, params).final, live.final)))

    decision = qe.select_experts(np.array([1.0, 1.0, 1.0, 1.0]), 2)
    checks.append(("tie_break", decision.selected == [0, 1]
                   and np.array_equal(decision.gates, [0.5, 0.5])))

    logits = rng.normal(size=params.expert_count)
    base = qe.select_experts(logits, 2)
    moved = qe.select_experts(logits + 17.5, 2)
    checks.append(("gate_sum", abs(base.gates.sum() - 1.0) <= 1e-9))
    checks.append(("shift_invariance",
                   moved.selected == base.selected
                   and np.max(np.abs(moved.gates - base.gates)) <= 1e-12))
    checks.append(("residual_decomposition",
                   np.array_equal(live.final, live.base + live.residual)))

    all_ok = True
    for name, ok in checks:
        print(f"{name}={'pass' if ok else 'fail'}")
        all_ok &= ok
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brepgraph",
        description="Brep-to-graph sampling, encoding, and verification tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a .brep.json model and summarize it")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="list every invariant violation")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="sample tensors and write a dataset")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)
    _add_sampler_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("graph", help="print face-adjacency statistics")
    p.add_argument("file")
    _add_sampler_flags(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("encode", help="run the forward pass and store tokens")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int, default=768,
                   help="contrastive projection width")
    _add_sampler_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("stats", help="summarize a written dataset directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("loss", help="contrastive loss and gradient check")
    p.add_argument("file", nargs="?", help="embedding batch container")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="write the batch container here")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("check-grad",
                       help="finite-difference gradient verification")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_check_grad)

    p = sub.add_parser("mqe-check",
                       help="query-expert invariants on seeded random input")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mqe_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
