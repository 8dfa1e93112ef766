"""Brep-to-graph preprocessing and verification toolchain.

Parses parametric boundary-representation models, samples adaptive UV
tensors, builds face-adjacency graphs, runs a deterministic hierarchical
encoder forward pass, evaluates the symmetric contrastive alignment loss
with analytic gradients, and routes residual query experts. Datasets
serialize to a manifest + binary shard pair.
"""

__version__ = "0.1.0"
