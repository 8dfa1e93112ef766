import numpy as np
import pytest

from brepgraph import dataset as ds
from brepgraph import shapes
from brepgraph.graph import build_graph
from brepgraph.sampler import SamplerConfig, sample_model

FAST = SamplerConfig(face_quadrature=8, edge_quadrature=8)


def cube_item(name="cube"):
    graph = build_graph(sample_model(shapes.as_model(shapes.unit_cube(name)), FAST))
    return ds.DatasetItem(name, graph)


def corpus_items(rng, count=10):
    items = []
    for k in range(count):
        doc = shapes.random_model(rng, name=f"model-{k}")
        graph = build_graph(sample_model(shapes.as_model(doc), FAST))
        items.append(ds.DatasetItem(doc["name"], graph))
    return items


def read_bytes(path):
    return ((path / ds.MANIFEST_NAME).read_bytes(),
            (path / ds.SHARD_NAME).read_bytes())


class TestWrite:
    def test_empty_dataset(self, tmp_path):
        manifest = ds.write_dataset([], tmp_path)
        assert manifest.item_count == 0
        shard = (tmp_path / ds.SHARD_NAME).read_bytes()
        assert shard == b"BRPG" + (1).to_bytes(4, "little")
        assert ds.read_dataset(tmp_path) == []

    def test_cube_manifest_counts(self, tmp_path):
        manifest = ds.write_dataset([cube_item()], tmp_path)
        assert manifest.items[0].node_count == 6
        assert manifest.items[0].arc_count == 12
        assert manifest.items[0].offset == 8

    def test_write_is_deterministic(self, tmp_path, rng):
        items = corpus_items(rng, 3)
        ds.write_dataset(items, tmp_path / "a")
        ds.write_dataset(items, tmp_path / "b")
        assert read_bytes(tmp_path / "a") == read_bytes(tmp_path / "b")

    def test_write_read_write_bytes_identical(self, tmp_path, rng):
        items = corpus_items(rng, 4)
        ds.write_dataset(items, tmp_path / "first")
        loaded = ds.read_dataset(tmp_path / "first")
        ds.write_dataset(loaded, tmp_path / "second")
        assert read_bytes(tmp_path / "first") == read_bytes(tmp_path / "second")


class TestRead:
    def test_round_trip_bitwise(self, tmp_path, rng):
        items = corpus_items(rng, 10)
        ds.write_dataset(items, tmp_path)
        loaded = ds.read_dataset(tmp_path)
        assert len(loaded) == 10
        for original, read in zip(items, loaded):
            assert read.name == original.name
            for a, b in zip(original.graph.nodes, read.graph.nodes):
                assert b.rows.dtype == np.float32
                assert np.array_equal(a.rows.astype(np.float32), b.rows)
                assert (a.face_index, a.grid_u, a.grid_v) == \
                       (b.face_index, b.grid_u, b.grid_v)
            for a, b in zip(original.graph.arcs, read.graph.arcs):
                assert (a.node_i, a.node_j) == (b.node_i, b.node_j)
                assert np.array_equal(a.tensor.rows.astype(np.float32),
                                      b.tensor.rows)

    def test_tokens_round_trip(self, tmp_path, rng):
        item = cube_item()
        item.node_tokens = rng.normal(size=(6, 128))
        item.pooled_token = rng.normal(size=128)
        ds.write_dataset([item], tmp_path)
        loaded = ds.read_dataset(tmp_path)[0]
        assert np.array_equal(loaded.node_tokens,
                              item.node_tokens.astype(np.float32))
        assert np.array_equal(loaded.pooled_token,
                              item.pooled_token.astype(np.float32))

    def test_single_byte_corruption_names_item(self, tmp_path, rng):
        items = corpus_items(rng, 5)
        manifest = ds.write_dataset(items, tmp_path)
        shard_path = tmp_path / ds.SHARD_NAME
        pristine = shard_path.read_bytes()
        for index, entry in enumerate(manifest.items):
            corrupt = bytearray(pristine)
            victim = entry.offset + entry.length // 2
            corrupt[victim] ^= 0x40
            shard_path.write_bytes(bytes(corrupt))
            with pytest.raises(ds.ChecksumError) as err:
                ds.read_dataset(tmp_path)
            assert err.value.item_index == index
        shard_path.write_bytes(pristine)
        ds.read_dataset(tmp_path)

    def test_version_mismatch_rejected_before_read(self, tmp_path):
        ds.write_dataset([cube_item()], tmp_path)
        manifest_path = tmp_path / ds.MANIFEST_NAME
        manifest_path.write_text(
            manifest_path.read_text().replace('"format_version": 1',
                                              '"format_version": 99'))
        with pytest.raises(ds.VersionError):
            ds.read_dataset(tmp_path)

    def test_truncated_shard_rejected(self, tmp_path):
        ds.write_dataset([cube_item()], tmp_path)
        shard_path = tmp_path / ds.SHARD_NAME
        blob = shard_path.read_bytes()
        shard_path.write_bytes(blob[:-10])
        with pytest.raises(ds.DatasetError):
            ds.read_dataset(tmp_path)


class TestEmbeddingBatchContainer:
    def test_round_trip(self, tmp_path, rng):
        zb = rng.normal(size=(4, 8))
        zt = rng.normal(size=(4, 8))
        path = tmp_path / "batch.bin"
        ds.write_embedding_batch(path, zb, zt, 0.37)
        zb2, zt2, tau = ds.read_embedding_batch(path)
        assert np.array_equal(zb, zb2)
        assert np.array_equal(zt, zt2)
        assert tau == 0.37

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "batch.bin"
        path.write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNK")
        with pytest.raises(ds.DatasetError):
            ds.read_embedding_batch(path)


class TestEncoderParamsContainer:
    def test_round_trip_bitwise(self, tmp_path):
        from brepgraph.encoder import init_encoder

        params = init_encoder(seed=19, projection_width=96)
        path = tmp_path / "params.bin"
        ds.save_encoder_params(params, path)
        loaded = ds.load_encoder_params(path)
        assert loaded.seed == 19
        assert loaded.projection_width == 96
        for (name, a), (_, b) in zip(params.named_arrays(),
                                     loaded.named_arrays()):
            assert np.array_equal(np.asarray(a), np.asarray(b)), name

    def test_deterministic_bytes(self, tmp_path):
        from brepgraph.encoder import init_encoder

        params = init_encoder(seed=4, projection_width=32)
        ds.save_encoder_params(params, tmp_path / "a.bin")
        ds.save_encoder_params(params, tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + bytes(32))
        with pytest.raises(ds.DatasetError):
            ds.load_encoder_params(path)
