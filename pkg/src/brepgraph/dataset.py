"""Binary dataset container: a JSON manifest plus a packed tensor shard.

The shard is little-endian throughout: magic ``BRPG`` + uint32 version,
then items back to back. Each item holds its face tensors, arc list with
edge tensors, and optionally the encoder tokens, as float32/int32. The
manifest carries per-item byte ranges and CRC-32 checksums, so any
single-byte corruption is detectable and attributable to an item.

Writing is deterministic: identical inputs produce identical bytes, and a
write -> read -> write cycle reproduces the shard exactly.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Arc, BrepGraph
from .sampler import EDGE_COLUMNS, FACE_COLUMNS, EdgeTensor, FaceTensor

MAGIC = b"BRPG"
FORMAT_VERSION = 1
BATCH_MAGIC = b"BRPE"
TOKEN_WIDTH = 128
MAX_ITEM_BYTES = 2 ** 31

MANIFEST_NAME = "manifest.json"
SHARD_NAME = "data.shard"


class DatasetError(ValueError):
    pass


class ChecksumError(DatasetError):
    def __init__(self, item_index: int, message: str):
        self.item_index = item_index
        super().__init__(message)


class VersionError(DatasetError):
    pass


@dataclass
class ManifestEntry:
    name: str
    node_count: int
    arc_count: int
    offset: int
    length: int
    crc32: int


@dataclass
class DatasetManifest:
    format_version: int
    item_count: int
    items: list[ManifestEntry]
    sampler_config: dict

    def to_json(self) -> str:
        doc = {
            "magic": MAGIC.decode(),
            "format_version": self.format_version,
            "item_count": self.item_count,
            "sampler_config": self.sampler_config,
            "items": [vars(entry) for entry in self.items],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


@dataclass
class DatasetItem:
    name: str
    graph: BrepGraph
    node_tokens: np.ndarray | None = None
    pooled_token: np.ndarray | None = None


def _f32(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def _encode_item(item: DatasetItem) -> bytes:
    graph = item.graph
    has_tokens = item.node_tokens is not None
    parts = [struct.pack("<III", graph.node_count, len(graph.arcs),
                         1 if has_tokens else 0)]
    for node in graph.nodes:
        if node.rows.shape[1] != FACE_COLUMNS:
            raise DatasetError(f"face tensor has {node.rows.shape[1]} columns")
        parts.append(struct.pack("<iII", node.face_index, node.grid_u, node.grid_v))
        parts.append(_f32(node.rows))
    for arc in graph.arcs:
        if arc.tensor.rows.shape[1] != EDGE_COLUMNS:
            raise DatasetError(f"edge tensor has {arc.tensor.rows.shape[1]} columns")
        parts.append(struct.pack("<iiiI", arc.node_i, arc.node_j,
                                 arc.tensor.edge_index, arc.tensor.rows.shape[0]))
        parts.append(_f32(arc.tensor.rows))
    if has_tokens:
        tokens = np.asarray(item.node_tokens)
        pooled = np.asarray(item.pooled_token)
        if tokens.shape != (graph.node_count, TOKEN_WIDTH) or pooled.shape != (TOKEN_WIDTH,):
            raise DatasetError("token matrices have unexpected shapes")
        parts.append(_f32(tokens))
        parts.append(_f32(pooled))
    blob = b"".join(parts)
    if len(blob) >= MAX_ITEM_BYTES:
        raise DatasetError(f"item '{item.name}' exceeds {MAX_ITEM_BYTES} bytes")
    return blob


class _Reader:
    def __init__(self, blob: bytes, item_index: int):
        self.blob = blob
        self.pos = 0
        self.item_index = item_index

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.blob):
            raise ChecksumError(self.item_index,
                                f"item {self.item_index}: truncated record")
        values = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return values

    def floats(self, count: int, shape) -> np.ndarray:
        size = 4 * count
        if self.pos + size > len(self.blob):
            raise ChecksumError(self.item_index,
                                f"item {self.item_index}: truncated tensor")
        arr = np.frombuffer(self.blob, dtype="<f4", count=count,
                            offset=self.pos).reshape(shape)
        self.pos += size
        return arr.copy()


def _decode_item(blob: bytes, name: str, item_index: int) -> DatasetItem:
    reader = _Reader(blob, item_index)
    node_count, arc_count, has_tokens = reader.take("<III")
    nodes = []
    for _ in range(node_count):
        face_index, grid_u, grid_v = reader.take("<iII")
        rows = reader.floats(grid_u * grid_v * FACE_COLUMNS,
                             (grid_u * grid_v, FACE_COLUMNS))
        nodes.append(FaceTensor(face_index, grid_u, grid_v, rows))
    arcs = []
    for _ in range(arc_count):
        node_i, node_j, edge_index, count = reader.take("<iiiI")
        rows = reader.floats(count * EDGE_COLUMNS, (count, EDGE_COLUMNS))
        arcs.append(Arc(node_i, node_j, EdgeTensor(edge_index, rows)))
    tokens = pooled = None
    if has_tokens:
        tokens = reader.floats(node_count * TOKEN_WIDTH, (node_count, TOKEN_WIDTH))
        pooled = reader.floats(TOKEN_WIDTH, (TOKEN_WIDTH,))
    if reader.pos != len(blob):
        raise ChecksumError(item_index,
                            f"item {item_index}: {len(blob) - reader.pos} trailing bytes")
    return DatasetItem(name, BrepGraph(nodes, arcs), tokens, pooled)


def write_dataset(items: list[DatasetItem], out_dir: str | Path,
                  sampler_config: dict | None = None) -> DatasetManifest:
    """Emit ``manifest.json`` and ``data.shard`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 8  # header
    blobs = []
    for item in items:
        blob = _encode_item(item)
        entries.append(ManifestEntry(
            name=item.name,
            node_count=item.graph.node_count,
            arc_count=len(item.graph.arcs),
            offset=offset,
            length=len(blob),
            crc32=zlib.crc32(blob) & 0xFFFFFFFF,
        ))
        blobs.append(blob)
        offset += len(blob)
    manifest = DatasetManifest(FORMAT_VERSION, len(items), entries,
                               sampler_config or {})
    shard = MAGIC + struct.pack("<I", FORMAT_VERSION) + b"".join(blobs)
    (out_dir / SHARD_NAME).write_bytes(shard)
    (out_dir / MANIFEST_NAME).write_text(manifest.to_json())
    return manifest


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    doc = json.loads((path / MANIFEST_NAME).read_text())
    if doc.get("magic") != MAGIC.decode():
        raise DatasetError(f"manifest magic {doc.get('magic')!r} is not BRPG")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"manifest version {version}, reader supports {FORMAT_VERSION}")
    entries = [ManifestEntry(**entry) for entry in doc["items"]]
    if len(entries) != doc["item_count"]:
        raise DatasetError("item_count disagrees with items list")
    return DatasetManifest(version, doc["item_count"], entries,
                           doc.get("sampler_config", {}))


def read_dataset(path: str | Path) -> list[DatasetItem]:
    """Load every item, verifying header, byte ranges, and checksums first."""
    path = Path(path)
    manifest = read_manifest(path)
    shard = (path / SHARD_NAME).read_bytes()
    if len(shard) < 8 or shard[:4] != MAGIC:
        raise DatasetError("shard header is not BRPG")
    (version,) = struct.unpack_from("<I", shard, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"shard version {version}, reader supports {FORMAT_VERSION}")
    expected_end = 8
    for index, entry in enumerate(manifest.items):
        if entry.offset != expected_end:
            raise DatasetError(f"item {index}: offset {entry.offset} is not contiguous")
        expected_end = entry.offset + entry.length
    if expected_end != len(shard):
        raise DatasetError(
            f"shard is {len(shard)} bytes, manifest expects {expected_end}")
    # verify all checksums before decoding anything
    for index, entry in enumerate(manifest.items):
        blob = shard[entry.offset:entry.offset + entry.length]
        if zlib.crc32(blob) & 0xFFFFFFFF != entry.crc32:
            raise ChecksumError(index, f"item {index} ('{entry.name}'): checksum mismatch")
    return [
        _decode_item(shard[entry.offset:entry.offset + entry.length],
                     entry.name, index)
        for index, entry in enumerate(manifest.items)
    ]


# ---------------------------------------------------------------------------
# encoder-parameter container
# ---------------------------------------------------------------------------

PARAMS_MAGIC = b"BRPP"


def save_encoder_params(params, path: str | Path) -> None:
    """Serialize an encoder parameter set to a deterministic binary blob.

    Layout: magic, version, seed, projection width, then one record per
    array (name, dims, float64 data) in ``named_arrays`` order.
    """
    named = list(params.named_arrays())
    parts = [PARAMS_MAGIC,
             struct.pack("<IqII", FORMAT_VERSION, params.seed,
                         params.projection_width, len(named))]
    for name, arr in named:
        arr = np.asarray(arr, dtype="<f8")
        encoded = name.encode()
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_encoder_params(path: str | Path):
    """Rebuild an encoder parameter set; bitwise equal to what was saved."""
    from .encoder import init_encoder

    blob = Path(path).read_bytes()
    if len(blob) < 24 or blob[:4] != PARAMS_MAGIC:
        raise DatasetError("parameter container header is not BRPP")
    version, seed, width, count = struct.unpack_from("<IqII", blob, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"parameter container version {version}, "
                           f"reader supports {FORMAT_VERSION}")
    pos = 24
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        name = blob[pos:pos + name_len].decode()
        pos += name_len
        (ndim,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        shape = struct.unpack_from(f"<{ndim}I", blob, pos)
        pos += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=size,
                                     offset=pos).reshape(shape).copy()
        pos += 8 * size
    if pos != len(blob):
        raise DatasetError(f"{len(blob) - pos} trailing bytes in parameter container")

    params = init_encoder(seed, width)
    for name, arr in arrays.items():
        if name.startswith("cross."):
            setattr(params.cross, name.split(".", 1)[1], arr)
        elif name.startswith("gat"):
            layer = params.gat_layers[int(name[3])]
            field_name = name.split("_", 1)[1]
            setattr(layer, field_name, float(arr) if field_name == "b_attn" else arr)
        else:
            setattr(params, name, arr)
    return params


# ---------------------------------------------------------------------------
# embedding-batch container
# ---------------------------------------------------------------------------

def write_embedding_batch(path: str | Path, shape_embeddings: np.ndarray,
                          text_embeddings: np.ndarray, temperature: float) -> None:
    """Little-endian float64 container: BRPE, version, N, D, tau, Zb, Zt."""
    zb = np.ascontiguousarray(shape_embeddings, dtype="<f8")
    zt = np.ascontiguousarray(text_embeddings, dtype="<f8")
    if zb.shape != zt.shape or zb.ndim != 2:
        raise DatasetError("embedding matrices must share an (N, D) shape")
    header = BATCH_MAGIC + struct.pack("<III", FORMAT_VERSION, zb.shape[0], zb.shape[1])
    Path(path).write_bytes(header + struct.pack("<d", temperature)
                           + zb.tobytes() + zt.tobytes())


def read_embedding_batch(path: str | Path):
    blob = Path(path).read_bytes()
    if len(blob) < 24 or blob[:4] != BATCH_MAGIC:
        raise DatasetError("embedding batch header is not BRPE")
    version, n, d = struct.unpack_from("<III", blob, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"batch version {version}, reader supports {FORMAT_VERSION}")
    (temperature,) = struct.unpack_from("<d", blob, 16)
    need = 24 + 2 * 8 * n * d
    if len(blob) != need:
        raise DatasetError(f"batch file is {len(blob)} bytes, expected {need}")
    zb = np.frombuffer(blob, dtype="<f8", count=n * d, offset=24).reshape(n, d)
    zt = np.frombuffer(blob, dtype="<f8", count=n * d,
                       offset=24 + 8 * n * d).reshape(n, d)
    return zb.copy(), zt.copy(), temperature
