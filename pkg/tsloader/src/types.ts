export const SHARD_MAGIC = "BRPG";
export const FORMAT_VERSION = 1;
export const FACE_COLUMNS = 10;
export const EDGE_COLUMNS = 8;
export const TOKEN_WIDTH = 128;

export const MANIFEST_NAME = "manifest.json";
export const SHARD_NAME = "data.shard";

export interface ManifestEntry {
  name: string;
  node_count: number;
  arc_count: number;
  offset: number;
  length: number;
  crc32: number;
}

export interface DatasetManifest {
  format_version: number;
  item_count: number;
  items: ManifestEntry[];
  sampler_config: Record<string, unknown>;
}

/** Per-face sampled attribute tensor: rows are flattened (gridU * gridV) x 10. */
export interface FaceTensorRecord {
  faceIndex: number;
  gridU: number;
  gridV: number;
  rows: Float32Array;
}

/** Undirected adjacency arc with its (sampleCount x 8) edge tensor. */
export interface ArcRecord {
  nodeI: number;
  nodeJ: number;
  edgeIndex: number;
  sampleCount: number;
  rows: Float32Array;
}

export interface LoadedItem {
  name: string;
  nodeCount: number;
  arcCount: number;
  faces: FaceTensorRecord[];
  arcs: ArcRecord[];
  nodeTokens: Float32Array | null;
  pooledToken: Float32Array | null;
}

export class DatasetFormatError extends Error {}

export class VersionMismatchError extends DatasetFormatError {}

export class ChecksumError extends DatasetFormatError {
  constructor(
    public readonly itemIndex: number,
    message: string,
  ) {
    super(message);
  }
}
