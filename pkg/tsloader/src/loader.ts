import { readFile } from "node:fs/promises";
import { join } from "node:path";

import { crc32 } from "./crc32.js";
import { loadManifest } from "./manifest.js";
import {
  ArcRecord,
  ChecksumError,
  DatasetFormatError,
  DatasetManifest,
  EDGE_COLUMNS,
  FACE_COLUMNS,
  FaceTensorRecord,
  FORMAT_VERSION,
  LoadedItem,
  SHARD_MAGIC,
  SHARD_NAME,
  TOKEN_WIDTH,
  VersionMismatchError,
} from "./types.js";

const PLATFORM_LITTLE_ENDIAN =
  new Uint8Array(new Uint32Array([1]).buffer)[0] === 1;

/** Copy `count` little-endian float32 values, preserving bit patterns. */
function readFloat32Array(bytes: Uint8Array, offset: number, count: number): Float32Array {
  const copy = new Uint8Array(count * 4);
  copy.set(bytes.subarray(offset, offset + count * 4));
  if (!PLATFORM_LITTLE_ENDIAN) {
    for (let i = 0; i < copy.length; i += 4) {
      [copy[i], copy[i + 3]] = [copy[i + 3], copy[i]];
      [copy[i + 1], copy[i + 2]] = [copy[i + 2], copy[i + 1]];
    }
  }
  return new Float32Array(copy.buffer);
}

class ItemCursor {
  private readonly view: DataView;
  position = 0;

  constructor(
    private readonly bytes: Uint8Array,
    private readonly itemIndex: number,
  ) {
    this.view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  }

  private need(size: number): void {
    if (this.position + size > this.bytes.length) {
      throw new ChecksumError(
        this.itemIndex,
        `item ${this.itemIndex}: record truncated at byte ${this.position}`,
      );
    }
  }

  uint32(): number {
    this.need(4);
    const value = this.view.getUint32(this.position, true);
    this.position += 4;
    return value;
  }

  int32(): number {
    this.need(4);
    const value = this.view.getInt32(this.position, true);
    this.position += 4;
    return value;
  }

  floats(count: number): Float32Array {
    this.need(count * 4);
    const arr = readFloat32Array(this.bytes, this.position, count);
    this.position += count * 4;
    return arr;
  }

  expectExhausted(): void {
    if (this.position !== this.bytes.length) {
      throw new ChecksumError(
        this.itemIndex,
        `item ${this.itemIndex}: ${this.bytes.length - this.position} trailing bytes`,
      );
    }
  }
}

export interface OpenDataset {
  manifest: DatasetManifest;
  shard: Uint8Array;
}

/** Read manifest + shard and check the shard header and byte ranges. */
export async function openDataset(directory: string): Promise<OpenDataset> {
  const manifest = await loadManifest(directory);
  const shard = new Uint8Array(await readFile(join(directory, SHARD_NAME)));
  if (shard.length < 8 ||
      new TextDecoder().decode(shard.subarray(0, 4)) !== SHARD_MAGIC) {
    throw new DatasetFormatError("shard header is not BRPG");
  }
  const version = new DataView(shard.buffer, shard.byteOffset).getUint32(4, true);
  if (version !== FORMAT_VERSION) {
    throw new VersionMismatchError(
      `shard version ${version}, loader supports ${FORMAT_VERSION}`,
    );
  }
  const last = manifest.items.at(-1);
  const expectedEnd = last ? last.offset + last.length : 8;
  if (shard.length !== expectedEnd) {
    throw new DatasetFormatError(
      `shard is ${shard.length} bytes, manifest expects ${expectedEnd}`,
    );
  }
  return { manifest, shard };
}

/** Decode one item after verifying its checksum; never mutates the shard. */
export function loadItem(dataset: OpenDataset, index: number): LoadedItem {
  const entry = dataset.manifest.items[index];
  if (entry === undefined) {
    throw new DatasetFormatError(`item index ${index} out of range`);
  }
  const bytes = dataset.shard.subarray(entry.offset, entry.offset + entry.length);
  const digest = crc32(bytes);
  if (digest !== entry.crc32) {
    throw new ChecksumError(
      index,
      `item ${index} ('${entry.name}'): checksum mismatch ` +
        `(manifest ${entry.crc32}, shard ${digest})`,
    );
  }
  const cursor = new ItemCursor(bytes, index);
  const nodeCount = cursor.uint32();
  const arcCount = cursor.uint32();
  const hasTokens = cursor.uint32();

  const faces: FaceTensorRecord[] = [];
  for (let n = 0; n < nodeCount; n++) {
    const faceIndex = cursor.int32();
    const gridU = cursor.uint32();
    const gridV = cursor.uint32();
    faces.push({
      faceIndex,
      gridU,
      gridV,
      rows: cursor.floats(gridU * gridV * FACE_COLUMNS),
    });
  }
  const arcs: ArcRecord[] = [];
  for (let a = 0; a < arcCount; a++) {
    const nodeI = cursor.int32();
    const nodeJ = cursor.int32();
    const edgeIndex = cursor.int32();
    const sampleCount = cursor.uint32();
    arcs.push({
      nodeI,
      nodeJ,
      edgeIndex,
      sampleCount,
      rows: cursor.floats(sampleCount * EDGE_COLUMNS),
    });
  }
  let nodeTokens: Float32Array | null = null;
  let pooledToken: Float32Array | null = null;
  if (hasTokens === 1) {
    nodeTokens = cursor.floats(nodeCount * TOKEN_WIDTH);
    pooledToken = cursor.floats(TOKEN_WIDTH);
  }
  cursor.expectExhausted();

  return {
    name: entry.name,
    nodeCount,
    arcCount,
    faces,
    arcs,
    nodeTokens,
    pooledToken,
  };
}

export async function loadDataset(directory: string): Promise<LoadedItem[]> {
  const dataset = await openDataset(directory);
  return dataset.manifest.items.map((_, index) => loadItem(dataset, index));
}
