import { readFile } from "node:fs/promises";
import { join } from "node:path";

import {
  DatasetFormatError,
  DatasetManifest,
  FORMAT_VERSION,
  MANIFEST_NAME,
  ManifestEntry,
  SHARD_MAGIC,
  VersionMismatchError,
} from "./types.js";

function requireNumber(value: unknown, what: string): number {
  if (typeof value !== "number" || !Number.isFinite(value) || value < 0) {
    throw new DatasetFormatError(`${what} must be a nonnegative number, got ${value}`);
  }
  return value;
}

function parseEntry(raw: unknown, index: number): ManifestEntry {
  if (typeof raw !== "object" || raw === null) {
    throw new DatasetFormatError(`items[${index}] is not an object`);
  }
  const entry = raw as Record<string, unknown>;
  if (typeof entry.name !== "string") {
    throw new DatasetFormatError(`items[${index}].name must be a string`);
  }
  return {
    name: entry.name,
    node_count: requireNumber(entry.node_count, `items[${index}].node_count`),
    arc_count: requireNumber(entry.arc_count, `items[${index}].arc_count`),
    offset: requireNumber(entry.offset, `items[${index}].offset`),
    length: requireNumber(entry.length, `items[${index}].length`),
    crc32: requireNumber(entry.crc32, `items[${index}].crc32`),
  };
}

/** Parse and schema-validate manifest.json before any tensor is touched. */
export async function loadManifest(directory: string): Promise<DatasetManifest> {
  const text = await readFile(join(directory, MANIFEST_NAME), "utf-8");
  let doc: Record<string, unknown>;
  try {
    doc = JSON.parse(text) as Record<string, unknown>;
  } catch (err) {
    throw new DatasetFormatError(`manifest is not valid JSON: ${String(err)}`);
  }
  if (doc.magic !== SHARD_MAGIC) {
    throw new DatasetFormatError(`manifest magic ${String(doc.magic)} is not ${SHARD_MAGIC}`);
  }
  if (doc.format_version !== FORMAT_VERSION) {
    throw new VersionMismatchError(
      `manifest version ${String(doc.format_version)}, loader supports ${FORMAT_VERSION}`,
    );
  }
  if (!Array.isArray(doc.items)) {
    throw new DatasetFormatError("manifest items must be an array");
  }
  const items = doc.items.map(parseEntry);
  if (doc.item_count !== items.length) {
    throw new DatasetFormatError(
      `item_count ${String(doc.item_count)} disagrees with ${items.length} items`,
    );
  }
  let previousEnd = 8; // shard header
  for (const [index, entry] of items.entries()) {
    if (entry.offset < previousEnd) {
      throw new DatasetFormatError(
        `items[${index}] offset ${entry.offset} overlaps the previous item`,
      );
    }
    previousEnd = entry.offset + entry.length;
  }
  return {
    format_version: FORMAT_VERSION,
    item_count: items.length,
    items,
    sampler_config: (doc.sampler_config ?? {}) as Record<string, unknown>,
  };
}
