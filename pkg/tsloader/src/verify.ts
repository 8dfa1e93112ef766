import { loadItem, openDataset, OpenDataset } from "./loader.js";
import { LoadedItem, TOKEN_WIDTH } from "./types.js";

export interface ItemReport {
  index: number;
  name: string;
  ok: boolean;
  error?: string;
}

export interface VerifyReport {
  ok: boolean;
  itemCount: number;
  items: ItemReport[];
  error?: string;
}

function checkShapes(item: LoadedItem, expectedNodes: number, expectedArcs: number): void {
  if (item.nodeCount !== expectedNodes) {
    throw new Error(
      `manifest says ${expectedNodes} nodes, item header says ${item.nodeCount}`,
    );
  }
  if (item.arcCount !== expectedArcs) {
    throw new Error(
      `manifest says ${expectedArcs} arcs, item header says ${item.arcCount}`,
    );
  }
  for (const face of item.faces) {
    if (face.gridU < 1 || face.gridV < 1) {
      throw new Error(`face ${face.faceIndex}: degenerate grid`);
    }
  }
  for (const arc of item.arcs) {
    if (arc.nodeI < 0 || arc.nodeI >= item.nodeCount ||
        arc.nodeJ < 0 || arc.nodeJ >= item.nodeCount) {
      throw new Error(`arc (${arc.nodeI}, ${arc.nodeJ}) references a missing node`);
    }
    if (arc.sampleCount < 1) {
      throw new Error(`arc edge ${arc.edgeIndex}: no samples`);
    }
  }
  if (item.nodeTokens !== null &&
      item.nodeTokens.length !== item.nodeCount * TOKEN_WIDTH) {
    throw new Error("node token matrix has the wrong shape");
  }
}

/**
 * Re-derive every checksum and re-check the shape invariants, reporting
 * per-item results instead of throwing on the first bad item.
 */
export async function verifyDataset(directory: string): Promise<VerifyReport> {
  let dataset: OpenDataset;
  try {
    dataset = await openDataset(directory);
  } catch (err) {
    return { ok: false, itemCount: 0, items: [], error: String(err) };
  }
  const items: ItemReport[] = [];
  let ok = true;
  for (const [index, entry] of dataset.manifest.items.entries()) {
    try {
      const item = loadItem(dataset, index);
      checkShapes(item, entry.node_count, entry.arc_count);
      items.push({ index, name: entry.name, ok: true });
    } catch (err) {
      ok = false;
      items.push({
        index,
        name: entry.name,
        ok: false,
        error: err instanceof Error ? err.message : String(err),
      });
    }
  }
  return { ok, itemCount: dataset.manifest.item_count, items };
}
