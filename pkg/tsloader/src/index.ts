export { crc32 } from "./crc32.js";
export { loadManifest } from "./manifest.js";
export { loadDataset, loadItem, openDataset } from "./loader.js";
export type { OpenDataset } from "./loader.js";
export { verifyDataset } from "./verify.js";
export type { ItemReport, VerifyReport } from "./verify.js";
export * from "./types.js";
