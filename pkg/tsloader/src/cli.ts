#!/usr/bin/env node
import { verifyDataset } from "./verify.js";

export async function main(argv: string[]): Promise<number> {
  const dir = argv[0];
  if (!dir) {
    console.error("usage: verify_dataset <dataset-directory>");
    return 2;
  }
  const report = await verifyDataset(dir);
  if (report.error) {
    console.error(`error: ${report.error}`);
    return 1;
  }
  for (const item of report.items) {
    const status = item.ok ? "pass" : `fail error=${JSON.stringify(item.error)}`;
    console.log(`item=${item.index} name=${item.name} status=${status}`);
  }
  const failures = report.items.filter((i) => !i.ok).length;
  console.log(`items=${report.itemCount} failures=${failures}`);
  return report.ok ? 0 : 1;
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js") ?? false;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
