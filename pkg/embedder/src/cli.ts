#!/usr/bin/env node
/*
 * embed: turn line-delimited texts or rendered anchor sentences into SPTC
 * embedding files for the classifier.
 *
 *   embed --model hash --in texts.txt --out texts.sptc
 *   embed --model hash --anchors anchors_rendered.jsonl --out-dir anchors/
 *
 * Exit codes: 0 ok, 1 unexpected error, 2 usage or configuration error,
 * 3 malformed input data, 4 environment error (model cannot be loaded).
 */

import { readFileSync, realpathSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { createBackend, EnvironmentError } from "./backend.js";
import {
  ANCHOR_MANIFEST_NAME,
  DataFormatError,
  embedAnchorsToDir,
  embedTextsToFile,
  parseRenderedJsonl,
} from "./embed.js";
import { defaultPooling, isPooling, Pooling, POOLINGS } from "./pooling.js";
import { SptcFormatError } from "./sptc.js";

class UsageError extends Error {}

const USAGE = `usage: embed --model <id> [--pooling <mode>] [--max-tokens <n>] [--batch-size <n>]
             (--in <texts> --out <file.sptc> [--manifest <file.json>] [--json-field <name>]
              | --anchors <rendered.jsonl> --out-dir <dir>)

  --model       'hash' or 'hash-<dim>' for the deterministic offline encoder,
                anything else names a pretrained checkpoint (default: hash)
  --pooling     ${POOLINGS.join(" | ")} (default: chosen per model family)
  --max-tokens  token budget per text; longer inputs are cropped (default: 512)
  --batch-size  texts encoded per model call (default: 32)
  --in/--out    text mode: one embedding row per input line, plus a manifest
  --json-field  text mode: parse each line as JSON and embed this field
  --anchors     anchor mode: {"class_id", "sentence"} rows, one SPTC file per
                class written to --out-dir plus ${ANCHOR_MANIFEST_NAME}
`;

function parsePositiveInt(raw: string, flag: string): number {
  const value = Number(raw);
  if (!Number.isInteger(value) || value < 1) {
    throw new UsageError(`${flag} must be a positive integer, got '${raw}'`);
  }
  return value;
}

function readTextFile(path: string): string {
  try {
    return readFileSync(path, "utf-8");
  } catch (err) {
    throw new DataFormatError(`cannot read ${path}: ${err}`);
  }
}

function splitLines(content: string): string[] {
  const lines = content.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop(); // a trailing newline does not open a new row
  }
  return lines;
}

function extractJsonField(lines: string[], field: string): string[] {
  return lines.map((line, i) => {
    let obj: any;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new DataFormatError(`line ${i + 1}: invalid JSON (${err})`);
    }
    if (typeof obj !== "object" || obj === null || !(field in obj)) {
      throw new DataFormatError(`line ${i + 1}: no field '${field}'`);
    }
    return String(obj[field]);
  });
}

export async function run(argv: string[]): Promise<void> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        model: { type: "string", default: "hash" },
        pooling: { type: "string" },
        "max-tokens": { type: "string", default: "512" },
        "batch-size": { type: "string", default: "32" },
        in: { type: "string" },
        out: { type: "string" },
        manifest: { type: "string" },
        "json-field": { type: "string" },
        anchors: { type: "string" },
        "out-dir": { type: "string" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    });
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  const opts = parsed.values;
  if (opts.help) {
    process.stdout.write(USAGE);
    return;
  }

  const model = opts.model!;
  const maxTokens = parsePositiveInt(opts["max-tokens"]!, "--max-tokens");
  const batchSize = parsePositiveInt(opts["batch-size"]!, "--batch-size");
  let pooling: Pooling;
  if (opts.pooling !== undefined) {
    if (!isPooling(opts.pooling)) {
      throw new UsageError(
        `--pooling must be one of ${POOLINGS.join(", ")}, got '${opts.pooling}'`
      );
    }
    pooling = opts.pooling;
  } else {
    pooling = defaultPooling(model);
  }

  const textMode = opts.in !== undefined || opts.out !== undefined;
  const anchorMode = opts.anchors !== undefined || opts["out-dir"] !== undefined;
  if (textMode === anchorMode) {
    throw new UsageError("give either --in/--out or --anchors/--out-dir");
  }

  const backend = await createBackend(model);
  const embedOpts = { pooling, maxTokens, batchSize };

  if (textMode) {
    if (opts.in === undefined || opts.out === undefined) {
      throw new UsageError("text mode needs both --in and --out");
    }
    let lines = splitLines(readTextFile(opts.in));
    if (opts["json-field"] !== undefined) {
      lines = extractJsonField(lines, opts["json-field"]);
    }
    const manifestPath = opts.manifest ?? `${opts.out}.manifest.json`;
    const manifest = await embedTextsToFile(
      backend,
      lines,
      embedOpts,
      opts.out,
      manifestPath
    );
    process.stdout.write(
      `embedded ${manifest.rows} rows (dim ${manifest.dim}, ` +
        `truncated ${manifest.truncated_count}, ` +
        `empty ${manifest.empty_lines.length}) -> ${opts.out}\n` +
        `manifest -> ${manifestPath}\n`
    );
  } else {
    if (opts.anchors === undefined || opts["out-dir"] === undefined) {
      throw new UsageError("anchor mode needs both --anchors and --out-dir");
    }
    const rows = parseRenderedJsonl(readTextFile(opts.anchors));
    const manifest = await embedAnchorsToDir(backend, rows, embedOpts, opts["out-dir"]);
    const total = rows.length;
    const nClasses = Object.keys(manifest.classes).length;
    process.stdout.write(
      `embedded ${nClasses} classes (${total} sentences, dim ${manifest.dim}, ` +
        `truncated ${manifest.truncated_count}) -> ${opts["out-dir"]}\n` +
        `manifest -> ${join(opts["out-dir"], ANCHOR_MANIFEST_NAME)}\n`
    );
  }
}

export async function main(argv: string[]): Promise<number> {
  try {
    await run(argv);
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`error: ${err.message}\n${USAGE}`);
      return 2;
    }
    if (err instanceof DataFormatError || err instanceof SptcFormatError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 3;
    }
    if (err instanceof EnvironmentError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 4;
    }
    process.stderr.write(`unexpected error: ${err}\n`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
