/*
 * Batch embedding of line-delimited texts and of rendered anchor sentences.
 * Text mode emits one SPTC matrix plus a JSON manifest; anchor mode emits
 * one SPTC file per class plus a manifest mapping class ids to those files,
 * which is exactly what the classifier's pipeline consumes.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { Backend, EncodedText } from "./backend.js";
import { Pooling, poolStates } from "./pooling.js";
import { Matrix, writeSptc } from "./sptc.js";

export class DataFormatError extends Error {}

function writeOrReport(path: string, write: () => void): void {
  try {
    write();
  } catch (err) {
    throw new DataFormatError(`cannot write ${path}: ${err}`);
  }
}

export interface EmbedOptions {
  pooling: Pooling;
  maxTokens: number;
  batchSize: number;
}

export interface EmbedResult {
  matrix: Matrix;
  truncatedCount: number;
  emptyLines: number[]; // zero-based indices of blank inputs (embedded anyway)
}

async function encodeAll(
  backend: Backend,
  lines: string[],
  opts: EmbedOptions
): Promise<EncodedText[]> {
  if (opts.maxTokens < 1) {
    throw new DataFormatError(`max_tokens must be >= 1, got ${opts.maxTokens}`);
  }
  if (opts.batchSize < 1) {
    throw new DataFormatError(`batch size must be >= 1, got ${opts.batchSize}`);
  }
  const encoded: EncodedText[] = [];
  for (let start = 0; start < lines.length; start += opts.batchSize) {
    const batch = lines.slice(start, start + opts.batchSize);
    encoded.push(...(await backend.encodeBatch(batch, opts.maxTokens)));
  }
  return encoded;
}

/** Embed lines in order: one output row per input line. */
export async function embedLines(
  backend: Backend,
  lines: string[],
  opts: EmbedOptions
): Promise<EmbedResult> {
  if (lines.length === 0) {
    throw new DataFormatError("no input lines to embed");
  }
  const encoded = await encodeAll(backend, lines, opts);
  const dim = backend.dim;
  const data = new Float32Array(lines.length * dim);
  let truncatedCount = 0;
  const emptyLines: number[] = [];
  encoded.forEach((enc, i) => {
    data.set(poolStates(enc.states, enc.mask, enc.dim, opts.pooling), i * dim);
    if (enc.truncated) truncatedCount++;
    if (lines[i].trim() === "") emptyLines.push(i);
  });
  return {
    matrix: { rows: lines.length, dim, data },
    truncatedCount,
    emptyLines,
  };
}

export interface TextManifest {
  model: string;
  pooling: Pooling;
  max_tokens: number;
  rows: number;
  dim: number;
  truncated_count: number;
  empty_lines: number[];
  embeddings: string;
}

/** Embed a text file's lines into one SPTC file plus a manifest. */
export async function embedTextsToFile(
  backend: Backend,
  lines: string[],
  opts: EmbedOptions,
  outPath: string,
  manifestPath: string
): Promise<TextManifest> {
  const result = await embedLines(backend, lines, opts);
  writeOrReport(outPath, () => writeSptc(outPath, result.matrix));
  const manifest: TextManifest = {
    model: backend.id,
    pooling: opts.pooling,
    max_tokens: opts.maxTokens,
    rows: result.matrix.rows,
    dim: result.matrix.dim,
    truncated_count: result.truncatedCount,
    empty_lines: result.emptyLines,
    embeddings: outPath,
  };
  writeOrReport(manifestPath, () =>
    writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n")
  );
  return manifest;
}

export interface AnchorRow {
  classId: number;
  sentence: string;
}

/** Parse rendered anchor sentences: one {class_id, sentence} object per line. */
export function parseRenderedJsonl(text: string): AnchorRow[] {
  const rows: AnchorRow[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    if (lines[i].trim() === "") continue;
    let obj: any;
    try {
      obj = JSON.parse(lines[i]);
    } catch (err) {
      throw new DataFormatError(`line ${i + 1}: invalid JSON (${err})`);
    }
    if (typeof obj !== "object" || obj === null || !("class_id" in obj) || !("sentence" in obj)) {
      throw new DataFormatError(`line ${i + 1}: expected {"class_id", "sentence"}`);
    }
    const classId = Number(obj.class_id);
    if (!Number.isInteger(classId) || classId < 0) {
      throw new DataFormatError(
        `line ${i + 1}: class_id must be a nonnegative integer, got ${JSON.stringify(obj.class_id)}`
      );
    }
    rows.push({ classId, sentence: String(obj.sentence) });
  }
  if (rows.length === 0) {
    throw new DataFormatError("no anchor sentences in input");
  }
  return rows;
}

/**
 * Group sentences by class, preserving input order within each class.
 * Class ids must cover 0..K-1 with no gaps; the classifier rejects sparse
 * ids, so a skipped class is reported here by name.
 */
export function groupByClass(rows: AnchorRow[]): Map<number, string[]> {
  const grouped = new Map<number, string[]>();
  for (const row of rows) {
    const list = grouped.get(row.classId);
    if (list) {
      list.push(row.sentence);
    } else {
      grouped.set(row.classId, [row.sentence]);
    }
  }
  const maxId = Math.max(...grouped.keys());
  for (let k = 0; k <= maxId; k++) {
    if (!grouped.has(k)) {
      throw new DataFormatError(`class ${k} has no sentences`);
    }
  }
  return grouped;
}

export interface AnchorManifest {
  model: string;
  pooling: Pooling;
  max_tokens: number;
  dim: number;
  truncated_count: number;
  sentence_counts: Record<string, number>;
  classes: Record<string, string>;
}

export const ANCHOR_MANIFEST_NAME = "anchors.json";

/**
 * Embed anchor sentences into one SPTC file per class under outDir, plus a
 * manifest whose "classes" map keys class ids to those files (paths
 * relative to the manifest, as the classifier resolves them).
 */
export async function embedAnchorsToDir(
  backend: Backend,
  rows: AnchorRow[],
  opts: EmbedOptions,
  outDir: string
): Promise<AnchorManifest> {
  const grouped = groupByClass(rows);
  writeOrReport(outDir, () => mkdirSync(outDir, { recursive: true }));
  const classIds = [...grouped.keys()].sort((a, b) => a - b);
  const classes: Record<string, string> = {};
  const counts: Record<string, number> = {};
  let truncatedCount = 0;
  for (const classId of classIds) {
    const sentences = grouped.get(classId)!;
    const result = await embedLines(backend, sentences, opts);
    const fileName = `class_${classId}.sptc`;
    const filePath = join(outDir, fileName);
    writeOrReport(filePath, () => writeSptc(filePath, result.matrix));
    classes[String(classId)] = fileName;
    counts[String(classId)] = sentences.length;
    truncatedCount += result.truncatedCount;
  }
  const manifest: AnchorManifest = {
    model: backend.id,
    pooling: opts.pooling,
    max_tokens: opts.maxTokens,
    dim: backend.dim,
    truncated_count: truncatedCount,
    sentence_counts: counts,
    classes,
  };
  const manifestPath = join(outDir, ANCHOR_MANIFEST_NAME);
  writeOrReport(manifestPath, () =>
    writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n")
  );
  return manifest;
}
