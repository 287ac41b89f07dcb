import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { HashBackend } from "../src/backend.js";
import {
  DataFormatError,
  embedAnchorsToDir,
  embedLines,
  embedTextsToFile,
  groupByClass,
  parseRenderedJsonl,
} from "../src/embed.js";
import { readSptc } from "../src/sptc.js";

const OPTS = { pooling: "mean_tokens" as const, maxTokens: 512, batchSize: 32 };

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "embed-"));
}

function row(matrix: { dim: number; data: Float32Array }, i: number): number[] {
  return Array.from(matrix.data.subarray(i * matrix.dim, (i + 1) * matrix.dim));
}

describe("embedLines", () => {
  it("produces one row per input line", async () => {
    const result = await embedLines(
      new HashBackend(),
      ["first text", "second text", "third text"],
      OPTS
    );
    expect(result.matrix.rows).toBe(3);
    expect(result.matrix.dim).toBe(64);
    expect(result.matrix.data.length).toBe(3 * 64);
  });

  it("keeps rows in input order", async () => {
    const backend = new HashBackend();
    const lines = ["alpha one", "beta two", "gamma three"];
    const forward = await embedLines(backend, lines, OPTS);
    const reversed = await embedLines(backend, [...lines].reverse(), OPTS);
    expect(row(forward.matrix, 0)).toEqual(row(reversed.matrix, 2));
    expect(row(forward.matrix, 2)).toEqual(row(reversed.matrix, 0));
  });

  it("gives identical rows for identical input lines", async () => {
    const result = await embedLines(
      new HashBackend(),
      ["same line", "same line"],
      OPTS
    );
    expect(row(result.matrix, 0)).toEqual(row(result.matrix, 1));
  });

  it("is unchanged by the batch size", async () => {
    const lines = Array.from({ length: 7 }, (_, i) => `sentence number ${i}`);
    const small = await embedLines(new HashBackend(), lines, {
      ...OPTS,
      batchSize: 2,
    });
    const large = await embedLines(new HashBackend(), lines, {
      ...OPTS,
      batchSize: 64,
    });
    expect(Array.from(small.matrix.data)).toEqual(Array.from(large.matrix.data));
  });

  it("counts cropped lines", async () => {
    const long = Array.from({ length: 600 }, (_, i) => `w${i}`).join(" ");
    const result = await embedLines(
      new HashBackend(),
      [long, "short", long],
      OPTS
    );
    expect(result.truncatedCount).toBe(2);
  });

  it("embeds blank lines as zero rows and records their indices", async () => {
    const result = await embedLines(new HashBackend(), ["text", "", "  "], OPTS);
    expect(result.emptyLines).toEqual([1, 2]);
    expect(row(result.matrix, 1)).toEqual(new Array(64).fill(0));
  });

  it("rejects empty input", async () => {
    await expect(embedLines(new HashBackend(), [], OPTS)).rejects.toThrow(
      DataFormatError
    );
  });

  it("rejects a non-positive token budget", async () => {
    await expect(
      embedLines(new HashBackend(), ["x"], { ...OPTS, maxTokens: 0 })
    ).rejects.toThrow(/max_tokens/);
  });
});

describe("embedTextsToFile", () => {
  it("writes the matrix and a manifest describing the run", async () => {
    const dir = tempDir();
    const out = join(dir, "texts.sptc");
    const manifestPath = join(dir, "texts.json");
    const long = Array.from({ length: 600 }, (_, i) => `w${i}`).join(" ");
    const manifest = await embedTextsToFile(
      new HashBackend(),
      ["first", "", long],
      OPTS,
      out,
      manifestPath
    );
    expect(readSptc(out).rows).toBe(3);
    expect(manifest).toMatchObject({
      model: "hash",
      pooling: "mean_tokens",
      max_tokens: 512,
      rows: 3,
      dim: 64,
      truncated_count: 1,
      empty_lines: [1],
      embeddings: out,
    });
    expect(JSON.parse(readFileSync(manifestPath, "utf-8"))).toEqual(manifest);
  });

  it("re-running writes byte-identical outputs", async () => {
    const dir = tempDir();
    const out = join(dir, "texts.sptc");
    const manifestPath = join(dir, "texts.json");
    const lines = ["one sentence", "another sentence"];
    await embedTextsToFile(new HashBackend(), lines, OPTS, out, manifestPath);
    const firstSptc = readFileSync(out);
    const firstManifest = readFileSync(manifestPath);
    await embedTextsToFile(new HashBackend(), lines, OPTS, out, manifestPath);
    expect(readFileSync(out).equals(firstSptc)).toBe(true);
    expect(readFileSync(manifestPath).equals(firstManifest)).toBe(true);
  });
});

describe("parseRenderedJsonl", () => {
  it("reads {class_id, sentence} rows and skips blank lines", () => {
    const rows = parseRenderedJsonl(
      '{"class_id": 0, "sentence": "about sports."}\n' +
        "\n" +
        '{"class_id": 1, "sentence": "about business."}\n'
    );
    expect(rows).toEqual([
      { classId: 0, sentence: "about sports." },
      { classId: 1, sentence: "about business." },
    ]);
  });

  it("accepts string class ids", () => {
    const rows = parseRenderedJsonl('{"class_id": "2", "sentence": "x"}');
    expect(rows[0].classId).toBe(2);
  });

  it("rejects invalid JSON naming the line", () => {
    expect(() =>
      parseRenderedJsonl('{"class_id": 0, "sentence": "ok"}\nnot json')
    ).toThrow(/line 2/);
  });

  it("rejects rows missing the expected keys", () => {
    expect(() => parseRenderedJsonl('{"id": 0, "text": "x"}')).toThrow(
      /class_id/
    );
  });

  it("rejects non-integer class ids", () => {
    expect(() =>
      parseRenderedJsonl('{"class_id": 1.5, "sentence": "x"}')
    ).toThrow(/nonnegative integer/);
  });

  it("rejects an input with no rows", () => {
    expect(() => parseRenderedJsonl("\n\n")).toThrow(/no anchor sentences/);
  });
});

describe("groupByClass", () => {
  it("groups sentences preserving order within a class", () => {
    const grouped = groupByClass([
      { classId: 1, sentence: "b1" },
      { classId: 0, sentence: "a1" },
      { classId: 1, sentence: "b2" },
    ]);
    expect(grouped.get(0)).toEqual(["a1"]);
    expect(grouped.get(1)).toEqual(["b1", "b2"]);
  });

  it("names a class with no sentences", () => {
    expect(() =>
      groupByClass([
        { classId: 0, sentence: "a" },
        { classId: 2, sentence: "c" },
      ])
    ).toThrow("class 1 has no sentences");
  });
});

describe("embedAnchorsToDir", () => {
  const ROWS = [
    { classId: 0, sentence: "the topic is sports." },
    { classId: 0, sentence: "about sports generally." },
    { classId: 0, sentence: "sports news today." },
    { classId: 1, sentence: "the topic is business." },
    { classId: 1, sentence: "about business generally." },
    { classId: 1, sentence: "business news today." },
  ];

  it("writes one matrix per class with one row per sentence", async () => {
    const dir = tempDir();
    const manifest = await embedAnchorsToDir(new HashBackend(), ROWS, OPTS, dir);
    expect(Object.keys(manifest.classes).sort()).toEqual(["0", "1"]);
    for (const key of ["0", "1"]) {
      const matrix = readSptc(join(dir, manifest.classes[key]));
      expect(matrix.rows).toBe(3);
      expect(matrix.dim).toBe(64);
    }
    expect(manifest.sentence_counts).toEqual({ "0": 3, "1": 3 });
  });

  it("writes the manifest next to the class files", async () => {
    const dir = tempDir();
    const manifest = await embedAnchorsToDir(new HashBackend(), ROWS, OPTS, dir);
    const onDisk = JSON.parse(readFileSync(join(dir, "anchors.json"), "utf-8"));
    expect(onDisk).toEqual(manifest);
    expect(onDisk.classes["0"]).toBe("class_0.sptc");
    expect(existsSync(join(dir, "class_0.sptc"))).toBe(true);
  });

  it("creates the output directory when missing", async () => {
    const dir = join(tempDir(), "nested", "anchors");
    await embedAnchorsToDir(new HashBackend(), ROWS, OPTS, dir);
    expect(existsSync(join(dir, "anchors.json"))).toBe(true);
  });

  it("refuses a sparse class-id set", async () => {
    const rows = [
      { classId: 0, sentence: "a" },
      { classId: 3, sentence: "d" },
    ];
    await expect(
      embedAnchorsToDir(new HashBackend(), rows, OPTS, tempDir())
    ).rejects.toThrow(/class 1 has no sentences/);
  });
});
