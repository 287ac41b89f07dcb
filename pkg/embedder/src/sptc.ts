/*
 * SPTC matrix container: 4-byte magic "SPTC", u32 format version, u64 row
 * count, u64 dimension (all little-endian), then float32 little-endian
 * row-major data.  The classifier package reads the same layout.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const SPTC_MAGIC = "SPTC";
export const SPTC_VERSION = 1;
const HEADER_BYTES = 24;

export interface Matrix {
  rows: number;
  dim: number;
  data: Float32Array; // rows * dim values, row-major
}

export class SptcFormatError extends Error {}

function checkShape(matrix: Matrix): void {
  const { rows, dim, data } = matrix;
  if (!Number.isInteger(rows) || !Number.isInteger(dim) || rows < 1 || dim < 1) {
    throw new SptcFormatError(`matrix must be nonempty, got ${rows}x${dim}`);
  }
  if (data.length !== rows * dim) {
    throw new SptcFormatError(
      `data length ${data.length} does not match ${rows}x${dim}`
    );
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new SptcFormatError(
        `non-finite value at row ${Math.floor(i / dim)}, col ${i % dim}`
      );
    }
  }
}

export function encodeSptc(matrix: Matrix): Buffer {
  checkShape(matrix);
  const { rows, dim, data } = matrix;
  const buf = Buffer.alloc(HEADER_BYTES + data.length * 4);
  buf.write(SPTC_MAGIC, 0, "ascii");
  buf.writeUInt32LE(SPTC_VERSION, 4);
  buf.writeBigUInt64LE(BigInt(rows), 8);
  buf.writeBigUInt64LE(BigInt(dim), 16);
  // DataView with explicit endianness keeps the payload byte-stable across
  // platforms; Float32Array.buffer would follow the host byte order.
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  for (let i = 0; i < data.length; i++) {
    view.setFloat32(i * 4, data[i], true);
  }
  return buf;
}

export function writeSptc(path: string, matrix: Matrix): void {
  writeFileSync(path, encodeSptc(matrix));
}

export function decodeSptc(buf: Buffer): Matrix {
  if (buf.length < HEADER_BYTES) {
    throw new SptcFormatError("truncated header: not an SPTC file");
  }
  const magic = buf.toString("ascii", 0, 4);
  if (magic !== SPTC_MAGIC) {
    throw new SptcFormatError(`bad magic ${JSON.stringify(magic)}, expected "SPTC"`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== SPTC_VERSION) {
    throw new SptcFormatError(`unsupported SPTC version ${version}`);
  }
  const rows = Number(buf.readBigUInt64LE(8));
  const dim = Number(buf.readBigUInt64LE(16));
  if (rows < 1 || dim < 1) {
    throw new SptcFormatError(`invalid dimensions ${rows}x${dim}`);
  }
  const want = rows * dim * 4;
  if (buf.length < HEADER_BYTES + want) {
    throw new SptcFormatError(
      `truncated payload: header declares ${rows}x${dim} (${want} bytes), ` +
        `got ${buf.length - HEADER_BYTES}`
    );
  }
  const data = new Float32Array(rows * dim);
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  for (let i = 0; i < data.length; i++) {
    data[i] = view.getFloat32(i * 4, true);
  }
  return { rows, dim, data };
}

export function readSptc(path: string): Matrix {
  return decodeSptc(readFileSync(path));
}
