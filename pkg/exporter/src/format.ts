/**
 * EMBSTRM1 binary container, matching the engine's reader bit for bit.
 *
 * Layout (little-endian):
 *   0   8  magic "EMBSTRM1"
 *   8   4  version (u32 = 1)
 *   12  4  d, feature dimension (u32)
 *   16  4  K, number of classes (u32, >= 2)
 *   20  8  record count (u64, 0 = unknown)
 *   28  4  flags (bit 0 labels, bit 1 features pre-normalized)
 *   32  .. K*d float32 text embeddings, row-major
 *   ..  .. per record: d float32 features, then i32 label if flagged (-1 = none)
 */

export const EMBED_MAGIC = "EMBSTRM1";
export const EMBED_VERSION = 1;
export const FLAG_LABELS = 1;
export const FLAG_NORMALIZED = 2;
export const HEADER_SIZE = 32;

export interface EmbeddingHeader {
  dim: number;
  numClasses: number;
  recordCount: number;
  flags: number;
  version: number;
}

export interface EmbeddingRecord {
  feature: Float32Array;
  label: number | null;
}

export class FormatError extends Error {}

export class TruncatedError extends FormatError {
  constructor(public recordIndex: number, public byteOffset: number) {
    super(`stream truncated in record ${recordIndex} at byte ${byteOffset}`);
  }
}

export function writeEmbeddingFile(
  header: EmbeddingHeader,
  textEmbeddings: Float32Array[],
  records: EmbeddingRecord[],
): Buffer {
  const { dim, numClasses } = header;
  if (numClasses < 2 || dim < 1) {
    throw new FormatError(`header requires K >= 2 and d >= 1, got K=${numClasses} d=${dim}`);
  }
  if (textEmbeddings.length !== numClasses || textEmbeddings.some((r) => r.length !== dim)) {
    throw new FormatError("text embeddings do not match header dimensions");
  }
  const hasLabels = (header.flags & FLAG_LABELS) !== 0;
  const recordSize = 4 * dim + (hasLabels ? 4 : 0);
  const buf = Buffer.alloc(HEADER_SIZE + 4 * numClasses * dim + recordSize * records.length);

  buf.write(EMBED_MAGIC, 0, "ascii");
  buf.writeUInt32LE(header.version, 8);
  buf.writeUInt32LE(dim, 12);
  buf.writeUInt32LE(numClasses, 16);
  buf.writeBigUInt64LE(BigInt(header.recordCount), 20);
  buf.writeUInt32LE(header.flags, 28);

  let off = HEADER_SIZE;
  for (const row of textEmbeddings) {
    for (const v of row) {
      buf.writeFloatLE(v, off);
      off += 4;
    }
  }
  for (const rec of records) {
    if (rec.feature.length !== dim) {
      throw new FormatError(`record feature length ${rec.feature.length} != ${dim}`);
    }
    for (const v of rec.feature) {
      buf.writeFloatLE(v, off);
      off += 4;
    }
    if (hasLabels) {
      buf.writeInt32LE(rec.label === null ? -1 : rec.label, off);
      off += 4;
    }
  }
  return buf;
}

export function readEmbeddingFile(buf: Buffer): {
  header: EmbeddingHeader;
  textEmbeddings: Float32Array[];
  records: EmbeddingRecord[];
} {
  if (buf.length < HEADER_SIZE) {
    throw new FormatError(`header requires ${HEADER_SIZE} bytes, got ${buf.length}`);
  }
  if (buf.toString("ascii", 0, 8) !== EMBED_MAGIC) {
    throw new FormatError(`bad magic ${buf.toString("ascii", 0, 8)}`);
  }
  const version = buf.readUInt32LE(8);
  if (version !== EMBED_VERSION) {
    throw new FormatError(`unsupported version ${version}`);
  }
  const dim = buf.readUInt32LE(12);
  const numClasses = buf.readUInt32LE(16);
  const recordCount = Number(buf.readBigUInt64LE(20));
  const flags = buf.readUInt32LE(28);
  if (dim < 1 || numClasses < 2) {
    throw new FormatError(`invalid header dimensions d=${dim} K=${numClasses}`);
  }

  let off = HEADER_SIZE;
  if (buf.length < off + 4 * numClasses * dim) {
    throw new FormatError("file ends inside the text-embedding block");
  }
  const textEmbeddings: Float32Array[] = [];
  for (let y = 0; y < numClasses; y++) {
    const row = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      row[j] = buf.readFloatLE(off);
      off += 4;
    }
    textEmbeddings.push(row);
  }

  const hasLabels = (flags & FLAG_LABELS) !== 0;
  const recordSize = 4 * dim + (hasLabels ? 4 : 0);
  const records: EmbeddingRecord[] = [];
  let index = 0;
  while (recordCount === 0 ? off < buf.length : index < recordCount) {
    if (buf.length < off + recordSize) {
      throw new TruncatedError(index, buf.length);
    }
    const feature = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      feature[j] = buf.readFloatLE(off);
      off += 4;
    }
    let label: number | null = null;
    if (hasLabels) {
      const raw = buf.readInt32LE(off);
      off += 4;
      label = raw < 0 ? null : raw;
    }
    records.push({ feature, label });
    index++;
  }
  return {
    header: { dim, numClasses, recordCount, flags, version },
    textEmbeddings,
    records,
  };
}
