/**
 * Client for the .caad corpus format plus its JSON manifest.
 *
 * Layout (little-endian): magic "CAAD", format_version u16, num_devices u32,
 * sessions_per_device u32, n_samples u32, num_columns u32 (= 8), then
 * records sorted by (device_id, session_index): device_id u32,
 * session_index u32, theta f32, phi f32, n_samples*8 float32 row-major.
 * The manifest carries the config echo, per-split session counts, and the
 * payload checksum (first 8 bytes of SHA-256, hex).
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

import { Tensor } from "./nn";

const MAGIC = "CAAD";
const FORMAT_VERSION = 1;
const HEADER_BYTES = 22;
const RECORD_HEAD_BYTES = 16;

export class CorpusLoadError extends Error {}

export interface Manifest {
  format_version: number;
  config: {
    num_devices: number;
    sessions_per_device: number;
    n_samples: number;
    mode: string;
    master_seed: string;
    split_fractions: number[];
    channel: Record<string, number | null>;
  };
  split_counts: Record<string, number>;
  sessions_per_split_per_device: Record<string, number>;
  record_count: number;
  payload_bytes: number;
  checksum: string;
}

export interface RecordMeta {
  deviceId: number;
  sessionIndex: number;
  theta: number;
  phi: number;
}

export interface Corpus {
  /** all sessions stacked, shape (records, n_samples, 8, 1) */
  x: Tensor;
  labels: Int32Array;
  records: RecordMeta[];
  splits: { train: Int32Array; val: Int32Array; test: Int32Array };
  manifest: Manifest;
}

export function corpusPaths(basePath: string): { bin: string; manifest: string } {
  let base = basePath;
  if (base.endsWith(".caad")) base = base.slice(0, -".caad".length);
  else if (base.endsWith(".manifest.json")) base = base.slice(0, -".manifest.json".length);
  return { bin: `${base}.caad`, manifest: `${base}.manifest.json` };
}

function splitOf(manifest: Manifest, sessionIndex: number): "train" | "val" | "test" {
  const sizes = manifest.sessions_per_split_per_device;
  if (sessionIndex < sizes.train) return "train";
  if (sessionIndex < sizes.train + sizes.val) return "val";
  return "test";
}

export function loadCorpus(basePath: string): Corpus {
  const { bin, manifest: manPath } = corpusPaths(basePath);
  const manifest = JSON.parse(readFileSync(manPath, "utf-8")) as Manifest;
  const raw = readFileSync(bin);

  if (raw.length < HEADER_BYTES) {
    throw new CorpusLoadError(`${bin}: shorter than the fixed header`);
  }
  if (raw.toString("latin1", 0, 4) !== MAGIC) {
    throw new CorpusLoadError(`${bin}: bad magic`);
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  const version = view.getUint16(4, true);
  if (version !== FORMAT_VERSION) {
    throw new CorpusLoadError(`${bin}: unsupported format version ${version}`);
  }
  const numDevices = view.getUint32(6, true);
  const sessionsPerDevice = view.getUint32(10, true);
  const nSamples = view.getUint32(14, true);
  const numColumns = view.getUint32(18, true);
  if (numColumns !== 8) {
    throw new CorpusLoadError(`${bin}: expected 8 columns, got ${numColumns}`);
  }

  const recordCount = numDevices * sessionsPerDevice;
  const recordBytes = RECORD_HEAD_BYTES + nSamples * numColumns * 4;
  const expected = HEADER_BYTES + recordCount * recordBytes;
  if (raw.length !== expected) {
    throw new CorpusLoadError(`${bin}: ${raw.length} bytes, expected ${expected}`);
  }
  const checksum = createHash("sha256").update(raw).digest("hex").slice(0, 16);
  if (checksum !== manifest.checksum) {
    throw new CorpusLoadError(`${bin}: checksum mismatch with manifest`);
  }
  if (manifest.record_count !== recordCount) {
    throw new CorpusLoadError(`${bin}: manifest record count disagrees with header`);
  }

  const sampleCount = nSamples * numColumns;
  const x = Tensor.zeros([recordCount, nSamples, numColumns, 1]);
  const labels = new Int32Array(recordCount);
  const records: RecordMeta[] = [];
  const splitIdx: Record<"train" | "val" | "test", number[]> = { train: [], val: [], test: [] };

  let offset = HEADER_BYTES;
  for (let r = 0; r < recordCount; r++) {
    const deviceId = view.getUint32(offset, true);
    const sessionIndex = view.getUint32(offset + 4, true);
    const theta = view.getFloat32(offset + 8, true);
    const phi = view.getFloat32(offset + 12, true);
    offset += RECORD_HEAD_BYTES;
    // bulk float32 copy; the format and this host are both little-endian
    const sliceStart = raw.byteOffset + offset;
    const samples = new Float32Array(raw.buffer.slice(sliceStart, sliceStart + sampleCount * 4));
    x.data.set(samples, r * sampleCount);
    offset += sampleCount * 4;

    labels[r] = deviceId;
    records.push({ deviceId, sessionIndex, theta, phi });
    splitIdx[splitOf(manifest, sessionIndex)].push(r);
  }

  return {
    x,
    labels,
    records,
    splits: {
      train: Int32Array.from(splitIdx.train),
      val: Int32Array.from(splitIdx.val),
      test: Int32Array.from(splitIdx.test),
    },
    manifest,
  };
}

/** gather records into a batch tensor (batch, n, 8, 1) plus labels */
export function gather(corpus: Corpus, indices: ArrayLike<number>): { x: Tensor; y: Int32Array } {
  const [, n, cols] = corpus.x.shape;
  const sampleCount = n * cols;
  const x = Tensor.zeros([indices.length, n, cols, 1]);
  const y = new Int32Array(indices.length);
  for (let i = 0; i < indices.length; i++) {
    const r = indices[i] as number;
    x.data.set(corpus.x.data.subarray(r * sampleCount, (r + 1) * sampleCount), i * sampleCount);
    y[i] = corpus.labels[r];
  }
  return { x, y };
}

/** SHA-256 over the raw little-endian bytes of all sample values, in record order */
export function sampleBytesDigest(corpus: Corpus): string {
  return createHash("sha256").update(Buffer.from(corpus.x.data.buffer)).digest("hex");
}
