import assert from "node:assert/strict";
import { copyFileSync, readFileSync, writeFileSync } from "node:fs";
import { test } from "node:test";

import { CorpusLoadError, corpusPaths, loadCorpus, sampleBytesDigest } from "../src/loader";
import { ensureCorpus, primaryReadDigest } from "./helpers";

const toy = ensureCorpus({ name: "toy", devices: 2, sessions: 10, samples: 16, seed: 42 });

test("toy corpus tensors have the documented shape", () => {
  const corpus = loadCorpus(toy);
  assert.deepEqual(corpus.x.shape, [20, 16, 8, 1]);
  assert.equal(corpus.labels.length, 20);
  assert.deepEqual([...new Set(corpus.labels)].sort(), [0, 1]);
});

test("split sizes match the manifest counts", () => {
  const corpus = loadCorpus(toy);
  assert.equal(corpus.splits.train.length, corpus.manifest.split_counts.train);
  assert.equal(corpus.splits.val.length, corpus.manifest.split_counts.val);
  assert.equal(corpus.splits.test.length, corpus.manifest.split_counts.test);
  assert.equal(
    corpus.splits.train.length + corpus.splits.val.length + corpus.splits.test.length,
    corpus.manifest.record_count);
});

test("sample values are bit-identical to the primary reader", () => {
  const expected = primaryReadDigest(toy);
  const corpus = loadCorpus(toy);
  assert.equal(corpus.records.length, expected.records);
  assert.equal(sampleBytesDigest(corpus), expected.digest);
  const bits = new Uint32Array(corpus.x.data.buffer, 0, 16 * 8);
  const spots = [0, 1, 7, 63].map((i) => bits[i].toString(16).padStart(8, "0"));
  assert.deepEqual(spots, expected.spot_bits);
});

test("records carry device id, session index, and direction", () => {
  const corpus = loadCorpus(toy);
  for (let i = 1; i < corpus.records.length; i++) {
    const a = corpus.records[i - 1];
    const b = corpus.records[i];
    assert.ok(a.deviceId < b.deviceId
      || (a.deviceId === b.deviceId && a.sessionIndex < b.sessionIndex));
  }
  for (const r of corpus.records) {
    assert.ok(r.theta >= 0 && r.theta <= (75 * Math.PI) / 180 + 1e-6);
    assert.ok(Math.abs(r.phi) <= Math.PI + 1e-6);
  }
});

test("corrupted magic is rejected", () => {
  const { bin, manifest } = corpusPaths(toy);
  const badBase = bin.replace("toy", "toy_badmagic");
  const raw = readFileSync(bin);
  raw.write("ZZZZ", 0, "latin1");
  writeFileSync(badBase, raw);
  copyFileSync(manifest, badBase.replace(".caad", ".manifest.json"));
  assert.throws(() => loadCorpus(badBase), CorpusLoadError);
});

test("flipped payload byte is rejected by the checksum", () => {
  const { bin, manifest } = corpusPaths(toy);
  const badBase = bin.replace("toy", "toy_flip");
  const raw = readFileSync(bin);
  raw[raw.length - 3] ^= 0xff;
  writeFileSync(badBase, raw);
  copyFileSync(manifest, badBase.replace(".caad", ".manifest.json"));
  assert.throws(() => loadCorpus(badBase), /checksum/);
});

test("truncated payload is rejected", () => {
  const { bin, manifest } = corpusPaths(toy);
  const badBase = bin.replace("toy", "toy_short");
  const raw = readFileSync(bin);
  writeFileSync(badBase, raw.subarray(0, raw.length - 64));
  copyFileSync(manifest, badBase.replace(".caad", ".manifest.json"));
  assert.throws(() => loadCorpus(badBase), /expected/);
});
