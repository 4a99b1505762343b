import assert from "node:assert/strict";
import { test } from "node:test";

import { loadCorpus } from "../src/loader";
import { resultsCsv, runBenchmark, DEFAULT_OPTIONS } from "../src/bench";
import { ensureCorpus } from "./helpers";

test("all architectures produce result rows on a small corpus", () => {
  const corpus = loadCorpus(ensureCorpus({
    name: "tiny5", devices: 5, sessions: 10, samples: 64, seed: 3,
  }));
  const results = runBenchmark(corpus, ["vgg16", "resnet50", "inception", "xception"],
                               { ...DEFAULT_OPTIONS, epochs: 3 });
  assert.equal(results.length, 4);
  for (const r of results) {
    assert.equal(r.error, undefined);
    assert.ok(r.accuracy >= 0 && r.accuracy <= 1);
    assert.ok(r.epochsRun > 0);
  }
  const csv = resultsCsv(results);
  assert.match(csv, /^model,test_accuracy,epochs_run,wall_seconds,error\n/);
  assert.equal(csv.trim().split("\n").length, 5);
});

test("a failing architecture becomes a failure row and the run continues", () => {
  // 6 rows are too few for the 7-row conv stems: every model must fail cleanly
  const corpus = loadCorpus(ensureCorpus({
    name: "shallow", devices: 2, sessions: 6, samples: 6, seed: 4,
  }));
  const results = runBenchmark(corpus, ["vgg16", "resnet50"],
                               { ...DEFAULT_OPTIONS, epochs: 1 });
  assert.equal(results.length, 2);
  for (const r of results) {
    assert.ok(r.error, "expected a failure entry");
    assert.ok(Number.isNaN(r.accuracy));
  }
});

test("benchmark criterion: residual network authenticates 100 devices", () => {
  const corpus = loadCorpus(ensureCorpus({
    name: "bench100", devices: 100, sessions: 40, samples: 64,
    mode: "feedline", seed: 0,
  }));
  const results = runBenchmark(corpus, ["resnet50"], DEFAULT_OPTIONS);
  const r = results[0];
  assert.equal(r.error, undefined);
  console.log(`\nBENCHMARK resnet50: test accuracy ${r.accuracy.toFixed(4)} `
    + `(>= 0.97) in ${r.epochsRun} epochs, ${r.wallSeconds.toFixed(0)}s`);
  assert.ok(r.accuracy >= 0.97,
    `resnet-style accuracy ${r.accuracy} below the 0.97 gate`);
});
