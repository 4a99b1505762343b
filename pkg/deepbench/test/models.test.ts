import assert from "node:assert/strict";
import { test } from "node:test";

import { gather, loadCorpus } from "../src/loader";
import { MODEL_NAMES, buildModel } from "../src/models";
import { accuracy, trainModel, DEFAULT_OPTIONS } from "../src/bench";
import { Conv2d, Dense, Flatten, Relu, Rng, Sequential, Tensor,
         softmaxCrossEntropy, softmax } from "../src/nn";
import { ensureCorpus } from "./helpers";

const tiny = ensureCorpus({ name: "tiny5", devices: 5, sessions: 10, samples: 64, seed: 3 });

test("every architecture builds, classifies, and backpropagates", () => {
  const corpus = loadCorpus(tiny);
  const { x, y } = gather(corpus, corpus.splits.val);
  for (const name of MODEL_NAMES) {
    const model = buildModel(name, 64, 5, 1);
    const logits = model.forward(x, true);
    assert.deepEqual(logits.shape, [y.length, 5]);
    const probs = softmax(logits);
    for (let b = 0; b < y.length; b++) {
      let sum = 0;
      for (let j = 0; j < 5; j++) sum += probs.data[b * 5 + j];
      assert.ok(Math.abs(sum - 1) < 1e-5, `${name}: probabilities not normalized`);
    }
    const { loss, dLogits } = softmaxCrossEntropy(logits, y);
    assert.ok(Number.isFinite(loss));
    const dx = model.backward(dLogits);
    assert.deepEqual(dx.shape, x.shape);
    assert.ok(model.params().length > 0);
  }
});

test("deterministic init given the seed", () => {
  const a = buildModel("resnet50", 64, 5, 7);
  const b = buildModel("resnet50", 64, 5, 7);
  const pa = a.params();
  const pb = b.params();
  assert.equal(pa.length, pb.length);
  for (let i = 0; i < pa.length; i++) {
    assert.deepEqual(pa[i].value, pb[i].value);
  }
});

test("analytic conv/dense gradients agree with finite differences", () => {
  // small stack in the same float32 pipeline; coarse step, coarse tolerance
  const rng = new Rng(11);
  const net = new Sequential([
    new Conv2d(3, 4, 1, 3, 2, 2, rng, 1),
    new Relu(),
    new Flatten(),
    new Dense(3 * Math.floor((8 + 2 - 3) / 2 + 1) * Math.floor((8 - 4) / 2 + 1), 3, rng),
  ]);
  const x = Tensor.zeros([2, 8, 8, 1]);
  for (let i = 0; i < x.data.length; i++) x.data[i] = rng.normal();
  const labels = Int32Array.from([0, 2]);

  const lossOf = () => softmaxCrossEntropy(net.forward(x, true), labels).loss;
  const params = net.params();
  params.forEach((p) => p.grad.fill(0));
  const { dLogits } = softmaxCrossEntropy(net.forward(x, true), labels);
  net.backward(dLogits);

  const rngPick = new Rng(5);
  const step = 1e-2;
  for (const p of params) {
    for (let probe = 0; probe < 10; probe++) {
      const i = Number(rngPick.nextU64() % BigInt(p.value.length));
      const orig = p.value[i];
      p.value[i] = orig + step;
      const up = lossOf();
      p.value[i] = orig - step;
      const down = lossOf();
      p.value[i] = orig;
      const numeric = (up - down) / (2 * step);
      const analytic = p.grad[i];
      const denom = Math.max(Math.abs(numeric), Math.abs(analytic), 1e-3);
      assert.ok(Math.abs(numeric - analytic) / denom < 0.05,
        `grad mismatch: analytic ${analytic} vs numeric ${numeric}`);
    }
  }
});

test("single-device corpus is trivially authenticated", () => {
  const base = ensureCorpus({ name: "one", devices: 1, sessions: 10, samples: 64, seed: 9 });
  const corpus = loadCorpus(base);
  const model = buildModel("resnet50", 64, 1, 0);
  trainModel(model, corpus, { ...DEFAULT_OPTIONS, epochs: 2 });
  assert.equal(accuracy(model, corpus, corpus.splits.test), 1.0);
});
