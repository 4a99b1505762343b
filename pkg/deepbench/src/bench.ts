/**
 * Benchmark harness: train each requested architecture on a corpus's
 * train/val splits, report test accuracy, and emit a results CSV. A model
 * that throws becomes a failure row; the run continues.
 */

import { writeFileSync } from "node:fs";

import { Corpus, gather } from "./loader";
import { Model, ModelName, buildModel } from "./models";
import { Adam, Rng, softmax, softmaxCrossEntropy, Tensor } from "./nn";

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  patience: number;
  seed: number;
  verbose?: boolean;
}

export const DEFAULT_OPTIONS: TrainOptions = {
  epochs: 30,
  batchSize: 32,
  learningRate: 1e-3,
  patience: 8,
  seed: 0,
};

export interface BenchmarkResult {
  model: string;
  accuracy: number;
  epochsRun: number;
  wallSeconds: number;
  error?: string;
}

function epochLr(opts: TrainOptions, epoch: number): number {
  if (epoch >= Math.floor(opts.epochs * 0.6)) return opts.learningRate * 0.09;
  if (epoch >= Math.floor(opts.epochs * 0.3)) return opts.learningRate * 0.3;
  return opts.learningRate;
}

export function accuracy(model: Model, corpus: Corpus, indices: Int32Array,
                         batchSize = 64): number {
  let correct = 0;
  for (let start = 0; start < indices.length; start += batchSize) {
    const batchIdx = indices.subarray(start, Math.min(start + batchSize, indices.length));
    const { x, y } = gather(corpus, batchIdx);
    const probs = softmax(model.forward(x, false));
    const k = probs.shape[1];
    for (let b = 0; b < y.length; b++) {
      let best = 0;
      let bestVal = -Infinity;
      for (let j = 0; j < k; j++) {
        if (probs.data[b * k + j] > bestVal) {
          bestVal = probs.data[b * k + j];
          best = j;
        }
      }
      if (best === y[b]) correct += 1;
    }
  }
  return correct / indices.length;
}

interface Snapshot {
  values: Float32Array[];
}

function snapshot(model: Model): Snapshot {
  return { values: model.params().map((p) => p.value.slice()) };
}

function restore(model: Model, snap: Snapshot): void {
  model.params().forEach((p, i) => p.value.set(snap.values[i]));
}

export function trainModel(model: Model, corpus: Corpus,
                           opts: TrainOptions): { epochsRun: number } {
  const train = corpus.splits.train;
  const val = corpus.splits.val;
  if (train.length === 0 || val.length === 0) {
    throw new Error("train and validation splits must be non-empty");
  }
  const optimizer = new Adam(model.params(), opts.learningRate);
  const order = Int32Array.from(train);
  let best: Snapshot | null = null;
  let bestAcc = -1;
  let sinceBest = 0;
  let epochsRun = 0;

  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    const rng = new Rng(BigInt(opts.seed) * 1000003n + BigInt(epoch));
    rng.shuffle(order);
    const lr = epochLr(opts, epoch);
    let lossSum = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += opts.batchSize) {
      const idx = order.subarray(start, Math.min(start + opts.batchSize, order.length));
      const { x, y } = gather(corpus, idx);
      optimizer.zeroGrad();
      const logits = model.forward(x, true);
      const { loss, dLogits } = softmaxCrossEntropy(logits, y);
      if (!Number.isFinite(loss)) {
        throw new Error(`loss became non-finite at epoch ${epoch}`);
      }
      model.backward(dLogits);
      optimizer.step(lr);
      lossSum += loss;
      batches += 1;
    }
    epochsRun = epoch + 1;
    const valAcc = accuracy(model, corpus, val);
    if (opts.verbose) {
      console.log(`  [${model.name}] epoch ${epoch}: loss ${(lossSum / batches).toFixed(4)} `
        + `val ${valAcc.toFixed(4)}`);
    }
    if (valAcc > bestAcc) {
      bestAcc = valAcc;
      best = snapshot(model);
      sinceBest = 0;
    } else {
      sinceBest += 1;
      if (sinceBest >= opts.patience) break;
    }
  }
  if (best) restore(model, best);
  return { epochsRun };
}

export function runBenchmark(corpus: Corpus, modelNames: ModelName[],
                             opts: TrainOptions = DEFAULT_OPTIONS): BenchmarkResult[] {
  const rows = corpus.manifest.config.n_samples;
  const numClasses = corpus.manifest.config.num_devices;
  const results: BenchmarkResult[] = [];
  for (const name of modelNames) {
    const started = Date.now();
    try {
      const model = buildModel(name, rows, numClasses, opts.seed);
      const { epochsRun } = trainModel(model, corpus, opts);
      const acc = accuracy(model, corpus, corpus.splits.test);
      results.push({
        model: name,
        accuracy: acc,
        epochsRun,
        wallSeconds: (Date.now() - started) / 1000,
      });
    } catch (err) {
      results.push({
        model: name,
        accuracy: NaN,
        epochsRun: 0,
        wallSeconds: (Date.now() - started) / 1000,
        error: err instanceof Error ? err.message : String(err),
      });
    }
  }
  return results;
}

export function resultsCsv(results: BenchmarkResult[]): string {
  const lines = ["model,test_accuracy,epochs_run,wall_seconds,error"];
  for (const r of results) {
    const acc = Number.isNaN(r.accuracy) ? "" : r.accuracy.toFixed(4);
    lines.push(`${r.model},${acc},${r.epochsRun},${r.wallSeconds.toFixed(1)},`
      + `${r.error ? JSON.stringify(r.error) : ""}`);
  }
  return lines.join("\n") + "\n";
}

export function writeResults(results: BenchmarkResult[], path: string): void {
  writeFileSync(path, resultsCsv(results));
}
