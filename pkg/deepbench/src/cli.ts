/**
 * deepbench CLI: train the benchmark architectures on a .caad corpus.
 *
 *   node dist/src/cli.js --data <corpus base> [--models resnet50,vgg16]
 *       [--epochs 30] [--batch-size 32] [--lr 1e-3] [--seed 0]
 *       [--out results.csv] [--verbose]
 */

import { loadCorpus } from "./loader";
import { MODEL_NAMES, ModelName } from "./models";
import { DEFAULT_OPTIONS, runBenchmark, resultsCsv, writeResults } from "./bench";

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const key = argv[i];
    if (!key.startsWith("--")) throw new Error(`unexpected argument ${key}`);
    if (key === "--verbose") {
      args.set("verbose", "1");
      continue;
    }
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`missing value for ${key}`);
    args.set(key.slice(2), value);
    i++;
  }
  return args;
}

function main(): number {
  let args: Map<string, string>;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`usage error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
  const data = args.get("data");
  if (!data) {
    console.error("usage error: --data <corpus base path> is required");
    return 2;
  }
  const names = (args.get("models") ?? MODEL_NAMES.join(","))
    .split(",").map((s) => s.trim()).filter(Boolean);
  for (const n of names) {
    if (!MODEL_NAMES.includes(n as ModelName)) {
      console.error(`unknown model ${n}; choose from ${MODEL_NAMES.join(", ")}`);
      return 2;
    }
  }

  const corpus = loadCorpus(data);
  console.log(`loaded ${corpus.records.length} sessions `
    + `(${corpus.manifest.config.num_devices} devices, `
    + `n=${corpus.manifest.config.n_samples}); splits `
    + `${corpus.splits.train.length}/${corpus.splits.val.length}/${corpus.splits.test.length}`);

  const opts = {
    ...DEFAULT_OPTIONS,
    epochs: Number(args.get("epochs") ?? DEFAULT_OPTIONS.epochs),
    batchSize: Number(args.get("batch-size") ?? DEFAULT_OPTIONS.batchSize),
    learningRate: Number(args.get("lr") ?? DEFAULT_OPTIONS.learningRate),
    seed: Number(args.get("seed") ?? DEFAULT_OPTIONS.seed),
    verbose: args.has("verbose"),
  };
  const results = runBenchmark(corpus, names as ModelName[], opts);
  process.stdout.write(resultsCsv(results));
  const out = args.get("out");
  if (out) {
    writeResults(results, out);
    console.log(`wrote ${out}`);
  }
  return results.every((r) => !r.error) ? 0 : 1;
}

process.exit(main());
