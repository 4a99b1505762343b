/** Shared fixture helpers: corpora come from the simulator's own CLI. */

import { execSync } from "node:child_process";
import { existsSync, mkdirSync } from "node:fs";
import { join } from "node:path";

export const FIXTURES = join(__dirname, "..", "..", "fixtures");

export interface CorpusSpec {
  name: string;
  devices: number;
  sessions: number;
  samples: number;
  mode?: string;
  seed?: number;
}

/** generate (once) a corpus through the caasim CLI; returns the base path */
export function ensureCorpus(spec: CorpusSpec): string {
  mkdirSync(FIXTURES, { recursive: true });
  const base = join(FIXTURES, spec.name);
  if (!existsSync(`${base}.caad`)) {
    const mode = spec.mode ?? "caa";
    const seed = spec.seed ?? 0;
    execSync(
      `caasim generate --devices ${spec.devices} --sessions ${spec.sessions} `
      + `--samples ${spec.samples} --mode ${mode} --seed ${seed} --workers 2 `
      + `--out ${base}`,
      { stdio: "pipe" },
    );
  }
  return base;
}

/** what the primary implementation reads from a corpus, for bit-equivalence */
export function primaryReadDigest(base: string): {
  digest: string; records: number; spot_bits: string[];
} {
  const script = [
    "import hashlib, json, sys",
    "import numpy as np",
    "import caasim as cs",
    "recs, man = cs.read_corpus(sys.argv[1])",
    "h = hashlib.sha256()",
    "for r in recs: h.update(np.ascontiguousarray(r.samples, dtype='<f4').tobytes())",
    "bits = np.frombuffer(np.ascontiguousarray(recs[0].samples, dtype='<f4').tobytes(), dtype='<u4')",
    "spots = [format(int(bits[i]), '08x') for i in (0, 1, 7, 63)]",
    "print(json.dumps({'digest': h.hexdigest(), 'records': len(recs), 'spot_bits': spots}))",
  ].join("\n");
  const out = execSync(`python3 -c "${script.replace(/"/g, '\\"')}" ${base}`,
                       { stdio: "pipe" }).toString();
  return JSON.parse(out);
}
