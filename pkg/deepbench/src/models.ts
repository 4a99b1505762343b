/**
 * Benchmark architectures adapted to (n, 8, 1) I/Q session tensors.
 *
 * Each keeps the signature idea of its namesake (VGG: plain deep 3x1
 * stacks; ResNet: residual blocks; Inception: parallel multi-scale
 * branches; Xception: separable convolutions inside residual blocks) at a
 * width/depth suited to the small inputs. Every stem replaces the original
 * image front end with a strided full-width convolution so the row axis is
 * reduced while all eight I/Q columns mix immediately; heads flatten into
 * one dense softmax layer, trained from scratch.
 */

import { Conv2d, Dense, Flatten, InceptionBlock, Layer, Relu, Residual,
         Rng, SeparableConv2d, Sequential, Tensor } from "./nn";

export type ModelName = "vgg16" | "resnet50" | "inception" | "xception";

export const MODEL_NAMES: ModelName[] = ["vgg16", "resnet50", "inception", "xception"];

export interface Model {
  name: string;
  net: Sequential;
  forward(x: Tensor, train?: boolean): Tensor;
  backward(dy: Tensor): Tensor;
  params(): ReturnType<Sequential["params"]>;
}

function rowsAfter(rows: number, kernel: number, stride: number, pad = 0): number {
  return Math.floor((rows + 2 * pad - kernel) / stride) + 1;
}

/** full-width strided stem: (rows, 8, 1) -> (rows', 1, cout) */
function stem(rows: number, cout: number, rng: Rng): { layers: Layer[]; rows: number } {
  const layers = [new Conv2d(7, 8, 1, cout, 3, 1, rng), new Relu()];
  return { layers, rows: rowsAfter(rows, 7, 3) };
}

function convBlock(cin: number, cout: number, k: number, s: number,
                   rng: Rng, pad = 0): Layer[] {
  return [new Conv2d(k, 1, cin, cout, s, 1, rng, pad), new Relu()];
}

function residualBlock(c: number, rng: Rng): Residual {
  // row-padded so the block preserves shape for the identity shortcut
  return new Residual(new Sequential([
    new Conv2d(3, 1, c, c, 1, 1, rng, 1),
    new Relu(),
    new Conv2d(3, 1, c, c, 1, 1, rng, 1),
  ]));
}

function residualTransition(cin: number, cout: number, rng: Rng): Residual {
  // strided, with a 1x1 projection shortcut landing on the same rows
  return new Residual(
    new Sequential([
      new Conv2d(3, 1, cin, cout, 2, 1, rng, 1),
      new Relu(),
      new Conv2d(3, 1, cout, cout, 1, 1, rng, 1),
    ]),
    new Sequential([new Conv2d(1, 1, cin, cout, 2, 1, rng)]),
  );
}

function head(features: number, numClasses: number, rng: Rng): Layer[] {
  return [new Flatten(), new Dense(features, numClasses, rng)];
}

function buildVgg(rows: number, numClasses: number, rng: Rng): Sequential {
  const s = stem(rows, 16, rng);
  let r = s.rows;
  const layers: Layer[] = [...s.layers];
  layers.push(...convBlock(16, 16, 3, 1, rng, 1));
  layers.push(...convBlock(16, 16, 3, 1, rng, 1));
  layers.push(...convBlock(16, 32, 3, 2, rng, 1));
  r = rowsAfter(r, 3, 2, 1);
  layers.push(...convBlock(32, 32, 3, 1, rng, 1));
  layers.push(...convBlock(32, 32, 3, 1, rng, 1));
  layers.push(...convBlock(32, 64, 3, 2, rng, 1));
  r = rowsAfter(r, 3, 2, 1);
  layers.push(...convBlock(64, 64, 3, 1, rng, 1));
  layers.push(...head(r * 64, numClasses, rng));
  return new Sequential(layers);
}

function buildResnet(rows: number, numClasses: number, rng: Rng): Sequential {
  // wide full-width stem (element-comparison templates), then residual
  // refinement; width matters more than depth on these inputs
  const s = stem(rows, 48, rng);
  let r = s.rows;
  const layers: Layer[] = [...s.layers];
  layers.push(residualBlock(48, rng));
  layers.push(residualTransition(48, 64, rng));
  r = rowsAfter(r, 3, 2, 1);
  layers.push(residualBlock(64, rng));
  layers.push(...head(r * 64, numClasses, rng));
  return new Sequential(layers);
}

function inceptionUnit(cin: number, per: number, rng: Rng): InceptionBlock {
  // row-padded so the 1/3/5 branches agree on output rows
  return new InceptionBlock([
    new Sequential([new Conv2d(1, 1, cin, per, 1, 1, rng, 0), new Relu()]),
    new Sequential([new Conv2d(3, 1, cin, per, 1, 1, rng, 1), new Relu()]),
    new Sequential([new Conv2d(5, 1, cin, per, 1, 1, rng, 2), new Relu()]),
  ]);
}

function buildInception(rows: number, numClasses: number, rng: Rng): Sequential {
  const s = stem(rows, 16, rng);
  let r = s.rows;
  const layers: Layer[] = [...s.layers];
  layers.push(inceptionUnit(16, 8, rng));
  layers.push(...convBlock(24, 32, 3, 2, rng, 1));
  r = rowsAfter(r, 3, 2, 1);
  layers.push(inceptionUnit(32, 12, rng));
  layers.push(...convBlock(36, 64, 3, 2, rng, 1));
  r = rowsAfter(r, 3, 2, 1);
  layers.push(...head(r * 64, numClasses, rng));
  return new Sequential(layers);
}

function separableResidual(c: number, rng: Rng): Residual {
  return new Residual(new Sequential([
    new SeparableConv2d(3, 1, c, c, 1, 1, rng, 1),
    new Relu(),
    new SeparableConv2d(3, 1, c, c, 1, 1, rng, 1),
  ]));
}

function buildXception(rows: number, numClasses: number, rng: Rng): Sequential {
  const s = stem(rows, 16, rng);
  let r = s.rows;
  const layers: Layer[] = [...s.layers];
  layers.push(separableResidual(16, rng));
  layers.push(residualTransition(16, 32, rng));
  r = rowsAfter(r, 3, 2, 1);
  layers.push(separableResidual(32, rng));
  layers.push(residualTransition(32, 64, rng));
  r = rowsAfter(r, 3, 2, 1);
  layers.push(separableResidual(64, rng));
  layers.push(...head(r * 64, numClasses, rng));
  return new Sequential(layers);
}

const BUILDERS: Record<ModelName, (rows: number, k: number, rng: Rng) => Sequential> = {
  vgg16: buildVgg,
  resnet50: buildResnet,
  inception: buildInception,
  xception: buildXception,
};

export function buildModel(name: ModelName, rows: number, numClasses: number,
                           seed: number): Model {
  const rng = new Rng(seed);
  const net = BUILDERS[name](rows, numClasses, rng);
  return {
    name,
    net,
    forward: (x, train = false) => net.forward(x, train),
    backward: (dy) => net.backward(dy),
    params: () => net.params(),
  };
}
