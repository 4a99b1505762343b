/**
 * Minimal NHWC neural-network core: tensors, layers with manual backprop,
 * and an Adam trainer. Just enough to express VGG/ResNet/Inception/Xception
 * style stacks over (rows, 8, 1) I/Q inputs on the CPU.
 */

export class Tensor {
  constructor(public data: Float32Array, public shape: number[]) {
    const n = shape.reduce((a, b) => a * b, 1);
    if (n !== data.length) {
      throw new Error(`shape ${shape} does not match length ${data.length}`);
    }
  }

  static zeros(shape: number[]): Tensor {
    return new Tensor(new Float32Array(shape.reduce((a, b) => a * b, 1)), shape);
  }

  get size(): number {
    return this.data.length;
  }
}

export class Param {
  grad: Float32Array;
  constructor(public value: Float32Array, public shape: number[]) {
    this.grad = new Float32Array(value.length);
  }
}

export interface Layer {
  forward(x: Tensor, train: boolean): Tensor;
  backward(dy: Tensor): Tensor;
  params(): Param[];
}

/** splitmix64 stream for reproducible init / shuffling. */
export class Rng {
  private state: bigint;
  private static readonly MASK = (1n << 64n) - 1n;
  private spareNormal: number | null = null;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & Rng.MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & Rng.MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & Rng.MASK;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & Rng.MASK;
    return z ^ (z >> 31n);
  }

  /** uniform in [0, 1) with 53-bit resolution */
  uniform(): number {
    return Number(this.nextU64() >> 11n) / 9007199254740992;
  }

  normal(): number {
    if (this.spareNormal !== null) {
      const v = this.spareNormal;
      this.spareNormal = null;
      return v;
    }
    let u = 0;
    let v = 0;
    do {
      u = this.uniform();
    } while (u === 0);
    v = this.uniform();
    const r = Math.sqrt(-2 * Math.log(u));
    this.spareNormal = r * Math.sin(2 * Math.PI * v);
    return r * Math.cos(2 * Math.PI * v);
  }

  shuffle(indices: Int32Array): void {
    for (let i = indices.length - 1; i > 0; i--) {
      const j = Number(this.nextU64() % BigInt(i + 1));
      const t = indices[i];
      indices[i] = indices[j];
      indices[j] = t;
    }
  }
}

function convOut(size: number, k: number, s: number): number {
  return Math.floor((size - k) / s) + 1;
}

/**
 * 2-D convolution with bias, NHWC layout; optional symmetric row padding.
 * Implemented as im2col + a flat matmul so the hot loops stay monomorphic.
 */
export class Conv2d implements Layer {
  w: Param;
  b: Param;
  private input: Tensor | null = null;
  private patches: Float32Array | null = null;
  private outRows = 0;
  private outCols = 0;

  constructor(
    public kh: number, public kw: number,
    public cin: number, public cout: number,
    public sh: number = 1, public sw: number = 1,
    rng?: Rng,
    public padRows: number = 0,
  ) {
    const fanIn = kh * kw * cin;
    const limit = Math.sqrt(1 / fanIn);
    const w = new Float32Array(kh * kw * cin * cout);
    if (rng) {
      for (let i = 0; i < w.length; i++) w[i] = (rng.uniform() * 2 - 1) * limit;
    }
    this.w = new Param(w, [kh, kw, cin, cout]);
    this.b = new Param(new Float32Array(cout), [cout]);
  }

  private padInput(x: Tensor): Tensor {
    if (this.padRows === 0) return x;
    const [b, h, w, c] = x.shape;
    const padded = Tensor.zeros([b, h + 2 * this.padRows, w, c]);
    const rowLen = w * c;
    for (let bi = 0; bi < b; bi++) {
      for (let y = 0; y < h; y++) {
        const src = (bi * h + y) * rowLen;
        const dst = (bi * (h + 2 * this.padRows) + y + this.padRows) * rowLen;
        padded.data.set(x.data.subarray(src, src + rowLen), dst);
      }
    }
    return padded;
  }

  forward(xRaw: Tensor): Tensor {
    const x = this.padInput(xRaw);
    this.input = x;
    const [batch, h, w, c] = x.shape;
    if (c !== this.cin) {
      throw new Error(`conv expected ${this.cin} channels, got ${c}`);
    }
    const ho = convOut(h, this.kh, this.sh);
    const wo = convOut(w, this.kw, this.sw);
    if (ho < 1 || wo < 1) {
      throw new Error(
        `input ${h}x${w} too small for a ${this.kh}x${this.kw} kernel`);
    }
    this.outRows = ho;
    this.outCols = wo;
    const { kh, kw, cin, cout, sh, sw } = this;
    const kSize = kh * kw * cin;
    const m = batch * ho * wo;
    const patches = new Float32Array(m * kSize);
    const xd = x.data;
    const seg = kw * cin; // one kernel row of one patch is contiguous in NHWC
    let row = 0;
    for (let b = 0; b < batch; b++) {
      for (let oy = 0; oy < ho; oy++) {
        for (let ox = 0; ox < wo; ox++) {
          const dst = row * kSize;
          for (let ky = 0; ky < kh; ky++) {
            const src = ((b * h + oy * sh + ky) * w + ox * sw) * cin;
            patches.set(xd.subarray(src, src + seg), dst + ky * seg);
          }
          row++;
        }
      }
    }
    this.patches = patches;

    const out = Tensor.zeros([batch, ho, wo, cout]);
    const od = out.data, wd = this.w.value, bd = this.b.value;
    for (let r = 0; r < m; r++) {
      const oBase = r * cout;
      for (let co = 0; co < cout; co++) od[oBase + co] = bd[co];
      const pBase = r * kSize;
      for (let k = 0; k < kSize; k++) {
        const a = patches[pBase + k];
        if (a === 0) continue;
        const wRow = k * cout;
        for (let co = 0; co < cout; co++) od[oBase + co] += a * wd[wRow + co];
      }
    }
    return out;
  }

  backward(dy: Tensor): Tensor {
    const x = this.input!;
    const patches = this.patches!;
    const [batch, h, w] = x.shape;
    const ho = this.outRows, wo = this.outCols;
    const { kh, kw, cin, cout, sh, sw } = this;
    const kSize = kh * kw * cin;
    const m = batch * ho * wo;
    const dyd = dy.data, gw = this.w.grad, gb = this.b.grad;

    // dW and db
    for (let r = 0; r < m; r++) {
      const oBase = r * cout;
      for (let co = 0; co < cout; co++) gb[co] += dyd[oBase + co];
      const pBase = r * kSize;
      for (let k = 0; k < kSize; k++) {
        const a = patches[pBase + k];
        if (a === 0) continue;
        const wRow = k * cout;
        for (let co = 0; co < cout; co++) gw[wRow + co] += a * dyd[oBase + co];
      }
    }

    // dPatches = dY @ W^T, via a transposed weight copy for contiguous rows
    const wt = new Float32Array(kSize * cout);
    const wd = this.w.value;
    for (let k = 0; k < kSize; k++) {
      for (let co = 0; co < cout; co++) wt[co * kSize + k] = wd[k * cout + co];
    }
    const dPatches = new Float32Array(m * kSize);
    for (let r = 0; r < m; r++) {
      const oBase = r * cout;
      const pBase = r * kSize;
      for (let co = 0; co < cout; co++) {
        const g = dyd[oBase + co];
        if (g === 0) continue;
        const wtRow = co * kSize;
        for (let k = 0; k < kSize; k++) dPatches[pBase + k] += g * wt[wtRow + k];
      }
    }

    // col2im scatter-add
    const dx = Tensor.zeros(x.shape);
    const dxd = dx.data;
    const seg = kw * cin;
    let row = 0;
    for (let b = 0; b < batch; b++) {
      for (let oy = 0; oy < ho; oy++) {
        for (let ox = 0; ox < wo; ox++) {
          const src = row * kSize;
          for (let ky = 0; ky < kh; ky++) {
            const dst = ((b * h + oy * sh + ky) * w + ox * sw) * cin;
            for (let i = 0; i < seg; i++) dxd[dst + i] += dPatches[src + ky * seg + i];
          }
          row++;
        }
      }
    }
    this.patches = null;
    if (this.padRows === 0) return dx;
    // strip the gradient rows that correspond to padding
    const hIn = h - 2 * this.padRows;
    const out = Tensor.zeros([batch, hIn, w, cin]);
    const rowLen = w * cin;
    for (let bi = 0; bi < batch; bi++) {
      for (let y = 0; y < hIn; y++) {
        const src = (bi * h + y + this.padRows) * rowLen;
        const dst = (bi * hIn + y) * rowLen;
        out.data.set(dxd.subarray(src, src + rowLen), dst);
      }
    }
    return out;
  }

  params(): Param[] {
    return [this.w, this.b];
  }
}

/** depthwise kh x kw followed by pointwise 1x1 (separable convolution) */
export class SeparableConv2d implements Layer {
  dw: Param; // (kh, kw, cin)
  pw: Conv2d;
  private input: Tensor | null = null;
  private mid: Tensor | null = null;

  constructor(
    public kh: number, public kw: number,
    public cin: number, public cout: number,
    public sh: number = 1, public sw: number = 1,
    rng?: Rng,
    public padRows: number = 0,
  ) {
    const limit = Math.sqrt(1 / (kh * kw));
    const d = new Float32Array(kh * kw * cin);
    if (rng) {
      for (let i = 0; i < d.length; i++) d[i] = (rng.uniform() * 2 - 1) * limit;
    }
    this.dw = new Param(d, [kh, kw, cin]);
    this.pw = new Conv2d(1, 1, cin, cout, 1, 1, rng);
  }

  private padInput(x: Tensor): Tensor {
    if (this.padRows === 0) return x;
    const [b, h, w, c] = x.shape;
    const padded = Tensor.zeros([b, h + 2 * this.padRows, w, c]);
    const rowLen = w * c;
    for (let bi = 0; bi < b; bi++) {
      for (let y = 0; y < h; y++) {
        const src = (bi * h + y) * rowLen;
        const dst = (bi * (h + 2 * this.padRows) + y + this.padRows) * rowLen;
        padded.data.set(x.data.subarray(src, src + rowLen), dst);
      }
    }
    return padded;
  }

  forward(xRaw: Tensor, train: boolean): Tensor {
    const x = this.padInput(xRaw);
    this.input = x;
    const [batch, h, w, c] = x.shape;
    const ho = convOut(h, this.kh, this.sh);
    const wo = convOut(w, this.kw, this.sw);
    const mid = Tensor.zeros([batch, ho, wo, c]);
    const xd = x.data, md = mid.data, dwv = this.dw.value;
    const { kh, kw, sh, sw } = this;
    for (let b = 0; b < batch; b++) {
      for (let oy = 0; oy < ho; oy++) {
        for (let ox = 0; ox < wo; ox++) {
          const oBase = ((b * ho + oy) * wo + ox) * c;
          for (let ky = 0; ky < kh; ky++) {
            const iy = oy * sh + ky;
            for (let kx = 0; kx < kw; kx++) {
              const iBase = ((b * h + iy) * w + (ox * sw + kx)) * c;
              const wBase = (ky * kw + kx) * c;
              for (let ci = 0; ci < c; ci++) {
                md[oBase + ci] += xd[iBase + ci] * dwv[wBase + ci];
              }
            }
          }
        }
      }
    }
    this.mid = mid;
    return this.pw.forward(mid);
  }

  backward(dy: Tensor): Tensor {
    const dmid = this.pw.backward(dy);
    const x = this.input!;
    const [batch, h, w, c] = x.shape;
    const [, ho, wo] = dmid.shape;
    const dx = Tensor.zeros(x.shape);
    const xd = x.data, dxd = dx.data, dmd = dmid.data;
    const dwv = this.dw.value, gdw = this.dw.grad;
    const { kh, kw, sh, sw } = this;
    for (let b = 0; b < batch; b++) {
      for (let oy = 0; oy < ho; oy++) {
        for (let ox = 0; ox < wo; ox++) {
          const oBase = ((b * ho + oy) * wo + ox) * c;
          for (let ky = 0; ky < kh; ky++) {
            const iy = oy * sh + ky;
            for (let kx = 0; kx < kw; kx++) {
              const iBase = ((b * h + iy) * w + (ox * sw + kx)) * c;
              const wBase = (ky * kw + kx) * c;
              for (let ci = 0; ci < c; ci++) {
                const g = dmd[oBase + ci];
                gdw[wBase + ci] += xd[iBase + ci] * g;
                dxd[iBase + ci] += dwv[wBase + ci] * g;
              }
            }
          }
        }
      }
    }
    if (this.padRows === 0) return dx;
    const hIn = h - 2 * this.padRows;
    const out = Tensor.zeros([batch, hIn, w, c]);
    const rowLen = w * c;
    for (let bi = 0; bi < batch; bi++) {
      for (let y = 0; y < hIn; y++) {
        const src = (bi * h + y + this.padRows) * rowLen;
        const dst = (bi * hIn + y) * rowLen;
        out.data.set(dxd.subarray(src, src + rowLen), dst);
      }
    }
    return out;
  }

  params(): Param[] {
    return [this.dw, ...this.pw.params()];
  }
}

export class Relu implements Layer {
  private mask: Uint8Array | null = null;

  forward(x: Tensor): Tensor {
    const out = new Tensor(new Float32Array(x.data.length), x.shape.slice());
    const mask = new Uint8Array(x.data.length);
    for (let i = 0; i < x.data.length; i++) {
      if (x.data[i] > 0) {
        out.data[i] = x.data[i];
        mask[i] = 1;
      }
    }
    this.mask = mask;
    return out;
  }

  backward(dy: Tensor): Tensor {
    const mask = this.mask!;
    const dx = new Tensor(new Float32Array(dy.data.length), dy.shape.slice());
    for (let i = 0; i < dy.data.length; i++) {
      if (mask[i]) dx.data[i] = dy.data[i];
    }
    return dx;
  }

  params(): Param[] {
    return [];
  }
}

/** mean over rows and columns -> (batch, channels) */
export class GlobalAvgPool implements Layer {
  private inShape: number[] | null = null;

  forward(x: Tensor): Tensor {
    this.inShape = x.shape.slice();
    const [b, h, w, c] = x.shape;
    const out = Tensor.zeros([b, c]);
    const scale = 1 / (h * w);
    for (let bi = 0; bi < b; bi++) {
      const oBase = bi * c;
      for (let p = 0; p < h * w; p++) {
        const iBase = (bi * h * w + p) * c;
        for (let ci = 0; ci < c; ci++) out.data[oBase + ci] += x.data[iBase + ci];
      }
      for (let ci = 0; ci < c; ci++) out.data[oBase + ci] *= scale;
    }
    return out;
  }

  backward(dy: Tensor): Tensor {
    const [b, h, w, c] = this.inShape!;
    const dx = Tensor.zeros([b, h, w, c]);
    const scale = 1 / (h * w);
    for (let bi = 0; bi < b; bi++) {
      const oBase = bi * c;
      for (let p = 0; p < h * w; p++) {
        const iBase = (bi * h * w + p) * c;
        for (let ci = 0; ci < c; ci++) dx.data[iBase + ci] = dy.data[oBase + ci] * scale;
      }
    }
    return dx;
  }

  params(): Param[] {
    return [];
  }
}

/** (batch, h, w, c) -> (batch, h*w*c) */
export class Flatten implements Layer {
  private inShape: number[] | null = null;

  forward(x: Tensor): Tensor {
    this.inShape = x.shape.slice();
    const [b] = x.shape;
    return new Tensor(x.data, [b, x.data.length / b]);
  }

  backward(dy: Tensor): Tensor {
    return new Tensor(dy.data, this.inShape!.slice());
  }

  params(): Param[] {
    return [];
  }
}

export class Dense implements Layer {
  w: Param;
  b: Param;
  private input: Tensor | null = null;

  constructor(public din: number, public dout: number, rng?: Rng) {
    const limit = Math.sqrt(1 / din);
    const w = new Float32Array(din * dout);
    if (rng) {
      for (let i = 0; i < w.length; i++) w[i] = (rng.uniform() * 2 - 1) * limit;
    }
    this.w = new Param(w, [din, dout]);
    this.b = new Param(new Float32Array(dout), [dout]);
  }

  forward(x: Tensor): Tensor {
    this.input = x;
    const [batch, din] = x.shape;
    if (din !== this.din) throw new Error(`dense expected ${this.din} inputs, got ${din}`);
    const out = Tensor.zeros([batch, this.dout]);
    for (let b = 0; b < batch; b++) {
      const iBase = b * din;
      const oBase = b * this.dout;
      for (let j = 0; j < this.dout; j++) out.data[oBase + j] = this.b.value[j];
      for (let i = 0; i < din; i++) {
        const xv = x.data[iBase + i];
        if (xv === 0) continue;
        const wRow = i * this.dout;
        for (let j = 0; j < this.dout; j++) out.data[oBase + j] += xv * this.w.value[wRow + j];
      }
    }
    return out;
  }

  backward(dy: Tensor): Tensor {
    const x = this.input!;
    const [batch] = x.shape;
    const dx = Tensor.zeros(x.shape);
    for (let b = 0; b < batch; b++) {
      const iBase = b * this.din;
      const oBase = b * this.dout;
      for (let j = 0; j < this.dout; j++) this.b.grad[j] += dy.data[oBase + j];
      for (let i = 0; i < this.din; i++) {
        const wRow = i * this.dout;
        let acc = 0;
        for (let j = 0; j < this.dout; j++) {
          const g = dy.data[oBase + j];
          acc += this.w.value[wRow + j] * g;
          this.w.grad[wRow + j] += x.data[iBase + i] * g;
        }
        dx.data[iBase + i] += acc;
      }
    }
    return dx;
  }

  params(): Param[] {
    return [this.w, this.b];
  }
}

export class Sequential implements Layer {
  constructor(public layers: Layer[]) {}

  forward(x: Tensor, train: boolean): Tensor {
    for (const layer of this.layers) x = layer.forward(x, train);
    return x;
  }

  backward(dy: Tensor): Tensor {
    for (let i = this.layers.length - 1; i >= 0; i--) dy = this.layers[i].backward(dy);
    return dy;
  }

  params(): Param[] {
    return this.layers.flatMap((l) => l.params());
  }
}

/** y = relu(main(x) + shortcut(x)); identity shortcut when none given */
export class Residual implements Layer {
  private relu = new Relu();

  constructor(public main: Sequential, public shortcut: Sequential | null = null) {}

  forward(x: Tensor, train: boolean): Tensor {
    const m = this.main.forward(x, train);
    const s = this.shortcut ? this.shortcut.forward(x, train) : x;
    if (m.data.length !== s.data.length) {
      throw new Error("residual branch shapes disagree");
    }
    const sum = new Tensor(new Float32Array(m.data.length), m.shape.slice());
    for (let i = 0; i < m.data.length; i++) sum.data[i] = m.data[i] + s.data[i];
    return this.relu.forward(sum);
  }

  backward(dy: Tensor): Tensor {
    const dSum = this.relu.backward(dy);
    const dMain = this.main.backward(dSum);
    const dShort = this.shortcut ? this.shortcut.backward(dSum) : dSum;
    const dx = new Tensor(new Float32Array(dMain.data.length), dMain.shape.slice());
    for (let i = 0; i < dx.data.length; i++) dx.data[i] = dMain.data[i] + dShort.data[i];
    return dx;
  }

  params(): Param[] {
    return [...this.main.params(), ...(this.shortcut ? this.shortcut.params() : [])];
  }
}

/** parallel branches concatenated along the channel axis */
export class InceptionBlock implements Layer {
  private branchShapes: number[][] = [];

  constructor(public branches: Sequential[]) {}

  forward(x: Tensor, train: boolean): Tensor {
    const outs = this.branches.map((br) => br.forward(x, train));
    this.branchShapes = outs.map((o) => o.shape.slice());
    const [b, h, w] = outs[0].shape;
    for (const o of outs) {
      if (o.shape[0] !== b || o.shape[1] !== h || o.shape[2] !== w) {
        throw new Error("inception branches disagree on spatial shape");
      }
    }
    const channels = outs.map((o) => o.shape[3]);
    const ctot = channels.reduce((a, v) => a + v, 0);
    const out = Tensor.zeros([b, h, w, ctot]);
    const positions = b * h * w;
    for (let p = 0; p < positions; p++) {
      let off = 0;
      for (let bi = 0; bi < outs.length; bi++) {
        const c = channels[bi];
        out.data.set(outs[bi].data.subarray(p * c, (p + 1) * c), p * ctot + off);
        off += c;
      }
    }
    return out;
  }

  backward(dy: Tensor): Tensor {
    const [b, h, w, ctot] = dy.shape;
    const positions = b * h * w;
    let dx: Tensor | null = null;
    let off = 0;
    for (let bi = 0; bi < this.branches.length; bi++) {
      const c = this.branchShapes[bi][3];
      const slice = Tensor.zeros(this.branchShapes[bi]);
      for (let p = 0; p < positions; p++) {
        slice.data.set(dy.data.subarray(p * ctot + off, p * ctot + off + c), p * c);
      }
      off += c;
      const d = this.branches[bi].backward(slice);
      if (dx === null) {
        dx = d;
      } else {
        for (let i = 0; i < dx.data.length; i++) dx.data[i] += d.data[i];
      }
    }
    return dx!;
  }

  params(): Param[] {
    return this.branches.flatMap((b) => b.params());
  }
}

/** softmax probabilities per row */
export function softmax(logits: Tensor): Tensor {
  const [b, k] = logits.shape;
  const out = Tensor.zeros([b, k]);
  for (let bi = 0; bi < b; bi++) {
    const base = bi * k;
    let max = -Infinity;
    for (let j = 0; j < k; j++) max = Math.max(max, logits.data[base + j]);
    let sum = 0;
    for (let j = 0; j < k; j++) {
      const e = Math.exp(logits.data[base + j] - max);
      out.data[base + j] = e;
      sum += e;
    }
    for (let j = 0; j < k; j++) out.data[base + j] /= sum;
  }
  return out;
}

/** mean cross-entropy and dLoss/dLogits for integer labels */
export function softmaxCrossEntropy(
  logits: Tensor, labels: Int32Array,
): { loss: number; dLogits: Tensor } {
  const [b, k] = logits.shape;
  const probs = softmax(logits);
  let loss = 0;
  const dLogits = new Tensor(probs.data.slice(), probs.shape.slice());
  for (let bi = 0; bi < b; bi++) {
    const y = labels[bi];
    loss -= Math.log(probs.data[bi * k + y] + 1e-30);
    dLogits.data[bi * k + y] -= 1;
  }
  for (let i = 0; i < dLogits.data.length; i++) dLogits.data[i] /= b;
  return { loss: loss / b, dLogits };
}

export class Adam {
  private m: Float32Array[];
  private v: Float32Array[];
  private t = 0;

  constructor(
    public parameters: Param[],
    public lr = 1e-3,
    public beta1 = 0.9,
    public beta2 = 0.999,
    public eps = 1e-8,
  ) {
    this.m = parameters.map((p) => new Float32Array(p.value.length));
    this.v = parameters.map((p) => new Float32Array(p.value.length));
  }

  step(lr?: number): void {
    const rate = lr ?? this.lr;
    this.t += 1;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    for (let pi = 0; pi < this.parameters.length; pi++) {
      const p = this.parameters[pi];
      const m = this.m[pi];
      const v = this.v[pi];
      for (let i = 0; i < p.value.length; i++) {
        const g = p.grad[i];
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g;
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g * g;
        p.value[i] -= rate * (m[i] / bc1) / (Math.sqrt(v[i] / bc2) + this.eps);
      }
    }
  }

  zeroGrad(): void {
    for (const p of this.parameters) p.grad.fill(0);
  }
}
