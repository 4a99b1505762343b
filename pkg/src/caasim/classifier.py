"""From-scratch convolutional classifier for I/Q session matrices.

The reference network ("CNN-3", three learnable layers) is two 64-filter
convolutions with rectifier activations followed by one dense softmax layer:

    input (n, 8, 1)
    conv 64 @ 7x3, stride (4, 1), relu
    conv 64 @ 5x3, stride (4, 1), relu
    flatten, dense -> num_classes, softmax

Everything runs on numpy: im2col convolutions, analytic backprop, and
adaptive-moment (Adam) updates. Training is float32; gradient verification
against central finite differences runs in float64.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import stream

CHECKPOINT_MAGIC = b"CAAW"
CHECKPOINT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Training loss became non-finite."""


@dataclass(frozen=True)
class ConvSpec:
    filters: int
    kernel: tuple[int, int]
    stride: tuple[int, int]


@dataclass(frozen=True)
class ModelSpec:
    """Layer geometry; the default convs are the reference CNN-3."""

    num_classes: int
    input_rows: int
    input_cols: int = 8
    conv1: ConvSpec = field(default_factory=lambda: ConvSpec(64, (7, 3), (4, 1)))
    conv2: ConvSpec = field(default_factory=lambda: ConvSpec(64, (5, 3), (4, 1)))

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValueError("need at least one class")
        h1, w1 = self.conv_output(self.input_rows, self.input_cols, self.conv1)
        h2, w2 = self.conv_output(h1, w1, self.conv2)
        if min(h1, w1, h2, w2) < 1:
            raise ValueError("input too small for the convolution stack")

    @staticmethod
    def conv_output(rows: int, cols: int, conv: ConvSpec) -> tuple[int, int]:
        kh, kw = conv.kernel
        sh, sw = conv.stride
        return (rows - kh) // sh + 1, (cols - kw) // sw + 1

    def feature_dim(self) -> int:
        h1, w1 = self.conv_output(self.input_rows, self.input_cols, self.conv1)
        h2, w2 = self.conv_output(h1, w1, self.conv2)
        return h2 * w2 * self.conv2.filters


def tiny_spec(num_classes: int = 3, input_rows: int = 16) -> ModelSpec:
    """A 2-filter miniature for double-precision gradient verification."""
    return ModelSpec(num_classes=num_classes, input_rows=input_rows,
                     conv1=ConvSpec(2, (5, 3), (2, 1)),
                     conv2=ConvSpec(2, (3, 3), (2, 1)))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    patience: int = 8  # early stop on best validation accuracy
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if self.patience < 1:
            raise ValueError("patience must be positive")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    confusion: np.ndarray  # (num_classes, num_classes), rows = true label
    per_class_accuracy: np.ndarray


# parameter names in checkpoint / update order
PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense_w", "dense_b")


class Cnn3Model:
    """Weights plus layer geometry; see module docstring for the topology."""

    def __init__(self, spec: ModelSpec, params: dict[str, np.ndarray]):
        self.spec = spec
        self.params = params

    @property
    def dtype(self):
        return self.params["conv1_w"].dtype

    @classmethod
    def initialize(cls, spec: ModelSpec, seed: int = 0, dtype=np.float32) -> "Cnn3Model":
        """Fan-in-scaled uniform weight init, zero biases."""
        rng = stream(seed, "init")

        def uniform(shape, fan_in):
            limit = np.sqrt(1.0 / fan_in)
            return rng.uniform(-limit, limit, shape).astype(dtype)

        k1h, k1w = spec.conv1.kernel
        k2h, k2w = spec.conv2.kernel
        params = {
            "conv1_w": uniform((k1h, k1w, 1, spec.conv1.filters), k1h * k1w),
            "conv1_b": np.zeros(spec.conv1.filters, dtype=dtype),
            "conv2_w": uniform((k2h, k2w, spec.conv1.filters, spec.conv2.filters),
                               k2h * k2w * spec.conv1.filters),
            "conv2_b": np.zeros(spec.conv2.filters, dtype=dtype),
            "dense_w": uniform((spec.feature_dim(), spec.num_classes), spec.feature_dim()),
            "dense_b": np.zeros(spec.num_classes, dtype=dtype),
        }
        return cls(spec, params)

    def copy(self) -> "Cnn3Model":
        return Cnn3Model(self.spec, {k: v.copy() for k, v in self.params.items()})

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 3:
            x = x[..., None]
        if x.ndim != 4 or x.shape[1] != self.spec.input_rows \
                or x.shape[2] != self.spec.input_cols or x.shape[3] != 1:
            raise ValueError(
                f"expected input (B, {self.spec.input_rows}, {self.spec.input_cols}, 1), "
                f"got {x.shape}")
        return x.astype(self.dtype, copy=False)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities, one row per example (rows sum to 1)."""
        logits = self._forward_cache(self._check_input(x))[-1]
        return _softmax(logits)

    def _forward_cache(self, x):
        p = self.params
        cols1, a1 = _conv_forward(x, p["conv1_w"], p["conv1_b"], self.spec.conv1)
        r1 = np.maximum(a1, 0.0)
        cols2, a2 = _conv_forward(r1, p["conv2_w"], p["conv2_b"], self.spec.conv2)
        r2 = np.maximum(a2, 0.0)
        flat = r2.reshape(x.shape[0], -1)
        logits = flat @ p["dense_w"] + p["dense_b"]
        return x, cols1, a1, r1, cols2, a2, r2, flat, logits


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _conv_forward(x, w, b, conv: ConvSpec):
    kh, kw = conv.kernel
    sh, sw = conv.stride
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    win = win[:, ::sh, ::sw]  # (B, Ho, Wo, C, kh, kw)
    cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))
    b_, ho, wo = cols.shape[:3]
    cols = cols.reshape(b_, ho, wo, kh * kw * x.shape[3])
    out = cols @ w.reshape(-1, w.shape[3]) + b
    return cols, out


def _conv_backward(dout, cols, x_shape, w, conv: ConvSpec):
    kh, kw = conv.kernel
    sh, sw = conv.stride
    b_, ho, wo, f = dout.shape
    c_in = x_shape[3]
    w2d = w.reshape(-1, f)
    dcols = (dout.reshape(-1, f) @ w2d.T).reshape(b_, ho, wo, kh, kw, c_in)
    dw = (cols.reshape(-1, cols.shape[-1]).T @ dout.reshape(-1, f)).reshape(w.shape)
    db = dout.sum(axis=(0, 1, 2))
    dx = np.zeros(x_shape, dtype=dout.dtype)
    for i in range(kh):
        for j in range(kw):
            dx[:, i:i + sh * ho:sh, j:j + sw * wo:sw, :] += dcols[:, :, :, i, j, :]
    return dx, dw, db


def loss_and_grads(model: Cnn3Model, x: np.ndarray, y: np.ndarray,
                   loss_scale: float = 1.0):
    """Mean softmax cross-entropy and its gradients for every parameter."""
    x = model._check_input(x)
    y = np.asarray(y, dtype=np.int64)
    p = model.params
    xin, cols1, a1, r1, cols2, a2, r2, flat, logits = model._forward_cache(x)

    probs = _softmax(logits)
    batch = x.shape[0]
    eps = np.finfo(probs.dtype).tiny
    loss = loss_scale * float(-np.log(probs[np.arange(batch), y] + eps).mean())

    dlogits = probs.copy()
    dlogits[np.arange(batch), y] -= 1.0
    dlogits *= loss_scale / batch

    grads = {
        "dense_w": flat.T @ dlogits,
        "dense_b": dlogits.sum(axis=0),
    }
    dflat = dlogits @ p["dense_w"].T
    dr2 = dflat.reshape(r2.shape)
    da2 = dr2 * (a2 > 0)
    dr1, grads["conv2_w"], grads["conv2_b"] = _conv_backward(
        da2, cols2, r1.shape, p["conv2_w"], model.spec.conv2)
    da1 = dr1 * (a1 > 0)
    _, grads["conv1_w"], grads["conv1_b"] = _conv_backward(
        da1, cols1, xin.shape, p["conv1_w"], model.spec.conv1)
    return loss, grads


def _epoch_lr(config: TrainConfig, epoch: int) -> float:
    """Step schedule: base rate, x0.3 after 30% and again after 60% of epochs."""
    lr = config.learning_rate
    if epoch >= int(config.epochs * 0.6):
        return lr * 0.09
    if epoch >= int(config.epochs * 0.3):
        return lr * 0.3
    return lr


def train(model: Cnn3Model, train_data: tuple[np.ndarray, np.ndarray],
          val_data: tuple[np.ndarray, np.ndarray],
          config: TrainConfig) -> tuple[Cnn3Model, TrainHistory]:
    """Mini-batch Adam on cross-entropy; returns best-validation weights.

    The learning rate follows a fixed step decay (see ``_epoch_lr``).
    Deterministic given ``config.seed`` and a fixed BLAS thread count: batch
    order comes from a derived stream, and updates are applied in parameter
    order. Raises TrainingDivergedError when the loss leaves the reals.
    """
    x_tr, y_tr = train_data
    x_va, y_va = val_data
    if len(x_tr) == 0 or len(x_va) == 0:
        raise ValueError("training and validation splits must be non-empty")
    if y_tr.min() < 0 or y_tr.max() >= model.spec.num_classes:
        raise ValueError("labels outside [0, num_classes)")

    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(vv) for k, vv in model.params.items()}
    step = 0
    history = TrainHistory()
    best = model.copy()
    best_acc = -1.0
    since_best = 0

    for epoch in range(config.epochs):
        lr = _epoch_lr(config, epoch)
        order = stream(config.seed, "shuffle", epoch).permutation(len(x_tr))
        losses = []
        for start in range(0, len(x_tr), config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = loss_and_grads(model, x_tr[idx], y_tr[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
            losses.append(loss)
            step += 1
            if lr == 0.0:
                continue
            bc1 = 1.0 - config.beta1 ** step
            bc2 = 1.0 - config.beta2 ** step
            for name in PARAM_NAMES:
                g = grads[name]
                m[name] = config.beta1 * m[name] + (1.0 - config.beta1) * g
                v[name] = config.beta2 * v[name] + (1.0 - config.beta2) * g * g
                update = (lr * (m[name] / bc1)
                          / (np.sqrt(v[name] / bc2) + config.epsilon))
                model.params[name] -= update.astype(model.dtype, copy=False)

        history.train_loss.append(float(np.mean(losses)))
        val_acc = evaluate(model, x_va, y_va).accuracy
        history.val_accuracy.append(val_acc)
        if val_acc > best_acc:
            best_acc = val_acc
            best = model.copy()
            history.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                history.stopped_early = True
                break
    return best, history


def evaluate(model: Cnn3Model, x: np.ndarray, y: np.ndarray,
             batch_size: int = 256) -> Metrics:
    """Accuracy and confusion matrix over a labeled split."""
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise ValueError("empty evaluation split")
    k = model.spec.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    for start in range(0, len(x), batch_size):
        probs = model.forward(x[start:start + batch_size])
        pred = probs.argmax(axis=1)
        np.add.at(confusion, (y[start:start + batch_size], pred), 1)
    total = confusion.sum()
    accuracy = float(np.trace(confusion)) / float(total)
    row = confusion.sum(axis=1)
    per_class = np.divide(np.diag(confusion), row, where=row > 0,
                          out=np.zeros(k, dtype=float))
    return Metrics(accuracy=accuracy, confusion=confusion, per_class_accuracy=per_class)


def gradient_check(spec: ModelSpec, x: np.ndarray, y: np.ndarray,
                   step: float = 1e-5, seed: int = 0) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Runs in float64. Components where both gradients are below 1e-10 in
    magnitude count as exact.
    """
    model = Cnn3Model.initialize(spec, seed=seed, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _, grads = loss_and_grads(model, x, y)
    if not all(np.isfinite(g).all() for g in grads.values()):
        raise FloatingPointError("non-finite analytic gradient")

    worst = 0.0
    for name in PARAM_NAMES:
        param = model.params[name]
        flat = param.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = _loss_only(model, x, y)
            flat[i] = orig - step
            down = _loss_only(model, x, y)
            flat[i] = orig
            numeric[i] = (up - down) / (2.0 * step)
        analytic = grads[name].reshape(-1)
        denom = np.maximum(np.abs(analytic), np.abs(numeric))
        mask = denom > 1e-10
        if mask.any():
            rel = np.abs(analytic - numeric)[mask] / denom[mask]
            worst = max(worst, float(rel.max()))
    return worst


def _loss_only(model, x, y) -> float:
    logits = model._forward_cache(model._check_input(x))[-1]
    probs = _softmax(logits)
    eps = np.finfo(probs.dtype).tiny
    return float(-np.log(probs[np.arange(len(x)), y] + eps).mean())


def save_model(model: Cnn3Model, path: str | Path) -> Path:
    """Write a versioned binary checkpoint; round-trips bit-exactly."""
    spec = model.spec
    header = {
        "spec": {
            "num_classes": spec.num_classes,
            "input_rows": spec.input_rows,
            "input_cols": spec.input_cols,
            "conv1": {"filters": spec.conv1.filters, "kernel": list(spec.conv1.kernel),
                      "stride": list(spec.conv1.stride)},
            "conv2": {"filters": spec.conv2.filters, "kernel": list(spec.conv2.kernel),
                      "stride": list(spec.conv2.stride)},
        },
        "arrays": [{"name": n, "shape": list(model.params[n].shape),
                    "dtype": str(model.params[n].dtype)} for n in PARAM_NAMES],
    }
    blob = json.dumps(header).encode("utf-8")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for name in PARAM_NAMES:
            arr = model.params[name]
            fh.write(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())
    return path


def load_model(path: str | Path) -> Cnn3Model:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint")
    version, hlen = struct.unpack_from("<HI", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[10:10 + hlen].decode("utf-8"))
    s = header["spec"]
    spec = ModelSpec(num_classes=s["num_classes"], input_rows=s["input_rows"],
                     input_cols=s["input_cols"],
                     conv1=ConvSpec(s["conv1"]["filters"], tuple(s["conv1"]["kernel"]),
                                    tuple(s["conv1"]["stride"])),
                     conv2=ConvSpec(s["conv2"]["filters"], tuple(s["conv2"]["kernel"]),
                                    tuple(s["conv2"]["stride"])))
    params = {}
    offset = 10 + hlen
    for meta in header["arrays"]:
        dtype = np.dtype(meta["dtype"]).newbyteorder("<")
        count = int(np.prod(meta["shape"]))
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        params[meta["name"]] = arr.reshape(meta["shape"]).astype(meta["dtype"])
        offset += arr.nbytes
    return Cnn3Model(spec, params)
