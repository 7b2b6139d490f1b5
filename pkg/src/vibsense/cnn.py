"""From-scratch 1D CNN over the 12-feature vector.

Architecture: five same-padded stride-1 convolution blocks whose channel
count doubles per layer (2^r * q at layer r), global average pooling, one
dense layer to N class scores, softmax. Trained with mean cross-entropy,
Adam, and plateau learning-rate decay (multiply by the decay factor whenever
best-so-far validation accuracy stalls for `patience` consecutive epochs).

Everything is numpy float64; a full run is reproducible bit-for-bit for a
fixed (seed, hyperparams, dataset).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from .baselines import LabeledDataset, split
from .errors import DivergenceError

BATCH_SIZES = (50, 100, 200, 400)
KERNEL_LENGTHS = (1, 2, 3, 4)
BASE_FILTERS = (4, 8, 16, 32)
ACTIVATION_GRID = ("relu", "elu", "tanh", "sigmoid")

INPUT_LEN = 12


def elu(x, alpha: float = 1.0):
    """x for x > 0, alpha * (exp(x) - 1) otherwise."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, x, alpha * np.expm1(np.minimum(x, 0.0)))
    return float(out) if out.ndim == 0 else out


def _elu_grad(z, alpha):
    # derivative at exactly 0 uses the positive-branch value 1
    return np.where(z >= 0, 1.0, alpha * np.exp(np.minimum(z, 0.0)))


_ACTIVATIONS = {
    "relu": (lambda z, a: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(float)),
    "elu": (lambda z, a: elu(z, a), _elu_grad),
    "tanh": (lambda z, a: np.tanh(z), lambda z, a: 1.0 - np.tanh(z) ** 2),
    "sigmoid": (
        lambda z, a: 1.0 / (1.0 + np.exp(-z)),
        lambda z, a: (s := 1.0 / (1.0 + np.exp(-z))) * (1.0 - s),
    ),
    "linear": (lambda z, a: z, lambda z, a: np.ones_like(z)),
}


@dataclass(frozen=True)
class CnnHyperparams:
    batch_size: int = 100
    kernel_length: int = 3
    base_filters: int = 32
    activation: str = "elu"
    elu_alpha: float = 1.0
    lr0: float = 1e-2
    decay_factor: float = 0.8
    patience: int = 10
    epochs: int = 1000
    depth: int = 5
    stride: int = 1
    n_classes: int = 5

    def __post_init__(self):
        if self.batch_size not in BATCH_SIZES:
            raise ValueError(f"batch_size must be one of {BATCH_SIZES}")
        if self.kernel_length not in KERNEL_LENGTHS:
            raise ValueError(f"kernel_length must be one of {KERNEL_LENGTHS}")
        if self.base_filters not in BASE_FILTERS:
            raise ValueError(f"base_filters must be one of {BASE_FILTERS}")
        if self.activation not in ACTIVATION_GRID:
            raise ValueError(f"activation must be one of {ACTIVATION_GRID}")
        if self.elu_alpha <= 0:
            raise ValueError("elu_alpha must be > 0")
        if self.stride != 1:
            raise ValueError("only stride 1 is supported")

    def channel_counts(self) -> list[int]:
        return [2**r * self.base_filters for r in range(self.depth)]


def layer_output_sizes(hp: CnnHyperparams) -> list[tuple[int, int]]:
    """(length, channels) per layer: depth conv blocks, GAP, dense."""
    sizes = [(INPUT_LEN, c) for c in hp.channel_counts()]
    sizes.append((1, hp.channel_counts()[-1]))
    sizes.append((1, hp.n_classes))
    return sizes


@dataclass
class ConvLayer:
    weights: np.ndarray  # (C_out, C_in, K)
    bias: np.ndarray  # (C_out,)
    activation: str = "elu"
    elu_alpha: float = 1.0


@dataclass
class DenseLayer:
    weights: np.ndarray  # (C_in, N)
    bias: np.ndarray  # (N,)


@dataclass
class TrainingHistory:
    lr: list[float] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)


@dataclass
class CnnModel:
    conv_layers: list[ConvLayer]
    dense: DenseLayer
    hp: CnnHyperparams
    input_mean: np.ndarray
    input_std: np.ndarray
    class_names: list[str]
    history: TrainingHistory = field(default_factory=TrainingHistory)

    @property
    def input_len(self) -> int:
        return len(self.input_mean)


@dataclass(frozen=True)
class PredictionResult:
    probabilities: np.ndarray
    class_index: int
    class_name: str


def init_model(hp: CnnHyperparams, seed: int, class_names=None, input_len=INPUT_LEN) -> CnnModel:
    """Fan-in-scaled uniform weight init, zero biases, seeded."""
    rng = np.random.default_rng(seed)
    layers = []
    c_in = 1
    for c_out in hp.channel_counts():
        bound = np.sqrt(1.0 / (c_in * hp.kernel_length))
        w = rng.uniform(-bound, bound, size=(c_out, c_in, hp.kernel_length))
        layers.append(ConvLayer(w, np.zeros(c_out), hp.activation, hp.elu_alpha))
        c_in = c_out
    bound = np.sqrt(1.0 / c_in)
    dense = DenseLayer(
        rng.uniform(-bound, bound, size=(c_in, hp.n_classes)), np.zeros(hp.n_classes)
    )
    names = list(class_names) if class_names else [str(i) for i in range(hp.n_classes)]
    return CnnModel(
        conv_layers=layers,
        dense=dense,
        hp=hp,
        input_mean=np.zeros(input_len),
        input_std=np.ones(input_len),
        class_names=names,
    )


def _conv_forward(x: np.ndarray, layer: ConvLayer):
    """Same-padded stride-1 conv. x: (n, C_in, L) -> (n, C_out, L)."""
    n, c_in, length = x.shape
    c_out, _, k = layer.weights.shape
    pad_l = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad_l, k - 1 - pad_l)))
    # cols2[(i, l), k*C_in + c] = xp[i, c, l + k]
    cols = np.concatenate([xp[:, :, j : j + length] for j in range(k)], axis=1)
    cols2 = cols.transpose(0, 2, 1).reshape(n * length, k * c_in)
    w2 = layer.weights.transpose(0, 2, 1).reshape(c_out, k * c_in)
    z = (cols2 @ w2.T).reshape(n, length, c_out).transpose(0, 2, 1) + layer.bias[None, :, None]
    act, _ = _ACTIVATIONS[layer.activation]
    return act(z, layer.elu_alpha), (cols2, z)


def _conv_backward(d_out: np.ndarray, layer: ConvLayer, cache, input_shape):
    cols2, z = cache
    n, c_in, length = input_shape
    c_out, _, k = layer.weights.shape
    _, grad = _ACTIVATIONS[layer.activation]
    dz = d_out * grad(z, layer.elu_alpha)  # (n, C_out, L)
    dz2 = dz.transpose(0, 2, 1).reshape(n * length, c_out)
    dw2 = dz2.T @ cols2  # (C_out, K*C_in)
    dw = dw2.reshape(c_out, k, c_in).transpose(0, 2, 1)
    db = dz.sum(axis=(0, 2))
    w2 = layer.weights.transpose(0, 2, 1).reshape(c_out, k * c_in)
    dcols = (dz2 @ w2).reshape(n, length, k * c_in).transpose(0, 2, 1)
    pad_l = (k - 1) // 2
    dxp = np.zeros((n, c_in, length + k - 1))
    for j in range(k):
        dxp[:, :, j : j + length] += dcols[:, j * c_in : (j + 1) * c_in, :]
    return dxp[:, :, pad_l : pad_l + length], dw, db


def forward(model: CnnModel, batch: np.ndarray, return_cache: bool = False):
    """Class probabilities for a batch shaped (n, 12) or (n, 1, 12)."""
    x = np.asarray(batch, dtype=float)
    if x.ndim == 2:
        x = x[:, None, :]
    if x.ndim != 3 or x.shape[1] != 1 or x.shape[2] != model.input_len:
        raise ValueError(f"expected input shape (n, 1, {model.input_len}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")

    caches = []
    inputs = []
    a = x
    for layer in model.conv_layers:
        inputs.append(a)
        a, cache = _conv_forward(a, layer)
        caches.append(cache)
    g = a.mean(axis=2)  # global average pooling (n, C)
    logits = g @ model.dense.weights + model.dense.bias
    logits_shift = logits - logits.max(axis=1, keepdims=True)
    log_probs = logits_shift - np.log(np.exp(logits_shift).sum(axis=1, keepdims=True))
    probs = np.exp(log_probs)
    if return_cache:
        return probs, {
            "inputs": inputs,
            "conv_caches": caches,
            "gap": g,
            "log_probs": log_probs,
            "probs": probs,
            "seq_len": a.shape[2],
        }
    return probs


def cross_entropy(log_probs: np.ndarray, labels: np.ndarray) -> float:
    return float(-log_probs[np.arange(len(labels)), labels].mean())


def backward(model: CnnModel, cache: dict, labels: np.ndarray) -> list[np.ndarray]:
    """Exact gradients of mean cross-entropy, ordered as :func:`parameters`."""
    n = len(labels)
    probs = cache["probs"]
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    g = cache["gap"]
    d_dense_w = g.T @ dlogits
    d_dense_b = dlogits.sum(axis=0)
    dg = dlogits @ model.dense.weights.T

    length = cache["seq_len"]
    d_a = np.repeat(dg[:, :, None] / length, length, axis=2)
    grads = [d_dense_b, d_dense_w]  # reversed here, flipped below
    for layer, layer_cache, layer_in in zip(
        reversed(model.conv_layers), reversed(cache["conv_caches"]), reversed(cache["inputs"])
    ):
        d_a, dw, db = _conv_backward(d_a, layer, layer_cache, layer_in.shape)
        grads.extend([db, dw])
    grads.reverse()  # now W1, b1, ..., W_depth, b_depth, Wd, bd
    return grads


def parameters(model: CnnModel) -> list[np.ndarray]:
    """Flat parameter list: conv W1, b1, ..., Wd, bd (views, not copies)."""
    params = []
    for layer in model.conv_layers:
        params.extend([layer.weights, layer.bias])
    params.extend([model.dense.weights, model.dense.bias])
    return params


def loss_and_grads(model: CnnModel, batch, labels) -> tuple[float, list[np.ndarray], np.ndarray]:
    probs, cache = forward(model, batch, return_cache=True)
    loss = cross_entropy(cache["log_probs"], np.asarray(labels))
    grads = backward(model, cache, np.asarray(labels))
    return loss, grads, probs


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update, in place."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


class PlateauScheduler:
    """Cuts the learning rate when best-so-far validation accuracy stalls.

    After ``patience`` consecutive epochs without a strict improvement the
    rate becomes ``lr0 * factor**k`` (k = number of cuts so far; computed
    from lr0 each time, so no drift from repeated multiplication) and the
    stall counter restarts.
    """

    def __init__(self, lr0: float, factor: float, patience: int):
        if not 0 < factor <= 1:
            raise ValueError("factor must be in (0, 1]")
        if patience < 1:
            raise ValueError("patience must be >= 1")
        self.lr0 = lr0
        self.factor = factor
        self.patience = patience
        self.best = -np.inf
        self.stall = 0
        self.n_decays = 0

    @property
    def lr(self) -> float:
        return self.lr0 * self.factor**self.n_decays

    def update(self, val_acc: float) -> float:
        """Record one epoch's validation accuracy; return the next lr."""
        if val_acc > self.best:
            self.best = val_acc
            self.stall = 0
        else:
            self.stall += 1
            if self.stall >= self.patience:
                self.n_decays += 1
                self.stall = 0
        return self.lr


def train(
    ds: LabeledDataset,
    hp: CnnHyperparams = CnnHyperparams(),
    seed: int = 0,
    val: LabeledDataset | None = None,
    epochs: int | None = None,
) -> CnnModel:
    """Train on ``ds``; when ``val`` is None, split ds 70/10/20 internally.

    Learning rate decays by ``hp.decay_factor`` whenever the best-so-far
    validation accuracy has not improved for ``hp.patience`` consecutive
    epochs. Raises :class:`DivergenceError` on a non-finite loss.
    """
    if val is None:
        train_ds, val_ds, _ = split(ds, (0.7, 0.1, 0.2), seed=seed, stratified=True)
    else:
        train_ds, val_ds = ds, val

    mean = train_ds.rows.mean(axis=0)
    std = train_ds.rows.std(axis=0)
    std[std == 0] = 1.0  # keep width 12: constant columns pass through centered

    model = init_model(hp, seed, class_names=[c.value for c in train_ds.classes])
    model.input_mean = mean
    model.input_std = std

    x_train = (train_ds.rows - mean) / std
    y_train = train_ds.labels
    x_val = (val_ds.rows - mean) / std
    y_val = val_ds.labels

    params = parameters(model)
    state = AdamState.for_params(params)
    rng = np.random.default_rng(seed + 1)
    scheduler = PlateauScheduler(hp.lr0, hp.decay_factor, hp.patience)
    n_epochs = hp.epochs if epochs is None else epochs

    for _ in range(n_epochs):
        lr = scheduler.lr
        order = rng.permutation(len(x_train))
        correct = 0
        losses = []
        for start in range(0, len(order), hp.batch_size):
            idx = order[start : start + hp.batch_size]
            loss, grads, probs = loss_and_grads(model, x_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"loss became {loss}")
            losses.append(loss * len(idx))
            correct += int(np.sum(probs.argmax(axis=1) == y_train[idx]))
            adam_step(params, grads, state, lr)
        train_acc = correct / len(x_train)
        val_acc = float(np.mean(forward(model, x_val).argmax(axis=1) == y_val))

        model.history.lr.append(lr)
        model.history.train_loss.append(sum(losses) / len(x_train))
        model.history.train_acc.append(train_acc)
        model.history.val_acc.append(val_acc)
        scheduler.update(val_acc)
    return model


def predict(model: CnnModel, x) -> PredictionResult:
    """Probabilities and argmax class for one raw feature vector."""
    row = np.asarray(x, dtype=float).reshape(1, -1)
    row = (row - model.input_mean) / model.input_std
    probs = forward(model, row)[0]
    idx = int(np.argmax(probs))
    return PredictionResult(probabilities=probs, class_index=idx, class_name=model.class_names[idx])


DEFAULT_GRIDS = {
    "batch_size": list(BATCH_SIZES),
    "kernel_length": list(KERNEL_LENGTHS),
    "base_filters": list(BASE_FILTERS),
    "activation": list(ACTIVATION_GRID),
}


def grid_combinations(grids: dict | None = None) -> list[CnnHyperparams]:
    """All hyperparameter combos in lexicographic grid order."""
    g = {**DEFAULT_GRIDS, **(grids or {})}
    for key, allowed in (
        ("batch_size", BATCH_SIZES),
        ("kernel_length", KERNEL_LENGTHS),
        ("base_filters", BASE_FILTERS),
        ("activation", ACTIVATION_GRID),
    ):
        if not set(g[key]) <= set(allowed):
            raise ValueError(f"{key} grid must be a subset of {allowed}")
    return [
        CnnHyperparams(batch_size=b, kernel_length=k, base_filters=q, activation=a)
        for b, k, q, a in product(
            g["batch_size"], g["kernel_length"], g["base_filters"], g["activation"]
        )
    ]


@dataclass
class GridSearchResult:
    ranked: list[tuple[CnnHyperparams, float]]  # descending mean CV accuracy
    winner: CnnHyperparams
    marginals: dict[str, list[tuple[object, float]]]


def grid_search(
    ds: LabeledDataset,
    grids: dict | None = None,
    folds: int = 10,
    seed: int = 0,
    epochs: int | None = None,
) -> GridSearchResult:
    """Mean CV validation accuracy per combo; ties keep earliest grid order.

    Each (combo, fold) trains with an independently derived seed, so results
    do not depend on evaluation order. A run's score is its best validation
    accuracy; the combo score is the mean over folds.
    """
    from .baselines import _fold_assignments

    combos = grid_combinations(grids)
    assignments = _fold_assignments(ds, folds, seed)
    scores = []
    for combo_idx, hp in enumerate(combos):
        fold_scores = []
        for fold in range(folds):
            tr = ds.subset(np.flatnonzero(assignments != fold))
            va = ds.subset(np.flatnonzero(assignments == fold))
            run_seed = seed + 7919 * (combo_idx + 1) + fold
            model = train(tr, hp, seed=run_seed, val=va, epochs=epochs)
            fold_scores.append(max(model.history.val_acc))
        scores.append(float(np.mean(fold_scores)))

    best_idx = int(np.argmax(scores))  # argmax keeps the first max
    order = sorted(range(len(combos)), key=lambda i: (-scores[i], i))
    marginals: dict[str, list[tuple[object, float]]] = {
        "batch_size": [], "kernel_length": [], "base_filters": [], "activation": [],
    }
    for hp, score in zip(combos, scores):
        for key in marginals:
            marginals[key].append((getattr(hp, key), score))
    return GridSearchResult(
        ranked=[(combos[i], scores[i]) for i in order],
        winner=combos[best_idx],
        marginals=marginals,
    )


CHECKPOINT_VERSION = 1


def save_checkpoint(model: CnnModel, path) -> None:
    """JSON checkpoint; reload reproduces predictions bit-exactly."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "hyperparams": {
            k: getattr(model.hp, k)
            for k in (
                "batch_size", "kernel_length", "base_filters", "activation",
                "elu_alpha", "lr0", "decay_factor", "patience", "epochs",
                "depth", "stride", "n_classes",
            )
        },
        "class_names": model.class_names,
        "input_mean": model.input_mean.tolist(),
        "input_std": model.input_std.tolist(),
        "conv_layers": [
            {
                "shape": list(layer.weights.shape),
                "weights": layer.weights.ravel().tolist(),  # row-major
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
                "elu_alpha": layer.elu_alpha,
            }
            for layer in model.conv_layers
        ],
        "dense": {
            "shape": list(model.dense.weights.shape),
            "weights": model.dense.weights.ravel().tolist(),
            "bias": model.dense.bias.tolist(),
        },
        "history": {
            "lr": model.history.lr,
            "train_loss": model.history.train_loss,
            "train_acc": model.history.train_acc,
            "val_acc": model.history.val_acc,
        },
    }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path) -> CnnModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('format_version')}")
    hp = CnnHyperparams(**payload["hyperparams"])
    layers = [
        ConvLayer(
            weights=np.array(spec["weights"]).reshape(spec["shape"]),
            bias=np.array(spec["bias"]),
            activation=spec["activation"],
            elu_alpha=spec["elu_alpha"],
        )
        for spec in payload["conv_layers"]
    ]
    dense = DenseLayer(
        weights=np.array(payload["dense"]["weights"]).reshape(payload["dense"]["shape"]),
        bias=np.array(payload["dense"]["bias"]),
    )
    history = TrainingHistory(**payload["history"])
    return CnnModel(
        conv_layers=layers,
        dense=dense,
        hp=hp,
        input_mean=np.array(payload["input_mean"]),
        input_std=np.array(payload["input_std"]),
        class_names=payload["class_names"],
        history=history,
    )
