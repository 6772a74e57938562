"""Differentiable classifier abstraction plus a self-contained reference MLP.

The attack engines only depend on the small :class:`Classifier` surface
(forward, batched forward, per-class input gradient, label), so external
models can be plugged in by implementing it.  :class:`ReferenceMLP` is the
built-in victim: fully-connected layers with a smooth activation (sigmoid or
tanh) and a softmax head, trained by plain mini-batch gradient descent on
cross-entropy.  All arithmetic is float64; weight files store float32.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .noise import RngStream

WEIGHT_MAGIC = b"SSAA-MLP"
WEIGHT_VERSION = 1

ACTIVATIONS = ("sigmoid", "tanh")


class FormatError(ValueError):
    """A binary file does not match its declared layout."""


class TrainingDivergedError(RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Classifier(ABC):
    """What the attack engines need from a victim model."""

    input_shape: tuple[int, ...]
    num_classes: int

    @property
    def input_size(self) -> int:
        return int(np.prod(self.input_shape))

    @abstractmethod
    def forward(self, x) -> np.ndarray:
        """Class probabilities for a single input."""

    @abstractmethod
    def forward_batch(self, xs) -> np.ndarray:
        """Row k holds the class probabilities of input k."""

    @abstractmethod
    def grad_class(self, x, c: int) -> np.ndarray:
        """Gradient of the probability of class c with respect to every input feature."""

    def label(self, x) -> int:
        """argmax of the class probabilities; ties go to the lowest class index."""
        return int(np.argmax(self.forward(x)))


class ReferenceMLP(Classifier):
    """Feed-forward net: affine layers, smooth hidden activation, softmax output.

    ``layer_sizes = (n_in, h1, ..., n_classes)``; a two-entry tuple gives a
    plain linear-softmax model.  Weights start at zero — call
    :meth:`randomize` or :func:`train_reference` for a useful model.
    """

    def __init__(self, layer_sizes, activation: str = "tanh"):
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2:
            raise ValueError(f"need at least input and output sizes, got {sizes}")
        if any(s <= 0 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        if activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
        self.layer_sizes = sizes
        self.activation = activation
        self.input_shape = (sizes[0],)
        self.num_classes = sizes[-1]
        self.weights = [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
        self.biases = [np.zeros(o) for o in sizes[1:]]
        self.train_accuracy: float | None = None

    def randomize(self, rng: RngStream) -> "ReferenceMLP":
        """Gaussian init scaled by 1/sqrt(fan_in); biases stay zero."""
        for l, w in enumerate(self.weights):
            vals = rng.normal(w.size) / math.sqrt(w.shape[1])
            self.weights[l] = vals.reshape(w.shape)
        return self

    def _act(self, z: np.ndarray) -> np.ndarray:
        if self.activation == "tanh":
            return np.tanh(z)
        return 1.0 / (1.0 + np.exp(-z))

    def _act_prime_from_output(self, a: np.ndarray) -> np.ndarray:
        # derivative expressed through the activation value itself
        if self.activation == "tanh":
            return 1.0 - a * a
        return a * (1.0 - a)

    def _as_batch(self, xs) -> np.ndarray:
        x = np.asarray(xs, dtype=np.float64)
        if x.ndim == 0:
            raise ValueError("expected a sequence of inputs")
        n = self.layer_sizes[0]
        rows = x.shape[0]
        if x.size != rows * n:
            raise ValueError(
                f"batch of shape {x.shape} incompatible with input size {n}"
            )
        return x.reshape(rows, n)

    def forward_batch(self, xs) -> np.ndarray:
        if len(xs) == 0:
            return np.zeros((0, self.num_classes))
        a = self._as_batch(xs)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = self._act(a @ w.T + b)
        return _softmax_rows(a @ self.weights[-1].T + self.biases[-1])

    def forward(self, x) -> np.ndarray:
        flat = np.asarray(x, dtype=np.float64).reshape(-1)
        if flat.size != self.layer_sizes[0]:
            raise ValueError(
                f"input of size {flat.size} incompatible with input size {self.layer_sizes[0]}"
            )
        return self.forward_batch(flat[None, :])[0]

    def grad_class(self, x, c: int) -> np.ndarray:
        if not 0 <= c < self.num_classes:
            raise IndexError(f"class index {c} out of range [0, {self.num_classes})")
        flat = np.asarray(x, dtype=np.float64).reshape(-1)
        if flat.size != self.layer_sizes[0]:
            raise ValueError(
                f"input of size {flat.size} incompatible with input size {self.layer_sizes[0]}"
            )
        acts = [flat]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            acts.append(self._act(w @ acts[-1] + b))
        logits = self.weights[-1] @ acts[-1] + self.biases[-1]
        z = logits - logits.max()
        e = np.exp(z)
        probs = e / e.sum()
        # dF_c/dlogits = F_c * (e_c - F)
        u = -probs[c] * probs
        u[c] += probs[c]
        g = self.weights[-1].T @ u
        for l in range(len(self.weights) - 2, -1, -1):
            g = self.weights[l].T @ (g * self._act_prime_from_output(acts[l + 1]))
        return g

    def _forward_with_caches(self, x_batch: np.ndarray):
        acts = [x_batch]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            acts.append(self._act(acts[-1] @ w.T + b))
        probs = _softmax_rows(acts[-1] @ self.weights[-1].T + self.biases[-1])
        return acts, probs

    def copy(self) -> "ReferenceMLP":
        dup = ReferenceMLP(self.layer_sizes, self.activation)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        dup.train_accuracy = self.train_accuracy
        return dup


class CountingModel(Classifier):
    """Forwarding wrapper that tallies model propagations (MP).

    Convention: a single forward costs 1, a batched forward of B inputs costs
    B, a gradient costs 1; a label check is one forward.  The wrapped model
    is never mutated, so it stays shareable.
    """

    def __init__(self, model: Classifier):
        self._model = model
        self.input_shape = model.input_shape
        self.num_classes = model.num_classes
        self.mp = 0

    def forward(self, x) -> np.ndarray:
        self.mp += 1
        return self._model.forward(x)

    def forward_batch(self, xs) -> np.ndarray:
        out = self._model.forward_batch(xs)
        self.mp += out.shape[0]
        return out

    def grad_class(self, x, c: int) -> np.ndarray:
        self.mp += 1
        return self._model.grad_class(x, c)


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple[int, ...] = (32,)
    activation: str = "tanh"
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.5
    seed: int = 0


def train_reference(dataset, cfg: TrainConfig) -> ReferenceMLP:
    """Mini-batch gradient descent on cross-entropy; bit-reproducible per seed.

    Raises :class:`TrainingDivergedError` (with the epoch index) if the epoch
    loss stops being finite.
    """
    n_samples = len(dataset)
    if n_samples == 0:
        raise ValueError("dataset is empty")
    x_all = np.asarray(dataset.inputs, dtype=np.float64).reshape(n_samples, -1)
    y_all = np.asarray(dataset.labels, dtype=np.int64)
    p = int(dataset.num_classes)
    if y_all.min() < 0 or y_all.max() >= p:
        raise ValueError(f"labels outside [0, {p})")

    rng = RngStream(cfg.seed)
    model = ReferenceMLP((x_all.shape[1], *cfg.hidden, p), cfg.activation)
    model.randomize(rng)

    lr = cfg.learning_rate
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_samples)
        loss_sum = 0.0
        for start in range(0, n_samples, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_all[idx], y_all[idx]
            acts, probs = model._forward_with_caches(xb)
            with np.errstate(divide="ignore"):
                loss_sum += float(-np.log(probs[np.arange(len(idx)), yb]).sum())
            delta = probs
            delta[np.arange(len(idx)), yb] -= 1.0
            delta /= len(idx)
            for l in range(len(model.weights) - 1, -1, -1):
                grad_w = delta.T @ acts[l]
                grad_b = delta.sum(axis=0)
                if l > 0:
                    delta = (delta @ model.weights[l]) * model._act_prime_from_output(acts[l])
                model.weights[l] -= lr * grad_w
                model.biases[l] -= lr * grad_b
        if not math.isfinite(loss_sum / n_samples):
            raise TrainingDivergedError(epoch, loss_sum / n_samples)

    preds = np.argmax(model.forward_batch(x_all), axis=1)
    model.train_accuracy = float(np.mean(preds == y_all))
    return model


def save_weights(model: ReferenceMLP, path) -> None:
    """Write magic + version byte + JSON header + newline + float32 payload.

    Payload layout: for each layer, the row-major weight matrix then the bias
    vector, all little-endian float32.
    """
    payload = b"".join(
        w.astype("<f4").tobytes() + b.astype("<f4").tobytes()
        for w, b in zip(model.weights, model.biases)
    )
    header = {
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "num_classes": model.num_classes,
        "payload_bytes": len(payload),
    }
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(bytes([WEIGHT_VERSION]))
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def _payload_bytes(sizes) -> int:
    return 4 * sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))


def load_weights(path) -> ReferenceMLP:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(WEIGHT_MAGIC)] != WEIGHT_MAGIC:
        raise FormatError(f"bad magic {blob[:len(WEIGHT_MAGIC)]!r}, expected {WEIGHT_MAGIC!r}")
    pos = len(WEIGHT_MAGIC)
    if len(blob) < pos + 1:
        raise FormatError("file truncated before version byte")
    version = blob[pos]
    if version != WEIGHT_VERSION:
        raise FormatError(f"unsupported version {version}, expected {WEIGHT_VERSION}")
    nl = blob.find(b"\n", pos + 1)
    if nl < 0:
        raise FormatError("missing header terminator")
    try:
        header = json.loads(blob[pos + 1 : nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not valid JSON: {exc}") from exc
    for field in ("layer_sizes", "activation", "num_classes", "payload_bytes"):
        if field not in header:
            raise FormatError(f"header missing field {field!r}")
    sizes = header["layer_sizes"]
    if (
        not isinstance(sizes, list)
        or len(sizes) < 2
        or not all(isinstance(s, int) and s > 0 for s in sizes)
    ):
        raise FormatError(f"invalid layer_sizes {sizes!r}")
    if header["activation"] not in ACTIVATIONS:
        raise FormatError(f"unknown activation {header['activation']!r}")
    if header["num_classes"] != sizes[-1]:
        raise FormatError(
            f"num_classes {header['num_classes']} does not match final layer size {sizes[-1]}"
        )
    expected = _payload_bytes(sizes)
    if header["payload_bytes"] != expected:
        raise FormatError(
            f"payload_bytes {header['payload_bytes']} does not match layer_sizes ({expected} expected)"
        )
    payload = blob[nl + 1 :]
    if len(payload) != expected:
        raise FormatError(f"truncated payload: {len(payload)} bytes, expected {expected}")

    model = ReferenceMLP(sizes, header["activation"])
    offset = 0
    floats = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    for l, (i, o) in enumerate(zip(sizes[:-1], sizes[1:])):
        model.weights[l] = floats[offset : offset + o * i].reshape(o, i).copy()
        offset += o * i
        model.biases[l] = floats[offset : offset + o].copy()
        offset += o
    return model
