"""Dataset plumbing: IDX image/label files and synthetic separable blobs."""

from __future__ import annotations

import gzip
from dataclasses import dataclass
from math import prod, sqrt

import numpy as np

from .model import FormatError
from .noise import RngStream

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class LabeledDataset:
    inputs: np.ndarray  # (N, *shape), float64 in [0, 1]
    labels: np.ndarray  # (N,), int64
    num_classes: int
    provenance: str

    def __post_init__(self):
        if len(self.inputs) != len(self.labels):
            raise ValueError(
                f"{len(self.inputs)} inputs vs {len(self.labels)} labels"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(f"labels outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.inputs.shape[1:])

    def take(self, limit: int | None) -> "LabeledDataset":
        if limit is None or limit >= len(self):
            return self
        return LabeledDataset(
            self.inputs[:limit], self.labels[:limit], self.num_classes, self.provenance
        )


def _read_binary(path) -> bytes:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] == b"\x1f\x8b":  # transparently accept gzipped IDX files
        blob = gzip.decompress(blob)
    return blob


def load_idx(images_path, labels_path, num_classes: int | None = None) -> LabeledDataset:
    """Parse the big-endian IDX pair used by the classic digit benchmarks.

    Images: magic 0x00000803, then counts/rows/cols as uint32, then unsigned
    bytes scaled to [0, 1] by /255.  Labels: magic 0x00000801, count, bytes.
    """
    img = _read_binary(images_path)
    if len(img) < 16:
        raise FormatError(f"images file truncated in header ({len(img)} bytes < 16)")
    magic = int.from_bytes(img[0:4], "big")
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(
            f"images magic 0x{magic:08x} at offset 0, expected 0x{IDX_IMAGES_MAGIC:08x}"
        )
    n_images = int.from_bytes(img[4:8], "big")
    rows = int.from_bytes(img[8:12], "big")
    cols = int.from_bytes(img[12:16], "big")
    expected = n_images * rows * cols
    if len(img) - 16 != expected:
        raise FormatError(
            f"images payload is {len(img) - 16} bytes from offset 16, expected {expected}"
        )

    lab = _read_binary(labels_path)
    if len(lab) < 8:
        raise FormatError(f"labels file truncated in header ({len(lab)} bytes < 8)")
    magic = int.from_bytes(lab[0:4], "big")
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(
            f"labels magic 0x{magic:08x} at offset 0, expected 0x{IDX_LABELS_MAGIC:08x}"
        )
    n_labels = int.from_bytes(lab[4:8], "big")
    if len(lab) - 8 != n_labels:
        raise FormatError(
            f"labels payload is {len(lab) - 8} bytes from offset 8, expected {n_labels}"
        )
    if n_images != n_labels:
        raise FormatError(f"count mismatch: {n_images} images vs {n_labels} labels")

    pixels = np.frombuffer(img, dtype=np.uint8, offset=16).astype(np.float64) / 255.0
    inputs = pixels.reshape(n_images, 1, rows, cols)
    labels = np.frombuffer(lab, dtype=np.uint8, offset=8).astype(np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if n_labels else 0
    return LabeledDataset(inputs, labels, num_classes, f"idx:{images_path}")


def gen_synthetic(
    classes: int,
    per_class: int,
    shape,
    seed: int,
    *,
    low: float = 0.55,
    high: float = 0.95,
    sigma: float = 0.05,
) -> LabeledDataset:
    """Class-conditional Gaussian blobs in [0, 1]^n, linearly separable by construction.

    Class k's mean sits at ``high`` on its own block of n // classes components
    and at ``low`` elsewhere, giving asymmetric headroom: the informative
    components of a sample can be pulled down much further than background
    components can be pushed up.  Class means must be at least 6 within-class
    standard deviations apart, which the defaults satisfy with a wide margin.
    Samples interleave classes (sample i has label i mod classes) so any prefix
    is class-balanced, and values clip to [0, 1].
    """
    if isinstance(shape, int):
        shape = (shape,)
    shape = tuple(int(s) for s in shape)
    n = prod(shape)
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    if n < classes:
        raise ValueError(f"{n} features cannot host {classes} class blocks")
    if not 0.0 <= low < high <= 1.0:
        raise ValueError(f"need 0 <= low < high <= 1, got low={low}, high={high}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    block = n // classes
    separation = (high - low) * sqrt(2 * block)
    if separation < 6 * sigma:
        raise ValueError(
            f"class means only {separation:.3f} apart (< 6 sigma = {6 * sigma:.3f}); "
            "widen high-low or shrink sigma"
        )

    means = np.full((classes, n), low)
    for k in range(classes):
        means[k, k * block : (k + 1) * block] = high

    rng = RngStream(seed)
    total = classes * per_class
    labels = np.arange(total, dtype=np.int64) % classes
    noise = rng.normal(total * n).reshape(total, n) * sigma
    inputs = np.clip(means[labels] + noise, 0.0, 1.0).reshape(total, *shape)
    provenance = (
        f"synthetic:classes={classes},per_class={per_class},shape={shape},seed={seed},"
        f"low={low},high={high},sigma={sigma}"
    )
    return LabeledDataset(inputs, labels, classes, provenance)


def load_dataset(descriptor: dict) -> LabeledDataset:
    """Materialize a dataset from its campaign-config descriptor."""
    kind = descriptor.get("kind")
    if kind == "idx":
        return load_idx(descriptor["images"], descriptor["labels"], descriptor.get("num_classes"))
    if kind == "synthetic":
        return gen_synthetic(
            descriptor["classes"],
            descriptor["per_class"],
            tuple(descriptor["shape"]),
            descriptor["seed"],
            low=descriptor.get("low", 0.55),
            high=descriptor.get("high", 0.95),
            sigma=descriptor.get("sigma", 0.05),
        )
    raise ValueError(f"unknown dataset descriptor kind {kind!r}")
