"""Datasets: synthetic Gaussian blobs, IDX (MNIST) files and non-iid splits."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DomainError
from ..seeding import rng

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


@dataclass(frozen=True)
class LocalDataset:
    inputs: np.ndarray
    labels: np.ndarray
    owner: int = -1

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2:
            X = X.reshape(len(y), -1)
        if len(X) != len(y):
            raise DomainError(f"{len(X)} inputs but {len(y)} labels")
        if len(y) and y.min() < 0:
            raise DomainError("labels must be non-negative class indices")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return len(self.labels)

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "LocalDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LocalDataset(self.inputs[idx], self.labels[idx], self.owner)


def make_blobs(
    num_classes: int,
    dim: int,
    samples_per_class: int,
    seed: int,
    separation: float = 1.0,
    noise: float = 1.0,
) -> LocalDataset:
    """Gaussian class blobs: centres ~ N(0, separation^2 I), samples ~ N(centre, noise^2 I).

    Samples are interleaved in a seeded random order.
    """
    g = rng(seed, "blobs")
    centres = separation * g.standard_normal((num_classes, dim))
    labels = np.repeat(np.arange(num_classes), samples_per_class)
    X = centres[labels] + noise * g.standard_normal((len(labels), dim))
    order = g.permutation(len(labels))
    return LocalDataset(X[order], labels[order])


def train_test_split(data: LocalDataset, test_fraction: float, seed: int):
    if not 0 < test_fraction < 1:
        raise DomainError(f"test_fraction must be in (0, 1), got {test_fraction}")
    order = rng(seed, "split").permutation(len(data))
    n_test = int(round(test_fraction * len(data)))
    return data.subset(np.sort(order[n_test:])), data.subset(np.sort(order[:n_test]))


def partition_noniid(
    full: LocalDataset, num_workers: int, concentration: float, seed: int
) -> list[LocalDataset]:
    """Split ``full`` across workers with per-class Dirichlet proportions.

    Each class's samples are shuffled and cut according to a draw from
    Dirichlet(concentration * 1_K), so workers end up with different class
    mixes and different totals. ``concentration=inf`` gives even splits.
    Every sample goes to exactly one worker; within a worker samples keep
    their original order.
    """
    if num_workers < 1:
        raise DomainError(f"num_workers must be >= 1, got {num_workers}")
    g = rng(seed, "partition")
    owned = [[] for _ in range(num_workers)]
    for c in np.unique(full.labels):
        idx = np.flatnonzero(full.labels == c)
        g.shuffle(idx)
        if math.isinf(concentration):
            props = np.full(num_workers, 1.0 / num_workers)
        else:
            props = g.dirichlet(np.full(num_workers, float(concentration)))
        cuts = (np.cumsum(props)[:-1] * len(idx)).astype(np.int64)
        for k, part in enumerate(np.split(idx, cuts)):
            owned[k].extend(part.tolist())
    return [
        LocalDataset(full.inputs[np.sort(ix)], full.labels[np.sort(ix)], owner=k)
        for k, ix in enumerate(np.asarray(o, dtype=np.int64) for o in owned)
    ]


def read_idx(path) -> np.ndarray:
    """Parse an IDX file into an array of its declared dtype and shape."""
    path = Path(path)
    with path.open("rb") as f:
        header = f.read(4)
        if len(header) != 4 or header[0] != 0 or header[1] != 0:
            raise DomainError(f"{path}: not an IDX file")
        code, ndim = header[2], header[3]
        if code not in _IDX_DTYPES:
            raise DomainError(f"{path}: unknown IDX type code 0x{code:02x}")
        dims = struct.unpack(f">{ndim}I", f.read(4 * ndim))
        dtype = _IDX_DTYPES[code]
        count = int(np.prod(dims)) if dims else 0
        data = np.frombuffer(f.read(count * dtype.itemsize), dtype=dtype)
    if data.size != count:
        raise DomainError(f"{path}: truncated, expected {count} items, found {data.size}")
    return data.reshape(dims).astype(dtype.newbyteorder("="))


def _magic(path) -> int:
    with Path(path).open("rb") as f:
        return struct.unpack(">I", f.read(4))[0]


def load_idx_dataset(images_path, labels_path, limit: int | None = None) -> LocalDataset:
    """Load MNIST-style IDX image/label files, scaling pixels to [0, 1]."""
    for p, want in ((images_path, IDX_IMAGES_MAGIC), (labels_path, IDX_LABELS_MAGIC)):
        if not Path(p).is_file():
            raise FileNotFoundError(f"dataset file not found: {p}")
        if _magic(p) != want:
            raise DomainError(f"{p}: magic 0x{_magic(p):08x}, expected 0x{want:08x}")
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if len(images) != len(labels):
        raise DomainError(f"{len(images)} images but {len(labels)} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    X = images.reshape(len(images), -1).astype(np.float64) / 255.0
    return LocalDataset(X, labels.astype(np.int64))


def write_idx(path, array: np.ndarray) -> None:
    """Write a uint8 array as an IDX file (used to build fixtures)."""
    array = np.asarray(array, dtype=np.uint8)
    with Path(path).open("wb") as f:
        f.write(bytes([0, 0, 0x08, array.ndim]))
        f.write(struct.pack(f">{array.ndim}I", *array.shape))
        f.write(array.tobytes())
