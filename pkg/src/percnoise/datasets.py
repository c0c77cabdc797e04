"""Dataset ingestion: CIFAR-10 binary batches and labeled WAV directories.

Both loaders produce a trainable container with a seed-deterministic
subset selection and train/test split; the split depends only on the
reference seed and the record order, so every quality level of a sweep
sees the same items on the same side.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audiocodec import mel_spectrogram, perceptual_quantize_audio, read_wav
from .errors import DatasetError
from .imagecodec import transcode_image

CIFAR_RECORD_BYTES = 3073   # 1 label byte + 3 * 1024 channel bytes
CIFAR_SIDE = 32


@dataclass(frozen=True)
class DatasetRef:
    """Where a dataset lives and how to subset it."""

    kind: str                       # "cifar10" | "audio"
    root: str
    classes: tuple = None           # None = all classes
    per_class_cap: int = None       # None = no cap
    train_fraction: float = 0.75
    seed: int = 0
    frames: int = 84                # audio: fixed time-frame count per clip

    def __post_init__(self):
        if self.kind not in ("cifar10", "audio"):
            raise DatasetError(f"unknown dataset kind {self.kind!r}")
        if self.per_class_cap is not None and self.per_class_cap < 1:
            raise DatasetError("per_class_cap must be at least 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError("train_fraction must lie strictly between 0 and 1")
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(self.classes))

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetRef":
        known = {"kind", "root", "classes", "per_class_cap",
                 "train_fraction", "seed", "frames"}
        unknown = set(doc) - known
        if unknown:
            raise DatasetError(f"unknown dataset fields: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "root": str(self.root),
            "classes": list(self.classes) if self.classes is not None else None,
            "per_class_cap": self.per_class_cap,
            "train_fraction": self.train_fraction,
            "seed": self.seed,
            "frames": self.frames,
        }


@dataclass
class Dataset:
    """Featurized, split dataset ready for training."""

    kind: str
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    num_classes: int
    class_names: list = field(default_factory=list)


def _subset_and_split(labels: np.ndarray, ref: DatasetRef):
    """Seeded per-class capping followed by a seeded global split."""
    rng = np.random.default_rng(ref.seed)
    classes = sorted(set(labels.tolist())) if ref.classes is None else list(ref.classes)
    missing = [c for c in classes if c not in set(labels.tolist())]
    if missing:
        raise DatasetError(f"requested classes not present: {missing}")

    selected = []
    for cls in classes:
        idx = np.nonzero(labels == cls)[0]
        idx = idx[rng.permutation(idx.size)]
        if ref.per_class_cap is not None:
            idx = idx[:ref.per_class_cap]
        selected.append(idx)
    selected = np.concatenate(selected)
    selected = selected[rng.permutation(selected.size)]

    if selected.size < 2:
        raise DatasetError("need at least 2 samples to split")
    n_train = int(round(ref.train_fraction * selected.size))
    n_train = min(max(n_train, 1), selected.size - 1)
    remap = {cls: i for i, cls in enumerate(classes)}
    return selected[:n_train], selected[n_train:], remap, classes


def read_cifar_batches(root) -> tuple[np.ndarray, np.ndarray]:
    """Parse every *.bin batch under ``root`` into images and labels.

    Records are 3073 bytes: label, then 1024 R, 1024 G, 1024 B bytes in
    row-major 32x32 order. Returns (N, 32, 32, 3) uint8 and (N,) labels.
    """
    root = Path(root)
    files = sorted(root.glob("*.bin"))
    if not files:
        raise DatasetError(f"no .bin batch files under {root}")
    images, labels = [], []
    for path in files:
        data = path.read_bytes()
        if len(data) == 0 or len(data) % CIFAR_RECORD_BYTES != 0:
            raise DatasetError(
                f"{path}: length {len(data)} is not a multiple of {CIFAR_RECORD_BYTES}")
        records = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        batch_labels = records[:, 0]
        if batch_labels.max(initial=0) > 9:
            raise DatasetError(f"{path}: label byte exceeds 9")
        planes = records[:, 1:].reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE)
        images.append(planes.transpose(0, 2, 3, 1))
        labels.append(batch_labels)
    return np.concatenate(images), np.concatenate(labels).astype(np.int64)


def write_cifar_batch(path, images: np.ndarray, labels: np.ndarray) -> None:
    """Inverse of :func:`read_cifar_batches` for one batch file."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels)
    if images.ndim != 4 or images.shape[1:] != (CIFAR_SIDE, CIFAR_SIDE, 3):
        raise DatasetError(f"expected (N, 32, 32, 3) images, got {images.shape}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) > 9:
        raise DatasetError("labels must lie in [0, 9]")
    records = np.empty((images.shape[0], CIFAR_RECORD_BYTES), dtype=np.uint8)
    records[:, 0] = labels
    records[:, 1:] = images.transpose(0, 3, 1, 2).reshape(images.shape[0], -1)
    Path(path).write_bytes(records.tobytes())


def _image_features(images: np.ndarray, quality) -> np.ndarray:
    """(N, H, W, 3) uint8 -> zero-centered (N, 3, H, W) float32 in [-0.5, 0.5]."""
    if quality is not None:
        images = np.stack([transcode_image(img, quality)[0] for img in images])
    return images.transpose(0, 3, 1, 2).astype(np.float32) / 255.0 - 0.5


def load_cifar10(ref: DatasetRef, quality=None) -> Dataset:
    """Load, subset, optionally transcode at a quality level, and split."""
    images, labels = read_cifar_batches(ref.root)
    train_idx, test_idx, remap, classes = _subset_and_split(labels, ref)
    return Dataset(
        kind="cifar10",
        x_train=_image_features(images[train_idx], quality),
        y_train=np.array([remap[labels[i]] for i in train_idx], dtype=np.int64),
        x_test=_image_features(images[test_idx], quality),
        y_test=np.array([remap[labels[i]] for i in test_idx], dtype=np.int64),
        num_classes=len(classes),
        class_names=[str(c) for c in classes],
    )


def read_audio_manifest(root) -> list[tuple[Path, str]]:
    """Parse manifest.csv (columns: path,label); validates existence and
    uniqueness of every listed file."""
    root = Path(root)
    manifest = root / "manifest.csv"
    if not manifest.exists():
        raise DatasetError(f"manifest not found: {manifest}")
    entries = []
    with open(manifest, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if len(row) != 2:
                raise DatasetError(f"{manifest}: malformed row {row!r}")
            if row == ["path", "label"]:
                continue
            entries.append((root / row[0], row[1]))
    if not entries:
        raise DatasetError(f"{manifest}: no entries")
    seen = set()
    for path, _ in entries:
        if path in seen:
            raise DatasetError(f"{manifest}: duplicate path {path}")
        seen.add(path)
        if not path.exists():
            raise DatasetError(f"{manifest}: listed file missing: {path}")
    return entries


def _mel_features(path, quality, frames: int) -> np.ndarray:
    """wav -> optional quantize(Q) -> mel -> zero-centered fixed-frame feature."""
    signal = read_wav(path)
    if quality is not None:
        signal = perceptual_quantize_audio(signal, quality)
    mel = mel_spectrogram(signal)
    values = mel.values
    if values.shape[1] >= frames:
        start = (values.shape[1] - frames) // 2
        values = values[:, start:start + frames]
    else:
        padded = np.full((values.shape[0], frames), mel.floor_db)
        padded[:, :values.shape[1]] = values
        values = padded
    scaled = (values - mel.floor_db) / -mel.floor_db - 0.5
    return scaled.astype(np.float32)[None, :, :]


def load_audio_dataset(ref: DatasetRef, quality=None) -> Dataset:
    """Load a manifest-described WAV directory through the audio pipeline."""
    entries = read_audio_manifest(ref.root)
    label_names = [label for _, label in entries]
    name_order = sorted(set(label_names))
    labels = np.array([name_order.index(lbl) for lbl in label_names], dtype=np.int64)

    wanted_names = name_order if ref.classes is None else [str(c) for c in ref.classes]
    id_ref = DatasetRef(kind=ref.kind, root=str(ref.root),
                        classes=tuple(name_order.index(n) for n in wanted_names
                                      if n in name_order) or None,
                        per_class_cap=ref.per_class_cap,
                        train_fraction=ref.train_fraction,
                        seed=ref.seed, frames=ref.frames)
    missing = [n for n in wanted_names if n not in name_order]
    if missing:
        raise DatasetError(f"requested classes not present: {missing}")
    train_idx, test_idx, remap, classes = _subset_and_split(labels, id_ref)

    features = {i: _mel_features(entries[i][0], quality, ref.frames)
                for i in np.concatenate([train_idx, test_idx])}
    return Dataset(
        kind="audio",
        x_train=np.stack([features[i] for i in train_idx]),
        y_train=np.array([remap[labels[i]] for i in train_idx], dtype=np.int64),
        x_test=np.stack([features[i] for i in test_idx]),
        y_test=np.array([remap[labels[i]] for i in test_idx], dtype=np.int64),
        num_classes=len(classes),
        class_names=[name_order[c] for c in classes],
    )


def load_dataset(ref: DatasetRef, quality=None) -> Dataset:
    if ref.kind == "cifar10":
        return load_cifar10(ref, quality)
    return load_audio_dataset(ref, quality)
