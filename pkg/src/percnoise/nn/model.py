"""Declarative model specs, shape-checked building, and checkpoint files.

A ModelSpec is an ordered list of layer descriptors, each a (kind, *args)
tuple: ("conv", channels, k), ("fc", units), ("maxpool",), ("gap",),
("batchnorm",), ("dropout", rate), ("relu",), ("elu",), ("flatten",),
("softmax",). Shapes are chained and validated at build time, so parameter
counting works without allocating any weights.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .layers import (ELU, BatchNorm, Conv2d, Dense, Dropout, Flatten,
                     GlobalAvgPool, Layer, MaxPool2d, ReLU, Softmax)

_CHECKPOINT_MAGIC = b"PNCK"
_CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    """Named, ordered layer descriptor list."""

    name: str
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers",
                           tuple(tuple(entry) for entry in self.layers))

    def to_json(self) -> str:
        return json.dumps({"name": self.name,
                           "layers": [list(entry) for entry in self.layers]})

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        doc = json.loads(text)
        return cls(name=doc["name"], layers=tuple(tuple(e) for e in doc["layers"]))


def _make_layer(entry) -> Layer:
    kind, *args = entry
    factories = {
        "conv": lambda c, k=3: Conv2d(int(c), int(k)),
        "fc": lambda units: Dense(int(units)),
        "maxpool": MaxPool2d,
        "gap": GlobalAvgPool,
        "batchnorm": BatchNorm,
        "dropout": lambda rate: Dropout(float(rate)),
        "relu": ReLU,
        "elu": ELU,
        "flatten": Flatten,
        "softmax": Softmax,
    }
    if kind not in factories:
        raise ShapeError(f"unknown layer kind {kind!r}")
    return factories[kind](*args)


def _walk_shapes(spec: ModelSpec, input_shape: tuple):
    """Yield (entry, in_shape, out_shape) per layer, validating the chain."""
    shape = tuple(int(d) for d in input_shape)
    for entry in spec.layers:
        kind, *args = entry
        in_shape = shape
        if kind == "conv":
            if len(shape) != 3:
                raise ShapeError(f"{spec.name}: conv needs (C, H, W), got {shape}")
            shape = (int(args[0]), shape[1], shape[2])
        elif kind == "fc":
            if len(shape) != 1:
                raise ShapeError(f"{spec.name}: fc needs flat input, got {shape}")
            shape = (int(args[0]),)
        elif kind == "maxpool":
            if len(shape) != 3:
                raise ShapeError(f"{spec.name}: maxpool needs (C, H, W), got {shape}")
            shape = (shape[0], (shape[1] + 1) // 2, (shape[2] + 1) // 2)
        elif kind == "gap":
            if len(shape) != 3:
                raise ShapeError(f"{spec.name}: gap needs (C, H, W), got {shape}")
            shape = (shape[0],)
        elif kind == "flatten":
            shape = (int(np.prod(shape)),)
        elif kind == "softmax":
            if len(shape) != 1:
                raise ShapeError(f"{spec.name}: softmax needs flat input, got {shape}")
        elif kind in ("batchnorm", "dropout", "relu", "elu"):
            pass
        else:
            raise ShapeError(f"{spec.name}: unknown layer kind {kind!r}")
        yield entry, in_shape, shape


def count_params(spec: ModelSpec, input_shape: tuple) -> int:
    """Trainable parameter count from the shape chain alone.

    Conv: k^2*c_in*c_out + c_out. Dense: in*out + out. BatchNorm: 2*width.
    """
    total = 0
    for entry, in_shape, _ in _walk_shapes(spec, input_shape):
        kind, *args = entry
        if kind == "conv":
            c_out, k = int(args[0]), int(args[1]) if len(args) > 1 else 3
            total += k * k * in_shape[0] * c_out + c_out
        elif kind == "fc":
            total += in_shape[0] * int(args[0]) + int(args[0])
        elif kind == "batchnorm":
            total += 2 * in_shape[0]
    return total


class Model:
    """A built network: spec + allocated layers at a fixed input shape."""

    def __init__(self, spec: ModelSpec, input_shape: tuple, dtype, seed: int):
        self.spec = spec
        self.input_shape = tuple(int(d) for d in input_shape)
        self.dtype = np.dtype(dtype)
        self.seed = int(seed)
        rng = np.random.default_rng(seed)
        self.layers = []
        for entry, _, _ in _walk_shapes(spec, self.input_shape):
            layer = _make_layer(entry)
            self.layers.append(layer)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.build(shape, self.dtype, rng)
        self.output_shape = shape
        self._has_softmax = bool(spec.layers) and spec.layers[-1][0] == "softmax"

    @property
    def core_layers(self):
        """All layers except a trailing softmax."""
        return self.layers[:-1] if self._has_softmax else self.layers

    def forward_logits(self, x, train: bool = False, rng=None) -> np.ndarray:
        """Run every layer except a trailing softmax; caches for backward."""
        x = np.asarray(x)
        if x.shape[1:] != self.input_shape:
            raise ShapeError(
                f"input shape {x.shape[1:]} does not match model input {self.input_shape}")
        if x.dtype != self.dtype:
            x = x.astype(self.dtype)
        for layer in self.core_layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward_from_logits(self, dlogits: np.ndarray) -> np.ndarray:
        """Backpropagate a gradient w.r.t. the pre-softmax logits."""
        d = dlogits
        for layer in reversed(self.core_layers):
            d = layer.backward(d)
        return d

    def predict_proba(self, x) -> np.ndarray:
        """Class probabilities in inference mode; rows sum to 1."""
        logits = self.forward_logits(x, train=False)
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def params(self) -> list:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    @property
    def param_count(self) -> int:
        return int(sum(p.value.size for p in self.params()))

    def state_arrays(self) -> list:
        """All persistent arrays: trainable params plus batch-norm stats."""
        arrays = [p.value for p in self.params()]
        for layer in self.layers:
            if isinstance(layer, BatchNorm):
                arrays.extend([layer.running_mean, layer.running_var])
        return arrays


def build_model(spec: ModelSpec, input_shape: tuple,
                dtype=np.float32, seed: int = 0) -> Model:
    return Model(spec, input_shape, dtype, seed)


def save_checkpoint(path, model: Model) -> None:
    """Versioned binary checkpoint: layer table then float32-LE weights."""
    header = json.dumps({
        "spec": {"name": model.spec.name,
                 "layers": [list(e) for e in model.spec.layers]},
        "input_shape": list(model.input_shape),
        "seed": model.seed,
    }).encode()
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", _CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for arr in model.state_arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path, dtype=np.float32) -> Model:
    with open(path, "rb") as fh:
        if fh.read(4) != _CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        version = struct.unpack("<I", fh.read(4))[0]
        if version != _CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(struct.unpack("<I", fh.read(4))[0]))
        spec = ModelSpec(name=header["spec"]["name"],
                         layers=tuple(tuple(e) for e in header["spec"]["layers"]))
        model = build_model(spec, tuple(header["input_shape"]),
                            dtype=dtype, seed=header.get("seed", 0))
        for arr in model.state_arrays():
            raw = fh.read(4 * arr.size)
            if len(raw) != 4 * arr.size:
                raise ValueError(f"{path}: truncated checkpoint payload")
            arr[...] = np.frombuffer(raw, dtype="<f4").reshape(arr.shape).astype(model.dtype)
    return model
