"""SGD training loop with seeded determinism and convergence detection."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, ShapeError
from .model import Model


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    batch_size: int = 64
    max_epochs: int = 30
    seed: int = 0
    augment_shift: bool = False
    augment_flip: bool = False
    patience: int = 5
    min_delta: float = 0.002
    lr_decay_every: int = 0          # 0 disables the step schedule
    lr_decay_factor: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch size and max epochs must be at least 1")
        if self.patience < 1 or self.min_delta < 0:
            raise ValueError("patience must be >= 1 and min_delta >= 0")


@dataclass
class TrainResult:
    train_accuracy: list = field(default_factory=list)
    test_accuracy: list = field(default_factory=list)
    epochs_to_converge: int = 0
    final_test_accuracy: float = 0.0
    param_count: int = 0

    def to_dict(self) -> dict:
        return {
            "train_accuracy": [float(a) for a in self.train_accuracy],
            "test_accuracy": [float(a) for a in self.test_accuracy],
            "epochs_to_converge": int(self.epochs_to_converge),
            "final_test_accuracy": float(self.final_test_accuracy),
            "param_count": int(self.param_count),
        }


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy from logits, plus its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_probs = z - logsumexp
    n = logits.shape[0]
    loss = float(-log_probs[np.arange(n), labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def augment_batch(batch: np.ndarray, shift: bool, flip: bool, rng) -> np.ndarray:
    """Pad-4 reflect + random crop when ``shift``; horizontal flip with
    probability 0.5 when ``flip``. Seeded through ``rng``."""
    if batch.ndim != 4:
        raise ShapeError(f"augmentation expects (N, C, H, W) batches, got {batch.shape}")
    if not shift and not flip:
        return batch
    out = batch
    if shift:
        n, _, h, w = out.shape
        padded = np.pad(out, ((0, 0), (0, 0), (4, 4), (4, 4)), mode="reflect")
        offsets = rng.integers(0, 9, size=(n, 2))
        out = np.stack([padded[i, :, oy:oy + h, ox:ox + w]
                        for i, (oy, ox) in enumerate(offsets)])
    if flip:
        out = out.copy() if out is batch else out
        mask = rng.random(out.shape[0]) < 0.5
        out[mask] = out[mask, :, :, ::-1]
    return out


def evaluate(model: Model, x: np.ndarray, y: np.ndarray,
             batch_size: int = 256) -> float:
    """Classification accuracy in inference mode."""
    correct = 0
    for start in range(0, x.shape[0], batch_size):
        probs = model.predict_proba(x[start:start + batch_size])
        correct += int((probs.argmax(axis=1) == y[start:start + batch_size]).sum())
    return correct / x.shape[0]


def epochs_to_converge(history, patience: int = 5, min_delta: float = 0.002) -> int:
    """First 1-based epoch after which no accuracy in the next ``patience``
    epochs improves by more than ``min_delta``; the final epoch if none."""
    hist = [float(v) for v in history]
    if not hist:
        raise ValueError("history must be non-empty")
    for e in range(1, len(hist) + 1):
        window = hist[e:e + patience]
        if all(v <= hist[e - 1] + min_delta for v in window):
            return e
    return len(hist)


def train(model: Model, data, cfg: TrainConfig) -> TrainResult:
    """SGD with momentum; reproducible per seed; history recorded per epoch.

    ``data`` carries x_train/y_train/x_test/y_test. Raises DivergenceError
    (with the epoch index) on a non-finite loss.
    """
    x_train, y_train = data.x_train, data.y_train
    x_test, y_test = data.x_test, data.y_test
    if x_train.shape[0] == 0 or x_test.shape[0] == 0:
        raise ValueError("train and test splits must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    result = TrainResult(param_count=model.param_count)
    lr = cfg.learning_rate
    n = x_train.shape[0]

    for epoch in range(1, cfg.max_epochs + 1):
        if cfg.lr_decay_every and epoch > 1 and (epoch - 1) % cfg.lr_decay_every == 0:
            lr *= cfg.lr_decay_factor
        perm = rng.permutation(n)
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            if cfg.augment_shift or cfg.augment_flip:
                xb = augment_batch(xb, cfg.augment_shift, cfg.augment_flip, rng)
            logits = model.forward_logits(xb, train=True, rng=rng)
            loss, dlogits = softmax_cross_entropy(logits, yb)
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            correct += int((logits.argmax(axis=1) == yb).sum())
            model.backward_from_logits(dlogits.astype(model.dtype))
            for p in model.params():
                p.velocity *= cfg.momentum
                p.velocity -= lr * p.grad
                p.value += p.velocity
        result.train_accuracy.append(correct / n)
        result.test_accuracy.append(evaluate(model, x_test, y_test))

    result.epochs_to_converge = epochs_to_converge(
        result.test_accuracy, cfg.patience, cfg.min_delta)
    result.final_test_accuracy = result.test_accuracy[-1]
    return result
