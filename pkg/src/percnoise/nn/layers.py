"""Neural-network layers on numpy arrays.

Conventions: image-like activations are (N, C, H, W), flat activations are
(N, F). Convolutions are stride-1 with 'same' zero padding so 3x3 stacks
preserve spatial dims; max pooling is 2x2 stride 2 with ceil-mode edge
truncation so odd (including size-1) dims stay valid. Each layer caches
what its backward pass needs on forward; one backward per forward.
"""

import numpy as np

from ..errors import ShapeError


class Param:
    """One trainable tensor with its gradient and optimizer state."""

    __slots__ = ("name", "value", "grad", "velocity")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)
        self.velocity = np.zeros_like(value)


class Layer:
    def build(self, in_shape: tuple, dtype, rng) -> tuple:
        """Allocate parameters for the given input shape; returns output shape."""
        return in_shape

    def forward(self, x, train: bool = False, rng=None):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def params(self) -> list:
        return []


class Conv2d(Layer):
    """Stride-1 'same' convolution with square kernels, via im2col GEMMs."""

    def __init__(self, out_channels: int, ksize: int = 3):
        self.out_channels = out_channels
        self.ksize = ksize

    def build(self, in_shape, dtype, rng):
        if len(in_shape) != 3:
            raise ShapeError(f"conv expects (C, H, W) input, got {in_shape}")
        c, h, w = in_shape
        k = self.ksize
        limit = np.sqrt(6.0 / (c * k * k))
        weight = rng.uniform(-limit, limit, (self.out_channels, c, k, k)).astype(dtype)
        self.weight = Param("weight", weight)
        self.bias = Param("bias", np.zeros(self.out_channels, dtype=dtype))
        self.in_channels = c
        return (self.out_channels, h, w)

    def _weight_matrix(self):
        # (k*k*c, out) with column index order [di, dj, c] matching im2col.
        return self.weight.value.transpose(2, 3, 1, 0).reshape(-1, self.out_channels)

    def forward(self, x, train=False, rng=None):
        n, c, h, w = x.shape
        k, pad = self.ksize, self.ksize // 2
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))).transpose(0, 2, 3, 1)
        cols = np.empty((n, h, w, k * k * c), dtype=x.dtype)
        for di in range(k):
            for dj in range(k):
                tap = (di * k + dj) * c
                cols[..., tap:tap + c] = xp[:, di:di + h, dj:dj + w, :]
        cols = cols.reshape(n * h * w, k * k * c)
        out = cols @ self._weight_matrix() + self.bias.value
        self._cache = (cols, (n, c, h, w))
        return out.reshape(n, h, w, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, dout):
        cols, (n, c, h, w) = self._cache
        k, pad = self.ksize, self.ksize // 2
        dout_r = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        dw = cols.T @ dout_r
        self.weight.grad[...] = dw.reshape(k, k, c, self.out_channels).transpose(3, 2, 0, 1)
        self.bias.grad[...] = dout_r.sum(axis=0)
        dcols = (dout_r @ self._weight_matrix().T).reshape(n, h, w, k, k, c)
        dxp = np.zeros((n, h + 2 * pad, w + 2 * pad, c), dtype=dout.dtype)
        for di in range(k):
            for dj in range(k):
                dxp[:, di:di + h, dj:dj + w, :] += dcols[:, :, :, di, dj, :]
        return dxp[:, pad:pad + h, pad:pad + w, :].transpose(0, 3, 1, 2)

    def params(self):
        return [self.weight, self.bias]


class Dense(Layer):
    def __init__(self, units: int):
        self.units = units

    def build(self, in_shape, dtype, rng):
        if len(in_shape) != 1:
            raise ShapeError(f"dense expects flat input, got {in_shape}; add flatten")
        fan_in = in_shape[0]
        limit = np.sqrt(6.0 / fan_in)
        weight = rng.uniform(-limit, limit, (fan_in, self.units)).astype(dtype)
        self.weight = Param("weight", weight)
        self.bias = Param("bias", np.zeros(self.units, dtype=dtype))
        return (self.units,)

    def forward(self, x, train=False, rng=None):
        self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, dout):
        self.weight.grad[...] = self._x.T @ dout
        self.bias.grad[...] = dout.sum(axis=0)
        return dout @ self.weight.value.T

    def params(self):
        return [self.weight, self.bias]


class MaxPool2d(Layer):
    """2x2 stride-2 pooling; odd dims keep their trailing row/column."""

    def build(self, in_shape, dtype, rng):
        if len(in_shape) != 3:
            raise ShapeError(f"maxpool expects (C, H, W) input, got {in_shape}")
        c, h, w = in_shape
        return (c, (h + 1) // 2, (w + 1) // 2)

    def forward(self, x, train=False, rng=None):
        n, c, h, w = x.shape
        ph, pw = (h + 1) // 2 * 2, (w + 1) // 2 * 2
        if ph != h or pw != w:
            pad = np.full((n, c, ph, pw), -np.inf, dtype=x.dtype)
            pad[:, :, :h, :w] = x
            x = pad
        windows = (x.reshape(n, c, ph // 2, 2, pw // 2, 2)
                   .transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ph // 2, pw // 2, 4))
        self._idx = windows.argmax(axis=-1)
        self._shape = (n, c, h, w, ph, pw)
        return np.take_along_axis(windows, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        n, c, h, w, ph, pw = self._shape
        dwin = np.zeros((n, c, ph // 2, pw // 2, 4), dtype=dout.dtype)
        np.put_along_axis(dwin, self._idx[..., None], dout[..., None], axis=-1)
        dx = (dwin.reshape(n, c, ph // 2, pw // 2, 2, 2)
              .transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ph, pw))
        return dx[:, :, :h, :w]


class GlobalAvgPool(Layer):
    def build(self, in_shape, dtype, rng):
        if len(in_shape) != 3:
            raise ShapeError(f"global average pool expects (C, H, W), got {in_shape}")
        return (in_shape[0],)

    def forward(self, x, train=False, rng=None):
        self._hw = x.shape[2] * x.shape[3]
        self._spatial = x.shape[2:]
        return x.mean(axis=(2, 3))

    def backward(self, dout):
        h, w = self._spatial
        return np.broadcast_to(dout[:, :, None, None] / self._hw,
                               dout.shape + (h, w)).copy()


class BatchNorm(Layer):
    """Per-channel batch normalization; per-feature on flat inputs.

    Training mode normalizes with batch statistics and updates running
    stats; inference (frozen) mode uses the running stats while gradients
    still flow through the affine transform.
    """

    def __init__(self, momentum: float = 0.9, eps: float = 1e-5):
        self.momentum = momentum
        self.eps = eps

    def build(self, in_shape, dtype, rng):
        width = in_shape[0]
        self.gamma = Param("gamma", np.ones(width, dtype=dtype))
        self.beta = Param("beta", np.zeros(width, dtype=dtype))
        self.running_mean = np.zeros(width, dtype=dtype)
        self.running_var = np.ones(width, dtype=dtype)
        self._axes = (0, 2, 3) if len(in_shape) == 3 else (0,)
        return in_shape

    def _expand(self, v, ndim):
        return v.reshape((1, -1) + (1,) * (ndim - 2))

    def forward(self, x, train=False, rng=None):
        axes = self._axes if x.ndim == 4 else (0,)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.running_mean = (self.momentum * self.running_mean
                                 + (1 - self.momentum) * mean).astype(x.dtype)
            self.running_var = (self.momentum * self.running_var
                                + (1 - self.momentum) * var).astype(x.dtype)
        else:
            mean, var = self.running_mean, self.running_var
        ivar = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - self._expand(mean, x.ndim)) * self._expand(ivar, x.ndim)
        self._cache = (xhat, ivar, train, axes)
        return self._expand(self.gamma.value, x.ndim) * xhat + self._expand(self.beta.value, x.ndim)

    def backward(self, dout):
        xhat, ivar, train, axes = self._cache
        self.gamma.grad[...] = (dout * xhat).sum(axis=axes)
        self.beta.grad[...] = dout.sum(axis=axes)
        dxhat = dout * self._expand(self.gamma.value, dout.ndim)
        if not train:
            return dxhat * self._expand(ivar, dout.ndim)
        m = dout.size / dout.shape[1] if dout.ndim == 4 else dout.shape[0]
        sum_dxhat = dxhat.sum(axis=axes, keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes, keepdims=True)
        ivar_b = self._expand(ivar, dout.ndim)
        return (ivar_b / m) * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)

    def params(self):
        return [self.gamma, self.beta]


class Dropout(Layer):
    """Inverted dropout; identity outside training."""

    def __init__(self, rate: float):
        if not 0 <= rate < 1:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class ELU(Layer):
    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha

    def forward(self, x, train=False, rng=None):
        neg = self.alpha * np.expm1(np.minimum(x, 0.0))
        out = np.where(x > 0, x, neg)
        self._cache = (x > 0, neg)
        return out

    def backward(self, dout):
        pos, neg = self._cache
        return dout * np.where(pos, 1.0, neg + self.alpha)


class Flatten(Layer):
    def build(self, in_shape, dtype, rng):
        return (int(np.prod(in_shape)),)

    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Softmax(Layer):
    """Row-wise softmax; intended as the terminal classification layer."""

    def build(self, in_shape, dtype, rng):
        if len(in_shape) != 1:
            raise ShapeError(f"softmax expects flat input, got {in_shape}")
        return in_shape

    def forward(self, x, train=False, rng=None):
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        self._p = e / e.sum(axis=1, keepdims=True)
        return self._p

    def backward(self, dout):
        p = self._p
        return p * (dout - (dout * p).sum(axis=1, keepdims=True))
