"""
Dense tensor math for the completion models.

Every operation is a plain numpy function over float64 arrays with an explicit
``*_backward`` partner. There is no graph engine: layers call these pairs
directly and each pair is covered by the finite-difference checker in
``hcc.gradcheck``.
"""
import math

import numpy as np

from hcc.errors import DimensionError, LabelError


DTYPE = np.float64
STORAGE_DTYPE = np.float32

LOG_FLOOR = 1e-12
LAYER_NORM_EPS = 1e-5

_GELU_C = math.sqrt(2.0 / math.pi)


class Parameter:
    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=DTYPE)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def nbytes(self) -> int:
        return self.value.nbytes + self.grad.nbytes

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.value.shape})"


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", a.shape, b.shape)
    return a @ b


def matmul_backward(dout: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return dout @ b.T, a.T @ dout


def softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax_rows_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    return y * (dy - np.sum(dy * y, axis=-1, keepdims=True))


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = LAYER_NORM_EPS) -> np.ndarray:
    mean = np.mean(x, axis=-1, keepdims=True)
    var = np.mean((x - mean) ** 2, axis=-1, keepdims=True)
    x_hat = (x - mean) / np.sqrt(var + eps)
    return x_hat * gain + bias


def layer_norm_backward(
        dy: np.ndarray, x: np.ndarray, gain: np.ndarray, eps: float = LAYER_NORM_EPS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = x.shape[-1]
    mean = np.mean(x, axis=-1, keepdims=True)
    var = np.mean((x - mean) ** 2, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std

    reduce_axes = tuple(range(dy.ndim - 1))
    dgain = np.sum(dy * x_hat, axis=reduce_axes)
    dbias = np.sum(dy, axis=reduce_axes)

    dx_hat = dy * gain
    dx = (inv_std / n) * (
        n * dx_hat
        - np.sum(dx_hat, axis=-1, keepdims=True)
        - x_hat * np.sum(dx_hat * x_hat, axis=-1, keepdims=True)
    )
    return dx, dgain, dbias


def cross_entropy(probs: np.ndarray, label: int) -> float:
    if not 0 <= label < probs.shape[-1]:
        raise LabelError(f"label {label} out of range for {probs.shape[-1]} classes")
    return -math.log(max(float(probs[label]), LOG_FLOOR))


def cross_entropy_logits_backward(probs: np.ndarray, label: int) -> np.ndarray:
    """Gradient of cross_entropy(softmax(logits), label) with respect to logits."""
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    return dlogits


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + 0.044715 * x ** 3)))


def gelu_backward(dy: np.ndarray, x: np.ndarray) -> np.ndarray:
    t = np.tanh(_GELU_C * (x + 0.044715 * x ** 3))
    local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * _GELU_C * (1.0 + 3 * 0.044715 * x ** 2)
    return dy * local


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def cache_nbytes(obj) -> int:
    """Total bytes of every ndarray reachable through nested tuples/lists."""
    if isinstance(obj, np.ndarray):
        return obj.nbytes
    if isinstance(obj, (tuple, list)):
        return sum(cache_nbytes(item) for item in obj)
    return 0


class AllocationCounter:
    """
    Byte counter over model buffers: persistent bytes (parameters) plus the
    largest transient activation set observed since the last reset.
    """
    def __init__(self):
        self.persistent = 0
        self.peak = 0

    def set_persistent(self, nbytes: int) -> None:
        self.persistent = nbytes
        self.peak = max(self.peak, nbytes)

    def observe(self, transient: int) -> None:
        self.peak = max(self.peak, self.persistent + transient)

    def reset_peak(self) -> None:
        self.peak = self.persistent
