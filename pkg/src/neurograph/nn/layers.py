"""Layer primitives: descriptors, parameter shapes, forward/backward kernels.

Data layout is NHWC: (batch, height, width, channels). Convolutions are 3x3,
stride 1, same-padding; pooling is 2x2, stride 2, so spatial dimensions halve
exactly at every pool.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class NnError(Exception):
    """CNN engine failure."""


class ShapeError(NnError):
    """Tensor shape does not chain through the network."""


@dataclass(frozen=True)
class Conv:
    out_channels: int
    kernel: int = 3


@dataclass(frozen=True)
class MaxPool:
    size: int = 2


@dataclass(frozen=True)
class BatchNorm:
    momentum: float = 0.9
    eps: float = 1e-5


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Dense:
    out_features: int


@dataclass(frozen=True)
class Head:
    kind: str  # 'softmax2' or 'linear1'

    @property
    def out_features(self):
        return 2 if self.kind == "softmax2" else 1


def propagate_shape(layer, shape, index):
    """Output shape of ``layer`` for per-example input ``shape`` (no batch dim)."""
    name = type(layer).__name__
    if isinstance(layer, Conv):
        if len(shape) != 3:
            raise ShapeError(f"layer {index} ({name}): expected H x W x C input, got {shape}")
        return (shape[0], shape[1], layer.out_channels)
    if isinstance(layer, MaxPool):
        if len(shape) != 3:
            raise ShapeError(f"layer {index} ({name}): expected H x W x C input, got {shape}")
        if shape[0] % layer.size or shape[1] % layer.size:
            raise ShapeError(
                f"layer {index} ({name}): {shape[0]}x{shape[1]} not divisible by {layer.size}"
            )
        return (shape[0] // layer.size, shape[1] // layer.size, shape[2])
    if isinstance(layer, (BatchNorm, Relu)):
        return shape
    if isinstance(layer, Flatten):
        return (int(np.prod(shape)),)
    if isinstance(layer, Dense):
        if len(shape) != 1:
            raise ShapeError(f"layer {index} ({name}): expected flat input, got {shape}")
        return (layer.out_features,)
    if isinstance(layer, Head):
        if len(shape) != 1:
            raise ShapeError(f"layer {index} ({name}): expected flat input, got {shape}")
        return (layer.out_features,)
    raise NnError(f"unknown layer type {name}")


def param_shapes(layer, in_shape):
    """Mapping of parameter name -> shape for ``layer`` (empty if stateless)."""
    if isinstance(layer, Conv):
        k, c_in = layer.kernel, in_shape[2]
        return {
            "weight": (k, k, c_in, layer.out_channels),
            "bias": (layer.out_channels,),
        }
    if isinstance(layer, BatchNorm):
        c = in_shape[-1]
        return {"gain": (c,), "shift": (c,)}
    if isinstance(layer, (Dense, Head)):
        return {
            "weight": (in_shape[0], layer.out_features),
            "bias": (layer.out_features,),
        }
    return {}


def _im2col(x, k):
    """Zero-pad for same-convolution and expose k x k patches.

    x : (N, H, W, C) -> (N, H, W, k, k, C) view over the padded array.
    """
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    return sliding_window_view(xp, (k, k), axis=(1, 2)).transpose(0, 1, 2, 4, 5, 3)


def conv_forward(x, weight, bias):
    n, h, w, _ = x.shape
    k = weight.shape[0]
    patches = _im2col(x, k).reshape(n * h * w, -1)
    out = patches @ weight.reshape(-1, weight.shape[3]) + bias
    return out.reshape(n, h, w, weight.shape[3]), patches


def conv_backward(dout, patches, x_shape, weight):
    n, h, w, c_in = x_shape
    k, _, _, c_out = weight.shape
    dout_mat = dout.reshape(n * h * w, c_out)
    d_weight = (patches.T @ dout_mat).reshape(weight.shape)
    d_bias = dout_mat.sum(axis=0)
    d_patches = (dout_mat @ weight.reshape(-1, c_out).T).reshape(n, h, w, k, k, c_in)
    pad = k // 2
    dx_padded = np.zeros((n, h + 2 * pad, w + 2 * pad, c_in))
    for ky in range(k):
        for kx in range(k):
            dx_padded[:, ky : ky + h, kx : kx + w, :] += d_patches[:, :, :, ky, kx, :]
    dx = dx_padded[:, pad : pad + h, pad : pad + w, :]
    return dx, d_weight, d_bias


def maxpool_forward(x, size):
    n, h, w, c = x.shape
    windows = x.reshape(n, h // size, size, w // size, size, c)
    flat = windows.transpose(0, 1, 3, 2, 4, 5).reshape(n, h // size, w // size, size * size, c)
    arg = flat.argmax(axis=3)
    out = np.take_along_axis(flat, arg[:, :, :, np.newaxis, :], axis=3).squeeze(axis=3)
    return out, arg


def maxpool_backward(dout, arg, x_shape, size):
    n, h, w, c = x_shape
    flat = np.zeros((n, h // size, w // size, size * size, c))
    np.put_along_axis(flat, arg[:, :, :, np.newaxis, :], dout[:, :, :, np.newaxis, :], axis=3)
    windows = flat.reshape(n, h // size, w // size, size, size, c).transpose(0, 1, 3, 2, 4, 5)
    return windows.reshape(n, h, w, c)


def _channel_axes(x):
    # Per-channel statistics over batch and any spatial axes.
    return tuple(range(x.ndim - 1))


def batchnorm_forward(x, gain, shift, running_mean, running_var, momentum, eps, train):
    axes = _channel_axes(x)
    if train:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        new_mean = momentum * running_mean + (1 - momentum) * mean
        new_var = momentum * running_var + (1 - momentum) * var
    else:
        mean, var = running_mean, running_var
        new_mean, new_var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std
    out = gain * x_hat + shift
    cache = (x_hat, inv_std, gain)
    return out, cache, new_mean, new_var


def batchnorm_backward(dout, cache):
    x_hat, inv_std, gain = cache
    axes = _channel_axes(dout)
    m = np.prod([dout.shape[a] for a in axes])
    d_gain = (dout * x_hat).sum(axis=axes)
    d_shift = dout.sum(axis=axes)
    dxhat = dout * gain
    dx = inv_std / m * (m * dxhat - dxhat.sum(axis=axes) - x_hat * (dxhat * x_hat).sum(axis=axes))
    return dx, d_gain, d_shift
