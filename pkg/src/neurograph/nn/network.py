"""Network assembly: specs, parameter state, forward/backward, the three builders."""

from dataclasses import dataclass, field

import numpy as np

from .layers import (
    BatchNorm,
    Conv,
    Dense,
    Flatten,
    Head,
    MaxPool,
    NnError,
    Relu,
    ShapeError,
    batchnorm_backward,
    batchnorm_forward,
    conv_backward,
    conv_forward,
    maxpool_backward,
    maxpool_forward,
    param_shapes,
    propagate_shape,
)

MODES = ("classify", "regress")
VARIANTS = ("cnn1", "cnn2", "cnn3")


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer list plus the per-example input shape."""

    layers: tuple
    input_shape: tuple

    def shapes(self):
        """Per-layer output shapes; raises ShapeError if they do not chain."""
        shape = tuple(self.input_shape)
        out = []
        for i, layer in enumerate(self.layers):
            shape = propagate_shape(layer, shape, i)
            out.append(shape)
        return out

    def validate(self, mode=None):
        shapes = self.shapes()
        head = self.layers[-1]
        if not isinstance(head, Head):
            raise NnError("last layer must be a Head")
        if mode is not None:
            expected = "softmax2" if mode == "classify" else "linear1"
            if head.kind != expected:
                raise NnError(f"head {head.kind} does not match mode {mode}")
        return shapes


@dataclass
class NetworkState:
    """Learned parameters, batchnorm running statistics, optimizer moments."""

    params: dict  # (layer_idx, name) -> ndarray
    running: dict  # (layer_idx, 'mean'|'var') -> ndarray
    m: dict = field(default_factory=dict)  # Adam first moments
    v: dict = field(default_factory=dict)  # Adam second moments
    step: int = 0

    def copy(self):
        return NetworkState(
            params={k: a.copy() for k, a in self.params.items()},
            running={k: a.copy() for k, a in self.running.items()},
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
            step=self.step,
        )


def build_cnn(variant, mode="classify"):
    """The three fixed architectures, on 32x32x10 input.

    cnn1: one conv block, straight to the head.
    cnn2: one conv block, two more convolutions, a second pool block, a hidden
          dense layer, the head.
    cnn3: five conv blocks with filter counts doubling from 32 to 512, a
          hidden dense layer, the head.

    A conv block is conv -> relu -> pool -> batchnorm; the first convolution
    has 32 filters and every following convolution doubles the count; all
    kernels are 3x3 and pools 2x2.
    """
    variant = variant.lower()
    if variant not in VARIANTS:
        raise NnError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if mode not in MODES:
        raise NnError(f"unknown mode {mode!r}; expected one of {MODES}")
    head = Head("softmax2" if mode == "classify" else "linear1")
    if variant == "cnn1":
        layers = [Conv(32), Relu(), MaxPool(), BatchNorm(), Flatten(), head]
    elif variant == "cnn2":
        layers = [
            Conv(32), Relu(), MaxPool(), BatchNorm(),
            Conv(64), Relu(),
            Conv(128), Relu(), MaxPool(), BatchNorm(),
            Flatten(), Dense(128), Relu(), head,
        ]
    else:
        layers = []
        filters = 32
        for _ in range(5):
            layers += [Conv(filters), Relu(), MaxPool(), BatchNorm()]
            filters *= 2
        layers += [Flatten(), Dense(128), Relu(), head]
    return NetworkSpec(layers=tuple(layers), input_shape=(32, 32, 10))


def init_state(spec, seed=0, mode=None):
    """Fan-in-scaled uniform initialization; batchnorm gain 1, shift 0."""
    spec.validate(mode)
    rng = np.random.default_rng(seed)
    params, running = {}, {}
    shape = tuple(spec.input_shape)
    for i, layer in enumerate(spec.layers):
        for name, pshape in param_shapes(layer, shape).items():
            key = (i, name)
            if name == "weight":
                fan_in = int(np.prod(pshape[:-1]))
                limit = np.sqrt(6.0 / fan_in)
                params[key] = rng.uniform(-limit, limit, size=pshape)
            elif name == "bias" or name == "shift":
                params[key] = np.zeros(pshape)
            elif name == "gain":
                params[key] = np.ones(pshape)
        if isinstance(layer, BatchNorm):
            c = shape[-1]
            running[(i, "mean")] = np.zeros(c)
            running[(i, "var")] = np.ones(c)
        shape = propagate_shape(layer, shape, i)
    return NetworkState(params=params, running=running)


def forward(spec, state, batch, train=False):
    """Run the network; returns (output, caches, new_running).

    Pure: train-mode batchnorm statistics are returned, not written back, so
    repeated calls with the same inputs are side-effect free. ``output`` is
    the head's pre-activation (logits for softmax2, scores for linear1).
    """
    x = np.asarray(batch, dtype=float)
    if x.shape[1:] != tuple(spec.input_shape):
        raise ShapeError(
            f"batch shape {x.shape[1:]} does not match input shape {spec.input_shape}"
        )
    caches = []
    new_running = {}
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            w, b = state.params[(i, "weight")], state.params[(i, "bias")]
            if x.shape[3] != w.shape[2]:
                raise ShapeError(f"layer {i} (Conv): {x.shape[3]} channels, kernel wants {w.shape[2]}")
            out, patches = conv_forward(x, w, b)
            caches.append(("conv", x.shape, patches))
            x = out
        elif isinstance(layer, Relu):
            mask = x > 0
            caches.append(("relu", mask))
            x = x * mask
        elif isinstance(layer, MaxPool):
            out, arg = maxpool_forward(x, layer.size)
            caches.append(("pool", x.shape, arg))
            x = out
        elif isinstance(layer, BatchNorm):
            out, cache, nm, nv = batchnorm_forward(
                x,
                state.params[(i, "gain")],
                state.params[(i, "shift")],
                state.running[(i, "mean")],
                state.running[(i, "var")],
                layer.momentum,
                layer.eps,
                train,
            )
            caches.append(("bn", cache))
            new_running[(i, "mean")] = nm
            new_running[(i, "var")] = nv
            x = out
        elif isinstance(layer, Flatten):
            caches.append(("flatten", x.shape))
            x = x.reshape(x.shape[0], -1)
        elif isinstance(layer, (Dense, Head)):
            w, b = state.params[(i, "weight")], state.params[(i, "bias")]
            if x.shape[1] != w.shape[0]:
                raise ShapeError(
                    f"layer {i} ({type(layer).__name__}): {x.shape[1]} features, weight wants {w.shape[0]}"
                )
            caches.append(("dense", x))
            x = x @ w + b
        else:
            raise NnError(f"unknown layer {layer}")
    return x, caches, new_running


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_output_grad(output, targets, mode):
    """Mean loss over the batch and its gradient w.r.t. the head output.

    classify: softmax cross-entropy against integer class targets.
    regress: mean squared error against real scores.
    """
    n = output.shape[0]
    if mode == "classify":
        targets = np.asarray(targets, dtype=int)
        probs = softmax(output)
        eps = 1e-300
        loss = -np.mean(np.log(probs[np.arange(n), targets] + eps))
        grad = probs.copy()
        grad[np.arange(n), targets] -= 1.0
        grad /= n
    elif mode == "regress":
        targets = np.asarray(targets, dtype=float).reshape(n, 1)
        resid = output - targets
        loss = float(np.mean(resid**2))
        grad = 2.0 * resid / n
    else:
        raise NnError(f"unknown mode {mode!r}")
    return float(loss), grad


def backward(spec, state, caches, output_grad):
    """Backpropagate; returns gradients keyed like state.params."""
    grads = {}
    dx = output_grad
    for i in reversed(range(len(spec.layers))):
        layer = spec.layers[i]
        cache = caches[i]
        if isinstance(layer, (Dense, Head)):
            x_in = cache[1]
            w = state.params[(i, "weight")]
            grads[(i, "weight")] = x_in.T @ dx
            grads[(i, "bias")] = dx.sum(axis=0)
            dx = dx @ w.T
        elif isinstance(layer, Flatten):
            dx = dx.reshape(cache[1])
        elif isinstance(layer, BatchNorm):
            dx, d_gain, d_shift = batchnorm_backward(dx, cache[1])
            grads[(i, "gain")] = d_gain
            grads[(i, "shift")] = d_shift
        elif isinstance(layer, MaxPool):
            dx = maxpool_backward(dx, cache[2], cache[1], layer.size)
        elif isinstance(layer, Relu):
            dx = dx * cache[1]
        elif isinstance(layer, Conv):
            _, x_shape, patches = cache
            dx, d_w, d_b = conv_backward(dx, patches, x_shape, state.params[(i, "weight")])
            grads[(i, "weight")] = d_w
            grads[(i, "bias")] = d_b
    return grads


def loss_and_grads(spec, state, batch, targets, mode, train=True):
    """One forward/backward pass; returns (loss, grads, new_running).

    Raises NnError naming the batch if the loss is not finite.
    """
    output, caches, new_running = forward(spec, state, batch, train=train)
    loss, output_grad = loss_and_output_grad(output, targets, mode)
    if not np.isfinite(loss):
        raise NnError(f"non-finite loss {loss} on a batch of {len(batch)}")
    grads = backward(spec, state, caches, output_grad)
    return loss, grads, new_running


def predict(spec, state, batch, mode, batch_size=512):
    """Inference-mode outputs: class labels (classify) or scores (regress)."""
    outputs = []
    for start in range(0, len(batch), batch_size):
        out, _, _ = forward(spec, state, batch[start : start + batch_size], train=False)
        outputs.append(out)
    output = np.concatenate(outputs, axis=0)
    if mode == "classify":
        return output.argmax(axis=1)
    return output[:, 0]


def predict_proba(spec, state, batch, batch_size=512):
    outputs = []
    for start in range(0, len(batch), batch_size):
        out, _, _ = forward(spec, state, batch[start : start + batch_size], train=False)
        outputs.append(softmax(out))
    return np.concatenate(outputs, axis=0)


_LAYER_TAGS = {
    "Conv": Conv,
    "MaxPool": MaxPool,
    "BatchNorm": BatchNorm,
    "Relu": Relu,
    "Flatten": Flatten,
    "Dense": Dense,
    "Head": Head,
}


def spec_metadata(spec, step=0):
    """Plain-text description of a spec (checkpoint sidecar)."""
    lines = [f"input_shape {' '.join(str(d) for d in spec.input_shape)}", f"step {step}"]
    for layer in spec.layers:
        if isinstance(layer, Conv):
            lines.append(f"layer Conv {layer.out_channels} {layer.kernel}")
        elif isinstance(layer, MaxPool):
            lines.append(f"layer MaxPool {layer.size}")
        elif isinstance(layer, BatchNorm):
            lines.append(f"layer BatchNorm {layer.momentum} {layer.eps}")
        elif isinstance(layer, Dense):
            lines.append(f"layer Dense {layer.out_features}")
        elif isinstance(layer, Head):
            lines.append(f"layer Head {layer.kind}")
        else:
            lines.append(f"layer {type(layer).__name__}")
    return "\n".join(lines) + "\n"


def spec_from_metadata(text):
    """Parse :func:`spec_metadata` output back into (spec, step)."""
    layers = []
    input_shape = None
    step = 0
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "input_shape":
            input_shape = tuple(int(v) for v in parts[1:])
        elif parts[0] == "step":
            step = int(parts[1])
        elif parts[0] == "layer":
            name = parts[1]
            if name == "Conv":
                layers.append(Conv(int(parts[2]), int(parts[3])))
            elif name == "MaxPool":
                layers.append(MaxPool(int(parts[2])))
            elif name == "BatchNorm":
                layers.append(BatchNorm(float(parts[2]), float(parts[3])))
            elif name == "Dense":
                layers.append(Dense(int(parts[2])))
            elif name == "Head":
                layers.append(Head(parts[2]))
            elif name in _LAYER_TAGS:
                layers.append(_LAYER_TAGS[name]())
            else:
                raise NnError(f"unknown layer tag {name!r} in metadata")
    if input_shape is None:
        raise NnError("metadata lacks input_shape")
    return NetworkSpec(layers=tuple(layers), input_shape=input_shape), step
