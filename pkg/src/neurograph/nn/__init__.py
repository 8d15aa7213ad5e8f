"""Self-contained CNN engine: layers, builders, training loop.

Everything runs on plain numpy arrays in float64; forward, backward, and the
optimizer are deterministic given the seed, so two runs with the same seed
produce bitwise-identical parameter trajectories.
"""

from .network import (
    NetworkSpec,
    NetworkState,
    NnError,
    ShapeError,
    build_cnn,
    backward,
    forward,
    init_state,
    loss_and_grads,
    predict,
    spec_from_metadata,
    spec_metadata,
)
from .layers import (
    BatchNorm,
    Conv,
    Dense,
    Flatten,
    Head,
    MaxPool,
    Relu,
    propagate_shape,
)
from .training import (
    AdamConfig,
    DivergenceError,
    TrainConfig,
    adam_step,
    train,
)

__all__ = [
    "AdamConfig",
    "BatchNorm",
    "Conv",
    "Dense",
    "DivergenceError",
    "Flatten",
    "Head",
    "MaxPool",
    "NetworkSpec",
    "NetworkState",
    "NnError",
    "Relu",
    "ShapeError",
    "TrainConfig",
    "adam_step",
    "backward",
    "build_cnn",
    "forward",
    "init_state",
    "loss_and_grads",
    "predict",
    "propagate_shape",
    "spec_from_metadata",
    "spec_metadata",
    "train",
]
