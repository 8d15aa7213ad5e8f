"""fit/predict wrapper around the CNN engine for the cross-validation driver.

A slice of the training data (never the held-out fold) serves as the
validation set for best-epoch restoration.
"""

import numpy as np

from .nn import TrainConfig, build_cnn, init_state, predict, train


class CnnModel:
    """One network variant trained with Adam; fit/predict interface."""

    def __init__(self, variant="cnn1", mode="classify", config=None, val_fraction=0.1, seed=0):
        self.variant = variant
        self.mode = mode
        self.config = config or TrainConfig(mode=mode, seed=seed)
        if self.config.mode != mode:
            raise ValueError(f"config mode {self.config.mode} != model mode {mode}")
        self.val_fraction = val_fraction
        self.seed = seed
        self.spec = build_cnn(variant, mode)
        self.state = None
        self.trace = None

    def fit(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        rng = np.random.default_rng(self.seed)
        n_val = int(round(self.val_fraction * len(x)))
        if n_val > 0:
            order = rng.permutation(len(x))
            val_idx, train_idx = order[:n_val], order[n_val:]
            x_val, y_val = x[val_idx], y[val_idx]
            x_train, y_train = x[train_idx], y[train_idx]
        else:
            x_train, y_train, x_val, y_val = x, y, None, None
        state = init_state(self.spec, seed=self.seed, mode=self.mode)
        self.state, self.trace = train(
            self.spec, state, x_train, y_train, self.config, x_val=x_val, y_val=y_val
        )
        return self

    def predict(self, x):
        if self.state is None:
            raise RuntimeError("fit before predict")
        return predict(self.spec, self.state, np.asarray(x), self.mode)
