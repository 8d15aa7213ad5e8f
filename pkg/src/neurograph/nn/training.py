"""Adam optimizer and the mini-batch training loop."""

from dataclasses import dataclass, field

import numpy as np

from .network import NnError, init_state, loss_and_grads, predict


class DivergenceError(NnError):
    """Training loss became non-finite; carries the trace so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise NnError("Adam betas must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    epochs: int = 30
    adam: AdamConfig = field(default_factory=AdamConfig)
    mode: str = "classify"
    seed: int = 0
    restore_best: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise NnError("batch_size must be >= 1")
        if self.mode not in ("classify", "regress"):
            raise NnError(f"unknown mode {self.mode!r}")


def adam_step(state, grads, adam=None):
    """Standard Adam update with bias correction, applied in place.

    Moments are created lazily (zero-initialized) on first use; the step
    counter increments once per call.
    """
    adam = adam or AdamConfig()
    state.step += 1
    t = state.step
    b1, b2 = adam.beta1, adam.beta2
    for key, g in grads.items():
        if key not in state.m:
            state.m[key] = np.zeros_like(state.params[key])
            state.v[key] = np.zeros_like(state.params[key])
        m = state.m[key]
        v = state.v[key]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        state.params[key] -= adam.learning_rate * m_hat / (np.sqrt(v_hat) + adam.eps)
    return state


def _epoch_metric(spec, state, x, y, mode):
    """Validation metric: macro-F1 (higher better) or RMSE (lower better)."""
    pred = predict(spec, state, x, mode)
    if mode == "classify":
        from ..evaluate import confusion_counts, macro_f1

        return macro_f1(confusion_counts(np.asarray(y, dtype=int), pred)), True
    rmse = float(np.sqrt(np.mean((pred - np.asarray(y, dtype=float)) ** 2)))
    return rmse, False


def train(spec, state, x_train, y_train, config, x_val=None, y_val=None):
    """Mini-batch Adam training; deterministic given the config seed.

    Returns (state, trace): one trace entry per epoch with the mean train
    loss and, when a validation split is given, the validation metric. With
    ``restore_best`` the parameters of the best validation epoch are restored
    at the end. Non-finite loss raises DivergenceError with the trace.
    """
    x_train = np.asarray(x_train, dtype=float)
    if len(x_train) == 0:
        raise NnError("training split is empty")
    y_train = np.asarray(y_train)
    has_val = x_val is not None and len(x_val) > 0
    rng = np.random.default_rng(config.seed)
    trace = []
    best_metric = None
    best_state = None
    n = len(x_train)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            try:
                loss, grads, new_running = loss_and_grads(
                    spec, state, x_train[idx], y_train[idx], config.mode, train=True
                )
            except NnError as exc:
                raise DivergenceError(
                    f"epoch {epoch}, batch at {start}: {exc}", trace
                ) from exc
            state.running.update(new_running)
            if config.adam.learning_rate != 0:
                adam_step(state, grads, config.adam)
            else:
                state.step += 1
            losses.append(loss)
        entry = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if has_val:
            metric, higher_better = _epoch_metric(spec, state, x_val, y_val, config.mode)
            entry["val_metric"] = metric
            improved = (
                best_metric is None
                or (higher_better and metric > best_metric)
                or (not higher_better and metric < best_metric)
            )
            if improved:
                best_metric = metric
                if config.restore_best:
                    best_state = state.copy()
        trace.append(entry)
    if has_val and config.restore_best and best_state is not None:
        state = best_state
    return state, trace


def fit_network(spec, x_train, y_train, config, x_val=None, y_val=None, init_seed=None):
    """Initialize and train in one call; returns (state, trace)."""
    seed = config.seed if init_seed is None else init_seed
    state = init_state(spec, seed=seed, mode=config.mode)
    return train(spec, state, x_train, y_train, config, x_val=x_val, y_val=y_val)
