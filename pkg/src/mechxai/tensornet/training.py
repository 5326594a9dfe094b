"""Mini-batch training loop with warm resumption.

Each epoch shuffles the training set with a generator seeded by
``(seed, epoch)``, so a run trained for ``k`` epochs and resumed for ``m``
more reproduces the exact loss history of a single ``k + m`` epoch run.
Non-finite losses or activations abort the run with a ``diverged`` status
instead of raising, so a search can rank the trial and move on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError
from .network import NetworkConfig, forward_sequence, loss_and_gradients, mse_loss
from .optim import AdamState, adam_update, init_adam

__all__ = ["TrainConfig", "TrainingHistory", "TrainerState", "train"]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    shuffle: bool = True


@dataclass
class TrainingHistory:
    train_mse: list = field(default_factory=list)
    valid_mse: list = field(default_factory=list)

    def last_valid(self) -> float:
        return self.valid_mse[-1] if self.valid_mse else float("inf")


@dataclass
class TrainerState:
    """Everything needed to continue training where a run left off."""

    params: list
    adam: AdamState
    epochs_done: int = 0
    history: TrainingHistory = field(default_factory=TrainingHistory)
    status: str = "running"  # running | completed | stopped | diverged


def _epoch_order(seed: int, epoch: int, n: int, shuffle: bool) -> np.ndarray:
    if not shuffle:
        return np.arange(n)
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(config: NetworkConfig, params: list, data, cfg: TrainConfig,
          callbacks=(), state: TrainerState | None = None) -> TrainerState:
    """Train until ``cfg.epochs`` total epochs are done.

    ``data`` is ``(X_train, Y_train, X_valid, Y_valid)`` of already
    standardized arrays. When ``state`` is given, training continues from
    it (``params`` is ignored) and only the remaining epochs run. Each
    callback is invoked as ``callback(epoch, history)`` after the epoch's
    validation loss is recorded; any truthy return stops training with
    status ``stopped``.
    """
    x_train, y_train, x_valid, y_valid = data
    n = x_train.shape[0]
    if state is None:
        state = TrainerState(params=params, adam=init_adam(params, cfg.learning_rate))
    state.status = "running"

    for epoch in range(state.epochs_done, cfg.epochs):
        order = _epoch_order(cfg.seed, epoch, n, cfg.shuffle)
        batch_losses = []
        diverged = False
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            try:
                loss, grads, _ = loss_and_gradients(config, state.params, x_train[idx], y_train[idx])
            except NumericError:
                diverged = True
                break
            if not np.isfinite(loss):
                diverged = True
                break
            batch_losses.append(loss)
            state.params, state.adam = adam_update(state.params, grads, state.adam)
        if diverged:
            state.status = "diverged"
            return state

        try:
            yhat, _ = forward_sequence(config, state.params, x_valid)
            valid = mse_loss(yhat, np.asarray(y_valid, dtype=config.np_dtype))
        except NumericError:
            state.status = "diverged"
            return state
        if not np.isfinite(valid):
            state.status = "diverged"
            return state

        state.history.train_mse.append(float(np.mean(batch_losses)))
        state.history.valid_mse.append(valid)
        state.epochs_done = epoch + 1

        if any(cb(epoch, state.history) for cb in callbacks):
            state.status = "stopped"
            return state

    state.status = "completed"
    return state
