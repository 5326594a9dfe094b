"""Bias-corrected Adam updates over parameter trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import tree_map

__all__ = ["AdamState", "init_adam", "adam_update"]


@dataclass
class AdamState:
    """First/second moment accumulators, step counter, and hyperparameters."""

    m: list
    v: list
    step: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: list, learning_rate: float) -> AdamState:
    zeros = tree_map(np.zeros_like, params)
    return AdamState(m=zeros, v=tree_map(np.zeros_like, params), step=0,
                     learning_rate=learning_rate)


def adam_update(params: list, grads: list, state: AdamState):
    """One Adam step. Pure: returns new parameters and a new state."""
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    m = tree_map(lambda m_, g: b1 * m_ + (1.0 - b1) * g, state.m, grads)
    v = tree_map(lambda v_, g: b2 * v_ + (1.0 - b2) * g * g, state.v, grads)
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    lr = state.learning_rate

    def step_fn(p, m_, v_):
        update = lr * (m_ / corr1) / (np.sqrt(v_ / corr2) + state.eps)
        return (p - update).astype(p.dtype)

    new_params = tree_map(step_fn, params, m, v)
    return new_params, AdamState(m=m, v=v, step=t, learning_rate=lr,
                                 beta1=b1, beta2=b2, eps=state.eps)
