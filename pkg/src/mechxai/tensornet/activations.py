"""Elementwise activation functions and their derivatives."""

from __future__ import annotations

import numpy as np

from ..errors import UsageError

__all__ = ["ACTIVATIONS", "activate", "activate_grad"]


def _rect(z):
    return np.maximum(z, 0.0)


def _rect_grad(z, a):
    return (z > 0).astype(z.dtype)


def _sig(z):
    # large negative z overflows exp; the limit 0 is still correct
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _sig_grad(z, a):
    return a * (1.0 - a)


def _tanh(z):
    return np.tanh(z)


def _tanh_grad(z, a):
    return 1.0 - a * a


def _elu(z):
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z, a):
    return np.where(z > 0, 1.0, a + 1.0)


def _splus(z):
    return np.logaddexp(0.0, z)


def _splus_grad(z, a):
    return _sig(z)


def _linear(z):
    return z


def _linear_grad(z, a):
    return np.ones_like(z)


ACTIVATIONS = {
    "rect": (_rect, _rect_grad),
    "sig": (_sig, _sig_grad),
    "tanh": (_tanh, _tanh_grad),
    "elu": (_elu, _elu_grad),
    "splus": (_splus, _splus_grad),
    "linear": (_linear, _linear_grad),
}


def activate(name: str, z: np.ndarray) -> np.ndarray:
    if name not in ACTIVATIONS:
        raise UsageError(f"unknown activation {name!r}; expected one of {tuple(ACTIVATIONS)}")
    return ACTIVATIONS[name][0](z)


def activate_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation, given pre-activation ``z`` and value ``a``."""
    if name not in ACTIVATIONS:
        raise UsageError(f"unknown activation {name!r}; expected one of {tuple(ACTIVATIONS)}")
    return ACTIVATIONS[name][1](z, a)
