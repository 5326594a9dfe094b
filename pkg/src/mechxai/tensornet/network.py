"""Network definition, forward evaluation, and reverse-mode gradients.

Networks map a sequence tensor ``X`` of shape ``(batch, T, input_dim)`` to
per-increment predictions. Dense layers act on the channel axis of every
increment independently; recurrent layers (simple recurrent cell, LSTM,
GRU) carry state across increments. Gradients are computed analytically,
layer by layer, with full backpropagation through time over the whole
sequence.

Parameters live in a list with one ``{name: array}`` dict per layer:

* dense / time_distributed_dense: ``W (d_in, width)``, ``b``
* simple_rnn: ``W (d_in + width, width)``, ``b``, output transform
  ``Wo (width, width)``, ``bo``
* lstm: candidate ``W``, ``b`` plus gate triples ``Wi/bi``, ``Wf/bf``,
  ``Wo/bo``, each kernel ``(d_in + width, width)``
* gru: update ``Wz/bz``, reset ``Wr/br``, candidate ``Wh/bh``

The recurrent blocks of the kernels are initialized orthogonally and the
input blocks Glorot-uniform; biases start at zero except the LSTM forget
gate, which starts at one so early training does not erase the cell state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError, UsageError
from .activations import activate, activate_grad

__all__ = [
    "LayerSpec",
    "NetworkConfig",
    "Model",
    "CellTrace",
    "RECURRENT_KINDS",
    "CELL_TYPES",
    "build_config",
    "init_params",
    "dense_forward",
    "simple_rnn_step",
    "lstm_step",
    "gru_step",
    "forward_sequence",
    "mse_loss",
    "backward",
    "loss_and_gradients",
    "tree_map",
    "flatten_params",
]

RECURRENT_KINDS = ("simple_rnn", "lstm", "gru")
DENSE_KINDS = ("dense", "time_distributed_dense")

# search-domain cell names -> (layer kind, state activation)
CELL_TYPES = {
    "lstm": ("lstm", "tanh"),
    "gru": ("gru", "tanh"),
    "recurrent_tanh": ("simple_rnn", "tanh"),
    "recurrent_rect": ("simple_rnn", "rect"),
}

PARAM_ORDER = {
    "dense": ("W", "b"),
    "time_distributed_dense": ("W", "b"),
    "simple_rnn": ("W", "b", "Wo", "bo"),
    "lstm": ("W", "b", "Wi", "bi", "Wf", "bf", "Wo", "bo"),
    "gru": ("Wz", "bz", "Wr", "br", "Wh", "bh"),
}

_DTYPES = {"f32": np.float32, "f64": np.float64}


@dataclass(frozen=True)
class LayerSpec:
    """One layer: kind, width, and (for dense and simple_rnn) activation."""

    kind: str
    width: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.kind not in PARAM_ORDER:
            raise UsageError(f"unknown layer kind {self.kind!r}")
        if self.width < 1:
            raise UsageError(f"layer width must be positive, got {self.width}")


@dataclass(frozen=True)
class NetworkConfig:
    """Layer chain plus input dimensionality and numeric precision."""

    input_dim: int
    layers: tuple
    dtype: str = "f32"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.dtype not in _DTYPES:
            raise UsageError(f"dtype must be one of {tuple(_DTYPES)}, got {self.dtype!r}")
        if not self.layers:
            raise UsageError("network needs at least one layer")

    @property
    def np_dtype(self):
        return _DTYPES[self.dtype]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].width

    def has_recurrent_layer(self) -> bool:
        return any(s.kind in RECURRENT_KINDS for s in self.layers)


@dataclass
class Model:
    """A config/params bundle plus the dataset statistics it was trained with."""

    config: NetworkConfig
    params: list
    normalization: dict | None = None
    seed: int | None = None


def build_config(mode: str, depth: int, width: int, *, input_dim: int, output_dim: int,
                 activation: str | None = None, cell_type: str | None = None,
                 dtype: str = "f32") -> NetworkConfig:
    """Uniform-width hidden stack plus a linear per-increment output head."""
    if mode == "dense":
        if activation is None:
            raise UsageError("dense mode requires an activation")
        hidden = [LayerSpec("dense", width, activation) for _ in range(depth)]
    elif mode == "recurrent":
        if cell_type not in CELL_TYPES:
            raise UsageError(f"unknown cell type {cell_type!r}; expected one of {tuple(CELL_TYPES)}")
        kind, act = CELL_TYPES[cell_type]
        hidden = [LayerSpec(kind, width, act) for _ in range(depth)]
    else:
        raise UsageError(f"mode must be 'dense' or 'recurrent', got {mode!r}")
    hidden.append(LayerSpec("time_distributed_dense", output_dim, "linear"))
    return NetworkConfig(input_dim=input_dim, layers=tuple(hidden), dtype=dtype)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def _glorot(rng, fan_in, fan_out, shape, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def _orthogonal(rng, n, dtype):
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q.astype(dtype)


def _recurrent_kernel(rng, d_in, width, dtype):
    top = _glorot(rng, d_in, width, (d_in, width), dtype)
    return np.vstack([top, _orthogonal(rng, width, dtype)])


def init_params(config: NetworkConfig, rng: np.random.Generator) -> list:
    """Fresh parameter tensors for every layer of ``config``."""
    dtype = config.np_dtype
    params = []
    d_in = config.input_dim
    for spec in config.layers:
        w = spec.width
        if spec.kind in DENSE_KINDS:
            p = {"W": _glorot(rng, d_in, w, (d_in, w), dtype), "b": np.zeros(w, dtype)}
        elif spec.kind == "simple_rnn":
            p = {
                "W": _recurrent_kernel(rng, d_in, w, dtype),
                "b": np.zeros(w, dtype),
                "Wo": _glorot(rng, w, w, (w, w), dtype),
                "bo": np.zeros(w, dtype),
            }
        elif spec.kind == "lstm":
            p = {"W": _recurrent_kernel(rng, d_in, w, dtype), "b": np.zeros(w, dtype)}
            for gate in ("i", "f", "o"):
                p[f"W{gate}"] = _recurrent_kernel(rng, d_in, w, dtype)
                p[f"b{gate}"] = np.zeros(w, dtype)
            p["bf"] = np.ones(w, dtype)
        else:  # gru
            p = {}
            for part in ("z", "r", "h"):
                p[f"W{part}"] = _recurrent_kernel(rng, d_in, w, dtype)
                p[f"b{part}"] = np.zeros(w, dtype)
        params.append(p)
        d_in = w
    return params


def tree_map(fn, *trees):
    """Apply ``fn`` leafwise over parameter-shaped lists of dicts."""
    out = []
    for dicts in zip(*trees):
        out.append({k: fn(*(d[k] for d in dicts)) for k in dicts[0]})
    return out


def flatten_params(config: NetworkConfig, params: list):
    """Yield ``(layer_index, name, array)`` in the canonical layer/key order."""
    for i, spec in enumerate(config.layers):
        for name in PARAM_ORDER[spec.kind]:
            yield i, name, params[i][name]


# ---------------------------------------------------------------------------
# Single-step cell math (shared by the sequence loops)
# ---------------------------------------------------------------------------

def _affine(x, W, b):
    if x.shape[-1] != W.shape[0]:
        raise UsageError(f"shape mismatch: input has {x.shape[-1]} channels, kernel expects {W.shape[0]}")
    return x @ W + b


def dense_forward(x, W, b, activation: str):
    """Affine map over the last axis followed by an activation."""
    return activate(activation, _affine(x, W, b))


def simple_rnn_step(x_next, a_prev, params: dict, activation: str = "tanh"):
    """One step of the plain recurrent cell.

    The previous output is concatenated to the input, squashed into the
    cell state, and a trailing affine transform produces the next output.
    Returns ``(c_next, a_next)``.
    """
    xbar = np.concatenate([x_next, a_prev], axis=-1)
    c = activate(activation, _affine(xbar, params["W"], params["b"]))
    a = _affine(c, params["Wo"], params["bo"])
    return c, a


def lstm_step(x_next, a_prev, c_prev, params: dict):
    """One LSTM step with sigmoid gates and tanh state activation.

    Returns ``(c_next, a_next, gates)`` where ``gates`` holds the input,
    forget, and output gate activations.
    """
    xbar = np.concatenate([x_next, a_prev], axis=-1)
    cand = np.tanh(_affine(xbar, params["W"], params["b"]))
    gi = activate("sig", _affine(xbar, params["Wi"], params["bi"]))
    gf = activate("sig", _affine(xbar, params["Wf"], params["bf"]))
    go = activate("sig", _affine(xbar, params["Wo"], params["bo"]))
    c = gf * c_prev + gi * cand
    a = go * np.tanh(c)
    return c, a, {"input": gi, "forget": gf, "output": go}


def gru_step(x_next, a_prev, params: dict):
    """One GRU step: update/reset gates and a reset-modulated candidate.

    The next state is the gate-weighted interpolation between the previous
    state and the candidate. Returns ``a_next``.
    """
    xbar = np.concatenate([x_next, a_prev], axis=-1)
    z = activate("sig", _affine(xbar, params["Wz"], params["bz"]))
    r = activate("sig", _affine(xbar, params["Wr"], params["br"]))
    xr = np.concatenate([x_next, r * a_prev], axis=-1)
    cand = np.tanh(_affine(xr, params["Wh"], params["bh"]))
    return z * a_prev + (1.0 - z) * cand


# ---------------------------------------------------------------------------
# Layer-level forward passes (whole sequences, with caches for backward)
# ---------------------------------------------------------------------------

def _dense_layer_forward(X, p, activation):
    Z = _affine(X, p["W"], p["b"])
    A = activate(activation, Z)
    return A, (X, Z, A)


def _simple_rnn_layer_forward(X, p, activation):
    n, T, _ = X.shape
    w = p["b"].shape[0]
    a = np.zeros((n, w), X.dtype)
    A = np.empty((n, T, w), X.dtype)
    C = np.empty((n, T, w), X.dtype)
    steps = []
    for t in range(T):
        xbar = np.concatenate([X[:, t, :], a], axis=-1)
        z = _affine(xbar, p["W"], p["b"])
        c = activate(activation, z)
        a = _affine(c, p["Wo"], p["bo"])
        A[:, t, :] = a
        C[:, t, :] = c
        steps.append((xbar, z, c))
    return A, (steps, C)


def _lstm_layer_forward(X, p):
    n, T, _ = X.shape
    w = p["b"].shape[0]
    a = np.zeros((n, w), X.dtype)
    c = np.zeros((n, w), X.dtype)
    A = np.empty((n, T, w), X.dtype)
    C = np.empty((n, T, w), X.dtype)
    G = {"input": np.empty((n, T, w), X.dtype), "forget": np.empty((n, T, w), X.dtype),
         "output": np.empty((n, T, w), X.dtype)}
    steps = []
    for t in range(T):
        xbar = np.concatenate([X[:, t, :], a], axis=-1)
        cand = np.tanh(_affine(xbar, p["W"], p["b"]))
        gi = activate("sig", _affine(xbar, p["Wi"], p["bi"]))
        gf = activate("sig", _affine(xbar, p["Wf"], p["bf"]))
        go = activate("sig", _affine(xbar, p["Wo"], p["bo"]))
        c_prev = c
        c = gf * c_prev + gi * cand
        tc = np.tanh(c)
        a = go * tc
        A[:, t, :] = a
        C[:, t, :] = c
        G["input"][:, t, :] = gi
        G["forget"][:, t, :] = gf
        G["output"][:, t, :] = go
        steps.append((xbar, cand, gi, gf, go, c_prev, tc))
    return A, (steps, C, G)


def _gru_layer_forward(X, p):
    n, T, _ = X.shape
    w = p["bz"].shape[0]
    a = np.zeros((n, w), X.dtype)
    A = np.empty((n, T, w), X.dtype)
    steps = []
    for t in range(T):
        a_prev = a
        xbar = np.concatenate([X[:, t, :], a_prev], axis=-1)
        z = activate("sig", _affine(xbar, p["Wz"], p["bz"]))
        r = activate("sig", _affine(xbar, p["Wr"], p["br"]))
        xr = np.concatenate([X[:, t, :], r * a_prev], axis=-1)
        cand = np.tanh(_affine(xr, p["Wh"], p["bh"]))
        a = z * a_prev + (1.0 - z) * cand
        A[:, t, :] = a
        steps.append((xbar, xr, z, r, cand, a_prev))
    return A, (steps, A)


# ---------------------------------------------------------------------------
# Layer-level backward passes
# ---------------------------------------------------------------------------

def _dense_layer_backward(dA, cache, p, activation):
    X, Z, A = cache
    dZ = dA * activate_grad(activation, Z, A)
    flat_x = X.reshape(-1, X.shape[-1])
    flat_dz = dZ.reshape(-1, dZ.shape[-1])
    grads = {"W": flat_x.T @ flat_dz, "b": flat_dz.sum(axis=0)}
    return dZ @ p["W"].T, grads


def _simple_rnn_layer_backward(dA, cache, p, activation, d_in):
    steps, _ = cache
    n, T, w = dA.shape
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    dX = np.empty((n, T, d_in), dA.dtype)
    da_feedback = np.zeros((n, w), dA.dtype)
    for t in range(T - 1, -1, -1):
        xbar, z, c = steps[t]
        da = dA[:, t, :] + da_feedback
        grads["Wo"] += c.T @ da
        grads["bo"] += da.sum(axis=0)
        dc = da @ p["Wo"].T
        dz = dc * activate_grad(activation, z, c)
        grads["W"] += xbar.T @ dz
        grads["b"] += dz.sum(axis=0)
        dxbar = dz @ p["W"].T
        dX[:, t, :] = dxbar[:, :d_in]
        da_feedback = dxbar[:, d_in:]
    return dX, grads


def _lstm_layer_backward(dA, cache, p, d_in):
    steps, _, _ = cache
    n, T, w = dA.shape
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    dX = np.empty((n, T, d_in), dA.dtype)
    da_feedback = np.zeros((n, w), dA.dtype)
    dc_feedback = np.zeros((n, w), dA.dtype)
    for t in range(T - 1, -1, -1):
        xbar, cand, gi, gf, go, c_prev, tc = steps[t]
        da = dA[:, t, :] + da_feedback
        dgo = da * tc
        dc = dc_feedback + da * go * (1.0 - tc * tc)
        dgf = dc * c_prev
        dgi = dc * cand
        dcand = dc * gi
        dc_feedback = dc * gf
        dzc = dcand * (1.0 - cand * cand)
        dzi = dgi * gi * (1.0 - gi)
        dzf = dgf * gf * (1.0 - gf)
        dzo = dgo * go * (1.0 - go)
        grads["W"] += xbar.T @ dzc
        grads["b"] += dzc.sum(axis=0)
        grads["Wi"] += xbar.T @ dzi
        grads["bi"] += dzi.sum(axis=0)
        grads["Wf"] += xbar.T @ dzf
        grads["bf"] += dzf.sum(axis=0)
        grads["Wo"] += xbar.T @ dzo
        grads["bo"] += dzo.sum(axis=0)
        dxbar = dzc @ p["W"].T + dzi @ p["Wi"].T + dzf @ p["Wf"].T + dzo @ p["Wo"].T
        dX[:, t, :] = dxbar[:, :d_in]
        da_feedback = dxbar[:, d_in:]
    return dX, grads


def _gru_layer_backward(dA, cache, p, d_in):
    steps, _ = cache
    n, T, w = dA.shape
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    dX = np.empty((n, T, d_in), dA.dtype)
    da_feedback = np.zeros((n, w), dA.dtype)
    for t in range(T - 1, -1, -1):
        xbar, xr, z, r, cand, a_prev = steps[t]
        da = dA[:, t, :] + da_feedback
        dz = da * (a_prev - cand)
        da_prev = da * z
        dcand = da * (1.0 - z)
        dzh = dcand * (1.0 - cand * cand)
        grads["Wh"] += xr.T @ dzh
        grads["bh"] += dzh.sum(axis=0)
        dxr = dzh @ p["Wh"].T
        dra = dxr[:, d_in:]
        dr = dra * a_prev
        da_prev = da_prev + dra * r
        dzz = dz * z * (1.0 - z)
        dzr = dr * r * (1.0 - r)
        grads["Wz"] += xbar.T @ dzz
        grads["bz"] += dzz.sum(axis=0)
        grads["Wr"] += xbar.T @ dzr
        grads["br"] += dzr.sum(axis=0)
        dxbar = dzz @ p["Wz"].T + dzr @ p["Wr"].T
        dX[:, t, :] = dxr[:, :d_in] + dxbar[:, :d_in]
        da_feedback = da_prev + dxbar[:, d_in:]
    return dX, grads


# ---------------------------------------------------------------------------
# Whole-network forward / backward
# ---------------------------------------------------------------------------

@dataclass
class CellTrace:
    """Per-layer hidden and cell state sequences of one forward pass.

    For the LSTM the cell state is the gated memory ``c``; simple recurrent
    cells contribute their squashed inner state and GRUs their hidden state,
    which doubles as the cell state. Gate activations are kept for LSTM
    layers only.
    """

    entries: list = field(default_factory=list)  # (layer_index, kind, cell, hidden, gates)

    def cell_states(self):
        """Cell-state arrays ``(batch, T, width)`` in layer order."""
        return [e[2] for e in self.entries]


def _check_finite(seq_out, layer_index, kind):
    if not np.all(np.isfinite(seq_out)):
        bad = np.argwhere(~np.isfinite(seq_out))
        t = int(bad[0][1]) if seq_out.ndim == 3 else int(bad[0][0])
        raise NumericError(f"non-finite activation in layer {layer_index} ({kind}) at increment {t}")


def _forward(config: NetworkConfig, params: list, X: np.ndarray, *,
             keep_caches: bool, trace: bool):
    X = np.asarray(X, dtype=config.np_dtype)
    if X.ndim != 3:
        raise UsageError(f"X must be (batch, T, input_dim), got shape {X.shape}")
    if X.shape[-1] != config.input_dim:
        raise UsageError(f"X has {X.shape[-1]} channels, config expects {config.input_dim}")
    if len(params) != len(config.layers):
        raise UsageError(f"{len(params)} parameter sets for {len(config.layers)} layers")

    caches = []
    cell_trace = CellTrace() if trace else None
    out = X
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for i, (spec, p) in enumerate(zip(config.layers, params)):
            if spec.kind in DENSE_KINDS:
                out, cache = _dense_layer_forward(out, p, spec.activation)
            elif spec.kind == "simple_rnn":
                out, cache = _simple_rnn_layer_forward(out, p, spec.activation)
                if trace:
                    cell_trace.entries.append((i, spec.kind, cache[1], out, None))
            elif spec.kind == "lstm":
                out, cache = _lstm_layer_forward(out, p)
                if trace:
                    cell_trace.entries.append((i, spec.kind, cache[1], out, cache[2]))
            else:
                out, cache = _gru_layer_forward(out, p)
                if trace:
                    cell_trace.entries.append((i, spec.kind, out, out, None))
            _check_finite(out, i, spec.kind)
            if keep_caches:
                caches.append(cache)
    return out, caches, cell_trace


def forward_sequence(config: NetworkConfig, params: list, X: np.ndarray, trace: bool = False):
    """Evaluate the network on a batch of sequences.

    Returns ``(Yhat, CellTrace or None)`` with ``Yhat`` shaped
    ``(batch, T, output_dim)``.
    """
    out, _, cell_trace = _forward(config, params, X, keep_caches=False, trace=trace)
    return out, cell_trace


def mse_loss(yhat: np.ndarray, y: np.ndarray) -> float:
    """Mean squared error over batch, increments, and channels."""
    if yhat.shape != y.shape:
        raise UsageError(f"shape mismatch: predictions {yhat.shape} vs targets {y.shape}")
    with np.errstate(over="ignore"):
        diff = yhat - y
        return float(np.mean(diff * diff))


def loss_and_gradients(config: NetworkConfig, params: list, X: np.ndarray, Y: np.ndarray):
    """MSE loss plus its gradient with respect to every parameter tensor."""
    Y = np.asarray(Y, dtype=config.np_dtype)
    yhat, caches, _ = _forward(config, params, X, keep_caches=True, trace=False)
    if yhat.shape != Y.shape:
        raise UsageError(f"shape mismatch: predictions {yhat.shape} vs targets {Y.shape}")
    with np.errstate(over="ignore"):
        diff = yhat - Y
        loss = float(np.mean(diff * diff))

    grads = [None] * len(params)
    dA = (2.0 / diff.size) * diff
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for i in range(len(params) - 1, -1, -1):
            spec, p, cache = config.layers[i], params[i], caches[i]
            d_in = config.input_dim if i == 0 else config.layers[i - 1].width
            if spec.kind in DENSE_KINDS:
                dA, g = _dense_layer_backward(dA, cache, p, spec.activation)
            elif spec.kind == "simple_rnn":
                dA, g = _simple_rnn_layer_backward(dA, cache, p, spec.activation, d_in)
            elif spec.kind == "lstm":
                dA, g = _lstm_layer_backward(dA, cache, p, d_in)
            else:
                dA, g = _gru_layer_backward(dA, cache, p, d_in)
            grads[i] = g
    return loss, grads, yhat


def backward(config: NetworkConfig, params: list, X: np.ndarray, Y: np.ndarray) -> list:
    """Gradient of the MSE loss with respect to every parameter tensor."""
    _, grads, _ = loss_and_gradients(config, params, X, Y)
    return grads
