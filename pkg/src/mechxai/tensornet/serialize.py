"""Model persistence: a JSON manifest plus one raw float buffer per tensor.

The manifest lists the layer chain, precision, optional normalization
statistics and seed, and a table of tensor entries (layer index, name,
shape, dtype, byte offset). ``weights.bin`` concatenates every tensor's
little-endian bytes in manifest order, so a round trip reproduces forward
outputs bit for bit.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from ..errors import UsageError
from .network import LayerSpec, Model, NetworkConfig, flatten_params

__all__ = ["save_model", "load_model", "MODEL_MANIFEST_NAME", "MODEL_WEIGHTS_NAME"]

MODEL_MANIFEST_NAME = "model.json"
MODEL_WEIGHTS_NAME = "weights.bin"

_LE_DTYPES = {"f32": "<f4", "f64": "<f8"}


def save_model(model: Model, directory) -> dict:
    """Write ``model.json`` and ``weights.bin`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config = model.config
    le_dtype = _LE_DTYPES[config.dtype]

    tensors = []
    chunks = []
    offset = 0
    for i, name, arr in flatten_params(config, model.params):
        raw = np.ascontiguousarray(arr, dtype=le_dtype).tobytes()
        tensors.append({"layer": i, "name": name, "shape": list(arr.shape),
                        "dtype": le_dtype, "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)

    manifest = {
        "format": "mechxai-model/1",
        "precision": config.dtype,
        "input_dim": config.input_dim,
        "layers": [{"kind": s.kind, "width": s.width, "activation": s.activation}
                   for s in config.layers],
        "normalization": model.normalization,
        "seed": model.seed,
        "tensors": tensors,
    }
    for name, payload in ((MODEL_MANIFEST_NAME, json.dumps(manifest, indent=2,
                                                           sort_keys=True).encode()),
                          (MODEL_WEIGHTS_NAME, b"".join(chunks))):
        tmp = directory / (name + ".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, directory / name)
    return manifest


def load_model(directory) -> Model:
    """Rebuild a :class:`Model` from a manifest directory."""
    directory = Path(directory)
    manifest = json.loads((directory / MODEL_MANIFEST_NAME).read_text())
    if manifest.get("format") != "mechxai-model/1":
        raise UsageError(f"unrecognized model format in {directory}")
    config = NetworkConfig(
        input_dim=manifest["input_dim"],
        layers=tuple(LayerSpec(d["kind"], d["width"], d["activation"])
                     for d in manifest["layers"]),
        dtype=manifest["precision"],
    )
    raw = (directory / MODEL_WEIGHTS_NAME).read_bytes()
    params = [{} for _ in config.layers]
    for entry in manifest["tensors"]:
        start, n = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(raw[start:start + n], dtype=entry["dtype"])
        arr = arr.reshape(entry["shape"]).astype(config.np_dtype)
        params[entry["layer"]][entry["name"]] = arr
    return Model(config=config, params=params,
                 normalization=manifest.get("normalization"), seed=manifest.get("seed"))
