"""Command-line pipeline: generate, search, train, explain, report.

Every command works inside a run directory (``--out``, defaulting to the
``MECHXAI_OUT`` environment variable or ``./mechxai-run``):

* ``generate`` writes ``dataset/arrays.bin`` (raw little-endian float
  buffers, one section per array) plus ``dataset/metadata.json`` with the
  split indices, normalization statistics, and array schema,
* ``search`` streams a Hyperband trial ledger to ``search/ledger.jsonl``
  (resumable) and records the winner in ``search/best.json``,
* ``train`` serializes the model under ``model/`` along with per-epoch
  loss curves (CSV) and a training report,
* ``explain`` writes ``explain/explanation.json`` and a plot-ready
  ``explain/series.csv`` for one test sample,
* ``report`` verifies artifact digests and emits ``report.md``.

A ``manifest.json`` in the run directory tracks the SHA-256 digest of every
artifact; commands verify the digests of their inputs before doing work.

Exit codes: 0 success, 1 validation or usage error, 2 numeric failure
(divergence, failed search), 3 integrity failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, constitutive, hypersearch, loadgen, tensornet, xai
from .errors import (
    DomainError,
    IntegrityError,
    MechxaiError,
    NumericError,
    UsageError,
    ValidationError,
)

__all__ = ["main", "resolve_config", "cmd_generate", "cmd_search", "cmd_train",
           "cmd_explain", "cmd_report", "DatasetFiles"]

MANIFEST_NAME = "manifest.json"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_INTEGRITY = 3


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_MATERIAL_DEFAULTS = {
    "hyperelastic": {"mu": 1.0},
    "elastoplastic": {"e_mod": 1.0, "sigma_y": 0.6, "k_iso": 0.0, "h_kin": 0.0},
    "viscoelastic": {"e_inf": 1.0, "e_branch": 0.5, "tau_branch": 0.1667},
}

_DEFAULT_CONFIG = {
    "model_kind": "hyperelastic",
    "material": {},
    "sequence": {"seq_len": 200, "phases": 5, "total_time": 1.0},
    "dataset": {"m_total": 512, "seed": 0},
    "network": {"mode": "dense", "depth": 3, "width": 32, "activation": "rect",
                "cell_type": None},
    "training": {"epochs": 300, "batch_size": 64, "learning_rate": 3e-3,
                 "precision": "f32", "seed": 0},
    "search": {"max_epochs": 9, "eta": 3.0, "seed": 0,
               "early_stop": {"window": 5, "patience": 10, "min_rel_improvement": 1e-3},
               "domain": {}},
    "workers": 1,
}

_DOMAIN_KEYS = ("widths", "depths", "learning_rates", "batch_sizes",
                "activations", "cell_types")


def _check_keys(section: dict, allowed, path: str, violations: list):
    for key in section:
        if key not in allowed:
            violations.append(f"unknown key {path}{key!r}")


def resolve_config(user: dict) -> dict:
    """Expand defaults and validate; collects every violation before raising."""
    violations = []
    if not isinstance(user, dict):
        raise ValidationError(["configuration must be a JSON object"])
    cfg = copy.deepcopy(_DEFAULT_CONFIG)
    _check_keys(user, cfg, "", violations)

    kind = user.get("model_kind", cfg["model_kind"])
    if kind not in constitutive.MODEL_KINDS:
        violations.append(f"model_kind must be one of {constitutive.MODEL_KINDS}, got {kind!r}")
        kind = cfg["model_kind"]
    cfg["model_kind"] = kind
    cfg["material"] = dict(_MATERIAL_DEFAULTS[kind])

    for section in ("material", "sequence", "dataset", "network", "training", "search"):
        sub = user.get(section, {})
        if not isinstance(sub, dict):
            violations.append(f"{section} must be an object")
            continue
        allowed = set(cfg[section]) | ({"mode"} if section == "search" else set())
        _check_keys(sub, allowed, f"{section}.", violations)
        for key, value in sub.items():
            if key in allowed:
                cfg[section][key] = value
    if "workers" in user:
        cfg["workers"] = user["workers"]

    es = cfg["search"].get("early_stop")
    if isinstance(es, dict):
        _check_keys(es, ("window", "patience", "min_rel_improvement"), "search.early_stop.",
                    violations)
    else:
        violations.append("search.early_stop must be an object")
    dom = cfg["search"].get("domain")
    if isinstance(dom, dict):
        _check_keys(dom, _DOMAIN_KEYS, "search.domain.", violations)
    else:
        violations.append("search.domain must be an object")

    def positive_int(path, value):
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            violations.append(f"{path} must be a positive integer, got {value!r}")

    positive_int("sequence.seq_len", cfg["sequence"]["seq_len"])
    positive_int("sequence.phases", cfg["sequence"]["phases"])
    positive_int("dataset.m_total", cfg["dataset"]["m_total"])
    positive_int("network.depth", cfg["network"]["depth"])
    positive_int("network.width", cfg["network"]["width"])
    positive_int("training.batch_size", cfg["training"]["batch_size"])
    positive_int("workers", cfg["workers"])
    if not isinstance(cfg["training"]["epochs"], int) or cfg["training"]["epochs"] < 0:
        violations.append(f"training.epochs must be a non-negative integer, "
                          f"got {cfg['training']['epochs']!r}")
    if cfg["training"]["precision"] not in ("f32", "f64"):
        violations.append(f"training.precision must be 'f32' or 'f64', "
                          f"got {cfg['training']['precision']!r}")
    if cfg["network"]["mode"] not in ("dense", "recurrent"):
        violations.append(f"network.mode must be 'dense' or 'recurrent', "
                          f"got {cfg['network']['mode']!r}")
    elif cfg["network"]["mode"] == "recurrent" and not cfg["network"]["cell_type"]:
        violations.append("network.cell_type is required in recurrent mode")
    if not (isinstance(cfg["search"]["eta"], (int, float)) and cfg["search"]["eta"] > 1):
        violations.append(f"search.eta must exceed 1, got {cfg['search']['eta']!r}")

    if violations:
        raise ValidationError(violations)
    return cfg


def _apply_overrides(cfg: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        cfg["dataset"]["seed"] = args.seed
        cfg["training"]["seed"] = args.seed
        cfg["search"]["seed"] = args.seed
    if getattr(args, "precision", None):
        cfg["training"]["precision"] = args.precision
    if getattr(args, "workers", None):
        cfg["workers"] = args.workers
    return cfg


def _load_config(path) -> dict:
    if path is None:
        return resolve_config({})
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ValidationError([f"config is not valid JSON: {err}"])
    return resolve_config(raw)


# ---------------------------------------------------------------------------
# Files, digests, and the run manifest
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _atomic_write_bytes(path: Path, payload: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, payload: str):
    _atomic_write_bytes(path, payload.encode())


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _record_artifacts(run_dir: Path, paths):
    """Register freshly written files in the run manifest."""
    manifest_path = run_dir / MANIFEST_NAME
    manifest = {"tool": "mechxai", "version": __version__, "artifacts": {}}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
    manifest["version"] = __version__
    for path in paths:
        rel = str(Path(path).relative_to(run_dir))
        manifest["artifacts"][rel] = {
            "sha256": _sha256(Path(path)),
            "bytes": Path(path).stat().st_size,
            "recorded": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
    resolved = manifest["artifacts"].get("config.resolved.json")
    if resolved:
        manifest["config_digest"] = resolved["sha256"]
    _atomic_write_text(manifest_path, _json_dumps(manifest))


def _verify_artifacts(run_dir: Path, prefix: str = ""):
    """Check recorded digests; only entries under ``prefix`` are verified."""
    manifest_path = run_dir / MANIFEST_NAME
    if not manifest_path.exists():
        return {}
    manifest = json.loads(manifest_path.read_text())
    for rel, entry in manifest.get("artifacts", {}).items():
        if not rel.startswith(prefix):
            continue
        path = run_dir / rel
        if not path.exists():
            raise IntegrityError(f"artifact {rel} is listed in the manifest but missing")
        if _sha256(path) != entry["sha256"]:
            raise IntegrityError(f"artifact {rel} does not match its recorded digest")
    return manifest.get("artifacts", {})


def _write_resolved_config(run_dir: Path, cfg: dict) -> Path:
    path = run_dir / "config.resolved.json"
    _atomic_write_text(path, _json_dumps(cfg))
    return path


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------

class DatasetFiles:
    """On-disk dataset: raw array sections plus a JSON schema/metadata file."""

    def __init__(self, meta: dict, arrays: dict):
        self.meta = meta
        self.arrays = arrays  # name -> ndarray

    @property
    def inputs(self) -> np.ndarray:
        return self.arrays["inputs"]

    @property
    def targets(self) -> np.ndarray:
        return self.arrays["targets"]

    def split_indices(self, split: str) -> np.ndarray:
        return np.asarray(self.meta["split"][split], dtype=int)

    def split_arrays(self, split: str, standardized: bool = True):
        idx = self.split_indices(split)
        x = self.inputs[idx]
        y = self.targets[idx]
        if standardized:
            ns = self.meta["normalization"]
            x = loadgen.standardize(x, np.asarray(ns["input_mean"]), np.asarray(ns["input_std"]))
            y = loadgen.standardize(y, np.asarray(ns["target_mean"]), np.asarray(ns["target_std"]))
        return x, y

    def record(self, index: int) -> constitutive.MaterialRecord:
        histories = {name: self.arrays["histories"][index, :, j]
                     for j, name in enumerate(self.meta["history_names"])}
        return constitutive.MaterialRecord(
            model_kind=self.meta["model_kind"], driving=None,
            inputs=self.inputs[index], targets=self.targets[index],
            target_names=tuple(self.meta["target_names"]), histories=histories)


def _write_dataset(run_dir: Path, dataset: loadgen.Dataset, cfg: dict):
    x, y = dataset.stacked()
    hist_names = list(dataset.history_names)
    if hist_names:
        h = np.stack([np.stack([r.histories[n] for n in hist_names], axis=1)
                      for r in dataset.records])
    else:
        h = np.zeros((len(dataset.records), x.shape[1], 0))

    sections = []
    chunks = []
    offset = 0
    for name, arr in (("inputs", x), ("targets", y), ("histories", h)):
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        sections.append({"name": name, "dtype": "<f8", "shape": list(arr.shape),
                         "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)

    meta = {
        "model_kind": dataset.spec.model_kind,
        "material": cfg["material"],
        "sequence": {"seq_len": dataset.spec.seq_len, "phases": dataset.spec.phases,
                     "total_time": dataset.spec.total_time,
                     "ramp_palette": list(dataset.spec.ramp_palette),
                     "dt": dataset.spec.dt},
        "m_total": len(dataset.records),
        "seed": dataset.spec.seed,
        "split": {k: [int(i) for i in v] for k, v in dataset.split.items()},
        "normalization": dataset.normalization.to_dict(),
        "target_names": list(dataset.target_names),
        "history_names": hist_names,
        "ramp_kinds": [list(r.driving.ramp_kinds) for r in dataset.records],
        "phase_boundaries": [int(b) for b in dataset.records[0].driving.phase_boundaries],
        "arrays": sections,
    }
    ds_dir = run_dir / "dataset"
    _atomic_write_bytes(ds_dir / "arrays.bin", b"".join(chunks))
    _atomic_write_text(ds_dir / "metadata.json", _json_dumps(meta))
    return [ds_dir / "arrays.bin", ds_dir / "metadata.json"]


def _load_dataset(run_dir: Path) -> DatasetFiles:
    ds_dir = run_dir / "dataset"
    meta_path = ds_dir / "metadata.json"
    if not meta_path.exists():
        raise UsageError(f"no dataset found under {ds_dir}; run 'generate' first")
    _verify_artifacts(run_dir, prefix="dataset/")
    meta = json.loads(meta_path.read_text())
    raw = (ds_dir / "arrays.bin").read_bytes()
    arrays = {}
    for section in meta["arrays"]:
        start, n = section["offset"], section["nbytes"]
        arr = np.frombuffer(raw[start:start + n], dtype=section["dtype"])
        arrays[section["name"]] = arr.reshape(section["shape"]).copy()
    return DatasetFiles(meta, arrays)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _material_params(cfg: dict):
    kind = cfg["model_kind"]
    m = cfg["material"]
    if kind == "hyperelastic":
        return constitutive.NeoHookeParams(**m)
    if kind == "elastoplastic":
        return constitutive.PrandtlReussParams(**m)
    return constitutive.PoyntingThomsonParams(**m)


def _sequence_spec(cfg: dict) -> loadgen.SequenceSpec:
    seq = cfg["sequence"]
    return loadgen.SequenceSpec(seq_len=seq["seq_len"], phases=seq["phases"],
                                model_kind=cfg["model_kind"], seed=cfg["dataset"]["seed"],
                                total_time=seq["total_time"])


def cmd_generate(cfg: dict, run_dir: Path) -> int:
    """Generate the dataset and persist it with its metadata."""
    spec = _sequence_spec(cfg)
    dataset = loadgen.generate_dataset(spec, _material_params(cfg), cfg["dataset"]["m_total"])
    written = _write_dataset(run_dir, dataset, cfg)
    written.append(_write_resolved_config(run_dir, cfg))
    _record_artifacts(run_dir, written)
    sizes = {k: len(v) for k, v in dataset.split.items()}
    print(f"generated {cfg['dataset']['m_total']} {cfg['model_kind']} records "
          f"(split {sizes['train']}/{sizes['valid']}/{sizes['test']}) -> {run_dir / 'dataset'}")
    return EXIT_OK


def _search_domain(cfg: dict) -> hypersearch.SearchDomain:
    mode = cfg["search"].get("mode") or cfg["network"]["mode"]
    overrides = {k: tuple(v) for k, v in cfg["search"]["domain"].items()}
    return hypersearch.SearchDomain(mode=mode, **overrides)


def cmd_search(cfg: dict, run_dir: Path) -> int:
    """Hyperband search over the configured domain; resumable from its ledger."""
    dataset = _load_dataset(run_dir)
    xt, yt = dataset.split_arrays("train")
    xv, yv = dataset.split_arrays("valid")
    domain = _search_domain(cfg)
    es = cfg["search"]["early_stop"]
    policy = hypersearch.EarlyStopPolicy(window=es["window"], patience=es["patience"],
                                         min_rel_improvement=es["min_rel_improvement"])
    trainer = hypersearch.make_network_trainer(
        (xt, yt, xv, yv), input_dim=xt.shape[-1], output_dim=yt.shape[-1],
        dtype=cfg["training"]["precision"], early_stop=policy)
    store = hypersearch.SearchStore(run_dir / "search")
    result = hypersearch.hyperband_search(domain, cfg["search"]["max_epochs"],
                                          cfg["search"]["eta"], trainer,
                                          seed=cfg["search"]["seed"], store=store,
                                          workers=cfg["workers"])

    best = {"status": result.status,
            "config": result.best_config.to_dict() if result.best_config else None,
            "final_validation_mse": (result.best_record.final_validation_mse
                                     if result.best_record else None),
            "trials": len(result.trials)}
    best_path = run_dir / "search" / "best.json"
    _atomic_write_text(best_path, _json_dumps(best))
    written = [best_path, store.ledger_path(), _write_resolved_config(run_dir, cfg)]
    _record_artifacts(run_dir, written)
    if result.status != "ok":
        print("search failed: every trial diverged", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"search finished: {len(result.trials)} trials, best validation MSE "
          f"{result.best_record.final_validation_mse:.3e} -> {best_path}")
    return EXIT_OK


def _network_config_for_training(cfg: dict, run_dir: Path, input_dim: int, output_dim: int):
    """Architecture from the search winner when present, else from the config."""
    best_path = run_dir / "search" / "best.json"
    train_cfg = dict(cfg["training"])
    if best_path.exists():
        best = json.loads(best_path.read_text())
        if best.get("config"):
            hc = hypersearch.HyperConfig.from_dict(best["config"])
            net = hc.to_network_config(input_dim, output_dim, cfg["training"]["precision"])
            train_cfg["learning_rate"] = hc.learning_rate
            train_cfg["batch_size"] = hc.batch_size
            return net, train_cfg, f"search winner (draw {hc.draw_index})"
    n = cfg["network"]
    net = tensornet.build_config(n["mode"], n["depth"], n["width"], input_dim=input_dim,
                                 output_dim=output_dim, activation=n["activation"],
                                 cell_type=n["cell_type"], dtype=cfg["training"]["precision"])
    return net, train_cfg, "explicit network config"


def cmd_train(cfg: dict, run_dir: Path) -> int:
    """Train the configured (or searched) network for the full epoch budget."""
    dataset = _load_dataset(run_dir)
    xt, yt = dataset.split_arrays("train")
    xv, yv = dataset.split_arrays("valid")
    xs, ys = dataset.split_arrays("test")
    net, train_cfg, source = _network_config_for_training(cfg, run_dir, xt.shape[-1], yt.shape[-1])

    params = tensornet.init_params(net, np.random.default_rng(train_cfg["seed"]))
    state = tensornet.train(net, params,
                            (xt, yt, xv, yv),
                            tensornet.TrainConfig(epochs=train_cfg["epochs"],
                                                  batch_size=train_cfg["batch_size"],
                                                  learning_rate=train_cfg["learning_rate"],
                                                  seed=train_cfg["seed"]))

    report = {
        "network_source": source,
        "layers": [{"kind": s.kind, "width": s.width, "activation": s.activation}
                   for s in net.layers],
        "precision": net.dtype,
        "seed": train_cfg["seed"],
        "batch_size": train_cfg["batch_size"],
        "learning_rate": train_cfg["learning_rate"],
        "epochs_done": state.epochs_done,
        "status": state.status,
        "train_mse": state.history.train_mse[-1] if state.history.train_mse else None,
        "valid_mse": state.history.valid_mse[-1] if state.history.valid_mse else None,
        "test_mse": None,
    }
    curves = "epoch,train_mse,valid_mse\n" + "\n".join(
        f"{e + 1},{tr!r},{va!r}" for e, (tr, va) in
        enumerate(zip(state.history.train_mse, state.history.valid_mse)))

    written = [_write_resolved_config(run_dir, cfg)]
    if state.status == "diverged":
        _atomic_write_text(run_dir / "model" / "training_report.json", _json_dumps(report))
        _atomic_write_text(run_dir / "model" / "curves.csv", curves + "\n")
        _record_artifacts(run_dir, written + [run_dir / "model" / "training_report.json",
                                              run_dir / "model" / "curves.csv"])
        print("training diverged; partial history persisted", file=sys.stderr)
        return EXIT_NUMERIC

    yhat, _ = tensornet.forward_sequence(net, state.params, xs)
    report["test_mse"] = tensornet.mse_loss(yhat, ys.astype(net.np_dtype))

    model = tensornet.Model(config=net, params=state.params,
                            normalization=dataset.meta["normalization"],
                            seed=train_cfg["seed"])
    tensornet.save_model(model, run_dir / "model")
    _atomic_write_text(run_dir / "model" / "training_report.json", _json_dumps(report))
    _atomic_write_text(run_dir / "model" / "curves.csv", curves + "\n")
    written += [run_dir / "model" / tensornet.serialize.MODEL_MANIFEST_NAME,
                run_dir / "model" / tensornet.serialize.MODEL_WEIGHTS_NAME,
                run_dir / "model" / "training_report.json",
                run_dir / "model" / "curves.csv"]
    _record_artifacts(run_dir, written)
    print(f"trained {source} for {state.epochs_done} epochs: train "
          f"{report['train_mse']:.3e}, valid {report['valid_mse']:.3e}, "
          f"test {report['test_mse']:.3e} -> {run_dir / 'model'}")
    return EXIT_OK


def cmd_explain(cfg: dict, run_dir: Path, sample: int = 0) -> int:
    """Explain one test-split sample of the trained recurrent model."""
    dataset = _load_dataset(run_dir)
    _verify_artifacts(run_dir, prefix="model/")
    model_dir = run_dir / "model"
    if not (model_dir / tensornet.serialize.MODEL_MANIFEST_NAME).exists():
        raise UsageError(f"no model found under {model_dir}; run 'train' first")
    model = tensornet.load_model(model_dir)

    test_idx = dataset.split_indices("test")
    if not 0 <= sample < len(test_idx):
        raise UsageError(f"sample index {sample} out of range for the test split "
                         f"(size {len(test_idx)})")
    record_index = int(test_idx[sample])
    record = dataset.record(record_index)

    model_ref = _sha256(model_dir / tensornet.serialize.MODEL_WEIGHTS_NAME)
    report = xai.explain(model, record, sample_id=f"test[{sample}] (record {record_index})",
                         model_ref=model_ref)

    # physical-space predictions for the plot-ready series
    ns = model.normalization
    x_std = loadgen.standardize(record.inputs, np.asarray(ns["input_mean"]),
                                np.asarray(ns["input_std"]))
    yhat_std, _ = tensornet.forward_sequence(model.config, model.params, x_std[None])
    yhat = loadgen.destandardize(yhat_std[0].astype(np.float64),
                                 np.asarray(ns["target_mean"]), np.asarray(ns["target_std"]))

    columns = {"increment": np.arange(1, record.inputs.shape[0] + 1), "input": record.inputs[:, 0]}
    for j, name in enumerate(record.target_names):
        columns[f"ref_{name}"] = record.targets[:, j]
        columns[f"pred_{name}"] = yhat[:, j]
    for name, series in record.histories.items():
        columns[f"hist_{name}"] = np.asarray(series)
    for label, series in report.component_scores.items():
        columns[f"pc{label}_score"] = np.asarray(series)

    header = ",".join(columns)
    rows = np.column_stack(list(columns.values()))
    csv = header + "\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in rows)

    ex_dir = run_dir / "explain"
    _atomic_write_text(ex_dir / "explanation.json", _json_dumps(report.to_dict()))
    _atomic_write_text(ex_dir / "series.csv", csv + "\n")
    written = [ex_dir / "explanation.json", ex_dir / "series.csv",
               _write_resolved_config(run_dir, cfg)]
    _record_artifacts(run_dir, written)

    best = {name: report.best_alignment(name) for name in record.histories}
    summary = ", ".join(f"{n}: |r|={abs(a.r):.3f} (pc{a.component})"
                        for n, a in best.items() if a is not None) or "all components degenerate"
    print(f"explained {report.sample_id}: {summary} -> {ex_dir}")
    return EXIT_OK


def _fmt(value, spec=".3e"):
    return format(value, spec) if isinstance(value, (int, float)) and value is not None else "n/a"


def cmd_report(run_dir: Path) -> int:
    """Aggregate a human-readable summary; verifies every recorded digest."""
    artifacts = _verify_artifacts(run_dir)
    lines = [f"# Run report: {run_dir.name}", ""]

    meta_path = run_dir / "dataset" / "metadata.json"
    lines.append("## Dataset")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        sizes = {k: len(v) for k, v in meta["split"].items()}
        lines += [
            f"- model kind: {meta['model_kind']}",
            f"- records: {meta['m_total']} (T = {meta['sequence']['seq_len']}, "
            f"{meta['sequence']['phases']} phases)",
            f"- split: {sizes['train']}/{sizes['valid']}/{sizes['test']}",
            f"- targets: {', '.join(meta['target_names'])}",
            f"- histories: {', '.join(meta['history_names']) or 'none'}",
        ]
    else:
        lines.append("- absent")
    lines.append("")

    lines.append("## Search")
    ledger_path = run_dir / "search" / "ledger.jsonl"
    if ledger_path.exists():
        records = [json.loads(line) for line in ledger_path.read_text().splitlines() if line.strip()]
        latest = {}
        for rec in records:
            key = rec["trial"]
            if key not in latest or rec["round"] > latest[key]["round"]:
                latest[key] = rec
        ranked = sorted(latest.values(), key=lambda r: (r["final_validation_mse"], r["trial"]))
        lines.append(f"- trial rounds recorded: {len(records)} ({len(latest)} trials)")
        lines.append("- top 5 by validation MSE:")
        for rec in ranked[:5]:
            c = rec["config"]
            arch = c["activation"] if c["mode"] == "dense" else c["cell_type"]
            lines.append(f"    {rec['final_validation_mse']:.3e}  trial {rec['trial']} "
                         f"({c['mode']}, depth {c['depth']}, width {c['width']}, {arch}, "
                         f"lr {c['learning_rate']}, batch {c['batch_size']}, "
                         f"{rec['epochs_completed']} epochs, {rec['status']})")
    else:
        lines.append("- absent")
    lines.append("")

    lines.append("## Training")
    report_path = run_dir / "model" / "training_report.json"
    if report_path.exists():
        tr = json.loads(report_path.read_text())
        arch = " -> ".join(f"{s['kind']}({s['width']})" for s in tr["layers"])
        lines += [
            f"- network: {arch} [{tr['network_source']}]",
            f"- epochs: {tr['epochs_done']} (status {tr['status']}, seed {tr['seed']}, "
            f"lr {tr['learning_rate']}, batch {tr['batch_size']}, {tr['precision']})",
            f"- final MSE: train {_fmt(tr['train_mse'])}, valid {_fmt(tr['valid_mse'])}, "
            f"test {_fmt(tr['test_mse'])}",
        ]
    else:
        lines.append("- absent")
    lines.append("")

    lines.append("## Explanation")
    ex_path = run_dir / "explain" / "explanation.json"
    if ex_path.exists():
        ex = xai.ExplanationReport.from_dict(json.loads(ex_path.read_text()))
        lines.append(f"- sample: {ex.sample_id}")
        top = ex.importance_linear[:3]
        lines.append(f"- top-3 linear importance: {', '.join(f'{v:.3f}' for v in top)} "
                     f"(sum {sum(top):.3f})")
        history_names = sorted({a.history for a in ex.alignment})
        for name in history_names:
            best = ex.best_alignment(name)
            if best is not None:
                lines.append(f"- best alignment for {name}: |r| = {abs(best.r):.4f} "
                             f"(component {best.component}, slope {best.slope:.3e})")
        if not ex.alignment:
            lines.append("- alignment table empty (degenerate cell states)")
    else:
        lines.append("- absent")
    lines.append("")

    lines.append(f"## Artifacts ({len(artifacts)} verified)")
    for rel in sorted(artifacts):
        lines.append(f"- {rel}  sha256:{artifacts[rel]['sha256'][:12]}")

    _atomic_write_text(run_dir / "report.md", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mechxai",
        description="Constitutive-model datasets, network training, Hyperband search, "
                    "and cell-state explanation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (("generate", "generate a dataset"),
                       ("search", "run or resume a Hyperband search"),
                       ("train", "train a network for the full epoch budget"),
                       ("explain", "explain one test sample of a trained recurrent model"),
                       ("report", "verify artifacts and summarize a run directory")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--out", type=Path, default=None,
                       help="run directory (default: $MECHXAI_OUT or ./mechxai-run)")
        if name != "report":
            p.add_argument("--config", type=Path, default=None, help="experiment config (JSON)")
            p.add_argument("--seed", type=int, default=None,
                           help="override dataset/training/search seeds")
            p.add_argument("--workers", type=int, default=None, help="worker threads for search")
            p.add_argument("--precision", choices=("f32", "f64"), default=None)
        if name == "explain":
            p.add_argument("--sample", type=int, default=0,
                           help="index into the test split (default 0)")
    return parser


def _run(args) -> int:
    run_dir = args.out or Path(os.environ.get("MECHXAI_OUT", "mechxai-run"))
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    if args.command == "report":
        return cmd_report(run_dir)
    cfg = _apply_overrides(_load_config(args.config), args)
    if args.command == "generate":
        return cmd_generate(cfg, run_dir)
    if args.command == "search":
        return cmd_search(cfg, run_dir)
    if args.command == "train":
        return cmd_train(cfg, run_dir)
    return cmd_explain(cfg, run_dir, sample=args.sample)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except IntegrityError as err:
        print(f"integrity error: {err}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (NumericError,) as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, UsageError, DomainError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except MechxaiError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
