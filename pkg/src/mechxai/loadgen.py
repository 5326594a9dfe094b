"""Randomized loading sequences and train/validation/test datasets.

A loading sequence is built from normally distributed control values joined
by ramp segments. Each sequence has a fixed number of phases; within a phase
the signal moves from the previous level to the next control value along a
ramp shape sampled from the palette legal for the material kind:

* hyperelastic: linear ramps only, controls mapped into stretch space,
* elastoplastic: linear, quadratic, square-root, exponential, sine, and
  half-sine ramps,
* viscoelastic: linear ramps and constant (hold) phases.

Randomness is drawn from numpy's counter-based Philox generator. Record
``i`` of a dataset uses the substream seeded by ``(seed, 2, i)`` and the
split permutation uses ``(seed, 1)``, so generation is reproducible and can
be parallelized across records without changing the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import constitutive
from .errors import DomainError, UsageError

__all__ = [
    "RAMP_KINDS",
    "LEGAL_RAMPS",
    "SequenceSpec",
    "LoadingSequence",
    "NormalizationStats",
    "Dataset",
    "ramp_value",
    "sample_controls",
    "sample_ramp_kinds",
    "assemble_sequence",
    "generate_record",
    "generate_dataset",
    "standardize",
    "destandardize",
]

STRETCH_MIN = 0.2
STRETCH_MAX = 3.0

LEGAL_RAMPS = {
    "hyperelastic": ("linear",),
    "elastoplastic": ("linear", "quadratic", "sqrt", "exponential", "sine", "half_sine"),
    "viscoelastic": ("linear", "constant"),
}

_RAMP_FUNCS = {
    "linear": lambda u: u,
    "quadratic": lambda u: u**2,
    "sqrt": lambda u: np.sqrt(u),
    "exponential": lambda u: np.expm1(u) / np.expm1(1.0),
    "sine": lambda u: 0.5 * (1.0 - np.cos(np.pi * u)),
    "half_sine": lambda u: np.sin(0.5 * np.pi * u),
    "constant": lambda u: np.zeros_like(u),
}

RAMP_KINDS = tuple(_RAMP_FUNCS)


@dataclass(frozen=True)
class SequenceSpec:
    """Shape of the loading sequences of one dataset."""

    seq_len: int = 200
    phases: int = 5
    model_kind: str = "hyperelastic"
    ramp_palette: tuple = None
    seed: int = 0
    total_time: float = 1.0

    def __post_init__(self):
        if self.model_kind not in constitutive.MODEL_KINDS:
            raise UsageError(f"unknown model kind {self.model_kind!r}")
        if self.seq_len < self.phases or self.phases < 1:
            raise UsageError(f"need seq_len >= phases >= 1, got {self.seq_len}, {self.phases}")
        if self.ramp_palette is None:
            object.__setattr__(self, "ramp_palette", LEGAL_RAMPS[self.model_kind])
        else:
            object.__setattr__(self, "ramp_palette", tuple(self.ramp_palette))
        if not self.ramp_palette:
            raise UsageError("ramp palette must not be empty")
        illegal = [k for k in self.ramp_palette if k not in LEGAL_RAMPS[self.model_kind]]
        if illegal:
            raise UsageError(f"ramp kinds {illegal} are not legal for {self.model_kind}")

    @property
    def dt(self) -> float:
        return self.total_time / self.seq_len

    def phase_lengths(self) -> np.ndarray:
        base = self.seq_len // self.phases
        lengths = np.full(self.phases, base, dtype=int)
        lengths[-1] += self.seq_len - base * self.phases  # remainder pads the last phase
        return lengths


@dataclass
class LoadingSequence:
    """A driving signal over ``seq_len`` increments plus phase metadata.

    ``phase_boundaries`` holds the end index (exclusive) of every phase and
    ``phase_levels`` the realized fence-post values: ``phase_levels[0]`` is
    the initial level, ``phase_levels[w + 1]`` the value reached at the end
    of phase ``w``. Consecutive phases share a fence post, so the underlying
    piecewise signal is continuous by construction.
    """

    values: np.ndarray
    dt: float
    phase_boundaries: np.ndarray
    ramp_kinds: tuple
    phase_levels: np.ndarray


def ramp_value(kind: str, u):
    """Evaluate a ramp shape on the normalized in-phase coordinate ``u``.

    Every kind maps 0 to 0 and 1 to 1 and is monotone non-decreasing, except
    ``constant`` which is identically 0 (hold at the previous level).
    """
    if kind not in _RAMP_FUNCS:
        raise UsageError(f"unknown ramp kind {kind!r}; expected one of {RAMP_KINDS}")
    uu = np.asarray(u, dtype=np.float64)
    if np.any(uu < 0) or np.any(uu > 1):
        raise DomainError(f"ramp coordinate must lie in [0, 1], got {u}")
    out = _RAMP_FUNCS[kind](uu)
    return out if uu.ndim else float(out)


def sample_controls(spec: SequenceSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw ``phases + 1`` i.i.d. standard-normal control values."""
    return rng.standard_normal(spec.phases + 1)


def sample_ramp_kinds(spec: SequenceSpec, rng: np.random.Generator) -> tuple:
    """Draw one ramp kind per phase, uniformly from the spec's palette."""
    idx = rng.integers(0, len(spec.ramp_palette), size=spec.phases)
    return tuple(spec.ramp_palette[i] for i in idx)


def _map_controls(controls: np.ndarray, model_kind: str) -> np.ndarray:
    """Pin the first control to the unloaded state and map to signal space.

    Every sequence starts undeformed (stretch 1, strain 0, or stress 0).
    Hyperelastic controls are mapped into stretch space via
    ``stretch = 1 + z`` clipped to [0.2, 3.0], which keeps the near-singular
    small-stretch regime reachable without ever crossing zero.
    """
    mapped = np.array(controls, dtype=np.float64)
    mapped[0] = 0.0
    if model_kind == "hyperelastic":
        mapped = np.clip(1.0 + mapped, STRETCH_MIN, STRETCH_MAX)
    return mapped


def assemble_sequence(controls, ramp_kinds, spec: SequenceSpec) -> LoadingSequence:
    """Interpolate control values into a full loading sequence.

    Within phase ``w`` the signal moves from the current level toward
    control ``w + 1`` along the phase's ramp; a ``constant`` phase holds the
    current level and skips its control, so the signal never jumps.
    """
    controls = np.asarray(controls, dtype=np.float64)
    ramp_kinds = tuple(ramp_kinds)
    if controls.shape != (spec.phases + 1,):
        raise UsageError(f"expected {spec.phases + 1} controls, got shape {controls.shape}")
    if len(ramp_kinds) != spec.phases:
        raise UsageError(f"expected {spec.phases} ramp kinds, got {len(ramp_kinds)}")

    mapped = _map_controls(controls, spec.model_kind)
    lengths = spec.phase_lengths()
    values = np.empty(spec.seq_len)
    levels = np.empty(spec.phases + 1)
    levels[0] = mapped[0]

    pos = 0
    level = mapped[0]
    for w, (kind, length) in enumerate(zip(ramp_kinds, lengths)):
        target = level if kind == "constant" else mapped[w + 1]
        u = np.arange(1, length + 1) / length
        values[pos:pos + length] = level + (target - level) * ramp_value(kind, u)
        values[pos + length - 1] = target  # exact fence post, no lerp round-off
        level = target
        levels[w + 1] = level
        pos += length

    if spec.model_kind == "hyperelastic":
        np.clip(values, STRETCH_MIN, STRETCH_MAX, out=values)

    boundaries = np.cumsum(lengths)
    return LoadingSequence(values=values, dt=spec.dt, phase_boundaries=boundaries,
                           ramp_kinds=ramp_kinds, phase_levels=levels)


def _record_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 2, index])))


def generate_record(spec: SequenceSpec, material_params, index: int,
                    seed: int | None = None) -> constitutive.MaterialRecord:
    """Generate record ``index`` of a dataset from its own RNG substream."""
    rng = _record_rng(spec.seed if seed is None else seed, index)
    controls = sample_controls(spec, rng)
    kinds = sample_ramp_kinds(spec, rng)
    driving = assemble_sequence(controls, kinds, spec)
    return constitutive.evaluate_sequence(spec.model_kind, material_params, driving)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

@dataclass
class NormalizationStats:
    """Per-channel mean and standard deviation from the training split.

    Channels with vanishing spread keep a unit divisor and are flagged.
    """

    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray
    degenerate_input: list = field(default_factory=list)
    degenerate_target: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "target_mean": self.target_mean.tolist(),
            "target_std": self.target_std.tolist(),
            "degenerate_input": list(self.degenerate_input),
            "degenerate_target": list(self.degenerate_target),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(
            input_mean=np.asarray(d["input_mean"], dtype=np.float64),
            input_std=np.asarray(d["input_std"], dtype=np.float64),
            target_mean=np.asarray(d["target_mean"], dtype=np.float64),
            target_std=np.asarray(d["target_std"], dtype=np.float64),
            degenerate_input=list(d.get("degenerate_input", [])),
            degenerate_target=list(d.get("degenerate_target", [])),
        )


def standardize(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Center and scale per channel; degenerate channels divide by 1."""
    divisor = np.where(std > 0, std, 1.0)
    return (x - mean) / divisor


def destandardize(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`standardize`."""
    divisor = np.where(std > 0, std, 1.0)
    return x * divisor + mean


def _channel_stats(data: np.ndarray):
    # data shaped (samples, T, channels); statistics over all increments
    mean = data.mean(axis=(0, 1))
    std = data.std(axis=(0, 1))
    degenerate = [int(i) for i in np.where(std == 0)[0]]
    return mean, std, degenerate


@dataclass
class Dataset:
    """A generated corpus with split indices and normalization statistics."""

    spec: SequenceSpec
    material_params: object
    records: list
    split: dict  # {"train": indices, "valid": indices, "test": indices}
    normalization: NormalizationStats

    @property
    def history_names(self) -> tuple:
        return tuple(self.records[0].histories) if self.records else ()

    @property
    def target_names(self) -> tuple:
        return self.records[0].target_names if self.records else ()

    def stacked(self):
        """All inputs/targets as ``(M, T, C)`` arrays in record order."""
        x = np.stack([r.inputs for r in self.records])
        y = np.stack([r.targets for r in self.records])
        return x, y

    def arrays(self, split: str, standardized: bool = True):
        """Input and target tensors of a split, standardized by default."""
        if split not in self.split:
            raise UsageError(f"unknown split {split!r}")
        idx = self.split[split]
        x = np.stack([self.records[i].inputs for i in idx])
        y = np.stack([self.records[i].targets for i in idx])
        if standardized:
            ns = self.normalization
            x = standardize(x, ns.input_mean, ns.input_std)
            y = standardize(y, ns.target_mean, ns.target_std)
        return x, y


def split_indices(m_total: int, rng: np.random.Generator) -> dict:
    """Random 70/15/15 partition; rounding remainders go to the train split."""
    perm = rng.permutation(m_total)
    n_valid = int(round(0.15 * m_total))
    n_test = int(round(0.15 * m_total))
    valid = np.sort(perm[:n_valid])
    test = np.sort(perm[n_valid:n_valid + n_test])
    train = np.sort(perm[n_valid + n_test:])
    return {"train": train, "valid": valid, "test": test}


def generate_dataset(spec: SequenceSpec, material_params, m_total: int,
                     seed: int | None = None) -> Dataset:
    """Generate ``m_total`` records, split them, and attach train-split stats.

    ``seed`` defaults to ``spec.seed``. Identical ``(spec, seed, m_total)``
    yield byte-identical datasets.
    """
    if m_total < 10:
        raise UsageError(f"need at least 10 records for a meaningful split, got {m_total}")
    seed = spec.seed if seed is None else seed
    records = [generate_record(spec, material_params, i, seed=seed) for i in range(m_total)]

    split_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))
    split = split_indices(m_total, split_rng)

    train_x = np.stack([records[i].inputs for i in split["train"]])
    train_y = np.stack([records[i].targets for i in split["train"]])
    in_mean, in_std, in_deg = _channel_stats(train_x)
    tg_mean, tg_std, tg_deg = _channel_stats(train_y)
    stats = NormalizationStats(in_mean, in_std, tg_mean, tg_std, in_deg, tg_deg)

    return Dataset(spec=spec, material_params=material_params, records=records,
                   split=split, normalization=stats)
