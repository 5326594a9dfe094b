"""Explaining recurrent networks by PCA of their cell-state trajectories.

Over one input sequence, the cell states of every recurrent layer form a
``(T, units)`` matrix. Centering it per unit and taking a singular value
decomposition yields an orthonormal basis of principal directions; the
projections of the centered states onto that basis (the component score
series) summarize the temporal behavior of the whole distributed memory.

Each leading score series is then fitted affinely against the algorithmic
history variables of the reference material model. A Pearson correlation
near +/-1 means the network's memory tracks that history variable up to
sign, scale, and shift, i.e. the network internalized the same state the
reference integrator uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .loadgen import standardize
from .tensornet import Model, forward_sequence

__all__ = [
    "StateMatrix",
    "PcaResult",
    "AlignmentStat",
    "ExplanationReport",
    "collect_cell_states",
    "pca",
    "importance_ratios",
    "affine_align",
    "explain",
]

ZERO_SV_RTOL = 1e-10  # singular values below this fraction of the largest count as zero
_ROMAN = ("I", "II", "III", "IV", "V")


@dataclass
class StateMatrix:
    """Concatenated cell states of one sample: increments by units."""

    values: np.ndarray  # (T, F)
    layer_slices: list  # (layer_index, kind, start, stop) per recurrent layer


@dataclass
class PcaResult:
    """Orthonormal principal directions of a centered state matrix.

    ``components`` holds the right-singular vectors as columns, sorted by
    non-increasing singular value; ``scores`` are the centered states
    projected onto them.
    """

    mean: np.ndarray             # (F,)
    components: np.ndarray       # (F, K)
    singular_values: np.ndarray  # (K,)
    scores: np.ndarray           # (T, K)

    def scaled_scores(self) -> np.ndarray:
        """Scores divided by the square root of their singular values.

        Degenerate (numerically zero) components keep a unit divisor.
        """
        sv = self.singular_values
        cutoff = ZERO_SV_RTOL * sv[0] if sv.size and sv[0] > 0 else 0.0
        divisor = np.where(sv > cutoff, np.sqrt(np.where(sv > 0, sv, 1.0)), 1.0)
        return self.scores / divisor


def collect_cell_states(model: Model, sample) -> StateMatrix:
    """Run one sample through the model and gather recurrent cell states.

    ``sample`` is a material record or a raw ``(T, input_dim)`` array; the
    model's stored normalization is applied to record inputs. LSTM layers
    contribute their gated memory, simple recurrent cells their squashed
    inner state, and GRUs their hidden state; layers are concatenated along
    the unit axis in layer order.
    """
    if not model.config.has_recurrent_layer():
        raise UsageError("cell-state explanation requires at least one recurrent layer; "
                         "this model is dense only")
    x = np.asarray(sample.inputs if hasattr(sample, "inputs") else sample, dtype=np.float64)
    if x.ndim != 2:
        raise UsageError(f"sample must be a (T, input_dim) array, got shape {x.shape}")
    if model.normalization is not None:
        x = standardize(x, np.asarray(model.normalization["input_mean"]),
                        np.asarray(model.normalization["input_std"]))
    _, trace = forward_sequence(model.config, model.params, x[None, :, :], trace=True)

    blocks = []
    slices = []
    start = 0
    for layer_index, kind, cell, _hidden, _gates in trace.entries:
        block = np.asarray(cell[0], dtype=np.float64)  # (T, width)
        blocks.append(block)
        slices.append((layer_index, kind, start, start + block.shape[1]))
        start += block.shape[1]
    return StateMatrix(values=np.concatenate(blocks, axis=1), layer_slices=slices)


def pca(state_matrix) -> PcaResult:
    """Center per unit and decompose into principal directions via SVD.

    An all-constant matrix is not an error: it yields zero singular values
    and zero scores.
    """
    c = state_matrix.values if isinstance(state_matrix, StateMatrix) else np.asarray(state_matrix)
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 2:
        raise UsageError(f"state matrix must be 2-D with at least two increments, got shape {c.shape}")
    mean = c.mean(axis=0)
    centered = c - mean
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt.T
    scores = centered @ components
    return PcaResult(mean=mean, components=components, singular_values=sv, scores=scores)


def importance_ratios(singular_values):
    """Relative importance of each component, in two normalizations.

    Returns ``(linear, squared, degenerate)``: the singular values over
    their sum, the squared singular values over their sum (the classical
    explained-variance fractions), and a flag set when every singular value
    vanishes, in which case both vectors are all zero.
    """
    sv = np.asarray(singular_values, dtype=np.float64)
    if np.any(sv < 0):
        raise UsageError("singular values must be non-negative")
    total = sv.sum()
    total_sq = (sv * sv).sum()
    if total == 0:
        return np.zeros_like(sv), np.zeros_like(sv), True
    return sv / total, (sv * sv) / total_sq, False


@dataclass
class AlignmentStat:
    """Least-squares fit ``history ~ slope * score + intercept``."""

    component: int  # 1-based
    history: str
    slope: float
    intercept: float
    r: float
    r2: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"component": self.component, "history": self.history, "slope": self.slope,
                "intercept": self.intercept, "r": self.r, "r2": self.r2,
                "degenerate": self.degenerate}


def affine_align(score_series, history_series) -> AlignmentStat:
    """Fit a history variable affinely to a component score series.

    The slope keeps its sign, so a component that mirrors a history
    variable negatively still reports ``|r|`` near one. A constant score
    series cannot be aligned; it is flagged and reported with ``r = 0``.
    """
    s = np.asarray(score_series, dtype=np.float64)
    q = np.asarray(history_series, dtype=np.float64)
    if s.shape != q.shape or s.ndim != 1 or s.size < 2:
        raise UsageError(f"need two equal-length 1-D series of length >= 2, "
                         f"got {s.shape} and {q.shape}")
    s_var = s.var()
    if s_var == 0:
        return AlignmentStat(0, "", 0.0, float(q.mean()), 0.0, 0.0, degenerate=True)
    cov = np.mean((s - s.mean()) * (q - q.mean()))
    slope = cov / s_var
    intercept = float(q.mean() - slope * s.mean())
    q_var = q.var()
    r = 0.0 if q_var == 0 else float(cov / np.sqrt(s_var * q_var))
    return AlignmentStat(0, "", float(slope), intercept, r, r * r, degenerate=False)


@dataclass
class ExplanationReport:
    """PCA summary of one sample plus alignment against history variables."""

    sample_id: str
    model_ref: str
    singular_values: list
    importance_linear: list
    importance_squared: list
    degenerate: bool
    component_scores: dict      # label ("I", "II", ...) -> score series list
    alignment: list             # AlignmentStat entries
    layer_slices: list = field(default_factory=list)

    def best_alignment(self, history: str) -> AlignmentStat | None:
        """Strongest |r| entry for one history variable, if any."""
        rows = [a for a in self.alignment if a.history == history and not a.degenerate]
        return max(rows, key=lambda a: abs(a.r)) if rows else None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "model_ref": self.model_ref,
            "singular_values": list(self.singular_values),
            "importance_linear": list(self.importance_linear),
            "importance_squared": list(self.importance_squared),
            "degenerate": self.degenerate,
            "component_scores": {k: list(v) for k, v in self.component_scores.items()},
            "alignment": [a.to_dict() for a in self.alignment],
            "layer_slices": [list(s) for s in self.layer_slices],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExplanationReport":
        return cls(
            sample_id=d["sample_id"],
            model_ref=d["model_ref"],
            singular_values=list(d["singular_values"]),
            importance_linear=list(d["importance_linear"]),
            importance_squared=list(d["importance_squared"]),
            degenerate=d["degenerate"],
            component_scores={k: list(v) for k, v in d["component_scores"].items()},
            alignment=[AlignmentStat(**a) for a in d["alignment"]],
            layer_slices=[tuple(s) for s in d.get("layer_slices", [])],
        )


def explain_states(states: StateMatrix, histories: dict, *, sample_id: str = "",
                   model_ref: str = "", top_k: int = 3) -> ExplanationReport:
    """PCA plus alignment table from an already collected state matrix."""
    result = pca(states)
    linear, squared, degenerate = importance_ratios(result.singular_values)

    sv = result.singular_values
    cutoff = ZERO_SV_RTOL * sv[0] if sv.size and sv[0] > 0 else 0.0
    usable = [k for k in range(min(top_k, sv.size)) if sv[k] > cutoff]

    component_scores = {}
    alignment = []
    for k in usable:
        label = _ROMAN[k] if k < len(_ROMAN) else str(k + 1)
        component_scores[label] = result.scores[:, k].tolist()
        for name, series in histories.items():
            stat = affine_align(result.scores[:, k], np.asarray(series))
            stat.component = k + 1
            stat.history = name
            alignment.append(stat)

    return ExplanationReport(
        sample_id=sample_id,
        model_ref=model_ref,
        singular_values=sv.tolist(),
        importance_linear=linear.tolist(),
        importance_squared=squared.tolist(),
        degenerate=degenerate,
        component_scores=component_scores,
        alignment=alignment,
        layer_slices=states.layer_slices,
    )


def explain(model: Model, sample_record, *, sample_id: str = "", model_ref: str = "",
            top_k: int = 3) -> ExplanationReport:
    """Collect cell states for one record and explain them.

    The report carries the leading component score series, both importance
    normalizations, and the affine-alignment statistics of every
    (component, history variable) pair. A fully degenerate (all-constant)
    state matrix yields an empty alignment table and the degeneracy flag.
    """
    states = collect_cell_states(model, sample_record)
    return explain_states(states, sample_record.histories, sample_id=sample_id,
                          model_ref=model_ref, top_k=top_k)
