"""Hyperband architecture search with successive halving and early stopping.

A search is organized in brackets indexed by ``s = h .. 0`` with
``h = floor(log_eta(max_epochs))``. Bracket ``s`` samples
``ceil((h + 1) * eta^s / (s + 1))`` configurations and runs ``s + 1``
successive-halving rounds: round ``j`` trains the survivors up to
``floor(max_epochs / eta^(s - j))`` total epochs (warm continuation, never
retraining from scratch), then keeps the best ``floor(current / eta)``
configurations by validation error, at least one and never a diverged one.
Early brackets explore many cheap configurations; the last bracket trains
a handful for the full budget.

On top of the schedule, an aggressive early-stopping rule watches the
moving average of the validation error and halts trials whose averaged
error has stopped improving; halted trials keep their score but consume no
further epochs.

Trial outcomes stream into an append-only JSONL ledger (one record per
trial round) with per-trial training checkpoints next to it, so an
interrupted search resumes without recomputing finished rounds.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import UsageError
from .tensornet import (
    NetworkConfig,
    TrainConfig,
    TrainerState,
    TrainingHistory,
    build_config,
    init_adam,
    init_params,
    train,
)

__all__ = [
    "SearchDomain",
    "HyperConfig",
    "RoundPlan",
    "BracketPlan",
    "EarlyStopPolicy",
    "TrialRecord",
    "SearchResult",
    "SearchStore",
    "plan_brackets",
    "sample_configuration",
    "early_stop_check",
    "run_bracket",
    "hyperband_search",
    "make_network_trainer",
]


# ---------------------------------------------------------------------------
# Search domain and sampled configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchDomain:
    """Discrete axes of the search; the activation axis is active in dense
    mode and the cell-type axis in recurrent mode.

    Defaults cover widths 4..128 in steps of 4, depths 2..6, five decades of
    learning rate, three batch sizes, five dense activations, and four
    recurrent cell types.
    """

    mode: str  # "dense" | "recurrent"
    widths: tuple = tuple(range(4, 129, 4))
    depths: tuple = (2, 3, 4, 5, 6)
    learning_rates: tuple = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
    batch_sizes: tuple = (32, 64, 128)
    activations: tuple = ("rect", "sig", "tanh", "elu", "splus")
    cell_types: tuple = ("lstm", "gru", "recurrent_tanh", "recurrent_rect")

    def __post_init__(self):
        if self.mode not in ("dense", "recurrent"):
            raise UsageError(f"mode must be 'dense' or 'recurrent', got {self.mode!r}")
        for name in ("widths", "depths", "learning_rates", "batch_sizes",
                     "activations", "cell_types"):
            if not getattr(self, name):
                raise UsageError(f"search axis {name} must not be empty")


@dataclass(frozen=True)
class HyperConfig:
    """One sampled configuration, reproducible from its RNG provenance."""

    mode: str
    width: int
    depth: int
    learning_rate: float
    batch_size: int
    activation: str | None
    cell_type: str | None
    seed: int
    draw_index: int

    def to_network_config(self, input_dim: int, output_dim: int, dtype: str = "f32") -> NetworkConfig:
        return build_config(self.mode, self.depth, self.width, input_dim=input_dim,
                            output_dim=output_dim, activation=self.activation,
                            cell_type=self.cell_type, dtype=dtype)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HyperConfig":
        return cls(**d)


def sample_configuration(domain: SearchDomain, rng: np.random.Generator,
                         seed: int = 0, draw_index: int = 0) -> HyperConfig:
    """Draw one configuration, uniformly and independently per axis."""
    width = domain.widths[rng.integers(len(domain.widths))]
    depth = domain.depths[rng.integers(len(domain.depths))]
    lr = domain.learning_rates[rng.integers(len(domain.learning_rates))]
    batch = domain.batch_sizes[rng.integers(len(domain.batch_sizes))]
    if domain.mode == "dense":
        activation = domain.activations[rng.integers(len(domain.activations))]
        cell = None
    else:
        activation = None
        cell = domain.cell_types[rng.integers(len(domain.cell_types))]
    return HyperConfig(mode=domain.mode, width=int(width), depth=int(depth),
                       learning_rate=float(lr), batch_size=int(batch),
                       activation=activation, cell_type=cell,
                       seed=seed, draw_index=draw_index)


# ---------------------------------------------------------------------------
# Bracket arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundPlan:
    count: int   # configurations entering the round
    epochs: int  # total epoch budget per configuration at the end of the round


@dataclass(frozen=True)
class BracketPlan:
    s: int
    eta: float
    num_initial: int
    base_epochs: float
    rounds: tuple


_EPS = 1e-9  # guards floor/ceil against floating-point noise on exact integers


def plan_brackets(max_epochs: int, eta: float) -> list:
    """Bracket and round schedule for a ``(max_epochs, eta)`` search."""
    if eta <= 1:
        raise UsageError(f"keep quotient eta must exceed 1, got {eta}")
    if max_epochs < 1:
        raise UsageError(f"max_epochs must be at least 1, got {max_epochs}")

    h = 0
    while eta ** (h + 1) <= max_epochs * (1 + _EPS):
        h += 1
    budget_units = h + 1  # total budget B = (h + 1) * max_epochs

    plans = []
    for s in range(h, -1, -1):
        c_init = math.ceil(budget_units * eta**s / (s + 1) - _EPS)
        base = max_epochs / eta**s
        rounds = []
        for j in range(s + 1):
            count = max(1, math.floor(c_init / eta**j + _EPS))
            epochs = max(1, math.floor(max_epochs / eta ** (s - j) + _EPS))
            rounds.append(RoundPlan(count=count, epochs=epochs))
        plans.append(BracketPlan(s=s, eta=eta, num_initial=c_init, base_epochs=base,
                                 rounds=tuple(rounds)))
    return plans


# ---------------------------------------------------------------------------
# Early stopping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EarlyStopPolicy:
    window: int = 5
    patience: int = 10
    min_rel_improvement: float = 1e-3


def early_stop_check(history, policy: EarlyStopPolicy) -> bool:
    """Decide whether a validation history warrants stopping.

    ``history`` is the sequence of per-epoch validation errors. An epoch
    improves when the moving average over the last ``window`` entries
    undercuts the best moving average seen so far by the relative margin
    ``min_rel_improvement``; ``patience`` consecutive epochs without an
    improvement trigger the stop.
    """
    best = math.inf
    streak = 0
    for e in range(len(history)):
        ma = float(np.mean(history[max(0, e - policy.window + 1):e + 1]))
        if ma < best * (1.0 - policy.min_rel_improvement):
            streak = 0
        else:
            streak += 1
            if streak >= policy.patience:
                return True
        best = min(best, ma)
    return False


# ---------------------------------------------------------------------------
# Trial bookkeeping and persistence
# ---------------------------------------------------------------------------

@dataclass
class TrialRecord:
    """Outcome of one configuration, updated round by round."""

    config: HyperConfig
    epochs_completed: int = 0
    train_mse: list = field(default_factory=list)
    valid_mse: list = field(default_factory=list)
    status: str = "running"  # running | halted | early_stopped | diverged | completed

    @property
    def final_validation_mse(self) -> float:
        for v in reversed(self.valid_mse):
            if math.isfinite(v):
                return v
        return math.inf

    def rank_key(self):
        # diverged trials sort after every finite trial; ties break on draw order
        mse = math.inf if self.status == "diverged" else self.final_validation_mse
        return (mse, self.config.draw_index)

    def to_ledger_dict(self, bracket: int, round_index: int) -> dict:
        return {
            "bracket": bracket,
            "round": round_index,
            "trial": self.config.draw_index,
            "config": self.config.to_dict(),
            "epochs_completed": self.epochs_completed,
            "train_mse": list(self.train_mse),
            "valid_mse": list(self.valid_mse),
            "status": self.status,
            "final_validation_mse": self.final_validation_mse,
        }

    def restore_from(self, record: dict):
        self.epochs_completed = record["epochs_completed"]
        self.train_mse = list(record["train_mse"])
        self.valid_mse = list(record["valid_mse"])
        self.status = record["status"]


class SearchStore:
    """Ledger and checkpoint persistence for resumable searches."""

    LEDGER_NAME = "ledger.jsonl"

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        (self.directory / "ckpt").mkdir(exist_ok=True)
        self._records = {}
        ledger = self.ledger_path()
        if ledger.exists():
            for line in ledger.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self._records[(rec["bracket"], rec["round"], rec["trial"])] = rec

    def ledger_path(self) -> Path:
        return self.directory / self.LEDGER_NAME

    def records(self) -> list:
        return list(self._records.values())

    def get(self, bracket: int, round_index: int, trial: int):
        return self._records.get((bracket, round_index, trial))

    def append(self, record: dict):
        key = (record["bracket"], record["round"], record["trial"])
        if key in self._records:
            return
        with open(self.ledger_path(), "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._records[key] = record

    # -- trainer-state checkpoints ------------------------------------------

    def _ckpt_path(self, bracket: int, trial: int) -> Path:
        return self.directory / "ckpt" / f"s{bracket}_t{trial}.npz"

    def save_state(self, bracket: int, trial: int, state: TrainerState):
        arrays = {"meta": np.array([state.adam.step, state.epochs_done]),
                  "lr": np.array([state.adam.learning_rate]),
                  "hist_train": np.asarray(state.history.train_mse),
                  "hist_valid": np.asarray(state.history.valid_mse),
                  "status": np.array(state.status)}
        for i, p in enumerate(state.params):
            for k, v in p.items():
                arrays[f"p{i}_{k}"] = v
                arrays[f"m{i}_{k}"] = state.adam.m[i][k]
                arrays[f"v{i}_{k}"] = state.adam.v[i][k]
        path = self._ckpt_path(bracket, trial)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)

    def load_state(self, bracket: int, trial: int) -> TrainerState | None:
        path = self._ckpt_path(bracket, trial)
        if not path.exists():
            return None
        with np.load(path, allow_pickle=False) as data:
            layers = {}
            for key in data.files:
                if key[0] == "p" and "_" in key and key[1:key.index("_")].isdigit():
                    idx = int(key[1:key.index("_")])
                    layers.setdefault(idx, []).append(key[key.index("_") + 1:])
            params, m, v = [], [], []
            for i in sorted(layers):
                params.append({k: data[f"p{i}_{k}"] for k in layers[i]})
                m.append({k: data[f"m{i}_{k}"] for k in layers[i]})
                v.append({k: data[f"v{i}_{k}"] for k in layers[i]})
            step, epochs_done = (int(x) for x in data["meta"])
            adam = init_adam(params, float(data["lr"][0]))
            adam.m, adam.v, adam.step = m, v, step
            history = TrainingHistory(train_mse=[float(x) for x in data["hist_train"]],
                                      valid_mse=[float(x) for x in data["hist_valid"]])
            status = str(data["status"])
        return TrainerState(params=params, adam=adam, epochs_done=epochs_done,
                            history=history, status=status)


# ---------------------------------------------------------------------------
# Trainers
# ---------------------------------------------------------------------------

def make_network_trainer(data, input_dim: int, output_dim: int, dtype: str = "f32",
                         early_stop: EarlyStopPolicy | None = None):
    """Build the trainer callable used by :func:`run_bracket`.

    The returned function has signature
    ``trainer(config, state, target_epochs) -> TrainerState``; it creates
    the network on first use and otherwise warm-continues from ``state``.
    """

    def trainer(config: HyperConfig, state: TrainerState | None, target_epochs: int) -> TrainerState:
        net = config.to_network_config(input_dim, output_dim, dtype)
        params = init_params(net, np.random.default_rng(config.seed)) if state is None else state.params
        cfg = TrainConfig(epochs=target_epochs, batch_size=config.batch_size,
                          learning_rate=config.learning_rate, seed=config.seed)
        callbacks = ()
        if early_stop is not None:
            callbacks = (lambda epoch, hist: early_stop_check(hist.valid_mse, early_stop),)
        return train(net, params, data, cfg, callbacks=callbacks, state=state)

    return trainer


def _trial_seed(master_seed: int, bracket: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, bracket, index]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Successive halving and the full search
# ---------------------------------------------------------------------------

def run_bracket(plan: BracketPlan, configs, trainer, store: SearchStore | None = None,
                workers: int = 1) -> list:
    """Run every successive-halving round of one bracket.

    ``configs`` must hold ``plan.num_initial`` sampled configurations.
    Returns one :class:`TrialRecord` per configuration; eliminated trials
    end up ``halted``, the rest carry their last training status.
    """
    if len(configs) != plan.num_initial:
        raise UsageError(f"bracket s={plan.s} expects {plan.num_initial} configurations, "
                         f"got {len(configs)}")
    trials = [TrialRecord(config=c) for c in configs]
    states = {c.draw_index: None for c in configs}
    survivors = list(range(len(trials)))

    for round_index, round_plan in enumerate(plan.rounds):
        target = round_plan.epochs

        def run_one(ti):
            trial = trials[ti]
            tid = trial.config.draw_index
            if trial.status in ("diverged", "early_stopped"):
                return ti, states[tid]  # carried through without extra epochs
            recorded = store.get(plan.s, round_index, tid) if store else None
            if recorded is not None:
                trial.restore_from(recorded)
                state = store.load_state(plan.s, tid)
                return ti, state if state is not None else states[tid]
            state = trainer(trial.config, states[tid], target)
            trial.epochs_completed = state.epochs_done
            trial.train_mse = list(state.history.train_mse)
            trial.valid_mse = list(state.history.valid_mse)
            trial.status = {"diverged": "diverged", "stopped": "early_stopped"}.get(
                state.status, "completed")
            return ti, state

        def record_result(ti, state):
            # persisting per trial, in draw order, keeps the ledger byte-stable
            # across worker counts and survives mid-round interruption
            trial = trials[ti]
            states[trial.config.draw_index] = state
            if store is not None:
                store.append(trial.to_ledger_dict(plan.s, round_index))
                if state is not None:
                    store.save_state(plan.s, trial.config.draw_index, state)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for ti, state in pool.map(run_one, survivors):
                    record_result(ti, state)
        else:
            for ti in survivors:
                record_result(*run_one(ti))

        if round_index + 1 < len(plan.rounds):
            keep = max(1, math.floor(len(survivors) / plan.eta + _EPS))
            ranked = sorted(survivors, key=lambda ti: trials[ti].rank_key())
            kept = [ti for ti in ranked if trials[ti].status != "diverged"][:keep]
            for ti in survivors:
                if ti not in kept and trials[ti].status not in ("diverged", "early_stopped"):
                    trials[ti].status = "halted"
            survivors = sorted(kept)
    return trials


@dataclass
class SearchResult:
    best_config: HyperConfig | None
    best_record: TrialRecord | None
    trials: list
    plans: list
    status: str  # "ok" | "all_diverged"


def hyperband_search(domain: SearchDomain, max_epochs: int, eta: float, trainer,
                     seed: int = 0, store: SearchStore | None = None,
                     workers: int = 1) -> SearchResult:
    """Full Hyperband search over ``domain``.

    ``trainer`` follows the :func:`make_network_trainer` protocol. The best
    configuration is the argmin of final validation error over every trial
    of every bracket; ties break toward the earlier draw. With a ``store``,
    trial rounds already present in the ledger are reused instead of being
    retrained, which makes interrupted searches resumable and repeated
    invocations idempotent.
    """
    plans = plan_brackets(max_epochs, eta)
    draw_counter = 0
    all_trials = []
    for plan in plans:
        rng = np.random.default_rng([seed, plan.s])
        configs = []
        for i in range(plan.num_initial):
            configs.append(sample_configuration(domain, rng,
                                                seed=_trial_seed(seed, plan.s, i),
                                                draw_index=draw_counter))
            draw_counter += 1
        all_trials.extend(run_bracket(plan, configs, trainer, store=store, workers=workers))

    finite = [t for t in all_trials
              if t.status != "diverged" and math.isfinite(t.final_validation_mse)]
    if not finite:
        return SearchResult(best_config=None, best_record=None, trials=all_trials,
                            plans=plans, status="all_diverged")
    best = min(finite, key=lambda t: t.rank_key())
    return SearchResult(best_config=best.config, best_record=best, trials=all_trials,
                        plans=plans, status="ok")
