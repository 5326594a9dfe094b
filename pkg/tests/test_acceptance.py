"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The desk-scale studies
(criteria 5-8) train real networks and take a few minutes; everything else
finishes in seconds.
"""

import json
import math
import time

import numpy as np
import pytest

from mechxai import cli
from mechxai import constitutive as cm
from mechxai import hypersearch as hs
from mechxai import loadgen as lg
from mechxai import tensornet as tn
from mechxai import xai

from test_gradients import KIND_VARIANTS, check_config, random_config

SEED = 7
DRAW_SEED = 123  # fixed draw of explained test samples


def report(num, ok, detail, elapsed=None):
    stamp = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    print(f"\nCRITERION {num}: {'PASS' if ok else 'FAIL'} - {detail}{stamp}")
    assert ok, f"criterion {num}: {detail}"


# ---------------------------------------------------------------------------
# Shared desk-scale studies
# ---------------------------------------------------------------------------

def desk_dataset(kind, params):
    spec = lg.SequenceSpec(seq_len=200, phases=5, model_kind=kind, seed=SEED)
    return lg.generate_dataset(spec, params, 512)


def train_recurrent(dataset, cell, learning_rate, batch_size):
    xt, yt = dataset.arrays("train")
    xv, yv = dataset.arrays("valid")
    xs, ys = dataset.arrays("test")
    config = tn.build_config("recurrent", 1, 16, input_dim=1, output_dim=2, cell_type=cell)
    params = tn.init_params(config, np.random.default_rng(SEED))
    state = tn.train(config, params, (xt, yt, xv, yv),
                     tn.TrainConfig(epochs=300, batch_size=batch_size,
                                    learning_rate=learning_rate, seed=SEED))
    assert state.status == "completed"
    yhat, _ = tn.forward_sequence(config, state.params, xs)
    test_mse = tn.mse_loss(yhat, ys.astype(config.np_dtype))
    model = tn.Model(config=config, params=state.params,
                     normalization=dataset.normalization.to_dict(), seed=SEED)
    return model, test_mse


def drawn_explanations(dataset, model, history):
    """Explain 10 randomly drawn test samples whose history actually evolves.

    Samples with an identically constant history variable (e.g. a strain
    path that never yields) are excluded up front: a Pearson correlation
    against a constant series is undefined.
    """
    pool = [i for i in dataset.split["test"]
            if np.std(dataset.records[i].histories[history]) > 0]
    chosen = np.random.default_rng(DRAW_SEED).choice(len(pool), size=10, replace=False)
    reports = [xai.explain(model, dataset.records[pool[c]]) for c in chosen]
    rs = [abs(rep.best_alignment(history).r) if rep.best_alignment(history) else 0.0
          for rep in reports]
    return reports, rs


@pytest.fixture(scope="session")
def hyperelastic_cli_run(tmp_path_factory):
    """Criterion 5's pipeline, run through the CLI so criterion 8 can rerun it."""
    base = tmp_path_factory.mktemp("hyper")
    config = {
        "model_kind": "hyperelastic",
        "sequence": {"seq_len": 200, "phases": 5},
        "dataset": {"m_total": 512, "seed": SEED},
        "network": {"mode": "dense", "depth": 3, "width": 32, "activation": "rect",
                    "cell_type": None},
        "training": {"epochs": 300, "batch_size": 64, "learning_rate": 3e-3, "seed": SEED},
    }
    cfg_path = base / "config.json"
    cfg_path.write_text(json.dumps(config))

    def run_pipeline(name):
        out = base / name
        assert cli.main(["generate", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert cli.main(["train", "--config", str(cfg_path), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        return out, {k: v["sha256"] for k, v in manifest["artifacts"].items()}

    start = time.time()
    out, digests = run_pipeline("run-a")
    elapsed = time.time() - start
    return {"run_pipeline": run_pipeline, "out": out, "digests": digests, "elapsed": elapsed}


@pytest.fixture(scope="session")
def elastoplastic_study():
    dataset = desk_dataset("elastoplastic", cm.PrandtlReussParams(e_mod=1.0, sigma_y=0.6))
    start = time.time()
    model, test_mse = train_recurrent(dataset, "lstm", learning_rate=1e-2, batch_size=32)
    return {"dataset": dataset, "model": model, "test_mse": test_mse,
            "elapsed": time.time() - start}


@pytest.fixture(scope="session")
def viscoelastic_study():
    dataset = desk_dataset("viscoelastic", cm.PoyntingThomsonParams())
    start = time.time()
    model, test_mse = train_recurrent(dataset, "gru", learning_rate=1e-3, batch_size=32)
    return {"dataset": dataset, "model": model, "test_mse": test_mse,
            "elapsed": time.time() - start}


# ---------------------------------------------------------------------------
# 1. Gradient correctness
# ---------------------------------------------------------------------------

def test_criterion_1_gradient_correctness():
    start = time.time()
    worst = 0.0
    kinds_seen = set()
    for trial in range(20):
        kind, activation = KIND_VARIANTS[trial % len(KIND_VARIANTS)]
        kinds_seen.add((kind, activation))
        rng = np.random.default_rng(1000 + trial)
        worst = max(worst, check_config(random_config(kind, activation, rng), rng))
    elapsed = time.time() - start
    ok = worst < 1e-5 and kinds_seen == set(KIND_VARIANTS) and elapsed < 60
    report(1, ok, f"20 configs over {len(kinds_seen)} layer variants, "
                  f"worst relative error {worst:.2e} < 1e-5", elapsed)


# ---------------------------------------------------------------------------
# 2. Constitutive oracles
# ---------------------------------------------------------------------------

def test_criterion_2_constitutive_oracles():
    start = time.time()
    pt = cm.PoyntingThomsonParams(e_inf=1.0, e_branch=0.5, tau_branch=0.1667)

    def relaxation_error(dt, horizon=0.5):
        state, err = cm.ViscoState(), 0.0
        for i in range(1, int(round(horizon / dt)) + 1):
            sigma, state = cm.visco_step_strain_driven(state, 1.0, dt, pt)
            err = max(err, abs(sigma - cm.relaxation_modulus(i * dt, pt)))
        return err

    def creep_error(dt, horizon=0.5):
        state, err = cm.ViscoState(), 0.0
        for i in range(1, int(round(horizon / dt)) + 1):
            eps, _, state = cm.visco_step_stress_driven(state, 1.0, dt, pt)
            err = max(err, abs(eps - cm.creep_compliance(i * dt, pt)))
        return err

    dt = 1e-3
    relax_bound = 2.0 * dt * (pt.e_branch / pt.tau_branch)
    creep_bound = 2.0 * dt * (pt.e_branch / (pt.tau_branch * (pt.e_inf + pt.e_branch) ** 2))
    e_relax, e_creep = relaxation_error(dt), creep_error(dt)
    order_relax = math.log2(relaxation_error(2 * dt) / e_relax)
    order_creep = math.log2(creep_error(2 * dt) / e_creep)

    perfect = cm.PrandtlReussParams(e_mod=1.0, sigma_y=0.6)
    state = cm.PlasticState()
    for eps in np.linspace(0.0, 1.0, 101)[1:]:
        sigma, state = cm.plastic_step(state, float(eps), perfect)
    exact = abs(sigma - 0.6) < 1e-12 and abs(state.plastic_strain - 0.4) < 1e-12

    n_seq = 10_000
    strains = np.cumsum(np.random.default_rng(0).standard_normal((64, n_seq)) * 0.1, axis=0)
    batch = cm.PlasticState(np.zeros(n_seq), np.zeros(n_seq), np.zeros(n_seq))
    admissible = True
    for t in range(strains.shape[0]):
        sigma, batch = cm.plastic_step(batch, strains[t], perfect)
        f = np.abs(sigma - batch.back_stress) - (0.6 + 0.0 * batch.iso_hardening)
        admissible &= bool(np.all(f <= 1e-9))

    elapsed = time.time() - start
    ok = (e_relax < relax_bound and e_creep < creep_bound
          and 0.8 <= order_relax <= 1.2 and 0.8 <= order_creep <= 1.2
          and exact and admissible and elapsed < 60)
    report(2, ok, f"relaxation err {e_relax:.2e} < {relax_bound:.2e} (order {order_relax:.2f}), "
                  f"creep err {e_creep:.2e} < {creep_bound:.2e} (order {order_creep:.2f}), "
                  f"monotonic path exact: {exact}, admissibility on {n_seq} sequences: "
                  f"{admissible}", elapsed)


# ---------------------------------------------------------------------------
# 3. Hyperband schedule
# ---------------------------------------------------------------------------

def test_criterion_3_hyperband_schedule():
    start = time.time()
    plans = hs.plan_brackets(51, 3.7)
    got = {p.s: (p.num_initial, tuple(r.epochs for r in p.rounds),
                 tuple(r.count for r in p.rounds)) for p in plans}
    expected = {
        3: (51, (1, 3, 13, 51), (51, 13, 3, 1)),
        2: (19, (3, 13, 51), (19, 5, 1)),
        1: (8, (13, 51), (8, 2)),
        0: (4, (51,), (4,)),
    }
    elapsed = time.time() - start
    ok = got == expected and elapsed < 1.0
    report(3, ok, f"plan for (N=51, eta=3.7): h=3, initial counts "
                  f"{[got[s][0] for s in (3, 2, 1, 0)]}, epoch ladders "
                  f"{[got[s][1] for s in (3, 2, 1, 0)]}", elapsed)


# ---------------------------------------------------------------------------
# 4. PCA oracle
# ---------------------------------------------------------------------------

def test_criterion_4_pca_oracle():
    start = time.time()
    rng = np.random.default_rng(2)
    worst_eig = worst_orth = worst_rec = 0.0
    for _ in range(50):
        t = int(rng.integers(5, 51))
        f = int(rng.integers(2, 21))
        c = rng.standard_normal((t, f)) * rng.uniform(0.5, 3.0)
        r = xai.pca(c)
        centered = c - c.mean(axis=0)
        eig = np.sort(np.linalg.eigvalsh(centered.T @ centered / (t - 1)))[::-1]
        k = min(len(eig), r.singular_values.size)
        worst_eig = max(worst_eig, np.max(np.abs(r.singular_values[:k] ** 2 / (t - 1) - eig[:k])))
        gram = r.components.T @ r.components
        worst_orth = max(worst_orth, np.max(np.abs(gram - np.eye(gram.shape[0]))))
        worst_rec = max(worst_rec, np.max(np.abs(r.scores @ r.components.T + r.mean - c)))
    elapsed = time.time() - start
    ok = worst_eig < 1e-8 and worst_orth < 1e-8 and worst_rec < 1e-8 and elapsed < 10
    report(4, ok, f"50 random matrices: eigenvalue err {worst_eig:.1e}, "
                  f"orthonormality err {worst_orth:.1e}, reconstruction err {worst_rec:.1e}, "
                  f"all < 1e-8", elapsed)


# ---------------------------------------------------------------------------
# 5. Desk-scale hyperelastic study
# ---------------------------------------------------------------------------

def test_criterion_5_hyperelastic_study(hyperelastic_cli_run):
    out = hyperelastic_cli_run["out"]
    training = json.loads((out / "model" / "training_report.json").read_text())
    test_mse = training["test_mse"]

    dataset = cli._load_dataset(out)
    model = tn.load_model(out / "model")
    xt, yt = dataset.split_arrays("train")
    yhat, _ = tn.forward_sequence(model.config, model.params, xt)
    train_mse = tn.mse_loss(yhat, yt.astype(model.config.np_dtype))
    ratio = test_mse / train_mse

    elapsed = hyperelastic_cli_run["elapsed"]
    ok = test_mse < 5e-4 and ratio < 5 and elapsed < 300
    report(5, ok, f"dense 3x32 rect, 300 epochs: test MSE {test_mse:.2e} < 5e-4, "
                  f"test/train ratio {ratio:.2f} < 5", elapsed)


# ---------------------------------------------------------------------------
# 6. Desk-scale elastoplastic explanation
# ---------------------------------------------------------------------------

def test_criterion_6_elastoplastic_explanation(elastoplastic_study):
    study = elastoplastic_study
    start = time.time()
    _, rs = drawn_explanations(study["dataset"], study["model"], "plastic_strain")
    hits = sum(r > 0.9 for r in rs)
    elapsed = study["elapsed"] + (time.time() - start)
    ok = study["test_mse"] < 5e-3 and hits >= 8 and elapsed < 900
    report(6, ok, f"single LSTM(16): test MSE {study['test_mse']:.2e} < 5e-3; best "
                  f"component vs plastic strain |r| > 0.9 on {hits}/10 samples "
                  f"(|r| range {min(rs):.3f}-{max(rs):.3f})", elapsed)


# ---------------------------------------------------------------------------
# 7. Desk-scale viscoelastic explanation
# ---------------------------------------------------------------------------

def test_criterion_7_viscoelastic_explanation(viscoelastic_study):
    study = viscoelastic_study
    start = time.time()
    reports, rs = drawn_explanations(study["dataset"], study["model"], "branch_stress")
    hits = sum(r > 0.8 for r in rs)
    min_top3 = min(sum(rep.importance_linear[:3]) for rep in reports)
    elapsed = study["elapsed"] + (time.time() - start)
    ok = study["test_mse"] < 5e-3 and hits >= 7 and min_top3 >= 0.8 and elapsed < 900
    report(7, ok, f"GRU(16): test MSE {study['test_mse']:.2e} < 5e-3; top-3 linear "
                  f"importance >= {min_top3:.3f}; best component vs branch stress "
                  f"|r| > 0.8 on {hits}/10 samples", elapsed)


# ---------------------------------------------------------------------------
# 8. End-to-end determinism
# ---------------------------------------------------------------------------

def test_criterion_8_pipeline_determinism(hyperelastic_cli_run):
    start = time.time()
    _, second = hyperelastic_cli_run["run_pipeline"]("run-b")
    first = hyperelastic_cli_run["digests"]
    same = set(first) == set(second) and all(second[k] == first[k] for k in first)
    differing = sorted(k for k in first if second.get(k) != first[k])
    elapsed = time.time() - start
    report(8, same, "repeated pipeline produced digest-identical artifacts"
           + ("" if same else f"; differing: {differing}"), elapsed)


# ---------------------------------------------------------------------------
# 9. Successive-halving correctness
# ---------------------------------------------------------------------------

def _toy_search(store, seed=21, interrupt_after=None):
    rng = np.random.default_rng(4)
    x = rng.standard_normal((24, 3, 1))
    y = 2.0 * x - 1.0
    domain = hs.SearchDomain(mode="dense", widths=(4, 8), depths=(2, 3),
                             learning_rates=(3e-2, 1e-3, 10.0), batch_sizes=(8,),
                             activations=("tanh", "rect"))
    trainer = hs.make_network_trainer((x, y, x, y), 1, 1)
    if interrupt_after is not None:
        calls = {"n": 0}
        inner = trainer

        def trainer(config, state, target_epochs):  # noqa: F811
            if calls["n"] >= interrupt_after:
                raise KeyboardInterrupt
            calls["n"] += 1
            return inner(config, state, target_epochs)

    # max_epochs=8, eta=2: the first bracket is the 8-configuration toy
    return hs.hyperband_search(domain, 8, 2.0, trainer, seed=seed, store=store)


def _survivor_monotonicity(ledger_lines):
    """In every recorded round, survivors scored no worse than the eliminated."""
    records = [json.loads(line) for line in ledger_lines if line.strip()]
    by_bracket = {}
    for rec in records:
        by_bracket.setdefault(rec["bracket"], {}).setdefault(rec["round"], {})[
            rec["trial"]] = rec
    checked = 0
    for rounds in by_bracket.values():
        for round_index in sorted(rounds):
            if round_index + 1 not in rounds:
                continue
            current, nxt = rounds[round_index], rounds[round_index + 1]
            survivors = [current[t] for t in current if t in nxt]
            eliminated = [current[t] for t in current if t not in nxt]
            for s in survivors:
                for e in eliminated:
                    checked += 1
                    if s["final_validation_mse"] > e["final_validation_mse"] + 1e-12:
                        return False, checked
    return True, checked


def test_criterion_9_successive_halving(tmp_path):
    start = time.time()
    full_store = hs.SearchStore(tmp_path / "full")
    result = _toy_search(full_store)
    assert result.plans[0].num_initial == 8  # the toy bracket: 8 configs at eta=2

    monotone, pairs_checked = _survivor_monotonicity(
        full_store.ledger_path().read_text().splitlines())

    part_store = hs.SearchStore(tmp_path / "part")
    with pytest.raises(KeyboardInterrupt):
        _toy_search(part_store, interrupt_after=5)
    partial_lines = len(part_store.ledger_path().read_text().splitlines())
    _toy_search(hs.SearchStore(tmp_path / "part"))
    resumed = (tmp_path / "part" / "ledger.jsonl").read_text()
    full = full_store.ledger_path().read_text()

    elapsed = time.time() - start
    ok = monotone and resumed == full and 0 < partial_lines < len(full.splitlines())
    report(9, ok, f"survivor monotonicity over {pairs_checked} survivor/eliminated pairs; "
                  f"resume after interrupt ({partial_lines} of {len(full.splitlines())} "
                  f"records) reproduces the uninterrupted ledger exactly", elapsed)
