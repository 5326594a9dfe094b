#!/usr/bin/env python3
"""Hyperband on a toy domain: schedule, ledger, and the winning config.

First prints the bracket/round schedule for the full-scale setting
(N=51, eta=3.7), then actually runs a small search over dense nets on a
linear regression problem and summarizes the trial ledger.
"""

import json
import tempfile

import numpy as np

from mechxai import hypersearch as hs

# --- the schedule alone -----------------------------------------------------
print("bracket schedule for N=51, eta=3.7:")
for plan in hs.plan_brackets(51, 3.7):
    ladder = ", ".join(f"{r.count} cfg @ {r.epochs} ep" for r in plan.rounds)
    print(f"  bracket s={plan.s}: start {plan.num_initial:3d} configs | {ladder}")

# --- a real (tiny) search ----------------------------------------------------
rng = np.random.default_rng(0)
x = rng.standard_normal((48, 4, 1))
y = 2.0 * x - 0.5

domain = hs.SearchDomain(
    mode="dense",
    widths=(4, 8, 16),
    depths=(2, 3),
    learning_rates=(3e-2, 3e-3, 10.0),  # lr=10 is a planted dud
    batch_sizes=(16,),
    activations=("tanh", "rect"),
)
trainer = hs.make_network_trainer((x, y, x, y), input_dim=1, output_dim=1,
                                  early_stop=hs.EarlyStopPolicy())

with tempfile.TemporaryDirectory() as tmp:
    store = hs.SearchStore(tmp)
    result = hs.hyperband_search(domain, max_epochs=8, eta=2.0, trainer=trainer,
                                 seed=5, store=store)
    records = [json.loads(line) for line in store.ledger_path().read_text().splitlines()]

print(f"\nsearch over {len(result.trials)} trials, {len(records)} ledger records")
best = result.best_record
print(f"winner: width {best.config.width}, depth {best.config.depth}, "
      f"{best.config.activation}, lr {best.config.learning_rate}, "
      f"validation MSE {best.final_validation_mse:.3e}")

print("\ntop 5 trials:")
ranked = sorted(result.trials, key=lambda t: t.rank_key())
for t in ranked[:5]:
    print(f"  {t.final_validation_mse:9.3e}  width {t.config.width:3d} depth {t.config.depth} "
          f"{t.config.activation:4s} lr {t.config.learning_rate:<6g} "
          f"({t.epochs_completed} epochs, {t.status})")

duds = [t for t in result.trials if t.config.learning_rate == 10.0]
print(f"\nplanted lr=10 trials: {len(duds)}, best of them ranks "
      f"{min(ranked.index(t) for t in duds) + 1} of {len(ranked)}")
