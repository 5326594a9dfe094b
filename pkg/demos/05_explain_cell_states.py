#!/usr/bin/env python3
"""Explaining what a recurrent network memorized.

Trains a small LSTM on elastoplastic data, runs the PCA explanation on a
test sample, and reproduces the three-panel view: driving signal,
reference vs predicted response, and history variables against the
leading principal-component scores of the cell states.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mechxai import constitutive as cm
from mechxai import loadgen as lg
from mechxai import tensornet as tn
from mechxai import xai

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = lg.SequenceSpec(seq_len=200, phases=5, model_kind="elastoplastic", seed=7)
ds = lg.generate_dataset(spec, cm.PrandtlReussParams(e_mod=1.0, sigma_y=0.6), 128)
x_train, y_train = ds.arrays("train")
x_valid, y_valid = ds.arrays("valid")

config = tn.build_config("recurrent", depth=1, width=16, input_dim=1, output_dim=2,
                         cell_type="lstm")
params = tn.init_params(config, np.random.default_rng(7))
state = tn.train(config, params, (x_train, y_train, x_valid, y_valid),
                 tn.TrainConfig(epochs=80, batch_size=16, learning_rate=1e-2, seed=7))
print(f"training status {state.status}, valid MSE {state.history.valid_mse[-1]:.3e}")

model = tn.Model(config=config, params=state.params,
                 normalization=ds.normalization.to_dict(), seed=7)

record = ds.records[ds.split["test"][1]]
report = xai.explain(model, record, sample_id="test[1]")

print("linear importance of leading components:",
      [f"{v:.3f}" for v in report.importance_linear[:3]])
for stat in report.alignment:
    if stat.history == "plastic_strain":
        print(f"  component {stat.component} vs plastic strain: r = {stat.r:+.4f} "
              f"(slope {stat.slope:+.3e})")

best = report.best_alignment("plastic_strain")
print(f"best |r| vs plastic strain: {abs(best.r):.4f} on component {best.component}")

# --- three-panel figure ------------------------------------------------------
ns = ds.normalization
x_std = lg.standardize(record.inputs, ns.input_mean, ns.input_std)
yhat, _ = tn.forward_sequence(config, state.params, x_std[None])
pred = lg.destandardize(yhat[0].astype(np.float64), ns.target_mean, ns.target_std)

fig, axes = plt.subplots(3, 1, figsize=(8, 7.5), sharex=True)
axes[0].plot(record.inputs[:, 0], color="black")
axes[0].set(ylabel="strain", title="driving signal")

axes[1].plot(record.targets[:, 0], label="reference")
axes[1].plot(pred[:, 0], "--", label="network")
axes[1].legend(fontsize=8)
axes[1].set(ylabel="stress", title="response")

eps_p = record.histories["plastic_strain"]
axes[2].plot(eps_p, color="black", label="plastic strain")
for label, series in report.component_scores.items():
    series = np.asarray(series)
    scale = np.max(np.abs(series)) or 1.0
    axes[2].plot(series / scale * np.max(np.abs(eps_p)), "--", lw=1.0,
                 label=f"component {label} (rescaled)")
axes[2].legend(fontsize=8)
axes[2].set(xlabel="increment", title="history variable vs cell-state components")

fig.tight_layout()
fig.savefig(OUT / "05_explain_cell_states.png", dpi=130)
print(f"wrote {OUT / '05_explain_cell_states.png'}")
