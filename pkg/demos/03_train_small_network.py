#!/usr/bin/env python3
"""Training a small recurrent network on elastoplastic sequences.

A 60-epoch LSTM run, small enough to finish in about twenty seconds,
plus the loss curves and a test-sample prediction overlay. The full
desk-scale study (300 epochs) lives in the acceptance suite.
"""

import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mechxai import constitutive as cm
from mechxai import loadgen as lg
from mechxai import tensornet as tn

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = lg.SequenceSpec(seq_len=200, phases=5, model_kind="elastoplastic", seed=7)
ds = lg.generate_dataset(spec, cm.PrandtlReussParams(e_mod=1.0, sigma_y=0.6), 128)
x_train, y_train = ds.arrays("train")
x_valid, y_valid = ds.arrays("valid")
x_test, y_test = ds.arrays("test")

config = tn.build_config("recurrent", depth=1, width=16, input_dim=1, output_dim=2,
                         cell_type="lstm")
params = tn.init_params(config, np.random.default_rng(7))

start = time.time()
state = tn.train(config, params, (x_train, y_train, x_valid, y_valid),
                 tn.TrainConfig(epochs=60, batch_size=16, learning_rate=1e-2, seed=7))
print(f"trained 60 epochs in {time.time() - start:.1f}s, status {state.status}")
print(f"final train MSE {state.history.train_mse[-1]:.3e}, "
      f"valid MSE {state.history.valid_mse[-1]:.3e}")

yhat, _ = tn.forward_sequence(config, state.params, x_test)
print(f"test MSE {tn.mse_loss(yhat, y_test.astype(config.np_dtype)):.3e}")

fig, axes = plt.subplots(1, 2, figsize=(11, 3.4))
axes[0].semilogy(state.history.train_mse, label="train")
axes[0].semilogy(state.history.valid_mse, label="validation")
axes[0].legend()
axes[0].set(title="convergence", xlabel="epoch", ylabel="MSE")

ns = ds.normalization
pred = lg.destandardize(yhat[0].astype(np.float64), ns.target_mean, ns.target_std)
ref = ds.records[ds.split["test"][0]]
axes[1].plot(ref.targets[:, 0], label="stress (reference)")
axes[1].plot(pred[:, 0], "--", label="stress (network)")
axes[1].plot(ref.targets[:, 1], label="plastic strain (reference)")
axes[1].plot(pred[:, 1], "--", label="plastic strain (network)")
axes[1].legend(fontsize=8)
axes[1].set(title="first test sample", xlabel="increment")
fig.tight_layout()
fig.savefig(OUT / "03_train_small_network.png", dpi=130)
print(f"wrote {OUT / '03_train_small_network.png'}")
