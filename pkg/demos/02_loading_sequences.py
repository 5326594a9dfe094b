#!/usr/bin/env python3
"""Randomized loading sequences: ramp shapes, phases, and whole datasets.

Shows the ramp palette, assembles a few random sequences per material
kind, and generates a small dataset to inspect its split and
normalization statistics.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mechxai import constitutive as cm
from mechxai import loadgen as lg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- the ramp palette ------------------------------------------------------
u = np.linspace(0, 1, 200)
fig, axes = plt.subplots(1, 2, figsize=(11, 3.4))
for kind in ("linear", "quadratic", "sqrt", "exponential", "sine", "half_sine"):
    axes[0].plot(u, lg.ramp_value(kind, u), label=kind)
axes[0].legend(fontsize=8)
axes[0].set(title="ramp shapes", xlabel="in-phase coordinate", ylabel="progress")

# --- random sequences for each material kind -------------------------------
for kind, color in (("hyperelastic", "tab:green"), ("elastoplastic", "tab:blue"),
                    ("viscoelastic", "tab:orange")):
    spec = lg.SequenceSpec(seq_len=400, phases=5, model_kind=kind, seed=3)
    for i in range(2):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([3, 2, i])))
        seq = lg.assemble_sequence(lg.sample_controls(spec, rng),
                                   lg.sample_ramp_kinds(spec, rng), spec)
        axes[1].plot(seq.values, color=color, alpha=0.7,
                     label=kind if i == 0 else None)
        for b in seq.phase_boundaries[:-1]:
            axes[1].axvline(b, color="gray", lw=0.3)
axes[1].legend(fontsize=8)
axes[1].set(title="assembled sequences (5 phases)", xlabel="increment")
fig.tight_layout()
fig.savefig(OUT / "02_loading_sequences.png", dpi=130)
print(f"wrote {OUT / '02_loading_sequences.png'}")

# --- a full dataset ---------------------------------------------------------
spec = lg.SequenceSpec(seq_len=200, phases=5, model_kind="elastoplastic", seed=11)
ds = lg.generate_dataset(spec, cm.PrandtlReussParams(e_mod=1.0, sigma_y=0.6), 64)
print("split sizes:", {k: len(v) for k, v in ds.split.items()})
print("target channels:", ds.target_names, "| history channels:", ds.history_names)
print("train-split input mean/std:", ds.normalization.input_mean, ds.normalization.input_std)
x, y = ds.arrays("train")
print(f"standardized train tensors: X {x.shape}, Y {y.shape}, "
      f"Y channel std = {y.std(axis=(0, 1))}")
