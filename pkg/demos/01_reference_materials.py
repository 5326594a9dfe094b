#!/usr/bin/env python3
"""Tour of the three reference constitutive models.

Evaluates each model on an illustrative loading path and plots the
response together with its history variables. Outputs land in
``demos/output/``.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mechxai import constitutive as cm

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


class Driving:
    def __init__(self, values, dt):
        self.values = values
        self.dt = dt


fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))

# --- Neo-Hooke hyperelasticity: nonlinear but path independent ------------
stretch = np.linspace(0.2, 3.0, 200)
stress = cm.neo_hooke_stress(stretch, cm.NeoHookeParams(mu=1.0))
axes[0].plot(stretch, stress)
axes[0].axvline(1.0, color="gray", lw=0.5)
axes[0].set(title="Neo-Hooke", xlabel="stretch", ylabel="Cauchy stress")
print(f"Neo-Hooke: stress(0.2) = {stress[0]:.3f}, stress(3.0) = {stress[-1]:.3f}, "
      "singular as stretch -> 0")

# --- Prandtl-Reuss elastoplasticity: hysteresis with flat yield plateaus ---
strain = np.concatenate([np.linspace(0, 1, 100), np.linspace(1, -1, 200),
                         np.linspace(-1, 1, 200)])
rec = cm.evaluate_sequence("elastoplastic", cm.PrandtlReussParams(e_mod=1.0, sigma_y=0.6),
                           Driving(strain, dt=1.0 / len(strain)))
axes[1].plot(strain, rec.targets[:, 0], lw=1.0)
axes[1].set(title="Prandtl-Reuss cycle", xlabel="strain", ylabel="stress")
print(f"elastoplastic cycle: plateaus at +/-0.6, final plastic strain "
      f"{rec.histories['plastic_strain'][-1]:+.3f}")

# --- Poynting-Thomson viscoelasticity: creep under a held stress ----------
pt = cm.PoyntingThomsonParams(e_inf=1.0, e_branch=0.5, tau_branch=0.1667)
T = 1000
dt = 1.0 / T
stress_path = np.concatenate([np.linspace(0, 1, 100), np.ones(T - 100)])
rec = cm.evaluate_sequence("viscoelastic", pt, Driving(stress_path, dt))
t = np.arange(1, T + 1) * dt
axes[2].plot(t, rec.targets[:, 0], label="strain (integrated)")
axes[2].plot(t, cm.creep_compliance(t, pt), "--", label="step-stress compliance")
axes[2].plot(t, rec.histories["branch_stress"], label="branch stress")
axes[2].legend(fontsize=8)
axes[2].set(title="Poynting-Thomson creep", xlabel="time")
print(f"viscoelastic creep: strain 1/(E+E1) = {1/1.5:.3f} -> 1/E = 1.0; "
      f"final strain {rec.targets[-1, 0]:.3f}")

fig.tight_layout()
fig.savefig(OUT / "01_reference_materials.png", dpi=130)
print(f"wrote {OUT / '01_reference_materials.png'}")
