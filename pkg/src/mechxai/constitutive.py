"""One-dimensional reference constitutive models.

Three classical material models produce the ground-truth responses and the
algorithmic history variables used to train networks and, later, to check
what a trained network has learned:

* Neo-Hooke hyperelasticity: stretch -> Cauchy stress, path independent.
* Poynting-Thomson (standard linear solid) viscoelasticity: one Maxwell
  branch in parallel with an elastic spring, integrated with an implicit
  backward Euler scheme; the branch stress is the history variable.
* Prandtl-Reuss elastoplasticity with linear isotropic and kinematic
  hardening, integrated with the classical radial-return mapping; plastic
  strain and the hardening variables are the history variables.

All step functions are pure: they take a state value and return a new one.
They accept floats or numpy arrays of matching shape, so whole batches of
independent sequences can be stepped in lockstep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "NeoHookeParams",
    "PoyntingThomsonParams",
    "ViscoState",
    "PrandtlReussParams",
    "PlasticState",
    "MaterialRecord",
    "neo_hooke_stress",
    "relaxation_modulus",
    "creep_compliance",
    "visco_step_strain_driven",
    "visco_step_stress_driven",
    "plastic_step",
    "evaluate_sequence",
]

MODEL_KINDS = ("hyperelastic", "elastoplastic", "viscoelastic")


# ---------------------------------------------------------------------------
# Parameter and state containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NeoHookeParams:
    """Incompressible Neo-Hooke model with a single shear-like modulus."""

    mu: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class PoyntingThomsonParams:
    """Standard linear solid: spring e_inf parallel to one Maxwell branch."""

    e_inf: float = 1.0
    e_branch: float = 0.5
    tau_branch: float = 0.1667

    def __post_init__(self):
        for name in ("e_inf", "e_branch", "tau_branch"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class ViscoState:
    """Current stress, strain, and Maxwell-branch overstress.

    The decomposition ``branch_stress = stress - e_inf * strain`` holds by
    construction after every step.
    """

    stress: float = 0.0
    strain: float = 0.0
    branch_stress: float = 0.0


@dataclass(frozen=True)
class PrandtlReussParams:
    """Rate-independent plasticity with linear hardening.

    Perfect plasticity is the special case ``k_iso = h_kin = 0``.
    """

    e_mod: float = 1.0
    sigma_y: float = 0.6
    k_iso: float = 0.0
    h_kin: float = 0.0

    def __post_init__(self):
        if not self.e_mod > 0:
            raise DomainError(f"e_mod must be positive, got {self.e_mod}")
        if not self.sigma_y > 0:
            raise DomainError(f"sigma_y must be positive, got {self.sigma_y}")
        if self.k_iso < 0 or self.h_kin < 0:
            raise DomainError("hardening moduli k_iso and h_kin must be non-negative")


@dataclass(frozen=True)
class PlasticState:
    """Plastic strain, accumulated plastic multiplier, and back stress."""

    plastic_strain: float = 0.0
    iso_hardening: float = 0.0
    back_stress: float = 0.0


# ---------------------------------------------------------------------------
# Hyperelasticity
# ---------------------------------------------------------------------------

def neo_hooke_stress(stretch, params: NeoHookeParams):
    """Cauchy stress ``mu * (stretch^2 - 1/stretch)`` of the Neo-Hooke model.

    Accepts scalars or arrays. Stretch values must be strictly positive;
    the response is singular as the stretch approaches zero.
    """
    lam = np.asarray(stretch, dtype=np.float64)
    if not np.all(lam > 0):
        bad = int(np.argmin(lam > 0)) if lam.ndim else 0
        val = lam.flat[bad] if lam.ndim else float(lam)
        raise DomainError(f"stretch must be positive; increment {bad} has stretch {val}")
    tau = params.mu * (lam**2 - 1.0 / lam)
    return tau if lam.ndim else float(tau)


# ---------------------------------------------------------------------------
# Viscoelasticity (standard linear solid)
# ---------------------------------------------------------------------------

def relaxation_modulus(t, params: PoyntingThomsonParams):
    """Stress response to a unit step strain: ``e_inf + e_branch * exp(-t/tau)``."""
    ts = np.asarray(t, dtype=np.float64)
    if not np.all(ts >= 0):
        raise DomainError(f"time must be non-negative, got {t}")
    r = params.e_inf + params.e_branch * np.exp(-ts / params.tau_branch)
    return r if ts.ndim else float(r)


def creep_compliance(t, params: PoyntingThomsonParams):
    """Strain response to a unit step stress.

    Instantaneous compliance is ``1/(e_inf + e_branch)``; the equilibrium
    value ``1/e_inf`` is approached with retardation time
    ``tau * (e_inf + e_branch) / e_inf``.
    """
    ts = np.asarray(t, dtype=np.float64)
    if not np.all(ts >= 0):
        raise DomainError(f"time must be non-negative, got {t}")
    e, e1, tau = params.e_inf, params.e_branch, params.tau_branch
    c = 1.0 / (e + e1) + e1 / (e * (e + e1)) * (1.0 - np.exp(-ts * e / (tau * (e + e1))))
    return c if ts.ndim else float(c)


def _visco_coefficients(dt: float, params: PoyntingThomsonParams):
    # Backward Euler discretization of the branch evolution equation,
    # written against total stress/strain: k = tau/dt.
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    k = params.tau_branch / dt
    c_sig0 = k
    c_sig1 = 1.0 + k
    c_eps0 = k * (params.e_inf + params.e_branch)
    c_eps1 = params.e_inf + c_eps0
    return c_sig0, c_sig1, c_eps0, c_eps1


def visco_step_strain_driven(state: ViscoState, strain_next, dt: float,
                             params: PoyntingThomsonParams):
    """Advance one implicit Euler step under a prescribed next strain.

    Returns ``(stress_next, new_state)``.
    """
    c_sig0, c_sig1, c_eps0, c_eps1 = _visco_coefficients(dt, params)
    stress_next = (c_eps1 * strain_next - c_eps0 * state.strain + c_sig0 * state.stress) / c_sig1
    branch = stress_next - params.e_inf * strain_next
    return stress_next, ViscoState(stress=stress_next, strain=strain_next, branch_stress=branch)


def visco_step_stress_driven(state: ViscoState, stress_next, dt: float,
                             params: PoyntingThomsonParams):
    """Advance one implicit Euler step under a prescribed next stress.

    Algebraic inverse of :func:`visco_step_strain_driven`. Returns
    ``(strain_next, branch_stress_next, new_state)``.
    """
    c_sig0, c_sig1, c_eps0, c_eps1 = _visco_coefficients(dt, params)
    strain_next = (c_sig1 * stress_next - c_sig0 * state.stress + c_eps0 * state.strain) / c_eps1
    branch = stress_next - params.e_inf * strain_next
    return strain_next, branch, ViscoState(stress=stress_next, strain=strain_next,
                                           branch_stress=branch)


# ---------------------------------------------------------------------------
# Elastoplasticity (radial return)
# ---------------------------------------------------------------------------

def plastic_step(state: PlasticState, strain_next, params: PrandtlReussParams):
    """Advance one strain increment with an elastic-predictor/plastic-corrector step.

    The trial stress ``e_mod * (strain - plastic_strain)`` is tested against
    the yield function ``|sigma - back_stress| - (sigma_y + k_iso * iso_hardening)``.
    A positive trial value is returned to the yield surface, which in 1D is
    exact: the plastic multiplier is ``f_trial / (e_mod + k_iso + h_kin)``.

    Returns ``(stress_next, new_state)``. Elastic steps leave the state
    unchanged. Accepts arrays for batched stepping.
    """
    eps = np.asarray(strain_next, dtype=np.float64)
    if not np.all(np.isfinite(eps)):
        raise DomainError("strain must be finite")
    scalar = eps.ndim == 0 and np.isscalar(state.plastic_strain)

    sig_trial = params.e_mod * (eps - state.plastic_strain)
    xi = sig_trial - state.back_stress
    f_trial = np.abs(xi) - (params.sigma_y + params.k_iso * state.iso_hardening)

    dgamma = np.where(f_trial > 0, f_trial / (params.e_mod + params.k_iso + params.h_kin), 0.0)
    direction = np.sign(xi)

    eps_p = state.plastic_strain + dgamma * direction
    q_eps = state.iso_hardening + dgamma
    q_sig = state.back_stress + params.h_kin * dgamma * direction
    stress = params.e_mod * (eps - eps_p)

    if scalar:
        new = PlasticState(float(eps_p), float(q_eps), float(q_sig))
        return float(stress), new
    return stress, PlasticState(eps_p, q_eps, q_sig)


# ---------------------------------------------------------------------------
# Sequence evaluation
# ---------------------------------------------------------------------------

@dataclass
class MaterialRecord:
    """One sample: a driving sequence, its target response, and histories.

    ``inputs`` is the driving signal as a ``(T, 1)`` array, ``targets`` holds
    the per-increment quantities the network must predict, and ``histories``
    maps names of algorithmic history variables to ``(T,)`` series.
    """

    model_kind: str
    driving: object  # anything with .values and .dt, e.g. loadgen.LoadingSequence
    inputs: np.ndarray
    targets: np.ndarray
    target_names: tuple
    histories: dict = field(default_factory=dict)


def evaluate_sequence(model_kind: str, params, driving) -> MaterialRecord:
    """Run a driving sequence through a reference model.

    The driving signal is a stretch sequence for ``hyperelastic``, a strain
    sequence for ``elastoplastic``, and a stress sequence for
    ``viscoelastic``. All models start from the virgin, unloaded state.
    Step-level domain errors are re-raised with the offending increment
    index.
    """
    values = np.asarray(driving.values, dtype=np.float64)
    if values.ndim != 1:
        raise DomainError(f"driving values must be a 1-D array, got shape {values.shape}")
    n = values.shape[0]

    if model_kind == "hyperelastic":
        tau = neo_hooke_stress(values, params)
        targets = tau[:, None]
        names = ("stress",)
        histories = {}

    elif model_kind == "elastoplastic":
        state = PlasticState()
        stress = np.empty(n)
        eps_p = np.empty(n)
        q_eps = np.empty(n)
        q_sig = np.empty(n)
        for t in range(n):
            try:
                s, state = plastic_step(state, float(values[t]), params)
            except DomainError as err:
                raise DomainError(f"increment {t}: {err}") from err
            stress[t] = s
            eps_p[t] = state.plastic_strain
            q_eps[t] = state.iso_hardening
            q_sig[t] = state.back_stress
        targets = np.stack([stress, eps_p], axis=1)
        names = ("stress", "plastic_strain")
        histories = {"plastic_strain": eps_p, "iso_hardening": q_eps, "back_stress": q_sig}

    elif model_kind == "viscoelastic":
        state = ViscoState()
        dt = float(driving.dt)
        strain = np.empty(n)
        branch = np.empty(n)
        for t in range(n):
            try:
                eps, sig1, state = visco_step_stress_driven(state, float(values[t]), dt, params)
            except DomainError as err:
                raise DomainError(f"increment {t}: {err}") from err
            strain[t] = eps
            branch[t] = sig1
        targets = np.stack([strain, branch], axis=1)
        names = ("strain", "branch_stress")
        histories = {"branch_stress": branch.copy()}

    else:
        raise DomainError(f"unknown model kind {model_kind!r}; expected one of {MODEL_KINDS}")

    return MaterialRecord(model_kind=model_kind, driving=driving, inputs=values[:, None],
                          targets=targets, target_names=names, histories=histories)
