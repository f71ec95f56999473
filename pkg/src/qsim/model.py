"""Device model and Hamiltonians for a mechanical beam coupled to a flux qubit.

A suspended current-carrying beam sits across a gradiometric qubit's SQUID
loop; its displacement modulates the loop flux and hence the qubit gap, giving
a longitudinal coupling g sigma_z (a + a+).  Driving the qubit at sideband
frequencies and letting it decay turns the qubit into a cold reservoir that
can cool, squeeze, or trap the beam in a phonon cat state.

Every frequency-like quantity in this module is angular (rad/s).  Config
ingestion from ordinary-frequency units happens in :mod:`qsim.scenarios`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.constants import hbar, k as k_B, mu_0, physical_constants

from .fockspace import (
    Operator,
    SpaceTag,
    composite_tag,
    identity,
    ladder_operators,
    number_operator,
    oscillator_tag,
    qubit_operators,
    qubit_tag,
    tensor,
)

__all__ = [
    "DeviceParams",
    "DriveSpec",
    "EffectiveModel",
    "SplitHamiltonian",
    "Coupling",
    "ShiftedFrequencies",
    "flux_sensitivity_from_ghz_per_mphi0",
    "derive_coupling",
    "thermal_occupation",
    "build_lab_hamiltonian",
    "build_polaron_expanded",
    "shifted_frequencies",
    "build_squeeze_effective",
    "build_cooling_jc",
    "predicted_cooling_limit",
    "build_cat_effective",
]

PHI_0 = physical_constants["mag. flux quantum"][0]  # Wb

# Validity guard for the second-order expansion in lam = g / omega_m.
LAMBDA_MAX = 0.2


def flux_sensitivity_from_ghz_per_mphi0(value: float) -> float:
    """Convert a gap flux sensitivity from GHz per milli-flux-quantum to
    rad/s per flux quantum."""
    return value * 2.0 * math.pi * 1e9 * 1e3


@dataclass(frozen=True)
class DeviceParams:
    """Physical device parameters, all SI.

    ``flux_sensitivity`` is dDelta/df in rad/s per flux quantum, with the
    SQUID flux f measured in units of Phi_0.  ``energy_bias`` must stay zero:
    every protocol here operates the qubit at its symmetry point.  The last
    three fields are informational and take no part in any computation.
    """

    beam_current: float            # A
    beam_length: float             # m
    squid_width: float             # m, beam-to-opposite-edge distance d
    squid_length: float            # m, informational for the geometry sketch
    beam_mass: float               # kg, effective mass of the fundamental mode
    omega_m: float                 # rad/s mechanical frequency
    flux_sensitivity: float        # rad/s per Phi_0
    temperature: float             # K
    energy_bias: float = 0.0       # rad/s, must be 0
    persistent_current: float | None = None   # A, informational
    mutual_inductance: float | None = None    # H, informational
    dipole_moment: float | None = None        # informational

    def __post_init__(self) -> None:
        for name in ("beam_current", "beam_length", "squid_width", "squid_length",
                     "beam_mass", "omega_m", "flux_sensitivity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.energy_bias != 0.0:
            raise ValueError("energy_bias must be 0: protocols assume the flux sweet spot")


class Coupling(NamedTuple):
    g: float       # rad/s
    lam: float     # dimensionless g / omega_m


def derive_coupling(params: DeviceParams) -> Coupling:
    """Longitudinal coupling from the device geometry.

    The beam, carrying current I along length L at distance d across the
    loop, threads flux (mu_0 I L / pi d) x into the SQUID when displaced
    by x.  Evaluated at one zero-point length x_zpf = sqrt(hbar / 2 m
    omega_m) and converted through the gap sensitivity, this gives

        g = R * (mu_0 I L / (pi d)) * x_zpf / Phi_0.
    """
    x_zpf = math.sqrt(hbar / (2.0 * params.beam_mass * params.omega_m))
    flux_per_meter = mu_0 * params.beam_current * params.beam_length / (
        math.pi * params.squid_width)
    g = params.flux_sensitivity * flux_per_meter * x_zpf / PHI_0
    return Coupling(g=g, lam=g / params.omega_m)


def thermal_occupation(omega_m: float, temperature: float) -> float:
    """Bose occupation of the mechanical mode at the given temperature."""
    if omega_m <= 0:
        raise ValueError("omega_m must be positive")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(hbar * omega_m / (k_B * temperature))


@dataclass(frozen=True)
class DriveSpec:
    """One transverse qubit drive: 2 strength cos(frequency t) sigma_x."""

    strength: float    # rad/s, signed
    frequency: float   # rad/s
    role: str = ""     # red_sideband / blue_sideband / two_phonon_sideband / resonant

    def __post_init__(self) -> None:
        if self.frequency < 0:
            raise ValueError("drive frequency must be >= 0")


@dataclass(frozen=True)
class SplitHamiltonian:
    """H(t) = static + sum_k [ A_k exp(-i w_k t) + A_k^+ exp(+i w_k t) ].

    Keeping the phase factors symbolic lets the propagator cache the
    superoperators of the parts and rescale them each step.
    """

    static: Operator
    parts: tuple[tuple[Operator, float], ...] = ()

    @property
    def tag(self) -> SpaceTag:
        return self.static.tag

    def at(self, t: float) -> Operator:
        h = self.static
        for op, freq in self.parts:
            phase = np.exp(-1j * freq * t)
            h = h + phase * op + np.conj(phase) * op.dag()
        return h


@dataclass(frozen=True)
class EffectiveModel:
    """A Hamiltonian together with the frame it is written in.

    ``frame`` is one of lab / polaron_expanded / squeeze_effective /
    cooling_jc / cat_effective.  ``constants`` records the derived model
    parameters (rad/s unless dimensionless) for reports.
    """

    hamiltonian: Operator | SplitHamiltonian
    frame: str
    constants: dict[str, float]

    @property
    def tag(self) -> SpaceTag:
        return self.hamiltonian.tag


def _composite_parts(n_trunc: int):
    a, adag = ladder_operators(n_trunc)
    num = number_operator(n_trunc)
    eye_osc = identity(oscillator_tag(n_trunc))
    q = qubit_operators()
    eye_q = identity(qubit_tag())
    return a, adag, num, eye_osc, q, eye_q


def build_lab_hamiltonian(
    omega_q: float,
    omega_m: float,
    g: float,
    drives: tuple[DriveSpec, ...] | list[DriveSpec],
    t: float,
    n_trunc: int,
) -> Operator:
    """Laboratory-frame Hamiltonian at time t:

    H = (omega_q / 2) sigma_z + omega_m a+ a + g sigma_z (a + a+)
        + sum_i 2 eps_i cos(omega_i t) sigma_x
    """
    if omega_q <= 0 or omega_m <= 0:
        raise ValueError("omega_q and omega_m must be positive")
    a, adag, num, eye_osc, q, eye_q = _composite_parts(n_trunc)
    h = 0.5 * omega_q * tensor(q["sz"], eye_osc) \
        + omega_m * tensor(eye_q, num) \
        + g * tensor(q["sz"], a + adag)
    drive_amp = sum(2.0 * d.strength * math.cos(d.frequency * t) for d in drives)
    if drives:
        h = h + drive_amp * tensor(q["sx"], eye_osc)
    return Operator(h.tag, h.data, hermitian_hint=True)


class ShiftedFrequencies(NamedTuple):
    delta_tilde: float    # dressed qubit splitting, rad/s
    omega_m_prime: float  # drive-shifted mechanical frequency, rad/s


def shifted_frequencies(delta: float, eps1: float, g: float, omega_m: float) -> ShiftedFrequencies:
    """Drive-dressed frequencies entering the two-phonon resonance condition.

    The strong off-resonant drive eps1 dresses the qubit gap to
    sqrt(delta^2 + 4 eps1^2) and softens the mechanical frequency by
    4 eps1^2 g^2 / (3 omega_m^3).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    delta_tilde = math.sqrt(delta * delta + 4.0 * eps1 * eps1)
    omega_m_prime = omega_m - 4.0 * eps1 * eps1 * g * g / (3.0 * omega_m ** 3)
    return ShiftedFrequencies(delta_tilde, omega_m_prime)


def build_polaron_expanded(
    delta: float,
    omega_m: float,
    lam: float,
    eps1: float,
    eps2: float,
    delta12: float,
    n_trunc: int,
) -> EffectiveModel:
    """Polaron-frame Hamiltonian expanded to second order in lam.

    In the frame rotating at the strong drive's frequency, with the
    displacement exp[-lam sigma_z (a+ - a)] already absorbed,

        H(t) = (delta / 2) sigma_z + omega_m a+ a + eps1 sigma_x
               + 2 eps1 [ lam sigma_+ (a+ - a) + lam^2 sigma_+ (a+ - a)^2 + H.c. ]
               + [ eps2 sigma_+ exp(-i delta12 t) + H.c. ]

    delta12 is the frequency gap between the two drives.  The time-dependent
    part is returned split from the static part.
    """
    if np.imag(lam) != 0:
        raise ValueError("lam must be real")
    lam = float(np.real(lam))
    if abs(lam) > LAMBDA_MAX:
        raise ValueError(f"|lam| = {abs(lam)} outside the expansion's validity (<= {LAMBDA_MAX})")
    if abs(eps2) > 0.1 * abs(eps1):
        warnings.warn(
            "weak-probe assumption strained: |eps2| > 0.1 |eps1|", stacklevel=2)
    a, adag, num, eye_osc, q, eye_q = _composite_parts(n_trunc)
    disp = adag - a
    k = 2.0 * eps1 * lam * tensor(q["sp"], disp) \
        + 2.0 * eps1 * lam * lam * tensor(q["sp"], disp @ disp)
    static = 0.5 * delta * tensor(q["sz"], eye_osc) \
        + omega_m * tensor(eye_q, num) \
        + eps1 * tensor(q["sx"], eye_osc) \
        + k + k.dag()
    probe = eps2 * tensor(q["sp"], eye_osc)
    ham = SplitHamiltonian(static=static, parts=((probe, delta12),))
    constants = {"delta": delta, "omega_m": omega_m, "lam": lam,
                 "eps1": eps1, "eps2": eps2, "delta12": delta12}
    return EffectiveModel(hamiltonian=ham, frame="polaron_expanded", constants=constants)


def build_squeeze_effective(
    lam: float,
    eps_minus: float,
    eps_plus: float,
    n_trunc: int,
) -> EffectiveModel:
    """Beam-splitter coupling to the Bogoliubov mode of a two-sideband drive.

    H = Theta (sigma_+ B + B+ sigma_-) with B = a+ sinh(eta) + a cosh(eta),
    tanh(eta) = -eps_plus / eps_minus and Theta = 2 lam
    sqrt(eps_minus^2 - eps_plus^2).  Requires eps_minus > |eps_plus| >= 0,
    otherwise the engineered reservoir is not stable.
    """
    if not eps_minus > abs(eps_plus):
        raise ValueError("need eps_minus > |eps_plus| for a stable Bogoliubov mode")
    if eps_plus < 0:
        raise ValueError("eps_plus must be >= 0")
    eta = math.atanh(-eps_plus / eps_minus)
    theta = 2.0 * lam * math.sqrt(eps_minus ** 2 - eps_plus ** 2)
    a, adag, num, eye_osc, q, eye_q = _composite_parts(n_trunc)
    b = math.sinh(eta) * adag + math.cosh(eta) * a
    h = theta * tensor(q["sp"], b)
    h = h + h.dag()
    constants = {"theta": theta, "eta": eta, "lam": lam,
                 "eps_minus": eps_minus, "eps_plus": eps_plus}
    return EffectiveModel(
        hamiltonian=Operator(h.tag, h.data, hermitian_hint=True),
        frame="squeeze_effective",
        constants=constants,
    )


def build_cooling_jc(lam: float, eps_minus: float, n_trunc: int) -> EffectiveModel:
    """Resonant exchange coupling g_c (sigma_+ a + a+ sigma_-), g_c = 2 lam eps_minus.

    This is the eps_plus = 0 limit of the squeeze model: the Bogoliubov mode
    degenerates to the bare mode and the qubit cools it like a lossy cavity.
    """
    if eps_minus <= 0:
        raise ValueError("eps_minus must be positive")
    g_c = 2.0 * lam * eps_minus
    a, adag, num, eye_osc, q, eye_q = _composite_parts(n_trunc)
    h = g_c * tensor(q["sp"], a)
    h = h + h.dag()
    constants = {"g_c": g_c, "lam": lam, "eps_minus": eps_minus}
    return EffectiveModel(
        hamiltonian=Operator(h.tag, h.data, hermitian_hint=True),
        frame="cooling_jc",
        constants=constants,
    )


class CoolingPrediction(NamedTuple):
    n_bar: float           # predicted stationary occupation
    cooperativity: float   # g_c^2 / (gamma Gamma)


def predicted_cooling_limit(
    n_th: float, gamma: float, big_gamma: float, g_c: float
) -> CoolingPrediction:
    """Adiabatic-elimination estimate of the cooling floor.

    n_bar = n_th gamma Gamma / (2 g_c^2) and C = g_c^2 / (gamma Gamma).
    Valid deep in the weak-coupling regime; a warning is raised when
    Gamma < 5 g_c where the estimate degrades.  gamma = 0 is the lossless
    oscillator: the floor is exactly 0 and the cooperativity diverges.
    """
    if min(n_th, gamma, big_gamma, g_c) < 0 or big_gamma == 0 or g_c == 0:
        raise ValueError("Gamma and g_c must be positive (n_th and gamma may be 0)")
    if big_gamma < 5.0 * g_c:
        warnings.warn(
            "adiabatic estimate outside its comfort zone: Gamma < 5 g_c", stacklevel=2)
    if gamma == 0:
        return CoolingPrediction(n_bar=0.0, cooperativity=math.inf)
    n_bar = n_th * gamma * big_gamma / (2.0 * g_c ** 2)
    cooperativity = g_c ** 2 / (gamma * big_gamma)
    return CoolingPrediction(n_bar=n_bar, cooperativity=cooperativity)


def build_cat_effective(
    theta_c: float,
    eps2: float,
    delta_d: float,
    n_trunc: int,
) -> EffectiveModel:
    """Two-phonon exchange plus resonant probe:

    H = (delta_d / 2) a+ a + [ theta_c sigma_+ a^2 + eps2 sigma_+ + H.c. ]

    The dark state satisfies (theta_c a^2 + eps2)|psi> = 0, i.e. a cat of
    amplitude alpha_target = sqrt(-eps2 / theta_c); eps2 and theta_c must
    therefore carry opposite signs (eps2 = 0 is allowed and leaves vacuum
    dark).  A probe detuning delta_d shifts the two-phonon resonance by
    delta_d per phonon pair while keeping the probe itself resonant.
    """
    if theta_c <= 0:
        raise ValueError("theta_c must be positive")
    if eps2 * theta_c > 0:
        raise ValueError("eps2 must be <= 0 so that alpha_target^2 = -eps2/theta_c >= 0")
    a, adag, num, eye_osc, q, eye_q = _composite_parts(n_trunc)
    k = theta_c * tensor(q["sp"], a @ a) + eps2 * tensor(q["sp"], eye_osc)
    h = 0.5 * delta_d * tensor(eye_q, num) + k + k.dag()
    alpha_target = math.sqrt(-eps2 / theta_c)
    constants = {"theta_c": theta_c, "eps2": eps2, "delta_d": delta_d,
                 "alpha_target": alpha_target}
    return EffectiveModel(
        hamiltonian=Operator(h.tag, h.data, hermitian_hint=True),
        frame="cat_effective",
        constants=constants,
    )
