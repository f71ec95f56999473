"""Generator assembly, propagation and steady states against dense oracles."""

import math

import numpy as np
import pytest

from qsim.fockspace import (
    DensityMatrix,
    Ket,
    Operator,
    SpaceMismatchError,
    StateSpec,
    composite_tag,
    expectation,
    identity,
    ladder_operators,
    number_operator,
    oscillator_tag,
    prepare_state,
    qubit_operators,
    qubit_tag,
    tensor,
    thermal_state,
)
from qsim.lindblad import (
    DegenerateSteadyStateError,
    DissipatorSpec,
    build_liouvillian,
    evolve,
    steady_state,
)
from qsim.model import SplitHamiltonian, build_cooling_jc

from conftest import dense_ladder, random_density

TWO_PI = 2.0 * math.pi


def dense_rhs(h, cs_rates, rho):
    """Direct-action oracle: -i[H, rho] + sum_k r (c rho c+ - {c+c, rho}/2)."""
    out = -1j * (h @ rho - rho @ h)
    for c, rate in cs_rates:
        cdc = c.conj().T @ c
        out += rate * (c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc))
    return out


# ---------------------------------------------------------------------------
# generator assembly
# ---------------------------------------------------------------------------

def test_vectorized_matches_direct_action(rng):
    """The flattened superoperator reproduces the dense commutator/dissipator
    arithmetic to 1e-12 on random inputs."""
    n = 6
    tag = oscillator_tag(n)
    h_mat = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h_mat = 0.5 * (h_mat + h_mat.conj().T)
    c1 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    c2 = rng.normal(size=(n, n))
    liou = build_liouvillian(
        Operator(tag, h_mat),
        [DissipatorSpec(Operator(tag, c1), 0.7), DissipatorSpec(Operator(tag, c2), 1.9)],
    )
    for _ in range(4):
        rho = random_density(rng, n)
        lhs = (liou.static @ rho.flatten(order="F")).reshape((n, n), order="F")
        rhs = dense_rhs(h_mat, [(c1, 0.7), (c2, 1.9)], rho)
        scale = max(np.max(np.abs(rhs)), 1.0)
        assert np.max(np.abs(lhs - rhs)) / scale < 1e-12


def test_trace_is_left_null_vector(rng):
    # Tr(L rho) = 0 for any rho: probabilities are conserved by construction
    n = 5
    tag = oscillator_tag(n)
    a, adag = ladder_operators(n)
    liou = build_liouvillian(
        number_operator(n) * (TWO_PI * 1e6),
        [DissipatorSpec(a, 1e4), DissipatorSpec(adag, 3e3)],
    )
    trace_vec = np.zeros(n * n)
    trace_vec[np.arange(n) * (n + 1)] = 1.0
    worst = np.max(np.abs(trace_vec @ liou.static))
    assert worst < 1e-9 * liou.scale


def test_rates_must_be_nonnegative():
    a, _ = ladder_operators(4)
    with pytest.raises(ValueError):
        DissipatorSpec(a, -1.0)


def test_static_hamiltonian_must_be_hermitian():
    a, _ = ladder_operators(4)
    with pytest.raises(ValueError, match="Hermitian"):
        build_liouvillian(a, [])


def test_dissipator_space_mismatch():
    a4, _ = ladder_operators(4)
    with pytest.raises(SpaceMismatchError):
        build_liouvillian(number_operator(5), [DissipatorSpec(a4, 1.0)])


def test_split_hamiltonian_action_matches_instantaneous(rng):
    """L(t) applied via cached parts == generator rebuilt from H.at(t)."""
    n = 4
    q = qubit_operators()
    eye_osc = identity(oscillator_tag(n))
    static = 0.5 * TWO_PI * 1e6 * tensor(q["sz"], eye_osc)
    probe = TWO_PI * 5e4 * tensor(q["sp"], eye_osc)
    split = SplitHamiltonian(static=static, parts=((probe, TWO_PI * 2e5),))
    liou = build_liouvillian(split, [])
    rho = random_density(rng, 2 * n)
    vec = rho.flatten(order="F")
    for t in (0.0, 1.3e-6, 7.7e-6):
        expected = build_liouvillian(split.at(t), []).static @ vec
        got = liou.action(t, vec)
        assert np.max(np.abs(got - expected)) < 1e-9 * liou.scale


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def test_qubit_decay_closed_form():
    """p_e(t) = e^{-Gamma t}, coherence decays at Gamma/2."""
    gamma = TWO_PI * 1e5
    q = qubit_operators()
    tag = qubit_tag()
    h = Operator(tag, np.zeros((2, 2)), hermitian_hint=True)
    liou = build_liouvillian(h, [DissipatorSpec(q["sm"], gamma)])
    psi = Ket(tag, np.array([1.0, 1.0]) / math.sqrt(2.0))
    times = np.linspace(1e-9, 3.0 / gamma, 40)
    proj_e = Operator(tag, np.diag([0.0, 1.0]), hermitian_hint=True)
    traj = evolve(liou, psi, times, {"pe": proj_e, "sp": q["sp"]}, rtol=1e-10)
    assert np.allclose(traj.observables["pe"].real, 0.5 * np.exp(-gamma * times), atol=1e-8)
    # <sigma_+> = <g|rho|e> decays at half the population rate
    assert np.allclose(
        np.abs(traj.observables["sp"]), 0.5 * np.exp(-0.5 * gamma * times), atol=1e-8
    )


def test_thermal_state_is_stationary():
    """The truncated thermal channels leave thermal(n_th) exactly invariant."""
    n_th, n = 2.0, 12
    gamma = TWO_PI * 1e3
    a, adag = ladder_operators(n)
    h = number_operator(n) * 0.0
    liou = build_liouvillian(
        h,
        [DissipatorSpec(a, gamma * (n_th + 1.0)), DissipatorSpec(adag, gamma * n_th)],
    )
    rho = thermal_state(n_th, n)
    vec = rho.data.flatten(order="F")
    assert np.max(np.abs(liou.static @ vec)) < 1e-12 * liou.scale


def test_evolve_validates_sample_times():
    gamma = TWO_PI * 1e5
    q = qubit_operators()
    tag = qubit_tag()
    liou = build_liouvillian(
        Operator(tag, np.zeros((2, 2)), hermitian_hint=True),
        [DissipatorSpec(q["sm"], gamma)],
    )
    rho0 = thermal_state(0.0, 2)  # wrong space on purpose for the second check
    psi = Ket(tag, np.array([0.0, 1.0]))
    with pytest.raises(ValueError, match="strictly increasing"):
        evolve(liou, psi, np.array([0.0, 0.0, 1e-6]))
    with pytest.raises(ValueError, match="t >= 0"):
        evolve(liou, psi, np.array([-1e-6, 1e-6]))
    with pytest.raises(SpaceMismatchError):
        evolve(liou, rho0, np.array([1e-6]))
    with pytest.raises(SpaceMismatchError):
        evolve(liou, psi, np.array([1e-6]), {"n": number_operator(2)})


def test_evolve_retains_valid_states():
    gamma = TWO_PI * 1e5
    q = qubit_operators()
    tag = qubit_tag()
    liou = build_liouvillian(
        Operator(tag, np.zeros((2, 2)), hermitian_hint=True),
        [DissipatorSpec(q["sm"], gamma)],
    )
    psi = Ket(tag, np.array([0.0, 1.0]))
    traj = evolve(liou, psi, np.linspace(1e-7, 2e-5, 7), retain_states=True)
    assert traj.states is not None and len(traj.states) == 7
    for s in traj.states:
        assert isinstance(s, DensityMatrix)
    assert traj.diagnostics["max_trace_drift"] < 1e-7
    assert traj.diagnostics["n_rhs_evaluations"] > 0


def test_split_evolution_matches_rotating_frame_oracle():
    """Driven qubit at exact resonance: the cached-phase path must reproduce
    the textbook Rabi flop of the static rotating-frame Hamiltonian."""
    omega = TWO_PI * 4e5  # Rabi rate
    q = qubit_operators()
    tag = qubit_tag()
    zero = Operator(tag, np.zeros((2, 2)), hermitian_hint=True)
    # H(t) = (omega/2)(sigma_+ e^{-i 0 t} + H.c.) written as a split part;
    # frequency zero keeps the oracle trivial: H = (omega/2) sigma_x.
    split = SplitHamiltonian(static=zero, parts=((0.5 * omega * q["sp"], 0.0),))
    liou = build_liouvillian(split, [])
    psi = Ket(tag, np.array([1.0, 0.0]))
    times = np.linspace(1e-9, 2.0 / (omega / TWO_PI), 50)
    proj_e = Operator(tag, np.diag([0.0, 1.0]), hermitian_hint=True)
    traj = evolve(liou, psi, times, {"pe": proj_e}, rtol=1e-10)
    assert np.allclose(
        traj.observables["pe"].real, np.sin(0.5 * omega * times) ** 2, atol=1e-7
    )


# ---------------------------------------------------------------------------
# steady states
# ---------------------------------------------------------------------------

def test_steady_state_cooling_jc_dual_route():
    """Direct LU solve and long-time integration must land on the same state."""
    n = 8
    model = build_cooling_jc(0.06, TWO_PI * 2e6, n)
    q = qubit_operators()
    a, adag = ladder_operators(n)
    eye_osc = identity(oscillator_tag(n))
    eye_q = identity(qubit_tag())
    gamma, big_gamma, n_th = TWO_PI * 2e3, TWO_PI * 0.4e6, 1.0
    diss = [
        DissipatorSpec(tensor(q["sm"], eye_osc), big_gamma),
        DissipatorSpec(tensor(eye_q, a), gamma * (n_th + 1.0)),
        DissipatorSpec(tensor(eye_q, adag), gamma * n_th),
    ]
    liou = build_liouvillian(model.hamiltonian, diss)
    rho_ss = steady_state(liou)

    n_full = tensor(eye_q, number_operator(n))
    psi0 = prepare_state(StateSpec.ground_qubit_product(StateSpec.fock(3)), n)
    t_relax = 40.0 / gamma
    traj = evolve(liou, psi0, np.array([t_relax]), {"n": n_full}, rtol=1e-9)
    n_evolved = traj.observables["n"][-1].real
    n_direct = expectation(n_full, rho_ss).real
    assert abs(n_direct - n_evolved) < 1e-6
    assert 0 < n_direct < n_th  # cooled below the bath occupation


def test_steady_state_detects_degeneracy():
    # no dissipation: every diagonal state is stationary
    liou = build_liouvillian(number_operator(4) * (TWO_PI * 1e6), [])
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(liou)


def test_steady_state_rejects_time_dependent():
    q = qubit_operators()
    tag = qubit_tag()
    zero = Operator(tag, np.zeros((2, 2)), hermitian_hint=True)
    split = SplitHamiltonian(static=zero, parts=((q["sp"], TWO_PI * 1e6),))
    liou = build_liouvillian(split, [DissipatorSpec(q["sm"], 1.0)])
    with pytest.raises(ValueError, match="time-independent"):
        steady_state(liou)


def test_steady_state_driven_qubit_closed_form():
    """Resonantly driven decaying qubit: p_e = s/2/(1+s), s = 2 Omega^2/Gamma^2.

    Textbook optical Bloch result, an independent anchor for both the
    generator signs and the solver.
    """
    omega, gamma = TWO_PI * 1e5, TWO_PI * 3e5
    q = qubit_operators()
    h = 0.5 * omega * q["sx"]
    liou = build_liouvillian(
        Operator(h.tag, h.data, hermitian_hint=True), [DissipatorSpec(q["sm"], gamma)]
    )
    rho = steady_state(liou)
    s = 2.0 * omega**2 / gamma**2
    p_e_expected = 0.5 * s / (1.0 + s)
    assert rho.data[1, 1].real == pytest.approx(p_e_expected, rel=1e-10)
