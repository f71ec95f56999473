"""Vectorized Lindblad dynamics: superoperator assembly, propagation, steady states.

Density matrices are stacked column-wise, vec(rho) = rho.flatten(order='F'),
so that vec(A rho B) = (B^T kron A) vec(rho).  The full generator

    d rho / dt = -i [H, rho] + sum_k r_k D[c_k] rho,
    D[c] rho = c rho c+ - (c+ c rho + rho c+ c) / 2

becomes one sparse matrix; time-periodic Hamiltonian parts keep their
superoperators cached and only their scalar phases are re-evaluated while
stepping.  Propagation runs an adaptive embedded Runge-Kutta pair on the
vectorized state.  Steady states come from a direct sparse LU solve with the
trace condition replacing one (linearly dependent) row of the generator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .fockspace import (
    EVOLVED_POSITIVITY_ATOL,
    DensityMatrix,
    Ket,
    Operator,
    SpaceMismatchError,
    SpaceTag,
    expectation,
)
from .model import SplitHamiltonian

__all__ = [
    "DissipatorSpec",
    "Liouvillian",
    "Trajectory",
    "SolverError",
    "DegenerateSteadyStateError",
    "build_liouvillian",
    "evolve",
    "steady_state",
]

TRACE_DRIFT_TOL = 1e-7
STEADY_RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """Integration or linear-algebra failure inside the dynamics layer."""


class DegenerateSteadyStateError(SolverError):
    """The generator has more than one stationary state; evolution must pick one."""


@dataclass(frozen=True)
class DissipatorSpec:
    """One Lindblad channel: rate * D[op]."""

    op: Operator
    rate: float

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ValueError(f"dissipator rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class Liouvillian:
    """Sparse generator acting on vectorized density matrices.

    ``static`` holds the time-independent part; each entry of ``td_parts`` is
    a (superoperator, frequency) pair contributing exp(-i freq t) * superop.
    ``scale`` is the infinity-norm of the static part, used to express
    residuals in dimensionless form.
    """

    tag: SpaceTag
    static: sp.csr_matrix
    td_parts: tuple[tuple[sp.csr_matrix, float], ...] = ()
    scale: float = 1.0

    @property
    def dim(self) -> int:
        return self.tag.dim

    @property
    def is_time_dependent(self) -> bool:
        return len(self.td_parts) > 0

    def action(self, t: float, rho_vec: np.ndarray) -> np.ndarray:
        out = self.static @ rho_vec
        for part, freq in self.td_parts:
            out += np.exp(-1j * freq * t) * (part @ rho_vec)
        return out


def _commutator_superop(h: sp.csr_matrix) -> sp.csr_matrix:
    d = h.shape[0]
    eye = sp.identity(d, dtype=np.complex128, format="csr")
    return (-1j * (sp.kron(eye, h, format="csr") - sp.kron(h.T, eye, format="csr"))).tocsr()


def _dissipator_superop(c: sp.csr_matrix, rate: float) -> sp.csr_matrix:
    d = c.shape[0]
    eye = sp.identity(d, dtype=np.complex128, format="csr")
    cdc = (c.getH() @ c).tocsr()
    jump = sp.kron(c.conj(), c, format="csr")
    anti = 0.5 * (sp.kron(eye, cdc, format="csr") + sp.kron(cdc.T, eye, format="csr"))
    return (rate * (jump - anti)).tocsr()


def build_liouvillian(
    hamiltonian: Operator | SplitHamiltonian,
    dissipators: list[DissipatorSpec] | tuple[DissipatorSpec, ...] = (),
) -> Liouvillian:
    """Assemble the sparse generator for the given Hamiltonian and channels.

    Accepts either a static Operator or a SplitHamiltonian whose oscillating
    parts become cached (superoperator, frequency) pairs, the Hermitian
    partner carried explicitly at the opposite frequency.
    """
    if isinstance(hamiltonian, SplitHamiltonian):
        static_h = hamiltonian.static
        osc_parts = hamiltonian.parts
    else:
        static_h = hamiltonian
        osc_parts = ()
    tag = static_h.tag
    herm_defect = abs(static_h.data - static_h.data.getH()).max()
    if herm_defect > 1e-9 * max(1.0, abs(static_h.data).max()):
        raise ValueError(f"static Hamiltonian is not Hermitian: defect {herm_defect:.3e}")

    gen = _commutator_superop(static_h.data)
    for spec in dissipators:
        if spec.op.tag != tag:
            raise SpaceMismatchError("dissipator operator lives on a different space")
        if spec.rate > 0:
            gen = gen + _dissipator_superop(spec.op.data, spec.rate)

    td: list[tuple[sp.csr_matrix, float]] = []
    for op, freq in osc_parts:
        if op.tag != tag:
            raise SpaceMismatchError("time-dependent part lives on a different space")
        td.append((_commutator_superop(op.data), float(freq)))
        td.append((_commutator_superop(op.data.getH().tocsr()), -float(freq)))

    gen = gen.tocsr()
    scale = float(abs(gen).max()) if gen.nnz else 1.0
    return Liouvillian(tag=tag, static=gen, td_parts=tuple(td), scale=max(scale, 1.0))


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the master equation.

    ``observables`` maps names to complex arrays aligned with ``times``.
    ``states`` is populated when the caller asked to retain them.
    ``diagnostics`` records worst-case trace drift and Hermiticity defect
    across the samples, plus integrator statistics.
    """

    times: np.ndarray
    observables: dict[str, np.ndarray]
    states: list[DensityMatrix] | None
    diagnostics: dict[str, float] = field(default_factory=dict)


def _as_vec(rho0: DensityMatrix | Ket) -> tuple[np.ndarray, SpaceTag]:
    if isinstance(rho0, Ket):
        rho0 = rho0.to_density_matrix()
    return rho0.data.flatten(order="F"), rho0.tag


def evolve(
    liouvillian: Liouvillian,
    rho0: DensityMatrix | Ket,
    sample_times: np.ndarray,
    observables: dict[str, Operator] | None = None,
    *,
    rtol: float = 1e-8,
    atol: float | None = None,
    method: str = "DOP853",
    retain_states: bool = False,
) -> Trajectory:
    """Integrate the master equation and sample it at the requested times.

    ``sample_times`` must be strictly increasing and start at t >= 0;
    integration begins at t = 0 where ``rho0`` is defined.  Each sample is
    re-symmetrized as (rho + rho+)/2 before use and validated as a density
    matrix with the relaxed positivity floor; the worst Hermiticity and trace
    drifts are reported in the trajectory diagnostics.

    ``atol`` defaults to ``rtol * 1e-4``: near-zero matrix elements must be
    resolved more finely than the relative tolerance alone enforces, or their
    error accumulates as spurious negative eigenvalues.  A fixed floor would
    stop tracking rtol when a convergence rerun tightens it.
    """
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("sample_times must be a non-empty 1-D array")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    if times[0] < 0:
        raise ValueError("sample_times must start at t >= 0")

    if atol is None:
        atol = rtol * 1e-4

    y0, tag = _as_vec(rho0)
    if tag != liouvillian.tag:
        raise SpaceMismatchError("initial state lives on a different space than the generator")
    obs = observables or {}
    for name, op in obs.items():
        if op.tag != tag:
            raise SpaceMismatchError(f"observable {name!r} lives on a different space")

    if liouvillian.is_time_dependent:
        rhs = liouvillian.action
    else:
        static = liouvillian.static

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            return static @ y

    t_end = float(times[-1])
    sol = solve_ivp(
        rhs, (0.0, t_end), y0, method=method, t_eval=times,
        rtol=rtol, atol=atol, dense_output=False,
    )
    if not sol.success:
        raise SolverError(f"integration failed at t = {sol.t[-1] if sol.t.size else 0.0}: "
                          f"{sol.message}")

    dim = liouvillian.dim
    n_samples = times.size
    series: dict[str, np.ndarray] = {
        name: np.empty(n_samples, dtype=np.complex128) for name in obs
    }
    states: list[DensityMatrix] | None = [] if retain_states else None
    max_herm = 0.0
    max_trace = 0.0
    for k in range(n_samples):
        mat = sol.y[:, k].reshape((dim, dim), order="F")
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        max_herm = max(max_herm, herm)
        mat = 0.5 * (mat + mat.conj().T)
        tr = float(np.real(np.trace(mat)))
        max_trace = max(max_trace, abs(tr - 1.0))
        state = DensityMatrix(tag, mat / tr, positivity_atol=EVOLVED_POSITIVITY_ATOL)
        for name, op in obs.items():
            series[name][k] = expectation(op, state)
        if states is not None:
            states.append(state)

    diagnostics = {
        "max_trace_drift": max_trace,
        "max_hermiticity_defect": max_herm,
        "n_rhs_evaluations": float(sol.nfev),
    }
    if max_trace > TRACE_DRIFT_TOL:
        warnings.warn(
            f"trace drift {max_trace:.3e} exceeds {TRACE_DRIFT_TOL:.0e}; "
            "tighten the integrator tolerance", stacklevel=2)
    return Trajectory(times=times, observables=series, states=states,
                      diagnostics=diagnostics)


def _solve_with_trace_row(
    gen: sp.csr_matrix, dim: int, replace_row: int
) -> np.ndarray:
    """Replace one row of the generator by the trace functional and solve."""
    d2 = dim * dim
    a = gen.tolil(copy=True)
    trace_row = np.zeros(d2, dtype=np.complex128)
    trace_row[np.arange(dim) * (dim + 1)] = 1.0  # diagonal slots of vec(rho)
    a[replace_row, :] = trace_row
    b = np.zeros(d2, dtype=np.complex128)
    b[replace_row] = 1.0
    lu = spla.splu(a.tocsc())
    x = lu.solve(b)
    # One step of iterative refinement pushes the residual to the backward-
    # stable floor, which matters at 1e-10 scaled tolerance.
    r = b - a.tocsr() @ x
    x = x + lu.solve(r)
    return x


def steady_state(liouvillian: Liouvillian) -> DensityMatrix:
    """Stationary state of a static generator via direct sparse LU.

    The trace row replaces row 0, which is redundant because the trace
    functional is a left null vector of any Lindblad generator.  The result
    must reproduce L rho = 0 with scaled residual ||L rho||_2 / ||L||_inf
    below 1e-10.  A second solve with a different replaced row cross-checks
    uniqueness: disagreement (or a singular factorization) means the null
    space is degenerate and the caller should select the stationary state by
    evolving instead.
    """
    if liouvillian.is_time_dependent:
        raise ValueError("steady_state requires a time-independent generator")
    dim = liouvillian.dim
    gen = (liouvillian.static / liouvillian.scale).tocsr()

    try:
        x0 = _solve_with_trace_row(gen, dim, replace_row=0)
        x1 = _solve_with_trace_row(gen, dim, replace_row=dim + 1)
    except RuntimeError as exc:  # splu signals exact singularity this way
        raise DegenerateSteadyStateError(
            f"stationary state is not unique or the solve broke down: {exc}") from exc

    for x in (x0, x1):
        if not np.all(np.isfinite(x)):
            raise DegenerateSteadyStateError("singular system: non-finite solution")

    if np.linalg.norm(x0 - x1) > 1e-6 * max(np.linalg.norm(x0), 1.0):
        raise DegenerateSteadyStateError(
            "two trace-row placements disagree: degenerate stationary manifold")

    residual = float(np.linalg.norm(gen @ x0))
    if residual > STEADY_RESIDUAL_TOL:
        raise SolverError(
            f"steady-state residual {residual:.3e} exceeds {STEADY_RESIDUAL_TOL:.0e}")

    mat = x0.reshape((dim, dim), order="F")
    mat = 0.5 * (mat + mat.conj().T)
    mat = mat / np.real(np.trace(mat))
    return DensityMatrix(liouvillian.tag, mat)
