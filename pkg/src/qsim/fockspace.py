"""Operator algebra on a truncated Fock space, optionally tensored with a qubit.

All operators are sparse (CSR, complex128) and carry a :class:`SpaceTag` so
that mismatched-space arithmetic fails loudly instead of silently broadcasting.
The composite layout is fixed: qubit index slow, oscillator index fast, with
the qubit ground state at index 0.  Truncation artifacts are a fact of life
at the top Fock levels (e.g. the commutator [a, a+] picks up a -N_trunc defect
in its last diagonal entry); state constructors therefore enforce tail
containment instead of pretending the space is infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

__all__ = [
    "SpaceTag",
    "Operator",
    "Ket",
    "DensityMatrix",
    "StateSpec",
    "ladder_operators",
    "number_operator",
    "identity",
    "qubit_operators",
    "tensor",
    "prepare_state",
    "thermal_state",
    "polaron_transform",
    "partial_trace_qubit",
    "expectation",
]

# Construction-time tolerances.  Evolution code may relax the positivity
# floor to EVOLVED_POSITIVITY_ATOL for states sampled mid-integration.
HERMITICITY_ATOL = 1e-10
TRACE_ATOL = 1e-8
POSITIVITY_ATOL = 1e-8
EVOLVED_POSITIVITY_ATOL = 1e-6
KET_NORM_ATOL = 1e-10
TAIL_LEAK_ATOL = 1e-8

QUBIT_OSC = "qubit-osc"


class SpaceMismatchError(ValueError):
    """Raised when operands live on different tagged spaces."""


@dataclass(frozen=True)
class SpaceTag:
    """Identifies the Hilbert space a vector or operator lives on.

    Either factor may be absent: a bare oscillator has ``qubit_levels=None``,
    a bare qubit has ``fock_cutoff=None``.  The composite layout is always
    qubit (slow) x oscillator (fast).
    """

    fock_cutoff: int | None = None
    qubit_levels: int | None = None
    layout: str = QUBIT_OSC

    def __post_init__(self) -> None:
        if self.fock_cutoff is None and self.qubit_levels is None:
            raise ValueError("empty space: need a qubit factor, an oscillator factor, or both")
        if self.fock_cutoff is not None and self.fock_cutoff < 2:
            raise ValueError(f"fock_cutoff must be >= 2, got {self.fock_cutoff}")
        if self.qubit_levels is not None and self.qubit_levels != 2:
            raise ValueError(f"only two-level qubits are supported, got {self.qubit_levels}")
        if self.layout != QUBIT_OSC:
            raise ValueError(f"unsupported layout {self.layout!r}")

    @property
    def dim(self) -> int:
        d = 1
        if self.qubit_levels is not None:
            d *= self.qubit_levels
        if self.fock_cutoff is not None:
            d *= self.fock_cutoff
        return d

    @property
    def has_qubit(self) -> bool:
        return self.qubit_levels is not None

    @property
    def has_oscillator(self) -> bool:
        return self.fock_cutoff is not None

    @property
    def is_composite(self) -> bool:
        return self.has_qubit and self.has_oscillator


def oscillator_tag(n_trunc: int) -> SpaceTag:
    return SpaceTag(fock_cutoff=n_trunc)


def qubit_tag() -> SpaceTag:
    return SpaceTag(qubit_levels=2)


def composite_tag(n_trunc: int) -> SpaceTag:
    return SpaceTag(fock_cutoff=n_trunc, qubit_levels=2)


def _require_same_tag(a: SpaceTag, b: SpaceTag) -> None:
    if a != b:
        raise SpaceMismatchError(f"space tags differ: {a} vs {b}")


@dataclass(frozen=True)
class Operator:
    """A sparse operator with a space tag.

    ``hermitian_hint`` is advisory and is verified (within HERMITICITY_ATOL)
    at construction whenever set, so downstream code may rely on it.
    """

    tag: SpaceTag
    data: sp.csr_matrix
    hermitian_hint: bool = False

    def __post_init__(self) -> None:
        mat = sp.csr_matrix(self.data, dtype=np.complex128)
        object.__setattr__(self, "data", mat)
        n, m = mat.shape
        if n != m:
            raise ValueError(f"operator must be square, got shape {mat.shape}")
        if n != self.tag.dim:
            raise ValueError(f"operator dim {n} does not match tag dim {self.tag.dim}")
        if self.hermitian_hint:
            defect = (mat - mat.getH()).tocoo()
            worst = np.max(np.abs(defect.data)) if defect.nnz else 0.0
            if worst > HERMITICITY_ATOL:
                raise ValueError(f"hermitian_hint set but max |A - A^+| = {worst:.3e}")

    @property
    def dim(self) -> int:
        return self.tag.dim

    def dag(self) -> "Operator":
        return Operator(self.tag, self.data.getH().tocsr(), self.hermitian_hint)

    def to_dense(self) -> np.ndarray:
        return self.data.toarray()

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_tag(self.tag, other.tag)
        return Operator(self.tag, self.data + other.data,
                        self.hermitian_hint and other.hermitian_hint)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_tag(self.tag, other.tag)
        return Operator(self.tag, self.data - other.data,
                        self.hermitian_hint and other.hermitian_hint)

    def __neg__(self) -> "Operator":
        return Operator(self.tag, -self.data, self.hermitian_hint)

    def __mul__(self, scalar: complex) -> "Operator":
        if isinstance(scalar, Operator):
            raise TypeError("use @ for operator products")
        herm = self.hermitian_hint and float(np.imag(scalar)) == 0.0
        return Operator(self.tag, self.data * scalar, herm)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_tag(self.tag, other.tag)
        return Operator(self.tag, (self.data @ other.data).tocsr(), False)


@dataclass(frozen=True)
class Ket:
    """A normalized pure state."""

    tag: SpaceTag
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        vec = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "amplitudes", vec)
        if vec.size != self.tag.dim:
            raise ValueError(f"ket dim {vec.size} does not match tag dim {self.tag.dim}")
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > KET_NORM_ATOL:
            raise ValueError(f"ket is not normalized: |psi| = {norm!r}")

    def to_density_matrix(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(self.tag, np.outer(v, v.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """A density matrix validated for Hermiticity, unit trace and positivity.

    ``positivity_atol`` is how far below zero the smallest eigenvalue may sit;
    integration samples use the looser EVOLVED_POSITIVITY_ATOL.
    """

    tag: SpaceTag
    data: np.ndarray
    positivity_atol: float = field(default=POSITIVITY_ATOL, repr=False, compare=False)

    def __post_init__(self) -> None:
        mat = np.asarray(self.data, dtype=np.complex128)
        object.__setattr__(self, "data", mat)
        n = self.tag.dim
        if mat.shape != (n, n):
            raise ValueError(f"density matrix shape {mat.shape} does not match tag dim {n}")
        herm_defect = float(np.max(np.abs(mat - mat.conj().T)))
        if herm_defect > HERMITICITY_ATOL:
            raise ValueError(f"density matrix not Hermitian: defect {herm_defect:.3e}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr!r} differs from 1")
        eig_min = float(np.linalg.eigvalsh(mat)[0])
        if eig_min < -self.positivity_atol:
            raise ValueError(f"density matrix not positive: min eigenvalue {eig_min:.3e}")

    @property
    def dim(self) -> int:
        return self.tag.dim


def ladder_operators(n_trunc: int) -> tuple[Operator, Operator]:
    """Truncated annihilation and creation operators (a, a+).

    On the truncated space a+ |n_trunc - 1> = 0, so [a, a+] = 1 holds on every
    level except the last, where it evaluates to 1 - n_trunc.
    """
    tag = oscillator_tag(n_trunc)
    offdiag = np.sqrt(np.arange(1, n_trunc, dtype=np.float64))
    a = sp.diags(offdiag, offsets=1, shape=(n_trunc, n_trunc), dtype=np.complex128).tocsr()
    return Operator(tag, a), Operator(tag, a.getH().tocsr())


def number_operator(n_trunc: int) -> Operator:
    tag = oscillator_tag(n_trunc)
    n = sp.diags(np.arange(n_trunc, dtype=np.float64), dtype=np.complex128).tocsr()
    return Operator(tag, n, hermitian_hint=True)


def identity(tag: SpaceTag) -> Operator:
    return Operator(tag, sp.identity(tag.dim, dtype=np.complex128, format="csr"),
                    hermitian_hint=True)


def qubit_operators() -> dict[str, Operator]:
    """Pauli and ladder operators on the bare qubit space.

    Basis order: |g> = index 0, |e> = index 1, so sigma_z = |e><e| - |g><g| is
    diag(-1, +1) and sigma_+ = |e><g|.
    """
    tag = qubit_tag()
    sz = sp.csr_matrix(np.diag([-1.0, 1.0]).astype(np.complex128))
    sx = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=np.complex128))
    s_plus = sp.csr_matrix(np.array([[0, 0], [1, 0]], dtype=np.complex128))
    return {
        "sz": Operator(tag, sz, hermitian_hint=True),
        "sx": Operator(tag, sx, hermitian_hint=True),
        "sp": Operator(tag, s_plus),
        "sm": Operator(tag, s_plus.getH().tocsr()),
    }


def tensor(qubit_op: Operator, osc_op: Operator) -> Operator:
    """Kronecker product qubit (x) oscillator in the fixed slow/fast layout."""
    if not (qubit_op.tag.has_qubit and not qubit_op.tag.has_oscillator):
        raise SpaceMismatchError("first factor must live on the bare qubit space")
    if not (osc_op.tag.has_oscillator and not osc_op.tag.has_qubit):
        raise SpaceMismatchError("second factor must live on the bare oscillator space")
    tag = composite_tag(osc_op.tag.fock_cutoff)
    data = sp.kron(qubit_op.data, osc_op.data, format="csr")
    return Operator(tag, data, qubit_op.hermitian_hint and osc_op.hermitian_hint)


# ---------------------------------------------------------------------------
# state preparation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSpec:
    """Declarative description of an oscillator (or qubit x oscillator) state.

    Use the classmethod constructors; ``kind`` is one of fock / coherent /
    squeezed_vacuum / cat / ground_qubit_product.
    """

    kind: str
    number: int | None = None
    alpha: complex | None = None
    eta: float | None = None
    parity: str | None = None
    inner: "StateSpec | None" = None

    @classmethod
    def fock(cls, number: int) -> "StateSpec":
        return cls(kind="fock", number=number)

    @classmethod
    def coherent(cls, alpha: complex) -> "StateSpec":
        return cls(kind="coherent", alpha=complex(alpha))

    @classmethod
    def squeezed_vacuum(cls, eta: float) -> "StateSpec":
        return cls(kind="squeezed_vacuum", eta=float(eta))

    @classmethod
    def cat(cls, alpha: complex, parity: str) -> "StateSpec":
        if parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
        return cls(kind="cat", alpha=complex(alpha), parity=parity)

    @classmethod
    def ground_qubit_product(cls, inner: "StateSpec") -> "StateSpec":
        return cls(kind="ground_qubit_product", inner=inner)


def _check_tail(amps: np.ndarray, what: str) -> None:
    # Leakage gate: the top two Fock levels must be essentially unpopulated.
    leak = float(np.sum(np.abs(amps[-2:]) ** 2))
    if leak > TAIL_LEAK_ATOL:
        raise ValueError(
            f"{what} does not fit in the truncated space: top-two-level "
            f"population {leak:.3e} exceeds {TAIL_LEAK_ATOL:.0e}; raise the cutoff"
        )


def _coherent_amplitudes(alpha: complex, n_trunc: int) -> np.ndarray:
    n = np.arange(n_trunc)
    # c_n = exp(-|a|^2/2) a^n / sqrt(n!), built in log space to dodge overflow
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, n_trunc)))))
    mag = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha) + 1e-300) - 0.5 * log_fact)
    phase = np.exp(1j * n * np.angle(alpha)) if alpha != 0 else np.ones(n_trunc)
    amps = mag * phase
    if alpha == 0:
        amps = np.zeros(n_trunc, dtype=np.complex128)
        amps[0] = 1.0
    return amps.astype(np.complex128)


def _squeezed_vacuum_amplitudes(eta: float, n_trunc: int) -> np.ndarray:
    # exp[(eta a^2 - eta a+^2)/2] |0> for real eta: only even levels populated,
    # c_{2m} = (-tanh eta)^m sqrt((2m)!) / (2^m m! sqrt(cosh eta)).
    amps = np.zeros(n_trunc, dtype=np.complex128)
    t = math.tanh(eta)
    amps[0] = 1.0 / math.sqrt(math.cosh(eta))
    for m in range(1, (n_trunc - 1) // 2 + 1):
        # ratio c_{2m} / c_{2m-2} = -t * sqrt((2m-1)(2m)) / (2m)
        amps[2 * m] = amps[2 * m - 2] * (-t) * math.sqrt((2 * m - 1) * (2 * m)) / (2 * m)
    return amps


def prepare_state(spec: StateSpec, n_trunc: int) -> Ket:
    """Build the requested state on an ``n_trunc``-level oscillator.

    Coherent-family states must satisfy |alpha|^2 + 5 |alpha| < n_trunc and
    leave the top two Fock levels below 1e-8 total population, otherwise the
    truncation would silently distort them.
    """
    tag = oscillator_tag(n_trunc)
    if spec.kind == "fock":
        n = spec.number
        if n is None or not (0 <= n < n_trunc):
            raise ValueError(f"fock number {n} outside [0, {n_trunc})")
        amps = np.zeros(n_trunc, dtype=np.complex128)
        amps[n] = 1.0
        return Ket(tag, amps)

    if spec.kind == "coherent":
        alpha = spec.alpha
        if abs(alpha) ** 2 + 5 * abs(alpha) >= n_trunc:
            raise ValueError(
                f"coherent amplitude |alpha|={abs(alpha):.3f} too large for cutoff {n_trunc}"
            )
        amps = _coherent_amplitudes(alpha, n_trunc)
        _check_tail(amps, f"coherent({alpha})")
        return Ket(tag, amps / np.linalg.norm(amps))

    if spec.kind == "squeezed_vacuum":
        amps = _squeezed_vacuum_amplitudes(spec.eta, n_trunc)
        _check_tail(amps, f"squeezed_vacuum(eta={spec.eta})")
        return Ket(tag, amps / np.linalg.norm(amps))

    if spec.kind == "cat":
        alpha = spec.alpha
        if abs(alpha) ** 2 + 5 * abs(alpha) >= n_trunc:
            raise ValueError(
                f"cat amplitude |alpha|={abs(alpha):.3f} too large for cutoff {n_trunc}"
            )
        base = _coherent_amplitudes(alpha, n_trunc)
        keep = np.arange(n_trunc) % 2 == (0 if spec.parity == "even" else 1)
        amps = np.where(keep, base, 0.0)
        norm = np.linalg.norm(amps)
        if norm < 1e-12:
            raise ValueError("odd cat with alpha = 0 is the null vector")
        _check_tail(amps, f"{spec.parity} cat({alpha})")
        return Ket(tag, amps / norm)

    if spec.kind == "ground_qubit_product":
        osc = prepare_state(spec.inner, n_trunc)
        amps = np.zeros(2 * n_trunc, dtype=np.complex128)
        amps[:n_trunc] = osc.amplitudes  # |g> is the slow index 0
        return Ket(composite_tag(n_trunc), amps)

    raise ValueError(f"unknown state kind {spec.kind!r}")


def thermal_state(n_bar: float, n_trunc: int) -> DensityMatrix:
    """Geometric thermal state, renormalized on the truncated space.

    The truncated thermal channels have a reflecting top level, so this state
    is exactly stationary under them even at finite cutoff.
    """
    if n_bar < 0:
        raise ValueError("mean occupation must be >= 0")
    tag = oscillator_tag(n_trunc)
    if n_bar == 0:
        p = np.zeros(n_trunc)
        p[0] = 1.0
    else:
        ratio = n_bar / (n_bar + 1.0)
        p = ratio ** np.arange(n_trunc)
        p /= p.sum()
    return DensityMatrix(tag, np.diag(p).astype(np.complex128))


def polaron_transform(lam: float, n_trunc: int) -> Operator:
    """Unitary U = exp[-lam sigma_z (a+ - a)] on the composite space.

    The sigma_z = -1 (ground) block displaces the oscillator by +lam.  Only
    real |lam| < 1 is meaningful here; the generator is anti-Hermitian even
    after truncation, so U is unitary to machine precision, though its action
    only matches the analytic displacement away from the cutoff.
    """
    if np.imag(lam) != 0:
        raise ValueError("polaron parameter must be real")
    lam = float(np.real(lam))
    if abs(lam) >= 1:
        raise ValueError(f"|lam| must be < 1, got {lam}")
    a, adag = ladder_operators(n_trunc)
    ops = qubit_operators()
    gen = tensor(ops["sz"], adag - a)
    u = expm((-lam * gen.data).toarray())
    return Operator(composite_tag(n_trunc), sp.csr_matrix(u))


def partial_trace_qubit(rho: DensityMatrix) -> DensityMatrix:
    """Trace out the qubit, returning the reduced oscillator state."""
    if not rho.tag.is_composite:
        raise SpaceMismatchError("partial_trace_qubit needs a qubit x oscillator state")
    n = rho.tag.fock_cutoff
    blocks = rho.data.reshape(2, n, 2, n)
    reduced = blocks[0, :, 0, :] + blocks[1, :, 1, :]
    return DensityMatrix(oscillator_tag(n), reduced,
                         positivity_atol=rho.positivity_atol)


def expectation(op: Operator, rho: DensityMatrix) -> complex:
    """Tr(O rho).  Real to ~1e-10 whenever O is Hermitian and rho is valid."""
    _require_same_tag(op.tag, rho.tag)
    return complex((op.data @ rho.data).trace())
