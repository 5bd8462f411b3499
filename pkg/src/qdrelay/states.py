"""Two-qubit polarization states and the operations a relay applies to them.

Basis order is {HH, HV, VH, VV}; qubit 0 is the left photon of a pair.
"""

from __future__ import annotations

import contextvars
import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .numerics import DomainError

HERMITICITY_TOL = 1e-12
POSITIVITY_TOL = 1e-9
TRACE_TOL = 1e-9

_I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)

NOISE_PRODUCT = "product"
NOISE_WHITE = "white"


@dataclass
class ValidityAudit:
    """Worst invariant violations seen over every state built while active."""

    count: int = 0
    hermiticity: float = 0.0
    min_eigenvalue: float = math.inf
    trace_error: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            not self.failures
            and self.hermiticity <= HERMITICITY_TOL
            and self.min_eigenvalue >= -POSITIVITY_TOL
            and self.trace_error <= TRACE_TOL
        )

    def record(self, herm: float, min_eig: float, trace_err: float):
        self.count += 1
        self.hermiticity = max(self.hermiticity, herm)
        self.min_eigenvalue = min(self.min_eigenvalue, min_eig)
        self.trace_error = max(self.trace_error, trace_err)


_AUDIT: contextvars.ContextVar[ValidityAudit | None] = contextvars.ContextVar("qdrelay_audit", default=None)


@contextmanager
def validity_audit():
    """Collect invariant statistics for every TwoQubitState created inside."""
    audit = ValidityAudit()
    token = _AUDIT.set(audit)
    try:
        yield audit
    finally:
        _AUDIT.reset(token)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Validated 4x4 density matrix.

    Construction checks Hermiticity, positivity and unit trace against the
    module tolerances and raises DomainError on violation.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise DomainError(f"two-qubit state must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("state has non-finite entries")
        herm = float(np.max(np.abs(m - m.conj().T)))
        min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())
        trace_err = abs(complex(np.trace(m)) - 1.0)
        audit = _AUDIT.get()
        if audit is not None:
            audit.record(herm, min_eig, trace_err)
        problem = None
        if herm > HERMITICITY_TOL:
            problem = f"not Hermitian (deviation {herm:.3e})"
        elif min_eig < -POSITIVITY_TOL:
            problem = f"not positive (min eigenvalue {min_eig:.3e})"
        elif trace_err > TRACE_TOL:
            problem = f"trace deviates from 1 by {trace_err:.3e}"
        if problem:
            if audit is not None:
                audit.failures.append(problem)
            raise DomainError(f"invalid two-qubit state: {problem}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_unnormalized(cls, m) -> "TwoQubitState":
        """Symmetrize rounding noise away and normalize the trace."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if not tr > 0:
            raise DomainError("cannot normalize a state with non-positive trace")
        return cls(m / tr)

    def reduced(self, qubit: int) -> np.ndarray:
        """2x2 reduced density of qubit 0 or 1."""
        t = self.matrix.reshape(2, 2, 2, 2)
        if qubit == 0:
            return np.einsum("ajbj->ab", t)
        if qubit == 1:
            return np.einsum("jajb->ab", t)
        raise DomainError(f"qubit must be 0 or 1, got {qubit}")

    def swapped(self) -> "TwoQubitState":
        """Same state with the two qubits exchanged."""
        t = self.matrix.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2)
        return TwoQubitState(t.reshape(4, 4))

    def local(self, op0: np.ndarray = _I2, op1: np.ndarray = _I2) -> "TwoQubitState":
        """Apply a local unitary op0 (x) op1."""
        U = np.kron(op0, op1)
        return TwoQubitState.from_unnormalized(U @ self.matrix @ U.conj().T)


PHI_PLUS_STATE = TwoQubitState.from_vector(PHI_PLUS)


def maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4, dtype=complex) / 4)


def werner(p: float) -> TwoQubitState:
    """p |phi+><phi+| + (1 - p) I/4, for p in [-1/3, 1]."""
    if not -1.0 / 3.0 <= p <= 1.0:
        raise DomainError(f"Werner parameter must lie in [-1/3, 1], got {p}")
    return TwoQubitState(p * np.outer(PHI_PLUS, PHI_PLUS.conj()) + (1 - p) * np.eye(4) / 4)


def werner_parameter(fidelity: float) -> float:
    return (4.0 * fidelity - 1.0) / 3.0


def bell_diagonal(weights) -> TwoQubitState:
    """Mixture of (phi+, phi-, psi+, psi-) with the given weights."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (4,) or np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
        raise DomainError("Bell-diagonal weights must be 4 non-negative numbers summing to 1")
    m = sum(wi * np.outer(v, v.conj()) for wi, v in zip(w, (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)))
    return TwoQubitState(m)


def pair_state(p_hh: float, p_vv: float, coherence: complex, g2: float = 0.0) -> TwoQubitState:
    """(1 - g2) rho_pair + g2 I/4 with rho_pair supported on HH and VV."""
    if not 0 <= g2 <= 1:
        raise DomainError(f"g2 must lie in [0, 1], got {g2}")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0], rho[3, 3] = p_hh, p_vv
    rho[0, 3], rho[3, 0] = coherence, np.conj(coherence)
    return TwoQubitState.from_unnormalized((1 - g2) * rho + g2 * np.eye(4) / 4)


def fidelity_to_bell(s: TwoQubitState) -> float:
    """Fidelity to phi+, maximized over a local phase rotation.

    The relative HH/VV phase is free, so this is
    (rho_HH,HH + rho_VV,VV) / 2 + |rho_HH,VV|.
    """
    m = s.matrix
    return float(0.5 * (m[0, 0].real + m[3, 3].real) + abs(m[0, 3]))


def bell_overlap(s: TwoQubitState, vector=PHI_PLUS) -> float:
    """Plain <v|rho|v> without phase optimization."""
    v = np.asarray(vector, dtype=complex)
    return float(np.real(v.conj() @ s.matrix @ v))


def concurrence(s: TwoQubitState) -> float:
    """Wootters concurrence."""
    yy = np.kron(PAULI_Y, PAULI_Y)
    rho = s.matrix
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def pmd_coherence_factor(tau: float, T1: float) -> float:
    """kappa(tau) = (1 + tau / 2 T1) exp(-tau / 2 T1)."""
    if tau < 0:
        raise DomainError(f"tau must be >= 0, got {tau}")
    if T1 <= 0:
        raise DomainError(f"T1 must be positive, got {T1}")
    r = tau / (2.0 * T1)
    return (1.0 + r) * math.exp(-r)


def apply_pmd(s: TwoQubitState, tau: float, T1: float) -> TwoQubitState:
    """Dephase the H/V coherence of the pair by kappa(tau).

    Implemented as a phase-flip channel on qubit 0, which scales the
    HH-VV coherence by kappa and keeps the map completely positive.
    """
    kappa = pmd_coherence_factor(tau, T1)
    if kappa == 1.0:
        return s
    Z = np.kron(PAULI_Z, _I2)
    m = 0.5 * (1 + kappa) * s.matrix + 0.5 * (1 - kappa) * Z @ s.matrix @ Z
    return TwoQubitState.from_unnormalized(m)


# Projectors on the measured pair and the Pauli correction applied to the
# right outer qubit for each detectable outcome (X first, then Z).
_BSM_OUTCOMES = (
    (PSI_PLUS, PAULI_X),
    (PSI_MINUS, PAULI_Z @ PAULI_X),
)


@dataclass(frozen=True)
class SwapResult:
    state: TwoQubitState
    success_prob: float


def bsm_swap(a: TwoQubitState, b: TwoQubitState, M: float, noise: str = NOISE_PRODUCT) -> SwapResult:
    """Entanglement swap: Bell measurement on qubit 1 of ``a`` and qubit 0 of ``b``.

    With probability weight M the photons interfere and the psi+/psi-
    outcomes are projected and corrected into the phi+ frame; with weight
    1 - M the herald carries no Bell information and the outer qubits are
    left in the product of their reduced states (``noise="product"``) or
    in I/4 (``noise="white"``). The heralding probability is the chance of
    orthogonal polarizations on the measured pair, which is the same for
    both parts.
    """
    if not 0.0 <= M <= 1.0:
        raise DomainError(f"mode overlap M must lie in [0, 1], got {M}")
    ta = a.matrix.reshape(2, 2, 2, 2)  # (a0, a1, a0', a1')
    tb = b.matrix.reshape(2, 2, 2, 2)
    ideal = np.zeros((2, 2, 2, 2), dtype=complex)
    for bell, corr in _BSM_OUTCOMES:
        P = np.outer(bell, bell.conj()).reshape(2, 2, 2, 2)  # (m, n, m', n')
        # out[x, y, x', y'] = sum P[m', n', m, n] a[x, m, x', m'] b[n, y, n', y']
        out = np.einsum("pqmn,xmwp,nyqz->xywz", P, ta, tb)
        ideal += np.einsum("yb,xbwc,zc->xywz", corr, out, corr.conj())
    ideal = ideal.reshape(4, 4)
    p_ideal = float(np.trace(ideal).real)
    p_orth = float(np.real(a.reduced(1)[0, 0] * b.reduced(0)[1, 1] + a.reduced(1)[1, 1] * b.reduced(0)[0, 0]))
    if p_ideal <= 0 or p_orth <= 0:
        raise DomainError("Bell measurement cannot herald on these inputs")
    if noise == NOISE_PRODUCT:
        rho_noise = np.kron(a.reduced(0), b.reduced(1))
    elif noise == NOISE_WHITE:
        rho_noise = np.eye(4, dtype=complex) / 4
    else:
        raise DomainError(f"unknown noise policy {noise!r}")
    state = TwoQubitState.from_unnormalized(M * ideal / p_ideal + (1.0 - M) * rho_noise)
    return SwapResult(state, p_orth)
