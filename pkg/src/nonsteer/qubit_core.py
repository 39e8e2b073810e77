"""Two-qubit states in the Pauli (Bloch) picture.

A state is carried as ``(a, b, T)``::

    rho = 1/4 (I⊗I + a·σ⊗I + I⊗b·σ + Σ_ij T_ij σ_i⊗σ_j)

Alice holds the first tensor factor, Bob the second.  All matrices use the
``np.kron(A, B)`` ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SingularMarginalError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

DEFAULT_TOL = 1e-9

# (σ_i ⊗ I), (I ⊗ σ_j), (σ_i ⊗ σ_j), precomputed once
_SA = np.array([np.kron(s, SIGMA_0) for s in PAULI])
_SB = np.array([np.kron(SIGMA_0, s) for s in PAULI])
_SAB = np.array([[np.kron(si, sj) for sj in PAULI] for si in PAULI])


def _frozen(x, shape):
    arr = np.array(x, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BlochState:
    """Two-qubit state as Alice's Bloch vector, Bob's Bloch vector and the correlation matrix."""

    a: np.ndarray
    b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a, (3,)))
        object.__setattr__(self, "b", _frozen(self.b, (3,)))
        object.__setattr__(self, "T", _frozen(self.T, (3, 3)))

    def isclose(self, other: "BlochState", atol: float = 1e-12) -> bool:
        return bool(
            np.allclose(self.a, other.a, rtol=0, atol=atol)
            and np.allclose(self.b, other.b, rtol=0, atol=atol)
            and np.allclose(self.T, other.T, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"BlochState(a={self.a.tolist()}, b={self.b.tolist()}, T={self.T.tolist()})"


@dataclass(frozen=True, eq=False)
class CanonicalState:
    """State with ``b = 0`` and diagonal correlation matrix ``diag(t)``."""

    a: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a, (3,)))
        object.__setattr__(self, "t", _frozen(self.t, (3,)))

    def to_bloch(self) -> BlochState:
        return BlochState(self.a, np.zeros(3), np.diag(self.t))

    def __repr__(self):
        return f"CanonicalState(a={self.a.tolist()}, t={self.t.tolist()})"


@dataclass(frozen=True, eq=False)
class TransformRecord:
    """Audit trail of :func:`canonical_form`.

    ``filter_matrix`` is Bob's ``rho_B^{-1/2}`` (identity when no filtering
    was needed) and ``norm`` the trace that renormalised the filtered state.
    The local rotations act as ``a -> rot_a @ a`` and
    ``T -> rot_a @ T @ rot_b.T``.
    """

    filter_matrix: np.ndarray
    norm: float
    rot_a: np.ndarray
    rot_b: np.ndarray
    convention: str
    identity: bool


@dataclass(frozen=True, eq=False)
class Assemblage:
    plus: np.ndarray
    minus: np.ndarray
    axis: np.ndarray

    @property
    def probabilities(self):
        return float(np.trace(self.plus).real), float(np.trace(self.minus).real)


def density_matrix(state: BlochState) -> np.ndarray:
    rho = np.eye(4, dtype=complex)
    rho += np.tensordot(state.a, _SA, axes=1)
    rho += np.tensordot(state.b, _SB, axes=1)
    rho += np.tensordot(state.T, _SAB, axes=2)
    return rho / 4


def bloch_decompose(rho: np.ndarray, tol: float = 1e-10) -> BlochState:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidInputError(f"expected a 4x4 matrix, got shape {rho.shape}")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise InvalidInputError(f"density matrix trace is {tr}, not 1")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidInputError("density matrix is not Hermitian")
    a =np.einsum("kij,ji->k", _SA, rho).real
    b = np.einsum("kij,ji->k", _SB, rho).real
    T = np.einsum("klij,ji->kl", _SAB, rho).real
    return BlochState(a, b, T)


def partial_trace_a(rho: np.ndarray) -> np.ndarray:
    return np.einsum("ijik->jk", np.asarray(rho).reshape(2, 2, 2, 2))


def partial_trace_b(rho: np.ndarray) -> np.ndarray:
    return np.einsum("ijkj->ik", np.asarray(rho).reshape(2, 2, 2, 2))


def partial_transpose_b(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def _as_bloch(state) -> BlochState:
    return state.to_bloch() if isinstance(state, CanonicalState) else state


def min_eigenvalue(state) -> float:
    return float(np.linalg.eigvalsh(density_matrix(_as_bloch(state)))[0])


def is_physical(state, tol: float = DEFAULT_TOL) -> bool:
    if tol < 0:
        raise InvalidInputError("tol must be non-negative")
    return min_eigenvalue(state) >= -tol


def is_separable_ppt(state, tol: float = DEFAULT_TOL) -> bool:
    """Peres-Horodecki test; exact for two qubits.

    Raises InvalidInputError for states that are not physical at ``tol``.
    """
    state = _as_bloch(state)
    rho = density_matrix(state)
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidInputError("separability is only defined for physical states")
    return bool(np.linalg.eigvalsh(partial_transpose_b(rho))[0] >= -tol)


def _inv_sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v / np.sqrt(w)) @ v.conj().T


def local_filter_b(rho: np.ndarray, tol: float = 1e-12):
    """Apply Bob's filter ``rho_B^{-1/2}`` on the 4x4 level.

    Returns ``(filtered, filter_matrix, norm)``.
    """
    rho_b = partial_trace_a(rho)
    w = np.linalg.eigvalsh(rho_b)
    if w[0] <= tol:
        raise SingularMarginalError(f"Bob's reduced state is singular (min eigenvalue {w[0]:.3e})")
    f = _inv_sqrt_psd(rho_b)
    big = np.kron(SIGMA_0, f)
    out = big @ rho @ big.conj().T
    norm = float(np.trace(out).real)
    return out / norm, f, norm


def _sorted_diag_rotations(T: np.ndarray):
    """Rotations ``R_a, R_b`` in SO(3) with ``R_a T R_b^T`` diagonal.

    Diagonal entries come out as ``sign * s`` with ``s`` the singular values
    in descending order and ``sign = +1`` if ``det T > 0`` else ``-1``.
    """
    U, s, Vt = np.linalg.svd(T)
    det_t = np.linalg.det(T)
    sign = 1.0 if det_t > 0 else -1.0
    d_vt = np.sign(np.linalg.det(Vt))
    rot_b = d_vt * Vt
    c = sign * d_vt
    if c * np.linalg.det(U) < 0:
        # only reachable when det T == 0: the null singular vector's sign is free
        U = U.copy()
        U[:, 2] *= -1
    rot_a = c * U.T
    return rot_a, rot_b, sign * s


def canonical_form(state: BlochState, tol: float = 1e-10):
    """Reduce ``state`` to ``(a, diag t)`` with ``b = 0``.

    Bob's local filter removes ``b``; proper rotations on each side then
    diagonalise ``T``.  Ordering convention: ``|t1| >= |t2| >= |t3|``, all
    ``t_i <= 0`` when ``det T <= 0`` and all ``t_i >= 0`` otherwise, so
    ``det T`` is preserved.  States already in canonical form are returned
    untouched with an identity record.

    Returns ``(CanonicalState, TransformRecord)``.
    """
    state = _as_bloch(state)
    T = state.T
    off = T - np.diag(np.diag(T))
    if np.max(np.abs(state.b)) <= tol and np.max(np.abs(off)) <= tol:
        rec = TransformRecord(np.eye(2), 1.0, np.eye(3), np.eye(3), "input already canonical", True)
        return CanonicalState(state.a, np.diag(T)), rec

    rho = density_matrix(state)
    if np.max(np.abs(state.b)) <= tol:
        f, norm = np.eye(2, dtype=complex), 1.0
        filtered = state
    else:
        rho_f, f, norm = local_filter_b(rho)
        filtered = bloch_decompose(rho_f)
    rot_a, rot_b, t = _sorted_diag_rotations(filtered.T)
    a = rot_a @ filtered.a
    rec = TransformRecord(f, norm, rot_a, rot_b, "|t1|>=|t2|>=|t3|, common sign = sign(det T)", False)
    return CanonicalState(a, t), rec


def _unit_axis(axis, tol=1e-12) -> np.ndarray:
    axis = np.asarray(axis, dtype=float).reshape(3)
    if abs(np.linalg.norm(axis) - 1) > tol:
        raise InvalidInputError(f"measurement axis must be a unit vector, |axis| = {np.linalg.norm(axis)}")
    return axis


def projectors(axis) -> tuple[np.ndarray, np.ndarray]:
    axis = _unit_axis(axis)
    n = np.tensordot(axis, np.array(PAULI), axes=1)
    return (SIGMA_0 + n) / 2, (SIGMA_0 - n) / 2


def assemblage_from_effects(state, effects) -> list[np.ndarray]:
    """Bob's conditional states ``Tr_A[(E ⊗ I) rho]`` for each Alice effect ``E``."""
    rho = density_matrix(_as_bloch(state))
    return [partial_trace_a(np.kron(e, SIGMA_0) @ rho) for e in effects]


def assemblage(state, axis) -> Assemblage:
    axis = _unit_axis(axis)
    plus, minus = assemblage_from_effects(state, projectors(axis))
    return Assemblage(plus, minus, axis)


def reduced_state_b(state) -> np.ndarray:
    state = _as_bloch(state)
    return (SIGMA_0 + np.tensordot(state.b, np.array(PAULI), axes=1)) / 2


def werner(mu: float) -> CanonicalState:
    return CanonicalState(np.zeros(3), -mu * np.ones(3))


def random_state(rng: np.random.Generator, rank: int = 4) -> BlochState:
    """Random two-qubit state from a complex Ginibre matrix."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return bloch_decompose(rho / np.trace(rho).real)
