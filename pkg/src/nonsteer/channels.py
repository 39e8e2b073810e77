"""Qubit CPTP maps in King-Ruskai form and their action on Alice's qubit.

A channel acts on Bloch vectors affinely, ``r -> m + Λ r``.  The diagonal
family is stored as ``(m, lam, perm)``; ``perm[i]`` names the stored
component that lands on axis ``i``, so ``effective_m[i] == m[perm[i]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotCompletelyPositiveError
from .qubit_core import PAULI, SIGMA_0, BlochState, CanonicalState, _as_bloch

KRAUS_CUTOFF = 1e-12
_IDENTITY_PERM = (0, 1, 2)


def _check_perm(perm):
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != [0, 1, 2]:
        raise ValueError(f"not a permutation of (0, 1, 2): {perm}")
    return perm


@dataclass(frozen=True, eq=False)
class AffineAction:
    """General affine Bloch action with a full 3x3 linear part."""

    m: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(3)
        L = np.array(self.L, dtype=float).reshape(3, 3)
        m.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "L", L)

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.L == np.diag(np.diag(self.L))))

    def as_affine(self) -> "AffineAction":
        return self


@dataclass(frozen=True, eq=False)
class QubitChannel:
    m: np.ndarray
    lam: np.ndarray
    perm: tuple = _IDENTITY_PERM

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(3)
        lam = np.array(self.lam, dtype=float).reshape(3)
        m.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "perm", _check_perm(self.perm))

    @property
    def m_eff(self) -> np.ndarray:
        return self.m[list(self.perm)]

    @property
    def lam_eff(self) -> np.ndarray:
        return self.lam[list(self.perm)]

    def as_affine(self) -> AffineAction:
        return AffineAction(self.m_eff, np.diag(self.lam_eff))

    def __repr__(self):
        return f"QubitChannel(m={self.m.tolist()}, lam={self.lam.tolist()}, perm={self.perm})"


@dataclass(frozen=True)
class ExtremalParams:
    u: float
    v: float
    perm: tuple = _IDENTITY_PERM


IDENTITY = QubitChannel(np.zeros(3), np.ones(3))


def extremal_map(p: ExtremalParams) -> QubitChannel:
    """Closure point ``(u, v)`` of the extremal qubit channels.

    ``lam = (cos u, cos v, cos u cos v)``, ``m = (0, 0, sin u sin v)``.
    """
    cu, cv = np.cos(p.u), np.cos(p.v)
    return QubitChannel(
        m=(0.0, 0.0, np.sin(p.u) * np.sin(p.v)),
        lam=(cu, cv, cu * cv),
        perm=p.perm,
    )


def bloch_action(ch, op: np.ndarray) -> np.ndarray:
    """Apply the channel to an arbitrary 2x2 operator via its Pauli expansion."""
    act = ch.as_affine()
    op = np.asarray(op, dtype=complex)
    c0 = np.trace(op) / 2
    c = np.array([np.trace(s @ op) / 2 for s in PAULI])
    out_c = c0 * act.m + act.L @ c
    return c0 * SIGMA_0 + np.tensordot(out_c, np.array(PAULI), axes=1)


def choi_matrix(ch) -> np.ndarray:
    """Trace-one Choi state ``(Φ ⊗ I)|Ω><Ω|``, output factor first.

    Uses ``|Ω><Ω| = 1/4 Σ_μ σ_μ ⊗ σ_μ^T``.
    """
    basis = (SIGMA_0,) + PAULI
    return sum(np.kron(bloch_action(ch, s), s.T) for s in basis) / 4


def choi_min_eigenvalue(ch) -> float:
    return float(np.linalg.eigvalsh(choi_matrix(ch))[0])


def is_cptp(ch, tol: float = 1e-10) -> bool:
    # trace preservation is built into the representation
    return choi_min_eigenvalue(ch) >= -tol


def kraus_operators(ch, tol: float = 1e-10) -> list[np.ndarray]:
    """Kraus operators from the Choi eigendecomposition.

    Eigenvalues below ``KRAUS_CUTOFF`` are dropped.  Raises
    NotCompletelyPositiveError if the Choi matrix has an eigenvalue below
    ``-tol``.
    """
    J = choi_matrix(ch)
    w, v = np.linalg.eigh(J)
    if w[0] < -tol:
        raise NotCompletelyPositiveError(f"Choi matrix has eigenvalue {w[0]:.3e}")
    ops = []
    for k in np.argsort(w)[::-1]:
        if w[k] > KRAUS_CUTOFF:
            ops.append(np.sqrt(2 * w[k]) * v[:, k].reshape(2, 2))
    return ops


def kraus_completeness(kraus) -> np.ndarray:
    return sum(A.conj().T @ A for A in kraus)


def apply_kraus(kraus, op: np.ndarray) -> np.ndarray:
    return sum(A @ op @ A.conj().T for A in kraus)


def apply_kraus_a(kraus, rho: np.ndarray) -> np.ndarray:
    """``Σ (A_k ⊗ I) rho (A_k ⊗ I)†`` on a 4x4 matrix."""
    out = np.zeros((4, 4), dtype=complex)
    for A in kraus:
        big = np.kron(A, SIGMA_0)
        out += big @ rho @ big.conj().T
    return out


def pullback_effects(kraus, effects) -> list[np.ndarray]:
    """Heisenberg-picture effects ``Σ_k A_k† E A_k``."""
    return [sum(A.conj().T @ E @ A for A in kraus) for E in effects]


def apply_channel_a(ch, state) -> BlochState:
    """Channel on Alice's qubit: ``a' = m + Λa``, ``b' = b``, ``T' = m bᵀ + Λ T``."""
    act = ch.as_affine()
    s = _as_bloch(state)
    return BlochState(
        act.m + act.L @ s.a,
        s.b,
        np.outer(act.m, s.b) + act.L @ s.T,
    )


def compose(ch2, ch1) -> AffineAction:
    """``ch2 ∘ ch1`` as a general affine action ``(m2 + L2 m1, L2 L1)``.

    The result generally leaves the diagonal family; re-run
    ``canonical_form`` on mapped states if a diagonal frame is needed.
    """
    a2, a1 = ch2.as_affine(), ch1.as_affine()
    return AffineAction(a2.m + a2.L @ a1.m, a2.L @ a1.L)
