"""Collective-dipole shell decomposition and metrology diagnostics.

The symmetric sector splits into J^2 shells with j in {N, N-2, ...} down to
1 (odd N) or 0 (even N), each holding the 2j+1 states |j, m>.  The shells
are generated by laddering down from the stretched state with

    J-|j, m> = sqrt([j(j+1) - m(m-1)] / 2) |j, m-1>

and opening each next shell by orthogonalization.  Running the identical
algorithm with the mu = 1 rotated generators (K-, Kz built from the c
modes) yields identical coefficients over the rotated frame; that identity
is verified by tests rather than assumed.

The rotated shell at (j = N, m = C) is the unique final state of quench and
ramp preparations: both conserve J^2, pinning j = N, while the dark-subspace
constraint pins the Kz eigenvalue to C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import c_dagger_c_matrix, eigenstate_vector
from .basis import SymmetricBasis, collective_operators
from .errors import RankDeficiencyError

ShellLabel = tuple[int, int]

_ORTHOGONALITY_TOL = 1e-8


def allowed_j(n_atoms: int) -> list[int]:
    """j values N, N-2, ... down to 1 (odd N) or 0 (even N)."""
    return list(range(n_atoms, -1, -2))


@dataclass(frozen=True)
class ShellBasis:
    """Orthonormal family {|j, m>} on the symmetric sector."""

    generator: str
    basis: SymmetricBasis
    vectors: dict[ShellLabel, np.ndarray]

    def vector(self, j: int, m: int) -> np.ndarray:
        return self.vectors[(j, m)]


def _generator_set(basis: SymmetricBasis, generator: str):
    """(lowering, z, frame) for the requested generator family.

    frame columns are the occupation-monomial unit states of that family:
    bare occupation states, or the mu = 1 jump-operator eigenstates.
    """
    if generator == "bare":
        ops = collective_operators(basis)
        frame = np.eye(basis.size, dtype=complex)
        return ops.jminus, ops.jz, frame
    if generator == "rotated":
        lowering = c_dagger_c_matrix(basis, 1.0, 0, 1) + c_dagger_c_matrix(basis, 1.0, 1, 2)
        z_op = c_dagger_c_matrix(basis, 1.0, 2, 2) - c_dagger_c_matrix(basis, 1.0, 0, 0)
        frame = np.column_stack(
            [eigenstate_vector(basis, k, 1.0) for k in basis.states]
        )
        return lowering, z_op, frame
    raise ValueError(f"generator must be 'bare' or 'rotated', got {generator!r}")


def shell_basis(basis: SymmetricBasis, generator: str = "bare") -> ShellBasis:
    """Build every |j, m> by the ladder-and-orthogonalize construction."""
    n = basis.n_atoms
    lowering, z_op, frame = _generator_set(basis, generator)
    vectors: dict[ShellLabel, np.ndarray] = {}

    top = frame[:, basis.index_of((0, 0, n))].copy()
    for j in allowed_j(n):
        vectors[(j, j)] = top
        v = top
        for m in range(j, -j, -1):
            v = (lowering @ v) / math.sqrt((j * (j + 1) - m * (m - 1)) / 2.0)
            vectors[(j, m - 1)] = v
        if j - 2 < 0:
            break
        m_new = j - 2
        # residual direction in the z-eigenspace after removing built shells
        eigenspace = np.column_stack(
            [frame[:, i] for i, k in enumerate(basis.states) if k[2] - k[0] == m_new]
        )
        residual = eigenspace.copy()
        for jj in range(n, m_new, -2):
            u = vectors[(jj, m_new)]
            residual -= np.outer(u, u.conj() @ residual)
        u_svd, sing, _ = np.linalg.svd(residual, full_matrices=False)
        if sing[0] < _ORTHOGONALITY_TOL:
            raise RankDeficiencyError(
                f"orthogonality loss opening shell j={m_new} (residual {sing[0]:.2e})"
            )
        top = u_svd[:, 0]
        # phase convention: first nonzero frame coefficient is positive real
        coeff = frame.conj().T @ top
        first = coeff[np.abs(coeff) > 1e-10][0]
        top = top * (abs(first) / first)
    return ShellBasis(generator=generator, basis=basis, vectors=vectors)


def predict_final_state(basis: SymmetricBasis, c_index: int) -> np.ndarray:
    """Analytic final state |j = N, m_k = C> of quench and ramp preparations,
    expressed in the bare occupation basis at mu = 1."""
    if abs(c_index) > basis.n_atoms:
        raise ValueError(f"|C| = {abs(c_index)} exceeds N = {basis.n_atoms}")
    shells = shell_basis(basis, generator="rotated")
    return shells.vector(basis.n_atoms, c_index)


def keff_x(basis: SymmetricBasis) -> np.ndarray:
    """Effective two-mode quadrature (c_1^dag c_3 + c_3^dag c_1)/2 at mu = 1."""
    m = 0.5 * (c_dagger_c_matrix(basis, 1.0, 0, 2) + c_dagger_c_matrix(basis, 1.0, 2, 0))
    return m


def qfi(state: np.ndarray, generator: np.ndarray) -> float:
    """Quantum Fisher information 4 (<G^2> - <G>^2) of a pure state."""
    gv = generator @ state
    mean = float(np.real(np.vdot(state, gv)))
    second = float(np.real(np.vdot(gv, gv)))
    return 4.0 * (second - mean**2)
