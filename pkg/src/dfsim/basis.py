"""Permutationally symmetric Fock sector for N three-level atoms.

The ground-state manifold of each atom has levels labelled -1, 0, +1.  A
permutationally symmetric N-atom state is fixed by the occupation triple
(k1, k2, k3) of the three Schwinger modes b_{-1}, b_0, b_{+1}, with
k1 + k2 + k3 = N.  The sector dimension is (N+2)(N+1)/2.

Basis-ordering contract
-----------------------
States are ordered lexicographically *descending* in (k1, k2, k3), so the
stretched state (N, 0, 0) = |-1>^(x N) is always index 0.  Every dense
matrix produced by this package uses that ordering; serialized vectors and
cross-language test fixtures rely on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MODES = (-1, 0, +1)

OccupationVector = tuple[int, int, int]


@dataclass(frozen=True)
class SymmetricBasis:
    """Ordered symmetric-sector basis for a fixed atom number."""

    n_atoms: int
    states: tuple[OccupationVector, ...]
    _index: dict[OccupationVector, int] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        self._index.update({k: i for i, k in enumerate(self.states)})

    @property
    def size(self) -> int:
        return len(self.states)

    def index_of(self, k: OccupationVector) -> int:
        try:
            return self._index[tuple(k)]
        except KeyError:
            raise ValueError(f"{k!r} is not a valid occupation for N={self.n_atoms}") from None

    def state_vector(self, k: OccupationVector) -> np.ndarray:
        """Unit vector for the bare occupation state |k1, k2, k3>."""
        v = np.zeros(self.size, dtype=complex)
        v[self.index_of(k)] = 1.0
        return v


def enumerate_basis(n_atoms: int) -> SymmetricBasis:
    """Enumerate all occupation triples summing to n_atoms.

    The ordering is lexicographic descending in (k1, k2, k3); the size is
    (N+2)(N+1)/2.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be a positive integer (no atoms, no sector)")
    states = sorted(
        (
            (k1, k2, n_atoms - k1 - k2)
            for k1 in range(n_atoms + 1)
            for k2 in range(n_atoms - k1 + 1)
        ),
        reverse=True,
    )
    return SymmetricBasis(n_atoms=n_atoms, states=tuple(states))


def _mode_slot(mode: int) -> int:
    if mode not in MODES:
        raise ValueError(f"mode index must be one of {MODES}, got {mode!r}")
    return mode + 1


def bilinear_matrix(basis: SymmetricBasis, i: int, j: int) -> np.ndarray:
    """Dense matrix of b_i^dag b_j on the symmetric sector.

    Moves one quantum from mode j to mode i with matrix element
    sqrt(k_j (k_i + 1)); for i == j this is the mode-i number operator.
    """
    a, b = _mode_slot(i), _mode_slot(j)
    m = np.zeros((basis.size, basis.size), dtype=complex)
    for col, k in enumerate(basis.states):
        if a == b:
            m[col, col] = k[a]
            continue
        if k[b] == 0:
            continue
        shifted = list(k)
        shifted[b] -= 1
        shifted[a] += 1
        m[basis.index_of(tuple(shifted)), col] = math.sqrt(k[b] * (k[a] + 1))
    return m


class CollectiveOperators(NamedTuple):
    jminus: np.ndarray
    jplus: np.ndarray
    jz: np.ndarray
    jsquared: np.ndarray


def collective_operators(basis: SymmetricBasis) -> CollectiveOperators:
    """Collective dipole operators J-, J+, Jz = [J+, J-] and J^2.

    J- = b_{-1}^dag b_0 + b_0^dag b_{+1}; J^2 = J-J+ + J+J- + Jz^2.  With
    this normalization, Jz counts (n_{+1} - n_{-1}) and J^2 has integer
    eigenvalues j(j+1) with 0 <= j <= N.
    """
    jminus = bilinear_matrix(basis, -1, 0) + bilinear_matrix(basis, 0, +1)
    jplus = jminus.conj().T
    jz = jplus @ jminus - jminus @ jplus
    jsquared = jminus @ jplus + jplus @ jminus + jz @ jz
    return CollectiveOperators(jminus, jplus, jz, jsquared)
