"""Biorthogonal eigenbasis of the collective jump operator.

For pump ratio mu > 0 the single-particle matrix of J- + mu^2 J+ is
diagonalized by a non-unitary transform V D V^{-1} with
D = diag(sqrt(2) mu, 0, -sqrt(2) mu).  Lifting the columns of V to bosonic
creation operators c_i^dag (and the rows of V^{-1} to d_i^dag) yields two
state families:

    |psi_k>      ~ (c_1^dag)^k1 (c_2^dag)^k2 (c_3^dag)^k3 |0>   (jump-operator eigenstates)
    |psi_n_perp> ~ (d_1^dag)^n1 (d_2^dag)^n2 (d_3^dag)^n3 |0>   (adjoint eigenstates)

which are mutually biorthogonal.  The eigenstates are not orthogonal among
themselves unless mu = 1 (where V is unitary), and no eigenbasis exists at
mu = 0 (the matrix is defective there).

Normalizations and overlaps admit closed-form quadruple sums over binomial
and factorial weights.  Those sums mix very large factorials with very small
powers of mu, so each term is evaluated in log-magnitude + sign form and the
terms are combined with exact (math.fsum) summation after aligning exponents;
the closed forms hold for 0 < mu <= 1, and larger mu falls back to explicit
vector construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import OccupationVector, SymmetricBasis, bilinear_matrix, enumerate_basis
from .errors import NonDiagonalizableError, NumericalError

SQRT2 = math.sqrt(2.0)

_LOG2 = math.log(2.0)
_MAX_EXP = 700.0  # ln of the largest representable double, with margin


def single_particle_jump_matrix(mu: float) -> np.ndarray:
    """3x3 matrix of J- + mu^2 J+ restricted to one particle."""
    return np.array([[0.0, 1.0, 0.0], [mu**2, 0.0, 1.0], [0.0, mu**2, 0.0]])


@dataclass(frozen=True)
class ModeTransform:
    """Non-unitary diagonalization V D V^{-1} of the single-particle matrix."""

    mu: float
    v: np.ndarray
    d: np.ndarray
    vinv: np.ndarray


def transform_matrices(mu: float) -> ModeTransform:
    """Build V, D = diag(sqrt(2)mu, 0, -sqrt(2)mu) and V^{-1} for mu > 0.

    V^{-1} is verified against V and against the single-particle matrix to a
    residual of 1e-12.  At mu = 1, V is unitary.
    """
    if mu <= 0.0:
        raise NonDiagonalizableError(
            "the single-particle jump matrix is not diagonalizable at mu = 0"
        )
    v = 0.5 * np.array(
        [
            [mu, SQRT2 * mu, mu],
            [SQRT2 * mu**2, 0.0, -SQRT2 * mu**2],
            [mu**3, -SQRT2 * mu**3, mu**3],
        ]
    )
    vinv = 0.5 * np.array(
        [
            [1.0 / mu, SQRT2 / mu**2, 1.0 / mu**3],
            [SQRT2 / mu, 0.0, -SQRT2 / mu**3],
            [1.0 / mu, -SQRT2 / mu**2, 1.0 / mu**3],
        ]
    )
    d = np.diag([SQRT2 * mu, 0.0, -SQRT2 * mu])
    scale = max(1.0, mu**3, mu**-3)
    if np.abs(v @ vinv - np.eye(3)).max() > 1e-12 * scale:
        raise NumericalError(f"V^-1 verification failed at mu={mu}")
    if np.abs(v @ d @ vinv - single_particle_jump_matrix(mu)).max() > 1e-12 * scale:
        raise NumericalError(f"V D V^-1 does not reproduce the jump matrix at mu={mu}")
    return ModeTransform(mu=mu, v=v, d=d, vinv=vinv)


# ---------------------------------------------------------------------------
# explicit vector construction (multinomial expansion)
# ---------------------------------------------------------------------------

def _check_label(k: OccupationVector, n_atoms: int) -> None:
    if len(k) != 3 or any(int(x) != x or x < 0 for x in k):
        raise ValueError(f"occupation vector must be three non-negative integers, got {k!r}")
    if sum(k) != n_atoms:
        raise ValueError(f"occupation vector {k!r} does not sum to N={n_atoms}")


def _monomial_coefficients(forms: list[np.ndarray], powers: OccupationVector) -> dict:
    """Coefficients of prod_i (sum_a forms[i][a] x_a)^powers[i] as a dict
    keyed by occupation triple."""
    poly: dict[OccupationVector, complex] = {(0, 0, 0): 1.0}
    for coeffs, power in zip(forms, powers):
        for _ in range(power):
            nxt: dict[OccupationVector, complex] = {}
            for occ, c in poly.items():
                for a in range(3):
                    ca = coeffs[a]
                    if ca == 0.0:
                        continue
                    key = (occ[0] + (a == 0), occ[1] + (a == 1), occ[2] + (a == 2))
                    nxt[key] = nxt.get(key, 0.0) + c * ca
            poly = nxt
    return poly


def _poly_to_vector(basis: SymmetricBasis, poly: dict) -> np.ndarray:
    v = np.zeros(basis.size, dtype=complex)
    for occ, c in poly.items():
        weight = math.sqrt(
            math.factorial(occ[0]) * math.factorial(occ[1]) * math.factorial(occ[2])
        )
        v[basis.index_of(occ)] = c * weight
    return v


def _poly_norm(poly: dict) -> float:
    return math.sqrt(
        math.fsum(
            abs(c) ** 2
            * math.factorial(occ[0])
            * math.factorial(occ[1])
            * math.factorial(occ[2])
            for occ, c in poly.items()
        )
    )


def _creation_forms(mu: float, dual: bool) -> list[np.ndarray]:
    tr = transform_matrices(mu)
    if dual:
        # d_i^dag carries the (conjugated) i-th row of V^{-1}; V^{-1} is real.
        return [tr.vinv[i, :] for i in range(3)]
    return [tr.v[:, i] for i in range(3)]


def eigenstate_vector(basis: SymmetricBasis, k: OccupationVector, mu: float) -> np.ndarray:
    """Unit-norm jump-operator eigenstate |psi_k> in the bare occupation basis."""
    _check_label(k, basis.n_atoms)
    poly = _monomial_coefficients(_creation_forms(mu, dual=False), tuple(k))
    v = _poly_to_vector(basis, poly)
    return v / np.linalg.norm(v)


def complementary_vector(basis: SymmetricBasis, n: OccupationVector, mu: float) -> np.ndarray:
    """Unit-norm adjoint eigenstate |psi_n_perp> in the bare occupation basis."""
    _check_label(n, basis.n_atoms)
    poly = _monomial_coefficients(_creation_forms(mu, dual=True), tuple(n))
    v = _poly_to_vector(basis, poly)
    return v / np.linalg.norm(v)


def _bruteforce_normalization(k: OccupationVector, mu: float, dual: bool = False) -> float:
    poly = _monomial_coefficients(_creation_forms(mu, dual=dual), tuple(k))
    return 1.0 / _poly_norm(poly)


# ---------------------------------------------------------------------------
# closed-form normalization and overlap (log-magnitude + sign evaluation)
# ---------------------------------------------------------------------------

def _log_binom(n: int, r: int) -> float | None:
    """log of C(n, r); None when the binomial is zero / out of range."""
    if r < 0 or n < 0 or r > n:
        return None
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def _overlap_sum_log(kp: OccupationVector, k: OccupationVector, mu: float) -> tuple[int, float]:
    """(sign, log|S|) of the quadruple sum for <psi_kp | psi_k>, excluding the
    normalization prefactors and the global (-1)^(k2+k2') sign."""
    k1p, k2p, k3p = kp
    k1, k2, k3 = k
    n_atoms = k1 + k2 + k3
    log_one_minus_mu2 = math.log1p(-mu * mu) if mu < 1.0 else None
    log_mu = math.log(mu)
    log_mu2_plus_1 = math.log1p(mu * mu)

    entries: list[tuple[int, float]] = []
    for q in range(k2p + 1):
        lb_q = _log_binom(k2p, q)
        for s in range(k2 + 1):
            lb_s = _log_binom(k2, s)
            for r1 in range(max(0, s - q), min(k3p, k3 + s - q) + 1):
                lb_r1 = _log_binom(k3p, r1)
                lb_mix = _log_binom(k3, q - s + r1)
                if lb_r1 is None or lb_mix is None:
                    continue
                for r2 in range(min(k3p - r1, k3 - q + s - r1) + 1):
                    lb_r2a = _log_binom(k3p - r1, r2)
                    lb_r2b = _log_binom(k3 - q + s - r1, r2)
                    if lb_r2a is None or lb_r2b is None:
                        continue
                    e_two = -2 * n_atoms + (k2 + k2p) / 2.0 + 2 * q + 3 * r1 + 4 * r2 - s
                    e_mu = 2 * n_atoms + 2 * q + 2 * r1 + 4 * r2
                    e_gap = k2 + k2p + 2 * (k3 + k3p) - 2 * q - 2 * r1 - 4 * r2
                    e_sum = 2 * n_atoms - k2 - k2p - 2 * (k3 + k3p)
                    if log_one_minus_mu2 is None and e_gap > 0:
                        continue  # (mu^2 - 1)^e vanishes at mu = 1
                    log_term = (
                        e_two * _LOG2
                        + lb_q + lb_s + lb_r1 + lb_mix + lb_r2a + lb_r2b
                        + math.lgamma(n_atoms - q - r1 - r2 + 1)
                        + math.lgamma(q + r1 + 1)
                        + math.lgamma(r2 + 1)
                        + e_mu * log_mu
                        + e_gap * (log_one_minus_mu2 or 0.0)
                        + e_sum * log_mu2_plus_1
                    )
                    # (mu^2 - 1) is negative below mu = 1
                    sign = -1 if (e_gap % 2 and mu < 1.0) else 1
                    entries.append((sign, log_term))
    if not entries:
        return 0, -math.inf
    log_max = max(log_term for _, log_term in entries)
    total = math.fsum(sign * math.exp(log_term - log_max) for sign, log_term in entries)
    if total == 0.0:
        return 0, -math.inf
    return (1 if total > 0 else -1), math.log(abs(total)) + log_max


def _log_inv_norm_sq(k: OccupationVector, mu: float) -> float:
    """log(1 / N_k^2) from the closed-form sum, for 0 < mu <= 1."""
    sign, log_sum = _overlap_sum_log(k, k, mu)
    if sign <= 0:
        raise NumericalError(f"closed-form normalization sum not positive for k={k}, mu={mu}")
    return log_sum


def eigenstate_normalization(k: OccupationVector, mu: float) -> float:
    """Normalization constant N_k of the eigenstate monomial.

    Uses the closed-form quadruple sum for 0 < mu <= 1 (the standard
    1/sqrt(k1! k2! k3!) at mu = 1) and explicit vector norms for mu > 1.
    Raises NumericalError if the value leaves the representable range.
    """
    _check_label(k, sum(k))
    if mu <= 0.0:
        raise NonDiagonalizableError("no eigenbasis (and no normalization) at mu = 0")
    if mu > 1.0:
        return _bruteforce_normalization(k, mu)
    log_norm = -0.5 * _log_inv_norm_sq(k, mu)
    if abs(log_norm) > _MAX_EXP:
        raise NumericalError(f"normalization overflow for k={k}, mu={mu} (log={log_norm:.1f})")
    return math.exp(log_norm)


def complementary_normalization(n: OccupationVector, mu: float) -> float:
    """Normalization constant of the adjoint-eigenstate monomial,
    mu^(4N) * N_n for 0 < mu <= 1."""
    _check_label(n, sum(n))
    if mu <= 0.0:
        raise NonDiagonalizableError("no eigenbasis (and no normalization) at mu = 0")
    if mu > 1.0:
        return _bruteforce_normalization(n, mu, dual=True)
    n_atoms = sum(n)
    log_norm = 4 * n_atoms * math.log(mu) - 0.5 * _log_inv_norm_sq(n, mu)
    if abs(log_norm) > _MAX_EXP:
        raise NumericalError(f"normalization overflow for n={n}, mu={mu} (log={log_norm:.1f})")
    return math.exp(log_norm)


def eigenstate_overlap(
    kprime: OccupationVector, k: OccupationVector, mu: float, n_atoms: int
) -> float:
    """Overlap <psi_kprime | psi_k> of two normalized eigenstates.

    Kronecker delta at mu = 1; closed-form sum for 0 < mu < 1; explicit
    vector inner product for mu > 1.
    """
    _check_label(kprime, n_atoms)
    _check_label(k, n_atoms)
    if mu <= 0.0:
        raise NonDiagonalizableError("no eigenbasis (and no overlap) at mu = 0")
    if mu == 1.0:
        return 1.0 if tuple(kprime) == tuple(k) else 0.0
    if mu > 1.0:
        basis = enumerate_basis(n_atoms)
        return float(
            np.real(
                np.vdot(
                    eigenstate_vector(basis, kprime, mu), eigenstate_vector(basis, k, mu)
                )
            )
        )
    sign, log_sum = _overlap_sum_log(tuple(kprime), tuple(k), mu)
    if sign == 0:
        return 0.0
    global_sign = -1 if (kprime[1] + k[1]) % 2 else 1
    log_val = log_sum - 0.5 * (_log_inv_norm_sq(tuple(kprime), mu) + _log_inv_norm_sq(tuple(k), mu))
    if log_val > _MAX_EXP:
        raise NumericalError(f"overlap overflow for k'={kprime}, k={k}, mu={mu}")
    return global_sign * sign * math.exp(log_val)


# ---------------------------------------------------------------------------
# eigenvalues and subspace structure
# ---------------------------------------------------------------------------

def jump_eigenvalue(
    k: OccupationVector, mu: float, chi: complex, gamma_c: float = 1.0
) -> complex:
    """Eigenvalue sqrt(Gamma_c) [sqrt(2) mu (k1 - k3) + chi] of |psi_k>."""
    lam = math.sqrt(gamma_c) * (SQRT2 * mu * (k[0] - k[2]) + chi)
    return complex(lam)


def dfs_dimension(n_atoms: int, c_index: int) -> int:
    """Dimension ceil((N + 1 - |C|)/2) of the degenerate dark subspace."""
    if abs(c_index) > n_atoms:
        raise ValueError(f"|C| = {abs(c_index)} exceeds N = {n_atoms}")
    return math.ceil((n_atoms + 1 - abs(c_index)) / 2)


def dfs_members(n_atoms: int, c_index: int) -> list[OccupationVector]:
    """Occupation labels of all eigenstates with k3 - k1 = C, in ladder order."""
    dim = dfs_dimension(n_atoms, c_index)
    a = abs(c_index)
    if c_index >= 0:
        return [(j, n_atoms - 2 * j - a, j + a) for j in range(dim)]
    return [(j + a, n_atoms - 2 * j - a, j) for j in range(dim)]


# ---------------------------------------------------------------------------
# bilinears in the transformed modes
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _cached_bilinears(n_atoms: int) -> dict:
    basis = enumerate_basis(n_atoms)
    return {(i, j): bilinear_matrix(basis, i - 1, j - 1) for i in range(3) for j in range(3)}


def c_dagger_c_matrix(basis: SymmetricBasis, mu: float, i: int, j: int) -> np.ndarray:
    """Dense matrix of c_i^dag c_j (0-based mode indices) on the sector."""
    tr = transform_matrices(mu)
    blocks = _cached_bilinears(basis.n_atoms)
    m = np.zeros((basis.size, basis.size), dtype=complex)
    for a in range(3):
        for b in range(3):
            coeff = tr.v[a, i] * tr.v[b, j]
            if coeff != 0.0:
                m += coeff * blocks[(a, b)]
    return m


def c_dagger_d_matrix(basis: SymmetricBasis, mu: float, i: int, j: int) -> np.ndarray:
    """Dense matrix of c_i^dag d_j (0-based mode indices) on the sector."""
    tr = transform_matrices(mu)
    blocks = _cached_bilinears(basis.n_atoms)
    m = np.zeros((basis.size, basis.size), dtype=complex)
    for a in range(3):
        for b in range(3):
            coeff = tr.v[a, i] * tr.vinv[j, b]
            if coeff != 0.0:
                m += coeff * blocks[(a, b)]
    return m
