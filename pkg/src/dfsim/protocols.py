"""Preparation protocols: quench, linear ramp, and the two adiabatic shortcuts.

A schedule is an immutable control law producing (mu(t), total drive chi(t),
extra Hamiltonian) plus the rates needed to assemble the instantaneous
Liouvillian.  All protocols start from |-1>^(x N) at mu = 0 and target the
dark subspace with k3 - k1 = C; ramps and shortcuts reach mu = 1 exactly at
t_final = 1/beta.

The cavity-drive shortcut shifts chi by the complex

    chi_s = +/- 2 sqrt(2) i beta / [Gamma_c (Delta_c'/kappa - i) (mu^4 - 1)]

(+ prepares (0,0,N), - prepares (N,0,0)).  chi_s diverges at mu = 1, so once
|chi + chi_s| reaches cutoff_factor * sqrt(2) * N the total drive is frozen
(magnitude and phase) for the remainder of the run.  The clamp crossing is
located once at construction, keeping schedules immutable and dt-independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import SQRT2
from .basis import SymmetricBasis
from .errors import ConfigError
from .lindblad import (
    DensityState,
    EffectiveParams,
    OperatorCache,
    TrajectoryRecord,
    ground_state,
    integrate,
    orthonormal_dfs_basis,
)

THRESHOLD = 0.99

# "much larger" in the regime checks means at least this factor.
_REGIME_FACTOR = 10.0


class RegimeWarning(UserWarning):
    """Physical parameters leave the adiabatic-elimination regime."""


@dataclass(frozen=True)
class PhysicalParams:
    """Raw cavity/drive parameters (all rates in the same frequency unit)."""

    kappa: float
    g: float
    omega1_amp: float
    omega2_amp: float
    eta: float
    delta_e: float
    delta_c_prime: float = 0.0


def map_physical_params(p: PhysicalParams, n_atoms: int) -> EffectiveParams:
    """Reduce raw cavity parameters to the effective control record.

    Gamma_c = kappa g^2 |Omega_1|^2 / (2 Delta_e^2 (Delta_c'^2 + kappa^2)),
    mu = sqrt(|Omega_2| / |Omega_1|), chi = 2 eta Delta_e / (g |Omega_1|).
    Regime violations warn but never block.
    """
    if p.omega1_amp <= 0.0:
        raise ValueError("omega1_amp must be positive")
    if p.kappa <= 0.0:
        raise ValueError("kappa must be positive")
    if p.delta_e == 0.0:
        raise ValueError("delta_e must be nonzero")
    if p.g == 0.0:
        raise ValueError("g must be nonzero")

    gamma_c = (
        p.kappa * p.g**2 * p.omega1_amp**2
        / (2.0 * p.delta_e**2 * (p.delta_c_prime**2 + p.kappa**2))
    )
    mu = math.sqrt(abs(p.omega2_amp) / p.omega1_amp)
    chi = 2.0 * p.eta * p.delta_e / (p.g * p.omega1_amp)

    couplings = max(abs(p.g), abs(p.omega1_amp), abs(p.omega2_amp))
    if abs(p.delta_e) < _REGIME_FACTOR * couplings:
        warnings.warn(
            "detuning |delta_e| is not large against g, |Omega_1|, |Omega_2|; "
            "excited-state elimination is marginal",
            RegimeWarning,
            stacklevel=2,
        )
    collective = math.sqrt(n_atoms) * abs(p.g) * max(abs(p.omega1_amp), abs(p.omega2_amp)) / abs(p.delta_e)
    if p.kappa < _REGIME_FACTOR * collective:
        warnings.warn(
            "kappa is not large against sqrt(N) g |Omega_i| / |delta_e|; "
            "cavity elimination is marginal",
            RegimeWarning,
            stacklevel=2,
        )
    return EffectiveParams(
        n_atoms=n_atoms,
        gamma_c=gamma_c,
        mu=mu,
        chi=chi,
        detuning_ratio=p.delta_c_prime / p.kappa,
    )


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def _jump_and_hamiltonian(ops: OperatorCache, mu: float, chi: complex,
                          gamma_c: float, detuning_ratio: float):
    l_op = math.sqrt(gamma_c) * (ops.jminus + mu * mu * ops.jplus + chi * ops.identity)
    h_op = (detuning_ratio / 2.0) * (l_op.conj().T @ l_op)
    return l_op, h_op


@dataclass(frozen=True)
class QuenchSchedule:
    """Instantaneous quench to constant mu_q < 1 with chi = sqrt(2) mu_q C."""

    mu_q: float
    c_index: int
    gamma_c: float = 1.0
    detuning_ratio: float = 0.1

    kind = "quench"
    is_constant = True
    t_final = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.mu_q < 1.0:
            raise ValueError("mu_q must satisfy 0 <= mu_q < 1 (damping requires mu_q < 1)")

    def mu(self, t: float) -> float:
        return self.mu_q

    def drive(self, t: float) -> complex:
        return complex(SQRT2 * self.mu_q * self.c_index)

    def operators(self, t: float, ops: OperatorCache):
        return _jump_and_hamiltonian(ops, self.mu_q, self.drive(t), self.gamma_c, self.detuning_ratio)


@dataclass(frozen=True)
class RampSchedule:
    """Linear ramp mu(t) = beta t on [0, 1/beta] with chi = sqrt(2) mu C."""

    beta: float
    c_index: int
    gamma_c: float = 1.0
    detuning_ratio: float = 0.1

    kind = "ramp"
    is_constant = False

    def __post_init__(self) -> None:
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")

    @property
    def t_final(self) -> float:
        return 1.0 / self.beta

    def mu(self, t: float) -> float:
        return self.beta * t

    def drive(self, t: float) -> complex:
        return complex(SQRT2 * self.mu(t) * self.c_index)

    def operators(self, t: float, ops: OperatorCache):
        return _jump_and_hamiltonian(ops, self.mu(t), self.drive(t), self.gamma_c, self.detuning_ratio)


@dataclass(frozen=True)
class EdgeShortcutSchedule:
    """Cavity-drive shortcut into a one-dimensional edge subspace (C = +/- N).

    sign = -1 prepares (N,0,0); sign = +1 prepares (0,0,N).  The total
    complex drive is clamped at cutoff_factor * sqrt(2) * N.
    """

    n_atoms: int
    beta: float
    sign: int = -1
    cutoff_factor: float = 5.0
    gamma_c: float = 1.0
    detuning_ratio: float = 0.1
    t_clamp: float = field(init=False, repr=False, compare=False, default=0.0)
    chi_clamp: complex = field(init=False, repr=False, compare=False, default=0.0)

    kind = "edge_shortcut"
    is_constant = False

    def __post_init__(self) -> None:
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.sign not in (-1, +1):
            raise ValueError("sign must be -1 or +1")
        if self.cutoff_factor <= SQRT2:
            raise ValueError("cutoff_factor must exceed sqrt(2) (the bare drive scale)")
        t_lo, t_hi = 0.0, (1.0 - 1e-14) / self.beta
        if abs(self._chi_total_exact(t_hi)) < self.cutoff:
            raise AssertionError("drive never reaches the cutoff; clamp undefined")
        for _ in range(200):
            mid = 0.5 * (t_lo + t_hi)
            if abs(self._chi_total_exact(mid)) >= self.cutoff:
                t_hi = mid
            else:
                t_lo = mid
        value = self._chi_total_exact(t_hi)
        object.__setattr__(self, "t_clamp", t_hi)
        object.__setattr__(self, "chi_clamp", value * (self.cutoff / abs(value)))

    @property
    def c_index(self) -> int:
        return self.sign * self.n_atoms

    @property
    def cutoff(self) -> float:
        return self.cutoff_factor * SQRT2 * self.n_atoms

    @property
    def t_final(self) -> float:
        return 1.0 / self.beta

    @property
    def target(self) -> tuple[int, int, int]:
        return (0, 0, self.n_atoms) if self.sign > 0 else (self.n_atoms, 0, 0)

    def mu(self, t: float) -> float:
        return self.beta * t

    def chi_shift(self, t: float) -> complex:
        """Unclamped shortcut drive chi_s(t); singular at mu = 1."""
        mu = self.mu(t)
        assert mu < 1.0, "chi_s is evaluated only below mu = 1 (clamp guarantees this)"
        return (
            self.sign * 2j * SQRT2 * self.beta
            / (self.gamma_c * (self.detuning_ratio - 1j) * (mu**4 - 1.0))
        )

    def _chi_total_exact(self, t: float) -> complex:
        return SQRT2 * self.mu(t) * self.c_index + self.chi_shift(t)

    def drive(self, t: float) -> complex:
        if t >= self.t_clamp:
            return self.chi_clamp
        return self._chi_total_exact(t)

    def operators(self, t: float, ops: OperatorCache):
        """Shifted-drive form: jump and Hamiltonian rebuilt with complex chi + chi_s."""
        return _jump_and_hamiltonian(ops, self.mu(t), self.drive(t), self.gamma_c, self.detuning_ratio)

    def shortcut_hamiltonian(self, t: float, ops: OperatorCache) -> np.ndarray:
        """Equivalent added-term form: H_s built from the unshifted jump operator."""
        chi_dark = SQRT2 * self.mu(t) * self.c_index
        l_op = math.sqrt(self.gamma_c) * (
            ops.jminus + self.mu(t) ** 2 * ops.jplus + chi_dark * ops.identity
        )
        chi_s = self.drive(t) - chi_dark
        r = self.detuning_ratio
        return (math.sqrt(self.gamma_c) / 2.0) * (
            (r + 1j) * np.conj(chi_s) * l_op + (r - 1j) * chi_s * l_op.conj().T
        )

    def added_form_operators(self, t: float, ops: OperatorCache):
        """(L, H + H_s) with the unshifted jump operator, for the equivalence check."""
        chi_dark = SQRT2 * self.mu(t) * self.c_index
        l_op, h_op = _jump_and_hamiltonian(ops, self.mu(t), chi_dark, self.gamma_c, self.detuning_ratio)
        return l_op, h_op + self.shortcut_hamiltonian(t, ops)


@dataclass(frozen=True)
class CentralShortcutSchedule:
    """Counterdiabatic shortcut into (0, N, 0) inside the C = 0 subspace.

    chi = 0 throughout; the extra Hamiltonian is
    H_s = i alpha (b_{-1}^dag b_{+1} - b_{+1}^dag b_{-1}) with
    alpha = 2 mu mu_dot / (mu^4 + 1), finite on the whole ramp and maximal
    (= beta) at mu = 1.
    """

    beta: float
    gamma_c: float = 1.0
    detuning_ratio: float = 0.1

    kind = "central_shortcut"
    is_constant = False
    c_index = 0

    def __post_init__(self) -> None:
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")

    @property
    def t_final(self) -> float:
        return 1.0 / self.beta

    def mu(self, t: float) -> float:
        return self.beta * t

    def drive(self, t: float) -> complex:
        return 0.0 + 0.0j

    def alpha(self, t: float) -> float:
        mu = self.mu(t)
        return 2.0 * mu * self.beta / (mu**4 + 1.0)

    def shortcut_hamiltonian(self, t: float, ops: OperatorCache) -> np.ndarray:
        return 1j * self.alpha(t) * ops.exchange

    def operators(self, t: float, ops: OperatorCache):
        l_op, h_op = _jump_and_hamiltonian(ops, self.mu(t), 0.0, self.gamma_c, self.detuning_ratio)
        return l_op, h_op + self.shortcut_hamiltonian(t, ops)


def quench_schedule(mu_q: float, c_index: int, **rates) -> QuenchSchedule:
    return QuenchSchedule(mu_q=mu_q, c_index=c_index, **rates)


def ramp_schedule(beta: float, c_index: int, **rates) -> RampSchedule:
    return RampSchedule(beta=beta, c_index=c_index, **rates)


def edge_shortcut_schedule(n_atoms: int, beta: float, sign: int = -1,
                           cutoff_factor: float = 5.0, **rates) -> EdgeShortcutSchedule:
    return EdgeShortcutSchedule(n_atoms=n_atoms, beta=beta, sign=sign,
                                cutoff_factor=cutoff_factor, **rates)


def central_shortcut_schedule(beta: float, **rates) -> CentralShortcutSchedule:
    return CentralShortcutSchedule(beta=beta, **rates)


# ---------------------------------------------------------------------------
# threshold and minimum-time searches
# ---------------------------------------------------------------------------

def meets_threshold(traj: TrajectoryRecord) -> bool:
    """Final purity and final target overlap both at least 0.99."""
    return bool(traj.purity[-1] >= THRESHOLD and traj.overlap_target[-1] >= THRESHOLD)


@dataclass(frozen=True)
class SearchResult:
    t_final: float
    control: float
    label: str


def subspace_alignment(basis: SymmetricBasis, c_index: int, mu: float) -> float:
    """Mean population of the mu = 1 dark basis inside the dark subspace at mu."""
    target = orthonormal_dfs_basis(basis, c_index, 1.0)
    current = orthonormal_dfs_basis(basis, c_index, mu)
    proj = np.column_stack(current)
    return float(
        np.mean([np.linalg.norm(proj.conj().T @ phi) ** 2 for phi in target])
    )


def select_quench_mu(basis: SymmetricBasis, c_index: int,
                     overlap_bound: float = THRESHOLD, tol: float = 1e-3) -> float:
    """Smallest mu_q whose dark subspace aligns with the target one to
    overlap_bound (alignment grows monotonically toward 1 at mu = 1)."""
    lo, hi = tol, 1.0 - 1e-9
    if subspace_alignment(basis, c_index, hi) < overlap_bound:
        raise ConfigError("alignment bound unreachable even at mu -> 1")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if subspace_alignment(basis, c_index, mid) >= overlap_bound:
            hi = mid
        else:
            lo = mid
    return hi


def search_min_quench_time(
    basis: SymmetricBasis,
    c_index: int,
    t_max: float,
    mu_q: float | None = None,
    *,
    overlap_bound: float = THRESHOLD,
    gamma_c: float = 1.0,
    detuning_ratio: float = 0.1,
    dt: float = 1e-3,
    rel_tol: float = 1e-2,
) -> SearchResult:
    """Smallest damping time meeting the threshold for a quench.

    Two stages: choose mu_q (smallest with sufficient subspace alignment)
    unless given, then locate the first threshold crossing of a single
    trajectory by bisection over its sample grid, to ~rel_tol in t_f.
    """
    if mu_q is None:
        mu_q = select_quench_mu(basis, c_index, overlap_bound)
    schedule = QuenchSchedule(mu_q=mu_q, c_index=c_index, gamma_c=gamma_c,
                              detuning_ratio=detuning_ratio)
    samples = max(200, int(math.ceil(2.0 / rel_tol)))
    traj = integrate(ground_state(basis), schedule, basis, t_max, dt, samples=samples)
    met = (traj.purity >= THRESHOLD) & (traj.overlap_target >= THRESHOLD)
    if not met[-1]:
        raise ConfigError(f"threshold not met anywhere in [0, {t_max}]; enlarge bounds")
    lo, hi = 0, len(met) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if met[mid:].all():
            hi = mid
        else:
            lo = mid
    return SearchResult(t_final=float(traj.times[hi]), control=mu_q, label="quench")


def search_min_ramp_time(
    basis: SymmetricBasis,
    c_index: int,
    t_bounds: tuple[float, float],
    *,
    gamma_c: float = 1.0,
    detuning_ratio: float = 0.1,
    dt: float = 1e-3,
    rel_tol: float = 1e-2,
) -> SearchResult:
    """Smallest ramp duration 1/beta meeting the threshold, by bisection on t_f."""
    def trial(t_f: float) -> bool:
        schedule = RampSchedule(beta=1.0 / t_f, c_index=c_index, gamma_c=gamma_c,
                                detuning_ratio=detuning_ratio)
        traj = integrate(ground_state(basis), schedule, basis, t_f, dt, samples=50)
        return meets_threshold(traj)

    lo, hi = t_bounds
    if not lo < hi:
        raise ConfigError("t_bounds must satisfy lo < hi")
    if trial(lo):
        raise ConfigError("lower bound already meets the threshold; no sign change bracketed")
    if not trial(hi):
        raise ConfigError("upper bound does not meet the threshold; no sign change bracketed")
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if trial(mid):
            hi = mid
        else:
            lo = mid
    return SearchResult(t_final=hi, control=1.0 / hi, label="ramp")
