"""Master-equation engine: jump operator, Hamiltonian, RK4 integration,
purity and dark-subspace overlap diagnostics.

All operators act on the symmetric sector (see :mod:`dfsim.basis` for the
ordering contract).  hbar = 1 and time is measured in units of 1/Gamma_c
throughout.  Trace is monitored, never renormalized: trace drift is a
convergence diagnostic, not noise to hide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .algebra import SQRT2, dfs_members, eigenstate_vector
from .basis import SymmetricBasis, bilinear_matrix, collective_operators
from .errors import NumericalError, RankDeficiencyError

# Constant-control schedules evolve through powers of the one-step RK4
# superoperator; above this sector dimension the d^2 x d^2 matrices get too
# large and we fall back to plain stepping.
_SUPEROP_MAX_DIM = 32

# In-run invariant thresholds (a violation signals dt too large).
_TRACE_DRIFT_LIMIT = 1e-6
_MIN_EIGENVALUE_LIMIT = -1e-6


@dataclass(frozen=True)
class EffectiveParams:
    """Control record defining the instantaneous Liouvillian."""

    n_atoms: int
    gamma_c: float = 1.0
    mu: float = 0.0
    chi: complex = 0.0
    detuning_ratio: float = 0.1

    def __post_init__(self) -> None:
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        if self.gamma_c <= 0.0:
            raise ValueError("gamma_c must be positive")
        if self.mu < 0.0:
            raise ValueError("mu must be non-negative")


@dataclass
class DensityState:
    """Density matrix on the symmetric sector with its evolution time."""

    matrix: np.ndarray
    time: float = 0.0

    def validate(self) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise NumericalError("density matrix is not Hermitian to 1e-10")
        if abs(np.trace(m).real - 1.0) > 1e-8:
            raise NumericalError("density matrix trace deviates from 1 beyond 1e-8")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -1e-8:
            raise NumericalError("density matrix has eigenvalues below -1e-8")


@dataclass
class TrajectoryRecord:
    """Sampled diagnostics of one master-equation run."""

    times: np.ndarray
    purity: np.ndarray
    overlap_current: np.ndarray
    overlap_target: np.ndarray
    drive_abs: np.ndarray
    trace_drift: np.ndarray
    final: DensityState
    states: list[np.ndarray] | None = None


class OperatorCache:
    """Immutable per-basis operator set shared by schedules and the integrator."""

    def __init__(self, basis: SymmetricBasis):
        self.basis = basis
        ops = collective_operators(basis)
        self.jminus = ops.jminus
        self.jplus = ops.jplus
        self.jz = ops.jz
        self.jsquared = ops.jsquared
        self.identity = np.eye(basis.size, dtype=complex)
        # i(b_{-1}^dag b_{+1} - b_{+1}^dag b_{-1}) enters the central shortcut
        self.exchange = bilinear_matrix(basis, -1, +1) - bilinear_matrix(basis, +1, -1)


def build_jump(params: EffectiveParams, basis: SymmetricBasis) -> np.ndarray:
    """Jump operator sqrt(Gamma_c) (J- + mu^2 J+ + chi) as a dense matrix.

    ``chi`` may be complex (shifted-drive shortcut).
    """
    ops = collective_operators(basis)
    eye = np.eye(basis.size, dtype=complex)
    return math.sqrt(params.gamma_c) * (
        ops.jminus + params.mu**2 * ops.jplus + params.chi * eye
    )


def build_hamiltonian(l_op: np.ndarray, detuning_ratio: float) -> np.ndarray:
    """Dispersive Hamiltonian (Delta_c'/2 kappa) L^dag L, Hermitian by construction."""
    return (detuning_ratio / 2.0) * (l_op.conj().T @ l_op)


def lindblad_rhs(rho: np.ndarray, h_op: np.ndarray, l_op: np.ndarray) -> np.ndarray:
    """-i[H, rho] + L rho L^dag - (1/2){L^dag L, rho}."""
    l_dag = l_op.conj().T
    drift = -1j * h_op - 0.5 * (l_dag @ l_op)
    return drift @ rho + rho @ drift.conj().T + l_op @ (rho @ l_dag)


def purity(rho: np.ndarray) -> float:
    """Tr[rho^2]."""
    return float(np.trace(rho @ rho).real)


def gram_schmidt(vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Raises RankDeficiencyError when a residual norm falls below 1e-10 before
    normalization.
    """
    out: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        for _ in range(2):
            for u in out:
                w = w - np.vdot(u, w) * u
        norm = np.linalg.norm(w)
        if norm < 1e-10:
            raise RankDeficiencyError(
                f"vector {len(out)} is linearly dependent (residual norm {norm:.2e})"
            )
        out.append(w / norm)
    return out


def orthonormal_dfs_basis(basis: SymmetricBasis, c_index: int, mu: float) -> list[np.ndarray]:
    """Gram-Schmidt-orthonormalized eigenvectors spanning the dark subspace."""
    members = dfs_members(basis.n_atoms, c_index)
    return gram_schmidt([eigenstate_vector(basis, k, mu) for k in members])


def dfs_overlap(rho: np.ndarray, basis: SymmetricBasis, c_index: int, mu: float) -> float:
    """Summed population of rho in the orthonormalized dark subspace at mu.

    At mu = 0 no eigenbasis exists; by convention the overlap is the
    population of the unique relevant dark state |-1>^(x N).
    """
    if mu == 0.0:
        psi = basis.state_vector((basis.n_atoms, 0, 0))
        return float(np.real(np.vdot(psi, rho @ psi)))
    total = 0.0
    for phi in orthonormal_dfs_basis(basis, c_index, mu):
        total += float(np.real(np.vdot(phi, rho @ phi)))
    return total


def ground_state(basis: SymmetricBasis) -> DensityState:
    """Initial coherent-spin state |-1>^(x N) as a density matrix."""
    psi = basis.state_vector((basis.n_atoms, 0, 0))
    return DensityState(matrix=np.outer(psi, psi.conj()), time=0.0)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

def _superop_step_matrix(l_op: np.ndarray, h_op: np.ndarray, dt: float) -> np.ndarray:
    """One-step RK4 amplification matrix R = sum_{p<=4} (dt M)^p / p! acting on
    row-major vec(rho), where M is the Liouvillian superoperator."""
    dim = l_op.shape[0]
    eye = np.eye(dim)
    drift = -1j * h_op - 0.5 * (l_op.conj().T @ l_op)
    m_super = np.kron(drift, eye) + np.kron(eye, drift.conj()) + np.kron(l_op, l_op.conj())
    dtm = dt * m_super
    eye2 = np.eye(dim * dim, dtype=complex)
    return eye2 + dtm @ (eye2 + (dtm / 2.0) @ (eye2 + (dtm / 3.0) @ (eye2 + dtm / 4.0)))


def _advance(schedule, rho, ops: OperatorCache, t0: float, dt: float, nsteps: int):
    """Advance nsteps RK4 steps from t0, dispatching to the fastest kernel."""
    if nsteps == 0:
        return rho
    kind = getattr(schedule, "kind", None)
    if kind == "quench":
        l_op, h_op = schedule.operators(t0, ops)
        drift = -1j * h_op - 0.5 * (l_op.conj().T @ l_op)
        return kernels.run_constant(rho, l_op, drift, dt, nsteps)
    if kind == "ramp":
        return kernels.run_ramp(
            rho, ops.jminus, ops.jplus, ops.identity, float(schedule.c_index),
            schedule.beta, schedule.gamma_c, schedule.detuning_ratio, t0, dt, nsteps,
        )
    if kind == "edge_shortcut":
        return kernels.run_edge(
            rho, ops.jminus, ops.jplus, ops.identity, float(schedule.c_index),
            schedule.beta, schedule.gamma_c, schedule.detuning_ratio,
            schedule.t_clamp, complex(schedule.chi_clamp), t0, dt, nsteps,
        )
    if kind == "central_shortcut":
        return kernels.run_central(
            rho, ops.jminus, ops.jplus, ops.exchange,
            schedule.beta, schedule.gamma_c, schedule.detuning_ratio, t0, dt, nsteps,
        )
    return kernels.run_generic(rho, lambda t: schedule.operators(t, ops), t0, dt, nsteps)


def _check_invariants(rho: np.ndarray, t: float) -> float:
    trace = np.trace(rho).real
    drift = abs(trace - 1.0)
    if not np.isfinite(trace) or drift > _TRACE_DRIFT_LIMIT:
        raise NumericalError(
            f"trace drift {drift:.3e} at t={t:.6g} exceeds {_TRACE_DRIFT_LIMIT:g}; "
            "reduce dt"
        )
    min_eig = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0).min()
    if min_eig < _MIN_EIGENVALUE_LIMIT:
        raise NumericalError(
            f"minimum eigenvalue {min_eig:.3e} at t={t:.6g} below {_MIN_EIGENVALUE_LIMIT:g}; "
            "reduce dt"
        )
    return drift


def integrate(
    rho0: DensityState | np.ndarray,
    schedule,
    basis: SymmetricBasis,
    t_final: float,
    dt: float,
    *,
    sample_every: int | None = None,
    samples: int = 1000,
    store_states: bool = False,
) -> TrajectoryRecord:
    """Integrate the master equation with classical fixed-step RK4.

    Operators are rebuilt at every stage time for time-dependent schedules
    and once for constant ones (where the evolution additionally runs through
    powers of the one-step RK4 superoperator when the sector is small enough
    -- the identical linear map, evaluated faster).  Diagnostics are recorded
    every ``sample_every`` steps (or ~``samples`` times per run), and trace /
    positivity invariants are checked at each sample.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_final < 0.0:
        raise ValueError("t_final must be non-negative")
    state = rho0 if isinstance(rho0, DensityState) else DensityState(np.asarray(rho0, dtype=complex))
    state.validate()
    rho = state.matrix.astype(complex, copy=True)

    nsteps = max(1, int(round(t_final / dt))) if t_final > 0 else 0
    dt_eff = t_final / nsteps if nsteps else dt
    if sample_every is None:
        sample_every = max(1, nsteps // max(1, samples))

    ops = OperatorCache(basis)
    superop_step = superop_gap = None
    if getattr(schedule, "is_constant", False) and basis.size <= _SUPEROP_MAX_DIM and nsteps > 0:
        l_op, h_op = schedule.operators(0.0, ops)
        superop_step = _superop_step_matrix(l_op, h_op, dt_eff)
        superop_gap = np.linalg.matrix_power(superop_step, sample_every)

    target_basis = orthonormal_dfs_basis(basis, schedule.c_index, 1.0)
    current_basis_cache: dict[float, list[np.ndarray]] = {}

    def overlap_current(rho_s: np.ndarray, mu: float) -> float:
        if mu == 0.0:
            psi = basis.state_vector((basis.n_atoms, 0, 0))
            return float(np.real(np.vdot(psi, rho_s @ psi)))
        if mu not in current_basis_cache:
            if len(current_basis_cache) > 4:
                current_basis_cache.clear()
            current_basis_cache[mu] = orthonormal_dfs_basis(basis, schedule.c_index, mu)
        return float(
            math.fsum(np.real(np.vdot(phi, rho_s @ phi)) for phi in current_basis_cache[mu])
        )

    times, pur, over_cur, over_tgt, drive, drift_rec = [], [], [], [], [], []
    stored: list[np.ndarray] | None = [] if store_states else None

    def record(t: float, rho_s: np.ndarray) -> None:
        drift = _check_invariants(rho_s, t)
        p = purity(rho_s)
        oc = overlap_current(rho_s, schedule.mu(t))
        ot = float(
            math.fsum(np.real(np.vdot(phi, rho_s @ phi)) for phi in target_basis)
        )
        for name, value in (("purity", p), ("overlap", oc), ("target overlap", ot)):
            if not -1e-8 <= value <= 1.0 + 1e-8:
                raise NumericalError(f"{name} {value!r} at t={t:.6g} outside [0, 1]")
        times.append(t)
        pur.append(p)
        over_cur.append(oc)
        over_tgt.append(ot)
        drive.append(abs(schedule.drive(t)))
        drift_rec.append(drift)
        if stored is not None:
            stored.append(rho_s.copy())

    record(0.0, rho)
    done = 0
    while done < nsteps:
        chunk = min(sample_every, nsteps - done)
        if superop_step is not None:
            gap = superop_gap if chunk == sample_every else np.linalg.matrix_power(superop_step, chunk)
            rho = (gap @ rho.reshape(-1)).reshape(rho.shape)
        else:
            rho = _advance(schedule, rho, ops, done * dt_eff, dt_eff, chunk)
        done += chunk
        record(done * dt_eff, rho)

    final = DensityState(matrix=rho, time=nsteps * dt_eff)
    return TrajectoryRecord(
        times=np.array(times),
        purity=np.array(pur),
        overlap_current=np.array(over_cur),
        overlap_target=np.array(over_tgt),
        drive_abs=np.array(drive),
        trace_drift=np.array(drift_rec),
        final=final,
        states=stored,
    )
