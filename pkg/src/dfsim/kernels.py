"""Fixed-step RK4 stepping kernels for the master equation.

The right-hand side is evaluated in the drift/jump split

    drho/dt = A rho + rho A^dag + L rho L^dag,     A = -iH - (1/2) L^dag L,

which is linear in rho and keeps roundoff in the anti-Hermitian component
damped (symmetrized forms of the same expression amplify it).  Operators are
rebuilt at every Runge-Kutta stage time for time-dependent control laws.

Kernels are JIT-compiled with numba when available; the pure-NumPy versions
below are the fallback and the reference semantics.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def _rhs(rho, l_op, l_dag, drift, drift_dag):
    return drift @ rho + rho @ drift_dag + l_op @ (rho @ l_dag)


@njit(cache=True)
def run_constant(rho, l_op, drift, dt, nsteps):
    """RK4 steps under time-independent operators."""
    l_dag = l_op.conj().T
    drift_dag = drift.conj().T
    for _ in range(nsteps):
        k1 = _rhs(rho, l_op, l_dag, drift, drift_dag)
        stage = rho + (0.5 * dt) * k1
        k2 = _rhs(stage, l_op, l_dag, drift, drift_dag)
        stage = rho + (0.5 * dt) * k2
        k3 = _rhs(stage, l_op, l_dag, drift, drift_dag)
        stage = rho + dt * k3
        k4 = _rhs(stage, l_op, l_dag, drift, drift_dag)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rho


@njit(cache=True)
def _ramp_ops(jminus, jplus, identity, mu, chi, gamma_c, detuning_ratio):
    l_op = math.sqrt(gamma_c) * (jminus + (mu * mu) * jplus + chi * identity)
    l_dag = l_op.conj().T
    drift = (-0.5 - 0.5j * detuning_ratio) * (l_dag @ l_op)
    return l_op, l_dag, drift


@njit(cache=True)
def run_ramp(rho, jminus, jplus, identity, c_index, beta, gamma_c, detuning_ratio, t0, dt, nsteps):
    """RK4 steps for the linear ramp mu(t) = beta t with chi = sqrt(2) mu C."""
    t = t0
    for _ in range(nsteps):
        mu = beta * t
        l1, ld1, a1 = _ramp_ops(jminus, jplus, identity, mu, _SQRT2 * mu * c_index, gamma_c, detuning_ratio)
        mu = beta * (t + 0.5 * dt)
        l2, ld2, a2 = _ramp_ops(jminus, jplus, identity, mu, _SQRT2 * mu * c_index, gamma_c, detuning_ratio)
        mu = beta * (t + dt)
        l4, ld4, a4 = _ramp_ops(jminus, jplus, identity, mu, _SQRT2 * mu * c_index, gamma_c, detuning_ratio)
        k1 = _rhs(rho, l1, ld1, a1, a1.conj().T)
        stage = rho + (0.5 * dt) * k1
        k2 = _rhs(stage, l2, ld2, a2, a2.conj().T)
        stage = rho + (0.5 * dt) * k2
        k3 = _rhs(stage, l2, ld2, a2, a2.conj().T)
        stage = rho + dt * k3
        k4 = _rhs(stage, l4, ld4, a4, a4.conj().T)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    return rho


@njit(cache=True)
def _edge_chi(t, beta, c_index, gamma_c, detuning_ratio, t_clamp, chi_clamp):
    if t >= t_clamp:
        return chi_clamp
    mu = beta * t
    chi = _SQRT2 * mu * c_index
    sign = 1.0 if c_index > 0 else -1.0
    chi_s = sign * 2j * _SQRT2 * beta / (gamma_c * (detuning_ratio - 1j) * (mu**4 - 1.0))
    return chi + chi_s


@njit(cache=True)
def _edge_ops(jminus, jplus, identity, mu, chi, gamma_c, detuning_ratio):
    l_op = math.sqrt(gamma_c) * (jminus + (mu * mu) * jplus + chi * identity)
    l_dag = l_op.conj().T
    drift = (-0.5 - 0.5j * detuning_ratio) * (l_dag @ l_op)
    return l_op, l_dag, drift


@njit(cache=True)
def run_edge(rho, jminus, jplus, identity, c_index, beta, gamma_c, detuning_ratio,
             t_clamp, chi_clamp, t0, dt, nsteps):
    """RK4 steps for the cavity-drive shortcut (complex total drive, clamped)."""
    t = t0
    for _ in range(nsteps):
        chi = _edge_chi(t, beta, c_index, gamma_c, detuning_ratio, t_clamp, chi_clamp)
        l1, ld1, a1 = _edge_ops(jminus, jplus, identity, beta * t, chi, gamma_c, detuning_ratio)
        th = t + 0.5 * dt
        chi = _edge_chi(th, beta, c_index, gamma_c, detuning_ratio, t_clamp, chi_clamp)
        l2, ld2, a2 = _edge_ops(jminus, jplus, identity, beta * th, chi, gamma_c, detuning_ratio)
        tf = t + dt
        chi = _edge_chi(tf, beta, c_index, gamma_c, detuning_ratio, t_clamp, chi_clamp)
        l4, ld4, a4 = _edge_ops(jminus, jplus, identity, beta * tf, chi, gamma_c, detuning_ratio)
        k1 = _rhs(rho, l1, ld1, a1, a1.conj().T)
        stage = rho + (0.5 * dt) * k1
        k2 = _rhs(stage, l2, ld2, a2, a2.conj().T)
        stage = rho + (0.5 * dt) * k2
        k3 = _rhs(stage, l2, ld2, a2, a2.conj().T)
        stage = rho + dt * k3
        k4 = _rhs(stage, l4, ld4, a4, a4.conj().T)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    return rho


@njit(cache=True)
def _central_ops(jminus, jplus, bdiff, mu, beta, gamma_c, detuning_ratio):
    l_op = math.sqrt(gamma_c) * (jminus + (mu * mu) * jplus)
    l_dag = l_op.conj().T
    alpha = 2.0 * mu * beta / (mu**4 + 1.0)
    # H = (r/2) L^dag L + i alpha (b_{-1}^dag b_{+1} - b_{+1}^dag b_{-1})
    drift = (-0.5 - 0.5j * detuning_ratio) * (l_dag @ l_op) + alpha * bdiff
    return l_op, l_dag, drift


@njit(cache=True)
def run_central(rho, jminus, jplus, bdiff, beta, gamma_c, detuning_ratio, t0, dt, nsteps):
    """RK4 steps for the counterdiabatic two-mode-exchange shortcut (chi = 0)."""
    t = t0
    for _ in range(nsteps):
        l1, ld1, a1 = _central_ops(jminus, jplus, bdiff, beta * t, beta, gamma_c, detuning_ratio)
        l2, ld2, a2 = _central_ops(jminus, jplus, bdiff, beta * (t + 0.5 * dt), beta, gamma_c, detuning_ratio)
        l4, ld4, a4 = _central_ops(jminus, jplus, bdiff, beta * (t + dt), beta, gamma_c, detuning_ratio)
        k1 = _rhs(rho, l1, ld1, a1, a1.conj().T)
        stage = rho + (0.5 * dt) * k1
        k2 = _rhs(stage, l2, ld2, a2, a2.conj().T)
        stage = rho + (0.5 * dt) * k2
        k3 = _rhs(stage, l2, ld2, a2, a2.conj().T)
        stage = rho + dt * k3
        k4 = _rhs(stage, l4, ld4, a4, a4.conj().T)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    return rho


def run_generic(rho, operators_at, t0, dt, nsteps):
    """Reference RK4 loop for arbitrary schedules.

    ``operators_at(t) -> (L, H)``; used for schedules without a dedicated
    kernel.  Slow (Python-level stepping) but exact in semantics.
    """
    t = t0
    for _ in range(nsteps):
        stages = []
        for ts in (t, t + 0.5 * dt, t + dt):
            l_op, h_op = operators_at(ts)
            l_dag = l_op.conj().T
            drift = -1j * h_op - 0.5 * (l_dag @ l_op)
            stages.append((l_op, l_dag, drift, drift.conj().T))
        l1, ld1, a1, ad1 = stages[0]
        l2, ld2, a2, ad2 = stages[1]
        l4, ld4, a4, ad4 = stages[2]
        k1 = a1 @ rho + rho @ ad1 + l1 @ (rho @ ld1)
        s = rho + (0.5 * dt) * k1
        k2 = a2 @ s + s @ ad2 + l2 @ (s @ ld2)
        s = rho + (0.5 * dt) * k2
        k3 = a2 @ s + s @ ad2 + l2 @ (s @ ld2)
        s = rho + dt * k3
        k4 = a4 @ s + s @ ad4 + l4 @ (s @ ld4)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    return rho
