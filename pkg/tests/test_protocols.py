"""Control schedules, parameter mapping, shortcut criteria, searches.

The counterdiabatic checks verify, with assembled matrices, that each
shortcut Hamiltonian reproduces i <psi_n_perp | d/dt psi_k> on exactly the
allowed dual states: those with one quantum moved between adjacent modes
(n_p = k_p + 1 on the raised component), all other complementary couplings
vanishing.
"""

import math

import numpy as np
import pytest

from conftest import random_density
from dfsim import (
    CentralShortcutSchedule,
    ConfigError,
    EdgeShortcutSchedule,
    OperatorCache,
    PhysicalParams,
    QuenchSchedule,
    RampSchedule,
    RegimeWarning,
    TrajectoryRecord,
    c_dagger_d_matrix,
    complementary_normalization,
    complementary_vector,
    eigenstate_normalization,
    eigenstate_vector,
    enumerate_basis,
    ground_state,
    integrate,
    lindblad_rhs,
    map_physical_params,
    meets_threshold,
    search_min_quench_time,
    search_min_ramp_time,
    select_quench_mu,
    subspace_alignment,
)

SQRT2 = math.sqrt(2.0)


def coupling_candidates(k):
    """Allowed dual labels n (with the raised-component value n_p) coupled to
    |psi_k> by a time derivative or a quadratic shortcut Hamiltonian."""
    k1, k2, k3 = k
    out = []
    if k1 >= 1:
        out.append(((k1 - 1, k2 + 1, k3), k2 + 1))
    if k2 >= 1:
        out.append(((k1 + 1, k2 - 1, k3), k1 + 1))
        out.append(((k1, k2 - 1, k3 + 1), k3 + 1))
    if k3 >= 1:
        out.append(((k1, k2 + 1, k3 - 1), k2 + 1))
    return out


def derivative_matrix_element(k, n_p, mu, mu_dot):
    """Closed-form <psi_n_perp | d/dt psi_k> for an allowed dual label."""
    norm_k = eigenstate_normalization(k, mu)
    return (
        -(mu_dot / (SQRT2 * mu))
        * norm_k
        * math.prod(math.factorial(x) for x in k)
        * n_p
    )


# ---------------------------------------------------------------------------
# physical-parameter mapping
# ---------------------------------------------------------------------------

def _quiet_params(**overrides):
    defaults = dict(kappa=2.0, g=1.0, omega1_amp=0.1, omega2_amp=0.1, eta=0.0,
                    delta_e=100.0, delta_c_prime=0.0)
    defaults.update(overrides)
    return PhysicalParams(**defaults)


def test_equal_drives_give_mu_one():
    params = map_physical_params(_quiet_params(), 5)
    assert params.mu == pytest.approx(1.0)


def test_zero_pump_gives_zero_chi():
    assert map_physical_params(_quiet_params(eta=0.0), 5).chi == 0.0


def test_gamma_c_formula_frozen_value():
    params = map_physical_params(_quiet_params(), 5)
    assert params.gamma_c == pytest.approx(2.5e-7, rel=1e-12)
    assert params.detuning_ratio == 0.0


def test_regime_warnings_warn_but_do_not_block():
    with pytest.warns(RegimeWarning):
        params = map_physical_params(_quiet_params(delta_e=1.0), 5)
    assert params.gamma_c > 0

    with pytest.warns(RegimeWarning):
        map_physical_params(_quiet_params(kappa=0.01), 5)

    import warnings as _w
    with _w.catch_warnings():
        _w.simplefilter("error")
        map_physical_params(_quiet_params(), 5)  # compliant: no warning


def test_degenerate_inputs_rejected():
    with pytest.raises(ValueError):
        map_physical_params(_quiet_params(omega1_amp=0.0), 5)
    with pytest.raises(ValueError):
        map_physical_params(_quiet_params(delta_e=0.0), 5)
    with pytest.raises(ValueError):
        map_physical_params(_quiet_params(kappa=0.0), 5)


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def test_quench_schedule_contract():
    sched = QuenchSchedule(mu_q=0.96, c_index=-5)
    assert sched.mu(0.0) == sched.mu(100.0) == 0.96
    assert sched.drive(3.0) == pytest.approx(SQRT2 * 0.96 * (-5))
    with pytest.raises(ValueError):
        QuenchSchedule(mu_q=1.0, c_index=-5)
    with pytest.raises(ValueError):
        QuenchSchedule(mu_q=-0.1, c_index=-5)


@pytest.mark.parametrize("beta,t_f", [(1.0 / 137.0, 137.0), (1.0 / 330.0, 330.0)])
def test_ramp_schedule_contract(beta, t_f):
    sched = RampSchedule(beta=beta, c_index=-5)
    assert sched.t_final == pytest.approx(t_f)
    assert sched.mu(sched.t_final) == 1.0  # exact at the endpoint
    assert sched.mu(0.5 * sched.t_final) == pytest.approx(0.5)
    assert sched.drive(sched.t_final) == pytest.approx(SQRT2 * -5)
    with pytest.raises(ValueError):
        RampSchedule(beta=0.0, c_index=0)


def test_edge_schedule_clamp():
    sched = EdgeShortcutSchedule(n_atoms=5, beta=1.0, sign=-1, cutoff_factor=5.0)
    cutoff = 5.0 * SQRT2 * 5
    assert abs(sched.chi_clamp) == pytest.approx(cutoff, rel=1e-12)
    for t in np.linspace(0.0, 1.0, 501):
        assert abs(sched.drive(t)) <= cutoff * (1 + 1e-12)
    # frozen (magnitude and phase) after the crossing
    assert sched.drive(sched.t_clamp + 0.01) == sched.drive(1.0)
    assert 0.9 < sched.t_clamp < 1.0
    with pytest.raises(ValueError):
        EdgeShortcutSchedule(n_atoms=5, beta=1.0, sign=-1, cutoff_factor=1.0)
    with pytest.raises(ValueError):
        EdgeShortcutSchedule(n_atoms=5, beta=1.0, sign=2)


def test_edge_drive_is_chi_dominated_early():
    sched = EdgeShortcutSchedule(n_atoms=5, beta=1.0, sign=-1)
    shift_at_zero = 2 * SQRT2 / abs(sched.detuning_ratio - 1j)
    assert abs(sched.chi_shift(0.0)) == pytest.approx(shift_at_zero, rel=1e-12)
    for t in (0.05, 0.15, 0.3):
        chi = SQRT2 * sched.mu(t) * sched.c_index
        # early on the total drive tracks the linear bare drive to within the
        # finite shortcut offset
        assert abs(abs(sched.drive(t)) - abs(chi)) <= 1.05 * shift_at_zero
    # the shortcut part stays bounded over the first half of the ramp
    for t in (0.1, 0.3, 0.5):
        assert abs(sched.chi_shift(t)) <= 1.25 * shift_at_zero


def test_edge_targets():
    minus = EdgeShortcutSchedule(n_atoms=5, beta=1.0, sign=-1)
    plus = EdgeShortcutSchedule(n_atoms=5, beta=1.0, sign=+1)
    assert minus.target == (5, 0, 0) and minus.c_index == -5
    assert plus.target == (0, 0, 5) and plus.c_index == +5


def test_central_schedule_drive_strength():
    sched = CentralShortcutSchedule(beta=0.7)
    assert sched.alpha(0.0) == 0.0
    assert sched.alpha(sched.t_final) == pytest.approx(0.7)  # maximum, at mu = 1
    assert sched.drive(0.3) == 0.0
    assert sched.c_index == 0


# ---------------------------------------------------------------------------
# shortcut criterion: H_s matrix elements vs the time derivative
# ---------------------------------------------------------------------------

def _criterion_check(basis, schedule, k_target, mu_values, rel_tol=1e-8, zero_tol=1e-10):
    ops = OperatorCache(basis)
    beta = schedule.beta
    for mu in mu_values:
        t = mu / beta
        h_s = schedule.shortcut_hamiltonian(t, ops)
        v_k = eigenstate_vector(basis, k_target, mu)
        scale = np.linalg.norm(h_s, 2)
        allowed = dict()
        for n, n_p in coupling_candidates(k_target):
            allowed[n] = n_p
        c_target = k_target[2] - k_target[0]
        for n in basis.states:
            if n[2] - n[0] == c_target:
                continue  # same subspace, not a complementary state
            w_n = complementary_vector(basis, n, mu)
            lhs = np.vdot(w_n, h_s @ v_k)
            if n in allowed:
                rhs = 1j * complementary_normalization(n, mu) * derivative_matrix_element(
                    k_target, allowed[n], mu, beta
                )
                assert abs(lhs - rhs) <= rel_tol * abs(rhs), (n, mu, lhs, rhs)
            else:
                assert abs(lhs) <= zero_tol * scale, (n, mu, lhs)


@pytest.fixture(scope="module")
def basis4():
    return enumerate_basis(4)


def test_central_shortcut_criterion(basis4, rng=None):
    mus = np.random.default_rng(7).uniform(0.05, 0.95, size=20)
    schedule = CentralShortcutSchedule(beta=1.0)
    _criterion_check(basis4, schedule, (0, 4, 0), mus)


@pytest.mark.parametrize("sign", [-1, +1])
def test_edge_shortcut_criterion(basis4, sign):
    mus = np.random.default_rng(11).uniform(0.05, 0.9, size=20)
    schedule = EdgeShortcutSchedule(n_atoms=4, beta=1.0, sign=sign)
    target = schedule.target
    _criterion_check(basis4, schedule, target, mus)


def test_central_first_line_family_vanishes(basis4):
    # the (mu^2 - mu^-2) operator family must not couple out of (0, N, 0)
    n_atoms = 4
    for mu in (0.3, 0.6, 0.9):
        family = (
            c_dagger_d_matrix(basis4, mu, 0, 0)
            - 2.0 * c_dagger_d_matrix(basis4, mu, 1, 1)
            + c_dagger_d_matrix(basis4, mu, 2, 2)
            + c_dagger_d_matrix(basis4, mu, 0, 2)
            + c_dagger_d_matrix(basis4, mu, 2, 0)
        )
        v_k = eigenstate_vector(basis4, (0, n_atoms, 0), mu)
        scale = np.linalg.norm(family, 2)
        for n in basis4.states:
            if n[2] - n[0] == 0:
                continue
            w_n = complementary_vector(basis4, n, mu)
            assert abs(np.vdot(w_n, family @ v_k)) <= 1e-10 * scale


def test_time_derivative_matches_finite_difference(basis4):
    # closed form vs central finite difference of the eigenstate vectors
    delta = 1e-6
    for mu in (0.3, 0.55, 0.8):
        for k in ((1, 2, 1), (0, 4, 0), (4, 0, 0), (2, 1, 1)):
            plus = eigenstate_vector(basis4, k, mu + delta)
            minus = eigenstate_vector(basis4, k, mu - delta)
            fd = (plus - minus) / (2 * delta)
            for n, n_p in coupling_candidates(k):
                w_n = complementary_vector(basis4, n, mu)
                expected = complementary_normalization(n, mu) * derivative_matrix_element(
                    k, n_p, mu, 1.0
                )
                got = np.vdot(w_n, fd)
                assert got == pytest.approx(expected, rel=1e-5), (k, n, mu)


@pytest.mark.parametrize("mu", [0.5, 0.98])
def test_edge_formulation_equivalence(basis5, mu, rng):
    # shifted complex drive vs added shortcut Hamiltonian: identical dynamics
    schedule = EdgeShortcutSchedule(n_atoms=5, beta=1.0, sign=-1)
    ops = OperatorCache(basis5)
    t = mu / schedule.beta
    rho = random_density(rng, basis5.size)
    l_shift, h_shift = schedule.operators(t, ops)
    l_plain, h_added = schedule.added_form_operators(t, ops)
    rhs_a = lindblad_rhs(rho, h_shift, l_shift)
    rhs_b = lindblad_rhs(rho, h_added, l_plain)
    scale = np.abs(rhs_a).max()
    assert np.abs(rhs_a - rhs_b).max() <= 1e-10 * scale


# ---------------------------------------------------------------------------
# threshold and searches
# ---------------------------------------------------------------------------

def _synthetic_traj(p_final, f_final):
    one = np.array([0.0, 1.0])
    return TrajectoryRecord(
        times=one,
        purity=np.array([1.0, p_final]),
        overlap_current=np.array([0.5, f_final]),
        overlap_target=np.array([0.5, f_final]),
        drive_abs=one,
        trace_drift=np.zeros(2),
        final=None,
    )


def test_meets_threshold_examples():
    assert meets_threshold(_synthetic_traj(0.990, 0.991)) is True
    assert meets_threshold(_synthetic_traj(0.9899, 0.999)) is False
    assert meets_threshold(_synthetic_traj(1.0, 1.0)) is True


def test_subspace_alignment_monotone(basis5):
    values = [subspace_alignment(basis5, -5, mu) for mu in (0.5, 0.8, 0.96)]
    assert values[0] < values[1] < values[2]
    assert subspace_alignment(basis5, -5, 0.96) > 0.99


def test_select_quench_mu(basis5):
    mu_q = select_quench_mu(basis5, -5, overlap_bound=0.99)
    assert 0.5 < mu_q < 1.0
    assert subspace_alignment(basis5, -5, mu_q) >= 0.99
    assert subspace_alignment(basis5, -5, mu_q - 0.05) < 0.99


def test_quench_search_finds_table_time(basis5):
    result = search_min_quench_time(basis5, -5, t_max=420.0, mu_q=0.96)
    assert result.label == "quench"
    assert result.control == 0.96
    assert result.t_final == pytest.approx(318.0, rel=0.05)


def test_quench_search_requires_reachable_threshold(basis5):
    with pytest.raises(ConfigError):
        search_min_quench_time(basis5, -5, t_max=5.0, mu_q=0.96)


def test_ramp_search_validates_bounds(basis5):
    with pytest.raises(ConfigError):
        search_min_ramp_time(basis5, -5, (100.0, 100.0))
