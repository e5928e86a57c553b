"""Integrator behavior, growth-rate bound, and trajectory output format."""

import numpy as np
import pytest
import scipy.linalg as sla

from lognormgrid.assembly import (
    DroopConfig,
    Role,
    RoleAssignment,
    assemble_closed_loop,
    assemble_open_loop,
    equilibrium,
)
from lognormgrid.errors import DegenerateNormError
from lognormgrid.lognorm import log_norm
from lognormgrid.simulate import (
    convergence_order,
    default_initial_state,
    default_step,
    dini_check,
    integrate,
    integrate_forced,
    measure_transient_growth,
    system_hash,
)

from conftest import make_random_closed_loop


def synthetic_system(b, k=None):
    """Wrap a bare matrix as an all-producer closed-loop system for tests."""
    n = b.shape[0]

    class _Wrapper:
        pass

    graph_free = _Wrapper()
    graph_free.b = np.asarray(b, dtype=float)
    graph_free.k = np.zeros(n) if k is None else np.asarray(k, dtype=float)
    graph_free.n_lines = 0
    graph_free.n_nodes = n
    graph_free.dim = n
    graph_free.permutation = lambda: np.arange(n)
    return graph_free


def test_integrate_scalar_decay():
    system = synthetic_system(-np.eye(3))
    z0 = np.array([1.0, 0.0, 0.0])
    traj = integrate(system, z0, 1.0, 1e-3)
    assert abs(traj.final_state[0] - np.exp(-1.0)) < 1e-8
    assert not traj.diverged
    assert traj.times.shape[0] == 1001


def test_integrate_converges_to_equilibrium(two_node_graph):
    droop = DroopConfig(
        gain=np.array([-1.0, -1.0]), load_power=np.array([0.0, 0.4]), v_ref=1.0
    )
    assignment = RoleAssignment.from_producers(2, [0])
    system = assemble_closed_loop(two_node_graph, assignment, droop)
    z_star = equilibrium(system)
    z0 = default_initial_state(system)
    traj = integrate(system, z0, 60.0, 0.01)
    assert np.allclose(traj.final_state, z_star, atol=1e-8)
    # voltages settle near v_ref offset by droop; line current equals the draw
    assert abs(traj.final_state[0] - 0.4) < 1e-8


def test_integrate_divergence_flag():
    system = synthetic_system(np.array([[3.0]]))
    traj = integrate(system, np.ones(1), 20.0, 0.01)
    assert traj.diverged
    assert traj.times.shape[0] == traj.states.shape[0]
    assert traj.times.shape[0] < 2001


def test_integrate_linearity(rng):
    b = rng.standard_normal((4, 4)) - 2.0 * np.eye(4)
    system = synthetic_system(b)
    z0a = rng.standard_normal(4)
    z0b = rng.standard_normal(4)
    ta = integrate(system, z0a, 1.0, 1e-3)
    tb = integrate(system, z0b, 1.0, 1e-3)
    tsum = integrate(system, z0a + z0b, 1.0, 1e-3)
    combined = ta.states + tb.states
    scale = np.max(np.abs(combined))
    assert np.max(np.abs(tsum.states - combined)) <= 1e-9 * scale


def test_integrate_fixed_point(two_node_graph):
    droop = DroopConfig(
        gain=np.array([-1.0, -1.0]), load_power=np.array([0.0, 0.4]), v_ref=1.0
    )
    system = assemble_closed_loop(
        two_node_graph, RoleAssignment.from_producers(2, [0]), droop
    )
    z_star = equilibrium(system)
    traj = integrate(system, z_star, 5.0, 1e-2)
    drift = np.max(np.linalg.norm(traj.states - z_star, axis=1))
    assert drift <= 1e-9 * (1.0 + np.linalg.norm(z_star))


def test_rk4_order_on_two_node_system(two_node_graph):
    droop = DroopConfig(
        gain=np.array([-1.0, -1.0]), load_power=np.array([0.0, 0.4]), v_ref=1.0
    )
    system = assemble_closed_loop(
        two_node_graph, RoleAssignment.from_producers(2, [0]), droop
    )
    z0 = default_initial_state(system) + 0.5
    order = convergence_order(system, z0, 1.0, 0.05)
    assert order >= 3.7


def test_equilibrium_approach_bounded_by_envelope(rng):
    # ||z(t) - z*|| <= ||z0 - z*|| e^(mu t) + integrator tolerance
    for seed in (3, 5):
        _, _, _, system = make_random_closed_loop(seed, 5)
        mu = log_norm(system.b)
        z_star = equilibrium(system)
        z0 = z_star + rng.standard_normal(system.dim)
        t_end = 1.0
        traj = integrate(system, z0, t_end, 1e-3)
        lhs = np.linalg.norm(traj.final_state - z_star)
        rhs = np.linalg.norm(z0 - z_star) * np.exp(min(mu * t_end, 700.0)) + 1e-8
        assert lhs <= rhs


def test_dini_normal_matrix_rate_attained():
    system = synthetic_system(np.diag([-1.0, -2.0]))
    traj = integrate(system, np.array([1.0, 0.0]), 2.0, 1e-3)
    result = dini_check(traj, system)
    assert result.within_bound
    assert result.max_rate == pytest.approx(-1.0, abs=1e-6)
    assert result.mu == pytest.approx(-1.0, abs=1e-12)


def test_dini_skew_matrix_rate_zero():
    system = synthetic_system(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    traj = integrate(system, np.array([1.0, 0.0]), 2.0, 1e-3)
    result = dini_check(traj, system)
    assert abs(result.max_rate) < 1e-6
    assert result.within_bound


def test_dini_transient_growth_witness():
    b = np.array([[-1.0, 4.0], [0.0, -1.0]])
    system = synthetic_system(b)
    h = 1e-3
    # the top right singular vector of e^(hB) maximizes first-step growth
    _, _, vt = np.linalg.svd(sla.expm(h * b))
    z0 = vt[0]
    traj = integrate(system, z0, 0.5, h)
    result = dini_check(traj, system)
    assert result.max_rate > 0.0  # grows despite alpha = -1
    assert result.max_rate <= result.mu + result.tolerance
    assert result.mu == pytest.approx(1.0, abs=1e-12)


def test_dini_bound_on_random_grids():
    for seed in range(6):
        _, _, _, system = make_random_closed_loop(seed, 6)
        z_star = equilibrium(system)
        rng = np.random.default_rng(seed)
        z0 = z_star + rng.standard_normal(system.dim)
        h = default_step(system)
        traj = integrate(system, z0, 400 * h, h)
        result = dini_check(traj, system)
        assert result.within_bound


def test_dini_degenerate_norm():
    system = synthetic_system(np.diag([-1.0]))
    traj = integrate(system, np.zeros(1), 1.0, 1e-2)  # starts at z* = 0
    with pytest.raises(DegenerateNormError):
        dini_check(traj, system)


def test_transient_growth_normal_vs_nonnormal():
    t_grid = np.linspace(0.0, 2.0, 21)
    normal = measure_transient_growth(np.diag([-1.0, -2.0]), t_grid)
    assert normal.peak == pytest.approx(1.0, abs=1e-12)
    assert normal.t_peak == 0.0
    assert not normal.amplifying

    nonnormal = measure_transient_growth(np.array([[-1.0, 4.0], [0.0, -1.0]]), t_grid)
    assert nonnormal.peak > 1.0
    assert nonnormal.t_peak > 0.0
    assert nonnormal.amplifying


def test_transient_growth_open_loop_respects_envelope(two_node_graph):
    open_sys = assemble_open_loop(two_node_graph)
    t_grid = np.linspace(0.0, 2.0, 21)
    growth = measure_transient_growth(open_sys.a, t_grid)
    mu = log_norm(open_sys.a)
    assert np.all(
        growth.envelope.exp_norm <= np.exp(mu * t_grid) * (1.0 + 1e-7)
    )


def test_closed_loop_equals_forced_open_loop(two_node_graph):
    # roles [consumer, producer] exercise a nontrivial permutation
    droop = DroopConfig(
        gain=np.array([-1.0, -2.0]), load_power=np.array([0.3, 0.0]), v_ref=1.0
    )
    assignment = RoleAssignment.from_producers(2, [1])
    closed = assemble_closed_loop(two_node_graph, assignment, droop)
    open_sys = assemble_open_loop(two_node_graph)
    v_ref = droop.effective_v_ref()

    def injection(t, x):
        v = x[open_sys.n_lines :]
        f = np.empty(2)
        for node in range(2):
            if assignment.roles[node] is Role.PRODUCER:
                f[node] = droop.gain[node] * (v[node] - v_ref[node])
            else:
                f[node] = -droop.load_power[node] / v_ref[node]
        return f

    h = 1e-3
    z0_open = np.array([0.0, 1.0, 1.0])
    perm = closed.permutation()
    z0_closed = np.concatenate([z0_open[:1], z0_open[1:][perm]])
    traj_closed = integrate(closed, z0_closed, 2.0, h)
    traj_open = integrate_forced(open_sys, injection, z0_open, 2.0, h)
    # map open-loop voltages into the closed loop's permuted order
    mapped = np.hstack(
        [traj_open.states[:, :1], traj_open.states[:, 1:][:, perm]]
    )
    assert np.max(np.abs(traj_closed.states - mapped)) < 1e-9


def test_trajectory_csv_restores_original_order(two_node_graph):
    droop = DroopConfig(
        gain=np.array([-1.0, -2.0]), load_power=np.array([0.3, 0.0]), v_ref=1.0
    )
    assignment = RoleAssignment.from_producers(2, [1])  # permutation [1, 0]
    system = assemble_closed_loop(two_node_graph, assignment, droop)
    z0 = np.array([0.0, 10.0, 20.0])  # v_hat = [v1, v0] = [10, 20]
    traj = integrate(system, z0, 0.01, 0.01)
    lines = traj.to_csv(system.n_lines).splitlines()
    assert lines[0] == "t,ip_0,vg_0,vg_1"
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[2]) == 20.0  # vg_0 back in original order
    assert float(first[3]) == 10.0


def test_system_hash_distinguishes():
    b1 = np.eye(2)
    b2 = np.eye(2) * 2.0
    k = np.zeros(2)
    assert system_hash(b1, k) != system_hash(b2, k)
    assert system_hash(b1, k) == system_hash(np.eye(2), np.zeros(2))
