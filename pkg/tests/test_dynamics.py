"""Rigid-body state handling, mobility-driven integration and the orientation
cache."""

import math

import numpy as np
import pytest

from regstokes import core, dynamics, geometry
from regstokes.errors import InvalidParameterError


def test_state_basis_and_drift():
    s = dynamics.RigidBodyState([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    assert np.allclose(s.basis(), np.eye(3))
    assert s.drift() < 1e-15
    assert np.allclose(s.b3, [0.0, 0.0, 1.0])
    y = s.to_vector()
    back = dynamics.RigidBodyState.from_vector(y, t=2.5)
    assert back.t == 2.5
    assert np.array_equal(back.to_vector(), y)


def test_renormalise_restores_orthonormality():
    y = np.concatenate([np.zeros(3), [1.001, 0.0, 0.0], [0.01, 1.0, 0.0]])
    z = dynamics._renormalise(y)
    s = dynamics.RigidBodyState.from_vector(z)
    assert s.drift() < 1e-15


@pytest.fixture(scope="module")
def sphere():
    return geometry.discretise_sphere(0.4)


def test_falling_sphere_velocity(sphere):
    config = dynamics.MethodConfig(method="ny", epsilon=0.1)
    solver = dynamics.MobilitySolver(sphere, config,
                                     [0.0, 0.0, -6.0 * math.pi], np.zeros(3))
    state = dynamics.RigidBodyState(np.zeros(3), [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    U, Omega = solver.velocities(state)
    assert abs(U[2] + 1.0) < 0.1
    assert np.linalg.norm(Omega) < 1e-8


def test_orientation_cache_reused(sphere):
    config = dynamics.MethodConfig(method="ny", epsilon=0.1)
    solver = dynamics.MobilitySolver(sphere, config, [0.0, 0.0, -1.0], np.zeros(3))
    state = dynamics.RigidBodyState(np.zeros(3), [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    solver.velocities(state)
    assert len(solver._cache) == 1
    moved = dynamics.RigidBodyState([5.0, 5.0, 5.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    solver.velocities(moved)  # translation does not change the operator
    assert len(solver._cache) == 1
    theta = 0.3
    rot = dynamics.RigidBodyState(
        np.zeros(3), [math.cos(theta), math.sin(theta), 0.0],
        [-math.sin(theta), math.cos(theta), 0.0])
    solver.velocities(rot)
    assert len(solver._cache) == 2


def test_cache_is_bounded(sphere):
    config = dynamics.MethodConfig(method="ny", epsilon=0.1)
    solver = dynamics.MobilitySolver(sphere, config, [0.0, 0.0, -1.0], np.zeros(3))
    for theta in np.linspace(0.0, 1.0, dynamics.CACHE_SIZE + 3):
        state = dynamics.RigidBodyState(
            np.zeros(3), [math.cos(theta), math.sin(theta), 0.0],
            [-math.sin(theta), math.cos(theta), 0.0])
        solver.velocities(state)
    assert len(solver._cache) <= dynamics.CACHE_SIZE


def test_integrate_constant_velocity(sphere):
    F = np.array([0.0, 0.0, -6.0 * math.pi])
    config = dynamics.MethodConfig(method="ny", epsilon=0.05)
    solver = dynamics.MobilitySolver(sphere, config, F, np.zeros(3))
    state0 = dynamics.RigidBodyState(np.zeros(3), [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    U0, _ = solver.velocities(state0)
    traj = dynamics.integrate(solver, (0.0, 5.0), state0)
    assert traj.times[0] == 0.0 and abs(traj.times[-1] - 5.0) < 1e-12
    # sphere under constant force falls at constant speed
    assert abs(traj.states[-1].x0[2] - 5.0 * U0[2]) < 1e-5
    assert all(s.drift() < 1e-6 for s in traj.states)


def test_trajectory_export(tmp_path, sphere):
    config = dynamics.MethodConfig(method="ny", epsilon=0.1)
    solver = dynamics.MobilitySolver(sphere, config, [0.0, 0.0, -1.0], np.zeros(3))
    state0 = dynamics.RigidBodyState(np.zeros(3), [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    traj = dynamics.integrate(solver, (0.0, 1.0), state0)
    path = tmp_path / "traj.txt"
    traj.save_txt(path)
    data = np.loadtxt(path)
    assert data.shape == (len(traj.times), 16)
    assert np.array_equal(data[:, 0], np.array(traj.times))
    assert np.array_equal(data[:, 3], traj.z_positions())


def test_invalid_method_rejected(sphere):
    with pytest.raises(InvalidParameterError):
        dynamics.MobilitySolver(sphere, dynamics.MethodConfig(method="bogus"),
                                np.zeros(3), np.zeros(3))
    with pytest.raises(InvalidParameterError):
        dynamics.MobilitySolver(sphere, dynamics.MethodConfig(method="nearest"),
                                np.zeros(3), np.zeros(3))


def test_sediment_torus_smoke():
    config = dynamics.MethodConfig(method="ny", epsilon=0.2)
    traj = dynamics.sediment_torus(2.5, 1.0, 0.7, config, t_end=2.0)
    assert traj.states[-1].x0[2] < 0.0
    # axisymmetric fall: the axis stays put
    assert np.allclose(traj.states[-1].b3, [0.0, 0.0, 1.0], atol=1e-6)
