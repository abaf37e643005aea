import numpy as np
import pytest

from mppgeo import landmarks as lm
from mppgeo.errors import NonConvergence
from mppgeo.geometry import DriftModel
from mppgeo.landmarks import (LandmarkState, LandmarkSystem, controls,
                              drift_flow, gaussian_field, grid_over_points,
                              integrate_landmarks, landmark_rhs,
                              landmark_shoot, landmark_singular_check)

CONST_FIELD = lm.NoiseField(lambda x: np.array([1.0, 0.0]),
                            lambda x: np.zeros((2, 2)))

TWO_FIELDS = [gaussian_field([0.0, 0.0], 0.6, 0),
              gaussian_field([1.0, 0.5], 0.6, 1)]

X0 = np.array([[0.1, -0.2], [0.8, 0.4]])
LAM0 = np.array([[0.5, -0.3], [0.2, 0.7]])


def test_gaussian_field_values():
    f = gaussian_field([0.3, -0.2], 0.5, 1)
    assert np.allclose(f.eval(np.array([0.3, -0.2])), [0.0, 1.0])
    at_tau = np.array([0.3 + 0.5, -0.2])
    assert abs(np.linalg.norm(f.eval(at_tau)) - np.exp(-0.5)) < 1e-14


def test_gaussian_gradient_matches_fd():
    f = gaussian_field([0.3, -0.2], 0.5, 1)
    rng = np.random.default_rng(2)
    h = 1e-6
    for _ in range(5):
        x = rng.normal(size=2)
        fd = np.array([(f.eval(x + h * e) - f.eval(x - h * e)) / (2 * h)
                       for e in np.eye(2)]).T
        assert np.abs(f.grad(x) - fd).max() < 1e-6


def test_rhs_zero_momentum_is_drift_flow():
    drift = DriftModel.constant([0.3, 0.1])
    system = LandmarkSystem(2, 2, TWO_FIELDS, drift=drift, steps=100)
    st = LandmarkState(X0, np.zeros((2, 2)), None)
    xd, ld = landmark_rhs(system, 0.0, st)
    assert np.allclose(xd, [[0.3, 0.1], [0.3, 0.1]])
    assert np.abs(ld).max() == 0.0
    assert np.abs(controls(system, X0, np.zeros((2, 2)))).max() == 0.0


def test_single_constant_field_straight_motion():
    system = LandmarkSystem(1, 2, [CONST_FIELD], steps=100)
    traj = integrate_landmarks(system, [[0.0, 0.0]], [[1.0, 0.0]])
    assert np.allclose(traj.states[0].c, [1.0])
    assert np.allclose(traj.states[-1].x, [[1.0, 0.0]])
    assert np.abs(np.array([s.lam for s in traj.states]) - [[1.0, 0.0]]).max() < 1e-13


def test_rhs_matches_fine_flow_fd():
    drift = DriftModel.from_function(
        lambda t, x: np.array([0.1 * x[1], -0.05 * x[0] + 0.2 * t]))
    system = LandmarkSystem(2, 2, TWO_FIELDS, drift=drift, steps=200)
    st = LandmarkState(X0, LAM0, None)
    xd, ld = landmark_rhs(system, 0.3, st)
    from mppgeo.landmarks import _packed_rhs
    from mppgeo.odeint import rk4_step
    y0 = np.concatenate([X0.ravel(), LAM0.ravel()])
    h = 1e-4
    f = lambda t, y: _packed_rhs(system, t, y)
    num = (rk4_step(f, 0.3, y0, h) - rk4_step(f, 0.3, y0, -h)) / (2 * h)
    assert np.abs(num - np.concatenate([xd.ravel(), ld.ravel()])).max() < 1e-6


def test_fused_matches_generic_path():
    fields = grid_over_points(X0, 3, 3, 0.5)
    system = LandmarkSystem(2, 2, fields, drift=DriftModel.constant([0.1, 0.0]),
                            steps=50)
    from mppgeo.landmarks import _packed_rhs
    y = np.concatenate([X0.ravel(), LAM0.ravel()])
    fast = _packed_rhs(system, 0.2, y)
    system._groups = None  # force the generic einsum route
    slow = _packed_rhs(system, 0.2, y)
    assert np.abs(fast - slow).max() < 1e-14


def test_hamiltonian_conservation():
    system = LandmarkSystem(2, 2, TWO_FIELDS,
                            drift=DriftModel.constant([0.3, 0.1]), steps=500)
    traj = integrate_landmarks(system, X0, LAM0)
    assert traj.diagnostics["hamiltonian_drift"] < 1e-6


def test_permutation_equivariance():
    system = LandmarkSystem(2, 2, TWO_FIELDS,
                            drift=DriftModel.constant([0.3, 0.1]), steps=200)
    traj = integrate_landmarks(system, X0, LAM0)
    perm = [1, 0]
    traj_p = integrate_landmarks(system, X0[perm], LAM0[perm])
    for i in (0, 100, 200):
        assert np.abs(traj.states[i].x[perm] - traj_p.states[i].x).max() < 1e-12
        assert np.abs(traj.states[i].c - traj_p.states[i].c).max() < 1e-12


def test_shoot_trivial_drift_targets():
    system = LandmarkSystem(2, 2, TWO_FIELDS,
                            drift=DriftModel.constant([0.3, 0.1]), steps=200)
    targets = drift_flow(system, X0).states[-1].x
    result, traj = landmark_shoot(system, X0, targets)
    assert result.residual_norm < 1e-10
    assert np.abs(result.unknowns).max() < 1e-9


def test_shoot_single_constant_field_analytic():
    system = LandmarkSystem(1, 2, [CONST_FIELD], steps=100)
    result, traj = landmark_shoot(system, [[0.0, 0.0]], [[0.7, 0.0]])
    assert np.allclose(result.unknowns, [0.7, 0.0], atol=1e-8)
    assert abs(traj.energy[-1] - 0.5 * 0.7 ** 2) < 1e-10


def test_zero_noise_degeneration():
    drift = DriftModel.constant([0.3, 0.1])
    system = LandmarkSystem(2, 2, [], drift=drift, steps=100)
    flow_targets = drift_flow(system, X0).states[-1].x
    result, _ = landmark_shoot(system, X0, flow_targets)
    assert result.residual_norm < 1e-10
    with pytest.raises(NonConvergence) as exc:
        landmark_shoot(system, X0, flow_targets + 0.2)
    assert exc.value.residual_norm > 0.1


def test_coverage_validation():
    far = gaussian_field([50.0, 50.0], 0.2, 0)
    system = LandmarkSystem(2, 2, [far], steps=50)
    with pytest.raises(ValueError, match="coverage"):
        integrate_landmarks(system, X0, LAM0)


def test_singular_check_full_coverage_not_singular():
    system = LandmarkSystem(2, 2, TWO_FIELDS,
                            drift=DriftModel.constant([0.3, 0.1]), steps=200)
    traj = integrate_landmarks(system, X0, LAM0)
    sv, flag = landmark_singular_check(system, traj)
    assert not flag and sv > 0


def test_singular_check_vanishing_field():
    # second field effectively dead at landmark 0's neighborhood: a covector
    # supported there annihilates the whole field system along the path
    near = gaussian_field([0.8, 0.4], 0.25, 0)
    system = LandmarkSystem(2, 2, [near], steps=100)
    traj = drift_flow(system, X0)
    sv, flag = landmark_singular_check(system, traj)
    assert flag


def test_singular_check_two_field_config_value():
    system = LandmarkSystem(2, 2, TWO_FIELDS,
                            drift=DriftModel.constant([0.3, 0.1]), steps=200)
    traj = drift_flow(system, X0)
    sv, flag = landmark_singular_check(system, traj)
    assert sv > 1e-8 * np.sqrt(2 * len(traj.times))  # comfortably above threshold
    assert not flag


def test_batched_endpoints_match_serial():
    fields = grid_over_points(X0, 4, 4, 0.5)
    system = LandmarkSystem(2, 2, fields, drift=DriftModel.constant([0.2, -0.1]),
                            steps=100)
    rng = np.random.default_rng(0)
    lams = 0.2 * rng.standard_normal((4, 2, 2))
    from mppgeo.landmarks import _final_positions, _final_positions_batch
    batch = _final_positions_batch(system, X0, lams)
    for i in range(4):
        serial = _final_positions(system, X0, lams[i])
        assert np.abs(batch[i] - serial).max() < 1e-12
