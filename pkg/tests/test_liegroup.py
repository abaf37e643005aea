import numpy as np
import pytest

from mppgeo import engine, liegroup, presets
from mppgeo.errors import NotHorizontal, SplittingInvalid
from mppgeo.geometry import CovarianceSchedule, DriftModel
from mppgeo.liegroup import (LieGroupModel, LieMPPState, SubgroupSplitting,
                             alpha_rhs, heisenberg_model, integrate_group,
                             lie_mpp_rhs, lie_singular_check, so3_model,
                             subgroup_invariant_rhs, z_of)
from mppgeo.linalg import rodrigues, so3_left_jacobian

FIG1_SIGMA = CovarianceSchedule.constant(np.diag([0.3, 2.0, 1.0]))
FIG1_DRIFT = lambda t: np.array([1.0, 0.0, 0.0])


def test_model_validation():
    m = so3_model()
    c = m.structure
    assert np.abs(c + c.transpose(0, 2, 1)).max() == 0.0
    # a wrong rep must be rejected
    bad_rep = m.rep.copy()
    bad_rep[0] *= 2.0
    with pytest.raises(ValueError, match="rep bracket"):
        LieGroupModel(dim=3, sr_rank=3, structure=c, rep=bad_rep)
    # a non-Lie bracket must fail the Jacobi test
    bad_c = np.zeros((3, 3, 3))
    bad_c[2, 0, 1] = 1.0
    bad_c[2, 1, 0] = -1.0
    bad_c[0, 1, 2] = 1.0
    bad_c[0, 2, 1] = -1.0
    bad_c[0, 0, 1] = 0.3
    bad_c[0, 1, 0] = -0.3
    with pytest.raises(ValueError):
        LieGroupModel(dim=3, sr_rank=3, structure=bad_c, rep=m.rep)


def test_rhs_bi_invariant_momentum_constant():
    m = so3_model()
    alpha = np.array([1.0, 0.0, 0.0])
    assert np.abs(alpha_rhs(m, 0.0, alpha)).max() < 1e-15


def test_rhs_zero_data():
    m = so3_model(drift=lambda t: np.zeros(3))
    st = LieMPPState(np.eye(3), np.zeros(3))
    gdot, adot = lie_mpp_rhs(m, 0.0, st)
    assert np.abs(gdot).max() == 0.0 and np.abs(adot).max() == 0.0


def test_rhs_matches_fine_flow_fd():
    m = so3_model(sigma=FIG1_SIGMA, drift=FIG1_DRIFT)
    alpha = np.array([0.0, 1.0, 0.0])
    adot = alpha_rhs(m, 0.0, alpha)
    from mppgeo.odeint import rk4_step
    h = 1e-4
    f = lambda t, a: alpha_rhs(m, t, a)
    num = (rk4_step(f, 0.0, alpha, h) - rk4_step(f, 0.0, alpha, -h)) / (2 * h)
    assert np.abs(adot - num).max() < 1e-6


def test_one_parameter_subgroup_exact():
    m = so3_model()
    xi = np.array([0.3, -0.5, 0.8])
    traj = integrate_group(m, xi, 1.0, 1000)
    assert np.abs(traj.states[-1].gamma - rodrigues(xi)).max() < 1e-9


def test_quadratic_conservation():
    m = so3_model(sigma=FIG1_SIGMA)
    traj = integrate_group(m, np.array([1.0, 0.5, -0.4]), 1.0, 1000)
    q = traj.diagnostics["conserved_quadratic"]
    assert np.abs(q - q[0]).max() / abs(q[0]) < 1e-8


def test_bi_invariant_norm_conservation():
    m = so3_model()
    traj = integrate_group(m, np.array([0.6, -0.8, 0.3]), 1.0, 1000)
    norms = traj.diagnostics["alpha_norm"]
    assert np.abs(norms - norms[0]).max() < 1e-10


def test_fig1_data_stays_on_group():
    m = so3_model(sigma=FIG1_SIGMA, drift=FIG1_DRIFT)
    traj = integrate_group(m, np.array([0.5, -1.0, 0.5]), 1.0, 1000)
    assert traj.diagnostics["group_defect_max"] < 1e-8
    # endpoint cross-checked against a 10x finer integration
    fine = integrate_group(m, np.array([0.5, -1.0, 0.5]), 1.0, 10000)
    assert np.abs(traj.states[-1].gamma - fine.states[-1].gamma).max() < 1e-6


def test_left_invariance_flips_ad_sign():
    right = so3_model(sigma=FIG1_SIGMA, invariance="right")
    left = so3_model(sigma=FIG1_SIGMA, invariance="left")
    alpha = np.array([0.4, -0.7, 0.2])
    assert np.allclose(alpha_rhs(right, 0.0, alpha),
                       -alpha_rhs(left, 0.0, alpha))


def test_equivalence_with_general_engine():
    sig = FIG1_SIGMA
    drift_vec = np.array([1.0, 0.0, 0.0])
    chart = presets.so3_chart_model()
    u = DriftModel.from_function(
        lambda t, x: np.linalg.inv(so3_left_jacobian(x)) @ drift_vec)
    prob = engine.MPPProblem(chart, u, sig, horizon=1.0, steps=2000)
    alpha0 = np.array([0.4, -0.6, 0.3])
    etraj = engine.integrate_forward(prob, alpha0)
    gtraj = integrate_group(so3_model(sigma=sig, drift=lambda t: drift_vec),
                            alpha0, 1.0, 2000)
    sup = max(np.abs(rodrigues(etraj.states[i].x) - gtraj.states[i].gamma).max()
              for i in range(0, 2001, 100))
    assert sup < 1e-5


# ---------------------------------------------------------------------------
# singular curves


def test_full_rank_never_singular():
    m = so3_model()
    sv, flag = lie_singular_check(m, lambda t: np.array([0.3, 0.1, -0.2]))
    assert sv == float("inf") and not flag


def test_heisenberg_zero_curve_singular():
    m = heisenberg_model()
    sv, flag = lie_singular_check(m, lambda t: np.zeros(3))
    assert flag


def test_heisenberg_generic_not_singular():
    m = heisenberg_model()
    sv, flag = lie_singular_check(m, lambda t: np.array([1.0, 0.0, 0.0]),
                                  horizon=1.0, steps=500)
    assert not flag
    # direct solve of the one-dimensional annihilator ODE: alpha = (0, -t, 1),
    # so the stacked horizontal restriction is (0, -t) over the grid
    times = np.linspace(0.0, 1.0, 501)
    column = np.stack([np.zeros_like(times), -times], axis=1).reshape(-1)
    expected = np.linalg.norm(column)  # 1-column map: smallest sv = its norm
    assert abs(sv - expected) / expected < 1e-10


def test_not_horizontal_z():
    m = heisenberg_model()
    with pytest.raises(NotHorizontal):
        lie_singular_check(m, lambda t: np.array([0.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# subgroup-invariant metrics


def test_splitting_validation():
    m = so3_model(invariance="left")
    SubgroupSplitting(m, (0, 1), (2,))  # [e,e] in k and [k,e] in e hold
    h = heisenberg_model(invariance="left")
    SubgroupSplitting(h, (0, 1), (2,))
    with pytest.raises(SplittingInvalid):
        # [A_2, A_1] = -A_3 lands in k, violating [k, e] in e
        SubgroupSplitting(m, (0,), (1, 2))
    with pytest.raises(SplittingInvalid):
        SubgroupSplitting(m, (0,), (1,))  # not a partition


def test_subgroup_rhs_trivial_cases():
    spl = SubgroupSplitting(so3_model(invariance="left"), (0, 1), (2,))
    sig = CovarianceSchedule.isotropic(2)
    # w_k = 0, a = 0, Sigma = I: no e-acceleration
    gd, wd = subgroup_invariant_rhs(spl, sig, None, 0.0, np.eye(3),
                                    np.array([0.3, 0.5, 0.0]))
    assert np.abs(wd[[0, 1]]).max() < 1e-14
    # w = 0, a_k != 0: pure drift, no momentum change
    a_fn = lambda t: np.array([0.0, 0.0, 0.7])
    gd, wd = subgroup_invariant_rhs(spl, sig, a_fn, 0.0, np.eye(3), np.zeros(3))
    assert np.abs(wd).max() < 1e-14
    assert np.abs(gd - so3_model().rep_of([0.0, 0.0, 0.7])).max() < 1e-14


def test_subgroup_rhs_matches_fine_flow():
    spl = SubgroupSplitting(so3_model(invariance="left"), (0, 1), (2,))
    sig = CovarianceSchedule.constant(np.diag([0.7, 1.8]))
    a_fn = lambda t: np.array([0.2, -0.1, 0.5])
    w0 = np.array([0.4, -0.9, 0.6])

    def wdot_fn(t, w):
        return subgroup_invariant_rhs(spl, sig, a_fn, t, np.eye(3), w)[1]

    from mppgeo.odeint import rk4_step
    h = 1e-4
    num = (rk4_step(wdot_fn, 0.0, w0, h) - rk4_step(wdot_fn, 0.0, w0, -h)) / (2 * h)
    assert np.abs(wdot_fn(0.0, w0) - num).max() < 1e-6


def test_subgroup_rhs_equals_full_coadjoint():
    # componentwise system assembles to w_dot = ad(z)^dagger w
    spl = SubgroupSplitting(so3_model(invariance="left"), (0, 1), (2,))
    m = spl.model
    sig = CovarianceSchedule.constant(np.diag([0.7, 1.8]))
    a_fn = lambda t: np.array([0.2, -0.1, 0.5])
    w = np.array([0.4, -0.9, 0.6])
    _, wd = subgroup_invariant_rhs(spl, sig, a_fn, 0.0, np.eye(3), w)
    z = np.concatenate([sig.value(0.0) @ w[:2], [0.0]]) + a_fn(0.0)
    assert np.allclose(wd, m.ad_dagger(z) @ w, atol=1e-13)
