import numpy as np

from mppgeo import simulate
from mppgeo.engine import MPPProblem
from mppgeo.geometry import CovarianceSchedule, DriftModel
from mppgeo.presets import flat_model, sphere_model
from mppgeo.simulate import SimConfig, sample_development


def flat_problem(sigma, drift=None, steps=100):
    return MPPProblem(flat_model(2), drift or DriftModel.zero(2),
                      CovarianceSchedule.constant(sigma), steps=steps)


def test_flat_isotropic_law():
    prob = flat_problem(np.eye(2))
    res = sample_development(prob, SimConfig(paths=10_000, steps=100, seed=42))
    mean = res.endpoints.mean(axis=0)
    assert np.abs(mean).max() < 3.0 / np.sqrt(10_000) * 1.0 + 1e-9
    cov = np.cov(res.endpoints.T)
    assert np.abs(np.diag(cov) - 1.0).max() < 0.05


def test_flat_anisotropic_law():
    prob = flat_problem(np.diag([1.0, 4.0]))
    res = sample_development(prob, SimConfig(paths=10_000, steps=100, seed=42))
    cov = np.cov(res.endpoints.T)
    rel = np.abs(np.diag(cov) - [1.0, 4.0]) / np.array([1.0, 4.0])
    assert rel.max() < 0.05
    assert abs(cov[0, 1]) < 0.1


def test_seed_determinism_and_prefix_consistency():
    prob = flat_problem(np.diag([1.0, 4.0]))
    big = sample_development(prob, SimConfig(paths=500, steps=50, seed=7))
    again = sample_development(prob, SimConfig(paths=500, steps=50, seed=7))
    assert np.array_equal(big.endpoints, again.endpoints)
    small = sample_development(prob, SimConfig(paths=100, steps=50, seed=7))
    assert np.array_equal(big.endpoints[:100], small.endpoints)
    other = sample_development(prob, SimConfig(paths=100, steps=50, seed=8))
    assert not np.array_equal(small.endpoints, other.endpoints)


def test_zero_noise_limit_pure_drift():
    drift = DriftModel.constant([0.3, -0.2])
    prob = flat_problem(1e-30 * np.eye(2), drift=drift)
    res = sample_development(prob, SimConfig(paths=30, steps=50, seed=1))
    assert np.abs(res.endpoints - np.array([0.3, -0.2])).max() < 1e-10


def test_discarded_paths_counted():
    model = flat_model(2)
    model.chart_domain = lambda x: float(x @ x) < 1.5 ** 2
    prob = MPPProblem(model, DriftModel.zero(2),
                      CovarianceSchedule.constant(np.eye(2)), steps=50)
    res = sample_development(prob, SimConfig(paths=200, steps=50, seed=3))
    assert res.discarded > 0
    assert len(res.endpoints) + res.discarded == 200
    assert all(float(e @ e) < 1.5 ** 2 for e in res.endpoints)


def test_sphere_sampler_runs_and_paths_recorded():
    prob = MPPProblem(sphere_model(), DriftModel.zero(2),
                      CovarianceSchedule.isotropic(2, 0.2), steps=60)
    res = sample_development(prob, SimConfig(paths=40, steps=60, seed=5,
                                             record_endpoints_only=False))
    assert res.paths is not None
    assert res.paths.shape == (40 - res.discarded, 61, 2)
    assert np.array_equal(res.paths[:, -1, :], res.endpoints)


def test_weak_bias_decays_under_refinement():
    """Common-random-number comparison: coarse increments are pair-sums of
    fine ones, so the Monte Carlo part cancels in mean differences and the
    remaining gap is the weak (time-stepping) bias, which shrinks with h."""
    drift = DriftModel.from_function(
        lambda t, x: np.array([np.tanh(2.0 * x[1]), -np.tanh(2.0 * x[0])]))
    model = flat_model(2)
    prob = MPPProblem(model, drift, CovarianceSchedule.constant(np.eye(2)),
                      steps=64)
    npaths = 400
    fine = simulate._increments(SimConfig(paths=npaths, steps=64, seed=11), 2)
    fine = fine * np.sqrt(1.0 / 64)

    def mean_endpoint(dw):
        res = simulate._sample_general(
            prob, SimConfig(paths=npaths, steps=dw.shape[1], seed=11), dw)
        return res.endpoints.mean(axis=0)

    m64 = mean_endpoint(fine)
    m16 = mean_endpoint(fine.reshape(npaths, 16, 4, 2).sum(axis=2))
    m4 = mean_endpoint(fine.reshape(npaths, 4, 16, 2).sum(axis=2))
    gap_coarse = np.linalg.norm(m4 - m64)
    gap_mid = np.linalg.norm(m16 - m64)
    assert gap_mid < 0.5 * gap_coarse
