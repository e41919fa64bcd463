import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doaloc.datasets import load_table1
from doaloc.errors import GimbalLockWarning
from doaloc.geometry import euler_to_rotation, rotation_to_euler
from doaloc.mle import (
    AttitudeLog,
    BodyObservations,
    MleOptions,
    NoiseModel,
    fisher_information,
    gradient,
    negative_log_likelihood,
    nll_from_params,
    numerical_gradient,
    predict_body_doa,
    refine,
)
from doaloc.pipeline import solve_sdp_o
from doaloc.scenario import generate_scenario
from strategies import seeds

NOISE = NoiseModel.from_degrees(1.0, 4.0)


def _noiseless(seed=0, K=6):
    scn = generate_scenario(K, seed=seed)
    return scn, scn.body_observations(), scn.true_pose()


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(0.0, 1.0)
    assert NoiseModel.from_degrees(1.0, 2.0).sigma_elevation == pytest.approx(np.deg2rad(2.0))


def test_north_geometry():
    # A due north of B (INS +y), identity attitude
    p_b = np.array([[0.0, 0.0, 100.0]])
    obs = BodyObservations(np.array([[0.0, 500.0, 150.0]]), np.zeros(1), np.zeros(1), AttitudeLog.identity(p_b))
    az, el = predict_body_doa(np.eye(3), np.zeros(3), obs)
    assert az[0] == pytest.approx(np.pi / 2)
    assert el[0] == pytest.approx(np.arctan2(50.0, 500.0))


def test_truth_predicts_measurements():
    _, obs, truth = _noiseless()
    az, el = predict_body_doa(truth.rotation, truth.translation, obs)
    assert np.max(np.abs(az - obs.azimuth)) < 1e-10 and np.max(np.abs(el - obs.elevation)) < 1e-10


def test_recorded_flight_epoch4():
    f = load_table1()
    m = f.measurements
    obs = BodyObservations(m.p_a, m.azimuth, m.elevation, AttitudeLog.identity(m.p_b))
    az, el = predict_body_doa(f.rotation, f.pose.translation, obs)
    assert abs(az[3] - -2.0459) < 5e-3 and abs(el[3] - 0.0723) < 5e-3


def test_attitude_log_round_trip(rng):
    from scipy.spatial.transform import Rotation

    R = Rotation.random(4, random_state=rng).as_matrix()
    p = rng.normal(size=(4, 3))
    log = AttitudeLog.from_rotations(R, p)
    v = rng.normal(size=(4, 3))
    assert np.allclose(log.to_ins(log.to_body(v)), v)


def test_nll_zero_at_truth_and_quadratic():
    _, obs, truth = _noiseless()
    assert negative_log_likelihood(truth.rotation, truth.translation, obs, NOISE) < 1e-12
    az = obs.azimuth.copy()
    az[0] += NOISE.sigma_azimuth
    bumped = BodyObservations(obs.p_src, az, obs.elevation, obs.attitudes)
    assert negative_log_likelihood(truth.rotation, truth.translation, bumped, NOISE) == pytest.approx(0.5, abs=1e-9)


def test_gradient_vanishes_at_noiseless_minimum():
    _, obs, truth = _noiseless()
    x = np.concatenate([rotation_to_euler(truth.rotation), truth.translation])
    assert np.linalg.norm(gradient(x, obs, NOISE)) < 1e-6


@settings(max_examples=30)
@given(seeds)
def test_gradient_matches_finite_differences(s):
    rng = np.random.default_rng(s)
    scn = generate_scenario(6, seed=int(rng.integers(1000)), sigma=(0.02, 0.08))
    obs, truth = scn.body_observations(), scn.true_pose()
    x = np.concatenate([rotation_to_euler(truth.rotation) + rng.normal(0, 0.2, 3), truth.translation + rng.normal(0, 50, 3)])
    x[1] = np.clip(x[1], -1.4, 1.4)
    g, gn = gradient(x, obs, NOISE), numerical_gradient(x, obs, NOISE)
    assert np.linalg.norm(g - gn) <= 1e-5 * np.linalg.norm(gn)


@settings(max_examples=20)
@given(seeds)
def test_directional_derivatives(s):
    rng = np.random.default_rng(s)
    scn = generate_scenario(5, seed=3, sigma=(0.02, 0.08))
    obs, truth = scn.body_observations(), scn.true_pose()
    x = np.concatenate([rotation_to_euler(truth.rotation) + rng.normal(0, 0.1, 3), truth.translation + rng.normal(0, 20, 3)])
    g = gradient(x, obs, NOISE)
    scale = np.array([1, 1, 1, 100, 100, 100.0])
    for _ in range(10):
        v = rng.normal(size=6) * scale
        h = 1e-6
        fd = (nll_from_params(x + h * v, obs, NOISE) - nll_from_params(x - h * v, obs, NOISE)) / (2 * h)
        assert fd == pytest.approx(g @ v, rel=1e-5, abs=1e-6 * np.linalg.norm(g) * np.linalg.norm(v))


def test_fisher_is_psd():
    _, obs, truth = _noiseless()
    x = np.concatenate([rotation_to_euler(truth.rotation), truth.translation])
    assert np.min(np.linalg.eigvalsh(fisher_information(x, obs, NOISE))) > -1e-9


def test_refine_from_truth_returns_immediately():
    _, obs, truth = _noiseless()
    res = refine(truth.rotation, truth.translation, obs, NOISE)
    assert res.iterations <= 1
    assert res.trace[-1].gradient_norm < 1e-8 * max(1.0, res.trace[0].nll) or res.reason == "gradient"


def test_refine_monotone_and_improves(quiet):
    scn = generate_scenario(10, seed=4, sigma=(np.deg2rad(1), np.deg2rad(4)))
    rep = solve_sdp_o(scn.measurements())
    res = refine(rep.rotation, rep.translation, scn.body_observations(), scn.noise_model)
    assert np.all(np.diff(res.nll) <= 0)
    assert res.nll[-1] < res.nll[0]
    assert res.reason in {"gradient", "line_search", "stalled", "max_iter"}


def test_refine_recovers_from_perturbation():
    scn, obs, truth = _noiseless(seed=2, K=8)
    R0 = truth.rotation @ euler_to_rotation([0.05, -0.03, 0.04])
    res = refine(R0, truth.translation + [30, -20, 10], obs, NOISE, MleOptions(grad_tol=1e-10))
    assert scn.evaluate(res.rotation, res.translation).position_error < 1e-6


def test_gimbal_lock_reanchors():
    scn, obs, truth = _noiseless(seed=5, K=8)
    # pitch of exactly 90 degrees: Euler angles are singular here
    R0 = euler_to_rotation([0.3, np.pi / 2, -0.2])
    with pytest.warns(GimbalLockWarning):
        res = refine(R0, truth.translation, obs, NOISE, MleOptions(max_iter=50))
    assert np.allclose(res.anchor, R0)
    assert np.allclose(res.rotation @ res.rotation.T, np.eye(3), atol=1e-9)
    assert np.all(np.diff(res.nll) <= 0)


def test_truth_callback_recorded():
    scn = generate_scenario(8, seed=1, sigma=(0.01, 0.04))
    truth = scn.true_pose()

    def errs(R, t):
        e = scn.evaluate(R, t)
        return e.rotation_error_rad, e.position_error

    res = refine(truth.rotation, truth.translation + 10.0, scn.body_observations(), scn.noise_model, truth=errs)
    assert all(s.rotation_error is not None and s.position_error is not None for s in res.trace)


def _sdp_vs_ml(trials=100, K=8, sigma_deg=1.0):
    import warnings

    from doaloc.pipeline import refine_report

    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for trial in range(trials):
            s = generate_scenario(K, seed=np.random.SeedSequence([1, trial]), sigma=(np.deg2rad(sigma_deg), np.deg2rad(4 * sigma_deg)))
            rep = solve_sdp_o(s.measurements())
            ml = refine_report(rep, s.body_observations(), s.noise_model)
            out.append((s.evaluate(rep.rotation, rep.translation).rotation_error_rad, s.evaluate(ml.rotation, ml.translation).rotation_error_rad))
    return np.array(out)


def test_ml_improves_rotation_in_distribution():
    e = _sdp_vs_ml(trials=40)
    assert np.median(e[:, 1]) < np.median(e[:, 0])
    assert np.mean(e[:, 1] <= e[:, 0]) >= 0.6


@pytest.mark.xfail(strict=True, reason="per-trial dominance does not hold: the ML estimate has its own spread and is "
                   "worse than the SDP+O start in roughly a quarter of trials, mostly at the global optimum and "
                   "sometimes in a local minimum near a half-turn start")
def test_ml_improves_rotation_in_95_of_100():
    e = _sdp_vs_ml(trials=100)
    assert np.sum(e[:, 1] <= e[:, 0]) >= 95


def test_ml_at_low_noise_reaches_same_optimum_as_from_truth(quiet):
    from doaloc.pipeline import refine_report

    for trial in range(5):
        s = generate_scenario(20, seed=np.random.SeedSequence([1, trial]), sigma=(np.deg2rad(0.1), np.deg2rad(0.4)))
        obs, noise, truth = s.body_observations(), s.noise_model, s.true_pose()
        ml = refine_report(solve_sdp_o(s.measurements()), obs, noise)
        ref = refine(truth.rotation, truth.translation, obs, noise)
        assert negative_log_likelihood(ml.rotation, ml.translation, obs, noise) == pytest.approx(ref.nll[-1], rel=1e-8)
