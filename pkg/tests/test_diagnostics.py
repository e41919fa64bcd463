import numpy as np
import pytest

from doaloc.diagnostics import Flag, detect_unsuitable
from doaloc.linear_system import assemble, numerical_rank
from doaloc.scenario import TrajectoryParams, generate_scenario, parallel_doa_scenario, straight_line_scenario
from oracles import distinct, geodesic, multi_start_exact_poses


def test_generic_is_clean():
    d = detect_unsuitable(generate_scenario(8, seed=3).measurements())
    assert not d.degenerate and d.ls_rank == 12 and d.messages == []


def test_planar_flag_and_rank():
    d = detect_unsuitable(generate_scenario(8, seed=3, params=TrajectoryParams(planar_a=True)).measurements())
    assert d.flags == {Flag.PLANAR_A} and d.ls_rank < 12
    assert d.to_dict()["flags"] == ["PlanarA"]


def test_collinear_flag():
    d = detect_unsuitable(straight_line_scenario(8).measurements())
    assert {Flag.COLLINEAR_A, Flag.PLANAR_A} <= d.flags


def test_parallel_flag():
    d = detect_unsuitable(parallel_doa_scenario(8).measurements())
    assert Flag.PARALLEL_DOA in d.flags and d.max_doa_angle < 1e-6


def test_too_few_epochs():
    with pytest.raises(ValueError):
        detect_unsuitable(generate_scenario(1, seed=0).measurements())


def test_collinear_second_solution():
    # the rotation about the line of flight is not observable
    scn = straight_line_scenario(8)
    truth = scn.true_pose()
    poses = distinct(multi_start_exact_poses(scn.measurements(), np.random.default_rng(0)))
    assert len(poses) >= 2
    others = [(R, t) for R, t in poses if geodesic(R, truth.rotation) > 1e-3]
    assert others
    for R, _ in others:
        axis = R.T @ truth.rotation
        # the relative rotation fixes the x axis, along which A flies
        assert np.allclose(axis @ [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], atol=1e-6)


def test_parallel_second_solution():
    # translation along the common DOA line is not observable
    scn = parallel_doa_scenario(8)
    truth = scn.true_pose()
    poses = distinct(multi_start_exact_poses(scn.measurements(), np.random.default_rng(1)))
    others = [(R, t) for R, t in poses if np.linalg.norm(t - truth.translation) > 1.0]
    assert others
    for R, t in others:
        assert geodesic(R, truth.rotation) < 1e-6


def test_generic_has_single_solution():
    scn = generate_scenario(8, seed=5)
    poses = distinct(multi_start_exact_poses(scn.measurements(), np.random.default_rng(2), starts=10))
    assert len(poses) == 1
    assert geodesic(poses[0][0], scn.true_pose().rotation) < 1e-6


def test_planar_rank_in_every_construction():
    for seed in range(20):
        m = generate_scenario(6, seed=seed, params=TrajectoryParams(planar_a=True)).measurements()
        assert numerical_rank(assemble(m).A) < 12
