import numpy as np
import pytest

from doaloc.constraints import evaluate_all, stacked_rank
from doaloc.errors import EmptyInputError
from doaloc.linear_system import solve_ls
from doaloc.mle import NoiseModel
from doaloc.scenario import generate_scenario
from doaloc.three_agent import (
    N_TRI,
    TriMeasurements,
    assemble_tri,
    chain_residuals,
    pack_tri,
    refine_tri,
    solve_tri,
    solve_tri_scenario,
    tri_constraints,
    unpack_tri,
)
from oracles import geodesic

CONS = tri_constraints()


def _truth(scn):
    return {name: (scn.true_pose(o, s).rotation, scn.true_pose(o, s).translation) for name, (o, s) in {"AB": ("B", "A"), "AC": ("C", "A"), "CB": ("B", "C")}.items()}


def test_shapes():
    m = TriMeasurements.from_scenario(generate_scenario(1, seed=0, agents=3))
    sys = assemble_tri(m)
    assert sys.A.shape == (6, N_TRI) and sys.b.shape == (6,)


def test_empty():
    z = np.zeros((0, 3))
    e = (np.zeros(0), np.zeros(0))
    with pytest.raises(EmptyInputError):
        assemble_tri(TriMeasurements(z, z, z, e, e, e))


def test_pack_round_trip(rng):
    psi = rng.normal(size=N_TRI)
    assert np.array_equal(pack_tri(unpack_tri(psi)), psi)


def test_truth_residual_and_ls_recovery():
    scn = generate_scenario(6, seed=4, agents=3)
    sys = assemble_tri(TriMeasurements.from_scenario(scn))
    truth = _truth(scn)
    assert np.max(np.abs(sys.A @ pack_tri(truth) - sys.b)) < 1e-9 * max(1.0, np.max(np.abs(sys.b)))
    assert np.linalg.matrix_rank(sys.A) == N_TRI
    est = unpack_tri(solve_ls(sys).psi)
    for name, (R, t) in truth.items():
        assert np.allclose(est[name][0], R, atol=1e-8)
        assert np.allclose(est[name][1], t, rtol=1e-8, atol=1e-6)


def test_constraints_vanish_at_truth():
    scn = generate_scenario(3, seed=8, agents=3)
    assert len(CONS) == 99
    assert np.max(np.abs(evaluate_all(CONS, pack_tri(_truth(scn))))) < 1e-10 * 1e3


def test_inconsistent_composition_violates():
    truth = _truth(generate_scenario(3, seed=8, agents=3))
    truth["CB"] = (np.eye(3), truth["CB"][1])
    vals = evaluate_all(CONS, pack_tri(truth))
    comp = [v for c, v in zip(CONS, vals) if c.family.name == "COMPOSITION"]
    assert np.max(np.abs(comp)) >= 0.1


def test_stacked_rank():
    # each of the three rotation blocks carries the trace dependency of
    # the two-agent set, so 99 equations span a 96-dimensional space
    assert stacked_rank(CONS) == 96


@pytest.mark.parametrize("seed", range(5))
def test_k3_exact(seed, quiet):
    scn = generate_scenario(3, seed=seed, agents=3)
    rep = solve_tri_scenario(scn)
    assert rep.measurements_used == 18
    assert rep.metrics["position_error_B"] < 1e-4 and rep.metrics["position_error_C"] < 1e-4
    assert rep.metrics["rotation_error_rad_B"] < 1e-4 and rep.metrics["rotation_error_rad_C"] < 1e-4
    assert rep.rotation_chain_residual < 1e-8
    assert rep.projected_chain_residuals[0] < 1e-8


def test_k2_flagged():
    scn = generate_scenario(2, seed=1, agents=3)
    with pytest.warns(Warning):
        rep = solve_tri(TriMeasurements.from_scenario(scn))
    assert rep.ambiguous


def test_refine_keeps_chain_and_helps(quiet):
    sig = (np.deg2rad(1.0), np.deg2rad(4.0))
    base = []
    ref = []
    for seed in range(6):
        scn = generate_scenario(8, seed=seed, agents=3, sigma=sig)
        rep = solve_tri_scenario(scn)
        out = refine_tri(rep, scn, NoiseModel(*sig))
        rot, trans = chain_residuals(out.poses)
        assert rot < 1e-12 and trans < 1e-9
        base.append(rep.metrics["position_error_B"])
        ref.append(scn.evaluate(*out.poses["AB"], "B", "A").position_error)
    assert np.median(ref) <= np.median(base)


def test_report_dict():
    rep = solve_tri_scenario(generate_scenario(4, seed=2, agents=3))
    d = rep.to_dict()
    assert {"R_AB", "t_AC", "R_CB", "residuals", "metrics"} <= set(d)
    assert geodesic(np.array(d["R_AB"]), rep.poses["AB"][0]) == 0.0
