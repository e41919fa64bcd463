import numpy as np
import pytest
from hypothesis import given, strategies as st

from doaloc.datasets import R_RECORDED, T_RECORDED, load_table1
from doaloc.errors import DegenerateVectorError
from doaloc.geometry import (
    EulerAngles,
    Pose,
    DoaMeasurement,
    doa_to_unit_vector,
    euler_to_rotation,
    invert_pose,
    is_rotation,
    rotation_to_euler,
    transform_point,
    unit_vector_to_doa,
    wrap_angle,
)
from oracles import doa_vector
from strategies import azimuths, elevations, rotations, vec3

TABLE_POSE = Pose(R_RECORDED, T_RECORDED)  # as recorded, not re-orthogonalised


def test_axis_aligned_doa():
    assert np.allclose(doa_to_unit_vector(0.0, 0.0), [1, 0, 0])
    assert np.allclose(doa_to_unit_vector(np.pi / 2, 0.0), [0, 1, 0], atol=1e-15)


def test_pole_and_diagonal():
    assert unit_vector_to_doa([0, 0, 1]) == (0.0, np.pi / 2)
    az, el = unit_vector_to_doa([1, 1, 0])
    assert az == pytest.approx(np.pi / 4) and el == 0.0


def test_zero_vector_rejected():
    with pytest.raises(DegenerateVectorError):
        unit_vector_to_doa([0.0, 0.0, 1e-12])


@given(azimuths, elevations)
def test_doa_matches_rotation_oracle(az, el):
    assert np.allclose(doa_to_unit_vector(az, el), doa_vector(az, el), atol=1e-14)


@given(azimuths, elevations)
def test_doa_round_trip(az, el):
    a2, e2 = unit_vector_to_doa(doa_to_unit_vector(az, el))
    assert e2 == pytest.approx(el, abs=1e-9)
    if np.cos(el) > 1e-6:
        assert abs(wrap_angle(a2 - az)) < 1e-8


@given(vec3.filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_vector_round_trip_direction(v):
    u = doa_to_unit_vector(*unit_vector_to_doa(v))
    assert np.allclose(u, v / np.linalg.norm(v), atol=1e-9)


@given(st.floats(-50, 50))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -np.pi < w <= np.pi
    assert np.isclose(np.cos(w), np.cos(a)) and np.isclose(np.sin(w), np.sin(a))


def test_doa_measurement_validates_range():
    with pytest.raises(ValueError):
        DoaMeasurement(4.0, 0.0)
    with pytest.raises(ValueError):
        DoaMeasurement(0.0, 2.0)


@given(rotations, vec3, vec3)
def test_pose_inverse_round_trip(R, t, p):
    pose = Pose(R, t)
    assert np.allclose(pose.inverse().apply(pose.apply(p)), p, atol=1e-9)
    assert np.allclose(invert_pose(invert_pose(pose)).rotation, R, atol=1e-12)
    ident = pose.compose(pose.inverse())
    assert np.allclose(ident.rotation, np.eye(3), atol=1e-9) and np.allclose(ident.translation, 0, atol=1e-9)


def test_identity_pose_is_identity():
    p = np.array([[1.0, 2.0, 3.0], [-4.0, 5.0, 6.0]])
    assert np.array_equal(transform_point(p, Pose.identity()), p)
    inv = Pose.identity().inverse()
    assert np.array_equal(inv.rotation, np.eye(3)) and np.array_equal(inv.translation, np.zeros(3))


@given(rotations)
def test_euler_round_trip(R):
    ang = rotation_to_euler(R)
    assert np.allclose(euler_to_rotation(ang), R, atol=1e-9)
    assert is_rotation(EulerAngles.from_rotation(R).to_rotation())


# ---- recorded flight ----------------------------------------------------


def test_table_row1_forward():
    """First recorded epoch: transform A into B's frame and recompute the DOA."""
    p_a = np.array([349.1, -924.1, 374.4])
    p_b = np.array([1039.2, 574.2, 311.3])
    az, el = unit_vector_to_doa(TABLE_POSE.apply(p_a) - p_b)
    assert abs(az - -1.4403) < 5e-3 and abs(el - 0.0447) < 5e-3
    assert np.allclose(doa_to_unit_vector(-1.4403, 0.0447), (TABLE_POSE.apply(p_a) - p_b) / np.linalg.norm(TABLE_POSE.apply(p_a) - p_b), atol=5e-3)


def test_table_row3_inverse():
    p_a = np.array([1007.0, -522.7, 373.3])
    p_b = np.array([1946.2, 458.2, 310.2])
    az, el = unit_vector_to_doa(TABLE_POSE.apply(p_a) - p_b)
    assert abs(az - -1.6430) < 5e-3 and abs(el - 0.0697) < 5e-3


def test_table_inverse_pose_recovers_truth_track():
    f = load_table1()
    back = TABLE_POSE.inverse().apply(f.measurements.p_b)
    assert np.max(np.linalg.norm(back - f.p_b_global, axis=1)) < 1.0
