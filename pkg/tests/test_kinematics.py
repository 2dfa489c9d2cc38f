import math

import pytest

from podsim.graph import EAST, NORTH, WaypointGraph
from podsim.kinematics import KinematicsConfig, profile_path, segment_time, time_at_distance


def test_trapezoid_closed_form():
    kin = KinematicsConfig(max_speed=1.5, acceleration=0.5, deceleration=0.5)
    # accelerate 3 s over 2.25 m, cruise 5.5 m, brake 3 s over 2.25 m
    expected = 2 * (1.5 / 0.5) + (10 - 2 * 2.25) / 1.5
    assert segment_time(10.0, kin) == pytest.approx(expected)
    assert expected == pytest.approx(9.6667, abs=1e-4)


def test_triangular_closed_form():
    kin = KinematicsConfig(max_speed=5.0, acceleration=0.5, deceleration=0.5)
    for length in (1.0, 2.0, 7.5):
        assert segment_time(length, kin) == pytest.approx(2 * math.sqrt(length / 0.5))


def test_zero_length_is_instant():
    kin = KinematicsConfig()
    assert segment_time(0.0, kin) == 0.0
    arrivals, total, heading = profile_path([], [], kin, EAST)
    assert arrivals == [] and total == 0.0 and heading == EAST


def test_time_at_distance_endpoints_and_monotonicity():
    kin = KinematicsConfig(max_speed=1.5, acceleration=0.5, deceleration=0.4)
    length = 12.0
    assert time_at_distance(0.0, length, kin) == 0.0
    assert time_at_distance(length, length, kin) == pytest.approx(segment_time(length, kin))
    last = 0.0
    for i in range(1, 13):
        t = time_at_distance(float(i), length, kin)
        assert t > last
        last = t


def test_profile_path_inserts_turn_time_at_zero_speed():
    graph = WaypointGraph()
    nodes = [graph.add_node(x, 0) for x in range(4)]  # 3 m east
    nodes.append(graph.add_node(3, 1))  # then 1 m north
    for a, b in zip(nodes, nodes[1:]):
        graph.add_edge(a, b)
    kin = KinematicsConfig(max_speed=1.0, acceleration=1.0, deceleration=1.0, turn_time_90=2.5)
    path = nodes
    arrivals, total, final_heading = profile_path(graph.coords, path, kin, EAST)
    east_leg = segment_time(3.0, kin)
    north_leg = segment_time(1.0, kin)
    assert total == pytest.approx(east_leg + 2.5 + north_leg)
    assert final_heading == NORTH
    assert [n for n, _ in arrivals] == path[1:]
    assert arrivals[-2][1] == pytest.approx(east_leg)
    assert arrivals[-1][1] == pytest.approx(east_leg + 2.5 + north_leg)


def test_profile_path_charges_initial_turn():
    graph = WaypointGraph()
    a = graph.add_node(0, 0)
    b = graph.add_node(0, 1)
    graph.add_edge(a, b)
    kin = KinematicsConfig(turn_time_90=2.0)
    _, facing_north, _ = profile_path(graph.coords, [a, b], kin, NORTH)
    _, facing_east, _ = profile_path(graph.coords, [a, b], kin, EAST)
    _, facing_south, _ = profile_path(graph.coords, [a, b], kin, 3)
    assert facing_east == pytest.approx(facing_north + 2.0)
    assert facing_south == pytest.approx(facing_north + 4.0)  # reversal = two turns


def test_kinematics_parameters_must_be_positive():
    with pytest.raises(ValueError):
        KinematicsConfig(max_speed=0.0)
    with pytest.raises(ValueError):
        KinematicsConfig(acceleration=-1.0)
