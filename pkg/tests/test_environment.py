
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vmrock.environment import (
    BLADE_PRESETS,
    FOOD_PRESETS,
    BladeProfile,
    Board,
    FoodItem,
    PresetError,
    WristSensor,
    blade_preset,
    board_contact_forces,
    food_forces,
    food_preset,
    is_separated,
)
from vmrock.scenario import load_scenario
from vmrock.simulation import ENERGY_COLUMNS, simulate

BOARD = Board(0.0, 5000.0, 50.0, 5.0)


def test_no_contact_above_board():
    pos = np.array([[0, 0.1, 0.01], [0, 0.2, 0.5]])
    np.testing.assert_array_equal(board_contact_forces(pos, np.ones_like(pos), BOARD), np.zeros_like(pos))


def test_penalty_normal_force():
    f = board_contact_forces([[0, 0, -0.001]], [[0, 0, 0]], BOARD)
    np.testing.assert_allclose(f, [[0, 0, 5.0]], atol=1e-12)


def test_tangential_viscous_force_while_penetrating():
    f = board_contact_forces([[0, 0, -0.001]], [[0.1, -0.2, 0]], BOARD)
    np.testing.assert_allclose(f[0, :2], [-0.5, 1.0], atol=1e-12)


def test_rising_point_never_pulled_down():
    f = board_contact_forces([[0, 0, -1e-6]], [[0, 0, 3.0]], BOARD)
    assert f[0, 2] >= 0


@settings(max_examples=200, deadline=None)
@given(
    pos=arrays(np.float64, (5, 3), elements=st.floats(-0.01, 0.01)),
    vel=arrays(np.float64, (5, 3), elements=st.floats(-5, 5)),
)
def test_board_unilateral(pos, vel):
    f = board_contact_forces(pos, vel, BOARD)
    assert np.all(f[:, 2] >= 0)
    assert np.all(f[pos[:, 2] >= 0] == 0)


def test_board_validation():
    with pytest.raises(ValueError):
        Board(0.0, -1.0)


@pytest.mark.parametrize("name", sorted(BLADE_PRESETS))
def test_blade_presets_valid(name):
    b = blade_preset(name)
    assert len(b.edge) == 16
    assert np.all(np.diff(b.edge[:, 0]) < 0)
    assert np.all(np.isfinite(b.edge))
    assert np.allclose(b.edge[:, 1], 0.0)
    np.testing.assert_allclose(b.edge[0], b.p1, atol=1e-12)


def test_blade_geometry_ordering():
    lengths = {n: blade_preset(n).segment_lengths.sum() for n in BLADE_PRESETS}
    assert lengths["knife-2"] < lengths["knife-3"] < lengths["knife-1"]


def test_blade_validation():
    with pytest.raises(ValueError):
        BladeProfile("short", np.column_stack([np.linspace(0, -0.1, 5), np.zeros(5)]))
    with pytest.raises(ValueError):
        BladeProfile("backwards", np.column_stack([np.linspace(-0.1, 0, 10), np.zeros(10)]))
    with pytest.raises(PresetError):
        blade_preset("cleaver")


def test_food_presets_ordered_by_hardness():
    order = ["spring-onion", "cucumber", "carrot", "potato"]
    rho = [FOOD_PRESETS[n]["rho"] for n in order]
    thr = [FOOD_PRESETS[n]["fracture_threshold"] for n in order]
    assert rho == sorted(rho) and thr == sorted(thr)
    with pytest.raises(PresetError):
        food_preset("tomato", 0.5, 0.03, 0.02)


def blade_line(z, y0=0.49, y1=0.51, n=8):
    pos = np.column_stack([np.zeros(n), np.linspace(y0, y1, n), np.full(n, z)])
    return pos, np.full(n, abs(y1 - y0) / (n - 1))


def carrot():
    return food_preset("carrot", 0.5, 0.03, 0.02)


def test_knife_outside_footprint():
    food = carrot()
    pos, seg = blade_line(0.01, 0.7, 0.8)
    vel = np.tile([0, 0, -0.1], (8, 1))
    r = food_forces(pos, vel, food, 0, 0.0, seg, driving_force=100.0)
    np.testing.assert_array_equal(r.forces, 0)
    assert r.depth == 0.0 and food.depth(0) == 0.0


def test_below_threshold_freezes_depth():
    food = carrot()
    pos, seg = blade_line(0.015)
    vel = np.tile([0, 0, -0.01], (8, 1))
    r = food_forces(pos, vel, food, 0, 0.0, seg, driving_force=0.5 * food.fracture_threshold)
    assert not r.fracturing and r.depth == 0.0
    np.testing.assert_array_equal(r.forces, 0)
    assert r.blocking_point >= 0


def test_fracture_resists_and_advances_depth():
    food = carrot()
    pos, seg = blade_line(0.015)
    vel = np.tile([0, 0.02, -0.1], (8, 1))
    r = food_forces(pos, vel, food, 0, 0.0, seg, driving_force=2 * food.fracture_threshold)
    assert r.fracturing
    assert r.depth == pytest.approx(0.005)
    power = np.einsum("ij,ij->i", r.forces, vel)
    assert np.all(power <= 0)
    assert np.linalg.norm(r.forces.sum(axis=0)) == pytest.approx(food.rho * seg.sum(), rel=1e-12)


def test_through_cut_separates_and_stops_resisting():
    food = carrot()
    pos, seg = blade_line(-0.0001)
    vel = np.tile([0, 0, -0.1], (8, 1))
    r = food_forces(pos, vel, food, 0, 0.0, seg, driving_force=100.0)
    assert r.separated and is_separated(food, 0)
    r2 = food_forces(pos, vel, food, 0, 0.0, seg, driving_force=100.0)
    np.testing.assert_array_equal(r2.forces, 0)
    assert is_separated(food, 0)


def test_separation_is_per_slice():
    food = carrot()
    assert not is_separated(food, 0)
    food.set_depth(0, food.height)
    assert is_separated(food, 0)
    assert not is_separated(food, 1)


@settings(max_examples=100, deadline=None)
@given(depths=st.lists(st.floats(0, 0.05), min_size=1, max_size=30))
def test_cut_depth_monotone(depths):
    food = carrot()
    prev = 0.0
    for d in depths:
        food.set_depth(0, d)
        assert prev <= food.depth(0) <= food.height
        prev = food.depth(0)


@settings(max_examples=100, deadline=None)
@given(
    z=st.floats(-0.005, 0.025),
    vel=arrays(np.float64, (8, 3), elements=st.floats(-1, 1)),
    drive=st.floats(0, 50),
)
def test_food_forces_never_drive(z, vel, drive):
    pos, seg = blade_line(z)
    r = food_forces(pos, vel, carrot(), 0, 0.0, seg, driving_force=drive)
    assert np.all(np.einsum("ij,ij->i", r.forces, vel) <= 1e-15)


def test_hardness_schedule_and_presence():
    food = FoodItem(0.5, 0.03, 0.02, 60.0, 4.0, hardness_schedule=[(20.0, 4.0)], present_until=30.0)
    assert food.hardness(19.9) == 1.0 and food.hardness(20.0) == 4.0
    assert food.present(29.0) and not food.present(30.0)
    with pytest.raises(ValueError):
        FoodItem(0.5, 0.0, 0.02, 1.0, 1.0)


def test_sensor_rate_noise_and_seed():
    a = WristSensor(rate=100.0, noise=0.1, seed=3)
    b = WristSensor(rate=100.0, noise=0.1, seed=3)
    reads_a = [a.read(i * 1e-3, [1.0, 2.0, 3.0]) for i in range(1000)]
    reads_b = [b.read(i * 1e-3, [1.0, 2.0, 3.0]) for i in range(1000)]
    np.testing.assert_array_equal(reads_a, reads_b)
    distinct = {tuple(r) for r in reads_a}
    assert len(distinct) == 100
    noise = np.array(sorted(distinct)) - [1.0, 2.0, 3.0]
    assert 0.05 < noise.std() < 0.15
    quiet = WristSensor(noise=0.0)
    np.testing.assert_array_equal(quiet.read(0.0, [1, 2, 3]), [1, 2, 3])


def test_board_dissipates_over_periodic_motion():
    res = simulate(load_scenario("a1_uniform").with_overrides(duration=15.0).sim_config())
    col = ENERGY_COLUMNS.index("W_board")
    starts = [t for t, ph in res.switch_times if ph == 0][-3:]
    t = res.energy[:, 0]
    for a, b in zip(starts, starts[1:]):
        absorbed = res.energy[np.searchsorted(t, b), col] - res.energy[np.searchsorted(t, a), col]
        assert absorbed >= -1e-3
    assert res.max_penetration < 0.002
