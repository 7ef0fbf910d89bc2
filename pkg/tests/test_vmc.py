import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad, solve_ivp

from vmrock.chain import load_chain, point_jacobian, parse_chain
from vmrock.scenario import load_scenario
from vmrock.simulation import ENERGY_COLUMNS, simulate
from vmrock.vmc import (
    Damper,
    RailMass,
    RobotPoint,
    SaturatingSpring,
    SwitchingReference,
    VirtualMechanism,
    component_forces,
    map_to_torques,
    spring_force,
    spring_force_batch,
    spring_potential,
    step_virtual_masses,
    switch_energy_jump,
    vmc_energy,
)

vec3 = arrays(np.float64, 3, elements=st.floats(-5, 5))
stiff = st.floats(0.1, 500)
cap = st.floats(0.1, 100)


def robot(pos, vel=None):
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    vel = np.zeros_like(pos) if vel is None else np.atleast_2d(np.asarray(vel, dtype=float))
    return pos, vel


def forces(mech, pos, vel=None):
    return dict(component_forces(mech, robot(pos, vel)))


# ---------------------------------------------------------------------------
# spring law


def test_zero_displacement_gives_zero_force():
    np.testing.assert_array_equal(spring_force(25, 20, np.zeros(3)), np.zeros(3))


def test_saturation_near_cap():
    z = np.array([1.2, -1.6, 0.0])  # |z| = 2
    f = np.linalg.norm(spring_force(25, 20, z))
    assert f == pytest.approx(20 * math.tanh(2.5), rel=1e-14)
    assert f == pytest.approx(19.73, abs=5e-3)
    assert abs(f - 20) / 20 < 0.015


def test_linear_regime():
    f = np.linalg.norm(spring_force(25, 20, [0.0, 0.01, 0.0]))
    assert f == pytest.approx(0.25, rel=1e-4)


def test_sigma_must_be_positive():
    with pytest.raises(ValueError):
        spring_force(25, 0, [1, 0, 0])
    with pytest.raises(ValueError):
        SaturatingSpring("a", "b", -1.0, 1.0)
    with pytest.raises(ValueError):
        Damper("a", "b", -0.5)


@settings(max_examples=200, deadline=None)
@given(k=stiff, sigma=cap, z=vec3)
def test_force_bounded_and_odd(k, sigma, z):
    f = spring_force(k, sigma, z)
    assert np.linalg.norm(f) <= sigma * (1 + 1e-12)
    np.testing.assert_allclose(spring_force(k, sigma, -z), -f, rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(k=stiff, sigma=cap, d=st.floats(1e-4, 3), extra=st.floats(1e-3, 1))
def test_force_magnitude_increasing(k, sigma, d, extra):
    assume(k * d / sigma < 15)  # beyond this tanh is 1 to machine precision
    u = np.array([0.6, 0.0, 0.8])
    assert np.linalg.norm(spring_force(k, sigma, (d + extra) * u)) > np.linalg.norm(spring_force(k, sigma, d * u))


@settings(max_examples=100, deadline=None)
@given(k=stiff, sigma=cap)
def test_slope_at_origin(k, sigma):
    h = 1e-7 * sigma / k
    slope = np.linalg.norm(spring_force(k, sigma, [h, 0, 0])) / h
    assert slope == pytest.approx(k, rel=1e-6)


def test_batch_matches_scalar():
    z = np.random.default_rng(0).normal(size=(50, 3))
    z[0] = 0
    batch = spring_force_batch(25, 20, z)
    for row, f in zip(z, batch):
        np.testing.assert_allclose(f, spring_force(25, 20, row), atol=1e-14)


# ---------------------------------------------------------------------------
# potential and jumps


def test_potential_value_and_quadrature():
    u = spring_potential(25, 20, 0.1)
    assert u == pytest.approx(16 * math.log(math.cosh(0.125)), rel=1e-14)
    assert u == pytest.approx(0.1247, abs=5e-5)
    integral, _ = quad(lambda d: 20 * math.tanh(25 * d / 20), 0, 0.1)
    assert u == pytest.approx(integral, rel=1e-10)


def test_potential_quadratic_limit():
    assert spring_potential(25, 20, 0.01) == pytest.approx(0.5 * 25 * 0.01**2, rel=0.01)


def test_potential_large_argument_is_finite():
    u = spring_potential(1e4, 1.0, 100.0)
    assert math.isfinite(u)
    assert u == pytest.approx(100.0 - math.log(2) / 1e4, rel=1e-9)


def test_switch_jump_quadratic_spring():
    s = SaturatingSpring("x", "r", 10.0, 1e9)
    assert switch_energy_jump(s, [0.8, 0, 0], [1, 0, 0], [-1, 0, 0]) == pytest.approx(16.0, rel=1e-9)


def test_switch_jump_trivial_cases():
    s = SaturatingSpring("x", "r", 25.0, 20.0)
    assert switch_energy_jump(s, [0.3, 0.1, 0.0], [1, 2, 3], [1, 2, 3]) == 0.0
    assert switch_energy_jump(s, [0, 0, 0], [0, 0, 1], [0, 1, 0]) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(k=stiff, sigma=cap, x=vec3, r_old=vec3, r_new=vec3)
def test_switch_injection_bounded(k, sigma, x, r_old, r_new):
    s = SaturatingSpring("x", "r", k, sigma)
    bound = s.potential(np.linalg.norm(r_old - r_new) + np.linalg.norm(x - r_old))
    assert abs(switch_energy_jump(s, x, r_old, r_new)) <= bound * (1 + 1e-12) + 1e-12


# ---------------------------------------------------------------------------
# mechanisms


def anchored(k=25.0, sigma=10.0, c=1.0, anchor=(0.0, 0.0, -0.1)):
    return VirtualMechanism(
        points=[RobotPoint("p1", "tip", (0, 0, 0))],
        references=[SwitchingReference("anchor", [anchor])],
        springs=[SaturatingSpring("p1", "anchor", k, sigma)],
        dampers=[Damper("p1", "anchor", c)],
    )


def test_rest_gives_zero_forces():
    mech = anchored(anchor=(0.0, 0.0, 0.0))
    np.testing.assert_array_equal(forces(mech, [[0, 0, 0]])["p1"], np.zeros(3))
    assert vmc_energy(mech, [[0, 0, 0]]) == 0.0


def test_tip_spring_force():
    f = forces(anchored(), [[0, 0, 0]])["p1"]
    np.testing.assert_allclose(f, [0, 0, -10 * math.tanh(0.25)], atol=1e-15)
    assert f[2] == pytest.approx(-2.449, abs=5e-4)


def test_damper_force_on_robot_point():
    mech = anchored(k=0.0, c=2.0, anchor=(0.0, 0.0, 0.0))
    # the partner moves at +0.2 m/s in y relative to the point
    f = forces(mech, [[0, 0, 0]], [[0, -0.2, 0]])["p1"]
    np.testing.assert_allclose(f, [0, 0.4, 0], atol=1e-15)


def test_reactions_are_equal_and_opposite():
    mech = VirtualMechanism(
        points=[RobotPoint("p", "tip", (0, 0, 0))],
        masses=[RailMass("m", 0.5, (0, 0, 0), [(0, 1, 0)], coords=[0.3], velocities=[0.1])],
        springs=[SaturatingSpring("p", "m", 40.0, 5.0)],
        dampers=[Damper("p", "m", 3.0)],
    )
    f = forces(mech, [[0.1, -0.2, 0.4]], [[0.5, 0.0, -0.3]])
    np.testing.assert_allclose(f["p"] + f["m"], 0.0, atol=1e-14)


def test_unresolved_endpoint_rejected():
    with pytest.raises(ValueError):
        VirtualMechanism(points=[RobotPoint("p1", "tip", (0, 0, 0))], springs=[SaturatingSpring("p1", "ghost", 1, 1)])


def test_rail_mass_validation():
    with pytest.raises(ValueError):
        RailMass("m", 0.0, (0, 0, 0), [(1, 0, 0)])
    with pytest.raises(ValueError):
        RailMass("m", 1.0, (0, 0, 0), [(1, 1, 0)])


def test_torques_zero_for_zero_forces():
    J = np.random.default_rng(0).normal(size=(3, 4))
    np.testing.assert_array_equal(map_to_torques([J, J], [np.zeros(3), np.zeros(3)]), np.zeros(4))


def test_torque_lever_arm():
    arm = parse_chain("link b\nlink a\n  mass = 1\njoint j\n  parent = b\n  child = a\n  axis = 1 0 0\n")
    J = point_jacobian(arm, [0.0], "a", (0, 0.5, 0))
    tau = map_to_torques([J], [np.array([0.0, 0.0, 10.0])])
    np.testing.assert_allclose(tau, [5.0], atol=1e-15)


def test_torque_dimension_mismatch():
    with pytest.raises(ValueError):
        map_to_torques([np.zeros((3, 2))], [np.zeros(3), np.zeros(3)])
    with pytest.raises(ValueError):
        map_to_torques([np.zeros((3, 2)), np.zeros((3, 3))], [np.zeros(3), np.zeros(3)])


@pytest.mark.parametrize("name", ["planar3", "spatial6", "sciurus-like"])
def test_virtual_work_identity(name):
    chain = load_chain(name)
    rng = np.random.default_rng(8)
    q = rng.uniform(-2, 2, chain.n)
    local = [(0.0, 0.0, 0.0), (0.1, 0.0, -0.02), (-0.05, 0.0, 0.03)]
    Js = [point_jacobian(chain, q, "knife", p) for p in local]
    fs = [rng.normal(size=3) * 10 for _ in local]
    tau = map_to_torques(Js, fs)
    for _ in range(100):
        qd = rng.normal(size=chain.n)
        lhs = tau @ qd
        rhs = sum(f @ (J @ qd) for J, f in zip(Js, fs))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_free_rail_mass_coasts():
    mech = VirtualMechanism(masses=[RailMass("m", 0.2, (0, 0, 0), [(0, 1, 0)], velocities=[0.3])])
    for _ in range(100):
        step_virtual_masses(mech, np.zeros((0, 3)), 1e-3)
    assert mech.mass("m").coords[0] == pytest.approx(0.03, rel=1e-12)


def test_damped_rail_mass_stops():
    mech = VirtualMechanism(
        masses=[RailMass("m", 0.2, (0, 0, 0), [(0, 1, 0)], velocities=[0.3])],
        references=[SwitchingReference("wall", [(0, 0, 0)])],
        dampers=[Damper("m", "wall", 2.0)],
    )
    for _ in range(2000):
        step_virtual_masses(mech, np.zeros((0, 3)), 1e-3)
    m = mech.mass("m")
    assert abs(m.velocities[0]) < 0.3 * math.exp(-2.0 / 0.2 * 2.0) * 1.5
    # coasting distance of an exponentially damped mass: m v0 / c
    assert m.coords[0] == pytest.approx(0.2 * 0.3 / 2.0, rel=2e-2)
    assert mech.ledger.w_dissipation == pytest.approx(0.5 * 0.2 * 0.09, rel=2e-2)


def test_tip_mass_matches_scalar_oracle():
    m, k, sigma, c, dt = 0.1, 25.0, 10.0, 1.0, 1e-4
    mech = VirtualMechanism(
        points=[RobotPoint("p1", "tip", (0, 0, 0))],
        masses=[RailMass("m_a", m, (0, 0, 0), [(0, 1, 0)], coords=[0.05])],
        springs=[SaturatingSpring("p1", "m_a", k, sigma)],
        dampers=[Damper("p1", "m_a", c)],
    )

    def rhs(_, y):
        x, v = y
        return [v, (-sigma * math.tanh(k * x / sigma) - c * v) / m]

    T = 1.0
    ref = solve_ivp(rhs, (0, T), [0.05, 0.0], rtol=1e-11, atol=1e-13, dense_output=True)
    p1 = np.zeros((1, 3))
    worst = 0.0
    for i in range(1, int(T / dt) + 1):
        step_virtual_masses(mech, p1, dt)
        worst = max(worst, abs(mech.mass("m_a").coords[0] - ref.sol(i * dt)[0]))
    assert worst < 2e-4
    assert abs(mech.mass("m_a").coords[0]) < 1e-3


def test_symmetric_pull_settles_at_midpoint():
    mech = VirtualMechanism(
        masses=[RailMass("m", 0.1, (0, 0, 0), [(0, 1, 0)], coords=[0.2])],
        references=[SwitchingReference("left", [(0, -0.3, 0)]), SwitchingReference("right", [(0, 0.5, 0)])],
        springs=[SaturatingSpring("m", "left", 20.0, 5.0), SaturatingSpring("m", "right", 20.0, 5.0)],
        dampers=[Damper("m", "left", 1.0)],
    )
    for _ in range(20000):
        step_virtual_masses(mech, np.zeros((0, 3)), 1e-3)
    assert mech.mass("m").coords[0] == pytest.approx(0.1, abs=1e-9)


def test_energy_closure_with_frozen_points():
    mech = VirtualMechanism(
        points=[RobotPoint("p", "tip", (0, 0, 0))],
        masses=[RailMass("m", 0.3, (0, 0, 0), [(0, 1, 0), (0, 0, 1)], coords=[0.1, -0.05])],
        springs=[SaturatingSpring("p", "m", 60.0, 4.0)],
        dampers=[Damper("p", "m", 0.8)],
    )
    p = np.array([[0.0, -0.02, 0.03]])
    e0 = vmc_energy(mech, p)
    for _ in range(5000):
        step_virtual_masses(mech, p, 1e-4)
        total = mech.ledger.e_vmc + mech.ledger.w_dissipation
        assert total == pytest.approx(e0, abs=2e-3 * e0)


def test_switch_jump_closes_energy_exactly():
    mech = VirtualMechanism(
        points=[RobotPoint("p2", "tip", (0, 0, 0))],
        references=[SwitchingReference("r2", [(0, 0.4, -0.1), (0, 0.6, 0.4)])],
        springs=[SaturatingSpring("p2", "r2", 150.0, 25.0)],
    )
    p = np.array([[0.0, 0.5, 0.1]])
    ref = mech.reference("r2")
    expected = switch_energy_jump(mech.springs[0], p[0], ref.candidates[0], ref.candidates[1])
    before = vmc_energy(mech, p)
    jump = mech.ledgered_change(p, lambda: setattr(ref, "active", 1))
    assert jump == expected
    assert vmc_energy(mech, p) - before == expected
    assert mech.ledger.w_elastic == expected


def test_closed_loop_ledger_consistency():
    sc = load_scenario("a1_uniform").with_overrides(duration=10.0)
    res = simulate(sc.sim_config())
    col = {n: i for i, n in enumerate(ENERGY_COLUMNS)}
    d = res.energy[-1] - res.energy[0]
    terms = [d[col["W_port"]], d[col["W_diss_vmc"]], d[col["W_elastic"]], d[col["E_VMC"]]]
    residual = d[col["E_VMC"]] - (-d[col["W_port"]] - d[col["W_diss_vmc"]] + d[col["W_elastic"]])
    assert abs(residual) <= 0.01 * max(map(abs, terms))
