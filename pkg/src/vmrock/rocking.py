"""Rocking-cut controller: mechanism assembly, the cutting/raising automaton,
slice advance and online adaptation of the handle stiffness ``k2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .chain import ChainDescription
from .environment import PLANE_POINTS_LOCAL, BladeProfile
from .vmc import (
    Damper,
    RailMass,
    RobotPoint,
    SaturatingSpring,
    SwitchingReference,
    VirtualMechanism,
)

CUTTING, RAISING = 0, 1
T_MIN = 0.05
ADAPT_PERIOD = 6


@dataclass(frozen=True)
class RockingConfig:
    # tip: p1 to the board-line mass m_a
    k1: float = 25.0
    sigma1: float = 10.0
    c1: float = 1.0
    # handle: p2 to the smoothing mass m_b
    k2: float = 150.0
    sigma2: float = 25.0
    c2: float = 2.0
    # slicing-plane constraint on p3..p6
    k_ori: float = 1200.0
    sigma_ori: float = 50.0
    c_ori: float = 10.0
    r21_y: float = 0.43
    r21_z: float = -0.1
    r22_y: float = 0.58
    r22_z: float = 0.4
    delta1: float = 0.02
    delta2: float = 0.15
    m_a: float = 0.1
    m_b: float = 1.0
    m_ori: float = 0.1
    # m_b to the active reference (linear spring)
    k_b: float = 30.0
    c_b: float = 17.0
    # height of the m_a rail and the initial slicing-plane coordinate
    pa_z: float = 0.0
    plane_x: float = 0.0
    thickness: float = 0.003
    slices: int = 0
    t_min: float = T_MIN
    adapt: bool = False
    alpha: float = 50.0
    z_scale: float = 0.01
    k2_min: float = 20.0
    k2_max: float = 400.0
    # critical handle height for overshoot; defaults to r21_z
    z_crit: float | None = None

    def __post_init__(self):
        for name in ("k1", "c1", "k2", "c2", "k_ori", "c_ori", "k_b", "c_b", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("sigma1", "sigma2", "sigma_ori", "m_a", "m_b", "m_ori", "delta1", "delta2", "z_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.r22_z > self.r21_z:
            raise ValueError("r22_z must lie above r21_z")
        if self.thickness < 0 or self.slices < 0:
            raise ValueError("thickness and slice count must be non-negative")
        if not self.k2_min <= self.k2_max:
            raise ValueError("k2_min must not exceed k2_max")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @property
    def critical_z(self) -> float:
        return self.r21_z if self.z_crit is None else self.z_crit

    def r21(self, plane_x: float | None = None) -> np.ndarray:
        return np.array([self.plane_x if plane_x is None else plane_x, self.r21_y, self.r21_z])

    def r22(self, plane_x: float | None = None) -> np.ndarray:
        return np.array([self.plane_x if plane_x is None else plane_x, self.r22_y, self.r22_z])


@dataclass(frozen=True)
class CycleRecord:
    """What position sensing saw during one cutting phase."""

    separated: bool
    z_min: float  # lowest edge point over the food footprint
    z_target: float  # board height
    p2_min_z: float
    engaged: bool = True


@dataclass(frozen=True)
class RockingState:
    phase: int = CUTTING
    slice_index: int = 0
    cycle_count: int = 0
    switch_count: int = 0
    t_last_switch: float = -math.inf
    k2: float = 150.0
    window: tuple[float, ...] = ()
    completed: bool = False
    k2_updates: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.phase not in (CUTTING, RAISING):
            raise ValueError("phase must be CUTTING or RAISING")
        if not self.k2 > 0:
            raise ValueError("k2 must be positive")


# ---------------------------------------------------------------------------
# mechanism


def knife_points(blade: BladeProfile) -> list[tuple[str, tuple[float, float, float]]]:
    pts = [("p1", tuple(blade.p1)), ("p2", tuple(blade.p2))]
    pts += [(f"p{i + 3}", p) for i, p in enumerate(PLANE_POINTS_LOCAL)]
    return pts


def build_rocking_mechanism(
    cfg: RockingConfig,
    knife: BladeProfile,
    chain: ChainDescription,
    robot_positions=None,
    frame: str = "knife",
    k2: float | None = None,
) -> VirtualMechanism:
    """Assemble the rocking mechanism.

    * ``m_a`` slides along world y on the line ``x = plane_x, z = pa_z`` and
      is tied to p1 by ``(k1, sigma1, c1)``.
    * ``m_b`` slides on the segment r21 to r22, tied to the active reference
      by a linear ``(k_b, c_b)`` and to p2 by ``(k2, sigma2, c2)``.
    * Four masses ``m_ori`` slide on the slicing plane ``x = plane_x`` and
      hold p3..p6 with ``(k_ori, sigma_ori, c_ori)``.

    Rail masses start at the projection of their robot points when
    ``robot_positions`` (one row per point p1..p6) is given; ``m_b`` starts
    at r21.
    """
    if not chain.has_frame(frame):
        raise KeyError(f"chain {chain.name!r} has no {frame!r} frame")
    points = [RobotPoint(name, frame, local) for name, local in knife_points(knife)]
    x0 = cfg.plane_x
    r21, r22 = cfg.r21(x0), cfg.r22(x0)
    rail = r22 - r21
    length = float(np.linalg.norm(rail))
    masses = [
        RailMass("m_a", cfg.m_a, (x0, 0.0, cfg.pa_z), [(0.0, 1.0, 0.0)]),
        RailMass("m_b", cfg.m_b, r21, [rail / length], lower=0.0, upper=length),
    ]
    masses += [
        RailMass(f"m_ori{i}", cfg.m_ori, (x0, 0.0, 0.0), [(0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]) for i in range(3, 7)
    ]
    if robot_positions is not None:
        pos = np.asarray(robot_positions, dtype=float)
        masses[0].coords = masses[0].project(pos[0])
        for i in range(4):
            masses[2 + i].coords = masses[2 + i].project(pos[2 + i])
    refs = [SwitchingReference("r2", [r21, r22], 0)]
    k2 = cfg.k2 if k2 is None else k2
    springs = [
        SaturatingSpring("p1", "m_a", cfg.k1, cfg.sigma1),
        SaturatingSpring("p2", "m_b", k2, cfg.sigma2),
        SaturatingSpring("m_b", "r2", cfg.k_b, math.inf),
    ]
    dampers = [Damper("p1", "m_a", cfg.c1), Damper("p2", "m_b", cfg.c2), Damper("m_b", "r2", cfg.c_b)]
    for i in range(3, 7):
        springs.append(SaturatingSpring(f"p{i}", f"m_ori{i}", cfg.k_ori, cfg.sigma_ori))
        dampers.append(Damper(f"p{i}", f"m_ori{i}", cfg.c_ori))
    return VirtualMechanism(points, masses, refs, springs, dampers)


# ---------------------------------------------------------------------------
# automaton


def update_phase(
    state: RockingState,
    p1,
    p2,
    p_b,
    cfg: RockingConfig,
    t: float | None = None,
    mech: VirtualMechanism | None = None,
    robot_positions=None,
) -> RockingState:
    """Apply the cut/raise triggers.

    Cutting ends when the spine is level, ``|z(p1) - z(p2)| < delta1``.
    Raising ends when the handle is high enough, ``|z(p2) - z(r22)| < delta2``.
    Both need ``t - t_last_switch >= t_min`` (skipped when ``t`` is None).
    With ``mech`` the active reference of ``r2`` is switched and the elastic
    jump is booked in its ledger.
    """
    if t is not None and t - state.t_last_switch < cfg.t_min:
        return state
    if state.phase == CUTTING:
        fire = abs(p1[2] - p2[2]) < cfg.delta1
        new_phase, active = RAISING, 1
    else:
        fire = abs(p2[2] - cfg.r22_z) < cfg.delta2
        new_phase, active = CUTTING, 0
    if not fire:
        return state
    if mech is not None:
        ref = mech.reference("r2")
        mech.ledgered_change(robot_positions, lambda: setattr(ref, "active", active))
    return replace(
        state,
        phase=new_phase,
        cycle_count=state.cycle_count + (new_phase == RAISING),
        switch_count=state.switch_count + 1,
        t_last_switch=state.t_last_switch if t is None else t,
    )


def advance_slice(
    state: RockingState,
    cfg: RockingConfig,
    mech: VirtualMechanism,
    robot_positions=None,
) -> tuple[VirtualMechanism, RockingState]:
    """Shift the slicing plane, p_a's rail and both handle references along +x.

    Anchors are placed at ``plane_x + slice_index * thickness`` so each
    advance moves them by exactly one thickness. The elastic energy change
    is booked in the ledger. When all slices are done the call is a no-op
    that sets ``completed``.
    """
    if state.completed or state.slice_index >= cfg.slices:
        return mech, replace(state, completed=True)
    nxt = state.slice_index + 1
    x_new = cfg.plane_x + nxt * cfg.thickness

    def shift():
        for m in mech.masses:
            m.origin = np.array([x_new, m.origin[1], m.origin[2]])
        ref = mech.reference("r2")
        ref.candidates = [cfg.r21(x_new), cfg.r22(x_new)]

    mech.ledgered_change(robot_positions, shift)
    return mech, replace(state, slice_index=nxt, completed=nxt >= cfg.slices)


def plane_position(cfg: RockingConfig, slice_index: int) -> float:
    return cfg.plane_x + slice_index * cfg.thickness


def separation_error(record: CycleRecord, z_scale: float = 0.01, z_crit: float = -0.1) -> float:
    """Signed, dimensionless separation error of one cutting cycle.

    Positive when the edge stopped above the board without separating,
    negative when the handle dipped below ``z_crit``, zero otherwise.
    """
    if not record.engaged:
        return 0.0
    if not record.separated:
        return max(record.z_min - record.z_target, 0.0) / z_scale
    if record.p2_min_z < z_crit:
        return -(z_crit - record.p2_min_z) / z_scale
    return 0.0


def adapt_stiffness(k2: float, e: float, alpha: float, k2_min: float = 20.0, k2_max: float = 400.0) -> float:
    return float(min(max(k2 + alpha * e, k2_min), k2_max))


def record_cycle(state: RockingState, e: float, cfg: RockingConfig, t: float) -> tuple[RockingState, float | None]:
    """Add one cycle's error to the window; every ``ADAPT_PERIOD`` cycles
    return the new ``k2`` (averaged error), otherwise ``None``."""
    window = state.window + (e,)
    if len(window) < ADAPT_PERIOD:
        return replace(state, window=window), None
    k2 = adapt_stiffness(state.k2, sum(window) / len(window), cfg.alpha, cfg.k2_min, cfg.k2_max)
    return replace(state, window=(), k2=k2, k2_updates=state.k2_updates + ((t, k2),)), k2
