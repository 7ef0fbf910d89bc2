"""Closed-loop rocking-cut simulation.

Physics runs at ``dt / substeps`` with the plant, the virtual masses, the
board and the food advanced in lockstep by one compiled kernel. The hybrid
automaton, slice advance, adaptation, the wrist sensor and trace recording
run once per control tick.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from . import _rbd
from .chain import ChainDescription, link_poses
from .environment import Board, BladeProfile, FoodItem, WristSensor, board_kernel, food_engagement, food_resistance
from .rocking import (
    RAISING,
    CycleRecord,
    RockingConfig,
    RockingState,
    advance_slice,
    build_rocking_mechanism,
    plane_position,
    record_cycle,
    separation_error,
    update_phase,
)
from .vmc import _mass_kinematics, element_forces, integrate_masses, mass_kinetic, spring_energy

GRAVITY = np.array([0.0, 0.0, -9.81])

# accumulator slots
A_DISS, A_JOINT, A_BOARD, A_FOOD, A_PORT, A_PEN, A_ZMIN, A_P2MIN, A_ENGAGED = range(9)
N_ACC = 9
THICKNESS_LEVELS = (0.2, 0.4, 0.6, 0.8)

TRACE_COLUMNS_TAIL = [
    "p1_y", "p1_z", "p1_x", "p2_y", "p2_z", "p2_x", "pb_y", "pb_z", "phase",
    "Fx", "Fy", "Fz", "E_R", "E_VMC", "Wdiss_cum", "Welast_cum", "k2", "slice_index",
]  # fmt: skip
ENERGY_COLUMNS = ["t", "E_R", "E_VMC", "W_diss_vmc", "W_elastic", "W_joint", "W_board", "W_food", "W_port"]


def trace_columns(n: int) -> list[str]:
    return ["t"] + [f"q{i}" for i in range(n)] + [f"qd{i}" for i in range(n)] + TRACE_COLUMNS_TAIL


class Divergence(RuntimeError):
    pass


@njit(cache=True)
def _accumulate_torque(jac, f, tau):
    for i in range(jac.shape[0]):
        for r in range(3):
            fr = f[i, r]
            if fr != 0.0:
                for j in range(tau.shape[0]):
                    tau[j] += jac[i, r, j] * fr


@njit(cache=True)
def _advance(
    n_sub, h, q, qd, gravity,
    topo, jp, jc, axis, oR, op, base_R, base_p, damping, mass, com, inertia, supports,
    rp_link, rp_local, e_link, e_local, seg_len,
    ea_kind, ea_idx, eb_kind, eb_idx, k, sigma, c,
    m_origin, m_dirs, m_dim, s, sd, m_mass, lo, hi, refs,
    board, food, food_state, acc, f_env,
):  # fmt: skip
    """Advance ``n_sub`` physics substeps in place. Returns False on a non-finite state.

    ``board`` = (on, height, k_n, c_n, mu_v); ``food`` = (on, center_y,
    half_width, top, height, rho, threshold); ``food_state`` = (fracturing,
    depth). ``f_env`` receives the total environment force on the blade at
    the last substep.
    """
    L = mass.shape[0]
    n = q.shape[0]
    for _ in range(n_sub):
        R, p, aw, ow = _rbd.link_poses(q, topo, jp, jc, axis, oR, op, base_R, base_p, L)
        rpos, rjac, rvel = _rbd.points_kinematics(rp_link, rp_local, R, p, supports, aw, ow, qd)
        epos, ejac, evel = _rbd.points_kinematics(e_link, e_local, R, p, supports, aw, ow, qd)
        mpos, mvel = _mass_kinematics(m_origin, m_dirs, m_dim, s, sd)
        fp, fm, diss = element_forces(rpos, rvel, mpos, mvel, refs, ea_kind, ea_idx, eb_kind, eb_idx, k, sigma, c)

        tau_v = np.zeros(n)
        _accumulate_torque(rjac, fp, tau_v)
        tau_b = np.zeros(n)
        tau_f = np.zeros(n)
        fb = np.zeros_like(epos)
        ff = np.zeros_like(epos)
        if board[0] > 0.0:
            fb = board_kernel(epos, evel, board[1], board[2], board[3], board[4])
            _accumulate_torque(ejac, fb, tau_b)
        food_on = food[0] > 0.0 and food_state[1] < food[4]
        deepest = -1
        if food_on:
            inside, deepest = food_engagement(epos, food[1], food[2], food[3] - food_state[1])
            if food_state[0] > 0.0 and deepest >= 0:
                ff = food_resistance(evel, inside, seg_len, food[5])
                _accumulate_torque(ejac, ff, tau_f)

        cor, grav = _rbd.bias_terms(qd, gravity, topo, jp, jc, R, p, aw, ow, supports, mass, com, inertia)
        M = _rbd.mass_matrix(R, p, aw, ow, supports, mass, com, inertia)
        rhs = tau_v + tau_b + tau_f - cor - grav - damping * qd
        qdd = _rbd.solve_spd(M, rhs)
        qd_new = qd + h * qdd

        lam = 0.0
        Jz = np.zeros(n)
        if food_on and deepest >= 0 and food_state[0] == 0.0:
            Jz = ejac[deepest][2].copy()
            if _rbd.dot(Jz, qd_new) < 0.0:
                MJ = _rbd.solve_spd(M, Jz)
                w = _rbd.dot(Jz, MJ)
                if w > 0.0:
                    drive = -_rbd.dot(Jz, qdd) / w
                    if drive <= food[6]:
                        lam = -_rbd.dot(Jz, qd_new) / (h * w)
                        qd_new = qd_new + (h * lam) * MJ
                    else:
                        food_state[0] = 1.0
        if food_on and food_state[0] > 0.0:
            if deepest >= 0:
                food_state[1] = min(max(food_state[1], food[3] - epos[deepest, 2]), food[4])
                if evel[deepest, 2] >= 0.0:
                    food_state[0] = 0.0
            else:
                food_state[0] = 0.0

        qm = 0.5 * (qd + qd_new)
        acc[A_JOINT] += _rbd.dot(damping * qd, qm) * h
        acc[A_PORT] += _rbd.dot(tau_v, qm) * h
        acc[A_BOARD] -= _rbd.dot(tau_b, qm) * h
        acc[A_FOOD] -= _rbd.dot(tau_f + lam * Jz, qm) * h
        q += h * qd_new
        qd[:] = qd_new
        lost = integrate_masses(fm, m_dirs, m_dim, s, sd, m_mass, lo, hi, h)
        acc[A_DISS] += diss * h + lost

        for i in range(epos.shape[0]):
            pen = board[1] - epos[i, 2]
            if board[0] > 0.0 and pen > acc[A_PEN]:
                acc[A_PEN] = pen
            if food[0] > 0.0 and abs(epos[i, 1] - food[1]) <= food[2]:
                acc[A_ENGAGED] = 1.0
                if epos[i, 2] < acc[A_ZMIN]:
                    acc[A_ZMIN] = epos[i, 2]
        if rpos[1, 2] < acc[A_P2MIN]:
            acc[A_P2MIN] = rpos[1, 2]
        f_env[:] = 0.0
        for i in range(epos.shape[0]):
            for r in range(3):
                f_env[r] += fb[i, r] + ff[i, r]
        if lam != 0.0:
            f_env[2] += lam
        for j in range(n):
            if not (np.isfinite(q[j]) and np.isfinite(qd[j])):
                return False
    return True


@njit(cache=True)
def _tick_kinematics(q, qd, topo, jp, jc, axis, oR, op, base_R, base_p, n_links, supports, rp_link, rp_local, e_link, e_local):
    R, p, aw, ow = _rbd.link_poses(q, topo, jp, jc, axis, oR, op, base_R, base_p, n_links)
    rpos, _, rvel = _rbd.points_kinematics(rp_link, rp_local, R, p, supports, aw, ow, qd)
    epos, _, _ = _rbd.points_kinematics(e_link, e_local, R, p, supports, aw, ow, qd)
    return rpos, rvel, epos


# ---------------------------------------------------------------------------
# configuration


@dataclass
class StartPose:
    """Initial knife placement: handle position (``p2_z`` is measured from
    the board top) and spine angle (positive tilts the tip down)."""

    p2_y: float = 0.45
    p2_z: float = 0.08
    angle: float = 0.25
    yaw: float = 0.0  # rotation of the spine about world z, for spatial plants
    q0: tuple[float, ...] | None = None
    ik_guess: tuple[float, ...] | None = None


@dataclass
class SimConfig:
    chain: ChainDescription
    controller: RockingConfig
    blade: BladeProfile
    board: Board = field(default_factory=Board)
    food: FoodItem | None = None
    duration: float = 30.0
    dt: float = 1e-3
    substeps: int = 10
    seed: int = 0
    sensor_noise: float = 0.1
    sensor_rate: float = 100.0
    gravity_compensation: bool = True
    contact: bool = True
    switching: bool = True
    start: StartPose = field(default_factory=StartPose)
    record_every: int = 1
    frame: str = "knife"

    def __post_init__(self):
        if not self.dt > 0 or self.duration < 0 or self.substeps < 1:
            raise ValueError("need dt > 0, duration >= 0 and substeps >= 1")


@dataclass
class SimResult:
    columns: list[str]
    trace: np.ndarray
    energy: np.ndarray
    switch_times: list[tuple[float, int]]
    cycles: list[CycleRecord]
    cycle_errors: list[float]
    k2_updates: list[tuple[float, float]]
    separation_planes: list[float]
    cut_paths: dict
    max_penetration: float
    status: str
    wall_time: float
    state: RockingState
    n_cut_raise: int = 0

    def column(self, name: str) -> np.ndarray:
        return self.trace[:, self.columns.index(name)]


# ---------------------------------------------------------------------------


def solve_ik(chain: ChainDescription, frame: str, targets, guess=None, iters: int = 200) -> np.ndarray:
    """Damped least-squares IK placing frame-local points at world targets."""
    q = np.zeros(chain.n) if guess is None else np.array(guess, dtype=float)
    a = chain.arrays
    locals_ = [chain.local_point(frame, lp) for lp, _ in targets]
    goal = np.concatenate([np.asarray(t, dtype=float) for _, t in targets])
    for _ in range(iters):
        R, p, aw, ow = link_poses(chain, q)
        err, rows = [], []
        for (link, local) in locals_:
            pt = p[link] + R[link] @ local
            err.append(pt)
            rows.append(_rbd.point_jacobian(link, pt, a.supports, aw, ow))
        r = goal - np.concatenate(err)
        if np.max(np.abs(r)) < 1e-12:
            break
        J = np.vstack(rows)
        q = q + J.T @ np.linalg.solve(J @ J.T + 1e-8 * np.eye(J.shape[0]), r)
    return q


def start_configuration(cfg: SimConfig) -> np.ndarray:
    st = cfg.start
    if st.q0 is not None:
        q0 = np.array(st.q0, dtype=float)
        if q0.size != cfg.chain.n:
            raise ValueError(f"q0 has {q0.size} entries, chain has {cfg.chain.n} joints")
        return q0
    L = float(np.linalg.norm(np.subtract(cfg.blade.p1, cfg.blade.p2)))
    x0 = cfg.controller.plane_x
    p2 = np.array([x0, st.p2_y, cfg.board.height + st.p2_z])
    d = np.array([math.sin(st.yaw) * math.cos(st.angle), math.cos(st.yaw) * math.cos(st.angle), -math.sin(st.angle)])
    # a third point below the spine pins the blade plane on spatial plants
    below = np.array([0.05, 0.0, -0.04])
    targets = [(cfg.blade.p2, p2), (cfg.blade.p1, p2 + L * d), (below, p2 + _knife_rotation(d) @ below)]
    return solve_ik(cfg.chain, cfg.frame, targets, st.ik_guess)


def _knife_rotation(x_axis):
    x = np.asarray(x_axis, dtype=float)
    x = x / np.linalg.norm(x)
    y_world_normal = np.array([-1.0, 0.0, 0.0])
    z = np.cross(x, y_world_normal)
    if np.linalg.norm(z) < 1e-9:
        z = np.array([0.0, 0.0, 1.0])
    z /= np.linalg.norm(z)
    if z[2] < 0:
        z = -z
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


class Simulation:
    """Owns every piece of mutable state of one closed-loop run."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        ch = cfg.chain
        if not ch.has_frame(cfg.frame):
            raise KeyError(f"chain {ch.name!r} has no {cfg.frame!r} frame")
        self.a = ch.arrays
        self.h = cfg.dt / cfg.substeps
        self.gravity = np.zeros(3) if cfg.gravity_compensation else GRAVITY.copy()
        self.q = start_configuration(cfg)
        self.qd = np.zeros(ch.n)
        link, _ = ch.local_point(cfg.frame)
        from .rocking import knife_points

        pts = knife_points(cfg.blade)
        self.rp_link = np.full(len(pts), link, dtype=np.int64)
        self.rp_local = np.array([ch.local_point(cfg.frame, lp)[1] for _, lp in pts])
        self.e_link = np.full(len(cfg.blade.edge), link, dtype=np.int64)
        self.e_local = np.array([ch.local_point(cfg.frame, lp)[1] for lp in cfg.blade.edge])
        self.seg_len = cfg.blade.segment_lengths
        rpos, _, _ = self._kinematics()
        self.mech = build_rocking_mechanism(cfg.controller, cfg.blade, ch, rpos, cfg.frame)
        self.mech.reference("r2").active = 0
        self.packed = self.mech.pack()
        self.state = RockingState(k2=cfg.controller.k2, t_last_switch=0.0)
        self.acc = np.zeros(N_ACC)
        self._reset_cycle_acc()
        self.f_env = np.zeros(3)
        self.food_state = np.zeros(2)
        self.sensor = WristSensor(cfg.sensor_rate, cfg.sensor_noise, cfg.seed)
        self.t = 0.0
        self.step_index = 0
        self.mech.ledger.e_vmc = self._e_vmc(rpos)
        self.e_vmc0 = self.mech.ledger.e_vmc
        self.switch_times: list[tuple[float, int]] = []
        self.cycles: list[CycleRecord] = []
        self.cycle_errors: list[float] = []
        self.separation_planes: list[float] = []
        self.cut_paths: dict[int, list[float]] = {}
        self._cut_level = 0
        self._separated_seen: set[int] = set()
        self.feed = self._plane_locked()

    # -- helpers -------------------------------------------------------------

    def _plane_locked(self) -> bool:
        R, p, aw, ow = link_poses(self.cfg.chain, self.q)
        pos = p[self.rp_link[0]] + R[self.rp_link[0]] @ self.rp_local[0]
        J = _rbd.point_jacobian(int(self.rp_link[0]), pos, self.a.supports, aw, ow)
        return bool(np.all(np.abs(J[0]) < 1e-12))

    def _kinematics(self):
        a = self.a
        return _tick_kinematics(
            self.q, self.qd, a.topo, a.jp, a.jc, a.axis, a.oR, a.op, a.base_R, a.base_p, a.mass.size,
            a.supports, self.rp_link, self.rp_local, self.e_link, self.e_local,
        )  # fmt: skip

    def _e_vmc(self, rpos) -> float:
        pk = self.packed
        mpos, _ = _mass_kinematics(pk.origin, pk.dirs, pk.dim, pk.s, pk.sd)
        u = spring_energy(rpos, mpos, pk.refs, pk.ea_kind, pk.ea_idx, pk.eb_kind, pk.eb_idx, pk.k, pk.sigma)
        return float(u + mass_kinetic(pk.sd, pk.mass, pk.dim))

    def kinetic_energy(self) -> float:
        a = self.a
        R, p, aw, _ = link_poses(self.cfg.chain, self.q)
        ke, pe = _rbd.energies(self.qd, self.gravity, a.topo, a.jp, a.jc, R, p, aw, a.mass, a.com, a.inertia)
        if self.cfg.gravity_compensation:
            return float(ke)
        R0, p0, aw0, _ = link_poses(self.cfg.chain, np.zeros(self.cfg.chain.n))
        _, pe0 = _rbd.energies(self.qd * 0, self.gravity, a.topo, a.jp, a.jc, R0, p0, aw0, a.mass, a.com, a.inertia)
        return float(ke + pe - pe0)

    def _reset_cycle_acc(self):
        self.acc[A_ZMIN] = math.inf
        self.acc[A_P2MIN] = math.inf
        self.acc[A_ENGAGED] = 0.0

    def _mutate(self, rpos, change):
        """Apply a ledgered change to the mechanism and repack it."""
        self.mech.unpack_state(self.packed)
        self.mech.ledger.e_vmc = self._e_vmc(rpos)
        change(rpos)
        self.packed = self.mech.pack()

    def _food_params(self):
        food = self.cfg.food
        if food is None or not food.present(self.t) or food.separated.get(self.state.slice_index, False):
            return np.zeros(7)
        h = food.hardness(self.t)
        bh = self.cfg.board.height
        return np.array(
            [1.0, food.center_y, 0.5 * food.width, bh + food.height, food.height, food.rho * h,
             food.fracture_threshold * h]
        )  # fmt: skip

    # -- main loop -----------------------------------------------------------

    def step(self) -> bool:
        a, pk, cfg = self.a, self.packed, self.cfg
        board = np.array([1.0 if cfg.contact else 0.0, cfg.board.height, cfg.board.k_n, cfg.board.c_n, cfg.board.mu_v])
        food = self._food_params()
        ok = _advance(
            cfg.substeps, self.h, self.q, self.qd, self.gravity,
            a.topo, a.jp, a.jc, a.axis, a.oR, a.op, a.base_R, a.base_p, a.damping, a.mass, a.com, a.inertia,
            a.supports, self.rp_link, self.rp_local, self.e_link, self.e_local, self.seg_len,
            pk.ea_kind, pk.ea_idx, pk.eb_kind, pk.eb_idx, pk.k, pk.sigma, pk.c,
            pk.origin, pk.dirs, pk.dim, pk.s, pk.sd, pk.mass, pk.lo, pk.hi, pk.refs,
            board, food, self.food_state, self.acc, self.f_env,
        )  # fmt: skip
        self.step_index += 1
        self.t = self.step_index * cfg.dt
        if not ok or not np.all(np.isfinite(pk.s)) or not np.all(np.isfinite(pk.sd)):
            return False
        if food[0] > 0.0:
            self._sync_food()
        if cfg.switching:
            self._control()
        return True

    def _sync_food(self):
        food, idx = self.cfg.food, self.state.slice_index
        food.set_depth(idx, float(self.food_state[1]))
        _, _, epos = self._kinematics()
        while self._cut_level < len(THICKNESS_LEVELS) and food.depth(idx) >= THICKNESS_LEVELS[self._cut_level] * food.height:
            inside = np.abs(epos[:, 1] - food.center_y) <= 0.5 * food.width
            if np.any(inside):
                j = np.flatnonzero(inside)[np.argmin(epos[inside, 2])]
                x = epos[j, 0]
                if self.feed:
                    x += plane_position(self.cfg.controller, idx) - self.cfg.controller.plane_x
                self.cut_paths.setdefault(idx, []).append(float(x))
            self._cut_level += 1
        if food.separated.get(idx, False) and idx not in self._separated_seen:
            self._separated_seen.add(idx)
            self.separation_planes.append(plane_position(self.cfg.controller, idx))

    def _control(self):
        cfg = self.cfg.controller
        rpos, _, epos = self._kinematics()
        before = self.state
        new = update_phase(before, rpos[0], rpos[1], None, cfg, self.t)
        if new is not before:
            active = 1 if new.phase == RAISING else 0

            def switch(r):
                ref = self.mech.reference("r2")
                self.mech.ledgered_change(r, lambda: setattr(ref, "active", active))

            self._mutate(rpos, switch)
            self.switch_times.append((self.t, new.phase))
            if new.phase == RAISING:
                new = self._close_cycle(new)
            else:
                self._reset_cycle_acc()
            self.state = new
        food = self.cfg.food
        st = self.state
        if (
            food is not None
            and st.phase == RAISING
            and not st.completed
            and food.separated.get(st.slice_index, False)
            and cfg.slices > 0
        ):
            inside = np.abs(epos[:, 1] - food.center_y) <= 0.5 * food.width
            top = self.cfg.board.height + food.height
            if not np.any(inside) or np.all(epos[inside, 2] > top):
                holder = {}

                def shift(r):
                    holder["state"] = advance_slice(st, cfg, self.mech, r)[1]

                self._mutate(rpos, shift)
                self.state = holder["state"]
                self.food_state[:] = (0.0, food.depth(self.state.slice_index))
                self._cut_level = 0
        elif st.phase == RAISING and cfg.slices > 0 and st.slice_index >= cfg.slices and not st.completed:
            self.state = replace(st, completed=True)

    def _close_cycle(self, st: RockingState) -> RockingState:
        cfg = self.cfg.controller
        food = self.cfg.food
        engaged = food is not None and food.present(self.t) and self.acc[A_ENGAGED] > 0
        rec = CycleRecord(
            separated=bool(food is not None and food.separated.get(st.slice_index, False)),
            z_min=float(self.acc[A_ZMIN]) if engaged else self.cfg.board.height,
            z_target=self.cfg.board.height,
            p2_min_z=float(self.acc[A_P2MIN]),
            engaged=bool(engaged),
        )
        e = separation_error(rec, cfg.z_scale, cfg.critical_z)
        self.cycles.append(rec)
        self.cycle_errors.append(e)
        if cfg.adapt:
            st, k2 = record_cycle(st, e, cfg, self.t)
            if k2 is not None:
                rp, _, _ = self._kinematics()

                def set_k2(r):
                    spring = self.mech.spring("p2", "m_b")
                    self.mech.ledgered_change(r, lambda: setattr(spring, "k", k2))

                self._mutate(rp, set_k2)
        return st

    # -- recording -------------------------------------------------------------

    def row(self) -> np.ndarray:
        rpos, _, _ = self._kinematics()
        true_f = -self.f_env  # force the robot applies to the environment
        F = self.sensor.read(self.t, true_f) if self.cfg.sensor_noise >= 0 else true_f
        pk = self.packed
        mpos, _ = _mass_kinematics(pk.origin, pk.dirs, pk.dim, pk.s, pk.sd)
        e_vmc = self._e_vmc(rpos)
        p1, p2, pb = rpos[0], rpos[1], mpos[1]
        k2 = self.state.k2
        return np.concatenate(
            [
                [self.t],
                self.q,
                self.qd,
                [p1[1], p1[2], p1[0], p2[1], p2[2], p2[0], pb[1], pb[2], float(self.state.phase)],
                F,
                [self.kinetic_energy(), e_vmc, self.acc[A_DISS], self.mech.ledger.w_elastic, k2,
                 float(self.state.slice_index)],
            ]
        )  # fmt: skip

    def energy_row(self, trace_row: np.ndarray) -> np.ndarray:
        n = self.cfg.chain.n
        base = 1 + 2 * n + 9 + 3
        return np.array(
            [self.t, trace_row[base], trace_row[base + 1], self.acc[A_DISS], self.mech.ledger.w_elastic,
             self.acc[A_JOINT], self.acc[A_BOARD], self.acc[A_FOOD], self.acc[A_PORT]]
        )  # fmt: skip

    def run(self, on_row=None) -> SimResult:
        cfg = self.cfg
        t0 = time.perf_counter()
        n_steps = int(round(cfg.duration / cfg.dt))
        rows, erows = [], []
        status = "ok"
        if n_steps > 0:
            r = self.row()
            rows.append(r)
            erows.append(self.energy_row(r))
        for i in range(n_steps):
            try:
                ok = self.step()
            except Exception as exc:  # solver failure inside the kernel
                if not np.all(np.isfinite(self.q)) or "positive definite" in str(exc) or "singular" in str(exc).lower():
                    ok = False
                else:
                    raise
            if not ok:
                status = "diverged"
                break
            if (i + 1) % cfg.record_every == 0:
                r = self.row()
                if not np.all(np.isfinite(r)):
                    status = "diverged"
                    break
                rows.append(r)
                erows.append(self.energy_row(r))
        cols = trace_columns(cfg.chain.n)
        trace = np.array(rows) if rows else np.zeros((0, len(cols)))
        energy = np.array(erows) if erows else np.zeros((0, len(ENERGY_COLUMNS)))
        return SimResult(
            columns=cols,
            trace=trace,
            energy=energy,
            switch_times=self.switch_times,
            cycles=self.cycles,
            cycle_errors=self.cycle_errors,
            k2_updates=list(self.state.k2_updates),
            separation_planes=self.separation_planes,
            cut_paths=self.cut_paths,
            max_penetration=float(self.acc[A_PEN]),
            status=status,
            wall_time=time.perf_counter() - t0,
            state=self.state,
            n_cut_raise=sum(1 for _, ph in self.switch_times if ph == RAISING),
        )


def simulate(cfg: SimConfig) -> SimResult:
    return Simulation(cfg).run()
