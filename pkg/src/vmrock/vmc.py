"""Virtual mechanisms: saturating springs, dampers, rail masses and switching
references attached to robot points, with Jacobian-transpose torque synthesis
and an energy ledger for the controller side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

LN2 = math.log(2.0)

# endpoint kinds in packed form
POINT, MASS, FIXED = 0, 1, 2


# ---------------------------------------------------------------------------
# compiled element laws


@njit(cache=True)
def _spring(k, sigma, z):
    d = np.sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2])
    if d == 0.0 or k == 0.0:
        return np.zeros(3)
    if np.isinf(sigma):
        return k * z
    f = (sigma * np.tanh(k * d / sigma) / d) * z
    n = np.sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2])
    if n > sigma * (1.0 - 1e-14):
        # rounding in the direction can push a saturated force a few ulps past the cap
        f *= (sigma / n) * (1.0 - 1e-15)
    return f


@njit(cache=True)
def _log_cosh(x):
    ax = abs(x)
    if ax < 1.0:
        # cosh(x) - 1 = 2 sinh^2(x/2) keeps precision for small arguments
        return np.log1p(2.0 * np.sinh(0.5 * ax) ** 2)
    return ax + np.log1p(np.exp(-2.0 * ax)) - 0.6931471805599453


@njit(cache=True)
def _potential(k, sigma, d):
    if k == 0.0:
        return 0.0
    if np.isinf(sigma):
        return 0.5 * k * d * d
    return sigma * sigma / k * _log_cosh(k * d / sigma)


@njit(cache=True)
def _mass_kinematics(origin, dirs, dim, s, sd):
    n = origin.shape[0]
    pos = np.empty((n, 3))
    vel = np.zeros((n, 3))
    for i in range(n):
        for r in range(3):
            pos[i, r] = origin[i, r]
        for a in range(dim[i]):
            for r in range(3):
                pos[i, r] += dirs[i, a, r] * s[i, a]
                vel[i, r] += dirs[i, a, r] * sd[i, a]
    return pos, vel


@njit(cache=True)
def _endpoint(kind, idx, pts, vpts, mpos, mvel, refs):
    if kind == 0:
        return pts[idx], vpts[idx]
    if kind == 1:
        return mpos[idx], mvel[idx]
    return refs[idx], np.zeros(3)


@njit(cache=True)
def element_forces(pts, vpts, mpos, mvel, refs, ea_kind, ea_idx, eb_kind, eb_idx, k, sigma, c):
    """Forces on robot points and masses, plus total damper power dissipated.

    The element pulls endpoint A toward B with spring(B - A) + c (vB - vA);
    B receives the reaction. Written with scalars only: this is the hot loop.
    """
    fp = np.zeros((pts.shape[0], 3))
    fm = np.zeros((mpos.shape[0], 3))
    diss = 0.0
    for e in range(k.shape[0]):
        ka, ia, kb, ib = ea_kind[e], ea_idx[e], eb_kind[e], eb_idx[e]
        if ka == 0:
            xa0, xa1, xa2 = pts[ia, 0], pts[ia, 1], pts[ia, 2]
            va0, va1, va2 = vpts[ia, 0], vpts[ia, 1], vpts[ia, 2]
        elif ka == 1:
            xa0, xa1, xa2 = mpos[ia, 0], mpos[ia, 1], mpos[ia, 2]
            va0, va1, va2 = mvel[ia, 0], mvel[ia, 1], mvel[ia, 2]
        else:
            xa0, xa1, xa2 = refs[ia, 0], refs[ia, 1], refs[ia, 2]
            va0, va1, va2 = 0.0, 0.0, 0.0
        if kb == 0:
            xb0, xb1, xb2 = pts[ib, 0], pts[ib, 1], pts[ib, 2]
            vb0, vb1, vb2 = vpts[ib, 0], vpts[ib, 1], vpts[ib, 2]
        elif kb == 1:
            xb0, xb1, xb2 = mpos[ib, 0], mpos[ib, 1], mpos[ib, 2]
            vb0, vb1, vb2 = mvel[ib, 0], mvel[ib, 1], mvel[ib, 2]
        else:
            xb0, xb1, xb2 = refs[ib, 0], refs[ib, 1], refs[ib, 2]
            vb0, vb1, vb2 = 0.0, 0.0, 0.0
        z0, z1, z2 = xb0 - xa0, xb1 - xa1, xb2 - xa2
        d = np.sqrt(z0 * z0 + z1 * z1 + z2 * z2)
        gain = 0.0
        ke = k[e]
        if d > 0.0 and ke != 0.0:
            se = sigma[e]
            gain = ke if np.isinf(se) else se * np.tanh(ke * d / se) / d
        ce = c[e]
        dv0, dv1, dv2 = vb0 - va0, vb1 - va1, vb2 - va2
        f0 = gain * z0 + ce * dv0
        f1 = gain * z1 + ce * dv1
        f2 = gain * z2 + ce * dv2
        diss += ce * (dv0 * dv0 + dv1 * dv1 + dv2 * dv2)
        if ka == 0:
            fp[ia, 0] += f0
            fp[ia, 1] += f1
            fp[ia, 2] += f2
        elif ka == 1:
            fm[ia, 0] += f0
            fm[ia, 1] += f1
            fm[ia, 2] += f2
        if kb == 0:
            fp[ib, 0] -= f0
            fp[ib, 1] -= f1
            fp[ib, 2] -= f2
        elif kb == 1:
            fm[ib, 0] -= f0
            fm[ib, 1] -= f1
            fm[ib, 2] -= f2
    return fp, fm, diss


@njit(cache=True)
def spring_energy(pts, mpos, refs, ea_kind, ea_idx, eb_kind, eb_idx, k, sigma):
    zero = np.zeros_like(pts)
    zm = np.zeros_like(mpos)
    u = 0.0
    for e in range(k.shape[0]):
        xa, _ = _endpoint(ea_kind[e], ea_idx[e], pts, zero, mpos, zm, refs)
        xb, _ = _endpoint(eb_kind[e], eb_idx[e], pts, zero, mpos, zm, refs)
        z = xb - xa
        u += _potential(k[e], sigma[e], np.sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]))
    return u


@njit(cache=True)
def integrate_masses(fm, dirs, dim, s, sd, mass, lo, hi, dt):
    """Semi-implicit Euler on rail coordinates; returns kinetic energy lost at clamps."""
    lost = 0.0
    for i in range(mass.shape[0]):
        for a in range(dim[i]):
            sd[i, a] += (dirs[i, a, 0] * fm[i, 0] + dirs[i, a, 1] * fm[i, 1] + dirs[i, a, 2] * fm[i, 2]) / mass[i] * dt
            s[i, a] += sd[i, a] * dt
        if dim[i] == 1:
            if s[i, 0] < lo[i]:
                s[i, 0] = lo[i]
                if sd[i, 0] < 0.0:
                    lost += 0.5 * mass[i] * sd[i, 0] ** 2
                    sd[i, 0] = 0.0
            elif s[i, 0] > hi[i]:
                s[i, 0] = hi[i]
                if sd[i, 0] > 0.0:
                    lost += 0.5 * mass[i] * sd[i, 0] ** 2
                    sd[i, 0] = 0.0
    return lost


@njit(cache=True)
def mass_kinetic(sd, mass, dim):
    ke = 0.0
    for i in range(mass.shape[0]):
        for a in range(dim[i]):
            ke += 0.5 * mass[i] * sd[i, a] ** 2
    return ke


# ---------------------------------------------------------------------------
# element laws (public)


def spring_force(k: float, sigma: float, z) -> np.ndarray:
    """Saturating spring: ``sigma * tanh(k |z| / sigma) * z / |z|``, zero at ``z = 0``.

    ``sigma = inf`` gives a linear spring.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return _spring(float(k), float(sigma), np.asarray(z, dtype=float).reshape(3))


def spring_force_batch(k: float, sigma: float, z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`spring_force` over rows of ``z``."""
    z = np.asarray(z, dtype=float)
    d = np.linalg.norm(z, axis=-1, keepdims=True)
    safe = np.where(d == 0.0, 1.0, d)
    if math.isinf(sigma):
        return k * z
    f = np.where(d == 0.0, 0.0, sigma * np.tanh(k * d / sigma) / safe) * z
    n = np.linalg.norm(f, axis=-1, keepdims=True)
    over = n > sigma * (1.0 - 1e-14)
    if np.any(over):
        f = np.where(over, f * (sigma / np.where(over, n, 1.0)) * (1.0 - 1e-15), f)
    return f


def spring_potential(k: float, sigma: float, d: float) -> float:
    """Antiderivative of the spring law: ``(sigma^2 / k) ln cosh(k d / sigma)``."""
    return float(_potential(float(k), float(sigma), float(d)))


# ---------------------------------------------------------------------------
# components


@dataclass
class SaturatingSpring:
    a: str
    b: str
    k: float
    sigma: float = math.inf

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("spring stiffness must be non-negative")
        if not self.sigma > 0:
            raise ValueError("spring cap sigma must be positive")

    def potential(self, d: float) -> float:
        return spring_potential(self.k, self.sigma, d)


@dataclass
class Damper:
    a: str
    b: str
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("damping must be non-negative")


@dataclass
class RailMass:
    """Point mass confined to a line (one direction) or plane (two directions).

    The state is stored in rail coordinates, so the constraint holds exactly.
    Line rails may be clamped to ``[lower, upper]``.
    """

    name: str
    m: float
    origin: np.ndarray
    directions: np.ndarray
    coords: np.ndarray = None
    velocities: np.ndarray = None
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"rail mass {self.name!r} must be positive")
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        D = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if D.shape not in ((1, 3), (2, 3)):
            raise ValueError("a rail needs one (line) or two (plane) directions")
        if not np.allclose(D @ D.T, np.eye(D.shape[0]), atol=1e-12):
            raise ValueError("rail directions must be orthonormal")
        self.directions = D
        dim = D.shape[0]
        self.coords = np.zeros(dim) if self.coords is None else np.asarray(self.coords, dtype=float).reshape(dim)
        self.velocities = (
            np.zeros(dim) if self.velocities is None else np.asarray(self.velocities, dtype=float).reshape(dim)
        )

    @property
    def dim(self) -> int:
        return self.directions.shape[0]

    @property
    def position(self) -> np.ndarray:
        return self.origin + self.directions.T @ self.coords

    @property
    def velocity(self) -> np.ndarray:
        return self.directions.T @ self.velocities

    @property
    def kinetic_energy(self) -> float:
        return 0.5 * self.m * float(self.velocities @ self.velocities)

    def project(self, point) -> np.ndarray:
        """Rail coordinates of the closest rail point (clamped for lines)."""
        s = self.directions @ (np.asarray(point, dtype=float) - self.origin)
        if self.dim == 1:
            s = np.clip(s, self.lower, self.upper)
        return s


@dataclass
class SwitchingReference:
    name: str
    candidates: list
    active: int = 0

    def __post_init__(self):
        self.candidates = [np.asarray(c, dtype=float).reshape(3) for c in self.candidates]
        if not 0 <= self.active < len(self.candidates):
            raise ValueError(f"reference {self.name!r}: active index out of range")

    @property
    def position(self) -> np.ndarray:
        return self.candidates[self.active]


@dataclass
class RobotPoint:
    name: str
    frame: str
    local: tuple[float, float, float]


@dataclass
class EnergyLedger:
    e_vmc: float = 0.0
    w_dissipation: float = 0.0
    w_elastic: float = 0.0


@dataclass
class PackedMechanism:
    """Flat arrays consumed by the compiled kernels. Mass state is shared with the owner."""

    ea_kind: np.ndarray
    ea_idx: np.ndarray
    eb_kind: np.ndarray
    eb_idx: np.ndarray
    k: np.ndarray
    sigma: np.ndarray
    c: np.ndarray
    origin: np.ndarray
    dirs: np.ndarray
    dim: np.ndarray
    s: np.ndarray
    sd: np.ndarray
    mass: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    refs: np.ndarray


@dataclass
class VirtualMechanism:
    points: list[RobotPoint] = field(default_factory=list)
    masses: list[RailMass] = field(default_factory=list)
    references: list[SwitchingReference] = field(default_factory=list)
    springs: list[SaturatingSpring] = field(default_factory=list)
    dampers: list[Damper] = field(default_factory=list)
    ledger: EnergyLedger = field(default_factory=EnergyLedger)

    def __post_init__(self):
        self.validate()

    def _endpoints(self) -> dict[str, tuple[int, int]]:
        table: dict[str, tuple[int, int]] = {}
        for kind, items in ((POINT, self.points), (MASS, self.masses), (FIXED, self.references)):
            for i, item in enumerate(items):
                if item.name in table:
                    raise ValueError(f"duplicate attachment name {item.name!r}")
                table[item.name] = (kind, i)
        return table

    def validate(self):
        table = self._endpoints()
        for el in (*self.springs, *self.dampers):
            for end in (el.a, el.b):
                if end not in table:
                    raise ValueError(f"unresolved endpoint {end!r}")

    def point_index(self, name: str) -> int:
        return [p.name for p in self.points].index(name)

    def mass(self, name: str) -> RailMass:
        return next(m for m in self.masses if m.name == name)

    def reference(self, name: str) -> SwitchingReference:
        return next(r for r in self.references if r.name == name)

    def spring(self, a: str, b: str) -> SaturatingSpring:
        return next(s for s in self.springs if {s.a, s.b} == {a, b})

    def pack(self) -> PackedMechanism:
        table = self._endpoints()
        rows = [(s.a, s.b, s.k, s.sigma, 0.0) for s in self.springs]
        rows += [(d.a, d.b, 0.0, math.inf, d.c) for d in self.dampers]
        nm = len(self.masses)
        dirs = np.zeros((nm, 2, 3))
        s = np.zeros((nm, 2))
        sd = np.zeros((nm, 2))
        for i, m in enumerate(self.masses):
            dirs[i, : m.dim] = m.directions
            s[i, : m.dim] = m.coords
            sd[i, : m.dim] = m.velocities
        return PackedMechanism(
            ea_kind=np.array([table[r[0]][0] for r in rows], dtype=np.int64),
            ea_idx=np.array([table[r[0]][1] for r in rows], dtype=np.int64),
            eb_kind=np.array([table[r[1]][0] for r in rows], dtype=np.int64),
            eb_idx=np.array([table[r[1]][1] for r in rows], dtype=np.int64),
            k=np.array([r[2] for r in rows], dtype=float),
            sigma=np.array([r[3] for r in rows], dtype=float),
            c=np.array([r[4] for r in rows], dtype=float),
            origin=np.array([m.origin for m in self.masses], dtype=float).reshape(nm, 3),
            dirs=dirs,
            dim=np.array([m.dim for m in self.masses], dtype=np.int64),
            s=s,
            sd=sd,
            mass=np.array([m.m for m in self.masses], dtype=float),
            lo=np.array([m.lower for m in self.masses], dtype=float),
            hi=np.array([m.upper for m in self.masses], dtype=float),
            refs=np.array([r.position for r in self.references], dtype=float).reshape(len(self.references), 3),
        )

    def unpack_state(self, packed: PackedMechanism):
        for i, m in enumerate(self.masses):
            m.coords = packed.s[i, : m.dim].copy()
            m.velocities = packed.sd[i, : m.dim].copy()

    def energy(self, robot_positions) -> float:
        return vmc_energy(self, robot_positions)

    def ledgered_change(self, robot_positions, change: Callable[[], None]) -> float:
        """Apply ``change`` (reference switch, anchor shift, stiffness update) and
        book the resulting elastic energy jump. Returns the jump."""
        before = vmc_energy(self, robot_positions)
        change()
        after = vmc_energy(self, robot_positions)
        self.ledger.w_elastic += after - before
        self.ledger.e_vmc = after
        return after - before


def _robot_arrays(robot_points, n_points):
    if isinstance(robot_points, tuple) and len(robot_points) == 2 and np.ndim(robot_points[0]) == 2:
        pos, vel = robot_points
    else:
        pos, vel = robot_points, None
    pos = np.asarray(pos, dtype=float).reshape(n_points, 3)
    vel = np.zeros((n_points, 3)) if vel is None else np.asarray(vel, dtype=float).reshape(n_points, 3)
    return pos, vel


def _evaluate(mech: VirtualMechanism, robot_points):
    pk = mech.pack()
    pos, vel = _robot_arrays(robot_points, len(mech.points))
    mpos, mvel = _mass_kinematics(pk.origin, pk.dirs, pk.dim, pk.s, pk.sd)
    fp, fm, diss = element_forces(
        pos, vel, mpos, mvel, pk.refs, pk.ea_kind, pk.ea_idx, pk.eb_kind, pk.eb_idx, pk.k, pk.sigma, pk.c
    )
    return pk, pos, fp, fm, diss


def component_forces(mech: VirtualMechanism, robot_points) -> list[tuple[str, np.ndarray]]:
    """Net virtual force on every robot point and rail mass.

    ``robot_points`` is ``(positions, velocities)`` with one row per robot
    point, or just positions (velocities zero). Rail-mass entries are the
    full reactions; only their on-rail part moves the mass.
    """
    _, _, fp, fm, _ = _evaluate(mech, robot_points)
    out = [(p.name, fp[i].copy()) for i, p in enumerate(mech.points)]
    out += [(m.name, fm[i].copy()) for i, m in enumerate(mech.masses)]
    return out


def map_to_torques(jacobians: Sequence[np.ndarray], forces: Sequence[np.ndarray]) -> np.ndarray:
    """``tau = sum_i J_i^T f_i``."""
    if len(jacobians) != len(forces):
        raise ValueError(f"{len(jacobians)} Jacobians but {len(forces)} forces")
    if not jacobians:
        raise ValueError("need at least one Jacobian to size the torque vector")
    n = np.shape(jacobians[0])[1]
    tau = np.zeros(n)
    for J, f in zip(jacobians, forces):
        J = np.asarray(J, dtype=float)
        f = np.asarray(f, dtype=float).reshape(-1)
        if J.shape != (3, n) or f.shape != (3,):
            raise ValueError(f"shape mismatch: J {J.shape}, f {f.shape}, expected (3, {n}) and (3,)")
        tau += J.T @ f
    return tau


def step_virtual_masses(mech: VirtualMechanism, robot_points, dt: float) -> VirtualMechanism:
    """Advance every rail mass by one semi-implicit Euler step (in place)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    pk, pos, _, fm, diss = _evaluate(mech, robot_points)
    lost = integrate_masses(fm, pk.dirs, pk.dim, pk.s, pk.sd, pk.mass, pk.lo, pk.hi, dt)
    mech.unpack_state(pk)
    mech.ledger.w_dissipation += diss * dt + lost
    mech.ledger.e_vmc = vmc_energy(mech, pos)
    return mech


def vmc_energy(mech: VirtualMechanism, robot_points) -> float:
    """Rail-mass kinetic energy plus spring potentials."""
    pk = mech.pack()
    pos, _ = _robot_arrays(robot_points, len(mech.points))
    mpos, _ = _mass_kinematics(pk.origin, pk.dirs, pk.dim, pk.s, pk.sd)
    u = spring_energy(pos, mpos, pk.refs, pk.ea_kind, pk.ea_idx, pk.eb_kind, pk.eb_idx, pk.k, pk.sigma)
    return float(u + mass_kinetic(pk.sd, pk.mass, pk.dim))


def switch_energy_jump(spring: SaturatingSpring, point, r_old, r_new) -> float:
    """Elastic energy change when a spring anchor jumps from ``r_old`` to ``r_new``."""
    point = np.asarray(point, dtype=float)
    d_new = float(np.linalg.norm(point - np.asarray(r_new, dtype=float)))
    d_old = float(np.linalg.norm(point - np.asarray(r_old, dtype=float)))
    return spring.potential(d_new) - spring.potential(d_old)
