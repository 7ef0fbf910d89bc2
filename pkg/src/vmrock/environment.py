"""Cutting board, blade geometry, phenomenological food and the wrist sensor."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

# knife frame: x runs along the spine from the handle (p2, origin) to the tip
# (p1), z points up out of the spine, the edge hangs below at negative z.
SPINE_LENGTH = 0.18
HEEL_DROP = 0.04
P1_LOCAL = (SPINE_LENGTH, 0.0, 0.0)
P2_LOCAL = (0.0, 0.0, 0.0)
# p3..p6: corners of a 0.12 x 0.04 rectangle on the blade plane
PLANE_POINTS_LOCAL = (
    (0.03, 0.0, 0.0),
    (0.15, 0.0, 0.0),
    (0.15, 0.0, -0.04),
    (0.03, 0.0, -0.04),
)


class PresetError(KeyError):
    pass


@dataclass(frozen=True)
class BladeProfile:
    """Blade edge polyline in the knife frame, ordered tip to heel."""

    name: str
    edge: np.ndarray
    p1: tuple[float, float, float] = P1_LOCAL
    p2: tuple[float, float, float] = P2_LOCAL

    def __post_init__(self):
        edge = np.asarray(self.edge, dtype=float)
        if edge.ndim != 2 or edge.shape[1] not in (2, 3):
            raise ValueError("edge must be an (M, 2) x-z or (M, 3) array")
        if edge.shape[1] == 2:
            edge = np.column_stack([edge[:, 0], np.zeros(len(edge)), edge[:, 1]])
        if len(edge) < 8:
            raise ValueError(f"blade {self.name!r}: need at least 8 edge points, got {len(edge)}")
        if not np.all(np.isfinite(edge)):
            raise ValueError(f"blade {self.name!r}: non-finite edge point")
        if not np.all(np.diff(edge[:, 0]) < 0):
            raise ValueError(f"blade {self.name!r}: edge x must decrease monotonically from tip to heel")
        object.__setattr__(self, "edge", edge)

    @property
    def segment_lengths(self) -> np.ndarray:
        """Edge length attributed to each point (half of each adjacent segment)."""
        seg = np.linalg.norm(np.diff(self.edge, axis=0), axis=1)
        out = np.zeros(len(self.edge))
        out[:-1] += 0.5 * seg
        out[1:] += 0.5 * seg
        return out


def arc_blade(name: str, chord: float, camber: float, n_points: int = 16) -> BladeProfile:
    """Circular-arc edge from the tip (at p1) down to a heel ``HEEL_DROP`` below the spine.

    ``camber`` is the sagitta of the arc, bulging away from the spine.
    """
    tip = np.array([P1_LOCAL[0], P1_LOCAL[2]])
    run = math.sqrt(chord**2 - HEEL_DROP**2)
    heel = np.array([tip[0] - run, -HEEL_DROP])
    u = np.linspace(0.0, 1.0, n_points)
    along = heel - tip
    normal = np.array([-along[1], along[0]]) / chord
    if normal[1] > 0:
        normal = -normal
    if camber <= 0:
        offset = np.zeros_like(u)
    else:
        radius = (chord**2 / 4 + camber**2) / (2 * camber)
        half = math.asin(chord / (2 * radius))
        ang = (2 * u - 1) * half
        offset = radius * np.cos(ang) - (radius - camber)
    pts = tip + np.outer(u, along) + np.outer(offset, normal)
    return BladeProfile(name, pts)


BLADE_PRESETS = {
    "knife-1": dict(chord=0.18, camber=0.03),
    "knife-2": dict(chord=0.12, camber=0.015),
    "knife-3": dict(chord=0.18, camber=0.012),
}


def blade_preset(name: str, n_points: int = 16) -> BladeProfile:
    if name not in BLADE_PRESETS:
        raise PresetError(f"unknown knife preset {name!r}; choose from {sorted(BLADE_PRESETS)}")
    return arc_blade(name, n_points=n_points, **BLADE_PRESETS[name])


# ---------------------------------------------------------------------------
# board


@dataclass(frozen=True)
class Board:
    height: float = 0.0
    k_n: float = 5e4
    c_n: float = 50.0
    mu_v: float = 5.0

    def __post_init__(self):
        if min(self.k_n, self.c_n, self.mu_v) < 0:
            raise ValueError("board coefficients must be non-negative")


@njit(cache=True)
def board_kernel(pos, vel, height, k_n, c_n, mu_v):
    f = np.zeros_like(pos)
    for i in range(pos.shape[0]):
        d = height - pos[i, 2]
        if d > 0.0:
            fn = k_n * d + c_n * max(0.0, -vel[i, 2])
            f[i, 2] = max(0.0, fn)
            f[i, 0] = -mu_v * vel[i, 0]
            f[i, 1] = -mu_v * vel[i, 1]
    return f


def board_contact_forces(positions, velocities, board: Board) -> np.ndarray:
    """Penalty contact on each blade point: one row of world force per point."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    vel = np.atleast_2d(np.asarray(velocities, dtype=float))
    return board_kernel(pos, vel, board.height, board.k_n, board.c_n, board.mu_v)


# ---------------------------------------------------------------------------
# food

FOOD_PRESETS = {
    # rho: N per m of engaged edge, threshold: N
    "spring-onion": dict(rho=15.0, fracture_threshold=1.0),
    "cucumber": dict(rho=30.0, fracture_threshold=2.0),
    "carrot": dict(rho=60.0, fracture_threshold=4.0),
    "potato": dict(rho=80.0, fracture_threshold=6.0),
}

V_EPS = 1e-3


@dataclass
class FoodItem:
    """Anchored food block on the board, sliced at successive planes.

    Cut progress is tracked per slice index. ``hardness_schedule`` is a list
    of ``(time, factor)`` steps that scale both the resistance and the
    fracture threshold.
    """

    center_y: float
    width: float
    height: float
    rho: float
    fracture_threshold: float
    name: str = "food"
    hardness_schedule: list = field(default_factory=list)
    present_from: float = 0.0
    present_until: float = math.inf
    cut_depth: dict = field(default_factory=dict)
    separated: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("food width and height must be positive")
        if self.rho < 0 or self.fracture_threshold < 0:
            raise ValueError("food resistance and threshold must be non-negative")

    def hardness(self, t: float) -> float:
        factor = 1.0
        for t_step, f in sorted(self.hardness_schedule):
            if t >= t_step:
                factor = f
        return factor

    def present(self, t: float) -> bool:
        return self.present_from <= t < self.present_until

    def depth(self, slice_index: int) -> float:
        return self.cut_depth.get(slice_index, 0.0)

    def set_depth(self, slice_index: int, depth: float):
        depth = min(max(depth, self.depth(slice_index)), self.height)
        self.cut_depth[slice_index] = depth
        if depth >= self.height:
            self.separated[slice_index] = True


def food_preset(name: str, center_y: float, width: float, height: float, **kw) -> FoodItem:
    if name not in FOOD_PRESETS:
        raise PresetError(f"unknown food preset {name!r}; choose from {sorted(FOOD_PRESETS)}")
    return FoodItem(center_y, width, height, name=name, **FOOD_PRESETS[name], **kw)


def is_separated(food: FoodItem, slice_index: int) -> bool:
    return bool(food.separated.get(slice_index, False))


@njit(cache=True)
def food_engagement(pos, cy, half_w, surface):
    """Mask of edge points inside the uncut region and the deepest of them (-1 if none)."""
    inside = np.zeros(pos.shape[0], dtype=np.bool_)
    deepest = -1
    zmin = np.inf
    for i in range(pos.shape[0]):
        if abs(pos[i, 1] - cy) <= half_w and pos[i, 2] < surface:
            inside[i] = True
            if pos[i, 2] < zmin:
                zmin = pos[i, 2]
                deepest = i
    return inside, deepest


@njit(cache=True)
def food_resistance(vel, inside, seg_len, rho):
    f = np.zeros_like(vel)
    for i in range(vel.shape[0]):
        if inside[i]:
            speed = np.sqrt(vel[i, 0] ** 2 + vel[i, 1] ** 2 + vel[i, 2] ** 2)
            f[i] = -rho * seg_len[i] * vel[i] / max(speed, 1e-3)
    return f


@dataclass(frozen=True)
class FoodResponse:
    forces: np.ndarray
    depth: float
    separated: bool
    fracturing: bool
    blocking_point: int  # deepest engaged point, -1 if none


def food_forces(
    positions,
    velocities,
    food: FoodItem,
    slice_index: int,
    board_height: float,
    segment_lengths,
    driving_force: float,
    t: float = 0.0,
) -> FoodResponse:
    """Resistance of the current slice and its updated cut depth.

    ``driving_force`` is the net downward push the blade puts on the
    engagement. Below the fracture threshold the food holds (depth frozen,
    no resistive force; the support is a constraint owned by the caller).
    Above it the engaged edge meets a velocity-opposing resistance and the
    depth follows the deepest engaged point. The slice records are updated
    in place.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    vel = np.atleast_2d(np.asarray(velocities, dtype=float))
    zero = np.zeros_like(pos)
    depth = food.depth(slice_index)
    if is_separated(food, slice_index) or not food.present(t):
        return FoodResponse(zero, depth, is_separated(food, slice_index), False, -1)
    top = board_height + food.height
    inside, deepest = food_engagement(pos, food.center_y, 0.5 * food.width, top - depth)
    if deepest < 0:
        return FoodResponse(zero, depth, False, False, -1)
    h = food.hardness(t)
    if driving_force <= food.fracture_threshold * h:
        return FoodResponse(zero, depth, False, False, int(deepest))
    f = food_resistance(vel, inside, np.asarray(segment_lengths, dtype=float), food.rho * h)
    food.set_depth(slice_index, top - pos[deepest, 2])
    return FoodResponse(f, food.depth(slice_index), is_separated(food, slice_index), True, int(deepest))


# ---------------------------------------------------------------------------
# wrist sensor


@dataclass
class WristSensor:
    """Zero-order-hold force sensor with optional additive Gaussian noise."""

    rate: float = 100.0
    noise: float = 0.1
    seed: int = 0
    _rng: np.random.Generator = field(default=None, init=False, repr=False)
    _held: np.ndarray = field(default=None, init=False, repr=False)
    _count: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)
        self._held = np.zeros(3)

    def read(self, t: float, true_force) -> np.ndarray:
        if t + 1e-9 >= self._count / self.rate:
            sample = np.asarray(true_force, dtype=float).copy()
            if self.noise > 0:
                sample += self._rng.normal(0.0, self.noise, 3)
            self._held = sample
            self._count += 1
        return self._held.copy()
