"""Kinematic-chain model: description files, forward kinematics, point Jacobians.

A chain is a tree of rigid links connected by revolute joints, rooted at one
fixed base link. Named frames are fixed poses on links; they host the points
where virtual components attach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import _rbd
from .textfmt import Entry, FormatError, Section, format_number, format_vector, parse_sections

Vec3 = tuple[float, float, float]
ZERO3: Vec3 = (0.0, 0.0, 0.0)
FIXTURE_DIR = Path(__file__).parent / "data" / "chains"

DEFAULT_JOINT_DAMPING = 0.1


class ChainError(ValueError):
    """Structurally invalid chain description."""


class ChainCycleError(ChainError):
    pass


def rpy_matrix(rpy: Sequence[float]) -> np.ndarray:
    """Fixed-axis roll-pitch-yaw: R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    r, p, y = rpy
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


@dataclass(frozen=True)
class Link:
    name: str
    mass: float = 0.0
    com: Vec3 = ZERO3
    # row-major 3x3, body frame
    inertia: tuple[float, ...] = (0.0,) * 9


@dataclass(frozen=True)
class Joint:
    name: str
    parent: str
    child: str
    axis: Vec3
    xyz: Vec3 = ZERO3
    rpy: Vec3 = ZERO3
    damping: float = DEFAULT_JOINT_DAMPING


@dataclass(frozen=True)
class Frame:
    name: str
    parent: str
    xyz: Vec3 = ZERO3
    rpy: Vec3 = ZERO3


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        qd = np.array(self.qdot, dtype=float).reshape(-1)
        if q.shape != qd.shape:
            raise ValueError(f"q has {q.size} entries but qdot has {qd.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise ValueError("joint state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qd)

    @classmethod
    def zeros(cls, n: int) -> "JointState":
        return cls(np.zeros(n), np.zeros(n))


class Pose(NamedTuple):
    position: np.ndarray
    rotation: np.ndarray


class ChainArrays(NamedTuple):
    """Flat numeric form of a chain consumed by the compiled kernels."""

    topo: np.ndarray
    jp: np.ndarray
    jc: np.ndarray
    axis: np.ndarray
    oR: np.ndarray
    op: np.ndarray
    damping: np.ndarray
    mass: np.ndarray
    com: np.ndarray
    inertia: np.ndarray
    supports: np.ndarray
    base_R: np.ndarray
    base_p: np.ndarray


@dataclass(frozen=True)
class ChainDescription:
    """Validated kinematic tree. Joint order defines the order of ``q``."""

    name: str
    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    frames: tuple[Frame, ...] = ()
    base_xyz: Vec3 = ZERO3
    base_rpy: Vec3 = ZERO3
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", _validate(self))

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def root(self) -> str:
        return self._index["root"]

    def parent_joint(self, link: str) -> str | None:
        return self._index["parent_joint"].get(link)

    def link_index(self, link: str) -> int:
        return self._index["link_index"][link]

    @cached_property
    def arrays(self) -> ChainArrays:
        idx = self._index
        li = idx["link_index"]
        n = self.n
        L = len(self.links)
        jp = np.array([li[j.parent] for j in self.joints], dtype=np.int64)
        jc = np.array([li[j.child] for j in self.joints], dtype=np.int64)
        supports = np.zeros((n, L), dtype=np.bool_)
        ji = {j.name: k for k, j in enumerate(self.joints)}
        for link in self.links:
            cur = link.name
            while (pj := idx["parent_joint"].get(cur)) is not None:
                supports[ji[pj], li[link.name]] = True
                cur = self.joints[ji[pj]].parent
        mass = np.zeros(L)
        com = np.zeros((L, 3))
        inertia = np.zeros((L, 3, 3))
        for link in self.links:
            k = li[link.name]
            mass[k] = link.mass
            com[k] = link.com
            inertia[k] = np.array(link.inertia).reshape(3, 3)
        return ChainArrays(
            topo=np.array(idx["topo"], dtype=np.int64),
            jp=jp,
            jc=jc,
            axis=np.array([j.axis for j in self.joints], dtype=float).reshape(n, 3),
            oR=np.array([rpy_matrix(j.rpy) for j in self.joints], dtype=float).reshape(n, 3, 3),
            op=np.array([j.xyz for j in self.joints], dtype=float).reshape(n, 3),
            damping=np.array([j.damping for j in self.joints], dtype=float),
            mass=mass,
            com=com,
            inertia=inertia,
            supports=supports,
            base_R=rpy_matrix(self.base_rpy),
            base_p=np.array(self.base_xyz, dtype=float),
        )

    def resolve_frame(self, frame: str) -> tuple[int, np.ndarray, np.ndarray]:
        """Return ``(link index, R_link_frame, p_link_frame)`` for a frame or link name."""
        li = self._index["link_index"]
        if frame in li:
            return li[frame], np.eye(3), np.zeros(3)
        fr = self._index["frames"].get(frame)
        if fr is None:
            raise KeyError(f"unknown frame {frame!r} in chain {self.name!r}")
        return li[fr.parent], rpy_matrix(fr.rpy), np.array(fr.xyz, dtype=float)

    def local_point(self, frame: str, point: Sequence[float] = ZERO3) -> tuple[int, np.ndarray]:
        """Express a point given in ``frame`` in its parent link's frame."""
        link, Rf, pf = self.resolve_frame(frame)
        return link, pf + Rf @ np.asarray(point, dtype=float)

    def has_frame(self, frame: str) -> bool:
        return frame in self._index["link_index"] or frame in self._index["frames"]

    def with_base(self, xyz: Sequence[float], rpy: Sequence[float] | None = None) -> "ChainDescription":
        return ChainDescription(
            self.name,
            self.links,
            self.joints,
            self.frames,
            tuple(float(v) for v in xyz),
            self.base_rpy if rpy is None else tuple(float(v) for v in rpy),
        )


def _validate(chain: ChainDescription) -> dict:
    names: set[str] = set()
    for item in (*chain.links, *chain.joints, *chain.frames):
        if item.name in names:
            raise ChainError(f"duplicate name {item.name!r}")
        names.add(item.name)
    if not chain.links:
        raise ChainError("chain has no links")
    link_names = {l.name for l in chain.links}
    parent_joint: dict[str, str] = {}
    for j in chain.joints:
        for role, ref in (("parent", j.parent), ("child", j.child)):
            if ref not in link_names:
                raise ChainError(f"joint {j.name!r}: unknown {role} link {ref!r}")
        if j.parent == j.child:
            raise ChainCycleError(f"joint {j.name!r} connects link {j.child!r} to itself")
        if j.child in parent_joint:
            raise ChainCycleError(
                f"link {j.child!r} is the child of both {parent_joint[j.child]!r} and {j.name!r}"
            )
        parent_joint[j.child] = j.name
        norm = math.sqrt(sum(a * a for a in j.axis))
        if abs(norm - 1.0) >= 1e-9:
            raise ChainError(f"joint {j.name!r}: axis norm {norm!r} is not 1")
        if j.damping < 0:
            raise ChainError(f"joint {j.name!r}: negative damping")
    joints = {j.name: j for j in chain.joints}
    for link in chain.links:
        seen = {link.name}
        cur = link.name
        while cur in parent_joint:
            cur = joints[parent_joint[cur]].parent
            if cur in seen:
                raise ChainCycleError(f"link {link.name!r} is its own ancestor")
            seen.add(cur)
        if link.mass < 0:
            raise ChainError(f"link {link.name!r}: negative mass")
        I = np.array(link.inertia, dtype=float).reshape(3, 3)
        if not np.allclose(I, I.T, rtol=0, atol=1e-12):
            raise ChainError(f"link {link.name!r}: inertia is not symmetric")
        if np.linalg.eigvalsh(I).min() < -1e-12:
            raise ChainError(f"link {link.name!r}: inertia is not positive semidefinite")
    roots = [l.name for l in chain.links if l.name not in parent_joint]
    if len(roots) != 1:
        raise ChainError(f"expected exactly one root link, found {roots}")
    frames = {}
    for fr in chain.frames:
        if fr.parent not in link_names:
            raise ChainError(f"frame {fr.name!r}: unknown parent link {fr.parent!r}")
        frames[fr.name] = fr

    # root first, then document order
    order = [roots[0]] + [l.name for l in chain.links if l.name != roots[0]]
    link_index = {name: k for k, name in enumerate(order)}
    topo: list[int] = []
    placed = {roots[0]}
    pending = list(range(len(chain.joints)))
    while pending:
        rest = []
        for k in pending:
            if chain.joints[k].parent in placed:
                topo.append(k)
                placed.add(chain.joints[k].child)
            else:
                rest.append(k)
        if len(rest) == len(pending):
            raise ChainCycleError("joint graph is not a tree")
        pending = rest
    return {
        "root": roots[0],
        "parent_joint": parent_joint,
        "link_index": link_index,
        "frames": frames,
        "topo": topo,
    }


# ---------------------------------------------------------------------------
# description files

_LINK_KEYS = {"mass", "com", "inertia", "xyz", "rpy"}
_JOINT_KEYS = {"parent", "child", "axis", "xyz", "rpy", "damping"}
_FRAME_KEYS = {"parent", "xyz", "rpy"}


def _check_keys(sec: Section, allowed: set[str], required: set[str]):
    for e in sec.entries:
        if e.key not in allowed:
            raise FormatError(f"unknown key {e.key!r} in {sec.kind} {sec.name}", e.line, 1)
    for key in sorted(required):
        if sec.get(key) is None:
            raise FormatError(f"{sec.kind} {sec.name}: missing required key {key!r}", sec.line, 1)


def _vec(sec: Section, key: str, default: Vec3 = ZERO3) -> Vec3:
    e = sec.get(key)
    return default if e is None else e.vector(3)


def _num(sec: Section, key: str, default: float) -> float:
    e = sec.get(key)
    return default if e is None else e.number()


def _inertia(e: Entry | None) -> tuple[float, ...]:
    if e is None:
        return (0.0,) * 9
    v = e.vector((6, 9))
    if len(v) == 9:
        return v
    ixx, ixy, ixz, iyy, iyz, izz = v
    return (ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz)


def parse_chain(text: str, name: str = "chain") -> ChainDescription:
    """Parse a chain description document.

    ``link`` sections accept ``mass``, ``com`` and ``inertia`` (six values
    ``ixx ixy ixz iyy iyz izz`` or nine row-major values); the root link may
    also carry ``xyz``/``rpy`` to place the base in the world. ``joint``
    sections need ``parent``, ``child`` and ``axis``; ``frame`` sections need
    ``parent``.

    Raises:
        FormatError: Syntax errors, annotated with line and column.
        ChainError: Structural problems (unknown references, cycles, bad axes).
    """
    links, joints, frames = [], [], []
    base_xyz, base_rpy = ZERO3, ZERO3
    placed_links = []
    for sec in parse_sections(text):
        if sec.kind == "link":
            _check_keys(sec, _LINK_KEYS, set())
            links.append(
                Link(sec.name, _num(sec, "mass", 0.0), _vec(sec, "com"), _inertia(sec.get("inertia")))
            )
            if sec.get("xyz") is not None or sec.get("rpy") is not None:
                placed_links.append(sec)
        elif sec.kind == "joint":
            _check_keys(sec, _JOINT_KEYS, {"parent", "child", "axis"})
            joints.append(
                Joint(
                    sec.name,
                    sec.get("parent").value,
                    sec.get("child").value,
                    _vec(sec, "axis"),
                    _vec(sec, "xyz"),
                    _vec(sec, "rpy"),
                    _num(sec, "damping", DEFAULT_JOINT_DAMPING),
                )
            )
        elif sec.kind == "frame":
            _check_keys(sec, _FRAME_KEYS, {"parent"})
            frames.append(Frame(sec.name, sec.get("parent").value, _vec(sec, "xyz"), _vec(sec, "rpy")))
        else:
            raise FormatError(f"unknown section kind {sec.kind!r}", sec.line, 1)
    children = {j.child for j in joints}
    for sec in placed_links:
        if sec.name in children:
            raise FormatError(
                f"link {sec.name}: only the root link may carry xyz/rpy", sec.line, 1
            )
        base_xyz, base_rpy = _vec(sec, "xyz"), _vec(sec, "rpy")
    return ChainDescription(name, tuple(links), tuple(joints), tuple(frames), base_xyz, base_rpy)


def serialize_chain(chain: ChainDescription) -> str:
    lines = [f"# chain {chain.name}"]
    for link in chain.links:
        lines.append(f"link {link.name}")
        if link.name == chain.root and (chain.base_xyz != ZERO3 or chain.base_rpy != ZERO3):
            lines.append(f"  xyz = {format_vector(chain.base_xyz)}")
            lines.append(f"  rpy = {format_vector(chain.base_rpy)}")
        if link.mass:
            lines.append(f"  mass = {format_number(link.mass)}")
        if link.com != ZERO3:
            lines.append(f"  com = {format_vector(link.com)}")
        if any(link.inertia):
            lines.append(f"  inertia = {format_vector(link.inertia)}")
    for j in chain.joints:
        lines += [
            f"joint {j.name}",
            f"  parent = {j.parent}",
            f"  child = {j.child}",
            f"  axis = {format_vector(j.axis)}",
            f"  xyz = {format_vector(j.xyz)}",
            f"  rpy = {format_vector(j.rpy)}",
            f"  damping = {format_number(j.damping)}",
        ]
    for fr in chain.frames:
        lines += [
            f"frame {fr.name}",
            f"  parent = {fr.parent}",
            f"  xyz = {format_vector(fr.xyz)}",
            f"  rpy = {format_vector(fr.rpy)}",
        ]
    return "\n".join(lines) + "\n"


def load_chain(name_or_path: str | Path) -> ChainDescription:
    """Load a shipped fixture by name (``planar3``) or a description file by path."""
    path = Path(name_or_path)
    if not path.exists():
        candidate = FIXTURE_DIR / f"{name_or_path}.chain"
        if not candidate.exists():
            raise FileNotFoundError(f"no chain fixture or file named {str(name_or_path)!r}")
        path = candidate
    return parse_chain(path.read_text(), name=path.stem)


def fixture_names() -> list[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.chain"))


# ---------------------------------------------------------------------------
# kinematics


def _q(chain: ChainDescription, q) -> np.ndarray:
    arr = np.asarray(q.q if isinstance(q, JointState) else q, dtype=float).reshape(-1)
    if arr.size != chain.n:
        raise ValueError(f"chain {chain.name!r} has {chain.n} joints, got q of size {arr.size}")
    return arr


def link_poses(chain: ChainDescription, q) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    a = chain.arrays
    return _rbd.link_poses(_q(chain, q), a.topo, a.jp, a.jc, a.axis, a.oR, a.op, a.base_R, a.base_p, a.mass.size)


def forward_kinematics(chain: ChainDescription, q, frame: str) -> Pose:
    """World pose of a named frame (or link)."""
    link, Rf, pf = chain.resolve_frame(frame)
    R, p, _, _ = link_poses(chain, q)
    return Pose(p[link] + R[link] @ pf, R[link] @ Rf)


def point_position(chain: ChainDescription, q, frame: str, local_point=ZERO3) -> np.ndarray:
    link, local = chain.local_point(frame, local_point)
    R, p, _, _ = link_poses(chain, q)
    return p[link] + R[link] @ local


def point_jacobian(chain: ChainDescription, q, frame: str, local_point=ZERO3) -> np.ndarray:
    """Translational Jacobian (3 x n) of a point fixed in ``frame``."""
    link, local = chain.local_point(frame, local_point)
    R, p, aw, ow = link_poses(chain, q)
    return _rbd.point_jacobian(link, p[link] + R[link] @ local, chain.arrays.supports, aw, ow)
