import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from vmrock.chain import parse_chain


def pendulum_text(mass=2.0, length=0.5, axis="1 0 0", damping=0.0, inertia="0 0 0 0 0 0"):
    """Point-mass pendulum hanging along -z at q = 0, rotating about ``axis``."""
    return f"""
link base
link bob
  mass = {mass}
  com = 0 0 {-length}
  inertia = {inertia}
joint swing
  parent = base
  child = bob
  axis = {axis}
  damping = {damping}
frame tip
  parent = bob
  xyz = 0 0 {-length}
"""


@pytest.fixture
def pendulum():
    return parse_chain(pendulum_text(), name="pendulum")


def homogeneous(xyz, rpy=(0, 0, 0)):
    T = np.eye(4)
    T[:3, :3] = Rotation.from_euler("xyz", rpy).as_matrix()
    T[:3, 3] = xyz
    return T


def axis_rotation(axis, angle):
    T = np.eye(4)
    T[:3, :3] = Rotation.from_rotvec(np.asarray(axis, dtype=float) / np.linalg.norm(axis) * angle).as_matrix()
    return T


def oracle_frame_transform(chain, q, frame):
    """World transform of a frame by walking joints from the root with 4x4 matrices."""
    by_child = {j.child: (k, j) for k, j in enumerate(chain.joints)}
    frames = {f.name: f for f in chain.frames}
    if frame in frames:
        link, tail = frames[frame].parent, homogeneous(frames[frame].xyz, frames[frame].rpy)
    else:
        link, tail = frame, np.eye(4)
    path = []
    while link in by_child:
        k, j = by_child[link]
        path.append((k, j))
        link = j.parent
    T = homogeneous(chain.base_xyz, chain.base_rpy)
    for k, j in reversed(path):
        T = T @ homogeneous(j.xyz, j.rpy) @ axis_rotation(j.axis, q[k])
    return T @ tail


# acceptance results: criterion number -> list of (check, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, check: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
    print(f"criterion {criterion} {check}: {'PASS' if passed else 'FAIL'} ({detail})")
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        ok = all(p for _, p, _ in checks)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
        for name, passed, detail in checks:
            tr.write_line(f"    {'ok  ' if passed else 'FAIL'} {name}: {detail}")
