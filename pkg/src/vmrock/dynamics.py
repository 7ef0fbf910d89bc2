"""Rigid-body dynamics of revolute chains and the fixed-step plant integrator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _rbd
from .chain import ChainDescription, JointState, link_poses

GRAVITY = np.array([0.0, 0.0, -9.81])


class SolveError(RuntimeError):
    """The mass matrix could not be factorized (ill-conditioned chain)."""


@dataclass(frozen=True)
class PlantState:
    joints: JointState
    time: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.time):
            raise ValueError("time must be finite")

    @property
    def q(self) -> np.ndarray:
        return self.joints.q

    @property
    def qdot(self) -> np.ndarray:
        return self.joints.qdot


@dataclass(frozen=True)
class Attachment:
    frame: str
    local_point: tuple[float, float, float]
    force: tuple[float, float, float]


@dataclass(frozen=True)
class ExternalPort:
    """World-frame forces applied at points fixed on the chain."""

    attachments: tuple[Attachment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for a in self.attachments:
            if not np.all(np.isfinite(a.force)):
                raise ValueError(f"non-finite port force at {a.frame!r}")

    @classmethod
    def from_forces(cls, items: Sequence[tuple[str, Sequence[float], Sequence[float]]]) -> "ExternalPort":
        return cls(tuple(Attachment(f, tuple(map(float, p)), tuple(map(float, F))) for f, p, F in items))

    def joint_torque(self, chain: ChainDescription, q) -> np.ndarray:
        R, p, aw, ow = link_poses(chain, q)
        tau = np.zeros(chain.n)
        for a in self.attachments:
            link, local = chain.local_point(a.frame, a.local_point)
            J = _rbd.point_jacobian(link, p[link] + R[link] @ local, chain.arrays.supports, aw, ow)
            tau += J.T @ np.asarray(a.force)
        return tau


def _kin(chain: ChainDescription, q):
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != chain.n:
        raise ValueError(f"chain {chain.name!r} has {chain.n} joints, got {q.size}")
    return q, link_poses(chain, q)


def mass_matrix(chain: ChainDescription, q) -> np.ndarray:
    q, (R, p, aw, ow) = _kin(chain, q)
    a = chain.arrays
    return _rbd.mass_matrix(R, p, aw, ow, a.supports, a.mass, a.com, a.inertia)


def _bias(chain, q, qdot, gravity):
    q, (R, p, aw, ow) = _kin(chain, q)
    qdot = np.asarray(qdot, dtype=float).reshape(-1)
    a = chain.arrays
    return _rbd.bias_terms(
        qdot, np.asarray(gravity, dtype=float), a.topo, a.jp, a.jc, R, p, aw, ow, a.supports, a.mass, a.com, a.inertia
    )


def bias_forces(chain: ChainDescription, q, qdot, gravity=GRAVITY) -> np.ndarray:
    """Coriolis/centrifugal plus gravity torque, so that ``M qdd + bias = tau``."""
    cor, grav = _bias(chain, q, qdot, gravity)
    return cor + grav


def gravity_torque(chain: ChainDescription, q, gravity=GRAVITY) -> np.ndarray:
    return _bias(chain, q, np.zeros(chain.n), gravity)[1]


def kinetic_energy(chain: ChainDescription, state: PlantState) -> float:
    return _energies(chain, state.q, state.qdot, GRAVITY)[0]


def potential_energy(chain: ChainDescription, q, gravity=GRAVITY) -> float:
    """Gravitational potential relative to the ``q = 0`` configuration."""
    return _energies(chain, q, np.zeros(chain.n), gravity)[1] - _reference_potential(chain, gravity)


def mechanical_energy(chain: ChainDescription, state: PlantState, gravity=GRAVITY) -> float:
    ke, pe = _energies(chain, state.q, state.qdot, gravity)
    return ke + pe - _reference_potential(chain, gravity)


def _energies(chain, q, qdot, gravity):
    q, (R, p, aw, _) = _kin(chain, q)
    a = chain.arrays
    return _rbd.energies(
        np.asarray(qdot, dtype=float), np.asarray(gravity, dtype=float), a.topo, a.jp, a.jc, R, p, aw, a.mass, a.com, a.inertia
    )


def _reference_potential(chain, gravity):
    return _energies(chain, np.zeros(chain.n), np.zeros(chain.n), gravity)[1]


def solve_acceleration(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        qdd = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolveError(f"mass matrix solve failed: {exc}") from exc
    if not np.all(np.isfinite(qdd)):
        raise SolveError("mass matrix solve produced non-finite accelerations")
    return qdd


def step(
    chain: ChainDescription,
    state: PlantState,
    tau,
    port: ExternalPort | None = None,
    dt: float = 1e-4,
    gravity=GRAVITY,
    damping: bool = True,
) -> PlantState:
    """One semi-implicit Euler step of ``M qdd = tau + J^T f - bias - D qdot``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if tau.size != chain.n or not np.all(np.isfinite(tau)):
        raise ValueError("tau must be a finite vector with one entry per joint")
    q, qd = state.q, state.qdot
    rhs = tau - bias_forces(chain, q, qd, gravity)
    if damping:
        rhs = rhs - chain.arrays.damping * qd
    if port is not None:
        rhs = rhs + port.joint_torque(chain, q)
    qdd = solve_acceleration(mass_matrix(chain, q), rhs)
    qd_new = qd + qdd * dt
    return PlantState(JointState(q + qd_new * dt, qd_new), state.time + dt)
