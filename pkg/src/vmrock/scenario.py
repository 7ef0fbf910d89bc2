"""Scenario files: ``[plant] [controller] [environment] [run]`` sections of
``key = value`` pairs in the shared text format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .chain import load_chain
from .environment import BLADE_PRESETS, FOOD_PRESETS, Board, PresetError, blade_preset, food_preset
from .rocking import RockingConfig
from .simulation import SimConfig, StartPose
from .textfmt import Entry, FormatError, parse_sections

SCENARIO_DIR = Path(__file__).parent / "data" / "scenarios"


@dataclass(frozen=True)
class PlantSpec:
    chain: str = "planar3"
    frame: str = "knife"
    gravity_compensation: bool = True
    substeps: int = 10
    start_p2_y: float = 0.45
    start_p2_z: float = 0.08
    start_angle: float = 0.25
    start_yaw: float = 0.0
    ik_guess: tuple[float, ...] | None = None
    q0: tuple[float, ...] | None = None


@dataclass(frozen=True)
class EnvironmentSpec:
    knife: str = "knife-1"
    knife_points: int = 16
    board_height: float = 0.0
    board_k_n: float = 5e4
    board_c_n: float = 50.0
    board_mu_v: float = 5.0
    contact: bool = True
    food: str = "none"
    food_center_y: float = 0.5
    food_width: float = 0.03
    food_height: float = 0.02
    food_from: float = 0.0
    food_until: float = math.inf
    hardness: tuple[float, ...] = ()  # flat (time, factor) pairs
    sensor_noise: float = 0.1
    sensor_rate: float = 100.0


@dataclass(frozen=True)
class RunSpec:
    duration: float = 30.0
    dt: float = 1e-3
    seed: int = 0
    switching: bool = True
    record_every: int = 1


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    plant: PlantSpec = field(default_factory=PlantSpec)
    controller: RockingConfig = field(default_factory=RockingConfig)
    environment: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    run: RunSpec = field(default_factory=RunSpec)

    def validate(self) -> "Scenario":
        env = self.environment
        if env.knife not in BLADE_PRESETS:
            raise PresetError(f"unknown knife preset {env.knife!r}; choose from {sorted(BLADE_PRESETS)}")
        if env.food != "none" and env.food not in FOOD_PRESETS:
            raise PresetError(f"unknown food preset {env.food!r}; choose from {sorted(FOOD_PRESETS)}")
        if len(env.hardness) % 2:
            raise ValueError("hardness needs (time, factor) pairs")
        if not self.run.dt > 0 or self.run.duration < 0:
            raise ValueError("run needs dt > 0 and duration >= 0")
        if self.run.record_every < 1 or self.plant.substeps < 1:
            raise ValueError("record_every and substeps must be at least 1")
        load_chain(self.plant.chain)
        return self

    def with_overrides(self, **kw) -> "Scenario":
        """Replace fields by name in whichever section owns them."""
        sections = {"plant": self.plant, "controller": self.controller, "environment": self.environment, "run": self.run}
        updates: dict[str, dict] = {k: {} for k in sections}
        for key, value in kw.items():
            owner = next((s for s, obj in sections.items() if key in {f.name for f in fields(obj)}), None)
            if owner is None:
                raise KeyError(f"no scenario field named {key!r}")
            updates[owner][key] = value
        return replace(self, **{s: replace(sections[s], **u) for s, u in updates.items() if u})

    def sim_config(self) -> SimConfig:
        """Fresh simulation objects; food state is never shared between runs."""
        self.validate()
        p, env, run = self.plant, self.environment, self.run
        food = None
        if env.food != "none":
            pairs = list(zip(env.hardness[::2], env.hardness[1::2]))
            food = food_preset(
                env.food, env.food_center_y, env.food_width, env.food_height,
                hardness_schedule=pairs, present_from=env.food_from, present_until=env.food_until,
            )  # fmt: skip
        start = StartPose(
            p.start_p2_y, p.start_p2_z, p.start_angle, p.start_yaw,
            q0=p.q0, ik_guess=p.ik_guess,
        )  # fmt: skip
        return SimConfig(
            chain=load_chain(p.chain),
            controller=self.controller,
            blade=blade_preset(env.knife, env.knife_points),
            board=Board(env.board_height, env.board_k_n, env.board_c_n, env.board_mu_v),
            food=food,
            duration=run.duration,
            dt=run.dt,
            substeps=p.substeps,
            seed=run.seed,
            sensor_noise=env.sensor_noise,
            sensor_rate=env.sensor_rate,
            gravity_compensation=p.gravity_compensation,
            contact=env.contact,
            switching=run.switching,
            start=start,
            record_every=run.record_every,
            frame=p.frame,
        )


# ---------------------------------------------------------------------------
# parsing


def _convert(entry: Entry, default, annotation: str):
    if annotation.startswith("bool"):
        return entry.boolean()
    if annotation.startswith("int"):
        v = entry.number()
        if not v.is_integer():
            raise entry.error("expected an integer")
        return int(v)
    if annotation.startswith("str"):
        return entry.value
    if "tuple" in annotation:
        return tuple(entry.vector(len(entry.value.split())))
    if entry.value.lower() in ("inf", "+inf"):
        return math.inf
    return entry.number()


def _section_values(sec, cls) -> dict:
    types = {f.name: (f.type if isinstance(f.type, str) else f.type.__name__) for f in fields(cls)}
    defaults = cls()
    out = {}
    for e in sec.entries:
        if e.key not in types:
            raise FormatError(f"unknown key {e.key!r} in [{sec.name}]", e.line, 1)
        ann = types[e.key]
        if ann.startswith("float | None"):
            ann = "float"
        out[e.key] = _convert(e, getattr(defaults, e.key), ann)
    return out


_SECTIONS = {"plant": PlantSpec, "controller": RockingConfig, "environment": EnvironmentSpec, "run": RunSpec}


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    parts = {}
    for sec in parse_sections(text, bracketed=True):
        if sec.name not in _SECTIONS:
            raise FormatError(f"unknown section [{sec.name}]; expected one of {sorted(_SECTIONS)}", sec.line, 1)
        if sec.name in parts:
            raise FormatError(f"duplicate section [{sec.name}]", sec.line, 1)
        try:
            parts[sec.name] = _SECTIONS[sec.name](**_section_values(sec, _SECTIONS[sec.name]))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"[{sec.name}]: {exc}", sec.line, 1) from exc
    return Scenario(name, **parts)


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by path, or a shipped one by name (``a1_uniform``)."""
    path = Path(name_or_path)
    if not path.exists():
        stem = path.name[:-4] if path.name.endswith(".scn") else path.name
        candidate = SCENARIO_DIR / f"{stem}.scn"
        if not candidate.exists():
            raise FileNotFoundError(f"no scenario file or shipped scenario named {str(name_or_path)!r}")
        path = candidate
    return parse_scenario(path.read_text(), name=path.stem)


def shipped_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.scn"))
