"""Virtual-mechanism control of a rocking knife on simulated manipulators."""

from .chain import (
    ChainCycleError,
    ChainDescription,
    ChainError,
    JointState,
    forward_kinematics,
    load_chain,
    parse_chain,
    point_jacobian,
    serialize_chain,
)
from .dynamics import ExternalPort, PlantState, bias_forces, mass_matrix, mechanical_energy, step
from .environment import Board, BladeProfile, FoodItem, blade_preset, board_contact_forces, food_forces, food_preset
from .metrics import Trace, cut_frequency, cycle_work, segment_cycles, thickness_stats
from .rocking import RockingConfig, RockingState, adapt_stiffness, build_rocking_mechanism, update_phase
from .scenario import Scenario, load_scenario
from .simulation import SimConfig, SimResult, simulate
from .toymodel import ToyParams, poincare_convergence, toy_simulate
from .vmc import VirtualMechanism, map_to_torques, spring_force, switch_energy_jump, vmc_energy

__all__ = [
    "adapt_stiffness",
    "bias_forces",
    "blade_preset",
    "BladeProfile",
    "Board",
    "board_contact_forces",
    "build_rocking_mechanism",
    "ChainCycleError",
    "ChainDescription",
    "ChainError",
    "cut_frequency",
    "cycle_work",
    "ExternalPort",
    "food_forces",
    "food_preset",
    "FoodItem",
    "forward_kinematics",
    "JointState",
    "load_chain",
    "load_scenario",
    "map_to_torques",
    "mass_matrix",
    "mechanical_energy",
    "parse_chain",
    "PlantState",
    "poincare_convergence",
    "point_jacobian",
    "RockingConfig",
    "RockingState",
    "Scenario",
    "segment_cycles",
    "serialize_chain",
    "SimConfig",
    "SimResult",
    "simulate",
    "spring_force",
    "step",
    "switch_energy_jump",
    "thickness_stats",
    "toy_simulate",
    "ToyParams",
    "Trace",
    "update_phase",
    "VirtualMechanism",
    "vmc_energy",
]

__version__ = "0.1.0"
