import math

import pytest

from vmrock.environment import PresetError
from vmrock.rocking import RockingConfig
from vmrock.scenario import Scenario, load_scenario, parse_scenario, shipped_scenarios
from vmrock.textfmt import FormatError

SHIPPED = [
    "a1_uniform", "a2_fast", "a2_slow", "adapt_carrot", "adapt_carrot_off",
    "b_robustness", "c_sciurus", "food_removal", "slices_5x3mm",
]  # fmt: skip


def test_shipped_list():
    assert shipped_scenarios() == sorted(SHIPPED)


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_scenarios_validate(name):
    sc = load_scenario(name)
    assert sc.name == name
    cfg = sc.sim_config()
    assert cfg.duration > 0 and cfg.dt == 0.001 and cfg.substeps == 10


def test_parse_sections_and_types():
    sc = parse_scenario(
        """
[plant]
  chain = spatial6
  ik_guess = 0 -0.5 1.2 0 -0.7 0
[controller]
  k2 = 120
  adapt = true
  slices = 4
[environment]
  knife = knife-2
  food = carrot
  food_until = inf
  hardness = 20 4 30 1
[run]
  duration = 2.5
  seed = 9
"""
    )
    assert sc.plant.chain == "spatial6" and len(sc.plant.ik_guess) == 6
    assert sc.controller.k2 == 120 and sc.controller.adapt is True and sc.controller.slices == 4
    assert sc.environment.food_until == math.inf and sc.environment.hardness == (20, 4, 30, 1)
    assert sc.run.duration == 2.5 and sc.run.seed == 9
    assert isinstance(sc.controller, RockingConfig)


@pytest.mark.parametrize(
    "text",
    [
        "[plant]\n  chian = planar3\n",
        "[physics]\n  g = 9.81\n",
        "[run]\n  seed = 1.5\n",
        "[run]\n  duration = 1\n[run]\n  seed = 2\n",
        "[controller]\n  delta1 = 0\n",
        "[controller]\n  k1 = soft\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(FormatError):
        parse_scenario(text)


def test_unknown_presets_rejected():
    with pytest.raises(PresetError):
        Scenario().with_overrides(knife="cleaver").validate()
    with pytest.raises(PresetError):
        Scenario().with_overrides(food="tomato").validate()
    with pytest.raises(FileNotFoundError):
        Scenario().with_overrides(chain="octopus").validate()
    with pytest.raises(FileNotFoundError):
        load_scenario("no_such_scenario")


def test_overrides_route_to_sections():
    sc = load_scenario("a1_uniform").with_overrides(k2=99.0, board_height=0.07, duration=1.0, chain="spatial6")
    assert sc.controller.k2 == 99.0
    assert sc.environment.board_height == 0.07
    assert sc.run.duration == 1.0
    assert sc.plant.chain == "spatial6"
    with pytest.raises(KeyError):
        sc.with_overrides(warp=1)


def test_food_state_is_fresh_per_config():
    sc = load_scenario("slices_5x3mm")
    a, b = sc.sim_config(), sc.sim_config()
    assert a.food is not b.food
    a.food.set_depth(0, 1.0)
    assert b.food.depth(0) == 0.0
