"""Warehouse simulation mechanics."""

from __future__ import annotations

import json
import random

import pytest

from helpers import fixture_path
from kgmas.errors import WorldError
from kgmas.world import (
    MobileRobotSim,
    NativeCommand,
    RoboticArmSim,
    WarehouseWorld,
)


def make_world(*, pallets=None, devices=None, stations=None, width=5, height=5):
    return WarehouseWorld(width, height, stations or {}, pallets or {},
                          devices or [])


def robot(x=0, y=0):
    return MobileRobotSim("bot", x, y)


def arm(base=(3, 2), reach=((3, 2), (2, 2))):
    return RoboticArmSim("arm", tuple(base), frozenset(tuple(c) for c in reach))


def cmd(verb, **args):
    return NativeCommand(verb, args)


def test_robot_fetch_golden_trace():
    """Hand-walked tick trace for a goto/grip/goto/release script."""
    world = make_world(stations={"S1": (1, 1)}, pallets={"P": (1, 1)},
                      devices=[robot()])
    for command in (cmd("goto_cell", cell=(1, 1)), cmd("grip"),
                    cmd("goto_cell", cell=(3, 2)), cmd("release")):
        assert world.apply("bot", command)

    seen = []
    for _ in range(7):
        (obs,) = world.step()
        seen.append((tuple(obs.payload["cell"]), obs.payload["holding"],
                     obs.payload["busy"], obs.payload["heading"]))
    assert seen == [
        ((1, 0), None, True, "E"),
        ((1, 1), None, True, "N"),
        ((1, 1), "P", True, "N"),
        ((2, 1), "P", True, "E"),
        ((3, 1), "P", True, "E"),
        ((3, 2), "P", True, "N"),
        ((3, 2), None, False, "N"),
    ]
    assert world.pallet_positions() == {"P": "cell:3,2"}
    assert world.tick == 7


def test_held_pallet_rides_along():
    world = make_world(pallets={"P": (0, 0)}, devices=[robot()])
    assert world.apply("bot", cmd("grip"))
    assert world.apply("bot", cmd("goto_cell", cell=(2, 0)))
    world.step()
    world.step()
    assert world.pallet_positions() == {"P": "cell:1,0"}


def test_arm_pick_golden_trace():
    world = make_world(pallets={"P": (3, 2)}, devices=[arm()])
    assert world.apply("arm", cmd("set_joints", joints=[0.2, 0.0, 0.0, 0.0]))
    assert world.apply("arm", cmd("grip", cell=(3, 2)))
    assert world.apply("arm", cmd("release", cell=(2, 2)))

    seen = []
    for _ in range(4):
        (obs,) = world.step()
        seen.append((obs.payload["joints"][0], obs.payload["gripper"],
                     obs.payload["holding"], obs.payload["busy"]))
    assert seen == [
        (0.1, "open", None, True),
        (0.2, "open", None, True),
        (0.2, "closed", "P", True),
        (0.2, "open", None, False),
    ]
    assert world.pallet_positions() == {"P": "cell:2,2"}


def test_arm_observation_lists_reachable_pallets():
    world = make_world(pallets={"P": (3, 2), "Q": (0, 0)}, devices=[arm()])
    (obs,) = world.step()
    assert obs.payload["pallets_in_reach"] == {"P": [3, 2]}


def test_goto_current_cell_finishes_without_moving():
    world = make_world(devices=[robot(2, 2)])
    assert world.apply("bot", cmd("goto_cell", cell=(2, 2)))
    (obs,) = world.step()
    assert obs.payload["cell"] == [2, 2]
    assert not obs.payload["busy"]


def test_set_velocity_walks_and_clips_at_walls():
    world = make_world(devices=[robot(1, 0)])
    assert world.apply("bot", cmd("set_velocity", dx=-1, dy=0, ticks=3))
    cells = [tuple(world.step()[0].payload["cell"]) for _ in range(3)]
    # hits the wall on the second tick and stays put
    assert cells == [(0, 0), (0, 0), (0, 0)]
    assert not world.device_busy("bot")


@pytest.mark.parametrize("verb,args", [
    ("set_joints", {"joints": [0, 0, 0, 0]}),      # wrong kind
    ("goto_cell", {"cell": (9, 0)}),               # outside the grid
    ("goto_cell", {"cell": (1,)}),
    ("set_velocity", {"dx": 2, "dy": 0, "ticks": 1}),
    ("set_velocity", {"dx": 1, "dy": 0, "ticks": 0}),
    ("set_velocity", {"dx": 1, "dy": 0, "ticks": "3"}),
    ("grip", {"cell": (9, 9)}),
    ("fly", {}),
])
def test_robot_rejects_malformed_commands(verb, args):
    world = make_world(pallets={"P": (0, 0)}, devices=[robot()])
    assert world.apply("bot", NativeCommand(verb, args)) is False
    assert not world.device_busy("bot")


@pytest.mark.parametrize("verb,args", [
    ("goto_cell", {"cell": (1, 1)}),               # wrong kind
    ("set_joints", {"joints": [1.8, 0, 0, 0]}),    # beyond the joint limit
    ("set_joints", {"joints": [0, 0, 0]}),
    ("set_joints", {"joints": "zero"}),
])
def test_arm_rejects_malformed_commands(verb, args):
    world = make_world(devices=[arm()])
    assert world.apply("arm", NativeCommand(verb, args)) is False


def test_idle_grip_without_pallet_rejected_up_front():
    world = make_world(devices=[robot(2, 2)])
    assert world.apply("bot", cmd("grip")) is False
    assert world.apply("bot", cmd("release")) is False  # holding nothing


def test_queued_grip_judged_at_execution_time():
    """A grip queued behind other commands is validated when it runs."""
    world = make_world(pallets={"P": (1, 0)}, devices=[robot()])
    assert world.apply("bot", cmd("goto_cell", cell=(1, 0)))
    assert world.apply("bot", cmd("grip"))
    world.step()
    (obs,) = world.step()
    assert obs.payload["holding"] == "P"
    assert obs.payload["failed"] is None


def test_failed_grip_flagged_for_one_execution():
    world = make_world(devices=[robot()])
    assert world.apply("bot", cmd("goto_cell", cell=(0, 1)))
    assert world.apply("bot", cmd("grip"))  # nothing there once it arrives
    world.step()
    (obs,) = world.step()
    assert obs.payload["failed"] == "grip"
    assert obs.payload["holding"] is None
    # the flag resets as soon as the device executes again
    assert world.apply("bot", cmd("goto_cell", cell=(0, 0)))
    (obs,) = world.step()
    assert obs.payload["failed"] is None


def test_racing_grips_leave_exactly_one_holder():
    """Two devices grip the same pallet in one tick; one wins, one fails."""
    world = make_world(pallets={"P": (3, 2)},
                      devices=[robot(3, 2), arm()])
    assert world.apply("bot", cmd("grip"))
    assert world.apply("arm", cmd("grip", cell=(3, 2)))
    by_id = {o.device_id: o.payload for o in world.step()}
    # devices execute in id order, so the arm reaches the pallet first
    assert by_id["arm"]["holding"] == "P"
    assert by_id["bot"]["holding"] is None
    assert by_id["bot"]["failed"] == "grip"
    assert world.pallet_positions() == {"P": "cell:3,2"}


def test_unknown_device_raises():
    world = make_world(devices=[robot()])
    with pytest.raises(WorldError):
        world.apply("ghost", cmd("grip"))


def test_same_script_same_observations():
    def run():
        world = WarehouseWorld.from_file(fixture_path("warehouse_world.json"))
        world.apply("turtlebot", cmd("goto_cell", cell=(1, 1)))
        world.apply("turtlebot", cmd("grip"))
        world.apply("turtlebot", cmd("goto_cell", cell=(3, 2)))
        world.apply("turtlebot", cmd("release"))
        stream = []
        for _ in range(12):
            stream.extend((o.device_id, o.tick, o.payload) for o in world.step())
        return stream

    assert run() == run()


def test_pallet_conservation_under_random_commands():
    """No command sequence may duplicate or lose a pallet."""
    rng = random.Random(7)
    world = make_world(pallets={"P1": (0, 0), "P2": (1, 1), "P3": (4, 4)},
                      devices=[robot(), arm(base=(1, 1),
                                            reach=((1, 1), (0, 1), (2, 1)))])
    pool = [cmd("grip"), cmd("release"), cmd("goto_cell", cell=(1, 1)),
            cmd("goto_cell", cell=(0, 0)), cmd("set_velocity", dx=1, dy=0, ticks=2),
            cmd("grip", cell=(1, 1)), cmd("release", cell=(0, 1)),
            cmd("set_joints", joints=[0.3, -0.3, 0.1, 0.0])]
    for _ in range(150):
        target = rng.choice(("bot", "arm"))
        choice = rng.choice(pool)
        world.apply(target, NativeCommand(choice.verb, dict(choice.args)))
        world.step()
        positions = world.pallet_positions()
        assert sorted(positions) == ["P1", "P2", "P3"]
        held = [d.holding for d in world.devices.values() if d.holding]
        assert len(held) == len(set(held))
        for device in world.devices.values():
            assert world.in_grid(device.cell)


# -- fixture loading --------------------------------------------------------


def test_fixture_round_trip():
    world = WarehouseWorld.from_file(fixture_path("warehouse_world.json"))
    assert world.width == 6 and world.height == 4
    assert world.station_cell("P1") == (1, 1)
    assert world.pallet_positions() == {"Pallet1": "P1"}
    assert sorted(world.devices) == ["roboticarm", "turtlebot"]
    assert world.position_literal((4, 2)) == "P2"
    assert world.parse_position("cell:3,2") == (3, 2)
    assert world.parse_position("P1") == (1, 1)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("grid"),
    lambda d: d["pallets"].update({"X": "Nowhere"}),
    lambda d: d["devices"]["turtlebot"].update({"kind": "drone"}),
    lambda d: d["stations"].update({"P3": [99, 0]}),
    lambda d: d["stations"].update({"P3": [1, 1]}),
])
def test_bad_fixture_documents_raise(mutate):
    with open(fixture_path("warehouse_world.json"), encoding="utf-8") as fh:
        doc = json.load(fh)
    mutate(doc)
    with pytest.raises(WorldError):
        WarehouseWorld.from_fixture(doc)


def test_bad_position_literal_raises():
    world = make_world(devices=[robot()])
    for text in ("cell:1", "cell:a,b", "NoSuchStation"):
        with pytest.raises(WorldError):
            world.parse_position(text)
