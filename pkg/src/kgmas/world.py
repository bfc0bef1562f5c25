"""Simulated warehouse: grid, stations, pallets and device simulators.

The world is a discrete-time simulation. Commands are validated on
``apply`` and queued per device; ``step`` advances every queue by one
tick and returns one observation per device. Mechanics contain no
randomness, so a fixed command script always produces the same
observation stream; the fixture seed is recorded for provenance.

Movement is one cell per tick. Arm joints move at most 0.1 rad per
tick per joint. A pallet is always in exactly one place: on a cell or
held by one device.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .errors import WorldError

JOINT_STEP = 0.1
JOINT_LIMIT = 1.57
HEADINGS = {(1, 0): "E", (-1, 0): "W", (0, 1): "N", (0, -1): "S"}

KIND_MOBILE_ROBOT = "mobile_robot"
KIND_ROBOTIC_ARM = "robotic_arm"

_VERBS = {
    KIND_MOBILE_ROBOT: {"set_velocity", "goto_cell", "grip", "release"},
    KIND_ROBOTIC_ARM: {"set_joints", "grip", "release"},
}


@dataclass
class NativeCommand:
    """A device-level instruction: verb plus argument map."""

    verb: str
    args: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Observation:
    """What one device reports after a tick."""

    device_id: str
    tick: int
    payload: dict


@dataclass
class MobileRobotSim:
    device_id: str
    x: int
    y: int
    heading: str = "E"
    holding: str | None = None

    kind = KIND_MOBILE_ROBOT

    @property
    def cell(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass
class RoboticArmSim:
    device_id: str
    base: tuple[int, int]
    reach: frozenset[tuple[int, int]]
    joints: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    gripper: str = "open"
    holding: str | None = None

    kind = KIND_ROBOTIC_ARM

    @property
    def cell(self) -> tuple[int, int]:
        return self.base


class WarehouseWorld:
    """Grid world with stations, pallets and commandable devices."""

    def __init__(self, width: int, height: int, stations: dict[str, tuple[int, int]],
                 pallets: dict[str, tuple[int, int]], devices: list, seed: int = 0):
        if width < 1 or height < 1:
            raise WorldError("grid must be at least 1x1")
        self.width = width
        self.height = height
        self.stations = dict(stations)
        self.seed = seed
        self.tick = 0
        by_cell: dict[tuple[int, int], str] = {}
        for label, cell in self.stations.items():
            cell = tuple(cell)
            if not self.in_grid(cell):
                raise WorldError(f"station {label} outside the grid")
            if cell in by_cell:
                raise WorldError(f"stations {by_cell[cell]} and {label} share a cell")
            by_cell[cell] = label
            self.stations[label] = cell
        self._station_by_cell = by_cell
        # pallet location: ("cell", (x, y)) or ("held", device_id)
        self.pallet_locations: dict[str, tuple] = {}
        for pallet_id, cell in pallets.items():
            cell = tuple(cell)
            if not self.in_grid(cell):
                raise WorldError(f"pallet {pallet_id} outside the grid")
            self.pallet_locations[pallet_id] = ("cell", cell)
        self.devices: dict[str, object] = {}
        for device in devices:
            if device.device_id in self.devices:
                raise WorldError(f"duplicate device id {device.device_id}")
            self.devices[device.device_id] = device
        self._queues: dict[str, deque] = {d: deque() for d in self.devices}
        self._failures: dict[str, str | None] = {d: None for d in self.devices}

    # -- fixture loading --------------------------------------------------

    @classmethod
    def from_fixture(cls, doc: dict) -> "WarehouseWorld":
        try:
            grid = doc["grid"]
            stations = {label: tuple(cell)
                        for label, cell in doc.get("stations", {}).items()}
            pallets = {}
            for pallet_id, where in doc.get("pallets", {}).items():
                if isinstance(where, str):
                    if where not in stations:
                        raise WorldError(f"pallet {pallet_id} at unknown "
                                         f"station {where!r}")
                    pallets[pallet_id] = stations[where]
                else:
                    pallets[pallet_id] = tuple(where)
            devices = []
            for device_id, spec in sorted(doc.get("devices", {}).items()):
                kind = spec["kind"]
                if kind == KIND_MOBILE_ROBOT:
                    x, y = spec["start"]
                    devices.append(MobileRobotSim(device_id, x, y))
                elif kind == KIND_ROBOTIC_ARM:
                    reach = frozenset(tuple(c) for c in spec["reach"])
                    arm = RoboticArmSim(device_id, tuple(spec["base"]), reach,
                                        list(spec.get("joints", [0, 0, 0, 0])))
                    devices.append(arm)
                else:
                    raise WorldError(f"unknown device kind {kind!r}")
            return cls(grid["width"], grid["height"], stations, pallets,
                       devices, seed=doc.get("seed", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise WorldError(f"bad world fixture: {exc}") from exc

    @classmethod
    def from_file(cls, path: str) -> "WarehouseWorld":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise WorldError(f"world fixture is not valid JSON: {exc}") from exc
        return cls.from_fixture(doc)

    # -- geometry helpers -------------------------------------------------

    def in_grid(self, cell: tuple[int, int]) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def station_cell(self, label: str) -> tuple[int, int]:
        if label not in self.stations:
            raise WorldError(f"unknown station {label!r}")
        return self.stations[label]

    def position_literal(self, cell: tuple[int, int]) -> str:
        """Station label if the cell hosts one, else ``cell:x,y``."""
        label = self._station_by_cell.get(tuple(cell))
        return label if label is not None else f"cell:{cell[0]},{cell[1]}"

    def parse_position(self, text: str) -> tuple[int, int]:
        if text in self.stations:
            return self.stations[text]
        if text.startswith("cell:"):
            try:
                x, y = (int(p) for p in text[5:].split(","))
            except ValueError as exc:
                raise WorldError(f"bad position literal {text!r}") from exc
            return (x, y)
        raise WorldError(f"bad position literal {text!r}")

    def device_cell(self, device_id: str) -> tuple[int, int]:
        return self.devices[device_id].cell

    def pallet_positions(self) -> dict[str, str]:
        """Pallet id to position literal; held pallets ride their holder."""
        out = {}
        for pallet_id, location in sorted(self.pallet_locations.items()):
            if location[0] == "cell":
                out[pallet_id] = self.position_literal(location[1])
            else:
                out[pallet_id] = self.position_literal(self.device_cell(location[1]))
        return out

    def _pallet_on_cell(self, cell: tuple[int, int]) -> str | None:
        for pallet_id, location in sorted(self.pallet_locations.items()):
            if location == ("cell", tuple(cell)):
                return pallet_id
        return None

    def device_busy(self, device_id: str) -> bool:
        return bool(self._queues[device_id])

    # -- commands ---------------------------------------------------------

    def apply(self, device_id: str, command: NativeCommand) -> bool:
        """Validate and queue a command. Returns False when rejected.

        Structural checks (verb/argument shape, grid bounds) always run.
        State-dependent preconditions for grip and release are checked
        immediately only when the device queue is empty; queued behind
        other commands they are judged at execution time instead.
        """
        if device_id not in self.devices:
            raise WorldError(f"unknown device {device_id!r}")
        device = self.devices[device_id]
        if command.verb not in _VERBS[device.kind]:
            return False
        args = command.args
        if command.verb == "goto_cell":
            cell = args.get("cell")
            if (not isinstance(cell, (tuple, list)) or len(cell) != 2
                    or not self.in_grid(tuple(cell))):
                return False
        elif command.verb == "set_velocity":
            if (args.get("dx") not in (-1, 0, 1) or args.get("dy") not in (-1, 0, 1)
                    or not isinstance(args.get("ticks"), int) or args["ticks"] < 1):
                return False
        elif command.verb == "set_joints":
            joints = args.get("joints")
            if (not isinstance(joints, (tuple, list)) or len(joints) != 4
                    or not all(isinstance(j, (int, float)) for j in joints)
                    or any(abs(j) > JOINT_LIMIT for j in joints)):
                return False
        elif command.verb in ("grip", "release"):
            cell = args.get("cell")
            if cell is not None and (not isinstance(cell, (tuple, list))
                                     or len(cell) != 2
                                     or not self.in_grid(tuple(cell))):
                return False
            if not self._queues[device_id] and not self._ready_now(device, command):
                return False
        self._queues[device_id].append(command)
        return True

    def _ready_now(self, device, command: NativeCommand) -> bool:
        cell = command.args.get("cell")
        cell = tuple(cell) if cell is not None else None
        if command.verb == "grip":
            if device.holding is not None:
                return False
            if device.kind == KIND_MOBILE_ROBOT:
                return self._pallet_on_cell(device.cell) is not None
            if device.gripper != "open":
                return False
            targets = [cell] if cell is not None else sorted(device.reach)
            return any(c in device.reach and self._pallet_on_cell(c)
                       for c in targets)
        # release
        if device.holding is None:
            return False
        if device.kind == KIND_MOBILE_ROBOT:
            return self._pallet_on_cell(device.cell) is None
        if cell is None or cell not in device.reach:
            return False
        return self._pallet_on_cell(cell) is None

    # -- time -------------------------------------------------------------

    def step(self) -> list[Observation]:
        """Advance one tick: progress every device queue, then observe."""
        self.tick += 1
        for device_id in sorted(self.devices):
            queue = self._queues[device_id]
            if queue:
                self._progress(device_id, self.devices[device_id], queue)
        return [self._observe(device_id) for device_id in sorted(self.devices)]

    def _progress(self, device_id: str, device, queue: deque):
        self._failures[device_id] = None
        command = queue[0]
        verb = command.verb
        if verb == "goto_cell":
            target = tuple(command.args["cell"])
            if device.cell == target:
                queue.popleft()
                return
            dx = 0 if device.x == target[0] else (1 if target[0] > device.x else -1)
            dy = 0
            if dx == 0:
                dy = 1 if target[1] > device.y else -1
            device.x += dx
            device.y += dy
            device.heading = HEADINGS.get((dx, dy), device.heading)
            if device.cell == target:
                queue.popleft()
        elif verb == "set_velocity":
            dx, dy = command.args["dx"], command.args["dy"]
            nx, ny = device.x + dx, device.y + dy
            if self.in_grid((nx, ny)):
                device.x, device.y = nx, ny
                device.heading = HEADINGS.get((dx, dy), device.heading)
            command.args["ticks"] -= 1
            if command.args["ticks"] <= 0:
                queue.popleft()
        elif verb == "set_joints":
            targets = command.args["joints"]
            done = True
            for i, target in enumerate(targets):
                delta = target - device.joints[i]
                if abs(delta) > JOINT_STEP:
                    device.joints[i] += JOINT_STEP if delta > 0 else -JOINT_STEP
                    done = False
                else:
                    device.joints[i] = float(target)
            if done:
                queue.popleft()
        elif verb == "grip":
            queue.popleft()
            if not self._ready_now(device, command):
                self._failures[device_id] = "grip"
                return
            if device.kind == KIND_MOBILE_ROBOT:
                pallet_id = self._pallet_on_cell(device.cell)
            else:
                cell = command.args.get("cell")
                cells = [tuple(cell)] if cell is not None else sorted(device.reach)
                pallet_id = next(p for p in (self._pallet_on_cell(c) for c in cells)
                                 if p is not None)
                device.gripper = "closed"
            device.holding = pallet_id
            self.pallet_locations[pallet_id] = ("held", device_id)
        elif verb == "release":
            queue.popleft()
            if not self._ready_now(device, command):
                self._failures[device_id] = "release"
                return
            cell = command.args.get("cell")
            target = tuple(cell) if cell is not None else device.cell
            self.pallet_locations[device.holding] = ("cell", target)
            device.holding = None
            if device.kind == KIND_ROBOTIC_ARM:
                device.gripper = "open"

    def _observe(self, device_id: str) -> Observation:
        device = self.devices[device_id]
        payload = {
            "kind": device.kind,
            "busy": self.device_busy(device_id),
            "holding": device.holding,
            "failed": self._failures[device_id],
        }
        if device.kind == KIND_MOBILE_ROBOT:
            payload["cell"] = [device.x, device.y]
            payload["heading"] = device.heading
        else:
            payload["joints"] = [round(j, 6) for j in device.joints]
            payload["gripper"] = device.gripper
            payload["pallets_in_reach"] = {
                pallet_id: list(location[1])
                for pallet_id, location in sorted(self.pallet_locations.items())
                if location[0] == "cell" and location[1] in device.reach
            }
        return Observation(device_id, self.tick, payload)
