"""Couples an agent to its simulated device over a transport.

The connection component owns the device-facing side of an asset's channels.
It accepts abstract capability invocations, translates them into native
command sequences, feeds them to the world one at a time, and publishes the
resulting observations back on the asset's outbound channels.  It also
mirrors device state into the data graph so the knowledge graph stays a
faithful replica of the world.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .acl import canonical_json
from .errors import NoResponderError, TransportError, ValidationError
from .rami import AgentBlueprint
from .store import NamedGraphStore
from .terms import Iri, Literal
from .transports import Adapter, TransportKind
from .vocab import (
    AT_POSITION,
    HAS_GRIPPER_STATE,
    HAS_JOINT_STATES,
    HAS_STATUS,
    HOLDS,
    STATUS_BUSY,
    STATUS_IDLE,
    kgmas,
)
from .world import (
    KIND_MOBILE_ROBOT,
    KIND_ROBOTIC_ARM,
    NativeCommand,
    Observation,
    WarehouseWorld,
)

CAP_MOTION = "MotionControl"
CAP_GRIPPER = "GripperControl"

# Fixed joint postures used when a pick or place is requested abstractly.
PICK_POSTURE = [0.3, 0.2, -0.2, 0.1]
PLACE_POSTURE = [-0.3, 0.1, 0.2, 0.0]


def _parse_cell(value, world: WarehouseWorld) -> tuple[int, int]:
    if isinstance(value, str):
        return world.parse_position(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return int(value[0]), int(value[1])
    raise ValidationError(f"cannot interpret {value!r} as a cell")


def translate(capability: str, params: dict, device_kind: str,
              world: WarehouseWorld) -> list[NativeCommand]:
    """Expand an abstract capability call into native device commands.

    MotionControl maps onto mobile-robot navigation; with both endpoints
    given it becomes a full fetch-and-carry sequence.  GripperControl maps
    onto the arm's pick-and-place posture cycle.
    """
    if capability == CAP_MOTION:
        if device_kind != KIND_MOBILE_ROBOT:
            raise ValidationError(f"{capability} requires a mobile robot")
        if "from" in params and "to" in params:
            src = _parse_cell(params["from"], world)
            dst = _parse_cell(params["to"], world)
            return [
                NativeCommand("goto_cell", {"cell": list(src)}),
                NativeCommand("grip", {}),
                NativeCommand("goto_cell", {"cell": list(dst)}),
                NativeCommand("release", {}),
            ]
        if "to" in params:
            dst = _parse_cell(params["to"], world)
            return [NativeCommand("goto_cell", {"cell": list(dst)})]
        raise ValidationError(f"{capability} needs a destination")
    if capability == CAP_GRIPPER:
        if device_kind != KIND_ROBOTIC_ARM:
            raise ValidationError(f"{capability} requires a robotic arm")
        if params.get("op") == "release":
            return [NativeCommand("release", {})]
        if "to" in params:
            dst = _parse_cell(params["to"], world)
            return [
                NativeCommand("set_joints", {"joints": PICK_POSTURE}),
                NativeCommand("grip", {}),
                NativeCommand("set_joints", {"joints": PLACE_POSTURE}),
                NativeCommand("release", {"cell": list(dst)}),
            ]
        raise ValidationError(f"{capability} needs a target")
    raise ValidationError(f"unknown capability {capability!r}")


@dataclass
class _Batch:
    command_id: int
    capability: str
    pending: deque = field(default_factory=deque)


class ConnectionComponent:
    """Device-side endpoint of an asset's channels.

    One instance serves one asset.  Commands arrive as JSON payloads of the
    shape ``{"op": "invoke", "capability": ..., "params": ..., "id": N}``;
    progress is reported through observation payloads carrying ``done_id``
    or ``failed_id`` markers that echo the invocation id.
    """

    def __init__(self, asset_id: str, blueprint: AgentBlueprint,
                 adapter: Adapter, world: WarehouseWorld,
                 store: NamedGraphStore, data_graph: str):
        self.asset_id = asset_id
        self.blueprint = blueprint
        self.adapter = adapter
        self.world = world
        self.store = store
        self.data_graph = data_graph
        self.device_id = asset_id if asset_id in world.devices else None
        self._batch: _Batch | None = None
        self._active: NativeCommand | None = None
        self._done_id: int | None = None
        self._failed_id: int | None = None
        self._error: str | None = None
        self._last_payload: dict | None = None
        self._command_topics = [c.topic for c in blueprint.channels
                                if c.direction == "subscribes"]
        self._obs_topics = [c.topic for c in blueprint.channels
                            if c.direction == "publishes"]
        self._closed = False
        self._wire()

    # -- transport wiring --------------------------------------------------

    def _wire(self) -> None:
        if self.adapter.kind is TransportKind.REQUEST_RESPONSE:
            for topic in self._command_topics:
                self.adapter.respond(topic, self._serve_command)
            for topic in self._obs_topics:
                self.adapter.respond(topic, self._serve_observation)
        else:
            for topic in self._command_topics:
                self.adapter.subscribe(topic, self._on_command_text)

    def _serve_command(self, text: str) -> str:
        self._on_command_text(text)
        return canonical_json({"status": "accepted"})

    def _serve_observation(self, text: str) -> str:
        if self._last_payload is None:
            return canonical_json({})
        return canonical_json(self._last_payload)

    def _on_command_text(self, text: str) -> None:
        try:
            payload = json.loads(text)
        except json.JSONDecodeError:
            return
        if not isinstance(payload, dict) or payload.get("op") != "invoke":
            return
        self._begin_batch(payload)

    # -- command lifecycle -------------------------------------------------

    def _begin_batch(self, payload: dict) -> None:
        command_id = int(payload.get("id", 0))
        capability = str(payload.get("capability", ""))
        params = payload.get("params") or {}
        if self._batch is not None or self._active is not None:
            # Refuse the newcomer without disturbing the batch in flight.
            self._failed_id = command_id
            self._error = "device busy"
            return
        if self.device_id is None:
            self._fail(command_id, "no device attached")
            return
        kind = self.world.devices[self.device_id].kind
        try:
            natives = translate(capability, params, kind, self.world)
        except ValidationError as exc:
            self._fail(command_id, str(exc))
            return
        self._done_id = None
        self._failed_id = None
        self._error = None
        self._batch = _Batch(command_id, capability, deque(natives))

    def _fail(self, command_id: int, error: str) -> None:
        self._batch = None
        self._active = None
        self._failed_id = command_id
        self._error = error

    def _gate_open(self, command: NativeCommand) -> bool:
        # An arm only closes its gripper once a pallet is actually sensed in
        # reach; until then the grip stays queued rather than failing.
        if command.verb != "grip" or self.device_id is None:
            return True
        if self.world.devices[self.device_id].kind != KIND_ROBOTIC_ARM:
            return True
        if self._last_payload is None:
            return False
        return bool(self._last_payload.get("pallets_in_reach"))

    def dispatch(self) -> None:
        """Feed the next native command to the world if the device is free."""
        if self._closed or self._batch is None or self._active is not None:
            return
        if not self._batch.pending:
            return
        head = self._batch.pending[0]
        if not self._gate_open(head):
            return
        self._batch.pending.popleft()
        if not self.world.apply(self.device_id, head):
            self._fail(self._batch.command_id, f"{head.verb} rejected")
            return
        self._active = head

    def observe(self, observation: Observation) -> None:
        """Digest a world observation, then publish and mirror it."""
        if self._closed:
            return
        payload = dict(observation.payload)
        if self._active is not None and not payload["busy"]:
            failed = payload.get("failed")
            batch = self._batch
            self._active = None
            if failed is not None and batch is not None:
                self._fail(batch.command_id, f"{failed} failed")
            elif batch is not None and not batch.pending:
                self._done_id = batch.command_id
                self._batch = None
        payload["tick"] = observation.tick
        payload["device"] = observation.device_id
        payload["done_id"] = self._done_id
        payload["failed_id"] = self._failed_id
        if self._error is not None:
            payload["error"] = self._error
        payload["busy"] = payload["busy"] or self._batch is not None
        self._last_payload = payload
        self._publish(payload)
        self._write_state(payload)

    def _publish(self, payload: dict) -> None:
        if self.adapter.kind is TransportKind.REQUEST_RESPONSE:
            return  # served on demand through the observation responder
        text = canonical_json(payload)
        for topic in self._obs_topics:
            self.adapter.publish(topic, text)

    # -- graph mirroring ---------------------------------------------------

    def _write_state(self, payload: dict) -> None:
        if self.device_id is None:
            return
        asset = kgmas(self.blueprint.asset_id.local_name)
        device = self.world.devices[self.device_id]
        status = STATUS_BUSY if payload["busy"] else STATUS_IDLE
        facts: dict[Iri, list] = {
            HAS_STATUS: [Literal(status)],
            AT_POSITION: [Literal(self.world.position_literal(device.cell))],
            HOLDS: [kgmas(device.holding)] if device.holding else [],
        }
        if device.kind == KIND_ROBOTIC_ARM:
            joints = ",".join(f"{round(j, 6):g}" for j in device.joints)
            facts[HAS_JOINT_STATES] = [Literal(joints)]
            facts[HAS_GRIPPER_STATE] = [Literal(device.gripper)]
        self.store.replace(self.data_graph, asset, facts)

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self.adapter.close()


class AgentChannel:
    """Agent-side view of the same channels: send commands, read sensors."""

    def __init__(self, blueprint: AgentBlueprint, adapter: Adapter):
        self.blueprint = blueprint
        self.adapter = adapter
        self._command_topics = [c.topic for c in blueprint.channels
                                if c.direction == "subscribes"]
        self._obs_topics = [c.topic for c in blueprint.channels
                            if c.direction == "publishes"]
        self._cached: dict | None = None
        self._closed = False
        if self.adapter.kind is not TransportKind.REQUEST_RESPONSE:
            for topic in self._obs_topics:
                self.adapter.subscribe(topic, self._on_observation_text)

    def _on_observation_text(self, text: str) -> None:
        try:
            payload = json.loads(text)
        except json.JSONDecodeError:
            return
        if isinstance(payload, dict):
            self._cached = payload

    def send_command(self, payload: dict) -> None:
        if self._closed or not self._command_topics:
            raise TransportError("no command channel")
        text = canonical_json(payload)
        topic = self._command_topics[0]
        if self.adapter.kind is TransportKind.REQUEST_RESPONSE:
            try:
                self.adapter.request(topic, text)
            except NoResponderError:
                raise TransportError(f"no device listening on {topic}")
        else:
            self.adapter.publish(topic, text)

    def latest_observation(self) -> dict | None:
        if self._closed:
            return None
        if self.adapter.kind is TransportKind.REQUEST_RESPONSE:
            for topic in self._obs_topics:
                try:
                    text = self.adapter.request(topic, canonical_json({"poll": True}))
                except NoResponderError:
                    continue
                try:
                    payload = json.loads(text)
                except json.JSONDecodeError:
                    continue
                if isinstance(payload, dict) and payload:
                    self._cached = payload
            return self._cached
        return self._cached

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self.adapter.close()
