"""Agent generation and the two agent behaviors.

``generate_agents`` turns a validated setup graph into agent specs, one per
described asset.  ``instantiate`` brings a spec to life: a bus identity, a
transport channel to its device, a mirror entry in the data graph.  Two
behavior classes do the actual talking: :class:`GenericAgent` for assets and
:class:`KgAgent` for the mediator that owns the task state.
"""

from __future__ import annotations

import itertools
import json
import logging
import os
from dataclasses import dataclass

from .acl import AclMessage, Bus, Performative
from .connection import AgentChannel, ConnectionComponent
from .errors import (
    EventRejectedError,
    GenerationError,
    UnknownReceiverError,
)
from .protocol import (
    COMPLETED,
    FAILED,
    IN_PROGRESS,
    PERFORM_ACTION,
    SEND_REQUEST,
    ProtocolDefinition,
    TaskState,
    advance_query_step,
    kg_handle_request,
    kg_next_action,
    mark_failed,
    record_event,
    write_task_state,
)
from .rami import AgentBlueprint, Channel, CommunicationBinding, extract_blueprint, list_assets, validate_setup
from .store import NamedGraphStore
from .terms import Iri, Literal
from .transports import Endpoint, TransportRegistry
from .vocab import (
    AT_POSITION,
    HAS_REALM,
    HAS_STATUS,
    STATUS_IDLE,
    STATUS_STOPPED,
    kgmas,
)
from .world import WarehouseWorld

log = logging.getLogger("kgmas.agents")

KG_AGENT_ID = "kg"
OPERATOR_ID = "operator"
RESERVED_IDS = frozenset({KG_AGENT_ID, OPERATOR_ID})


# -- specs ------------------------------------------------------------------


@dataclass(frozen=True)
class AgentSpec:
    """A buildable description of one asset agent."""

    agent_id: str
    blueprint: AgentBlueprint


def spec_to_dict(spec: AgentSpec) -> dict:
    bp = spec.blueprint
    return {
        "agent_id": spec.agent_id,
        "asset": bp.asset_id.value,
        "asset_kind": bp.asset_kind.value,
        "realm": bp.realm,
        "binding": {"scheme": bp.binding.scheme, "endpoint": bp.binding.endpoint},
        "channels": [
            {"topic": c.topic, "direction": c.direction,
             "message_kind": c.message_kind.value}
            for c in bp.channels
        ],
        "capabilities": [c.value for c in bp.capabilities],
        "coordination_role": bp.coordination_role.value,
    }


def spec_from_dict(data: dict) -> AgentSpec:
    blueprint = AgentBlueprint(
        asset_id=Iri(data["asset"]),
        asset_kind=Iri(data["asset_kind"]),
        realm=data["realm"],
        binding=CommunicationBinding(data["binding"]["scheme"],
                                     data["binding"]["endpoint"]),
        channels=tuple(Channel(c["topic"], c["direction"], Iri(c["message_kind"]))
                       for c in data["channels"]),
        capabilities=tuple(Iri(v) for v in data["capabilities"]),
        coordination_role=Iri(data["coordination_role"]),
    )
    return AgentSpec(agent_id=data["agent_id"], blueprint=blueprint)


def generate_agents(store: NamedGraphStore, graph_id,
                    known_schemes=None) -> list[AgentSpec]:
    """One spec per asset in the setup graph, validated first.

    An invalid setup raises :class:`GenerationError` carrying the
    validation issues, so callers can show exactly what to fix.
    """
    report = validate_setup(store, graph_id, known_schemes)
    if not report.ok:
        raise GenerationError("setup graph failed validation", list(report.issues))
    specs = []
    seen: dict[str, Iri] = {}
    for asset in list_assets(store, graph_id):
        blueprint = extract_blueprint(store, graph_id, asset)
        agent_id = blueprint.agent_id
        if agent_id in RESERVED_IDS:
            raise GenerationError(
                f"asset {asset.value} maps to reserved agent id {agent_id!r}", [])
        if agent_id in seen:
            raise GenerationError(
                f"assets {seen[agent_id].value} and {asset.value} both map to "
                f"agent id {agent_id!r}", [])
        seen[agent_id] = asset
        specs.append(AgentSpec(agent_id, blueprint))
    return sorted(specs, key=lambda s: s.agent_id)


# -- asset agents -----------------------------------------------------------


class GenericAgent:
    """Behavior shared by every asset agent.

    The agent never decides what to do on its own: task requests are turned
    into queries to the mediator, instructions from the mediator are turned
    into peer requests or device commands, and finished device commands are
    reported back as events.
    """

    def __init__(self, agent_id: str, bus: Bus,
                 channel: AgentChannel | None, mediator: str = KG_AGENT_ID):
        self.agent_id = agent_id
        self.bus = bus
        self.channel = channel
        self.mediator = mediator
        self._reply_counter = itertools.count(1)
        self._command_counter = itertools.count(1)
        self._task: dict | None = None
        self._perform: dict | None = None

    @property
    def performing(self) -> bool:
        return self._perform is not None

    def _reply_id(self) -> str:
        return f"{self.agent_id}-{next(self._reply_counter)}"

    def _send(self, performative: Performative, receiver: str, content,
              conversation: str, reply_with: str | None = None,
              in_reply_to: str | None = None) -> None:
        message = AclMessage(performative, self.agent_id, receiver, content,
                             conversation, reply_with, in_reply_to)
        try:
            self.bus.send(message)
        except UnknownReceiverError:
            log.info("%s: dropping message to absent agent %s",
                     self.agent_id, receiver)

    def _query(self, query: dict, conversation: str) -> None:
        self._send(Performative.REQUEST, self.mediator, query, conversation,
                   reply_with=self._reply_id())

    def activate(self) -> None:
        """Drain the inbox, then check on any command in flight."""
        while (message := self.bus.try_receive(self.agent_id)) is not None:
            self._handle(message)
        if self._perform is not None and self.channel is not None:
            self._poll_device()

    def _handle(self, message: AclMessage) -> None:
        content = message.content if isinstance(message.content, dict) else {}
        performative = message.performative
        if performative is Performative.REQUEST and "task" in content:
            self._task = {
                "name": content["task"],
                "params": {k: v for k, v in content.items() if k != "task"},
                "conversation": message.conversation_id,
            }
            if message.sender == OPERATOR_ID:
                query = {"query": "next_action", "task": content["task"]}
            else:
                query = {"query": "handle_request", "task": content["task"],
                         "from": message.sender}
            self._query(query, message.conversation_id)
        elif performative is Performative.INFORM and message.sender == self.mediator:
            self._follow(content, message.conversation_id)
        elif performative is Performative.CONFIRM and message.sender == self.mediator:
            if self._task is not None:
                self._query({"query": "next_action", "task": self._task["name"]},
                            message.conversation_id)
        elif performative in (Performative.REFUSE, Performative.FAILURE):
            log.info("%s: %s from %s: %s", self.agent_id, performative.value,
                     message.sender, content)
            self._perform = None
        else:
            log.debug("%s: ignoring %s from %s", self.agent_id,
                      performative.value, message.sender)

    def _follow(self, content: dict, conversation: str) -> None:
        action = content.get("action")
        if action == "send_request" and self._task is not None:
            peer = content.get("to")
            if not isinstance(peer, str) or not peer or peer == self.agent_id:
                log.info("%s: unusable peer %r in instruction", self.agent_id, peer)
                return
            request = {"task": self._task["name"], **self._task["params"]}
            self._send(Performative.REQUEST, peer, request, conversation)
        elif action == "perform":
            task_name = self._task["name"] if self._task else None
            if self.channel is None:
                self._send(Performative.FAILURE, self.mediator,
                           {"error": "no_device", "task": task_name},
                           conversation)
                return
            command_id = next(self._command_counter)
            self._perform = {
                "id": command_id,
                "report": content.get("report") or "action_completed",
                "conversation": conversation,
            }
            self.channel.send_command({
                "op": "invoke",
                "capability": content.get("capability"),
                "params": content.get("params") or {},
                "id": command_id,
            })
        elif action == "report":
            event = {"event": content.get("event")}
            if self._task is not None:
                event["task"] = self._task["name"]
            self._send(Performative.INFORM, self.mediator, event, conversation)
        elif action == "done":
            self._task = None
        # "wait" and anything unknown: stay put until spoken to again

    def _poll_device(self) -> None:
        observation = self.channel.latest_observation()
        if observation is None:
            return
        context = self._perform
        if observation.get("done_id") == context["id"]:
            self._perform = None
            content = {"event": context["report"]}
            if self._task is not None:
                content["task"] = self._task["name"]
            self._send(Performative.INFORM, self.mediator, content,
                       context["conversation"])
        elif observation.get("failed_id") == context["id"]:
            self._perform = None
            self._send(Performative.FAILURE, self.mediator,
                       {"error": observation.get("error") or "command_failed",
                        "task": self._task["name"] if self._task else None},
                       context["conversation"])


# -- the mediator -----------------------------------------------------------


class KgAgent:
    """Holds the task state and answers every coordination query.

    Assets never talk each other through their work; they ask this agent
    what to do next ("next_action"), how to treat a peer request
    ("handle_request"), and tell it when something happened (an event
    inform).  Instructions for a step are handed out once; when a step
    becomes current without its owner asking, the instruction is pushed.
    """

    def __init__(self, bus: Bus, store: NamedGraphStore, data_graph,
                 clock=None):
        self.agent_id = KG_AGENT_ID
        self.bus = bus
        bus.register(self.agent_id)
        self.store = store
        self.data_graph = data_graph
        self._clock = clock or (lambda: 0)
        self._protocols: dict[str, ProtocolDefinition] = {}
        self._tasks: dict[str, TaskState] = {}
        self._task_by_name: dict[str, str] = {}
        self._conversations: dict[str, str] = {}
        self._instructed: set[tuple[str, int]] = set()
        self._task_counter = itertools.count(1)
        self._reply_counter = itertools.count(1)

    def register_protocol(self, protocol: ProtocolDefinition) -> None:
        self._protocols[protocol.task_name] = protocol

    def create_task(self, protocol: ProtocolDefinition, params: dict,
                    conversation_id: str | None = None) -> TaskState:
        self.register_protocol(protocol)
        number = next(self._task_counter)
        task = TaskState(task_id=f"Task_{protocol.task_name}_{number}",
                         task_name=protocol.task_name,
                         protocol_id=protocol.protocol_id,
                         params={k: str(v) for k, v in params.items()})
        self._tasks[task.task_id] = task
        self._task_by_name[task.task_name] = task.task_id
        self._conversations[task.task_id] = conversation_id or f"conv-{task.task_id}"
        write_task_state(self.store, self.data_graph, task)
        return task

    def conversation_of(self, task: TaskState) -> str:
        return self._conversations[task.task_id]

    def activate(self) -> None:
        while (message := self.bus.try_receive(self.agent_id)) is not None:
            self._handle(message)

    # -- message handling --------------------------------------------------

    def _reply_id(self) -> str:
        return f"{self.agent_id}-{next(self._reply_counter)}"

    def _send(self, performative: Performative, receiver: str, content,
              conversation: str, in_reply_to: str | None = None) -> None:
        message = AclMessage(performative, self.agent_id, receiver, content,
                             conversation, None, in_reply_to)
        try:
            self.bus.send(message)
        except UnknownReceiverError:
            log.info("kg: dropping message to absent agent %s", receiver)

    def _resolve(self, content: dict) -> tuple[ProtocolDefinition, TaskState] | None:
        name = content.get("task")
        task_id = self._task_by_name.get(name) if isinstance(name, str) else None
        if task_id is None:
            open_tasks = [t for t in self._tasks.values()
                          if t.status not in (COMPLETED, FAILED)]
            if len(open_tasks) == 1:
                task_id = open_tasks[0].task_id
            else:
                return None
        task = self._tasks[task_id]
        protocol = self._protocols.get(task.task_name)
        if protocol is None:
            return None
        return protocol, task

    def _handle(self, message: AclMessage) -> None:
        content = message.content if isinstance(message.content, dict) else {}
        performative = message.performative
        resolved = self._resolve(content)
        conversation = message.conversation_id
        if performative is Performative.REQUEST:
            if resolved is None:
                self._send(Performative.REFUSE, message.sender,
                           {"reason": "unknown_task"}, conversation,
                           in_reply_to=message.reply_with)
                return
            protocol, task = resolved
            query = content.get("query")
            if query == "next_action":
                self._answer_next_action(protocol, task, message)
            elif query == "handle_request":
                self._answer_handle_request(protocol, task, message, content)
            else:
                self._send(Performative.REFUSE, message.sender,
                           {"reason": "unsupported"}, conversation,
                           in_reply_to=message.reply_with)
        elif performative is Performative.INFORM and "event" in content:
            if resolved is None:
                self._send(Performative.REFUSE, message.sender,
                           {"reason": "unknown_task"}, conversation)
                return
            protocol, task = resolved
            self._record(protocol, task, message, content)
        elif performative is Performative.FAILURE:
            if resolved is not None:
                protocol, task = resolved
                if task.status not in (COMPLETED, FAILED):
                    mark_failed(self.store, self.data_graph, task, task.index)
                    log.info("kg: task %s failed at step %d: %s",
                             task.task_id, task.index, content)
        else:
            log.debug("kg: ignoring %s from %s", performative.value,
                      message.sender)

    def _answer_next_action(self, protocol: ProtocolDefinition,
                            task: TaskState, message: AclMessage) -> None:
        role = protocol.role_of_agent(message.sender)
        if role is None:
            self._send(Performative.REFUSE, message.sender,
                       {"reason": "unknown_role"}, message.conversation_id,
                       in_reply_to=message.reply_with)
            return
        if advance_query_step(protocol, task, role):
            write_task_state(self.store, self.data_graph, task)
        answer = kg_next_action(protocol, task, role)
        if answer["action"] in ("send_request", "perform", "report"):
            self._instructed.add((task.task_id, task.index))
        self._send(Performative.INFORM, message.sender, answer,
                   message.conversation_id, in_reply_to=message.reply_with)
        self._push_scan(protocol, task)

    def _answer_handle_request(self, protocol: ProtocolDefinition,
                               task: TaskState, message: AclMessage,
                               content: dict) -> None:
        role = protocol.role_of_agent(message.sender)
        if role is None:
            self._send(Performative.REFUSE, message.sender,
                       {"reason": "unknown_role"}, message.conversation_id,
                       in_reply_to=message.reply_with)
            return
        answer = kg_handle_request(protocol, task, role, content)
        if answer["action"] == "refuse":
            self._send(Performative.REFUSE, message.sender,
                       {"reason": answer.get("reason", "refused")},
                       message.conversation_id, in_reply_to=message.reply_with)
            return
        steps = protocol.steps
        if (task.status not in (COMPLETED, FAILED) and task.index <= len(steps)):
            current = steps[task.index - 1]
            if current.kind == SEND_REQUEST and current.target_role == role:
                task.index += 1
                task.status = IN_PROGRESS
                write_task_state(self.store, self.data_graph, task)
        for step in steps[task.index - 1:]:
            if step.kind == PERFORM_ACTION and step.role == role:
                self._instructed.add((task.task_id, step.index))
                break
        self._send(Performative.INFORM, message.sender, answer,
                   message.conversation_id, in_reply_to=message.reply_with)
        self._push_scan(protocol, task)

    def _record(self, protocol: ProtocolDefinition, task: TaskState,
                message: AclMessage, content: dict) -> None:
        role = protocol.role_of_agent(message.sender)
        conversation = message.conversation_id
        if role is None:
            self._send(Performative.REFUSE, message.sender,
                       {"reason": "unknown_role"}, conversation)
            return
        event = content.get("event")
        try:
            record_event(self.store, self.data_graph, protocol, task, role,
                         event, self._clock())
        except EventRejectedError as exc:
            self._send(Performative.REFUSE, message.sender,
                       {"reason": "event_rejected", "detail": str(exc)},
                       conversation)
            return
        self._send(Performative.CONFIRM, message.sender, {"event": event},
                   conversation)
        self._push_scan(protocol, task)

    def _push_scan(self, protocol: ProtocolDefinition, task: TaskState) -> None:
        """Push the current step's instruction if nobody asked for it yet."""
        if task.status in (COMPLETED, FAILED):
            return
        steps = protocol.steps
        if task.index > len(steps):
            return
        step = steps[task.index - 1]
        if step.kind not in (SEND_REQUEST, PERFORM_ACTION):
            return
        key = (task.task_id, step.index)
        if key in self._instructed:
            return
        self._instructed.add(key)
        instruction = kg_next_action(protocol, task, step.role)
        self._send(Performative.INFORM, protocol.agent_for(step.role),
                   instruction, self._conversations[task.task_id])


# -- lifecycle --------------------------------------------------------------


@dataclass
class AgentHandle:
    spec: AgentSpec
    agent: GenericAgent
    channel: AgentChannel | None
    connection: ConnectionComponent | None
    state: str = "running"


def instantiate(spec: AgentSpec, *, bus: Bus, store: NamedGraphStore,
                data_graph, world: WarehouseWorld,
                registry: TransportRegistry,
                transport_override: str | None = None) -> AgentHandle:
    """Build the live agent for a spec.

    Registers the bus identity, opens transport adapters for both sides of
    the asset's channels, attaches the device connection when the world has
    a matching device, and mirrors the initial state into the data graph.
    """
    blueprint = spec.blueprint
    scheme = transport_override or blueprint.binding.scheme
    endpoint = Endpoint(scheme, blueprint.binding.endpoint)
    bus.register(spec.agent_id)
    connection = None
    try:
        if spec.agent_id in world.devices:
            connection = ConnectionComponent(
                spec.agent_id, blueprint, registry.resolve(endpoint),
                world, store, data_graph)
        channel = AgentChannel(blueprint, registry.resolve(endpoint))
    except Exception:
        if connection is not None:
            connection.close()
        bus.unregister(spec.agent_id)
        raise
    facts = {
        HAS_STATUS: [Literal(STATUS_IDLE)],
        HAS_REALM: [kgmas(blueprint.realm)],
    }
    if spec.agent_id in world.devices:
        cell = world.devices[spec.agent_id].cell
        facts[AT_POSITION] = [Literal(world.position_literal(cell))]
    store.replace(data_graph, blueprint.asset_id, facts)
    agent = GenericAgent(spec.agent_id, bus, channel)
    return AgentHandle(spec, agent, channel, connection)


def shutdown(handle: AgentHandle, *, bus: Bus, store: NamedGraphStore,
             data_graph) -> None:
    """Tear an agent down; safe to call more than once."""
    if handle.state == "stopped":
        return
    handle.state = "stopped"
    if handle.connection is not None:
        handle.connection.close()
    if handle.channel is not None:
        handle.channel.close()
    bus.unregister(handle.spec.agent_id)
    store.replace(data_graph, handle.spec.blueprint.asset_id,
                  {HAS_STATUS: [Literal(STATUS_STOPPED)]})


def emit_specs(specs, directory) -> list[str]:
    """Write one JSON file per spec; returns the paths written."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for spec in specs:
        path = os.path.join(directory, f"{spec.agent_id}.json")
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(spec_to_dict(spec), handle, indent=2, sort_keys=True)
            handle.write("\n")
        paths.append(path)
    return paths
