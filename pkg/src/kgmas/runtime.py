"""Single-threaded scenario driver.

Everything that moves, moves here, in a fixed order: mediator first, asset
agents by id, then device dispatch, one world tick, observation fan-out and
state mirroring.  Time is the tick counter; nothing reads a wall clock, so
two runs of the same scenario produce byte-identical traces and dumps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .acl import AclMessage, Bus, Performative
from .agents import (
    OPERATOR_ID,
    AgentHandle,
    KgAgent,
    generate_agents,
    instantiate,
    shutdown,
)
from .errors import ValidationError
from .protocol import (
    COMPLETED,
    FAILED,
    TaskState,
    check_world_consistency,
    load_protocol,
    mark_failed,
)
from .store import NamedGraphStore
from .terms import Literal
from .transports import TransportRegistry, default_registry
from .vocab import AT_POSITION, DATA_GRAPH, SETUP_GRAPH, kgmas
from .world import WarehouseWorld

log = logging.getLogger("kgmas.runtime")

TICK_MS = 100
DEFAULT_DEADLINE_MS = 2000


@dataclass
class RunResult:
    status: str
    stalled_step: int | None
    ticks: int
    conversation_id: str
    trace: list[tuple[int, AclMessage]]
    violations_per_tick: list[int]
    task: TaskState

    def skeleton(self) -> list[tuple[str, str, str]]:
        """The trace reduced to (performative, sender, receiver)."""
        return [(message.performative.value, message.sender, message.receiver)
                for _, message in self.trace]


class Scenario:
    """A wired-up system: store, world, bus, mediator and asset agents."""

    def __init__(self, store: NamedGraphStore, world: WarehouseWorld, *,
                 registry: TransportRegistry | None = None,
                 transport_overrides: dict[str, str] | None = None,
                 instantiate_only=None,
                 deadline_ms: int = DEFAULT_DEADLINE_MS,
                 setup_graph=SETUP_GRAPH, data_graph=DATA_GRAPH):
        self.store = store
        self.world = world
        self.registry = registry or default_registry()
        self.deadline_ms = deadline_ms
        self.setup_graph = setup_graph
        self.data_graph = data_graph
        self.bus = Bus()
        self.bus.register(OPERATOR_ID)
        self.kg = KgAgent(self.bus, store, data_graph,
                          clock=lambda: self.world.tick)
        specs = generate_agents(store, setup_graph,
                                known_schemes=self.registry.schemes())
        known_ids = {spec.agent_id for spec in specs}
        overrides = dict(transport_overrides or {})
        for asset_id, scheme in overrides.items():
            if asset_id not in known_ids:
                raise ValidationError(
                    f"transport override names unknown asset {asset_id!r}; "
                    f"known: {', '.join(sorted(known_ids))}")
            if scheme not in self.registry.schemes():
                raise ValidationError(
                    f"transport override uses unknown scheme {scheme!r}")
        self.handles: dict[str, AgentHandle] = {}
        for spec in specs:
            if instantiate_only is not None and spec.agent_id not in instantiate_only:
                continue
            handle = instantiate(
                spec, bus=self.bus, store=store, data_graph=data_graph,
                world=world, registry=self.registry,
                transport_override=overrides.get(spec.agent_id))
            self.handles[spec.agent_id] = handle
        self._publish_pallets()
        self._closed = False

    @classmethod
    def from_files(cls, setup_path, world_path, **kwargs) -> "Scenario":
        store = NamedGraphStore()
        with open(setup_path, encoding="utf-8") as handle:
            store.load_turtle(SETUP_GRAPH, handle.read())
        world = WarehouseWorld.from_file(world_path)
        return cls(store, world, **kwargs)

    # -- per-tick machinery ------------------------------------------------

    def _publish_pallets(self) -> None:
        for pallet_id, position in sorted(self.world.pallet_positions().items()):
            self.store.replace(self.data_graph, kgmas(pallet_id), {
                AT_POSITION: [Literal(position)],
            })

    def iterate(self) -> None:
        """One full cycle: think, act, move, sense."""
        self.kg.activate()
        for agent_id in sorted(self.handles):
            self.handles[agent_id].agent.activate()
        for agent_id in sorted(self.handles):
            connection = self.handles[agent_id].connection
            if connection is not None:
                connection.dispatch()
        observations = self.world.step()
        for observation in observations:
            handle = self.handles.get(observation.device_id)
            if handle is not None and handle.connection is not None:
                handle.connection.observe(observation)
        self._publish_pallets()

    # -- task runs ---------------------------------------------------------

    def run_task(self, task_name: str, params: dict | None = None, *,
                 deadline_ms: int | None = None,
                 max_ticks: int | None = None,
                 on_tick=None) -> RunResult:
        """Drive one task from operator request to a final status.

        A task fails when its step cursor makes no progress for a whole
        deadline window. The loop keeps going after the final status until
        the bus drains, so trailing confirmations still make the trace.
        """
        params = {k: str(v) for k, v in (params or {}).items()}
        if deadline_ms is None:
            deadline_ms = self.deadline_ms
        protocol = load_protocol(self.store, self.setup_graph, task_name)
        task = self.kg.create_task(protocol, params)
        conversation = self.kg.conversation_of(task)
        initiator = protocol.agent_for(protocol.initiator_role)
        self.bus.send(AclMessage(Performative.REQUEST, OPERATOR_ID, initiator,
                                 {"task": task.task_name, **params},
                                 conversation))
        deadline_ticks = max(0, int(deadline_ms) // TICK_MS)
        if deadline_ticks == 0:
            mark_failed(self.store, self.data_graph, task, task.index)
        start_tick = self.world.tick
        cap = max_ticks if max_ticks is not None else \
            (deadline_ticks + 1) * (len(protocol.steps) + 2) + 100
        violations: list[int] = []
        marker = (task.index, task.status)
        last_progress = self.world.tick
        while task.status not in (COMPLETED, FAILED) or not self.bus.idle():
            if self.world.tick - start_tick >= cap:
                if task.status not in (COMPLETED, FAILED):
                    mark_failed(self.store, self.data_graph, task, task.index)
                log.info("run of %s hit the tick cap", task.task_id)
                break
            self.iterate()
            violations.append(
                len(check_world_consistency(self.store, self.data_graph)))
            if on_tick is not None:
                on_tick(self)
            current = (task.index, task.status)
            if current != marker:
                marker = current
                last_progress = self.world.tick
            if task.status in (COMPLETED, FAILED):
                continue
            if self.world.tick - last_progress >= deadline_ticks:
                mark_failed(self.store, self.data_graph, task, task.index)
        return RunResult(
            status=task.status,
            stalled_step=task.failed_step,
            ticks=self.world.tick - start_tick,
            conversation_id=conversation,
            trace=self.bus.conversation_log(conversation),
            violations_per_tick=violations,
            task=task,
        )

    def close(self) -> None:
        """Stop all agents and free their transports; safe to repeat."""
        if self._closed:
            return
        self._closed = True
        for agent_id in sorted(self.handles):
            shutdown(self.handles[agent_id], bus=self.bus, store=self.store,
                     data_graph=self.data_graph)
        self.bus.unregister(self.kg.agent_id)
        self.bus.unregister(OPERATOR_ID)

    def __enter__(self) -> "Scenario":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
