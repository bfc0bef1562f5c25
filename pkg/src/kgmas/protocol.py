"""Coordination protocols stored in the knowledge graph.

A protocol is a task name, a set of roles (each requiring one
capability) and an ordered list of steps. Step kinds:

* ``query_next``: the role asks the mediator what to do; asking
  consumes the step
* ``send_request``: the role requests a peer role to act; consumed
  when the peer consults the mediator about the request
* ``perform_action``: the role exercises its capability on its device
* ``report_event``: the role informs the mediator of a named event;
  recording the event consumes it together with the perform step it
  documents

The pure functions here (next-action, handle-request, event recording,
consistency checking) hold the coordination semantics; the mediator
agent wraps them with messaging.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from . import vocab
from .errors import EventRejectedError, ProtocolError
from .store import NamedGraphStore
from .terms import Iri, Literal, Triple
from .vocab import kgmas

SEND_REQUEST = "send_request"
PERFORM_ACTION = "perform_action"
REPORT_EVENT = "report_event"
QUERY_NEXT = "query_next"

_KIND_BY_IRI = {
    vocab.KIND_SEND_REQUEST: SEND_REQUEST,
    vocab.KIND_PERFORM_ACTION: PERFORM_ACTION,
    vocab.KIND_REPORT_EVENT: REPORT_EVENT,
    vocab.KIND_QUERY_NEXT: QUERY_NEXT,
}

PENDING = "pending"
IN_PROGRESS = "in_progress"
COMPLETED = "completed"
FAILED = "failed"


@dataclass(frozen=True)
class ProtocolStep:
    index: int
    role: Iri
    kind: str
    target_role: Iri | None = None
    template: object = None


@dataclass(frozen=True)
class ProtocolDefinition:
    protocol_id: Iri
    task_name: str
    steps: tuple[ProtocolStep, ...]
    roles: dict[Iri, Iri]        # role -> required capability
    role_assets: dict[Iri, Iri]  # role -> asset bound in the setup graph

    def agent_for(self, role: Iri) -> str:
        return self.role_assets[role].local_name.lower()

    def role_of_agent(self, agent_id: str) -> Iri | None:
        for role, asset in self.role_assets.items():
            if asset.local_name.lower() == agent_id:
                return role
        return None

    @property
    def initiator_role(self) -> Iri:
        return self.steps[0].role

    def report_event_after(self, role: Iri, index: int) -> str | None:
        """Event name of the first report step for a role at or past index."""
        for step in self.steps[index - 1:]:
            if step.kind == REPORT_EVENT and step.role == role:
                return event_name_of(step)
        return None


@dataclass
class TaskState:
    """Progress of one task instance through its protocol."""

    task_id: str
    task_name: str
    protocol_id: Iri
    params: dict[str, str]
    index: int = 1
    status: str = PENDING
    failed_step: int | None = None

    @property
    def iri(self) -> Iri:
        return kgmas(self.task_id)

    @property
    def template_bindings(self) -> dict[str, str]:
        return {"task": self.task_name, **self.params}


def event_name_of(step: ProtocolStep) -> str:
    if isinstance(step.template, dict) and isinstance(step.template.get("event"), str):
        return step.template["event"]
    raise ProtocolError(f"step {step.index} has no event name in its template")


_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def substitute(template, bindings: dict[str, str]):
    """Fill ``{name}`` placeholders in every string of a JSON value.

    Unknown names are left as written so partially bound templates stay
    recognizable instead of failing.
    """
    if isinstance(template, str):
        return _PLACEHOLDER.sub(
            lambda m: str(bindings.get(m.group(1), m.group(0))), template)
    if isinstance(template, list):
        return [substitute(item, bindings) for item in template]
    if isinstance(template, dict):
        return {key: substitute(value, bindings) for key, value in template.items()}
    return template


# -- loading ---------------------------------------------------------------


def _int_of(value, what: str) -> int:
    if isinstance(value, Literal):
        try:
            return int(value.lexical)
        except ValueError:
            pass
    raise ProtocolError(f"{what} must be an integer literal")


def load_protocol(store: NamedGraphStore, graph_id, task_name: str | None = None,
                  protocol_id: Iri | None = None) -> ProtocolDefinition:
    """Read one protocol out of the setup graph and validate it.

    Checks: contiguous 1-based step indexes, step roles declared on the
    protocol, request targets declared, every role bound to exactly one
    asset that really has the role's required capability.
    """
    triples = store.triples(graph_id)
    index: dict[tuple[Iri, Iri], list] = {}
    for t in triples:
        index.setdefault((t.subject, t.predicate), []).append(t.object)

    def objects(subject, predicate):
        return sorted(index.get((subject, predicate), []),
                      key=lambda v: (isinstance(v, Literal),
                                     getattr(v, "value", "") or v.lexical))

    candidates = sorted({t.subject for t in triples if t.predicate == vocab.FOR_TASK},
                        key=lambda s: s.value)
    if protocol_id is not None:
        candidates = [c for c in candidates if c == protocol_id]
    if task_name is not None:
        candidates = [c for c in candidates
                      if any(isinstance(o, Literal) and o.lexical == task_name
                             for o in objects(c, vocab.FOR_TASK))]
    if not candidates:
        raise ProtocolError("no protocol matches the requested task")
    if len(candidates) > 1:
        names = ", ".join(c.value for c in candidates)
        raise ProtocolError(f"ambiguous protocol selection: {names}")
    protocol = candidates[0]

    tasks = [o.lexical for o in objects(protocol, vocab.FOR_TASK)
             if isinstance(o, Literal)]
    if len(tasks) != 1:
        raise ProtocolError(f"{protocol.value}: expected one task name")

    roles: dict[Iri, Iri] = {}
    role_assets: dict[Iri, Iri] = {}
    for role in objects(protocol, vocab.BINDS_ROLE):
        if not isinstance(role, Iri):
            raise ProtocolError(f"{protocol.value}: role must be an iri")
        capabilities = [c for c in objects(role, vocab.REQUIRES_CAPABILITY)
                        if isinstance(c, Iri)]
        if len(capabilities) != 1:
            raise ProtocolError(
                f"{role.value}: expected one required capability, "
                f"found {len(capabilities)}")
        roles[role] = capabilities[0]
        assets = sorted({t.subject for t in triples
                         if t.predicate == vocab.HAS_COORDINATION_ROLE
                         and t.object == role}, key=lambda s: s.value)
        if len(assets) != 1:
            raise ProtocolError(
                f"{role.value}: bound to {len(assets)} assets, expected one")
        asset = assets[0]
        if capabilities[0] not in objects(asset, vocab.HAS_CAPABILITY):
            raise ProtocolError(
                f"{asset.value}: lacks capability {capabilities[0].value} "
                f"required by {role.value}")
        role_assets[role] = asset

    steps = []
    for node in objects(protocol, vocab.HAS_STEP):
        idx = objects(node, vocab.STEP_INDEX)
        if len(idx) != 1:
            raise ProtocolError(f"{node.value}: expected one step index")
        step_index = _int_of(idx[0], f"{node.value} index")
        step_roles = objects(node, vocab.STEP_ROLE)
        if len(step_roles) != 1 or not isinstance(step_roles[0], Iri):
            raise ProtocolError(f"{node.value}: expected one step role")
        kinds = objects(node, vocab.ACTION_KIND)
        if len(kinds) != 1 or kinds[0] not in _KIND_BY_IRI:
            raise ProtocolError(f"{node.value}: unknown action kind")
        targets = objects(node, vocab.TARGET_ROLE)
        target = targets[0] if targets else None
        template = None
        templates = objects(node, vocab.CONTENT_TEMPLATE)
        if templates:
            if len(templates) != 1 or not isinstance(templates[0], Literal):
                raise ProtocolError(f"{node.value}: expected one content template")
            try:
                template = json.loads(templates[0].lexical)
            except json.JSONDecodeError as exc:
                raise ProtocolError(
                    f"{node.value}: content template is not valid JSON: "
                    f"{exc}") from exc
        steps.append(ProtocolStep(step_index, step_roles[0], _KIND_BY_IRI[kinds[0]],
                                  target, template))

    steps.sort(key=lambda s: s.index)
    if not steps:
        raise ProtocolError(f"{protocol.value}: protocol has no steps")
    for expected, step in enumerate(steps, start=1):
        if step.index != expected:
            raise ProtocolError(
                f"{protocol.value}: step indexes not contiguous, "
                f"missing index {expected}")
    for step in steps:
        if step.role not in roles:
            raise ProtocolError(
                f"step {step.index}: role {step.role.value} is not bound "
                f"by the protocol")
        if step.kind == SEND_REQUEST:
            if step.target_role is None or step.target_role not in roles:
                raise ProtocolError(
                    f"step {step.index}: request target role missing or unbound")
        if step.kind == REPORT_EVENT:
            event_name_of(step)

    return ProtocolDefinition(protocol, tasks[0], tuple(steps), roles, role_assets)


# -- mediator decision functions ------------------------------------------


def _instruction_for(protocol: ProtocolDefinition, task: TaskState,
                     step: ProtocolStep) -> dict:
    if step.kind == SEND_REQUEST:
        return {"action": "send_request",
                "to": protocol.agent_for(step.target_role),
                "task": task.task_name}
    if step.kind == PERFORM_ACTION:
        capability = protocol.roles[step.role]
        params = substitute(step.template, task.template_bindings) \
            if isinstance(step.template, dict) else dict(task.params)
        return {"action": "perform",
                "capability": capability.local_name,
                "params": params,
                "report": protocol.report_event_after(step.role, step.index)}
    if step.kind == REPORT_EVENT:
        return {"action": "report", "event": event_name_of(step)}
    return {"action": "wait"}


def kg_next_action(protocol: ProtocolDefinition, task: TaskState,
                   requester_role: Iri) -> dict:
    """What should the requesting role do now? Pure; mutates nothing.

    Query steps owned by the requester are transparent: they are the
    act of asking itself, so the answer comes from the step behind
    them. Out of turn yields ``wait``; a finished task yields ``done``.
    """
    if task.status in (COMPLETED, FAILED):
        return {"action": "done"}
    steps = protocol.steps
    i = task.index
    while (i <= len(steps) and steps[i - 1].kind == QUERY_NEXT
           and steps[i - 1].role == requester_role):
        i += 1
    if i > len(steps):
        return {"action": "done"}
    step = steps[i - 1]
    if step.role != requester_role:
        return {"action": "wait"}
    return _instruction_for(protocol, task, step)


def kg_handle_request(protocol: ProtocolDefinition, task: TaskState,
                      recipient_role: Iri, request_content: dict) -> dict:
    """How should a role handle a peer's task request? Pure.

    A request naming a different task is refused. Otherwise the role is
    told to exercise its required capability with the task parameters,
    and which event to report on completion.
    """
    if not isinstance(request_content, dict) \
            or request_content.get("task") != task.task_name:
        return {"action": "refuse", "reason": "task_mismatch"}
    if recipient_role not in protocol.roles:
        raise ProtocolError(f"unknown role {recipient_role.value}")
    return {"action": "perform",
            "capability": protocol.roles[recipient_role].local_name,
            "params": dict(task.params),
            "report": protocol.report_event_after(recipient_role, task.index)}


def _int_literal(value: int) -> Literal:
    return Literal(str(value), vocab.XSD_INTEGER)


def write_task_state(store: NamedGraphStore, graph_id, task: TaskState) -> int:
    """Mirror a task's status and step cursor into the data graph."""
    return store.replace(graph_id, task.iri, {
        vocab.TASK_NAME: [Literal(task.task_name)],
        vocab.TASK_STATUS: [Literal(task.status)],
        vocab.CURRENT_STEP_INDEX: [_int_literal(task.index)],
    })


def advance_query_step(protocol: ProtocolDefinition, task: TaskState,
                       requester_role: Iri) -> bool:
    """Consume query steps owned by the requester at the cursor.

    Returns True if the cursor moved. Completion is reached when the
    cursor passes the last step.
    """
    moved = False
    steps = protocol.steps
    while (task.status not in (COMPLETED, FAILED) and task.index <= len(steps)
           and steps[task.index - 1].kind == QUERY_NEXT
           and steps[task.index - 1].role == requester_role):
        task.index += 1
        task.status = IN_PROGRESS
        moved = True
    if moved and task.index > len(steps):
        task.status = COMPLETED
    return moved


def record_event(store: NamedGraphStore, graph_id,
                 protocol: ProtocolDefinition, task: TaskState,
                 role: Iri, event_name: str, tick: int) -> int:
    """Record a reported event and advance the task.

    The event must belong to the current step: either the current
    report step itself, or the report step paired right behind the
    current perform step of the same role. Anything else (stale
    duplicates included) is rejected without touching graph or task.
    Once only query steps remain the task completes immediately; the
    trailing queries are answered ``done`` when they arrive.
    """
    if task.status in (COMPLETED, FAILED):
        raise EventRejectedError(f"task is {task.status}")
    steps = protocol.steps
    i = task.index
    current = steps[i - 1] if i <= len(steps) else None

    def is_report(step):
        return (step is not None and step.kind == REPORT_EVENT
                and step.role == role and event_name_of(step) == event_name)

    if (current is not None and current.kind == PERFORM_ACTION
            and current.role == role
            and i < len(steps) and is_report(steps[i])):
        report_index = i + 1
    elif is_report(current):
        report_index = i
    else:
        raise EventRejectedError(
            f"event {event_name!r} from this role does not match step {i}")

    task.index = report_index + 1
    task.status = IN_PROGRESS
    if all(step.kind == QUERY_NEXT for step in steps[task.index - 1:]):
        task.index = len(steps) + 1
        task.status = COMPLETED

    event_iri = kgmas(f"{task.task_id}_event_{report_index}")
    store.atomic_update(graph_id, [], [
        Triple(event_iri, vocab.EVENT_OF_TASK, task.iri),
        Triple(event_iri, vocab.EVENT_NAME, Literal(event_name)),
        Triple(event_iri, vocab.AT_STEP, _int_literal(report_index)),
        Triple(event_iri, vocab.AT_TICK, _int_literal(tick)),
    ])
    return write_task_state(store, graph_id, task)


def mark_failed(store: NamedGraphStore, graph_id,
                task: TaskState, stalled_step: int) -> int:
    task.status = FAILED
    task.failed_step = stalled_step
    return write_task_state(store, graph_id, task)


# -- world consistency -----------------------------------------------------


@dataclass(frozen=True)
class ConsistencyViolation:
    rule: str
    first: str
    second: str
    position: str


def check_world_consistency(store: NamedGraphStore, graph_id) -> list[ConsistencyViolation]:
    """Find co-location conflicts among realm-tagged entities.

    Two physical entities on one position cannot both be real, and a
    physical entity sharing a position with a digital one means the
    mirror has drifted. Digital twins may overlap freely. Entities are
    subjects carrying both a realm and a position in the data graph.
    """
    triples = store.triples(graph_id)
    realms: dict[Iri, str] = {}
    positions: dict[Iri, list[str]] = {}
    for t in triples:
        if t.predicate == vocab.HAS_REALM:
            if t.object == vocab.REALM_PHYSICAL:
                realms[t.subject] = "physical"
            elif t.object == vocab.REALM_DIGITAL:
                realms[t.subject] = "digital"
        elif t.predicate == vocab.AT_POSITION and isinstance(t.object, Literal):
            positions.setdefault(t.subject, []).append(t.object.lexical)

    by_position: dict[str, list[tuple[str, str]]] = {}
    for entity, realm in realms.items():
        for position in positions.get(entity, []):
            by_position.setdefault(position, []).append((entity.value, realm))

    violations = []
    for position in sorted(by_position):
        entities = sorted(by_position[position])
        for a in range(len(entities)):
            for b in range(a + 1, len(entities)):
                (first, first_realm), (second, second_realm) = entities[a], entities[b]
                pair = {first_realm, second_realm}
                if pair == {"physical"}:
                    rule = "physical_colocation"
                elif pair == {"physical", "digital"}:
                    rule = "physical_digital_colocation"
                else:
                    continue
                violations.append(ConsistencyViolation(rule, first, second, position))
    return violations


# -- mechanical trace derivation ------------------------------------------


@dataclass
class _Derivation:
    protocol: ProtocolDefinition
    messages: list = field(default_factory=list)
    cursor: int = 1
    instructed: set = field(default_factory=set)
    performing: dict = field(default_factory=dict)  # agent -> step index

    def emit(self, performative: str, sender: str, receiver: str):
        self.messages.append((performative, sender, receiver))


def derive_trace_skeleton(protocol: ProtocolDefinition,
                          operator: str = "operator",
                          mediator: str = "kg") -> list[tuple[str, str, str]]:
    """Expected (performative, sender, receiver) sequence for one task run.

    Replays the coordination rules over the step list alone: agents act
    only when instructed, ask again after each confirmed report, and
    performs finish in step order. No world or transport is involved,
    which is what makes this usable as an independent check against a
    recorded trace.
    """
    d = _Derivation(protocol)
    steps = protocol.steps
    n = len(steps)

    def agent(role: Iri) -> str:
        return protocol.agent_for(role)

    def answer_query(asking_agent: str, role: Iri):
        while (d.cursor <= n and steps[d.cursor - 1].kind == QUERY_NEXT
               and steps[d.cursor - 1].role == role):
            d.cursor += 1
        if d.cursor > n:
            d.emit("inform", mediator, asking_agent)  # done
            return
        step = steps[d.cursor - 1]
        if step.role != role:
            d.emit("inform", mediator, asking_agent)  # wait
            return
        d.instructed.add(step.index)
        d.emit("inform", mediator, asking_agent)      # instruction
        execute(asking_agent, step)

    def push_scan():
        if d.cursor > n:
            return
        step = steps[d.cursor - 1]
        if step.index in d.instructed or step.kind not in (SEND_REQUEST,
                                                           PERFORM_ACTION):
            return
        d.instructed.add(step.index)
        executor = agent(step.role)
        d.emit("inform", mediator, executor)          # pushed instruction
        execute(executor, step)

    def execute(executor: str, step: ProtocolStep):
        if step.kind == SEND_REQUEST:
            target = agent(step.target_role)
            d.emit("request", executor, target)       # peer task request
            d.emit("request", target, mediator)       # handle_request query
            d.cursor += 1                             # request observed
            for later in steps[d.cursor - 1:]:
                if later.kind == PERFORM_ACTION and later.role == step.target_role:
                    d.instructed.add(later.index)
                    d.performing[target] = later.index
                    break
            d.emit("inform", mediator, target)        # perform instruction
            push_scan()
        elif step.kind == PERFORM_ACTION:
            d.performing[executor] = step.index

    initiator = agent(protocol.initiator_role)
    d.emit("request", operator, initiator)
    d.emit("request", initiator, mediator)
    answer_query(initiator, protocol.initiator_role)

    while d.performing:
        ready = [(index, executor) for executor, index in d.performing.items()
                 if index == d.cursor]
        if not ready:
            break  # a perform is queued behind someone else's turn
        index, executor = ready[0]
        del d.performing[executor]
        role = steps[index - 1].role
        d.emit("inform", executor, mediator)          # completion event
        d.cursor = index + 2                          # perform + report pair
        if all(step.kind == QUERY_NEXT for step in steps[d.cursor - 1:]):
            d.cursor = n + 1
        d.emit("confirm", mediator, executor)
        push_scan()
        d.emit("request", executor, mediator)         # what next?
        answer_query(executor, role)

    return d.messages
