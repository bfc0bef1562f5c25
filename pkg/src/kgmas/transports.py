"""Pluggable in-process transports for asset connectivity.

Three kinds are built in, named by the connection scheme an asset
declares:

* ``ros+ws``: plain topic fan-out, no retention
* ``mqtt``: topic fan-out plus last-value retention (depth 1),
  delivered to late subscribers at subscribe time
* ``rest+http``: request/response with one responder per path;
  publish can be emulated as a fire-and-forget request

Hubs are keyed by (scheme, endpoint address), so an agent and the
connection component of its device meet on the same hub by sharing an
endpoint. Payloads are canonical JSON text; the transport never
inspects them. The registry is open: new schemes map onto one of the
existing kinds.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass

from .errors import (DuplicateSchemeError, NoResponderError, TransportError,
                     UnknownSchemeError, ValidationError)


class TransportKind(enum.Enum):
    TOPIC_PUBSUB = "topic_pubsub"
    REQUEST_RESPONSE = "request_response"
    BROKER_PUBSUB = "broker_pubsub"


@dataclass(frozen=True)
class Endpoint:
    """Where an asset is reachable: scheme plus opaque address."""

    scheme: str
    address: str

    def __post_init__(self):
        if not self.scheme or not self.address:
            raise ValidationError("endpoint scheme and address must be non-empty")


def _check_payload(payload):
    if not isinstance(payload, str):
        raise ValidationError("transport payloads must be text")


class _PubSubHub:
    """Fan-out hub. Delivery is synchronous and serial per hub."""

    retains = False

    def __init__(self):
        self._lock = threading.RLock()
        self._subscribers: dict[str, list] = {}
        self._retained: dict[str, str] = {}

    def publish(self, topic: str, payload: str):
        _check_payload(payload)
        with self._lock:
            if self.retains:
                self._retained[topic] = payload
            handlers = list(self._subscribers.get(topic, ()))
            for handler in handlers:
                handler(payload)

    def subscribe(self, topic: str, handler):
        with self._lock:
            self._subscribers.setdefault(topic, []).append(handler)
            if self.retains and topic in self._retained:
                handler(self._retained[topic])

    def unsubscribe(self, topic: str, handler):
        with self._lock:
            handlers = self._subscribers.get(topic, [])
            if handler in handlers:
                handlers.remove(handler)

    def request(self, path: str, payload: str) -> str:
        raise TransportError("publish/subscribe transports do not take requests")

    def respond(self, path: str, responder):
        raise TransportError("publish/subscribe transports have no responders")

    def unrespond(self, path: str, responder):
        pass


class _BrokerHub(_PubSubHub):
    retains = True


class _RequestResponseHub:
    """Request/response hub with exactly one responder per path."""

    def __init__(self):
        self._lock = threading.RLock()
        self._responders: dict[str, object] = {}

    def publish(self, topic: str, payload: str):
        raise TransportError("request/response transports cannot publish")

    def subscribe(self, topic: str, handler):
        raise TransportError("request/response transports cannot subscribe")

    def unsubscribe(self, topic: str, handler):
        pass

    def request(self, path: str, payload: str) -> str:
        _check_payload(payload)
        with self._lock:
            responder = self._responders.get(path)
        if responder is None:
            raise NoResponderError(f"no responder registered at {path!r}")
        reply = responder(payload)
        _check_payload(reply)
        return reply

    def respond(self, path: str, responder):
        with self._lock:
            if path in self._responders:
                raise TransportError(f"path {path!r} already has a responder")
            self._responders[path] = responder

    def unrespond(self, path: str, responder):
        with self._lock:
            if self._responders.get(path) is responder:
                del self._responders[path]


_HUB_CLASSES = {
    TransportKind.TOPIC_PUBSUB: _PubSubHub,
    TransportKind.BROKER_PUBSUB: _BrokerHub,
    TransportKind.REQUEST_RESPONSE: _RequestResponseHub,
}


class Adapter:
    """An asset's handle on one hub.

    Tracks its own subscriptions and responders so ``close`` can detach
    them without touching other users of the hub.
    """

    def __init__(self, endpoint: Endpoint, kind: TransportKind, hub,
                 emulate_publish: bool = False):
        self.endpoint = endpoint
        self.kind = kind
        self._hub = hub
        self._emulate_publish = emulate_publish
        self._subscriptions: list[tuple[str, object]] = []
        self._responders: list[tuple[str, object]] = []
        self._closed = False

    def _check_open(self):
        if self._closed:
            raise TransportError("adapter is closed")

    def publish(self, topic: str, payload: str):
        self._check_open()
        if self.kind is TransportKind.REQUEST_RESPONSE:
            if not self._emulate_publish:
                raise TransportError(
                    "publish on a request/response transport requires "
                    "emulate_publish")
            try:
                self._hub.request(topic, payload)
            except NoResponderError:
                pass  # fire-and-forget: nobody listening is not an error
            return
        self._hub.publish(topic, payload)

    def subscribe(self, topic: str, handler):
        self._check_open()
        self._hub.subscribe(topic, handler)
        self._subscriptions.append((topic, handler))

    def request(self, path: str, payload: str) -> str:
        self._check_open()
        return self._hub.request(path, payload)

    def respond(self, path: str, responder):
        self._check_open()
        self._hub.respond(path, responder)
        self._responders.append((path, responder))

    def close(self):
        if self._closed:
            return
        for topic, handler in self._subscriptions:
            self._hub.unsubscribe(topic, handler)
        for path, responder in self._responders:
            self._hub.unrespond(path, responder)
        self._subscriptions.clear()
        self._responders.clear()
        self._closed = True


class TransportRegistry:
    """Maps connection schemes to transport kinds and caches live hubs."""

    def __init__(self):
        self._lock = threading.Lock()
        self._schemes: dict[str, TransportKind] = {}
        self._hubs: dict[tuple[str, str], object] = {}

    def register(self, scheme: str, kind: TransportKind):
        if not scheme:
            raise ValidationError("scheme must be non-empty")
        if not isinstance(kind, TransportKind):
            raise ValidationError("kind must be a TransportKind")
        with self._lock:
            if scheme in self._schemes:
                raise DuplicateSchemeError(f"scheme {scheme!r} already registered")
            self._schemes[scheme] = kind

    def schemes(self) -> list[str]:
        with self._lock:
            return sorted(self._schemes)

    def kind_of(self, scheme: str) -> TransportKind:
        with self._lock:
            if scheme not in self._schemes:
                raise UnknownSchemeError(f"unknown scheme {scheme!r}")
            return self._schemes[scheme]

    def resolve(self, endpoint: Endpoint, *, emulate_publish: bool = False) -> Adapter:
        """Connect to the hub for an endpoint, creating it on first use."""
        kind = self.kind_of(endpoint.scheme)
        key = (endpoint.scheme, endpoint.address)
        with self._lock:
            hub = self._hubs.get(key)
            if hub is None:
                hub = _HUB_CLASSES[kind]()
                self._hubs[key] = hub
        return Adapter(endpoint, kind, hub, emulate_publish=emulate_publish)


def default_registry() -> TransportRegistry:
    registry = TransportRegistry()
    registry.register("ros+ws", TransportKind.TOPIC_PUBSUB)
    registry.register("rest+http", TransportKind.REQUEST_RESPONSE)
    registry.register("mqtt", TransportKind.BROKER_PUBSUB)
    return registry
