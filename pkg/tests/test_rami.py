"""Setup-graph validation and blueprint extraction."""

from __future__ import annotations

import random

import pytest

from helpers import grow_setup, random_setup
from kgmas.errors import BlueprintError, UnknownAssetError
from kgmas.rami import extract_blueprint, list_assets, validate_setup
from kgmas.store import NamedGraphStore
from kgmas.terms import Iri, Literal, Triple
from kgmas.vocab import (
    HAS_CAPABILITY,
    HAS_COORDINATION_ROLE,
    HAS_PROTOCOL,
    HAS_REALM,
    HAS_TOPIC,
    PUBLISHES_ON,
    SETUP_GRAPH,
    kgmas,
)

TURTLEBOT = kgmas("Turtlebot")
ARM = kgmas("RoboticArm")


def load(text: str) -> NamedGraphStore:
    store = NamedGraphStore()
    store.load_turtle(SETUP_GRAPH, text)
    return store


def test_fixture_setup_is_valid(setup_store):
    report = validate_setup(setup_store, SETUP_GRAPH)
    assert report.ok, report.issues
    assert list_assets(setup_store, SETUP_GRAPH) == [ARM, TURTLEBOT]


def test_empty_graph_is_vacuously_valid():
    assert validate_setup(NamedGraphStore(), SETUP_GRAPH).ok


def rules_of(report) -> set[str]:
    return {issue.rule for issue in report.issues}


def test_missing_realm_flagged(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(TURTLEBOT, HAS_REALM, kgmas("physical")))
    report = validate_setup(setup_store, SETUP_GRAPH)
    assert not report.ok
    assert "realm" in rules_of(report)


def test_two_realms_flagged(setup_store):
    setup_store.insert(SETUP_GRAPH, Triple(TURTLEBOT, HAS_REALM, kgmas("digital")))
    assert "realm" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_bogus_realm_value_flagged(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(TURTLEBOT, HAS_REALM, kgmas("physical")))
    setup_store.insert(SETUP_GRAPH, Triple(TURTLEBOT, HAS_REALM, kgmas("imaginary")))
    assert "realm" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_unknown_scheme_flagged(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(TURTLEBOT, HAS_PROTOCOL, Literal("ros+ws")))
    setup_store.insert(SETUP_GRAPH, Triple(TURTLEBOT, HAS_PROTOCOL, Literal("zigbee")))
    report = validate_setup(setup_store, SETUP_GRAPH)
    assert "binding" in rules_of(report)
    # but fine when the runtime actually knows that scheme
    wide = validate_setup(setup_store, SETUP_GRAPH,
                          known_schemes={"zigbee", "ros+ws"})
    assert wide.ok


def test_channel_without_topic_flagged(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(kgmas("TurtlebotPose"), HAS_TOPIC,
                                           Literal("/pose")))
    assert "channel" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_duplicate_channel_topic_flagged(setup_store):
    setup_store.insert(SETUP_GRAPH, Triple(TURTLEBOT, PUBLISHES_ON, kgmas("PoseCopy")))
    setup_store.insert(SETUP_GRAPH, Triple(kgmas("PoseCopy"), HAS_TOPIC,
                                           Literal("/pose")))
    setup_store.insert(SETUP_GRAPH, Triple(kgmas("PoseCopy"),
                                           kgmas("hasMessageKind"), kgmas("Pose")))
    assert "channel" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_channel_on_non_asset_flagged(setup_store):
    setup_store.insert(SETUP_GRAPH, Triple(kgmas("Ghost"), PUBLISHES_ON,
                                           kgmas("GhostChan")))
    assert "channel-owner" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_missing_capability_flagged(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(TURTLEBOT, HAS_CAPABILITY,
                                           kgmas("MotionControl")))
    assert "capability" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_missing_role_flagged(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(TURTLEBOT, HAS_COORDINATION_ROLE,
                                           kgmas("MoverRole")))
    assert "role" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_asset_outside_any_system_flagged(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(kgmas("WarehouseSystem"),
                                           kgmas("aggregates"), TURTLEBOT))
    assert "system" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_asset_in_two_systems_flagged(setup_store):
    setup_store.insert(SETUP_GRAPH, Triple(kgmas("OtherSystem"),
                                           kgmas("aggregates"), TURTLEBOT))
    assert "system" in rules_of(validate_setup(setup_store, SETUP_GRAPH))


def test_issue_order_is_deterministic(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(TURTLEBOT, HAS_REALM, kgmas("physical")))
    setup_store.remove(SETUP_GRAPH, Triple(ARM, HAS_CAPABILITY,
                                           kgmas("GripperControl")))
    first = validate_setup(setup_store, SETUP_GRAPH).issues
    second = validate_setup(setup_store, SETUP_GRAPH).issues
    assert first == second
    assert [i.rule for i in first] == sorted(i.rule for i in first)


# -- blueprints -------------------------------------------------------------


def test_blueprint_contents(setup_store):
    blueprint = extract_blueprint(setup_store, SETUP_GRAPH, TURTLEBOT)
    assert blueprint.agent_id == "turtlebot"
    assert blueprint.realm == "physical"
    assert blueprint.binding.scheme == "ros+ws"
    assert blueprint.binding.endpoint == "localhost:9090"
    assert [(c.direction, c.topic) for c in blueprint.channels] == [
        ("publishes", "/pose"), ("subscribes", "/cmd_vel")]
    assert blueprint.capabilities == (kgmas("MotionControl"),)
    assert blueprint.coordination_role == kgmas("MoverRole")


def test_blueprint_unknown_asset(setup_store):
    with pytest.raises(UnknownAssetError):
        extract_blueprint(setup_store, SETUP_GRAPH, kgmas("Nobody"))


def test_blueprint_incomplete_layer_named(setup_store):
    setup_store.remove(SETUP_GRAPH, Triple(ARM, HAS_CAPABILITY,
                                           kgmas("GripperControl")))
    with pytest.raises(BlueprintError) as err:
        extract_blueprint(setup_store, SETUP_GRAPH, ARM)
    assert "capab" in str(err.value)


def test_blueprint_unchanged_by_unrelated_additions(setup_store):
    """Another asset's description must not leak into an existing blueprint."""
    before = extract_blueprint(setup_store, SETUP_GRAPH, TURTLEBOT)
    rng = random.Random(41)
    base = setup_store.dump_turtle(SETUP_GRAPH)
    grown, _ = grow_setup(rng, base, 0)
    store = load(grown)
    assert validate_setup(store, SETUP_GRAPH).ok
    assert extract_blueprint(store, SETUP_GRAPH, TURTLEBOT) == before


def test_random_setups_validate_and_list(tmp_path):
    rng = random.Random(42)
    for _ in range(10):
        k = rng.randrange(0, 6)
        text, agent_ids = random_setup(rng, k)
        store = load(text)
        report = validate_setup(store, SETUP_GRAPH)
        assert report.ok, report.issues
        assets = list_assets(store, SETUP_GRAPH)
        assert sorted(a.local_name.lower() for a in assets) == agent_ids
