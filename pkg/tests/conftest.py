from __future__ import annotations

import pytest

from helpers import fixture_path, fixture_text
from kgmas.store import NamedGraphStore
from kgmas.vocab import SETUP_GRAPH
from kgmas.world import WarehouseWorld


@pytest.fixture
def setup_text() -> str:
    return fixture_text("fig3_setup.ttl")


@pytest.fixture
def setup_store(setup_text) -> NamedGraphStore:
    store = NamedGraphStore()
    store.load_turtle(SETUP_GRAPH, setup_text)
    return store


@pytest.fixture
def world() -> WarehouseWorld:
    return WarehouseWorld.from_file(fixture_path("warehouse_world.json"))
