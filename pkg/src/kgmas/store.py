"""In-memory named-graph triple store.

Graphs hold sets of triples (no duplicates) and are replaced
copy-on-write, so a reader that has picked up a graph snapshot is never
affected by later writes. A single store-wide revision counter advances
on every successful mutating call; readers observe exactly one revision.

Writers serialize on one lock. ``atomic_update`` applies removals then
insertions as a single revision step, which is what state publication
uses to replace an entity's triples without exposing half-updated
intermediate states.
"""

from __future__ import annotations

import threading
from typing import Iterable, Mapping

from .errors import ValidationError
from .terms import Iri, Literal, Pattern, Term, Triple, Variable, term_key
from .turtle import parse_turtle, serialize_turtle


def _graph_key(graph_id: Iri | str) -> str:
    if isinstance(graph_id, Iri):
        return graph_id.value
    if isinstance(graph_id, str) and graph_id:
        return graph_id
    raise ValidationError(f"bad graph id: {graph_id!r}")


class NamedGraphStore:
    """Thread-safe store of named triple graphs."""

    def __init__(self):
        self._lock = threading.Lock()
        self._graphs: dict[str, frozenset[Triple]] = {}
        self._revision = 0

    @property
    def revision(self) -> int:
        with self._lock:
            return self._revision

    def graph_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._graphs)

    def triples(self, graph_id: Iri | str) -> frozenset[Triple]:
        """Snapshot of one graph; empty for unknown graph names."""
        key = _graph_key(graph_id)
        with self._lock:
            return self._graphs.get(key, frozenset())

    def snapshot(self) -> tuple[int, Mapping[str, frozenset[Triple]]]:
        """Consistent (revision, graphs) pair."""
        with self._lock:
            return self._revision, dict(self._graphs)

    # -- mutation ---------------------------------------------------------

    def insert(self, graph_id: Iri | str, triple: Triple) -> bool:
        """Add one triple. Returns False (revision untouched) if present."""
        key = _graph_key(graph_id)
        self._check_triple(triple)
        with self._lock:
            graph = self._graphs.get(key, frozenset())
            if triple in graph:
                return False
            self._graphs[key] = graph | {triple}
            self._revision += 1
            return True

    def remove(self, graph_id: Iri | str, triple: Triple) -> bool:
        """Remove one triple. Returns False (revision untouched) if absent."""
        key = _graph_key(graph_id)
        self._check_triple(triple)
        with self._lock:
            graph = self._graphs.get(key, frozenset())
            if triple not in graph:
                return False
            self._graphs[key] = graph - {triple}
            self._revision += 1
            return True

    def atomic_update(self, graph_id: Iri | str,
                      removals: Iterable[Triple],
                      insertions: Iterable[Triple]) -> int:
        """Apply removals then insertions as one revision step.

        The revision advances whenever either argument is non-empty,
        even if the resulting triple set is unchanged, so repeated
        identical state publications remain observable. Returns the
        revision after the update.
        """
        key = _graph_key(graph_id)
        removals = list(removals)
        insertions = list(insertions)
        for triple in (*removals, *insertions):
            self._check_triple(triple)
        with self._lock:
            if removals or insertions:
                graph = self._graphs.get(key, frozenset())
                self._graphs[key] = (graph - frozenset(removals)) | frozenset(insertions)
                self._revision += 1
            return self._revision

    def replace(self, graph_id: Iri | str,
                subject: Iri, facts: Mapping[Iri, Iterable]) -> int:
        """Replace all values of the given predicates for one subject.

        Read-modify-write under the store lock: every existing
        (subject, predicate, *) triple for a predicate in ``facts`` is
        dropped and the new objects inserted, as one revision step.
        """
        key = _graph_key(graph_id)
        insertions = []
        for predicate, objects in facts.items():
            for obj in objects:
                insertions.append(Triple(subject, predicate, obj))
        with self._lock:
            graph = self._graphs.get(key, frozenset())
            keep = frozenset(t for t in graph
                             if not (t.subject == subject and t.predicate in facts))
            if facts:
                self._graphs[key] = keep | frozenset(insertions)
                self._revision += 1
            return self._revision

    @staticmethod
    def _check_triple(triple: Triple):
        if not isinstance(triple, Triple):
            raise ValidationError(f"not a triple: {triple!r}")

    # -- serialization ----------------------------------------------------

    def load_turtle(self, graph_id: Iri | str, text: str) -> int:
        """Parse a document and merge its triples into one graph.

        Parsing happens entirely before the store is touched, so a
        syntax error leaves both graph and revision unchanged. Returns
        the number of distinct triples the document contributes.
        """
        key = _graph_key(graph_id)
        distinct = frozenset(parse_turtle(text))
        with self._lock:
            if distinct:
                graph = self._graphs.get(key, frozenset())
                self._graphs[key] = graph | distinct
                self._revision += 1
        return len(distinct)

    def dump_turtle(self, graph_id: Iri | str) -> str:
        return serialize_turtle(self.triples(graph_id))

    # -- query ------------------------------------------------------------

    def query(self, graph_id: Iri | str,
              patterns: Iterable[Pattern]) -> list[dict[str, Term]]:
        """Evaluate a basic graph pattern against one graph snapshot.

        Patterns sharing variables join naturally. Solutions bind every
        variable that occurs in the patterns, contain no duplicates and
        come back in a deterministic order for a fixed revision.
        """
        patterns = list(patterns)
        if not patterns:
            raise ValidationError("empty pattern list")
        for pattern in patterns:
            if not isinstance(pattern, Pattern):
                raise ValidationError(f"not a pattern: {pattern!r}")
        graph = self.triples(graph_id)

        by_subject: dict[Term, list[Triple]] = {}
        by_predicate: dict[Term, list[Triple]] = {}
        by_object: dict[Term, list[Triple]] = {}
        for triple in graph:
            by_subject.setdefault(triple.subject, []).append(triple)
            by_predicate.setdefault(triple.predicate, []).append(triple)
            by_object.setdefault(triple.object, []).append(triple)

        def candidates(pattern: Pattern, binding: dict[str, Term],
                       graph=graph) -> Iterable[Triple]:
            best = None
            for slot, index in ((pattern.subject, by_subject),
                                (pattern.predicate, by_predicate),
                                (pattern.object, by_object)):
                if isinstance(slot, Variable):
                    slot = binding.get(slot.name)
                    if slot is None:
                        continue
                bucket = index.get(slot, [])
                if best is None or len(bucket) < len(best):
                    best = bucket
            return graph if best is None else best

        def matches(pattern: Pattern, triple: Triple,
                    binding: dict[str, Term]) -> dict[str, Term] | None:
            extended = binding
            for slot, value in ((pattern.subject, triple.subject),
                                (pattern.predicate, triple.predicate),
                                (pattern.object, triple.object)):
                if isinstance(slot, Variable):
                    bound = extended.get(slot.name)
                    if bound is None:
                        if extended is binding:
                            extended = dict(binding)
                        extended[slot.name] = value
                    elif bound != value:
                        return None
                elif slot != value:
                    return None
            return extended if extended is not binding else dict(binding)

        solutions: list[dict[str, Term]] = [{}]
        for pattern in patterns:
            next_solutions = []
            for binding in solutions:
                for triple in candidates(pattern, binding):
                    extended = matches(pattern, triple, binding)
                    if extended is not None:
                        next_solutions.append(extended)
            solutions = next_solutions
            if not solutions:
                break

        def solution_key(binding: dict[str, Term]):
            return tuple((name, term_key(binding[name]))
                         for name in sorted(binding))

        unique = {solution_key(b): b for b in solutions}
        return [unique[k] for k in sorted(unique)]
