"""Test utilities: independent oracles and random input builders.

The oracles deliberately use the dumbest correct algorithm available
(full enumeration, pairwise scans) so they share no code paths with the
implementations they judge.
"""

from __future__ import annotations

import random
from pathlib import Path

from kgmas.terms import Iri, Literal, Pattern, Triple, Variable, term_key

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

NS = "http://kgmas.example/vocab#"


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


# -- brute-force pattern matching ------------------------------------------


def bgp_oracle(triples, patterns) -> list[dict]:
    """Nested-loop evaluation of a basic graph pattern, no indexes."""
    def match_one(pattern: Pattern, triple: Triple, binding: dict):
        extended = dict(binding)
        for slot, value in ((pattern.subject, triple.subject),
                            (pattern.predicate, triple.predicate),
                            (pattern.object, triple.object)):
            if isinstance(slot, Variable):
                if slot.name in extended:
                    if extended[slot.name] != value:
                        return None
                else:
                    extended[slot.name] = value
            elif slot != value:
                return None
        return extended

    solutions = [{}]
    for pattern in patterns:
        solutions = [extended
                     for binding in solutions
                     for triple in triples
                     if (extended := match_one(pattern, triple, binding)) is not None]

    def key(binding: dict):
        return tuple((name, term_key(binding[name])) for name in sorted(binding))

    unique = {key(b): b for b in solutions}
    return [unique[k] for k in sorted(unique)]


# -- pairwise consistency scan ---------------------------------------------


def consistency_oracle(placements) -> list[tuple[str, str, str, str]]:
    """Expected violations for (entity_iri, realm, position) rows.

    Returns (rule, first, second, position) tuples ordered like the
    checker: by position, then by entity pair.
    """
    out = []
    for position in sorted({p for _, _, p in placements}):
        here = sorted((e, r) for e, r, p in placements if p == position)
        for i in range(len(here)):
            for j in range(i + 1, len(here)):
                realms = {here[i][1], here[j][1]}
                if realms == {"physical"}:
                    rule = "physical_colocation"
                elif realms == {"physical", "digital"}:
                    rule = "physical_digital_colocation"
                else:
                    continue
                out.append((rule, here[i][0], here[j][0], position))
    return out


# -- random input builders --------------------------------------------------


SCHEMES = ("ros+ws", "rest+http", "mqtt")
ASSET_KINDS = ("Mobile_Robot", "Robotic_Arm", "Conveyor", "Camera", "Agv")


def random_asset_block(rng: random.Random, name: str) -> list[str]:
    """Turtle statements for one complete, valid asset description."""
    kind = rng.choice(ASSET_KINDS)
    realm = rng.choice(("physical", "digital"))
    scheme = rng.choice(SCHEMES)
    endpoint = f"host{rng.randrange(4)}:{9000 + rng.randrange(100)}"
    lines = [
        f"kgmas:{name} kgmas:hasAssetKind kgmas:{kind} .",
        f"kgmas:{name} kgmas:hasRealm kgmas:{realm} .",
        f'kgmas:{name} kgmas:hasProtocol "{scheme}" .',
        f'kgmas:{name} kgmas:hasEndpoint "{endpoint}" .',
        f"kgmas:{name} kgmas:hasCoordinationRole kgmas:{name}Role .",
    ]
    for c in range(rng.randint(1, 3)):
        channel = f"{name}Channel{c}"
        direction = rng.choice(("publishesOn", "subscribesTo"))
        lines.append(f"kgmas:{name} kgmas:{direction} kgmas:{channel} .")
        lines.append(f'kgmas:{channel} kgmas:hasTopic "/{name.lower()}/t{c}" .')
        lines.append(f"kgmas:{channel} kgmas:hasMessageKind kgmas:Msg{c} .")
    for c in range(rng.randint(1, 2)):
        lines.append(f"kgmas:{name} kgmas:hasCapability kgmas:{name}Cap{c} .")
    return lines


def random_setup(rng: random.Random, k: int) -> tuple[str, list[str]]:
    """A valid setup graph with k assets; returns (text, agent ids)."""
    lines = [
        "@prefix kgmas: <http://kgmas.example/vocab#> .",
        "@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .",
    ]
    names = [f"Asset{i}" for i in range(k)]
    for name in names:
        lines.extend(random_asset_block(rng, name))
    for name in names:
        lines.append(f"kgmas:Plant kgmas:aggregates kgmas:{name} .")
    return "\n".join(lines) + "\n", sorted(n.lower() for n in names)


def grow_setup(rng: random.Random, text: str, index: int) -> tuple[str, str]:
    """Append one more asset to an existing setup; returns (text, agent id)."""
    name = f"Extra{index}"
    lines = random_asset_block(rng, name)
    lines.append(f"kgmas:Plant kgmas:aggregates kgmas:{name} .")
    return text + "\n".join(lines) + "\n", name.lower()


_LITERAL_POOL = [
    "plain", "with space", 'quote " inside', "back\\slash", "tab\there",
    "new\nline", "carriage\rreturn", "unicode é世界",
    "emoji \U0001f916", "", "trailing dot .", "# not a comment",
]


def random_term(rng: random.Random, literals_ok: bool):
    if literals_ok and rng.random() < 0.4:
        lexical = rng.choice(_LITERAL_POOL)
        if rng.random() < 0.3:
            return Literal(lexical, Iri(f"{NS}dt{rng.randrange(3)}"))
        return Literal(lexical)
    pool = [f"{NS}n{rng.randrange(30)}",
            f"http://other.example/path/{rng.randrange(10)}",
            f"http://third.example#x{rng.randrange(5)}"]
    return Iri(rng.choice(pool))


def random_triples(rng: random.Random, count: int) -> set[Triple]:
    out = set()
    while len(out) < count:
        out.add(Triple(random_term(rng, False), random_term(rng, False),
                       random_term(rng, True)))
    return out


def random_pattern(rng: random.Random, triples, var_names=("a", "b", "c")) -> Pattern:
    """A pattern biased toward matching something in the graph."""
    base = rng.choice(sorted(triples, key=lambda t: (t.subject.value,
                                                     t.predicate.value)))
    subject = base.subject if rng.random() < 0.5 else Variable(rng.choice(var_names))
    predicate = base.predicate if rng.random() < 0.5 else Variable(rng.choice(var_names))
    obj = base.object if rng.random() < 0.5 else Variable(rng.choice(var_names))
    if rng.random() < 0.2:
        subject = random_term(rng, False)
    return Pattern(subject, predicate, obj)
