"""Probabilistic referring-expression resolution.

Expressions are right-branching trees: a visual head phrase optionally
located relative to a landmark subtree through a projective preposition.
Resolution is computed bottom-up.  A leaf denotes the uniform distribution
over the entities consistent with its attributes; a relation node combines
the landmark's distribution with the preposition applied under every frame
kind a listener might adopt, weighted by the frame preference for the
concrete landmark's type; the node's head phrase then filters the result
multiplicatively, and each node renormalizes.

Zero total mass is a legitimate analytical outcome (the expression fits
nothing), so it is reported as an unresolvable marker rather than raised.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .frames import FRAME_ORDER, FrameInstance, FrameKind, PreferenceTable, frame_instance, supports_intrinsic
from .geometry import heading_vec
from .prepositions import (
    PLAIN_SURFACE,
    PREPOSITION_ORDER,
    TOPOLOGICAL_MARKERS,
    LISTENER_SURFACE,
    SPEAKER_SURFACE,
    Preposition,
    membership,
    relation,
)
from .scene import Entity, Scene, landmark_type

NORMALIZATION_TOL = 1e-9


class ParseError(ValueError):
    pass


class TopologicalPrepositionError(ParseError):
    """Raised for frame-independent prepositions the model excludes."""


class PersonRef(enum.Enum):
    SPEAKER = "speaker"
    LISTENER = "listener"


@dataclass(frozen=True)
class AttributePhrase:
    """Visual content of one noun phrase.

    Either a person reference ("me"/"you") or any non-empty combination of
    category, color, and shape.
    """

    category: str | None = None
    color: str | None = None
    shape: str | None = None
    person: PersonRef | None = None

    def __post_init__(self):
        if self.person is not None:
            if self.category or self.color or self.shape:
                raise ValueError("person phrase cannot carry visual attributes")
        elif not (self.category or self.color or self.shape):
            raise ValueError("attribute phrase must set at least one field")


@dataclass(frozen=True)
class Leaf:
    head: AttributePhrase


@dataclass(frozen=True)
class Compound:
    head: AttributePhrase
    prep: Preposition
    landmark: "ExpressionTree"


ExpressionTree = Union[Leaf, Compound]


def depth(tree: ExpressionTree) -> int:
    """Number of relation units (the expression's complexity)."""
    d = 0
    while isinstance(tree, Compound):
        d += 1
        tree = tree.landmark
    return d


def phrase_matches(phrase: AttributePhrase, entity: Entity) -> bool:
    """Case-insensitive exact match of every attribute the phrase sets."""
    if phrase.person is not None:
        return (
            entity.kind.value == "speaker"
            if phrase.person is PersonRef.SPEAKER
            else entity.kind.value == "listener"
        )
    for want, have in (
        (phrase.category, entity.category),
        (phrase.color, entity.color),
        (phrase.shape, entity.shape),
    ):
        if want is not None and (have is None or want.lower() != have.lower()):
            return False
    return True


def consistent_set(
    phrase: AttributePhrase, scene: Scene, within: Iterable[str] | None = None
) -> set[str]:
    """Ids of entities consistent with the phrase (empty set is valid)."""
    if phrase.person is not None:
        target = scene.speaker if phrase.person is PersonRef.SPEAKER else scene.listener
        ids = {target.id}
    else:
        ids = {e.id for e in scene.entities if phrase_matches(phrase, e)}
    if within is not None:
        ids &= set(within)
    return ids


@dataclass(frozen=True)
class Denotation:
    """Distribution over referable entities, or the unresolvable marker."""

    probs: Mapping[str, float] | None

    @property
    def unresolvable(self) -> bool:
        return self.probs is None

    def __getitem__(self, entity_id: str) -> float:
        if self.probs is None:
            raise KeyError("unresolvable denotation has no entries")
        return self.probs[entity_id]

    def get(self, entity_id: str, default: float = 0.0) -> float:
        if self.probs is None:
            return default
        return self.probs.get(entity_id, default)

    def argmax(self) -> str | None:
        if self.probs is None:
            return None
        best = max(self.probs.values())
        for eid, p in self.probs.items():
            if p == best:
                return eid
        return None


def _scene_frames(scene: Scene) -> dict[FrameKind, FrameInstance]:
    return {
        FrameKind.EGOCENTRIC: frame_instance(FrameKind.EGOCENTRIC, scene),
        FrameKind.ADDRESSEE: frame_instance(FrameKind.ADDRESSEE, scene),
        FrameKind.EXTRINSIC: frame_instance(FrameKind.EXTRINSIC, scene),
    }


def _denote_full(
    tree: ExpressionTree,
    scene: Scene,
    prefs: PreferenceTable,
    frames: dict[FrameKind, FrameInstance],
    fuzzy: bool,
) -> dict[str, float] | None:
    if isinstance(tree, Leaf):
        ids = consistent_set(tree.head, scene)
        if not ids:
            return None
        p = 1.0 / len(ids)
        return {e.id: p for e in scene.entities if e.id in ids}

    child = _denote_full(tree.landmark, scene, prefs, frames, fuzzy)
    if child is None:
        return None

    pp = {e.id: 0.0 for e in scene.entities}
    for lm_id, p_child in child.items():
        if p_child <= 0.0:
            continue
        lm = scene.entity(lm_id)
        row = prefs.row(landmark_type(lm))
        for kind in FRAME_ORDER:
            p_frame = row[kind.order]
            if p_frame == 0.0:
                continue
            if kind is FrameKind.INTRINSIC:
                if not supports_intrinsic(lm):
                    continue
                frame = FrameInstance(kind, lm.id, heading_vec(lm.heading))
            else:
                frame = frames[kind]
            for e in scene.entities:
                if e.id == lm_id:
                    continue
                if fuzzy:
                    w = membership(e, lm, tree.prep, frame)
                else:
                    w = 1.0 if relation(e, lm, frame) is tree.prep else 0.0
                if w:
                    pp[e.id] += w * p_frame * p_child

    total = sum(pp.values())
    if total <= 0.0:
        return None
    head_ids = consistent_set(tree.head, scene)
    if not head_ids:
        return None
    head_p = 1.0 / len(head_ids)
    combined = {
        e.id: (pp[e.id] / total) * head_p for e in scene.entities if e.id in head_ids
    }
    s = sum(combined.values())
    if s <= 0.0:
        return None
    return {eid: p / s for eid, p in combined.items()}


def denote(
    tree: ExpressionTree, scene: Scene, prefs: PreferenceTable, fuzzy: bool = False
) -> Denotation:
    """Resolve an expression to a distribution over referable entities.

    ``fuzzy=True`` replaces the crisp relation indicator with the graded
    membership degree (experimental; the default crisp model is what the
    generator optimizes against).
    """
    full = _denote_full(tree, scene, prefs, _scene_frames(scene), fuzzy)
    if full is None:
        return Denotation(None)
    referable = scene.referable_ids()
    restricted = {eid: full.get(eid, 0.0) for eid in referable}
    total = sum(restricted.values())
    if total <= 0.0:
        return Denotation(None)
    return Denotation({eid: p / total for eid, p in restricted.items()})


# --- surface-string parsing -------------------------------------------------

# (token sequence, preposition, implied person landmark or None), scanned
# longest-first so "in front of" wins over any shorter overlap.
_MARKERS: list[tuple[tuple[str, ...], Preposition, PersonRef | None]] = []
for _prep, _surface in PLAIN_SURFACE.items():
    _MARKERS.append((tuple(_surface.split()), _prep, None))
for _prep, _surface in SPEAKER_SURFACE.items():
    if _surface != PLAIN_SURFACE[_prep] + " me":
        _MARKERS.append((tuple(_surface.split()), _prep, PersonRef.SPEAKER))
for _prep, _surface in LISTENER_SURFACE.items():
    if _surface != PLAIN_SURFACE[_prep] + " you":
        _MARKERS.append((tuple(_surface.split()), _prep, PersonRef.LISTENER))
_MARKERS.sort(key=lambda m: -len(m[0]))

Lexicon = Mapping[str, set]


def _match_at(tokens: list[str], i: int, seq: tuple[str, ...]) -> bool:
    return tuple(tokens[i : i + len(seq)]) == seq


def _classify_attrs(words: list[str], lexicon: Lexicon) -> AttributePhrase:
    slots: dict[str, str | None] = {"category": None, "color": None, "shape": None}
    for pos, word in enumerate(words):
        last = pos == len(words) - 1
        # Realization order is color, shape, category with category final,
        # so the last word prefers the category reading on vocabulary overlap.
        order = ("category", "shape", "color") if last else ("color", "shape", "category")
        placed = False
        for slot in order:
            if slots[slot] is None and word in lexicon.get(slot, ()):  # type: ignore[arg-type]
                slots[slot] = word
                placed = True
                break
        if not placed:
            raise ParseError(f"unknown token {word!r}")
    if not any(slots.values()):
        raise ParseError("empty noun phrase")
    return AttributePhrase(category=slots["category"], color=slots["color"], shape=slots["shape"])


def _parse_np(tokens: list[str], lexicon: Lexicon) -> ExpressionTree:
    if tokens == ["me"]:
        return Leaf(AttributePhrase(person=PersonRef.SPEAKER))
    if tokens == ["you"]:
        return Leaf(AttributePhrase(person=PersonRef.LISTENER))
    if not tokens or tokens[0] != "the":
        raise ParseError(f"expected a noun phrase, got {' '.join(tokens) or '<empty>'!r}")
    i = 1
    words: list[str] = []
    while i < len(tokens):
        for seq in TOPOLOGICAL_MARKERS:
            if _match_at(tokens, i, seq):
                raise TopologicalPrepositionError(
                    f"topological preposition {' '.join(seq)!r} is not supported; "
                    "use a projective preposition (front/behind/left/right)"
                )
        marker = next((m for m in _MARKERS if _match_at(tokens, i, m[0])), None)
        if marker is not None:
            seq, prep, person = marker
            if not words:
                raise ParseError(f"missing noun phrase before {' '.join(seq)!r}")
            head = _classify_attrs(words, lexicon)
            rest = tokens[i + len(seq) :]
            if person is not None:
                if rest:
                    raise ParseError(f"unexpected tokens after {' '.join(seq)!r}: {' '.join(rest)!r}")
                return Compound(head, prep, Leaf(AttributePhrase(person=person)))
            return Compound(head, prep, _parse_np(rest, lexicon))
        words.append(tokens[i])
        i += 1
    return Leaf(_classify_attrs(words, lexicon))


def parse_expression(text: str, lexicon: Lexicon) -> ExpressionTree:
    """Parse a surface string produced by the expression templates.

    ``lexicon`` is the scene-derived vocabulary mapping each attribute slot
    to its known lowercase words (see ``scene.attribute_vocabulary``).
    """
    tokens = text.lower().split()
    if not tokens:
        raise ParseError("empty expression")
    return _parse_np(tokens, lexicon)


# --- structured (JSON) form -------------------------------------------------


def phrase_to_dict(phrase: AttributePhrase) -> dict:
    if phrase.person is not None:
        return {"person": phrase.person.value}
    out = {}
    for key in ("category", "color", "shape"):
        v = getattr(phrase, key)
        if v is not None:
            out[key] = v
    return out


def phrase_from_dict(doc: dict) -> AttributePhrase:
    if not isinstance(doc, dict):
        raise ParseError(f"phrase must be an object, got {doc!r}")
    if "person" in doc:
        try:
            return AttributePhrase(person=PersonRef(doc["person"]))
        except ValueError:
            raise ParseError(f"unknown person {doc['person']!r}") from None
    try:
        return AttributePhrase(
            category=doc.get("category"), color=doc.get("color"), shape=doc.get("shape")
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def tree_to_dict(tree: ExpressionTree) -> dict:
    if isinstance(tree, Leaf):
        return {"head": phrase_to_dict(tree.head)}
    return {
        "head": phrase_to_dict(tree.head),
        "prep": tree.prep.value,
        "landmark": tree_to_dict(tree.landmark),
    }


def tree_from_dict(doc: dict) -> ExpressionTree:
    if not isinstance(doc, dict) or "head" not in doc:
        raise ParseError("expression object must contain 'head'")
    head = phrase_from_dict(doc["head"])
    if "prep" not in doc and "landmark" not in doc:
        return Leaf(head)
    if "prep" not in doc or "landmark" not in doc:
        raise ParseError("relation node needs both 'prep' and 'landmark'")
    try:
        prep = Preposition(doc["prep"])
    except ValueError:
        raise ParseError(f"unknown preposition {doc['prep']!r}") from None
    return Compound(head, prep, tree_from_dict(doc["landmark"]))


def parse_expression_json(text: str) -> ExpressionTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    return tree_from_dict(doc)
