"""Candidate scoring and best-expression selection.

A candidate is scored on two axes: appropriateness (is the intended target
the most probable referent of the expression?) and effectiveness (how much
probability mass the target receives).  The optimal expression maximizes
their sum over the exhaustively enumerated expression space.  A greedy
variant picks each unit's most-preferred frame independently and never
consults the resolution model, and three fixed-perspective baselines share
the same landmark chain.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .frames import FrameKind, PreferenceTable
from .generator import (
    CandidateExpression,
    LandmarkChain,
    Strategy,
    applicable_assignments,
    assemble_tree,
    expression_space,
    realize,
)
from .prepositions import relation
from .resolver import Denotation, denote
from .scene import Scene, landmark_type

# A target ties for the maximum when within this of the top probability.
APPROPRIATENESS_TIE_TOL = 1e-12

# Exhaustive search is exponential in expression complexity; desk-scale
# chains stay well under this.
MAX_COMPLEXITY = 4

BASELINE_KINDS = {"robot": FrameKind.EGOCENTRIC, "human": FrameKind.ADDRESSEE}


@dataclass(frozen=True)
class Score:
    appropriateness: int  # 1 iff the target is (tied-)maximal in the denotation
    effectiveness: float  # probability mass the target receives

    @property
    def total(self) -> float:
        return self.appropriateness + self.effectiveness


def score(
    candidate: CandidateExpression,
    target_id: str,
    scene: Scene,
    prefs: PreferenceTable,
) -> Score:
    d: Denotation = denote(candidate.tree, scene, prefs)
    if d.unresolvable:
        return Score(0, 0.0)
    effectiveness = d.get(target_id, 0.0)
    top = max(d.probs.values())
    appropriateness = 1 if effectiveness >= top - APPROPRIATENESS_TIE_TOL else 0
    return Score(appropriateness, effectiveness)


def _selection_key(candidate: CandidateExpression, total: float):
    # Higher total first; ties prefer frame-consistent strategies, then the
    # canonically smallest strategy, then the shortest surface.
    return (
        -total,
        0 if candidate.strategy.consistent else 1,
        tuple(kind.order for kind in candidate.strategy.kinds),
        len(candidate.surface),
        candidate.surface,
    )


def select_best(
    candidates: list[CandidateExpression],
    target_id: str,
    scene: Scene,
    prefs: PreferenceTable,
) -> tuple[CandidateExpression, Score]:
    """Deterministic argmax of total score over the candidate list.

    Duplicate trees (identical surfaces from different strategies) are
    scored once; the winner among exact ties is the candidate with a
    frame-consistent strategy, then the canonically smallest strategy.
    """
    if not candidates:
        raise ValueError("no candidate expressions to select from")
    if any(len(c.strategy) > MAX_COMPLEXITY for c in candidates):
        raise ValueError(f"expression complexity exceeds the cap of {MAX_COMPLEXITY}")
    by_surface: dict[str, Score] = {}
    for c in candidates:
        if c.surface not in by_surface:
            by_surface[c.surface] = score(c, target_id, scene, prefs)
    best = min(candidates, key=lambda c: _selection_key(c, by_surface[c.surface].total))
    return best, by_surface[best.surface]


def generate_best(
    chain: LandmarkChain, scene: Scene, prefs: PreferenceTable
) -> tuple[CandidateExpression, Score]:
    """Expression space construction plus selection, in one call."""
    return select_best(expression_space(chain, scene), chain.target, scene, prefs)


def _greedy_kind(
    row: tuple[float, ...], applicable: list[tuple[FrameKind, str | None, object]]
) -> tuple[FrameKind, str | None, object]:
    best = None
    best_p = -1.0
    for kind, origin, frame in applicable:
        p = row[kind.order]
        if p > best_p:  # strictly greater keeps canonical order on ties
            best = (kind, origin, frame)
            best_p = p
    assert best is not None
    return best


def select_greedy_max(
    chain: LandmarkChain, scene: Scene, prefs: PreferenceTable
) -> CandidateExpression:
    """Per-unit argmax of the frame preference, ignoring the resolution model.

    Each unit independently takes the most-preferred applicable frame for
    its landmark (using the chain's settled per-unit distributions), so the
    choice never looks at what the rest of the expression denotes.
    """
    if chain.k == 0:
        return expression_space(chain, scene)[0]
    rows = chain.state.distributions
    if len(rows) != chain.k:
        rows = tuple(
            prefs.row(landmark_type(scene.entity(eid))) for eid in chain.stack.ids()
        )
    return _realized_candidate(
        chain,
        scene,
        [
            _greedy_kind(rows[i], applicable_assignments(scene.entity(lm_id), scene))
            for i, lm_id in enumerate(chain.stack.ids())
        ],
    )


def select_baseline(
    kind: str,
    chain: LandmarkChain,
    scene: Scene,
    prefs: PreferenceTable,
    seed: int | None = None,
) -> CandidateExpression:
    """Fixed-perspective baselines sharing the chain and realization.

    ``robot`` locates every unit in the speaker's frame, ``human`` in the
    listener's; ``random`` draws one strategy uniformly from the applicable
    strategy set (a seed is required for reproducibility).
    """
    if chain.k == 0:
        return expression_space(chain, scene)[0]
    if kind in BASELINE_KINDS:
        frame_kind = BASELINE_KINDS[kind]
        assignments = []
        for lm_id in chain.stack.ids():
            options = applicable_assignments(scene.entity(lm_id), scene, (frame_kind,))
            assignments.append(options[0])
        return _realized_candidate(chain, scene, assignments)
    if kind == "random":
        if seed is None:
            raise ValueError("the random baseline requires a seed")
        rng = random.Random(seed)
        assignments = []
        for lm_id in chain.stack.ids():
            options = applicable_assignments(scene.entity(lm_id), scene)
            assignments.append(options[rng.randrange(len(options))])
        return _realized_candidate(chain, scene, assignments)
    raise ValueError(f"unknown baseline {kind!r} (expected robot, human, or random)")


def _realized_candidate(
    chain: LandmarkChain, scene: Scene, assignments
) -> CandidateExpression:
    sources = [chain.target] + list(chain.stack.ids()[:-1])
    preps = []
    for i, (kind, origin, frame) in enumerate(assignments):
        src = scene.entity(sources[i])
        lm = scene.entity(chain.stack.ids()[i])
        preps.append(relation(src, lm, frame))
    tree = assemble_tree(chain, tuple(preps))
    strategy = Strategy(tuple((kind, origin) for kind, origin, _ in assignments))
    return CandidateExpression(tree, strategy, realize(tree))
