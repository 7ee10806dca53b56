"""Fuzzy projective preposition semantics over centroids.

The model is angle-only: the degree to which a target lies in a direction
from a landmark is the clamped cosine of the angular deviation from that
direction's canonical axis in the active reference frame.  Distance plays no
role, so membership is invariant under scaling about the landmark, and the
crisp relation partitions the plane into four quadrants around the frame's
axes.

Topological prepositions ("near") carry no frame dependence and are outside
this model; the expression parser rejects them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .frames import FrameInstance
from .geometry import Vec, dot, norm, sub
from .scene import MIN_SEPARATION, Entity

RELATION_TIE_TOL = 1e-12


class CoincidentPointsError(ValueError):
    pass


class Preposition(enum.Enum):
    """Canonical ordering (tie-breaks) follows declaration order."""

    FRONT = "front"
    BEHIND = "behind"
    LEFT = "left"
    RIGHT = "right"

    @property
    def order(self) -> int:
        return PREPOSITION_ORDER.index(self)


PREPOSITION_ORDER: tuple[Preposition, ...] = (
    Preposition.FRONT,
    Preposition.BEHIND,
    Preposition.LEFT,
    Preposition.RIGHT,
)


@dataclass(frozen=True)
class Membership:
    preposition: Preposition
    degree: float


def _axis(prep: Preposition, frame: FrameInstance) -> Vec:
    if prep is Preposition.FRONT:
        return frame.front_axis
    if prep is Preposition.BEHIND:
        return frame.behind_axis
    if prep is Preposition.LEFT:
        return frame.left_axis
    return frame.right_axis


def _as_point(target) -> Vec:
    return target.centroid if isinstance(target, Entity) else target


def membership(target, landmark_point, prep: Preposition, frame: FrameInstance) -> float:
    """Degree in [0, 1] to which ``target`` lies toward ``prep`` of the landmark.

    ``target`` and ``landmark_point`` may be entities or raw points.
    """
    t = _as_point(target)
    l = _as_point(landmark_point)
    d = sub(t, l)
    dist = norm(d)
    if dist < MIN_SEPARATION:
        raise CoincidentPointsError(
            f"target and landmark are coincident (separation {dist} < {MIN_SEPARATION})"
        )
    axis = _axis(prep, frame)
    cos_theta = dot(d, axis) / (dist * norm(axis))
    return max(0.0, min(1.0, cos_theta))


def memberships(target, landmark_point, frame: FrameInstance) -> tuple[Membership, ...]:
    """All four degrees for one displacement, in canonical order."""
    return tuple(
        Membership(p, membership(target, landmark_point, p, frame)) for p in PREPOSITION_ORDER
    )


def relation(
    target, landmark, frame: FrameInstance, min_degree: float = 0.0
) -> Preposition | None:
    """The maximal-membership preposition for the pair under ``frame``.

    Ties within RELATION_TIE_TOL (the 45-degree quadrant boundaries) break
    to the canonically earlier preposition, so the result is a total,
    deterministic function of the geometry.  With the default
    ``min_degree=0.0`` the result is never None (the best degree is always
    at least cos 45 deg); a stricter threshold may return None.
    """
    degrees = [membership(target, landmark, p, frame) for p in PREPOSITION_ORDER]
    best = max(degrees)
    if best < min_degree:
        return None
    for p, d in zip(PREPOSITION_ORDER, degrees):
        if d >= best - RELATION_TIE_TOL:
            return p
    raise AssertionError("unreachable: max degree not found")


# Exact surface strings.  Plain forms take a full NP landmark; the speaker /
# listener forms are used when the landmark is a conversation participant.
PLAIN_SURFACE: dict[Preposition, str] = {
    Preposition.FRONT: "in front of",
    Preposition.BEHIND: "behind",
    Preposition.LEFT: "to the left of",
    Preposition.RIGHT: "to the right of",
}

SPEAKER_SURFACE: dict[Preposition, str] = {
    Preposition.FRONT: "in front of me",
    Preposition.BEHIND: "behind me",
    Preposition.LEFT: "on my left",
    Preposition.RIGHT: "on my right",
}

LISTENER_SURFACE: dict[Preposition, str] = {
    Preposition.FRONT: "in front of you",
    Preposition.BEHIND: "behind you",
    Preposition.LEFT: "on your left",
    Preposition.RIGHT: "on your right",
}

# Frame-independent spatial terms we explicitly do not model.
TOPOLOGICAL_MARKERS: tuple[tuple[str, ...], ...] = (
    ("near",),
    ("next", "to"),
    ("beside",),
    ("close", "to"),
)
