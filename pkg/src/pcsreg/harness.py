"""Seeded evaluation harness and the brute-force resolution oracle.

The harness samples random tabletop scenes, generates one expression per
method for every target whose visual description is ambiguous, and measures
how often a simulated listener identifies the intended target.  All
randomness is derived from the master seed through stable hashes, so trials
are reproducible and all methods see identical listener randomness on the
same trial.

``oracle_denote`` is an independent check on the recursive resolution
model: it enumerates every joint assignment of a concrete landmark and a
frame kind to every relation unit and normalizes once at the end.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import dataclass, field

from .frames import (
    FRAME_ORDER,
    FrameInstance,
    FrameKind,
    PreferenceTable,
    default_preferences,
    frame_instance,
    preferences_from_dict,
    supports_intrinsic,
)
from .generator import (
    GenerationError,
    LandmarkChain,
    build_landmark_chain,
    describe_visual,
    expression_space,
)
from .geometry import heading_vec
from .optimizer import select_baseline, select_best, select_greedy_max
from .prepositions import relation
from .resolver import (
    Compound,
    Denotation,
    ExpressionTree,
    consistent_set,
    denote,
    depth,
)
from .scene import Entity, EntityKind, Scene, TableExtent, landmark_type

METHODS = ("pcsreg", "max", "robot", "human", "random")

DEFAULT_CATEGORIES = ("block", "car", "cup", "book")
DEFAULT_COLORS = ("red", "yellow", "blue", "green")
DEFAULT_SHAPES = ("square", "round", "oblong")

ORACLE_MAX_DEPTH = 3
ORACLE_MAX_ENTITIES = 8


class HarnessError(ValueError):
    pass


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from heterogeneous parts (not Python's hash())."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return int(digest[:16], 16) & (2**63 - 1)


# --- scene sampling ----------------------------------------------------------


def sample_scene(
    seed: int,
    objects: tuple[int, int] = (3, 8),
    categories=DEFAULT_CATEGORIES,
    colors=DEFAULT_COLORS,
    shapes=DEFAULT_SHAPES,
    max_attempts: int = 200,
) -> Scene:
    """Deterministic random tabletop scene.

    Speaker and listener face each other across the table; the first two
    objects always share a full visual description so at least one target
    needs a spatial reference.
    """
    if not categories:
        raise HarnessError("category pool must be non-empty")
    lo, hi = objects
    if lo < 2 or hi < lo:
        raise HarnessError(f"object-count range must satisfy 2 <= lo <= hi, got {objects}")
    rng = random.Random(seed)
    n = rng.randint(lo, hi)

    entities = [
        Entity("speaker", EntityKind.SPEAKER, "robot", (0.0, -1.0), heading=1.5707963267948966),
        Entity("listener", EntityKind.LISTENER, "person", (0.0, 1.0), heading=-1.5707963267948966),
    ]
    positions = [(0.0, -1.0), (0.0, 1.0)]

    def place() -> tuple[float, float]:
        for _ in range(max_attempts):
            p = (rng.uniform(-0.9, 0.9), rng.uniform(-0.7, 0.7))
            if all((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 >= 0.05**2 for q in positions):
                positions.append(p)
                return p
        raise HarnessError(f"could not place an object after {max_attempts} attempts (seed {seed})")

    def visual() -> tuple[str, str | None, str | None]:
        category = categories[rng.randrange(len(categories))]
        color = colors[rng.randrange(len(colors))] if colors and rng.random() < 0.8 else None
        shape = shapes[rng.randrange(len(shapes))] if shapes and rng.random() < 0.35 else None
        return category, color, shape

    shared = visual()
    objects_out = []
    for i in range(n):
        cat, color, shape = shared if i < 2 else visual()
        heading = rng.uniform(0.0, 6.283185307179586) if rng.random() < 0.4 else None
        objects_out.append(
            Entity(
                id=f"{cat}{i + 1}",
                kind=EntityKind.OBJECT,
                category=cat,
                centroid=place(),
                color=color,
                shape=shape,
                heading=heading,
            )
        )
    return Scene(
        entities=tuple(entities + objects_out),
        table=TableExtent((-1.2, -1.2), (1.2, 1.2)),
        north=(0.0, 1.0),
    )


# --- simulated listener -------------------------------------------------------


def _units_bottom_up(tree: ExpressionTree):
    """Relation units deepest-first, plus the innermost leaf phrase."""
    units = []
    node = tree
    while isinstance(node, Compound):
        units.append((node.head, node.prep))
        node = node.landmark
    return list(reversed(units)), node.head


def simulate_listener(
    tree: ExpressionTree,
    scene: Scene,
    true_prefs: PreferenceTable,
    rng: random.Random,
    consistency_coupling: float = 0.0,
) -> str | None:
    """One listener's crisp interpretation of an expression.

    The listener resolves bottom-up and commits: the innermost phrase
    resolves to its first consistent entity, then for each relation unit one
    frame kind is sampled from the true preferences for the current
    landmark, the unit's head candidates are filtered by the crisp relation,
    and the first survivor becomes the referent for the next unit up.

    The listener only adopts frames under which the unit resolves to
    something: preference mass on frames with no surviving candidate (or
    that cannot be instantiated at the landmark) is renormalized over the
    rest, mirroring how the resolution model's normalization discards that
    mass.  When no adoptable frame resolves the unit at all, the listener is
    confused and None is returned (counted as an incorrect identification).

    ``consistency_coupling`` is the probability of reusing the previous
    unit's frame kind instead of sampling afresh; the default models fully
    independent per-unit frame choices.
    """
    units, anchor = _units_bottom_up(tree)
    ids = consistent_set(anchor, scene)
    if not ids:
        return None
    resolved = scene.entity(min(ids))
    prev_kind: FrameKind | None = None
    for head, prep in units:
        head_ids = sorted(consistent_set(head, scene))
        row = true_prefs.row(landmark_type(resolved))
        options: list[tuple[FrameKind, float, list[str]]] = []
        for kind in FRAME_ORDER:
            p = row[kind.order]
            if p <= 0.0:
                continue
            if kind is FrameKind.INTRINSIC:
                if not supports_intrinsic(resolved):
                    continue
                frame = FrameInstance(kind, resolved.id, heading_vec(resolved.heading))
            else:
                frame = frame_instance(kind, scene)
            survivors = [
                eid
                for eid in head_ids
                if eid != resolved.id
                and relation(scene.entity(eid), resolved, frame) is prep
            ]
            if not survivors:
                continue
            options.append((kind, p, survivors))
        if not options:
            return None
        total = sum(p for _, p, _ in options)
        draw = rng.random()
        chosen = None
        if (
            prev_kind is not None
            and consistency_coupling > 0.0
            and draw < consistency_coupling
        ):
            chosen = next((o for o in options if o[0] is prev_kind), None)
        if chosen is None:
            u = rng.random() * total
            acc = 0.0
            chosen = options[-1]
            for option in options:
                acc += option[1]
                if u <= acc:
                    chosen = option
                    break
        kind, _, survivors = chosen
        resolved = scene.entity(survivors[0])
        prev_kind = kind
    return resolved.id


# --- brute-force oracle -------------------------------------------------------


def oracle_denote(tree: ExpressionTree, scene: Scene, prefs: PreferenceTable) -> Denotation:
    """Joint enumeration over (landmark, frame) assignments for every unit.

    Kept structurally independent of the recursive model: weights multiply
    along a full assignment and are normalized exactly once.  Exponential in
    depth, so bounded to small inputs.
    """
    k = depth(tree)
    if k > ORACLE_MAX_DEPTH:
        raise HarnessError(f"oracle limited to depth {ORACLE_MAX_DEPTH}, got {k}")
    if len(scene.entities) > ORACLE_MAX_ENTITIES:
        raise HarnessError(
            f"oracle limited to {ORACLE_MAX_ENTITIES} entities, got {len(scene.entities)}"
        )

    heads = []
    node = tree
    while isinstance(node, Compound):
        heads.append((node.head, node.prep))
        node = node.landmark
    anchor = node.head

    phrase_sets = [consistent_set(h, scene) for h, _ in heads] + [consistent_set(anchor, scene)]
    if any(not s for s in phrase_sets):
        return Denotation(None)
    uniform = [1.0 / len(s) for s in phrase_sets]

    mass = {eid: 0.0 for eid in (e.id for e in scene.entities)}

    def assignments(level: int, upper_id: str, weight: float, referent: str):
        # level indexes the relation units root-first; upper_id is the entity
        # chosen for the level's head; all surviving weight belongs to the
        # root referent.
        if level == len(heads):
            mass[referent] += weight
            return
        _, prep = heads[level]
        next_set = phrase_sets[level + 1]
        for lm_id in next_set:
            if lm_id == upper_id:
                continue
            lm = scene.entity(lm_id)
            row = prefs.row(landmark_type(lm))
            for kind in FRAME_ORDER:
                p_f = row[kind.order]
                if p_f <= 0.0:
                    continue
                if kind is FrameKind.INTRINSIC:
                    if not supports_intrinsic(lm):
                        continue
                    frame = FrameInstance(kind, lm.id, heading_vec(lm.heading))
                else:
                    frame = frame_instance(kind, scene)
                if relation(scene.entity(upper_id), lm, frame) is not prep:
                    continue
                assignments(level + 1, lm_id, weight * p_f * uniform[level + 1], referent)

    for referent in phrase_sets[0]:
        assignments(0, referent, uniform[0], referent)

    referable = scene.referable_ids()
    restricted = {eid: mass.get(eid, 0.0) for eid in referable}
    total = sum(restricted.values())
    if total <= 0.0:
        return Denotation(None)
    return Denotation({eid: p / total for eid, p in restricted.items()})


# --- comparison runner --------------------------------------------------------


@dataclass(frozen=True)
class TrialConfig:
    seed: int
    n_scenes: int
    trials_per_expression: int
    true_prefs: PreferenceTable
    methods: tuple[str, ...]
    assumed_prefs: PreferenceTable | None = None
    objects: tuple[int, int] = (3, 8)
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    colors: tuple[str, ...] = DEFAULT_COLORS
    shapes: tuple[str, ...] = DEFAULT_SHAPES
    consistency_coupling: float = 0.0
    context_window: tuple[int, int] = (0, 1)
    per_trial_csv: bool = False

    def __post_init__(self):
        if self.n_scenes <= 0 or self.trials_per_expression <= 0:
            raise HarnessError("scene and trial counts must be positive")
        if not self.methods:
            raise HarnessError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise HarnessError(f"unknown methods: {sorted(unknown)}")
        if not 0.0 <= self.consistency_coupling <= 1.0:
            raise HarnessError("consistency_coupling must be in [0, 1]")
        if tuple(self.context_window) != (0, 1):
            raise HarnessError("only the [0, 1] context window is supported")


def config_from_dict(doc: dict) -> TrialConfig:
    if not isinstance(doc, dict):
        raise HarnessError("config must be a JSON object")
    try:
        seed = int(doc["seed"])
        n_scenes = int(doc["n_scenes"])
        trials = int(doc["trials_per_expression"])
    except (KeyError, TypeError, ValueError) as exc:
        raise HarnessError(f"config needs integer seed, n_scenes, trials_per_expression: {exc}")
    methods = doc.get("methods", list(METHODS))
    if not isinstance(methods, list) or not all(isinstance(m, str) for m in methods):
        raise HarnessError("methods must be a list of method names")
    true_prefs = (
        preferences_from_dict(doc["true_prefs"]) if "true_prefs" in doc else default_preferences()
    )
    assumed = preferences_from_dict(doc["assumed_prefs"]) if "assumed_prefs" in doc else None
    objects = tuple(doc.get("objects", (3, 8)))
    if len(objects) != 2:
        raise HarnessError("objects must be a [min, max] pair")
    return TrialConfig(
        seed=seed,
        n_scenes=n_scenes,
        trials_per_expression=trials,
        true_prefs=true_prefs,
        methods=tuple(methods),
        assumed_prefs=assumed,
        objects=(int(objects[0]), int(objects[1])),
        categories=tuple(doc.get("categories", DEFAULT_CATEGORIES)),
        colors=tuple(doc.get("colors", DEFAULT_COLORS)),
        shapes=tuple(doc.get("shapes", DEFAULT_SHAPES)),
        consistency_coupling=float(doc.get("consistency_coupling", 0.0)),
        context_window=tuple(doc.get("context_window", (0, 1))),
        per_trial_csv=bool(doc.get("per_trial_csv", False)),
    )


@dataclass
class MethodStats:
    n_expressions: int = 0
    n_failures: int = 0
    n_trials: int = 0
    n_correct: int = 0
    expected_sum: float = 0.0
    by_k: dict = field(
        default_factory=lambda: {
            b: {"trials": 0, "correct": 0} for b in ("k1", "k2plus", "failed")
        }
    )

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_trials if self.n_trials else 0.0

    @property
    def expected_accuracy(self) -> float:
        return self.expected_sum / self.n_expressions if self.n_expressions else 0.0


@dataclass
class TrialReport:
    config_seed: int
    n_scenes: int
    n_targets: int
    trials_per_expression: int
    stats: dict[str, MethodStats]
    records: list[dict] = field(default_factory=list, repr=False)


def _bucket(k: int | None) -> str:
    if k is None:
        return "failed"
    return "k1" if k == 1 else "k2plus"


def run_comparison(cfg: TrialConfig, collect_records: bool = True) -> TrialReport:
    """Generate-and-listen comparison across methods, deterministic per seed.

    Every referable target whose visual description is ambiguous gets one
    expression per method; each expression is interpreted by
    ``trials_per_expression`` simulated listeners whose randomness depends
    only on (seed, scene, target, trial), never on the method, so methods
    are compared on identical listener draws.
    """
    assumed = cfg.assumed_prefs or default_preferences()
    stats = {m: MethodStats() for m in cfg.methods}
    records: list[dict] = []
    n_targets = 0

    for scene_idx in range(cfg.n_scenes):
        scene = sample_scene(
            derive_seed(cfg.seed, "scene", scene_idx),
            objects=cfg.objects,
            categories=cfg.categories,
            colors=cfg.colors,
            shapes=cfg.shapes,
        )
        all_ids = set(scene.referable_ids())
        for target_id in scene.referable_ids():
            if describe_visual(target_id, all_ids, scene).distinguishing:
                continue
            n_targets += 1
            chain: LandmarkChain | None
            try:
                chain = build_landmark_chain(target_id, scene, assumed)
            except GenerationError:
                chain = None

            expressions: dict[str, ExpressionTree | None] = {}
            ks: dict[str, int | None] = {}
            for method in cfg.methods:
                tree: ExpressionTree | None = None
                if chain is not None:
                    if method == "pcsreg":
                        tree = select_best(
                            expression_space(chain, scene), target_id, scene, assumed
                        )[0].tree
                    elif method == "max":
                        tree = select_greedy_max(chain, scene, assumed).tree
                    elif method == "random":
                        tree = select_baseline(
                            method,
                            chain,
                            scene,
                            assumed,
                            seed=derive_seed(cfg.seed, "strategy", scene_idx, target_id),
                        ).tree
                    else:
                        tree = select_baseline(method, chain, scene, assumed).tree
                expressions[method] = tree
                ks[method] = depth(tree) if tree is not None else None
                st = stats[method]
                st.n_expressions += 1
                if tree is None:
                    st.n_failures += 1
                else:
                    d = denote(tree, scene, cfg.true_prefs)
                    st.expected_sum += d.get(target_id, 0.0)

            for trial in range(cfg.trials_per_expression):
                trial_seed = derive_seed(cfg.seed, "trial", scene_idx, target_id, trial)
                for method in cfg.methods:
                    tree = expressions[method]
                    rng = random.Random(trial_seed)
                    if tree is None:
                        identified = None
                    else:
                        identified = simulate_listener(
                            tree, scene, cfg.true_prefs, rng, cfg.consistency_coupling
                        )
                    correct = identified == target_id
                    st = stats[method]
                    st.n_trials += 1
                    st.n_correct += int(correct)
                    bucket = st.by_k[_bucket(ks[method])]
                    bucket["trials"] += 1
                    bucket["correct"] += int(correct)
                    if collect_records:
                        records.append(
                            {
                                "scene": scene_idx,
                                "target": target_id,
                                "method": method,
                                "trial": trial,
                                "k": ks[method],
                                "identified": identified,
                                "correct": correct,
                            }
                        )

    return TrialReport(
        config_seed=cfg.seed,
        n_scenes=cfg.n_scenes,
        n_targets=n_targets,
        trials_per_expression=cfg.trials_per_expression,
        stats=stats,
        records=records,
    )


def report_to_dict(report: TrialReport) -> dict:
    out = {
        "seed": report.config_seed,
        "n_scenes": report.n_scenes,
        "n_targets": report.n_targets,
        "trials_per_expression": report.trials_per_expression,
        "methods": {},
    }
    for method, st in report.stats.items():
        out["methods"][method] = {
            "n_expressions": st.n_expressions,
            "n_failures": st.n_failures,
            "n_trials": st.n_trials,
            "n_correct": st.n_correct,
            "accuracy": st.accuracy,
            "expected_accuracy": st.expected_accuracy,
            "by_k": {
                b: {
                    "trials": v["trials"],
                    "correct": v["correct"],
                    "accuracy": (v["correct"] / v["trials"]) if v["trials"] else 0.0,
                }
                for b, v in st.by_k.items()
            },
        }
    return out


def report_to_json(report: TrialReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)


def format_report_text(report: TrialReport) -> str:
    lines = [
        f"seed {report.config_seed}  scenes {report.n_scenes}  targets {report.n_targets}"
        f"  trials/expr {report.trials_per_expression}",
        "",
        f"{'method':<8} {'accuracy':>9} {'expected':>9} {'k=1':>9} {'k>1':>9} {'fail':>5}",
    ]
    for method, st in report.stats.items():
        k1 = st.by_k["k1"]
        k2 = st.by_k["k2plus"]
        k1a = f"{k1['correct'] / k1['trials']:.4f}" if k1["trials"] else "-"
        k2a = f"{k2['correct'] / k2['trials']:.4f}" if k2["trials"] else "-"
        lines.append(
            f"{method:<8} {st.accuracy:>9.4f} {st.expected_accuracy:>9.4f}"
            f" {k1a:>9} {k2a:>9} {st.n_failures:>5}"
        )
    return "\n".join(lines) + "\n"


def records_to_csv(report: TrialReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=["scene", "target", "method", "trial", "k", "identified", "correct"]
    )
    writer.writeheader()
    for rec in report.records:
        writer.writerow(rec)
    return buf.getvalue()
