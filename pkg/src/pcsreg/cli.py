"""Command-line interface.

Verbs: generate, resolve, explain, evaluate, schema.  Primary output goes
to stdout and is byte-deterministic for fixed inputs and seeds; stderr
carries diagnostics only.  Exit codes: 1 usage, 2 invalid scene/config,
3 invalid target, 4 generation failed, 5 expression parse failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .frames import FrameError, PreferenceTable, default_preferences, load_preferences
from .generator import (
    GenerationError,
    build_landmark_chain,
    describe_visual,
    expression_space,
    realize,
)
from .harness import (
    HarnessError,
    config_from_dict,
    format_report_text,
    records_to_csv,
    report_to_json,
    run_comparison,
)
from .optimizer import score, select_baseline, select_best, select_greedy_max
from .resolver import (
    Leaf,
    ParseError,
    denote,
    depth,
    parse_expression,
    parse_expression_json,
    tree_to_dict,
)
from .scene import Scene, SceneError, attribute_vocabulary, load_scene

EXIT_USAGE = 1
EXIT_BAD_SCENE = 2
EXIT_BAD_TARGET = 3
EXIT_GENERATION_FAILED = 4
EXIT_PARSE_FAILURE = 5

log = logging.getLogger("pcsreg")

# Imperative verb prefixes stripped (case-insensitively) before parsing;
# the expression model covers only the referring noun phrase.
IMPERATIVE_PREFIXES = (
    "pick up ",
    "give me ",
    "hand me ",
    "point to ",
    "point at ",
    "pick ",
    "grab ",
    "take ",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("PCSREG_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")


def _load_scene(path: str) -> Scene:
    try:
        return load_scene(Path(path))
    except FileNotFoundError:
        print(f"error: scene file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_SCENE)
    except SceneError as exc:
        print(f"error: invalid scene: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_SCENE)


def _load_prefs(path: str | None) -> PreferenceTable:
    if path is None:
        return default_preferences()
    try:
        return load_preferences(Path(path))
    except FileNotFoundError:
        print(f"error: preferences file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_SCENE)
    except FrameError as exc:
        print(f"error: invalid preferences: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_SCENE)


def _check_target(scene: Scene, target: str) -> None:
    if not scene.has_entity(target):
        print(f"error: no entity with id {target!r}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_TARGET)
    if not scene.entity(target).referable_as_target:
        print(f"error: entity {target!r} cannot be a reference target", file=sys.stderr)
        raise SystemExit(EXIT_BAD_TARGET)


def _strategy_json(strategy) -> list[dict]:
    return [
        {"kind": kind.value, "origin": origin} for kind, origin in strategy.assignments
    ]


def _select(method: str, chain, scene, prefs, seed):
    if method == "pcsreg":
        return select_best(expression_space(chain, scene), chain.target, scene, prefs)
    if method == "max":
        cand = select_greedy_max(chain, scene, prefs)
    else:
        cand = select_baseline(method, chain, scene, prefs, seed=seed)
    return cand, score(cand, chain.target, scene, prefs)


def cmd_generate(args) -> int:
    scene = _load_scene(args.scene)
    _check_target(scene, args.target)
    prefs = _load_prefs(args.prefs)
    try:
        chain = build_landmark_chain(args.target, scene, prefs)
        candidate, sc = _select(args.method, chain, scene, prefs, args.seed)
    except GenerationError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        fallback = describe_visual(args.target, set(scene.referable_ids()), scene)
        if not fallback.distinguishing:
            print(
                "warning: best-effort ambiguous description: "
                f"{realize(Leaf(fallback.attrs))!r}",
                file=sys.stderr,
            )
        raise SystemExit(EXIT_GENERATION_FAILED)
    if not chain.converged:
        log.info("preference updating hit the rebuild cap without a fixed point")
    if args.json:
        print(
            json.dumps(
                {
                    "surface": candidate.surface,
                    "method": args.method,
                    "target": args.target,
                    "k": chain.k,
                    "tree": tree_to_dict(candidate.tree),
                    "strategy": _strategy_json(candidate.strategy),
                    "appropriateness": sc.appropriateness,
                    "effectiveness": sc.effectiveness,
                    "total": sc.total,
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(candidate.surface)
    return 0


def _read_expression(raw: str, scene: Scene):
    text = raw
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    stripped = text.strip()
    if stripped.startswith("{"):
        return parse_expression_json(stripped)
    lowered = stripped.lower()
    if lowered.startswith("please "):
        stripped = stripped[len("please ") :]
        lowered = stripped.lower()
    for prefix in IMPERATIVE_PREFIXES:
        if lowered.startswith(prefix):
            stripped = stripped[len(prefix) :]
            break
    return parse_expression(stripped, attribute_vocabulary(scene))


def cmd_resolve(args) -> int:
    scene = _load_scene(args.scene)
    prefs = _load_prefs(args.prefs)
    if args.target is not None:
        _check_target(scene, args.target)
    try:
        tree = _read_expression(args.expr, scene)
    except ParseError as exc:
        print(f"error: cannot parse expression: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE_FAILURE)
    d = denote(tree, scene, prefs)

    if args.json:
        doc = {
            "unresolvable": d.unresolvable,
            "probs": None if d.unresolvable else dict(d.probs),
            "argmax": d.argmax(),
            "k": depth(tree),
        }
        if args.target is not None:
            eff = 0.0 if d.unresolvable else d.get(args.target, 0.0)
            top = 0.0 if d.unresolvable else max(d.probs.values())
            doc["target"] = args.target
            doc["effectiveness"] = eff
            doc["appropriateness"] = 0 if d.unresolvable else int(eff >= top - 1e-12)
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0

    if d.unresolvable:
        print("unresolvable")
        return 0
    for eid, p in sorted(d.probs.items(), key=lambda kv: (-kv[1], kv[0])):
        print(f"{eid}\t{p:.6f}")
    print(f"argmax\t{d.argmax()}")
    if args.target is not None:
        eff = d.get(args.target, 0.0)
        top = max(d.probs.values())
        print(f"appropriateness\t{int(eff >= top - 1e-12)}")
        print(f"effectiveness\t{eff:.6f}")
    return 0


def cmd_explain(args) -> int:
    scene = _load_scene(args.scene)
    _check_target(scene, args.target)
    prefs = _load_prefs(args.prefs)
    try:
        chain = build_landmark_chain(args.target, scene, prefs)
        candidates = expression_space(chain, scene)
        selected, _ = select_best(candidates, args.target, scene, prefs)
    except GenerationError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_GENERATION_FAILED)
    rows = []
    for cand in candidates:
        sc = score(cand, args.target, scene, prefs)
        d = denote(cand.tree, scene, prefs)
        rows.append(
            {
                "surface": cand.surface,
                "strategy": _strategy_json(cand.strategy),
                "appropriateness": sc.appropriateness,
                "effectiveness": sc.effectiveness,
                "total": sc.total,
                "denotation": None if d.unresolvable else dict(d.probs),
            }
        )
    print(
        json.dumps(
            {
                "target": args.target,
                "k": chain.k,
                "candidates": rows,
                "selected_index": candidates.index(selected),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def cmd_evaluate(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg = config_from_dict(doc)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_SCENE)
    except (json.JSONDecodeError, HarnessError, FrameError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_SCENE)
    report = run_comparison(cfg, collect_records=cfg.per_trial_csv or args.out is not None)
    text = format_report_text(report)
    print(text, end="")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
        (out / "report.txt").write_text(text, encoding="utf-8")
        if cfg.per_trial_csv:
            (out / "trials.csv").write_text(records_to_csv(report), encoding="utf-8")
        log.info("reports written to %s", out)
    return 0


SCENE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "Scene",
    "type": "object",
    "required": ["table", "entities"],
    "properties": {
        "north": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
            "description": "unit vector; default [0, 1]",
        },
        "table": {
            "type": "object",
            "required": ["min", "max"],
            "properties": {
                "min": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "max": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
        "entities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "category", "pos"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": ["object", "speaker", "listener"]},
                    "category": {"type": "string"},
                    "color": {"type": ["string", "null"]},
                    "shape": {"type": ["string", "null"]},
                    "pos": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    "heading": {
                        "type": ["number", "null"],
                        "description": "radians CCW from +x; null = no orientation",
                    },
                },
            },
        },
    },
}

PREFS_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "Preferences",
    "type": "object",
    "required": ["speaker", "listener", "oriented_object", "unoriented_object"],
    "additionalProperties": False,
    "properties": {
        key: {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
            "minItems": 4,
            "maxItems": 4,
            "description": "order: egocentric, addressee, intrinsic, extrinsic; sums to 1 within 1e-6",
        }
        for key in ("speaker", "listener", "oriented_object", "unoriented_object")
    },
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "TrialConfig",
    "type": "object",
    "required": ["seed", "n_scenes", "trials_per_expression"],
    "properties": {
        "seed": {"type": "integer"},
        "n_scenes": {"type": "integer", "minimum": 1},
        "trials_per_expression": {"type": "integer", "minimum": 1},
        "methods": {
            "type": "array",
            "items": {"enum": ["pcsreg", "max", "robot", "human", "random"]},
            "minItems": 1,
        },
        "true_prefs": {"$ref": "#/definitions/preferences"},
        "assumed_prefs": {"$ref": "#/definitions/preferences"},
        "objects": {"type": "array", "items": {"type": "integer", "minimum": 2}},
        "categories": {"type": "array", "items": {"type": "string"}},
        "colors": {"type": "array", "items": {"type": "string"}},
        "shapes": {"type": "array", "items": {"type": "string"}},
        "consistency_coupling": {"type": "number", "minimum": 0, "maximum": 1},
        "context_window": {"const": [0, 1]},
        "per_trial_csv": {"type": "boolean"},
    },
    "definitions": {"preferences": PREFS_SCHEMA},
}


def cmd_schema(_args) -> int:
    print(
        json.dumps(
            {"scene": SCENE_SCHEMA, "preferences": PREFS_SCHEMA, "config": CONFIG_SCHEMA},
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcsreg", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    gen = sub.add_parser("generate", help="generate the best referring expression for a target")
    gen.add_argument("--scene", required=True, help="scene JSON file")
    gen.add_argument("--target", required=True, help="target entity id")
    gen.add_argument("--prefs", help="preference table JSON file (default: built-in)")
    gen.add_argument(
        "--method",
        choices=["pcsreg", "max", "robot", "human", "random"],
        default="pcsreg",
    )
    gen.add_argument("--seed", type=int, help="seed (required for --method random)")
    gen.add_argument("--json", action="store_true", help="emit a JSON detail document")
    gen.set_defaults(func=cmd_generate)

    res = sub.add_parser("resolve", help="resolve an expression to an entity distribution")
    res.add_argument("--scene", required=True)
    res.add_argument("--expr", required=True, help="surface string, JSON object, or @file")
    res.add_argument("--prefs")
    res.add_argument("--target", help="report appropriateness/effectiveness for this id")
    res.add_argument("--json", action="store_true")
    res.set_defaults(func=cmd_resolve)

    exp = sub.add_parser("explain", help="score every candidate expression for a target")
    exp.add_argument("--scene", required=True)
    exp.add_argument("--target", required=True)
    exp.add_argument("--prefs")
    exp.set_defaults(func=cmd_explain)

    ev = sub.add_parser("evaluate", help="run the seeded method comparison")
    ev.add_argument("--config", required=True, help="trial config JSON file")
    ev.add_argument("--out", help="directory for report.json / report.txt")
    ev.set_defaults(func=cmd_evaluate)

    sch = sub.add_parser("schema", help="print the scene/preferences/config JSON schemas")
    sch.set_defaults(func=cmd_schema)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "generate" and args.method == "random" and args.seed is None:
        print("error: --method random requires --seed", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
