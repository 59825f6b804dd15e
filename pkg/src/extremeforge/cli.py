"""Command line front end: one subcommand per pipeline stage.

Every subcommand is a thin wrapper over the library operations, so CLI runs
and direct library calls produce byte-identical artifacts.  Exit codes:
0 success, 2 usage error, 1 runtime error.  File outputs are written to a
temp file and renamed into place.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .core import (
    ConditionKind,
    atomic_write_bytes,
    dataset_scan,
    list_content_images,
    load_detections,
    load_image,
    save_image,
)
from .classical import default_params, params_from_json, simulate
from .errors import ExtremeForgeError
from .evaluation import (
    EvalReport,
    evaluate,
    format_report_table,
    format_robustness,
    robustness_report,
)
from .planner import SynthesisPlan, build_plan, execute_plan, plan_cardinality
from .rng import derive_seed
from .server import DEFAULT_PORT, build_state, serve_forever
from .stylize import StyleVector, apply_style, extract_style

ROOT_ENV_VAR = "EXTREMEFORGE_ROOT"


@dataclass(frozen=True)
class Config:
    """Optional defaults shared across subcommands, loaded from JSON."""

    class_names: tuple[str, ...] = ()
    alphas: tuple[float, ...] = (0.0, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
    seed: int = 0
    output_root: str = ""
    server_port: int = DEFAULT_PORT

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        obj = json.loads(Path(path).read_text())
        return cls(
            class_names=tuple(obj.get("class_names", ())),
            alphas=tuple(float(a) for a in obj.get("alphas", cls.alphas)),
            seed=int(obj.get("seed", 0)),
            output_root=str(obj.get("output_root", "")),
            server_port=int(obj.get("server_port", DEFAULT_PORT)),
        )


def _parse_alphas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise ValueError(f"bad alpha list {text!r}: expected comma-separated decimals") from None


def _parse_params(kind: ConditionKind, text: str | None):
    if text is None:
        return default_params(kind)
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    return params_from_json(kind, json.loads(text))


def _load_style(path: Path) -> StyleVector:
    if path.suffix.lower() == ".json":
        return StyleVector.from_json(json.loads(path.read_text()))
    return extract_style(load_image(path), path.stem)


def _write_json(path: Path, obj: dict) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2) + "\n").encode("ascii"))


def cmd_extract_style(args) -> int:
    vec = extract_style(load_image(args.image), args.source_id or Path(args.image).stem)
    _write_json(Path(args.output), vec.to_json())
    print(f"wrote style vector for {vec.source_id!r} to {args.output}")
    return 0


def cmd_stylize(args) -> int:
    content = load_image(args.content)
    style = _load_style(Path(args.style))
    out = apply_style(content, style, args.alpha)
    save_image(out, args.output)
    print(f"wrote {args.output}")
    return 0


def _simulate_tree(args, kind: ConditionKind, params) -> int:
    images = list_content_images(args.path)
    out_root = Path(args.output)
    (out_root / "images").mkdir(parents=True, exist_ok=True)
    (out_root / "labels").mkdir(parents=True, exist_ok=True)

    def run(img_path: Path) -> None:
        out = simulate(load_image(img_path), kind, params, derive_seed(args.seed, img_path.stem))
        save_image(out, out_root / "images" / f"{img_path.stem}.png")
        label = Path(args.path) / "labels" / f"{img_path.stem}.txt"
        if label.is_file():
            atomic_write_bytes(out_root / "labels" / f"{img_path.stem}.txt", label.read_bytes())

    if args.workers <= 1:
        for img_path in images:
            run(img_path)
    else:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(run, images))
    print(f"simulated {kind.value} for {len(images)} images into {out_root}")
    return 0


def cmd_simulate(args) -> int:
    kind = ConditionKind.from_slug(args.kind)
    params = _parse_params(kind, args.params)
    if Path(args.path).is_dir():
        return _simulate_tree(args, kind, params)
    out = simulate(load_image(args.path), kind, params, args.seed)
    save_image(out, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_plan(args) -> int:
    plan = build_plan(
        args.content,
        args.styles,
        _parse_alphas(args.alphas),
        args.output_root,
        dedup_alpha_zero=not args.no_dedup,
        mix_in_originals=not args.no_originals,
    )
    raw, unique = plan_cardinality(plan)
    _write_json(Path(args.output), plan.to_json())
    print(
        f"plan: {len(plan.content_ids)} contents x {len(plan.style_refs)} styles "
        f"x {len(plan.alphas)} alphas -> raw {raw}, unique {unique}; wrote {args.output}"
    )
    return 0


def cmd_synthesize(args) -> int:
    plan = SynthesisPlan.from_json(json.loads(Path(args.plan).read_text()))
    raw, unique = plan_cardinality(plan)
    sink = (lambda oid: print(oid)) if args.verbose else None
    manifest = execute_plan(plan, progress_sink=sink, workers=args.workers)
    print(
        f"synthesized {len(manifest.entries)} outputs into {plan.output_root} "
        f"(raw {raw}, unique {unique})"
    )
    return 0


def cmd_evaluate(args, config: Config) -> int:
    class_names = tuple(args.classes.split(",")) if args.classes else config.class_names
    if not class_names:
        raise ValueError("no class names given (use --classes or a config file)")
    dataset = dataset_scan(args.root, class_names)
    det_dir = Path(args.detections)
    if not det_dir.is_dir():
        raise FileNotFoundError(f"no such detections directory: {det_dir}")
    detections = {}
    for item in dataset.items:
        path = det_dir / f"{item.image_id}.txt"
        if path.is_file():
            detections[item.image_id] = load_detections(path, len(class_names))
    thresholds = _parse_alphas(args.thresholds) if args.thresholds else None
    report = evaluate(dataset, detections, thresholds)
    if args.output:
        _write_json(Path(args.output), report.to_json())
    print(format_report_table(report, label=args.label or Path(args.root).name))
    return 0


def cmd_report(args) -> int:
    reports: dict[str, EvalReport] = {}
    for spec_item in args.reports:
        label, _, path = spec_item.partition("=")
        if not path:
            raise ValueError(f"bad report argument {spec_item!r}: expected LABEL=path.json")
        reports[label] = EvalReport.from_json(json.loads(Path(path).read_text()))
    pairs = []
    for pair in args.pair or []:
        minuend, _, subtrahend = pair.partition(",")
        if not subtrahend:
            raise ValueError(f"bad --pair {pair!r}: expected MINUEND,SUBTRAHEND")
        pairs.append((minuend, subtrahend))
    rr = robustness_report(reports, pairs)
    if args.output:
        _write_json(Path(args.output), rr.to_json())
    print(format_robustness(rr))
    return 0


def resolve_server_paths(
    root_arg: str | None, styles_arg: str | None, config: Config
) -> tuple[str, str]:
    """Dataset root from --root, else the environment, else config."""
    root = root_arg or os.environ.get(ROOT_ENV_VAR) or config.output_root
    if not root:
        raise ValueError(f"no dataset root given (use --root or {ROOT_ENV_VAR})")
    return root, styles_arg or str(Path(root) / "styles")


def cmd_preview_server(args, config: Config) -> int:
    root, styles = resolve_server_paths(args.root, args.styles, config)
    state = build_state(
        root,
        styles,
        class_names=config.class_names,
        plans_dir=args.plans_dir,
        reports_dir=args.reports_dir,
        ui_dir=args.ui_dir,
    )
    port = args.port if args.port is not None else config.server_port
    print(f"serving {root} on http://127.0.0.1:{port}")
    serve_forever(state, port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extremeforge",
        description="Extreme-condition data synthesis and detector evaluation toolkit.",
    )
    parser.add_argument("--config", help="JSON config file with shared defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-style", help="summarize an image's style as a JSON vector")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--source-id", default="")

    p = sub.add_parser("stylize", help="re-render a content image under a style")
    p.add_argument("content")
    p.add_argument("style", help="style image, or a style vector JSON file")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("simulate", help="apply a classical condition simulator")
    p.add_argument("path", help="one image file, or a dataset root for batch mode")
    p.add_argument("--kind", required=True, choices=[k.value for k in ConditionKind])
    p.add_argument("--params", help="params JSON (inline, or @file)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("plan", help="build a synthesis plan from content and style trees")
    p.add_argument("--content", required=True)
    p.add_argument("--styles", required=True)
    p.add_argument("--alphas", required=True, help="comma-separated strength values")
    p.add_argument("--output-root", required=True)
    p.add_argument("--no-dedup", action="store_true", help="keep duplicate alpha-0 outputs")
    p.add_argument("--no-originals", action="store_true", help="do not copy originals into the output")
    p.add_argument("-o", "--output", required=True, help="where to write the plan JSON")

    p = sub.add_parser("synthesize", help="execute a synthesis plan")
    p.add_argument("plan")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("evaluate", help="score a detections directory against a dataset")
    p.add_argument("root")
    p.add_argument("--detections", required=True)
    p.add_argument("--classes", help="comma-separated class names")
    p.add_argument("--thresholds", help="comma-separated IoU thresholds for ap5095")
    p.add_argument("--label", default="")
    p.add_argument("-o", "--output")

    p = sub.add_parser("report", help="compare labeled evaluation reports")
    p.add_argument("reports", nargs="+", metavar="LABEL=report.json")
    p.add_argument("--pair", action="append", metavar="MINUEND,SUBTRAHEND")
    p.add_argument("-o", "--output")

    p = sub.add_parser("serve", help="run the local preview server")
    p.add_argument("--root", help=f"dataset root (or ${ROOT_ENV_VAR})")
    p.add_argument("--styles", help="styles root (default ROOT/styles)")
    p.add_argument("--port", type=int)
    p.add_argument("--plans-dir")
    p.add_argument("--reports-dir")
    p.add_argument("--ui-dir", help="serve this directory's static files at /")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = Config.load(args.config) if args.config else Config()
    handlers = {
        "extract-style": lambda: cmd_extract_style(args),
        "stylize": lambda: cmd_stylize(args),
        "simulate": lambda: cmd_simulate(args),
        "plan": lambda: cmd_plan(args),
        "synthesize": lambda: cmd_synthesize(args),
        "evaluate": lambda: cmd_evaluate(args, config),
        "report": lambda: cmd_report(args),
        "serve": lambda: cmd_preview_server(args, config),
    }
    return handlers[args.command]()


def entrypoint() -> None:
    try:
        sys.exit(main())
    except (ExtremeForgeError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
