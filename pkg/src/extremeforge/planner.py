"""Combinatorial synthesis planning and execution.

A plan crosses content images with style references and strength values
(raw count N_c x N_s x N_alpha), optionally adds classical-simulator jobs
and the untouched originals, and is executed into an output dataset tree
with a JSON manifest recording the provenance of every file.  Stylization
and simulation never move pixels geometrically, so each output's label file
is a byte copy of its source's.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .core import (
    IMAGE_SUFFIXES,
    ConditionKind,
    atomic_write_bytes,
    encode_png,
    list_content_images,
    load_image,
)
from .classical import ConditionParams, params_from_json, params_to_json, simulate
from .errors import EmptyDatasetError, PlanInvalidError, UnknownConditionDirError
from .rng import derive_seed
from .stylize import StyleVector, apply_style, check_strength, extract_style


def style_ref_id(kind: ConditionKind, stem: str) -> str:
    return f"{kind.value}__{stem}"


def scan_style_dir(styles_root: str | Path) -> dict[str, tuple[Path, ConditionKind]]:
    """Map style ids to files under one subdirectory per condition.

    Layout: ``styles_root/<condition>/<name>.png``; the subdirectory name
    must be a known condition slug.  Ids are ``<condition>__<name>``.
    """
    styles_root = Path(styles_root)
    if not styles_root.is_dir():
        raise FileNotFoundError(f"no such styles directory: {styles_root}")
    refs: dict[str, tuple[Path, ConditionKind]] = {}
    for sub in sorted(p for p in styles_root.iterdir() if p.is_dir()):
        try:
            kind = ConditionKind.from_slug(sub.name)
        except ValueError as exc:
            raise UnknownConditionDirError(str(exc)) from None
        for img in sorted(p for p in sub.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES):
            refs[style_ref_id(kind, img.stem)] = (img, kind)
    if not refs:
        raise EmptyDatasetError(f"styles directory {styles_root} contains no images")
    return refs


@dataclass(frozen=True)
class SynthesisPlan:
    """Everything needed to synthesize one extreme-condition dataset."""

    content_root: str
    styles_root: str
    content_ids: tuple[str, ...]
    style_refs: tuple[tuple[str, ConditionKind], ...]
    alphas: tuple[float, ...]
    output_root: str
    dedup_alpha_zero: bool = True
    mix_in_originals: bool = True
    ta_jobs: tuple[tuple[ConditionKind, ConditionParams, int], ...] = ()

    def __post_init__(self):
        if len(set(self.content_ids)) != len(self.content_ids):
            raise PlanInvalidError("content ids must be unique")
        style_ids = [sid for sid, _ in self.style_refs]
        if len(set(style_ids)) != len(style_ids):
            raise PlanInvalidError("style ids must be unique")
        for alpha in self.alphas:
            try:
                check_strength(alpha)
            except ValueError as exc:
                raise PlanInvalidError(str(exc)) from None
        if any(b <= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise PlanInvalidError(f"alphas must be strictly increasing, got {list(self.alphas)}")

    def to_json(self) -> dict:
        return {
            "content_root": self.content_root,
            "styles_root": self.styles_root,
            "content_ids": list(self.content_ids),
            "style_refs": [[sid, kind.value] for sid, kind in self.style_refs],
            "alphas": list(self.alphas),
            "output_root": self.output_root,
            "dedup_alpha_zero": self.dedup_alpha_zero,
            "mix_in_originals": self.mix_in_originals,
            "ta_jobs": [[kind.value, params_to_json(params), seed] for kind, params, seed in self.ta_jobs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SynthesisPlan":
        try:
            return cls(
                content_root=str(obj.get("content_root", "")),
                styles_root=str(obj.get("styles_root", "")),
                content_ids=tuple(obj["content_ids"]),
                style_refs=tuple(
                    (sid, ConditionKind.from_slug(slug)) for sid, slug in obj["style_refs"]
                ),
                alphas=tuple(float(a) for a in obj["alphas"]),
                output_root=str(obj.get("output_root", "")),
                dedup_alpha_zero=bool(obj.get("dedup_alpha_zero", True)),
                mix_in_originals=bool(obj.get("mix_in_originals", True)),
                ta_jobs=tuple(
                    (ConditionKind.from_slug(slug), params_from_json(ConditionKind.from_slug(slug), p), int(seed))
                    for slug, p, seed in obj.get("ta_jobs", []) or []
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanInvalidError(f"malformed plan JSON: {exc}") from exc


def plan_cardinality(plan: SynthesisPlan) -> tuple[int, int]:
    """(raw combination count, distinct output count after alpha-0 dedup)."""
    n_c, n_s, n_a = len(plan.content_ids), len(plan.style_refs), len(plan.alphas)
    raw = n_c * n_s * n_a
    if raw == 0:
        return 0, 0
    if plan.dedup_alpha_zero and 0.0 in plan.alphas:
        # Alpha 0 leaves the content untouched whatever the style, so the
        # style axis collapses to a single copy per content.
        return raw, n_c * n_s * (n_a - 1) + n_c
    return raw, raw


def build_plan(
    content_root: str | Path,
    styles_root: str | Path,
    alphas: list[float] | tuple[float, ...],
    output_root: str | Path,
    *,
    dedup_alpha_zero: bool = True,
    mix_in_originals: bool = True,
    ta_jobs: tuple[tuple[ConditionKind, ConditionParams, int], ...] = (),
) -> SynthesisPlan:
    """Scan content and style trees into a deterministic, sorted plan."""
    content_root = Path(content_root)
    content_ids = [p.stem for p in list_content_images(content_root)]
    if not content_ids:
        raise EmptyDatasetError(f"no content images under {content_root}")
    refs = scan_style_dir(styles_root)
    return SynthesisPlan(
        content_root=str(content_root),
        styles_root=str(styles_root),
        content_ids=tuple(content_ids),
        style_refs=tuple((sid, kind) for sid, (_, kind) in sorted(refs.items())),
        alphas=tuple(float(a) for a in alphas),
        output_root=str(output_root),
        dedup_alpha_zero=dedup_alpha_zero,
        mix_in_originals=mix_in_originals,
        ta_jobs=ta_jobs,
    )


@dataclass(frozen=True)
class Manifest:
    """Provenance record: one entry per output file, plus the counts."""

    entries: tuple[dict, ...]
    counts: dict
    partial: bool = False

    def to_json(self) -> dict:
        return {"entries": list(self.entries), "counts": dict(self.counts), "partial": self.partial}

    @classmethod
    def from_json(cls, obj: dict) -> "Manifest":
        return cls(tuple(obj["entries"]), dict(obj["counts"]), bool(obj.get("partial", False)))


def _alpha_token(alpha: float) -> str:
    return f"{alpha:g}"


def _plan_entries(plan: SynthesisPlan) -> list[dict]:
    entries: list[dict] = []
    for cid in plan.content_ids:
        emitted_identity = False
        for sid, _kind in plan.style_refs:
            for alpha in plan.alphas:
                if alpha == 0.0 and plan.dedup_alpha_zero:
                    if not emitted_identity:
                        emitted_identity = True
                        entries.append(
                            {
                                "output_id": f"{cid}__identity__a0",
                                "content_id": cid,
                                "source": {"type": "style", "style_id": sid, "alpha": 0.0},
                            }
                        )
                    continue
                entries.append(
                    {
                        "output_id": f"{cid}__{sid}__a{_alpha_token(alpha)}",
                        "content_id": cid,
                        "source": {"type": "style", "style_id": sid, "alpha": alpha},
                    }
                )
        for kind, params, seed in plan.ta_jobs:
            entries.append(
                {
                    "output_id": f"{cid}__ta_{kind.value}__s{seed}",
                    "content_id": cid,
                    "source": {"type": "ta", "kind": kind.value, "params": params_to_json(params), "seed": seed},
                }
            )
        if plan.mix_in_originals:
            entries.append({"output_id": cid, "content_id": cid, "source": {"type": "original"}})
    ids = [e["output_id"] for e in entries]
    if len(set(ids)) != len(ids):
        raise PlanInvalidError("plan produces colliding output ids")
    return entries


def _content_image_path(content_root: Path, content_id: str) -> Path:
    for suffix in IMAGE_SUFFIXES:
        candidate = content_root / "images" / f"{content_id}{suffix}"
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no image file for content id {content_id!r} under {content_root}")


def execute_plan(
    plan: SynthesisPlan,
    progress_sink: Callable[[str], None] | None = None,
    workers: int = 1,
) -> Manifest:
    """Run every plan entry, writing images, labels, and the manifest.

    Outputs depend only on the input bytes and the plan, never on worker
    scheduling, so any worker count yields a bit-identical tree.  On an IO
    failure the manifest is still written with ``partial`` set, then the
    error propagates.
    """
    content_root = Path(plan.content_root)
    output_root = Path(plan.output_root)
    entries = _plan_entries(plan)
    raw, unique = plan_cardinality(plan)
    (output_root / "images").mkdir(parents=True, exist_ok=True)
    (output_root / "labels").mkdir(parents=True, exist_ok=True)

    style_files = scan_style_dir(plan.styles_root) if plan.style_refs else {}
    for sid, _kind in plan.style_refs:
        if sid not in style_files:
            raise FileNotFoundError(f"style id {sid!r} not found under {plan.styles_root}")
    style_cache: dict[str, StyleVector] = {}

    def style_vector(sid: str) -> StyleVector:
        # Benign race: extraction is deterministic, duplicates are identical.
        if sid not in style_cache:
            style_cache[sid] = extract_style(load_image(style_files[sid][0]), sid)
        return style_cache[sid]

    def copy_label(content_id: str, output_id: str) -> None:
        src = content_root / "labels" / f"{content_id}.txt"
        if src.is_file():
            atomic_write_bytes(output_root / "labels" / f"{output_id}.txt", src.read_bytes())

    def run_entry(entry: dict) -> None:
        source = entry["source"]
        cid = entry["content_id"]
        src_path = _content_image_path(content_root, cid)
        if source["type"] == "original":
            atomic_write_bytes(output_root / "images" / f"{entry['output_id']}{src_path.suffix}", src_path.read_bytes())
        else:
            img = load_image(src_path)
            if source["type"] == "style":
                out = apply_style(img, style_vector(source["style_id"]), source["alpha"])
            else:
                kind = ConditionKind.from_slug(source["kind"])
                params = params_from_json(kind, source["params"])
                out = simulate(img, kind, params, derive_seed(source["seed"], cid))
            atomic_write_bytes(output_root / "images" / f"{entry['output_id']}.png", encode_png(out))
        copy_label(cid, entry["output_id"])
        if progress_sink is not None:
            progress_sink(entry["output_id"])

    done: list[dict] = []
    try:
        if workers <= 1:
            for entry in entries:
                run_entry(entry)
                done.append(entry)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for entry, _ in zip(entries, pool.map(run_entry, entries)):
                    done.append(entry)
    except OSError:
        partial = Manifest(
            tuple(done),
            {
                "n_c": len(plan.content_ids),
                "n_s": len(plan.style_refs),
                "n_alpha": len(plan.alphas),
                "n_e_raw": raw,
                "n_unique": unique,
            },
            partial=True,
        )
        atomic_write_bytes(
            output_root / "manifest.json",
            json.dumps(partial.to_json(), indent=2).encode("ascii") + b"\n",
        )
        raise

    manifest = Manifest(
        tuple(entries),
        {
            "n_c": len(plan.content_ids),
            "n_s": len(plan.style_refs),
            "n_alpha": len(plan.alphas),
            "n_e_raw": raw,
            "n_unique": unique,
        },
    )
    atomic_write_bytes(
        output_root / "manifest.json",
        json.dumps(manifest.to_json(), indent=2).encode("ascii") + b"\n",
    )
    return manifest
