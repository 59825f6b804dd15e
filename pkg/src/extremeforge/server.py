"""Local HTTP preview server backing the tuning UI.

Serves dataset listings, raw and stylized image previews, condition
simulations, saved evaluation reports, and accepts synthesis plans for
saving.  All handlers are stateless over an index built at startup;
stylization responses are cached by (content, style, alpha) and produced by
the same code path as the command line, so the two can never disagree.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlparse

from .core import ConditionKind, Dataset, atomic_write_bytes, dataset_scan, encode_png, load_image
from .classical import default_params, simulate
from .errors import ExtremeForgeError
from .evaluation import EvalReport
from .planner import SynthesisPlan, plan_cardinality, scan_style_dir
from .stylize import StyleVector, apply_style, check_strength, extract_style

DEFAULT_PORT = 8787

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


@dataclass
class ServerState:
    """Immutable-after-startup index plus per-process caches."""

    root: Path
    dataset: Dataset
    styles: dict[str, tuple[Path, ConditionKind]]
    plans_dir: Path
    reports_dir: Path | None = None
    ui_dir: Path | None = None
    contents_index: list[dict] = field(default_factory=list)
    _style_vectors: dict[str, StyleVector] = field(default_factory=dict)
    _stylize_cache: dict[tuple[str, str, float], bytes] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def content_item(self, image_id: str):
        return self.dataset.find(image_id)

    def style_vector(self, style_id: str) -> StyleVector:
        with self._lock:
            vec = self._style_vectors.get(style_id)
        if vec is None:
            vec = extract_style(load_image(self.styles[style_id][0]), style_id)
            with self._lock:
                self._style_vectors.setdefault(style_id, vec)
        return vec

    def stylize_png(self, content_id: str, style_id: str, alpha: float) -> bytes:
        key = (content_id, style_id, alpha)
        with self._lock:
            cached = self._stylize_cache.get(key)
        if cached is not None:
            return cached
        item = self.content_item(content_id)
        if item is None:
            raise KeyError(content_id)
        out = encode_png(apply_style(item.load(), self.style_vector(style_id), alpha))
        with self._lock:
            self._stylize_cache.setdefault(key, out)
        return out


def build_state(
    root: str | Path,
    styles_root: str | Path,
    class_names: tuple[str, ...] = (),
    plans_dir: str | Path | None = None,
    reports_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> ServerState:
    root = Path(root)
    dataset = dataset_scan(root, class_names or _sniff_class_names(root))
    styles = scan_style_dir(styles_root)
    state = ServerState(
        root=root,
        dataset=dataset,
        styles=styles,
        plans_dir=Path(plans_dir) if plans_dir else root / "plans",
        reports_dir=Path(reports_dir) if reports_dir else None,
        ui_dir=Path(ui_dir) if ui_dir else None,
    )
    for item in dataset.items:
        img = item.load()
        state.contents_index.append(
            {"id": item.image_id, "w": img.width, "h": img.height, "n_boxes": len(item.boxes)}
        )
    return state


def _sniff_class_names(root: Path) -> tuple[str, ...]:
    """Fall back to classes.txt, else to ids covering the labels seen."""
    classes_file = root / "classes.txt"
    if classes_file.is_file():
        names = tuple(line.strip() for line in classes_file.read_text().splitlines() if line.strip())
        if names:
            return names
    highest = -1
    labels_dir = root / "labels"
    if labels_dir.is_dir():
        for path in labels_dir.glob("*.txt"):
            for line in path.read_text().splitlines():
                tokens = line.split()
                if tokens:
                    try:
                        highest = max(highest, int(tokens[0]))
                    except ValueError:
                        pass
    return tuple(f"class{i}" for i in range(highest + 1))


class _Handler(BaseHTTPRequestHandler):
    state: ServerState  # assigned by make_server on the subclass

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code: int, body: bytes, content_type: str) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, code: int, obj) -> None:
        self._send(code, json.dumps(obj).encode("utf-8"), "application/json")

    def _error(self, code: int, message: str) -> None:
        self._json(code, {"error": message})

    def do_GET(self):
        try:
            self._route_get()
        except BrokenPipeError:
            pass
        except (ExtremeForgeError, FileNotFoundError) as exc:
            self._error(404, str(exc))
        except ValueError as exc:
            self._error(400, str(exc))

    def _route_get(self):
        url = urlparse(self.path)
        path = url.path
        query = {k: v[-1] for k, v in parse_qs(url.query).items()}
        state = self.state
        if path == "/api/contents":
            self._json(200, state.contents_index)
        elif path == "/api/styles":
            self._json(200, [{"id": sid, "condition": kind.value} for sid, (_, kind) in sorted(state.styles.items())])
        elif path.startswith("/api/image/"):
            image_id = unquote(path[len("/api/image/"):])
            item = state.content_item(image_id)
            if item is not None:
                self._send(200, encode_png(item.load()), "image/png")
            elif image_id in state.styles:
                self._send(200, encode_png(load_image(state.styles[image_id][0])), "image/png")
            else:
                self._error(404, f"unknown image id {image_id!r}")
        elif path == "/api/stylize":
            self._api_stylize(query)
        elif path == "/api/simulate":
            self._api_simulate(query)
        elif path.startswith("/api/report/"):
            self._api_report(unquote(path[len("/api/report/"):]))
        elif not path.startswith("/api/"):
            self._static(path)
        else:
            self._error(404, f"no such endpoint {path}")

    def _api_stylize(self, query: dict) -> None:
        for key in ("content", "style", "alpha"):
            if key not in query:
                return self._error(400, f"missing query parameter {key!r}")
        alpha = check_strength(float(query["alpha"]))
        content_id, style_id = query["content"], query["style"]
        if self.state.content_item(content_id) is None:
            return self._error(404, f"unknown content id {content_id!r}")
        if style_id not in self.state.styles:
            return self._error(404, f"unknown style id {style_id!r}")
        self._send(200, self.state.stylize_png(content_id, style_id, alpha), "image/png")

    def _api_simulate(self, query: dict) -> None:
        for key in ("content", "kind", "seed"):
            if key not in query:
                return self._error(400, f"missing query parameter {key!r}")
        item = self.state.content_item(query["content"])
        if item is None:
            return self._error(404, f"unknown content id {query['content']!r}")
        kind = ConditionKind.from_slug(query["kind"])
        seed = int(query["seed"])
        out = simulate(item.load(), kind, default_params(kind), seed)
        self._send(200, encode_png(out), "image/png")

    def _api_report(self, label: str) -> None:
        if self.state.reports_dir is None:
            return self._error(404, "no reports directory configured")
        path = self.state.reports_dir / f"{label}.json"
        if "/" in label or not path.is_file():
            return self._error(404, f"no report labeled {label!r}")
        report = EvalReport.from_json(json.loads(path.read_text()))
        self._json(200, report.to_json())

    def _static(self, path: str) -> None:
        if self.state.ui_dir is None:
            return self._error(404, "no UI directory configured")
        rel = path.lstrip("/") or "index.html"
        target = (self.state.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.state.ui_dir.resolve())) or not target.is_file():
            return self._error(404, f"no such file {path}")
        ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self._send(200, target.read_bytes(), ctype)

    def do_POST(self):
        try:
            if urlparse(self.path).path == "/api/plan":
                self._api_plan()
            else:
                self._error(404, f"no such endpoint {self.path}")
        except BrokenPipeError:
            pass
        except (ExtremeForgeError, ValueError) as exc:
            self._error(400, str(exc))

    def _api_plan(self) -> None:
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length)
        obj = json.loads(body.decode("utf-8"))
        # The UI does not know server paths; fill the roots it left blank.
        if not obj.get("content_root"):
            obj["content_root"] = str(self.state.root)
        styles_root = next(iter(self.state.styles.values()))[0].parent.parent
        if not obj.get("styles_root"):
            obj["styles_root"] = str(styles_root)
        if not obj.get("output_root"):
            obj["output_root"] = str(self.state.root / "synth")
        plan = SynthesisPlan.from_json(obj)
        for cid in plan.content_ids:
            if self.state.content_item(cid) is None:
                return self._error(400, f"plan references unknown content id {cid!r}")
        for sid, _kind in plan.style_refs:
            if sid not in self.state.styles:
                return self._error(400, f"plan references unknown style id {sid!r}")
        payload = (json.dumps(plan.to_json(), indent=2) + "\n").encode("ascii")
        digest = hashlib.sha256(payload).hexdigest()[:12]
        self.state.plans_dir.mkdir(parents=True, exist_ok=True)
        path = self.state.plans_dir / f"plan-{digest}.json"
        atomic_write_bytes(path, payload)
        raw, unique = plan_cardinality(plan)
        self._json(200, {"path": str(path), "n_e_raw": raw, "n_unique": unique})


def make_server(state: ServerState, port: int = DEFAULT_PORT, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(state: ServerState, port: int = DEFAULT_PORT, host: str = "127.0.0.1") -> None:
    server = make_server(state, port, host)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
