"""HTTP front end for the annotation service.

A thin JSON layer over :class:`legit.service.AnnotationService` using the
stdlib threaded HTTP server. Pair images are rendered on demand from the
glyph atlas so every annotator sees exactly the pixels the models see.

Endpoints:
    POST /session              {"annotator_id": ...} -> {"token", "annotator"}
    GET  /batch?token=...      -> {"pairs": [{"pair_id", "img1", "img2"}]}
    POST /label                {"token", "pair_id", "label"} -> ack
    POST /admin/round/advance  {"force": bool?} -> round info
    GET  /admin/export         -> {"annotations": jsonl, "stats": {...}}
    GET  /img/<pair_id>/<1|2>.png -> image/png

All responses carry permissive CORS headers so a browser UI served from
another origin can talk to the service directly.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .atlas import Atlas
from .errors import (
    AlreadyLabeled,
    Disqualified,
    LegitError,
    NoOpenRound,
    NotReserved,
    RoundOpen,
)
from .service import AnnotationService

_ERROR_STATUS = {
    Disqualified: 403,
    NoOpenRound: 409,
    NotReserved: 409,
    AlreadyLabeled: 409,
    RoundOpen: 409,
}


def _status_for(exc: Exception) -> int:
    for kind, status in _ERROR_STATUS.items():
        if isinstance(exc, kind):
            return status
    if isinstance(exc, (ValueError, LegitError)):
        return 400
    if isinstance(exc, KeyError):
        return 404
    return 500


class AnnotationServer:
    """Owns the HTTP server thread; use as a context manager in tests."""

    def __init__(self, service: AnnotationService, atlas: Atlas,
                 host: str = "127.0.0.1", port: int = 8602):
        self.service = service
        self.atlas = atlas
        self._png_cache: dict[tuple[str, int], bytes] = {}
        self._png_lock = threading.Lock()
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def url(self) -> str:
        host = self.httpd.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> "AnnotationServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def render_png(self, pair_id: str, which: int) -> bytes:
        w1, w2 = self.service.pair_words(pair_id)  # KeyError -> 404
        word = w1 if which == 1 else w2
        key = (pair_id, which)
        with self._png_lock:
            cached = self._png_cache.get(key)
            if cached is not None:
                return cached
            png = self.atlas.render_string(word).to_png()
            self._png_cache[key] = png
            return png

    def __enter__(self) -> "AnnotationServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def _make_handler(server: AnnotationServer):
    service = server.service

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            pass

        # -- plumbing ---------------------------------------------------
        def _cors(self):
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def _send_json(self, status: int, doc) -> None:
            body = json.dumps(doc, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self._cors()
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, exc: Exception) -> None:
            self._send_json(_status_for(exc),
                            {"error": type(exc).__name__, "message": str(exc)})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return {}
            try:
                doc = json.loads(raw)
            except json.JSONDecodeError as e:
                raise ValueError(f"request body is not JSON: {e}") from e
            if not isinstance(doc, dict):
                raise ValueError("request body must be a JSON object")
            return doc

        # -- routes -----------------------------------------------------
        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Content-Length", "0")
            self._cors()
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            try:
                if url.path == "/batch":
                    token = parse_qs(url.query).get("token", [""])[0]
                    if not token:
                        raise ValueError("token query parameter is required")
                    self._send_json(200, {"pairs": service.get_batch(token)})
                elif url.path == "/admin/export":
                    export = service.export_dataset()
                    self._send_json(200, {"annotations": export.annotations_jsonl,
                                          "stats": export.stats})
                elif url.path.startswith("/img/"):
                    self._serve_image(url.path)
                else:
                    self._send_json(404, {"error": "NotFound",
                                          "message": url.path})
            except Exception as e:  # noqa: BLE001 - mapped to HTTP statuses
                self._send_error_json(e)

        def do_POST(self):
            url = urlparse(self.path)
            try:
                body = self._read_body()
                if url.path == "/session":
                    annotator_id = body.get("annotator_id", "")
                    token = service.create_session(annotator_id)
                    state = service.annotator_state(annotator_id)
                    self._send_json(200, {"token": token,
                                          "annotator": state.to_dict()})
                elif url.path == "/label":
                    ack = service.submit_label(
                        str(body.get("token", "")), str(body.get("pair_id", "")),
                        str(body.get("label", "")))
                    self._send_json(200, ack)
                elif url.path == "/admin/round/advance":
                    info = service.advance_round(force=bool(body.get("force")))
                    self._send_json(200, info)
                else:
                    self._send_json(404, {"error": "NotFound",
                                          "message": url.path})
            except Exception as e:  # noqa: BLE001
                self._send_error_json(e)

        def _serve_image(self, path: str) -> None:
            parts = path.strip("/").split("/")
            if len(parts) != 3 or parts[2] not in ("1.png", "2.png"):
                self._send_json(404, {"error": "NotFound", "message": path})
                return
            pair_id = parts[1]
            which = 1 if parts[2] == "1.png" else 2
            try:
                png = server.render_png(pair_id, which)
            except KeyError:
                self._send_json(404, {"error": "NotFound",
                                      "message": f"unknown pair {pair_id!r}"})
                return
            self.send_response(200)
            self.send_header("Content-Type", "image/png")
            self.send_header("Content-Length", str(len(png)))
            self.send_header("Cache-Control", "public, max-age=86400")
            self._cors()
            self.end_headers()
            self.wfile.write(png)

    return Handler


def serve_annotation(service: AnnotationService, atlas: Atlas,
                     host: str = "127.0.0.1", port: int = 8602) -> AnnotationServer:
    """Start the annotation HTTP server on a background thread."""
    return AnnotationServer(service, atlas, host=host, port=port).start()
