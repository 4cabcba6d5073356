"""Black-box victim-model clients and a bundled toy text classifier.

A victim is any model that maps text to per-label scores. Two transports
are supported, both speaking the same schema: a subprocess exchanging one
JSON object per line over stdin/stdout, and an HTTP endpoint accepting
POST /predict. Requests are ``{"id": ..., "text": ...}`` and responses
``{"id": ..., "scores": {label: float}}``.

The bundled :class:`ToyVictim` is a character-ngram logistic classifier
trained at run time, so degradation experiments run offline. Run
``python3 -m legit.victim --train corpus.jsonl`` to serve it over either
transport.
"""

from __future__ import annotations

import argparse
import json
import shlex
import subprocess
import sys
import urllib.error
import urllib.request
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import LogRegPhi
from .errors import FormatError, SchemaMismatch, VictimUnavailable

SCORE_KEY = "positive"
NGRAM_SIZES = (2, 3)
FEATURE_DIM = 512


# ---------------------------------------------------------------------------
# bundled toy victim

def _featurize(text: str, dim: int = FEATURE_DIM) -> np.ndarray:
    """Hashed character-ngram counts; crc32 keeps the hash process-stable."""
    counts = np.zeros(dim, dtype=np.float64)
    padded = f" {text.lower()} "
    for size in NGRAM_SIZES:
        for i in range(len(padded) - size + 1):
            gram = padded[i:i + size]
            counts[zlib.crc32(gram.encode("utf-8")) % dim] += 1.0
    return counts


class ToyVictim:
    """Character-ngram logistic classifier over hashed count features."""

    def __init__(self, clf: LogRegPhi, dim: int = FEATURE_DIM):
        self.clf = clf
        self.dim = dim

    @classmethod
    def train(cls, texts: list[str], labels: list[int],
              dim: int = FEATURE_DIM) -> "ToyVictim":
        if len(texts) != len(labels) or not texts:
            raise ValueError("texts and labels must be nonempty and aligned")
        x = np.stack([_featurize(t, dim) for t in texts])
        y = np.asarray(labels, dtype=bool)
        clf = LogRegPhi.fit(x, y, lr=0.5, tol=1e-4, max_iters=500)
        return cls(clf, dim)

    def predict_scores(self, text: str) -> dict[str, float]:
        z = float(self.clf.decision(_featurize(text, self.dim)[None, :])[0])
        if z >= 0:
            p = 1.0 / (1.0 + np.exp(-z))
        else:
            e = np.exp(z)
            p = e / (1.0 + e)
        return {SCORE_KEY: float(p)}

    def score_texts(self, texts: list[str]) -> list[dict[str, float]]:
        return [self.predict_scores(t) for t in texts]


# ---------------------------------------------------------------------------
# transports

@dataclass(frozen=True)
class VictimSpec:
    """Address of a black-box victim: how to reach it and what it does."""

    transport: str  # "subprocess" | "http"
    target: str     # command line or base URL
    task: str = "binary"

    def __post_init__(self):
        if self.transport not in ("subprocess", "http"):
            raise ValueError(f"unknown transport {self.transport!r}")

    @classmethod
    def parse(cls, text: str) -> "VictimSpec":
        """Parse CLI shorthand: ``cmd:<command>`` or ``http(s)://<url>``."""
        if text.startswith("cmd:"):
            return cls("subprocess", text[4:])
        if text.startswith(("http://", "https://")):
            return cls("http", text)
        raise ValueError(f"victim must look like cmd:<exe> or http://<url>, got {text!r}")


def _check_response(doc, expected_id) -> dict[str, float]:
    if not isinstance(doc, dict) or "scores" not in doc:
        raise SchemaMismatch(f"victim response lacks 'scores': {doc!r}")
    if doc.get("id") != expected_id:
        raise SchemaMismatch(
            f"victim response id {doc.get('id')!r} does not match request {expected_id!r}")
    scores = doc["scores"]
    if (not isinstance(scores, dict) or not scores
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in scores.values())):
        raise SchemaMismatch(f"victim scores must map labels to numbers: {scores!r}")
    return {str(k): float(v) for k, v in scores.items()}


class SubprocessVictim:
    """Lock-step JSONL client for a victim child process."""

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, encoding="utf-8")
        except OSError as e:
            raise VictimUnavailable(f"cannot start victim {argv!r}: {e}") from e

    def score_texts(self, texts: list[str]) -> list[dict[str, float]]:
        out = []
        for i, text in enumerate(texts):
            line = json.dumps({"id": i, "text": text}, ensure_ascii=False)
            try:
                assert self.proc.stdin is not None and self.proc.stdout is not None
                self.proc.stdin.write(line + "\n")
                self.proc.stdin.flush()
                reply = self.proc.stdout.readline()
            except (BrokenPipeError, OSError) as e:
                raise VictimUnavailable(f"victim process pipe failed: {e}") from e
            if not reply:
                err = self.proc.stderr.read() if self.proc.stderr else ""
                raise VictimUnavailable(
                    f"victim process closed its output{': ' + err.strip() if err else ''}")
            try:
                doc = json.loads(reply)
            except json.JSONDecodeError as e:
                raise SchemaMismatch(f"victim reply is not JSON: {reply!r}") from e
            out.append(_check_response(doc, i))
        return out

    def close(self) -> None:
        if self.proc.poll() is None:
            if self.proc.stdin is not None:
                self.proc.stdin.close()
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def __enter__(self) -> "SubprocessVictim":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class HTTPVictim:
    """POST /predict client; one request per text."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.endpoint = base_url.rstrip("/") + "/predict"
        self.timeout = timeout

    def score_texts(self, texts: list[str]) -> list[dict[str, float]]:
        out = []
        for i, text in enumerate(texts):
            body = json.dumps({"id": i, "text": text}, ensure_ascii=False).encode("utf-8")
            req = urllib.request.Request(
                self.endpoint, data=body, headers={"Content-Type": "application/json"})
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = resp.read()
            except urllib.error.HTTPError as e:
                raise VictimUnavailable(
                    f"victim endpoint returned HTTP {e.code}") from e
            except (urllib.error.URLError, OSError) as e:
                raise VictimUnavailable(f"victim endpoint unreachable: {e}") from e
            try:
                doc = json.loads(payload)
            except json.JSONDecodeError as e:
                raise SchemaMismatch(f"victim reply is not JSON: {payload!r}") from e
            out.append(_check_response(doc, i))
        return out

    def close(self) -> None:
        pass

    def __enter__(self) -> "HTTPVictim":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_victim(spec: VictimSpec | str):
    """Client for a victim spec (or its CLI shorthand)."""
    if isinstance(spec, str):
        spec = VictimSpec.parse(spec)
    if spec.transport == "subprocess":
        return SubprocessVictim(spec.target)
    return HTTPVictim(spec.target)


# ---------------------------------------------------------------------------
# serving the bundled victim

def load_labeled_corpus(path: str | Path) -> tuple[list[str], list[int]]:
    """Read a JSONL corpus of {"text": str, "label": 0|1} records."""
    texts: list[str] = []
    labels: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                texts.append(str(doc["text"]))
                labels.append(int(doc["label"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise FormatError(f"{path}:{lineno}: bad corpus record: {e}") from e
    if not texts:
        raise FormatError(f"{path}: corpus is empty")
    return texts, labels


def serve_stdio(victim: ToyVictim, stdin=None, stdout=None) -> None:
    """Answer JSONL requests until stdin closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
            reply = {"id": doc.get("id"), "scores": victim.predict_scores(str(doc["text"]))}
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            reply = {"error": f"bad request: {e}"}
        stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
        stdout.flush()


def serve_http(victim: ToyVictim, port: int, host: str = "127.0.0.1"):
    """Start a threaded HTTP server answering POST /predict; returns it."""
    import http.server

    class Handler(http.server.BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802 (http.server naming)
            if self.path != "/predict":
                self.send_error(404)
                return
            length = int(self.headers.get("Content-Length", 0))
            try:
                doc = json.loads(self.rfile.read(length))
                reply = {"id": doc.get("id"),
                         "scores": victim.predict_scores(str(doc["text"]))}
                status = 200
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                reply, status = {"error": f"bad request: {e}"}, 400
            body = json.dumps(reply, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):  # silence per-request chatter
            pass

    server = http.server.ThreadingHTTPServer((host, port), Handler)
    return server


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="legit-victim",
        description="Serve the bundled character-ngram victim classifier.")
    parser.add_argument("--train", required=True,
                        help="JSONL corpus of {text, label} records to fit on")
    parser.add_argument("--mode", choices=("stdio", "http"), default="stdio")
    parser.add_argument("--port", type=int, default=8601)
    args = parser.parse_args(argv)
    texts, labels = load_labeled_corpus(args.train)
    victim = ToyVictim.train(texts, labels)
    if args.mode == "stdio":
        serve_stdio(victim)
        return 0
    server = serve_http(victim, args.port)
    print(f"victim listening on http://127.0.0.1:{args.port}/predict", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
