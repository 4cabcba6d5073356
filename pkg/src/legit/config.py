"""Flat configuration file shared by all command-line workflows.

The format is a strict subset of TOML: one ``key = value`` assignment per
line, ``#`` comments, and blank lines. Values may be double-quoted
strings (no escape sequences), integers (decimal or ``0x`` hex), floats,
booleans ``true``/``false``, or flat ``[a, b, c]`` lists of those.
Nested tables are not supported.

The config path comes from ``--config`` or the ``LEGIT_CONFIG``
environment variable; command-line flags override file values.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError

ENV_VAR = "LEGIT_CONFIG"


def _parse_scalar(text: str, where: str):
    text = text.strip()
    if not text:
        raise FormatError(f"{where}: empty value")
    if text.startswith('"'):
        if len(text) < 2 or not text.endswith('"'):
            raise FormatError(f"{where}: unterminated string {text!r}")
        return text[1:-1]
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text, 0)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"{where}: cannot parse value {text!r}") from None


def _split_list(text: str, where: str) -> list[str]:
    items: list[str] = []
    current = ""
    in_string = False
    for ch in text:
        if ch == '"':
            in_string = not in_string
            current += ch
        elif ch == "," and not in_string:
            items.append(current)
            current = ""
        else:
            current += ch
    if in_string:
        raise FormatError(f"{where}: unterminated string in list")
    if current.strip():
        items.append(current)
    return items


def parse_flat_toml(text: str, source: str = "<config>") -> dict:
    """Parse the flat key/value format into a dict; raises FormatError."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        where = f"{source}:{lineno}"
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        # strip trailing comments outside of strings
        cleaned = ""
        in_string = False
        for ch in line:
            if ch == '"':
                in_string = not in_string
            if ch == "#" and not in_string:
                break
            cleaned += ch
        line = cleaned.strip()
        if "=" not in line:
            raise FormatError(f"{where}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not key.replace("_", "").replace(".", "").isalnum():
            raise FormatError(f"{where}: bad key {key!r}")
        if key in out:
            raise FormatError(f"{where}: duplicate key {key!r}")
        if value.startswith("["):
            if not value.endswith("]"):
                raise FormatError(f"{where}: unterminated list")
            inner = value[1:-1].strip()
            out[key] = ([] if not inner else
                        [_parse_scalar(item, where)
                         for item in _split_list(inner, where)])
        else:
            out[key] = _parse_scalar(value, where)
    return out


@dataclass(frozen=True)
class GlobalConfig:
    """Settings shared across subcommands; flags override file values."""

    font: str | None = None          # glyph font path (None: bundled font)
    cp_start: int = 0x0000           # codepoint range for index building
    cp_end: int = 0x04FF
    top: int = 100                   # neighbor table depth
    seed: int | None = None          # default seed for randomized commands
    tables: tuple[str, ...] = ()     # "model_id=path" neighbor-table entries
    scorer: str | None = None        # scorer model path ("default" = bundled)
    vocab: str | None = None         # word-list path for the annotation service
    gold: str | None = None          # gold-pair path (None: bundled set)
    data_dir: str | None = None      # dataset directory for ingest
    host: str = "127.0.0.1"
    port: int = 8602

    @classmethod
    def from_mapping(cls, values: dict, source: str = "<config>") -> "GlobalConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs: dict = {}
        for key, value in values.items():
            if key not in known:
                raise FormatError(f"{source}: unknown config key {key!r}")
            if key == "tables":
                if not isinstance(value, list) or not all(
                        isinstance(v, str) for v in value):
                    raise FormatError(f"{source}: tables must be a string list")
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise FormatError(f"{source}: {e}") from e

    @classmethod
    def load(cls, path: str | Path | None = None) -> "GlobalConfig":
        """Read config from ``path``, else $LEGIT_CONFIG, else defaults."""
        if path is None:
            path = os.environ.get(ENV_VAR) or None
        if path is None:
            return cls()
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise FormatError(f"cannot read config {path}: {e}") from e
        return cls.from_mapping(parse_flat_toml(text, str(path)), str(path))

    def merged(self, **overrides) -> "GlobalConfig":
        """A copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["tables"] = list(d["tables"])
        return d
