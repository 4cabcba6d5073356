"""Glyph embeddings, cosine distances, and exact nearest-neighbor tables.

The imgdot embedding of a codepoint is its flattened binarized bitmap;
distances between such vectors involve only integer-valued dot products,
so blockwise matrix products and per-pair evaluation agree bit for bit.
External embeddings (e.g. OCR-encoder features produced elsewhere) are
ingested from a plain text format and run through the same machinery.

Embedding file format: header line ``model_id dim count``, then one line
``U+XXXX v1 v2 ... vdim`` per codepoint. Neighbor tables are JSON lines
``{"cp": "U+XXXX", "nbrs": [["U+YYYY", d], ...]}`` preceded by one header
line ``{"model_id": ..., "top": ...}``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .atlas import Atlas, CodepointSet, GlyphBitmap
from .errors import (DimensionMismatch, FormatError, MissingCodepoints,
                     UnknownCodepoint, ZeroVector)

DEFAULT_TOP = 100
_BLOCK = 256  # rows per block in the pairwise distance sweep


def imgdot_embed(bitmap: GlyphBitmap) -> np.ndarray:
    """Flattened {0,1} ink vector of a rendered glyph."""
    vec = bitmap.ink_mask().astype(np.float32).ravel()
    if not vec.any():
        raise ZeroVector(f"all-background bitmap (codepoint {bitmap.codepoint!r})")
    return vec


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v) in [0, 2], accumulated in float64.

    The denominator is sqrt(dot(u,u) * dot(v,v)) so that identical vectors
    give exactly 0.0.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DimensionMismatch(f"vector lengths differ: {u.shape[0]} vs {v.shape[0]}")
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    if uu == 0.0 or vv == 0.0:
        raise ZeroVector("cosine distance undefined for zero vectors")
    d = 1.0 - float(np.dot(u, v)) / math.sqrt(uu * vv)
    return min(max(d, 0.0), 2.0)


@dataclass
class EmbeddingMatrix:
    """One embedding row per codepoint, aligned to CodepointSet order."""

    model_id: str
    dim: int
    codepoints: tuple[int, ...]
    rows: np.ndarray | sp.csr_matrix  # (n, dim) float32

    def __post_init__(self):
        n = self.rows.shape[0]
        if n != len(self.codepoints):
            raise DimensionMismatch("row count does not match codepoint count")
        if self.rows.shape[1] != self.dim:
            raise DimensionMismatch("row width does not match dim")
        self._index = {cp: i for i, cp in enumerate(self.codepoints)}
        self._dist_cache: dict[tuple[int, int], float] = {}
        sq = self._sq_norms()
        if sq.size and sq.min() == 0.0:
            bad = [f"U+{self.codepoints[i]:04X}" for i in np.where(sq == 0.0)[0][:5]]
            raise ZeroVector(f"zero embedding rows: {', '.join(bad)}")

    def _sq_norms(self) -> np.ndarray:
        if sp.issparse(self.rows):
            return np.asarray(self.rows.multiply(self.rows).sum(axis=1), dtype=np.float64).ravel()
        r = self.rows.astype(np.float64, copy=False)
        return np.einsum("ij,ij->i", r, r)

    def row(self, cp: int) -> np.ndarray:
        try:
            i = self._index[cp]
        except KeyError:
            raise UnknownCodepoint(cp) from None
        if sp.issparse(self.rows):
            return np.asarray(self.rows[i].todense()).ravel()
        return np.asarray(self.rows[i]).ravel()

    def __contains__(self, cp: int) -> bool:
        return cp in self._index

    def distance(self, cp1: int, cp2: int) -> float:
        # Rows are immutable after construction, so pair distances are
        # memoized; corpus-scale attack/recovery loops revisit the same
        # few thousand character pairs millions of times.
        key = (cp1, cp2) if cp1 <= cp2 else (cp2, cp1)
        cached = self._dist_cache.get(key)
        if cached is None:
            cached = cosine_distance(self.row(cp1), self.row(cp2))
            self._dist_cache[key] = cached
        return cached


def build_imgdot_matrix(atlas: Atlas, cpset: CodepointSet) -> EmbeddingMatrix:
    """Sparse {0,1} matrix of flattened glyph bitmaps."""
    dim = atlas.cfg.canvas_w * atlas.cfg.canvas_h
    indptr = [0]
    indices: list[np.ndarray] = []
    for cp in cpset:
        mask = atlas.render_glyph(cp).ink_mask().ravel()
        idx = np.flatnonzero(mask)
        indices.append(idx)
        indptr.append(indptr[-1] + idx.size)
    if indices:
        ind = np.concatenate(indices)
    else:
        ind = np.zeros(0, dtype=np.int64)
    data = np.ones(ind.size, dtype=np.float32)
    rows = sp.csr_matrix((data, ind, np.asarray(indptr)), shape=(len(cpset), dim))
    return EmbeddingMatrix(model_id="imgdot", dim=dim, codepoints=tuple(cpset), rows=rows)


class NeighborTable:
    """Per-codepoint substitute lists sorted by ascending cosine distance.

    Self is excluded; equal distances break ties by ascending codepoint. At
    most ``top`` neighbors are retained per codepoint.
    """

    def __init__(self, model_id: str, neighbors: dict[int, list[tuple[int, float]]], top: int):
        self.model_id = model_id
        self.top = top
        self._neighbors = neighbors

    def __contains__(self, cp: int) -> bool:
        return cp in self._neighbors

    def __len__(self) -> int:
        return len(self._neighbors)

    def codepoints(self) -> list[int]:
        return sorted(self._neighbors)

    def neighbors(self, cp: int) -> list[tuple[int, float]]:
        try:
            return self._neighbors[cp]
        except KeyError:
            raise UnknownCodepoint(cp) from None

    def kth_neighbor(self, cp: int, k: int) -> int:
        """k-th nearest substitute (1-based); k beyond the list clamps to the last entry."""
        if k < 1:
            raise ValueError("rank k must be >= 1")
        lst = self.neighbors(cp)
        return lst[min(k, len(lst)) - 1][0]

    def kth_distance(self, cp: int, k: int) -> float:
        lst = self.neighbors(cp)
        return lst[min(max(k, 1), len(lst)) - 1][1]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"model_id": self.model_id, "top": self.top}) + "\n")
            for cp in self.codepoints():
                nbrs = [[f"U+{n:04X}", d] for n, d in self._neighbors[cp]]
                fh.write(json.dumps({"cp": f"U+{cp:04X}", "nbrs": nbrs}) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "NeighborTable":
        model_id, top = "unknown", 0
        neighbors: dict[int, list[tuple[int, float]]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise FormatError(f"{path}:{lineno}: bad JSON") from e
                if "cp" not in obj:
                    model_id = obj.get("model_id", model_id)
                    top = obj.get("top", top)
                    continue
                try:
                    cp = _parse_cp(obj["cp"])
                    nbrs = [(_parse_cp(n), float(d)) for n, d in obj["nbrs"]]
                except (KeyError, ValueError, TypeError) as e:
                    raise FormatError(f"{path}:{lineno}: malformed neighbor record") from e
                neighbors[cp] = nbrs
        top = top or max((len(v) for v in neighbors.values()), default=0)
        return cls(model_id=model_id, neighbors=neighbors, top=top)


def build_neighbor_table(emb: EmbeddingMatrix, cpset: CodepointSet | None = None,
                         top: int = DEFAULT_TOP) -> NeighborTable:
    """Exact nearest neighbors for every codepoint, blockwise.

    Raw dot products are computed in float64 and divided by
    sqrt(|u|^2 * |v|^2), matching cosine_distance() exactly; results do not
    depend on the block size.
    """
    cps = np.asarray(emb.codepoints, dtype=np.int64)
    if cpset is not None and tuple(cpset) != emb.codepoints:
        raise DimensionMismatch("embedding matrix is not aligned with the codepoint set")
    n = len(cps)
    keep = min(top, n - 1) if n > 1 else 0
    sq = emb._sq_norms()
    rows = emb.rows
    if sp.issparse(rows):
        sparse64 = rows.astype(np.float64)
        sparse64_t = sparse64.T.tocsc()
        dense = None
    else:
        dense = rows.astype(np.float64, copy=False)
    out: dict[int, list[tuple[int, float]]] = {}
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        if dense is None:
            dots = np.asarray((sparse64[start:stop] @ sparse64_t).todense())
        else:
            dots = dense[start:stop] @ dense.T
        denom = np.sqrt(sq[start:stop, None] * sq[None, :])
        dist = np.clip(1.0 - dots / denom, 0.0, 2.0)
        for bi, i in enumerate(range(start, stop)):
            row = dist[bi].copy()
            row[i] = np.inf  # exclude self
            order = np.lexsort((cps, row))[:keep]
            out[int(cps[i])] = [(int(cps[j]), float(row[j])) for j in order]
    return NeighborTable(model_id=emb.model_id, neighbors=out, top=top)


def kth_neighbor(table: NeighborTable, cp: int, k: int) -> int:
    return table.kth_neighbor(cp, k)


def _parse_cp(text: str) -> int:
    if not isinstance(text, str) or not text.upper().startswith("U+"):
        raise ValueError(f"expected U+XXXX, got {text!r}")
    return int(text[2:], 16)


def save_embeddings(emb: EmbeddingMatrix, path: str | Path) -> None:
    """Write the documented text format; float32 values round-trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{emb.model_id} {emb.dim} {len(emb.codepoints)}\n")
        for cp in emb.codepoints:
            vec = emb.row(cp)
            vals = " ".join(repr(float(x)) for x in vec.astype(np.float32))
            fh.write(f"U+{cp:04X} {vals}\n")


def load_embeddings(path: str | Path,
                    required: Iterable[int] | None = None) -> EmbeddingMatrix:
    """Load embeddings; when ``required`` is given, every listed codepoint must
    be present and rows are aligned to that order."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise FormatError(f"{path}: header must be 'model_id dim count'")
        model_id = header[0]
        try:
            dim, count = int(header[1]), int(header[2])
        except ValueError as e:
            raise FormatError(f"{path}: non-integer dim/count in header") from e
        by_cp: dict[int, np.ndarray] = {}
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            try:
                cp = _parse_cp(parts[0])
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: bad codepoint field") from e
            if len(parts) - 1 != dim:
                raise DimensionMismatch(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            try:
                by_cp[cp] = np.array([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: non-numeric value") from e
    if len(by_cp) != count:
        raise FormatError(f"{path}: header count {count} != {len(by_cp)} rows")
    order = tuple(required) if required is not None else tuple(sorted(by_cp))
    missing = [cp for cp in order if cp not in by_cp]
    if missing:
        raise MissingCodepoints(missing)
    rows = np.stack([by_cp[cp] for cp in order]) if order else np.zeros((0, dim), np.float32)
    return EmbeddingMatrix(model_id=model_id, dim=dim, codepoints=order, rows=rows)
