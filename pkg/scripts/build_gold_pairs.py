"""Bake the gold quality-check pairs shipped with the annotation service.

Each gold pair is constructed so its correct label is unambiguous: a
"light" perturbation swaps one character for its visually nearest
neighbor (clearly legible) while a "heavy" one replaces every character
with a distant rank-30 neighbor (clearly illegible). Mixing the two
yields L1/L2 items; two light forms give BL and two heavy forms NL.

Run from the repository root:

    python3 scripts/build_gold_pairs.py
"""

from __future__ import annotations

import json
from pathlib import Path

from legit.atlas import load_atlas
from legit.index import build_imgdot_matrix, build_neighbor_table
from legit.perturb import PerturbParams, derive_seed, perturb_word

SEED = 20240814
OUT = Path(__file__).resolve().parent.parent / "src" / "legit" / "assets" / "gold_pairs.jsonl"

WORDS = [
    "garden", "window", "bottle", "singer", "planet", "market", "butter",
    "carpet", "dragon", "pencil", "silver", "throne", "valley", "wagon",
    "hammer", "jungle", "kitten", "ladder", "mirror", "needle", "orange",
    "puzzle", "quartz", "ribbon", "saddle", "temple", "united", "velvet",
    "walnut", "yonder", "zipper", "anchor", "basket", "candle", "donkey",
    "engine", "falcon", "goblet", "helmet", "island",
]

LIGHT_K = 1
HEAVY_K = 30
HEAVY_N = 1.0


def main() -> None:
    atlas = load_atlas()
    cpset = atlas.build_codepoint_set(0x0000, 0x04FF)
    table = build_neighbor_table(build_imgdot_matrix(atlas, cpset), top=100)

    def light(word: str, seed: int) -> str:
        phi = PerturbParams(n=1.0 / len(word), k=LIGHT_K, model_id=table.model_id)
        return perturb_word(word, phi, table, seed).perturbed

    def heavy(word: str, seed: int) -> str:
        phi = PerturbParams(n=HEAVY_N, k=HEAVY_K, model_id=table.model_id)
        return perturb_word(word, phi, table, seed).perturbed

    rows = []
    for i, word in enumerate(WORDS):
        s1, s2 = derive_seed(SEED, 2 * i), derive_seed(SEED, 2 * i + 1)
        kind = i % 4
        if kind == 0:
            row = {"word": word, "w1": light(word, s1), "w2": heavy(word, s2),
                   "label": "L1"}
        elif kind == 1:
            row = {"word": word, "w1": heavy(word, s1), "w2": light(word, s2),
                   "label": "L2"}
        elif kind == 2:
            row = {"word": word, "w1": light(word, s1), "w2": light(word, s2),
                   "label": "BL"}
        else:
            row = {"word": word, "w1": heavy(word, s1), "w2": heavy(word, s2),
                   "label": "NL"}
        rows.append(row)

    with open(OUT, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(rows)} gold pairs to {OUT}")


if __name__ == "__main__":
    main()
