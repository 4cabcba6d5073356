"""Train and bake the default legibility scorer asset.

Trains the one-hidden-layer scorer on synthetic separable pairs over the
builtin font (codepoints U+0000-U+04FF) and writes the weights to
``src/legit/assets/scorer_default.json``. Regenerate with:

    python3 scripts/build_default_scorer.py
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from legit.atlas import load_atlas                      # noqa: E402
from legit.index import build_imgdot_matrix, build_neighbor_table  # noqa: E402
from legit.scorer import FeatureExtractor, LegibilityScorer, TrainConfig, train  # noqa: E402
from legit.synth import (                               # noqa: E402
    classification_eval,
    make_synthetic_pairs,
    ranking_eval,
    synthetic_words,
    train_examples,
)

OUT = ROOT / "src" / "legit" / "assets" / "scorer_default.json"


def main() -> None:
    atlas = load_atlas()
    cpset = atlas.build_codepoint_set(0x0000, 0x04FF)
    matrix = build_imgdot_matrix(atlas, cpset)
    table = build_neighbor_table(matrix, top=100)
    extractor = FeatureExtractor(matrix, table)
    words = synthetic_words()
    train_pairs = make_synthetic_pairs(words[:400], extractor, table, seed=1)
    val_pairs = make_synthetic_pairs(words[800:920], extractor, table, seed=2)
    model = LegibilityScorer.mlp(extractor.dim, hidden=16, dropout=0.1, seed=0,
                                 feature_config=extractor.config())
    cfg = TrainConfig(lr=0.02, batch_size=32, max_epochs=50, patience=10,
                      seed=0, dropout=0.1)
    model, history = train(model, train_examples(train_pairs),
                           train_examples(val_pairs), cfg)
    precision, recall, f1 = classification_eval(val_pairs, model)
    rank_acc = ranking_eval(val_pairs, model)
    print(f"epochs {len(history)}  P {precision:.3f} R {recall:.3f} F1 {f1:.3f}  "
          f"ranking {rank_acc:.3f}")
    model.save(OUT)
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
