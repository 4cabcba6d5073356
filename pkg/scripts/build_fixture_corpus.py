"""Generate the bundled 200-sentence labeled fixture corpus.

The corpus is a balanced binary topic-classification task (incident
reports vs. calm scenes) whose words are all lowercase a-z and 4-14
characters long, so every word re-enters the recovery vocabulary and
renders with the builtin font. Regenerate with:

    python3 scripts/build_fixture_corpus.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "legit" / "assets" / "attack_fixture.jsonl"
SEED = 20240814
SENTENCES = 200

TOPIC_POSITIVE = [
    "breach", "attack", "threat", "malware", "hostile", "corrupt", "exploit",
    "danger", "alarm", "virus", "phishing", "intrusion", "sabotage", "forgery",
    "scandal", "menace", "hazard", "crisis", "damage", "fraud", "panic", "theft",
]
TOPIC_NEGATIVE = [
    "garden", "harvest", "gentle", "meadow", "peaceful", "sunshine", "blossom",
    "quiet", "serene", "tranquil", "pleasant", "friendly", "cheerful", "kindness",
    "comfort", "delight", "gratitude", "harmony", "warmth", "smile", "laughter",
    "picnic",
]
FILLERS = [
    "report", "describe", "during", "morning", "evening", "people", "often",
    "nearby", "village", "office", "network", "systems", "records", "messages",
    "weather", "window", "letter", "coffee", "table", "street", "today",
    "several", "around", "between", "again", "slowly", "quickly", "watch",
]


def build() -> list[dict]:
    rng = np.random.default_rng(SEED)
    rows = []
    for i in range(SENTENCES):
        label = i % 2
        topic = TOPIC_POSITIVE if label == 1 else TOPIC_NEGATIVE
        total = int(rng.integers(6, 11))
        n_topic = int(rng.integers(3, 6))
        words = list(rng.choice(topic, size=n_topic, replace=False))
        words += list(rng.choice(FILLERS, size=total - n_topic, replace=False))
        rng.shuffle(words)
        if rng.random() < 0.3:
            words[2] = words[2] + ","
        text = " ".join(words) + "."
        rows.append({"text": text, "label": label})
    return rows


def main() -> None:
    rows = build()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(rows)} sentences to {OUT}")


if __name__ == "__main__":
    main()
