#!/usr/bin/env python3
"""Record replay fixtures for the shipped corpus.

Runs the deterministic rule-based provider over the fixture corpus and
stores every response under tests/fixtures/replay/<request-hash>.txt.
Point this at a live provider instead to refresh fixtures with real
model output.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from forgekg.corpus import load_corpus  # noqa: E402
from forgekg.extract import (RecordingProvider, RuleBasedProvider,  # noqa: E402
                             run_extraction)

ROOT = Path(__file__).resolve().parents[1]
REPLAY_DIR = ROOT / "tests/fixtures/replay"


def main():
    corpus = load_corpus(ROOT / "tests/fixtures/corpus.jsonl")
    provider = RecordingProvider(RuleBasedProvider(), REPLAY_DIR)
    for entry in corpus:
        result = run_extraction(provider, entry)
        print(f"{entry.id}: {len(result.claims)} claim(s), "
              f"{len(result.transcript)} recorded request(s)")
    print(f"fixtures in {REPLAY_DIR}")


if __name__ == "__main__":
    main()
