import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES / "corpus.jsonl"


@pytest.fixture
def fixture_corpus(corpus_path):
    from forgekg.corpus import load_corpus

    return load_corpus(corpus_path)


@pytest.fixture
def replay_provider():
    from forgekg.extract import ReplayProvider

    return ReplayProvider(FIXTURES / "replay", model_id="rule-based-v1")


@pytest.fixture
def warm_cache_dir(tmp_path) -> Path:
    """Writable copy of the pre-seeded authority cache."""
    target = tmp_path / "cache"
    shutil.copytree(FIXTURES / "authority_cache", target)
    return target


class CountingGet:
    """http_get double that counts calls and serves canned payloads."""

    def __init__(self, payloads=None):
        self.calls = 0
        self.payloads = payloads or {}

    def __call__(self, url, params):
        self.calls += 1
        for key, payload in self.payloads.items():
            if key in url or key in str(params):
                return payload
        return {}


@pytest.fixture
def counting_get():
    return CountingGet()


@pytest.fixture
def pipeline_config(tmp_path, corpus_path, warm_cache_dir):
    from forgekg.pipeline import config_from_dict

    def make(**overrides):
        data = {
            "corpus_path": str(corpus_path),
            "provider": {"kind": "replay",
                         "fixture_dir": str(FIXTURES / "replay"),
                         "model_id": "rule-based-v1"},
            "cache_dir": str(warm_cache_dir),
            "output_dir": str(tmp_path / "out"),
            "decisions_path": str(FIXTURES / "decisions.json"),
            "run_id": "test-run",
        }
        data.update(overrides)
        return config_from_dict(data)

    return make
