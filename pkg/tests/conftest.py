from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES / "corpus.ndjson"
