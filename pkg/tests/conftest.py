from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def appa_replica_path() -> Path:
    return FIXTURES / "appa_validation_replica.csv"
