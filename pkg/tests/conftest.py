import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ast_monitor.plan import load_plan

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_PLAN_PATH = (Path(__file__).parent.parent / "src" / "ast_monitor"
                     / "data" / "default_plan.json")


@pytest.fixture(scope="session")
def default_plan():
    return load_plan(DEFAULT_PLAN_PATH)


@pytest.fixture(scope="session")
def default_plan_path():
    return DEFAULT_PLAN_PATH


@pytest.fixture(scope="session")
def nmea_corpus():
    return (DATA_DIR / "nmea_corpus.txt").read_bytes().splitlines()
