import os
from pathlib import Path

import pytest

import helpers

DATA_ENV = "INSULTSENSE_DATA_DIR"


@pytest.fixture(scope="session")
def tiny_assets(tmp_path_factory):
    return helpers.build_tiny_assets(tmp_path_factory.mktemp("tiny_assets"))


@pytest.fixture(scope="session")
def kaggle_dir():
    """Directory holding the real train.csv / test_with_solutions.csv, if provided."""
    d = os.environ.get(DATA_ENV)
    if not d:
        return None
    d = Path(d)
    if not ((d / "train.csv").is_file() and (d / "test_with_solutions.csv").is_file()):
        return None
    return d


@pytest.fixture
def fixture_csv(tmp_path):
    rows = [
        (0, "20120618192155Z", '"Thanks for the link, very useful."'),
        (1, "", '"You are a \\"moron\\" and a \\xe2\\x80\\x9cclown\\xe2\\x80\\x9d"'),
        (0, "20120528192215Z", '"line one\\nline two\\tand a tab \\\\ backslash \\u00e9"'),
    ]
    return helpers.write_kaggle_csv(tmp_path / "fixture.csv", rows)


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


def record_acceptance(criterion: str, status: str, detail: str = ""):
    ACCEPTANCE_RESULTS[criterion] = (status, detail)
    print(f"[acceptance] {criterion}: {status} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split(".")[0]) if k.split(".")[0].isdigit() else 99):
        status, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{status:<7} {name}" + (f"  ({detail})" if detail else ""))
