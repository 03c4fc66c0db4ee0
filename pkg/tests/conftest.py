from __future__ import annotations

import numpy as np
import pytest

from strike.tabular import TabularDataset


@pytest.fixture
def write_csv(tmp_path):
    def write(text: str, name: str = "data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


def make_dataset(n=300, d=4, seed=0, signal=1.0) -> TabularDataset:
    """Small scaled dataset with a linear signal on the first column."""
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    logit = signal * 4 * (X[:, 0] - 0.5)
    y = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(np.int64)
    return TabularDataset([f"f{j}" for j in range(d)], np.asfortranarray(X), y)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][3:])):
            terminalreporter.write_line(line)
