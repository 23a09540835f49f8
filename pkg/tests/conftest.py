import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gefair.datasets import make_synthetic  # noqa: E402


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synthetic.csv"
    make_synthetic(2000, seed=0).to_csv(path, index=False, lineterminator="\n")
    return path
