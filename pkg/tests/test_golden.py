import json
from pathlib import Path

import numpy as np
import pytest

from bjlab.cli import run
from bjlab.config import load_config
from golden_cases import CASES, lookup

HERE = Path(__file__).resolve().parent


@pytest.mark.parametrize("name", sorted(CASES))
def test_matches_frozen_baseline(name, tmp_path):
    frozen = json.loads((HERE / "golden" / f"{name}.json").read_text())
    _, report, _ = run(frozen["command"], load_config(HERE.parent / "configs" / frozen["config"]), tmp_path)
    data = report.to_dict()
    assert data["verdict"] == frozen["verdict"]
    for field, spec in frozen["fields"].items():
        got, want = lookup(data, field), spec["value"]
        assert np.allclose(got, want, rtol=0, atol=spec["tol"]), field
