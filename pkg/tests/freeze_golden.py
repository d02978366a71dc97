"""Re-freeze the regression baselines in tests/golden from the shipped configs.

    python3 tests/freeze_golden.py
"""

import json
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

from bjlab.cli import run  # noqa: E402
from bjlab.config import load_config  # noqa: E402
from golden_cases import CASES, lookup  # noqa: E402


def main():
    out = HERE / "golden"
    out.mkdir(exist_ok=True)
    for name, (command, config, fields) in CASES.items():
        with tempfile.TemporaryDirectory() as tmp:
            _, report, _ = run(command, load_config(HERE.parent / "configs" / config), tmp)
        data = report.to_dict()
        if data["verdict"] == "FAIL":
            print(f"{name}: FAIL, not frozen")
            continue
        frozen = {"command": command, "config": config, "verdict": data["verdict"],
                  "fields": {f: {"value": lookup(data, f), "tol": tol} for f, tol in fields.items()}}
        (out / f"{name}.json").write_text(json.dumps(frozen, indent=2, sort_keys=True) + "\n")
        print(f"{name}: {data['verdict']}")


if __name__ == "__main__":
    main()
