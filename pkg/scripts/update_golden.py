"""Regenerate tests/golden/*.json from the built-in scenarios.

Only run this after a deliberate behaviour change, then review the diff.
"""

import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from support import GOLDEN_CASES, golden_outcome  # noqa: E402


def main():
    out = ROOT / "tests" / "golden"
    out.mkdir(exist_ok=True)
    for case in GOLDEN_CASES:
        path = out / f"{case}.json"
        path.write_text(json.dumps(golden_outcome(case), indent=1, sort_keys=True) + "\n")
        print(f"wrote {path.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
