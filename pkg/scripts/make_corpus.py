#!/usr/bin/env python3
"""Generate a corpus of random workbook documents for calibration runs.

Example:
    python scripts/make_corpus.py --out corpus/ --count 50 --seed 7
    scr calibrate --corpus corpus/*.wbk.json --out profile.json
"""

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from genwb import random_workbook  # noqa: E402

from scr.grid import serialize_workbook  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-cells", type=int, default=100)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    for i in range(args.count):
        book = random_workbook(rng, max_cells=args.max_cells, name=f"corpus-{i:03d}")
        (out / f"corpus-{i:03d}.wbk.json").write_text(serialize_workbook(book))
    print(f"wrote {args.count} workbooks to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
