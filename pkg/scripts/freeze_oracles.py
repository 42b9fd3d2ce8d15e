"""Recompute the oracle values the test suite freezes and write tests/data/frozen.json.

Run from the repository root:  python3 scripts/freeze_oracles.py
"""
import json
import os
import sys
from fractions import Fraction

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "tests"))

import oracles  # noqa: E402


def main():
    ly = Fraction(-22, 5)
    ising = Fraction(1, 2)
    ly_c2 = oracles.c2_codims(ly, 12)
    is_c2 = oracles.c2_codims(ising, 12)
    words, gram4 = oracles.NaiveVerma(ly, 0, 2).gram(4)
    null = gram4.nullspace()[0]
    null = null / null[words.index((2, 2))]
    frozen = {
        "lee_yang": {
            "c": "-22/5",
            "vacuum_dims": oracles.simple_dims(ly, 0, 12, vacuum=True),
            "module_dims_h_-1/5": oracles.simple_dims(ly, Fraction(-1, 5), 12),
            "c2_codims": ly_c2,
            "B_N_Q": list(oracles.constants_from_c2(ly_c2)),
            "weight4_null": {str(list(w)): str(x) for w, x in zip(words, null)},
            "irreducible_count": len(oracles.kac_table(2, 5)),
            "bimodule_pairs_h_-1/5": len(oracles.lee_yang_fusion_pairs()),
        },
        "ising": {
            "c": "1/2",
            "c2_codims": is_c2,
            "B_N_Q": list(oracles.constants_from_c2(is_c2)),
        },
    }
    path = os.path.join(ROOT, "tests", "data", "frozen.json")
    with open(path, "w") as fh:
        json.dump(frozen, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(path)


if __name__ == "__main__":
    main()
