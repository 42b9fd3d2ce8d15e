"""Cofiniteness constants (B, N, Q) and C_2 codimensions across Virasoro minimal models.

    python3 scripts/constants_survey.py --models 2,5 3,4 2,7 3,5 --wmax 14 --out survey.csv

Models whose C_2 quotient has not died out inside the window are listed with
their error instead of constants; raise ``--wmax`` for those.
"""
import argparse
import csv
import sys
import time
from dataclasses import dataclass, field
from typing import List, Tuple

from voaspan.cofinite import NotCofiniteInWindow, compute_constants
from voaspan.virmodel import build_virasoro_voa, minimal_model_c


@dataclass
class SurveyConfig:
    models: List[Tuple[int, int]] = field(default_factory=lambda: [(2, 5), (3, 4), (2, 7), (3, 5), (2, 9)])
    wmax: int = 14
    out: str = ""


def survey(cfg: SurveyConfig) -> List[dict]:
    rows = []
    for p, q in cfg.models:
        c = minimal_model_c(p, q)
        start = time.perf_counter()
        row = {"p": p, "q": q, "c": str(c), "B": "", "N": "", "Q": "", "c2_codims": "", "error": ""}
        try:
            data = compute_constants(build_virasoro_voa(c, cfg.wmax))
            row.update(B=data.B, N=data.N, Q=data.Q, c2_codims=" ".join(map(str, data.c2_codims)))
        except NotCofiniteInWindow as exc:
            row["error"] = str(exc)
        row["seconds"] = f"{time.perf_counter() - start:.2f}"
        rows.append(row)
    return rows


def parse_args(argv=None) -> SurveyConfig:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", nargs="+", default=None, help="p,q pairs")
    ap.add_argument("--wmax", type=int, default=14)
    ap.add_argument("--out", default="")
    ns = ap.parse_args(argv)
    cfg = SurveyConfig(wmax=ns.wmax, out=ns.out)
    if ns.models:
        cfg.models = [tuple(int(x) for x in m.split(",")) for m in ns.models]
    return cfg


def main(argv=None) -> int:
    cfg = parse_args(argv)
    rows = survey(cfg)
    fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    if cfg.out:
        fh.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
