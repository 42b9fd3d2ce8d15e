"""Window-by-window dimensions of M / O_n(M) for Lee-Yang modules.

    python3 scripts/zhu_table.py --n-max 1 --wmax 10

Prints one line per (h, n): the dimension at each window size, the a-priori
representative bound, and the stabilized value when the tail is flat past it.
O_n(M) here is the span of the products u o_n w alone, so for n >= 1 the vacuum
numbers are larger than those of the quotient that also divides by
(L(-1) + L(0))v.
"""
import argparse
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from voaspan.cofinite import compute_constants
from voaspan.spanset import compute_L
from voaspan.virmodel import LEE_YANG_C, SIMPLE, build_module, build_virasoro_voa
from voaspan.zhu import an_dim_estimate


@dataclass
class TableConfig:
    weights: Tuple[Fraction, ...] = (Fraction(0), Fraction(-1, 5))
    n_max: int = 1
    wmax: int = 10


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=1)
    ap.add_argument("--wmax", type=int, default=10)
    ns = ap.parse_args(argv)
    cfg = TableConfig(n_max=ns.n_max, wmax=ns.wmax)

    voa = build_virasoro_voa(LEE_YANG_C, max(cfg.wmax, 12))
    data = compute_constants(voa)
    for h in cfg.weights:
        module = build_module(voa, h, cfg.wmax, SIMPLE)
        L = compute_L(module, data.X)
        for n in range(cfg.n_max + 1):
            schedule = range(min(2 * n + 2, cfg.wmax), cfg.wmax + 1)
            rep = an_dim_estimate(module, n, schedule, data, L)
            value = rep["value"] if rep["stabilized"] else "not stabilized"
            dims = " ".join(f"{w}:{d}" for w, d in zip(rep["schedule"], rep["dims"]))
            print(f"h={h} n={n} bound={rep['representative_bound']} value={value} | {dims}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
