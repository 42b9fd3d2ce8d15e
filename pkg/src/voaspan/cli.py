"""Command-line driver.

    voaspan [--model M] [--h H] [--wmax W] [--out DIR] [--seed S] [--config FILE] COMMAND...

Commands (several may be given in one run): ``model``, ``cofinite``,
``constants``, ``voa-span``, ``module-span``, ``normalize EXPR``, ``zhu``
(with ``--n``), ``identities`` (with ``--sweep`` for the randomized grid).

Exit status: 0 when every requested check passes, 1 on a failed check
(span deficit, C_2 quotient not dying out in the window, nonzero identity
residual), 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import random
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from .cofinite import (
    NotCofiniteInWindow,
    SpanDeficit,
    choose_X,
    cn_codims,
    compute_constants,
    find_N,
    verify_voa_span,
)
from .exactlinalg import scalar_str
from .modealg import (
    Expression,
    GEN_BASE,
    ModeOp,
    VAC_BASE,
    borcherds_residual,
    commutator_swap,
    evaluate,
    iterate_expand,
    ops_weight,
    wt_mode,
    Composite,
    parse_expression,
    repeat_reduce,
    store_for,
)
from .spanset import compute_L, normalize, verify_module_span
from .virmodel import (
    LEE_YANG_C,
    SIMPLE,
    OutOfWindow,
    build_module,
    build_virasoro_voa,
    minimal_model_c,
)
from .zhu import an_dim_estimate

log = logging.getLogger("voaspan")

COMMANDS = ("model", "cofinite", "constants", "voa-span", "module-span", "normalize", "zhu", "identities")
REPORT_SCHEMA = "voaspan.report/1"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str = "lee-yang"
    h: str = "-1/5"
    wmax: int = 8
    voa_wmax: Optional[int] = None
    commands: List[str] = field(default_factory=list)
    expressions: List[str] = field(default_factory=list)
    out: Optional[str] = None
    seed: int = 0
    n: int = 0
    schedule: Optional[List[int]] = None
    sweep: bool = False
    sweep_size: int = 200

    def central_charge(self) -> Fraction:
        m = self.model.strip()
        if m == "lee-yang":
            return LEE_YANG_C
        if m.startswith("virasoro-minimal:"):
            try:
                p, q = (int(t) for t in m.split(":", 1)[1].split(","))
            except ValueError as exc:
                raise ConfigError(f"bad minimal model spec {m!r}") from exc
            if not (2 <= p < q) or math.gcd(p, q) != 1:
                raise ConfigError("minimal model needs coprime 2 <= p < q")
            return minimal_model_c(p, q)
        if m.startswith("c="):
            try:
                return Fraction(m[2:])
            except ValueError as exc:
                raise ConfigError(f"bad central charge {m[2:]!r}") from exc
        raise ConfigError(f"unknown model {m!r}")

    def lowest_weight(self) -> Fraction:
        try:
            return Fraction(str(self.h))
        except ValueError as exc:
            raise ConfigError(f"bad lowest weight {self.h!r}") from exc

    def validate(self) -> None:
        if not self.commands:
            raise ConfigError("no commands given")
        for c in self.commands:
            if c not in COMMANDS:
                raise ConfigError(f"unknown command {c!r}")
        if self.commands.count("normalize") != len(self.expressions):
            raise ConfigError("each normalize needs one expression")
        if self.wmax < 2:
            raise ConfigError("--wmax must be at least 2")
        if self.n < 0:
            raise ConfigError("--n must be nonnegative")
        self.central_charge()
        self.lowest_weight()


def _parse_commands(tokens: Sequence[str]):
    commands, exprs = [], []
    it = iter(tokens)
    for tok in it:
        commands.append(tok)
        if tok == "normalize":
            try:
                exprs.append(next(it))
            except StopIteration:
                raise ConfigError("normalize needs an expression") from None
    return commands, exprs


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="voaspan", description="Spanning sets for Virasoro-type VOA modules.")
    ap.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    ap.add_argument("--model", help="lee-yang | virasoro-minimal:p,q | c=p/q")
    ap.add_argument("--h", help="lowest weight of the module, e.g. -1/5")
    ap.add_argument("--wmax", type=int, help="module depth window")
    ap.add_argument("--voa-wmax", type=int, dest="voa_wmax", help="VOA weight window (default max(wmax, 12))")
    ap.add_argument("--out", help="directory for report.json and CSV tables (stdout if omitted)")
    ap.add_argument("--seed", type=int, help="seed for randomized sweeps")
    ap.add_argument("--n", type=int, help="level for zhu")
    ap.add_argument("--schedule", help="zhu window schedule a:b (inclusive)")
    ap.add_argument("--sweep", action="store_true", default=None, help="randomized identity sweep")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("commands", nargs="*",
                    help="any of: " + ", ".join(COMMANDS) + "; normalize takes the next token as its expression")
    return ap


_VALUE_FLAGS = ("--config", "--model", "--h", "--wmax", "--voa-wmax", "--out", "--seed", "--n", "--schedule")


def _attach_signed_values(argv: Sequence[str]) -> List[str]:
    # argparse reads "--h -1/5" as two flags; glue such values on with "="
    out: List[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            else:
                out.append(f"{tok}={nxt}")
        elif tok == "normalize":
            out.append(tok)
            nxt = next(it, None)
            if nxt is not None:
                # a leading space keeps "-2*w[-1]|h>" from reading as a flag
                out.append(" " + nxt if nxt.startswith("-") else nxt)
        else:
            out.append(tok)
    return out


def config_from_args(argv: Sequence[str]) -> RunConfig:
    ap = build_parser()
    ns = ap.parse_intermixed_args(_attach_signed_values(argv))
    cfg = RunConfig()
    if ns.config:
        try:
            with open(ns.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        for k, v in raw.items():
            if not hasattr(cfg, k):
                raise ConfigError(f"unknown config key {k!r}")
            setattr(cfg, k, v)
    for k in ("model", "h", "wmax", "voa_wmax", "out", "seed", "n", "sweep"):
        v = getattr(ns, k)
        if v is not None:
            setattr(cfg, k, v)
    if ns.schedule:
        try:
            a, b = (int(t) for t in ns.schedule.split(":"))
        except ValueError as exc:
            raise ConfigError("--schedule takes a:b") from exc
        cfg.schedule = list(range(a, b + 1))
    if ns.commands:
        cfg.commands, cfg.expressions = _parse_commands(ns.commands)
    cfg.validate()
    if ns.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    return cfg


class Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.c = cfg.central_charge()
        self.h = cfg.lowest_weight()
        vw = cfg.voa_wmax if cfg.voa_wmax is not None else max(cfg.wmax, 12)
        self.voa = build_virasoro_voa(self.c, vw)
        self.store = store_for(self.voa)
        self._data = None
        self._module = None
        self._L = None
        self.csv_rows = {}

    @property
    def data(self):
        if self._data is None:
            self._data = compute_constants(self.voa)
        return self._data

    @property
    def module(self):
        if self._module is None:
            self._module = build_module(self.voa, self.h, self.cfg.wmax, SIMPLE)
        return self._module

    @property
    def L(self):
        if self._L is None:
            self._L = compute_L(self.module, self.data.X)
        return self._L

    # each command returns (payload, passed)
    def cmd_model(self):
        return {"voa": self.voa.descriptor(), "module": self.module.descriptor()}, True

    def cmd_cofinite(self):
        out = {"cn_codims": {str(n): cn_codims(self.voa, n, self.voa.w_max) for n in range(2, 6)}}
        out["c2_codims"] = out["cn_codims"]["2"]
        try:
            data = choose_X(self.voa)
            out.update({"X": list(data.labels), "B": data.B, "N": find_N(self.voa, data)})
            return out, True
        except NotCofiniteInWindow as exc:
            out["error"] = str(exc)
            return out, False

    def cmd_constants(self):
        d = self.data.to_json(self.store)
        d["L"] = self.L
        d["h"] = scalar_str(self.h)
        return d, True

    def cmd_voa_span(self):
        rep = verify_voa_span(self.voa, self.data, self.voa.w_max, raise_on_fail=False)
        self.csv_rows["voa_dims"] = [
            {"weight": r["weight"], "dim": r["dim"], "cn_codim": rep["cn_codims"]["2"][r["weight"]]}
            for r in rep["weights"]
        ]
        return rep, rep["pass"]

    def cmd_module_span(self):
        rep = verify_module_span(self.module, self.data, self.L, self.cfg.wmax, raise_on_fail=False)
        self.csv_rows["module_dims"] = [
            {"weight": r["depth"], "dim": r["dim"], "cn_codim": rep["cn_codims"]["2"]["codims"][r["depth"]]}
            for r in rep["depths"]
        ]
        return rep, rep["pass"]

    def cmd_normalize(self, text: str):
        try:
            expr = parse_expression(text, self.store)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        bases = {b for (_, b) in expr.keys()}
        space = self.module
        L = self.L
        if bases == {VAC_BASE}:
            space = build_module(self.voa, 0, self.cfg.wmax, SIMPLE)
            L = compute_L(space, self.data.X)
        elif VAC_BASE in bases:
            raise ConfigError("cannot mix |0> and |h> words")
        expr = expr.with_base(GEN_BASE)
        out, states = normalize(expr, space, self.data, L)
        ok = evaluate(out, space) == evaluate(expr, space)
        ket = "|0>" if bases == {VAC_BASE} else "|h>"
        terms = [{"coefficient": scalar_str(c), "word": self.store.format_ops(ops) + (" " if ops else "") + ket}
                 for (ops, _), c in out.items()]
        trace = [e.line() for st in states for e in st.trace]
        return {"input": text, "terms": terms, "evaluation_equal": ok, "L": L, "trace": trace,
                "part3_bounds": [st.part3_bound for st in states]}, ok

    def cmd_zhu(self):
        n = self.cfg.n
        sched = self.cfg.schedule or list(range(2 * n + 4, self.cfg.wmax + 1))
        if not sched or max(sched) > self.cfg.wmax:
            raise ConfigError("zhu schedule must lie inside the window")
        vac = build_module(self.voa, 0, self.cfg.wmax, SIMPLE)
        rep = {
            "vacuum": an_dim_estimate(vac, n, sched, self.data, compute_L(vac, self.data.X)),
            "module": an_dim_estimate(self.module, n, sched, self.data, self.L),
        }
        return rep, True

    def cmd_identities(self):
        rng = random.Random(self.cfg.seed)
        M = self.module
        w = self.store.omega
        pool = [w, self.store.atom_of_word((3,)), self.store.atom_of_word((2, 2))]
        top = min(5, self.cfg.wmax - 3)
        targets = [(d, i) for d in range(0, top + 1) for i in range(M.dim(d))]
        counts = {"borcherds": 0, "commutator": 0, "iterate": 0, "repeat": 0}
        failures = []
        if self.cfg.sweep:
            grid = [(rng.choice(pool), rng.choice(pool), rng.randint(-3, 3), rng.randint(-3, 3),
                     rng.randint(-3, 3), rng.choice(targets)) for _ in range(self.cfg.sweep_size)]
        else:
            grid = [(w, w, k, q, r, (0, 0)) for k in (-1, 0, 1) for q in (-1, 0, 1) for r in (-1, 0, 1)]
        for u, v, k, q, r, (d, i) in grid:
            res = borcherds_residual(M, u, v, k, q, r, M.basis_vector(d, i))
            counts["borcherds"] += 1
            if not res.is_zero:
                failures.append(["borcherds", self.store.label(u), self.store.label(v), k, q, r, d, i])
        n_words = len(grid) // 4 + 1
        done = 0
        while done < n_words:
            a, b = rng.randint(-3, 2), rng.randint(-3, 2)
            u, v = rng.choice(pool), rng.choice(pool)
            n_rep = rng.randint(1, 2)
            rep_ops = (ModeOp(u, -n_rep), ModeOp(v, -n_rep))
            ops = (ModeOp(u, a), ModeOp(v, b))
            if max(ops_weight(ops), ops_weight(rep_ops), u.weight + v.weight + 2) > self.cfg.wmax:
                continue
            done += 1
            word = (ops, GEN_BASE)
            lhs = evaluate(Expression.word(ops), M)
            if evaluate(commutator_swap(word, 0, self.store), M) != lhs:
                failures.append(["commutator", self.store.label(u), a, self.store.label(v), b])
            counts["commutator"] += 1
            r = rng.randint(0, 2)
            comp = Composite(u, r, v)
            idx = rng.randint(-2, 2)
            if wt_mode(comp, idx) + 0 > self.cfg.wmax or wt_mode(comp, idx) < 0:
                idx = -1
            direct = evaluate(Expression.word([ModeOp(comp, idx)]), M)
            if evaluate(iterate_expand(comp, idx, 0), M, M.generator()) != direct:
                failures.append(["iterate", self.store.label(u), r, self.store.label(v), idx])
            counts["iterate"] += 1
            if evaluate(repeat_reduce((rep_ops, GEN_BASE), 0, self.store), M) != evaluate(Expression.word(rep_ops), M):
                failures.append(["repeat", self.store.label(u), self.store.label(v), -n_rep])
            counts["repeat"] += 1
        return {"counts": counts, "failures": failures, "sweep": self.cfg.sweep, "seed": self.cfg.seed}, not failures

    def run(self):
        results = []
        passed = True
        exprs = iter(self.cfg.expressions)
        for cmd in self.cfg.commands:
            fn = getattr(self, "cmd_" + cmd.replace("-", "_"))
            try:
                payload, ok = fn(next(exprs)) if cmd == "normalize" else fn()
            except (SpanDeficit, NotCofiniteInWindow, OutOfWindow) as exc:
                payload, ok = {"error": type(exc).__name__, "message": str(exc)}, False
            log.info("%s: %s", cmd, "pass" if ok else "FAIL")
            results.append({"command": cmd, "pass": ok, "result": payload})
            passed = passed and ok
        return {"schema": REPORT_SCHEMA, "config": _config_json(self.cfg), "pass": passed,
                "results": results}, passed


def _config_json(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d.pop("out")
    return d


def _write_csv(path: str, rows: List[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["weight", "dim", "cn_codim"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def run(cfg: RunConfig) -> int:
    runner = Runner(cfg)
    report, passed = runner.run()
    text = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "report.json"), "w") as fh:
            fh.write(text)
        for name, rows in sorted(runner.csv_rows.items()):
            _write_csv(os.path.join(cfg.out, name + ".csv"), rows)
    else:
        sys.stdout.write(text)
    return 0 if passed else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except ConfigError as exc:
        print(f"voaspan: config error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors
        return 2 if exc.code else 0


if __name__ == "__main__":
    sys.exit(main())
