"""Seeded random mode words on the module generator, shared by several tests."""
import random

from voaspan.modealg import ModeOp, evaluate_ops, ops_weight, store_for, suffix_depths


def random_words(module, count, seed=0, lengths=(2, 6), indices=(-4, 3), max_depth=None):
    """``count`` words with a nonzero value whose depth stays inside the window."""
    store = store_for(module.voa)
    pool = [store.omega, store.atom_of_word((3,)), store.atom_of_word((2, 2)), store.atom_of_word((4,))]
    top = module.w_max if max_depth is None else max_depth
    rng = random.Random(seed)
    out, seen = [], set()
    while len(out) < count:
        n = rng.randint(*lengths)
        ops = tuple(ModeOp(rng.choice(pool), rng.randint(*indices)) for _ in range(n))
        depths = suffix_depths(ops)
        if depths is None or max(depths) > top or ops_weight(ops) > top or ops in seen:
            continue
        if evaluate_ops(module, ops, module.generator()).is_zero:
            continue
        seen.add(ops)
        out.append(ops)
    return out
