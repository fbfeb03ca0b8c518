"""Parser fuzz: random well-formed expressions must round-trip, mutated text must never crash.

Usage: python scripts/parser_fuzz.py [--cases 100000] [--seed 0]
"""

import argparse
import random
import time

from confbound.expr import FUNCTIONS, BinOp, Call, Const, Neg, Num, ParseError, Var, parse, to_string

VARS = ("x0", "x1", "x2", "x3", "r")
ALPHABET = list("x0123r+-*/^() .,e") + ["sin", "cos", "pi", "exp", "log", "sqrt", "abs", "tan"]


def random_expr(rng: random.Random, depth: int = 0):
    if depth > 4 or rng.random() < 0.3:
        k = rng.randrange(3)
        if k == 0:
            return Num(rng.choice([rng.randint(0, 99), rng.uniform(0, 1e6), rng.expovariate(1.0)]) * 1.0)
        return Var(rng.choice(VARS)) if k == 1 else Const("pi")
    k = rng.randrange(3)
    if k == 0:
        return Neg(random_expr(rng, depth + 1))
    if k == 1:
        return BinOp(rng.choice("+-*/^"), random_expr(rng, depth + 1), random_expr(rng, depth + 1))
    return Call(rng.choice(FUNCTIONS), random_expr(rng, depth + 1))


def mutate(rng: random.Random, text: str) -> str:
    chars = list(text)
    for _ in range(rng.randint(1, 4)):
        pos = rng.randrange(len(chars) + 1)
        op = rng.randrange(3)
        if op == 0:
            chars.insert(pos, rng.choice(ALPHABET))
        elif chars:
            i = min(pos, len(chars) - 1)
            if op == 1:
                del chars[i]
            else:
                chars[i] = rng.choice(ALPHABET)
    return "".join(chars)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    t0 = time.time()
    bad_round_trip = 0
    for _ in range(args.cases):
        e = random_expr(rng)
        text = to_string(e)
        if parse(text) != e or to_string(parse(text)) != text:
            bad_round_trip += 1
    t1 = time.time()
    accepted = rejected = crashed = 0
    for _ in range(args.cases):
        text = mutate(rng, to_string(random_expr(rng)))
        try:
            parse(text)
            accepted += 1
        except ParseError:
            rejected += 1
        except Exception as exc:  # any other exception is a parser bug
            crashed += 1
            print(f"crash on {text!r}: {type(exc).__name__}: {exc}")
    t2 = time.time()
    print(f"round trip: {args.cases} cases, {bad_round_trip} mismatches ({t1 - t0:.1f} s)")
    print(f"mutations:  {args.cases} cases, {accepted} accepted, {rejected} rejected, {crashed} crashes ({t2 - t1:.1f} s)")
    raise SystemExit(1 if bad_round_trip or crashed else 0)


if __name__ == "__main__":
    main()
