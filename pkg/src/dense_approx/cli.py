"""Command-line front end: solve, gen, bench and verify."""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .checks import SUITES
from .core import KnapsackInstance, OracleBudgetExceeded, exact_knapsack, exact_subset_sums
from .dense import DenseConstants
from .knapsack import KnapsackTrace, solve_knapsack
from .partition import Problem1Report, solve_partition, solve_problem1

EXIT_VIOLATION = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3

CSV_HEADER = ["algorithm", "n", "eps", "wall_ns", "output_size", "ratio"]


class InstanceError(ValueError):
    pass


# ---------------------------------------------------------------------------
# instance I/O
# ---------------------------------------------------------------------------


def _number(v) -> Fraction:
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise InstanceError(f"not a number: {v!r}")
    try:
        return Fraction(str(v)) if not isinstance(v, int) else Fraction(v)
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"not a number: {v!r}") from exc


def parse_instance(text: str, expected: Optional[str] = None):
    """Parse a JSON instance; returns ``("partition", values)`` or ``("knapsack", KnapsackInstance)``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceError("instance must be a JSON object")
    kind = data.get("type", expected)
    if expected is not None and kind != expected:
        raise InstanceError(f"expected a {expected} instance, got {kind!r}")
    if kind == "partition":
        values = data.get("values")
        if not isinstance(values, list):
            raise InstanceError("partition instance needs a 'values' list")
        out = []
        for v in values:
            f = _number(v)
            if f.denominator != 1 or f < 1:
                raise InstanceError(f"partition values must be positive integers, got {v!r}")
            out.append(int(f))
        return "partition", out
    if kind == "knapsack":
        items = data.get("items")
        cap = data.get("capacity")
        if not isinstance(items, list) or cap is None:
            raise InstanceError("knapsack instance needs 'items' and 'capacity'")
        W = _number(cap)
        if W.denominator != 1 or W < 0:
            raise InstanceError("capacity must be a nonnegative integer")
        parsed = []
        for it in items:
            if not isinstance(it, dict) or "p" not in it or "w" not in it:
                raise InstanceError(f"bad item {it!r}")
            p, w = _number(it["p"]), _number(it["w"])
            if p <= 0 or w < 0 or w.denominator != 1:
                raise InstanceError(f"bad item {it!r}")
            parsed.append((p, int(w)))
        return "knapsack", KnapsackInstance(parsed, int(W))
    raise InstanceError(f"unknown instance type {kind!r}")


def _fraction_str(p: Fraction) -> str:
    """Exact decimal string when one exists, else ``num/den``."""
    d = p.denominator
    k = 0
    while d % 2 == 0:
        d //= 2
        k += 1
    j = 0
    while d % 5 == 0:
        d //= 5
        j += 1
    if d != 1:
        return f"{p.numerator}/{p.denominator}"
    digits = max(k, j)
    scaled = p * 10**digits
    s = str(abs(scaled.numerator))
    if digits:
        s = s.rjust(digits + 1, "0")
        s = s[:-digits] + "." + s[-digits:]
    return ("-" if p < 0 else "") + s


def dump_instance(kind: str, payload) -> str:
    if kind == "partition":
        return json.dumps({"type": "partition", "values": [int(v) for v in payload]})
    inst: KnapsackInstance = payload
    items = [{"p": _fraction_str(it.profit), "w": it.weight} for it in inst.items]
    return json.dumps({"type": "knapsack", "capacity": inst.capacity, "items": items})


def generate(kind: str, n: int, max_value: int, seed: int):
    rng = np.random.default_rng(seed)
    if kind == "partition":
        return kind, rng.integers(1, max_value + 1, size=n).tolist()
    ps = rng.integers(1, max_value + 1, size=n).tolist()
    ws = rng.integers(1, max_value + 1, size=n).tolist()
    return kind, KnapsackInstance(list(zip(ps, ws)), sum(ws) // 2)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def partition_opt(values: Sequence[int]) -> int:
    sums = exact_subset_sums(values, sum(values) // 2)
    return int(sums[-1])


def knapsack_opt(inst: KnapsackInstance) -> Fraction:
    return exact_knapsack(inst)(inst.capacity)


def _json_number(v: Fraction):
    v = Fraction(v)
    return int(v) if v.denominator == 1 else float(v)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    try:
        with open(args.input) as fh:
            kind, payload = parse_instance(fh.read(), args.problem)
    except (InstanceError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_PARSE
    eps = Fraction(str(args.epsilon))
    if kind == "partition":
        sol = Fraction(solve_partition(payload, eps, algorithm=args.algorithm))
    else:
        sol = solve_knapsack(payload, eps, rounds=args.rounds, seed=args.seed)
    out = {"sol": _json_number(sol)}
    if sol.denominator != 1:
        out["sol_exact"] = f"{sol.numerator}/{sol.denominator}"
    code = 0
    if args.oracle_check:
        try:
            opt = Fraction(partition_opt(payload) if kind == "partition" else knapsack_opt(payload))
        except OracleBudgetExceeded as exc:
            out["error"] = str(exc)
            print(json.dumps(out))
            return EXIT_BUDGET
        out["opt"] = _json_number(opt)
        out["ratio"] = float(sol / opt) if opt else 1.0
        ok = (1 - eps) * opt <= sol <= opt
        out["ok"] = ok
        code = 0 if ok else EXIT_VIOLATION
    print(json.dumps(out))
    return code


def cmd_gen(args) -> int:
    kind, payload = generate(args.problem, args.n, args.max_value, args.seed)
    text = dump_instance(kind, payload)
    if args.out == "-":
        print(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def parse_eps_grid(spec: str) -> list[Fraction]:
    """``2^-6..2^-13`` (every power of two in between) or a comma list of numbers."""
    m = re.fullmatch(r"\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*", spec)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = -1 if b < a else 1
        return [Fraction(2) ** k for k in range(a, b + step, step)]
    out = []
    for s in spec.split(","):
        s = s.strip()
        if not s:
            continue
        m = re.fullmatch(r"2\^(-?\d+)", s)
        out.append(Fraction(2) ** int(m.group(1)) if m else Fraction(s))
    return out


def dense_core_instance(n: int, eps: Fraction, seed: int) -> list[int]:
    """``min(n, 1/eps)`` distinct values in ``[1/eps, 2/eps)``."""
    inv = int(1 / eps)
    rng = np.random.default_rng(seed)
    k = min(n, inv)
    return sorted(rng.choice(np.arange(inv, 2 * inv), size=k, replace=False).tolist())


def _bench_one(job) -> list:
    problem, n, eps, trial, seed, check, algorithm = job
    eps = Fraction(eps)
    if problem == "partition":
        X = dense_core_instance(n, eps, seed + trial)
        run = lambda: solve_problem1(X, eps, algorithm, report=Problem1Report("dc"))  # noqa: E731
        run()  # warm-up, not timed
        t0 = time.perf_counter_ns()
        A = run()
        wall = time.perf_counter_ns() - t0
        size, ratio = len(A), ""
        if check:
            try:
                S = exact_subset_sums(X)
                worst = 0
                idx = np.searchsorted(A.elements, S, side="right") - 1
                worst = int(np.max(S - A.elements[idx]))
                ratio = float(f"{worst / len(X):.6g}")  # additive error in units of n
            except OracleBudgetExceeded:
                ratio = ""
        return [f"problem1-{algorithm}", len(X), float(eps), wall, size, ratio]
    _, inst = generate("knapsack", n, 100, seed + trial)
    trace = KnapsackTrace()
    solve_knapsack(inst, eps, seed=seed)
    t0 = time.perf_counter_ns()
    sol = solve_knapsack(inst, eps, seed=seed, trace=trace)
    wall = time.perf_counter_ns() - t0
    ratio = ""
    if check:
        try:
            opt = knapsack_opt(inst)
            ratio = float(f"{float(sol / opt) if opt else 1.0:.6g}")
        except OracleBudgetExceeded:
            pass
    return ["knapsack", n, float(eps), wall, trace.complexity, ratio]


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``; ``nan`` with fewer than 2 distinct x."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    if np.unique(x).size < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def bench_rows(problem: str, eps_grid: Sequence[Fraction], n: int, trials: int, seed: int = 0,
               check: bool = False, algorithm: str = "auto", workers: int = 1) -> tuple[list, list]:
    jobs = [(problem, n, str(e), t, seed, check, algorithm) for e in eps_grid for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_bench_one, jobs))
    else:
        rows = [_bench_one(j) for j in jobs]
    inv = [1 / r[2] for r in rows]
    summary = ["slope", n, "", loglog_slope(inv, [r[3] for r in rows]),
               loglog_slope(inv, [max(r[4], 1) for r in rows]), ""]
    return rows, summary


def write_bench_csv(fh, rows: Sequence[list], summary: list) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r)
    w.writerow(summary)


def read_bench_csv(fh) -> tuple[list, list]:
    """Inverse of :func:`write_bench_csv`; the last row is the slope summary."""
    r = list(csv.reader(fh))
    if not r or r[0] != CSV_HEADER:
        raise ValueError("not a bench CSV")
    body = r[1:]
    rows = [[a, int(n), float(e), int(t), int(s), (float(q) if q else "")] for a, n, e, t, s, q in body[:-1]]
    a, n, _, ts, ss, _ = body[-1]
    summary = [a, int(n), "", float(ts), float(ss), ""]
    return rows, summary


def cmd_bench(args) -> int:
    grid = parse_eps_grid(args.eps_grid)
    rows, summary = bench_rows(args.problem, grid, args.n, args.trials, args.seed, args.oracle_check,
                               args.algorithm, args.workers)
    if args.out == "-":
        write_bench_csv(sys.stdout, rows, summary)
    else:
        with open(args.out, "w", newline="") as fh:
            write_bench_csv(fh, rows, summary)
    return 0


def cmd_verify(args) -> int:
    names = args.suite or list(SUITES)
    constants = None
    if args.clambda is not None:
        constants = DenseConstants.empirical(Clambda=Fraction(str(args.clambda)))
    failed = False
    for name in names:
        fn = SUITES[name]
        kwargs = {"seed": args.seed}
        if args.instances is not None:
            kwargs["instances"] = args.instances
        if name in ("density", "structural"):
            kwargs["constants"] = constants
        if name == "exchange" and args.clambda is not None:
            kwargs["c"] = Fraction(str(args.clambda))
        res = fn(**kwargs)
        print(res.row())
        if args.verbose:
            for note in res.notes[:5]:
                print(f"    {note}")
        failed |= not res.passed
    return EXIT_VIOLATION if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dense-approx", description="Approximation schemes for Partition and Knapsack")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("problem", choices=["partition", "knapsack"])
    s.add_argument("--input", required=True)
    s.add_argument("--epsilon", required=True, type=str)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rounds", type=int, default=20, help="amplification rounds (knapsack)")
    s.add_argument("--oracle-check", action="store_true")
    s.add_argument("--algorithm", choices=["auto", "dc", "dense"], default="auto")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("problem", choices=["partition", "knapsack"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--max-value", type=int, default=10**4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="timing sweep over an eps grid")
    b.add_argument("problem", choices=["partition", "knapsack"])
    b.add_argument("--eps-grid", default="2^-6..2^-13")
    b.add_argument("--n", type=int, default=4096)
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--algorithm", choices=["auto", "dc", "dense"], default="auto")
    b.add_argument("--oracle-check", action="store_true")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run the lemma verification suites")
    v.add_argument("--suite", action="append", choices=sorted(SUITES))
    v.add_argument("--instances", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--clambda", type=float, help="override the empirical C_lambda")
    v.add_argument("--verbose", action="store_true")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
