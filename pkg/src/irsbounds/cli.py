"""Command-line driver: ``irsbounds <command> ...``.

Exit status is 0 on success, 2 on bad input, 3 when a soundness check fails
and 4 when a resource cap stops a command outright.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from . import formats
from .automaton import CapExceeded, ShiftSpace, classify
from .entropy import (DEFAULT_WIDTH, FiniteDist, JointTable, conditional, entropy_of_probs,
                      rho_with_flag, shannon)
from .formats import FormatError, dumps, fmt_interval, fmt_q
from .freegroup import ball, format_word
from .hierarchy import (SoundnessError, default_digits, inner_scan, objective,
                        outer_hierarchy)
from .localstruct import enumerate_pseudo
from .observables import ObservableBudget
from .polytope import lp_max, prbs_polytope, to_lp_text

DEFAULT_BUDGET = "W=2,Wp=1,A=2,Sigma=2,Omega=2,maxpsi=512"

EXIT_INPUT = 2
EXIT_SOUNDNESS = 3
EXIT_CAP = 4

log = logging.getLogger("irsbounds")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _seconds(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be a positive number of seconds")
    return v


def _digits(text: str):
    return "auto" if text == "auto" else _positive(text)


def _width(text: str):
    w = formats.parse_q(text, "--width")
    if w <= 0:
        raise argparse.ArgumentTypeError("width must be positive")
    return w


@contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _write(fh, obj) -> None:
    fh.write(dumps(obj) + "\n")
    fh.flush()


def _test_digest(T) -> str:
    return hashlib.sha256(dumps(formats.test_to_json(T)).encode()).hexdigest()[:16]


# -- commands -----------------------------------------------------------------

def cmd_ball(args) -> int:
    B = ball(args.rank, args.radius)
    print(f"size {len(B)}")
    for w in B.elements:
        print(format_word(w, "1"))
    return 0


def cmd_psub(args) -> int:
    B = ball(args.rank, args.radius)
    psubs = enumerate_pseudo(B, cache_dir=args.cache)
    print(f"count {len(psubs)}")
    for p in psubs:
        bits = "".join("1" if p.mask >> i & 1 else "0" for i in range(len(B)))
        print(f"{bits} {p.label()}")
    return 0


def _budget(args) -> ObservableBudget:
    try:
        return ObservableBudget.parse(args.budget, seed=args.seed)
    except ValueError as e:
        raise FormatError(f"--budget: {e}") from None


def cmd_polytope(args) -> int:
    T = formats.load_test(args.test)
    budget = _budget(args)
    B = ball(T.rank, args.radius)
    n = default_digits(B) if args.digits == "auto" else args.digits
    psubs = enumerate_pseudo(B, cache_dir=args.cache)
    poly = prbs_polytope(B, budget, n, psubs=psubs, max_colorings=args.max_colorings)
    obj = objective(T, B, poly.masks)
    if args.emit_lp:
        Path(args.emit_lp).write_text(to_lp_text(poly, obj))
    res = lp_max(obj, poly)
    out = {"kind": "polytope", "rank": T.rank, "radius": args.radius, "digits": n,
           "budget": budget.spec(), "seed": args.seed, "n_psub": len(psubs),
           "n_constraints": len(poly.constraints), "n_solved": len(poly.reduced()),
           "skipped": list(poly.skipped), "status": res.status,
           "optimum": None if res.optimum is None else fmt_q(res.optimum)}
    print(dumps(out))
    for s in poly.skipped:
        log.warning("constraint skipped: %s", s)
    return 0


def _outer_config(args, T) -> dict:
    return {"rank": T.rank, "test": _test_digest(T), "rmin": args.rmin, "rmax": args.rmax,
            "digits": args.digits, "budget": args.budget, "seed": args.seed,
            "max_psub": args.max_psub, "max_colorings": args.max_colorings,
            "max_seconds": args.max_seconds}


def _inner_config(args, T) -> dict:
    return {"rank": T.rank, "test": _test_digest(T), "nmax": args.nmax,
            "mode": "random" if args.random else "exhaustive", "count": args.random or 0,
            "seed": args.seed}


def _run_outer(args, T, fh):
    def emit(rec):
        _write(fh, formats.record_to_json(rec, args.timings))
        if rec.status != "optimal":
            log.warning("radius %d: %s", rec.radius, rec.status)
        for s in rec.skipped:
            log.warning("radius %d: constraint skipped: %s", rec.radius, s)

    return outer_hierarchy(T, range(args.rmin, args.rmax + 1), _budget(args), args.digits,
                           max_psub=args.max_psub, max_colorings=args.max_colorings,
                           cache_dir=args.cache, on_record=emit, max_seconds=args.max_seconds)


def _run_inner(args, T, fh):
    mode = "random" if args.random else "exhaustive"
    return inner_scan(T, args.nmax, mode, args.random or 0, args.seed,
                      on_record=lambda rec: _write(fh, formats.record_to_json(rec, args.timings)))


def cmd_outer(args) -> int:
    T = formats.load_test(args.test)
    _check_radii(args)
    with _sink(args.out) as fh:
        _write(fh, {"kind": "header", "command": "outer", "version": formats.SCHEMA_VERSION,
                    "config": _outer_config(args, T)})
        rep = _run_outer(args, T, fh)
        best = rep.best_outer
        _write(fh, {"kind": "summary", "upper": None if best is None else fmt_q(best)})
    return 0


def cmd_inner(args) -> int:
    T = formats.load_test(args.test)
    with _sink(args.out) as fh:
        _write(fh, {"kind": "header", "command": "inner", "version": formats.SCHEMA_VERSION,
                    "config": _inner_config(args, T)})
        rep = _run_inner(args, T, fh)
        best = rep.best_inner
        _write(fh, {"kind": "summary", "lower": None if best is None else fmt_q(best)})
    return 0


def cmd_sandwich(args) -> int:
    T = formats.load_test(args.test)
    _check_radii(args)
    with _sink(args.out) as fh:
        _write(fh, {"kind": "header", "command": "sandwich", "version": formats.SCHEMA_VERSION,
                    "config": {**_outer_config(args, T), **_inner_config(args, T)}})
        lo = _run_inner(args, T, fh).best_inner
        hi = _run_outer(args, T, fh).best_outer
        ok = lo is None or hi is None or lo <= hi
        _write(fh, {"kind": "interval", "lower": None if lo is None else fmt_q(lo),
                    "upper": None if hi is None else fmt_q(hi), "sound": ok})
    if not ok:
        raise SoundnessError(f"inner bound {lo} exceeds outer bound {hi}")
    if args.out not in (None, "-"):
        print(f"[{lo}, {hi}]")
    return 0


def _check_radii(args) -> None:
    if args.rmin > args.rmax:
        raise FormatError("--rmin must not exceed --rmax")


def cmd_ca(args) -> int:
    rule = formats.rule_from_json(formats.load_json(args.rule), args.rule, args.sigma)
    act = formats.action_from_json(formats.load_json(args.action), args.action)
    if rule.words and any(abs(x) > act.rank for w in rule.words for x in w):
        raise FormatError(f"{args.rule}: rule words use generators the action lacks")
    res = classify(rule, ShiftSpace(act, args.sigma), cap=args.cap)
    print(dumps({"kind": res.kind, "injective": res.injective, "surjective": res.surjective,
                 "collision": None if res.collision is None else [list(c) for c in res.collision],
                 "missed": None if res.missed is None else list(res.missed)}))
    return 0


def cmd_entropy(args) -> int:
    dist = formats.dist_from_json(formats.load_json(args.dist), args.dist)
    w = args.width
    out: dict = {}
    if isinstance(dist, FiniteDist):
        if args.cond:
            raise FormatError(f"{args.dist}: --cond needs a \"joint\" table")
        out["H"] = shannon(dist, w)
    else:
        out["H(X,Y)"] = entropy_of_probs(dist.flat(), w)
        out["H(X)"] = entropy_of_probs(dist.x_marginal(), w)
        out["H(Y)"] = entropy_of_probs(dist.y_marginal(), w)
        if args.cond:
            out["H(X|Y)"] = conditional(dist, w)
    res = {}
    for k, v in out.items():
        entry = fmt_interval(v)
        if args.rho is not None:
            r = rho_with_flag(v, args.rho)
            entry["rho"] = fmt_q(r.value)
            entry["over_rounded"] = r.over_rounded
        res[k] = entry
    print(dumps(res))
    return 0


# -- parser ---------------------------------------------------------------------

def _outer_flags(p, required=True) -> None:
    p.add_argument("--rmin", type=_nonneg, required=required)
    p.add_argument("--rmax", type=_nonneg, required=required)
    p.add_argument("--digits", type=_digits, default="auto")
    p.add_argument("--budget", default=DEFAULT_BUDGET)
    p.add_argument("--max-psub", type=_positive, default=None)
    p.add_argument("--max-colorings", type=_positive, default=1 << 16)
    p.add_argument("--max-seconds", type=_seconds, default=None,
                   help="per-level cap on constraint generation; a capped level stays a valid "
                        "but looser bound")


def _common_run(p) -> None:
    p.add_argument("--test", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write records here, one per line (default stdout)")
    p.add_argument("--cache", default=None, help="pseudo-subgroup cache directory")
    p.add_argument("--timings", action="store_true",
                   help="add wall-clock seconds to records (breaks byte-identical reruns)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irsbounds", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ball", help="list the ball of radius R")
    p.add_argument("--rank", type=_positive, required=True)
    p.add_argument("--radius", type=_nonneg, required=True)
    p.set_defaults(func=cmd_ball)

    p = sub.add_parser("psub", help="enumerate pseudo subgroups of a ball")
    p.add_argument("--rank", type=_positive, required=True)
    p.add_argument("--radius", type=_nonneg, required=True)
    p.add_argument("--cache", default=None)
    p.set_defaults(func=cmd_psub)

    p = sub.add_parser("polytope", help="build PRBS(B_r, n), optionally export it")
    p.add_argument("--test", required=True)
    p.add_argument("--radius", type=_nonneg, required=True)
    p.add_argument("--digits", type=_digits, default="auto")
    p.add_argument("--budget", default=DEFAULT_BUDGET)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-lp", default=None)
    p.add_argument("--cache", default=None)
    p.add_argument("--max-colorings", type=_positive, default=1 << 16)
    p.set_defaults(func=cmd_polytope)

    p = sub.add_parser("outer", help="outer hierarchy of upper bounds")
    _common_run(p)
    _outer_flags(p)
    p.set_defaults(func=cmd_outer)

    p = sub.add_parser("inner", help="lower bounds from finite actions")
    _common_run(p)
    p.add_argument("--nmax", type=_positive, required=True)
    p.add_argument("--random", type=_positive, default=None, metavar="COUNT")
    p.set_defaults(func=cmd_inner)

    p = sub.add_parser("sandwich", help="inner and outer bounds with a soundness check")
    _common_run(p)
    _outer_flags(p)
    p.add_argument("--nmax", type=_positive, required=True)
    p.add_argument("--random", type=_positive, default=None, metavar="COUNT")
    p.set_defaults(func=cmd_sandwich)

    p = sub.add_parser("ca", help="classify a cellular automaton on a finite action")
    p.add_argument("--rule", required=True)
    p.add_argument("--action", required=True)
    p.add_argument("--sigma", type=_positive, required=True)
    p.add_argument("--cap", type=_positive, default=1 << 20)
    p.set_defaults(func=cmd_ca)

    p = sub.add_parser("entropy", help="certified Shannon entropies of a rational law")
    p.add_argument("--dist", required=True)
    p.add_argument("--cond", action="store_true")
    p.add_argument("--rho", type=_positive, default=None)
    p.add_argument("--width", type=_width, default=DEFAULT_WIDTH)
    p.set_defaults(func=cmd_entropy)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (FormatError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except SoundnessError as e:
        print(f"soundness failure: {e}", file=sys.stderr)
        return EXIT_SOUNDNESS
    except CapExceeded as e:
        print(f"cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
