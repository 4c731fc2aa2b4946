"""JSON file formats (schema version 1) for tests, rules, actions, observables and reports.

Rationals are always strings ``"p/q"`` in lowest terms; decimals are rejected.
Words use the textual encoding of `freegroup`; inside set keys the identity
is written ``1`` and an empty set is the empty string.
"""
from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

from .automaton import LocalRule
from .entropy import CertifiedReal, FiniteDist, JointTable
from .freegroup import Ball, ball, format_word, parse_word
from .hierarchy import (Challenge, FiniteAction, InnerRecord, OuterRecord, SubgroupTest,
                        subset_key)
from .observables import LocalObservable, ObservableTuple

SCHEMA_VERSION = 1

_RATIONAL = re.compile(r"\s*(-?\d+)\s*(?:/\s*(\d+))?\s*")


class FormatError(ValueError):
    pass


def fmt_q(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_q(text, where: str = "") -> Fraction:
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise FormatError(f"{where}: rationals must be strings like \"p/q\", got {text!r}")
    m = _RATIONAL.fullmatch(text)
    if m is None:
        raise FormatError(f"{where}: {text!r} is not an exact rational \"p/q\"")
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise FormatError(f"{where}: zero denominator")
    return Fraction(int(m.group(1)), den)


def fmt_interval(x: CertifiedReal) -> dict:
    return {"lower": fmt_q(x.lower), "upper": fmt_q(x.upper), "exact": x.is_exact}


def _word(text, where: str):
    if not isinstance(text, str):
        raise FormatError(f"{where}: words must be strings")
    try:
        return parse_word(text)
    except ValueError as e:
        raise FormatError(f"{where}: {e}") from None


def _key_words(key: str, where: str) -> frozenset:
    if key.strip() == "":
        return frozenset()
    return frozenset(_word(part, where) for part in key.split(","))


def load_json(path) -> object:
    text = Path(path).read_text()
    return loads(text, str(path))


def loads(text: str, name: str = "<input>") -> object:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{name}:{e.lineno}:{e.colno}: {e.msg}") from None


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


# -- subgroup tests ------------------------------------------------------------

def test_to_json(T: SubgroupTest) -> dict:
    chs = []
    for ch in T.challenges:
        entry = {"delta": [format_word(w, "1") for w in ch.delta],
                 "table": {subset_key(k): v for k, v in
                           sorted(ch.table.items(), key=lambda kv: subset_key(kv[0]))}}
        if ch.default is not None:
            entry["default"] = ch.default
        chs.append(entry)
    return {"schema": "subgroup-test", "version": SCHEMA_VERSION, "rank": T.rank,
            "challenges": chs, "mu": [fmt_q(m) for m in T.mu]}


def test_from_json(data, name: str = "<test>") -> SubgroupTest:
    if not isinstance(data, dict):
        raise FormatError(f"{name}: a test file is a JSON object")
    if data.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise FormatError(f"{name}: unsupported schema version {data.get('version')}")
    try:
        rank = int(data["rank"])
        raw = data["challenges"]
        mu = [parse_q(m, f"{name}: mu[{i}]") for i, m in enumerate(data["mu"])]
    except KeyError as e:
        raise FormatError(f"{name}: missing field {e}") from None
    chs = []
    for i, c in enumerate(raw):
        where = f"{name}: challenges[{i}]"
        delta = [_word(w, f"{where}.delta") for w in c.get("delta", [])]
        table = {}
        for k, v in c.get("table", {}).items():
            if v not in (0, 1):
                raise FormatError(f"{where}.table[{k!r}]: value must be 0 or 1")
            table[_key_words(k, f"{where}.table")] = v
        try:
            chs.append(Challenge(tuple(delta), table, c.get("default")))
        except ValueError as e:
            raise FormatError(f"{where}: {e}") from None
    try:
        return SubgroupTest(rank, tuple(chs), tuple(mu))
    except ValueError as e:
        raise FormatError(f"{name}: {e}") from None


def load_test(path) -> SubgroupTest:
    return test_from_json(load_json(path), str(path))


def save_test(T: SubgroupTest, path) -> None:
    Path(path).write_text(json.dumps(test_to_json(T), indent=2) + "\n")


# -- observables, rules, actions -----------------------------------------------

def observable_to_json(t: ObservableTuple) -> dict:
    b = t.psi.ball
    return {"schema": "observable", "version": SCHEMA_VERSION, "rank": b.rank,
            "ball": [format_word(w, "1") for w in b.elements],
            "W": [format_word(w, "1") for w in t.W], "Wp": [format_word(w, "1") for w in t.Wp],
            "A": [format_word(w, "1") for w in t.A], "sigma": t.sigma_size,
            "omega": t.omega_size, "table": list(t.psi.table)}


def observable_from_json(data, name: str = "<observable>") -> ObservableTuple:
    try:
        B = Ball(int(data["rank"]), tuple(_word(w, f"{name}: ball") for w in data["ball"]))
        W = tuple(_word(w, f"{name}: W") for w in data["W"])
        Wp = tuple(_word(w, f"{name}: Wp") for w in data["Wp"])
        A = tuple(_word(w, f"{name}: A") for w in data["A"])
        psi = LocalObservable(B, W, Wp, int(data["sigma"]), int(data["omega"]),
                              tuple(int(v) for v in data["table"]))
    except KeyError as e:
        raise FormatError(f"{name}: missing field {e}") from None
    except ValueError as e:
        raise FormatError(f"{name}: {e}") from None
    return ObservableTuple(W, Wp, A, psi.sigma_size, psi.omega_size, psi)


def rule_to_json(rule: LocalRule) -> dict:
    return {"schema": "local-rule", "version": SCHEMA_VERSION,
            "words": [format_word(w, "1") for w in rule.words],
            "sigma": rule.sigma_size, "table": list(rule.table)}


def rule_from_json(data, name: str = "<rule>", sigma: int | None = None) -> LocalRule:
    try:
        s = int(data.get("sigma", sigma)) if data.get("sigma", sigma) is not None else None
        if sigma is not None and s != sigma:
            raise FormatError(f"{name}: rule alphabet {s} differs from --sigma {sigma}")
        return LocalRule(tuple(_word(w, f"{name}: words") for w in data["words"]), s,
                         tuple(int(v) for v in data["table"]))
    except KeyError as e:
        raise FormatError(f"{name}: missing field {e}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"{name}: {e}") from None


def action_to_json(a: FiniteAction) -> dict:
    return {"schema": "finite-action", "version": SCHEMA_VERSION, **a.to_json()}


def action_from_json(data, name: str = "<action>") -> FiniteAction:
    try:
        return FiniteAction(int(data["n"]), tuple(tuple(p) for p in data["perms"]))
    except KeyError as e:
        raise FormatError(f"{name}: missing field {e}") from None
    except (TypeError, ValueError) as e:
        raise FormatError(f"{name}: {e}") from None


def dist_from_json(data, name: str = "<dist>"):
    """A FiniteDist from {"atoms": {...}} or a JointTable from {"joint": [[...]]}."""
    if "joint" in data:
        try:
            return JointTable(tuple(tuple(parse_q(p, f"{name}: joint") for p in row)
                                    for row in data["joint"]))
        except ValueError as e:
            raise FormatError(f"{name}: {e}") from None
    if "atoms" in data:
        try:
            return FiniteDist({k: parse_q(v, f"{name}: atoms[{k!r}]")
                               for k, v in data["atoms"].items()})
        except ValueError as e:
            raise FormatError(f"{name}: {e}") from None
    raise FormatError(f"{name}: expected an \"atoms\" or a \"joint\" field")


# -- reports ------------------------------------------------------------------

def outer_to_json(r: OuterRecord, timings: bool = False) -> dict:
    d = {"kind": "outer", "radius": r.radius, "digits": r.digits, "budget": r.budget,
         "status": r.status,
         "bound": None if r.bound is None else fmt_q(r.bound),
         "running_min": None if r.running_min is None else fmt_q(r.running_min),
         "witness": {format(m, "x"): fmt_q(v) for m, v in sorted(r.witness.items())},
         "n_psub": r.n_psub, "n_constraints": r.n_constraints, "n_solved": r.n_solved,
         "skipped": list(r.skipped)}
    if timings:
        d["seconds"] = round(r.seconds, 3)
    return d


def outer_from_json(d: dict) -> OuterRecord:
    return OuterRecord(
        d["radius"], d["digits"], d["budget"],
        None if d["bound"] is None else parse_q(d["bound"]),
        None if d["running_min"] is None else parse_q(d["running_min"]),
        {int(m, 16): parse_q(v) for m, v in d["witness"].items()},
        d["n_psub"], d["n_constraints"], d["n_solved"], list(d["skipped"]),
        d["status"], d.get("seconds", 0.0))


def inner_to_json(r: InnerRecord, timings: bool = False) -> dict:
    d = {"kind": "inner", "n": r.n,
         "bound": None if r.bound is None else fmt_q(r.bound),
         "running_max": None if r.running_max is None else fmt_q(r.running_max),
         "action": None if r.action is None else r.action.to_json(),
         "actions_checked": r.actions_checked}
    if timings:
        d["seconds"] = round(r.seconds, 3)
    return d


def inner_from_json(d: dict) -> InnerRecord:
    act = d["action"]
    return InnerRecord(
        d["n"], None if d["bound"] is None else parse_q(d["bound"]),
        None if d["running_max"] is None else parse_q(d["running_max"]),
        None if act is None else FiniteAction(act["n"], tuple(tuple(p) for p in act["perms"])),
        d["actions_checked"], d.get("seconds", 0.0))


def record_to_json(r, timings: bool = False) -> dict:
    if isinstance(r, OuterRecord):
        return outer_to_json(r, timings)
    if isinstance(r, InnerRecord):
        return inner_to_json(r, timings)
    raise TypeError(f"not a report record: {r!r}")


def read_report(path) -> list:
    """Parse a line-delimited report; returns header dicts and records in order."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        d = loads(line, f"{path}:{lineno}")
        kind = d.get("kind")
        if kind == "outer":
            out.append(outer_from_json(d))
        elif kind == "inner":
            out.append(inner_from_json(d))
        else:
            out.append(d)
    return out
