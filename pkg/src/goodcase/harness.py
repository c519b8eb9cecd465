"""Command line front end: single runs, scenarios, the good-case latency table and trace inspection."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, fields
from fractions import Fraction

from .core import HarnessError, ResilienceError
from .proto_async import commit_rounds
from .proto_sync import grid
from .scenarios import ADVERSARIES, LOWER_BOUNDS, PROTOCOL_IDS, Setup, adversary_world, build_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


class IncompleteRun(HarnessError):
    pass


def q(x) -> str:
    """Rational as an integer string or "num/den"."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def rational(x) -> Fraction:
    if isinstance(x, bool):
        raise ConfigError(f"expected a rational, got {x!r}")
    try:
        return Fraction(x) if not isinstance(x, float) else Fraction(str(x))
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"expected a rational, got {x!r}") from None


@dataclass
class RunConfig:
    protocol: str
    n: int
    f: int
    Delta: Fraction = Fraction(10)
    delta: Fraction = Fraction(2)
    sigma: Fraction | None = None
    gst: Fraction = Fraction(0)
    m: int = 5
    broadcaster_honest: bool = True
    adversary: str | None = None
    override_resilience: bool = False
    horizon: Fraction | None = None
    trace_out: str | None = None
    out: str | None = None

    @classmethod
    def from_json(cls, text):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        for need in ("protocol", "n", "f"):
            if need not in raw:
                raise ConfigError(f"missing config field {need!r}")
        for k in ("Delta", "delta", "sigma", "gst", "horizon"):
            if raw.get(k) is not None:
                raw[k] = rational(raw[k])
        for k in ("n", "f", "m"):
            if k in raw and (not isinstance(raw[k], int) or isinstance(raw[k], bool)):
                raise ConfigError(f"{k} must be an integer")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.protocol not in PROTOCOL_IDS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; choose from {', '.join(PROTOCOL_IDS)}")
        if self.adversary is not None and self.adversary not in ADVERSARIES:
            raise ConfigError(f"unknown adversary {self.adversary!r}")
        if self.m < 1:
            raise ConfigError("m must be positive")

    def setup(self):
        return Setup(
            self.protocol, self.n, self.f,
            Delta=self.Delta, delta=self.delta, sigma=self.sigma, m=self.m, gst=self.gst,
            override=self.override_resilience, horizon=self.horizon,
        )


def good_case_offsets(setup):
    """Skew the second half of the non-broadcasters by the world's σ."""
    if setup.protocol not in ("2delta", "third", "onehalf"):
        return {}
    others = [p for p in range(setup.n) if p != setup.broadcaster]
    return {p: setup.true_sigma for p in others[len(others) // 2:]}


def bound_for(setup):
    D, d = Fraction(setup.Delta), Fraction(setup.delta)
    return {
        "brb": Fraction(2),
        "psync": Fraction(2),
        "2delta": 2 * d,
        "third": D + d,
        "syncstart": D + d,
        "onehalf": D + Fraction(3, 2) * d if d in grid(D, setup.m) else (1 + Fraction(1, 2 * setup.m)) * D + Fraction(3, 2) * d,
    }[setup.protocol]


def measure_good_case(result, setup):
    """Model-normalised latency of a run with an honest broadcaster."""
    w = result.world
    commits = result.honest_commits()
    missing = [p for p in w.honest if p not in commits]
    if missing:
        raise IncompleteRun(f"honest parties {missing} never committed")
    if setup.protocol == "brb":
        rounds = commit_rounds(result.trace)
        return Fraction(max(rounds[p] for p in w.honest))
    start = w.offset(w.broadcaster)
    last = max(c[2] for c in commits.values()) - start
    if setup.protocol == "psync":
        return last / Fraction(setup.Delta)
    return last


def report(result, setup):
    commits = result.honest_commits()
    out = {
        "protocol": setup.protocol,
        "n": setup.n,
        "f": setup.f,
        "model": result.world.model.name,
        "commits": {str(p): {"value": repr(v), "g_time": q(g)} for p, (v, _, g) in sorted(commits.items())},
        "bottom_commit": any(v[0].is_bottom for v in commits.values()),
        "terminated": sorted(result.terminated),
    }
    if result.world.broadcaster not in result.world.byzantine:
        try:
            measured = measure_good_case(result, setup)
        except IncompleteRun as e:
            out.update(measured=None, bound=q(bound_for(setup)), passed=False, error=str(e))
            return out
        bound = bound_for(setup)
        out.update(measured=q(measured), bound=q(bound), passed=measured <= bound)
    else:
        values = {v for v, _, _ in commits.values()}
        out.update(measured=None, bound=None, passed=len(values) <= 1)
    return out


def world_for(cfg: RunConfig):
    setup = cfg.setup()
    if cfg.adversary is not None:
        return setup, adversary_world(setup, cfg.adversary)
    if not cfg.broadcaster_honest:
        return setup, adversary_world(setup, "equivocate")
    return setup, setup.world(offsets=good_case_offsets(setup), name="good-case")


# good-case latency table: one row per upper-bound cell reproduced here

TABLE1 = (
    ("BRB", "async", Setup("brb", 4, 1)),
    ("BRB", "async", Setup("brb", 7, 2)),
    ("psync-VBB", "psync", Setup("psync", 4, 1)),
    ("psync-VBB", "psync", Setup("psync", 9, 2)),
    ("BB 2δ-BB", "sync δ=2 Δ=10", Setup("2delta", 4, 1)),
    ("BB (Δ+δ)-n/3-BB", "sync δ=2 Δ=10", Setup("third", 3, 1)),
    ("BB (Δ+δ)-BB", "sync δ=3 Δ=10 σ=0", Setup("syncstart", 5, 2, delta=Fraction(3))),
    ("BB (Δ+1.5δ)-BB", "sync δ=2 Δ=10 σ=1 m=5", Setup("onehalf", 5, 2, delta=Fraction(2), sigma=Fraction(1))),
    ("BB (Δ+1.5δ)-BB", "sync δ=3 Δ=10 σ=3/2 m=5", Setup("onehalf", 5, 2, delta=Fraction(3))),
)


def table1_rows():
    rows = []
    for problem, model, setup in TABLE1:
        result = setup.world(offsets=good_case_offsets(setup)).run()
        measured = measure_good_case(result, setup)
        bound = bound_for(setup)
        rows.append((problem, model, f"n={setup.n} f={setup.f}", q(measured), q(bound), "pass" if measured <= bound else "fail"))
    return rows


def table1_csv():
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("problem", "model", "resilience", "measured", "bound", "pass"))
    rows = table1_rows()
    w.writerows(rows)
    return buf.getvalue(), all(r[-1] == "pass" for r in rows)


def scenario_text(name, **params):
    sc = build_scenario(name, **params)
    _, verdicts = sc.run()
    lines = [f"scenario {sc.name}: {len(sc.executions)} executions"]
    lines += [v.line() for v in verdicts]
    return "\n".join(lines) + "\n", all(v.ok for v in verdicts)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args):
    with open(args.config, encoding="utf-8") as fh:
        cfg = RunConfig.from_json(fh.read())
    if args.m is not None:
        cfg.m = args.m
    if args.horizon is not None:
        cfg.horizon = rational(args.horizon)
    if args.override_resilience:
        cfg.override_resilience = True
    setup, world = world_for(cfg)
    result = world.run()
    rep = report(result, setup)
    trace_path = args.trace or cfg.trace_out
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(result.trace.to_jsonl())
    _emit(json.dumps(rep, indent=2, sort_keys=True, ensure_ascii=False) + "\n", args.out or cfg.out)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def _cmd_scenario(args):
    params = {"f": args.f}
    if args.n is not None:
        params["n"] = args.n
    text, ok = scenario_text(args.name, **params)
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_table(args):
    if args.suite != "table1":
        raise ConfigError(f"unknown suite {args.suite!r}")
    text, ok = table1_csv()
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_trace(args):
    until = rational(args.until) if args.until is not None else None
    out = []
    with open(args.input, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if rec["party"] != args.party or rec["kind"] not in ("start", "deliver", "timer"):
                continue
            if until is not None and Fraction(rec["l_time"]) >= until:
                continue
            peer = "" if rec["peer"] is None else f" from {rec['peer']}"
            out.append(f"{q(Fraction(rec['l_time']))} {rec['kind']}{peer} {rec['payload']}\n")
    _emit("".join(out), args.out)
    return EXIT_OK


def parser():
    p = argparse.ArgumentParser(prog="goodcase", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="execute one configured world")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--trace", help="write the JSONL trace here")
    r.add_argument("--m", type=int)
    r.add_argument("--horizon")
    r.add_argument("--override-resilience", action="store_true")
    s = sub.add_parser("scenario", help="run a lower-bound construction")
    s.add_argument("--name", required=True, choices=sorted(LOWER_BOUNDS))
    s.add_argument("--f", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--out")
    t = sub.add_parser("table", help="reproduce the good-case latency table")
    t.add_argument("--suite", default="table1")
    t.add_argument("--out")
    tr = sub.add_parser("trace", help="print one party's local history from a JSONL trace")
    tr.add_argument("--in", dest="input", required=True)
    tr.add_argument("--party", type=int, required=True)
    tr.add_argument("--until")
    tr.add_argument("--out")
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    handler = {"run": _cmd_run, "scenario": _cmd_scenario, "table": _cmd_table, "trace": _cmd_trace}[args.cmd]
    try:
        return handler(args)
    except (ConfigError, ResilienceError, ValueError, OSError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except HarnessError as e:
        print(f"run aborted: {e}", file=sys.stderr)
        return EXIT_FAIL
