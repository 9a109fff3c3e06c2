"""Command-line entry point: ``supcheck check FILE`` and ``supcheck bench DIR``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .flows import compute_flows
from .oracle import oracle_unbounded_evidence, profile_csv
from .parser import parse_file
from .saturation import Options, ResourceExceeded, all_option_combinations, saturate
from .syntax import Scheme, SchemeError, scheme_is_homogeneous
from .verdict import BOUNDED, UNBOUNDED, UNKNOWN, decide

EXIT_OK = 0
EXIT_INPUT = 3
EXIT_RESOURCE = 4
EXIT_MISMATCH = 5

OUTCOMES = (UNBOUNDED, BOUNDED, UNKNOWN)


class NoLettersError(SchemeError):
    pass


@dataclass
class RunReport:
    verdict: str
    safe: bool
    homogeneous: bool
    letters: list[str]
    order: int
    stats: dict
    flags: str
    witness: Optional[dict] = None
    oracle: Optional[dict] = None
    dumps: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "safe": self.safe,
            "homogeneous": self.homogeneous,
            "letters": self.letters,
            "order": self.order,
            "flags": self.flags,
            "stats": self.stats,
            "witness": self.witness,
        }
        if self.oracle is not None:
            out["oracle"] = self.oracle
        return out

    def render(self) -> str:
        lines = [
            self.verdict,
            f"safe: {'yes' if self.safe else 'no'}",
            f"homogeneous: {'yes' if self.homogeneous else 'no'}",
            f"order: {self.order}",
            f"letters: {','.join(self.letters)}",
            f"flags: {self.flags}",
            "stats: " + " ".join(f"{k}={v}" for k, v in self.stats.items()),
        ]
        if self.witness:
            lines.append("witness path: " + " -> ".join(self.witness["path"]))
            lines.append("witness cycle: " + " -> ".join(self.witness["cycle"]))
            for p in self.witness["pumps"][1:]:
                lines.append(f"also pumps {','.join(p['letters'])} at {p['node']}")
        if self.oracle is not None:
            o = self.oracle
            state = "confirmed" if o["confirmed"] else "inconclusive"
            lines.append(f"oracle: {state} max_f={o['max_f']} depth={o['depth']}")
        return "\n".join(lines)


def load_scheme(path, letters: Optional[str] = None) -> Scheme:
    g = parse_file(path)
    if letters is not None:
        names = [a.strip() for a in letters.split(",") if a.strip()]
        g = g.with_letters(names)
    if not g.important:
        raise NoLettersError("no important letters declared")
    return g


def analyze(
    g: Scheme,
    opts: Options,
    *,
    oracle: bool = False,
    oracle_depth: int = 200,
    oracle_threshold: int = 5,
    dumps: Sequence[str] = (),
) -> RunReport:
    flows = compute_flows(g)
    res = saturate(g, flows, opts)
    v = decide(res, g)
    report = RunReport(
        verdict=v.outcome,
        safe=v.scheme_safe,
        homogeneous=scheme_is_homogeneous(g),
        letters=list(g.important),
        order=g.order,
        stats=res.stats.as_dict(),
        flags=opts.label(),
        witness=v.to_json(),
    )
    if oracle:
        ev = oracle_unbounded_evidence(g, oracle_depth, oracle_threshold)
        report.oracle = ev.to_json()
        report.dumps["oracle"] = profile_csv(ev.profile)
    if "derivations" in dumps:
        report.dumps["derivations"] = res.table.dump()
    if "graph" in dumps:
        report.dumps["graph"] = res.graph.to_dot(g.important)
    if "flows" in dumps:
        report.dumps["flows"] = flows.dump()
    return report


def _options(ns) -> Options:
    return Options(ftty=not ns.noftty, fntty=not ns.nofntty, hvo=not ns.nohvo, timeout=ns.timeout)


def cmd_check(ns) -> int:
    try:
        g = load_scheme(ns.file, ns.letters)
    except (SchemeError, OSError) as exc:
        print(f"error: {ns.file}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    dumps = [name for name in ("derivations", "graph", "flows") if getattr(ns, f"dump_{name}")]
    if ns.oracle_csv:
        ns.oracle = True
    try:
        report = analyze(
            g,
            _options(ns),
            oracle=ns.oracle,
            oracle_depth=ns.oracle_depth,
            oracle_threshold=ns.oracle_threshold,
            dumps=dumps,
        )
    except ResourceExceeded as exc:
        print(f"error: {ns.file}: resource limit exceeded ({exc})", file=sys.stderr)
        return EXIT_RESOURCE
    except MemoryError:
        print(f"error: {ns.file}: out of memory", file=sys.stderr)
        return EXIT_RESOURCE
    extra = sys.stderr if ns.json else sys.stdout
    if ns.json:
        print(json.dumps(report.to_json(), sort_keys=True))
    else:
        print(report.render())
    for name in dumps:
        print(report.dumps[name], file=extra)
    if ns.oracle_csv:
        print(report.dumps["oracle"], file=extra)
    if ns.expect is not None and ns.expect.upper() != report.verdict:
        print(f"expected {ns.expect.upper()}, got {report.verdict}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


# --------------------------------------------------------------------------
# Benchmark grid


def read_expect(path: Path) -> dict:
    """Sidecar metadata: ``key: value`` lines, or a bare verdict token."""
    meta: dict = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            k, v = line.split(":", 1)
            meta[k.strip().lower()] = v.strip()
        else:
            meta["verdict"] = line
    if "verdict" in meta:
        meta["verdict"] = meta["verdict"].upper()
    return meta


def _bench_cell(path: str, opts: Options) -> tuple[str, Optional[float]]:
    try:
        g = load_scheme(path)
        t0 = time.perf_counter()
        res = saturate(g, compute_flows(g), opts)
        v = decide(res, g)
        return v.outcome, (time.perf_counter() - t0) * 1000
    except ResourceExceeded:
        return "TO", None
    except MemoryError:
        return "OOM", None
    except (SchemeError, OSError):
        return "ERR", None


@dataclass
class BenchRow:
    name: str
    cells: list[tuple[str, Optional[float]]]
    expect: Optional[str]

    @property
    def verdicts(self) -> set[str]:
        return {v for v, _ in self.cells if v in OUTCOMES}

    @property
    def consistent(self) -> bool:
        return len(self.verdicts) <= 1

    @property
    def matches(self) -> bool:
        return self.expect is None or self.verdicts <= {self.expect}


def run_bench(directory, timeout: Optional[float] = 600.0, jobs: int = 1) -> tuple[list[Options], list[BenchRow]]:
    combos = all_option_combinations(timeout)
    files = sorted(Path(directory).glob("*.hrs"))
    tasks = [(str(f), o) for f in files for o in combos]
    if jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_bench_cell, *zip(*tasks)))
    else:
        results = [_bench_cell(f, o) for f, o in tasks]
    rows = []
    for i, f in enumerate(files):
        side = f.with_suffix(".expect")
        expect = read_expect(side).get("verdict") if side.exists() else None
        rows.append(BenchRow(f.stem, results[i * len(combos):(i + 1) * len(combos)], expect))
    return combos, rows


_SHORT = {UNBOUNDED: "unb", BOUNDED: "bnd", UNKNOWN: "unk"}


def render_grid(combos: list[Options], rows: list[BenchRow]) -> str:
    header = ["scheme"] + [o.label() for o in combos] + ["expect"]
    table = [header]
    for r in rows:
        cells = [r.name]
        for v, ms in r.cells:
            cells.append(v if ms is None else f"{_SHORT[v]} {ms:.0f}ms")
        mark = "" if r.consistent and r.matches else " !"
        cells.append((r.expect or "-") + mark)
        table.append(cells)
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in table)


def cmd_bench(ns) -> int:
    if not Path(ns.dir).is_dir():
        print(f"error: {ns.dir} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    combos, rows = run_bench(ns.dir, ns.timeout, ns.jobs)
    if ns.json:
        out = [
            {
                "scheme": r.name,
                "expect": r.expect,
                "cells": {o.label(): {"verdict": v, "ms": ms} for o, (v, ms) in zip(combos, r.cells)},
            }
            for r in rows
        ]
        print(json.dumps(out, sort_keys=True))
    else:
        print(render_grid(combos, rows))
    bad = [r for r in rows if not (r.consistent and r.matches)]
    return EXIT_MISMATCH if bad else EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="supcheck", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="decide one scheme")
    c.add_argument("file")
    c.add_argument("--letters", help="comma-separated important letters (overrides the file)")
    c.add_argument("-noftty", action="store_true", help="re-type whole rules on new parameter pairs")
    c.add_argument("-nofntty", action="store_true", help="re-type every rule on new bindings")
    c.add_argument("-nohvo", action="store_true", help="always use flow candidates for parameters")
    c.add_argument("--timeout", type=float, default=600.0, help="seconds (default 600)")
    c.add_argument("--oracle", action="store_true", help="also run the tree expansion oracle")
    c.add_argument("--oracle-depth", type=int, default=200)
    c.add_argument("--oracle-threshold", type=int, default=5)
    c.add_argument("--oracle-csv", action="store_true", help="print the depth,f profile")
    c.add_argument("--dump-derivations", action="store_true")
    c.add_argument("--dump-graph", action="store_true", help="derivation graph in DOT")
    c.add_argument("--dump-flows", action="store_true")
    c.add_argument("--json", action="store_true")
    c.add_argument("--expect", choices=["unbounded", "bounded", "unknown", "UNBOUNDED", "BOUNDED", "UNKNOWN"])
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="run every flag combination over a directory")
    b.add_argument("dir")
    b.add_argument("--timeout", type=float, default=600.0)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
