"""Acceptance criteria, one test each.

A pass/fail line per criterion is printed in the terminal summary.
"""

from __future__ import annotations

import random
import time

from helpers import R_TO_R, analysed, corpus, structural_cases, term_is_homogeneous, worked_example
from supcheck.intertypes import ATOM, arrow, smultiset_union
from supcheck.oracle import Profiler, naive_saturate, oracle_unbounded_evidence, start_reachable
from supcheck.saturation import all_option_combinations, saturate
from supcheck.syntax import is_safe, is_superficially_safe
from supcheck.typecheck import canon
from supcheck.verdict import UNBOUNDED, decide, replay_witness

ENTRIES = corpus()
UNB = [e for e in ENTRIES if analysed(e.name)[2].outcome == UNBOUNDED]


def test_worked_example(criterion):
    with criterion(1, "worked example judgments") as c:
        t0 = time.perf_counter()
        j = worked_example()
        alt = worked_example(y_mask=0)["y (y (a z))"]
        elapsed = time.perf_counter() - t0
        y_pr, y_np, z_pr = ("y", 1, R_TO_R), ("y", 0, R_TO_R), ("z", 1, ATOM)
        got = [
            (j["a z"].env, j["a z"].ty, j["a z"].value),
            (j["y (a z)"].env, j["y (a z)"].ty, j["y (a z)"].value),
            (j["y (y (a z))"].env, j["y (y (a z))"].ty, j["y (y (a z))"].value),
            (j["\\y"].env, j["\\y"].ty, j["\\y"].value),
            (alt.env, alt.ty, alt.value),
        ]
        want = [
            (canon({z_pr: 1}), ATOM, (1,)),
            (canon({z_pr: 1, y_pr: 1}), ATOM, (1,)),
            (canon({z_pr: 1, y_pr: 1}), ATOM, (2,)),
            ((), arrow({(1, R_TO_R): 1}, R_TO_R), (2,)),
            (canon({z_pr: 1, y_np: 1}), ATOM, (1,)),
        ]
        assert got == want
        assert elapsed < 1.0
        c.detail = f"values 1,1,2,2 and 1; {elapsed * 1000:.1f} ms"


def test_soundness(criterion):
    with criterion(2, "soundness against the expansion oracle") as c:
        assert len(ENTRIES) >= 25
        assert {e.order for e in ENTRIES} >= set(range(6))
        assert any(not e.safe for e in ENTRIES)
        t0 = time.perf_counter()
        violations = []
        for e in ENTRIES:
            g = e.scheme
            v = decide(saturate(g), g)
            if v.outcome == UNBOUNDED:
                ev = oracle_unbounded_evidence(g, depth_budget=200, threshold=5)
                if not ev.confirmed:
                    violations.append(e.name)
        elapsed = time.perf_counter() - t0
        assert violations == []
        assert elapsed < 60.0
        c.detail = f"{len(UNB)} unbounded of {len(ENTRIES)}, 0 violations, full corpus {elapsed:.1f} s"


def test_safe_completeness(criterion):
    with criterion(3, "safe completeness against ground truth") as c:
        safe = [e for e in ENTRIES if e.safe]
        wrong = [e.name for e in safe if analysed(e.name)[2].outcome != e.truth]
        assert wrong == []
        c.detail = f"{len(safe)} safe schemes"


def test_flag_invariance(criterion):
    with criterion(4, "flag invariance over 8 combinations") as c:
        diff = []
        for e in ENTRIES:
            g, _, v = analysed(e.name)
            for opts in all_option_combinations():
                if decide(saturate(g, opts=opts), g).outcome != v.outcome:
                    diff.append((e.name, opts.label()))
        assert diff == []
        c.detail = f"{len(ENTRIES) * 8} runs"


def test_naive_equivalence(criterion):
    with criterion(5, "naive saturator equivalence for order <= 2") as c:
        low = [e for e in ENTRIES if e.order <= 2]
        diff = []
        for e in low:
            g, res, v = analysed(e.name)
            nres = naive_saturate(g, timeout=120)
            if start_reachable(nres, g) != start_reachable(res, g) or decide(nres, g).outcome != v.outcome:
                diff.append(e.name)
        assert diff == []
        c.detail = f"{len(low)} schemes"


def test_multi_letter(criterion):
    with criterion(6, "multi-letter instances and s=2 union law") as c:
        two = [e for e in ENTRIES if len(analysed(e.name)[0].important) >= 2]
        assert len(two) >= 5
        kinds = set()
        for e in two:
            g, _, v = analysed(e.name)
            per_letter = {a: Profiler(g, [a], 5).f(200) for a in g.important}
            joint = oracle_unbounded_evidence(g, 200, 5)
            if v.outcome == UNBOUNDED:
                assert joint.confirmed, e.name
                kinds.add("mixed")
            else:
                assert v.outcome == e.truth, e.name
                assert not joint.confirmed, e.name
                if any(f is not None and f >= 5 for f in per_letter.values()):
                    kinds.add("single-letter-only")
        assert kinds == {"mixed", "single-letter-only"}
        rng = random.Random(2)
        for _ in range(1000):
            u = {k: rng.randint(0, 2) for k in "pqr"}
            v = {k: rng.randint(0, 2) for k in "pqr"}
            w = smultiset_union(u, v, 2)
            assert all(w.get(k, 0) == min(u[k] + v[k], 2) for k in "pqr")
        c.detail = f"{len(two)} two-letter schemes, 1000 unions"


def test_witness_replay(criterion):
    with criterion(7, "witness replay strictly increasing") as c:
        for e in UNB:
            w = analysed(e.name)[2].witness
            vals = [replay_witness(w, k) for k in range(4)]
            for lo, hi in zip(vals, vals[1:]):
                assert all(x < y for x, y in zip(lo, hi)), (e.name, vals)
        c.detail = f"{len(UNB)} witnesses, 3 repetitions"


def test_structural(criterion):
    with criterion(8, "safety and homogeneity labels") as c:
        cases = structural_cases()
        assert len(cases) >= 12
        wrong = [
            label
            for label, t, ss, safe, homog in cases
            if (is_superficially_safe(t), is_safe(t), term_is_homogeneous(t)) != (ss, safe, homog)
        ]
        assert wrong == []
        c.detail = f"{len(cases)} terms"
