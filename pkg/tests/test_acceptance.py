"""Acceptance gate: one test per quantitative criterion.

Each test prints a PASS/FAIL line per criterion so the gate can be read off
the pytest -v output directly.  The heavy Monte Carlo batch is shared
between the dominance, constant-factor, and upper-bound criteria.
"""

import json
from functools import lru_cache

from choicealloc.cli import main
from choicealloc.verify import (
    suite_bounds,
    suite_cdlp,
    suite_dominance,
    suite_hjb,
    suite_inequality,
    suite_scaling,
)


@lru_cache(maxsize=None)
def _cdlp_checks():
    return {c.name: c for c in suite_cdlp()}


@lru_cache(maxsize=None)
def _dominance_checks():
    return {c.name: c for c in suite_dominance()}


@lru_cache(maxsize=None)
def _bounds_checks():
    return {c.name: c for c in suite_bounds()}


def _gate(criterion, checks):
    ok = all(c.passed for c in checks)
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}")
    for c in checks:
        print(f"    {'ok ' if c.passed else 'BAD'} {c.name}: {c.detail}")
    assert ok, f"{criterion}: " + "; ".join(c.name for c in checks if not c.passed)


def test_criterion_01_cdlp_exactness():
    _gate("criterion 1: exact plan matches full enumeration (50 instances, gap <= 1e-6)",
          [_cdlp_checks()["cdlp-exact-vs-enumeration"]])


def test_criterion_02_eps_certificates():
    named = _cdlp_checks()
    _gate("criterion 2: eps-optimal certificates at eps in {0.05, 0.1}",
          [named["cdlp-eps-certificate-0.05"], named["cdlp-eps-dual-bound-0.05"],
           named["cdlp-eps-certificate-0.1"], named["cdlp-eps-dual-bound-0.1"]])


def test_criterion_03_sort_solver_exact():
    _gate("criterion 3: sort solver matches brute force (200 cases, 1e-9)",
          [_cdlp_checks()["sort-solver-exact"]])


def test_criterion_04_hjb_accuracy():
    _gate("criterion 4: value surface matches closed forms (1e-3 at G=1e4)",
          suite_hjb())


def test_criterion_05_dominance_chain():
    _gate("criterion 5: opr >= pr >= fcfs within 2 paired CIs (20 instances, M=1e4)",
          list(_dominance_checks().values()))


def test_criterion_06_constant_factor_bounds():
    named = _bounds_checks()
    _gate("criterion 6: pr >= 0.5 and fcfs >= 1/e of the plan value, minus CI",
          [named["bound-pr-at-least-half"], named["bound-fcfs-at-least-1-over-e"]])


def test_criterion_07_sandwich_per_resource():
    named = _bounds_checks()
    _gate("criterion 7: half-revenue <= interval decomposition <= V(C,0), 1e-3 rel",
          [named["sandwich-half-planned-revenue"], named["sandwich-below-value-surface"]])


def test_criterion_08_poisson_inequality():
    _gate("criterion 8: partial-expectation ratio >= 1/e on (0,50], equality at 1",
          suite_inequality())


def test_criterion_09_asymptotic_optimality():
    _gate("criterion 9: opr ratio nondecreasing in theta, >= 0.95 at theta=64",
          suite_scaling())


def test_criterion_10_upper_bound_sanity():
    named = _bounds_checks()
    _gate("criterion 10: mean reward below plan value and hindsight average + CI",
          [named["upper-bound-cdlp"], named["upper-bound-hindsight"]])


def test_criterion_11_cli_determinism(tmp_path):
    instance = {
        "resources": [{"capacity": 2}, {"capacity": 1}],
        "products": [{"resource": 1, "reward": 1.0}, {"resource": 1, "reward": 0.5},
                     {"resource": 2, "reward": 1.5}],
        "types": [
            {"rate": {"breakpoints": [0.0, 0.5, 1.0], "rates": [1.0, 2.0]},
             "choice": {"kind": "attraction", "mu": [0.0, 0.0, 0.0], "nu": [1.2, 0.8, 0.4]}},
            {"rate": {"breakpoints": [0.0, 1.0], "rates": [1.2]},
             "choice": {"kind": "mixture", "segments": [
                 {"weight": 0.6, "mu": [0.0, 0.0, 0.0], "nu": [0.2, 0.5, 1.5]},
                 {"weight": 0.4, "mu": [0.0, 0.0, 0.0], "nu": [1.0, 0.0, 0.3]}]}},
        ],
    }
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(instance))

    def run(out):
        return main([
            "simulate", "--instance", str(path), "--policies", "fcfs,pr,opr",
            "--reps", "400", "--seed", "7", "--grid", "1000",
            "--theta", "1,4", "--trace", "--out", str(out),
        ])

    assert run(tmp_path / "a") == 0
    assert run(tmp_path / "b") == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "report.csv" in names
    identical = all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
        for n in names
    )
    print(f"[{'PASS' if identical else 'FAIL'}] criterion 11: reruns are byte-identical "
          f"({len(names)} files)")
    assert identical

    spike_a = main(["spike", "--sharpness", "1,4", "--reps", "100", "--seed", "3",
                    "--grid", "400", "--out", str(tmp_path / "sa")])
    spike_b = main(["spike", "--sharpness", "1,4", "--reps", "100", "--seed", "3",
                    "--grid", "400", "--out", str(tmp_path / "sb")])
    assert spike_a == spike_b == 0
    assert (tmp_path / "sa" / "spike.csv").read_bytes() == \
        (tmp_path / "sb" / "spike.csv").read_bytes()
