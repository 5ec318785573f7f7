"""Command-line front end.

Subcommands: ``validate`` (instance linting), ``cdlp`` (solve and dump the
fluid plan), ``simulate`` (Monte Carlo policy comparison, CSV reports),
``verify`` (quantitative verification suites), and ``spike`` (demand-spike
stress sweep).  Seeds are mandatory wherever randomness is involved, so
every emitted file is a pure function of flags and inputs; reruns are
byte-identical.

Exit codes: 0 ok, 1 domain invariant violation, 2 parse error,
3 non-certified optimization, 4 verification failure.

Instance files are JSON documents::

    {"resources": [{"capacity": 2, "expiry": 1.0}],
     "products":  [{"resource": 1, "reward": 1.0}],
     "types": [{"rate": {"breakpoints": [0.0, 1.0], "rates": [2.0]},
                "choice": {"kind": "attraction", "mu": [0.0], "nu": [1.5]},
                "reward_override": {"1": 0.8}}]}

ids are positional (1-based).  Choice documents come in three kinds:
``attraction`` (arrays ``mu``/``nu``), ``mixture`` (array ``segments`` of
``{weight, mu, nu}``), and ``table`` (array ``entries`` of
``{"S": [...], "p": {product: probability}}``).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .cdlp import (
    AutoExactSolver,
    BruteForceSolver,
    LocalSearchSolver,
    SortSolver,
    solve_cdlp,
)
from .choice import AttractionChoiceModel, MixtureChoiceModel, TabulatedChoiceModel
from .model import (
    CustomerType,
    Instance,
    Product,
    RateCurve,
    Resource,
    scale_instance,
    validate_instance,
)
from .generators import spike_instance
from .policies import POLICY_NAMES
from .sim import estimate_ratio, generate_arrivals, monte_carlo, run_policy
from .valuefn import build_value_grids
from .verify import SUITES, run_suite

__all__ = ["main", "load_instance", "dump_instance", "InstanceFormatError"]

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_PARSE = 2
EXIT_NOT_CERTIFIED = 3
EXIT_VERIFY_FAILED = 4


class InstanceFormatError(ValueError):
    """The document cannot be interpreted as an instance at all."""


def _parse_choice(doc) -> object:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InstanceFormatError("choice document must be an object with a 'kind'")
    kind = doc["kind"]
    try:
        if kind == "attraction":
            return AttractionChoiceModel(tuple(doc["mu"]), tuple(doc["nu"]))
        if kind == "mixture":
            segments = tuple(
                (seg["weight"], AttractionChoiceModel(tuple(seg["mu"]), tuple(seg["nu"])))
                for seg in doc["segments"]
            )
            return MixtureChoiceModel(segments)
        if kind == "table":
            table = {
                frozenset(int(n) for n in entry["S"]):
                    {int(n): float(p) for n, p in entry["p"].items()}
                for entry in doc["entries"]
            }
            return TabulatedChoiceModel(table)
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"bad {kind!r} choice document: {exc}") from exc
    raise InstanceFormatError(f"unknown choice kind {kind!r}")


def load_instance(path) -> Instance:
    """Parse an instance file; raises InstanceFormatError on anything that
    prevents construction (semantic checks are validate_instance's job)."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object")
    for key in ("resources", "products", "types"):
        if key not in doc or not isinstance(doc[key], list):
            raise InstanceFormatError(f"missing or non-array field {key!r}")
    try:
        resources = tuple(
            Resource(i, int(r["capacity"]), float(r.get("expiry", 1.0)))
            for i, r in enumerate(doc["resources"], start=1)
        )
        products = tuple(
            Product(i, int(p["resource"]), float(p["reward"]))
            for i, p in enumerate(doc["products"], start=1)
        )
        types = []
        for i, t in enumerate(doc["types"], start=1):
            rate = RateCurve(tuple(t["rate"]["breakpoints"]), tuple(t["rate"]["rates"]))
            override = t.get("reward_override")
            if override is not None:
                override = {int(n): float(r) for n, r in override.items()}
            types.append(CustomerType(i, rate, _parse_choice(t["choice"]), override))
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"bad instance document: {exc}") from exc
    return Instance(resources, products, tuple(types))


def _dump_choice(model) -> dict:
    if isinstance(model, AttractionChoiceModel):
        return {"kind": "attraction", "mu": list(model.mu), "nu": list(model.nu)}
    if isinstance(model, MixtureChoiceModel):
        return {"kind": "mixture", "segments": [
            {"weight": w, "mu": list(m.mu), "nu": list(m.nu)} for w, m in model.segments
        ]}
    if isinstance(model, TabulatedChoiceModel):
        return {"kind": "table", "entries": [
            {"S": sorted(S), "p": {str(n): p for n, p in sorted(entry.items())}}
            for S, entry in sorted(model.table.items(), key=lambda kv: sorted(kv[0]))
        ]}
    raise TypeError(f"cannot serialize choice model {type(model).__name__}")


def dump_instance(inst: Instance, path) -> None:
    doc = {
        "resources": [{"capacity": r.capacity, "expiry": r.expiry} for r in inst.resources],
        "products": [{"resource": p.resource, "reward": p.reward} for p in inst.products],
        "types": [
            {
                "rate": {"breakpoints": list(t.rate.breakpoints), "rates": list(t.rate.rates)},
                "choice": _dump_choice(t.choice),
                **({"reward_override": {str(n): r for n, r in sorted(t.reward_override.items())}}
                   if t.reward_override else {}),
            }
            for t in inst.types
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _make_solver(name: str):
    if name == "auto":
        return AutoExactSolver()
    if name == "sort":
        return SortSolver()
    if name == "bruteforce":
        return BruteForceSolver()
    if name == "localsearch":
        return LocalSearchSolver()
    raise ValueError(f"unknown solver {name!r}")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # builtin float: shortest round-trip repr
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _assortment_str(S) -> str:
    return "|".join(str(n) for n in sorted(S)) if S else "-"


def cmd_validate(args) -> int:
    try:
        inst = load_instance(args.instance)
    except InstanceFormatError as exc:
        print(f"parse error: {exc}")
        return EXIT_PARSE
    report = validate_instance(inst)
    for w in report.warnings:
        print(f"warning: {w}")
    if not report.ok:
        for e in report.errors:
            print(f"violation: {e}")
        return EXIT_INVARIANT
    print(f"ok: {inst.num_resources} resources, {inst.num_products} products, "
          f"{inst.num_types} types")
    return EXIT_OK


def cmd_cdlp(args) -> int:
    try:
        inst = load_instance(args.instance)
    except InstanceFormatError as exc:
        print(f"parse error: {exc}")
        return EXIT_PARSE
    try:
        solver = _make_solver(args.solver)
        sol = solve_cdlp(inst, args.eps, solver)
    except ValueError as exc:
        print(f"error: {exc}")
        return EXIT_INVARIANT

    print(f"objective {sol.objective!r}  eps {sol.epsilon!r}  "
          f"certified {'yes' if sol.certified else 'NO'}  iterations {sol.iterations}")
    for l, p in enumerate(sol.pi, start=1):
        print(f"pi[{l}] = {p!r}")
    for k, s in enumerate(sol.sigma, start=1):
        print(f"sigma[{k}] = {s!r}")
    for k in range(1, inst.num_types + 1):
        for S in sol.active.get(k, ()):
            print(f"x[{k}][{_assortment_str(S)}] = {sol.x[(k, S)]!r}")

    if args.out:
        rows = [("objective", "", "", sol.objective),
                ("epsilon", "", "", sol.epsilon),
                ("certified", "", "", int(sol.certified))]
        rows += [("pi", l, "", p) for l, p in enumerate(sol.pi, start=1)]
        rows += [("sigma", k, "", s) for k, s in enumerate(sol.sigma, start=1)]
        rows += [
            ("x", k, _assortment_str(S), sol.x[(k, S)])
            for k in range(1, inst.num_types + 1)
            for S in sol.active.get(k, ())
        ]
        _write_csv(Path(args.out), ("record", "index", "assortment", "value"), rows)

    if not sol.certified:
        print("warning: iteration cap reached; plan is not certified optimal")
        return EXIT_NOT_CERTIFIED
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        inst = load_instance(args.instance)
    except InstanceFormatError as exc:
        print(f"parse error: {exc}")
        return EXIT_PARSE
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    bad = [p for p in policies if p not in POLICY_NAMES]
    if bad or not policies:
        print(f"error: unknown policies {bad}; choose from {', '.join(POLICY_NAMES)}")
        return EXIT_INVARIANT
    try:
        thetas = [float(t) for t in args.theta.split(",")]
        if any(t <= 0 for t in thetas):
            raise ValueError("scaling factors must be positive")
    except ValueError as exc:
        print(f"error: bad --theta value: {exc}")
        return EXIT_INVARIANT
    instance_id = Path(args.instance).stem
    out_dir = Path(args.out)

    rows = []
    for theta in thetas:
        scaled = scale_instance(inst, theta) if theta != 1.0 else inst
        tag = instance_id if len(thetas) == 1 and theta == 1.0 \
            else f"{instance_id}@theta{theta:g}"
        try:
            solver = _make_solver(args.solver)
            sol = solve_cdlp(scaled, args.eps, solver)
        except ValueError as exc:
            print(f"error: {exc}")
            return EXIT_INVARIANT
        if not sol.certified:
            print(f"error: plan for {tag} is not certified; aborting")
            return EXIT_NOT_CERTIFIED
        grids = None
        if any(p in ("pr", "opr") for p in policies):
            grids = build_value_grids(scaled, sol.s_star, args.grid)
        if args.dump_grids and grids:
            for l, grid in grids.items():
                grid_rows = [
                    (grid.times[g], c, grid.values[c, g])
                    for c in range(grid.capacity + 1)
                    for g in range(len(grid.times))
                ]
                _write_csv(out_dir / f"grid_{tag}_resource{l}.csv",
                           ("t", "c", "V"), grid_rows)
        for policy in policies:
            run = monte_carlo(scaled, policy, args.reps, args.seed, sol=sol,
                              grids=grids, relaxed=args.relaxed_mode,
                              workers=args.workers)
            ratio, _ = estimate_ratio(run, sol.objective) if sol.objective > 0 else (0.0, 0.0)
            rows.append((tag, policy, args.reps, run.mean, run.half_width,
                         sol.objective, ratio, args.seed))
            print(f"{tag} {policy}: mean {run.mean:.4f} ± {run.half_width:.4f} "
                  f"(plan {sol.objective:.4f}, ratio {ratio:.4f})")
            if args.trace:
                path = generate_arrivals(scaled, (args.seed, 0, 0))
                rep = run_policy(scaled, policy, sol, grids, path, (args.seed, 0, 1),
                                 relaxed=args.relaxed_mode, collect_trace=True)
                _write_csv(out_dir / f"trace_{tag}_{policy}.csv",
                           ("time", "type", "assortment", "choice", "accept", "reward"),
                           rep.trace)

    _write_csv(out_dir / "report.csv",
               ("instance-id", "policy", "M", "mean", "ci_half_width",
                "V_CDLP", "ratio", "seed"), rows)
    print(f"wrote {out_dir / 'report.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.instances is not None:
        overrides["instances"] = args.instances
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        results = run_suite(args.suite, **overrides)
    except TypeError as exc:
        print(f"error: suite {args.suite!r} does not accept these overrides: {exc}")
        return EXIT_INVARIANT
    failed = 0
    for check in results:
        mark = "PASS" if check.passed else "FAIL"
        print(f"[{mark}] {check.name}: {check.detail}")
        failed += 0 if check.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


def cmd_spike(args) -> int:
    sweep = [float(s) for s in args.sharpness.split(",")]
    rows = []
    for s in sweep:
        inst = spike_instance(s)
        sol = solve_cdlp(inst)
        grids = build_value_grids(inst, sol.s_star, args.grid)
        run = monte_carlo(inst, "opr", args.reps, args.seed * 17 + int(s),
                          sol=sol, grids=grids, workers=args.workers)
        ratio, hw = estimate_ratio(run, sol.objective)
        rows.append((s, "opr", args.reps, run.mean, run.half_width,
                     sol.objective, ratio, args.seed))
        print(f"sharpness {s:g}: ratio {ratio:.4f} ± {hw:.4f} "
              f"(mean {run.mean:.4f}, plan {sol.objective:.4f})")
    if args.out:
        _write_csv(Path(args.out) / "spike.csv",
                   ("sharpness", "policy", "M", "mean", "ci_half_width",
                    "V_CDLP", "ratio", "seed"), rows)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="choicealloc",
        description="Online resource allocation under customer choice: "
                    "plan, simulate, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="lint an instance file")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("cdlp", help="solve the fluid plan and dump it")
    p.add_argument("--instance", required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--solver", default="auto",
                   choices=("auto", "sort", "bruteforce", "localsearch"))
    p.add_argument("--out", default=None, help="optional CSV dump path")
    p.set_defaults(func=cmd_cdlp)

    p = sub.add_parser("simulate", help="Monte Carlo policy comparison")
    p.add_argument("--instance", required=True)
    p.add_argument("--policies", default="fcfs,pr,opr")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--theta", default="1")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--solver", default="auto",
                   choices=("auto", "sort", "bruteforce", "localsearch"))
    p.add_argument("--relaxed-mode", action="store_true",
                   help="static substitution for fcfs/pr (analysis mode)")
    p.add_argument("--trace", action="store_true",
                   help="write a decision trace of replication 0 per policy")
    p.add_argument("--dump-grids", action="store_true",
                   help="write the value surfaces as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spike", help="demand-spike stress sweep")
    p.add_argument("--sharpness", default="1,4,16,64")
    p.add_argument("--reps", type=int, default=3000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="optional output directory")
    p.set_defaults(func=cmd_spike)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
