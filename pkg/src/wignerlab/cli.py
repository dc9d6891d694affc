"""
Command-line front end.

Exit status: 0 success, 1 usage error, 2 scenario error (including a missing
or unparsable file), 3 numerical or internal invariant violation.

Structured output (``--out structured``) is a JSON document whose
``schema_version`` is :data:`SCHEMA_VERSION`; probabilities are numbers
rounded to 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from .errors import InvariantViolation, ScenarioError, WignerLabError
from .measure import OutcomeDistribution
from .scenario import (
    Policy,
    audit,
    evaluate,
    interference_table,
    load_scenario,
    parse_scenario,
    sample,
)

SCHEMA_VERSION = 1
BUILTINS = ("fr", "footnote", "doubleslit")

EXIT_OK, EXIT_USAGE, EXIT_SCENARIO, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(p: float) -> str:
    return f"{p:.12g}"


def _num(p: float) -> float:
    return float(fmt(p))


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render_distribution(d: OutcomeDistribution, mode: str = "table") -> str:
    """Rows in the distribution's order, which the engine keeps as record
    order then label order."""
    names = tuple(d.names or ())
    if mode == "structured":
        rows = [{"outcome": _outcome_map(names, label), "probability": _num(p)} for label, p in d]
        return json.dumps({"schema_version": SCHEMA_VERSION, "records": list(names), "rows": rows}, indent=2)
    lines = ["records: " + (", ".join(names) if names else "(none)")]
    if names:
        for label, p in d:
            lines.append(f"P({','.join(label)}) = {fmt(p)}")
    return "\n".join(lines)


def _outcome_map(names, label) -> dict:
    if isinstance(label, tuple):
        return dict(zip(names, label))
    return {"outcome": label}


def _policy_line(policy: Policy) -> str:
    return f"policy: {policy.value}" + (" (naive)" if policy is Policy.COLLAPSE_ON_RECORD else "")


def _run_doc(name, r) -> dict:
    ext = r.external_distribution()
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "run",
        "scenario": name,
        "policy": r.policy.value,
        "naive": r.policy is Policy.COLLAPSE_ON_RECORD,
        "viewpoint": sorted(r.viewpoint) if r.viewpoint is not None else None,
        "records": list(r.records),
        "external_records": list(ext.names),
        "external_distribution": [
            {"outcome": dict(zip(ext.names, l)), "probability": _num(p)} for l, p in ext
        ],
        "distribution": [{"outcome": dict(zip(r.records, l)), "probability": _num(p)} for l, p in r.distribution],
        "branches": [{"records": dict(b.records), "weight": _num(b.weight)} for b in r.branches],
        "annotations": list(r.annotations),
    }


def _run_text(name, r) -> str:
    out = [f"scenario: {name}", _policy_line(r.policy)]
    if r.viewpoint is not None:
        out.append("viewpoint: " + ", ".join(sorted(r.viewpoint)))
    out.append("")
    out.append("external records")
    out.append(render_distribution(r.external_distribution()))
    if r.scenario.agent_records:
        out += ["", "all records (? = unresolved agent record)", render_distribution(r.distribution)]
    return "\n".join(out)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _load(args):
    path = args.path or args.scenario
    if args.path and args.scenario and args.path != args.scenario:
        raise UsageError("give the scenario either as an argument or with --scenario, not both")
    if not path:
        raise UsageError("a scenario file is required")
    try:
        return path, load_scenario(path)
    except FileNotFoundError:
        raise ScenarioError(f"{path}: file not found") from None
    except IsADirectoryError:
        raise ScenarioError(f"{path}: is a directory") from None
    except UnicodeDecodeError:
        raise ScenarioError(f"{path}: not UTF-8 text") from None


def builtin_scenario(name: str):
    text = resources.files("wignerlab").joinpath("data", f"{name}.scn").read_text(encoding="utf-8")
    return parse_scenario(text)


def _viewpoint(args):
    if not args.viewpoint:
        return None
    return [v for v in args.viewpoint.split(",") if v]


def _cmd_run(name, s, args, out):
    r = evaluate(s, args.policy, _viewpoint(args))
    out.append(json.dumps(_run_doc(name, r), indent=2) if args.out == "structured" else _run_text(name, r))
    return r


def cmd_run(args, out):
    name, s = _load(args)
    _cmd_run(name, s, args, out)


def cmd_sample(args, out):
    name, s = _load(args)
    counts = sample(s, args.policy, args.n, args.seed, _viewpoint(args))
    r = evaluate(s, args.policy, _viewpoint(args))
    order = [label for label, _ in r.distribution]
    rows = sorted(counts.items(), key=lambda kv: order.index(kv[0]) if kv[0] in order else len(order))
    if args.out == "structured":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": "sample",
            "scenario": name,
            "policy": args.policy.value,
            "naive": args.policy is Policy.COLLAPSE_ON_RECORD,
            "n": args.n,
            "seed": args.seed,
            "records": list(s.records),
            "counts": [{"outcome": dict(zip(s.records, l)), "count": c} for l, c in rows],
        }
        out.append(json.dumps(doc, indent=2))
        return
    out += [f"scenario: {name}", _policy_line(args.policy), f"n: {args.n}", f"seed: {args.seed}", ""]
    out.append("records: " + (", ".join(s.records) if s.records else "(none)"))
    for label, c in rows:
        out.append(f"N({','.join(label)}) = {c}  freq {fmt(c / args.n)}")


def cmd_audit(args, out):
    name, s = _load(args)
    rep = audit(s, args.tol)
    if args.out == "structured":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": "audit",
            "scenario": name,
            "tol": args.tol,
            "all_safe": rep.all_safe,
            "agents": [
                {
                    "record": a.record,
                    "agent": a.agent,
                    "step": a.step + 1,
                    "safe": a.safe,
                    "joint_gap": _num(a.joint_gap),
                    "later": [
                        {"record": p.record, "step": p.step + 1, "gap": _num(p.gap), "safe": p.safe} for p in a.pairs
                    ],
                }
                for a in rep.agents
            ],
            "unsafe_pairs": [{"agent_record": a, "later_record": b, "gap": _num(g)} for a, b, g in rep.unsafe_pairs],
        }
        out.append(json.dumps(doc, indent=2))
        return
    out += [f"scenario: {name}", f"tolerance: {fmt(args.tol)}", ""]
    for a in rep.agents:
        out.append(f"record {a.record} (step {a.step + 1}, agent {a.agent}): {'safe' if a.safe else 'UNSAFE'}")
        for p in a.pairs:
            out.append(f"  vs {p.record} (step {p.step + 1}): gap {fmt(p.gap)} {'safe' if p.safe else 'UNSAFE'}")
        out.append(f"  joint gap over external records: {fmt(a.joint_gap)}")
    out.append("")
    out.append(f"unsafe pairs: {len(rep.unsafe_pairs)}")
    for a, b, g in rep.unsafe_pairs:
        out.append(f"  {a} -> {b}  gap {fmt(g)}")


def cmd_interference(args, out):
    name, s = _load(args)
    rows = interference_table(s, args.tol)
    if args.out == "structured":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": "interference",
            "scenario": name,
            "rows": [
                {
                    "agent_record": r.agent_record,
                    "external_record": r.external_record,
                    "outcome": r.outcome,
                    "superposition": _num(r.superposition),
                    "mixture": _num(r.mixture),
                    "interference": _num(r.interference),
                    "max_abs_term": _num(r.max_abs_term),
                }
                for r in rows
            ],
        }
        out.append(json.dumps(doc, indent=2))
        return
    out += [f"scenario: {name}", ""]
    if not rows:
        out.append("no external measurement follows an agent measurement")
    for r in rows:
        out.append(
            f"P({r.external_record}={r.outcome}) vs record {r.agent_record}: superposition {fmt(r.superposition)}"
            f"  mixture {fmt(r.mixture)}  interference {fmt(r.interference)}"
        )


def cmd_builtin(args, out):
    from .frlab import build_double_slit

    name = args.name
    s = builtin_scenario(name)
    r = _cmd_run(f"{name} (built-in)", s, args, out)
    if args.out == "structured":
        return
    if name == "footnote":
        w = r.marginal(["W"])
        out.append("")
        out.append(f"W plus / minus: {fmt(w.get(('plus',)))} / {fmt(w.get(('minus',)))}")
    elif name == "doubleslit":
        out.append("")
        for detector in (False, True):
            _, rep = build_double_slit(detector=detector)
            out.append(
                f"screen observable, {'with' if detector else 'without'} slit detector: "
                f"superposition {fmt(rep.superposition_expectation)}  mixture {fmt(rep.mixture_expectation)}  "
                f"interference {fmt(rep.interference_total)}"
            )


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--policy", type=Policy, default=Policy.UNITARY_AGENTS,
                        choices=list(Policy), metavar="{unitary-agents,collapse-on-record}")
    common.add_argument("--viewpoint", help="comma-separated agents that collapse (collapse-on-record only)")
    common.add_argument("--out", choices=("table", "structured"), default="table")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--n", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--scenario", metavar="PATH")

    p = _Parser(prog="wignerlab", description="Nested-observer measurement scenarios.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, fn, helptext in (
        ("run", cmd_run, "exact joint distribution of the records"),
        ("sample", cmd_sample, "seeded sample of record tuples"),
        ("audit", cmd_audit, "collapse-safety audit of agent measurements"),
        ("interference", cmd_interference, "interference of external outcomes with agent records"),
    ):
        sp = sub.add_parser(cmd, parents=[common], help=helptext)
        sp.add_argument("path", nargs="?", metavar="SCENARIO")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("builtin", parents=[common], help="run a shipped scenario")
    sp.add_argument("name", choices=BUILTINS)
    sp.set_defaults(func=cmd_builtin)
    return p


def main(argv=None) -> int:
    out: list[str] = []
    try:
        args = build_parser().parse_args(argv)
        if args.tol <= 0:
            raise UsageError("--tol must be positive")
        if args.n < 1:
            raise UsageError("--n must be at least 1")
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if args.viewpoint and args.policy is not Policy.COLLAPSE_ON_RECORD:
            raise UsageError("--viewpoint only applies to --policy collapse-on-record")
        args.func(args, out)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    except (InvariantViolation, WignerLabError, ArithmeticError) as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except SystemExit as e:  # --help
        return int(e.code or 0)
    print("\n".join(out))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
