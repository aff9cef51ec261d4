"""Command-line front end.

Every subcommand builds a report ``{command, inputs, rows, summary, seed,
tool_version}`` and writes it to stdout as JSON (the default) or as CSV
rows.  Human-readable lines go to stderr unless ``--quiet`` is given.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad input, 3 point
outside the chart domain, 4 inconsistent homology, 5 enumeration budget
exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from . import acceptance
from . import char_invariants as ci
from . import homotopology as ho
from .charts import builtin_chart, resolve_chart, reverse_orientation
from .curvature import curvature_at, weyl_split
from .errors import (
    BudgetExceededError,
    DomainError,
    HomologyError,
    TwistorLabError,
)
from .sd_algebra import make_frame
from .twistor import integrability_report

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_DOMAIN = 3
EXIT_HOMOLOGY = 4
EXIT_BUDGET = 5

ASD_TOL = 1e-8


class Report:
    def __init__(self, command, inputs, rows, summary, seed=0):
        self.command = command
        self.inputs = inputs
        self.rows = rows
        self.summary = summary
        self.seed = seed

    @property
    def passed(self):
        return all(self.summary.get("checks", {}).values())

    def to_json(self):
        return {
            "command": self.command,
            "inputs": self.inputs,
            "rows": self.rows,
            "summary": self.summary,
            "seed": self.seed,
            "tool_version": __version__,
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def to_csv(self):
        """Rows only; nested values are flattened with ';'."""
        flat = [{k: _csv_cell(v) for k, v in row.items()} for row in self.rows]
        keys = sorted({k for row in flat for k in row})
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        writer.writerows(flat)
        return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (list, tuple)):
        return ";".join(str(_csv_cell(x)) for x in v)
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return v


def _say(args, text):
    if not args.quiet:
        print(text, file=sys.stderr)


def _parse_point(text):
    try:
        p = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad point {text!r}") from None
    if len(p) != 4:
        raise argparse.ArgumentTypeError("a point needs four comma-separated coordinates")
    return p


def _chart(args):
    if args.file:
        chart = resolve_chart(args.file)
        if args.reversed:
            chart = reverse_orientation(chart)
        return chart
    try:
        return builtin_chart(args.metric, reversed=args.reversed)
    except KeyError as err:
        raise argparse.ArgumentTypeError(err.args[0]) from None


def _points(args, chart):
    if args.point:
        pts = [np.array(p) for p in args.point]
        for p in pts:
            if not chart.domain.contains(p):
                raise DomainError(f"point {p.tolist()} is outside {chart.domain.describe()}")
        return pts
    return list(chart.domain.sample(np.random.default_rng(args.seed), args.samples))


def _chart_inputs(args):
    return {
        "metric": args.metric,
        "file": args.file,
        "reversed": args.reversed,
        "point": args.point,
        "samples": None if args.point else args.samples,
    }


# -- subcommands ---------------------------------------------------------------

def cmd_curvature(args):
    chart = _chart(args)
    rows = []
    worst_cross = 0.0
    finite = True
    for p in _points(args, chart):
        curv = curvature_at(chart, p)
        split = weyl_split(curv, make_frame(curv.g))
        wp, wm = split.norms()
        worst_cross = max(worst_cross, float(np.max(np.abs(split.cross))))
        row = {
            "point": [float(v) for v in p],
            "scalar": float(curv.scalar),
            "einstein_residual": curv.einstein_residual(),
            "w_plus_norm": wp,
            "w_minus_norm": wm,
        }
        finite &= all(np.isfinite(v) for v in (row["scalar"], row["einstein_residual"], wp, wm))
        rows.append(row)
        _say(args, f"x={_fmt(p)}  scalar={row['scalar']:.6g}  "
                   f"einstein={row['einstein_residual']:.3g}  |W+|={wp:.3g}  |W-|={wm:.3g}")
    summary = {
        "chart": chart.name,
        "max_w_plus_norm": max(r["w_plus_norm"] for r in rows),
        "max_w_minus_norm": max(r["w_minus_norm"] for r in rows),
        "checks": {"finite": bool(finite), "weyl_blocks_decouple": worst_cross <= ASD_TOL},
    }
    return Report("curvature", _chart_inputs(args), rows, summary, args.seed)


def cmd_twistor_check(args):
    chart = _chart(args)
    if args.point:
        raise argparse.ArgumentTypeError("twistor-check samples its own points")
    report = integrability_report(chart, args.samples, args.seed, step=args.fd_step)
    rows = []
    matches = 0
    for r in report:
        row = r.as_dict()
        row["integrable"] = r.max_nijenhuis <= args.tol
        row["anti_self_dual"] = r.w_plus_norm <= ASD_TOL
        matches += row["integrable"] == row["anti_self_dual"]
        rows.append(row)
    integrable = all(r["integrable"] for r in rows)
    verdict = "yes" if integrable else "no"
    summary = {
        "chart": chart.name,
        "max_nijenhuis": max(r["max_nijenhuis"] for r in rows),
        "max_w_plus_norm": max(r["w_plus_norm"] for r in rows),
        "integrable_consistent": verdict,
        "weyl_agreement": f"{matches}/{len(rows)}",
        "checks": {"nijenhuis_matches_weyl": matches == len(rows)},
    }
    inputs = _chart_inputs(args) | {"fd_step": args.fd_step, "tol": args.tol}
    _say(args, f"max|N| = {summary['max_nijenhuis']:.3g}, max|W+| = "
               f"{summary['max_w_plus_norm']:.3g} over {len(rows)} twistor points")
    _say(args, f"integrable-consistent: {verdict}")
    return Report("twistor-check", inputs, rows, summary, args.seed)


def _gysin_row(M):
    M.validate()
    Zb = ho.gysin_sequence(M)
    prop = ho.prop1_evaluate(M, Zb)
    return {
        "name": M.name,
        "H_M": [str(g) for g in M.H],
        "H_Z": [str(g) for g in Zb.HZ],
        "euler_class_zero": M.euler_class_zero,
        "torsion_order_H2_M": M.h2.torsion_order,
        "torsion_order_H2_Z": Zb.h2.torsion_order,
        "torsion_order_T3_M": M.H[3].torsion_order,
        "torsion_order_T3_Z": Zb.HZ[3].torsion_order,
        "conditions": prop.to_json(),
        "equivalent": prop.all_equal(),
    }


def _load_homology(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise argparse.ArgumentTypeError(f"{path}: {err}") from None
    try:
        return ho.ManifoldHomology.from_json(data)
    except HomologyError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def cmd_gysin(args):
    if args.random is not None:
        rng = np.random.default_rng(args.seed)
        manifolds = [ho.random_manifold_homology(rng) for _ in range(args.random)]
    elif args.input:
        manifolds = [_load_homology(args.input)]
    else:
        manifolds = [ho.PRESETS[args.preset or "s4"]]
    rows = [_gysin_row(M) for M in manifolds]
    held = sum(r["equivalent"] for r in rows)
    summary = {
        "equivalence": f"equivalence held on {held}/{len(rows)}",
        "checks": {"conditions_equivalent": held == len(rows)},
    }
    if len(rows) == 1:
        r = rows[0]
        _say(args, "H*(M): " + ", ".join(r["H_M"]))
        _say(args, "H*(Z): " + ", ".join(r["H_Z"]))
        for k, v in r["conditions"].items():
            _say(args, f"  {k}: {v}")
        _say(args, f"torsion orders H_2(M)={r['torsion_order_H2_M']} "
                   f"H_2(Z)={r['torsion_order_H2_Z']}")
    _say(args, summary["equivalence"])
    inputs = {"input": args.input, "preset": args.preset, "random": args.random}
    return Report("gysin", inputs, rows, summary, args.seed)


def _almost_complex(inv, wu):
    if not inv.todd_integral:
        return "no"
    if wu.found:
        return "yes"
    return "no" if wu.conclusive else "undetermined"


def cmd_lattice(args):
    if args.input:
        try:
            lat = ci.resolve_lattice(args.input)
        except OSError as err:
            raise argparse.ArgumentTypeError(str(err)) from None
    else:
        lat = ci.PRESETS[args.preset or "s4"]
    inv = ci.invariants(lat)
    wu = ci.wu_search(lat, args.bound, budget=args.budget, max_solutions=args.max_solutions)
    rows = [
        {"c": list(c), "c_squared": lat.pair(c, c), "index_c2": ci.index_c2(c, lat, inv)}
        for c in wu.solutions
    ]
    spin = ci.is_spin(lat)
    wu_json = wu.to_json()
    wu_json.pop("solutions")
    summary = inv.to_json() | {
        "spin": spin,
        "spin_structures": (f"H^1(M,Z2) of order {2 ** lat.b1} acts freely and transitively"
                            if spin else "none"),
        "wu": wu_json,
        "almost_complex": _almost_complex(inv, wu),
        "checks": {
            "signature_exact": ci.signature_exact(lat.gram) == inv.tau,
            "solutions_hit_target": all(r["c_squared"] == wu.target for r in rows),
            "van_der_blij": all((r["c_squared"] - inv.tau) % 8 == 0 for r in rows),
        },
    }
    _say(args, f"chi={inv.chi} tau={inv.tau} todd={inv.todd}"
               f"{'' if inv.todd_integral else ' (non-integral)'} spin={str(spin).lower()}")
    _say(args, f"Wu solutions with |c_i| <= {args.bound}: {wu.count} ({wu_json['status']})"
               + (f", listing {len(rows)}" if wu.truncated else ""))
    for r in rows[:10]:
        _say(args, f"  c={r['c']}  index_c2={r['index_c2']}")
    _say(args, f"almost-complex: {summary['almost_complex']}")
    inputs = {"input": args.input, "preset": args.preset, "bound": args.bound,
              "budget": args.budget, "max_solutions": args.max_solutions}
    return Report("lattice", inputs, rows, summary, 0)


def selftest_report():
    checks = acceptance.run_all()
    return checks, Report(
        "selftest",
        {},
        [c.to_json() for c in checks],
        {"checks": {str(c.id): bool(c.passed) for c in checks}},
        0,
    )


def cmd_selftest(args):
    checks, report = selftest_report()
    det = acceptance.check_determinism(
        iter([report.dumps(), selftest_report()[1].dumps()]).__next__
    )
    checks = list(checks) + [det]
    report = Report(
        "selftest",
        {},
        [c.to_json() for c in checks],
        {"checks": {str(c.id): bool(c.passed) for c in checks}},
        0,
    )
    for c in checks:
        timing = ""
        if c.time_limit is not None:
            timing = f"  ({c.elapsed:.3g}s, limit {c.time_limit:g}s)"
        _say(args, c.line() + timing)
    return report


# -- entry point ---------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--quiet", action="store_true", help="no human-readable lines on stderr")
    return p


def _chart_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--metric", default="flat", help="builtin chart name")
    src.add_argument("--file", help="metric file")
    p.add_argument("--reversed", action="store_true", help="reverse the orientation")
    p.add_argument("--point", action="append", type=_parse_point,
                   help="x1,x2,x3,x4 (repeatable)")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="twistorlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", parents=[common], help="curvature and Weyl split")
    _chart_args(p)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("twistor-check", parents=[common], help="Nijenhuis tensor of twistor J")
    _chart_args(p)
    p.add_argument("--fd-step", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_twistor_check)

    p = sub.add_parser("gysin", parents=[common], help="cohomology of the twistor space")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="homology JSON file")
    src.add_argument("--preset", choices=sorted(ho.PRESETS))
    src.add_argument("--random", type=int, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gysin)

    p = sub.add_parser("lattice", parents=[common], help="characteristic numbers and Wu search")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(ci.PRESETS))
    src.add_argument("--input", help="lattice JSON file")
    p.add_argument("--bound", type=int, default=ci.DEFAULT_BOUND)
    p.add_argument("--budget", type=float, default=ci.DEFAULT_BUDGET)
    p.add_argument("--max-solutions", type=int, default=ci.DEFAULT_MAX_SOLUTIONS)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def _fmt(p):
    return "(" + ", ".join(f"{v:.4f}" for v in p) + ")"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples", 1) < 1:
        parser.error("--samples must be positive")
    try:
        report = args.func(args)
    except argparse.ArgumentTypeError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except DomainError as err:
        print(f"domain error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    except HomologyError as err:
        print(f"inconsistent homology: {err}", file=sys.stderr)
        return EXIT_HOMOLOGY
    except BudgetExceededError as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except (TwistorLabError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT
    sys.stdout.write(report.dumps() if args.output == "json" else report.to_csv())
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
