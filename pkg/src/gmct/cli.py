"""``gmct`` command line: read a CSV, run one analysis, write JSON/TSV/SVG.

Exit status is 0 on success, 2 for invalid input or arguments and 3 when
the data are degenerate or a numerical step fails. Output files are written
only after the whole analysis succeeded, each through a temporary file and
a rename.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .categorical import ADJUSTMENTS, PROPORTION_SCALES, mct_proportions
from .core import ALTERNATIVES
from .errors import DegenerateError, NumericError, ValidationError
from .ingest import read_counts, read_grouped, read_survival
from .npar import mct_relative
from .param import VARIANCE_MODES, mct_difference
from .quantile import DEFAULT_B, QuantileSpec, mct_quantile
from .ratio import mct_ratio
from .report import clean, dump_json, forest_svg, input_hash, km_svg, result_document, result_tsv, write_atomic
from .simulate import ERRORS, SimDesign, simulate_coverage
from .survival import kaplan_meier, mct_hazard

DEFAULT_SEED = 42
SEED_ENV = "GMCT_SEED"

log = logging.getLogger("gmct")


def _add_common(p, columns):
    p.add_argument("input", help="CSV file with a header row")
    for name, default in columns:
        p.add_argument(f"--col-{name}", default=default, metavar="NAME", help=f"column holding the {name} (default {default})")
    p.add_argument("--conf", type=float, default=0.95, help="simultaneous confidence level (default 0.95)")
    _add_outputs(p)


def _add_outputs(p):
    p.add_argument("--seed", type=int, default=None, help=f"integration/bootstrap seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--json", metavar="PATH", help="write the JSON result here (default: standard output)")
    p.add_argument("--tsv", metavar="PATH", help="also write the rows as TSV")
    p.add_argument("--svg", metavar="PATH", help="also write a forest plot")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmct", description="Multiple comparisons of each group against the overall mean.")
    parser.add_argument("--version", action="version", version=f"gmct {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    grouped = [("response", "response"), ("group", "group")]

    p = sub.add_parser("mct", help="mean differences to the overall mean")
    _add_common(p, grouped)
    p.add_argument("--variance", choices=VARIANCE_MODES, default="welch")
    p.add_argument("--alternative", choices=ALTERNATIVES, default="two-sided")
    p.add_argument("--unweighted", action="store_true", help="overall mean as the plain average of group means")
    p.add_argument("--drop-singletons", action="store_true", help="drop groups with a single observation")

    p = sub.add_parser("ratio", help="Fieller intervals for mean / overall mean")
    _add_common(p, grouped)
    p.add_argument("--variance", choices=("pooled", "welch"), default="welch")
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--drop-singletons", action="store_true")

    p = sub.add_parser("npar", help="nonparametric relative effects against the mixture")
    _add_common(p, grouped)
    p.add_argument("--approx", choices=("mult-t", "mult-normal"), default="mult-t")
    p.add_argument("--transform", choices=("logit", "identity"), default="logit")
    p.add_argument("--drop-singletons", action="store_true")

    p = sub.add_parser("quantile", help="group quantiles against the average quantile")
    _add_common(p, grouped)
    p.add_argument("--p", type=float, default=0.5, help="quantile level (default 0.5)")
    p.add_argument("--effect", choices=("difference", "ratio"), default="difference")
    p.add_argument("--bootstrap", type=int, default=DEFAULT_B, metavar="B", help=f"bootstrap resamples (default {DEFAULT_B})")
    p.add_argument("--dist", choices=("mvt", "mvn"), default="mvt")
    p.add_argument("--drop-singletons", action="store_true")

    p = sub.add_parser("prop", help="proportions against the overall level")
    _add_common(p, [("label", "label"), ("events", "events"), ("trials", "trials")])
    p.add_argument("--scale", choices=PROPORTION_SCALES, default="log-odds")
    p.add_argument("--adjustment", choices=ADJUSTMENTS, default="auto")
    p.add_argument("--weighted", action="store_true", help="weight the overall level by trials")

    p = sub.add_parser("surv", help="Cox log hazards against their average")
    _add_common(p, [("time", "time"), ("status", "status"), ("group", "group")])
    p.add_argument("--km-svg", metavar="PATH", help="also write Kaplan-Meier curves")

    p = sub.add_parser("simulate", help="coverage and size of the difference MCT by simulation")
    p.add_argument("--design", required=True,
                   help="comma-separated key=value list: k, n, sd, mean; n/sd/mean take one value "
                        "or a colon-separated list, e.g. k=4,n=10,sd=1 or n=5:10:20,sd=3:1:1")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--method", choices=VARIANCE_MODES, default="pooled")
    p.add_argument("--error", choices=ERRORS, default="normal")
    p.add_argument("--conf", type=float, default=0.95)
    p.add_argument("--unweighted", action="store_true")
    _add_outputs(p)
    return parser


def resolve_seed(arg_seed, environ=os.environ) -> int:
    if arg_seed is not None:
        return arg_seed
    raw = environ.get(SEED_ENV)
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def parse_design(text: str) -> dict:
    """``k=4,n=10,sd=1`` -> keyword arguments of SimDesign."""
    fields = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = part.partition("=")
        if not sep or key not in ("k", "n", "sd", "mean"):
            raise ValidationError(f"bad design entry {part!r}; expected k=, n=, sd= or mean=")
        try:
            fields[key] = [float(v) for v in value.split(":")]
        except ValueError:
            raise ValidationError(f"bad number in design entry {part!r}") from None
    lengths = {len(v) for key, v in fields.items() if key != "k" and len(v) > 1}
    if "k" in fields:
        k = fields["k"][0]
        if len(fields["k"]) != 1 or not k.is_integer():
            raise ValidationError("k must be a single integer")
        lengths.add(int(k))
    if len(lengths) != 1:
        raise ValidationError("design needs k or per-group lists of one common length")
    k = lengths.pop()
    if "n" not in fields:
        raise ValidationError("design needs n")

    def expand(key, default):
        v = fields.get(key, [default])
        return tuple(v * k if len(v) == 1 else v)

    n = expand("n", None)
    if any(not float(v).is_integer() for v in n):
        raise ValidationError("group sizes must be integers")
    return {"n": tuple(int(v) for v in n), "sds": expand("sd", 1.0), "means": expand("mean", 0.0)}


def _analyse(args, seed):
    """Run the selected analysis; returns (document, warnings)."""
    if args.command == "simulate":
        design = SimDesign(reps=args.reps, conf=args.conf, method=args.method, error=args.error,
                           weighted=not args.unweighted, seed=seed, **parse_design(args.design))
        res = simulate_coverage(design)
        warnings = []
        if res.failures:
            warnings.append(f"{res.failures} of {res.reps} replicates failed and were excluded")
        doc = clean({
            "method": f"simulate-mct-difference-{design.method}",
            "scale": "difference",
            "conf": design.conf,
            "alternative": "two-sided",
            "seed": seed,
            "critical_value": None,
            "global_p": None,
            "null_value": 0.0,
            "rows": [],
            "warnings": warnings,
            "simulation": {
                "coverage": res.coverage,
                "rejection_rate": res.rejection_rate,
                "mc_se": res.mc_se,
                "rejection_mc_se": res.rejection_mc_se,
                "f_rejection_rate": res.f_rejection_rate,
                "reps": res.reps,
                "failures": res.failures,
                "design": res.design,
            },
            "provenance": {"version": __version__, "input-hash": input_hash(args.design.encode())},
        })
        return doc, warnings

    with open(args.input, "rb") as fh:
        source = input_hash(fh.read())
    extra_warnings = []
    curves = None
    if args.command in ("mct", "ratio", "npar", "quantile"):
        sample, extra_warnings = read_grouped(args.input, args.col_response, args.col_group, args.drop_singletons)
        if args.command == "mct":
            result = mct_difference(sample, args.variance, args.conf, args.alternative, not args.unweighted, seed)
        elif args.command == "ratio":
            result = mct_ratio(sample, args.variance, args.conf, not args.unweighted, seed)
        elif args.command == "npar":
            result = mct_relative(sample, args.conf, args.approx, args.transform, seed)
        else:
            result = mct_quantile(sample, QuantileSpec(args.p), args.effect, args.conf, args.bootstrap, seed, args.dist)
    elif args.command == "prop":
        table = read_counts(args.input, args.col_label, args.col_events, args.col_trials)
        result = mct_proportions(table, args.scale, args.conf, args.adjustment, args.weighted, seed)
    else:
        surv = read_survival(args.input, args.col_time, args.col_status, args.col_group)
        result = mct_hazard(surv, args.conf, seed)
        curves = {lab: {"time": t, "survival": s} for lab, (t, s) in kaplan_meier(surv).items()}
    doc = result_document(result, seed, source)
    if curves is not None:
        doc["metadata"]["kaplan_meier"] = clean(curves)
    doc["warnings"] = extra_warnings + doc["warnings"]
    return doc, doc["warnings"]


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="gmct: %(message)s", stream=sys.stderr)
    try:
        seed = resolve_seed(args.seed)
        doc, warnings = _analyse(args, seed)
        outputs = {}
        text = dump_json(doc)
        if args.tsv:
            outputs[args.tsv] = result_tsv(doc)
        if args.svg:
            if not doc["rows"]:
                raise ValidationError("there is nothing to plot for this subcommand")
            outputs[args.svg] = forest_svg(doc)
        if getattr(args, "km_svg", None):
            outputs[args.km_svg] = km_svg(doc["metadata"]["kaplan_meier"])
    except ValidationError as exc:
        print(f"gmct: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"gmct: error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateError, NumericError) as exc:
        print(f"gmct: numeric error: {exc}", file=sys.stderr)
        return 3
    for msg in warnings:
        print(f"gmct: warning: {msg}", file=sys.stderr)
    if args.json:
        write_atomic(args.json, text)
    else:
        sys.stdout.write(text)
    for path, body in outputs.items():
        write_atomic(path, body)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
