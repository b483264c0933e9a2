"""Command-line front end.

Every command validates its parameters before doing any work, writes its output
to a temporary file that is renamed into place, and stamps CSV output with the
tool version and the serialized configuration.  Exit codes: 0 ok, 1 failed
verification, 2 usage or precondition error.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict

import numpy as np

from . import __version__, bounds, simlab, tempering, verify

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2

# options that change neither the numbers nor their order
NON_SEMANTIC = {"out", "format", "config", "jobs", "command", "handler", "dump_trials"}


class UsageError(Exception):
    pass


def fmt(x):
    """Shortest round-trip text for a number; empty for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def float_list(text):
    try:
        vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc
    if any(math.isnan(v) for v in vals):
        raise argparse.ArgumentTypeError("NaN is not allowed")
    return vals


def int_list(text):
    vals = float_list(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers: {text!r}")
    return [int(v) for v in vals]


def u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def half_grid(step, include_end=True):
    if not 0.0 < step <= 0.5:
        raise UsageError(f"grid step must lie in (0, 1/2], got {step}")
    n = int(round(0.5 / step))
    if abs(n * step - 0.5) > 1e-9:
        raise UsageError(f"grid step {step} does not divide 1/2")
    return np.arange(n + 1 if include_end else n) / (2 * n)


def config_header(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in NON_SEMANTIC}
    return f"# mdltemper {__version__} {args.command} " + json.dumps(cfg, sort_keys=True, default=str)


def render_csv(args, header, rows):
    buf = io.StringIO()
    buf.write(config_header(args) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def render_json(args, payload):
    doc = {"tool": "mdltemper", "version": __version__, "command": args.command,
           "config": {k: v for k, v in sorted(vars(args).items()) if k not in NON_SEMANTIC}}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=False, default=_json_default, allow_nan=True) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def render_svg(title, xlabel, ylabel, series, annotate=None):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise UsageError("SVG output needs matplotlib (pip install mdltemper[plot])") from exc
    matplotlib.rcParams["svg.hashsalt"] = "mdltemper"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, x, y, style in series:
        ax.plot(x, y, style, label=label)
    if annotate:
        annotate(ax)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def emit(args, text):
    """Write to --out atomically, or to stdout."""
    if not args.out or args.out == "-":
        sys.stdout.write(text)
        return
    target = os.path.abspath(args.out)
    fd, tmp = tempfile.mkstemp(prefix=".mdltemper-", dir=os.path.dirname(target))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require_format(args, allowed):
    if args.format not in allowed:
        raise UsageError(f"{args.command} does not support --format {args.format}; use one of {allowed}")


# -- commands ---------------------------------------------------------------

def _lambdas(args, positive=True):
    lams = args.lambdas
    if not lams:
        raise UsageError("the lambda list is empty")
    for lam in lams:
        if math.isinf(lam) or (lam <= 0.0 if positive else lam < 0.0):
            raise UsageError(f"lambda values must be finite and > 0, got {lam}")
    return lams


def cmd_curve(args):
    _require_format(args, ("csv", "json", "svg"))
    lams = _lambdas(args)
    grid = half_grid(args.grid_step)
    curves = [tempering.sweep_curve(lam, grid) for lam in lams]
    header = ["lambda", "L_star", "ell", "gl_lower", "gl_bayes_upper", "well_specified", "critical_noise"]
    rows = []
    for c in curves:
        crit = tempering.critical_noise(c.lam) if c.lam < 1.0 else None
        rows.extend([c.lam, *r, crit] for r in c.rows())
    if args.format == "csv":
        return render_csv(args, header, rows)
    if args.format == "json":
        return render_json(args, {"columns": header, "rows": rows})
    first = curves[0]
    series = [(f"lambda={fmt(c.lam)}", c.L_star, c.ell, "-") for c in curves]
    series += [("H/2", first.L_star, first.gl_lower, "k:"), ("H", first.L_star, first.gl_bayes_upper, "k--"),
               ("2L(1-L)", first.L_star, first.well_specified, "k-.")]
    return render_svg("Limiting error of MDL_lambda", "L*", "limiting error", series)


def cmd_lambda_sweep(args):
    _require_format(args, ("csv", "json", "svg"))
    lams = sorted(_lambdas(args))
    L = tempering._check_half(args.L_star, "L_star")
    if not 0.0 < L < 0.5:
        raise UsageError("L_star must lie in (0, 1/2)")
    ells = tempering.sweep_lambda(L, lams)
    h = tempering.entropy(L)
    header = ["lambda", "ell", "note"]
    rows = [[lam, e, ""] for lam, e in zip(lams, ells)]
    rows.append([math.inf, L, "asymptote L_star"])
    rows.append([h, tempering.ell(h, L), "critical lambda H(L_star)"])
    if args.format == "csv":
        return render_csv(args, header, rows)
    if args.format == "json":
        return render_json(args, {"columns": header, "rows": rows})

    def annotate(ax):
        ax.axhline(L, color="k", ls=":", label="L*")
        ax.axvline(h, color="r", ls="--", label="lambda = H(L*)")
        ax.set_xscale("log")
    return render_svg(f"Limiting error at L* = {fmt(L)}", "lambda", "limiting error",
                      [("ell", lams, ells, "o-")], annotate)


def cmd_compare_gl(args):
    _require_format(args, ("csv", "json", "svg"))
    grid = half_grid(args.grid_step)
    ours = np.array([tempering.ell(1.0, x) for x in grid])
    refs = np.array([tempering.reference_curves(x) for x in grid])
    inner = (grid > 0.0) & (grid < 0.5)
    if not np.all(ours[inner] > refs[inner, 0]):
        raise AssertionError("ell_1 failed to exceed H/2 on the open grid")
    header = ["L_star", "gl_lower", "ours", "gl_bayes_upper"]
    rows = [[x, g, o, b] for x, g, o, b in zip(grid, refs[:, 0], ours, refs[:, 1])]
    if args.format == "csv":
        return render_csv(args, header, rows)
    if args.format == "json":
        return render_json(args, {"columns": header, "rows": rows})
    return render_svg("MDL_1 limiting error against earlier bounds", "L*", "error",
                      [("H/2 (lower)", grid, refs[:, 0], "g-"), ("ell_1", grid, ours, "b-"),
                       ("H (upper)", grid, refs[:, 1], "k--")])


SCHEDULES = {
    "constant": lambda a: simlab.LambdaSchedule.constant(a.lam),
    "power": lambda a: simlab.LambdaSchedule.power(a.coef, a.alpha),
    "inverse_log": lambda a: simlab.LambdaSchedule.inverse_log(),
    "linear": lambda a: simlab.LambdaSchedule.linear(a.coef),
}

REGIMES = {  # preset: (schedule, variant)
    "fixed": ("constant", "infinite_stream"),
    "catastrophic": ("inverse_log", "infinite_stream"),
    "consistent": ("power", "infinite_stream"),
    "over-reg": ("linear", "two_hypothesis"),
}


def build_instance(args):
    schedule_kind, variant = args.schedule, args.variant
    if args.regime:
        schedule_kind, variant = REGIMES[args.regime]
    if args.coef is None:
        args.coef = 11.0 if schedule_kind == "linear" else 1.0
    try:
        return simlab.HardInstance(args.L_star, args.L_prime, SCHEDULES[schedule_kind](args), variant)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_simulate(args):
    _require_format(args, ("csv", "json"))
    inst = build_instance(args)
    if not args.m_grid or any(m < 2 for m in args.m_grid):
        raise UsageError("m_grid must be a nonempty list of integers >= 2")
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    if args.jobs < 1:
        raise UsageError("jobs must be >= 1")
    rows, detail = simlab.estimate_limit(inst, args.m_grid, args.trials, args.seed, args.jobs,
                                         keep_trials=True)
    header = ["m", "lambda_m", "trials", "frac_bad", "ci_low", "ci_high", "mean_error",
              "infeasible_count", "master_seed"]
    table = [[getattr(r, k) for k in header] for r in rows]
    if args.format == "csv":
        return render_csv(args, header, table)
    payload = {"instance": {"L_star": inst.L_star, "L_prime": inst.L_prime, "variant": inst.variant,
                            "schedule": asdict(inst.schedule)},
               "rows": [asdict(r) for r in rows]}
    if args.dump_trials:
        payload["trials"] = [asdict(o) for o in detail]
    return render_json(args, payload)


def _bound_config(args):
    try:
        return bounds.BoundConfig(delta=args.delta, mcdiarmid_constant=args.C,
                                  lemmaA1_constant=args.c, srm_constant=args.srm_constant)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.op} needs --{', --'.join(n.replace('_', '-') for n in missing)}")
    return [getattr(args, n) for n in names]


def _bound_payload(result):
    if isinstance(result, bounds.BoundResult):
        d = result.as_dict()
        d["up_to_constants"] = result.config.up_to_constants
        return d
    if isinstance(result, bounds.KLInterval):
        return {"status": "interval", "lower": result.lower, "upper": result.upper}
    if isinstance(result, bounds.ZeroCertificate):
        return {"status": "zero", **asdict(result)}
    if isinstance(result, bounds.ConditionUnmet):
        return asdict(result)
    return {"value": result}


def cmd_bounds(args):
    _require_format(args, ("json",))
    cfg = _bound_config(args)
    op = args.op
    try:
        if op == "mdl_upper_bound":
            lam, L, d, m = _need(args, "lam", "L_star", "desc_len", "m")
            res = bounds.mdl_upper_bound(lam, L, d, m, cfg)
        elif op == "consistency_bound":
            lam, L, d, m = _need(args, "lam", "L_star", "desc_len", "m")
            res = bounds.consistency_bound(lam, L, d, m, cfg)
        elif op == "srm_bound":
            d, m = _need(args, "desc_len", "m")
            res = bounds.srm_bound(d, m, cfg)
        elif op == "kl_concentration_epsilon":
            d, m, delta = _need(args, "desc_len", "m", "delta")
            res = bounds.kl_concentration_epsilon(d, m, delta)
        elif op == "binomial_tail_bracket":
            n, p, a = _need(args, "n", "p", "a")
            res = bounds.binomial_tail_bracket(n, p, a)
        elif op == "min_binomial_interval":
            m, p, delta = _need(args, "m", "p", "delta")
            if args.r is None and args.log2_r is None:
                raise UsageError("min_binomial_interval needs --r or --log2-r")
            res = bounds.min_binomial_interval(args.r, m, p, delta, log2_r=args.log2_r)
        else:  # pragma: no cover - argparse restricts choices
            raise UsageError(f"unknown operation {op}")
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{op}: {exc}") from exc
    return render_json(args, {"operation": op, "result": _bound_payload(res)})


def cmd_verify(args):
    results = verify.run_all(fast=args.fast, names=args.suite or None)
    if not results:
        raise UsageError(f"no suite matches {args.suite}")
    report = verify.format_report(results)
    if args.format == "json":
        text = render_json(args, {"suites": [asdict(r) for r in results]})
    else:
        text = report + "\n"
    emit(args, text)
    if args.out and args.out != "-":
        print(report)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# -- parsing ----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "svg"), default=None)
    common.add_argument("--seed", type=u64, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--config", help="key=value file; explicit flags win")

    p = argparse.ArgumentParser(prog="mdltemper", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mdltemper {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("curve", parents=[common], help="limiting-error curves over L*")
    s.add_argument("--lambdas", type=float_list, default=[0.1, 0.5, 1.0, 2.0, 5.0])
    s.add_argument("--grid-step", type=float, default=0.005)
    s.set_defaults(handler=cmd_curve, format_default="csv")

    s = sub.add_parser("lambda-sweep", parents=[common], help="limiting error as a function of lambda")
    s.add_argument("--L-star", dest="L_star", type=float, default=0.1)
    s.add_argument("--lambdas", type=float_list,
                   default=[0.3, 0.4, 0.469, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0])
    s.set_defaults(handler=cmd_lambda_sweep, format_default="csv")

    s = sub.add_parser("compare-gl", parents=[common], help="ell_1 against the H/2 and H references")
    s.add_argument("--grid-step", type=float, default=0.01)
    s.set_defaults(handler=cmd_compare_gl, format_default="csv")

    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo runs of the hard instance")
    s.add_argument("--regime", choices=sorted(REGIMES), help="preset schedule and variant")
    s.add_argument("--schedule", choices=sorted(SCHEDULES), default="constant")
    s.add_argument("--variant", choices=("infinite_stream", "two_hypothesis"), default="infinite_stream")
    s.add_argument("--lam", type=float, default=1.0, help="lambda of the constant schedule")
    s.add_argument("--coef", type=float, default=None, help="c of the power/linear schedules")
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--L-star", dest="L_star", type=float, default=0.1)
    s.add_argument("--L-prime", dest="L_prime", type=float, default=0.25)
    s.add_argument("--m-grid", type=int_list, default=[1000, 2000, 4000])
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--dump-trials", action="store_true", help="include every trial in JSON output")
    s.set_defaults(handler=cmd_simulate, format_default="csv")

    s = sub.add_parser("bounds", parents=[common], help="evaluate a finite-sample bound")
    s.add_argument("op", choices=("mdl_upper_bound", "consistency_bound", "srm_bound",
                                  "kl_concentration_epsilon", "binomial_tail_bracket",
                                  "min_binomial_interval"))
    s.add_argument("--lam", type=float)
    s.add_argument("--L-star", dest="L_star", type=float)
    s.add_argument("--desc-len", type=float)
    s.add_argument("--m", type=int)
    s.add_argument("--delta", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--p", type=float)
    s.add_argument("--a", type=float)
    s.add_argument("--r", type=int)
    s.add_argument("--log2-r", type=float)
    s.add_argument("--C", type=float, default=1.0, help="McDiarmid constant")
    s.add_argument("--c", type=float, default=0.09, help="derivative lower-bound constant")
    s.add_argument("--srm-constant", type=float, default=1.0)
    s.set_defaults(handler=cmd_bounds, format_default="json")

    s = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    s.add_argument("--fast", action="store_true", help="sub-minute subsets")
    s.add_argument("--suite", action="append", choices=[n for n, _ in verify.SUITES])
    s.set_defaults(handler=cmd_verify, format_default="text")
    return p


def read_config(path):
    """Plain key=value lines; '#' starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _flag_for(parser, dest):
    for action in parser._actions:
        if action.dest == dest and action.option_strings:
            return action
    return None


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        cfg = read_config(args.config)
        explicit = {a.dest for a in sub._actions
                    if any(opt in (argv or []) or any(t.startswith(opt + "=") for t in argv or [])
                           for opt in a.option_strings)}
        for k, v in cfg.items():
            action = _flag_for(sub, k)
            if action is None or k == "config":
                raise UsageError(f"unknown config key {k!r} for {args.command}")
            if k in explicit:
                continue
            if action.nargs == 0:
                value = v.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    value = action.type(v) if action.type else v
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config key {k}: {exc}") from exc
                if action.choices is not None and value not in action.choices:
                    raise UsageError(f"config key {k}: {value!r} not in {list(action.choices)}")
            setattr(args, k, value)
    if args.format is None:
        args.format = args.format_default
    del args.format_default
    return args


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        if args.command == "verify":
            return args.handler(args)
        emit(args, args.handler(args))
        return EXIT_OK
    except SystemExit as exc:  # argparse
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"mdltemper: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"mdltemper: check failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ValueError as exc:
        print(f"mdltemper: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
