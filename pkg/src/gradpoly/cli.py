"""Command-line interface.

Sub-commands::

    gradpoly run CONFIG [--output-dir DIR] [--quiet]
    gradpoly check-tangent CONFIG [--states N] [--seed S] [--tol T]
    gradpoly probe-stvk --eps E
    gradpoly gap --eps E
    gradpoly preset NAME [-o FILE]      (or: gradpoly preset --list)

Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.
Failures print one line ``error: <Kind>: <message>`` to stderr.
"""
import argparse
import sys
from dataclasses import replace

import numpy as np

from . import analysis
from .config import load_config, preset, preset_names, serialize
from .errors import ConfigError, GradPolyError
from .verification import check_tangents

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fail(kind, message, code):
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def _cmd_run(args):
    from .runner import run
    cfg = load_config(args.config)
    if args.output_dir is not None:
        cfg = replace(cfg, output_dir=args.output_dir)
    log = None if args.quiet else print
    res = run(cfg, write=True, log=log)
    last = res.report.steps[-1] if res.report.steps else None
    print(f"converged: {'yes' if res.converged else 'no'}")
    print(f"steps: {len(res.report.steps)}")
    if last is not None:
        print(f"energy: {last.energy:.12g}")
    print(f"bands: {res.bands.band_count}")
    if res.bands.band_count:
        print(f"mean_band_width: {res.bands.mean_band_width:.6g}")
    for key, path in res.paths.items():
        print(f"{key}: {path}")
    if not res.converged:
        return _fail("NoConvergence", f"step {last.step} did not converge", EXIT_FAILURE)
    return EXIT_OK


def _cmd_check_tangent(args):
    cfg = load_config(args.config)
    res = check_tangents(cfg.material, n_states=args.states, seed=args.seed)
    for name, err in res.rows():
        print(f"{name}: {err:.3e}")
    print(f"max: {res.worst:.3e}")
    if not res.worst <= args.tol:
        return _fail("TangentMismatch", f"max relative error {res.worst:.3e} > {args.tol:g}",
                     EXIT_FAILURE)
    return EXIT_OK


def _cmd_probe(args):
    eps = args.eps
    res = analysis.rank_one_probe_stvk(np.diag([eps, eps, 1.0]), [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    print(f"{res.h_second_derivative:.12g} {'violating' if res.violating else 'not violating'}")
    return EXIT_OK


def _cmd_gap(args):
    w_hom, w_lam, gap = analysis.stvk_laminate_gap(args.eps)
    print(f"W_hom: {w_hom:.12g}")
    print(f"W_lam: {w_lam:.12g}")
    print(f"gap: {gap:.12g}")
    return EXIT_OK


def _cmd_preset(args):
    if args.list:
        print("\n".join(preset_names()))
        return EXIT_OK
    if args.name is None:
        raise _UsageError("preset name required (or --list)")
    try:
        cfg = preset(args.name)
    except KeyError as exc:
        raise _UsageError(exc.args[0]) from None
    text = serialize(cfg)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def make_parser():
    p = _Parser(prog="gradpoly", description="Gradient-polyconvex hyperelasticity solver.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    r = sub.add_parser("run", help="solve the experiment described by a config file")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None)
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=_cmd_run)
    c = sub.add_parser("check-tangent", help="finite-difference check of stresses and tangents")
    c.add_argument("config")
    c.add_argument("--states", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=1e-5)
    c.set_defaults(func=_cmd_check_tangent)
    pr = sub.add_parser("probe-stvk", help="rank-one probe of normalized StVK at diag(eps, eps, 1)")
    pr.add_argument("--eps", type=float, required=True)
    pr.set_defaults(func=_cmd_probe)
    g = sub.add_parser("gap", help="laminate energy gap of normalized StVK")
    g.add_argument("--eps", type=float, required=True)
    g.set_defaults(func=_cmd_gap)
    ps = sub.add_parser("preset", help="print or write a preset configuration")
    ps.add_argument("name", nargs="?")
    ps.add_argument("-o", "--output", default=None)
    ps.add_argument("--list", action="store_true")
    ps.set_defaults(func=_cmd_preset)
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a command is required")
        return args.func(args)
    except _UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return _fail("UsageError", str(exc), EXIT_USAGE)
    except ConfigError as exc:
        for kind, line, msg in exc.problems:
            where = f" (line {line})" if line else ""
            print(f"error: {kind}{where}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        return _fail("FileNotFound", f"{exc.filename}", EXIT_USAGE)
    except GradPolyError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_FAILURE)
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
