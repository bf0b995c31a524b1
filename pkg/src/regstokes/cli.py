"""Command-line interface for the solver library and benchmark harness."""

import argparse
import sys

import numpy as np

from . import core, dynamics, geometry, harness, nearest, richardson
from .errors import NearSingularSystemError


def _add_shape_args(parser):
    parser.add_argument("--shape", default="sphere",
                        choices=["sphere", "spheroid", "torus"])
    parser.add_argument("--a", type=float, default=5.0, help="spheroid major semi-axis")
    parser.add_argument("--c", type=float, default=1.0, help="spheroid minor semi-axis")
    parser.add_argument("--R", type=float, default=2.5, help="torus central radius")
    parser.add_argument("--r", type=float, default=1.0, help="torus tube radius")


def _add_method_args(parser):
    parser.add_argument("--method", default="ny", choices=["ny", "nyr", "nearest"])
    parser.add_argument("--eps", default="0.1",
                        help="comma-separated eps (eps_base for nyr)")
    parser.add_argument("--h", default="0.2", help="comma-separated target spacings")
    parser.add_argument("--rule", default=str(richardson.DEFAULT_RULE),
                        help="extrapolation rule multipliers, e.g. 1,1.5,2")
    parser.add_argument("--quad-refine", type=float, default=4.0)
    parser.add_argument("--filter-fraction", type=float, default=0.1)
    parser.add_argument("--drop-empty", action="store_true",
                        help="drop coarse points with no quadrature instead of erroring")


def _add_common_args(parser):
    parser.add_argument("--mu", type=float, default=1.0)
    parser.add_argument("--rcond-threshold", type=float, default=1e-12)
    parser.add_argument("--out", default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--config", default=None,
                        help="key=value file supplying defaults for any flag")


def build_parser():
    parser = argparse.ArgumentParser(prog="regstokes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grm", help="grand resistance matrix and error vs analytic")
    _add_shape_args(p)
    _add_method_args(p)
    _add_common_args(p)

    p = sub.add_parser("sweep", help="convergence sweep over (eps, h)")
    _add_shape_args(p)
    _add_method_args(p)
    _add_common_args(p)
    p.add_argument("--observable", default="grm_error",
                   choices=["grm_error", "torus_z"])
    p.add_argument("--reference-file", default=None)
    p.add_argument("--t-end", type=float, default=98.7)
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=1e-8)

    p = sub.add_parser("sediment", help="sedimenting torus trajectory")
    _add_shape_args(p)
    _add_method_args(p)
    _add_common_args(p)
    p.add_argument("--t-end", type=float, default=98.7)
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=1e-8)
    p.add_argument("--reference-file", default=None)

    p = sub.add_parser("reference", help="persist a two-grid torus reference run")
    _add_shape_args(p)
    _add_common_args(p)
    p.add_argument("--h", type=float, default=0.4)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--quad-refine", type=float, default=4.0)
    p.add_argument("--filter-fraction", type=float, default=0.1)
    p.add_argument("--t-end", type=float, default=98.7)
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=1e-8)

    p = sub.add_parser("compare-rules", help="NyR error per extrapolation rule")
    _add_shape_args(p)
    _add_common_args(p)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--h", type=float, default=0.2)
    p.add_argument("--rules",
                   default="1,1.4142135623730951,2;1,1.5,2;1,2,3;1,1.25,1.5",
                   help="semicolon-separated rules")

    return parser


def _apply_config_file(args):
    if getattr(args, "config", None):
        values = harness.load_config_file(args.config)
        for key, raw in values.items():
            dest = key.replace("-", "_")
            if not hasattr(args, dest):
                continue
            current = getattr(args, dest)
            if isinstance(current, bool):
                setattr(args, dest, raw.lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(args, dest, int(raw))
            elif isinstance(current, float):
                setattr(args, dest, float(raw))
            else:
                setattr(args, dest, raw)
    return args


def _floats(text):
    return tuple(float(v) for v in str(text).split(","))


def _sweep_config(args, observable=None):
    return harness.SweepConfig(
        shape=args.shape, method=args.method,
        eps_values=_floats(args.eps), h_values=_floats(args.h),
        rule=richardson.ExtrapolationRule.parse(args.rule),
        observable=observable or getattr(args, "observable", "grm_error"),
        a=args.a, c=args.c, R=args.R, r=args.r, mu=args.mu,
        t_end=getattr(args, "t_end", 98.7),
        rtol=getattr(args, "rtol", 1e-6), atol=getattr(args, "atol", 1e-8),
        quad_refine=args.quad_refine, filter_fraction=args.filter_fraction,
        reference_file=getattr(args, "reference_file", None),
        out=args.out, workers=args.workers,
        rcond_threshold=args.rcond_threshold,
    )


def cmd_grm(args):
    config = _sweep_config(args, observable="grm_error")
    rows = harness.run_sweep(config)
    for row in rows:
        print(f"h={row.h:.6g} eps1={row.eps1:.6g} "
              f"rel_error={'' if row.rel_error is None else format(row.rel_error, '.6g')} "
              f"status={row.status}")
    return 0 if all(r.status == "ok" for r in rows) else 2


def cmd_sweep(args):
    config = _sweep_config(args)
    rows = harness.run_sweep(config)
    if not config.out:
        harness.write_csv(sys.stdout, rows, config)
    return 0 if all(r.status == "ok" for r in rows) else 2


def cmd_sediment(args):
    pair = None
    if args.method == "nearest":
        pair = geometry.make_nearest_pair(
            lambda h: geometry.discretise_torus(args.R, args.r, h),
            _floats(args.h)[0], quad_refine=args.quad_refine,
            filter_fraction=args.filter_fraction,
        )
    eps = _floats(args.eps)[0]
    mcfg = dynamics.MethodConfig(
        method=args.method, epsilon=eps, eps_base=eps,
        rule=richardson.ExtrapolationRule.parse(args.rule), mu=args.mu, pair=pair,
        rcond_threshold=args.rcond_threshold,
    )
    try:
        traj = dynamics.sediment_torus(args.R, args.r, _floats(args.h)[0], mcfg,
                                       t_end=args.t_end, rtol=args.rtol,
                                       atol=args.atol)
    except NearSingularSystemError as exc:
        print(f"near-singular system: {exc}", file=sys.stderr)
        return 2
    z_end = traj.states[-1].x0[2]
    print(f"z({args.t_end}) = {z_end:.10g}")
    if args.reference_file:
        record = nearest.load_reference_record(args.reference_file)
        ref = float(record["value"])
        print(f"reference = {ref:.10g}  rel_error = {abs(z_end - ref) / abs(ref):.6g}")
    if args.out:
        traj.save_txt(args.out)
    return 0


def cmd_reference(args):
    record = nearest.nearest_reference_run(
        args.R, args.r, args.h, epsilon=args.eps, quad_refine=args.quad_refine,
        filter_fraction=args.filter_fraction, t_end=args.t_end,
        rtol=args.rtol, atol=args.atol, out_path=args.out,
    )
    for key, value in record.items():
        print(f"{key} = {value}")
    return 0


def cmd_compare_rules(args):
    config = harness.SweepConfig(shape=args.shape, a=args.a, c=args.c,
                                 R=args.R, r=args.r, mu=args.mu,
                                 eps_values=(args.eps,), h_values=(args.h,))
    rules = [r for r in args.rules.split(";") if r]
    table = harness.compare_rules(config, args.eps, args.h, rules)
    for rule, err in table:
        print(f"rule=({rule}) rel_error={err:.6g}")
    return 0


COMMANDS = {
    "grm": cmd_grm,
    "sweep": cmd_sweep,
    "sediment": cmd_sediment,
    "reference": cmd_reference,
    "compare-rules": cmd_compare_rules,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    _apply_config_file(args)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
