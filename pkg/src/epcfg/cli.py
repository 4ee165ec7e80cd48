"""Command line interface.

    epcfg transform --cond C.epl --uncond U.epl --out O.epl --lambda 7.5 --mode ep
    epcfg rescale --cfg G.epl --cond C.epl --out O.epl
    epcfg simulate --config experiment.cfg
    epcfg plot --in out/lambda_9/trace.csv --out trace.svg
"""

import argparse
import json
import sys

from .config import load_config
from .exceptions import EPCFGError
from .guidance import GuidanceParams, Mode
from .latent import RobustWindow
from .report import emit_svg
from .runner import run_rescale, run_simulate, run_transform


def _window(args):
    return RobustWindow(args.l, args.h)


def _print_report(report, **extra):
    doc = {**extra, **report.to_dict()}
    print(json.dumps(doc, sort_keys=True))


def cmd_transform(args):
    params = GuidanceParams(args.strength, Mode.parse(args.mode), _window(args), args.phi)
    report = run_transform(args.cond, args.uncond, params, args.out)
    _print_report(report, mode=params.mode.value, strength=params.strength)


def cmd_rescale(args):
    report = run_rescale(args.cfg, args.cond, args.out, _window(args))
    _print_report(report, mode="ep")


def cmd_simulate(args):
    config = load_config(args.config)
    for d in run_simulate(config):
        print(d)


def cmd_plot(args):
    emit_svg(args.inputs, args.out)


def _add_window_args(p):
    p.add_argument("--l", type=float, default=45.0, help="lower percentile (default 45)")
    p.add_argument("--h", type=float, default=55.0, help="upper percentile (default 55)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="epcfg", description="Energy-preserving classifier-free guidance tools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="guide a conditional/unconditional latent pair")
    p.add_argument("--cond", required=True)
    p.add_argument("--uncond", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="strength", type=float, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="ep")
    _add_window_args(p)
    p.add_argument("--phi", type=float, default=0.7, help="blend for --mode std")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("rescale", help="energy-rescale an already guided latent")
    p.add_argument("--cfg", required=True)
    p.add_argument("--cond", required=True)
    p.add_argument("--out", required=True)
    _add_window_args(p)
    p.set_defaults(func=cmd_rescale)

    p = sub.add_parser("simulate", help="run the toy diffusion experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="render trace CSVs as an SVG line chart")
    p.add_argument("--in", dest="inputs", action="append", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (EPCFGError, OSError) as exc:
        print(f"epcfg {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
