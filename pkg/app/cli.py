"""
Command line front end.

    python -m app.cli pderiv --f "exp(x1^2)" --x 1
    python -m app.cli --json pint --f "sin(x1)" --a 0 --b 6.283185307 --signed
    python -m app.cli stokes --n 2 --form "dx1:exp(x1*x2)" --chain "[(0,0),(1,0),(0,1)]"

Exit status: 0 ok, 1 usage error, 2 domain or math error, 3 convergence failure.
"""

import argparse
import sys
from typing import List, Optional

from loguru import logger

from app import __version__
from app.api.commands import cmd_geomean, cmd_pderiv, cmd_pint, cmd_qdiff, cmd_stokes, cmd_vint, cmd_wedge
from app.api.formatter import formatter
from app.api.specs import parse_point
from app.config import settings
from app.errors import FormSpecError, UsageError


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the toolkit's usage status."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def _point(text: str) -> List[float]:
    try:
        return parse_point(text)
    except FormSpecError as e:
        raise argparse.ArgumentTypeError(str(e))


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--json", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="emit the output envelope as JSON")
    parser.add_argument("--order", type=int, default=default, help=f"Gauss nodes per cell (default {settings.quad_order})")
    parser.add_argument("--tol", type=float, default=default, help=f"adaptive tolerance (default {settings.quad_tolerance})")
    parser.add_argument("--budget", type=int, default=default, help=f"adaptive cell budget (default {settings.quad_budget})")


def build_parser() -> CliParser:
    parser = CliParser(prog="prodcalc", description="Multiplicative calculus toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)

    common = CliParser(add_help=False)
    _global_flags(common, suppress=True)
    commands = parser.add_subparsers(dest="command", required=True)

    pderiv = commands.add_parser("pderiv", parents=[common], help="multiplicative derivative e^{f'/f}")
    pderiv.add_argument("--f", required=True, help="function of x1")
    pderiv.add_argument("--x", type=float, required=True)

    pint = commands.add_parser("pint", parents=[common], help="geometric product integral")
    pint.add_argument("--f", required=True)
    pint.add_argument("--a", type=float, required=True)
    pint.add_argument("--b", type=float, required=True)
    pint.add_argument("--signed", action="store_true", help="allow sign changes; the result is complex")

    geomean = commands.add_parser("geomean", parents=[common], help="geometric mean (complex when f < 0 somewhere)")
    geomean.add_argument("--f", required=True)
    geomean.add_argument("--a", type=float, required=True)
    geomean.add_argument("--b", type=float, required=True)

    vint = commands.add_parser("vint", parents=[common], help="Volterra product integral of 1 + g dx")
    vint.add_argument("--g", required=True)
    vint.add_argument("--a", type=float, required=True)
    vint.add_argument("--b", type=float, required=True)

    qdiff = commands.add_parser("qdiff", parents=[common], help="q differential of a product form")
    qdiff.add_argument("--form", required=True, help='e.g. "dx1:exp(x1*x2); dx2:x1+1" or "0:exp(x1)"')
    qdiff.add_argument("--n", type=int, required=True, help="ambient dimension")
    qdiff.add_argument("--at", type=_point, help="evaluate the coefficients at this point")

    wedge = commands.add_parser("wedge", parents=[common], help="product wedge of two forms")
    wedge.add_argument("--left", required=True)
    wedge.add_argument("--right", required=True)
    wedge.add_argument("--n", type=int, required=True)
    wedge.add_argument("--at", type=_point)

    stokes = commands.add_parser("stokes", parents=[common], help="compare both sides of the product Stokes theorem")
    stokes.add_argument("--form", required=True)
    stokes.add_argument("--n", type=int, required=True)
    stokes.add_argument("--chain", required=True, help='e.g. "[(0,0),(1,0),(0,1)]" or "2*[(0),(1)] - [(1),(2)]"')

    return parser


def dispatch(args: argparse.Namespace):
    rule = {"order": args.order, "tol": args.tol, "budget": args.budget}
    if args.command == "pderiv":
        return cmd_pderiv(args.f, args.x)
    if args.command == "pint":
        return cmd_pint(args.f, args.a, args.b, args.signed, **rule)
    if args.command == "geomean":
        return cmd_geomean(args.f, args.a, args.b, **rule)
    if args.command == "vint":
        return cmd_vint(args.g, args.a, args.b, **rule)
    if args.command == "qdiff":
        return cmd_qdiff(args.form, args.n, args.at)
    if args.command == "wedge":
        return cmd_wedge(args.left, args.right, args.n, args.at)
    return cmd_stokes(args.form, args.n, args.chain, **rule)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and print its envelope; returns the exit status."""
    logger.remove()
    logger.add(
        sys.stderr,
        level=settings.log_level,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
    )

    args = build_parser().parse_args(argv)
    envelope = dispatch(args)
    print(envelope.model_dump_json() if args.json else formatter.render_human(envelope))
    return envelope.exit_code


if __name__ == "__main__":
    sys.exit(main())
