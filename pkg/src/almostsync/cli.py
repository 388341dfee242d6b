"""Command-line interface: ``analyze``, ``round``, ``verify``, ``generate``, ``sweep``.

Exit codes: 0 success, 1 validation error, 2 usage error. Errors go to
standard error prefixed with ``error:``.
"""
import argparse
import json
import sys

from . import _config, checks, io
from .errors import AlmostSyncError
from .games import analyze, builtin_game
from .lab import NOISE_KINDS, RNG_ALGORITHM, NoiseModel, SweepConfig, generate, sweep
from .rounding import naimark_dilate, pme_decompose, step_game_values
from .strategy import symmetrize_side


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _levels(text: str):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level list {text!r}") from None


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the flags without defaults so values given before the subcommand survive
    common = _Parser(add_help=False)
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common.add_argument("--seed", type=int, default=default(0), help="seed for the 64-bit generator")
    common.add_argument("--tolerance", type=float, default=default(None), help="acceptance slack for bound checks")
    common.add_argument("--out", default=default(None), help="output path (default: standard output)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = _Parser(prog="almostsync", description="Round almost-synchronous strategies to PME mixtures.",
                parents=[_global_flags(suppress=False)])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    a = sub.add_parser("analyze", parents=[common], help="game value, diagonal synchronicity defect and flags")
    _game_args(a)
    a.add_argument("--strategy", help="strategy JSON (default: the built-in reference strategy)")

    r = sub.add_parser("round", parents=[common], help="decompose a strategy into PME steps")
    r.add_argument("--strategy", required=True, help="strategy JSON")
    r.add_argument("--nu", default="uniform", help="'uniform' or a JSON list of question weights")
    r.add_argument("--game", help="game JSON; adds per-step game values")
    r.add_argument("--workers", type=int, default=None)

    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("--only", action="append", choices=sorted(checks.CHECKS), help="restrict to these checks")

    g = sub.add_parser("generate", parents=[common], help="write a (noisy) built-in strategy as JSON")
    g.add_argument("--builtin", required=True)
    g.add_argument("--noise", choices=NOISE_KINDS, default="depolarize_state")
    g.add_argument("--level", type=float, default=0.0)
    g.add_argument("--game-out", help="also write the game JSON here")

    s = sub.add_parser("sweep", parents=[common], help="noise sweep with power-law fits, as CSV")
    s.add_argument("--builtin", required=True)
    s.add_argument("--noise", choices=NOISE_KINDS, required=True)
    s.add_argument("--levels", type=_levels, required=True, help="comma-separated, strictly decreasing")
    s.add_argument("--workers", type=int, default=None)
    return p


def _game_args(p):
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--game", help="game JSON")
    grp.add_argument("--builtin", help="built-in game name")


def _emit(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_analyze(args):
    if args.builtin:
        game, ref = builtin_game(args.builtin)
    else:
        game, ref = io.game_from_dict(io.read_json(args.game)), None
    if args.strategy:
        strat = io.strategy_from_dict(io.read_json(args.strategy))
    elif ref is not None:
        strat = ref
    else:
        raise UsageError("--strategy is required with --game")
    _emit(io.dumps(analyze(game, strat).to_dict()) + "\n", args.out)
    return 0


def _parse_nu(text):
    if text == "uniform":
        return None
    return json.loads(text)


def _cmd_round(args):
    strat = io.strategy_from_dict(io.read_json(args.strategy))
    dilated = naimark_dilate(strat)
    sym = symmetrize_side(dilated, "A")
    nu = _parse_nu(args.nu)
    dec = pme_decompose(sym, nu, workers=args.workers)
    values = None
    if args.game:
        game = io.game_from_dict(io.read_json(args.game))
        values = step_game_values(game, dec, dilated.state, dilated.bob)
    report = io.decomposition_report(dec, values, RNG_ALGORITHM)
    _emit(io.dumps(report) + "\n", args.out)
    return 0


def _cmd_verify(args):
    results = checks.run_all(seed=args.seed, names=args.only)
    lines = [r.line() for r in results]
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(r.passed for r in results) else 1


def _cmd_generate(args):
    game, strat = generate(args.builtin, NoiseModel(args.noise, args.level, args.seed))
    data = io.strategy_to_dict(strat)
    _emit(io.dumps(data) + "\n", args.out)
    if args.game_out:
        io.write_json(io.game_to_dict(game), args.game_out)
    return 0


def _cmd_sweep(args):
    cfg = SweepConfig(args.builtin, args.noise, args.levels, args.seed, args.out, args.workers)
    _emit(io.sweep_csv(sweep(cfg)), args.out)
    return 0


COMMANDS = {
    "analyze": _cmd_analyze,
    "round": _cmd_round,
    "verify": _cmd_verify,
    "generate": _cmd_generate,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.tolerance is not None and args.tolerance < 0:
        print("error: --tolerance must be nonnegative", file=sys.stderr)
        return 2
    saved = _config.get_tolerances()
    if args.tolerance is not None:
        _config.set_tolerances(slack=args.tolerance)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AlmostSyncError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    finally:
        _config.set_tolerances(**vars(saved))


if __name__ == "__main__":
    sys.exit(main())
