"""Command-line interface.

Exit codes: 0 on success or a passing check, 1 when a verification fails,
2 for malformed input.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from typing import Any

import numpy as np

from . import composer, compressor, games, liecart, opcore, strategies

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
TOL_ENV = "NLG_TOLERANCE"

INPUT_ERRORS = (
    games.GameError,
    strategies.StrategyError,
    compressor.CertificateError,
    compressor.PipelineError,
    opcore.DimensionError,
    opcore.NotHermitianError,
    liecart.KakError,
    OSError,
    KeyError,
    ValueError,
)


class InputError(Exception):
    pass


# --- helpers ------------------------------------------------------------------

def _tolerance(text: str) -> float:
    try:
        tol = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tolerance {text!r}") from None
    if not tol > 0 or math.isinf(tol):
        raise argparse.ArgumentTypeError("tolerance must be a positive number")
    return tol


def _default_tol() -> float:
    env = os.environ.get(TOL_ENV)
    if env is None:
        return opcore.DEFAULT_TOL
    try:
        return _tolerance(env)
    except argparse.ArgumentTypeError as exc:
        raise InputError(f"{TOL_ENV}: {exc}") from None


def _load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _resolve_game(name: str, variant: int | None) -> games.Game:
    if os.path.isfile(name):
        return games.make_game(_load_json(name))
    return games.builtin_game(name, variant)


def _resolve_strategy(name: str, game_name: str, variant: int | None, tol: float) -> strategies.QuantumStrategy:
    if os.path.isfile(name):
        return strategies.QuantumStrategy.from_json(_load_json(name), tol=tol)
    if name in ("builtin", ""):
        name = game_name
    return strategies.builtin_strategy(name, variant)


def _game_list(args) -> tuple[list, list]:
    names = [n.strip() for n in args.games.split(",") if n.strip()]
    if not names:
        raise InputError("--games is empty")
    strat_names = [n.strip() for n in args.strategies.split(",")] if args.strategies else ["builtin"] * len(names)
    if len(strat_names) != len(names):
        raise InputError(f"{len(names)} games but {len(strat_names)} strategies")
    gs = [_resolve_game(n, args.variant) for n in names]
    ss = [_resolve_strategy(s, n, args.variant, args.tol) for s, n in zip(strat_names, names)]
    return gs, ss


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, str) else k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _render_text(report: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_render_text(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], (dict, list)):
            lines.append(f"{pad}{key}:")
            for item in value:
                if isinstance(item, dict):
                    lines.append(f"{pad}  - " + ", ".join(f"{k}={_fmt(v)}" for k, v in item.items()))
                else:
                    lines.append(f"{pad}  - " + " ".join(_fmt(v) for v in item))
        else:
            lines.append(f"{pad}{key}: {_fmt(value)}")
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _emit(args, report: dict, payload: dict | None = None) -> None:
    """Print the report; with ``--out`` the payload (or report) goes to the file."""
    report = _jsonable(report)
    if args.out:
        write_atomic(args.out, json.dumps(_jsonable(payload if payload is not None else report), indent=1) + "\n")
    if args.format == "json":
        print(json.dumps(report, indent=1))
    else:
        print(_render_text(report))


# --- subcommands ----------------------------------------------------------------

def cmd_value(args) -> int:
    game = _resolve_game(args.game, args.variant)
    if args.which == "classical":
        cv = games.classical_value(game, budget=args.budget, sample=args.sample,
                                   rng=np.random.default_rng(args.seed))
        rows = [[games._thaw(x), games._thaw(y),
                 int(game.accepts(x, y, cv.strategy.f[x], cv.strategy.g[y]))] for x, y in game.questions()]
        report = {
            "game": game.name,
            "which": "classical",
            "value": float(cv.value),
            "value_exact": str(cv.value),
            "exact": cv.exact,
            "strategies_evaluated": cv.evaluated,
            "per_question": rows,
        }
    else:
        if not args.strategy:
            raise InputError("--which quantum needs --strategy")
        strat = _resolve_strategy(args.strategy, args.game, args.variant, args.tol)
        rep = strategies.evaluate(game, strat, args.tol)
        report = {
            "game": game.name,
            "which": "quantum",
            "value": rep.value,
            "perfect": rep.perfect,
            "min_acceptance": rep.min_acceptance,
            "per_question": [[games._thaw(x), games._thaw(y), p] for (x, y), p in rep.per_question.items()],
        }
    _emit(args, report)
    return EXIT_OK


def cmd_compose(args) -> int:
    gs, ss = _game_list(args)
    if args.mode == "tensor":
        report = composer.tensor_report(gs, ss, args.tol, rng=np.random.default_rng(args.seed))
    else:
        report = composer.route_report_json(gs, ss, args.lift, args.tol)
    _emit(args, report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_compress(args) -> int:
    gs, ss = _game_list(args)
    result = compressor.run_pipeline(gs, ss, args.offline, args.tol, rng=np.random.default_rng(args.seed))
    cert = result.certificate
    checks = {k: v for k, v in cert["checks"].items() if k != "per_question_acceptance"}
    summary = {
        "games": [g.name for g in gs],
        "offline_choice": args.offline,
        "n_compressed": cert["n_compressed"],
        "n_baseline": cert["n_baseline"],
        "checks": checks,
        "pipeline": cert["pipeline"],
    }
    if args.out:
        write_atomic(args.out, json.dumps(_jsonable(cert)) + "\n")
        summary["certificate"] = args.out
    if args.format == "json":
        print(json.dumps(_jsonable(summary), indent=1))
    else:
        print(_render_text(_jsonable(summary)))
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    cert = _load_json(args.certificate)
    if not isinstance(cert, dict):
        raise InputError("certificate must be a JSON object")
    rep = compressor.verify_certificate(cert, args.tol_override)
    report = {
        "certificate": args.certificate,
        "pass": rep.passed,
        "consistent": rep.consistent,
        "overall_pass": rep.overall_pass,
        "mismatches": list(rep.mismatches),
        "checks": {k: v for k, v in rep.recomputed.items() if k != "per_question_acceptance"},
    }
    _emit(args, report)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_lie(args) -> int:
    if args.strategy:
        strat = _resolve_strategy(args.strategy, args.strategy, args.variant, args.tol)
        sides = {"a": "A", "b": "B"}
        report = {"strategy": args.strategy}
        for side, label in sides.items():
            basis = liecart.lie_closure(liecart.strategy_generators(strat, side))
            report[f"closure_dim_{label}"] = basis.dim
            report[f"is_full_su_{label}"] = liecart.is_full_su(basis)
        report["closure_dim"] = report["closure_dim_A"]
        report["is_full_su"] = report["is_full_su_A"]
    else:
        data = _load_json(args.generators)
        mats = [opcore.Operator.from_json(m).array for m in data]
        basis = liecart.lie_closure(mats)
        report = {"generators": args.generators, "closure_dim": basis.dim, "is_full_su": liecart.is_full_su(basis)}
    _emit(args, report)
    return EXIT_OK


def _load_matrix(path: str) -> np.ndarray:
    data = _load_json(path)
    if isinstance(data, dict):
        return opcore.Operator.from_json(data).array
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise InputError(f"{path}: expected an operator object or a matrix of [re, im] pairs")


def cmd_cartan(args) -> int:
    report: dict = {}
    ok = True
    if args.check:
        if args.check != "su4":
            raise InputError(f"unknown decomposition {args.check!r}; only 'su4' is built in")
        rep = liecart.check_cartan(liecart.cartan_su4(), args.tol)
        report["dims"] = list(rep.dims)
        report["cartan_residuals"] = rep.residuals
        report["centralizer_dim"] = rep.centralizer_dim
        report["cartan_pass"] = rep.passed
        ok &= rep.passed
    if args.kak:
        u = _load_matrix(args.kak)
        f = liecart.kak_su4(u, rng=np.random.default_rng(args.seed))
        err = liecart.reconstruction_error(u, f)
        report["kak"] = {"c": list(f.c), "recon_error": err, "locality_defect": f.locality_defect()}
        ok &= err <= 1e-8
    if args.selftest:
        errs = [liecart.reconstruction_error(u, liecart.kak_su4(u)) for u in liecart.haar_su4(args.selftest, args.seed)]
        report["kak_selftest"] = {"samples": args.selftest, "seed": args.seed, "max_recon_error": max(errs)}
        ok &= max(errs) <= 1e-8
    if not report:
        raise InputError("cartan needs --check, --kak or --selftest")
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_tolerance, default=None,
                        help=f"numerical tolerance (default 1e-9, or ${TOL_ENV})")
    common.add_argument("--seed", type=int, default=0, help="seed for random draws")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--out", help="write the JSON result to this file")

    parser = argparse.ArgumentParser(prog="nlgc", description="Non-local game strategies, composition and compression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("value", parents=[common], help="classical or quantum value of a game")
    p.add_argument("--game", required=True, help="builtin name or game JSON file")
    p.add_argument("--variant", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--which", choices=("classical", "quantum"), default="classical")
    p.add_argument("--strategy", help="'builtin', a builtin strategy name, or a strategy JSON file")
    p.add_argument("--budget", type=int, default=games.DEFAULT_BUDGET)
    p.add_argument("--sample", type=int, help="sample this many strategies when the budget is exceeded")
    p.set_defaults(func=cmd_value)

    for name, func, helptext in (("compose", cmd_compose, "parallel composition of perfect strategies"),
                                 ("compress", cmd_compress, "build a compression certificate")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--games", required=True, help="comma-separated builtin names or game files")
        p.add_argument("--strategies", help="comma-separated strategies aligned with --games (default builtin)")
        p.add_argument("--variant", type=int, choices=(1, 2, 3, 4))
        if name == "compose":
            p.add_argument("--mode", choices=("tensor", "route"), default="tensor")
            p.add_argument("--lift", choices=("isometry", "pad"), default="isometry")
        else:
            p.add_argument("--offline", choices=compressor.OFFLINE_CHOICES, default="scalar-uniform")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", parents=[common], help="re-check a compression certificate")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lie", parents=[common], help="Lie closure of a game algebra")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--strategy", help="builtin strategy name (e.g. msg-builtin) or strategy file")
    g.add_argument("--generators", help="JSON list of Hermitian operators")
    p.add_argument("--variant", type=int, choices=(1, 2, 3, 4))
    p.set_defaults(func=cmd_lie)

    p = sub.add_parser("cartan", parents=[common], help="Cartan decomposition and KAK factorization")
    p.add_argument("--check", help="built-in decomposition to check ('su4')")
    p.add_argument("--kak", help="JSON file with a 4x4 unitary")
    p.add_argument("--selftest", type=int, metavar="N", help="KAK round trip on N Haar-random unitaries")
    p.set_defaults(func=cmd_cartan)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        # verify keeps the certificate's own tolerance unless one is given
        args.tol_override = args.tol
        if args.tol is None:
            args.tol = _default_tol()
            if os.environ.get(TOL_ENV) is not None:
                args.tol_override = args.tol
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except composer.NotPerfectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
