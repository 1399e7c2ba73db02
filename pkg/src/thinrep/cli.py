"""
Command line: ``thinrep {ball,exceptional,circle,params,obstruction}``.

Exit codes: 0 success, 1 configuration or usage error, 2 infeasible
parameters, 3 arithmetic overflow, 4 capacity exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import circle, congruence, represent
from .config import RunConfig
from .errors import ConfigError, InfeasibleParametersError, ThinrepError
from .matgroup import ball_T, enumerate_ball, filter_angular, linear_form_arrays, rows_norm_sq, word_ball_oracle

log = logging.getLogger("thinrep")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage: {message}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--fixture", help="built-in problem instance")
    p.add_argument("--T", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--Q0", type=float)
    p.add_argument("--K0", type=float)
    p.add_argument("--eps0", type=Fraction)
    p.add_argument("--eps1", type=Fraction)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--threads", type=int)
    p.add_argument("--oracle", action="store_true", help="use the brute-force code paths")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thinrep", description=__doc__.strip().splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ball", help="list B_T with linear forms")
    _common(p)
    p.add_argument("--unfiltered", action="store_true", help="skip the angular condition")

    p = sub.add_parser("exceptional", help="admissible integers in [-N, N] not found below T")
    _common(p)
    p.add_argument("--T-sweep", help="comma-separated radii; one output block per radius")

    p = sub.add_parser("circle", help="R_N, M_N, E_N over [-N, N] and minor-arc diagnostics")
    _common(p)
    p.add_argument("--T-exponent", type=Fraction)
    p.add_argument("--delta", type=Fraction)
    p.add_argument("--unprimed", action="store_true", help="sum over all residues a mod q in the singular series")
    p.add_argument("--dyadic", help="also write the q,I_Q profile to this file")

    p = sub.add_parser("params", help="parameter feasibility report")
    p.add_argument("--delta", type=Fraction, default=Fraction(1))
    p.add_argument("--N", type=float, default=1e12)
    p.add_argument("--eps0", type=Fraction, default=Fraction(1, 1000))
    p.add_argument("--eps1", type=Fraction, default=Fraction(1, 1000))
    p.add_argument("--T-exponent", type=Fraction, default=Fraction(1, 2))
    p.add_argument("--out")

    p = sub.add_parser("obstruction", help="local obstruction modulus Z and admissible classes")
    _common(p)
    return parser


def _load(args) -> RunConfig:
    if args.config and args.fixture:
        raise ConfigError("give either --config or --fixture, not both")
    if args.config:
        cfg = RunConfig.load(args.config)
    elif args.fixture:
        cfg = RunConfig.from_fixture(args.fixture)
    else:
        raise ConfigError("one of --config or --fixture is required")
    over = dict(
        N=args.N, T=args.T, Q0=args.Q0, K0=args.K0, eps0=args.eps0, eps1=args.eps1, threads=args.threads, out=args.out
    )
    for name in ("T_exponent", "delta"):
        if getattr(args, name, None) is not None:
            over[name] = getattr(args, name)
    if getattr(args, "T_sweep", None):
        over["T_sweep"] = tuple(float(t) for t in args.T_sweep.split(","))
    return cfg.with_overrides(**over)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_ball(cfg: RunConfig, oracle: bool = False, unfiltered: bool = False) -> str:
    if cfg.T is None:
        raise ConfigError("--T is required")
    g = represent.precompose_fix(cfg.group_spec())
    if oracle:
        ball = word_ball_oracle(g, cfg.T)
    else:
        ball = enumerate_ball(g, cfg.T, max_elements=cfg.max_elements, workers=cfg.threads)
    if not unfiltered:
        ball = filter_angular(ball, g)
    rows = ball.elements
    A, B = linear_form_arrays(rows, g)
    ns = rows_norm_sq(rows)
    lines = ["a,b,c,d,norm_sq,A,B"]
    for r, n, a, b in zip(rows.tolist(), ns.tolist(), A.tolist(), B.tolist()):
        lines.append(f"{r[0]},{r[1]},{r[2]},{r[3]},{n},{a},{b}")
    lines.append(f"count,{len(rows)}")
    return "\n".join(lines) + "\n"


def _report(cfg: RunConfig, g) -> congruence.ObstructionReport:
    return congruence.discover_Z(g, cfg.prime_bound, cfg.power_bound, cfg.quotient_capacity)


def cmd_obstruction(cfg: RunConfig) -> str:
    return _report(cfg, represent.precompose_fix(cfg.group_spec())).to_csv()


def cmd_exceptional(cfg: RunConfig, oracle: bool = False) -> str:
    if cfg.N is None:
        raise ConfigError("--N is required")
    Ts = cfg.T_sweep or ((cfg.T,) if cfg.T is not None else ())
    if not Ts:
        raise ConfigError("--T or --T-sweep is required")
    g = represent.precompose_fix(cfg.group_spec())
    represent._require_nonelementary(g)
    rep = _report(cfg, g)
    blocks = []
    if oracle:
        for T in Ts:
            win = represent.represent_set_oracle(g, cfg.N, T)
            blocks.append((T, represent.exceptional_from_window(win, rep)))
    else:
        res = represent.exceptional_sweep(g, rep, cfg.N, Ts, workers=cfg.threads, max_elements=cfg.max_elements)
        blocks = [(float(T), res[float(T)]) for T in Ts]
    return "".join(represent.exceptional_csv(vals, g, cfg.N, T, rep) for T, vals in blocks)


def cmd_circle(cfg: RunConfig, unprimed: bool = False, dyadic: str | None = None) -> str:
    if cfg.N is None:
        raise ConfigError("--N is required")
    if cfg.T is not None:
        raise ConfigError("circle derives T from N; set --T-exponent instead of --T")
    p = cfg.circle_params()
    g = represent.precompose_fix(cfg.group_spec())
    rep = _report(cfg, g)
    ens = circle.circle_ensemble(g, p, max_elements=cfg.max_elements, workers=cfg.threads)
    sweep = circle.circle_sweep(ens, p, lambda n: congruence.is_admissible(rep, n), coprime=not unprimed)
    sq, quad = circle.parseval(ens)
    head = [f"# {k}={v}" for k, v in p.summary()]
    head += [
        f"# B_T={ens.size} singular_series={'unprimed' if unprimed else 'primed'} Z={rep.Z}",
        f"# parseval_sum={sq:.17g} parseval_quadrature={quad:.17g}",
        f"# identity_max_residual={float(np.abs(sweep.R - sweep.M - sweep.E).max()):.17g}",
    ]
    if dyadic:
        prof = circle.minor_arc_profile(ens, p)
        Path(dyadic).write_text(prof.dyadic_csv())
        head.append(
            f"# I1={prof.I1:.17g} I2={prof.I2:.17g} I3={prof.I3:.17g} I4={prof.I4:.17g} dominated={prof.dominated:.17g}"
        )
    return "\n".join(head) + "\n" + sweep.to_csv()


def cmd_params(delta, N, eps0, eps1, T_exponent) -> str:
    p = circle.choose_parameters(N, delta, eps0, eps1, T_exponent)
    lines = [f"{k},{v}" for k, v in p.summary()]
    lines.append(f"delta_boundary,{circle.delta_boundary(circle.CONSTRAINTS[3], eps1)}")
    lines.append(f"delta_boundary_eps1_0,{circle.delta_boundary(circle.CONSTRAINTS[3], 0)}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if args.command == "params":
            text = cmd_params(args.delta, args.N, args.eps0, args.eps1, args.T_exponent)
            _emit(text, args.out)
            return 0
        cfg = _load(args)
        if args.command == "ball":
            text = cmd_ball(cfg, args.oracle, args.unfiltered)
        elif args.command == "exceptional":
            text = cmd_exceptional(cfg, args.oracle)
        elif args.command == "circle":
            text = cmd_circle(cfg, args.unprimed, args.dyadic)
        else:
            text = cmd_obstruction(cfg)
        _emit(text, cfg.out)
        return 0
    except InfeasibleParametersError as exc:
        print(f"error: infeasible parameters; violated constraint(s): {'; '.join(exc.violated)}", file=sys.stderr)
        return exc.exit_code
    except ThinrepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
