"""Command-line front-end.

Exit codes: 0 pass, 1 statistical (or inequality) failure, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .constants import (abh_constants, assemble_bound, est_constants, normal_constants,
                        slln_constants, m0_lacunary_constants, m0_separated_constants)
from .counting import CountSeries, InhomParams, SequenceSpec, count_S_prime_series, count_S_series
from .numtheory import DomainError, FixedPointFraction, euler_phi_sieve
from .psi import parse_psi, psi_prime_sum, psi_sum
from .slln import parse_rv, simulate_slln
from .verify import (GridSpec, check_lemma41, check_lemma42, check_lemma43, check_normal,
                     estimate_abh_calC, lemma41_sweep, lemma43_constant, lemma43_sweep, mc_check_abh,
                     mc_check_m0_lacunary, mc_check_m0_separated, mc_check_schmidt)

__all__ = ["run", "main", "emit_series", "UsageError"]

PROG = "effdioph"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- output helpers ---------------------------------------------------------------------


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise DomainError(f"cannot write {path}: {exc.strerror}") from exc


def emit_series(series: CountSeries, path: str | None, fmt: str = "csv") -> None:
    """Write a count series as CSV (LF endings, repr floats) or a JSON array."""
    if len(series) == 0:
        raise DomainError("refusing to emit an empty series")
    if fmt not in ("csv", "json"):
        raise DomainError(f"unknown format {fmt!r}")
    _write(series.to_csv() if fmt == "csv" else series.to_json(), path)


_GNUPLOT = """\
set datafile separator ','
set key top left
set logscale x
set xlabel 'Q'
set ylabel '|count - main term|'
plot '{csv}' skip 1 using 1:(abs($2-$3)) with points title 'deviation', \\
     '' skip 1 using 1:4 with lines title 'bound'
"""


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- argument types -----------------------------------------------------------------------


def _positive(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _grid(text):
    try:
        return GridSpec.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _sequence(args) -> SequenceSpec:
    text = args.sequence
    kw = {}
    if args.K0 is not None:
        kw["K0"] = args.K0
    if args.C_growth is not None:
        kw["C_growth"] = args.C_growth
    if getattr(args, "alpha", None) is not None:
        kw["alpha"] = args.alpha
    if getattr(args, "B", None) is not None:
        kw["B"] = args.B
    kind, _, rest = text.partition(":")
    if kind == "pow2":
        return SequenceSpec.powers_of_two(**kw)
    if kind == "geometric":
        a, _, r = rest.partition(",")
        kw.setdefault("K0", float(Fraction(r)))
        return SequenceSpec.geometric(Fraction(a), Fraction(r), **kw)
    if kind == "list":
        try:
            with open(rest) as fh:
                terms = [int(line) for line in fh if line.strip()]
        except (OSError, ValueError) as exc:
            raise DomainError(f"cannot read sequence list {rest}: {exc}") from exc
        return SequenceSpec.from_list(terms, **kw)
    raise DomainError(f"unknown sequence {text!r} (pow2 | geometric:a,r | list:path)")


# -- parser ---------------------------------------------------------------------------------


def _add_out(p, formats=False):
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    if formats:
        p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_mc(p, default_grid, samples=1000):
    p.add_argument("--samples", type=_count, default=samples)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--grid", type=_grid, default=default_grid, metavar="KIND:START:STOP:POINTS")
    p.add_argument("--threads", type=_count, default=1, help="worker cap; never changes results")
    _add_out(p)


def _add_seq(p, separated):
    p.add_argument("--sequence", default="pow2", help="pow2 | geometric:a,r | list:path")
    p.add_argument("--K0", type=float, help="lacunarity constant")
    p.add_argument("--C-growth", dest="C_growth", type=_positive)
    if separated:
        p.add_argument("--alpha", type=float, required=True, help="separation exponent in (0,1)")
        p.add_argument("--B", type=float)
    p.add_argument("--along", choices=("q", "index"), default="q",
                   help="evaluate psi at q_n or at the index n")
    p.add_argument("--A", type=float, default=2.7, help="measure exponent (Lebesgue needs A <= e)")
    p.add_argument("--nu", type=_positive, default=1 / math.pi)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="Effective Diophantine counting bounds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("constants", help="explicit constants of one bound")
    c.add_argument("--theorem", required=True,
                   choices=("est", "abh", "m0-lacunary", "m0-separated", "normal", "slln", "lemma43"))
    c.add_argument("--eps", type=_positive)
    c.add_argument("--delta", type=_positive)
    c.add_argument("--psi")
    c.add_argument("--C", type=_positive)
    c.add_argument("--calC", type=_positive)
    c.add_argument("--b", type=int)
    c.add_argument("--rv")
    c.add_argument("--n", type=_count, help="probed range for the strong-law constants")
    c.add_argument("--sequence")
    c.add_argument("--K0", type=float)
    c.add_argument("--C-growth", dest="C_growth", type=_positive)
    c.add_argument("--alpha", type=float)
    c.add_argument("--B", type=float)
    c.add_argument("--along", choices=("q", "index"))
    c.add_argument("--A", type=float)
    c.add_argument("--nu", type=_positive)
    _add_out(c, formats=True)

    n = sub.add_parser("count", help="S(x,Q) or S'(x,Q) series with main term and bound")
    n.add_argument("--psi", required=True)
    n.add_argument("--x", required=True, help="decimal or rational, e.g. 0.5 or 1/3")
    n.add_argument("--qmax", type=_count, required=True)
    n.add_argument("--grid", type=_grid, help="default: every Q up to qmax (at most 10**4 points)")
    n.add_argument("--kind", choices=("S", "S-prime"), default="S")
    n.add_argument("--eps", type=_positive, help="with --delta, fill the bound column")
    n.add_argument("--delta", type=_positive)
    n.add_argument("--C", type=_positive)
    n.add_argument("--calC", type=_positive)
    n.add_argument("--plot-script", metavar="PATH", help="also write a gnuplot script")
    _add_out(n)
    n.add_argument("--format", choices=("csv", "json"), default="csv")

    v = sub.add_parser("verify", help="Monte Carlo and inequality checks")
    vs = v.add_subparsers(dest="check", required=True, parser_class=_Parser)

    s = vs.add_parser("schmidt")
    s.add_argument("--psi", required=True)
    s.add_argument("--eps", type=_positive, required=True)
    s.add_argument("--delta", type=_positive, required=True)
    _add_mc(s, GridSpec("geometric", 10, 10 ** 6, 24))

    a = vs.add_parser("abh")
    a.add_argument("--psi", required=True)
    a.add_argument("--C", type=_positive, required=True)
    a.add_argument("--delta", type=_positive, required=True)
    a.add_argument("--calC", type=_positive, help="omit to estimate it from an independent seed")
    a.add_argument("--calC-samples", dest="calC_samples", type=_count, default=200)
    a.add_argument("--calC-seed", dest="calC_seed", type=_seed)
    _add_mc(a, GridSpec("geometric", 10, 10 ** 5, 24), samples=500)

    for name, separated in (("m0-lacunary", False), ("m0-separated", True)):
        m = vs.add_parser(name)
        m.add_argument("--psi", required=True)
        m.add_argument("--gamma", type=float, default=0.0)
        m.add_argument("--eps", type=_positive, required=True)
        m.add_argument("--delta", type=_positive, required=True)
        _add_seq(m, separated)
        _add_mc(m, GridSpec("linear", 1, 40, 40), samples=500)

    lm = vs.add_parser("lemmas", help="restricted-totient and Phi-deficit inequalities")
    lm.add_argument("--lemma", choices=("41", "42", "43"), required=True)
    lm.add_argument("--M", type=_count)
    lm.add_argument("--N", type=_count)
    lm.add_argument("--k", type=_count)
    lm.add_argument("--psi")
    lm.add_argument("--sweep", action="store_true", help="all windows up to N (41: also k)")
    _add_out(lm)

    nm = sub.add_parser("normal", help="digit counts against the normal-number envelope")
    nm.add_argument("--d", type=int, required=True)
    nm.add_argument("--b", type=int, default=10)
    nm.add_argument("--eps", type=_positive, required=True)
    nm.add_argument("--delta", type=_positive, required=True)
    nm.add_argument("--x", help="explicit x; omit to sample")
    nm.add_argument("--samples", type=_count, default=1000)
    nm.add_argument("--seed", type=_seed)
    nm.add_argument("--grid", type=_grid, default=GridSpec("geometric", 10, 10 ** 5, 24))
    nm.add_argument("--threads", type=_count, default=1)
    _add_out(nm)

    sl = sub.add_parser("slln", help="strong-law deviation check")
    sl.add_argument("--rv", required=True, help="bernoulli:p | uniform:a,b | const:c | table:path | schedule:a|b")
    sl.add_argument("--eps", type=_positive, required=True)
    sl.add_argument("--delta", type=_positive, required=True)
    _add_mc(sl, GridSpec("geometric", 1, 10 ** 5, 24))
    return p


# -- subcommands ----------------------------------------------------------------------------

_CONST_FLAGS = {
    "est": {"eps", "delta", "psi"},
    "abh": {"C", "delta", "calC"},
    "m0-lacunary": {"eps", "delta", "psi", "sequence", "K0", "C_growth", "along", "A", "nu"},
    "m0-separated": {"eps", "delta", "psi", "sequence", "K0", "C_growth", "alpha", "B", "along", "A", "nu"},
    "normal": {"eps", "delta", "b"},
    "slln": {"eps", "delta", "rv", "n"},
    "lemma43": set(),
}
_REQUIRED = {
    "est": ("eps", "delta", "psi"), "abh": ("C", "delta", "calC"),
    "m0-lacunary": ("eps", "delta", "psi"), "m0-separated": ("eps", "delta", "psi", "alpha"),
    "normal": ("eps", "delta"), "slln": ("eps", "delta", "rv"), "lemma43": (),
}
_ALL_CONST = set().union(*_CONST_FLAGS.values())


def _flag(name):
    return "--" + name.replace("_", "-")


def _cmd_constants(args) -> int:
    th = args.theorem
    for name in sorted(_ALL_CONST - _CONST_FLAGS[th]):
        if getattr(args, name) is not None:
            raise UsageError(f"{_flag(name)} does not apply to --theorem {th}")
    for name in _REQUIRED[th]:
        if getattr(args, name) is None:
            raise UsageError(f"--theorem {th} requires {_flag(name)}")
    if th == "lemma43":
        out = {"theorem": "lemma43", "constant": lemma43_constant()}
        text = _json(out) if args.format == "json" else f"name,value\nconstant,{out['constant']!r}\n"
        _write(text, args.out)
        return 0
    if th == "est":
        consts = est_constants(args.eps, args.delta, parse_psi(args.psi))
    elif th == "abh":
        consts = abh_constants(args.C, args.delta, args.calC)
    elif th in ("m0-lacunary", "m0-separated"):
        args.sequence = args.sequence or "pow2"
        seq = _sequence(args)
        kw = dict(nu=args.nu if args.nu is not None else 1 / math.pi,
                  A=args.A if args.A is not None else 2.7, along=args.along or "q")
        fn = m0_lacunary_constants if th == "m0-lacunary" else m0_separated_constants
        consts = fn(seq, parse_psi(args.psi), args.eps, args.delta, **kw)
    elif th == "normal":
        consts = normal_constants(args.eps, args.delta, args.b if args.b is not None else 10)
    else:
        spec = parse_rv(args.rv)
        consts = slln_constants(args.eps, args.delta, spec.sigma2, spec.F_tilde(args.n or 10 ** 5))
    if args.format == "json":
        text = consts.to_json()
    else:
        d = consts.as_dict()
        rows = ["name,value"] + [f"{k},{json.dumps(v)}" for k, v in d["outputs"].items()]
        text = "\n".join(rows) + "\n"
    _write(text, args.out)
    return 0


def _cmd_count(args) -> int:
    psi = parse_psi(args.psi)
    x = FixedPointFraction.parse(args.x)
    if args.grid is not None:
        if args.grid.stop != args.qmax:
            raise UsageError("--grid stop must equal --qmax")
        Q = args.grid.values()
    elif args.qmax <= 10 ** 4:
        Q = np.arange(1, args.qmax + 1, dtype=np.int64)
    else:
        Q = GridSpec("geometric", 1, args.qmax, 10 ** 4).values()
    bounds = np.full(len(Q), math.inf)
    if args.kind == "S":
        for name in ("C", "calC"):
            if getattr(args, name) is not None:
                raise UsageError(f"{_flag(name)} applies to --kind S-prime only")
        counts = count_S_series(x, Q, psi)
        main = 2.0 * np.array([psi_sum(psi, int(q)) for q in Q])
        if (args.eps is None) != (args.delta is None):
            raise UsageError("--eps and --delta go together")
        if args.eps is not None:
            bounds = assemble_bound("est", est_constants(args.eps, args.delta, psi), Psi=main / 2.0)
    else:
        if args.eps is not None:
            raise UsageError("--eps applies to --kind S only")
        phi = euler_phi_sieve(int(Q[-1]))
        counts = count_S_prime_series(x, Q, psi, phi)
        main = np.array([psi_prime_sum(psi, int(q), phi) for q in Q])
        given = [args.C is not None, args.delta is not None, args.calC is not None]
        if any(given) and not all(given):
            raise UsageError("--C, --delta and --calC go together")
        if all(given):
            bounds = assemble_bound("abh", abh_constants(args.C, args.delta, args.calC), Psi_prime=main)
    emit_series(CountSeries.build(Q, counts, main, bounds), args.out, args.format)
    if args.plot_script:
        if args.out in (None, "-") or args.format != "csv":
            raise UsageError("--plot-script needs --out with --format csv")
        _write(_GNUPLOT.format(csv=args.out), args.plot_script)
    return 0


def _finish(report, out) -> int:
    _write(report.to_json(), out)
    return 0 if report.passed else 1


def _cmd_verify(args) -> int:
    chk = args.check
    if chk == "lemmas":
        return _cmd_lemmas(args)
    psi = parse_psi(args.psi)
    if chk == "schmidt":
        r = mc_check_schmidt(psi, args.eps, args.delta, args.samples, args.grid, args.seed, args.threads)
    elif chk == "abh":
        phi = euler_phi_sieve(args.grid.stop)
        calC, source = args.calC, "user"
        if calC is None:
            cseed = args.calC_seed if args.calC_seed is not None else (args.seed + 1) % 2 ** 64
            calC = estimate_abh_calC(psi, args.C, args.grid, args.calC_samples, cseed, phi, args.threads)
            source = f"empirical (seed {cseed}, {args.calC_samples} samples)"
        r = mc_check_abh(psi, args.C, args.delta, calC, args.samples, args.grid, args.seed, phi,
                         args.threads, calC_source=source)
    else:
        seq = _sequence(args)
        params = InhomParams(args.gamma, nu=args.nu, A=args.A)
        fn = mc_check_m0_lacunary if chk == "m0-lacunary" else mc_check_m0_separated
        r = fn(seq, psi, args.gamma, args.eps, args.delta, args.samples, args.grid, args.seed,
               params=params, along=args.along, threads=args.threads)
    return _finish(r, args.out)


def _cmd_lemmas(args) -> int:
    lem = args.lemma
    need = {"41": ("N",) if args.sweep else ("M", "N", "k"),
            "42": ("psi", "M", "N", "k"),
            "43": ("psi", "N")}[lem]
    for name in need:
        if getattr(args, name) is None:
            raise UsageError(f"--lemma {lem} requires {_flag(name)}")
    allowed = set(need) | ({"k"} if lem == "41" else set())
    for name in ("M", "N", "k", "psi"):
        if getattr(args, name) is not None and name not in allowed:
            raise UsageError(f"{_flag(name)} does not apply to --lemma {lem}")
    if args.sweep and lem == "42":
        raise UsageError("--sweep does not apply to --lemma 42")
    if lem == "41":
        res = lemma41_sweep(args.N, args.k or 50) if args.sweep else check_lemma41(args.M, args.N, args.k)
    elif lem == "42":
        res = check_lemma42(parse_psi(args.psi), args.M, args.N, args.k)
    else:
        psi = parse_psi(args.psi)
        res = lemma43_sweep(psi, args.N) if args.sweep else check_lemma43(psi, args.N)
    out = {"lemma": lem, "sweep": bool(args.sweep), "holds": bool(res.holds),
           "lower_slack": res.lower_slack, "upper_slack": res.upper_slack,
           "witness": [x if isinstance(x, (int, str)) else int(x) for x in res.witness]}
    _write(_json(out), args.out)
    return 0 if res.holds else 1


def _cmd_normal(args) -> int:
    if args.x is not None:
        x = Fraction(args.x)
        if not 0 <= x < 1:
            raise DomainError("x must lie in [0, 1)")
        r = check_normal(args.d, args.b, args.grid, args.eps, args.delta, x=x,
                         seed=args.seed or 0, threads=args.threads)
    else:
        if args.seed is None:
            raise UsageError("sampled x requires --seed")
        r = check_normal(args.d, args.b, args.grid, args.eps, args.delta, samples=args.samples,
                         seed=args.seed, threads=args.threads)
    return _finish(r, args.out)


def _cmd_slln(args) -> int:
    r = simulate_slln(parse_rv(args.rv), args.eps, args.delta, args.grid, args.samples, args.seed,
                      args.threads)
    return _finish(r, args.out)


_DISPATCH = {"constants": _cmd_constants, "count": _cmd_count, "verify": _cmd_verify,
             "normal": _cmd_normal, "slln": _cmd_slln}


def run(argv=None) -> int:
    """Parse ``argv`` and execute; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.cmd](args)
    except UsageError as exc:
        print(f"{PROG}: usage error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, ZeroDivisionError) as exc:
        print(f"{PROG}: error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}",
              file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
