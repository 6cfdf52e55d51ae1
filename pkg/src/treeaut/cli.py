"""treeaut command line: evaluate definitions and run the experiments.

Output is a table (default), CSV or key=value text. Every run starts with
"#"-prefixed header lines carrying the schema, the command and the seed; wall
time goes to stderr so that stdout is byte-identical for identical inputs.

Exit codes: 0 success, 2 bad input, 3 depth or memory budget exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import shlex
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path


from . import __version__
from .affine import (
    PREDICTION_COLUMNS,
    VALUATION_COLUMNS,
    AffineElement,
    PreconditionError,
    affine_apply,
    affine_power,
    cycle_prediction_rows,
    is_minimal_affine,
    is_prime,
    make_frame,
    realize_affine,
    theta_signature,
    valuation_rows,
)
from .cycles import (
    cycle_decomposition,
    haar_sample,
    is_minimal_up_to,
    level_conjugator,
    settled_stats,
    strongly_settle,
    wreath_sample,
)
from .grammar import parse_definitions, parse_expr
from .monodromy import (
    WEYL_COLUMNS,
    dihedral_audit,
    img_generators,
    img_level_group,
    product_generator,
    weyl_index_experiment,
)
from .recursion import GrowthProfile, odometer, profile_element, truncate
from .tree import (
    BudgetError,
    DepthError,
    TreeError,
    TreeShape,
    conjugate,
    distance,
    dumps,
    order_at_level,
    sign_at_level,
)

REPORT_SCHEMA = "treeaut.run-report/1"
EXIT_INPUT = 2
EXIT_BUDGET = 3


@dataclass
class Payload:
    columns: tuple[str, ...]
    rows: list[tuple]
    notes: list[str] = field(default_factory=list)
    raw: str | None = None   # replaces the row output (used by eval/sample JSON)


def sub_seed(seed: int, command: str, index: int) -> int:
    """Stable 63-bit seed for cell `index` of `command`."""
    digest = hashlib.blake2b(f"{seed}:{command}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def fmt(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    return str(value)


def render(payload: Payload, style: str) -> str:
    if payload.raw is not None:
        return payload.raw if payload.raw.endswith("\n") else payload.raw + "\n"
    rows = [[fmt(v) for v in row] for row in payload.rows]
    cols = list(payload.columns)
    if style == "csv":
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        writer.writerows(rows)
        out = buf.getvalue()
    elif style == "text":
        out = "".join(" ".join(f"{c}={v}" for c, v in zip(cols, row)) + "\n" for row in rows)
    else:
        widths = [max([len(c)] + [len(r[i]) for r in rows]) for i, c in enumerate(cols)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
        lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in rows]
        out = "\n".join(lines) + "\n"
    notes = "".join(f"# {note}\n" for note in payload.notes)
    return notes + out


# ----- element sources -------------------------------------------------------

def add_element_args(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("element")
    src.add_argument("--defs", type=Path, help="file of definitions, one per line")
    src.add_argument("--def", dest="inline", action="append", default=[],
                     help='inline definition such as "a = (a, id) * eta" (repeatable)')
    src.add_argument("--expr", help="expression or name to analyse")
    src.add_argument("--odometer", action="store_true", help="use the canonical adding machine")
    src.add_argument("--profile", help="growth profile pattern, e.g. double,hold (binary)")
    src.add_argument("--random", action="store_true", help="use a Haar-random element (seeded)")


def load_env(args):
    parts = ([args.defs.read_text()] if args.defs else []) + args.inline
    text = "\n".join(parts)
    return parse_definitions(text, args.d)


def element_from_args(args, N: int, index: int = 0):
    if args.odometer:
        ref, env = odometer(args.d)
        return truncate(ref, env, N)
    if args.profile:
        if args.d != 2:
            raise TreeError("growth profiles need d = 2")
        return profile_element(GrowthProfile.periodic(args.profile.split(","), N), N)
    if args.random:
        return haar_sample(TreeShape.constant(args.d, N), N, sub_seed(args.seed, args.command, index))
    if not args.expr:
        raise TreeError("give --expr, --odometer, --profile or --random")
    env = load_env(args)
    return truncate(parse_expr(args.expr, args.d), env, N)


# ----- subcommands -----------------------------------------------------------

def cmd_eval(args) -> Payload:
    u = element_from_args(args, args.N)
    if args.format == "csv" or args.format == "table":
        rows = [(n, v, int(x)) for n in range(1, args.N + 1) for v, x in enumerate(u.table(n))]
        return Payload(("level", "vertex", "image"), rows)
    return Payload((), [], raw=dumps(u))


def cmd_cycles(args) -> Payload:
    u = element_from_args(args, args.N)
    if args.level is not None:
        rep = cycle_decomposition(u, args.level)
        rows = [(args.level, c, int(rep.leaders[c]), int(n)) for c, n in enumerate(rep.lengths)]
        return Payload(("level", "cycle", "leader", "length"), rows)
    rows = []
    for n in range(1, args.N + 1):
        rep = cycle_decomposition(u, n)
        multiset = " ".join(f"{length}^{count}" for length, count in rep.length_multiset().items())
        rows.append((n, rep.count, multiset, order_at_level(u, n), sign_at_level(u, n)))
    return Payload(("level", "cycles", "lengths", "order", "sign"), rows)


def cmd_settled(args) -> Payload:
    u = element_from_args(args, args.N)
    stats = settled_stats(u, args.n0, args.N)
    return Payload(("level", "settled_fraction"),
                   [(n, stats.fraction(n)) for n in range(1, args.n0 + 1)],
                   notes=[f"budget: {args.N}"])


def cmd_stabilize(args) -> Payload:
    rows = []
    for i in range(args.count):
        tau = element_from_args(args, args.N, index=i)
        for n in args.levels:
            sigma = strongly_settle(tau, n, args.N)
            dist = distance(tau, sigma).value
            frac = settled_stats(sigma, n, args.N).fraction(n) if n else Fraction(1)
            rows.append((i, n, dist, Fraction(1, args.d ** n), frac))
    return Payload(("sample", "n", "distance", "bound", "settled_fraction_at_n"), rows)


def cmd_minimal(args) -> Payload:
    u = element_from_args(args, args.N)
    rows = [(n, is_minimal_up_to(u, n), order_at_level(u, n), sign_at_level(u, n))
            for n in range(1, args.N + 1)]
    return Payload(("level", "transitive", "order", "sign"), rows)


def cmd_conjugator(args) -> Payload:
    u = element_from_args(args, args.N)
    w = truncate(parse_expr(args.to, args.d), load_env(args), args.N)
    g = level_conjugator(u, w, args.N)
    check = conjugate(g, u) == w
    if args.format == "text":
        return Payload((), [], raw=dumps(g))
    rows = [(n, v, int(x)) for n in range(1, args.N + 1) for v, x in enumerate(g.table(n))]
    return Payload(("level", "vertex", "image"), rows, notes=[f"conjugates: {fmt(check)}"])


def _need_prime(d: int) -> None:
    if not is_prime(d):
        raise PreconditionError(f"d = {d} must be prime for this command")


def cmd_affine(args) -> Payload:
    _need_prime(args.d)
    aff = AffineElement(args.d, args.N, args.m, args.k)
    if args.action == "apply":
        rows = [(j, affine_apply(aff, j, args.N)) for j in args.values]
        return Payload(("j", "image"), rows)
    if args.action == "power":
        rows = []
        for p in args.values:
            q = affine_power(aff, p)
            rows.append((p, q.m, q.k))
        return Payload(("p", "m", "k"), rows, notes=[f"modulus: {aff.modulus}"])
    if args.action == "cycles":
        return Payload(PREDICTION_COLUMNS, list(cycle_prediction_rows(args.d, args.m, args.k, args.N)))
    ref, env = odometer(args.d)
    sigma = realize_affine(make_frame(truncate(ref, env, args.N)), aff)
    rows = []
    for n in range(1, args.N + 1):
        rep = cycle_decomposition(sigma, n)
        multiset = " ".join(f"{length}^{count}" for length, count in rep.length_multiset().items())
        rows.append((n, rep.count, multiset))
    return Payload(("level", "cycles", "lengths"), rows,
                   notes=[f"minimal: {fmt(is_minimal_affine(args.m, args.k, args.d))}"])


def cmd_valuation(args) -> Payload:
    _need_prime(args.d)
    rows = list(valuation_rows(args.d, args.k, range(1, args.n_max + 1)))
    bad = sum(1 for row in rows if row[3] != row[4])
    return Payload(VALUATION_COLUMNS, rows, notes=[f"mismatches: {bad}"])


def cmd_theta(args) -> Payload:
    rows = []
    for k in args.k:
        sig = theta_signature(k)
        rows.append((k, sig.theta1, sig.theta2))
    return Payload(("k", "theta1", "theta2"), rows)


def cmd_img(args) -> Payload:
    pres = img_generators(args.r, args.s)
    a0 = truncate(product_generator(pres), pres.env, args.N)
    gens = pres.truncations(args.N)
    rows = []
    for n in range(1, args.N + 1):
        group = img_level_group(pres, n) if n <= args.group_levels else None
        rows.append((n, " ".join(str(order_at_level(g, n)) for g in gens),
                     is_minimal_up_to(a0, n), sign_at_level(a0, n),
                     group.order() if group else None))
    return Payload(("level", "generator_orders", "a0_transitive", "a0_sign", "group_order"), rows,
                   notes=[f"case: {pres.case.value}"])


_CASES = {"A": (4, 2), "B": (3, 1), "C": (3, 2)}


def cmd_weyl(args) -> Payload:
    r, s = (args.r, args.s) if args.r else _CASES[args.case]
    pres = img_generators(r, s)
    ks = args.k or list(range(1, 16, 2))
    rows = weyl_index_experiment(pres, args.n_max, range(1, args.m_max + 1), ks)
    out = [(w.case, w.r, w.s, w.m, w.k, w.n, w.theta1, w.theta2, w.member, w.first_non_member_level)
           for w in rows]
    return Payload(WEYL_COLUMNS, out)


def cmd_dihedral(args) -> Payload:
    rows = []
    for lv in dihedral_audit(args.n_max):
        mults = " ".join(str(x) for x in sorted(lv.multipliers))
        rows.append((lv.n, lv.order, lv.outside_cyclic, lv.outside_all_involutions, mults, lv.all_affine))
    return Payload(("n", "order", "outside_cyclic", "involutions", "multipliers", "affine"), rows)


def cmd_sample(args) -> Payload:
    seed = sub_seed(args.seed, args.command, 0)
    if args.wreath:
        H = [tuple(int(x) for x in part.split()) for part in args.wreath.split(",")]
        u = wreath_sample(H, args.N, seed)
    else:
        u = haar_sample(TreeShape.constant(args.d, args.N), args.N, seed)
    if args.format == "text":
        return Payload((), [], raw=dumps(u))
    rows = [(n, v, int(x)) for n in range(1, args.N + 1) for v, x in enumerate(u.table(n))]
    return Payload(("level", "vertex", "image"), rows)


# ----- parser ----------------------------------------------------------------

def _default_depth(args) -> int:
    return 12 if args.d == 2 else 8


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treeaut", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"treeaut {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "csv", "text"), default="table")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-d", type=int, default=2, help="branching factor (default 2)")
    common.add_argument("-N", type=int, default=None, help="depth (default 12 binary, 8 otherwise)")
    common.add_argument("--no-header", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, element=False):
        p = sub.add_parser(name, parents=[common], help=help_)
        if element:
            add_element_args(p)
        p.set_defaults(func=func)
        return p

    add("eval", cmd_eval, "truncate an element and print its level tables", True)
    p = add("cycles", cmd_cycles, "cycle structure per level", True)
    p.add_argument("--level", type=int)
    p = add("settled", cmd_settled, "settled fractions up to level n0 with budget N", True)
    p.add_argument("--n0", type=int, required=True)
    p = add("stabilize", cmd_stabilize, "strongly settle an element and report the distance", True)
    p.add_argument("--levels", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--count", type=int, default=1, help="number of elements (with --random)")
    add("minimal", cmd_minimal, "transitivity, order and sign per level", True)
    p = add("conjugator", cmd_conjugator, "a level conjugator taking --expr to --to", True)
    p.add_argument("--to", required=True)
    p = add("affine", cmd_affine, "affine maps j -> m + k j on Z/d^N")
    p.add_argument("action", choices=("apply", "power", "realize", "cycles"))
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--values", type=int, nargs="+", default=[0], help="points for apply, exponents for power")
    p = add("valuation", cmd_valuation, "compare v_d(1 + k + ... + k^(n-1)) with v_d(n)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p = add("theta", cmd_theta, "theta signature of odd multipliers")
    p.add_argument("k", type=int, nargs="+")
    p = add("img", cmd_img, "generators of the monodromy group for (r, s)")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--group-levels", type=int, default=8, help="compute |G|V_n| up to this level")
    p = add("weyl", cmd_weyl, "membership of realized affine maps in G|V_n")
    p.add_argument("--case", choices=sorted(_CASES), default="A")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--m-max", type=int, default=16)
    p.add_argument("--k", type=int, nargs="+")
    p = add("dihedral-audit", cmd_dihedral, "enumerate the dihedral case r=2, s=1")
    p.add_argument("--n-max", type=int, default=10)
    p = add("sample", cmd_sample, "Haar or wreath-product random element")
    p.add_argument("--wreath", help='allowed local permutations, e.g. "0 1 2,1 2 0,2 0 1"')
    return parser


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.N is None:
        args.N = _default_depth(args)
    if args.N < 1 or args.d < 2:
        print("error: need -N >= 1 and -d >= 2", file=err)
        return EXIT_INPUT
    start = time.perf_counter()
    try:
        payload = args.func(args)
    except (BudgetError, DepthError, MemoryError) as exc:
        print(f"budget error: {exc}", file=err)
        return EXIT_BUDGET
    except (TreeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    if not args.no_header:
        echo = " ".join(shlex.quote(a) for a in (argv if argv is not None else sys.argv[1:]))
        out.write(f"# schema: {REPORT_SCHEMA}\n# command: {echo}\n# seed: {args.seed}\n")
    out.write(render(payload, args.format))
    print(f"# wall-time: {time.perf_counter() - start:.3f}s", file=err)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
