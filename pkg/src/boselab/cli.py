"""Command-line entry point: ``boselab <command> ...`` (or ``python -m boselab``).

Results go to stdout as JSON unless a file is named.  Exit status is 0 on
success, 2 when a check or experiment misses its bar, 1 on error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import equilibrium as eq
from . import exact_oracle as ex
from . import experiments as xp
from . import saddlepoint as sp
from . import sampler as sm
from . import special_sums as ss
from .multiplicities import parse_spec

SPARSE_WIDTH = 64


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, default=xp._jsonable)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _seed(args) -> int:
    env = os.environ.get("BOSELAB_SEED")
    return int(env) if env not in (None, "") else args.seed


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_solve(args):
    sol = eq.solve_b(parse_spec(args.spec), args.M, args.tol)
    _emit(dict(M=sol.M, b=sol.b, Nbar=sol.Nbar, residual=sol.residual, j_cut=sol.j_cut))
    return 0


def cmd_threshold(args):
    spec = parse_spec(args.spec)
    base = eq.threshold(spec, args.M, args.tol)
    out = dict(M=args.M, threshold=base)
    if args.K is not None:
        colored = eq.coloring_threshold(spec, args.M, args.K, args.tol)
        out.update(K=args.K, colored_threshold=colored, ratio=colored / base,
                   predicted_ratio=args.K ** (1 / (spec.d + 1)))
    _emit(out)
    return 0


def cmd_beta_mu(args):
    gc = eq.solve_beta_mu(parse_spec(args.spec), args.M, args.N, args.tol)
    _emit(dict(M=args.M, N=args.N, beta=gc.beta, mu=gc.mu,
               residual_N=gc.residual_N, residual_M=gc.residual_M))
    return 0


def cmd_sums(args):
    if args.kind == "bose":
        r = ss.bose_sum(args.s, args.b, args.l)
        em = ss.bose_sum_em(args.s, args.b, args.l)
        _emit(dict(s=args.s, b=args.b, l=args.l, value=r.value, tail_bound=r.remainder_bound,
                   euler_maclaurin=em.value, em_remainder_bound=em.remainder_bound, em_method=em.method))
    else:
        _emit(dict(d=args.d, x=args.x, value=ss.bose_integral(args.d, args.x)))
    return 0


def cmd_weights(args):
    spec = parse_spec(args.spec)
    exact = True if args.exact_int else None
    if args.N is None:
        t = ex.WeightTable(spec, args.M, exact=exact)
        out = dict(M=args.M, exact=t.exact, weight_exact_energy=t.weight_exact_energy(args.M),
                   weight_cumulative=t.weight_cumulative(args.M),
                   log_weight_cumulative=t.log_weight_cumulative(args.M))
    else:
        t = ex.WeightTable(spec, args.M, mode="fixed", N_max=args.N, exact=exact)
        out = dict(M=args.M, N=args.N, exact=t.exact, weight_fixed=t.weight_fixed())
    _emit(out)
    return 0


def cmd_coeffs(args):
    _emit(dict(Mmax=args.Mmax, coeffs=ex.gen_function_coeffs(parse_spec(args.spec), args.Mmax)))
    return 0


def cmd_enumerate(args):
    rows = [dict(energy=c.energy, particles=c.particles, occupations=c.as_dict(), weight=w)
            for c, w in ex.enumerate_configs(parse_spec(args.spec), args.M, args.N)]
    if args.format == "json":
        print(json.dumps([dict(r, occupations={str(k): v for k, v in r["occupations"].items()})
                          for r in rows], indent=2))
    else:
        w = csv.writer(sys.stdout)
        w.writerow(["energy", "particles", "occupations", "weight"])
        for r in rows:
            w.writerow([r["energy"], r["particles"],
                        " ".join(f"{k}:{v}" for k, v in r["occupations"].items()), r["weight"]])
    return 0


def write_batch_csv(batch: sm.SampleBatch, fh, width: int = SPARSE_WIDTH):
    """CSV with dense N_0..N_{width-1} columns and a sparse 'j:count' column beyond."""
    occ = batch.occupations
    dense = min(width, occ.shape[1])
    w = csv.writer(fh)
    w.writerow(["sample_id", "energy", "particles"] + [f"N_{j}" for j in range(dense)]
               + ["sparse", "weight"])
    en, pa = batch.energies, batch.particles
    for i, row in enumerate(occ):
        extra = " ".join(f"{j}:{row[j]}" for j in range(dense, len(row)) if row[j])
        w.writerow([i, int(en[i]), int(pa[i])] + [int(v) for v in row[:dense]]
                   + [extra, repr(float(batch.weights[i]))])


def cmd_sample(args):
    spec = parse_spec(args.spec)
    seed = _seed(args)
    if args.scheme == "boltzmann":
        if args.N is not None:
            raise ValueError("the importance sampler targets P_M only")
        batch = sm.sample_boltzmann(spec, eq.solve_b(spec, args.M).b, args.M, seed, args.count)
    else:
        backend = None if args.N is None else xp.choose_backend(spec, args.M, args.N)
        batch, _ = xp.draw(spec, args.M, args.count, seed, N=args.N, backend=backend)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_batch_csv(batch, fh)
    else:
        write_batch_csv(batch, sys.stdout)
    return 0


def cmd_saddle(args):
    spec = parse_spec(args.spec)
    prof = sp.action(spec, args.M)
    res = sp.contour_log_weight(spec, args.M)
    lw = ex.log_weight_exact_energy(spec, args.M)
    out = dict(M=args.M, b=prof.b, log_weight_contour=res.log_weight, log_weight_exact=lw,
               rel_err=abs(math.expm1(res.log_weight - lw)), S_M=prof.S_M, S2=prof.S2,
               S3_bound=prof.S3_bound, K=prof.K, zones=list(res.zones))
    code = 0
    if args.check_bounds:
        rep = sp.check_bounds(spec, [int(m) for m in _floats(args.check_bounds)])
        out["bounds"] = rep.to_dict()
        code = 0 if rep.ok else 2
    _emit(out, args.out)
    return code


def cmd_experiment(args):
    spec = parse_spec(args.spec)
    seed = _seed(args)
    if args.kind == "deviation":
        rep = xp.run_deviation(spec, args.M, args.f, args.count, seed, args.chi, l=args.l)
    elif args.kind == "condense":
        if args.N is None:
            raise ValueError("condense needs --N")
        rep = xp.run_condensation(spec, args.M, args.N, args.count, seed, args.chi)
    elif args.kind == "coloring":
        Ks = [int(k) for k in _floats(args.K)] if args.K else [1, 2, 4, 16]
        rep = xp.run_coloring(spec, args.M, Ks)
    else:
        rep = xp.run_profile(spec, args.M, args.x1, args.x2, args.grid, args.count, seed)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rep.to_json(indent=2) + "\n")
    else:
        print(rep.to_json(indent=2))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(rep.to_csv())
    return 0 if rep.passed else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boselab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_spec(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--spec", required=True, help='e.g. "power:d=3,Q=1,q0=1"')
        s.set_defaults(fn=fn)
        return s

    s = with_spec("solve", cmd_solve, "root b(M) and Nbar")
    s.add_argument("--M", type=float, required=True)
    s.add_argument("--tol", type=float, default=eq.DEFAULT_TOL)

    s = with_spec("threshold", cmd_threshold, "condensation threshold, optionally K-colored")
    s.add_argument("--M", type=float, required=True)
    s.add_argument("--K", type=int)
    s.add_argument("--tol", type=float, default=eq.DEFAULT_TOL)

    s = with_spec("beta-mu", cmd_beta_mu, "(beta, mu) below threshold")
    s.add_argument("--M", type=float, required=True)
    s.add_argument("--N", type=float, required=True)
    s.add_argument("--tol", type=float, default=eq.DEFAULT_TOL)

    s = sub.add_parser("sums", help="lattice sums and Bose integrals")
    s.add_argument("kind", choices=["bose", "integral"])
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--b", type=float, default=1.0)
    s.add_argument("--l", type=int, default=1)
    s.add_argument("--d", type=float, default=3.0)
    s.add_argument("--x", type=float, default=0.0)
    s.set_defaults(fn=cmd_sums)

    s = with_spec("weights", cmd_weights, "total weights from the DP table")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--exact-int", action="store_true")

    s = with_spec("coeffs", cmd_coeffs, "generating-function coefficients")
    s.add_argument("--Mmax", type=int, required=True)

    s = with_spec("enumerate", cmd_enumerate, "list every configuration with its weight")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--format", choices=["csv", "json"], default="csv")

    s = with_spec("sample", cmd_sample, "draw configurations")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scheme", choices=["exact", "boltzmann"], default="exact")
    s.add_argument("--out")

    s = with_spec("saddle", cmd_saddle, "contour-integral weight and bound checks")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--check-bounds", help="comma-separated M grid")
    s.add_argument("--out")

    s = sub.add_parser("experiment", help="empirical deviation/condensation/coloring/profile runs")
    s.add_argument("kind", choices=["deviation", "condense", "coloring", "profile"])
    s.add_argument("--spec", required=True)
    s.add_argument("--M", type=float, required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--K", help="comma-separated color counts")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--chi", default="loglog")
    s.add_argument("--f", default="all_ones", help="all_ones, alternating or tail_from_l:<l>")
    s.add_argument("--l", type=int)
    s.add_argument("--x1", type=float, default=0.5)
    s.add_argument("--x2", type=float, default=3.0)
    s.add_argument("--grid", type=int, default=11)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(fn=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "experiment" and args.kind != "coloring":
        args.M = int(args.M)
    try:
        return args.fn(args)
    except (ValueError, ArithmeticError, MemoryError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
