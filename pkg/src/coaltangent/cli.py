"""Command-line entry point: ``coaltangent <command> [options]``."""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import excursion as ex
from . import ghp
from . import lambda_core as lc
from . import limits
from .coalescent import extract_Z, simulate
from .config import load_config
from .dendrogram import Dendrogram
from .errors import DomainError, NumericError
from .rng import stream
from .suites import CRITERIA, SUITES, exit_code, run_suite


def _model(cfg):
    if cfg.model == "kingman":
        return lc.LambdaModel.kingman()
    return lc.LambdaModel.beta(cfg.alpha)


def _a_lambda(cfg):
    if cfg.a_lambda is not None:
        return cfg.a_lambda
    return 1.0 if cfg.model == "kingman" else lc.LambdaModel.beta(cfg.alpha).a_lambda


def _limit_alpha(cfg):
    return 2.0 if cfg.model == "kingman" else cfg.alpha


def _path(cfg, name):
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def cmd_rates(cfg, args):
    model = _model(cfg)
    rows = []
    for n in range(2, cfg.n + 1):
        for k in range(2, n + 1):
            rows.append((n, k, lc.lambda_rate(n, k, model), lc.gamma_rate(n, k, model)))
    p = _rows(_path(cfg, "rates.csv"), ["n", "k", "lambda", "gamma"], rows)
    totals = lc.total_rates(cfg.n, model)
    q = _rows(_path(cfg, "total_rates.csv"), ["n", "total"], [(b, totals[b]) for b in range(2, cfg.n + 1)])
    return [p, q]


def cmd_simulate(cfg, args):
    model = _model(cfg)
    horizon = args.horizon if args.horizon is not None else math.inf
    out = []
    for i in range(cfg.replicas):
        h = simulate(cfg.n, model, stream(cfg.seed, "simulate", i), horizon=horizon)
        p = _path(cfg, f"history_{i}.csv")
        h.to_csv(p)
        out.append(p)
    return out


def cmd_zpath(cfg, args):
    model = _model(cfg)
    rows = []
    for eps in cfg.epsilons:
        for i in range(cfg.replicas):
            h = simulate(cfg.n, model, stream(cfg.seed, f"zpath/{eps}", i), horizon=eps * 1.0000001)
            z = extract_Z(h, eps)
            rows.extend((eps, i, t, int(v)) for t, v in zip(z.times, z.values))
    return [_rows(_path(cfg, "zpaths.csv"), ["epsilon", "replica", "r", "Z"], rows)]


def cmd_limit_z(cfg, args):
    alpha, a_lam = _limit_alpha(cfg), _a_lambda(cfg)
    r_max = max(cfg.rs)
    rows = []
    for i in range(cfg.replicas):
        z = limits.simulate_Z(alpha, a_lam, r_max, stream(cfg.seed, "limit-z", i))
        rows.extend((i, t, int(v)) for t, v in zip(z.times, z.values))
    out = [_rows(_path(cfg, "limit_z_paths.csv"), ["replica", "r", "Z"], rows)]
    if args.oracle:
        for r in cfg.rs:
            m = limits.marginal_Z_oracle(alpha, a_lam, r, args.m_trunc, max_leak=1.0)
            p = _path(cfg, f"limit_z_marginal_r{r}.csv")
            m.to_csv(p)
            out.append(p)
    return out


def cmd_limit_x(cfg, args):
    rows = []
    for i in range(cfg.replicas):
        x = limits.simulate_X(args.t0, args.t1, stream(cfg.seed, "limit-x", i))
        rows.extend((i, t, v) for t, v in zip(x.times, x.values))
    return [_rows(_path(cfg, "limit_x_paths.csv"), ["replica", "t", "X"], rows)]


def cmd_brownian(cfg, args):
    out = []
    rows = []
    for i in range(cfg.replicas):
        rng = stream(cfg.seed, f"brownian/{args.kind}", i)
        if args.kind == "excursion":
            f = ex.conditioned_excursion(rng, cfg.dt)
            space = ex.evans_space_from_excursion(f, args.max_points, rng)
        else:
            f = ex.sample_W_ball(cfg.dt, rng)
            space = ex.limit_space_from_W(f, args.max_points)
        f.metadata["seed"] = cfg.seed
        f.metadata["replica"] = i
        p = _path(cfg, f"{args.kind}_{i}.csv")
        f.to_csv(p)
        with open(_path(cfg, f"{args.kind}_{i}_space.txt"), "w") as fh:
            fh.write(space.to_text())
        rows.append((i, len(f), ex.local_time_at(f.values, f.dt, 1.0 if args.kind == "excursion" else 0.0),
                     space.n_leaves, space.total_mass()))
        out.append(p)
    out.append(_rows(_path(cfg, f"{args.kind}_summary.csv"),
                     ["replica", "grid_points", "local_time", "leaves", "total_mass"], rows))
    return out


def cmd_gh(cfg, args):
    with open(args.first) as fh:
        X = Dendrogram.from_text(fh.read())
    with open(args.second) as fh:
        Y = Dendrogram.from_text(fh.read())
    res = {"gh_bounds": list(ghp.gh_bounds(X, Y)), "pointed_gh": ghp.pointed_gh(X, Y)}
    if X.n_leaves + Y.n_leaves <= ghp.GH_EXACT_CAP:
        res["gh_exact"] = ghp.gh_exact(X, Y)
    if X.masses is not None and Y.masses is not None:
        res["pointed_ghp_upper"] = ghp.pointed_ghp(X, Y)
    p = _path(cfg, "gh.json")
    with open(p, "w") as fh:
        json.dump(res, fh, indent=2, sort_keys=True)
    print(json.dumps(res, sort_keys=True))
    return [p]


def cmd_verify(cfg, args):
    reports = run_suite(cfg, cfg.suites)
    for r in reports:
        print(r.line())
    return reports


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (required here or in the config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--suite", help="comma separated suite names (verify)")
    common.add_argument("--threads", type=int, help="worker threads for replicas")
    common.add_argument("--model", choices=("kingman", "beta"))
    common.add_argument("--alpha", type=float)
    common.add_argument("--a-lambda", type=float, dest="a_lambda")
    common.add_argument("--n", type=int)
    common.add_argument("--replicas", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--epsilons", help="comma separated")
    common.add_argument("--rs", help="comma separated")

    p = argparse.ArgumentParser(prog="coaltangent", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("rates", parents=[common], help="tabulate lambda, gamma and total rates up to n")
    s = sub.add_parser("simulate", parents=[common], help="simulate coalescent histories")
    s.add_argument("--horizon", type=float)
    sub.add_parser("zpath", parents=[common], help="extract Z_eps paths from simulated histories")
    s = sub.add_parser("limit-z", parents=[common], help="simulate the limit process Z")
    s.add_argument("--oracle", action="store_true", help="also write forward-equation marginals")
    s.add_argument("--m-trunc", type=int, default=1000, dest="m_trunc")
    s = sub.add_parser("limit-x", parents=[common], help="simulate the compound Poisson limit X")
    s.add_argument("--t0", type=float, default=1.0)
    s.add_argument("--t1", type=float, default=math.e)
    s = sub.add_parser("brownian", parents=[common], help="sample excursions and their Evans spaces")
    s.add_argument("--kind", choices=("excursion", "ball"), default="ball")
    s.add_argument("--max-points", type=int, default=None, dest="max_points")
    s = sub.add_parser("gh", parents=[common], help="GH distances between two dendrogram text files")
    s.add_argument("first")
    s.add_argument("second")
    sub.add_parser("verify", parents=[common], help="run verification suites: " + ", ".join(SUITES))
    return p


COMMANDS = {
    "rates": cmd_rates, "simulate": cmd_simulate, "zpath": cmd_zpath, "limit-z": cmd_limit_z,
    "limit-x": cmd_limit_x, "brownian": cmd_brownian, "gh": cmd_gh, "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    suites = args.suite.split(",") if args.suite else None
    if args.command == "verify" and suites == ["all"]:
        suites = sorted(SUITES, key=CRITERIA.get)
    try:
        cfg = load_config(
            args.config, seed=args.seed, out=args.out, threads=args.threads, suites=suites,
            model=args.model, alpha=args.alpha, a_lambda=args.a_lambda, n=args.n, replicas=args.replicas,
            dt=args.dt, epsilons=args.epsilons, rs=args.rs,
        )
        result = COMMANDS[args.command](cfg, args)
    except (DomainError, NumericError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "verify":
        return exit_code(result)
    for path in result:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
