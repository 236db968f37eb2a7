"""Verification suites: each one runs a check end to end and returns StatReports.

A suite is a function ``(config, out_dir) -> list[StatReport]``.  Reports
with ``role="criterion"`` decide the exit status; ``role="diagnostic"``
rows carry extra numbers (alternative normalisations, cross-checks) and
never fail a run.  All sizes and thresholds come from ``SUITE_DEFAULTS``
and can be overridden in the config as ``suite.param = value``.
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special
from scipy import stats as sps

from . import excursion as ex
from . import ghp
from . import lambda_core as lc
from . import limits
from . import stats
from .coalescent import block_count, extract_Z, frequency_of_one, simulate
from .dendrogram import Dendrogram, random_dendrogram
from .errors import NumericError
from .rng import stream

SUITE_DEFAULTS = {
    "rates": {"alphas": (1.1, 1.5, 1.9), "n_max": 100, "rel_tol": 1e-8, "gamma_tol": 1e-12},
    "cdi": {"alpha": 1.5, "n": 100_000, "epsilon": 1e-3, "rs": (0.0, 0.5), "replicas": 200,
            "lo": 0.95, "hi": 1.05},
    "rate_limit": {"alpha": 1.5, "n": 100_000, "epsilons": (1e-2, 1e-3, 1e-4), "js": (1, 2),
                   "rs": (0.0, 0.5), "replicas": 200},
    "kingman_z": {"n": 50_000, "epsilon": 1e-3, "r": 0.5, "samples": 2000, "ks_max": 0.06,
                  "p1": 0.25, "p1_tol": 0.02},
    "beta_z": {"alpha": 1.5, "n": 50_000, "epsilon": 1e-3, "r": 0.5, "samples": 2000,
               "ks_max": 0.08, "tv_alphas": (1.5, 2.0), "tv_rs": (0.25, 0.5, 0.75),
               "tv_paths": 1_000_000, "m_trunc": 1000, "tv_max": 0.01, "diag_epsilon": 0.1,
               "diag_samples": 500},
    "frequency": {"n": 100_000, "epsilon": 1e-3, "samples": 2000, "ks_max": 0.05, "t0": 1.0,
                  "x_replicas": 2000, "p_min": 0.01},
    "gh": {"triples": 200, "triple_leaves": 5, "pairs": 500, "pair_leaves": 6,
           "tri_tol": 1e-12},
    "local_time": {"dt": 1e-6, "replicas": 1000, "ks_max": 0.05},
    "hausdorff": {"ell_gaps": (0.5, 1.0, 2.0), "etas": (0.5, 1.0, 2.0), "replicas": 10_000,
                  "tol": 0.02, "path_replicas": 300, "path_dt": 1e-4},
    "brownian_tree": {"dt": 1e-6, "fine_factor": 10, "replicas": 1000, "rs": (0.25, 0.5),
                      "ks_max": 0.07, "gh_replicas": 200, "gh_median_max": 0.15,
                      "max_points": 8, "ball_eta": 0.1, "tree_eta": 0.01},
}

CRITERIA = {
    "rates": 1, "cdi": 2, "rate_limit": 3, "kingman_z": 4, "beta_z": 5,
    "frequency": 6, "gh": 7, "local_time": 8, "hausdorff": 9, "brownian_tree": 10,
}

_CMP = {
    "lt": lambda v, t: v < t,
    "le": lambda v, t: v <= t,
    "gt": lambda v, t: v > t,
    "between": lambda v, t: t[0] <= v <= t[1],
}


@dataclass
class StatReport:
    suite: str
    name: str
    statistic: str
    value: float
    comparator: str
    threshold: object
    sizes: dict = field(default_factory=dict)
    role: str = "criterion"
    status: str = "run"
    runtime: float = 0.0
    note: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.status == "run" and bool(_CMP[self.comparator](self.value, self.threshold))

    def line(self):
        thr = self.threshold if self.comparator != "between" else list(self.threshold)
        verdict = "PASS" if self.passed else ("NOT RUN" if self.status != "run" else "FAIL")
        tag = "" if self.role == "criterion" else " [diagnostic]"
        return f"{verdict:7s} {self.suite}/{self.name}: {self.statistic} = {self.value:.6g} ({self.comparator} {thr}){tag}"


def _get(cfg, suite, name, fallback=None):
    defaults = SUITE_DEFAULTS[suite]
    return cfg.overrides.get(f"{suite}.{name}", defaults.get(name, fallback))


def _replicate(cfg, tag, count, fn):
    """``[fn(i, rng_i)]`` in index order, whatever the thread count."""
    def one(i):
        return fn(i, stream(cfg.seed, tag, i))
    if cfg.threads == 1:
        return [one(i) for i in range(count)]
    with ThreadPoolExecutor(cfg.threads) as pool:
        return list(pool.map(one, range(count)))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


# -- 1: rate identities ----------------------------------------------------------------


def quadrature_lambda(n, k, alpha):
    """``int p^(k-2) (1-p)^(n-k) Beta(2-alpha, alpha)(dp)`` by QUADPACK.

    The fractional powers go into the algebraic weight, the integer powers
    (rescaled by their maximum) into the integrand.
    """
    ea, eb = k - 1 - alpha, n - k + alpha - 1
    ia, ib = max(math.floor(ea), 0), max(math.floor(eb), 0)
    mode = ia / (ia + ib) if ia + ib > 0 else 0.5
    lm = (ia * math.log(mode) if ia else 0.0) + (ib * math.log1p(-mode) if ib else 0.0)

    def f(p):
        if p <= 0.0:
            return 1.0 if ia == 0 else 0.0
        if p >= 1.0:
            return 1.0 if ib == 0 else 0.0
        return math.exp((ia * math.log(p) if ia else 0.0) + (ib * math.log1p(-p) if ib else 0.0) - lm)

    v, _ = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(ea - ia, eb - ib), limit=200,
                          epsabs=0.0, epsrel=1e-12)
    return math.exp(math.log(v) + lm - special.betaln(2.0 - alpha, alpha))


def suite_rates(cfg, out):
    s = "rates"
    alphas, n_max = _get(cfg, s, "alphas"), _get(cfg, s, "n_max")
    reports, rows = [], []
    for a in alphas:
        model = lc.LambdaModel.beta(a)
        t0 = time.perf_counter()
        worst_lam = worst_gam = 0.0
        for n in range(2, n_max + 1):
            for k in range(2, n + 1):
                lam = lc.lambda_rate(n, k, model)
                q = quadrature_lambda(n, k, a)
                g = lc.gamma_rate(n, k, model)
                rel = abs(q / lam - 1.0)
                relg = abs(g / (math.comb(n, k) * lam) - 1.0)
                worst_lam, worst_gam = max(worst_lam, rel), max(worst_gam, relg)
                rows.append((a, n, k, lam, q, rel, g, relg))
        dt_ = time.perf_counter() - t0
        size = {"rows": n_max * (n_max - 1) // 2}
        reports.append(StatReport(s, f"lambda_vs_quadrature_alpha{a}", "max relative error",
                                  worst_lam, "le", _get(cfg, s, "rel_tol"), size, runtime=dt_))
        reports.append(StatReport(s, f"gamma_vs_binomial_alpha{a}", "max relative error",
                                  worst_gam, "le", _get(cfg, s, "gamma_tol"), size))
    _write_rows(os.path.join(out, "rates.csv"),
                ["alpha", "n", "k", "lambda", "quadrature", "rel_err", "gamma", "gamma_rel_err"], rows)
    return reports


# -- 2, 3: coming down from infinity and the rate limit --------------------------------------


def _beta_histories(cfg, s, tag):
    alpha, n = _get(cfg, s, "alpha"), _get(cfg, s, "n")
    model = lc.LambdaModel.beta(alpha)
    horizon = max(_get(cfg, s, "epsilon", 0.0), max(_get(cfg, s, "epsilons", (0.0,))))
    return model, lambda i, rng: simulate(n, model, rng, horizon=horizon * 1.0000001)


def suite_cdi(cfg, out):
    s = "cdi"
    t0 = time.perf_counter()
    eps, rs, reps = _get(cfg, s, "epsilon"), _get(cfg, s, "rs"), _get(cfg, s, "replicas")
    model, sim = _beta_histories(cfg, s, "cdi")
    C = lc.cdi_constant(model.alpha)
    A = model.a_lambda
    a1 = 1.0 - model.alpha
    sup_grid = np.linspace(0.0, 0.9, 19)

    def one(i, rng):
        h = sim(i, rng)
        ratio = [(1 - r) * eps / (C * block_count(h, (1 - r) * eps) ** a1) for r in rs]
        sup = max(abs((1 - r) * eps / (C * block_count(h, (1 - r) * eps) ** a1) - 1) for r in sup_grid)
        return ratio, sup

    res = _replicate(cfg, "cdi", reps, one)
    ratios = np.array([r for r, _ in res])
    sups = np.array([x for _, x in res])
    dt_ = time.perf_counter() - t0
    lo, hi = _get(cfg, s, "lo"), _get(cfg, s, "hi")
    reports = []
    for j, r in enumerate(rs):
        reports.append(StatReport(s, f"ratio_r{r}", "mean ratio", float(ratios[:, j].mean()), "between",
                                  (lo, hi), {"replicas": reps, "n": _get(cfg, s, "n")}, runtime=dt_))
        reports.append(StatReport(s, f"ratio_times_A_r{r}", "mean ratio with alpha/(A Gamma(2-alpha))",
                                  float(A * ratios[:, j].mean()), "between", (lo, hi), role="diagnostic"))
    reports.append(StatReport(s, "sup_deviation", "mean sup_r |ratio - 1| on r in [0, 0.9]",
                              float(sups.mean()), "le", hi - 1.0, role="diagnostic"))
    _write_rows(os.path.join(out, "cdi.csv"), ["replica"] + [f"ratio_r{r}" for r in rs] + ["sup_dev"],
                [(i, *ratios[i], sups[i]) for i in range(reps)])
    return reports


def suite_rate_limit(cfg, out):
    s = "rate_limit"
    t0 = time.perf_counter()
    epsilons, js, rs = (_get(cfg, s, k) for k in ("epsilons", "js", "rs"))
    reps = _get(cfg, s, "replicas")
    model, sim = _beta_histories(cfg, s, "rate_limit")
    a, A = model.alpha, model.a_lambda

    def limit(j, r):
        return A * special.gamma(2 - a) * special.gamma(j - a + 1) / ((1 - r) * a * special.gamma(j + 2))

    def one(i, rng):
        h = sim(i, rng)
        out_ = {}
        for r in rs:
            for e in epsilons:
                N = block_count(h, (1 - r) * e)
                for j in js:
                    g = lc.gamma_rate(N, j + 1, model) if N >= j + 1 else 0.0
                    out_[(j, r, e)] = abs(e * g / N - limit(j, r))
        return out_

    res = _replicate(cfg, "rate_limit", reps, one)
    dt_ = time.perf_counter() - t0
    reports, rows = [], []
    for j in js:
        for r in rs:
            means = [float(np.mean([x[(j, r, e)] for x in res])) for e in epsilons]
            rows.extend((j, r, e, m) for e, m in zip(epsilons, means))
            # decreasing in eps -> 0 means every successive difference is negative
            worst_step = max(means[k + 1] - means[k] for k in range(len(means) - 1))
            reports.append(StatReport(s, f"j{j}_r{r}", "max successive change of E|.| as eps decreases",
                                      worst_step, "lt", 0.0, {"replicas": reps}, runtime=dt_,
                                      note="means " + ", ".join(f"{m:.4g}" for m in means)))
    _write_rows(os.path.join(out, "rate_limit.csv"), ["j", "r", "epsilon", "mean_abs_error"], rows)
    return reports


# -- 4, 5: the limit process Z -----------------------------------------------------------------


def _z_comparison(cfg, s, model, alpha, a_lambda, tag):
    n, eps, r, m = (_get(cfg, s, k) for k in ("n", "epsilon", "r", "samples"))

    def coal(i, rng):
        h = simulate(n, model, rng, horizon=eps * 1.0000001)
        return int(extract_Z(h, eps)(r))

    emp = np.array(_replicate(cfg, f"{tag}/coalescent", m, coal))
    lim = limits.sample_Z_values(alpha, a_lambda, [r], m, stream(cfg.seed, f"{tag}/limit"))[:, 0]
    return emp, lim


def suite_kingman_z(cfg, out):
    s = "kingman_z"
    t0 = time.perf_counter()
    emp, lim = _z_comparison(cfg, s, lc.LambdaModel.kingman(), 2.0, 1.0, "kingman_z")
    dt_ = time.perf_counter() - t0
    size = {"coalescent": emp.size, "limit": lim.size}
    p1, tol = _get(cfg, s, "p1"), _get(cfg, s, "p1_tol")
    _write_rows(os.path.join(out, "kingman_z.csv"), ["sample", "extract_Z", "simulate_Z"],
                [(i, int(a), int(b)) for i, (a, b) in enumerate(zip(emp, lim))])
    return [
        StatReport(s, "ks_extract_vs_limit", "two-sample KS", stats.ks_two_sample(emp, lim), "lt",
                   _get(cfg, s, "ks_max"), size, runtime=dt_),
        StatReport(s, "p_Z_equals_1_limit", "|P(Z=1) - 0.25|", abs(float(np.mean(lim == 1)) - p1), "le", tol, size),
        StatReport(s, "p_Z_equals_1_coalescent", "|P(Z=1) - 0.25|", abs(float(np.mean(emp == 1)) - p1), "le", tol,
                   size, role="diagnostic"),
    ]


def suite_beta_z(cfg, out):
    s = "beta_z"
    t0 = time.perf_counter()
    alpha = _get(cfg, s, "alpha")
    model = lc.LambdaModel.beta(alpha)
    emp, lim = _z_comparison(cfg, s, model, alpha, model.a_lambda, "beta_z")
    alt = limits.sample_Z_values(alpha, lc.scale_invariant_a_lambda(alpha), [_get(cfg, s, "r")],
                                 emp.size, stream(cfg.seed, "beta_z/limit_alt"))[:, 0]
    dt_ = time.perf_counter() - t0
    size = {"coalescent": emp.size, "limit": lim.size}
    reports = [
        StatReport(s, "ks_extract_vs_limit", "two-sample KS", stats.ks_two_sample(emp, lim), "lt",
                   _get(cfg, s, "ks_max"), size, runtime=dt_),
        StatReport(s, "ks_extract_vs_limit_scale_invariant_A", "two-sample KS",
                   stats.ks_two_sample(emp, alt), "lt", _get(cfg, s, "ks_max"), size, role="diagnostic"),
    ]
    _write_rows(os.path.join(out, "beta_z.csv"), ["sample", "extract_Z", "simulate_Z"],
                [(i, int(a), int(b)) for i, (a, b) in enumerate(zip(emp, lim))])
    # at the stated (n, eps) the block of 1 is mostly a singleton; a larger eps shows the trend
    de, dn = _get(cfg, s, "diag_epsilon"), _get(cfg, s, "diag_samples")
    n, r = _get(cfg, s, "n"), _get(cfg, s, "r")
    diag = np.array(_replicate(cfg, "beta_z/diag", dn, lambda i, rng: int(
        extract_Z(simulate(n, model, rng, horizon=de * 1.0000001), de)(r))))
    reports.append(StatReport(s, f"ks_eps{de}_vs_limit", "two-sample KS", stats.ks_two_sample(diag, lim), "lt",
                              _get(cfg, s, "ks_max"), {"coalescent": dn}, role="diagnostic"))
    reports.append(StatReport(s, f"ks_eps{de}_vs_limit_scale_invariant_A", "two-sample KS",
                              stats.ks_two_sample(diag, alt), "lt", _get(cfg, s, "ks_max"), {"coalescent": dn},
                              role="diagnostic"))
    M, paths = _get(cfg, s, "m_trunc"), _get(cfg, s, "tv_paths")
    rows = []
    for a in _get(cfg, s, "tv_alphas"):
        a_lam = lc.LambdaModel.beta(a).a_lambda if a < 2 else 1.0
        rs = _get(cfg, s, "tv_rs")
        t1 = time.perf_counter()
        vals = limits.sample_Z_values(a, a_lam, rs, paths, stream(cfg.seed, f"beta_z/tv{a}"), cap=M)
        for j, r in enumerate(rs):
            orc = limits.marginal_Z_oracle(a, a_lam, r, M, max_leak=1.0)
            ref = np.concatenate((orc.pmf, [orc.leak]))
            empirical = stats.empirical_pmf(vals[:, j], M)
            tv = stats.total_variation(empirical, ref)
            rows.append((a, r, tv, orc.leak))
            reports.append(StatReport(s, f"tv_alpha{a}_r{r}", "TV(simulate_Z, forward-equation oracle)", tv,
                                      "lt", _get(cfg, s, "tv_max"),
                                      {"paths": paths, "m_trunc": M}, runtime=time.perf_counter() - t1,
                                      note=f"mass above M: {orc.leak:.3g}"))
    _write_rows(os.path.join(out, "beta_z_tv.csv"), ["alpha", "r", "tv", "oracle_mass_above_M"], rows)
    return reports


# -- 6: frequency of the block of 1 -----------------------------------------------------------------


def suite_frequency(cfg, out):
    s = "frequency"
    t0 = time.perf_counter()
    n, eps, m = (_get(cfg, s, k) for k in ("n", "epsilon", "samples"))
    model = lc.LambdaModel.kingman()

    def one(i, rng):
        h = simulate(n, model, rng, horizon=eps * 1.0000001)
        return frequency_of_one(h, eps) / eps

    x = np.array(_replicate(cfg, "frequency", m, one))
    dt_ = time.perf_counter() - t0
    gamma22 = sps.gamma(2.0, scale=2.0).cdf
    t0x = _get(cfg, s, "t0")
    xr = _get(cfg, s, "x_replicas")
    counts = np.array(_replicate(cfg, "frequency/X", xr,
                                 lambda i, rng: limits.simulate_X(t0x, math.e * t0x, rng).metadata["jumps"]))
    _write_rows(os.path.join(out, "frequency.csv"), ["replica", "scaled_frequency"], list(enumerate(x)))
    size = {"replicas": m, "n": n}
    return [
        StatReport(s, "ks_scaled_frequency_vs_gamma22", "one-sample KS", stats.ks_one_sample(x, gamma22), "lt",
                   _get(cfg, s, "ks_max"), size, runtime=dt_),
        StatReport(s, "ks_4x_scaled_frequency_vs_gamma22", "one-sample KS", stats.ks_one_sample(4 * x, gamma22),
                   "lt", _get(cfg, s, "ks_max"), size, role="diagnostic"),
        StatReport(s, "x_jump_count_poisson", "chi-square p-value, Poisson(2) on [t0, e t0]",
                   stats.poisson_gof_pvalue(counts, 2.0), "gt", _get(cfg, s, "p_min"), {"replicas": xr}),
    ]


# -- 7: GH engine -----------------------------------------------------------------------------------


def suite_gh(cfg, out):
    s = "gh"
    t0 = time.perf_counter()
    rng = stream(cfg.seed, "gh")
    tl, pl = _get(cfg, s, "triple_leaves"), _get(cfg, s, "pair_leaves")

    def rand(leaves):
        return random_dendrogram(int(rng.integers(1, leaves + 1)), rng)

    asym, tri = 0.0, -np.inf
    for _ in range(_get(cfg, s, "triples")):
        X, Y, Z = rand(tl), rand(tl), rand(tl)
        xy, yx = ghp.gh_exact(X, Y), ghp.gh_exact(Y, X)
        xz, yz = ghp.gh_exact(X, Z), ghp.gh_exact(Y, Z)
        asym = max(asym, abs(xy - yx))
        tri = max(tri, xz - (xy + yz), xy - (xz + yz), yz - (xy + xz))
    two = 0.0
    for _ in range(100):
        a, b = rng.exponential(size=2)
        X = Dendrogram(2, ((0, 1),), np.array([a]))
        Y = Dendrogram(2, ((0, 1),), np.array([b]))
        two = max(two, abs(ghp.gh_exact(X, Y) - abs(a - b) / 2))
    miss = 0.0
    for _ in range(_get(cfg, s, "pairs")):
        X, Y = rand(pl), rand(pl)
        lo, hi = ghp.gh_bounds(X, Y)
        g = ghp.gh_exact(X, Y)
        miss = max(miss, lo - g, g - hi)
    dt_ = time.perf_counter() - t0
    return [
        StatReport(s, "symmetry", "max |gh(X,Y) - gh(Y,X)|", asym, "le", 0.0,
                   {"triples": _get(cfg, s, "triples")}, runtime=dt_),
        StatReport(s, "triangle", "max triangle excess", float(tri), "le", _get(cfg, s, "tri_tol")),
        StatReport(s, "two_point", "max |gh - |a-b|/2|", two, "le", 0.0, {"pairs": 100}),
        StatReport(s, "bounds_bracket", "max bracket violation", float(miss), "le", 0.0,
                   {"pairs": _get(cfg, s, "pairs")}),
    ]


# -- 8: local times of excursions ---------------------------------------------------------------------


def suite_local_time(cfg, out):
    s = "local_time"
    dt, reps = _get(cfg, s, "dt"), _get(cfg, s, "replicas")
    t0 = time.perf_counter()
    cond = np.array(_replicate(cfg, "local_time/conditioned", reps, lambda i, rng: ex.local_time_at(
        ex.conditioned_excursion(rng, dt).values, dt, 1.0)))
    t1 = time.perf_counter()
    strad = np.array(_replicate(cfg, "local_time/straddling", reps, lambda i, rng: ex.local_time_at(
        ex.sample_straddling_excursion(dt, rng).values, dt, 1.0)))
    t2 = time.perf_counter()
    _write_rows(os.path.join(out, "local_time.csv"), ["replica", "ell1_conditioned", "ell1_straddling"],
                [(i, cond[i], strad[i]) for i in range(reps)])
    size = {"replicas": reps, "dt": dt}
    ks = _get(cfg, s, "ks_max")
    return [
        StatReport(s, "conditioned_vs_exp", "one-sample KS vs Exp(mean 2)",
                   stats.ks_one_sample(cond, sps.expon(scale=2.0).cdf), "lt", ks, size, runtime=t1 - t0),
        StatReport(s, "straddling_vs_gamma22", "one-sample KS vs Gamma(2, scale 2)",
                   stats.ks_one_sample(strad, sps.gamma(2.0, scale=2.0).cdf), "lt", ks, size, runtime=t2 - t1),
    ]


# -- 9: deep excursions in a local-time window ----------------------------------------------------------


def suite_hausdorff(cfg, out):
    s = "hausdorff"
    t0 = time.perf_counter()
    reps, tol = _get(cfg, s, "replicas"), _get(cfg, s, "tol")
    pr, pdt = _get(cfg, s, "path_replicas"), _get(cfg, s, "path_dt")
    reports, rows = [], []
    for dl in _get(cfg, s, "ell_gaps"):
        for eta in _get(cfg, s, "etas"):
            tag = f"hausdorff/{dl}/{eta}"
            p = ex.excursion_hausdorff_law(dl, eta, reps, stream(cfg.seed, tag))
            pp = ex.excursion_hausdorff_path_check(dl, eta, pr, pdt, stream(cfg.seed, tag + "/path"))
            stated, ito = math.exp(-dl / eta), math.exp(-dl / (2 * eta))
            rows.append((dl, eta, p, pp, stated, ito))
            reports.append(StatReport(s, f"dl{dl}_eta{eta}", "|P_hat - exp(-dl/eta)|", abs(p - stated), "le", tol,
                                      {"replicas": reps}))
            reports.append(StatReport(s, f"dl{dl}_eta{eta}_ito", "|P_hat - exp(-dl/(2 eta))|", abs(p - ito), "le",
                                      tol, {"replicas": reps}, role="diagnostic"))
            se = 3 * math.sqrt(ito * (1 - ito) / pr) + 0.02
            reports.append(StatReport(s, f"dl{dl}_eta{eta}_path", "|P_path - exp(-dl/(2 eta))|", abs(pp - ito),
                                      "le", se, {"replicas": pr, "dt": pdt}, role="diagnostic"))
    reports[0].runtime = time.perf_counter() - t0
    _write_rows(os.path.join(out, "hausdorff.csv"),
                ["ell_gap", "eta", "poisson_mc", "path_mc", "exp_minus_dl_over_eta", "exp_minus_dl_over_2eta"], rows)
    return reports


# -- 10: Brownian construction vs the limit tree -----------------------------------------------------------


def _tree_pair(S, zrng, max_points, ball_eta, tree_eta):
    """Coarsen the W-space and a limit tree grown on its ball-count path."""
    zp = ex.ball_count_path(S, tree_eta)
    T = limits.build_limit_tree(zp, tree_eta, zrng)
    T = T.with_masses(np.ones(T.n_leaves))
    a = ex.truncate_by_mass(S.space_from_balls(ball_eta), max_points)
    b = ex.truncate_by_mass(T.space_from_balls(ball_eta), max_points)
    return a, b


def suite_brownian_tree(cfg, out):
    s = "brownian_tree"
    t0 = time.perf_counter()
    dt, reps, rs = _get(cfg, s, "dt"), _get(cfg, s, "replicas"), _get(cfg, s, "rs")
    ghn, mp = _get(cfg, s, "gh_replicas"), _get(cfg, s, "max_points")
    be, te, ff = _get(cfg, s, "ball_eta"), _get(cfg, s, "tree_eta"), _get(cfg, s, "fine_factor")

    def one(i, rng):
        W = ex.sample_W_ball(dt, rng)
        S = ex.limit_space_from_W(W)
        counts = [S.ball_count(1.0 - r) for r in rs]
        if i >= ghn:
            return counts, None
        Sz = ex.limit_space_from_W(W, route="zeros")
        routes = ghp.gh_exact(ex.truncate_by_mass(S, mp), ex.truncate_by_mass(Sz, mp))
        tree_seed = int(rng.integers(2**62))
        a, b = _tree_pair(S, np.random.default_rng(tree_seed), mp, be, te)
        coarse = ghp.pointed_gh(a, b)
        Wf = ex.refine_path(W, rng, ff)
        Sf = ex.limit_space_from_W(Wf)
        a, b = _tree_pair(Sf, np.random.default_rng(tree_seed), mp, be, te)
        fine = ghp.pointed_gh(a, b)
        return counts, (coarse, fine, routes)

    res = _replicate(cfg, "brownian_tree", reps, one)
    counts = np.array([c for c, _ in res])
    gh = np.array([g for _, g in res if g is not None])
    zlim = limits.sample_Z_values(2.0, 1.0, rs, reps, stream(cfg.seed, "brownian_tree/limit"))
    dt_ = time.perf_counter() - t0
    reports = []
    for j, r in enumerate(rs):
        reports.append(StatReport(s, f"ks_ball_count_r{r}", "two-sample KS vs simulate_Z(alpha=2)",
                                  stats.ks_two_sample(counts[:, j], zlim[:, j]), "lt", _get(cfg, s, "ks_max"),
                                  {"replicas": reps, "dt": dt}, runtime=dt_))
    med_c, med_f = float(np.median(gh[:, 0])), float(np.median(gh[:, 1]))
    reports.append(StatReport(s, "gh_median", "median pointed GH (8-leaf truncations)", med_c, "lt",
                              _get(cfg, s, "gh_median_max"), {"replicas": int(gh.shape[0]), "dt": dt}))
    reports.append(StatReport(s, "gh_median_refined", "median GH at dt/fine_factor minus median at dt",
                              med_f - med_c, "lt", 0.0, {"replicas": int(gh.shape[0]), "dt": dt / ff},
                              note=f"medians {med_c:.4g} -> {med_f:.4g}"))
    reports.append(StatReport(s, "route_agreement", "max GH between the two constructions",
                              float(gh[:, 2].max()), "le", 2 * math.sqrt(dt), role="diagnostic"))
    _write_rows(os.path.join(out, "brownian_tree.csv"), ["replica"] + [f"balls_r{r}" for r in rs],
                [(i, *counts[i]) for i in range(reps)])
    _write_rows(os.path.join(out, "brownian_tree_gh.csv"), ["replica", "gh_dt", "gh_refined", "gh_routes"],
                [(i, *gh[i]) for i in range(gh.shape[0])])
    return reports


SUITES = {
    "rates": suite_rates, "cdi": suite_cdi, "rate_limit": suite_rate_limit, "kingman_z": suite_kingman_z,
    "beta_z": suite_beta_z, "frequency": suite_frequency, "gh": suite_gh, "local_time": suite_local_time,
    "hausdorff": suite_hausdorff, "brownian_tree": suite_brownian_tree,
}


def run_suite(cfg, names=None):
    """Run the named suites (default ``cfg.suites``), write artifacts and return all reports."""
    names = cfg.suites if names is None else names
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites: {', '.join(unknown)}")
    os.makedirs(cfg.out, exist_ok=True)
    reports = []
    for name in names:
        t0 = time.perf_counter()
        try:
            reports.extend(SUITES[name](cfg, cfg.out))
        except (MemoryError, NumericError) as exc:
            reports.append(StatReport(name, "all", "not run", math.nan, "le", 0.0, status="not run",
                                      runtime=time.perf_counter() - t0, note=str(exc)))
    write_summary(reports, cfg.out)
    return reports


def write_summary(reports, out):
    rows = []
    for r in reports:
        d = asdict(r)
        if isinstance(d["threshold"], tuple):
            d["threshold"] = list(d["threshold"])
        rows.append(d)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(rows, fh, indent=2, default=float)
    _write_rows(os.path.join(out, "reports.csv"),
                ["suite", "name", "statistic", "value", "comparator", "threshold", "passed", "role", "status"],
                [(r.suite, r.name, r.statistic, float(r.value), r.comparator, str(r.threshold), r.passed,
                  r.role, r.status) for r in reports])


def exit_code(reports):
    return int(any(not r.passed for r in reports if r.role == "criterion"))
