"""Command-line front door.

Subcommands: simulate, w2, cond-w2, coeffs, rate, be, quantile-check,
oracle, report.  Exit codes: 0 success, 2 config error, 3 numeric
precondition violation, 4 acceptance-threshold failure in ``report --check``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import coefficients as co
from . import harness as hn
from . import oracle as orc
from . import processes as pr
from ._seeding import derive_seed, rng_for
from .transport import LatticeDist, PreconditionError, verify_prop_quantile

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_CHECK_FAILED = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="override config output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="compute threads (results are thread-count independent)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="w2lab",
                                 description="CLT transport-rate laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write one stationary sample path")
    _add_common(p)
    p.add_argument("--n", type=int, default=1024)

    p = sub.add_parser("w2", help="unconditional W2 grid estimate")
    _add_common(p)
    p.add_argument("--samples", type=int, default=None, help="override pooled samples")

    p = sub.add_parser("cond-w2", help="conditional W2 grid estimate")
    _add_common(p)

    p = sub.add_parser("coeffs", help="dependence coefficient tables")
    _add_common(p)

    p = sub.add_parser("rate", help="fit a log-log rate to a CSV of (n, value)")
    p.add_argument("--in", dest="infile", required=True,
                   help="CSV with columns n,value")

    p = sub.add_parser("be", help="Berry-Esseen grid estimate")
    _add_common(p)

    p = sub.add_parser("quantile-check", help="quantile-gap bound verification")
    _add_common(p)
    p.add_argument("--n", type=int, default=None,
                   help="oracle law size (finite chains); default: last n_grid entry")
    p.add_argument("--p", type=int, default=2, dest="order")
    p.add_argument("--random", type=int, default=0,
                   help="additionally check this many random two-point laws")

    p = sub.add_parser("oracle", help="exact conditional-law battery (lattice chains)")
    _add_common(p)

    p = sub.add_parser("report", help="full experiment battery with CSV/JSON/figures")
    _add_common(p)
    p.add_argument("--check", action="store_true",
                   help="exit 4 when any acceptance threshold fails")
    return ap


def _load(args) -> hn.ExperimentConfig:
    cfg = hn.load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["outputs"] = args.out
    if updates:
        d = cfg.to_dict()
        d.update(updates)
        cfg = hn.ExperimentConfig.from_dict(d)
    if getattr(args, "threads", None):
        import numba

        numba.set_num_threads(max(1, args.threads))
    return cfg


def _outdir(cfg: hn.ExperimentConfig) -> Path:
    d = Path(cfg.outputs)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    path = pr.sample_path(cfg.model, args.n, cfg.seed)
    out = _outdir(cfg) / "path.csv"
    hn.write_csv(out, ["k", "x"], [[k + 1, x] for k, x in enumerate(path)])
    print(f"wrote {args.n} steps to {out}")
    return EXIT_OK


def _resolve_sigma2(cfg: hn.ExperimentConfig) -> float:
    value, _ = cfg.sigma2_source.resolve(cfg.model, cfg.seed)
    return value


def _cmd_w2(args) -> int:
    cfg = _load(args)
    samples = args.samples or cfg.pooled_samples
    sigma2 = _resolve_sigma2(cfg)
    grid = hn.estimate_w2_grid(cfg.model, cfg.n_grid, samples, sigma2,
                               derive_seed(cfg.seed, 10, 0),
                               bias_guard=cfg.bias_guard)
    out = _outdir(cfg) / "w2_grid.csv"
    hn.write_csv(out, ["n", "w2", "se", "excluded"],
                 [[p.n, p.w2, p.se, int(p.excluded)] for p in grid.points])
    for p in grid.points:
        print(f"n={p.n:>8d}  w2={p.w2:.6g}  se={p.se:.2g}"
              + ("  [bias-dominated]" if p.excluded else ""))
    if grid.fit:
        print(f"slope {grid.fit.slope:.4f} ± {grid.fit.stderr_slope:.4f} "
              f"(bias proxy {grid.bias_proxy:.3g})")
    return EXIT_OK


def _cmd_cond_w2(args) -> int:
    cfg = _load(args)
    sigma2 = _resolve_sigma2(cfg)
    rows = []
    for n in cfg.n_grid:
        v, se = hn.estimate_conditional_w2(cfg.model, n, cfg.conditional_states,
                                           cfg.conditional_paths, sigma2,
                                           derive_seed(cfg.seed, 20, n))
        rows.append([n, v, se])
        print(f"n={n:>8d}  E[W2^2|F0]={v:.6g}  se={se:.2g}")
    out = _outdir(cfg) / "cond_w2_grid.csv"
    hn.write_csv(out, ["n", "w2_sq", "se"], rows)
    return EXIT_OK


def _cmd_coeffs(args) -> int:
    cfg = _load(args)
    model = cfg.model
    tables = []
    if isinstance(model, pr.FiniteMarkovSpec):
        tables.append(co.theta_table(model, cfg.coefficient_lags, 1, 1))
        tables.append(co.theta_table(model, cfg.coefficient_lags, 2, 2))
        tables.append(co.alpha_table(model, cfg.coefficient_lags, 1))
    elif isinstance(model, pr.CircleWalkSpec):
        tables.append(co.theta_table(model, cfg.coefficient_lags, 1, 1,
                                     estimator="monte_carlo",
                                     seed=derive_seed(cfg.seed, 50)))
    else:
        raise PreconditionError("coefficient tables need a Markov-type model")
    out = _outdir(cfg) / "coefficients.csv"
    hn.write_csv(out, co.CSV_HEADER,
                 [row for t in tables for row in t.csv_rows()])
    print(f"wrote {sum(len(t.lags) for t in tables)} rows to {out}")
    return EXIT_OK


def _cmd_rate(args) -> int:
    rows = []
    with open(args.infile) as fh:
        import csv as _csv

        rd = _csv.DictReader(fh)
        if rd.fieldnames is None or not {"n", "value"} <= set(rd.fieldnames):
            raise hn.ConfigError("rate input needs columns n,value")
        for row in rd:
            rows.append((float(row["n"]), float(row["value"])))
    fit = hn.fit_rate(rows)
    print(f"slope {fit.slope:.6f} ± {fit.stderr_slope:.6f}  "
          f"intercept {fit.intercept:.6f}  r2 {fit.r2:.4f}")
    return EXIT_OK


def _cmd_be(args) -> int:
    cfg = _load(args)
    rows = []
    for n in cfg.n_grid:
        d, band = hn.berry_esseen_mc(cfg.model, n, cfg.pooled_samples,
                                     derive_seed(cfg.seed, 30, n))
        rows.append([n, d, band])
        print(f"n={n:>8d}  Delta_n={d:.6g}  dkw_band={band:.4g}")
    out = _outdir(cfg) / "berry_esseen.csv"
    hn.write_csv(out, ["n", "delta_n", "dkw_band"], rows)
    return EXIT_OK


def _cmd_quantile_check(args) -> int:
    cfg = _load(args)
    order = args.order
    rows = []
    violations = 0
    u_grid = [u for u in cfg.u_grid if u <= 0.5] or [0.05, 0.1, 0.25, 0.5]
    if isinstance(cfg.model, pr.FiniteMarkovSpec):
        n = args.n or cfg.n_grid[-1]
        law = orc.conditional_sn_law(cfg.model, n)
        mix = law.mixture_lattice()
        sigma_n = math.sqrt(co.var_sn(cfg.model, n))
        lat = LatticeDist(mix.offset / sigma_n, mix.step / sigma_n, mix.probs)
        for rep in verify_prop_quantile(lat, u_grid, order):
            rows.append(["oracle", n, rep.u, rep.lhs, rep.rhs, int(rep.violated)])
            violations += rep.violated
    rng = rng_for(cfg.seed, 0x0AD)
    for i in range(args.random):
        sigma2 = float(rng.uniform(0.2, 2.0))
        beta3 = float(rng.uniform(-0.5, 0.5))
        tp = pr.construct_two_point(sigma2, beta3)
        probs = np.array([tp.p_mass, 1.0 - tp.p_mass])
        step = tp.b1 - tp.b2
        lat = LatticeDist(tp.b2, step, probs[::-1])
        for rep in verify_prop_quantile(lat, u_grid, order):
            rows.append([f"random_{i}", 0, rep.u, rep.lhs, rep.rhs, int(rep.violated)])
            violations += rep.violated
    if not rows:
        raise PreconditionError("quantile-check needs a finite chain or --random > 0")
    out = _outdir(cfg) / "quantile_check.csv"
    hn.write_csv(out, ["source", "n", "u", "lhs", "rhs", "violated"], rows)
    print(f"{len(rows)} comparisons, {violations} violations -> {out}")
    return EXIT_OK if violations == 0 else EXIT_PRECONDITION


def _cmd_oracle(args) -> int:
    cfg = _load(args)
    if not isinstance(cfg.model, pr.FiniteMarkovSpec):
        raise PreconditionError("the oracle requires a finite Markov model")
    sigma2 = _resolve_sigma2(cfg)
    grid = cfg.oracle_n_grid or cfg.n_grid
    outd = _outdir(cfg)
    rows = []
    for n in grid:
        law = orc.conditional_sn_law(cfg.model, n)
        law.to_csv(outd / f"conditional_law_n{n}.csv")
        rows.append([n, orc.exact_conditional_w2(cfg.model, n, sigma2, law),
                     orc.exact_unconditional_w2(cfg.model, n, sigma2, law),
                     orc.exact_berry_esseen(cfg.model, n, law)])
        print(f"n={n:>6d}  E[W2^2|F0]={rows[-1][1]:.6g}  "
              f"W2^2={rows[-1][2]:.6g}  Delta_n={rows[-1][3]:.6g}")
    hn.write_csv(outd / "oracle_grid.csv",
                 ["n", "cond_w2_sq", "uncond_w2_sq", "berry_esseen"], rows)
    return EXIT_OK


def _cmd_report(args) -> int:
    cfg = _load(args)
    summary = hn.run_report(cfg)
    for c in summary["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}: value={c.get('value')}, rule={c['rule']}")
    print(f"report written to {cfg.outputs}/report.json")
    if args.check and not summary["all_checks_passed"]:
        return EXIT_CHECK_FAILED
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "w2": _cmd_w2,
    "cond-w2": _cmd_cond_w2,
    "coeffs": _cmd_coeffs,
    "rate": _cmd_rate,
    "be": _cmd_be,
    "quantile-check": _cmd_quantile_check,
    "oracle": _cmd_oracle,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except hn.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
