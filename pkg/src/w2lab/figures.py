"""Figure rendering for the report path.

Each renderer takes the report summary structures and writes a PNG next to
the delimited output.  Pure presentation; nothing here feeds back into the
numbers.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def w2_loglog_figure(grid: dict, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    pts = grid["points"]
    kept = [(p["n"], p["w2"], p["se"]) for p in pts if not p["excluded"]]
    cut = [(p["n"], p["w2"], p["se"]) for p in pts if p["excluded"]]
    if kept:
        n, w, se = zip(*kept)
        ax.errorbar(n, w, yerr=se, fmt="o", ms=4, capsize=2, label="included")
    if cut:
        n, w, se = zip(*cut)
        ax.errorbar(n, w, yerr=se, fmt="o", ms=4, mfc="none", capsize=2,
                    color="gray", label="bias-dominated")
    fit = grid.get("fit")
    if fit is not None:
        xs = np.array([p["n"] for p in pts], dtype=float)
        ys = np.exp(fit["intercept"]) * xs ** fit["slope"]
        ax.plot(xs, ys, "--", lw=1,
                label=f"slope {fit['slope']:.3f} ± {fit['stderr_slope']:.3f}")
    if grid.get("bias_proxy", 0) > 0:
        ax.axhline(grid["bias_proxy"], color="red", lw=0.8, ls=":",
                   label="bias proxy")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(r"$W_2$ estimate")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cond_w2_figure(points: list, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    n = [p["n"] for p in points]
    v = [p["w2_sq"] for p in points]
    se = [p["se"] for p in points]
    ax.errorbar(n, v, yerr=se, fmt="s", ms=4, capsize=2)
    ax.set_xscale("log", base=2)
    if all(x > 0 for x in v):
        ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(r"$E\,W_2^2$ (conditional)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def berry_esseen_figure(points: list, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    n = [p["n"] for p in points]
    ax.loglog(n, [p["delta_n"] for p in points], "o-", ms=4, label=r"$\Delta_n$")
    ax.loglog(n, [p["dkw_band"] for p in points], ":", color="gray", label="DKW band")
    ax.set_xlabel("n")
    ax.set_ylabel("Kolmogorov distance")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def quantile_gap_figure(qpoints: list, spoints: list, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot([p[0] for p in qpoints], [p[1] for p in qpoints], "o-", ms=4,
            label="quantile gap")
    ax.plot([p[0] for p in spoints], [p[1] for p in spoints], "s--", ms=4,
            label="superquantile gap")
    ax.set_xlabel("u")
    ax.set_ylabel("gap")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def coefficient_figure(rows: list, path) -> None:
    """rows: (kind, p, q, k, value) tuples grouped by (kind, p, q)."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    series: dict = {}
    for kind, p, q, k, v in rows:
        series.setdefault(f"{kind}({p},{q})" if q != "" else f"{kind}({p})",
                          []).append((k, v))
    for label, pts in series.items():
        pts.sort()
        ks = [k for k, _ in pts]
        vs = [max(v, 1e-300) for _, v in pts]
        ax.semilogy(ks, vs, "o-", ms=3, label=label)
    ax.set_xlabel("lag k")
    ax.set_ylabel("coefficient")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_figures(summary: dict, outdir) -> list[str]:
    """Render every applicable figure for a report summary; returns paths."""
    outdir = Path(outdir)
    produced = []

    fig_path = outdir / "w2_loglog.png"
    w2_loglog_figure(summary["w2_grid"], fig_path)
    produced.append(str(fig_path))

    cond = summary.get("conditional_w2", {})
    if cond.get("status") == "ok" and cond.get("points"):
        fig_path = outdir / "cond_w2.png"
        cond_w2_figure(cond["points"], fig_path)
        produced.append(str(fig_path))

    if summary.get("berry_esseen"):
        fig_path = outdir / "berry_esseen.png"
        berry_esseen_figure(summary["berry_esseen"], fig_path)
        produced.append(str(fig_path))

    if summary.get("quantile_gaps_mc"):
        fig_path = outdir / "quantile_gaps.png"
        quantile_gap_figure(summary["quantile_gaps_mc"]["points"],
                            summary["superquantile_gaps_mc"]["points"], fig_path)
        produced.append(str(fig_path))

    oracle = summary.get("oracle", {})
    if oracle.get("status") == "ok":
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        n = [p["n"] for p in oracle["points"]]
        ax.loglog(n, [p["cond_w2_sq"] for p in oracle["points"]], "o-", ms=4,
                  label=r"exact $E\,W_2^2$ cond.")
        ax.loglog(n, [p["uncond_w2_sq"] for p in oracle["points"]], "s--", ms=4,
                  label=r"exact $W_2^2$ uncond.")
        ref = oracle["points"][0]["cond_w2_sq"] * n[0] / np.array(n, dtype=float)
        ax.loglog(n, ref, ":", color="gray", label=r"$n^{-1}$ reference")
        ax.set_xlabel("n")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig_path = outdir / "oracle_rates.png"
        fig.savefig(fig_path, dpi=150)
        plt.close(fig)
        produced.append(str(fig_path))
    return produced
