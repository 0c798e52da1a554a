"""Figure rendering for the report paths (files only, Agg backend).

Each CSV artifact gets a companion PNG: campaigns show empirical failure
rates with Wilson bars against their bounds, urn checks show the relevant
empirical law against its limit.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .campaign import CampaignResult  # noqa: E402
from .urnlab import LimitCheckReport  # noqa: E402


def campaign_figure(result: CampaignResult, path) -> Path:
    """Failure rate (with Wilson interval) per checkpoint, one line per
    method, with the clamped bound drawn where it exists."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    methods = {}
    for row in result.rows:
        methods.setdefault((row.method, row.param), []).append(row)
    for (kind, param), rows in methods.items():
        rows.sort(key=lambda r: r.n)
        ns = [r.n for r in rows]
        rates = [r.fail_rate for r in rows]
        los = [r.fail_rate - r.wilson_lo for r in rows]
        his = [r.wilson_hi - r.fail_rate for r in rows]
        label = f"{kind}({param})" if param else kind
        line = ax.errorbar(ns, rates, yerr=[los, his], marker="o",
                           capsize=3, label=label)
        bounds = [r.bound_clamped for r in rows if r.bound_clamped is not None]
        if bounds:
            ax.hlines(bounds[-1], min(ns), max(ns),
                      colors=line.lines[0].get_color(), linestyles="dashed",
                      label=f"{label} bound")
    if len({r.n for r in result.rows}) > 1:
        ax.set_xscale("log")
    ax.set_xlabel("infected nodes n")
    ax.set_ylabel("rate")
    ax.set_title(result.campaign.name)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def urncheck_figure(report: LimitCheckReport, path) -> Path:
    """Companion figure for an urn check, keyed on the statistic kind."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if "product" in report.samples:
        b = np.sort(report.samples["product"])
        ecdf = np.arange(1, b.size + 1) / b.size
        ax.loglog(b, ecdf, label="empirical CDF of the product")
        grid = np.logspace(np.log10(max(b[0], 1e-12)), 0, 200)
        ax.loglog(grid, np.minimum(6.0 * grid ** 0.25, 1.0),
                  "--", label=r"6 s^(1/4) (clamped)")
        ax.set_xlabel("s")
        ax.set_ylabel("P{B <= s}")
    elif "fraction_heavy" in report.samples:
        for key, label in (("fraction_heavy", "start weight d-1"),
                           ("fraction_light", "start weight d-2")):
            f = np.sort(report.samples[key])
            ax.plot(f, np.arange(1, f.size + 1) / f.size, label=label)
        ax.set_xlabel("urn fraction")
        ax.set_ylabel("empirical CDF")
    elif "proportions" in report.samples:
        props = report.samples["proportions"]
        ax.hist(props[:, 0], bins=60, density=True, alpha=0.6,
                label="component 1 proportion")
        ax.set_xlabel("proportion")
        ax.set_ylabel("density")
    elif "sim_fraction" in report.samples:
        ax.hist(report.samples["sim_fraction"], bins=60, density=True,
                alpha=0.5, label="simulated slot fraction")
        ax.hist(report.samples["sampler_fraction"], bins=60, density=True,
                alpha=0.5, label="sampler")
        ax.set_xlabel("fraction")
        ax.set_ylabel("density")
    ax.legend(fontsize=8)
    ax.set_title(f"{report.statistic} ({'pass' if report.passed else 'FAIL'})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
