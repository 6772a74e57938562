"""Figure rendering for campaign curves and probe tables.

Uses the Agg backend so the CLI can emit PNGs next to its CSV/JSON output on
headless machines.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _new_axes():
    fig, ax = plt.subplots(figsize=(4.8, 3.4), dpi=150)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_curve_figures(rows, out_base, sweep_label: str = "N_S") -> list[Path]:
    """Three PNGs (success rate, L0 scores, MP cost) next to the curve table."""
    out_base = Path(out_base)
    xs = [r["sweep"] for r in rows]
    paths = []

    fig, ax = _new_axes()
    ax.plot(xs, [r["sr"] for r in rows], marker="o", color="tab:blue")
    ax.set_xlabel(sweep_label)
    ax.set_ylabel("success rate [%]")
    ax.set_ylim(-2, 105)
    paths.append(_save(fig, out_base.with_name(out_base.stem + "_sr.png")))

    fig, ax = _new_axes()
    ax.plot(xs, [r["mean_l0"] for r in rows], marker="o", label="mean", color="tab:red")
    ax.plot(xs, [r["median_l0"] for r in rows], marker="s", label="median", color="tab:orange")
    ax.set_xlabel(sweep_label)
    ax.set_ylabel("L0 over successes")
    ax.legend()
    paths.append(_save(fig, out_base.with_name(out_base.stem + "_l0.png")))

    fig, ax = _new_axes()
    ax.plot(xs, [r["mean_mp"] for r in rows], marker="o", color="tab:green")
    ax.set_xlabel(sweep_label)
    ax.set_ylabel("mean model propagations")
    paths.append(_save(fig, out_base.with_name(out_base.stem + "_mp.png")))
    return paths


def render_probe_figure(rows, path) -> Path:
    """Predicted vs empirical probability shift, one error-bar series per family."""
    path = Path(path)
    fig, ax = _new_axes()
    families = sorted({r["family"] for r in rows})
    colors = {"folded-gaussian": "tab:red", "gaussian": "tab:blue"}
    for fam in families:
        sub = sorted((r for r in rows if r["family"] == fam), key=lambda r: r["theta"])
        thetas = [r["theta"] for r in sub]
        ax.errorbar(
            thetas,
            [r["empirical"] for r in sub],
            yerr=[3 * r["std_err"] for r in sub],
            marker="o",
            capsize=3,
            label=f"{fam} empirical",
            color=colors.get(fam),
        )
        if fam == "folded-gaussian":
            ax.plot(
                thetas,
                [r["predicted"] for r in sub],
                marker="x",
                linestyle="--",
                label="first-order prediction",
                color="black",
            )
    ax.set_xscale("log")
    ax.set_xlabel("theta")
    ax.set_ylabel("mean probability shift")
    ax.legend(fontsize=8)
    return _save(fig, path)
