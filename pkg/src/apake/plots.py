"""Figure rendering for the experiment report paths.

Report subcommands write delimited output; these helpers render the matching
matplotlib figures next to it.  The Agg backend is forced so rendering works
headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .redball import MonteCarloResult, RedBallInstance, theta_closed_form


def save_redball_figure(
    inst: RedBallInstance,
    empirical: MonteCarloResult | None,
    bound: float | None,
    path: str,
) -> str:
    """Win probability of the sequential strategy as a function of the draw
    budget, with the evaluated instance marked."""
    t_max = sum(inst.boxes[: inst.ell]) if inst.ell else inst.t + 1
    ts = list(range(0, max(t_max, inst.t) + 2))
    curve = [float(theta_closed_form(RedBallInstance(inst.boxes, t, inst.ell)))
             for t in ts]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.step(ts, curve, where="post", label="exact tail probability")
    ax.axvline(inst.t, color="gray", linestyle=":", label=f"budget t={inst.t}")
    if empirical is not None:
        ax.errorbar([inst.t], [empirical.frequency], yerr=[3 * empirical.sigma],
                    fmt="o", capsize=3, label="simulated (3-sigma)")
    if bound is not None:
        ax.axhline(bound, color="red", linestyle="--", label="tail bound")
    ax.set_xlabel("draw budget t")
    ax.set_ylabel(f"P[{inst.ell} reds within t draws]")
    ax.set_title(f"boxes={list(inst.boxes)}")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_attack_figure(scenario: str, metrics: dict, path: str) -> str:
    """Bar chart of the scenario's scalar metrics; histogram-valued metrics
    get their own panel."""
    hists = {k: v for k, v in metrics.items() if isinstance(v, dict)}
    scalars = {k: v for k, v in metrics.items()
               if isinstance(v, (int, float)) and not isinstance(v, bool)}

    ncols = 2 if hists else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5.5 * ncols, 4.0))
    axes = [axes] if ncols == 1 else list(axes)

    ax = axes[0]
    names = list(scalars)
    ax.barh(range(len(names)), [float(scalars[k]) for k in names])
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_title(f"{scenario}: metrics")
    ax.set_xscale("symlog")

    if hists:
        ax2 = axes[1]
        name, hist = next(iter(hists.items()))
        keys = sorted(hist)
        ax2.bar([str(k) for k in keys], [hist[k] for k in keys])
        ax2.set_title(name)
        ax2.set_xlabel("value")
        ax2.set_ylabel("count")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
