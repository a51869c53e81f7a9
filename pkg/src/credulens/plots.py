"""Optional static figures: byBot scatter, coverage curves and decile bars.

Needs matplotlib (``pip install credulens[plots]``).  Reports are the
contract; these images are a convenience.
"""
from __future__ import annotations

from pathlib import Path

from .analysis import BehaviorAnalysis
from .behavior import values_of


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("plots need matplotlib; install credulens[plots]") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_behavior(out_dir, analysis: BehaviorAnalysis) -> list[Path]:
    plt = _pyplot()
    out = Path(out_dir)
    paths = []
    meta = {"Software": None}  # keep PNG bytes free of version strings
    for action, a in analysis.actions.items():
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, metrics, marker in (("C", a.c, "o"), ("NC sample", a.nc_sample, "x")):
            vals = values_of(metrics)
            ax.scatter(range(len(vals)), vals, s=8, marker=marker, label=label)
        ax.set_xlabel("user")
        ax.set_ylabel(f"byBot {action}s (%)")
        ax.legend()
        paths.append(out / f"scatter_{action}.png")
        fig.savefig(paths[-1], metadata=meta)
        plt.close(fig)

        if a.coverage:
            fig, ax = plt.subplots(figsize=(6, 4))
            xs = [p.x for p in a.coverage]
            ax.plot(xs, [p.pct_c_ge for p in a.coverage], label="% C >= x")
            ax.plot(xs, [p.pct_nc_lt for p in a.coverage], label="% NC < x")
            if a.coverage_max is not None:
                ax.axvline(a.coverage_max.x, color="grey", linestyle=":")
            ax.set_xlabel(f"byBot {action}s (%)")
            ax.set_ylabel("users (%)")
            ax.legend()
            paths.append(out / f"coverage_{action}.png")
            fig.savefig(paths[-1], metadata=meta)
            plt.close(fig)

        fig, ax = plt.subplots(figsize=(7, 4))
        width = 0.8 / len(a.deciles)
        for i, (group, hist) in enumerate(a.deciles.items()):
            pos = [j + (i - (len(a.deciles) - 1) / 2) * width for j in range(len(hist.bins))]
            ax.bar(pos, hist.percentages, width=width, label=group)
            ax.set_xticks(range(len(hist.bins)), hist.bins, rotation=45, ha="right")
        ax.set_ylabel("users (%)")
        ax.legend()
        fig.tight_layout()
        paths.append(out / f"deciles_{action}.png")
        fig.savefig(paths[-1], metadata=meta)
        plt.close(fig)
    return paths
