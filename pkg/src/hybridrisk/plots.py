"""Static SVG renderings of ROC, PR and reliability curves."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp so identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "hybridrisk"
matplotlib.rcParams["svg.fonttype"] = "none"


def _svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def roc_svg(curves: dict, title: str) -> str:
    """``curves`` maps a model label to ``(fpr, tpr, auroc)``."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for label, (x, y, area) in curves.items():
        ax.step(x, y, where="post", label=f"{label} (AUROC {area:.3f})")
    ax.plot([0, 1], [0, 1], ls="--", color="grey", lw=0.8, label="chance")
    ax.set(xlabel="False positive rate", ylabel="True positive rate", title=title,
           xlim=(0, 1), ylim=(0, 1.01))
    ax.legend(loc="lower right", fontsize=8)
    return _svg(fig)


def pr_svg(curves: dict, baseline: float, title: str) -> str:
    """``curves`` maps a model label to ``(recall, precision, ap)``."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for label, (r, p, area) in curves.items():
        ax.step(r, p, where="post", label=f"{label} (AP {area:.3f})")
    ax.axhline(baseline, ls="--", color="grey", lw=0.8,
               label=f"baseline = prevalence {baseline:.3f}")
    ax.set(xlabel="Recall", ylabel="Precision", title=title, xlim=(0, 1), ylim=(0, 1.01))
    ax.legend(loc="lower left", fontsize=8)
    return _svg(fig)


def reliability_svg(bins: dict, title: str) -> str:
    """``bins`` maps a model label to a reliability record (``to_dict`` form)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for label, b in bins.items():
        pts = [(m, o) for m, o, c in zip(b["mean_predicted"], b["observed"], b["counts"])
               if c > 0]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", label=label)
    ax.plot([0, 1], [0, 1], ls="--", color="grey", lw=0.8, label="ideal")
    ax.set(xlabel="Mean predicted probability", ylabel="Observed frequency", title=title,
           xlim=(0, 1), ylim=(0, 1))
    ax.legend(loc="upper left", fontsize=8)
    return _svg(fig)
