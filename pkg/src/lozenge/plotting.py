"""PNG figures for the CLI reports (matplotlib, headless backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .fluctuations import MomentReport  # noqa: E402
from .polygon import LimitPolygon  # noqa: E402
from .render import boundary_samples  # noqa: E402


def plot_moments(reports: Sequence[MomentReport], path: str | Path) -> Path:
    """Scaled moments and gaps against ``N``."""
    ok = [r for r in reports if r.moment is not None]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    if ok:
        Ns = [r.N for r in ok]
        ax1.plot(Ns, [r.scaled_moment for r in ok], "o-", label="finite N")
        if any(r.stderr for r in ok):
            ax1.errorbar(Ns, [r.scaled_moment for r in ok], yerr=[r.stderr or 0 for r in ok], fmt="none", capsize=3)
        ax1.axhline(ok[0].gff_prediction, color="k", ls="--", label="Gaussian prediction")
        ax2.plot(Ns, [r.scaled_gap for r in ok], "s-")
    ax1.set_xlabel("N")
    ax1.set_ylabel(r"$\pi^{s/2}\,$moment")
    ax1.legend(fontsize=8)
    ax2.set_xlabel("N")
    ax2.set_ylabel("gap")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_frozen_boundary(lp: LimitPolygon, M: int, path: str | Path) -> Path:
    """Polygon in ``(chi, eta)`` coordinates with the frozen boundary inside."""
    fig, ax = plt.subplots(figsize=(5, 4))
    vs = lp.vertices()
    ax.plot([v[0] for v in vs + vs[:1]], [v[1] for v in vs + vs[:1]], "k-", lw=1.2)
    pts = boundary_samples(lp, M)
    if pts:
        ax.plot([p[1] for p in pts], [p[2] for p in pts], "r-", lw=1)
    ax.set_xlabel(r"$\chi$")
    ax.set_ylabel(r"$\eta$")
    ax.set_aspect("equal")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
