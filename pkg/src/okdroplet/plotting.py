"""PNG figures: droplet outlines, energy histories and sweep curves."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .domain import Domain, sphere_quadrature  # noqa: E402
from .errors import ConfigurationError  # noqa: E402
from .shape import DropletShape  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _save(fig, path: PathLike, dpi: int) -> Path:
    path = Path(path).absolute()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(str(path), dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    logger.info("Figure saved: %s", path)
    return path


def plot_outline(
    shapes: Sequence[DropletShape],
    path: PathLike,
    domain: Optional[Domain] = None,
    labels: Optional[Sequence[str]] = None,
    dpi: int = 120,
) -> Path:
    """Boundaries of planar droplets, with the reference ball B_r(p) dashed."""
    if any(shape.dim != 2 for shape in shapes):
        raise ConfigurationError("Outlines are drawn for planar droplets only")
    grid = sphere_quadrature(2, 256)
    fig, ax = plt.subplots(figsize=(6, 6))
    for idx, shape in enumerate(shapes):
        rho = shape.radial(shape.basis.on_grid(grid, derivatives=False))
        points = shape.center + rho[:, None] * grid.nodes
        closed = np.vstack([points, points[:1]])
        label = labels[idx] if labels else f"droplet {idx}"
        ax.plot(closed[:, 0], closed[:, 1], linewidth=2, label=label)
        ball = shape.center + shape.base_radius * grid.nodes
        ball = np.vstack([ball, ball[:1]])
        ax.plot(ball[:, 0], ball[:, 1], color="gray", linestyle="--", alpha=0.5, linewidth=1)
    if domain is not None and not domain.is_torus:
        boundary = domain.radius * np.vstack([grid.nodes, grid.nodes[:1]])
        ax.plot(boundary[:, 0], boundary[:, 1], color="black", linewidth=1)
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=10)
    ax.grid(True, alpha=0.3, linestyle=":")
    ax.set_title("Droplet outline", fontsize=14, fontweight="bold")
    return _save(fig, path, dpi)


def plot_history(history: Sequence[float], path: PathLike, dpi: int = 120) -> Path:
    """Penalized energy against iteration, relative to its final value."""
    values = np.asarray(history, dtype=float)
    fig, ax = plt.subplots(figsize=(8, 4))
    excess = values - values[-1]
    positive = excess > 0
    if np.any(positive):
        ax.semilogy(np.flatnonzero(positive), excess[positive], linewidth=2)
        ax.set_ylabel("F - F_final", fontsize=11)
    else:
        ax.plot(values, linewidth=2)
        ax.set_ylabel("F", fontsize=11)
    ax.set_xlabel("Iteration", fontsize=11)
    ax.grid(True, alpha=0.3, linestyle=":")
    ax.set_title("Energy history", fontsize=14, fontweight="bold")
    return _save(fig, path, dpi)


def plot_sweep(
    rows: List[Dict[str, float]],
    x: str,
    y: str,
    path: PathLike,
    log: bool = True,
    reference_slope: Optional[float] = None,
    dpi: int = 120,
) -> Path:
    """y against x from sweep rows, optionally on log axes with a reference power law."""
    xs = np.array([row[x] for row in rows], dtype=float)
    ys = np.array([row[y] for row in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(7, 5))
    if log:
        keep = (xs > 0) & (ys > 0)
        ax.loglog(xs[keep], ys[keep], marker="o", linewidth=2, label=y)
        if reference_slope is not None and np.any(keep):
            anchor_x, anchor_y = xs[keep][-1], ys[keep][-1]
            ax.loglog(
                xs[keep],
                anchor_y * (xs[keep] / anchor_x) ** reference_slope,
                color="gray",
                linestyle="--",
                label=f"slope {reference_slope:g}",
            )
    else:
        ax.plot(xs, ys, marker="o", linewidth=2, label=y)
    ax.set_xlabel(x, fontsize=11)
    ax.set_ylabel(y, fontsize=11)
    ax.legend(loc="best", fontsize=10)
    ax.grid(True, alpha=0.3, linestyle=":")
    return _save(fig, path, dpi)
