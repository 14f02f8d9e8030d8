import logging
from pathlib import Path
from typing import Dict, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np

from src.dual_sets import DualSet
from src.numerics import DEFAULT_TOLERANCES, Grid, Tolerances
from src.transforms import regularity_implication_graph

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

# fixed ids and no timestamp keep reruns byte-identical
plt.rcParams["svg.hashsalt"] = "epsilon-kit"
SVG_METADATA = {"Date": None}


class SetVisualizer:
    def __init__(self, tol: Tolerances = DEFAULT_TOLERANCES):
        self.tol = tol

        # Colors for verdict nodes and set layers
        self.color_map = {
            "member": "#6baed6",    # blue
            "overlay": "#fd8d3c",   # orange
            "support": "#7c7c7c",   # gray
            True: "#74c476",        # green
            False: "#ff9896",       # red
            None: "#c7c7c7",        # gray (undecided)
        }

    def _save(self, fig, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
        plt.close(fig)
        logging.info(f"Wrote {path}")
        return path

    def render_dual_set(self, dset: DualSet, path: Path, overlay: Optional[DualSet] = None,
                        grid: Optional[Grid] = None, title: str = "") -> Path:
        """Membership raster on the dual grid, support lines, and an optional expected-set contour."""
        if dset.dim != 2:
            raise ValueError("Only 2D sets are rendered")
        grid = grid or self.tol.dual_grid(2)
        xs, ys = grid.axis_points(0), grid.axis_points(1)
        mask = dset.mask(grid).reshape(grid.counts)

        fig, ax = plt.subplots(figsize=(6, 6))
        extent = (xs[0], xs[-1], ys[0], ys[-1])
        # first grid axis is x, imshow wants rows along y
        ax.imshow(mask.T.astype(float), origin="lower", extent=extent, cmap="Blues", vmin=0, vmax=1.5,
                  interpolation="nearest")

        if dset.support_samples is not None:
            dirs, values = dset.support_samples
            t = np.linspace(-grid.radius, grid.radius, 2)
            for d, h in zip(dirs, values):
                if not np.isfinite(h):
                    continue
                # the line <d, x> = h, drawn through h d along the normal's perpendicular
                base, along = h * d, np.array([-d[1], d[0]])
                line = base[None, :] + t[:, None] * along[None, :] * 2.0
                ax.plot(line[:, 0], line[:, 1], color=self.color_map["support"], linewidth=0.3, alpha=0.5)

        if overlay is not None:
            expected = overlay.mask(grid).reshape(grid.counts).astype(float)
            if 0.0 < expected.mean() < 1.0:
                ax.contour(xs, ys, expected.T, levels=[0.5], colors=self.color_map["overlay"], linewidths=1.5)

        ax.set_xlim(xs[0], xs[-1])
        ax.set_ylim(ys[0], ys[-1])
        ax.set_xlabel("x*_1")
        ax.set_ylabel("x*_2")
        ax.set_aspect("equal")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return self._save(fig, path)

    def render_implication_graph(self, verdicts: Dict[str, Optional[bool]], path: Path, title: str = "") -> Path:
        """Qualification conditions as a DiGraph colored by verdict."""
        G = regularity_implication_graph()
        fig = plt.figure(figsize=(6, 6))
        pos = nx.spring_layout(G, seed=42)

        node_colors = [self.color_map.get(verdicts.get(n)) for n in G.nodes()]
        nx.draw_networkx_nodes(G, pos, node_color=node_colors, node_size=1200, alpha=0.9)
        nx.draw_networkx_edges(G, pos, width=1.5, alpha=0.7, arrows=True, arrowsize=15)
        nx.draw_networkx_labels(G, pos, labels={n: f"{n}\n{verdicts.get(n)}" for n in G.nodes()}, font_size=9)

        plt.axis("off")
        if title:
            plt.title(title)
        plt.tight_layout()
        return self._save(fig, path)


def render_dual_set_svg(dset: DualSet, path: Path, overlay: Optional[DualSet] = None,
                        tol: Tolerances = DEFAULT_TOLERANCES, title: str = "") -> Path:
    return SetVisualizer(tol).render_dual_set(dset, path, overlay=overlay, title=title)
