"""Figure rendering for CLI reports.  The core library stays plot-free;
only the CLI imports this module, and everything renders to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectral import SpectralFunction


def save_phi_plot(path, points: np.ndarray, phi: np.ndarray, title: str) -> None:
    """Phi samples: line plot in 1D, scatter colored by Phi in 2D."""
    fig, ax = plt.subplots(figsize=(6, 4))
    points = np.atleast_2d(points)
    if points.shape[1] == 1:
        order = np.argsort(points[:, 0])
        ax.plot(points[order, 0], phi[order], ".", ms=2)
        ax.set_xlabel(r"$\xi$")
        ax.set_ylabel(r"$\Phi(\xi)$")
    else:
        sc = ax.scatter(points[:, 0], points[:, 1], c=phi, s=4, cmap="viridis")
        fig.colorbar(sc, ax=ax, label=r"$\Phi(\xi)$")
        ax.set_xlabel(r"$\xi_1$")
        ax.set_ylabel(r"$\xi_2$")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_field_plot(path, f: SpectralFunction, title: str) -> None:
    """Magnitude of a spectral function: curve (1D) or image (2D)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    mag = np.abs(f.values)
    if f.grid.d == 1:
        ax.plot(f.grid.axes()[0], mag)
        ax.set_xlabel(r"$\xi$")
    else:
        lo = f.grid.origin
        hi = [o + (n - 1) * s for o, n, s in
              zip(f.grid.origin, f.grid.shape, f.grid.spacing)]
        im = ax.imshow(
            mag.T, origin="lower", extent=(lo[0], hi[0], lo[1], hi[1]),
            cmap="magma", aspect="auto",
        )
        fig.colorbar(im, ax=ax)
        ax.set_xlabel(r"$\xi_1$")
        ax.set_ylabel(r"$\xi_2$")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_signal_comparison(path, grid_axes, original: np.ndarray,
                           reconstructed: np.ndarray, title: str) -> None:
    fig, axes = plt.subplots(1, 2 if original.ndim == 2 else 1,
                             figsize=(9, 4), squeeze=False)
    if original.ndim == 1:
        ax = axes[0][0]
        ax.plot(grid_axes[0], original.real, label="original")
        ax.plot(grid_axes[0], reconstructed.real, "--", label="reconstruction")
        ax.legend()
        ax.set_xlabel("x")
    else:
        for ax, data, name in zip(
            axes[0], (original, reconstructed), ("original", "reconstruction")
        ):
            ax.imshow(np.abs(data).T, origin="lower", cmap="viridis")
            ax.set_title(name)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_bins_plot(path, centers: np.ndarray, weights: np.ndarray,
                   title: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    centers = np.atleast_2d(centers)
    coord = centers[:, -1] if centers.shape[1] else np.arange(len(weights))
    ax.bar(coord, weights, width=(np.ptp(coord) / max(len(coord), 1)) * 0.9
           if len(coord) > 1 else 0.8)
    ax.set_xlabel("transversal coordinate")
    ax.set_ylabel("pseudo-image weight")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_partial_sums_plot(path, word_lengths: np.ndarray, sums: np.ndarray,
                           title: str) -> None:
    """Partial sums per sampled point vs word length (log scale)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in range(min(sums.shape[1], 40)):
        ax.semilogy(word_lengths, np.maximum(sums[:, col], 1e-300),
                    color="tab:blue", alpha=0.25, lw=0.8)
    ax.semilogy(word_lengths, np.maximum(np.median(sums, axis=1), 1e-300),
                color="tab:red", lw=2, label="median")
    ax.set_xlabel("word length N")
    ax.set_ylabel(r"$S_N(\xi)$")
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_orbit_cloud(path, clouds: list[np.ndarray], title: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    for cloud in clouds:
        cloud = np.atleast_2d(cloud)
        if cloud.shape[1] == 1:
            ax.plot(cloud[:, 0], np.zeros(len(cloud)), ".", ms=3, alpha=0.6)
        else:
            ax.plot(cloud[:, 0], cloud[:, 1], ".", ms=2, alpha=0.6)
    ax.set_xlabel(r"$\xi_1$")
    ax.set_ylabel(r"$\xi_2$" if clouds and np.atleast_2d(clouds[0]).shape[1] > 1
                  else "")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
