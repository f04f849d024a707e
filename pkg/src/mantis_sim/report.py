"""Matplotlib renderings of run artifacts (non-normative, for eyeballing)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": "mantis-sim"}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def save_image_figure(image: np.ndarray, path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    ax.imshow(image, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
    ax.set_title(title)
    ax.axis("off")
    _save(fig, path)


def save_fmap_grid(fmaps: np.ndarray, path, title: str) -> None:
    n = fmaps.shape[0]
    cols = min(n, 4)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(2.6 * cols, 2.6 * rows), squeeze=False)
    for i in range(rows * cols):
        ax = axes[i // cols][i % cols]
        ax.axis("off")
        if i < n:
            ax.imshow(fmaps[i], cmap="viridis", interpolation="nearest")
            ax.set_title(f"filter {i}", fontsize=8)
    fig.suptitle(title)
    _save(fig, path)


def save_error_map(ideal: np.ndarray, measured: np.ndarray, path, title: str) -> None:
    err = measured - ideal
    fig, ax = plt.subplots(figsize=(4.0, 3.4))
    im = ax.imshow(err, cmap="coolwarm", interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title)
    ax.axis("off")
    _save(fig, path)


def save_heatmap(heatmap: np.ndarray, detection: np.ndarray, path, title: str) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(7.2, 3.4))
    im = axes[0].imshow(heatmap, cmap="magma", interpolation="nearest")
    fig.colorbar(im, ax=axes[0], shrink=0.85)
    axes[0].set_title("heatmap", fontsize=9)
    axes[1].imshow(detection, cmap="gray", interpolation="nearest")
    axes[1].set_title("detection", fontsize=9)
    for ax in axes:
        ax.axis("off")
    fig.suptitle(title)
    _save(fig, path)


def save_efficiency_chart(rows: list[dict], path) -> None:
    labels = [f"ds{r['ds']}/s{r['stride']}" for r in rows]
    ee = [r["ee_accel_tops_w"] for r in rows]
    fig, ax = plt.subplots(figsize=(7.5, 3.2))
    ax.bar(labels, ee, color="#3b6ea5")
    ax.set_ylabel("accelerator EE [TOPS/W, 1b]")
    ax.tick_params(axis="x", rotation=45, labelsize=8)
    fig.tight_layout()
    _save(fig, path)
