"""Figure and CSV emission for the CLI report path.

Every figure ships with a CSV carrying the exact plotted numbers, so the
SVGs are conveniences and the delimited files are the record.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .classifier import Metrics, TrainHistory
from .fingerprint import (ELEVATION_MAX, PhaseField, PhaseMode,
                          RandomizationParams, eval_phase_grid,
                          synthesize_phase_field)
from .rng import stream

TWO_PI = 2.0 * math.pi


def phase_map_grid(field: PhaseField, resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(theta, phi, phase) arrays of the field on a polar grid."""
    theta = np.linspace(0.0, ELEVATION_MAX, resolution)
    phi = np.linspace(-math.pi, math.pi, 2 * resolution)
    tg, pg = np.meshgrid(theta, phi, indexing="ij")
    return tg, pg, eval_phase_grid(field, tg, pg)


def save_phase_map(field: PhaseField, out_base: str | Path,
                   resolution: int = 60) -> tuple[Path, Path]:
    """Polar heat map of the phase error over the elevation disk.

    Writes <base>.svg and <base>.csv (theta_deg, phi_deg, phase_rad rows);
    returns both paths.
    """
    tg, pg, values = phase_map_grid(field, resolution)
    base = Path(out_base)
    csv_path = base.with_suffix(".csv")
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_deg", "phi_deg", "phase_rad"])
        for t, p, v in zip(np.degrees(tg).ravel(), np.degrees(pg).ravel(), values.ravel()):
            writer.writerow([f"{t:.4f}", f"{p:.4f}", f"{v:.6f}"])

    fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(5, 4))
    mesh = ax.pcolormesh(pg, np.degrees(tg), values, cmap="twilight",
                         vmin=0.0, vmax=TWO_PI, shading="auto")
    ax.set_theta_zero_location("E")
    ax.set_rmax(math.degrees(ELEVATION_MAX))
    ax.set_title(f"phase error [rad], mode={field.mode.value}")
    fig.colorbar(mesh, ax=ax, shrink=0.8)
    svg_path = base.with_suffix(".svg")
    fig.savefig(svg_path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return svg_path, csv_path


def save_phase_histogram(master_seed: int, mode: PhaseMode, out_base: str | Path,
                         num_antennas: int = 1200, bins: int = 36) -> tuple[Path, Path]:
    """Histogram of per-antenna phase errors at one random direction each."""
    params = RandomizationParams(master_seed=master_seed)
    rng = stream(master_seed, "histogram-directions")
    phases = np.empty(num_antennas)
    for aid in range(num_antennas):
        fld = synthesize_phase_field(params, aid, mode)
        theta = rng.uniform(0.0, ELEVATION_MAX)
        phi = rng.uniform(-math.pi, math.pi)
        phases[aid] = eval_phase_grid(fld, np.array(theta), np.array(phi))
    counts, edges = np.histogram(phases, bins=bins, range=(0.0, TWO_PI))

    base = Path(out_base)
    csv_path = base.with_suffix(".csv")
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low_rad", "bin_high_rad", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            writer.writerow([f"{lo:.6f}", f"{hi:.6f}", int(c)])

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", edgecolor="k")
    ax.axhline(num_antennas / bins, color="r", linestyle="--", label="uniform")
    ax.set_xlabel("phase error [rad]")
    ax.set_ylabel("antennas")
    ax.set_title(f"{num_antennas} antennas, mode={mode.value}")
    ax.legend()
    svg_path = base.with_suffix(".svg")
    fig.savefig(svg_path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return svg_path, csv_path


def save_confusion(metrics: Metrics, out_base: str | Path) -> tuple[Path, Path]:
    """Confusion matrix as CSV (true rows, predicted columns) and heat map."""
    base = Path(out_base)
    csv_path = base.with_suffix(".csv")
    k = metrics.confusion.shape[0]
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [str(j) for j in range(k)])
        for i in range(k):
            writer.writerow([str(i)] + [int(v) for v in metrics.confusion[i]])

    fig, ax = plt.subplots(figsize=(5, 4.5))
    img = ax.imshow(metrics.confusion, cmap="viridis")
    ax.set_xlabel("predicted device")
    ax.set_ylabel("true device")
    ax.set_title(f"accuracy {metrics.accuracy:.4f}")
    fig.colorbar(img, ax=ax, shrink=0.8)
    svg_path = base.with_suffix(".svg")
    fig.savefig(svg_path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return svg_path, csv_path


def save_history(history: TrainHistory, out_base: str | Path) -> tuple[Path, Path]:
    """Per-epoch training loss and validation accuracy."""
    base = Path(out_base)
    csv_path = base.with_suffix(".csv")
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_accuracy"])
        for i, (loss, acc) in enumerate(zip(history.train_loss, history.val_accuracy)):
            writer.writerow([i, f"{loss:.6f}", f"{acc:.6f}"])

    fig, ax1 = plt.subplots(figsize=(6, 3.5))
    epochs = range(len(history.train_loss))
    ax1.plot(epochs, history.train_loss, "b-", label="train loss")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train loss", color="b")
    ax2 = ax1.twinx()
    ax2.plot(epochs, history.val_accuracy, "g-", label="val accuracy")
    ax2.set_ylabel("val accuracy", color="g")
    if history.best_epoch >= 0:
        ax2.axvline(history.best_epoch, color="k", linestyle=":", alpha=0.6)
    svg_path = base.with_suffix(".svg")
    fig.savefig(svg_path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return svg_path, csv_path
