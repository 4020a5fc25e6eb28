"""Figure rendering for the CLI report path.

Plots are written to files next to the delimited outputs; nothing here is
interactive.  All functions take explicit data and a target path.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .explorer import RegionDataset
from .metrics import SimulationConfig, default_config, sensitivity_set, step_signal_norms
from .placement import KpSource, PidGains
from .plant import SoptdModel
from .polytf import realize, simulate

_PAIRS = (((0, "Kp"), (1, "Ki")), ((0, "Kp"), (2, "Kd")), ((1, "Ki"), (2, "Kd")))


def save_region_figure(dataset: RegionDataset, which: KpSource, path,
                       centroid: PidGains | None = None) -> None:
    """Pairwise projections of the stabilizing gain cloud, centroid starred."""
    pts = dataset.stable_gains(which)
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, ((i, ni), (j, nj)) in zip(axes, _PAIRS):
        if pts.shape[0]:
            ax.scatter(pts[:, i], pts[:, j], s=4, alpha=0.4, linewidths=0)
        if centroid is not None:
            c = centroid.as_array()
            ax.plot(c[i], c[j], "r*", markersize=14)
        ax.set_xlabel(ni)
        ax.set_ylabel(nj)
    fig.suptitle(f"{dataset.plant_id} / {dataset.ptype.value} / {which.name}: "
                 f"{pts.shape[0]} stabilizing samples")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_response_figure(model: SoptdModel, gains: PidGains, path,
                         cfg: SimulationConfig | None = None) -> None:
    """Set-point and disturbance step responses plus the control signal."""
    cfg = cfg or default_config(model)
    sens = sensitivity_set(model, gains, cfg.npade)
    t, ysp = simulate(realize(sens.T), "step", cfg.dt, cfg.horizon)
    _, yd = simulate(realize(sens.Sd), "step", cfg.dt, cfg.horizon)
    u = step_signal_norms(sens.Su, cfg.dt, cfg.horizon)
    nsteps = t.size
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    axes[0].plot(t, ysp)
    axes[0].set_title("set-point step: y(t)")
    axes[1].plot(t, yd)
    axes[1].set_title("disturbance step: y(t)")
    # Re-simulate the smooth control signal for plotting.
    from .polytf import Polynomial, RationalTF, poly_mul
    su_step = RationalTF(sens.Su.num, poly_mul(sens.Su.den, Polynomial([0.0, 1.0])))
    _, uy = simulate(realize(su_step), "impulse", cfg.dt, cfg.horizon)
    axes[2].plot(t[:nsteps], uy[:nsteps])
    axes[2].set_title(f"control signal (impulse weight {u.delta_weight:g} excluded)")
    for ax in axes:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
