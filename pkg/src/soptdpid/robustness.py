"""Closed-loop behaviour under perturbed plant parameters with fixed gains.

"Unbounded performance" is operationalized as closed-loop instability via
the exact pole test: every one of the eleven report metrics is finite
exactly on the stable set, so instability and metric blow-up coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import (
    METRIC_NAMES,
    PerformanceReport,
    SimulationConfig,
    default_config,
    performance_report,
)
from .placement import PidGains, STABILITY_MARGIN, closedloop_poles, max_real_part
from .plant import SoptdModel, perturb

PARAMETER_PAIRS = (("L", "T"), ("L", "zeta_ol"), ("T", "zeta_ol"))


@dataclass(frozen=True)
class PerturbationRow:
    """One perturbed model with its stability flag and optional report."""

    model: SoptdModel
    stable: bool
    report: PerformanceReport | None


@dataclass(frozen=True)
class PerturbationStudy:
    """Monte Carlo sweep of {L, T, zeta_ol} perturbations at fixed gains."""

    nominal: SoptdModel
    gains: PidGains
    pct: float
    n_samples: int
    seed: int
    rows: tuple[PerturbationRow, ...]

    @property
    def n_unstable(self) -> int:
        return sum(not r.stable for r in self.rows)

    @property
    def all_stable(self) -> bool:
        return self.n_unstable == 0


def _loop_stable(model: SoptdModel, gains: PidGains) -> bool:
    return max_real_part(closedloop_poles(model, gains, 3)) < STABILITY_MARGIN


def perturbation_sweep(model: SoptdModel, gains: PidGains, pct: float,
                       n_samples: int = 1000, seed: int = 0,
                       cfg: SimulationConfig | None = None,
                       with_reports: bool = True) -> PerturbationStudy:
    """Evaluate the fixed controller on n_samples perturbed plants.

    Each row perturbs {L, T, zeta_ol} multiplicatively by up to +-pct via
    its own counter-based substream.  Unstable rows carry no report; with
    with_reports=False stable rows skip the report too (used by the
    perturbation-limit search, where only stability matters).
    """
    rows = []
    for i in range(n_samples):
        p = perturb(model, pct, seed, i)
        stable = _loop_stable(p, gains)
        report = None
        if stable and with_reports:
            report = performance_report(p, gains, cfg or default_config(p))
        rows.append(PerturbationRow(model=p, stable=stable, report=report))
    return PerturbationStudy(nominal=model, gains=gains, pct=pct,
                             n_samples=n_samples, seed=seed, rows=tuple(rows))


def max_allowable_perturbation(model: SoptdModel, gains: PidGains,
                               step: float = 0.05, n_samples: int = 1000,
                               seed: int = 0, limit: float = 0.95) -> float:
    """Largest pct in {step, 2*step, ...} with every perturbed loop stable.

    Stops at the first level where at least one of the n_samples perturbed
    plants goes unstable; returns 0 if even the first step fails.
    """
    if not _loop_stable(model, gains):
        raise ValueError("gains do not stabilize the nominal plant")
    best = 0.0
    pct = step
    while pct < limit + 1e-12:
        sweep = perturbation_sweep(model, gains, min(pct, limit), n_samples,
                                   seed, with_reports=False)
        if not sweep.all_stable:
            break
        best = min(pct, limit)
        pct += step
    return best


@dataclass(frozen=True)
class IsoPerformanceGrid:
    """2D parameter grid of the eleven metrics at fixed gains.

    values1/values2 are the grid axes for the varied parameter pair; metric
    grids are (gridN, gridN) with NaN in unstable cells.
    """

    nominal: SoptdModel
    gains: PidGains
    pair: tuple[str, str]
    values1: np.ndarray
    values2: np.ndarray
    stable: np.ndarray
    metrics: dict[str, np.ndarray]

    def csv(self) -> str:
        header = f"{self.pair[0]},{self.pair[1]},stable," + ",".join(METRIC_NAMES)
        lines = [header]
        n1, n2 = self.values1.size, self.values2.size
        for i in range(n1):
            for j in range(n2):
                cells = [repr(float(self.values1[i])), repr(float(self.values2[j])),
                         "1" if self.stable[i, j] else "0"]
                for name in METRIC_NAMES:
                    v = self.metrics[name][i, j]
                    cells.append("" if not np.isfinite(v) else repr(float(v)))
                lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def iso_performance_grid(model: SoptdModel, gains: PidGains, pct: float,
                         grid_n: int, pair: tuple[str, str] = ("L", "T"),
                         cfg: SimulationConfig | None = None) -> IsoPerformanceGrid:
    """Metrics over a grid_n x grid_n grid of two perturbed parameters.

    The chosen pair sweeps [1-pct, 1+pct] times nominal uniformly; the third
    parameter stays at its nominal value.
    """
    if tuple(pair) not in PARAMETER_PAIRS:
        raise ValueError(f"pair must be one of {PARAMETER_PAIRS}, got {pair}")
    if grid_n < 1:
        raise ValueError("grid_n must be >= 1")
    factors = (np.array([1.0]) if grid_n == 1
               else np.linspace(1.0 - pct, 1.0 + pct, grid_n))
    v1 = factors * getattr(model, pair[0])
    v2 = factors * getattr(model, pair[1])
    stable = np.zeros((grid_n, grid_n), dtype=bool)
    grids = {name: np.full((grid_n, grid_n), np.nan) for name in METRIC_NAMES}
    for i in range(grid_n):
        for j in range(grid_n):
            params = {"K": model.K, "L": model.L, "T": model.T, "zeta_ol": model.zeta_ol}
            params[pair[0]] = float(v1[i])
            params[pair[1]] = float(v2[j])
            cell = SoptdModel(**params)
            if not _loop_stable(cell, gains):
                continue
            stable[i, j] = True
            report = performance_report(cell, gains, cfg or default_config(cell))
            for name in METRIC_NAMES:
                val = report.metric(name)
                grids[name][i, j] = np.nan if val is None else val
    return IsoPerformanceGrid(nominal=model, gains=gains, pair=tuple(pair),
                              values1=v1, values2=v2, stable=stable, metrics=grids)
