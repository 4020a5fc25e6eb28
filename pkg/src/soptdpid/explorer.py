"""Monte Carlo exploration of the design space and stability-region datasets.

Each sample draws {m, zeta_cl, omega_cl} from its own counter-based random
substream, so serial and parallel evaluation produce bit-identical datasets.
Gains for all four proportional-gain expressions are computed per draw, and
stability is judged from the closed-loop poles at Pade order 3.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .placement import (
    KpSource,
    NonDominantPoleType,
    PidGains,
    STABILITY_MARGIN,
    _charpoly_basis,
)
from .plant import SoptdModel, substream


class NoStableRegionError(RuntimeError):
    """No stable samples were found for any expression."""


DEFAULT_M_RANGE = (1.0, 10.0)
DEFAULT_ZETA_CL_RANGE = (1.0, 5.0)
DEFAULT_OMEGA_CL_RANGE = (1.0, 10.0)

KP_SOURCES = tuple(KpSource)

CSV_HEADER = "m,zeta_cl,omega_cl,kp,ki,kd,stable,max_real_part"


@dataclass(frozen=True)
class DesignRanges:
    """Closed sampling intervals for the three design parameters."""

    m_range: tuple[float, float] = DEFAULT_M_RANGE
    zeta_cl_range: tuple[float, float] = DEFAULT_ZETA_CL_RANGE
    omega_cl_range: tuple[float, float] = DEFAULT_OMEGA_CL_RANGE

    def __post_init__(self):
        for lo, hi in (self.m_range, self.zeta_cl_range, self.omega_cl_range):
            if not lo < hi:
                raise ValueError(f"range bounds must satisfy lower < upper, got ({lo}, {hi})")


@dataclass(frozen=True)
class SampleResult:
    """Per-expression outcome at one sampled design point."""

    gains: PidGains
    stable: bool
    max_real_part: float


@dataclass(frozen=True)
class RegionSample:
    """One sampled design point with its four per-expression outcomes."""

    m: float
    zeta_cl: float
    omega_cl: float
    by_source: dict[KpSource, SampleResult]


@dataclass(frozen=True)
class RegionDataset:
    """Sampled stability-region data for one plant and non-dominant pole type.

    Array layout: specs is (n, 3) columns (m, zeta_cl, omega_cl); gains is
    (4, n, 3) columns (Kp, Ki, Kd) indexed by KpSource order; stable and
    max_real are (4, n).
    """

    plant_id: str
    model: SoptdModel
    ptype: NonDominantPoleType
    ranges: DesignRanges
    seed: int
    n_samples: int
    specs: np.ndarray = field(repr=False)
    gains: np.ndarray = field(repr=False)
    stable: np.ndarray = field(repr=False)
    max_real: np.ndarray = field(repr=False)

    @property
    def stable_counts(self) -> np.ndarray:
        if self.n_samples == 0:
            return np.zeros(4, dtype=int)
        return self.stable.sum(axis=1)

    @property
    def percent_volume(self) -> np.ndarray:
        if self.n_samples == 0:
            return np.zeros(4)
        return 100.0 * self.stable_counts / self.n_samples

    def sample(self, i: int) -> RegionSample:
        by_source = {
            src: SampleResult(
                gains=PidGains(*self.gains[k, i]),
                stable=bool(self.stable[k, i]),
                max_real_part=float(self.max_real[k, i]),
            )
            for k, src in enumerate(KP_SOURCES)
        }
        return RegionSample(
            m=float(self.specs[i, 0]),
            zeta_cl=float(self.specs[i, 1]),
            omega_cl=float(self.specs[i, 2]),
            by_source=by_source,
        )

    def stable_gains(self, which: KpSource) -> np.ndarray:
        """(k, 3) array of stabilizing gain triples for one expression."""
        k = KP_SOURCES.index(which)
        return self.gains[k][self.stable[k]]


def _draw_specs(ranges: DesignRanges, n_samples: int, seed: int) -> np.ndarray:
    lows = np.array([ranges.m_range[0], ranges.zeta_cl_range[0], ranges.omega_cl_range[0]])
    highs = np.array([ranges.m_range[1], ranges.zeta_cl_range[1], ranges.omega_cl_range[1]])
    out = np.empty((n_samples, 3))
    for i in range(n_samples):
        u = substream(seed, i).random(3)
        out[i] = lows + u * (highs - lows)
    return out


def _bconv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise polynomial coefficient convolution of (n, p) with (n, q)."""
    n, p = a.shape
    q = b.shape[1]
    out = np.zeros((n, p + q - 1))
    for i in range(p):
        for j in range(q):
            out[:, i + j] += a[:, i] * b[:, j]
    return out


def _batch_desired(specs: np.ndarray, ptype: NonDominantPoleType) -> np.ndarray:
    """(n, 7) monic target coefficients, ascending powers, built from factors."""
    m, z, w = specs[:, 0], specs[:, 1], specs[:, 2]
    one = np.ones_like(m)
    dominant = np.stack([w * w, 2.0 * z * w, one], axis=1)
    cpair = np.stack([m * m * w * w, 2.0 * m * z * w, one], axis=1)
    rroot = np.stack([m * z * w, one], axis=1)
    rpair = _bconv(rroot, rroot)
    if ptype is NonDominantPoleType.ALL_COMPLEX:
        quartic = _bconv(cpair, cpair)
    elif ptype is NonDominantPoleType.ALL_REAL:
        quartic = _bconv(rpair, rpair)
    else:
        quartic = _bconv(cpair, rpair)
    return _bconv(dominant, quartic)


def _batch_max_real(coeffs: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """Max real part of the roots of monic degree-6 polynomials (n, 7)."""
    n = coeffs.shape[0]
    out = np.empty(n)
    for s in range(0, n, chunk):
        c = coeffs[s : s + chunk]
        k = c.shape[0]
        comp = np.zeros((k, 6, 6))
        comp[:, :-1, 1:] = np.eye(5)
        comp[:, -1, :] = -c[:, :6]
        lam = np.linalg.eigvals(comp)
        out[s : s + chunk] = lam.real.max(axis=1)
    return out


def sample_region(model: SoptdModel, ptype: NonDominantPoleType,
                  ranges: DesignRanges | None = None, n_samples: int = 100_000,
                  seed: int = 0, plant_id: str = "custom") -> RegionDataset:
    """Sample the design space and classify stability per Kp expression."""
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    ranges = ranges or DesignRanges()
    specs = _draw_specs(ranges, n_samples, seed)
    gains = np.zeros((4, n_samples, 3))
    stable = np.zeros((4, n_samples), dtype=bool)
    max_real = np.full((4, n_samples), np.inf)
    if n_samples:
        desired = _batch_desired(specs, ptype)
        base, vp, vi, vd = _charpoly_basis(model)
        ki = (desired[:, 0] - base[0]) / vi[0]
        kd = (desired[:, 5] - base[5]) / vd[5]
        for k, src in enumerate(KP_SOURCES):
            p = src.power
            kp = (desired[:, p] - base[p] - ki * vi[p] - kd * vd[p]) / vp[p]
            gains[k, :, 0] = kp
            gains[k, :, 1] = ki
            gains[k, :, 2] = kd
            coeffs = (base[None, :] + np.outer(kp, vp) + np.outer(ki, vi) + np.outer(kd, vd))
            mr = _batch_max_real(coeffs)
            max_real[k] = mr
            stable[k] = mr < STABILITY_MARGIN
    return RegionDataset(
        plant_id=plant_id, model=model, ptype=ptype, ranges=ranges, seed=seed,
        n_samples=n_samples, specs=specs, gains=gains, stable=stable, max_real=max_real,
    )


def best_expression(dataset: RegionDataset) -> KpSource:
    """Expression with the largest stabilizing count; ties go to the lowest index."""
    counts = dataset.stable_counts
    if counts.max() == 0:
        raise NoStableRegionError(
            f"no stable samples for {dataset.plant_id} / {dataset.ptype.value}"
        )
    return KP_SOURCES[int(np.argmax(counts))]


def export_region(dataset: RegionDataset, which: KpSource, stable_only: bool = False):
    """Tabular records (one dict per sample) for one expression."""
    k = KP_SOURCES.index(which)
    records = []
    for i in range(dataset.n_samples):
        if stable_only and not dataset.stable[k, i]:
            continue
        records.append({
            "m": float(dataset.specs[i, 0]),
            "zeta_cl": float(dataset.specs[i, 1]),
            "omega_cl": float(dataset.specs[i, 2]),
            "kp": float(dataset.gains[k, i, 0]),
            "ki": float(dataset.gains[k, i, 1]),
            "kd": float(dataset.gains[k, i, 2]),
            "stable": bool(dataset.stable[k, i]),
            "max_real_part": float(dataset.max_real[k, i]),
        })
    return records


def region_csv(dataset: RegionDataset, which: KpSource, stable_only: bool = False) -> str:
    """CSV export with IEEE-754 round-trip decimal formatting."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for rec in export_region(dataset, which, stable_only=stable_only):
        buf.write(",".join([
            repr(rec["m"]), repr(rec["zeta_cl"]), repr(rec["omega_cl"]),
            repr(rec["kp"]), repr(rec["ki"]), repr(rec["kd"]),
            "1" if rec["stable"] else "0", repr(rec["max_real_part"]),
        ]) + "\n")
    return buf.getvalue()


def parse_region_csv(text: str):
    """Inverse of region_csv; returns the same record dicts."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized region CSV header")
    records = []
    for ln in lines[1:]:
        f = ln.split(",")
        records.append({
            "m": float(f[0]), "zeta_cl": float(f[1]), "omega_cl": float(f[2]),
            "kp": float(f[3]), "ki": float(f[4]), "kd": float(f[5]),
            "stable": f[6] == "1", "max_real_part": float(f[7]),
        })
    return records
