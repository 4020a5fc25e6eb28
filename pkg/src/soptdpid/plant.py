"""SOPTD plant models, the nine benchmark processes and parameter perturbation.

A plant is K * exp(-L s) / (s^2 + 2*zeta_ol*omega_ol*s + omega_ol^2) with
omega_ol = 1/T.  Models are stored in this normalized monic-denominator form;
`from_quadratic` accepts the raw textbook form b0 / (a2 s^2 + a1 s + a0) and
normalizes it, so that transcription of published plants happens through one
audited function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .pade import pade_tf
from .polytf import Polynomial, RationalTF


class BenchmarkNotFoundError(KeyError):
    """Unknown benchmark id."""


def substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based random substream for (seed, index).

    Each (seed, index) pair keys an independent Philox stream, so draws are
    reproducible bit-for-bit regardless of evaluation order or parallelism.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SoptdModel:
    """Second-order-plus-time-delay plant parameters."""

    K: float
    L: float
    T: float
    zeta_ol: float

    def __post_init__(self):
        if self.L <= 0 or self.T <= 0 or self.zeta_ol <= 0 or self.K == 0:
            raise ValueError(f"invalid SOPTD parameters: {self}")

    @property
    def omega_ol(self) -> float:
        return 1.0 / self.T

    @property
    def dc_gain(self) -> float:
        return self.K * self.T**2

    @property
    def lag_to_delay(self) -> float:
        return self.L / self.T

    @staticmethod
    def from_quadratic(b0: float, a2: float, a1: float, a0: float, L: float) -> "SoptdModel":
        """Normalize b0 / (a2 s^2 + a1 s + a0) * exp(-L s) to monic form."""
        if a2 <= 0 or a0 <= 0:
            raise ValueError("quadratic denominator must have positive s^2 and constant terms")
        omega = math.sqrt(a0 / a2)
        zeta = a1 / (2.0 * math.sqrt(a0 * a2))
        return SoptdModel(K=b0 / a2, L=L, T=1.0 / omega, zeta_ol=zeta)

    def to_json(self) -> str:
        return json.dumps({"K": self.K, "L": self.L, "T": self.T, "zeta_ol": self.zeta_ol})

    @staticmethod
    def from_json(text: str) -> "SoptdModel":
        data = json.loads(text)
        expected = {"K", "L", "T", "zeta_ol"}
        if set(data) != expected:
            raise ValueError(f"plant JSON must have exactly the keys {sorted(expected)}, got {sorted(data)}")
        return SoptdModel(K=float(data["K"]), L=float(data["L"]),
                          T=float(data["T"]), zeta_ol=float(data["zeta_ol"]))


@dataclass(frozen=True)
class BenchmarkInfo:
    """One entry of the built-in nine-plant registry."""

    id: str
    model: SoptdModel
    delay_class: str  # lag-dominant | balanced | delay-dominant
    damping_class: str  # underdamped | critically-damped | overdamped


# The nine benchmark plants, entered in their raw published quadratic forms.
_RAW_BENCHMARKS = [
    # id, b0, a2, a1, a0, L, delay class, damping class
    ("G1", 1.0, 9.0, 2.4, 1.0, 1.0, "lag-dominant", "underdamped"),
    ("G2", 1.0, 1.0, 2.0, 1.0, 0.8, "lag-dominant", "critically-damped"),
    ("G3", 1.0, 40.0, 14.0, 1.0, 2.0, "lag-dominant", "overdamped"),  # (1+10s)(1+4s)
    ("G4", 0.5, 1.0, 1.2, 1.0, 1.0, "balanced", "underdamped"),
    ("G5", 1.0, 1.0, 2.0, 1.0, 1.0, "balanced", "critically-damped"),  # (1+s)^2
    ("G6", 1.0, 9.0, 24.0, 1.0, 3.0, "balanced", "overdamped"),
    ("G7", 1.0, 3.2158, 3.1614, 3.0568, 1.2755, "delay-dominant", "underdamped"),
    ("G8", 1.0, 1.0, 2.0, 1.0, 10.0, "delay-dominant", "critically-damped"),  # (1+s)^2
    ("G9", 1.0, 0.12, 1.33, 1.24, 2.0, "delay-dominant", "overdamped"),
]

BENCHMARKS: dict[str, BenchmarkInfo] = {
    bid: BenchmarkInfo(
        id=bid,
        model=SoptdModel.from_quadratic(b0, a2, a1, a0, L),
        delay_class=dclass,
        damping_class=damp,
    )
    for bid, b0, a2, a1, a0, L, dclass, damp in _RAW_BENCHMARKS
}

BENCHMARK_IDS = tuple(BENCHMARKS)


def benchmark(bid: str) -> SoptdModel:
    """Benchmark plant by id ('G1'..'G9')."""
    try:
        return BENCHMARKS[bid].model
    except KeyError:
        raise BenchmarkNotFoundError(
            f"unknown benchmark {bid!r}; valid ids: {', '.join(BENCHMARK_IDS)}"
        ) from None


def benchmark_info(bid: str) -> BenchmarkInfo:
    try:
        return BENCHMARKS[bid]
    except KeyError:
        raise BenchmarkNotFoundError(
            f"unknown benchmark {bid!r}; valid ids: {', '.join(BENCHMARK_IDS)}"
        ) from None


def to_tf(model: SoptdModel, npade: int) -> RationalTF:
    """Rational form of the plant; npade = 0 drops the delay entirely."""
    w = model.omega_ol
    rational = RationalTF(
        Polynomial([model.K]),
        Polynomial([w * w, 2.0 * model.zeta_ol * w, 1.0]),
    )
    if npade == 0:
        return rational
    return rational * pade_tf(npade, model.L)


def perturb(model: SoptdModel, pct: float, seed: int, index: int) -> SoptdModel:
    """Multiplicative uniform perturbation of {L, T, zeta_ol} by up to +-pct.

    K is left unchanged: it acts as a pure linear scale on the controller
    gains.  Deterministic given (seed, index) via the counter-based stream.
    """
    if not 0.0 <= pct < 1.0:
        raise ValueError(f"pct must be in [0, 1), got {pct}")
    if pct == 0.0:
        return model
    gen = substream(seed, index)
    f = gen.uniform(1.0 - pct, 1.0 + pct, size=3)
    return replace(model, L=model.L * f[0], T=model.T * f[1], zeta_ol=model.zeta_ol * f[2])
