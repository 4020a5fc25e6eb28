"""Dominant pole placement PID gain synthesis by coefficient matching.

The desired sixth-degree characteristic polynomial is always built by
multiplying its factors (dominant pair times four non-dominant roots), never
by transcribing expanded coefficient formulas: the factored construction is
typo-proof and dimensionally consistent by construction.  Hand-derived closed
forms for the all-complex case are kept as an independent cross-check only.

Note on published expanded forms for this method: coefficient matching of the
factored all-real polynomial yields a derivative-gain term proportional to
2*zeta_cl*omega_cl*(1 + 2m); printed versions of the expanded formula exist
with "(1 - 2m)", which disagrees with the factored expansion and is not used
here.  Similarly, some printed mixed-pole expansions carry omega_cl^4 where
dimensional analysis requires omega_cl^2.  This module follows the
derivation throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .pade import pade_tf
from .plant import SoptdModel
from .polytf import DegenerateLoopError, Polynomial, poly_mul, roots

# Poles with real part above this margin are treated as unstable.  Eigenvalue
# solvers at these degrees are accurate to ~1e-12; a fixed small margin keeps
# the boundary decision from flapping.
STABILITY_MARGIN = -1e-9


class InvalidModelError(ValueError):
    """Plant parameters unusable for gain synthesis."""


class InvalidGainsError(ValueError):
    """Controller gains unusable for the requested operation."""


class NonDominantPoleType(enum.Enum):
    """Shape of the four non-dominant closed-loop poles."""

    ALL_COMPLEX = "all-complex"
    ALL_REAL = "all-real"
    MIXED = "mixed"


class KpSource(enum.Enum):
    """Which power-of-s coefficient determines the proportional gain."""

    S1 = 1
    S2 = 2
    S3 = 3
    S4 = 4

    @property
    def power(self) -> int:
        return self.value


@dataclass(frozen=True)
class DesignSpec:
    """Pole placement design point: non-dominance ratio, damping, frequency."""

    m: float
    zeta_cl: float
    omega_cl: float

    def __post_init__(self):
        if self.m < 1.0 or self.zeta_cl <= 0.0 or self.omega_cl <= 0.0:
            raise ValueError(f"invalid design spec: {self}")


@dataclass(frozen=True)
class PidGains:
    """PID controller gains; sign is unconstrained."""

    Kp: float
    Ki: float
    Kd: float

    def as_array(self) -> np.ndarray:
        return np.array([self.Kp, self.Ki, self.Kd])

    @property
    def is_zero(self) -> bool:
        return self.Kp == 0.0 and self.Ki == 0.0 and self.Kd == 0.0

    def numerator(self) -> Polynomial:
        """Numerator of C(s) = (Kd s^2 + Kp s + Ki) / s."""
        return Polynomial([self.Ki, self.Kp, self.Kd])


def nondominant_factor(spec: DesignSpec, ptype: NonDominantPoleType) -> Polynomial:
    """Degree-4 monic factor holding the four non-dominant poles."""
    m, z, w = spec.m, spec.zeta_cl, spec.omega_cl
    complex_pair = Polynomial([m * m * w * w, 2.0 * m * z * w, 1.0])
    real_pair = poly_mul(Polynomial([m * z * w, 1.0]), Polynomial([m * z * w, 1.0]))
    if ptype is NonDominantPoleType.ALL_COMPLEX:
        return poly_mul(complex_pair, complex_pair)
    if ptype is NonDominantPoleType.ALL_REAL:
        return poly_mul(real_pair, real_pair)
    return poly_mul(complex_pair, real_pair)


def desired_charpoly(spec: DesignSpec, ptype: NonDominantPoleType) -> Polynomial:
    """Monic degree-6 target polynomial: dominant pair times non-dominant factor.

    The dominant roots are -zeta_cl*omega_cl +- j*omega_cl*sqrt(1-zeta_cl^2)
    (a real pair once zeta_cl >= 1).
    """
    z, w = spec.zeta_cl, spec.omega_cl
    dominant = Polynomial([w * w, 2.0 * z * w, 1.0])
    return poly_mul(dominant, nondominant_factor(spec, ptype))


def openloop_charpoly(model: SoptdModel, gains: PidGains) -> Polynomial:
    """Closed-loop characteristic polynomial at Pade order 3, made monic.

    Equals (den + num) of the unity-feedback loop around G*C divided by L^3.
    """
    w = model.omega_ol
    L = model.L
    delay = pade_tf(3, L)
    plant_quad = Polynomial([w * w, 2.0 * model.zeta_ol * w, 1.0])
    open_den = poly_mul(poly_mul(Polynomial([0.0, 1.0]), plant_quad), delay.den)
    open_num = poly_mul(model.K * gains.numerator(), delay.num)
    char = open_den + open_num
    return Polynomial(char.coeffs / L**3)


def _charpoly_basis(model: SoptdModel):
    """Affine decomposition c(gains) = base + Kp*vp + Ki*vi + Kd*vd.

    The monic closed-loop coefficients are exactly affine in each gain, so
    the decomposition is recovered from four polynomial expansions.
    """
    base = openloop_charpoly(model, PidGains(0.0, 0.0, 0.0))
    vp = openloop_charpoly(model, PidGains(1.0, 0.0, 0.0)) - base
    vi = openloop_charpoly(model, PidGains(0.0, 1.0, 0.0)) - base
    vd = openloop_charpoly(model, PidGains(0.0, 0.0, 1.0)) - base
    def pad(p):
        out = np.zeros(7)
        out[: p.coeffs.size] = p.coeffs
        return out
    return pad(base), pad(vp), pad(vi), pad(vd)


def solve_gains(model: SoptdModel, spec: DesignSpec,
                ptype: NonDominantPoleType, src: KpSource) -> PidGains:
    """PID gains by generic coefficient matching against the factored target.

    Ki matches the s^0 coefficient, Kd the s^5 coefficient, Kp the single
    coefficient selected by `src` (s^1..s^4) given Ki and Kd.  The remaining
    three coefficients of the degree-6 polynomial are unconstrained.
    """
    if model.K == 0 or model.L <= 0:
        raise InvalidModelError("require K != 0 and L > 0")
    desired = desired_charpoly(spec, ptype).coeffs
    base, vp, vi, vd = _charpoly_basis(model)
    ki = (desired[0] - base[0]) / vi[0]
    kd = (desired[5] - base[5]) / vd[5]
    k = src.power
    residual = desired[k] - base[k] - ki * vi[k] - kd * vd[k]
    kp = residual / vp[k]
    return PidGains(Kp=float(kp), Ki=float(ki), Kd=float(kd))


def allcomplex_gain_formulas(model: SoptdModel, spec: DesignSpec, src: KpSource) -> PidGains:
    """Hand-derived closed forms for the all-complex case.

    Retained purely as an independent cross-check of the generic matching.
    """
    K, L, w, zo = model.K, model.L, model.omega_ol, model.zeta_ol
    m, z, wc = spec.m, spec.zeta_cl, spec.omega_cl
    ki = m**4 * wc**6 * L**3 / (120.0 * K)
    kd = (12.0 / L + 2.0 * zo * w - 2.0 * z * wc * (1.0 + 2.0 * m)) / K
    if src is KpSource.S1:
        kp = (4.0 * m**3 * z * wc**5 * L**3 * (m + 2.0) + m**4 * wc**6 * L**4
              - 240.0 * w * w) / (240.0 * K)
    elif src is KpSource.S2:
        d2 = m**4 * wc**4 + 8.0 * m**3 * z * z * wc**4 + 2.0 * m * m * wc**4 * (1.0 + 2.0 * z * z)
        kp = L * L * (240.0 * zo * w / L**3 + 60.0 * w * w / L**2 + 120.0 * K * kd / L**3
                      + 12.0 * K * ki / L - d2) / (60.0 * K)
    elif src is KpSource.S3:
        d3 = (4.0 * m**3 * z * wc**3 + 4.0 * m * m * z * wc**3 * (1.0 + 2.0 * z * z)
              + 4.0 * m * z * wc**3)
        kp = (L**3 * d3 - (120.0 + 120.0 * zo * w * L + 12.0 * w * w * L * L
                           - 60.0 * K * kd * L - K * ki * L**3)) / (12.0 * K * L * L)
    else:
        d4 = 2.0 * m * m * wc * wc * (1.0 + 2.0 * z * z) + 8.0 * m * z * z * wc * wc + wc * wc
        kp = (60.0 / L**2 + 24.0 * zo * w / L + w * w + 12.0 * K * kd / L - d4) / K
    return PidGains(Kp=float(kp), Ki=float(ki), Kd=float(kd))


def closedloop_poles(model: SoptdModel, gains: PidGains, npade: int = 3):
    """Poles of the unity-feedback loop formed with the given Pade order.

    Returns npade + 3 complex values.  A zero controller leaves the loop
    open, so it is rejected rather than reported as a pole set.
    """
    if npade < 1:
        raise ValueError("npade must be >= 1")
    if gains.is_zero:
        raise InvalidGainsError("zero controller leaves the loop open; gains must be nonzero")
    w = model.omega_ol
    delay = pade_tf(npade, model.L)
    plant_quad = Polynomial([w * w, 2.0 * model.zeta_ol * w, 1.0])
    open_den = poly_mul(poly_mul(Polynomial([0.0, 1.0]), plant_quad), delay.den)
    open_num = poly_mul(model.K * gains.numerator(), delay.num)
    char = open_den + open_num
    if char.is_zero:
        raise DegenerateLoopError("characteristic polynomial is identically zero")
    return roots(char)


def is_stable(poles) -> bool:
    """True iff every pole lies strictly left of the stability margin."""
    p = list(poles)
    if not p:
        raise ValueError("empty pole list")
    return max(z.real for z in p) < STABILITY_MARGIN


def max_real_part(poles) -> float:
    return max(z.real for z in poles)
