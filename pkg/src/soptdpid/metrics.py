"""Closed-loop performance quantification.

Covers the four sensitivity functions of the unity-feedback loop, H2/Hinf
system norms, L2/Linf norms of the control signal, gain/phase margins with
the gain-crossover frequency, the combined eleven-metric report, a study of
response sensitivity to the delay-approximation order, and cross-report
correlation.

Margins default to the same delay-approximation order used for stability
decisions (an exact-delay variant is available); time-domain signals and
rational norms use the Pade realization at the configured order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize

from .pade import pade_tf
from .placement import (
    PidGains,
    STABILITY_MARGIN,
    closedloop_poles,
    max_real_part,
)
from .plant import SoptdModel
from .polytf import Polynomial, RationalTF, poly_mul, realize, roots, simulate


class MetricsError(RuntimeError):
    """Numeric failure while computing a performance metric."""


class UnstableLoopError(MetricsError):
    """Closed loop is unstable; metrics are undefined."""


class ImproperNormError(MetricsError):
    """Norm requested for a transfer function outside its properness domain."""


#: The eleven report metrics, in their canonical column order.
METRIC_NAMES = (
    "j2_d", "jinf_d", "j2_u", "jinf_u", "j2_n", "jinf_n",
    "j2_e", "jinf_e", "gm", "phim_deg", "omega_gc",
)


@dataclass(frozen=True)
class SimulationConfig:
    """Time-domain settings: horizon, step size and delay approximation order."""

    horizon: float
    dt: float
    npade: int = 3

    def __post_init__(self):
        if self.horizon <= 0 or self.dt <= 0 or self.horizon <= self.dt:
            raise ValueError(f"require horizon > dt > 0, got {self}")
        if self.npade < 1:
            raise ValueError("npade must be >= 1")


def default_config(model: SoptdModel, npade: int = 3) -> SimulationConfig:
    """Horizon of 50 lag-plus-delay spans, 200 steps per fastest time scale."""
    return SimulationConfig(horizon=50.0 * (model.L + model.T),
                            dt=min(model.L, model.T) / 200.0, npade=npade)


@dataclass(frozen=True)
class SensitivitySet:
    """The four sensitivity functions of the loop, sharing one denominator.

    All four are built over the common closed-loop characteristic polynomial
    (num_plant, den_plant include the delay approximation), so the algebraic
    identities Se + T = 1, Sd = G*Se and Su = C*Se hold without cancellation.
    Su is improper by exactly one degree for an ideal PID.
    """

    Se: RationalTF
    T: RationalTF
    Sd: RationalTF
    Su: RationalTF
    num_plant: Polynomial
    den_plant: Polynomial
    num_controller: Polynomial
    charpoly: Polynomial


def sensitivity_set(model: SoptdModel, gains: PidGains, npade: int = 3) -> SensitivitySet:
    """Se, T, Sd, Su of the unity negative feedback loop around C*G."""
    if gains.is_zero:
        raise ValueError("zero controller leaves the loop open")
    w = model.omega_ol
    delay = pade_tf(npade, model.L)
    num_plant = model.K * delay.num
    den_plant = poly_mul(Polynomial([w * w, 2.0 * model.zeta_ol * w, 1.0]), delay.den)
    num_c = gains.numerator()
    s = Polynomial([0.0, 1.0])
    char = poly_mul(s, den_plant) + poly_mul(num_plant, num_c)
    return SensitivitySet(
        Se=RationalTF(poly_mul(s, den_plant), char),
        T=RationalTF(poly_mul(num_plant, num_c), char),
        Sd=RationalTF(poly_mul(num_plant, s), char),
        Su=RationalTF(poly_mul(num_c, den_plant), char),
        num_plant=num_plant, den_plant=den_plant,
        num_controller=num_c, charpoly=char,
    )


def _require_stable_den(H: RationalTF):
    rts = roots(H.den)
    worst = max(z.real for z in rts)
    if worst >= STABILITY_MARGIN:
        raise MetricsError(
            f"transfer function is not strictly stable: max pole real part {worst:.3e}"
        )
    return rts


def _h2_lyapunov(H: RationalTF) -> float:
    ss = realize(H)
    P = scipy.linalg.solve_continuous_lyapunov(ss.A, -ss.B @ ss.B.T)
    val = float((ss.C @ P @ ss.C.T).item())
    if val < -1e-12:
        raise MetricsError(f"Lyapunov H2 computation returned negative energy {val:.3e}")
    return math.sqrt(max(val, 0.0))


def h2_norm(H: RationalTF, delayL: float = 0.0) -> float:
    """H2 norm sqrt((1/pi) * integral of |H(jw)|^2 over w >= 0).

    A trailing all-pass delay factor does not change the value and is
    accepted only for interface uniformity.  The value is computed by
    adaptive quadrature over logarithmic decades plus an analytic
    high-frequency tail bound, and cross-checked against the exact
    Lyapunov-equation value of the state-space realization; the two must
    agree to 1e-6 relative.
    """
    if H.num.is_zero:
        return 0.0
    rd = H.den.degree - H.num.degree
    if rd < 1:
        raise ImproperNormError("h2_norm requires a strictly proper transfer function")
    rts = _require_stable_den(H)
    scale = max(max(abs(z) for z in rts), 1e-6)

    def density(w):
        return np.abs(H(1j * w)) ** 2

    lo, hi = 1e-8 * scale, 1e6 * scale
    total, _ = scipy.integrate.quad(density, 0.0, lo)
    edges = np.geomspace(lo, hi, 29)
    for a, b in zip(edges[:-1], edges[1:]):
        part, _ = scipy.integrate.quad(density, a, b, epsabs=1e-14, epsrel=1e-10, limit=200)
        total += part
    # Beyond hi, |H(jw)| <= c / w^rd with c from the leading coefficients
    # (hi sits far above every pole and zero, so the bound is tight).
    c = abs(H.num.coeffs[-1] / H.den.coeffs[-1])
    total += c * c / ((2 * rd - 1) * hi ** (2 * rd - 1))
    quad_val = math.sqrt(total / math.pi)
    lyap_val = _h2_lyapunov(H)
    ref = max(lyap_val, 1e-300)
    if abs(quad_val - lyap_val) / ref > 1e-6:
        raise MetricsError(
            f"H2 cross-check failed: quadrature {quad_val:.12g} vs Lyapunov {lyap_val:.12g}"
        )
    return quad_val


def hinf_norm(H: RationalTF, delayL: float = 0.0, omega_scale: float = 1.0) -> float:
    """Peak of |H(jw)| over w >= 0 (a delay factor is modulus-preserving).

    Scans a dense logarithmic grid spanning [1e-4, 1e4] * omega_scale and
    refines around the grid argmax by golden-section search in log-frequency.
    """
    if H.num.is_zero:
        return 0.0
    if H.num.degree > H.den.degree:
        raise ImproperNormError("hinf_norm requires a proper transfer function")
    _require_stable_den(H)
    w = np.geomspace(1e-4 * omega_scale, 1e4 * omega_scale, 2001)
    mag = np.abs(H(1j * w))
    i = int(np.argmax(mag))
    lo = math.log(w[max(i - 1, 0)])
    hi = math.log(w[min(i + 1, w.size - 1)])
    res = scipy.optimize.minimize_scalar(
        lambda x: -abs(H(1j * math.exp(x))),
        bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    peak = max(float(mag[i]), float(-res.fun))
    dc = abs(H(0.0))
    tail = abs(H.num.coeffs[-1] / H.den.coeffs[-1]) if H.num.degree == H.den.degree else 0.0
    return max(peak, float(dc), tail)


@dataclass(frozen=True)
class Margins:
    """Classical loop margins; absent crossovers are None / +inf markers."""

    gm: float  # ratio; +inf when the phase never crosses -180 degrees
    phim_deg: float | None  # None when there is no gain crossover
    omega_gc: float | None  # None when there is no gain crossover


def _low_freq_phase(sys: RationalTF, delay: float, w: float) -> float:
    """Analytic phase asymptote of sys(jw)*e^(-jw*delay) as w -> 0+."""
    jn = int(np.nonzero(sys.num.coeffs)[0][0])
    jd = int(np.nonzero(sys.den.coeffs)[0][0])
    c = sys.num.coeffs[jn] / sys.den.coeffs[jd]
    return (jn - jd) * math.pi / 2.0 + (0.0 if c > 0 else math.pi) - w * delay


def margins_from_loop(sys: RationalTF, delay: float,
                      n_grid: int = 8000) -> Margins:
    """Margins of a loop transfer function with an exact delay factor.

    The phase is unwrapped continuously from the analytic low-frequency
    asymptote.  The gain margin is the smallest 1/|L| over every crossing of
    -180 degrees modulo 360: the loop gain is not monotone in frequency, so
    any crossing can be the one nearest the critical point.
    """
    if sys.num.is_zero:
        raise MetricsError("zero loop transfer function has no margins")
    scale_hi = max(1.0, max(abs(z) for z in roots(sys.den)) if sys.den.degree >= 1 else 1.0)
    w_hi = 1e3 * scale_hi + (40.0 * math.pi / delay if delay > 0 else 0.0)
    w_lo = 1e-6 * min(1.0, scale_hi)
    w = np.geomspace(w_lo, w_hi, n_grid)
    resp = sys(1j * w) * np.exp(-1j * w * delay)
    mag = np.abs(resp)
    ph = np.unwrap(np.angle(resp))
    anchor = _low_freq_phase(sys, delay, w_lo)
    ph += 2.0 * math.pi * round((anchor - ph[0]) / (2.0 * math.pi))

    def phase_near(omega, guess):
        """Continuous phase at omega, resolved to the branch nearest `guess`."""
        a = math.atan2(*(lambda z: (z.imag, z.real))(complex(sys(1j * omega)) * np.exp(-1j * omega * delay)))
        return a + 2.0 * math.pi * round((guess - a) / (2.0 * math.pi))

    # Gain crossover: first cell where |L| crosses 1.
    omega_gc = None
    phim = None
    sgn = np.sign(mag - 1.0)
    crossings = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    if sgn[0] == 0:
        omega_gc = float(w[0])
    elif crossings.size:
        i = int(crossings[0])
        f = lambda x: abs(complex(sys(1j * x)) * np.exp(-1j * x * delay)) - 1.0
        omega_gc = float(scipy.optimize.brentq(f, w[i], w[i + 1], xtol=1e-14, rtol=1e-15))
    if omega_gc is not None:
        i = int(np.searchsorted(w, omega_gc))
        i = min(max(i, 1), n_grid - 1)
        t = (math.log(omega_gc) - math.log(w[i - 1])) / (math.log(w[i]) - math.log(w[i - 1]))
        guess = ph[i - 1] + t * (ph[i] - ph[i - 1])
        phim = 180.0 + math.degrees(phase_near(omega_gc, guess))

    # Phase crossovers: every crossing of -180 deg modulo 360 counts (the
    # loop gain is not monotone in frequency, so a later crossing can sit
    # closer to the critical point); the gain margin is the smallest 1/|L|
    # over all of them.
    gm = math.inf
    k_lo = math.ceil((-math.pi - ph.max()) / (2.0 * math.pi))
    k_hi = math.floor((-math.pi - ph.min()) / (2.0 * math.pi))
    for k in range(max(k_lo, 0), k_hi + 1):
        level = -math.pi - 2.0 * math.pi * k
        diff = ph - level
        cells = np.nonzero(diff[:-1] * diff[1:] < 0)[0]
        for i in map(int, cells):

            def g(x, i=i, level=level):
                t = (math.log(x) - math.log(w[i])) / (math.log(w[i + 1]) - math.log(w[i]))
                guess = ph[i] + t * (ph[i + 1] - ph[i])
                return phase_near(x, guess) - level

            omega_pc = float(scipy.optimize.brentq(g, w[i], w[i + 1],
                                                   xtol=1e-14, rtol=1e-15))
            gain = abs(complex(sys(1j * omega_pc)) * np.exp(-1j * omega_pc * delay))
            gm = min(gm, 1.0 / gain)
    return Margins(gm=float(gm), phim_deg=phim, omega_gc=omega_gc)


def margins(model: SoptdModel, gains: PidGains, npade: int | None = 3) -> Margins:
    """Gain margin, phase margin (degrees) and gain-crossover frequency.

    By default the loop uses the same delay approximation order as every
    stability decision, so the margins describe the model actually being
    stabilized: its phase depth is finite and so is its phase-crossing set.
    Passing npade=None uses the exact delay e^(-j*omega*L) instead; the
    exact-delay loop crosses -180 degrees infinitely often and its gain
    margin can come out smaller (never larger) than the approximated one.
    The phase margin and crossover frequency are insensitive to the choice
    because the approximation is phase-exact at low frequency.
    """
    if gains.is_zero:
        raise ValueError("zero controller leaves the loop open")
    w = model.omega_ol
    loop = RationalTF(
        model.K * gains.numerator(),
        poly_mul(Polynomial([0.0, 1.0]), Polynomial([w * w, 2.0 * model.zeta_ol * w, 1.0])),
    )
    if npade is None:
        return margins_from_loop(loop, model.L)
    return margins_from_loop(loop * pade_tf(npade, model.L), 0.0)


@dataclass(frozen=True)
class ControlSignalNorms:
    """L2/Linf of the smooth part of the control signal for a step set-point.

    An ideal PID differentiates the reference step into an impulse of weight
    delta_weight (= Kd for these loops); it is reported separately because
    including it would make Linf infinite and L2 divergent.
    """

    l2: float
    linf: float
    delta_weight: float
    horizon: float


def step_signal_norms(H: RationalTF, dt: float, horizon: float) -> ControlSignalNorms:
    """Norms of the step response of H over [0, horizon].

    H may be improper by exactly one degree: the step response then carries
    an impulsive part whose weight is split off by long division and
    reported as delta_weight, while the norms cover the remaining smooth
    signal.  The L2 value is horizon-dependent whenever the signal settles
    to a nonzero level.
    """
    if H.num.is_zero:
        return ControlSignalNorms(l2=0.0, linf=0.0, delta_weight=0.0, horizon=horizon)
    stepped = RationalTF(H.num, poly_mul(H.den, Polynomial([0.0, 1.0])))
    ss = realize(stepped)  # raises if H is improper by more than one degree
    t, y = simulate(ss, "impulse", dt, horizon)
    l2 = float(math.sqrt(np.trapezoid(y * y, t)))
    return ControlSignalNorms(l2=l2, linf=float(np.max(np.abs(y))),
                              delta_weight=ss.D, horizon=horizon)


def control_signal_norms(model: SoptdModel, gains: PidGains,
                         cfg: SimulationConfig | None = None) -> ControlSignalNorms:
    """L2/Linf of the control signal for a unit step set-point change."""
    cfg = cfg or default_config(model)
    poles = closedloop_poles(model, gains, cfg.npade)
    if max_real_part(poles) >= STABILITY_MARGIN:
        raise UnstableLoopError(f"loop unstable; poles {poles}")
    sens = sensitivity_set(model, gains, cfg.npade)
    return step_signal_norms(sens.Su, cfg.dt, cfg.horizon)


@dataclass(frozen=True)
class PerformanceReport:
    """The eleven performance measures of one closed loop.

    The J2/Jinf pairs are weighted system norms for step disturbance (d),
    control effort (u), measurement noise (n) and set-point tracking (e);
    gm, phim_deg and omega_gc are the classical margins.
    """

    j2_d: float
    jinf_d: float
    j2_u: float
    jinf_u: float
    j2_n: float
    jinf_n: float
    j2_e: float
    jinf_e: float
    gm: float
    phim_deg: float | None
    omega_gc: float | None
    horizon: float
    dt: float
    npade: int

    def metric(self, name: str):
        if name not in METRIC_NAMES:
            raise KeyError(f"unknown metric {name!r}")
        return getattr(self, name)

    def as_row(self) -> list:
        return [self.metric(n) for n in METRIC_NAMES]

    def to_json(self) -> str:
        data = {n: self.metric(n) for n in METRIC_NAMES}
        data.update(horizon=self.horizon, dt=self.dt, npade=self.npade)
        return json.dumps(data)

    @staticmethod
    def from_json(text: str) -> "PerformanceReport":
        data = json.loads(text)
        return PerformanceReport(**data)


def performance_report(model: SoptdModel, gains: PidGains,
                       cfg: SimulationConfig | None = None) -> PerformanceReport:
    """Full eleven-metric report for one plant/controller pair.

    Step weighting (an extra 1/s) applies to the disturbance and tracking
    channels; the noise channel is impulse-weighted.  The control-signal
    norms come from time simulation and are horizon-dependent (the control
    signal settles at a nonzero level for a step set-point, so its
    infinite-horizon L2 diverges); the horizon is part of the report.
    """
    cfg = cfg or default_config(model)
    poles = closedloop_poles(model, gains, cfg.npade)
    if max_real_part(poles) >= STABILITY_MARGIN:
        offenders = [z for z in poles if z.real >= STABILITY_MARGIN]
        raise UnstableLoopError(f"loop unstable; offending poles {offenders}")
    sens = sensitivity_set(model, gains, cfg.npade)
    wscale = model.omega_ol
    # Step-weighted channels: Sd/s and Se/s reduce to exact polynomial
    # quotients over the shared characteristic polynomial, so no numerical
    # cancellation of the explicit 1/s is ever performed.
    sd_over_s = RationalTF(sens.num_plant, sens.charpoly)
    se_over_s = RationalTF(sens.den_plant, sens.charpoly)
    u = step_signal_norms(sens.Su, cfg.dt, cfg.horizon)
    m = margins(model, gains)
    return PerformanceReport(
        j2_d=h2_norm(sd_over_s, model.L),
        jinf_d=hinf_norm(sd_over_s, model.L, omega_scale=wscale),
        j2_u=u.l2,
        jinf_u=u.linf,
        j2_n=h2_norm(sens.T, model.L),
        jinf_n=hinf_norm(sens.T, model.L, omega_scale=wscale),
        j2_e=h2_norm(se_over_s, model.L),
        jinf_e=hinf_norm(se_over_s, model.L, omega_scale=wscale),
        gm=m.gm, phim_deg=m.phim_deg, omega_gc=m.omega_gc,
        horizon=cfg.horizon, dt=cfg.dt, npade=cfg.npade,
    )


def correlation_matrix(reports) -> np.ndarray:
    """Pearson correlation of the eleven metrics across reports.

    Pairs with an absent margin value are dropped pairwise; metrics constant
    across all reports yield NaN entries (undefined correlation).
    """
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError("need at least two reports")
    cols = np.array([[r.metric(n) if r.metric(n) is not None else np.nan
                      for n in METRIC_NAMES] for r in reports], dtype=float)
    k = len(METRIC_NAMES)
    out = np.full((k, k), np.nan)
    for a in range(k):
        for b in range(a, k):
            mask = np.isfinite(cols[:, a]) & np.isfinite(cols[:, b])
            if mask.sum() < 2:
                continue
            x, y = cols[mask, a], cols[mask, b]
            sx, sy = x.std(), y.std()
            if sx == 0.0 or sy == 0.0:
                out[a, b] = out[b, a] = 1.0 if a == b else np.nan
                continue
            r = float(np.corrcoef(x, y)[0, 1])
            out[a, b] = out[b, a] = r
    return out


@dataclass(frozen=True)
class OrderResponse:
    """Closed-loop behaviour at one delay-approximation order."""

    order: int
    stable: bool
    t: np.ndarray | None
    setpoint: np.ndarray | None
    disturbance: np.ndarray | None
    dominant_pole: complex | None

    @property
    def dominant_damping(self) -> float | None:
        if self.dominant_pole is None:
            return None
        p = self.dominant_pole
        return -p.real / abs(p)


@dataclass(frozen=True)
class PadeInvarianceResult:
    """Per-order responses with deviations from the reference (first) order."""

    responses: dict[int, OrderResponse]
    setpoint_deviation: dict[int, float]
    disturbance_deviation: dict[int, float]


def _dominant_pole(poles):
    stable = [p for p in poles if p.real < STABILITY_MARGIN]
    if not stable:
        return None
    pairs = [p for p in stable if p.imag > 1e-9]
    pool = pairs if pairs else stable
    return max(pool, key=lambda p: p.real)


def pade_invariance(model: SoptdModel, gains: PidGains, orders,
                    cfg: SimulationConfig | None = None) -> PadeInvarianceResult:
    """Set-point/disturbance step responses across delay-approximation orders.

    The first order in `orders` is the reference; deviations are the maximum
    absolute response difference against it over the common time grid.
    Instability at some order is flagged per order, not fatal.
    """
    orders = list(orders)
    if not orders:
        raise ValueError("orders must be nonempty")
    cfg = cfg or default_config(model)
    responses = {}
    for r in orders:
        if r in responses:
            continue
        poles = closedloop_poles(model, gains, r)
        if max_real_part(poles) >= STABILITY_MARGIN:
            responses[r] = OrderResponse(order=r, stable=False, t=None,
                                         setpoint=None, disturbance=None,
                                         dominant_pole=_dominant_pole(poles))
            continue
        sens = sensitivity_set(model, gains, r)
        t, ysp = simulate(realize(sens.T), "step", cfg.dt, cfg.horizon)
        _, yd = simulate(realize(sens.Sd), "step", cfg.dt, cfg.horizon)
        responses[r] = OrderResponse(order=r, stable=True, t=t, setpoint=ysp,
                                     disturbance=yd,
                                     dominant_pole=_dominant_pole(poles))
    ref = responses[orders[0]]
    dev_sp, dev_d = {}, {}
    for r in orders:
        resp = responses[r]
        if ref.stable and resp.stable:
            dev_sp[r] = float(np.max(np.abs(resp.setpoint - ref.setpoint)))
            dev_d[r] = float(np.max(np.abs(resp.disturbance - ref.disturbance)))
        else:
            dev_sp[r] = math.inf
            dev_d[r] = math.inf
    return PadeInvarianceResult(responses=responses,
                                setpoint_deviation=dev_sp,
                                disturbance_deviation=dev_d)
