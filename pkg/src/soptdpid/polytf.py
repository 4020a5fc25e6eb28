"""Real-coefficient polynomials, rational transfer functions and LTI simulation.

Coefficients are stored in ascending powers of s (the constant term first),
which keeps multiplication a plain convolution.  Pretty-printing is done in
descending powers with explicit power labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PolytfError(ValueError):
    """Base error for polynomial / transfer-function operations."""


class ImproperSystemError(PolytfError):
    """Numerator degree exceeds denominator degree."""


class DegenerateLoopError(PolytfError):
    """Closing the loop produced an identically zero characteristic polynomial."""


class PoleOnAxisError(PolytfError):
    """Frequency response requested at a pole on the imaginary axis."""


class UnstableIntegrationError(PolytfError):
    """Fixed-step integration would be unstable at the requested step size."""


# Relative residual accepted for eigenvalue-based root finding.  Companion
# eigensolvers on the degrees handled here (<= ~25) deliver far better than
# this; the bound exists to catch pathological inputs, not to tune accuracy.
ROOT_RESIDUAL_BOUND = 1e-6

# Relative tolerance for clustering near-coincident roots when *reporting*
# multiplicities.  Stability decisions always use the raw eigenvalues.
ROOT_CLUSTER_RTOL = 1e-3


def _trim(coeffs):
    c = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.zeros(0)
    return c[: nz[-1] + 1]


class Polynomial:
    """Immutable real polynomial in ascending powers of s.

    The zero polynomial is represented by an empty coefficient sequence;
    trailing (highest-power) zero coefficients are always trimmed.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = _trim(coeffs)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        return self.coeffs.size - 1

    def __call__(self, s):
        if self.is_zero:
            return 0.0 * s if np.iscomplexobj(s) else 0.0
        # Horner on descending coefficients
        return np.polyval(self.coeffs[::-1], s)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return poly_mul(self, other)
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        n = max(a.size, b.size)
        out = np.zeros(n)
        out[: a.size] += a
        out[: b.size] += b
        return Polynomial(out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def scaled_monic(self) -> "Polynomial":
        if self.is_zero:
            raise PolytfError("zero polynomial has no monic form")
        return Polynomial(self.coeffs / self.coeffs[-1])

    def __repr__(self):
        if self.is_zero:
            return "Polynomial(0)"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0.0:
                continue
            if k == 0:
                terms.append(f"{c:g}")
            elif k == 1:
                terms.append(f"{c:g}*s")
            else:
                terms.append(f"{c:g}*s^{k}")
        return "Polynomial(" + " + ".join(terms) + ")"


def poly_from_roots(roots) -> Polynomial:
    """Monic polynomial with the given (conjugate-closed) root set."""
    c = np.atleast_1d(np.asarray(roots, dtype=complex))
    out = np.array([1.0 + 0j])
    for r in c:
        out = np.convolve(out, np.array([-r, 1.0]))
    return Polynomial(out.real)


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    """Product of two polynomials (coefficient convolution)."""
    if a.is_zero or b.is_zero:
        return Polynomial(())
    return Polynomial(np.convolve(a.coeffs, b.coeffs))


def roots(p: Polynomial):
    """All roots of p (with multiplicity) via companion-matrix eigenvalues.

    Raises on the zero polynomial and on degree-0 input.  Each returned root
    satisfies |p(root)| / max|coeff| < ROOT_RESIDUAL_BOUND relative to the
    local polynomial scale.
    """
    if p.is_zero or p.degree < 1:
        raise PolytfError("roots requires a polynomial of degree >= 1")
    # np.roots builds the balanced companion matrix and runs QR iteration.
    r = np.roots(p.coeffs[::-1])
    scale = np.max(np.abs(p.coeffs))
    mags = np.maximum(np.abs(r), 1.0)
    resid = np.abs(p(r)) / (scale * mags**p.degree)
    if np.any(resid > ROOT_RESIDUAL_BOUND):
        raise PolytfError(f"root residual {resid.max():.3e} exceeds bound {ROOT_RESIDUAL_BOUND:g}")
    return sorted(r, key=lambda z: (z.real, z.imag))


def cluster_roots(rts, rtol=ROOT_CLUSTER_RTOL):
    """Group near-coincident roots for reporting; returns (center, count) pairs."""
    remaining = list(rts)
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        scale = max(abs(seed), 1.0)
        rest = []
        for z in remaining:
            if abs(z - seed) <= rtol * scale:
                members.append(z)
            else:
                rest.append(z)
        remaining = rest
        clusters.append((sum(members) / len(members), len(members)))
    return clusters


@dataclass(frozen=True)
class RationalTF:
    """Rational transfer function num/den, kept in unreduced form.

    Common factors between num and den are never cancelled implicitly:
    cancellation can hide near-unstable hidden modes.
    """

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise PolytfError("denominator must not be the zero polynomial")

    def __call__(self, s):
        return self.num(s) / self.den(s)

    @property
    def relative_degree(self) -> int:
        return self.den.degree - max(self.num.degree, 0)

    def __mul__(self, other: "RationalTF") -> "RationalTF":
        return RationalTF(poly_mul(self.num, other.num), poly_mul(self.den, other.den))


def feedback_unity(forward: RationalTF) -> RationalTF:
    """Close a unity negative feedback loop around `forward` = G*C.

    Returns forward / (1 + forward) = num / (den + num), unreduced.
    """
    closed_den = forward.den + forward.num
    if closed_den.is_zero:
        raise DegenerateLoopError("den + num is identically zero; loop is degenerate")
    return RationalTF(forward.num, closed_den)


def freq_response(sys: RationalTF, delay: float, omega):
    """Evaluate sys(j*omega) * exp(-j*omega*delay) with the delay applied exactly."""
    if delay < 0:
        raise PolytfError("delay must be nonnegative")
    w = np.asarray(omega, dtype=float)
    jw = 1j * w
    den = sys.den(jw)
    scale = np.max(np.abs(sys.den.coeffs))
    if np.any(np.abs(den) <= 1e-300 * scale):
        raise PoleOnAxisError("denominator vanishes on the imaginary axis at requested omega")
    return sys.num(jw) / den * np.exp(-jw * delay)


@dataclass(frozen=True)
class StateSpace:
    """Single-input single-output state-space realization (A, B, C, D)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    @property
    def order(self) -> int:
        return self.A.shape[0]


def realize(sys: RationalTF) -> StateSpace:
    """Controllable-canonical realization of a proper (or biproper) RationalTF.

    Biproper input is split by long division into a constant feedthrough D
    plus a strictly proper remainder.
    """
    num, den = sys.num, sys.den
    n = den.degree
    excess = max(num.degree, 0) - n
    if excess > 0:
        raise ImproperSystemError(f"numerator degree exceeds denominator degree by {excess}")
    dc = den.coeffs / den.coeffs[-1]
    nc = np.zeros(n + 1)
    if not num.is_zero:
        nc[: num.degree + 1] = num.coeffs / den.coeffs[-1]
    d = nc[n]
    rem = nc[:n] - d * dc[:n]
    A = np.zeros((n, n))
    if n > 1:
        A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -dc[:n]
    B = np.zeros((n, 1))
    if n > 0:
        B[-1, 0] = 1.0
    C = rem.reshape(1, n)
    return StateSpace(A=A, B=B, C=C, D=float(d))


# RK4 stability limit on the negative real axis is ~2.785; keep headroom.
_RK4_STABILITY_LIMIT = 2.5


def simulate(ss: StateSpace, input: str, dt: float, horizon: float):
    """Fixed-step RK4 simulation of a state-space model.

    input: "step" (unit input from t=0) or "impulse" (realized as the initial
    condition x(0) = B with zero input).  For impulse input any direct
    feedthrough D would be a Dirac delta at t=0; it is *not* injected into
    the sampled trace and must be accounted for separately by the caller.

    Returns (t, y) sampled at t = 0, dt, 2*dt, ... up to horizon.
    """
    if dt <= 0 or horizon <= dt:
        raise PolytfError("require dt > 0 and horizon > dt")
    if input not in ("step", "impulse"):
        raise PolytfError(f"unknown input type {input!r}")
    A = ss.A
    lam = np.linalg.eigvals(A) if ss.order else np.zeros(0)
    if lam.size and dt * np.max(np.abs(lam)) > _RK4_STABILITY_LIMIT:
        raise UnstableIntegrationError(
            f"dt={dt:g} too large for spectral radius {np.max(np.abs(lam)):.3g}; "
            f"reduce dt below {_RK4_STABILITY_LIMIT / np.max(np.abs(lam)):.3g}"
        )
    nsteps = int(np.floor(horizon / dt + 1e-12))
    t = np.arange(nsteps + 1) * dt
    n = ss.order
    if n == 0:
        y = np.full(t.shape, ss.D if input == "step" else 0.0)
        return t, y
    # The system is LTI with piecewise-constant input, so the RK4 update is a
    # fixed affine map x+ = M x + g*u; precompute it once.
    I = np.eye(n)
    hA = dt * A
    M = I + hA @ (I + hA @ (I + hA @ (I + hA / 4.0) / 3.0) / 2.0)
    g = dt * (I + hA @ (I + hA @ (I + hA / 4.0) / 3.0) / 2.0) @ ss.B[:, 0]
    if input == "step":
        x = np.zeros(n)
        u = 1.0
        d_out = ss.D
    else:
        x = ss.B[:, 0].copy()
        u = 0.0
        d_out = 0.0
    C = ss.C[0]
    y = np.empty(nsteps + 1)
    for k in range(nsteps + 1):
        y[k] = C @ x + d_out * u
        x = M @ x + g * u
    return t, y
