"""Polynomial-regression tuning rules for robust stable PID gains.

The rules map the open-loop shape parameters (delay-to-lag ratio L/T and
damping zeta_ol) onto the robust gain triples found for the benchmark
plants.  The proportional-gain basis is quadratic in both regressors; the
integral and derivative bases are quadratic in L/T, linear in zeta_ol, with
the interaction term.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .placement import PidGains

KP_TERMS = ("p00", "p10", "p01", "p20", "p11", "p02")
KI_KD_TERMS = ("p00", "p10", "p01", "p20", "p11")

GAIN_NAMES = ("Kp", "Ki", "Kd")


class CollinearityError(ValueError):
    """Design matrix is rank deficient."""


@dataclass(frozen=True)
class RuleSample:
    """One training point: plant shape parameters plus its robust gains."""

    l_over_t: float
    zeta_ol: float
    K: float
    gains: PidGains


@dataclass(frozen=True)
class GainFit:
    """OLS fit of one gain on its polynomial basis."""

    gain: str
    terms: tuple[str, ...]
    coeffs: np.ndarray
    std_errors: np.ndarray
    half_widths: np.ndarray  # 95% two-sided t-intervals
    rmse: float
    r2: float
    adj_r2: float
    dof: int

    def predict(self, l_over_t: float, zeta_ol: float) -> float:
        return float(_design_row(self.terms, l_over_t, zeta_ol) @ self.coeffs)


@dataclass(frozen=True)
class TuningRuleFit:
    """Per-gain regression results over one training set."""

    Kp: GainFit
    Ki: GainFit
    Kd: GainFit
    scale_by_k: bool

    def __iter__(self):
        return iter((self.Kp, self.Ki, self.Kd))

    def to_json(self) -> str:
        data = {"scale_by_k": self.scale_by_k}
        for f in self:
            data[f.gain] = {
                "terms": list(f.terms),
                "coeffs": list(map(float, f.coeffs)),
                "std_errors": list(map(float, f.std_errors)),
                "half_widths": list(map(float, f.half_widths)),
                "rmse": f.rmse, "r2": f.r2, "adj_r2": f.adj_r2, "dof": f.dof,
            }
        return json.dumps(data, indent=2)

    @staticmethod
    def from_json(text: str) -> "TuningRuleFit":
        data = json.loads(text)
        fits = {}
        for name in GAIN_NAMES:
            d = data[name]
            fits[name] = GainFit(
                gain=name, terms=tuple(d["terms"]),
                coeffs=np.array(d["coeffs"]), std_errors=np.array(d["std_errors"]),
                half_widths=np.array(d["half_widths"]),
                rmse=d["rmse"], r2=d["r2"], adj_r2=d["adj_r2"], dof=d["dof"],
            )
        return TuningRuleFit(scale_by_k=bool(data["scale_by_k"]), **fits)


def _design_row(terms, x, z) -> np.ndarray:
    basis = {"p00": 1.0, "p10": x, "p01": z, "p20": x * x, "p11": x * z, "p02": z * z}
    return np.array([basis[t] for t in terms])


def _ols(terms, X, y, gain) -> GainFit:
    A = np.vstack([_design_row(terms, x, z) for x, z in X])
    n, p = A.shape
    if n <= p:
        raise ValueError(f"need more than {p} samples for the {gain} basis, got {n}")
    rank = np.linalg.matrix_rank(A)
    if rank < p:
        _, _, vt = np.linalg.svd(A)
        worst = np.argsort(np.abs(vt[-1]))[::-1][:2]
        names = [terms[int(i)] for i in worst]
        raise CollinearityError(
            f"design matrix rank {rank} < {p}; dependent columns involve {names}"
        )
    coeffs, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coeffs
    dof = n - p
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / dof
    s2 = ss_res / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    se = np.sqrt(np.diag(cov))
    hw = scipy.stats.t.ppf(0.975, dof) * se
    return GainFit(gain=gain, terms=tuple(terms), coeffs=coeffs, std_errors=se,
                   half_widths=hw, rmse=float(np.sqrt(s2)), r2=r2, adj_r2=adj, dof=dof)


def fit_tuning_rule(samples, scale_by_k: bool = False) -> TuningRuleFit:
    """OLS tuning-rule fit over (L/T, zeta_ol) for the three gains.

    With scale_by_k=False (default) the regressand is the raw gain; with
    scale_by_k=True it is K*gain, making predict_gains exactly in-sample
    consistent for plants with K != 1.  The default matches the convention
    under which the published benchmark coefficients are reproduced.
    """
    samples = list(samples)
    X = [(s.l_over_t, s.zeta_ol) for s in samples]
    fits = {}
    for name, terms in (("Kp", KP_TERMS), ("Ki", KI_KD_TERMS), ("Kd", KI_KD_TERMS)):
        y = np.array([getattr(s.gains, name) * (s.K if scale_by_k else 1.0)
                      for s in samples])
        fits[name] = _ols(terms, X, y, name)
    return TuningRuleFit(scale_by_k=scale_by_k, **fits)


def predict_gains(fit: TuningRuleFit, l_over_t: float, zeta_ol: float,
                  K: float = 1.0) -> PidGains:
    """Evaluate the fitted rule: each gain = basis . coefficients / K."""
    if K == 0:
        raise ValueError("K must be nonzero")
    return PidGains(
        Kp=fit.Kp.predict(l_over_t, zeta_ol) / K,
        Ki=fit.Ki.predict(l_over_t, zeta_ol) / K,
        Kd=fit.Kd.predict(l_over_t, zeta_ol) / K,
    )


def search_orders(samples, gain: str, max_order: int = 2, scale_by_k: bool = False):
    """Exhaustive small-basis search ranked by adjusted R-squared.

    Enumerates bases up to max_order in each regressor (always with the
    intercept; the interaction enters once both regressors appear) and
    returns (orders, GainFit) pairs sorted best-first.  Provided for model
    order selection studies; the default rule orders are fixed.
    """
    if gain not in GAIN_NAMES:
        raise ValueError(f"gain must be one of {GAIN_NAMES}")
    samples = list(samples)
    X = [(s.l_over_t, s.zeta_ol) for s in samples]
    y = np.array([getattr(s.gains, gain) * (s.K if scale_by_k else 1.0)
                  for s in samples])
    results = []
    for ox in range(max_order + 1):
        for oz in range(max_order + 1):
            terms = ["p00"]
            if ox >= 1:
                terms.append("p10")
            if oz >= 1:
                terms.append("p01")
            if ox >= 2:
                terms.append("p20")
            if ox >= 1 and oz >= 1:
                terms.append("p11")
            if oz >= 2:
                terms.append("p02")
            if len(samples) <= len(terms):
                continue
            try:
                fit = _ols(terms, X, y, gain)
            except CollinearityError:
                continue
            results.append(((ox, oz), fit))
    results.sort(key=lambda item: -item[1].adj_r2)
    return results
