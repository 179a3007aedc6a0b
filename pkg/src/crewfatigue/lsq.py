"""Weighted least-squares polynomial fits with full covariance.

The model is linear in its parameters, so the minimum of the weighted
squared-residual sum is found exactly by an orthogonal (QR)
decomposition of the weighted design matrix; the parameter covariance is
the inverse weighted normal matrix recovered from the same
decomposition. Confidence bands propagate that covariance through the
polynomial basis, with 95% taken as two standard deviations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaincc


class SingularFitError(Exception):
    """Design matrix rank-deficient for the requested degree."""


@dataclass(frozen=True)
class WeightedPoint:
    x: float
    y: float
    sigma_y: float

    def __post_init__(self):
        if not self.sigma_y > 0:
            raise ValueError(f"sigma_y must be positive, got {self.sigma_y}")


@dataclass(frozen=True)
class FitResult:
    degree: int
    coeffs: np.ndarray        # ascending powers: a + b x + c x^2 + ...
    covariance: np.ndarray
    chi2: float
    dof: int
    p_value: float

    def to_json_dict(self) -> dict:
        return {
            "degree": self.degree,
            "coeffs": [float(c) for c in self.coeffs],
            "cov": [[float(v) for v in row] for row in self.covariance],
            "chi2": float(self.chi2),
            "dof": int(self.dof),
            "p": float(self.p_value),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_dict(cls, d: dict) -> "FitResult":
        return cls(
            degree=int(d["degree"]),
            coeffs=np.asarray(d["coeffs"], dtype=float),
            covariance=np.asarray(d["cov"], dtype=float),
            chi2=float(d["chi2"]),
            dof=int(d["dof"]),
            p_value=float(d["p"]),
        )

    @classmethod
    def from_coeffs(cls, coeffs, covariance=None, chi2=0.0, dof=0, p_value=float("nan")) -> "FitResult":
        """Build a result from known coefficients (e.g. published values)."""
        c = np.asarray(coeffs, dtype=float)
        v = (np.zeros((c.size, c.size)) if covariance is None
             else np.asarray(covariance, dtype=float))
        return cls(degree=c.size - 1, coeffs=c, covariance=v,
                   chi2=chi2, dof=dof, p_value=p_value)


def chi2_pvalue(chi2: float, dof: int) -> float:
    """Upper-tail chi-square probability via the regularised incomplete
    gamma function."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    if chi2 < 0:
        raise ValueError(f"chi2 must be >= 0, got {chi2}")
    return float(gammaincc(dof / 2.0, chi2 / 2.0))


def fit_polynomial(points: Sequence[WeightedPoint], degree: int) -> FitResult:
    """Exact weighted LSQ polynomial fit of the given degree."""
    n = len(points)
    n_par = degree + 1
    if n < n_par:
        raise SingularFitError(f"{n} points cannot constrain degree {degree}")
    x = np.array([p.x for p in points], dtype=float)
    if np.unique(x).size < n_par:
        raise SingularFitError(
            f"only {np.unique(x).size} distinct x values for degree {degree}")
    y = np.array([p.y for p in points], dtype=float)
    sigma = np.array([p.sigma_y for p in points], dtype=float)

    design = np.vander(x, n_par, increasing=True) / sigma[:, None]
    target = y / sigma

    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    if np.any(diag < 1e-12 * diag.max()):
        raise SingularFitError("weighted design matrix is numerically singular")
    coeffs = np.linalg.solve(r, q.T @ target)
    r_inv = np.linalg.solve(r, np.eye(n_par))
    covariance = r_inv @ r_inv.T

    residual = design @ coeffs - target
    chi2 = float(residual @ residual)
    dof = n - n_par
    p = chi2_pvalue(chi2, dof) if dof >= 1 else float("nan")
    return FitResult(degree=degree, coeffs=coeffs, covariance=covariance,
                     chi2=chi2, dof=dof, p_value=p)


def predict_with_ci(fit: FitResult, x):
    """Curve value with its propagated sigma and 2-sigma band.

    Returns (y, sigma_f, ci_low, ci_high); accepts scalars or arrays.
    """
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    basis = np.vander(xv, fit.degree + 1, increasing=True)
    y = basis @ fit.coeffs
    var = np.einsum("ij,jk,ik->i", basis, fit.covariance, basis)
    sigma = np.sqrt(np.maximum(var, 0.0))
    lo, hi = y - 2.0 * sigma, y + 2.0 * sigma
    if np.isscalar(x):
        return float(y[0]), float(sigma[0]), float(lo[0]), float(hi[0])
    return y, sigma, lo, hi


def curve_covariance(fit: FitResult, x1: float, x2: float) -> float:
    """Covariance between fitted-curve values at two abscissae."""
    g1 = np.vander([x1], fit.degree + 1, increasing=True)[0]
    g2 = np.vander([x2], fit.degree + 1, increasing=True)[0]
    return float(g1 @ fit.covariance @ g2)


def propagate_ratio(y1: float, sigma1: float, y2: float, sigma2: float,
                    cov12: float = 0.0) -> tuple[float, float]:
    """First-order uncertainty of y1/y2 including the covariance term."""
    if y2 == 0:
        raise ZeroDivisionError("ratio denominator is zero")
    ratio = y1 / y2
    var = (sigma1 / y2) ** 2 + (y1 * sigma2 / y2 ** 2) ** 2 \
        - 2.0 * y1 * cov12 / y2 ** 3
    return ratio, float(np.sqrt(max(var, 0.0)))
