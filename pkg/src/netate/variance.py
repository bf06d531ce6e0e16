"""Variance estimation and confidence intervals under network interference.

The asymptotic variance of the regression-adjusted estimator decomposes into
two group residual moments, a slope-contrast quadratic form in the covariate
covariance, and a network term b * pi * (1 - pi) * (derivative contrast)^2.
This module estimates each piece: the degree-ratio statistic b_hat from the
adjacency matrix, derivative contrasts through eigenvector-balanced exposure
weights, and the final assembly, plus the conservative 8 tau^2 alternative
and an incremental polynomial scheme for the nonparametric estimator's
variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse.linalg as spla
from scipy.stats import norm

from ._errors import InvalidVarianceError, SingularDesignError
from .estimators import EstimateResult, linear_adjusted
from .graphon import Network, require_positive_degrees
from .trial import TrialData

__all__ = [
    "SpectralDecomposition",
    "VarianceReport",
    "estimate_b",
    "leading_eigenpairs",
    "pc_balancing_weights",
    "estimate_derivative_means",
    "variance_reg",
    "confidence_interval",
    "conservative_network_term",
    "variance_np_polyseq",
    "DENSE_EIG_THRESHOLD",
]

DENSE_EIG_THRESHOLD = 2000


@dataclass(frozen=True)
class SpectralDecomposition:
    """Leading eigenpairs of a symmetric adjacency, ordered by |eigenvalue|."""

    eigenvalues: np.ndarray  # (r,)
    eigenvectors: np.ndarray  # (n, r), orthonormal columns

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    def residual_norms(self, network: Network) -> np.ndarray:
        """||A psi_k - lambda_k psi_k|| for each retained pair."""
        av = network.adjacency @ self.eigenvectors
        return np.linalg.norm(av - self.eigenvectors * self.eigenvalues, axis=0)

    def operator_norm(self) -> float:
        """Spectral norm of the adjacency (largest retained |eigenvalue|)."""
        return float(np.abs(self.eigenvalues[0])) if self.rank else 0.0


@dataclass(frozen=True)
class VarianceReport:
    """The four variance components plus the network-term ingredients."""

    v_hat: float
    components: tuple[float, float, float, float]
    b_hat: float
    deriv1: float
    deriv0: float


def estimate_b(network: Network) -> float:
    """Plug-in degree-ratio statistic: mean over i of (sum_j E_ij / N_j)^2."""
    require_positive_degrees(network)
    s = network.adjacency @ (1.0 / network.degrees)
    return float(np.mean(s * s))


def leading_eigenpairs(network: Network, r: int) -> SpectralDecomposition:
    """The r eigenpairs of the adjacency with largest absolute eigenvalues.

    Dense symmetric eigendecomposition up to DENSE_EIG_THRESHOLD vertices;
    Lanczos (with a fixed deterministic start vector) above.  Either path must
    satisfy the residual invariant ||A psi - lambda psi|| <= 1e-6 ||A||.
    """
    n = network.n
    if not 1 <= r <= n:
        raise ValueError(f"rank r must lie in 1..{n}")
    if n <= DENSE_EIG_THRESHOLD or r >= n - 1:
        vals, vecs = np.linalg.eigh(network.adjacency.toarray())
        order = np.argsort(-np.abs(vals), kind="stable")[:r]
    else:
        v0 = np.ones(n) / math.sqrt(n)
        vals, vecs = spla.eigsh(network.adjacency, k=r, which="LM", v0=v0)
        order = np.argsort(-np.abs(vals), kind="stable")
    return SpectralDecomposition(eigenvalues=vals[order], eigenvectors=vecs[:, order])


def pc_balancing_weights(
    network: Network,
    spectral: SpectralDecomposition | None,
    W: np.ndarray,
    pi: float,
) -> np.ndarray:
    """Exposure-contrast weights with the leading eigen-directions removed.

    Starts from v_i = M_i/pi - (N_i - M_i)/(1 - pi) and adds the eigenvector
    combination that zeroes every psi_k' w constraint; with orthonormal
    eigenvectors the coefficients are a_k = -psi_k' v in closed form, which
    also makes the result invariant to eigenvector sign flips.
    """
    require_positive_degrees(network)
    if not 0.0 < pi < 1.0:
        raise ValueError("pi must lie in (0, 1)")
    w = np.asarray(W, dtype=float)
    m = network.treated_neighbor_counts(w)
    v = m / pi - (network.degrees - m) / (1.0 - pi)
    if spectral is None or spectral.rank == 0:
        return v
    psi = spectral.eigenvectors
    return v - psi @ (psi.T @ v)


def estimate_derivative_means(
    data: TrialData, weights: np.ndarray, pi: float
) -> tuple[float, float]:
    """Balanced-weight estimates of the mean exposure derivatives per arm."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != data.n:
        raise ValueError("weights length does not match data")
    w = data.W.astype(float)
    d1 = float((w * data.Y * weights).sum() / (data.n * pi))
    d0 = float(((1.0 - w) * data.Y * weights).sum() / (data.n * (1.0 - pi)))
    return d1, d0


def variance_reg(
    data: TrialData,
    linear_fit: EstimateResult,
    b_hat: float,
    deriv1: float,
    deriv0: float,
    use_pi_hat: bool = False,
) -> VarianceReport:
    """Assemble the four-component variance estimate for the adjusted estimator.

    Components: treated residual mean square over pi, control residual mean
    square over (1 - pi), slope-contrast quadratic form in the empirical
    covariate covariance, and b_hat pi (1 - pi) (deriv1 - deriv0)^2.  The
    residual denominators use the design pi; `use_pi_hat` switches them to
    the sample proportion for sensitivity runs.
    """
    beta1 = linear_fit.diagnostics.get("beta1")
    beta0 = linear_fit.diagnostics.get("beta0")
    if beta1 is None or beta0 is None:
        raise ValueError("linear_fit must carry beta1/beta0 diagnostics")
    treated = data.W == 1
    control = ~treated
    X = np.column_stack([np.ones(data.n), data.Z]) if data.p else np.ones((data.n, 1))
    pi = float(data.W.mean()) if use_pi_hat else data.pi
    r1 = data.Y[treated] - X[treated] @ beta1
    r0 = data.Y[control] - X[control] @ beta0
    c1 = float((r1 * r1).mean() / pi)
    c2 = float((r0 * r0).mean() / (1.0 - pi))
    if data.p:
        d = beta1[1:] - beta0[1:]
        zbar = data.Z.mean(axis=0)
        cov = data.Z.T @ data.Z / data.n - np.outer(zbar, zbar)
        c3 = float(d @ cov @ d)
    else:
        c3 = 0.0
    c4 = float(b_hat * data.pi * (1.0 - data.pi) * (deriv1 - deriv0) ** 2)
    return VarianceReport(
        v_hat=c1 + c2 + c3 + c4,
        components=(c1, c2, c3, c4),
        b_hat=float(b_hat),
        deriv1=float(deriv1),
        deriv0=float(deriv0),
    )


def confidence_interval(
    tau_hat: float, v_hat: float, n: int, level: float = 0.95
) -> tuple[float, float]:
    """Symmetric normal interval tau_hat -+ z sqrt(v_hat / n)."""
    if v_hat < 0:
        raise InvalidVarianceError(f"variance estimate must be nonnegative, got {v_hat}")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be >= 1")
    half = norm.ppf(0.5 + level / 2.0) * math.sqrt(v_hat / n)
    return float(tau_hat - half), float(tau_hat + half)


def conservative_network_term(tau_hat: float) -> float:
    """8 tau_hat^2, the conservative stand-in for b (derivative contrast)^2."""
    return 8.0 * tau_hat * tau_hat


def _legendre_columns(col: np.ndarray, degree: int) -> np.ndarray:
    lo, hi = col.min(), col.max()
    t = (2.0 * col - (hi + lo)) / (hi - lo) if hi > lo else np.zeros_like(col)
    return np.column_stack([np.polynomial.legendre.Legendre.basis(d)(t) for d in range(1, degree + 1)])


def _poly_design(Z: np.ndarray, degree: int, basis: str) -> np.ndarray:
    """Per-coordinate polynomial expansion up to `degree`, no cross terms."""
    if degree == 0:
        return np.empty((Z.shape[0], 0))
    blocks = []
    for k in range(Z.shape[1]):
        col = Z[:, k]
        if basis == "legendre":
            blocks.append(_legendre_columns(col, degree))
        else:
            blocks.append(np.column_stack([col**d for d in range(1, degree + 1)]))
    return np.hstack(blocks)


def variance_np_polyseq(
    data: TrialData,
    b_hat: float,
    derivs: tuple[float, float],
    max_degree: int = 5,
    rel_tol: float = 0.05,
    basis: str = "monomial",
) -> float:
    """Variance for the nonparametric estimator via growing polynomial fits.

    Evaluates the four-component variance with per-coordinate polynomial
    expansions of degree 0, 1, 2, ... and stops once the value stabilizes
    (relative change below rel_tol), the expansion becomes ill-conditioned,
    or max_degree is reached.  On stabilization the previous (slightly
    conservative) value is returned; rel_tol = inf therefore returns the
    degree-0 value.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    if basis not in ("monomial", "legendre"):
        raise ValueError("basis must be 'monomial' or 'legendre'")
    deriv1, deriv0 = derivs
    values: list[float] = []
    for degree in range(max_degree + 1):
        expanded = replace(data, Z=_poly_design(data.Z, degree, basis))
        try:
            fit = linear_adjusted(expanded)
        except SingularDesignError:
            if degree == 0:
                raise
            break
        report = variance_reg(expanded, fit, b_hat, deriv1, deriv0)
        values.append(report.v_hat)
        if degree >= 1 and abs(values[-1] - values[-2]) <= rel_tol * max(abs(values[-2]), 1e-300):
            return values[-2]
    return values[-1]
