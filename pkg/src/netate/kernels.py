"""Higher-order Epanechnikov product kernels and local smoothing primitives.

Conventions:
  - one-dimensional kernels on |t| <= 1, zero outside:
      order 2:  (3/4)(1 - t^2)
      order 4:  (45/32)(1 - t^2)(1 - 7 t^2 / 3)
      order 6:  (525/256)(1 - t^2)(1 - 6 t^2 + 33 t^4 / 5)
  - the p-dimensional kernel is the coordinate product, supported on the
    unit max-norm cube;
  - density / regression estimates scale by 1/(n h^p) with bandwidth h.

Orders 4 and 6 take negative values, so density estimates built from them
are returned signed, exactly as the trimming indicator consumes them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._errors import EmptyWindowError, UnsupportedDimensionError

__all__ = [
    "KernelConfig",
    "kernel_order_for_dimension",
    "kernel_eval",
    "kernel_moment",
    "density_estimate",
    "group_density_estimates",
    "local_constant",
]

_ORDERS = (2, 4, 6)


def kernel_order_for_dimension(p: int) -> int:
    """Kernel order for covariate dimension p: 1-3 -> 2, 4-7 -> 4, 8-10 -> 6."""
    if 1 <= p <= 3:
        return 2
    if 4 <= p <= 7:
        return 4
    if 8 <= p <= 10:
        return 6
    raise UnsupportedDimensionError(f"covariate dimension {p} outside the supported range 1..10")


@dataclass(frozen=True)
class KernelConfig:
    """Tuning state of the kernel estimator: order, bandwidth, trimming."""

    q: int
    p: int
    h_band: float
    b_trim: float
    trim_factor: float = 1.01
    alpha: float = 0.01

    def __post_init__(self):
        if self.q not in _ORDERS:
            raise ValueError(f"kernel order must be one of {_ORDERS}")
        if self.p < 1:
            raise ValueError("covariate dimension must be >= 1")
        if not self.h_band > 0:
            raise ValueError("bandwidth must be positive")
        if not self.b_trim > 0:
            raise ValueError("trimming threshold must be positive")
        if not self.trim_factor > 1:
            raise ValueError("trim factor must exceed 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if math.isfinite(self.h_band) and self.h_band < self.b_trim:
            # a trim level above the bandwidth can discard most of the sample
            warnings.warn(
                f"bandwidth {self.h_band:g} below trim threshold {self.b_trim:g}; "
                f"trimming may discard much of the sample",
                stacklevel=2,
            )


def _kernel_1d(q: int, t: np.ndarray) -> np.ndarray:
    # mask-free: (1 - t^2) clipped at 0 doubles as the support indicator
    t = np.asarray(t, dtype=float)
    t2 = t * t
    u = 1.0 - t2
    if q == 2:
        return 0.75 * np.maximum(u, 0.0)
    if q == 4:
        out = (45.0 / 32.0) * u
        out *= 1.0 - (7.0 / 3.0) * t2
        out *= u > 0.0
        return out
    if q == 6:
        out = (525.0 / 256.0) * u
        out *= 1.0 - 6.0 * t2 + (33.0 / 5.0) * t2 * t2
        out *= u > 0.0
        return out
    raise ValueError(f"unsupported kernel order {q}")


def kernel_eval(config: KernelConfig, u) -> float:
    """Product kernel at a p-vector u; zero outside the unit max-norm cube."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (config.p,):
        raise ValueError(f"u must be a {config.p}-vector")
    return float(np.prod(_kernel_1d(config.q, u)))


def kernel_moment(config: KernelConfig, multi_index) -> float:
    """int u^multi_index K(u) du, one quadrature per coordinate.

    Missing trailing exponents count as zero (their factors integrate to 1).
    """
    exps = [int(l) for l in np.atleast_1d(multi_index)]
    if any(l < 0 for l in exps):
        raise ValueError("exponents must be nonnegative")
    if len(exps) > config.p:
        raise ValueError("multi-index longer than the covariate dimension")
    value = 1.0
    for l in exps:
        m, _ = integrate.quad(
            lambda t, l=l: t**l * float(_kernel_1d(config.q, np.array([t]))[0]),
            -1.0,
            1.0,
            epsabs=1e-13,
            epsrel=1e-13,
            limit=200,
        )
        value *= m
    return value


def _query_weights(Z: np.ndarray, z, config: KernelConfig) -> np.ndarray:
    """K((z_j - z)/h) for every sample row j."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if Z.shape[1] != config.p or z.shape != (config.p,):
        raise ValueError("covariate dimensions do not match the kernel config")
    if not math.isfinite(config.h_band):
        return np.full(Z.shape[0], float(np.prod(_kernel_1d(config.q, np.zeros(config.p)))))
    w = np.ones(Z.shape[0])
    for k in range(config.p):
        w *= _kernel_1d(config.q, (Z[:, k] - z[k]) / config.h_band)
    return w


try:  # fast path for the all-pairs product; the numpy loop below is the reference
    from numba import njit

    @njit(cache=True)
    def _weights_matrix_jit(Z, h, q):  # pragma: no cover - exercised via weights_matrix
        n, p = Z.shape
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                acc = 1.0
                for k in range(p):
                    t = (Z[j, k] - Z[i, k]) / h
                    t2 = t * t
                    u = 1.0 - t2
                    if u <= 0.0:
                        acc = 0.0
                        break
                    if q == 2:
                        acc *= 0.75 * u
                    elif q == 4:
                        acc *= ((45.0 / 32.0) * u) * (1.0 - (7.0 / 3.0) * t2)
                    else:
                        acc *= ((525.0 / 256.0) * u) * (1.0 - 6.0 * t2 + (33.0 / 5.0) * t2 * t2)
                out[i, j] = acc
        return out

except ImportError:  # pragma: no cover
    _weights_matrix_jit = None


def weights_matrix(Z: np.ndarray, config: KernelConfig) -> np.ndarray:
    """All-pairs kernel weights; entry (i, j) is K((z_j - z_i)/h).

    Shared by the batched density, group-density, and local-constant
    evaluations inside the trimmed estimator.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[1] != config.p:
        raise ValueError("covariate dimensions do not match the kernel config")
    n = Z.shape[0]
    if not math.isfinite(config.h_band):
        return np.full((n, n), float(np.prod(_kernel_1d(config.q, np.zeros(config.p)))))
    if _weights_matrix_jit is not None and n * config.p >= 4096:
        return _weights_matrix_jit(np.ascontiguousarray(Z), float(config.h_band), config.q)
    out = np.ones((n, n))
    for k in range(config.p):
        col = Z[:, k]
        out *= _kernel_1d(config.q, (col[None, :] - col[:, None]) / config.h_band)
    return out


def density_estimate(Z: np.ndarray, z, config: KernelConfig) -> float:
    """(1/(n h^p)) sum_j K((z_j - z)/h); signed for orders above 2."""
    w = _query_weights(Z, z, config)
    if not math.isfinite(config.h_band):
        return 0.0
    return float(w.sum() / (w.shape[0] * config.h_band**config.p))


def group_density_estimates(
    Z: np.ndarray, W: np.ndarray, z, config: KernelConfig, pi_hat: float
) -> tuple[float, float]:
    """Treated- and control-weighted density estimates at z."""
    if not 0.0 < pi_hat < 1.0:
        raise ValueError("pi_hat must lie strictly inside (0, 1)")
    w = _query_weights(Z, z, config)
    W = np.asarray(W, dtype=float)
    if not math.isfinite(config.h_band):
        return 0.0, 0.0
    scale = w.shape[0] * config.h_band**config.p
    p1 = float((w * W).sum() / (scale * pi_hat))
    p2 = float((w * (1.0 - W)).sum() / (scale * (1.0 - pi_hat)))
    return p1, p2


def local_constant(
    Z: np.ndarray, Y: np.ndarray, W: np.ndarray, z, config: KernelConfig, group: str
) -> float:
    """Kernel-weighted group mean of Y at z (constant-fit regression)."""
    if group not in ("treated", "control"):
        raise ValueError("group must be 'treated' or 'control'")
    w = _query_weights(Z, z, config)
    W = np.asarray(W, dtype=float)
    g = W if group == "treated" else 1.0 - W
    den = float((w * g).sum())
    if den == 0.0:
        raise EmptyWindowError(f"no {group} kernel mass at the query point")
    return float((w * g * np.asarray(Y, dtype=float)).sum() / den)
