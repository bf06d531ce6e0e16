"""Experiment datasets: assignment, exposures, outcome models, and ingestion.

Outcome models are registered by id.  Each registry entry owns its covariate
law, its noise law, the outcome function f(w, exposure), the exposure
derivative of f (used by variance oracles), and, when available in closed
form, the conditional means E[f(w, pi) | z].  A covariate draw can carry
hidden arrays consumed only by the outcome function (e.g. a raw vulnerability
of which the observed covariate is a perturbed version); estimators only ever
see the observed matrix Z.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from ._errors import EdgeListParseError, UnknownScenarioError
from .graphon import Network, require_positive_degrees

__all__ = [
    "TrialData",
    "OutcomeModel",
    "CovariateDraw",
    "MonteCarloValue",
    "assign_treatments",
    "exposure_fractions",
    "sample_covariates",
    "sample_outcome_noise",
    "outcome_values",
    "simulate_outcomes",
    "ate_oracle",
    "load_edge_list",
    "load_trial_csv",
    "save_trial_csv",
    "outcome_model_ids",
]


@dataclass(frozen=True)
class TrialData:
    """Observables handed to estimators: outcomes, treatments, covariates.

    `pi` is the design treatment probability.  `network` is required only by
    the interference-aware variance estimators.  Group non-emptiness is an
    estimation-time requirement, not a construction-time one.
    """

    Y: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    pi: float
    network: Network | None = None

    def __post_init__(self):
        y = np.asarray(self.Y, dtype=float)
        w = np.asarray(self.W)
        z = np.asarray(self.Z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if z.ndim != 2:
            raise ValueError("Z must be a 2-D matrix (n rows)")
        n = y.shape[0]
        if w.shape[0] != n or z.shape[0] != n:
            raise ValueError("Y, W, Z must share length n")
        if not np.isin(w, (0, 1)).all():
            raise ValueError("W entries must be 0 or 1")
        if not 0.0 < self.pi < 1.0:
            raise ValueError("pi must lie in (0, 1)")
        if self.network is not None and self.network.n != n:
            raise ValueError("network size does not match data length")
        object.__setattr__(self, "Y", y)
        object.__setattr__(self, "W", w.astype(np.int64))
        object.__setattr__(self, "Z", z)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class CovariateDraw:
    """Observed covariates plus hidden outcome-only inputs."""

    Z: np.ndarray
    hidden: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class OutcomeModel:
    """A registered outcome scenario plus its constants."""

    scenario_id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario_id not in _REGISTRY:
            raise UnknownScenarioError(
                f"unknown outcome model {self.scenario_id!r}; known: {sorted(_REGISTRY)}"
            )

    @property
    def p(self) -> int:
        return int(self.params.get("p", _REGISTRY[self.scenario_id].default_p))


class MonteCarloValue(NamedTuple):
    value: float
    se: float


# ---------------------------------------------------------------------------
# Outcome-model registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _OutcomeDef:
    default_p: int
    fixed_p: bool
    sample_covariates: Callable
    sample_noise: Callable
    outcome: Callable
    outcome_deriv: Callable
    cond_mean: Callable | None  # (model, w, pi, draw) -> E[f(w, pi) | Z]


def _quadratic_cov(model, n, rng):
    return CovariateDraw(Z=rng.uniform(-2.0, 1.0, size=(n, 1)))


def _quadratic_noise(model, n, rng):
    return rng.standard_normal(n)


def _quadratic_outcome(model, w, e, draw, noise):
    z = draw.Z[:, 0]
    return w * (-2.0 * (1.0 - e) ** 2 - 2.0 * z * e**2 + 0.5 * noise) + z**2


def _quadratic_deriv(model, w, e, draw, noise):
    z = draw.Z[:, 0]
    return w * (4.0 * (1.0 - e) - 4.0 * z * e)


def _quadratic_cond_mean(model, w, pi, draw):
    z = draw.Z[:, 0]
    return w * (-2.0 * (1.0 - pi) ** 2 - 2.0 * z * pi**2) + z**2


def _ar_cholesky(p: int) -> np.ndarray:
    idx = np.arange(p)
    sigma = 0.5 ** np.abs(idx[:, None] - idx[None, :])
    return np.linalg.cholesky(sigma)


def _kernel_scn_scale(p: int) -> float:
    # variance of sum_j z_j under the AR(0.5) covariance, in closed form
    return math.sqrt(3.0 * p - 4.0 + 2.0 ** (2 - p))


def _smooth_cov(model, n, rng):
    p = int(model.params.get("p", 1))
    z = rng.standard_normal((n, p)) @ _ar_cholesky(p).T
    return CovariateDraw(Z=z)


def _smooth_noise(model, n, rng):
    return rng.standard_normal(n)


def _smooth_outcome(model, w, e, draw, noise):
    z = draw.Z
    p = z.shape[1]
    s = z.sum(axis=1) / _kernel_scn_scale(p)
    g = np.exp(z).sum(axis=1) / (2.0 * math.sqrt(p))
    return w * (e - 0.5 + s + 0.5 * noise) + g


def _smooth_deriv(model, w, e, draw, noise):
    return w * np.ones(draw.Z.shape[0])


def _smooth_cond_mean(model, w, pi, draw):
    z = draw.Z
    p = z.shape[1]
    s = z.sum(axis=1) / _kernel_scn_scale(p)
    g = np.exp(z).sum(axis=1) / (2.0 * math.sqrt(p))
    return w * (pi - 0.5 + s) + g


def _vaccine_cov(model, n, rng):
    z_star = rng.normal(0.0, math.sqrt(2.0), size=n)
    v = rng.uniform(0.9, 1.1, size=n)
    return CovariateDraw(Z=(z_star * v)[:, None], hidden={"z_star": z_star})


def _vaccine_noise(model, n, rng):
    return np.zeros(n)  # randomness enters through the covariate draw only


def _vaccine_raw(draw):
    z_star = draw.hidden.get("z_star")
    if z_star is None:
        raise UnknownScenarioError(
            "contact-vaccine outcomes depend on the raw vulnerability; pass the "
            "CovariateDraw produced by sample_covariates, not a bare Z matrix"
        )
    return z_star


def _vaccine_outcome(model, w, e, draw, noise):
    z_star = _vaccine_raw(draw)
    return 2.0 / (1.0 + np.exp(-z_star)) * (1.0 - 0.4 * w) * (1.0 - np.sqrt(e))


def _vaccine_deriv(model, w, e, draw, noise):
    z_star = _vaccine_raw(draw)
    return 2.0 / (1.0 + np.exp(-z_star)) * (1.0 - 0.4 * w) * (-0.5 / np.sqrt(e))


def _const_cov(model, n, rng):
    p = int(model.params.get("p", 1))
    return CovariateDraw(Z=rng.standard_normal((n, p)))


def _const_noise(model, n, rng):
    return np.zeros(n)


def _const_outcome(model, w, e, draw, noise):
    return np.full(draw.Z.shape[0], float(model.params.get("c", 0.0)))


def _const_deriv(model, w, e, draw, noise):
    return np.zeros(draw.Z.shape[0])


def _const_cond_mean(model, w, pi, draw):
    return np.full(draw.Z.shape[0], float(model.params.get("c", 0.0)))


_REGISTRY: dict[str, _OutcomeDef] = {
    # degenerate outcome, useful for exactness checks
    "constant": _OutcomeDef(
        default_p=1,
        fixed_p=False,
        sample_covariates=_const_cov,
        sample_noise=_const_noise,
        outcome=_const_outcome,
        outcome_deriv=_const_deriv,
        cond_mean=_const_cond_mean,
    ),
    # treated arm reacts quadratically to the exposure fraction; scalar uniform covariate
    "sec31-validation": _OutcomeDef(
        default_p=1,
        fixed_p=True,
        sample_covariates=_quadratic_cov,
        sample_noise=_quadratic_noise,
        outcome=_quadratic_outcome,
        outcome_deriv=_quadratic_deriv,
        cond_mean=_quadratic_cond_mean,
    ),
    # linear exposure response with a nonlinear (exp) covariate signal; AR(0.5) Gaussian z
    "sec41-main": _OutcomeDef(
        default_p=1,
        fixed_p=False,
        sample_covariates=_smooth_cov,
        sample_noise=_smooth_noise,
        outcome=_smooth_outcome,
        outcome_deriv=_smooth_deriv,
        cond_mean=_smooth_cond_mean,
    ),
    # vaccine response on a contact network; observed covariate is a perturbed vulnerability
    "contact-vaccine": _OutcomeDef(
        default_p=1,
        fixed_p=True,
        sample_covariates=_vaccine_cov,
        sample_noise=_vaccine_noise,
        outcome=_vaccine_outcome,
        outcome_deriv=_vaccine_deriv,
        cond_mean=None,
    ),
}


def outcome_model_ids() -> list[str]:
    return sorted(_REGISTRY)


def _definition(model: OutcomeModel) -> _OutcomeDef:
    return _REGISTRY[model.scenario_id]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def assign_treatments(n: int, pi: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. Bernoulli(pi) treatment indicators."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < pi < 1.0:
        raise ValueError("pi must lie strictly inside (0, 1)")
    return (rng.random(n) < pi).astype(np.int64)


def exposure_fractions(network: Network, w: np.ndarray) -> np.ndarray:
    """Treated-neighbor fraction M_i / N_i for every vertex."""
    require_positive_degrees(network)
    w = np.asarray(w, dtype=np.float64)
    if w.shape[0] != network.n:
        raise ValueError("treatment vector length does not match network size")
    return network.treated_neighbor_counts(w) / network.degrees


def sample_covariates(model: OutcomeModel, n: int, rng: np.random.Generator) -> CovariateDraw:
    """Draw covariates from the model's registered law."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _definition(model).sample_covariates(model, n, rng)


def sample_outcome_noise(model: OutcomeModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw the model's outcome noise (a zero vector for noiseless models)."""
    return _definition(model).sample_noise(model, n, rng)


def outcome_values(
    model: OutcomeModel,
    w: np.ndarray,
    exposures: np.ndarray | float,
    covariates: CovariateDraw | np.ndarray,
    noise: np.ndarray,
) -> np.ndarray:
    """Evaluate the registered outcome formula at explicit noise values.

    Deterministic; lets oracles evaluate both treatment arms on shared draws.
    """
    if isinstance(covariates, CovariateDraw):
        draw = covariates
    else:
        z = np.asarray(covariates, dtype=float)
        draw = CovariateDraw(Z=z[:, None] if z.ndim == 1 else z)
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if draw.Z.shape[0] != n:
        raise ValueError("covariate rows must match treatment length")
    e = np.broadcast_to(np.asarray(exposures, dtype=float), (n,))
    d = _definition(model)
    return np.asarray(d.outcome(model, w, e, draw, np.asarray(noise, dtype=float)), dtype=float)


def simulate_outcomes(
    model: OutcomeModel,
    w: np.ndarray,
    exposures: np.ndarray | float,
    covariates: CovariateDraw | np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Evaluate the registered outcome formula with fresh noise.

    `exposures` may be a vector of treated-neighbor fractions or a scalar
    (the no-interference case, where the exposure argument is pinned at pi).
    """
    n = np.asarray(w).shape[0]
    return outcome_values(model, w, exposures, covariates, sample_outcome_noise(model, n, rng))


def outcome_exposure_derivative(
    model: OutcomeModel,
    w: np.ndarray,
    exposures: np.ndarray | float,
    covariates: CovariateDraw,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """d/d(exposure) of the outcome formula; used by variance oracles."""
    w = np.asarray(w, dtype=float)
    e = np.broadcast_to(np.asarray(exposures, dtype=float), w.shape)
    if noise is None:
        noise = np.zeros(w.shape[0])
    return np.asarray(_definition(model).outcome_deriv(model, w, e, covariates, noise), dtype=float)


def conditional_mean(model: OutcomeModel, w: int, pi: float, covariates: CovariateDraw) -> np.ndarray:
    """E[f(w, pi) | Z] when the model provides it in closed form."""
    fn = _definition(model).cond_mean
    if fn is None:
        raise UnknownScenarioError(
            f"model {model.scenario_id!r} has no closed-form conditional mean"
        )
    return np.asarray(fn(model, float(w), pi, covariates), dtype=float)


def ate_oracle(
    model: OutcomeModel, pi: float, mc_reps: int, rng: np.random.Generator
) -> MonteCarloValue:
    """Monte Carlo value of E[f(1, pi) - f(0, pi)] over covariate/noise laws."""
    if mc_reps < 10_000:
        raise ValueError("mc_reps must be at least 10^4")
    if not 0.0 < pi < 1.0:
        raise ValueError("pi must lie in (0, 1)")
    d = _definition(model)
    total = 0.0
    total_sq = 0.0
    done = 0
    ones = np.ones
    while done < mc_reps:
        m = min(200_000, mc_reps - done)
        draw = d.sample_covariates(model, m, rng)
        noise = d.sample_noise(model, m, rng)
        diff = np.asarray(
            d.outcome(model, ones(m), pi, draw, noise) - d.outcome(model, np.zeros(m), pi, draw, noise),
            dtype=float,
        )
        total += float(diff.sum())
        total_sq += float((diff * diff).sum())
        done += m
    mean = total / mc_reps
    var = max(total_sq / mc_reps - mean * mean, 0.0)
    return MonteCarloValue(value=mean, se=math.sqrt(var / mc_reps))


# ---------------------------------------------------------------------------
# File ingestion / emission
# ---------------------------------------------------------------------------

def load_edge_list(
    path, min_count: int = 1, drop_isolated: bool = False
) -> tuple[Network, np.ndarray]:
    """Read "i,j" or "i,j,count" rows into an undirected simple graph.

    Counts aggregate over duplicate rows and both orientations; an edge is
    kept when the total is >= min_count.  Self-loop rows are dropped (a
    single warning reports how many).  Vertices are relabeled densely
    0..n-1; the returned array maps new index -> original id.
    """
    counts: dict[tuple[int, int], int] = {}
    vertices: set[int] = set()
    self_loops = 0
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) not in (2, 3):
                raise EdgeListParseError(str(path), lineno, f"expected 2 or 3 fields, got {len(row)}")
            try:
                i = int(row[0])
                j = int(row[1])
                c = int(row[2]) if len(row) == 3 else 1
            except ValueError as exc:
                raise EdgeListParseError(str(path), lineno, f"non-integer field: {exc}") from None
            if i < 0 or j < 0:
                raise EdgeListParseError(str(path), lineno, "vertex ids must be nonnegative")
            if c < 0:
                raise EdgeListParseError(str(path), lineno, "count must be nonnegative")
            if i == j:
                self_loops += 1
                continue
            vertices.update((i, j))
            key = (i, j) if i < j else (j, i)
            counts[key] = counts.get(key, 0) + c
    if self_loops:
        warnings.warn(f"dropped {self_loops} self-loop row(s) from {path}", stacklevel=2)

    ids = np.array(sorted(vertices), dtype=np.int64)
    index = {orig: k for k, orig in enumerate(ids)}
    edges = [(index[i], index[j]) for (i, j), c in counts.items() if c >= min_count]
    network = Network.from_edges(len(ids), edges)
    if drop_isolated:
        keep = np.flatnonzero(network.degrees > 0)
        sub = network.adjacency[keep][:, keep]
        network = Network.from_adjacency(sub)
        ids = ids[keep]
    return network, ids


def save_trial_csv(data: TrialData, path) -> None:
    """Write the dataset with header y,w,z1,...,zp."""
    header = ["y", "w"] + [f"z{k + 1}" for k in range(data.p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            writer.writerow([repr(float(data.Y[i])), int(data.W[i])] + [repr(float(v)) for v in data.Z[i]])


def load_trial_csv(path, pi: float, network: Network | None = None) -> TrialData:
    """Read a y,w,z1,...,zp dataset; pi is supplied by the design, not the file."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["y", "w"]:
            raise ValueError(f"{path}: expected header starting with y,w")
        p = len(header) - 2
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 2:
                raise ValueError(f"{path}:{lineno}: expected {p + 2} fields")
            rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return TrialData(Y=arr[:, 0], W=arr[:, 1].astype(np.int64), Z=arr[:, 2:], pi=pi, network=network)
