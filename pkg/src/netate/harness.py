"""Scenario registry, seeded Monte Carlo driver, variance oracles, reports.

Replicates are seeded from (master seed, replicate index) through a
SeedSequence, run serially or across a process pool, and aggregated in
replicate order in the parent, so every summary is bit-identical for any
worker count.  Draws inside a replicate follow a fixed order: latents,
graph, treatments, covariates, outcome noise.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from ._errors import NetateError, UnknownScenarioError
from .estimators import (
    _np_tuning,
    difference_in_means,
    linear_adjusted,
    nonparametric,
)
from .graphon import GraphonSpec, Network, graphon_b, make_graphon, sample_graph, sample_latents
from .kernels import KernelConfig
from .trial import (
    MonteCarloValue,
    OutcomeModel,
    TrialData,
    assign_treatments,
    conditional_mean,
    exposure_fractions,
    load_edge_list,
    outcome_exposure_derivative,
    outcome_values,
    sample_covariates,
    sample_outcome_noise,
    simulate_outcomes,
)
from .variance import (
    confidence_interval,
    conservative_network_term,
    estimate_b,
    estimate_derivative_means,
    leading_eigenpairs,
    pc_balancing_weights,
    variance_np_polyseq,
    variance_reg,
)

__all__ = [
    "Scenario",
    "MethodSummary",
    "ScenarioSummary",
    "get_scenario",
    "scenario_ids",
    "true_tau",
    "contact_network",
    "run_scenario",
    "theoretical_variance_oracle",
    "emit_report",
    "reproduce_table",
    "TABLE_IDS",
]

SCHEMA_VERSION = 1
CONTACT_MIN_COUNT = 3


@dataclass(frozen=True)
class Scenario:
    """A registered simulation design: network model, outcome model, design pi."""

    id: str
    outcome: OutcomeModel
    pi: float
    p: int
    interference: bool = True
    graphon: GraphonSpec | None = None
    network: Network | None = None
    rank: int = 3
    np_alpha: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValueError("pi must lie in (0, 1)")
        if (self.graphon is None) == (self.network is None):
            raise ValueError("exactly one of graphon or network must be set")


_SCENARIO_IDS = ("sec31-validation", "sec41-main", "contact-vaccine")


def scenario_ids() -> tuple[str, ...]:
    return _SCENARIO_IDS


def contact_network(period: str = "morning", path=None) -> Network:
    """The bundled synthetic stand-in contact network (or a user-supplied file).

    Edges require at least CONTACT_MIN_COUNT aggregated contacts; vertices
    left isolated by the threshold are dropped.  The bundled files are
    synthetic stand-ins for the real classroom RFID data (see README for the
    source of the real files, which load through the same path).
    """
    if path is None:
        if period not in ("morning", "midday"):
            raise ValueError("period must be 'morning' or 'midday'")
        ref = resources.files("netate.data") / f"synthetic_contacts_{period}.csv"
        if not ref.is_file():
            raise FileNotFoundError(
                f"bundled contact file {ref} is missing; expected a CSV of "
                f"'i,j,count' rows with integer ids and contact counts"
            )
        with resources.as_file(ref) as p:
            network, _ = load_edge_list(p, min_count=CONTACT_MIN_COUNT, drop_isolated=True)
        return network
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(
            f"contact file {p} not found; expected a CSV of 'i,j,count' rows "
            f"(vertex ids nonnegative integers, one row per recorded contact pair)"
        )
    network, _ = load_edge_list(p, min_count=CONTACT_MIN_COUNT, drop_isolated=True)
    return network


def get_scenario(
    scenario_id: str,
    p: int | None = None,
    pi: float | None = None,
    interference: bool | None = None,
    np_alpha: float | None = None,
    period: str = "morning",
    contacts_path=None,
) -> Scenario:
    """Build a registered scenario, optionally overriding its knobs."""
    if scenario_id == "sec31-validation":
        base = Scenario(
            id=scenario_id,
            outcome=OutcomeModel("sec31-validation"),
            pi=0.5,
            p=1,
            graphon=make_graphon("paper-sec3"),
            rank=3,
        )
        if p not in (None, 1):
            raise ValueError("this scenario owns a scalar covariate")
    elif scenario_id == "sec41-main":
        dim = 1 if p is None else int(p)
        base = Scenario(
            id=scenario_id,
            outcome=OutcomeModel("sec41-main", {"p": dim}),
            pi=0.7,
            p=dim,
            graphon=make_graphon("paper-sec3"),
            rank=3,
        )
    elif scenario_id == "contact-vaccine":
        base = Scenario(
            id=scenario_id,
            outcome=OutcomeModel("contact-vaccine"),
            pi=0.2,
            p=1,
            network=contact_network(period, contacts_path),
            rank=10,
        )
        if p not in (None, 1):
            raise ValueError("this scenario owns a scalar covariate")
    else:
        raise UnknownScenarioError(f"unknown scenario {scenario_id!r}; known: {_SCENARIO_IDS}")
    if pi is not None:
        base = replace(base, pi=float(pi))
    if interference is not None:
        base = replace(base, interference=bool(interference))
    if np_alpha is not None:
        base = replace(base, np_alpha=float(np_alpha))
    return base


def true_tau(scenario: Scenario) -> float:
    """Closed-form population ATE of a registered scenario (depends on pi)."""
    pi = scenario.pi
    if scenario.id == "sec31-validation":
        return -2.0 * (1.0 - pi) ** 2 + pi**2
    if scenario.id == "sec41-main":
        return pi - 0.5
    if scenario.id == "contact-vaccine":
        # E[2 / (1 + exp(-z*))] = 1 for symmetric z*
        return -0.4 * (1.0 - math.sqrt(pi))
    raise UnknownScenarioError(scenario.id)


# ---------------------------------------------------------------------------
# Method resolution
# ---------------------------------------------------------------------------

_ESTIMATORS = ("dim", "linear", "np")
_DEFAULT_VARIANCE = {"dim": "spectral", "linear": "spectral", "np": "polyseq"}
_ALLOWED_VARIANCE = {
    "dim": ("spectral", "conservative", "none"),
    "linear": ("spectral", "conservative", "none"),
    "np": ("polyseq", "none"),
}


def _resolve_method(method: str) -> tuple[str, str]:
    est, _, var = method.partition(":")
    if est not in _ESTIMATORS:
        raise ValueError(f"unknown estimator {est!r}; use one of {_ESTIMATORS}")
    var = var or _DEFAULT_VARIANCE[est]
    if var not in _ALLOWED_VARIANCE[est]:
        raise ValueError(f"variance {var!r} not available for {est!r}")
    return est, var


# ---------------------------------------------------------------------------
# Replicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _RepTask:
    scenario: Scenario
    n: int
    methods: tuple[tuple[str, str], ...]
    seed: int
    rep: int
    np_overrides: dict
    level: float
    polyseq_max_degree: int
    polyseq_rel_tol: float
    shared_b_hat: float | None
    shared_spectral: object | None


def _needs_network_term(task: _RepTask) -> bool:
    if not task.scenario.interference:
        return False
    return any(var in ("spectral", "polyseq") for _, var in task.methods)


def _run_replicate(task: _RepTask) -> dict:
    scenario = task.scenario
    rng = np.random.default_rng(np.random.SeedSequence([task.seed, task.rep]))
    n = task.n

    net = scenario.network
    if scenario.graphon is not None and scenario.interference:
        latents = sample_latents(n, rng)
        net = sample_graph(scenario.graphon, latents, rng)
    w = assign_treatments(n, scenario.pi, rng)
    draw = sample_covariates(scenario.outcome, n, rng)
    exposures = exposure_fractions(net, w) if scenario.interference else scenario.pi
    y = simulate_outcomes(scenario.outcome, w, exposures, draw, rng)
    data = TrialData(Y=y, W=w, Z=draw.Z, pi=scenario.pi, network=net if scenario.interference else None)

    b_hat = d1 = d0 = 0.0
    if _needs_network_term(task):
        b_hat = task.shared_b_hat if task.shared_b_hat is not None else estimate_b(net)
        spectral = (
            task.shared_spectral
            if task.shared_spectral is not None
            else leading_eigenpairs(net, scenario.rank)
        )
        weights = pc_balancing_weights(net, spectral, w, scenario.pi)
        d1, d0 = estimate_derivative_means(data, weights, scenario.pi)

    out: dict = {}
    for est, var in task.methods:
        key = f"{est}:{var}"
        try:
            out[key] = _estimate_once(task, data, est, var, b_hat, d1, d0)
        except NetateError as exc:
            out[key] = {"error": f"{type(exc).__name__}: {exc}"}
    return out


def _estimate_once(task, data: TrialData, est: str, var: str, b_hat, d1, d0) -> dict:
    scenario = task.scenario
    n = data.n
    kept = None
    if est == "dim":
        result = difference_in_means(data)
        fit_data = replace(data, Z=np.empty((n, 0)))
        fit = linear_adjusted(fit_data)
    elif est == "linear":
        result = linear_adjusted(data)
        fit_data, fit = data, None
    else:
        alpha = task.np_overrides.get("alpha", scenario.np_alpha)
        q, h, b, kmat = _np_tuning(
            n,
            data.p,
            alpha,
            data.Z,
            h_band=task.np_overrides.get("h_band"),
            b_trim=task.np_overrides.get("b_trim"),
        )
        config = KernelConfig(q=q, p=data.p, h_band=h, b_trim=b, alpha=alpha)
        result = nonparametric(data, config, weights=kmat)
        kept = result.diagnostics["kept"]
        fit_data, fit = data, None

    rec = {"tau": result.tau_hat, "kept": kept}
    if var == "none":
        return rec

    if var == "polyseq":
        v = variance_np_polyseq(
            data,
            b_hat,
            (d1, d0),
            max_degree=task.polyseq_max_degree,
            rel_tol=task.polyseq_rel_tol,
        )
        c4 = b_hat * scenario.pi * (1.0 - scenario.pi) * (d1 - d0) ** 2
        v_nonet = v - c4
    else:
        if fit is None:
            fit = linear_adjusted(fit_data)
        report = variance_reg(fit_data, fit, b_hat, d1, d0)
        c1, c2, c3, c4 = report.components
        if var == "conservative":
            c4 = scenario.pi * (1.0 - scenario.pi) * conservative_network_term(result.tau_hat)
        v = c1 + c2 + c3 + c4
        v_nonet = c1 + c2 + c3

    lo, hi = confidence_interval(result.tau_hat, v, n, task.level)
    lo2, hi2 = confidence_interval(result.tau_hat, max(v_nonet, 0.0), n, task.level)
    rec.update({"v": v, "lo": lo, "hi": hi, "v_nonet": v_nonet, "lo_nonet": lo2, "hi_nonet": hi2})
    return rec


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class MethodSummary:
    method: str
    reps_ok: int
    reps_failed: int
    mean: float
    variance: float
    mse: float
    n_mse: float
    coverage: float | None
    coverage_nonet: float | None
    ci_halfwidth: float | None
    mean_v_hat: float | None
    mean_kept: float | None
    estimates: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "reps_ok": self.reps_ok,
            "reps_failed": self.reps_failed,
            "mean": self.mean,
            "variance": self.variance,
            "mse": self.mse,
            "n_mse": self.n_mse,
            "coverage": self.coverage,
            "coverage_nonet": self.coverage_nonet,
            "ci_halfwidth": self.ci_halfwidth,
            "mean_v_hat": self.mean_v_hat,
            "mean_kept": self.mean_kept,
        }


@dataclass
class ScenarioSummary:
    scenario_id: str
    n: int
    pi: float
    p: int
    interference: bool
    tau_true: float
    reps: int
    seed: int
    level: float
    methods: dict[str, MethodSummary]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": {
                "id": self.scenario_id,
                "n": self.n,
                "pi": self.pi,
                "p": self.p,
                "interference": self.interference,
                "tau_true": self.tau_true,
                "reps": self.reps,
                "seed": self.seed,
                "level": self.level,
            },
            "methods": {name: ms.to_dict() for name, ms in self.methods.items()},
        }


def _aggregate(method: str, records: list[dict], tau: float, n: int) -> MethodSummary:
    ok = [r for r in records if "error" not in r]
    est = np.array([r["tau"] for r in ok])
    if est.size == 0:
        raise RuntimeError(f"method {method} failed in every replicate")
    mean = float(est.mean())
    var = float(est.var(ddof=1)) if est.size > 1 else 0.0
    mse = float(np.mean((est - tau) ** 2))
    with_ci = [r for r in ok if "lo" in r]
    coverage = cov2 = halfwidth = mean_v = None
    if with_ci:
        lo = np.array([r["lo"] for r in with_ci])
        hi = np.array([r["hi"] for r in with_ci])
        coverage = float(((lo <= tau) & (tau <= hi)).mean())
        lo2 = np.array([r["lo_nonet"] for r in with_ci])
        hi2 = np.array([r["hi_nonet"] for r in with_ci])
        cov2 = float(((lo2 <= tau) & (tau <= hi2)).mean())
        halfwidth = float(((hi - lo) / 2.0).mean())
        mean_v = float(np.mean([r["v"] for r in with_ci]))
    kepts = [r["kept"] for r in ok if r.get("kept") is not None]
    return MethodSummary(
        method=method,
        reps_ok=len(ok),
        reps_failed=len(records) - len(ok),
        mean=mean,
        variance=var,
        mse=mse,
        n_mse=n * mse,
        coverage=coverage,
        coverage_nonet=cov2,
        ci_halfwidth=halfwidth,
        mean_v_hat=mean_v,
        mean_kept=float(np.mean(kepts)) if kepts else None,
        estimates=est,
    )


def run_scenario(
    scenario: Scenario,
    n: int,
    methods,
    reps: int,
    seed: int,
    workers: int = 1,
    np_overrides: dict | None = None,
    level: float = 0.95,
    polyseq_max_degree: int = 5,
    polyseq_rel_tol: float = 0.05,
) -> ScenarioSummary:
    """Run seeded replicates of a scenario and aggregate per-method statistics.

    `methods` is a sequence of "estimator[:variance]" strings, e.g. "linear",
    "dim:conservative", "np".  For fixed-network scenarios n is the network
    size; the spectral pieces of the variance are computed once and shared.
    Replicate failures are counted per method and only raise if more than 5%
    of replicates fail.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    resolved = tuple(_resolve_method(m) for m in methods)
    if not resolved:
        raise ValueError("methods must be nonempty")
    if scenario.network is not None:
        n = scenario.network.n

    shared_b = shared_spec = None
    if scenario.network is not None and scenario.interference:
        if any(v in ("spectral", "polyseq") for _, v in resolved):
            shared_b = estimate_b(scenario.network)
            shared_spec = leading_eigenpairs(scenario.network, scenario.rank)

    tasks = [
        _RepTask(
            scenario=scenario,
            n=n,
            methods=resolved,
            seed=int(seed),
            rep=rep,
            np_overrides=dict(np_overrides or {}),
            level=level,
            polyseq_max_degree=polyseq_max_degree,
            polyseq_rel_tol=polyseq_rel_tol,
            shared_b_hat=shared_b,
            shared_spectral=shared_spec,
        )
        for rep in range(reps)
    ]
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replicate, tasks, chunksize=max(1, reps // (workers * 8))))
    else:
        results = [_run_replicate(t) for t in tasks]

    tau = true_tau(scenario)
    summaries = {}
    for est, var in resolved:
        key = f"{est}:{var}"
        records = [r[key] for r in results]
        summary = _aggregate(key, records, tau, n)
        if summary.reps_failed > 0.05 * reps:
            first = next(r["error"] for r in records if "error" in r)
            raise RuntimeError(
                f"method {key} failed in {summary.reps_failed}/{reps} replicates; first: {first}"
            )
        summaries[key] = summary
    return ScenarioSummary(
        scenario_id=scenario.id,
        n=n,
        pi=scenario.pi,
        p=scenario.p,
        interference=scenario.interference,
        tau_true=tau,
        reps=reps,
        seed=int(seed),
        level=level,
        methods=summaries,
    )


# ---------------------------------------------------------------------------
# Theoretical-variance oracles
# ---------------------------------------------------------------------------

_FORMULAS = ("Vreg", "Vdim", "Vnp", "Valpha", "Vg")


def theoretical_variance_oracle(
    scenario: Scenario,
    formula: str,
    mc_reps: int,
    rng: np.random.Generator,
    params: dict | None = None,
) -> MonteCarloValue:
    """Monte Carlo evaluation of an asymptotic-variance formula.

    Covariates and noise are drawn from the scenario's laws; population
    regression coefficients come from the same draws' moments; the network
    factor b comes from nested quadrature on the scenario's graphon (or the
    plug-in statistic for a fixed network).  Returns the value with a
    batch-based standard error.
    """
    if formula not in _FORMULAS:
        raise ValueError(f"formula must be one of {_FORMULAS}")
    params = params or {}
    model = scenario.outcome
    pi = scenario.pi
    m = int(mc_reps)

    draw = sample_covariates(model, m, rng)
    noise = sample_outcome_noise(model, m, rng)
    ones = np.ones(m)
    zeros = np.zeros(m)
    f1 = outcome_values(model, ones, pi, draw, noise)
    f0 = outcome_values(model, zeros, pi, draw, noise)
    g1 = outcome_exposure_derivative(model, ones, pi, draw, noise)
    g0 = outcome_exposure_derivative(model, zeros, pi, draw, noise)
    Z = draw.Z

    if not scenario.interference:
        b = 0.0
    elif scenario.graphon is not None:
        b = graphon_b(scenario.graphon)
    else:
        b = estimate_b(scenario.network)

    need_cond = formula in ("Vnp", "Vg")
    if need_cond:
        m1 = conditional_mean(model, 1, pi, draw)
        m0 = conditional_mean(model, 0, pi, draw)

    def evaluate(idx: np.ndarray) -> float:
        z = Z[idx]
        a1, a0 = f1[idx], f0[idx]
        net = b * pi * (1.0 - pi) * (g1[idx].mean() - g0[idx].mean()) ** 2
        if formula == "Vdim":
            return a1.var() / pi + a0.var() / (1.0 - pi) + net
        if formula in ("Vreg", "Valpha"):
            x = np.column_stack([np.ones(idx.size), z])
            mxx = x.T @ x / idx.size
            beta1 = np.linalg.solve(mxx, x.T @ a1 / idx.size)
            beta0 = np.linalg.solve(mxx, x.T @ a0 / idx.size)
            r1 = a1 - x @ beta1
            r0 = a0 - x @ beta0
            zc = z - z.mean(axis=0)
            cov = zc.T @ zc / idx.size
            d = beta1[1:] - beta0[1:]
            v = (r1 * r1).mean() / pi + (r0 * r0).mean() / (1.0 - pi) + d @ cov @ d + net
            if formula == "Valpha":
                u = (1.0 - pi) * (np.asarray(params["alpha1"], dtype=float) - beta1[1:]) + pi * (
                    np.asarray(params["alpha0"], dtype=float) - beta0[1:]
                )
                v += (u @ cov @ u) / (pi * (1.0 - pi))
            return float(v)
        # Vnp / Vg share the first three terms
        c1, c0 = m1[idx], m0[idx]
        mix = (1.0 - pi) * (a1 - c1) + pi * (a0 - c0)
        v = (a1 - a0).var() + (mix * mix).mean() / (pi * (1.0 - pi)) + net
        if formula == "Vg":
            h1 = np.asarray([float(params["g1"](zz)) for zz in z])
            h0 = np.asarray([float(params["g0"](zz)) for zz in z])
            slack = (1.0 - pi) * (h1 - h1.mean() - c1 + a1.mean()) + pi * (h0 - h0.mean() - c0 + a0.mean())
            v += (slack * slack).mean() / (pi * (1.0 - pi))
        return float(v)

    value = evaluate(np.arange(m))
    batches = np.array_split(np.arange(m), 20)
    batch_vals = np.array([evaluate(idx) for idx in batches if idx.size >= max(50, Z.shape[1] + 2)])
    se = float(batch_vals.std(ddof=1) / math.sqrt(batch_vals.size)) if batch_vals.size > 1 else float("nan")
    return MonteCarloValue(value=value, se=se)


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _safe_name(method: str) -> str:
    return method.replace(":", "-")


def emit_report(
    summary: ScenarioSummary,
    out_dir,
    formats=("json", "csv"),
    overlay_variances: dict[str, float] | None = None,
    hist_bins: int = 30,
) -> list[Path]:
    """Write summary.json / cells.csv / hist_<method>.csv under out_dir.

    Histogram files carry bin edges and counts for each method's estimate
    draws plus the parameters of the overlay normal N(tau, V/n), where V is
    the supplied theoretical variance (sample-based when absent).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    known = {"json", "csv", "histogram-csv"}
    unknown = set(formats) - known
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}; choose from {sorted(known)}")

    if "json" in formats:
        path = out / "summary.json"
        path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
        written.append(path)
    if "csv" in formats:
        path = out / "cells.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "scenario", "n", "pi", "p", "method", "reps_ok", "reps_failed",
                    "mean", "variance", "n_mse", "coverage", "coverage_nonet",
                    "ci_halfwidth", "mean_kept",
                ]
            )
            for name, ms in summary.methods.items():
                writer.writerow(
                    [
                        summary.scenario_id, summary.n, summary.pi, summary.p, name,
                        ms.reps_ok, ms.reps_failed, repr(ms.mean), repr(ms.variance),
                        repr(ms.n_mse), ms.coverage, ms.coverage_nonet,
                        ms.ci_halfwidth, ms.mean_kept,
                    ]
                )
        written.append(path)
    if "histogram-csv" in formats:
        for name, ms in summary.methods.items():
            v = (overlay_variances or {}).get(name)
            overlay_var = v if v is not None else ms.variance * summary.n
            sd = math.sqrt(max(overlay_var, 0.0) / summary.n)
            counts, edges = np.histogram(ms.estimates, bins=hist_bins)
            path = out / f"hist_{_safe_name(name)}.csv"
            with open(path, "w", newline="") as fh:
                fh.write(f"# overlay_mean={summary.tau_true!r} overlay_sd={sd!r}\n")
                writer = csv.writer(fh)
                writer.writerow(["bin_left", "bin_right", "count"])
                for k in range(counts.size):
                    writer.writerow([repr(float(edges[k])), repr(float(edges[k + 1])), int(counts[k])])
            written.append(path)
    return written


# ---------------------------------------------------------------------------
# Table reproduction
# ---------------------------------------------------------------------------

TABLE_IDS = ("table1", "table2", "table3", "table4", "table5", "table6", "fig3")

_TABLE1_REFERENCE = {
    (100, 0.5): (0.901, 0.837), (100, 0.6): (0.935, 0.853), (100, 0.7): (0.964, 0.880),
    (300, 0.5): (0.914, 0.848), (300, 0.6): (0.941, 0.856), (300, 0.7): (0.960, 0.892),
    (500, 0.5): (0.925, 0.832), (500, 0.6): (0.943, 0.852), (500, 0.7): (0.963, 0.897),
}
_TABLE2_REFERENCE = {
    1: {(0.2, 0.01): 1.906, (0.4, 0.01): 1.896, (0.6, 0.01): 1.740, (0.8, 0.01): 1.755, (1.0, 0.01): 2.095,
        (0.2, 0.05): 2.165, (0.4, 0.05): 1.845, (0.6, 0.05): 1.826, (0.8, 0.05): 1.974, (1.0, 0.05): 1.875},
    5: {(1.8, 0.01): 1.949, (2.0, 0.01): 1.858, (2.2, 0.01): 2.057, (2.4, 0.01): 2.015, (2.6, 0.01): 2.035,
        (1.8, 0.05): 2.207, (2.0, 0.05): 1.973, (2.2, 0.05): 1.907, (2.4, 0.05): 2.204, (2.6, 0.05): 2.009},
}
_TABLE3_REFERENCE = {(1, 100): 0.965, (1, 300): 0.971, (1, 500): 0.971,
                     (5, 100): 0.921, (5, 300): 0.973, (5, 500): 0.983}
_TABLE4_REFERENCE = {
    1: (0.518, 0.200, 1.735, 1.735), 2: (0.745, 0.200, 1.794, 1.794),
    3: (0.995, 0.200, 1.957, 1.958), 4: (1.831, 0.199, 1.922, 1.923),
    5: (2.173, 0.198, 2.016, 2.019), 6: (2.523, 0.199, 2.103, 2.104),
    7: (2.881, 0.204, 2.248, 2.267), 8: (3.652, 0.191, 1.902, 1.982),
    9: (4.046, 0.192, 2.092, 2.144), 10: (4.443, 0.194, 2.120, 2.147),
}
_TABLE5_REFERENCE = {
    ("morning", "dim"): (-0.217, 0.0498), ("morning", "linear"): (-0.243, 0.0338),
    ("morning", "np"): (-0.255, 0.0334),
    ("midday", "dim"): (-0.234, 0.0721), ("midday", "linear"): (-0.256, 0.0536),
    ("midday", "np"): (-0.243, 0.0528),
}
_TABLE6_REFERENCE = {
    ("morning", "dim"): (-0.231, 0.0584, 0.944, 0.912),
    ("morning", "linear"): (-0.232, 0.0416, 0.923, 0.853),
    ("morning", "np"): (-0.225, 0.0403, 0.945, 0.862),
    ("midday", "dim"): (-0.229, 0.0941, 0.962, 0.917),
    ("midday", "linear"): (-0.228, 0.0734, 0.954, 0.839),
    ("midday", "np"): (-0.216, 0.0718, 0.971, 0.839),
}


def _scaled_reps(budget: float, full: int = 1000) -> int:
    return max(int(round(full * budget)), 20)


def reproduce_table(
    table_id: str,
    budget: float = 1.0,
    seed: int = 20240,
    workers: int = 1,
    out_dir=None,
    contacts: dict | None = None,
) -> dict:
    """Run the preset grid behind one of the reported tables.

    `budget` scales replicate counts (1.0 = the full 1000); scaled runs are
    labeled and carry the Monte Carlo widening factor sqrt(1000/reps).
    `contacts` may map "morning"/"midday" to user-supplied contact files.
    Returns a report dict of cells with computed and reference values, and
    writes report.json when out_dir is given.
    """
    if table_id not in TABLE_IDS:
        raise ValueError(f"unknown table {table_id!r}; choose from {TABLE_IDS}")
    reps = _scaled_reps(budget)
    contacts = contacts or {}
    report = {
        "table": table_id,
        "reps": reps,
        "scaled": reps != 1000,
        "mc_tolerance_factor": math.sqrt(1000.0 / reps),
        "cells": [],
    }
    cells = report["cells"]

    if table_id == "table1":
        for n in (100, 300, 500):
            for pi in (0.5, 0.6, 0.7):
                scenario = get_scenario("sec31-validation", pi=pi)
                summary = run_scenario(
                    scenario, n, ("linear:spectral", "dim:conservative"), reps, seed, workers
                )
                ref = _TABLE1_REFERENCE[(n, pi)]
                cells.append({
                    "n": n, "pi": pi,
                    "coverage": summary.methods["linear:spectral"].coverage,
                    "coverage_reference": ref[0],
                    "coverage_conservative": summary.methods["dim:conservative"].coverage,
                    "coverage_conservative_reference": ref[1],
                })
    elif table_id == "table2":
        for p, grid in _TABLE2_REFERENCE.items():
            scenario = get_scenario("sec41-main", p=p)
            for (h, alpha), ref in grid.items():
                summary = run_scenario(
                    scenario, 1000, ("np:none",), reps, seed, workers,
                    np_overrides={"h_band": h, "alpha": alpha},
                )
                cells.append({
                    "p": p, "h_band": h, "alpha": alpha,
                    "n_mse": summary.methods["np:none"].n_mse, "n_mse_reference": ref,
                })
    elif table_id == "table3":
        for (p, n), ref in _TABLE3_REFERENCE.items():
            scenario = get_scenario("sec41-main", p=p)
            summary = run_scenario(scenario, n, ("np:polyseq",), reps, seed, workers)
            cells.append({
                "p": p, "n": n,
                "coverage": summary.methods["np:polyseq"].coverage, "coverage_reference": ref,
            })
    elif table_id == "table4":
        for p, (h_ref, mean_ref, var_ref, mse_ref) in _TABLE4_REFERENCE.items():
            scenario = get_scenario("sec41-main", p=p)
            summary = run_scenario(scenario, 1000, ("np:none",), reps, seed, workers)
            ms = summary.methods["np:none"]
            cells.append({
                "p": p, "h_band_reference": h_ref,
                "mean": ms.mean, "mean_reference": mean_ref,
                "n_variance": 1000 * ms.variance, "n_variance_reference": var_ref,
                "n_mse": ms.n_mse, "n_mse_reference": mse_ref,
            })
    elif table_id in ("table5", "table6"):
        for period in ("morning", "midday"):
            scenario = get_scenario(
                "contact-vaccine", period=period, contacts_path=contacts.get(period)
            )
            if table_id == "table5":
                summary = run_scenario(
                    scenario, scenario.network.n, ("dim", "linear", "np"), 1, seed, 1
                )
                for short, key in (("dim", "dim:spectral"), ("linear", "linear:spectral"), ("np", "np:polyseq")):
                    ms = summary.methods[key]
                    ref = _TABLE5_REFERENCE[(period, short)]
                    se = math.sqrt(ms.mean_v_hat / summary.n)
                    cells.append({
                        "network": period, "method": short,
                        "estimate": ms.mean, "estimate_reference": ref[0],
                        "se": se, "se_reference": ref[1],
                        "ci_low": ms.mean - ms.ci_halfwidth, "ci_high": ms.mean + ms.ci_halfwidth,
                    })
            else:
                summary = run_scenario(
                    scenario, scenario.network.n, ("dim", "linear", "np"), reps, seed, workers
                )
                dim_var = summary.methods["dim:spectral"].variance
                for short, key in (("dim", "dim:spectral"), ("linear", "linear:spectral"), ("np", "np:polyseq")):
                    ms = summary.methods[key]
                    ref = _TABLE6_REFERENCE[(period, short)]
                    cells.append({
                        "network": period, "method": short,
                        "mean": ms.mean, "mean_reference": ref[0],
                        "se": math.sqrt(ms.mean_v_hat / summary.n), "se_reference": ref[1],
                        "coverage": ms.coverage, "coverage_reference": ref[2],
                        "coverage_nonet": ms.coverage_nonet, "coverage_nonet_reference": ref[3],
                        "variance_reduction_vs_dim": 1.0 - ms.variance / dim_var if short != "dim" else 0.0,
                    })
    elif table_id == "fig3":
        for n in (250, 500, 750, 1000):
            scenario = get_scenario("sec41-main", p=5, np_alpha=0.05)
            summary = run_scenario(scenario, n, ("linear:none", "np:none"), reps, seed, workers)
            cells.append({
                "n": n,
                "n_mse_linear": summary.methods["linear:none"].n_mse,
                "n_mse_np": summary.methods["np:none"].n_mse,
                "n_mse_linear_reference_at_1000": 3.95,
            })

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report
