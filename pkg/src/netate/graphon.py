"""Graphon specifications, sparse random-graph sampling, and graphon integrals.

A graphon here is a symmetric function h on the unit square together with a
sparsity rule rho_n = scale * n**(-gamma).  Graphs are sampled by drawing one
latent U_i per vertex and connecting i and j with probability
min(rho_n * h(U_i, U_j), 1).  The module also computes the population
quantities that the variance estimators target, by nested adaptive
quadrature, so tests and the simulation harness can use them as oracles.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.stats import qmc

from ._errors import IsolatedVertexError, QuadratureError, UnknownGraphonError

__all__ = [
    "GraphonSpec",
    "Network",
    "make_graphon",
    "rank_graphon",
    "sample_latents",
    "sample_graph",
    "graphon_b",
    "graphon_degree_profile",
    "probe_symmetry",
    "probe_bounds",
    "validate_rank_form",
]


@dataclass(frozen=True)
class GraphonSpec:
    """A symmetric graphon with its sparsity rule.

    Parameters
    ----------
    h : callable
        Vectorized symmetric function of two arrays in [0, 1].
    sparsity_exponent : float
        gamma >= 0 in rho_n = sparsity_scale * n**(-gamma); 0 means dense.
    rank_hint : int, optional
        Declared finite rank, consumed by spectral variance estimation.
    lower_bound, upper_bound : float, optional
        Declared c_l <= inf_x int h(x, y) dy and c_u >= sup h.  Checked by
        probes, not symbolically.
    eigenvalues, eigenfunctions : optional
        Present only for rank-expansion specs: h = sum_k lam_k psi_k(x) psi_k(y)
        with orthonormal psi_k.
    sparsity_scale : float
        Multiplier on n**(-gamma), default 1 (per-form override knob).
    """

    h: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sparsity_exponent: float = 0.25
    rank_hint: int | None = None
    lower_bound: float | None = None
    upper_bound: float | None = None
    name: str = "custom"
    eigenvalues: tuple[float, ...] | None = None
    eigenfunctions: tuple[Callable[[np.ndarray], np.ndarray], ...] | None = None
    sparsity_scale: float = 1.0

    def __post_init__(self):
        if self.sparsity_exponent < 0:
            raise ValueError("sparsity_exponent must be >= 0")
        if self.sparsity_scale <= 0:
            raise ValueError("sparsity_scale must be positive")

    def edge_density(self, n: int) -> float:
        """rho_n for a graph on n vertices."""
        return self.sparsity_scale * float(n) ** (-self.sparsity_exponent)


@dataclass(frozen=True)
class Network:
    """An undirected simple graph with cached degrees.

    `adjacency` is a symmetric scipy CSR array with zero diagonal; `degrees`
    is recomputable from it and must match exactly.  `latents` is populated
    only by the graph sampler (simulation mode) and is never read by
    estimators.
    """

    n: int
    adjacency: sp.csr_array
    degrees: np.ndarray
    latents: np.ndarray | None = field(default=None, compare=False)

    @classmethod
    def from_adjacency(cls, adjacency, latents: np.ndarray | None = None) -> "Network":
        a = sp.csr_array(adjacency, dtype=np.float64)
        n = a.shape[0]
        if a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if a.diagonal().any():
            raise ValueError("adjacency must have a zero diagonal")
        if (a != a.T).nnz != 0:
            raise ValueError("adjacency must be symmetric")
        degrees = np.asarray(a.sum(axis=1)).ravel().astype(np.int64)
        return cls(n=n, adjacency=a, degrees=degrees, latents=latents)

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int]]) -> "Network":
        rows, cols = [], []
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop ({i},{i}) not allowed")
            rows += [i, j]
            cols += [j, i]
        data = np.ones(len(rows), dtype=np.float64)
        a = sp.csr_array(sp.coo_array((data, (rows, cols)), shape=(n, n)))
        a.data[:] = 1.0  # collapse duplicate edge listings
        return cls.from_adjacency(a)

    def neighbors(self, i: int) -> np.ndarray:
        start, stop = self.adjacency.indptr[i], self.adjacency.indptr[i + 1]
        return self.adjacency.indices[start:stop]

    def treated_neighbor_counts(self, w: np.ndarray) -> np.ndarray:
        """M_i = sum_j E_ij w_j."""
        return self.adjacency @ np.asarray(w, dtype=np.float64)

    def edge_array(self) -> np.ndarray:
        """(m, 2) array of edges with i < j."""
        coo = sp.coo_array(sp.triu(self.adjacency, k=1))
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]]).astype(np.int64)

    def to_edge_list_csv(self, path) -> None:
        """Write edges as 0-based "i,j" rows with i < j."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for i, j in self.edge_array():
                writer.writerow([int(i), int(j)])


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _constant_h(c: float):
    def h(x, y):
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))
        if shape == ():
            return float(c)
        return np.full(shape, float(c))

    return h


def _quadratic_h(x, y):
    return x * x + y * y + x * y + 0.1


def _parse_expr(expr: str) -> Callable[[np.ndarray], np.ndarray]:
    import sympy

    x = sympy.Symbol("x")
    parsed = sympy.sympify(expr)
    extra = parsed.free_symbols - {x}
    if extra:
        raise UnknownGraphonError(f"expression may only use 'x', got extra symbols {extra}")
    return sympy.lambdify(x, parsed, modules="numpy")


def make_graphon(key: str, sparsity_exponent: float = 0.25, sparsity_scale: float = 1.0) -> GraphonSpec:
    """Build a registered graphon.

    Keys: ``paper-sec3`` (x^2 + y^2 + xy + 0.1, rank 3), ``constant:<c>``,
    and ``rank1:<expr>`` where ``<expr>`` is a function of x defining
    h(x, y) = expr(x) * expr(y) (normalized internally to an orthonormal
    rank-1 expansion).
    """
    if key == "paper-sec3":
        # inf_x int h = 1/3 + 0.1 at x = 0; sup h = 3.1 at (1, 1)
        return GraphonSpec(
            h=_quadratic_h,
            sparsity_exponent=sparsity_exponent,
            rank_hint=3,
            lower_bound=13.0 / 30.0,
            upper_bound=3.1,
            name=key,
            sparsity_scale=sparsity_scale,
        )
    if key.startswith("constant:"):
        c = float(key.split(":", 1)[1])
        if c < 0:
            raise UnknownGraphonError("constant graphon requires c >= 0")
        return GraphonSpec(
            h=_constant_h(c),
            sparsity_exponent=sparsity_exponent,
            rank_hint=1,
            lower_bound=c,
            upper_bound=c,
            name=key,
            eigenvalues=(c,),
            eigenfunctions=((lambda x: np.ones_like(np.asarray(x, dtype=float))),),
            sparsity_scale=sparsity_scale,
        )
    if key.startswith("rank1:"):
        psi_raw = _parse_expr(key.split(":", 1)[1])
        norm_sq, _ = integrate.quad(lambda t: psi_raw(t) ** 2, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
        if norm_sq <= 0:
            raise UnknownGraphonError("rank1 expression must have positive L2 norm")
        scale = float(np.sqrt(norm_sq))
        psi = lambda x: psi_raw(x) / scale  # noqa: E731
        return rank_graphon(
            eigenvalues=[norm_sq],
            eigenfunctions=[psi],
            sparsity_exponent=sparsity_exponent,
            name=key,
            sparsity_scale=sparsity_scale,
        )
    raise UnknownGraphonError(f"unknown graphon key {key!r}")


def rank_graphon(
    eigenvalues: Sequence[float],
    eigenfunctions: Sequence[Callable],
    sparsity_exponent: float = 0.25,
    name: str = "rank-expansion",
    sparsity_scale: float = 1.0,
) -> GraphonSpec:
    """Finite-rank graphon h(x, y) = sum_k lam_k psi_k(x) psi_k(y).

    Eigenvalues must be nonzero and ordered by decreasing absolute value;
    eigenfunctions are expected orthonormal on [0, 1] (checked by
    :func:`validate_rank_form`, not here).
    """
    lams = tuple(float(v) for v in eigenvalues)
    psis = tuple(eigenfunctions)
    if len(lams) != len(psis) or not lams:
        raise ValueError("need matching, nonempty eigenvalue/eigenfunction sequences")
    if any(v == 0 for v in lams):
        raise ValueError("eigenvalues must be nonzero")
    if list(np.abs(lams)) != sorted(np.abs(lams), reverse=True):
        raise ValueError("eigenvalues must be ordered by decreasing |lambda|")

    def h(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = sum(lam * psi(x) * psi(y) for lam, psi in zip(lams, psis))
        return total if total.shape else float(total)

    return GraphonSpec(
        h=h,
        sparsity_exponent=sparsity_exponent,
        rank_hint=len(lams),
        name=name,
        eigenvalues=lams,
        eigenfunctions=psis,
        sparsity_scale=sparsity_scale,
    )


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_latents(n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. uniform latents in the open unit interval."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = rng.random(n)
    while (u == 0.0).any():  # open interval; 0 has probability ~2^-53
        u[u == 0.0] = rng.random(int((u == 0.0).sum()))
    return u


def sample_graph(spec: GraphonSpec, latents: np.ndarray, rng: np.random.Generator) -> Network:
    """Draw a graph: each pair i < j connected with prob min(rho_n h(U_i,U_j), 1).

    Clamping at 1 is silent.  The latent vector is stored on the returned
    network for oracle checks; estimators never read it.
    """
    u = np.asarray(latents, dtype=float)
    n = u.shape[0]
    if n < 1 or ((u <= 0.0) | (u >= 1.0)).any():
        raise ValueError("latents must lie strictly inside (0, 1)")
    rho = spec.edge_density(n)
    iu, ju = np.triu_indices(n, k=1)
    probs = np.minimum(rho * np.asarray(spec.h(u[iu], u[ju]), dtype=float), 1.0)
    hit = rng.random(iu.shape[0]) < probs
    ei, ej = iu[hit], ju[hit]
    data = np.ones(2 * ei.shape[0], dtype=np.float64)
    a = sp.csr_array(
        sp.coo_array((data, (np.concatenate([ei, ej]), np.concatenate([ej, ei]))), shape=(n, n))
    )
    degrees = np.asarray(a.sum(axis=1)).ravel().astype(np.int64)
    return Network(n=n, adjacency=a, degrees=degrees, latents=u)


# ---------------------------------------------------------------------------
# Graphon integrals (quadrature oracles)
# ---------------------------------------------------------------------------

def _quad(fn, a: float, b: float, tol: float, what: str) -> float:
    out = integrate.quad(fn, a, b, epsabs=tol, epsrel=tol, limit=200, full_output=1)
    value, abserr = out[0], out[1]
    if len(out) > 3 or abserr > max(tol, 10 * tol * abs(value)):
        raise QuadratureError(f"quadrature for {what} did not converge", achieved=abserr)
    return value


def graphon_degree_profile(spec: GraphonSpec, latent: float, tol: float = 1e-10) -> float:
    """int_0^1 h(latent, y) dy, the population analogue of N_i / (n rho_n)."""
    if not 0.0 < latent < 1.0:
        raise ValueError("latent must lie in (0, 1)")
    return _quad(lambda y: float(spec.h(latent, y)), 0.0, 1.0, tol, "degree profile")


def graphon_b(spec: GraphonSpec, tol: float = 1e-8) -> float:
    """The squared-mean degree-ratio functional of the graphon.

    Computed by nested 1-D adaptive quadrature: row integral
    s(x) = int h(x, z) dz, then g(y) = int h(x, y) / s(x) dx, then
    int g(y)^2 dy, with the inner tolerances tightened below `tol`.
    """
    inner_tol = min(tol * 1e-3, 1e-11)
    cache: dict[float, float] = {}

    def s(x: float) -> float:
        v = cache.get(x)
        if v is None:
            v = _quad(lambda z: float(spec.h(x, z)), 0.0, 1.0, inner_tol, "row integral")
            if v <= 0:
                raise QuadratureError("row integral must be positive for the ratio", achieved=v)
            cache[x] = v
        return v

    def g(y: float) -> float:
        return _quad(lambda x: float(spec.h(x, y)) / s(x), 0.0, 1.0, inner_tol, "ratio integral")

    return _quad(lambda y: g(y) ** 2, 0.0, 1.0, tol, "outer integral")


# ---------------------------------------------------------------------------
# Probe checks (declared invariants are verified numerically, not symbolically)
# ---------------------------------------------------------------------------

def probe_symmetry(spec: GraphonSpec, rng: np.random.Generator, probes: int = 10_000) -> float:
    """Max |h(x,y) - h(y,x)| over random probe pairs."""
    x = rng.random(probes)
    y = rng.random(probes)
    return float(np.max(np.abs(np.asarray(spec.h(x, y)) - np.asarray(spec.h(y, x)))))


def probe_bounds(spec: GraphonSpec, n_points: int = 2**14) -> tuple[float, float]:
    """(min row integral, max h) over a Sobol probe grid.

    Compared against the declared (lower_bound, upper_bound) by callers; a
    16384-point low-discrepancy probe stands in for symbolic verification.
    """
    pairs = qmc.Sobol(d=2, scramble=False, seed=0).random(n_points)
    pairs = np.clip(pairs, 1e-9, 1 - 1e-9)
    sup_h = float(np.max(spec.h(pairs[:, 0], pairs[:, 1])))
    xs = np.clip(qmc.Sobol(d=1, scramble=False, seed=0).random(256).ravel(), 1e-9, 1 - 1e-9)
    inf_row = min(graphon_degree_profile(spec, float(x), tol=1e-9) for x in xs)
    return inf_row, sup_h


def validate_rank_form(spec: GraphonSpec, tol: float = 1e-6) -> None:
    """Check orthonormality of a rank-expansion spec's eigenfunctions."""
    if spec.eigenfunctions is None:
        raise ValueError("spec carries no rank expansion")
    psis = spec.eigenfunctions
    for k, pk in enumerate(psis):
        norm = _quad(lambda t: float(pk(t)) ** 2, 0.0, 1.0, tol * 1e-2, "eigenfunction norm")
        if abs(norm - 1.0) > tol:
            raise ValueError(f"eigenfunction {k} has squared norm {norm}, expected 1")
        for l in range(k + 1, len(psis)):
            pl = psis[l]
            dot = _quad(lambda t: float(pk(t)) * float(pl(t)), 0.0, 1.0, tol * 1e-2, "eigenfunction dot")
            if abs(dot) > tol:
                raise ValueError(f"eigenfunctions {k},{l} have inner product {dot}, expected 0")


def require_positive_degrees(network: Network) -> None:
    """Raise IsolatedVertexError naming the first zero-degree vertex."""
    zero = np.flatnonzero(network.degrees == 0)
    if zero.size:
        raise IsolatedVertexError(int(zero[0]))
