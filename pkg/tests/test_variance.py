import math

import numpy as np
import pytest

from netate import (
    InvalidVarianceError,
    IsolatedVertexError,
    Network,
    SpectralDecomposition,
    TrialData,
    confidence_interval,
    conservative_network_term,
    estimate_b,
    estimate_derivative_means,
    get_scenario,
    leading_eigenpairs,
    linear_adjusted,
    make_graphon,
    pc_balancing_weights,
    run_scenario,
    variance_np_polyseq,
    variance_reg,
)
import netate.variance
from netate.graphon import sample_graph, sample_latents
from netate.trial import (
    assign_treatments,
    exposure_fractions,
    sample_covariates,
    simulate_outcomes,
)

from conftest import WORKERS, rng_for


def complete_graph(n):
    return Network.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


# ---------------------------------------------------------------------------
# degree-ratio statistic
# ---------------------------------------------------------------------------

def test_estimate_b_complete_graph_is_one():
    assert estimate_b(complete_graph(6)) == pytest.approx(1.0, rel=1e-14)


def test_estimate_b_star_graph():
    star = Network.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert estimate_b(star) == pytest.approx(7.0 / 3.0, rel=1e-12)


def test_estimate_b_isolated_vertex():
    net = Network.from_edges(3, [(0, 1)])
    with pytest.raises(IsolatedVertexError):
        estimate_b(net)


def test_estimate_b_consistency_drift():
    # plug-in statistic approaches the graphon functional as n grows
    spec = make_graphon("paper-sec3")
    from netate import graphon_b

    b = graphon_b(spec)
    closer = 0
    for seed in range(50):
        devs = []
        for n in (200, 2000):
            rng = rng_for(40, seed, n)
            net = sample_graph(spec, sample_latents(n, rng), rng)
            devs.append(abs(estimate_b(net) - b))
        closer += devs[1] < devs[0]
    assert closer >= 45  # >= 90% of seed pairs


# ---------------------------------------------------------------------------
# eigenpairs
# ---------------------------------------------------------------------------

def test_eigenpairs_triangle():
    spec = leading_eigenpairs(complete_graph(3), 1)
    assert spec.eigenvalues[0] == pytest.approx(2.0, abs=1e-8)
    v = spec.eigenvectors[:, 0]
    assert abs(v @ (np.ones(3) / math.sqrt(3))) == pytest.approx(1.0, abs=1e-10)


def test_eigenpairs_empty_graph():
    net = Network.from_edges(4, [])
    spec = leading_eigenpairs(net, 2)
    assert np.allclose(spec.eigenvalues, 0.0)
    assert np.allclose(spec.eigenvectors.T @ spec.eigenvectors, np.eye(2), atol=1e-10)


def test_eigenpairs_two_blocks():
    edges = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    edges += [(i + 4, j + 4) for i, j in edges]
    net = Network.from_edges(8, edges)
    spec = leading_eigenpairs(net, 2)
    assert np.allclose(np.abs(spec.eigenvalues), [3.0, 3.0], atol=1e-8)
    # residual invariant, not eigenvector layout: any basis of the eigenspace passes
    assert (spec.residual_norms(net) <= 1e-6 * spec.operator_norm()).all()


def test_eigenpairs_invariants_on_random_graph():
    spec_g = make_graphon("paper-sec3")
    rng = rng_for(41)
    net = sample_graph(spec_g, sample_latents(400, rng), rng)
    dec = leading_eigenpairs(net, 3)
    assert np.all(np.diff(np.abs(dec.eigenvalues)) <= 1e-9)
    gram = dec.eigenvectors.T @ dec.eigenvectors
    assert np.allclose(gram, np.eye(3), atol=1e-8)
    assert np.allclose(np.linalg.norm(dec.eigenvectors, axis=0), 1.0, atol=1e-10)
    assert (dec.residual_norms(net) <= 1e-6 * dec.operator_norm()).all()


def test_eigenpairs_lanczos_path_matches_dense():
    # above the dense threshold the Lanczos branch must satisfy the same contract
    spec_g = make_graphon("constant:0.6", sparsity_exponent=0.45)
    rng = rng_for(42)
    n = 2050
    net = sample_graph(spec_g, sample_latents(n, rng), rng)
    dec = leading_eigenpairs(net, 3)
    dense = np.linalg.eigvalsh(net.adjacency.toarray())
    top = dense[np.argsort(-np.abs(dense))[:3]]
    assert np.allclose(np.sort(dec.eigenvalues), np.sort(top), atol=1e-6)
    assert (dec.residual_norms(net) <= 1e-6 * dec.operator_norm()).all()


def test_eigenpairs_rank_bounds():
    with pytest.raises(ValueError):
        leading_eigenpairs(complete_graph(3), 0)
    with pytest.raises(ValueError):
        leading_eigenpairs(complete_graph(3), 4)


# ---------------------------------------------------------------------------
# balancing weights and derivative means
# ---------------------------------------------------------------------------

def test_pc_weights_no_balancing_is_raw_contrast():
    net = complete_graph(5)
    w = np.array([1, 0, 0, 1, 0])
    v = pc_balancing_weights(net, None, w, 0.4)
    m = net.treated_neighbor_counts(w)
    expected = m / 0.4 - (net.degrees - m) / 0.6
    assert (v == expected).all()


def test_pc_weights_unit_vector_basis():
    net = complete_graph(4)
    w = np.array([1, 1, 0, 0])
    e1 = np.zeros((4, 1))
    e1[0, 0] = 1.0
    dec = SpectralDecomposition(eigenvalues=np.array([1.0]), eigenvectors=e1)
    out = pc_balancing_weights(net, dec, w, 0.5)
    v = pc_balancing_weights(net, None, w, 0.5)
    assert out[0] == 0.0
    assert (out[1:] == v[1:]).all()


def test_pc_weights_constraint_and_sign_invariance():
    spec_g = make_graphon("paper-sec3")
    rng = rng_for(43)
    net = sample_graph(spec_g, sample_latents(300, rng), rng)
    w = assign_treatments(300, 0.5, rng)
    dec = leading_eigenpairs(net, 3)
    out = pc_balancing_weights(net, dec, w, 0.5)
    assert np.max(np.abs(dec.eigenvectors.T @ out)) < 1e-8
    flipped = SpectralDecomposition(
        eigenvalues=dec.eigenvalues.copy(),
        eigenvectors=dec.eigenvectors * np.array([1.0, -1.0, 1.0]),
    )
    out2 = pc_balancing_weights(net, flipped, w, 0.5)
    assert np.max(np.abs(out - out2)) < 1e-10


def test_derivative_means_trivial_cases():
    net = complete_graph(4)
    w = np.array([1, 1, 0, 1])
    wt = pc_balancing_weights(net, None, w, 0.5)
    data = TrialData(Y=np.zeros(4), W=w, Z=np.zeros((4, 0)), pi=0.5, network=net)
    assert estimate_derivative_means(data, wt, 0.5) == (0.0, 0.0)
    all_treated = TrialData(Y=np.ones(4), W=np.ones(4, dtype=int), Z=np.zeros((4, 0)), pi=0.5, network=net)
    wt2 = pc_balancing_weights(net, None, np.ones(4), 0.5)
    d1, d0 = estimate_derivative_means(all_treated, wt2, 0.5)
    assert d0 == 0.0


def test_derivative_means_consistency_sparse_regime(monkeypatch):
    # analytic exposure-derivative contrast is 4 - 2 pi = 3 at pi = 0.5; the
    # balanced estimator approaches it as the graph sparsifies (rho -> 0)
    monkeypatch.setattr(netate.variance, "DENSE_EIG_THRESHOLD", 256)  # Lanczos keeps this fast
    spec_g = make_graphon("paper-sec3", sparsity_exponent=0.45)
    scenario = get_scenario("sec31-validation", pi=0.5)
    vals = []
    for seed in range(30):
        rng = rng_for(44, seed)
        n = 2000
        u = sample_latents(n, rng)
        net = sample_graph(spec_g, u, rng)
        w = assign_treatments(n, 0.5, rng)
        draw = sample_covariates(scenario.outcome, n, rng)
        y = simulate_outcomes(scenario.outcome, w, exposure_fractions(net, w), draw, rng)
        data = TrialData(Y=y, W=w, Z=draw.Z, pi=0.5, network=net)
        dec = leading_eigenpairs(net, 3)
        wt = pc_balancing_weights(net, dec, w, 0.5)
        d1, d0 = estimate_derivative_means(data, wt, 0.5)
        vals.append(d1 - d0)
    assert abs(np.mean(vals) - 3.0) < 0.9


# ---------------------------------------------------------------------------
# variance assembly
# ---------------------------------------------------------------------------

def linear_data(n=150, seed=0, noise=0.0, equal_slopes=False):
    rng = rng_for(45, seed)
    Z = rng.standard_normal((n, 2))
    w = (rng.random(n) < 0.5).astype(int)
    b1 = np.array([1.0, -2.0])
    b0 = b1 if equal_slopes else np.array([0.5, 0.5])
    y = np.where(w == 1, 1.0 + Z @ b1, -1.0 + Z @ b0) + noise * rng.standard_normal(n)
    return TrialData(Y=y, W=w, Z=Z, pi=0.5)


def test_variance_reg_no_interference_reduction():
    data = linear_data(noise=0.5)
    fit = linear_adjusted(data)
    rep = variance_reg(data, fit, b_hat=0.0, deriv1=1.3, deriv0=0.7)
    assert rep.components[3] == 0.0
    rep2 = variance_reg(data, fit, b_hat=2.0, deriv1=0.9, deriv0=0.9)
    assert rep2.components[3] == 0.0


def test_variance_reg_noiseless_equal_slopes_leaves_network_term():
    data = linear_data(noise=0.0, equal_slopes=True)
    fit = linear_adjusted(data)
    rep = variance_reg(data, fit, b_hat=1.5, deriv1=2.0, deriv0=-1.0)
    c1, c2, c3, c4 = rep.components
    assert c1 == pytest.approx(0.0, abs=1e-18)
    assert c2 == pytest.approx(0.0, abs=1e-18)
    assert c3 == pytest.approx(0.0, abs=1e-20)
    assert c4 == pytest.approx(1.5 * 0.25 * 9.0, rel=1e-12)
    assert rep.v_hat == pytest.approx(c4, rel=1e-9)


def test_variance_reg_components_nonnegative():
    for seed in range(10):
        data = linear_data(seed=seed, noise=1.0)
        fit = linear_adjusted(data)
        rep = variance_reg(data, fit, b_hat=1.0, deriv1=0.3, deriv0=-0.2)
        assert rep.components[0] >= 0 and rep.components[1] >= 0
        assert rep.components[2] >= -1e-15 and rep.components[3] >= 0


def test_variance_reg_pi_hat_flag():
    data = linear_data(noise=1.0)
    fit = linear_adjusted(data)
    a = variance_reg(data, fit, 0.0, 0.0, 0.0)
    b = variance_reg(data, fit, 0.0, 0.0, 0.0, use_pi_hat=True)
    pi_hat = data.W.mean()
    assert b.components[0] == pytest.approx(a.components[0] * 0.5 / pi_hat, rel=1e-12)


# ---------------------------------------------------------------------------
# confidence intervals
# ---------------------------------------------------------------------------

def test_confidence_interval_matches_erf_oracle():
    import mpmath

    z = float(mpmath.sqrt(2) * mpmath.erfinv(mpmath.mpf("0.95")))
    lo, hi = confidence_interval(0.0, 1.0, 100, 0.95)
    assert hi == pytest.approx(z / 10.0, abs=1e-4)
    assert hi == pytest.approx(0.19600, abs=1e-4)
    assert lo == -hi


def test_confidence_interval_monotone_in_level():
    widths = [
        confidence_interval(0.0, 2.0, 50, lvl)[1] for lvl in (0.5, 0.8, 0.9, 0.95, 0.99)
    ]
    assert all(a < b for a, b in zip(widths, widths[1:]))


def test_confidence_interval_degenerate_and_invalid():
    assert confidence_interval(1.5, 0.0, 10, 0.95) == (1.5, 1.5)
    with pytest.raises(InvalidVarianceError):
        confidence_interval(0.0, -1e-9, 10, 0.95)


def test_confidence_interval_width_scales_with_n():
    w1 = confidence_interval(0.0, 3.0, 100, 0.95)[1]
    w2 = confidence_interval(0.0, 3.0, 400, 0.95)[1]
    assert w1 == pytest.approx(2 * w2, rel=1e-12)


def test_conservative_network_term():
    assert conservative_network_term(0.0) == 0.0
    assert conservative_network_term(0.5) == 2.0
    assert conservative_network_term(-0.5) == 2.0


# ---------------------------------------------------------------------------
# polynomial variance sequence
# ---------------------------------------------------------------------------

def test_polyseq_linear_truth_stabilizes_at_degree_one():
    data = linear_data(n=800, seed=3, noise=0.5)
    fit = linear_adjusted(data)
    v1 = variance_reg(data, fit, 0.0, 0.0, 0.0).v_hat
    got = variance_np_polyseq(data, 0.0, (0.0, 0.0), max_degree=4, rel_tol=0.05)
    assert got == pytest.approx(v1, rel=0.06)


def test_polyseq_infinite_tolerance_returns_degree_zero():
    data = linear_data(n=200, seed=4, noise=0.5)
    from dataclasses import replace

    fit0 = linear_adjusted(replace(data, Z=np.empty((200, 0))))
    v0 = variance_reg(replace(data, Z=np.empty((200, 0))), fit0, 0.0, 0.0, 0.0).v_hat
    got = variance_np_polyseq(data, 0.0, (0.0, 0.0), rel_tol=math.inf)
    assert got == v0


def test_polyseq_singular_expansion_stops_gracefully():
    rng = rng_for(46)
    n = 100
    Z = np.column_stack([np.full(n, 2.0)])  # constant column: degree-1 design singular
    w = (rng.random(n) < 0.5).astype(int)
    data = TrialData(Y=rng.standard_normal(n), W=w, Z=Z, pi=0.5)
    got = variance_np_polyseq(data, 0.0, (0.0, 0.0), rel_tol=1e-9)
    from dataclasses import replace

    fit0 = linear_adjusted(replace(data, Z=np.empty((n, 0))))
    v0 = variance_reg(replace(data, Z=np.empty((n, 0))), fit0, 0.0, 0.0, 0.0).v_hat
    assert got == v0


def test_polyseq_legendre_matches_monomial():
    data = linear_data(n=400, seed=5, noise=0.8)
    a = variance_np_polyseq(data, 0.5, (1.0, 0.0), rel_tol=1e-12, max_degree=3)
    b = variance_np_polyseq(data, 0.5, (1.0, 0.0), rel_tol=1e-12, max_degree=3, basis="legendre")
    assert a == pytest.approx(b, rel=1e-6)


def test_polyseq_network_term_added():
    data = linear_data(n=300, seed=6, noise=0.5)
    base = variance_np_polyseq(data, 0.0, (0.0, 0.0), rel_tol=0.05)
    with_net = variance_np_polyseq(data, 2.0, (1.5, 0.5), rel_tol=0.05)
    assert with_net == pytest.approx(base + 2.0 * 0.25 * 1.0, rel=1e-9)


def test_polyseq_coverage_smooth_scenario():
    # nominal 95% intervals from the polynomial variance cover generously
    scenario = get_scenario("sec41-main", p=1)
    summary = run_scenario(scenario, 500, ("np:polyseq",), reps=1000, seed=9200, workers=WORKERS)
    assert summary.methods["np:polyseq"].coverage >= 0.93
