import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netate import (
    CovariateDraw,
    EdgeListParseError,
    IsolatedVertexError,
    Network,
    OutcomeModel,
    TrialData,
    UnknownScenarioError,
    assign_treatments,
    ate_oracle,
    exposure_fractions,
    load_edge_list,
    load_trial_csv,
    sample_covariates,
    save_trial_csv,
    simulate_outcomes,
)

from conftest import rng_for


# ---------------------------------------------------------------------------
# treatments
# ---------------------------------------------------------------------------

def test_assign_treatments_boundary_pi():
    with pytest.raises(ValueError):
        assign_treatments(5, 0.0, rng_for(1))
    with pytest.raises(ValueError):
        assign_treatments(5, 1.0, rng_for(1))


def test_assign_treatments_deterministic():
    a = assign_treatments(8, 0.5, rng_for(2))
    b = assign_treatments(8, 0.5, rng_for(2))
    assert (a == b).all()
    assert set(np.unique(a)) <= {0, 1}


def test_assign_treatments_concentration():
    w = assign_treatments(100_000, 0.7, rng_for(3))
    assert abs(w.mean() - 0.7) < 0.01


# ---------------------------------------------------------------------------
# exposures
# ---------------------------------------------------------------------------

def test_exposure_fractions_path_graph():
    net = Network.from_edges(3, [(0, 1), (1, 2)])
    e = exposure_fractions(net, np.array([1, 0, 1]))
    assert e.tolist() == [0.0, 1.0, 0.0]


def test_exposure_fractions_complete_graph():
    net = Network.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    e = exposure_fractions(net, np.array([1, 1, 0, 0]))
    assert np.allclose(e, [1 / 3, 1 / 3, 2 / 3, 2 / 3])


def test_exposure_fractions_all_treated():
    net = Network.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert (exposure_fractions(net, np.ones(3)) == 1.0).all()


def test_exposure_fractions_isolated_vertex():
    net = Network.from_edges(3, [(0, 1)])
    with pytest.raises(IsolatedVertexError) as err:
        exposure_fractions(net, np.zeros(3))
    assert err.value.vertex == 2


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 12))
def test_exposures_bounded_and_zero_for_untreated(seed, n):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    net = Network.from_edges(n, edges)
    w = assign_treatments(n, 0.4, rng_for(4, seed))
    e = exposure_fractions(net, w)
    assert ((e >= 0) & (e <= 1)).all()
    assert (exposure_fractions(net, np.zeros(n)) == 0).all()


# ---------------------------------------------------------------------------
# outcome models
# ---------------------------------------------------------------------------

def test_unknown_scenario_rejected():
    with pytest.raises(UnknownScenarioError):
        OutcomeModel("mystery")


def test_quadratic_outcome_control_arm_is_squared_covariate():
    model = OutcomeModel("sec31-validation")
    draw = CovariateDraw(Z=np.array([[1.0], [-2.0]]))
    y = simulate_outcomes(model, np.zeros(2), np.array([0.3, 0.9]), draw, rng_for(5))
    assert y.tolist() == [1.0, 4.0]  # z^2 exactly, no exposure or noise effect


def test_vaccine_outcome_vanishes_at_full_exposure():
    model = OutcomeModel("contact-vaccine")
    draw = sample_covariates(model, 4, rng_for(6))
    y = simulate_outcomes(model, np.ones(4), np.ones(4), draw, rng_for(7))
    assert np.allclose(y, 0.0)


def test_vaccine_outcome_requires_hidden_vulnerability():
    model = OutcomeModel("contact-vaccine")
    with pytest.raises(UnknownScenarioError):
        simulate_outcomes(model, np.ones(3), 0.2, np.zeros((3, 1)), rng_for(8))


def test_simulate_outcomes_pure_given_seed():
    model = OutcomeModel("sec41-main", {"p": 3})
    draw = sample_covariates(model, 50, rng_for(9))
    w = assign_treatments(50, 0.7, rng_for(10))
    y1 = simulate_outcomes(model, w, 0.7, draw, rng_for(11))
    y2 = simulate_outcomes(model, w, 0.7, draw, rng_for(11))
    assert (y1 == y2).all()


def test_smooth_scenario_scaling_constant():
    # the covariate-sum scale makes Var(sum z_j) = 3p - 4 + 2^(2-p) under AR(0.5)
    for p in (1, 4, 9):
        idx = np.arange(p)
        sigma = 0.5 ** np.abs(idx[:, None] - idx[None, :])
        assert sigma.sum() == pytest.approx(3 * p - 4 + 2.0 ** (2 - p), rel=1e-12)


# ---------------------------------------------------------------------------
# ATE oracle
# ---------------------------------------------------------------------------

def test_ate_oracle_requires_enough_draws():
    with pytest.raises(ValueError):
        ate_oracle(OutcomeModel("constant"), 0.5, 100, rng_for(12))


def test_ate_oracle_constant_outcome_is_zero():
    out = ate_oracle(OutcomeModel("constant", {"c": 3.0}), 0.5, 20_000, rng_for(13))
    assert out.value == 0.0 and out.se == 0.0


@pytest.mark.parametrize("pi", [0.5, 0.7])
def test_ate_oracle_quadratic_closed_form(pi):
    # E[f(1,pi) - f(0,pi)] = -2(1-pi)^2 - 2 E(z) pi^2 with E(z) = -1/2
    target = -2 * (1 - pi) ** 2 + pi**2
    out = ate_oracle(OutcomeModel("sec31-validation"), pi, 400_000, rng_for(14))
    assert abs(out.value - target) < 3 * out.se


def test_ate_oracle_smooth_scenario():
    out = ate_oracle(OutcomeModel("sec41-main", {"p": 5}), 0.7, 400_000, rng_for(15))
    assert abs(out.value - 0.2) < 3 * out.se


def test_ate_oracle_vaccine_scenario():
    out = ate_oracle(OutcomeModel("contact-vaccine"), 0.2, 400_000, rng_for(16))
    assert abs(out.value - (-0.221)) < 3 * out.se + 5e-4


# ---------------------------------------------------------------------------
# edge-list ingestion
# ---------------------------------------------------------------------------

def test_load_edge_list_threshold(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("0,1,3\n1,2,2\n")
    net, ids = load_edge_list(path, min_count=3)
    assert net.n == 3 and ids.tolist() == [0, 1, 2]
    assert net.adjacency.nnz == 2  # the single undirected edge {0,1}
    assert net.adjacency[0, 1] == 1.0


def test_load_edge_list_aggregates_orientations(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("0,1,2\n1,0,1\n")
    net, _ = load_edge_list(path, min_count=3)
    assert net.adjacency[0, 1] == 1.0


def test_load_edge_list_empty_file(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("")
    net, ids = load_edge_list(path)
    assert net.n == 0 and ids.size == 0


def test_load_edge_list_malformed_row(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("0,1\nx,2\n")
    with pytest.raises(EdgeListParseError) as err:
        load_edge_list(path)
    assert err.value.line == 2


def test_load_edge_list_self_loops_warn(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("0,0,5\n0,1,4\n1,1\n")
    with pytest.warns(UserWarning, match="2 self-loop"):
        net, _ = load_edge_list(path)
    assert net.n == 2


def test_load_edge_list_relabels_densely(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("10,40\n40,7\n")
    net, ids = load_edge_list(path)
    assert ids.tolist() == [7, 10, 40]
    assert net.n == 3


def test_load_edge_list_drop_isolated(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("0,1,5\n2,3,1\n")
    net, ids = load_edge_list(path, min_count=3, drop_isolated=True)
    assert net.n == 2 and ids.tolist() == [0, 1]
    assert (net.degrees > 0).all()


# ---------------------------------------------------------------------------
# dataset CSV
# ---------------------------------------------------------------------------

def test_trial_csv_roundtrip(tmp_path):
    rng = rng_for(17)
    data = TrialData(
        Y=rng.standard_normal(20),
        W=assign_treatments(20, 0.5, rng),
        Z=rng.standard_normal((20, 3)),
        pi=0.5,
    )
    path = tmp_path / "d.csv"
    save_trial_csv(data, path)
    back = load_trial_csv(path, pi=0.5)
    assert (back.Y == data.Y).all()
    assert (back.W == data.W).all()
    assert (back.Z == data.Z).all()
    assert path.read_text().splitlines()[0] == "y,w,z1,z2,z3"


def test_load_trial_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        load_trial_csv(path, pi=0.5)


def test_trial_data_validation():
    with pytest.raises(ValueError):
        TrialData(Y=np.zeros(3), W=np.array([0, 1, 2]), Z=np.zeros((3, 1)), pi=0.5)
    with pytest.raises(ValueError):
        TrialData(Y=np.zeros(3), W=np.zeros(3), Z=np.zeros((2, 1)), pi=0.5)
    with pytest.raises(ValueError):
        TrialData(Y=np.zeros(3), W=np.zeros(3), Z=np.zeros((3, 1)), pi=1.5)
