import math

import numpy as np
import pytest

from egp import outcomes
from egp.estimation import (
    Design,
    EstimateRecord,
    EstimationError,
    analytic_bias_linear,
    approx_bias_convex,
    ego_diff_in_means,
    format_rescaled,
    monte_carlo_bias,
    rescale_factor,
)
from egp.partition import ExposureSummary, Partition, assign_alters_linear, exposure_summary
from egp.rng import replication_seed
from graphs import er_graph, planted_partition


def four_ego_partition():
    return Partition.from_egos(6, [0, 1, 2, 3], [True, True, False, False])


def test_equal_outcomes():
    r = ego_diff_in_means([3.0] * 4, four_ego_partition())
    assert r.tau_hat == 0 and r.se == 0 and r.ci_low == r.ci_high == 0


def test_welch_se():
    r = ego_diff_in_means([2.0, 4.0, 1.0, 3.0], four_ego_partition())
    assert r.tau_hat == 1.0
    assert r.se == pytest.approx(math.sqrt(2), abs=1e-15)
    assert r.ci_low < r.tau_hat < r.ci_high
    assert r.ci_high - r.tau_hat == pytest.approx(1.959963984540054 * math.sqrt(2), abs=1e-12)


def test_t5_estimate_and_bias(toy):
    p = assign_alters_linear(toy, Partition.from_egos(5, [0, 1], [True, False]))
    sig = exposure_summary(toy, p)
    m = outcomes.linear(1, 1, 1, noise_sd=0)
    y = outcomes.generate_outcomes(m, p, sig, 0)
    r = ego_diff_in_means(y, p, sig)
    assert r.tau_hat == 1.5 and math.isnan(r.se)
    assert analytic_bias_linear(m, sig) == -0.5 == r.tau_hat - outcomes.true_gate(m)


def test_empty_arm_and_length_errors():
    p = Partition.from_egos(4, [0, 1], [True, True])
    with pytest.raises(EstimationError):
        ego_diff_in_means([1.0, 2.0], p)
    with pytest.raises(EstimationError):
        ego_diff_in_means([1.0], four_ego_partition())


def _sig(mt, mc):
    return ExposureSummary(np.arange(2), np.array([True, False]), np.array([mt, mc]), mt, mc)


def test_analytic_bias_linear_cases():
    assert analytic_bias_linear(outcomes.linear(1, 1, 1), _sig(0.5, 0.0)) == -0.5
    assert analytic_bias_linear(outcomes.linear(1, 1, 1), _sig(1.0, 0.0)) == 0.0
    assert analytic_bias_linear(outcomes.linear(1, 1, 0), _sig(0.3, 0.2)) == 0.0
    with pytest.raises(EstimationError):
        analytic_bias_linear(outcomes.convex_exp(), _sig(0.5, 0.0))


def test_approx_bias_weixin_inputs():
    g2 = outcomes.convex_exp(2, 1, 3).g2
    expected = (-math.exp(-1.8) + math.exp(-0.3)) - (1 - math.exp(-3))
    got = approx_bias_convex(g2, 0.6, 0.1)
    assert got == pytest.approx(expected, abs=1e-15)
    assert got == pytest.approx(-0.3747, abs=5e-5)


def test_approx_bias_endpoints_and_linear():
    for g2 in (lambda s: s, lambda s: -np.exp(-3 * s), np.sqrt):
        assert approx_bias_convex(g2, 1.0, 0.0) == 0.0
    for mt, mc in [(0.7, 0.2), (0.5, 0.5), (0.9, 0.0)]:
        assert approx_bias_convex(lambda s: s, mt, mc) == pytest.approx(mt - mc - 1, abs=1e-15)
    with pytest.raises(EstimationError):
        approx_bias_convex(lambda s: s, 0.2, 0.4)


def test_approx_bias_nonpositive():
    rng = np.random.default_rng(0)
    g2s = [lambda s: s, lambda s: -np.exp(-3 * s), np.sqrt, lambda s: np.minimum(s, 0.4)]
    for _ in range(500):
        mc, mt = np.sort(rng.random(2))
        for g2 in g2s:
            assert approx_bias_convex(g2, mt, mc) <= 0


def test_rescale_formatting():
    rec = EstimateRecord(-0.0192, 10, 10, 0.0051, -0.0292, -0.0092)
    f = rescale_factor(rec)
    assert f == pytest.approx(50.0)
    assert format_rescaled(rec.tau_hat * f, 0.5) == "-0.960% ± 0.5%"
    with pytest.raises(EstimationError):
        rescale_factor(EstimateRecord(0, 1, 1, 0, 0, 0))


def test_replication_seeds_distinct():
    seeds = {replication_seed(7, r) for r in range(1000)}
    assert len(seeds) == 1000
    assert replication_seed(7, 3) == replication_seed(7, 3)


def test_single_rep_matches_analytic_bias():
    g = er_graph(100, 0.08, np.random.default_rng(1))
    m = outcomes.linear(1, 1, 1, noise_sd=0)
    rep = monte_carlo_bias(g, Design("linear", 0.2), m, 1, 5)
    rec = rep.per_rep[0]
    assert abs(rep.mean_bias - (rec.r_statistic - 1.0)) < 1e-12


def test_report_invariants_and_reproducibility():
    g = planted_partition(5, 20, 0.3, 0.02, np.random.default_rng(2))
    m = outcomes.convex_exp(2, 1, 3)
    d = Design("convex", 0.2, 0.5)
    a = monte_carlo_bias(g, d, m, 25, 11)
    b = monte_carlo_bias(g, d, m, 25, 11, threads=4)
    assert a.to_dict(per_rep=True) == b.to_dict(per_rep=True)
    taus = np.array([r.tau_hat for r in a.per_rep])
    assert abs(a.mean_bias - (taus.mean() - a.true_tau)) < 1e-12
    for r in a.per_rep:
        assert r.ci_low <= r.tau_hat <= r.ci_high


def test_replication_error_names_index():
    # q too large for the eligible nodes -> every replication fails
    g = er_graph(20, 0.05, np.random.default_rng(0))
    with pytest.raises(EstimationError, match="replication 0"):
        monte_carlo_bias(g, Design("linear", 0.95), outcomes.linear(), 3, 0)


def test_theta_monotone_control_exposure():
    g = planted_partition(8, 25, 0.2, 0.01, np.random.default_rng(4))
    m = outcomes.convex_exp(2, 1, 3)
    mc = [monte_carlo_bias(g, Design("convex", 0.1, t), m, 20, 8).mean_sigma_c for t in (0.0, 0.2, 0.5)]
    assert mc[0] >= mc[1] >= mc[2]
