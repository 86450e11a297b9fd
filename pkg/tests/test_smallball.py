"""Conditional tube-probability estimation and its oracles."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfslab.catalog import affine_integrand, get_preset
from cfslab.core import (
    BadQuery,
    Classification,
    DegenerateClock,
    Path,
    RngStream,
    constant_path,
    make_grid,
    tail_grid,
)
from cfslab.gaussian import gen_brownian
from cfslab.models import ModelSpec, ModelTag, simulate
from cfslab.smallball import (
    REASON_ENDPOINT_PIN,
    REASON_POSITIVITY,
    SmallBallQuery,
    brownian_smallball_series,
    detect_analytic_zero,
    estimate_many,
    estimate_smallball,
    mc_tube_probability,
    timechanged_smallball,
)

GRID = make_grid(0.0, 1.0, 256)


def _ctx(name, t_index=0, seed=1):
    spec = get_preset(name)
    _, ctx = simulate(spec, GRID, RngStream(seed, 0), t_index)
    return spec, ctx


class TestSeries:
    def test_reference_value(self):
        assert brownian_smallball_series(1.0, 1.0) == pytest.approx(0.37078, abs=5e-5)

    def test_zero_clock(self):
        assert brownian_smallball_series(0.0, 0.5) == 1.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.01, 10.0), st.floats(0.05, 5.0))
    def test_bounds_and_monotonicity(self, k_total, eps):
        p = brownian_smallball_series(k_total, eps)
        assert 0.0 <= p <= 1.0
        # series truncation leaves ~1e-16 noise near p = 1
        assert brownian_smallball_series(k_total, eps * 1.5) >= p - 1e-12
        assert brownian_smallball_series(k_total * 1.5, eps) <= p + 1e-12


class TestQueryValidation:
    def test_eps_positive(self):
        with pytest.raises(BadQuery):
            SmallBallQuery(0, constant_path(GRID, 0.0), 0.0)

    def test_target_vanishes_at_start(self):
        with pytest.raises(BadQuery):
            SmallBallQuery(0, constant_path(GRID, 0.5), 1.0)

    def test_mismatched_restart_rejected(self):
        spec, ctx = _ctx("brownian", t_index=0)
        q = SmallBallQuery(128, constant_path(tail_grid(GRID, 128), 0.0), 1.0)
        with pytest.raises(BadQuery):
            estimate_smallball(spec, ctx, q, 10, RngStream(0, 1))


class TestAnalyticZero:
    def test_positivity_reason(self):
        spec, ctx = _ctx("doleans")
        down = Path(GRID, np.linspace(0.0, -(ctx.z_t + 1.0), GRID.n_nodes))
        q = SmallBallQuery(0, down, 0.5)
        assert detect_analytic_zero(spec, ctx, q) == REASON_POSITIVITY
        est = estimate_smallball(spec, ctx, q, 500, RngStream(2, 1))
        assert est.classification is Classification.ANALYTIC_ZERO
        assert est.hits == 0

    def test_endpoint_pin_reason(self):
        spec, ctx = _ctx("bridge", t_index=128)
        pinned = float(ctx.frozen["terminal"]) - ctx.z_t
        tail = tail_grid(GRID, 128)
        miss = Path(tail, np.linspace(0.0, pinned + 1.0, tail.n_nodes))
        q = SmallBallQuery(128, miss, 0.5)
        assert detect_analytic_zero(spec, ctx, q) == REASON_ENDPOINT_PIN

    def test_no_reason_for_feasible_tube(self):
        spec, ctx = _ctx("brownian")
        q = SmallBallQuery(0, constant_path(GRID, 0.0), 0.5)
        assert detect_analytic_zero(spec, ctx, q) is None


class TestEstimator:
    def test_matches_series_oracle(self):
        spec, ctx = _ctx("brownian")
        q = SmallBallQuery(0, constant_path(GRID, 0.0), 1.0)
        est = estimate_smallball(spec, ctx, q, 20_000, RngStream(3, 1))
        assert est.p_hat == pytest.approx(0.37078, abs=0.015)
        assert est.ci_low < 0.37078 < est.ci_high

    def test_eps_monotonicity_exact(self):
        spec, ctx = _ctx("heston", t_index=128)
        tail = tail_grid(GRID, 128)
        f = constant_path(tail, 0.0)
        qs = [SmallBallQuery(128, f, e) for e in (0.02, 0.05, 0.1, 0.3)]
        ests = estimate_many(spec, ctx, qs, 2000, RngStream(4, 1))
        hits = [e.hits for e in ests]
        assert hits == sorted(hits)

    def test_thinned_eps_monotonicity_exact(self):
        # same-target queries share thinning uniforms, so monotonicity in
        # eps is exact even with within-cell excursion correction
        spec, ctx = _ctx("brownian")
        f = constant_path(GRID, 0.0)
        qs = [SmallBallQuery(0, f, e) for e in (0.3, 0.5, 0.8, 1.2)]
        ests = estimate_many(spec, ctx, qs, 2000, RngStream(5, 1))
        hits = [e.hits for e in ests]
        assert hits == sorted(hits)

    def test_repeated_runs_are_identical(self):
        spec, ctx = _ctx("heston", t_index=128)
        tail = tail_grid(GRID, 128)
        f0 = constant_path(tail, 0.0)
        e0 = estimate_many(spec, ctx, [SmallBallQuery(128, f0, 0.2)], 1000,
                           RngStream(6, 1))[0]
        e1 = estimate_many(spec, ctx, [SmallBallQuery(128, f0, 0.2)], 1000,
                           RngStream(6, 1))[0]
        assert e0.hits == e1.hits

    def test_chunk_size_invariance(self):
        spec, ctx = _ctx("brownian")
        q = SmallBallQuery(0, constant_path(GRID, 0.0), 0.7)
        a = estimate_many(spec, ctx, [q], 1500, RngStream(7, 1), chunk_size=4096)[0]
        b = estimate_many(spec, ctx, [q], 1500, RngStream(7, 1), chunk_size=61)[0]
        assert a.hits == b.hits

    def test_huge_eps_hits_everything(self):
        spec, ctx = _ctx("brownian")
        q = SmallBallQuery(0, constant_path(GRID, 0.0), 100.0)
        est = estimate_smallball(spec, ctx, q, 500, RngStream(8, 1))
        assert est.hits == 500


class TestTimechanged:
    def test_constant_integrand_matches_series(self):
        k = constant_path(GRID, 1.0)
        f = constant_path(GRID, 0.0)
        est = timechanged_smallball(k, f, 1.0, 20_000, RngStream(9, 1))
        assert est.p_hat == pytest.approx(0.37078, abs=0.015)

    def test_degenerate_clock(self):
        k = constant_path(GRID, 0.0)
        f = constant_path(GRID, 0.0)
        with pytest.raises(DegenerateClock):
            timechanged_smallball(k, f, 1.0, 100, RngStream(10, 1))

    def test_agrees_with_direct_estimator(self):
        spec = ModelSpec(ModelTag.WIENER_INTEGRAL, k_fn=affine_integrand)
        _, ctx = simulate(spec, GRID, RngStream(11, 0), 0)
        f = constant_path(GRID, 0.0)
        direct = estimate_smallball(spec, ctx, SmallBallQuery(0, f, 1.0),
                                    20_000, RngStream(11, 1))
        k = Path(GRID, affine_integrand(np.asarray(GRID.nodes)))
        tc = timechanged_smallball(k, f, 1.0, 20_000, RngStream(11, 2))
        assert direct.ci_low <= tc.ci_high and tc.ci_low <= direct.ci_high


class TestMcTube:
    def test_brownian_sampler_matches_series(self):
        f = constant_path(GRID, 0.0)
        est = mc_tube_probability(gen_brownian, GRID, f, 1.0, 3000,
                                  RngStream(12, 1))
        # node-monitored sup is slightly optimistic; allow the known bias
        assert est.p_hat == pytest.approx(0.37078, abs=0.05)
