"""Discrete stochastic and pathwise integrals, clocks, and exponentials."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfslab.core import GridMismatch, Path, RngStream, make_grid
from cfslab.gaussian import gen_brownian
from cfslab.integrate import (
    check_progcfs_conditions,
    doleans_exp,
    ito_integral,
    qv_clock,
    rs_integral,
    rs_parts_form,
)

GRID = make_grid(0.0, 1.0, 128)


def _paths(seed, n):
    root = RngStream(seed, 1)
    return [gen_brownian(GRID, root.child(r)) for r in range(n)]


class TestIto:
    def test_constant_integrand(self):
        w = _paths(0, 1)[0]
        one = Path(GRID, np.ones(GRID.n_nodes))
        i = ito_integral(one, w)
        assert np.allclose(i.values, w.values - w.values[0])

    def test_linearity_to_machine_precision(self):
        w = _paths(1, 1)[0]
        t = np.asarray(GRID.nodes)
        k1 = Path(GRID, np.sin(t))
        k2 = Path(GRID, t ** 2)
        lhs = ito_integral(Path(GRID, 2.0 * k1.values + 3.0 * k2.values), w)
        rhs = 2.0 * ito_integral(k1, w).values + 3.0 * ito_integral(k2, w).values
        err = np.abs(lhs.values - rhs)
        scale = np.maximum(np.abs(rhs), 1.0)
        assert np.all(err <= 8 * np.finfo(float).eps * scale)

    def test_grid_mismatch(self):
        w = _paths(2, 1)[0]
        other = make_grid(0.0, 2.0, 128)
        with pytest.raises(GridMismatch):
            ito_integral(Path(other, np.ones(other.n_nodes)), w)

    def test_w_dw_approximates_ito_formula(self):
        # int W dW = (W_T^2 - T) / 2 + O(sqrt(dt)) in RMS
        errs = []
        for w in _paths(3, 200):
            i = ito_integral(w, w).values[-1]
            exact = 0.5 * (w.values[-1] ** 2 - GRID.t_end)
            errs.append(i - exact)
        rms = np.sqrt(np.mean(np.square(errs)))
        # RMS error is dt * sqrt(T / (2 dt)) = sqrt(T dt / 2)
        assert rms == pytest.approx(np.sqrt(GRID.t_end * GRID.dt / 2.0), rel=0.3)


class TestRsIntegral:
    def test_matches_parts_form(self):
        t = np.asarray(GRID.nodes)
        k = Path(GRID, np.cos(3.0 * t))
        for x in _paths(4, 50):
            direct = rs_integral(k, x).values
            parts = rs_parts_form(k, x).values
            err = np.abs(direct - parts)
            scale = np.maximum(np.abs(parts), 1.0)
            assert np.all(err <= 8 * np.finfo(float).eps * scale * GRID.n_nodes)

    def test_smooth_case_against_calculus(self):
        grid = make_grid(0.0, 1.0, 4096)
        t = np.asarray(grid.nodes)
        k = Path(grid, t)
        x = Path(grid, t ** 2)  # int s d(s^2) = 2/3 on [0,1]
        assert rs_integral(k, x).values[-1] == pytest.approx(2.0 / 3.0, abs=1e-3)


class TestQvClock:
    def test_affine_integrand_total(self):
        t = np.asarray(GRID.nodes)
        k = Path(GRID, 1.0 + t)
        c = qv_clock(k)
        # int_0^1 (1+s)^2 ds = 7/3; left-point rule converges from below
        assert c.total == pytest.approx(7.0 / 3.0, abs=0.02)
        assert np.all(np.diff(c.g) >= 0)
        assert c.g[0] == 0.0

    def test_zero_integrand_gives_zero_clock(self):
        k = Path(GRID, np.zeros(GRID.n_nodes))
        assert qv_clock(k).total == 0.0


class TestDoleans:
    def test_positive_and_initial_one(self):
        for w in _paths(5, 20):
            e = doleans_exp(w).values
            assert e[0] == 1.0
            assert np.all(e > 0.0)

    def test_martingale_mean(self):
        finals = np.array([doleans_exp(w).values[-1] for w in _paths(6, 3000)])
        se = np.std(finals) / np.sqrt(finals.size)
        assert abs(np.mean(finals) - 1.0) < 4 * se


class TestProgcfsConditions:
    def test_bounded_nonvanishing_integrand(self):
        t = np.asarray(GRID.nodes)
        k = Path(GRID, 1.0 + t)
        h = Path(GRID, np.sin(t))
        rep = check_progcfs_conditions(k, h, k_bar=3.0)
        assert rep.qv_bounded
        assert rep.integrands_finite
        assert np.isfinite(rep.inv_qv)
        assert np.isfinite(rep.inv_qv_drift)

    def test_vanishing_integrand_flagged(self):
        t = np.asarray(GRID.nodes)
        k = Path(GRID, t)  # k(0) = 0
        h = Path(GRID, np.ones_like(t))
        rep = check_progcfs_conditions(k, h, k_bar=1.0)
        assert not rep.integrands_finite
        assert rep.inv_qv == np.inf

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 5.0), st.floats(0.0, 2.0))
    def test_qv_bound_consistency(self, base, k_bar):
        k = Path(GRID, np.full(GRID.n_nodes, base))
        h = Path(GRID, np.zeros(GRID.n_nodes))
        rep = check_progcfs_conditions(k, h, k_bar=k_bar)
        assert rep.qv_bounded == (rep.qv <= k_bar)
