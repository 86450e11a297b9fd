"""Brownian, fractional Brownian, and bridge generators."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfslab.core import (
    HurstOutOfRange,
    NotPowerOfTwo,
    RngStream,
    make_grid,
    tail_grid,
)
from cfslab.gaussian import (
    FbmSpec,
    FouSpec,
    bridge_steps,
    fbm_conditional_factors,
    fbm_covariance,
    fou_from_fbm,
    gen_bridge_continuation,
    gen_brownian,
    gen_brownian_alt,
    gen_fbm,
    gen_fou,
)

GRID = make_grid(0.0, 1.0, 64)


def _sample_stats(gen, grid, n_paths, seed=0):
    finals = np.empty(n_paths)
    root = RngStream(seed, 5)
    for r in range(n_paths):
        finals[r] = gen(grid, root.child(r)).values[-1]
    return finals


class TestBrownian:
    def test_starts_at_zero(self):
        p = gen_brownian(GRID, RngStream(1, 0))
        assert p.values[0] == 0.0

    def test_terminal_moments(self):
        finals = _sample_stats(gen_brownian, GRID, 4000)
        assert abs(np.mean(finals)) < 4.0 / np.sqrt(4000)
        assert np.var(finals) == pytest.approx(1.0, rel=0.1)

    def test_increment_independence(self):
        root = RngStream(3, 0)
        incs = np.array(
            [np.diff(gen_brownian(GRID, root.child(r)).values) for r in range(2000)]
        )
        c = np.corrcoef(incs[:, 10], incs[:, 40])[0, 1]
        assert abs(c) < 0.1

    def test_alt_requires_power_of_two(self):
        with pytest.raises(NotPowerOfTwo):
            gen_brownian_alt(make_grid(0.0, 1.0, 48), RngStream(0, 0))

    def test_alt_terminal_moments(self):
        finals = _sample_stats(gen_brownian_alt, GRID, 4000, seed=9)
        assert abs(np.mean(finals)) < 4.0 / np.sqrt(4000)
        assert np.var(finals) == pytest.approx(1.0, rel=0.1)


class TestFbmCovariance:
    def test_h_half_is_brownian(self):
        t = np.array([0.25, 0.5, 1.0])
        r = fbm_covariance(0.5, t)
        assert np.allclose(r, np.minimum.outer(t, t))

    def test_diagonal(self):
        t = np.array([0.3, 0.7])
        for h in (0.25, 0.75):
            r = fbm_covariance(h, t)
            assert np.allclose(np.diag(r), t ** (2 * h))

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.1, 0.9))
    def test_cholesky_reconstruction(self, hurst):
        grid = make_grid(0.0, 1.0, 32)
        t = np.asarray(grid.nodes[1:])
        r = fbm_covariance(hurst, t)
        factor = np.linalg.cholesky(r)
        assert np.max(np.abs(factor @ factor.T - r)) <= 1e-10 * np.max(np.abs(r))


class TestFbm:
    def test_hurst_range_enforced(self):
        with pytest.raises(HurstOutOfRange):
            FbmSpec(1.5)

    def test_h_quarter_increments_anticorrelated(self):
        root = RngStream(11, 0)
        grid = make_grid(0.0, 1.0, 4)
        incs = np.array(
            [np.diff(gen_fbm(grid, FbmSpec(0.25), root.child(r)).values)
             for r in range(3000)]
        )
        c = np.corrcoef(incs[:, 0], incs[:, 1])[0, 1]
        # exact value 2^{2h-1} - 1 = -0.29289 at h = 0.25
        assert c == pytest.approx(-0.29289, abs=0.06)

    def test_conditional_factors_match_history(self):
        """A @ p + L @ xi has the right cross-covariance with the history."""
        grid = make_grid(0.0, 1.0, 16)
        hurst = 0.75
        a, ell = fbm_conditional_factors(hurst, grid, 8)
        cov = fbm_covariance(hurst, np.asarray(grid.nodes[1:]))
        # conditional mean operator reproduces R_fp R_pp^{-1}
        assert np.allclose(a @ cov[:8, :8], cov[8:, :8], atol=1e-10)
        # Schur complement is recovered by the factor
        schur = cov[8:, 8:] - a @ cov[8:, :8].T
        assert np.allclose(ell @ ell.T, schur, atol=1e-8)

    def test_unconditional_factors(self):
        grid = make_grid(0.0, 1.0, 8)
        a, ell = fbm_conditional_factors(0.5, grid, 0)
        assert a.shape == (8, 0)
        cov = fbm_covariance(0.5, np.asarray(grid.nodes[1:]))
        assert np.allclose(ell @ ell.T, cov, atol=1e-10)


class TestFou:
    def test_deterministic_decay_with_zero_noise(self):
        grid = make_grid(0.0, 1.0, 256)
        spec = FouSpec(hurst=0.7, alpha=2.0, sigma=0.0, v0=1.0)
        v = fou_from_fbm(grid, spec, np.zeros(grid.n_nodes))
        assert np.allclose(v, np.exp(-2.0 * np.asarray(grid.nodes)), atol=1e-3)

    def test_gen_fou_starts_at_v0(self):
        grid = make_grid(0.0, 1.0, 32)
        p = gen_fou(grid, FouSpec(0.6, 1.0, 0.5, v0=-0.3), RngStream(2, 0))
        assert p.values[0] == pytest.approx(-0.3)

    def test_mean_reversion_pulls_toward_zero(self):
        grid = make_grid(0.0, 4.0, 512)
        spec = FouSpec(hurst=0.7, alpha=5.0, sigma=0.2, v0=2.0)
        finals = np.array(
            [gen_fou(grid, spec, RngStream(8, 0).child(r)).values[-1]
             for r in range(200)]
        )
        assert abs(np.mean(finals)) < 0.5


class TestBridge:
    def test_bridge_steps_pin_terminal(self):
        w, s = bridge_steps(make_grid(0.5, 1.0, 8))
        assert w[-1] == 1.0
        assert s[-1] == 0.0
        assert np.all(s[:-1] > 0)

    def test_continuation_hits_terminal_exactly(self):
        grid = make_grid(0.0, 1.0, 16)
        tail = tail_grid(grid, 4)
        history_grid = make_grid(0.0, tail.t_start, 4)
        history = gen_brownian(history_grid, RngStream(6, 1))
        p = gen_bridge_continuation(history, 1.234, tail, RngStream(6, 0))
        assert p.values[0] == history.values[-1]
        assert p.values[-1] == 1.234  # bit-exact pin

    def test_midpoint_variance(self):
        tail = make_grid(0.0, 1.0, 16)
        from cfslab.core import Path
        history = Path(make_grid(-1.0, 0.0, 1), np.zeros(2))
        mids = np.array(
            [gen_bridge_continuation(history, 0.0, tail,
                                     RngStream(4, 0).child(r)).values[8]
             for r in range(3000)]
        )
        # bridge variance at t = 1/2 over [0,1] is 1/4
        assert np.var(mids) == pytest.approx(0.25, rel=0.15)
        assert abs(np.mean(mids)) < 4 * 0.5 / np.sqrt(3000)
