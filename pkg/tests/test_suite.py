"""Target families, battery runs, and report rendering."""
import json

import numpy as np
import pytest

from cfslab.catalog import get_preset
from cfslab.core import BadParams, Classification, EmptyBattery, make_grid
from cfslab.suite import (
    CSV_HEADER,
    BatteryTemplate,
    ReportFormat,
    TargetStyle,
    build_targets,
    render_report,
    run_battery,
    single_target,
)

TAIL = make_grid(0.5, 1.0, 64)
SMALL = BatteryTemplate(n_steps=256, pilot_reps=200)


class TestTargets:
    def test_family_size_and_start(self):
        fam = build_targets(TAIL, 1.0)
        assert len(fam.members) == 10  # 5 styles x 2 amplitudes
        for _, _, p in fam.members:
            assert p.values[0] == 0.0
            assert p.values.shape == (TAIL.n_nodes,)

    def test_styles_hit_their_amplitudes(self):
        fam = {(s, a): p for s, a, p in build_targets(TAIL, 2.0).members}
        assert np.max(fam[(TargetStyle.RAMP_UP, 2.0)].values) == pytest.approx(2.0)
        assert np.min(fam[(TargetStyle.RAMP_DOWN, 2.0)].values) == pytest.approx(-2.0)
        assert np.max(fam[(TargetStyle.SPIKE, 1.0)].values) == pytest.approx(1.0)
        assert np.all(fam[(TargetStyle.FLAT, 2.0)].values == 0.0)
        zig = fam[(TargetStyle.ZIGZAG, 2.0)].values
        assert np.max(zig) == pytest.approx(2.0)
        assert np.min(zig) == pytest.approx(-2.0)

    def test_piecewise_linear(self):
        fam = build_targets(TAIL, 1.0, n_segments=4)
        for _, _, p in fam.members:
            # second differences vanish except at the (at most) interior knots
            dd = np.abs(np.diff(p.values, 2))
            assert np.sum(dd > 1e-12) <= 4

    def test_bad_args(self):
        with pytest.raises(BadParams):
            build_targets(TAIL, 0.0)
        with pytest.raises(BadParams):
            build_targets(TAIL, 1.0, n_segments=0)

    def test_single_target_zero_amplitude(self):
        p = single_target(TAIL, TargetStyle.FLAT, 0.0)
        assert np.all(p.values == 0.0)


class TestBattery:
    def test_empty_models_rejected(self):
        with pytest.raises(EmptyBattery):
            run_battery([], SMALL, 1000, 0)

    def test_low_reps_rejected(self):
        with pytest.raises(BadParams):
            run_battery([get_preset("brownian")], SMALL, 10, 0)

    def test_row_accounting(self):
        rep = run_battery([get_preset("brownian")], SMALL, 1000, 1)
        # 2 restart fractions x 10 targets x 2 radii
        assert len(rep.rows) == 40
        assert rep.total_reps == 2 * 1000
        assert rep.seed == 1

    def test_brownian_all_positive(self):
        rep = run_battery([get_preset("brownian")], SMALL, 2000, 2)
        assert rep.verdicts["brownian"] == "POSITIVE-ALL"
        for r in rep.rows:
            assert r.estimate.classification is Classification.POSITIVE

    def test_counterexamples_rejected_every_seed(self):
        for seed in range(5):
            rep = run_battery(
                [get_preset("doleans"), get_preset("bridge")], SMALL, 1000, seed)
            assert rep.verdicts["doleans"] == "NOT-FULL-SUPPORT"
            assert rep.verdicts["bridge"] == "NOT-FULL-SUPPORT"
            for r in rep.rows:
                if r.estimate.classification is Classification.ANALYTIC_ZERO:
                    assert r.estimate.hits == 0

    def test_worker_count_does_not_change_bytes(self):
        models = [get_preset("brownian"), get_preset("doleans")]
        a = render_report(run_battery(models, SMALL, 1000, 3, workers=1),
                          ReportFormat.CSV)
        b = render_report(run_battery(models, SMALL, 1000, 3, workers=8),
                          ReportFormat.CSV)
        assert a == b


@pytest.fixture(scope="module")
def report():
    return run_battery([get_preset("brownian"), get_preset("doleans")],
                       SMALL, 1000, 4)


class TestRender:
    def test_csv_header_and_shape(self, report):
        text = render_report(report, ReportFormat.CSV).decode()
        lines = text.splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + len(report.rows)
        assert all(len(line.split(",")) == 12 for line in lines[1:])
        assert text.endswith("\n")
        assert "\r" not in text

    def test_json_round_trip_bit_exact(self, report):
        payload = json.loads(render_report(report, ReportFormat.JSON))
        assert len(payload["rows"]) == len(report.rows)
        for row, rec in zip(report.rows, payload["rows"]):
            assert rec["p_hat"] == row.estimate.p_hat
            assert rec["ci_low"] == row.estimate.ci_low
            assert rec["ci_high"] == row.estimate.ci_high
            assert rec["amplitude"] == row.amplitude
            assert rec["hits"] == row.estimate.hits

    def test_plotdata_block_per_model(self, report):
        text = render_report(report, ReportFormat.PLOTDATA).decode()
        blocks = [b for b in text.split("\n\n") if b.strip()]
        assert len(blocks) == 2
        assert blocks[0].startswith("# brownian")
        assert blocks[1].startswith("# doleans")

    def test_csv_floats_survive_parsing(self, report):
        lines = render_report(report, ReportFormat.CSV).decode().splitlines()
        first = lines[1].split(",")
        assert float(first[7]) == report.rows[0].estimate.p_hat
