import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pathsde.brownian import derive_stream
from pathsde.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    StreamingMoments,
    cost_profile,
    cost_tail_bound,
    estimate_row,
    fit_log,
    fit_power,
    level_tail_bound,
    rows_to_csv,
    run_convergence,
)
from pathsde.schemes import adaptive_scheme


def test_single_replication_reproducible(cs, vt):
    cfg = ExperimentConfig(scheme="adaptive", n_list=[8], replications=1, master_seed=7)
    a = estimate_row(cfg, 8, cs, vt)
    b = estimate_row(cfg, 8, cs, vt)
    assert a.csv_fields() == b.csv_fields()
    assert a.replications == 1


def test_interp_component2_l1(cs, vt):
    cfg = ExperimentConfig(scheme="interp", r=1.0, n_list=[32], replications=200_000)
    row = estimate_row(cfg, 32, cs, vt)
    target = np.sqrt(vt.sigma2(32) * 2 / np.pi)
    assert abs(row.err[1] - target) <= row.ci_components[1] * 1.5


def test_adaptive_errors_decrease(cs, vt):
    cfg = ExperimentConfig(scheme="adaptive", n_list=[16, 64, 256], replications=40_000)
    rows = run_convergence(cfg, cs, vt)
    for a, b in zip(rows, rows[1:]):
        assert b.err_vec - b.ci < a.err_vec + a.ci
        assert b.err_vec < a.err_vec


def test_csv_shape_and_output_file(cs, vt, tmp_path):
    out = tmp_path / "rows.csv"
    cfg = ExperimentConfig(scheme="euler", r=1.0, n_list=[3, 6], replications=100, output=str(out))
    rows = run_convergence(cfg, cs, vt)
    text = out.read_text()
    assert text == rows_to_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0].split(",") == CSV_COLUMNS and len(lines) == 3
    assert all(len(line.split(",")) == len(CSV_COLUMNS) for line in lines)


def test_worker_count_does_not_change_csv(cs, vt):
    base = dict(scheme="adaptive", n_list=[16, 32], replications=3 * 4096 + 11, master_seed=99)
    one = rows_to_csv(run_convergence(ExperimentConfig(worker_count=1, **base), cs, vt))
    three = rows_to_csv(run_convergence(ExperimentConfig(worker_count=3, **base), cs, vt))
    assert one == three


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(r=3.0)
    with pytest.raises(ValueError):
        ExperimentConfig(scheme="milstein")
    with pytest.raises(ValueError):
        ExperimentConfig(n_list=[0, 4])
    with pytest.raises(ValueError):
        ExperimentConfig(replications=0)
    with pytest.warns(UserWarning):
        ExperimentConfig(scheme="interp", r=2.0)


def test_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig(scheme="interp", r=1.0, n_list=[4, 8], replications=10)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    back = ExperimentConfig.from_json(path, replications=20)
    assert back.n_list == [4, 8] and back.replications == 20 and back.params == cfg.params


def test_fit_power_exact():
    rows = [(n, 1.0 / n) for n in (16, 32, 64, 128)]
    fit = fit_power(rows)
    assert fit.params["slope"] == pytest.approx(-1.0, abs=1e-12)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)


def test_fit_log_exact_and_power_flattening():
    rows = [(n, 1.0 / np.log(n + 1.0)) for n in 2 ** np.arange(4, 12)]
    fit = fit_log(rows, 2.0)
    assert fit.params["c"] == pytest.approx(1.0, rel=1e-12)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    slopes = [
        fit_power([(n, 1.0 / np.log(n + 1.0)) for n in 2.0 ** np.arange(k, k + 8)]).params["slope"]
        for k in (4, 20, 100)
    ]
    assert slopes[0] < slopes[1] < slopes[2] < 0


def test_fit_needs_rows():
    with pytest.raises(ValueError):
        fit_power([(1, 1.0), (2, 0.5)])
    with pytest.raises(ValueError):
        fit_power([(1, 1.0), (2, 0.0), (3, 0.2)])


def test_cost_profile_nonadaptive(cs, vt):
    cfg = ExperimentConfig(scheme="interp", r=1.0, n_list=[8, 16, 32], replications=500)
    assert all(row.cost_over_n == 1.0 for row in cost_profile(cfg, cs=cs, vt=vt))


def test_cost_profile_adaptive(cs, vt):
    cfg = ExperimentConfig(scheme="adaptive", n_list=[16, 64, 256], replications=50_000)
    prof = cost_profile(cfg, cs=cs, vt=vt)
    ratios = [row.cost_over_n for row in prof]
    assert max(ratios) / min(ratios) <= 1.5
    assert all(row.cost_over_n <= 1.1 * row.bound for row in prof)
    assert prof[-1].bound == pytest.approx(cost_tail_bound(vt.nu2(256)))


def test_level_tail(cs, vt):
    N, n = 400_000, 16
    levels = adaptive_scheme(cs, vt, n, derive_stream(61, 0, "adaptive"), size=N).level
    ks = np.arange(1, 9)
    freq = np.array([(levels == k).mean() for k in ks])
    se = np.sqrt(freq * (1 - freq) / N)
    assert np.all(freq - 3 * se <= level_tail_bound(ks, vt.nu2(n)))


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 60), st.just(3)), elements=st.floats(-1e3, 1e3)),
    st.integers(1, 59),
)
def test_streaming_merge_matches_direct(x, cut):
    cut = min(cut, x.shape[0] - 1)
    merged = StreamingMoments.of_block(x[:cut]).merge(StreamingMoments.of_block(x[cut:]))
    direct = StreamingMoments.of_block(x)
    scale = 1 + np.abs(x).max()
    assert merged.count == direct.count
    assert np.allclose(merged.mean, direct.mean, atol=1e-12 * scale)
    assert np.allclose(merged.m2, direct.m2, atol=1e-9 * scale**2 * x.shape[0])
    assert np.allclose(merged.m3, direct.m3, atol=1e-7 * scale**3 * x.shape[0])


def test_streaming_empty_merge():
    a = StreamingMoments(2)
    b = StreamingMoments.of_block(np.array([[1.0, 2.0], [3.0, 5.0]]))
    a.merge(b)
    assert a.count == 2 and np.allclose(a.mean, [2.0, 3.5])
    assert b.merge(StreamingMoments(2)).count == 2
