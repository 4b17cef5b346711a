import numpy as np
import pytest

from conftest import unit_scale_channels
from ris_aircomp.aircomp import composite_channels, mse
from ris_aircomp.altermin import AlterMinSettings, random_phases
from ris_aircomp.bench import (
    ExperimentResult,
    ExperimentSpec,
    ResultRow,
    brute_force_small,
    load_experiment,
    no_ris_baseline,
    oracle_check,
    preset,
    random_phase_baseline,
    read_results,
    run_experiment,
    time_per_iteration,
    timing_sweep,
    write_results,
    write_timing,
)
from ris_aircomp.channel import ChannelRealization, SystemConfig, make_rng


# baselines ------------------------------------------------------------------

def test_no_ris_uses_direct_links_only():
    ch = unit_scale_channels(4, 3, 5, 0)
    np.testing.assert_array_equal(composite_channels(ch, np.zeros(5)), ch.h_direct)
    res = no_ris_baseline(ch)
    assert res.v is None
    assert res.mse == pytest.approx(mse(res.m, np.zeros(5), ch, 1.0, 1.0), rel=1e-14)


def test_no_ris_scalar_closed_form():
    ch = ChannelRealization(np.array([[0.3 - 0.4j]]), np.array([[1.0 + 0j]]),
                            np.array([[2.0 + 0j]]))
    res = no_ris_baseline(ch, P=2.0, sigma2=0.1)
    assert res.mse == pytest.approx(0.1 / (2.0 * 0.25), rel=1e-12)


def test_no_ris_ignores_ris_links():
    ch = unit_scale_channels(4, 3, 5, 1)
    other = ChannelRealization(ch.h_direct, 7 * ch.G[:, ::-1], -ch.h_reflect)
    assert no_ris_baseline(ch).mse == no_ris_baseline(other).mse


def test_random_phase_keeps_seeded_draw():
    ch = unit_scale_channels(4, 3, 6, 2)
    res = random_phase_baseline(ch, seed=(3, 4))
    np.testing.assert_array_equal(res.v, random_phases(6, make_rng((3, 4))))
    assert res.mse == pytest.approx(mse(res.m, res.v, ch, 1.0, 1.0), rel=1e-14)


def test_random_phase_k1_matched_filter():
    ch = unit_scale_channels(1, 4, 6, 3)
    res = random_phase_baseline(ch, AlterMinSettings(eps_inner=1e-9, eps_saddle=1e-10), seed=1)
    h = composite_channels(ch, res.v)[0]
    cos_angle = abs(np.vdot(res.m, h)) / (np.linalg.norm(res.m) * np.linalg.norm(h))
    assert np.arccos(min(cos_angle, 1.0)) < 1e-3


# brute force ----------------------------------------------------------------

def test_brute_force_scalar_phase_alignment():
    rng = np.random.default_rng(4)
    c = lambda: complex(*rng.standard_normal(2))
    ch = ChannelRealization(np.array([[c()]]), np.array([[c()]]), np.array([[c()]]))
    res = brute_force_small(ch, phase_grid_size=72, refine=False)
    target = np.angle(ch.h_direct[0, 0]) - np.angle(ch.G[0, 0] * ch.h_reflect[0, 0])
    err = np.angle(res.v[0] * np.exp(-1j * target))
    assert abs(err) <= np.pi / 72 + 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_brute_force_nested_grids(seed):
    ch = unit_scale_channels(3, 2, 2, 10 + seed)
    coarse = brute_force_small(ch, phase_grid_size=12, beam_samples=64, refine=False)
    fine = brute_force_small(ch, phase_grid_size=24, beam_samples=64, refine=False)
    assert fine.mse <= coarse.mse
    assert brute_force_small(ch, phase_grid_size=12, beam_samples=64).mse <= coarse.mse


def test_brute_force_size_cap():
    with pytest.raises(ValueError):
        brute_force_small(unit_scale_channels(2, 2, 4, 0))
    with pytest.raises(ValueError):
        brute_force_small(unit_scale_channels(4, 2, 2, 0))


def test_oracle_check_rows():
    rows = oracle_check(SystemConfig(K=2, M=1, N=2), trials=2, seed=3)
    assert [r.seed for r in rows] == [0, 1]
    for r in rows:
        assert r.mse_brute_force > 0 and r.rel_gap > -0.05


# experiments ----------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(axis="L", values=(1, 2))
    with pytest.raises(ValueError):
        ExperimentSpec(axis="M", values=(4, 2))
    with pytest.raises(ValueError):
        ExperimentSpec(trials=0)
    with pytest.raises(ValueError):
        ExperimentSpec(methods=("sdr",))
    with pytest.raises(ValueError):
        ExperimentSpec(config=SystemConfig(K=3, M=2, N=9), methods=("brute_force",))


def test_empty_sweep_row_count(tmp_path):
    spec = ExperimentSpec(config=SystemConfig(K=3, M=2, N=4), trials=3,
                          methods=("proposed", "no_ris"), out=str(tmp_path / "r.csv"))
    res = run_experiment(spec)
    assert len(res.rows) == 6
    assert all(r.value is None for r in res.rows)
    table = read_results(tmp_path / "r.csv")
    assert sum(row["kind"] == "trial" for row in table) == 6
    assert sum(row["kind"] == "mean" for row in table) == 2
    assert (tmp_path / "r.timing.csv").exists()


def test_rows_share_scenario_and_sort():
    spec = ExperimentSpec(config=SystemConfig(K=3, M=2, N=4), axis="N", values=(2, 4), trials=2,
                          methods=("no_ris", "proposed"))
    res = run_experiment(spec)
    keys = [(r.method, r.value, r.seed) for r in res.rows]
    assert keys == [(m, v, s) for m in ("no_ris", "proposed") for v in (2, 4) for s in (0, 1)]
    # no_ris sees the same direct links at every N
    no_ris = {(r.value, r.seed): r.mse for r in res.rows if r.method == "no_ris"}
    assert no_ris[(2, 0)] == no_ris[(4, 0)]


def test_rerun_byte_identical(tmp_path):
    kwargs = dict(config=SystemConfig(K=4, M=2, N=4), axis="M", values=(1, 2), trials=2,
                  methods=("proposed", "random_phase", "no_ris"), seed=11)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run_experiment(ExperimentSpec(out=str(a), **kwargs))
    run_experiment(ExperimentSpec(out=str(b), **kwargs))
    assert a.read_bytes() == b.read_bytes()


def test_parallel_matches_serial(tmp_path):
    kwargs = dict(config=SystemConfig(K=3, M=2, N=3), trials=3, methods=("proposed", "no_ris"))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_experiment(ExperimentSpec(out=str(a), **kwargs))
    run_experiment(ExperimentSpec(out=str(b), workers=2, **kwargs))
    assert a.read_bytes() == b.read_bytes()


def test_paired_trials_favor_proposed():
    spec = ExperimentSpec(config=SystemConfig(K=10, M=4, N=16), trials=100)
    res = run_experiment(spec)
    by = {m: np.array([r.mse for r in res.rows if r.method == m])
          for m in ("proposed", "random_phase", "no_ris")}
    assert np.sum(by["proposed"] <= by["no_ris"]) >= 90
    assert np.sum(by["proposed"] <= by["random_phase"]) >= 85


def test_infeasible_rows_flagged(tmp_path):
    rows = [ResultRow("no_ris", "", None, 0, float("inf"), 1.0, 0, False),
            ResultRow("no_ris", "", None, 1, 0.5, 1.0, 0, True)]
    from ris_aircomp.bench import _summarize

    result = ExperimentResult(rows, _summarize(rows, ("no_ris",)))
    assert result.has_infeasible
    assert result.summary[0].infeasible == 1 and result.summary[0].mean_mse == 0.5
    write_results(result, tmp_path / "x.csv")
    table = read_results(tmp_path / "x.csv")
    assert table[0]["feasible"] == "0" and table[1]["feasible"] == "1"


def test_load_experiment(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(
        "scenario:\n  k: 4\n  m: 2\n  n: 6\n  seed: 9\n"
        "experiment:\n  axis: n\n  values: [2, 6]\n  trials: 3\n  methods: [proposed, no_ris]\n"
        "  settings:\n    eps_outer: 1.0e-4\n"
    )
    spec = load_experiment(path)
    assert spec.axis == "N" and spec.values == (2, 6) and spec.trials == 3 and spec.seed == 9
    assert spec.settings.eps_outer == 1e-4
    path.write_text("experiment:\n  colour: red\n")
    with pytest.raises(ValueError):
        load_experiment(path)


def test_presets():
    spec = preset("desk_antennas", trials=5)
    assert spec.axis == "M" and spec.values == (5, 10, 15, 20) and spec.config.K == 20
    assert [c.M for c in spec.configs()] == [5, 10, 15, 20]


# timing ---------------------------------------------------------------------

def test_trivial_instance_fast():
    assert time_per_iteration(1, 1, iters=1000, repeats=3) < 1e-3


def test_timing_doubling(tmp_path):
    table = timing_sweep(K_values=(100, 200), N_values=(100, 200))
    assert 1.5 <= table.time(200, 100) / table.time(100, 100) <= 3.0
    assert 1.5 <= table.time(100, 200) / table.time(100, 100) <= 3.0
    path = write_timing(table, tmp_path / "t.csv")
    assert path.read_text().splitlines()[0] == "K,N,per_iter_us"
