import math

import numpy as np
import pytest
from scipy import stats

from switchdiff import (
    NumericalBlowupError,
    ParameterRangeError,
    SimParams,
    build_model,
    simulate_hits,
    simulate_path,
    simulate_until_hit,
)
from switchdiff.errors import InternalInvariantError
from switchdiff.simulate import path_rng, thinning_accept, write_events_csv, write_path_csv

from oracles import REFERENCE_MODEL, reference_path

BROWNIAN = dict(REFERENCE_MODEL, drift_0={"family": "ZeroDrift"}, drift_1={"family": "ZeroDrift"})


class TestSimParams:
    @pytest.mark.parametrize("kwargs,field", [
        (dict(dt=0), "dt"),
        (dict(dt=-1e-3), "dt"),
        (dict(horizon=0), "horizon"),
        (dict(dt=1.0, horizon=0.5), "dt"),
        (dict(seed=-1), "seed"),
        (dict(seed=1.5), "seed"),
        (dict(record_stride=0), "record_stride"),
    ])
    def test_rejects(self, kwargs, field):
        with pytest.raises(ParameterRangeError) as exc:
            SimParams(**kwargs)
        assert exc.value.field == field


class TestThinningAccept:
    def test_examples(self):
        assert thinning_accept(1.0, 2.0, 0.49)
        assert not thinning_accept(1.0, 2.0, 0.51)
        assert thinning_accept(2.0, 2.0, 0.999)

    def test_nonpositive_rate(self):
        with pytest.raises(ValueError):
            thinning_accept(0.0, 2.0, 0.1)

    def test_rate_above_dominating(self):
        with pytest.raises(InternalInvariantError):
            thinning_accept(3.0, 2.0, 0.1)


class TestSimulatePath:
    def test_deterministic(self, ref_model):
        p = SimParams(dt=1e-3, horizon=20, seed=11)
        assert simulate_path(ref_model, [5.0], 0, p) == simulate_path(ref_model, [5.0], 0, p)

    def test_streams_differ(self, ref_model):
        p = SimParams(horizon=5, seed=11)
        a = simulate_path(ref_model, [5.0], 0, p, path_index=0)
        b = simulate_path(ref_model, [5.0], 0, p, path_index=1)
        assert not np.array_equal(a.xs, b.xs)

    def test_grid_and_stride(self, ref_model):
        rec = simulate_path(ref_model, [1.0], 1, SimParams(dt=0.01, horizon=1.0, record_stride=10))
        np.testing.assert_allclose(rec.times, np.arange(11) * 0.1, atol=1e-12)
        assert rec.xs.shape == (11, 1) and rec.zs.shape == (11,)
        assert rec.censored

    def test_marker_and_numbering(self, ref_model):
        rec = simulate_path(ref_model, [3.0], 0, SimParams(horizon=30, seed=2))
        assert rec.events[0].n == 0 and rec.events[0].time == 0.0
        assert [e.n for e in rec.events] == list(range(len(rec.events)))
        rec1 = simulate_path(ref_model, [3.0], 1, SimParams(horizon=30, seed=2))
        assert rec1.events[0].n == 0 and rec1.events[0].time > 0 and rec1.events[0].new_regime == 0

    def test_events_alternate_and_match_regime(self, ref_model):
        rec = simulate_path(ref_model, [3.0], 0, SimParams(horizon=50, seed=4))
        regimes = [e.new_regime for e in rec.events]
        assert all(a != b for a, b in zip(regimes[1:], regimes[2:]))
        times = np.array([e.time for e in rec.events])
        assert np.all(np.diff(times) > 0)
        # regime recorded at grid points agrees with the last switch before them
        for t, z in zip(rec.times[::97], rec.zs[::97]):
            before = [e for e in rec.events if e.time <= t]
            assert z == before[-1].new_regime

    def test_state_continuous_at_switches(self, ref_model):
        # the state at a switch lies within a few sqrt(dt) of the neighbouring grid points
        p = SimParams(dt=1e-3, horizon=50, seed=5)
        rec = simulate_path(ref_model, [3.0], 0, p)
        for e in rec.events[1:]:
            k = int(e.time / p.dt)
            assert abs(e.x_at[0] - rec.xs[k, 0]) < 10 * math.sqrt(p.dt)

    def test_min_abs_x_running(self, ref_model):
        rec = simulate_path(ref_model, [3.0], 0, SimParams(horizon=10, seed=1))
        assert np.all(np.diff(rec.min_abs_x_running) <= 0)
        assert rec.min_abs_x_running[-1] == pytest.approx(np.abs(rec.xs[:, 0]).min())

    @pytest.mark.parametrize("x0,z0", [([3.0], 0), ([-0.5], 1)])
    def test_matches_python_transcription(self, ref_model, x0, z0):
        p = SimParams(dt=1e-2, horizon=20, seed=9)
        rec = simulate_path(ref_model, x0, z0, p)
        x, z, events = reference_path(ref_model, x0, z0, p.dt, p.horizon, path_rng(p.seed))
        np.testing.assert_allclose(rec.xs[-1], x, rtol=1e-9, atol=1e-12)
        assert rec.zs[-1] == z
        real = [e for e in rec.events if e.time > 0]
        assert [e.time for e in real] == [t for t, _, _ in events]
        assert [e.new_regime for e in real] == [r for _, _, r in events]

    def test_matches_python_transcription_2d(self):
        m = build_model(dict(REFERENCE_MODEL, dim=2, intensity_0={
            "family": "LogisticRadial", "lambda_lo": 0.5, "lambda_hi": 1.5, "center": 2,
            "slope": 1}))
        p = SimParams(dt=1e-2, horizon=10, seed=3)
        rec = simulate_path(m, [1.0, -2.0], 0, p)
        x, z, events = reference_path(m, [1.0, -2.0], 0, p.dt, p.horizon, path_rng(p.seed))
        np.testing.assert_allclose(rec.xs[-1], x, rtol=1e-9)
        assert len(rec.events) - 1 == len(events)

    def test_brownian_marginal(self):
        """X_1 ~ N(x0, 1) when both drifts vanish."""
        m = build_model(BROWNIAN)
        p = SimParams(dt=0.01, horizon=1.0, seed=21, record_stride=100)
        finals = np.array([simulate_path(m, [0.5], 0, p, path_index=i).xs[-1, 0]
                           for i in range(20000)])
        assert stats.kstest(finals, "norm", args=(0.5, 1.0)).pvalue > 0.01
        assert finals.var() == pytest.approx(1.0, rel=0.05)

    def test_blowup(self):
        m = build_model(dict(REFERENCE_MODEL, diffusion={"family": "ScalarPerRegime",
                                                         "sigma_0": 1e200, "sigma_1": 1e200}))
        with pytest.raises(NumericalBlowupError) as exc:
            simulate_path(m, [1.0], 0, SimParams(dt=1e-2, horizon=1.0))
        assert exc.value.last_time >= 0

    def test_bad_start(self, ref_model):
        with pytest.raises(ValueError):
            simulate_path(ref_model, [1.0, 2.0], 0, SimParams())
        with pytest.raises(ValueError):
            simulate_path(ref_model, [1.0], 2, SimParams())


class TestHitting:
    def test_inside_start_regime_0(self, ref_model):
        r = simulate_until_hit(ref_model, [1.0], 0, 2.0, SimParams(), max_time=10)
        assert r.tau_m1 == 0.0 and r.tau_embedded == 0.0

    def test_inside_start_regime_1_waits_for_switch(self, ref_model):
        r = simulate_until_hit(ref_model, [1.0], 1, 2.0, SimParams(seed=3), max_time=100)
        assert r.tau_m1 == 0.0
        assert r.tau_embedded is not None and r.tau_embedded > 0

    def test_embedded_after_m1(self, ref_model):
        for i in range(20):
            r = simulate_until_hit(ref_model, [5.0], 0, 2.0, SimParams(seed=1), 500, path_index=i)
            assert r.tau_m1 <= r.tau_embedded

    def test_agrees_with_recorded_path(self, ref_model):
        """The embedded time equals the first recorded switch inside the ball."""
        p = SimParams(horizon=200, seed=8)
        for i in range(5):
            rec = simulate_path(ref_model, [4.0], 0, p, path_index=i)
            hit = simulate_until_hit(ref_model, [4.0], 0, 2.0, p, 200, path_index=i)
            inside = [e.time for e in rec.events if abs(e.x_at[0]) <= 2.0]
            assert hit.tau_embedded == (inside[0] if inside else None)

    def test_censoring(self, ref_model):
        r = simulate_until_hit(ref_model, [50.0], 0, 2.0, SimParams(), max_time=1.0)
        assert r.tau_m1 is None and r.tau_embedded is None
        assert r.path_summary["t_end"] == pytest.approx(1.0)

    def test_batch_equals_single_runs(self, ref_model):
        p = SimParams(seed=13)
        batch = simulate_hits(ref_model, [5.0], 1, 2.0, p, 300, n_paths=6)
        for i in range(6):
            r = simulate_until_hit(ref_model, [5.0], 1, 2.0, p, 300, path_index=i)
            assert r.tau_embedded == batch.tau_embedded[i]

    def test_worker_invariance(self, ref_model):
        p = SimParams(seed=13)
        a = simulate_hits(ref_model, [5.0], 0, 2.0, p, 300, n_paths=64, workers=1)
        b = simulate_hits(ref_model, [5.0], 0, 2.0, p, 300, n_paths=64, workers=8)
        np.testing.assert_array_equal(a.tau_embedded, b.tau_embedded)
        np.testing.assert_array_equal(a.tau_m1, b.tau_m1)


class TestCsv:
    def test_path_and_events(self, ref_model, tmp_path):
        rec = simulate_path(ref_model, [2.0], 0, SimParams(horizon=5, record_stride=500, seed=3))
        write_path_csv(tmp_path / "p.csv", rec)
        write_events_csv(tmp_path / "e.csv", rec.events, 1)
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "time,x_1,z"
        assert len(lines) == 1 + len(rec.times)
        assert float(lines[-1].split(",")[1]) == rec.xs[-1, 0]
        ev = (tmp_path / "e.csv").read_text().splitlines()
        assert ev[0] == "n,T_n,x_1,new_regime" and ev[1] == "0,0.0,2.0,0"
        assert not list(tmp_path.glob("*.tmp*"))
