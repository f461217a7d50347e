import math

import numpy as np
import pytest

from treebolic.analysis import ks_two_sample
from treebolic.closed_forms import ModelParams
from treebolic.pathsim import (
    NumericalError,
    PathState,
    SimConfig,
    final_tree_points,
    first_exit_batch,
    rebuild_vertices,
    run_batch,
    simulate_path,
    step_euler,
)
from treebolic.skeleton import RngStream, sample_tau_batch
from treebolic.space import HTParams, HTPoint, origin
from treebolic.tree import TreePoint, TreeVertex

BASE = ModelParams(2.0, 2, 1.0, 0.5)
DRIFTED = ModelParams(2.0, 2, 1.0, 1.0)
ROOT = TreeVertex.root(2)


class _FakeRng:
    """Deterministic draws: fixed normal values, uniform 0.9, child 0."""

    def __init__(self, z=0.0):
        self.z = z

    def standard_normal(self, size=None):
        return np.full(size, self.z) if size is not None else self.z

    def random(self, size=None):
        return np.full(size, 0.9) if size is not None else 0.9

    def integers(self, *args, **kwargs):
        size = kwargs.get("size")
        return np.zeros(size, dtype=kwargs.get("dtype", np.int64))


class _FlipX:
    """Wraps a generator, negating the x-noise block (the first of each pair
    of consecutive normal blocks drawn by the kernel)."""

    def __init__(self, seed):
        self.g = np.random.default_rng(seed)
        self.calls = 0

    def standard_normal(self, size=None):
        out = self.g.standard_normal(size)
        self.calls += 1
        return -out if self.calls % 2 == 1 else out

    def random(self, size=None):
        return self.g.random(size)

    def integers(self, *args, **kwargs):
        return self.g.integers(*args, **kwargs)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(dt=0.0)
        with pytest.raises(ValueError):
            SimConfig(dt=0.02)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, horizon=1e-4)
        with pytest.raises(ValueError):
            SimConfig(record_stride=0)


class TestScalarStep:
    def test_deterministic_drift_only(self):
        # zero noise: the height moves by the drift, the abscissa stays put
        m = ModelParams(2.0, 2, 0.0, 1.0)  # drift (1 - 0)/log 2
        cfg = SimConfig(dt=1e-3, horizon=1.0)
        state = PathState(ROOT, 1.25, -0.5, 0.0, 0, False, -1, 0)
        out = step_euler(state, m, cfg, _FakeRng(0.0))
        assert out.rel == pytest.approx(-0.5 + 1e-3 / math.log(2.0))
        assert out.x == 1.25
        assert out.clock == pytest.approx(1e-3)
        assert out.line_vertex == ROOT and not out.on_line

    def test_line_departure_bookkeeping(self):
        cfg = SimConfig(dt=1e-3, horizon=1.0)
        state = PathState.at_origin(BASE)
        out = step_euler(state, BASE, cfg, _FakeRng(1.0))  # uniform 0.9 > gamma: down
        assert out.exc_side == -1 and not out.on_line
        assert out.rel == pytest.approx(-math.sqrt(2.0) / math.log(2.0) * math.sqrt(1e-3))
        assert out.strip_vertex == ROOT
        assert out.tree_point == TreePoint(ROOT, 1.0 + out.rel)

    def test_numerical_guard(self):
        cfg = SimConfig(dt=1e-2, horizon=1.0)
        state = PathState(ROOT, 0.0, -0.5, 0.0, 0, False, -1, 0)
        with pytest.raises(NumericalError):
            step_euler(state, BASE, cfg, _FakeRng(80.0))

    def test_event_moves_anchor(self):
        cfg = SimConfig(dt=1e-3, horizon=1.0)
        state = PathState(ROOT, 0.0, -0.999, 0.0, 0, False, -1, 0)
        out = step_euler(state, BASE, cfg, _FakeRng(-1.0))
        assert out.n_events == 1
        assert out.line_vertex == ROOT.predecessor()
        assert out.on_line and out.rel == 0.0


class TestSymmetries:
    def test_reflection_pairing(self):
        cfg = SimConfig(dt=2e-4, horizon=0.5)
        a = run_batch(BASE, cfg, 64, np.random.default_rng(42))
        b = run_batch(BASE, cfg, 64, _FlipX(42))
        assert (a.y == b.y).all()
        assert (a.level == b.level).all()
        assert (a.ev_path == b.ev_path).all() and (a.ev_dir == b.ev_dir).all()
        assert np.allclose(a.x, -b.x)

    def test_translation_equivariance(self):
        cfg = SimConfig(dt=2e-4, horizon=0.5)
        a = run_batch(BASE, cfg, 64, np.random.default_rng(1), start_x=0.0)
        b = run_batch(BASE, cfg, 64, np.random.default_rng(1), start_x=5.0)
        assert (a.y == b.y).all()
        assert np.allclose(b.x - 5.0, a.x)

    def test_determinism(self):
        cfg = SimConfig(dt=5e-4, horizon=0.3)
        a = run_batch(DRIFTED, cfg, 32, RngStream(3, 1).generator())
        b = run_batch(DRIFTED, cfg, 32, RngStream(3, 1).generator())
        assert (a.x == b.x).all() and (a.y == b.y).all()
        assert (a.ev_time == b.ev_time).all()


class TestFirstExit:
    def test_matches_skeleton_sampler(self):
        n = 4000
        fe = first_exit_batch(BASE, n, RngStream(4, 0).generator(), dt=5e-4)
        tau, side = sample_tau_batch(BASE, n, RngStream(4, 1).generator(), dt=5e-4)
        assert ks_two_sample(fe.tau, tau).statistic < 0.04
        p1, p2 = np.mean(fe.side == 1), np.mean(side == 1)
        assert abs(p1 - p2) <= 3 * math.sqrt(0.5 * 2 / n)

    def test_up_exits_choose_uniform_children(self):
        n = 4000
        fe = first_exit_batch(BASE, n, RngStream(5, 0).generator(), dt=5e-4)
        up = fe.side == 1
        frac0 = np.mean(fe.child[up] == 0)
        assert abs(frac0 - 0.5) <= 3 * math.sqrt(0.25 / up.sum())

    def test_interior_start_validation(self):
        with pytest.raises(ValueError):
            first_exit_batch(BASE, 4, RngStream(6).generator(), start_rel=0.5)

    def test_sideways_tail_is_log_linear(self):
        n = 6000
        fe = first_exit_batch(
            BASE, n, RngStream(7, 0).generator(), dt=5e-4, track_max=True
        )
        levels = np.array([1.0, 2.0, 3.0, 4.0])
        logp = np.log([np.mean(fe.max_abs_dx >= s) for s in levels])
        slope = np.polyfit(levels, logp, 1)[0]
        assert slope < -0.5
        resid = logp - np.polyval(np.polyfit(levels, logp, 1), levels)
        assert np.abs(resid).max() < 0.35
        # translation invariance: a shifted start gives a similar tail
        fe2 = first_exit_batch(
            BASE, n, RngStream(7, 1).generator(), dt=5e-4, start_x=7.0, track_max=True
        )
        logp2 = np.log([np.mean(fe2.max_abs_dx >= s) for s in levels])
        slope2 = np.polyfit(levels, logp2, 1)[0]
        assert abs(slope - slope2) < 0.35


class TestHorizonRuns:
    def test_height_marginal_without_lines(self):
        # p = 1, beta = 1: the line condition is invisible, so the height is
        # a plain drifted Brownian motion
        m = ModelParams(2.0, 1, 0.0, 1.0)
        t = 1.0
        run = run_batch(m, SimConfig(dt=1e-3, horizon=t), 4000, RngStream(8).generator())
        mean_target = (1.0 - m.alpha) / m.log_q * t
        var_target = 2.0 / m.log_q**2 * t
        y = run.y
        se_mean = math.sqrt(var_target / y.size)
        assert abs(y.mean() - mean_target) <= 3 * se_mean + 0.05
        se_var = var_target * math.sqrt(2.0 / y.size)
        assert abs(y.var(ddof=1) - var_target) <= 3 * se_var + 0.1

    def test_event_clock_increments_match_sojourn_law(self):
        run = run_batch(
            ModelParams(2.0, 2, 1.0, 0.75),
            SimConfig(dt=5e-4, horizon=6.0),
            400,
            RngStream(9).generator(),
        )
        order = np.argsort(run.ev_path, kind="stable")
        path_sorted = run.ev_path[order]
        time_sorted = run.ev_time[order]
        gaps = np.diff(time_sorted)
        same = np.diff(path_sorted) == 0
        increments = np.concatenate(
            [time_sorted[np.searchsorted(path_sorted, np.arange(run.n_paths))],
             gaps[same]]
        )
        tau, _ = sample_tau_batch(
            ModelParams(2.0, 2, 1.0, 0.75), 8000, RngStream(10).generator(), dt=5e-4
        )
        assert ks_two_sample(increments, tau).statistic < 0.035

    def test_event_counter_and_levels(self):
        run = run_batch(DRIFTED, SimConfig(dt=5e-4, horizon=2.0), 200, RngStream(11).generator())
        counts = np.bincount(run.ev_path, minlength=run.n_paths)
        assert (counts == run.n_events).all()
        # every path's final anchor level equals its net event direction sum
        for i in range(run.n_paths):
            sel = run.ev_path == i
            assert run.level[i] == run.ev_dir[sel].sum()
        assert (run.t >= 2.0).all() and (run.t < 2.0 + 5e-4).all()

    def test_final_tree_points_consistent(self):
        run = run_batch(DRIFTED, SimConfig(dt=5e-4, horizon=2.0), 100, RngStream(12).generator())
        points = final_tree_points(run)
        for i, w in enumerate(points):
            assert w.hor == pytest.approx(run.y[i])

    def test_checkpoint_recording(self):
        run = run_batch(
            BASE,
            SimConfig(dt=1e-3, horizon=1.0),
            50,
            RngStream(13).generator(),
            checkpoints=[0.25, 0.5],
        )
        assert run.checkpoint_x.shape == (50, 2)
        with pytest.raises(ValueError):
            run_batch(
                BASE,
                SimConfig(dt=1e-3, horizon=1.0),
                4,
                RngStream(14).generator(),
                checkpoints=[0.5, 0.25],
            )


class TestTrajectories:
    def test_records_structure(self):
        cfg = SimConfig(dt=1e-3, horizon=0.25, record_stride=20)
        recs = simulate_path(BASE, cfg, RngStream(15).generator())
        assert recs[0].t == 0.0 and recs[0].vertex == ROOT
        assert recs[-1].t >= cfg.horizon
        ts = [r.t for r in recs]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        ns = [r.n_events for r in recs]
        assert all(b >= a for a, b in zip(ns, ns[1:]))
        assert all(r.dist is None for r in recs)

    def test_distance_column(self):
        cfg = SimConfig(dt=1e-3, horizon=0.05, record_stride=10)
        recs = simulate_path(BASE, cfg, RngStream(16).generator(), with_distance=True)
        assert recs[0].dist == 0.0
        assert all(r.dist >= 0.0 for r in recs)

    def test_custom_start(self):
        start = HTPoint(2.0, TreePoint(ROOT.successors()[1], 0.5))
        cfg = SimConfig(dt=1e-3, horizon=0.02, record_stride=5)
        recs = simulate_path(BASE, cfg, RngStream(17).generator(), start=start)
        assert recs[0].x == 2.0
        assert recs[0].y == pytest.approx(0.5)


def test_rebuild_vertices():
    vs = rebuild_vertices(2, [1, 1, -1], [0, 1, 0])
    assert [v.hor for v in vs] == [0, 1, 2, 1]
    assert vs[-1] == vs[1]


def test_origin_state_roundtrip():
    st = PathState.at_origin(BASE)
    assert st.point == origin(HTParams(2.0, 2))
    assert st.strip_vertex == ROOT
