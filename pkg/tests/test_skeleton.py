import math

import numpy as np
import pytest

from treebolic.closed_forms import (
    ModelParams,
    exp_tau,
    laplace_tau,
    mean_step,
    prob_up,
)
from treebolic.skeleton import (
    RngStream,
    SkeletonState,
    run_skeleton,
    sample_tau,
    sample_tau_batch,
    step_side,
    step_vertex,
)
from treebolic.tree import TreeVertex

BASE = ModelParams(2.0, 2, 1.0, 0.5)  # rho = 1
DRIFTED = ModelParams(2.0, 2, 1.0, 1.0)  # rho = 2


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(7, 3).generator().standard_normal(8)
        b = RngStream(7, 3).generator().standard_normal(8)
        assert (a == b).all()

    def test_streams_differ(self):
        a = RngStream(7, 0).generator().standard_normal(8)
        b = RngStream(7, 1).generator().standard_normal(8)
        assert not (a == b).all()


class TestStepSide:
    def test_symmetric(self):
        rng = RngStream(0).generator()
        draws = [step_side(BASE, rng) for _ in range(20000)]
        up = np.mean(np.array(draws) == 1)
        assert abs(up - 0.5) <= 3 * math.sqrt(0.25 / 20000)

    def test_drifted(self):
        rng = RngStream(1).generator()
        draws = [step_side(DRIFTED, rng) for _ in range(20000)]
        up = np.mean(np.array(draws) == 1)
        assert abs(up - 2.0 / 3.0) <= 3 * math.sqrt(2.0 / 9.0 / 20000)

    def test_deterministic_sequence(self):
        s1 = [step_side(DRIFTED, RngStream(5).generator()) for _ in range(1)]
        s2 = [step_side(DRIFTED, RngStream(5).generator()) for _ in range(1)]
        assert s1 == s2


class TestStepVertex:
    def test_down_is_predecessor(self):
        rng = RngStream(2).generator()
        v = TreeVertex.root(2).successors()[1]
        assert step_vertex(v, -1, BASE, rng) == v.predecessor()

    def test_up_changes_level_by_one(self):
        rng = RngStream(3).generator()
        v = TreeVertex.root(2)
        for _ in range(50):
            w = step_vertex(v, 1, BASE, rng)
            assert w.hor == v.hor + 1 and w.predecessor() == v
            v = w

    def test_branching_one_deterministic(self):
        m = ModelParams(2.0, 1, 1.0, 1.0)
        rng = RngStream(4).generator()
        v = TreeVertex.root(1)
        assert step_vertex(v, 1, m, rng) == v.successors()[0]

    def test_children_uniform(self):
        rng = RngStream(5).generator()
        v = TreeVertex.root(2)
        kids = v.successors()
        counts = np.zeros(2)
        n = 30000
        for _ in range(n):
            counts[kids.index(step_vertex(v, 1, BASE, rng))] += 1
        for c in counts:
            assert abs(c / n - 0.5) <= 3 * math.sqrt(0.25 / n)

    def test_invalid_side(self):
        with pytest.raises(ValueError):
            step_vertex(TreeVertex.root(2), 0, BASE, RngStream(6).generator())


class TestSampleTau:
    def test_deterministic(self):
        t1, s1 = sample_tau_batch(BASE, 500, RngStream(7).generator(), dt=1e-3)
        t2, s2 = sample_tau_batch(BASE, 500, RngStream(7).generator(), dt=1e-3)
        assert (t1 == t2).all() and (s1 == s2).all()

    def test_scalar_wrapper(self):
        t, s = sample_tau(BASE, RngStream(8).generator(), dt=1e-3)
        assert t > 0 and s in (-1, 1)

    def test_mean_and_sides(self):
        n = 20000
        tau, side = sample_tau_batch(BASE, n, RngStream(9).generator(), dt=5e-4)
        et = exp_tau(BASE)
        se = tau.std(ddof=1) / math.sqrt(n)
        assert abs(tau.mean() - et) <= max(4 * se, 0.025 * et)
        up = np.mean(side == 1)
        assert abs(up - prob_up(BASE)) <= 3 * math.sqrt(0.25 / n)

    def test_laplace_point(self):
        n = 20000
        tau, _ = sample_tau_batch(BASE, n, RngStream(10).generator(), dt=5e-4)
        assert np.exp(-tau).mean() == pytest.approx(laplace_tau(BASE, 1.0), rel=0.02)

    def test_side_tau_independence(self):
        n = 20000
        tau, side = sample_tau_batch(DRIFTED, n, RngStream(11).generator(), dt=5e-4)
        corr = np.corrcoef(tau, side)[0, 1]
        assert abs(corr) < 3.0 / math.sqrt(n)

    def test_interior_start_mean(self):
        # beta p = 1 removes the line weight, so from y0 the exit time of the
        # interval [-1, 1] has mean (1 - y0) (y0 + 1) / vol^2
        n = 20000
        y0 = 0.5
        tau, side = sample_tau_batch(BASE, n, RngStream(12).generator(), dt=5e-4, y0=y0)
        vol2 = 2.0 / math.log(2.0) ** 2
        expected = (1.0 - y0) * (y0 + 1.0) / vol2
        se = tau.std(ddof=1) / math.sqrt(n)
        assert abs(tau.mean() - expected) <= max(4 * se, 0.03 * expected)
        # exit side of driftless diffusion from y0: P[+1] = (y0 + 1)/2; the
        # coarse dt used here leaves an O(sqrt dt) bias on top of the noise
        assert abs(np.mean(side == 1) - 0.75) <= 3 * math.sqrt(0.1875 / n) + 0.012

    def test_input_validation(self):
        rng = RngStream(13).generator()
        with pytest.raises(ValueError):
            sample_tau_batch(BASE, 10, rng, dt=0.0)
        with pytest.raises(ValueError):
            sample_tau_batch(BASE, 10, rng, dt=1e-3, y0=1.0)


class TestRunSkeleton:
    def test_structure_and_telescoping(self):
        states = run_skeleton(DRIFTED, 400, RngStream(14).generator(), dt=2e-3)
        assert len(states) == 401
        assert states[0].vertex == TreeVertex.root(2)
        clocks = [s.clock for s in states]
        assert all(b > a for a, b in zip(clocks, clocks[1:]))
        for prev, cur in zip(states, states[1:]):
            assert abs(cur.hor - prev.hor) == 1
            assert cur.step == prev.step + 1

    def test_law_of_large_numbers(self):
        n = 2000
        states = run_skeleton(DRIFTED, n, RngStream(15).generator(), dt=1e-3)
        drift = states[-1].hor / n
        sd_step = math.sqrt(8.0 / 9.0)
        assert abs(drift - mean_step(DRIFTED)) <= 3 * sd_step / math.sqrt(n)
        clock_rate = states[-1].clock / n
        et = exp_tau(DRIFTED)
        assert abs(clock_rate - et) <= max(4 * 0.2 / math.sqrt(n), 0.03 * et)

    def test_transience_proxy(self):
        # level-walk returns to the start level: geometric with mean
        # r/(1-r), r = 2 (1 - up-probability) when the drift points up
        rng = RngStream(16).generator()
        up = prob_up(DRIFTED)
        walks, steps = 150, 1500
        returns = []
        for _ in range(walks):
            level = 0
            count = 0
            for _ in range(steps):
                level += 1 if rng.random() < up else -1
                count += level == 0
            returns.append(count)
        r = 2.0 * (1.0 - up)
        expected = r / (1.0 - r)
        se = math.sqrt(r / (1.0 - r) ** 2 / walks)
        assert abs(np.mean(returns) - expected) <= 3.5 * se

    def test_validation(self):
        with pytest.raises(ValueError):
            run_skeleton(BASE, 0, RngStream(17).generator())


def test_state_fields():
    st = SkeletonState(TreeVertex.root(2), 1.5, 3)
    assert st.hor == 0 and st.clock == 1.5 and st.step == 3
