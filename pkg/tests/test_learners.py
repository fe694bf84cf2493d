import math

import numpy as np
import pytest

from instances import random_graph_instance
from objlearn.core import Bounds, Observation, Orientation, run_online
from objlearn.learners import FeatureMap, FeatureMapLearner, FtlLearner, MwuLearner, OgdLearner
from objlearn.lp import PolyhedralObjectiveSet
from objlearn.oracles import KnapsackInstance, KnapsackOracle, ShortestPathOracle
from objlearn.projections import Box, UnitSimplex

MAX, MIN = Orientation.MAXIMIZE, Orientation.MINIMIZE


class TestMwu:
    def test_rate(self):
        assert MwuLearner(50, 500).eta == pytest.approx(0.08845, abs=1e-5)

    def test_rate_clamp_warns(self):
        with pytest.warns(RuntimeWarning, match="clamped"):
            learner = MwuLearner(2, 1)
        assert learner.eta == 0.4999

    def test_uniform_start(self):
        np.testing.assert_array_equal(MwuLearner(4, 10).current_objective(), np.full(4, 0.25))

    def test_update_example(self):
        learner = MwuLearner(2, 100)
        learner.eta = 0.25
        learner.observe([1, 0], [0, 1])
        np.testing.assert_allclose(learner.weights, [0.75, 1.25])
        np.testing.assert_allclose(learner.current_objective(), [0.375, 0.625])

    def test_equal_decisions_leave_state(self):
        learner = MwuLearner(3, 10)
        learner.observe([1, 0, 1], [1, 0, 1])
        np.testing.assert_array_equal(learner.weights, np.ones(3))

    def test_infinity_normalization(self):
        learner = MwuLearner(2, 100)
        learner.observe([2, 0], [0, 0])
        assert learner.weights[0] < 1 and learner.weights[1] == 1

    def test_minimize_flips_the_step(self):
        learner = MwuLearner(2, 100, MIN)
        learner.observe([1, 0], [0, 0])
        assert learner.weights[0] > 1

    def test_errors(self):
        with pytest.raises(ValueError, match="n >= 2"):
            MwuLearner(1, 10)
        with pytest.raises(ValueError, match="shapes differ"):
            MwuLearner(2, 10).observe([1, 0], [1, 0, 0])

    def test_weights_stay_positive(self):
        rng = np.random.default_rng(0)
        with pytest.warns(RuntimeWarning):
            learner = MwuLearner(5, 1)
        for _ in range(500):
            learner.observe(rng.random(5), rng.random(5))
            c = learner.current_objective()
            assert learner.weights.min() > 0
            assert c.min() >= 0 and abs(c.sum() - 1) <= 1e-9


class TestOgd:
    def test_symmetric_start(self):
        np.testing.assert_allclose(OgdLearner(UnitSimplex(2), 1, 10).current_objective(),
                                   [0.5, 0.5])

    def test_diameter_does_not_depend_on_n(self):
        assert OgdLearner(UnitSimplex(30), 1, 10).D == pytest.approx(math.sqrt(2))

    def test_fixed_rate(self):
        learner = OgdLearner(UnitSimplex(2), 10, 100)
        assert learner.eta(1) == learner.eta(50) == pytest.approx(math.sqrt(2) / 100)

    def test_dynamic_rate(self):
        learner = OgdLearner(UnitSimplex(2), 1, schedule="dynamic")
        assert learner.eta(4) == pytest.approx(math.sqrt(2) / 2)

    def test_step_without_clipping(self):
        learner = OgdLearner(UnitSimplex(2), 1, 10)
        learner.eta = lambda t: 0.1
        learner.observe([1, 0], [0, 1], 1)
        np.testing.assert_allclose(learner.current_objective(), [0.4, 0.6])

    def test_zero_gradient(self):
        learner = OgdLearner(UnitSimplex(2), 1, 10, c1=[0.3, 0.7])
        learner.observe([1, 1], [1, 1], 1)
        np.testing.assert_allclose(learner.current_objective(), [0.3, 0.7])

    def test_projection_brings_back_vertex(self):
        learner = OgdLearner(UnitSimplex(2), 1, 10, c1=[1, 0])
        learner.eta = lambda t: 0.2
        learner.observe([0, 1], [1, 0], 1)
        np.testing.assert_allclose(learner.current_objective(), [1, 0], atol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError, match="horizon"):
            OgdLearner(UnitSimplex(2), 1)
        with pytest.raises(ValueError, match="positive"):
            OgdLearner(UnitSimplex(2), 0, 10)
        with pytest.raises(ValueError, match="schedule"):
            OgdLearner(UnitSimplex(2), 1, 10, schedule="adagrad")

    def test_stays_in_box(self):
        rng = np.random.default_rng(1)
        F = Box(np.zeros(4), np.ones(4))
        learner = OgdLearner(F, 2, 50)
        for t in range(1, 51):
            learner.observe(rng.integers(0, 2, 4), rng.integers(0, 2, 4), t)
            assert F.contains(learner.current_objective())


def _knapsack_stream(c_true, T, seed, divisible=True):
    rng = np.random.default_rng(seed)
    n = c_true.size
    oracle = KnapsackOracle(divisible)
    out = []
    for t in range(1, T + 1):
        p = rng.integers(1, 20, size=n).astype(float)
        inst = KnapsackInstance(p, float(rng.integers(1, int(p.sum()))), divisible)
        out.append(Observation(t, inst, oracle(c_true, inst).decision))
    return out, oracle


@pytest.mark.parametrize("seed", range(3))
def test_mwu_regret_bound(seed):
    n, T = 8, 300
    c_true = np.random.default_rng(100 + seed).dirichlet(np.ones(n))
    stream, oracle = _knapsack_stream(c_true, T, seed)
    led = run_online(MwuLearner(n, T), oracle, stream, c_true)
    assert led.avg_total[-1] <= Bounds(1.0, n, T).mwu_bound() + 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_ogd_regret_bound(seed):
    n, T = 8, 300
    c_true = np.random.default_rng(200 + seed).dirichlet(np.ones(n))
    stream, oracle = _knapsack_stream(c_true, T, seed)
    K = math.sqrt(n)
    led = run_online(OgdLearner(UnitSimplex(n), K, T), oracle, stream, c_true)
    assert led.avg_total[-1] <= Bounds(K, n, T, L=math.sqrt(2)).ogd_bound() + 1e-6


def test_mwu_on_shortest_paths_minimizes():
    rng = np.random.default_rng(5)
    inst = random_graph_instance(rng, 7)
    n, T = inst.n, 200
    if n < 2:
        pytest.skip("degenerate graph")
    c_true = rng.dirichlet(np.ones(n))
    oracle = ShortestPathOracle()
    x = oracle(c_true, inst).decision
    stream = [Observation(t, inst, x) for t in range(1, T + 1)]
    led = run_online(MwuLearner(n, T, MIN), oracle, stream, c_true)
    assert led.avg_total[-1] <= Bounds(1.0, n, T).mwu_bound() + 1e-6


class TestFtl:
    def test_first_objective(self):
        F = PolyhedralObjectiveSet.simplex(3)
        np.testing.assert_allclose(FtlLearner(F).current_objective(), np.full(3, 1 / 3))
        np.testing.assert_array_equal(
            FtlLearner(F, first_objective=[1, 0, 0]).current_objective(), [1, 0, 0])

    def test_one_observation_leaves_no_gap(self):
        F = PolyhedralObjectiveSet.simplex(2)
        inst = KnapsackInstance([1.0, 1.0], 1.0, divisible=True)
        oracle = KnapsackOracle(True)
        x = oracle([0.8, 0.2], inst).decision
        for method in ("cuts", "full-simplex", "full-highs"):
            learner = FtlLearner(F, first_objective=[0.5, 0.5], oracle=oracle, method=method)
            learner.observe(oracle([0.5, 0.5], inst).decision, x, 1, inst)
            c = learner.current_objective()
            assert learner.master_value == pytest.approx(0.0, abs=1e-9)
            assert c @ x == pytest.approx(oracle(c, inst).value, abs=1e-9)

    def test_needs_instance(self):
        with pytest.raises(ValueError, match="instance"):
            FtlLearner(PolyhedralObjectiveSet.simplex(2)).observe([1, 0], [0, 1], 1)

    def test_rejects_minimization(self):
        with pytest.raises(ValueError, match="maximization"):
            FtlLearner(PolyhedralObjectiveSet.simplex(2), MIN)

    def _run(self, method, stream, oracle, n):
        learner = FtlLearner(PolyhedralObjectiveSet.simplex(n), oracle=oracle, method=method)
        led = run_online(learner, oracle, stream, None)
        return learner, led

    def test_methods_agree_on_master_value(self):
        n = 5
        c_true = np.random.default_rng(7).dirichlet(np.ones(n))
        stream, oracle = _knapsack_stream(c_true, 25, 7)
        values = []
        for method in ("cuts", "full-simplex", "full-highs"):
            learner, _ = self._run(method, stream, oracle, n)
            learner.resolve()
            values.append(learner.master_value)
        assert values[0] == pytest.approx(values[1], abs=1e-7)
        assert values[1] == pytest.approx(values[2], abs=1e-7)

    def test_deterministic_replay(self):
        n = 4
        c_true = np.random.default_rng(8).dirichlet(np.ones(n))
        stream, oracle = _knapsack_stream(c_true, 20, 8)
        a, _ = self._run("cuts", stream, oracle, n)
        b, _ = self._run("cuts", stream, oracle, n)
        assert a.current_objective().tobytes() == b.current_objective().tobytes()

    def test_master_beats_any_fixed_objective(self):
        n = 4
        rng = np.random.default_rng(9)
        c_true = rng.dirichlet(np.ones(n))
        stream, oracle = _knapsack_stream(c_true, 20, 9)
        learner, _ = self._run("cuts", stream, oracle, n)
        learner.resolve()
        for c in rng.dirichlet(np.ones(n), size=30):
            gap = sum(oracle(c, ob.params).value - c @ ob.expert_decision for ob in stream)
            assert learner.master_value <= gap + 1e-7
        # the true objective explains the data exactly
        assert learner.master_value == pytest.approx(0.0, abs=1e-7)


class TestFeatureMap:
    def test_identity_matches_inner(self):
        a = MwuLearner(3, 50)
        b = FeatureMapLearner(MwuLearner(3, 50), FeatureMap.identity(3))
        for xbar, x in [([1, 0, 0], [0, 1, 0]), ([0, 1, 1], [1, 1, 0])]:
            a.observe(xbar, x)
            b.observe(xbar, x)
        np.testing.assert_array_equal(a.current_objective(), b.current_objective())

    def test_parameterized_scales_by_q(self):
        f = FeatureMap.parameterized([2.0], 2)
        np.testing.assert_array_equal(f([1.0, 3.0]), [2.0, 6.0])
        assert f.lipschitz_bound == 2.0
        learner = FeatureMapLearner(OgdLearner(UnitSimplex(2), 1, 10), f)
        learner.inner.eta = lambda t: 0.05
        learner.observe([1, 0], [0, 1], 1)
        np.testing.assert_allclose(learner.current_objective(), [0.4, 0.6])

    def test_feature_collision_gives_no_update(self):
        f = FeatureMap(lambda x: np.array([x.sum()]), 1)
        inner = OgdLearner(Box([0.0], [1.0]), 1, 10, c1=[0.5])
        learner = FeatureMapLearner(inner, f)
        learner.observe([1, 0], [0, 1], 1)
        assert learner.current_objective().tolist() == [0.5]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="feature dimension"):
            FeatureMapLearner(MwuLearner(3, 10), FeatureMap.identity(4))
