import math

import numpy as np
import pytest
from scipy.stats import chisquare, ks_2samp

from tempomap import (ConfigError, Exponential, Geometric, MappingSpec,
                      extract_snapshot, p_nk_poisson, sample_exact_instance,
                      sample_meanfield_instance, shortest_paths_from)
from tempomap.mapping import (EXACT, MEAN_FIELD, STATE_I, STATE_R, STATE_S,
                              WeightedInstance, dump_instance, load_instance,
                              sample_exact_batch, sample_meanfield_batch)
from tempomap.rng import stream
from tempomap.simulate import discrete_infection_times, gillespie_infection_times

from helpers import net_from_edges, proportion_stderr


class _QueueGen:
    """Stand-in generator feeding predetermined uniforms.

    The samplers consume 1 - random(), so this stores the values that make
    uniform_open_closed return exactly the requested variates.
    """

    def __init__(self, *blocks):
        self.blocks = [np.asarray(b, dtype=np.float64) for b in blocks]

    def random(self, size=None):
        block = self.blocks.pop(0)
        want = 1 if size is None else int(np.prod(size))
        assert block.size == want, (block.size, size)
        out = 1.0 - block
        return out.reshape(size) if size is not None else float(out[0])


def _poisson_spec(kind=EXACT, beta=1.0, gamma=1.0):
    phi = None if gamma == 0 else Exponential(gamma)
    return MappingSpec(Exponential(beta), phi, kind)


class TestExactSampling:
    def test_transmits_when_delay_beats_recovery(self):
        net = net_from_edges(2, [(0, 1)])
        # y per node then x per directed slot (slot order: 0->1, 1->0)
        gen = _QueueGen([0.1, 0.5], [0.9, 0.5])
        inst = sample_exact_instance(net, _poisson_spec(), gen)
        tau = -math.log(0.9)
        assert inst.recovery[0] == pytest.approx(-math.log(0.1))
        assert inst.weights[0] == pytest.approx(tau)  # 0.105 <= 2.303

    def test_infinite_when_recovery_preempts(self):
        net = net_from_edges(2, [(0, 1)])
        gen = _QueueGen([0.9, 0.5], [0.1, 0.5])
        inst = sample_exact_instance(net, _poisson_spec(), gen)
        assert inst.recovery[0] == pytest.approx(-math.log(0.9))  # 0.105
        assert np.isinf(inst.weights[0])  # tau = 2.303 > r

    def test_si_always_finite(self):
        net = net_from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        spec = _poisson_spec(gamma=0)
        for k in range(10):
            inst = sample_exact_instance(net, spec, stream(k, "map-si"))
            assert np.isfinite(inst.weights).all()
            assert np.isinf(inst.recovery).all()

    def test_finite_weights_bounded_by_recovery(self):
        net = net_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)])
        spec = _poisson_spec(beta=0.7, gamma=1.3)
        src = net.slot_source
        for k in range(20):
            inst = sample_exact_instance(net, spec, stream(k, "map-ex"))
            finite = np.isfinite(inst.weights)
            assert np.all(inst.weights[finite] <= inst.recovery[src[finite]])

    def test_edge_activation_fraction(self):
        net = net_from_edges(2, [(0, 1)])
        weights, _ = sample_exact_batch(net, _poisson_spec(), stream(0, "map-act"),
                                        100_000)
        frac = np.isfinite(weights[:, 0]).mean()
        assert abs(frac - 0.5) <= 4 * proportion_stderr(frac, weights.shape[0])

    def test_kind_mismatch_rejected(self):
        net = net_from_edges(2, [(0, 1)])
        with pytest.raises(ConfigError):
            sample_exact_instance(net, _poisson_spec(MEAN_FIELD), stream(0, "x"))
        with pytest.raises(ConfigError):
            sample_meanfield_instance(net, _poisson_spec(), stream(0, "x"))


class TestMeanFieldSampling:
    def test_symmetric_weights(self):
        net = net_from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)])
        for k in range(10):
            inst = sample_meanfield_instance(net, _poisson_spec(MEAN_FIELD),
                                             stream(k, "map-mf"))
            for e in range(net.n_edges):
                s0, s1 = net.edge_slots[e]
                assert inst.weights[s0] == inst.weights[s1]
            assert inst.recovery is None

    def test_si_edge_weight_equidistributed_with_exact(self):
        net = net_from_edges(2, [(0, 1)])
        w_ex, _ = sample_exact_batch(net, _poisson_spec(gamma=0),
                                     stream(1, "map-eq"), 30_000)
        w_mf = sample_meanfield_batch(net, _poisson_spec(MEAN_FIELD, gamma=0),
                                      stream(2, "map-eq"), 30_000)
        res = ks_2samp(w_ex[:, 0], w_mf[:, 0])
        assert res.pvalue > 0.01

    def test_edge_finite_probability(self):
        net = net_from_edges(2, [(0, 1)])
        beta, gamma = 0.8, 0.4
        w = sample_meanfield_batch(net, _poisson_spec(MEAN_FIELD, beta, gamma),
                                   stream(3, "map-mfp"), 100_000)
        frac = np.isfinite(w[:, 0]).mean()
        expected = beta / (beta + gamma)
        assert abs(frac - expected) <= 4 * proportion_stderr(frac, w.shape[0])


class TestFirstNeighbourhoodCorrelation:
    """A star's centre shares one recovery draw across all its out-edges;
    the count of active out-edges separates the two mappings."""

    N_LEAVES = 4
    N_SAMPLES = 100_000

    def _star(self):
        return net_from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])

    def _active_counts(self, weights, net):
        lo, hi = net.indptr[0], net.indptr[0 + 1]
        return np.isfinite(weights[:, lo:hi]).sum(axis=1)

    def test_exact_matches_shared_recovery_law(self):
        net = self._star()
        weights, _ = sample_exact_batch(net, _poisson_spec(), stream(4, "map-star"),
                                        self.N_SAMPLES)
        counts = np.bincount(self._active_counts(weights, net),
                             minlength=self.N_LEAVES + 1)
        expected = p_nk_poisson(1.0, 1.0, self.N_LEAVES) * self.N_SAMPLES
        res = chisquare(counts, expected)
        assert res.pvalue > 0.01

    def test_meanfield_matches_binomial(self):
        net = self._star()
        weights = sample_meanfield_batch(net, _poisson_spec(MEAN_FIELD),
                                         stream(5, "map-star"), self.N_SAMPLES)
        counts = np.bincount(self._active_counts(weights, net),
                             minlength=self.N_LEAVES + 1)
        k = np.arange(self.N_LEAVES + 1)
        binom = np.array([math.comb(self.N_LEAVES, int(i)) * 0.5 ** self.N_LEAVES
                          for i in k])
        res = chisquare(counts, binom * self.N_SAMPLES)
        assert res.pvalue > 0.01

    def test_exact_and_meanfield_differ(self):
        # the shared-recovery law is flatter than the binomial at beta = gamma
        expected_exact = p_nk_poisson(1.0, 1.0, self.N_LEAVES)
        binom = np.array([math.comb(self.N_LEAVES, int(i)) * 0.5 ** self.N_LEAVES
                          for i in range(self.N_LEAVES + 1)])
        assert not np.allclose(expected_exact, binom, atol=0.01)


class TestSnapshots:
    def _instance(self):
        net = net_from_edges(2, [(0, 1)])
        weights = np.array([2.0, 2.0])
        recovery = np.array([5.0, 1.0])
        return WeightedInstance(net, EXACT, weights, recovery)

    def test_state_boundaries(self):
        inst = self._instance()
        assert extract_snapshot(inst, 0, 1.5).states[1] == STATE_S
        assert extract_snapshot(inst, 0, 2.5).states[1] == STATE_I
        assert extract_snapshot(inst, 0, 3.5).states[1] == STATE_R
        assert extract_snapshot(inst, 0, 3.0).states[1] == STATE_R  # d + r <= t

    def test_source_infected_at_zero(self):
        snap = extract_snapshot(self._instance(), 0, 0.0)
        assert snap.states[0] == STATE_I

    def test_meanfield_rejected(self):
        net = net_from_edges(2, [(0, 1)])
        inst = WeightedInstance(net, MEAN_FIELD, np.array([1.0, 1.0]), None)
        with pytest.raises(ConfigError):
            extract_snapshot(inst, 0, 1.0)

    def test_si_never_recovered(self):
        net = net_from_edges(3, [(0, 1), (1, 2)])
        spec = _poisson_spec(gamma=0)
        inst = sample_exact_instance(net, spec, stream(1, "map-snap"))
        snap = extract_snapshot(inst, 0, 1e9)
        assert not np.any(snap.states == STATE_R)


class TestDumpLoad:
    def test_round_trip(self, tmp_path):
        net = net_from_edges(3, [(0, 1), (1, 2), (0, 2)])
        inst = sample_exact_instance(net, _poisson_spec(), stream(7, "map-io"))
        path = tmp_path / "inst.txt"
        dump_instance(inst, path)
        back = load_instance(net, path)
        assert back.kind == EXACT
        assert np.array_equal(back.weights, inst.weights)
        assert np.array_equal(back.recovery, inst.recovery)


class TestOracleAgreement:
    """Marginal reach probabilities from the mapping match the dynamics."""

    def test_discrete_three_node_path(self):
        net = net_from_edges(3, [(0, 1), (1, 2)])
        beta, gamma = 0.5, 0.3
        n = 40_000
        spec = MappingSpec(Geometric(beta), Geometric(gamma), EXACT)
        weights, _ = sample_exact_batch(net, spec, stream(8, "map-orc"), n)
        dist = np.empty((n, net.n))
        from tempomap import kernels
        kernels.dijkstra_batch(net.indptr, net.indices, weights, np.int64(0),
                               np.float64(np.inf), dist)
        t_inf, _ = discrete_infection_times(net, beta, gamma, 0,
                                            stream(9, "map-orc"), n, 5)
        for t in (1, 2, 3, 4, 5):
            for j in range(net.n):
                p_map = (dist[:, j] <= t).mean()
                p_sim = (t_inf[:, j] <= t).mean()
                se = math.hypot(proportion_stderr(p_map, n),
                                proportion_stderr(p_sim, n))
                assert abs(p_map - p_sim) <= 4 * se, (t, j)

    def test_continuous_triangle(self):
        net = net_from_edges(3, [(0, 1), (1, 2), (0, 2)])
        beta, gamma = 0.9, 0.5
        n = 40_000
        spec = MappingSpec(Exponential(beta), Exponential(gamma), EXACT)
        weights, _ = sample_exact_batch(net, spec, stream(10, "map-orc"), n)
        dist = np.empty((n, net.n))
        from tempomap import kernels
        kernels.dijkstra_batch(net.indptr, net.indices, weights, np.int64(0),
                               np.float64(np.inf), dist)
        t_inf, _ = gillespie_infection_times(net, beta, gamma, 0,
                                             stream(11, "map-orc"), n)
        for t in (0.5, 1.0, 2.0, 4.0):
            for j in range(net.n):
                p_map = (dist[:, j] <= t).mean()
                p_sim = (t_inf[:, j] <= t).mean()
                se = math.hypot(proportion_stderr(p_map, n),
                                proportion_stderr(p_sim, n))
                assert abs(p_map - p_sim) <= 4 * se, (t, j)
