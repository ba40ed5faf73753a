import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chi2, ks_2samp

from tempomap import (ConfigError, EnsembleEstimate, Exponential, GibbsSampler,
                      Geometric, IndependentSampler, MappingSpec, all_pairs,
                      chain_toy, erdos_renyi, estimate, gibbs_step_exact,
                      gibbs_step_meanfield, make_sampler, recompute_affected,
                      sample_instance, shortest_paths_from)
from tempomap.ensemble import ChainState, affected_rows
from tempomap.mapping import EXACT, MEAN_FIELD, sample_exact_batch
from tempomap.rng import stream

from helpers import net_from_edges, proportion_stderr


def _poisson_spec(kind=EXACT, beta=1.0, gamma=1.0):
    phi = None if gamma == 0 else Exponential(gamma)
    return MappingSpec(Exponential(beta), phi, kind)


class TestEstimate:
    def test_constant_observable(self):
        net = net_from_edges(2, [(0, 1)])
        sampler = IndependentSampler(net, _poisson_spec(), master_seed=1)
        est = estimate(sampler, lambda inst: 1.0, 500)
        assert est.mean == 1.0
        assert est.stderr == 0.0
        assert est.n == 500

    def test_edge_activation_indicator(self):
        net = net_from_edges(2, [(0, 1)])
        sampler = IndependentSampler(net, _poisson_spec(), master_seed=2)
        est = estimate(sampler, lambda inst: float(np.isfinite(inst.weights[0])),
                       100_000)
        assert abs(est.mean - 0.5) <= 4 * est.stderr

    def test_toy_expected_distance_matches_enumeration(self):
        # two parallel 2-hop routes of unit-rate exponential sums:
        # E[min] = integral of (e^{-t} (1+t))^2 = 5/4
        expected, _ = quad(lambda t: (math.exp(-t) * (1 + t)) ** 2, 0, 60)
        assert expected == pytest.approx(1.25, abs=1e-9)
        net = chain_toy(2, 1)
        sampler = IndependentSampler(net, _poisson_spec(gamma=0), master_seed=3)
        est = estimate(sampler, lambda inst: shortest_paths_from(inst, 0)[1],
                       40_000)
        assert abs(est.mean - expected) <= 4 * est.stderr

    def test_rejects_zero_samples(self):
        net = net_from_edges(2, [(0, 1)])
        sampler = IndependentSampler(net, _poisson_spec(), master_seed=1)
        with pytest.raises(ConfigError):
            estimate(sampler, lambda inst: 1.0, 0)

    def test_make_sampler_dispatch(self):
        net = net_from_edges(2, [(0, 1)])
        assert isinstance(make_sampler(net, _poisson_spec(), 1), IndependentSampler)
        assert isinstance(make_sampler(net, _poisson_spec(), 1, kind="gibbs"),
                          GibbsSampler)
        with pytest.raises(ConfigError):
            make_sampler(net, _poisson_spec(), 1, kind="metropolis")


class TestEnsembleEstimateAlgebra:
    def test_merge_matches_batch(self):
        gen = stream(4, "ens")
        values = gen.exponential(size=400)
        whole = EnsembleEstimate.from_values(values)
        merged = EnsembleEstimate.from_values(values[:150]).merge(
            EnsembleEstimate.from_values(values[150:]))
        assert merged.n == whole.n
        assert merged.mean == pytest.approx(whole.mean, rel=1e-12)
        assert merged.m2 == pytest.approx(whole.m2, rel=1e-12)

    def test_vector_payloads(self):
        gen = stream(5, "ens")
        values = gen.normal(size=(300, 4))
        est = EnsembleEstimate.from_values(values)
        assert est.mean.shape == (4,)
        assert np.allclose(est.stderr, values.std(axis=0, ddof=1) / math.sqrt(300))

    def test_single_sample_has_no_stderr(self):
        est = EnsembleEstimate.from_values(np.array([2.0]))
        assert math.isnan(float(est.stderr))


class TestDeterminism:
    def test_worker_count_invariance(self):
        net = erdos_renyi(24, 3.0, seed=3)
        spec = _poisson_spec()
        sampler = IndependentSampler(net, spec, master_seed=11)
        f = lambda inst: float(np.isfinite(inst.weights).sum())
        a = estimate(sampler, f, 4096, workers=1)
        b = estimate(sampler, f, 4096, workers=4)
        assert a.n == b.n
        assert a.mean == b.mean
        assert a.m2 == b.m2

    def test_same_seed_same_estimate(self):
        net = chain_toy(3, 2)
        spec = _poisson_spec()
        f = lambda inst: float(np.isfinite(shortest_paths_from(inst, 0)[1]))
        a = estimate(IndependentSampler(net, spec, master_seed=7), f, 2000)
        b = estimate(IndependentSampler(net, spec, master_seed=7), f, 2000)
        assert a.mean == b.mean

    def test_variance_shrinks_at_root_n(self):
        net = chain_toy(2, 1)
        spec = _poisson_spec(gamma=0)
        f = lambda inst: float(shortest_paths_from(inst, 0)[1])
        ns = [100, 1000, 10_000]
        errs = [float(estimate(IndependentSampler(net, spec, master_seed=13), f, n).stderr)
                for n in ns]
        slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
        assert abs(slope + 0.5) <= 0.1


class TestGibbsExact:
    def test_step_touches_one_out_neighbourhood(self):
        net = erdos_renyi(12, 3.0, seed=5)
        spec = _poisson_spec()
        inst = sample_instance(net, spec, stream(1, "gibbs-t"))
        before = inst.weights.copy()
        state = ChainState(inst)
        gibbs_step_exact(state, net, spec, stream(2, "gibbs-t"))
        changed_slots = np.flatnonzero(inst.weights != before)
        sources = set(int(net.slot_source[k]) for k in changed_slots)
        assert len(sources) <= 1
        assert state.step_count == 1
        assert len(state.last_changed) >= 1

    def test_stationary_marginal_matches_independent(self):
        net = erdos_renyi(8, 2.5, seed=6)
        spec = _poisson_spec()
        slot = 0
        chain = GibbsSampler(net, spec, master_seed=21, burn_in=20 * net.n_edges,
                             thinning=net.n_edges)
        chain_vals = np.array([inst.weights[slot] for inst in chain.samples(4000)])
        w_ind, _ = sample_exact_batch(net, spec, stream(22, "gibbs-ind"), 4000)
        ind_vals = w_ind[:, slot]
        f_chain = np.isfinite(chain_vals)
        f_ind = np.isfinite(ind_vals)
        # finite-mass agreement, then distribution of the finite part
        p1, p2 = f_chain.mean(), f_ind.mean()
        se = math.hypot(proportion_stderr(p1, f_chain.size),
                        proportion_stderr(p2, f_ind.size))
        assert abs(p1 - p2) <= 4 * se
        res = ks_2samp(chain_vals[f_chain], ind_vals[f_ind])
        assert res.pvalue > 0.01

    def test_every_edge_eventually_changes(self):
        net = erdos_renyi(6, 2.5, seed=7)
        spec = _poisson_spec()
        inst = sample_instance(net, spec, stream(3, "gibbs-t"))
        initial = inst.weights.copy()
        state = ChainState(inst)
        gen = stream(4, "gibbs-t")
        changed = np.zeros(net.n_slots, dtype=bool)
        for _ in range(100 * net.n):
            gibbs_step_exact(state, net, spec, gen)
            changed |= inst.weights != initial
        assert changed.all()


class TestGibbsMeanField:
    def test_step_touches_one_edge(self):
        net = erdos_renyi(10, 3.0, seed=8)
        spec = _poisson_spec(MEAN_FIELD, gamma=0)  # finite weights: change certain
        inst = sample_instance(net, spec, stream(5, "gibbs-mf"))
        before = inst.weights.copy()
        state = ChainState(inst)
        gibbs_step_meanfield(state, net, spec, stream(6, "gibbs-mf"))
        changed_slots = np.flatnonzero(inst.weights != before)
        assert changed_slots.size == 2
        e = net.csr_edge_id[changed_slots[0]]
        assert set(changed_slots) == set(net.edge_slots[e])

    def test_stationary_edge_law(self):
        net = net_from_edges(3, [(0, 1), (1, 2)])
        spec = _poisson_spec(MEAN_FIELD)
        chain = GibbsSampler(net, spec, master_seed=31, burn_in=50, thinning=4)
        slot = int(net.edge_slots[0][0])
        vals = np.array([inst.weights[slot] for inst in chain.samples(6000)])
        gen = stream(32, "gibbs-mf-ind")
        from tempomap.mapping import sample_meanfield_batch
        ref = sample_meanfield_batch(net, spec, gen, 6000)[:, slot]
        p1, p2 = np.isfinite(vals).mean(), np.isfinite(ref).mean()
        se = math.hypot(proportion_stderr(p1, vals.size),
                        proportion_stderr(p2, ref.size))
        assert abs(p1 - p2) <= 4 * se
        res = ks_2samp(vals[np.isfinite(vals)], ref[np.isfinite(ref)])
        assert res.pvalue > 0.01

    def test_two_step_symmetry(self):
        # detailed balance on a 2-edge path with binned weights:
        # transitions a->b and b->a should be equally frequent
        net = net_from_edges(3, [(0, 1), (1, 2)])
        spec = _poisson_spec(MEAN_FIELD)
        # finite weights given activation are exponential(beta + gamma)
        edges = Exponential(2.0)
        bins = [float(edges.inverse_cdf(u)) for u in (0.75, 0.5, 0.25)]

        def encode(inst):
            code = 0
            for e in range(net.n_edges):
                w = inst.weights[net.edge_slots[e][0]]
                code = code * 5 + int(np.searchsorted(bins, w) if np.isfinite(w) else 4)
            return code

        chain = GibbsSampler(net, spec, master_seed=33, burn_in=200, thinning=1)
        states = [encode(inst) for inst in chain.samples(200_000)]
        counts = {}
        for a, b in zip(states, states[1:]):
            if a != b:
                counts[(a, b)] = counts.get((a, b), 0) + 1
        stat = 0.0
        dof = 0
        for (a, b), nab in sorted(counts.items()):
            if a < b:
                nba = counts.get((b, a), 0)
                if nab + nba >= 10:
                    stat += (nab - nba) ** 2 / (nab + nba)
                    dof += 1
        assert dof > 5
        assert chi2.sf(stat, dof) > 0.01


class TestRecomputeAffected:
    def _random_instance(self, seed):
        net = erdos_renyi(30, 3.5, seed=seed)
        spec = _poisson_spec(beta=1.0, gamma=0.6)
        inst = sample_instance(net, spec, stream(seed, "recomp"))
        return net, spec, inst

    def test_no_change_returns_prev(self):
        net, spec, inst = self._random_instance(1)
        prev = all_pairs(inst)
        out = recompute_affected(prev, [], inst)
        assert np.array_equal(out, prev)

    def test_matches_full_recompute_after_chain_steps(self):
        net, spec, inst = self._random_instance(2)
        prev = all_pairs(inst)
        state = ChainState(inst)
        gen = stream(9, "recomp")
        for _ in range(25):
            gibbs_step_exact(state, net, spec, gen)
            prev = recompute_affected(prev, state.last_changed, inst)
            assert np.array_equal(prev, all_pairs(inst))

    def test_slack_edge_increase_recomputes_nothing(self):
        # triangle with a heavy chord: increasing the chord is invisible
        net = net_from_edges(3, [(0, 1), (1, 2), (0, 2)])
        weights = np.full(net.n_slots, np.nan)
        pair_w = {(0, 1): 1.0, (1, 0): 1.0, (1, 2): 1.0, (2, 1): 1.0,
                  (0, 2): 10.0, (2, 0): 10.0}
        src = net.slot_source
        for k in range(net.n_slots):
            weights[k] = pair_w[(int(src[k]), int(net.indices[k]))]
        from tempomap.mapping import WeightedInstance
        inst = WeightedInstance(net, EXACT, weights, np.full(3, np.inf))
        prev = all_pairs(inst)
        for k in range(net.n_slots):
            if pair_w[(int(src[k]), int(net.indices[k]))] == 10.0:
                inst.weights[k] = 20.0
        changed = [(0, 2, 10.0), (2, 0, 10.0)]
        assert affected_rows(prev, changed, inst).size == 0
        out = recompute_affected(prev, changed, inst)
        assert np.array_equal(out, prev)
        assert np.array_equal(out, all_pairs(inst))
