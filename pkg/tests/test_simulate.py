import math

import numpy as np
import pytest
from scipy.stats import kstest

from tempomap import ConfigError
from tempomap.simulate import (SimState, advance_discrete, discrete_step,
                               discrete_infection_times, dump_trajectory,
                               gillespie_infection_times, gillespie_run,
                               init_state, states_at, trajectory_events,
                               transmission_table)
from tempomap.rng import stream

from helpers import net_from_edges, proportion_stderr


class TestDiscrete:
    def test_sure_infection_one_step(self):
        net = net_from_edges(2, [(0, 1)])
        for seed in range(5):
            state = init_state(net, 0)
            discrete_step(state, net, 1.0, 0.0, stream(seed, "sim"))
            assert state.states[1] == 1
            assert state.t_inf[1] == 1.0

    def test_beta_zero_never_spreads(self):
        net = net_from_edges(3, [(0, 1), (1, 2)])
        state = init_state(net, 0)
        advance_discrete(state, net, 0.0, 0.0, stream(1, "sim"), max_steps=30)
        assert state.counts() == (2, 1, 0)

    def test_geometric_first_passage(self):
        net = net_from_edges(2, [(0, 1)])
        n = 100_000
        t_inf, _ = discrete_infection_times(net, 0.5, 0.0, 0, stream(2, "sim"), n, 6)
        for k in range(1, 7):
            frac = (t_inf[:, 1] <= k).mean()
            expected = 1 - 0.5 ** k
            assert abs(frac - expected) <= 4 * proportion_stderr(frac, n), k

    def test_conservation_and_monotone_recovered(self):
        net = net_from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])
        state = init_state(net, 0)
        gen = stream(3, "sim")
        recovered = 0
        for _ in range(40):
            discrete_step(state, net, 0.6, 0.3, gen)
            s, i, r = state.counts()
            assert s + i + r == net.n
            assert r >= recovered
            recovered = r

    def test_si_run_terminates(self):
        net = net_from_edges(4, [(0, 1), (1, 2), (2, 3)])
        state = init_state(net, 0)
        advance_discrete(state, net, 1.0, 0.0, stream(4, "sim"), max_steps=None)
        assert state.counts() == (0, 4, 0)
        assert state.clock <= 4.0

    def test_recovery_duration_geometric_mean(self):
        net = net_from_edges(1, [])
        n = 50_000
        gamma = 0.4
        t_inf, t_rec = discrete_infection_times(net, 0.5, gamma, 0,
                                                stream(5, "sim"), n, 60)
        durations = t_rec[:, 0] - t_inf[:, 0]
        assert np.isfinite(durations).all()
        assert durations.min() >= 1.0
        se = durations.std(ddof=1) / math.sqrt(n)
        assert abs(durations.mean() - 1 / gamma) <= 4 * se

    def test_rate_validation(self):
        net = net_from_edges(2, [(0, 1)])
        with pytest.raises(ConfigError):
            transmission_table(net, 1.5)
        with pytest.raises(ConfigError):
            advance_discrete(init_state(net, 0), net, 0.5, -0.1, stream(0, "sim"))


class TestGillespie:
    def test_transmission_beats_recovery_rate(self):
        net = net_from_edges(2, [(0, 1)])
        beta, gamma = 1.2, 0.6
        n = 100_000
        t_inf, _ = gillespie_infection_times(net, beta, gamma, 0,
                                             stream(6, "sim"), n)
        frac = np.isfinite(t_inf[:, 1]).mean()
        expected = beta / (beta + gamma)
        assert abs(frac - expected) <= 4 * proportion_stderr(frac, n)

    def test_isolated_recovery_exponential(self):
        net = net_from_edges(1, [])
        gamma = 0.9
        n = 30_000
        _, t_rec = gillespie_infection_times(net, 0.3, gamma, 0,
                                             stream(7, "sim"), n)
        res = kstest(t_rec[:, 0], lambda t: 1 - np.exp(-gamma * np.asarray(t)))
        assert res.pvalue > 0.01

    def test_t_max_truncates(self):
        net = net_from_edges(3, [(0, 1), (1, 2)])
        state = gillespie_run(net, 5.0, 0.0, 0, stream(8, "sim"), t_max=1e-6)
        assert state.counts()[1] == 1
        assert state.clock == 1e-6


class TestStateViews:
    def test_states_at_reconstruction(self):
        net = net_from_edges(2, [(0, 1)])
        state = SimState(states=np.array([2, 1], dtype=np.int8),
                         t_inf=np.array([0.0, 1.5]),
                         t_rec=np.array([2.0, np.inf]),
                         protected_until=np.full(2, np.inf))
        assert list(states_at(state, 0.5)) == [1, 0]
        assert list(states_at(state, 1.5)) == [1, 1]
        assert list(states_at(state, 2.0)) == [2, 1]

    def test_trajectory_dump(self, tmp_path):
        net = net_from_edges(3, [(0, 1), (1, 2)])
        state = init_state(net, 0)
        advance_discrete(state, net, 1.0, 0.5, stream(9, "sim"), max_steps=None)
        events = trajectory_events(state)
        times = [e[0] for e in events]
        assert times == sorted(times)
        assert events[0] == (0.0, "infect", 0)
        path = tmp_path / "traj.txt"
        dump_trajectory(state, path)
        lines = path.read_text().splitlines()
        assert len(lines) == len(events)
        assert lines[0].split() == ["0.0", "infect", "0"]
