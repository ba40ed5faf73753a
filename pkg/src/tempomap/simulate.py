"""Ground-truth SIR simulators, independent of the weighted-network mapping.

Two variants: a synchronous discrete-time process (per-step transmission
probability beta, recovery probability gamma, transmissions resolved before
the recovery test, new infections active the following step) and an
event-driven continuous-time process with exponential rates. Both report
per-node infection and recovery times, from which states at any observation
time follow. These simulators are the oracle the mapping is validated
against and the engine for direct Monte Carlo source detection and
vaccination trials.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError
from .graphs import StaticNetwork

STATE_S, STATE_I, STATE_R = 0, 1, 2


def transmission_table(net: StaticNetwork, beta: float) -> np.ndarray:
    """p[m] = probability a susceptible node with m infected neighbours is hit."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"discrete beta must lie in [0, 1], got {beta}")
    m = np.arange(int(net.degrees.max(initial=0)) + 1, dtype=np.float64)
    return -np.expm1(np.log1p(-beta) * m) if beta < 1.0 else np.minimum(m, 1.0)


@dataclass
class SimState:
    """Mutable simulation state: S/I/R codes, event times, optional protection."""

    states: np.ndarray
    t_inf: np.ndarray
    t_rec: np.ndarray
    protected_until: np.ndarray
    clock: float = 0.0

    @property
    def n_infected(self) -> int:
        return int(np.count_nonzero(self.states == STATE_I))

    def counts(self) -> tuple[int, int, int]:
        return (int(np.count_nonzero(self.states == STATE_S)),
                self.n_infected,
                int(np.count_nonzero(self.states == STATE_R)))


def init_state(net: StaticNetwork, source: int) -> SimState:
    states = np.zeros(net.n, dtype=np.int8)
    t_inf = np.full(net.n, np.inf)
    t_rec = np.full(net.n, np.inf)
    states[source] = STATE_I
    t_inf[source] = 0.0
    return SimState(states, t_inf, t_rec, np.full(net.n, np.inf))


def discrete_step(state: SimState, net: StaticNetwork, beta: float, gamma: float,
                  gen: np.random.Generator) -> SimState:
    """Advance one synchronous step in place (and return the state)."""
    advance_discrete(state, net, beta, gamma, gen, max_steps=1, chunk=1)
    return state


def advance_discrete(state: SimState, net: StaticNetwork, beta: float, gamma: float,
                     gen: np.random.Generator, max_steps: int | None = None,
                     chunk: int = 64) -> SimState:
    """Run until extinction or ``max_steps``, drawing uniforms in fixed chunks.

    Per step exactly one infection uniform per node and one recovery uniform
    per node are consumed (indexed by node), so runs sharing a seed stay
    aligned step for step regardless of how their states diverge.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"discrete gamma must lie in [0, 1], got {gamma}")
    p_table = transmission_table(net, beta)
    scratch = np.empty(net.n, dtype=np.int64)
    remaining = np.inf if max_steps is None else int(max_steps)
    while remaining > 0:
        steps = int(min(chunk, remaining))
        u_inf = gen.random((steps, net.n))
        u_rec = gen.random((steps, net.n))
        n_inf, done = kernels.discrete_sir_steps(
            net.indptr, net.indices, p_table, np.float64(gamma), state.states,
            state.t_inf, state.t_rec, state.protected_until,
            np.float64(state.clock), u_inf, u_rec, scratch)
        state.clock += done
        remaining -= steps
        if n_inf == 0 or done < steps:
            break
    return state


def discrete_infection_times(net: StaticNetwork, beta: float, gamma: float,
                             source: int, gen: np.random.Generator,
                             runs: int, steps: int):
    """(t_inf, t_rec) matrices for many independent discrete runs of fixed length."""
    p_table = transmission_table(net, beta)
    t_inf = np.empty((runs, net.n))
    t_rec = np.empty((runs, net.n))
    block = max(1, 2_000_000 // max(1, steps * net.n))
    for lo in range(0, runs, block):
        hi = min(runs, lo + block)
        u_inf = gen.random((hi - lo, steps, net.n))
        u_rec = gen.random((hi - lo, steps, net.n))
        kernels.discrete_sir_batch(net.indptr, net.indices, p_table,
                                   np.float64(gamma), np.int64(source),
                                   u_inf, u_rec, t_inf[lo:hi], t_rec[lo:hi])
    return t_inf, t_rec


def gillespie_run(net: StaticNetwork, beta: float, gamma: float, source: int,
                  gen: np.random.Generator, t_max: float = np.inf) -> SimState:
    """Event-driven continuous-time run; rates recomputed from scratch per event."""
    if beta < 0 or gamma < 0:
        raise ConfigError("rates must be non-negative")
    state = init_state(net, source)
    u = gen.random(4 * net.n + 4)
    end = kernels.gillespie_sir(net.indptr, net.indices, np.float64(beta),
                                np.float64(gamma), state.states, state.t_inf,
                                state.t_rec, 0.0, np.float64(t_max), u)
    state.clock = float(end)
    return state


def gillespie_infection_times(net: StaticNetwork, beta: float, gamma: float,
                              source: int, gen: np.random.Generator,
                              runs: int, t_max: float = np.inf):
    """(t_inf, t_rec) matrices for many independent continuous-time runs."""
    t_inf = np.empty((runs, net.n))
    t_rec = np.empty((runs, net.n))
    width = 4 * net.n + 4
    block = max(1, 4_000_000 // width)
    for lo in range(0, runs, block):
        hi = min(runs, lo + block)
        u = gen.random((hi - lo, width))
        kernels.gillespie_batch(net.indptr, net.indices, np.float64(beta),
                                np.float64(gamma), np.int64(source), u,
                                np.float64(t_max), t_inf[lo:hi], t_rec[lo:hi])
    return t_inf, t_rec


def states_at(state: SimState, t: float) -> np.ndarray:
    """S/I/R codes at time t reconstructed from the event times."""
    out = np.zeros(state.states.shape[0], dtype=np.int8)
    infected = state.t_inf <= t
    out[infected] = STATE_I
    out[infected & (state.t_rec <= t)] = STATE_R
    return out


def trajectory_events(state: SimState) -> list[tuple[float, str, int]]:
    """Time-ordered (time, kind, node) events recoverable from a finished run."""
    events = []
    for i in range(state.states.shape[0]):
        if np.isfinite(state.t_inf[i]):
            events.append((float(state.t_inf[i]), "infect", i))
        if np.isfinite(state.t_rec[i]):
            events.append((float(state.t_rec[i]), "recover", i))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return events


def dump_trajectory(state: SimState, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t, kind, node in trajectory_events(state):
            fh.write(f"{t!r} {kind} {node}\n")
