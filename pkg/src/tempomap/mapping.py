"""Sampling delay-weighted network instances from spreading dynamics.

One weighted instance encodes a complete stochastic outcome from every
potential source at once: each directed edge i->j carries the transmission
delay, or inf when node i would recover before transmitting. The exact
mapping draws one recovery variate per node (shared by all its outgoing
edges, which is what carries the dynamical correlations) and one transmission
variate per directed edge. The mean-field mapping draws both variates per
undirected edge independently and assigns the weight symmetrically; it is
a valid approximation when transmission dominates recovery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import InterEventDistribution
from .errors import ConfigError
from .graphs import StaticNetwork, shortest_paths_from
from .rng import uniform_open_closed

EXACT = "exact"
MEAN_FIELD = "mean-field"

STATE_S, STATE_I, STATE_R = 0, 1, 2
STATE_NAMES = {STATE_S: "S", STATE_I: "I", STATE_R: "R"}
STATE_CODES = {"S": STATE_S, "I": STATE_I, "R": STATE_R}


@dataclass(frozen=True)
class MappingSpec:
    """Transmission distribution, optional recovery distribution, mapping kind.

    ``phi=None`` is the SI model: recovery never happens and every sampled
    delay is finite.
    """

    psi: InterEventDistribution
    phi: InterEventDistribution | None
    kind: str = EXACT

    def __post_init__(self):
        if self.kind not in (EXACT, MEAN_FIELD):
            raise ConfigError(f"mapping kind must be '{EXACT}' or '{MEAN_FIELD}', got {self.kind!r}")

    @property
    def is_si(self) -> bool:
        return self.phi is None


@dataclass(eq=False)
class WeightedInstance:
    """One sampled realization: per-directed-slot delays plus recovery times.

    ``weights`` aligns with the network's CSR slots; ``recovery`` is per node
    and present only for exact instances (mean-field instances are symmetric
    and carry no recovery information).
    """

    network: StaticNetwork
    kind: str
    weights: np.ndarray
    recovery: np.ndarray | None = None

    def copy(self) -> "WeightedInstance":
        rec = None if self.recovery is None else self.recovery.copy()
        return WeightedInstance(self.network, self.kind, self.weights.copy(), rec)


def _recovery_from_uniforms(spec: MappingSpec, y: np.ndarray) -> np.ndarray:
    if spec.phi is None:
        return np.full(y.shape, np.inf)
    return np.asarray(spec.phi.inverse_cdf(y), dtype=np.float64)


def sample_exact_instance(net: StaticNetwork, spec: MappingSpec,
                          gen: np.random.Generator) -> WeightedInstance:
    """Draw one exact-mapping instance: recovery per node, delay per directed edge."""
    if spec.kind != EXACT:
        raise ConfigError("spec.kind must be 'exact' for exact sampling")
    y = uniform_open_closed(gen, net.n)
    recovery = _recovery_from_uniforms(spec, y)
    x = uniform_open_closed(gen, net.n_slots)
    tau = np.asarray(spec.psi.inverse_cdf(x), dtype=np.float64)
    weights = np.where(tau <= recovery[net.slot_source], tau, np.inf)
    return WeightedInstance(net, EXACT, weights, recovery)


def sample_meanfield_instance(net: StaticNetwork, spec: MappingSpec,
                              gen: np.random.Generator) -> WeightedInstance:
    """Draw one mean-field instance: independent symmetric weight per edge."""
    if spec.kind != MEAN_FIELD:
        raise ConfigError("spec.kind must be 'mean-field' for mean-field sampling")
    x = uniform_open_closed(gen, net.n_edges)
    y = uniform_open_closed(gen, net.n_edges)
    tau = np.asarray(spec.psi.inverse_cdf(x), dtype=np.float64)
    recovery = _recovery_from_uniforms(spec, y)
    per_edge = np.where(tau <= recovery, tau, np.inf)
    return WeightedInstance(net, MEAN_FIELD, per_edge[net.csr_edge_id], None)


def sample_instance(net: StaticNetwork, spec: MappingSpec,
                    gen: np.random.Generator) -> WeightedInstance:
    if spec.kind == EXACT:
        return sample_exact_instance(net, spec, gen)
    return sample_meanfield_instance(net, spec, gen)


def sample_exact_batch(net: StaticNetwork, spec: MappingSpec,
                       gen: np.random.Generator, count: int):
    """Vectorized exact sampling: (count, slots) weights and (count, n) recoveries."""
    y = uniform_open_closed(gen, (count, net.n))
    recovery = _recovery_from_uniforms(spec, y)
    x = uniform_open_closed(gen, (count, net.n_slots))
    tau = np.asarray(spec.psi.inverse_cdf(x), dtype=np.float64)
    weights = np.where(tau <= recovery[:, net.slot_source], tau, np.inf)
    return weights, recovery


def sample_meanfield_batch(net: StaticNetwork, spec: MappingSpec,
                           gen: np.random.Generator, count: int) -> np.ndarray:
    """Vectorized mean-field sampling: (count, slots) symmetric weights."""
    x = uniform_open_closed(gen, (count, net.n_edges))
    y = uniform_open_closed(gen, (count, net.n_edges))
    tau = np.asarray(spec.psi.inverse_cdf(x), dtype=np.float64)
    recovery = _recovery_from_uniforms(spec, y)
    per_edge = np.where(tau <= recovery, tau, np.inf)
    return per_edge[:, net.csr_edge_id]


def sample_batch(net: StaticNetwork, spec: MappingSpec,
                 gen: np.random.Generator, count: int):
    """(weights, recovery-or-None) batch for either mapping kind."""
    if spec.kind == EXACT:
        return sample_exact_batch(net, spec, gen, count)
    return sample_meanfield_batch(net, spec, gen, count), None


@dataclass(frozen=True)
class Snapshot:
    """Per-node S/I/R states observed at one time; source optional (unknown)."""

    states: np.ndarray            # int8 codes per node
    time: float
    source: int | None = None

    def state_of(self, i: int) -> str:
        return STATE_NAMES[int(self.states[i])]

    @property
    def non_susceptible(self) -> np.ndarray:
        return np.flatnonzero(self.states != STATE_S)


def states_from_times(dist: np.ndarray, recovery: np.ndarray, t: float) -> np.ndarray:
    """S where d > t, I where d <= t < d + r, R where d + r <= t."""
    states = np.zeros(dist.shape[0], dtype=np.int8)
    infected = dist <= t
    states[infected] = STATE_I
    states[infected & (dist + recovery <= t)] = STATE_R
    return states


def extract_snapshot(instance: WeightedInstance, source: int, t: float) -> Snapshot:
    """Observed realization at time t for a given source on an exact instance."""
    if instance.recovery is None:
        raise ConfigError("snapshot extraction needs an exact instance: "
                          "mean-field instances carry no recovery durations, "
                          "so infected and recovered cannot be told apart")
    if t < 0:
        raise ValueError("observation time must be non-negative")
    dist = shortest_paths_from(instance, source, t_stop=t)
    return Snapshot(states_from_times(dist, instance.recovery, t), float(t), source)


# ---------------------------------------------------------------------------
# text dump for debugging and cross-run diffing

def dump_instance(instance: WeightedInstance, path) -> None:
    """One directed edge per line (u v weight), recovery list appended."""
    net = instance.network
    src = net.slot_source
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"kind {instance.kind}\n")
        for k in range(net.n_slots):
            w = instance.weights[k]
            w_txt = "inf" if np.isinf(w) else repr(float(w))
            fh.write(f"{src[k]} {net.indices[k]} {w_txt}\n")
        if instance.recovery is not None:
            fh.write("recovery\n")
            for i in range(net.n):
                r = instance.recovery[i]
                r_txt = "inf" if np.isinf(r) else repr(float(r))
                fh.write(f"{i} {r_txt}\n")


def load_instance(net: StaticNetwork, path) -> WeightedInstance:
    weights = np.full(net.n_slots, np.nan)
    recovery = None
    kind = EXACT
    slot_of = {}
    src = net.slot_source
    for k in range(net.n_slots):
        slot_of[(int(src[k]), int(net.indices[k]))] = k
    with open(path, "r", encoding="utf-8") as fh:
        section = "edges"
        for raw in fh:
            parts = raw.split()
            if not parts:
                continue
            if parts[0] == "kind":
                kind = parts[1]
                continue
            if parts[0] == "recovery":
                section = "recovery"
                recovery = np.full(net.n, np.inf)
                continue
            if section == "edges":
                u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
                weights[slot_of[(u, v)]] = w
            else:
                recovery[int(parts[0])] = float(parts[1])
    if np.any(np.isnan(weights)):
        raise ConfigError(f"{path}: missing directed-edge weights")
    return WeightedInstance(net, kind, weights, recovery)
