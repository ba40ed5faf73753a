"""Ensemble construction and estimation over weighted instances.

Observables are averaged over n sampled instances, either drawn
independently or along a rejection-free Gibbs chain whose moves resample one
node's out-neighbourhood (exact mapping) or one edge (mean-field mapping).
Sampling is chunked with counter-based streams keyed by chunk index, so
estimates are bit-reproducible at any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError
from .graphs import StaticNetwork
from .mapping import (EXACT, MEAN_FIELD, MappingSpec, WeightedInstance,
                      sample_instance)
from .rng import stream, uniform_open_closed

DEFAULT_CHUNK = 1024


@dataclass
class EnsembleEstimate:
    """Running mean/variance accumulator (Welford form, mergeable)."""

    n: int
    mean: np.ndarray | float
    m2: np.ndarray | float

    @classmethod
    def from_values(cls, values) -> "EnsembleEstimate":
        values = np.asarray(values, dtype=np.float64)
        n = values.shape[0]
        mean = values.mean(axis=0)
        m2 = ((values - mean) ** 2).sum(axis=0)
        return cls(n=n, mean=mean, m2=m2)

    def merge(self, other: "EnsembleEstimate") -> "EnsembleEstimate":
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        n = self.n + other.n
        delta = np.asarray(other.mean) - np.asarray(self.mean)
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta ** 2 * (self.n * other.n / n)
        return EnsembleEstimate(n=n, mean=mean, m2=m2)

    @property
    def variance(self):
        if self.n < 2:
            return np.full_like(np.asarray(self.mean, dtype=np.float64), np.nan)
        return self.m2 / (self.n - 1)

    @property
    def stderr(self):
        if self.n < 2:
            return np.full_like(np.asarray(self.mean, dtype=np.float64), np.nan)
        return np.sqrt(self.m2 / (self.n * (self.n - 1)))


def chunk_ranges(n: int, chunk: int = DEFAULT_CHUNK):
    """Fixed chunk decomposition of range(n); independent of worker count."""
    for ci, lo in enumerate(range(0, n, chunk)):
        yield ci, lo, min(n, lo + chunk)


def map_chunks(fn, n: int, workers: int = 1, chunk: int = DEFAULT_CHUNK) -> list:
    """Apply fn(chunk_index, lo, hi) over fixed chunks, results in chunk order."""
    ranges = list(chunk_ranges(n, chunk))
    if workers <= 1 or len(ranges) <= 1:
        return [fn(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *r) for r in ranges]
        return [f.result() for f in futures]


class IndependentSampler:
    """Draws instances independently; chunk c uses stream (purpose, c)."""

    def __init__(self, net: StaticNetwork, spec: MappingSpec, master_seed: int,
                 purpose: str = "instances", chunk: int = DEFAULT_CHUNK):
        self.net = net
        self.spec = spec
        self.master_seed = master_seed
        self.purpose = purpose
        self.chunk = chunk

    def chunk_generator(self, chunk_index: int) -> np.random.Generator:
        return stream(self.master_seed, self.purpose, chunk_index)

    def estimate(self, f, n: int, workers: int = 1) -> EnsembleEstimate:
        def run(ci, lo, hi):
            gen = self.chunk_generator(ci)
            values = [f(sample_instance(self.net, self.spec, gen))
                      for _ in range(hi - lo)]
            return EnsembleEstimate.from_values(np.asarray(values, dtype=np.float64))

        parts = map_chunks(run, n, workers=workers, chunk=self.chunk)
        total = EnsembleEstimate(0, 0.0, 0.0)
        for part in parts:
            total = total.merge(part)
        return total


@dataclass
class ChainState:
    """Current instance of a Gibbs chain plus step bookkeeping."""

    current: WeightedInstance
    step_count: int = 0
    burn_in: int = 0
    thinning: int = 1
    last_changed: list = field(default_factory=list)  # (u, v, old_weight) triples


def gibbs_step_exact(state: ChainState, net: StaticNetwork, spec: MappingSpec,
                     gen: np.random.Generator) -> ChainState:
    """Resample one node's recovery and all its outgoing delays.

    The node's recovery variate couples every outgoing edge, so the whole
    out-neighbourhood must be redrawn together to preserve the joint law.
    """
    inst = state.current
    if inst.kind != EXACT:
        raise ConfigError("exact chain step applied to a non-exact instance")
    i = int(gen.integers(net.n))
    lo, hi = int(net.indptr[i]), int(net.indptr[i + 1])
    y = uniform_open_closed(gen, None)
    if spec.phi is None:
        r_new = np.inf
    else:
        r_new = float(spec.phi.inverse_cdf(y))
    x = uniform_open_closed(gen, hi - lo)
    tau = np.asarray(spec.psi.inverse_cdf(x), dtype=np.float64)
    new_w = np.where(tau <= r_new, tau, np.inf)
    changed = [(i, int(net.indices[k]), float(inst.weights[k]))
               for k in range(lo, hi)]
    inst.recovery[i] = r_new
    inst.weights[lo:hi] = new_w
    state.step_count += 1
    state.last_changed = changed
    return state


def gibbs_step_meanfield(state: ChainState, net: StaticNetwork, spec: MappingSpec,
                         gen: np.random.Generator) -> ChainState:
    """Resample one undirected edge's symmetric weight."""
    inst = state.current
    if inst.kind != MEAN_FIELD:
        raise ConfigError("mean-field chain step applied to a non-mean-field instance")
    e = int(gen.integers(net.n_edges))
    x = uniform_open_closed(gen, None)
    y = uniform_open_closed(gen, None)
    tau = float(spec.psi.inverse_cdf(x))
    r = np.inf if spec.phi is None else float(spec.phi.inverse_cdf(y))
    w_new = tau if tau <= r else np.inf
    s0, s1 = net.edge_slots[e]
    u, v = net.edges[e]
    changed = [(int(u), int(v), float(inst.weights[s0])),
               (int(v), int(u), float(inst.weights[s1]))]
    inst.weights[s0] = w_new
    inst.weights[s1] = w_new
    state.step_count += 1
    state.last_changed = changed
    return state


class GibbsSampler:
    """Sequential chain sampler with burn-in and thinning.

    Defaults: burn-in 10*E steps and thinning E steps, so a thinned sample
    has in expectation touched every edge.
    """

    def __init__(self, net: StaticNetwork, spec: MappingSpec, master_seed: int,
                 burn_in: int | None = None, thinning: int | None = None,
                 chain_index: int = 0, purpose: str = "gibbs"):
        self.net = net
        self.spec = spec
        self.master_seed = master_seed
        self.burn_in = 10 * net.n_edges if burn_in is None else int(burn_in)
        self.thinning = max(1, net.n_edges if thinning is None else int(thinning))
        self.chain_index = chain_index
        self.purpose = purpose
        self._step = gibbs_step_exact if spec.kind == EXACT else gibbs_step_meanfield

    def start(self) -> tuple[ChainState, np.random.Generator]:
        init_gen = stream(self.master_seed, self.purpose + "-init", self.chain_index)
        state = ChainState(sample_instance(self.net, self.spec, init_gen),
                           burn_in=self.burn_in, thinning=self.thinning)
        gen = stream(self.master_seed, self.purpose + "-steps", self.chain_index)
        return state, gen

    def samples(self, n: int):
        """Yield n thinned post-burn-in instances (the live chain object)."""
        state, gen = self.start()
        for _ in range(self.burn_in):
            self._step(state, self.net, self.spec, gen)
        for _ in range(n):
            for _ in range(self.thinning):
                self._step(state, self.net, self.spec, gen)
            yield state.current

    def estimate(self, f, n: int, workers: int = 1) -> EnsembleEstimate:
        values = [f(inst) for inst in self.samples(n)]
        return EnsembleEstimate.from_values(np.asarray(values, dtype=np.float64))


def estimate(sampler, f, n: int, workers: int = 1) -> EnsembleEstimate:
    """Mean of f over n sampled instances with running variance."""
    if n < 1:
        raise ConfigError("sample count must be at least 1")
    return sampler.estimate(f, n, workers=workers)


def make_sampler(net: StaticNetwork, spec: MappingSpec, master_seed: int,
                 kind: str = "independent", burn_in: int | None = None,
                 thinning: int | None = None, purpose: str = "instances"):
    if kind == "independent":
        return IndependentSampler(net, spec, master_seed, purpose=purpose)
    if kind == "gibbs":
        return GibbsSampler(net, spec, master_seed, burn_in=burn_in,
                            thinning=thinning, purpose=purpose)
    raise ConfigError(f"sampler must be 'independent' or 'gibbs', got {kind!r}")


def affected_rows(prev: np.ndarray, changed, instance: WeightedInstance) -> np.ndarray:
    """Sources whose stored distance row may be stale after the given edge changes.

    A row is kept when no decreased edge can relax under the stored distances
    and no increased edge was tight on them; anything else is flagged.
    """
    net = instance.network
    affected = np.zeros(net.n, dtype=bool)
    for u, v, old_w in changed:
        lo, hi = net.indptr[u], net.indptr[u + 1]
        k = lo + int(np.searchsorted(net.indices[lo:hi], v))
        new_w = instance.weights[k]
        if new_w == old_w:
            continue
        du = prev[:, u]
        dv = prev[:, v]
        usable = np.isfinite(du)
        if new_w < old_w:
            affected |= usable & (du + new_w < dv)
        else:
            affected |= usable & (du + old_w == dv)
    return np.flatnonzero(affected)


def recompute_affected(prev: np.ndarray, changed, instance: WeightedInstance) -> np.ndarray:
    """All-pairs distances after a chain step, recomputing only rows that may move.

    ``changed`` lists (u, v, old_weight) for every directed edge the step
    redrew; correctness over speed, so any doubt triggers a fresh
    single-source run for that row. The result always equals a full
    recomputation.
    """
    net = instance.network
    rows = affected_rows(prev, changed, instance)
    out = prev.copy()
    if rows.size:
        fresh = np.empty((rows.size, net.n))
        kernels.dijkstra_sources(net.indptr, net.indices, instance.weights,
                                 rows.astype(np.int64), fresh)
        out[rows] = fresh
    return out
