"""Ensemble-level spreading analysis.

Expected propagation times between node pairs, the per-node characteristic
spreading timescale (the time by which a node's expected reach hits a target
count), mean outbreak curves, and the system-size scaling of the mean
propagation time under weak and strong weight disorder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import InterEventDistribution
from .ensemble import (DEFAULT_CHUNK, EnsembleEstimate, GibbsSampler,
                       map_chunks)
from .errors import ConfigError
from .graphs import (StaticNetwork, erdos_renyi, giant_component,
                     shortest_path_edge_counts, shortest_paths_from)
from .mapping import MappingSpec, sample_batch
from .rng import stream


def _independent_reduce(net: StaticNetwork, spec: MappingSpec, source: int,
                        master_seed: int, n: int, reducer, purpose: str,
                        workers: int = 1, t_stop: float = np.inf,
                        chunk: int = DEFAULT_CHUNK) -> list:
    """Map reducer(distances, recoveries) over chunked instance batches."""

    def run(ci, lo, hi):
        gen = stream(master_seed, purpose, ci)
        weights, recovery = sample_batch(net, spec, gen, hi - lo)
        dist = np.empty((hi - lo, net.n))
        kernels.dijkstra_batch(net.indptr, net.indices, weights,
                               np.int64(source), np.float64(t_stop), dist)
        return reducer(dist, recovery)

    return map_chunks(run, n, workers=workers, chunk=chunk)


def reach_probability(net: StaticNetwork, spec: MappingSpec, source: int,
                      target: int, master_seed: int, n: int,
                      workers: int = 1, purpose: str = "reach") -> EnsembleEstimate:
    """P(target is reached in finite time from source), estimated over n instances."""

    def reducer(dist, _recovery):
        return EnsembleEstimate.from_values(np.isfinite(dist[:, target]).astype(np.float64))

    total = EnsembleEstimate(0, 0.0, 0.0)
    for part in _independent_reduce(net, spec, source, master_seed, n, reducer,
                                    purpose, workers):
        total = total.merge(part)
    return total


def outbreak_curve(net: StaticNetwork, spec: MappingSpec, source: int,
                   time_grid, master_seed: int, n: int, sampler: str = "independent",
                   burn_in: int | None = None, thinning: int | None = None,
                   workers: int = 1, purpose: str = "outbreak") -> EnsembleEstimate:
    """Mean number of nodes reached by each grid time (the source counts itself).

    The grid must be ascending; +inf entries give the late-time outbreak
    size. Returns a vector estimate aligned with the grid.
    """
    grid = np.asarray(time_grid, dtype=np.float64)
    if grid.size == 0 or np.any(np.diff(grid) < 0) or np.any(grid < 0):
        raise ConfigError("time grid must be non-empty, non-negative and ascending")

    def counts_for(dist2d):
        finite = np.isfinite(dist2d)
        return np.array([(finite & (dist2d <= t)).sum(axis=1) for t in grid],
                        dtype=np.float64).T

    if sampler == "gibbs":
        chain = GibbsSampler(net, spec, master_seed, burn_in=burn_in,
                             thinning=thinning, purpose=purpose)
        values = [counts_for(shortest_paths_from(inst, source)[None, :])[0]
                  for inst in chain.samples(n)]
        return EnsembleEstimate.from_values(np.asarray(values))
    if sampler != "independent":
        raise ConfigError(f"sampler must be 'independent' or 'gibbs', got {sampler!r}")

    t_stop = float(grid[-1])

    def reducer(dist, _recovery):
        return EnsembleEstimate.from_values(counts_for(dist))

    total = EnsembleEstimate(0, 0.0, 0.0)
    for part in _independent_reduce(net, spec, source, master_seed, n, reducer,
                                    purpose, workers, t_stop=t_stop):
        total = total.merge(part)
    return total


@dataclass
class PropagationTimeMatrix:
    """Mean pairwise propagation times with per-pair finite-sample counts.

    Entries that were never finite are +inf. In conditional mode the mean is
    taken over reaching instances only and ``reach_prob`` reports the
    per-pair reach frequency.
    """

    matrix: np.ndarray
    n: int
    finite_counts: np.ndarray
    conditional: bool

    @property
    def reach_prob(self) -> np.ndarray:
        return self.finite_counts / self.n


def propagation_matrix(net: StaticNetwork, spec: MappingSpec, master_seed: int,
                       n: int, sampler: str = "independent",
                       conditional: bool = False, burn_in: int | None = None,
                       thinning: int | None = None, workers: int = 1,
                       purpose: str = "propagation") -> PropagationTimeMatrix:
    """Average all-pairs temporal distances over n instances.

    Without recovery the expected propagation time is finite on a connected
    graph and the plain mean is reported. With recovery present the
    unconditional mean is infinite, so ``conditional=True`` is required and
    means are taken over the reaching instances per pair.
    """
    if spec.phi is not None and not conditional:
        raise ConfigError(
            "unconditional expected propagation times are infinite when recovery "
            "is enabled (unreached pairs contribute infinite distances); pass "
            "conditional=True to average over reaching instances only")

    sums = np.zeros((net.n, net.n))
    counts = np.zeros((net.n, net.n), dtype=np.int64)
    sources = np.arange(net.n, dtype=np.int64)

    def accumulate(weights_rows):
        dist = np.empty((net.n, net.n))
        for w in weights_rows:
            kernels.dijkstra_sources(net.indptr, net.indices, w, sources, dist)
            finite = np.isfinite(dist)
            counts[finite] += 1
            sums[finite] += dist[finite]

    if sampler == "independent":
        def run(ci, lo, hi):
            gen = stream(master_seed, purpose, ci)
            weights, _ = sample_batch(net, spec, gen, hi - lo)
            return weights

        for weights in map_chunks(run, n, workers=workers):
            accumulate(weights)
    elif sampler == "gibbs":
        chain = GibbsSampler(net, spec, master_seed, burn_in=burn_in,
                             thinning=thinning, purpose=purpose)
        for inst in chain.samples(n):
            accumulate(inst.weights[None, :])
    else:
        raise ConfigError(f"sampler must be 'independent' or 'gibbs', got {sampler!r}")

    with np.errstate(invalid="ignore"):
        matrix = np.where(counts > 0, sums / np.maximum(counts, 1), np.inf)
    np.fill_diagonal(matrix, 0.0)
    return PropagationTimeMatrix(matrix=matrix, n=n, finite_counts=counts,
                                 conditional=spec.phi is not None)


@dataclass
class TimescaleRanking:
    """Per-node characteristic spreading timescales and the induced ordering."""

    tau: np.ndarray
    n_bar: int
    ordering: np.ndarray


def characteristic_timescale(prop: PropagationTimeMatrix, n_bar: int) -> TimescaleRanking:
    """Earliest time by which a node's expected reach covers n_bar other nodes.

    Realized as the n_bar-th smallest off-diagonal entry of the node's row
    (time-at-threshold counts a boundary hit, matching the closed reach
    convention); +inf when fewer than n_bar entries are finite. Ties in the
    ordering break by node index.
    """
    n = prop.matrix.shape[0]
    if not 1 <= n_bar <= n - 1:
        raise ConfigError(f"threshold count must lie in [1, {n - 1}], got {n_bar}")
    tau = np.empty(n)
    for i in range(n):
        row = np.delete(prop.matrix[i], i)
        finite = np.sort(row[np.isfinite(row)])
        tau[i] = finite[n_bar - 1] if finite.size >= n_bar else np.inf
    ordering = np.lexsort((np.arange(n), tau))
    return TimescaleRanking(tau=tau, n_bar=int(n_bar), ordering=ordering)


@dataclass
class DisorderScalingReport:
    """Mean optimal-path length per system size plus model-fit residuals.

    ``mean_distance`` counts edges along minimum-delay paths: that is the
    observable with clean weak/strong scaling. Raw delay sums are kept in
    ``mean_delay`` for reference, but under strong disorder their mean is
    dominated by rare huge edge weights and carries no usable size signal.
    """

    sizes: np.ndarray
    mean_distance: np.ndarray
    stderr: np.ndarray
    mean_delay: np.ndarray
    coef_log: float
    residual_log: float
    coef_cbrt: float
    residual_cbrt: float

    @property
    def better_model(self) -> str:
        return "log" if self.residual_log <= self.residual_cbrt else "n^(1/3)"


def _proportional_fit(f: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    coef = float(np.dot(f, y) / np.dot(f, f))
    return coef, float(np.sum((y - coef * f) ** 2))


def disorder_scaling(sizes, mean_degree: float, weight_dist: InterEventDistribution,
                     master_seed: int, n_instances: int,
                     workers: int = 1) -> DisorderScalingReport:
    """Optimal-path scaling vs system size under i.i.d. edge weights.

    For each size, n_instances random graphs are drawn, each with fresh
    i.i.d. weights; minimum-delay paths from a random giant-component source
    to the rest of the giant component are measured in edges and averaged.
    Both candidate scaling models (proportional to log N and to N^(1/3)) are
    fit by least squares and their residuals compared.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.size < 3:
        raise ConfigError("scaling fit needs at least 3 system sizes")
    if np.any(np.diff(sizes) <= 0):
        raise ConfigError("system sizes must be strictly ascending")

    mean_d = np.empty(sizes.size)
    se = np.empty(sizes.size)
    mean_delay = np.empty(sizes.size)
    for si, size in enumerate(sizes):
        def run(ci, lo, hi, size=size, si=si):
            values = []
            for k in range(lo, hi):
                gen = stream(master_seed, "disorder", si, k)
                graph_seed = int(gen.integers(2 ** 62))
                net = erdos_renyi(int(size), mean_degree, graph_seed)
                giant = giant_component(net)
                if giant.size < max(3, 0.05 * net.n):
                    raise ConfigError(
                        f"no giant component at n={size}, mean degree {mean_degree}")
                per_edge = np.asarray(
                    weight_dist.inverse_cdf(1.0 - gen.random(net.n_edges)),
                    dtype=np.float64)
                weights = per_edge[net.csr_edge_id]
                source = int(giant[int(gen.integers(giant.size))])
                dist = np.empty(net.n)
                cap = net.n_slots + 1
                kernels.dijkstra(net.indptr, net.indices, weights,
                                 np.int64(source), np.float64(np.inf), dist,
                                 np.empty(cap, dtype=np.int64),
                                 np.empty(cap, dtype=np.float64),
                                 np.empty(net.n, dtype=np.bool_))
                hops = shortest_path_edge_counts(net, weights, source, dist)
                targets = giant[giant != source]
                values.append((float(hops[targets].mean()),
                               float(dist[targets].mean())))
            return values

        chunks = map_chunks(run, n_instances, workers=workers, chunk=8)
        values = np.asarray([v for part in chunks for v in part])
        est = EnsembleEstimate.from_values(values[:, 0])
        mean_d[si] = est.mean
        se[si] = est.stderr
        mean_delay[si] = values[:, 1].mean()

    coef_log, res_log = _proportional_fit(np.log(sizes.astype(np.float64)), mean_d)
    coef_cbrt, res_cbrt = _proportional_fit(sizes.astype(np.float64) ** (1.0 / 3.0), mean_d)
    return DisorderScalingReport(sizes=sizes, mean_distance=mean_d, stderr=se,
                                 mean_delay=mean_delay,
                                 coef_log=coef_log, residual_log=res_log,
                                 coef_cbrt=coef_cbrt, residual_cbrt=res_cbrt)
