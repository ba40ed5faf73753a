"""Source detection and time-critical vaccination.

Source detection scores every candidate (non-susceptible node of the
observed snapshot) by one of three estimators: the temporal-distance kernel
estimator over sampled weighted instances, a direct Monte Carlo exact-match
count from forward simulations, and an inverse mean topological distance
baseline. Vaccination estimates each node's probability of still being
susceptible when delayed vaccines kick in, and compares allocation
strategies in paired simulation trials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .ensemble import EnsembleEstimate, map_chunks
from .errors import ConfigError, EstimationError
from .graphs import StaticNetwork, hop_distances
from .mapping import (EXACT, MappingSpec, Snapshot, STATE_CODES, STATE_NAMES,
                      STATE_S, sample_exact_batch)
from .rng import stream
from .simulate import (advance_discrete, discrete_infection_times, init_state,
                       states_at)

DEFAULT_BANDWIDTH = 0.125


def similarity(a: Snapshot, b: Snapshot) -> float:
    """Fraction of nodes with equal S/I/R state in two snapshots."""
    if a.states.shape != b.states.shape:
        raise ValueError("snapshots cover different node sets")
    if a.time != b.time:
        raise ValueError("snapshots taken at different observation times")
    return float(np.mean(a.states == b.states))


@dataclass
class SourceScores:
    """Normalized per-candidate source likelihood estimates."""

    method: str
    candidates: np.ndarray
    scores: np.ndarray
    raw: np.ndarray
    n: int

    def full_vector(self, n_nodes: int) -> np.ndarray:
        out = np.zeros(n_nodes)
        out[self.candidates] = self.scores
        return out

    def best(self) -> int:
        return int(self.candidates[int(np.argmax(self.scores))])


def _candidates_of(observed: Snapshot) -> np.ndarray:
    cands = observed.non_susceptible
    if cands.size == 0:
        raise ConfigError("snapshot has no infected or recovered nodes; "
                          "there is nothing to locate")
    return cands.astype(np.int64)


def source_detect_temporal(net: StaticNetwork, spec: MappingSpec, observed: Snapshot,
                           master_seed: int, n: int,
                           bandwidth: float = DEFAULT_BANDWIDTH,
                           workers: int = 1,
                           purpose: str = "source-temporal") -> SourceScores:
    """Gaussian-kernel estimator over snapshot similarities.

    Each candidate's score accumulates exp(-(phi - 1)^2 / a^2) over n exact
    instances, where phi is the similarity between the candidate's extracted
    snapshot and the observation.
    """
    if spec.kind != EXACT:
        raise ConfigError("temporal source detection needs the exact mapping "
                          "(snapshot extraction requires recovery durations)")
    if bandwidth <= 0:
        raise ConfigError("kernel bandwidth must be positive")
    cands = _candidates_of(observed)
    observed_states = observed.states.astype(np.int8)
    inv_a2 = 1.0 / (bandwidth * bandwidth)
    t_obs = float(observed.time)

    def run(ci, lo, hi):
        gen = stream(master_seed, purpose, ci)
        weights, recovery = sample_exact_batch(net, spec, gen, hi - lo)
        scores = np.zeros(cands.size)
        kernels.temporal_score_chunk(net.indptr, net.indices, weights, recovery,
                                     cands, observed_states, np.float64(t_obs),
                                     np.float64(inv_a2), scores)
        return scores

    total = np.zeros(cands.size)
    for part in map_chunks(run, n, workers=workers):
        total += part
    mass = total.sum()
    if mass <= 0.0:
        raise EstimationError("all similarity kernels underflowed to zero; "
                              "increase the bandwidth or the sample count")
    return SourceScores("temporal", cands, total / mass, total, n)


def source_detect_direct_mc(net: StaticNetwork, beta: float, gamma: float,
                            observed: Snapshot, master_seed: int,
                            n_per_candidate: int, workers: int = 1,
                            allow_zero: bool = False,
                            purpose: str = "source-mc") -> SourceScores:
    """Exact-match counting: score is the number of forward simulations from
    each candidate that reproduce the observed configuration exactly.

    Only meaningful in discrete time, where configurations carry atoms. When
    no simulation matches, the estimator is uninformative: by default that
    raises, but ``allow_zero`` returns uniform scores instead (rank ties are
    then resolved downstream).
    """
    t_obs = float(observed.time)
    if not (t_obs > 0 and t_obs.is_integer()):
        raise ConfigError("direct Monte Carlo matching needs a positive integer "
                          "observation time (discrete dynamics)")
    steps = int(t_obs)
    cands = _candidates_of(observed)
    counts = np.zeros(cands.size)

    for idx, cand in enumerate(cands):
        def run(ci, lo, hi, cand=cand, idx=idx):
            gen = stream(master_seed, purpose, idx, ci)
            t_inf, t_rec = discrete_infection_times(net, beta, gamma, int(cand),
                                                    gen, hi - lo, steps)
            infected = t_inf <= t_obs
            states = np.where(infected, np.where(t_rec <= t_obs, 2, 1), 0)
            return int((states == observed.states[None, :]).all(axis=1).sum())

        counts[idx] = sum(map_chunks(run, n_per_candidate, workers=workers,
                                     chunk=4096))
    total = counts.sum()
    if total <= 0:
        if not allow_zero:
            raise EstimationError("no simulation matched the observed snapshot; "
                                  "increase the per-candidate simulation count")
        scores = np.full(cands.size, 1.0 / cands.size)
        return SourceScores("direct-mc", cands, scores, counts, n_per_candidate)
    return SourceScores("direct-mc", cands, counts / total, counts, n_per_candidate)


def source_detect_topological(net: StaticNetwork, observed: Snapshot) -> SourceScores:
    """Inverse mean hop distance from each candidate to the other non-susceptible
    nodes; candidates that cannot reach some of them are excluded."""
    cands = _candidates_of(observed)
    raw = np.zeros(cands.size)
    if cands.size == 1:
        return SourceScores("topological", cands, np.ones(1), np.ones(1), 0)
    for idx, cand in enumerate(cands):
        hops = hop_distances(net, int(cand))
        others = hops[cands[cands != cand]]
        mean_d = float(others.mean())
        if np.isfinite(mean_d) and mean_d > 0:
            raw[idx] = 1.0 / mean_d
    total = raw.sum()
    if total <= 0:
        raise EstimationError("every candidate is disconnected from the rest "
                              "of the observed outbreak")
    return SourceScores("topological", cands, raw / total, raw, 0)


# ---------------------------------------------------------------------------
# vaccination

def vaccination_survival(net: StaticNetwork, spec: MappingSpec, source: int,
                         t0: float, delta_t: float, master_seed: int, n: int,
                         workers: int = 1,
                         purpose: str = "survival") -> np.ndarray:
    """Per-node probability of not being infected before t0 + delta_t.

    Counted as the fraction of instances whose temporal distance from the
    source is at least t0 + delta_t (a boundary hit counts as safe).
    """
    if t0 < 0 or delta_t < 0:
        raise ConfigError("t0 and delta_t must be non-negative")
    threshold = float(t0 + delta_t)

    def run(ci, lo, hi):
        from .mapping import sample_batch
        gen = stream(master_seed, purpose, ci)
        weights, _ = sample_batch(net, spec, gen, hi - lo)
        dist = np.empty((hi - lo, net.n))
        kernels.dijkstra_batch(net.indptr, net.indices, weights, np.int64(source),
                               np.float64(threshold), dist)
        return (~(dist < threshold)).sum(axis=0).astype(np.float64)

    total = np.zeros(net.n)
    for part in map_chunks(run, n, workers=workers):
        total += part
    return total / n


def weighted_sample_without_replacement(gen: np.random.Generator, items: np.ndarray,
                                        weights: np.ndarray, m: int) -> np.ndarray:
    """Draw m distinct items with probability proportional to weight.

    If fewer than m items have positive weight, all of them are taken and the
    remainder is filled uniformly from the zero-weight items.
    """
    if m > items.size:
        raise ConfigError(f"cannot draw {m} items from {items.size}")
    positive = weights > 0
    n_pos = int(positive.sum())
    if n_pos >= m:
        p = weights[positive] / weights[positive].sum()
        return np.sort(gen.choice(items[positive], size=m, replace=False, p=p))
    chosen = list(items[positive])
    rest = items[~positive]
    fill = gen.choice(rest, size=m - n_pos, replace=False)
    return np.sort(np.concatenate((chosen, fill)).astype(items.dtype))


def _discrete_rates(spec: MappingSpec) -> tuple[float, float]:
    from .distributions import Geometric
    if not isinstance(spec.psi, Geometric):
        raise ConfigError("vaccination trials run in discrete time; the "
                          "transmission distribution must be geometric")
    if spec.phi is None:
        return spec.psi.p, 0.0
    if not isinstance(spec.phi, Geometric):
        raise ConfigError("vaccination trials run in discrete time; the "
                          "recovery distribution must be geometric")
    return spec.psi.p, spec.phi.p


STRATEGIES = ("temporal", "random", "hubs")


@dataclass
class VaccinationOutcome:
    """Per-strategy cumulative-infected curves over a shared time grid."""

    strategy: str
    grid: np.ndarray
    curve: EnsembleEstimate
    final_counts: np.ndarray   # per-trial totals, paired across strategies
    survival: np.ndarray | None


def vaccination_run(net: StaticNetwork, spec: MappingSpec, source: int,
                    t0: int, delta_t: int, m: int, strategy: str,
                    master_seed: int, n_trials: int, horizon: int,
                    survival: np.ndarray | None = None, top_m: bool = False,
                    survival_samples: int = 2000, paired: bool = True,
                    workers: int = 1) -> VaccinationOutcome:
    """Simulate delayed vaccination of m susceptible nodes chosen at t0.

    Vaccines take effect at t0 + delta_t: a vaccinated node infected before
    then behaves like any infected node (the dose is wasted); one still
    susceptible at the effective time can never be infected afterwards.
    With ``paired`` on (the default), trials with the same index share their
    epidemic randomness across strategies, sharpening comparisons.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    beta, gamma = _discrete_rates(spec)
    if strategy == "temporal" and survival is None:
        survival = vaccination_survival(net, spec, source, t0, delta_t,
                                        master_seed, survival_samples,
                                        workers=workers)
    grid = np.arange(0, horizon + 1, dtype=np.float64)
    degrees = net.degrees.astype(np.float64)
    trial_purpose = "vacc-trial" if paired else f"vacc-trial-{strategy}"

    def run_chunk(ci, lo, hi):
        curves = np.empty((hi - lo, grid.size))
        finals = np.empty(hi - lo)
        for k in range(lo, hi):
            trial_gen = stream(master_seed, trial_purpose, k)
            state = init_state(net, source)
            advance_discrete(state, net, beta, gamma, trial_gen, max_steps=t0)
            sus = np.flatnonzero(state.states == STATE_S).astype(np.int64)
            if m > sus.size:
                raise ConfigError(f"cannot vaccinate {m} nodes: only {sus.size} "
                                  f"susceptible at t0={t0}")
            if m > 0:
                choice_gen = stream(master_seed, f"vacc-choice-{strategy}", k)
                if strategy == "random":
                    chosen = np.sort(choice_gen.choice(sus, size=m, replace=False))
                elif strategy == "hubs":
                    chosen = weighted_sample_without_replacement(
                        choice_gen, sus, degrees[sus], m)
                elif top_m:
                    order = np.lexsort((sus, -survival[sus]))
                    chosen = np.sort(sus[order[:m]])
                else:
                    chosen = weighted_sample_without_replacement(
                        choice_gen, sus, survival[sus], m)
                state.protected_until[chosen] = float(t0 + delta_t)
            advance_discrete(state, net, beta, gamma, trial_gen, max_steps=None)
            infected_at = state.t_inf
            curves[k - lo] = (infected_at[None, :] <= grid[:, None]).sum(axis=1)
            finals[k - lo] = np.isfinite(infected_at).sum()
        return curves, finals

    parts = map_chunks(run_chunk, n_trials, workers=workers, chunk=32)
    curves = np.concatenate([p[0] for p in parts], axis=0)
    finals = np.concatenate([p[1] for p in parts])
    return VaccinationOutcome(strategy=strategy, grid=grid,
                              curve=EnsembleEstimate.from_values(curves),
                              final_counts=finals, survival=survival)


def vaccination_compare(net: StaticNetwork, spec: MappingSpec, source: int,
                        t0: int, delta_t: int, m: int, master_seed: int,
                        n_trials: int, horizon: int,
                        strategies=STRATEGIES, top_m: bool = False,
                        survival_samples: int = 2000, paired: bool = True,
                        workers: int = 1) -> dict[str, VaccinationOutcome]:
    """Run all strategies, sharing trial randomness when ``paired``."""
    survival = None
    if "temporal" in strategies:
        survival = vaccination_survival(net, spec, source, t0, delta_t,
                                        master_seed, survival_samples,
                                        workers=workers)
    out = {}
    for strategy in strategies:
        out[strategy] = vaccination_run(net, spec, source, t0, delta_t, m,
                                        strategy, master_seed, n_trials, horizon,
                                        survival=survival, top_m=top_m,
                                        paired=paired, workers=workers)
    return out


# ---------------------------------------------------------------------------
# evaluation harness: many observed realizations from a known source

@dataclass
class DetectionEvaluation:
    """Aggregated comparison of the three estimators over observed realizations.

    ``rank_cdf[method][r-1]`` is the fraction of realizations in which the
    true source landed within the method's top r candidates. The shared-rank
    probability curves order candidates by the direct Monte Carlo score
    (temporal score breaking ties) and average each method's normalized
    scores at those positions; short candidate lists are nan-padded.
    """

    n_realizations: int
    true_source: int
    rank_grid: np.ndarray
    rank_cdf: dict
    rank_counts: dict
    shared_rank_mean: dict
    shared_rank_std: dict
    spearman_temporal_mc: np.ndarray

    def dominates(self, method_a: str, method_b: str) -> bool:
        """Weak dominance of a's rank CDF over b's, strict somewhere."""
        a, b = self.rank_cdf[method_a], self.rank_cdf[method_b]
        return bool(np.all(a >= b) and np.any(a > b))


def _rank_of(order: np.ndarray, cands: np.ndarray, node: int) -> int:
    position = np.flatnonzero(cands[order] == node)
    return int(position[0]) + 1 if position.size else len(order) + 1


def source_detection_evaluation(net: StaticNetwork, beta: float, gamma: float,
                                true_source: int, t_obs: int,
                                n_realizations: int, master_seed: int,
                                n_temporal: int = 20_000,
                                n_mc_per_candidate: int = 10_000,
                                bandwidth: float = DEFAULT_BANDWIDTH,
                                workers: int = 1) -> DetectionEvaluation:
    """Generate observed realizations from a known source and score all methods."""
    from .distributions import Geometric
    spec = MappingSpec(Geometric(beta), Geometric(gamma) if gamma > 0 else None, EXACT)
    methods = ("temporal", "direct-mc", "topological")
    ranks = {m: [] for m in methods}
    shared_curves = {m: [] for m in methods}
    spearman = np.full(n_realizations, np.nan)
    from scipy.stats import spearmanr

    for r in range(n_realizations):
        gen = stream(master_seed, "sd-observed", r)
        state = init_state(net, true_source)
        advance_discrete(state, net, beta, gamma, gen, max_steps=t_obs)
        observed = Snapshot(states_at(state, float(t_obs)), float(t_obs), None)

        temporal = source_detect_temporal(net, spec, observed, master_seed,
                                          n_temporal, bandwidth, workers=workers,
                                          purpose=f"sd-temporal-{r}")
        direct = source_detect_direct_mc(net, beta, gamma, observed, master_seed,
                                         n_mc_per_candidate, workers=workers,
                                         allow_zero=True, purpose=f"sd-mc-{r}")
        topo = source_detect_topological(net, observed)
        cands = temporal.candidates

        shared_order = np.lexsort((cands, -temporal.scores, -direct.raw))
        own_order = {
            "temporal": np.lexsort((cands, -temporal.scores)),
            "direct-mc": shared_order,
            "topological": np.lexsort((cands, -topo.scores)),
        }
        scores = {"temporal": temporal.scores, "direct-mc": direct.scores,
                  "topological": topo.scores}
        for m in methods:
            ranks[m].append(_rank_of(own_order[m], cands, true_source))
            shared_curves[m].append(scores[m][shared_order])
        if np.ptp(temporal.scores) > 0 and np.ptp(direct.raw) > 0:
            spearman[r] = spearmanr(temporal.scores, direct.raw).statistic

    max_len = max(len(c) for c in shared_curves["temporal"])
    rank_grid = np.arange(1, max_len + 1)
    rank_cdf, rank_counts = {}, {}
    shared_mean, shared_std = {}, {}
    for m in methods:
        rk = np.asarray(ranks[m])
        rank_counts[m] = rk
        rank_cdf[m] = np.array([(rk <= r).mean() for r in rank_grid])
        padded = np.full((n_realizations, max_len), np.nan)
        for i, c in enumerate(shared_curves[m]):
            padded[i, :len(c)] = c
        shared_mean[m] = np.nanmean(padded, axis=0)
        shared_std[m] = np.nanstd(padded, axis=0)
    return DetectionEvaluation(n_realizations=n_realizations, true_source=true_source,
                               rank_grid=rank_grid, rank_cdf=rank_cdf,
                               rank_counts=rank_counts, shared_rank_mean=shared_mean,
                               shared_rank_std=shared_std,
                               spearman_temporal_mc=spearman)


# ---------------------------------------------------------------------------
# snapshot files

def write_snapshot(net: StaticNetwork, snap: Snapshot, path) -> None:
    """Header line with the observation time, then one 'label STATE' per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"time {snap.time!r}\n")
        for i in range(net.n):
            fh.write(f"{net.labels[i]} {STATE_NAMES[int(snap.states[i])]}\n")


def read_snapshot(net: StaticNetwork, path) -> Snapshot:
    states = np.full(net.n, -1, dtype=np.int8)
    time = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "time" and len(parts) == 2 and time is None:
                time = float(parts[1])
                continue
            if len(parts) != 2 or parts[1] not in STATE_CODES:
                raise ConfigError(f"{path}:{lineno}: expected 'label S|I|R'")
            states[net.id_of(parts[0])] = STATE_CODES[parts[1]]
    if time is None:
        raise ConfigError(f"{path}: missing 'time <t>' header line")
    if np.any(states < 0):
        missing = [net.labels[i] for i in np.flatnonzero(states < 0)[:5]]
        raise ConfigError(f"{path}: snapshot misses states for nodes {missing}")
    return Snapshot(states, time, None)
