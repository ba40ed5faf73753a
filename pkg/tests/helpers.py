"""Shared test oracles: brute-force shortest paths, exhaustive graph and
trajectory enumeration, and statistical assertion helpers."""

from __future__ import annotations

import itertools
import math

import numpy as np

from tempomap.graphs import StaticNetwork, build_network


def brute_force_distances(net: StaticNetwork, weights: np.ndarray,
                          source: int) -> np.ndarray:
    """Minimum path weight by exhaustive simple-path enumeration."""
    slot_weight = {}
    src = net.slot_source
    for k in range(net.n_slots):
        slot_weight[(int(src[k]), int(net.indices[k]))] = float(weights[k])
    best = np.full(net.n, np.inf)
    best[source] = 0.0

    def walk(node, used, total):
        for nxt in net.neighbors(node):
            nxt = int(nxt)
            if nxt in used:
                continue
            w = slot_weight[(node, nxt)]
            if not math.isfinite(w):
                continue
            t = total + w
            if t < best[nxt]:
                best[nxt] = t
            walk(nxt, used | {nxt}, t)

    walk(source, {source}, 0.0)
    return best


def all_connected_graphs(n: int) -> list[list[tuple[int, int]]]:
    """Non-isomorphic connected graphs on n labelled nodes (canonical reps)."""
    pairs = list(itertools.combinations(range(n), 2))
    seen = set()
    out = []
    for mask in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in edges:
            parent[find(u)] = find(v)
        if len({find(i) for i in range(n)}) != 1:
            continue
        canon = min(
            tuple(sorted((min(p[u], p[v]), max(p[u], p[v])) for u, v in edges))
            for p in itertools.permutations(range(n)))
        if canon not in seen:
            seen.add(canon)
            out.append([tuple(e) for e in canon])
    return out


def net_from_edges(n: int, edges) -> StaticNetwork:
    return build_network(n, edges)


def discrete_config_distribution(net: StaticNetwork, beta: float, gamma: float,
                                 source: int, steps: int) -> dict:
    """Exact configuration distribution of the discrete SIR process.

    Configurations are tuples of 0/1/2 codes. Transitions: susceptible j is
    hit with probability 1-(1-beta)^{#infected neighbours}, infected nodes
    recover with probability gamma, new infections activate next step.
    """
    start = [0] * net.n
    start[source] = 1
    dist = {tuple(start): 1.0}
    for _ in range(steps):
        new_dist = {}
        for config, prob in dist.items():
            s_nodes = [j for j in range(net.n) if config[j] == 0]
            i_nodes = [j for j in range(net.n) if config[j] == 1]
            p_hit = {}
            for j in s_nodes:
                m = sum(1 for v in net.neighbors(j) if config[int(v)] == 1)
                p_hit[j] = 1.0 - (1.0 - beta) ** m
            movers = [j for j in s_nodes if p_hit[j] > 0] + i_nodes
            for outcome in itertools.product((0, 1), repeat=len(movers)):
                q = prob
                nxt = list(config)
                for j, flip in zip(movers, outcome):
                    if config[j] == 0:
                        if flip:
                            q *= p_hit[j]
                            nxt[j] = 1
                        else:
                            q *= 1.0 - p_hit[j]
                    else:
                        if flip:
                            q *= gamma
                            nxt[j] = 2
                        else:
                            q *= 1.0 - gamma
                if q > 0:
                    key = tuple(nxt)
                    new_dist[key] = new_dist.get(key, 0.0) + q
        dist = new_dist
    return dist


def proportion_stderr(p_hat: float, n: int) -> float:
    """Binomial stderr with a continuity floor so boundary estimates keep slack."""
    p = min(max(p_hat, 0.5 / n), 1.0 - 0.5 / n)
    return math.sqrt(p * (1.0 - p) / n)


def assert_agree(a: float, b: float, se: float, sigmas: float, label: str = ""):
    assert abs(a - b) <= sigmas * se, \
        f"{label}: |{a} - {b}| = {abs(a - b):.5g} exceeds {sigmas} x {se:.5g}"
