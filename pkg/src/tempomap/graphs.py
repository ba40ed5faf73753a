"""Static input graphs, generators, and weighted shortest paths.

Graphs are immutable after construction: external string labels map to dense
integer node ids, and adjacency is stored as CSR arrays so the shortest-path
kernels can run over per-instance weight vectors aligned with the CSR slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, EdgeListError


@dataclass(frozen=True, eq=False)
class StaticNetwork:
    """Undirected simple graph with dense node ids and CSR adjacency.

    ``csr_edge_id[k]`` gives the undirected edge index of CSR slot k and
    ``edge_slots[e]`` the two directed slots of edge e, so per-edge and
    per-directed-slot data can be converted either way.
    """

    n: int
    labels: tuple
    edges: np.ndarray          # (E, 2) int64, u < v, lexicographically sorted
    indptr: np.ndarray         # (n+1,) int64
    indices: np.ndarray        # (2E,) int64, each row sorted
    csr_edge_id: np.ndarray    # (2E,) int64
    edge_slots: np.ndarray     # (E, 2) int64
    label_to_id: dict = field(repr=False)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def n_slots(self) -> int:
        return self.indices.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def slot_source(self) -> np.ndarray:
        """Source node of each CSR slot."""
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)

    @property
    def reverse_slot(self) -> np.ndarray:
        """For each CSR slot (u -> v), the slot of (v -> u)."""
        out = np.empty(self.n_slots, dtype=np.int64)
        out[self.edge_slots[:, 0]] = self.edge_slots[:, 1]
        out[self.edge_slots[:, 1]] = self.edge_slots[:, 0]
        return out

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def id_of(self, label: str) -> int:
        try:
            return self.label_to_id[label]
        except KeyError:
            raise ConfigError(f"unknown node label {label!r}") from None


def build_network(n: int, edge_pairs, labels=None) -> StaticNetwork:
    """Construct a network from (u, v) id pairs; rejects self loops, dedups edges."""
    if n < 1:
        raise ConfigError(f"network needs at least one node, got n={n}")
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    else:
        labels = tuple(labels)
        if len(labels) != n:
            raise ConfigError("label count does not match node count")
    seen = set()
    for u, v in edge_pairs:
        u, v = int(u), int(v)
        if u == v:
            raise ConfigError(f"self loop on node {u} is not allowed")
        if not (0 <= u < n and 0 <= v < n):
            raise ConfigError(f"edge ({u}, {v}) references a node outside [0, {n})")
        seen.add((min(u, v), max(u, v)))
    edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    n_edges = edges.shape[0]

    deg = np.zeros(n, dtype=np.int64)
    if n_edges:
        np.add.at(deg, edges[:, 0], 1)
        np.add.at(deg, edges[:, 1], 1)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    csr_edge_id = np.empty(indptr[-1], dtype=np.int64)
    cursor = indptr[:-1].copy()
    for e in range(n_edges):
        u, v = edges[e]
        indices[cursor[u]] = v
        csr_edge_id[cursor[u]] = e
        cursor[u] += 1
        indices[cursor[v]] = u
        csr_edge_id[cursor[v]] = e
        cursor[v] += 1
    # sort each row by neighbour id, keeping edge ids aligned
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        order = np.argsort(indices[lo:hi], kind="stable")
        indices[lo:hi] = indices[lo:hi][order]
        csr_edge_id[lo:hi] = csr_edge_id[lo:hi][order]
    edge_slots = np.empty((n_edges, 2), dtype=np.int64)
    for k in range(indices.shape[0]):
        e = csr_edge_id[k]
        u, v = edges[e]
        # row of this slot: the one whose neighbour entry is the other endpoint
        edge_slots[e, 0 if indices[k] == v else 1] = k
    label_to_id = {lab: i for i, lab in enumerate(labels)}
    if len(label_to_id) != n:
        raise ConfigError("node labels must be unique")
    return StaticNetwork(n=n, labels=labels, edges=edges, indptr=indptr,
                         indices=indices, csr_edge_id=csr_edge_id,
                         edge_slots=edge_slots, label_to_id=label_to_id)


def load_edge_list(path) -> StaticNetwork:
    """Read an edge-list file: two whitespace-separated labels per line.

    ``#`` starts a comment, blank lines are skipped, duplicate edges collapse.
    Node ids are assigned in first-appearance order.
    """
    labels: list[str] = []
    label_to_id: dict[str, int] = {}
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListError(
                    f"{path}:{lineno}: expected two node labels, got {len(parts)}")
            ids = []
            for lab in parts:
                if lab not in label_to_id:
                    label_to_id[lab] = len(labels)
                    labels.append(lab)
                ids.append(label_to_id[lab])
            if ids[0] == ids[1]:
                raise EdgeListError(f"{path}:{lineno}: self loop on {parts[0]!r}")
            pairs.append(ids)
    if not labels:
        raise EdgeListError(f"{path}: no edges found")
    return build_network(len(labels), pairs, labels)


def write_edge_list(net: StaticNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in net.edges:
            fh.write(f"{net.labels[u]} {net.labels[v]}\n")


def write_label_map(net: StaticNetwork, path) -> None:
    """Two-column text: dense id, external label."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(net.labels):
            fh.write(f"{i} {lab}\n")


# ---------------------------------------------------------------------------
# generators

def lattice(width: int, height: int) -> StaticNetwork:
    """4-connected regular lattice, row-major node ids."""
    if width < 1 or height < 1:
        raise ConfigError("lattice dimensions must be positive")
    pairs = []
    for r in range(height):
        for c in range(width):
            i = r * width + c
            if c + 1 < width:
                pairs.append((i, i + 1))
            if r + 1 < height:
                pairs.append((i, i + width))
    return build_network(width * height, pairs)


def chain_toy(n_chains: int, chain_len: int) -> StaticNetwork:
    """Source and destination joined by parallel chains of intermediate nodes.

    Node 0 is the source s, node 1 the destination d; chain c contributes
    nodes 2 + c*chain_len .. 2 + (c+1)*chain_len - 1 in path order.
    """
    if n_chains < 1 or chain_len < 1:
        raise ConfigError("chain_toy needs n_chains >= 1 and chain_len >= 1")
    pairs = []
    for c in range(n_chains):
        first = 2 + c * chain_len
        pairs.append((0, first))
        for j in range(chain_len - 1):
            pairs.append((first + j, first + j + 1))
        pairs.append((first + chain_len - 1, 1))
    return build_network(2 + n_chains * chain_len, pairs)


def erdos_renyi(n: int, mean_degree: float, seed: int) -> StaticNetwork:
    """G(n, p) with p = mean_degree/(n-1), sampled by geometric edge skipping."""
    if n < 2 or mean_degree <= 0:
        raise ConfigError("erdos_renyi needs n >= 2 and positive mean degree")
    p = mean_degree / (n - 1)
    if p >= 1.0:
        raise ConfigError("mean degree implies edge probability >= 1")
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    log_q = math.log1p(-p)
    pairs = []
    v, w = 1, -1
    while v < n:
        r = gen.random()
        w += 1 + int(math.floor(math.log(1.0 - r) / log_q))
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            pairs.append((v, w))
    return build_network(n, pairs)


def barabasi_albert(n: int, m: int, seed: int) -> StaticNetwork:
    """Preferential attachment: each new node links to m existing nodes."""
    if m < 1 or n <= m:
        raise ConfigError("barabasi_albert needs 1 <= m < n")
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    repeated: list[int] = list(range(m))  # seed nodes, degree-weighted pool
    pairs = []
    for source in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(repeated[int(gen.integers(len(repeated)))])
        for t in sorted(targets):
            pairs.append((source, t))
            repeated.append(t)
        repeated.extend([source] * m)
    return build_network(n, pairs)


_GENERATORS = {
    "lattice": (lattice, ("width", "height"), False),
    "erdos_renyi": (erdos_renyi, ("n", "mean_degree"), True),
    "chain_toy": (chain_toy, ("n_chains", "chain_len"), False),
    "barabasi_albert": (barabasi_albert, ("n", "m"), True),
}


def generate_graph(kind: str, seed: int = 0, **params) -> StaticNetwork:
    """Dispatch on generator kind; deterministic for a given seed."""
    key = kind.lower().replace("-", "_")
    if key not in _GENERATORS:
        raise ConfigError(f"unknown graph kind {kind!r} (expected one of {sorted(_GENERATORS)})")
    fn, names, needs_seed = _GENERATORS[key]
    missing = [p for p in names if p not in params]
    if missing:
        raise ConfigError(f"graph kind {key}: missing parameters {missing}")
    extra = set(params) - set(names)
    if extra:
        raise ConfigError(f"graph kind {key}: unexpected parameters {sorted(extra)}")
    args = [params[p] for p in names]
    if needs_seed:
        return fn(*args, seed)
    return fn(*args)


# ---------------------------------------------------------------------------
# weighted shortest paths over an instance

def shortest_paths_from(instance, source: int, t_stop: float = np.inf) -> np.ndarray:
    """Distance vector from ``source`` on one weighted instance.

    Entries above ``t_stop`` are only guaranteed to exceed it; with the
    default stop at infinity all distances are exact and unreachable nodes
    get inf.
    """
    net = instance.network
    dist = np.empty(net.n, dtype=np.float64)
    cap = net.n_slots + 1
    kernels.dijkstra(net.indptr, net.indices, instance.weights, np.int64(source),
                     np.float64(t_stop), dist,
                     np.empty(cap, dtype=np.int64), np.empty(cap, dtype=np.float64),
                     np.empty(net.n, dtype=np.bool_))
    return dist


def all_pairs(instance) -> np.ndarray:
    """Distance matrix; row i equals shortest_paths_from(instance, i)."""
    net = instance.network
    out = np.empty((net.n, net.n), dtype=np.float64)
    kernels.dijkstra_sources(net.indptr, net.indices, instance.weights,
                             np.arange(net.n, dtype=np.int64), out)
    return out


def reachable_within(distances: np.ndarray, t: float) -> np.ndarray:
    """Sorted node ids with distance <= t (finite entries only)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    mask = np.isfinite(distances) & (distances <= t)
    return np.flatnonzero(mask)


def hop_distances(net: StaticNetwork, source: int) -> np.ndarray:
    """Unweighted hop distances (inf where unreachable)."""
    dist = np.empty(net.n, dtype=np.float64)
    kernels.bfs_hops(net.indptr, net.indices, np.int64(source), dist,
                     np.empty(net.n, dtype=np.int64))
    return dist


def shortest_path_edge_counts(net: StaticNetwork, weights: np.ndarray,
                              source: int, dist: np.ndarray) -> np.ndarray:
    """Edges along the minimum-delay path to each node (fewest hops among ties).

    ``dist`` must be the exact distance vector for these weights.
    """
    hops = np.empty(net.n, dtype=np.float64)
    order = np.argsort(dist, kind="stable").astype(np.int64)
    kernels.path_hops(net.indptr, net.indices, net.reverse_slot, weights,
                      np.int64(source), dist, order, hops)
    return hops


def component_labels(net: StaticNetwork) -> tuple[np.ndarray, int]:
    """Connected-component label per node and the component count."""
    labels = np.empty(net.n, dtype=np.int64)
    count = kernels.component_labels(net.indptr, net.indices, labels,
                                     np.empty(net.n, dtype=np.int64))
    return labels, int(count)


def giant_component(net: StaticNetwork) -> np.ndarray:
    """Node ids of the largest connected component."""
    labels, count = component_labels(net)
    sizes = np.bincount(labels, minlength=count)
    return np.flatnonzero(labels == np.argmax(sizes))


# ---------------------------------------------------------------------------
# tabular output

def format_value(x) -> str:
    """Stable text form for CSV cells; floats via repr, inf spelled 'inf'."""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == int(x) and abs(x) < 1e15:
            return str(int(x))
        return repr(x)
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(x) for x in row) + "\n")


def write_distance_matrix_csv(path, net: StaticNetwork, matrix: np.ndarray) -> None:
    """Matrix CSV with a node-label header row and row labels in column one."""
    header = ["source"] + list(net.labels)
    rows = ([net.labels[i]] + list(matrix[i]) for i in range(net.n))
    write_csv(path, header, rows)
