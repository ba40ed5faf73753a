"""Hot numeric kernels over CSR adjacency arrays.

Every function here is a deterministic array-in/array-out routine: all
randomness is pre-drawn by the caller and passed in as uniform arrays, so the
compiled and interpreted paths (see :mod:`tempomap.accel`) give identical
output. Graphs are CSR triples ``(indptr, indices)`` with int64 indices;
weights are float64 with ``inf`` marking absent edges.
"""

import numpy as np

from .accel import maybe_jit

INF = np.inf


@maybe_jit
def dijkstra(indptr, indices, weights, source, t_stop, dist, heap_node, heap_dist, visited):
    """Single-source shortest paths with lazy-deletion binary heap.

    Fills ``dist`` in place. Entries popped after ``t_stop`` are left
    unfinalized; they are only guaranteed to exceed ``t_stop``. Pass
    ``t_stop = inf`` for exact distances everywhere. Scratch arrays
    ``heap_node``/``heap_dist`` must have length >= len(indices) + 1.
    """
    n = dist.shape[0]
    for i in range(n):
        dist[i] = INF
        visited[i] = False
    dist[source] = 0.0
    heap_dist[0] = 0.0
    heap_node[0] = source
    size = 1
    while size > 0:
        d = heap_dist[0]
        u = heap_node[0]
        size -= 1
        heap_dist[0] = heap_dist[size]
        heap_node[0] = heap_node[size]
        pos = 0
        while True:
            left = 2 * pos + 1
            right = left + 1
            small = pos
            if left < size and heap_dist[left] < heap_dist[small]:
                small = left
            if right < size and heap_dist[right] < heap_dist[small]:
                small = right
            if small == pos:
                break
            heap_dist[pos], heap_dist[small] = heap_dist[small], heap_dist[pos]
            heap_node[pos], heap_node[small] = heap_node[small], heap_node[pos]
            pos = small
        if d > t_stop:
            break
        if visited[u] or d > dist[u]:
            continue
        visited[u] = True
        for k in range(indptr[u], indptr[u + 1]):
            w = weights[k]
            if w == INF:
                continue
            v = indices[k]
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heap_dist[size] = nd
                heap_node[size] = v
                pos = size
                size += 1
                while pos > 0:
                    parent = (pos - 1) >> 1
                    if heap_dist[parent] <= heap_dist[pos]:
                        break
                    heap_dist[pos], heap_dist[parent] = heap_dist[parent], heap_dist[pos]
                    heap_node[pos], heap_node[parent] = heap_node[parent], heap_node[pos]
                    pos = parent


@maybe_jit
def dijkstra_batch(indptr, indices, weight_rows, source, t_stop, out):
    """Shortest paths from one source on many weight assignments (rows)."""
    n = out.shape[1]
    cap = indices.shape[0] + 1
    heap_node = np.empty(cap, dtype=np.int64)
    heap_dist = np.empty(cap, dtype=np.float64)
    visited = np.empty(n, dtype=np.bool_)
    for k in range(weight_rows.shape[0]):
        dijkstra(indptr, indices, weight_rows[k], source, t_stop, out[k], heap_node, heap_dist, visited)


@maybe_jit
def dijkstra_sources(indptr, indices, weights, sources, out):
    """Shortest paths on one weight assignment from many sources (row per source)."""
    n = out.shape[1]
    cap = indices.shape[0] + 1
    heap_node = np.empty(cap, dtype=np.int64)
    heap_dist = np.empty(cap, dtype=np.float64)
    visited = np.empty(n, dtype=np.bool_)
    for k in range(sources.shape[0]):
        dijkstra(indptr, indices, weights, sources[k], INF, out[k], heap_node, heap_dist, visited)


@maybe_jit
def path_hops(indptr, indices, reverse_slot, weights, source, dist, order, hops):
    """Edge counts along minimum-weight paths.

    ``dist`` must hold the final shortest-path distances and ``order`` the
    node indices sorted by distance ascending; relaxing in that order makes
    one pass exact. ``reverse_slot[k]`` addresses the opposite direction of
    slot k, so incoming weights are read correctly on asymmetric instances.
    Picks the fewest-hop path among weight ties.
    """
    n = dist.shape[0]
    for i in range(n):
        hops[i] = INF
    hops[source] = 0.0
    for oi in range(n):
        v = order[oi]
        dv = dist[v]
        if dv == INF or v == source:
            continue
        best = INF
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            w = weights[reverse_slot[k]]
            if w != INF and dist[u] + w == dv and hops[u] + 1.0 < best:
                best = hops[u] + 1.0
        hops[v] = best


@maybe_jit
def bfs_hops(indptr, indices, source, dist, queue):
    """Unweighted hop distances from ``source`` (inf where unreachable)."""
    n = dist.shape[0]
    for i in range(n):
        dist[i] = INF
    dist[source] = 0.0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] == INF:
                dist[v] = du + 1.0
                queue[tail] = v
                tail += 1


@maybe_jit
def component_mask(indptr, indices, csr_edge_id, edge_keep, source, member, queue):
    """Connected component of ``source`` using only edges with edge_keep true.

    ``csr_edge_id`` maps each CSR slot to its undirected edge index, so both
    directions of an edge share one keep decision.
    """
    n = member.shape[0]
    for i in range(n):
        member[i] = False
    member[source] = True
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            if not edge_keep[csr_edge_id[k]]:
                continue
            v = indices[k]
            if not member[v]:
                member[v] = True
                queue[tail] = v
                tail += 1


@maybe_jit
def component_labels(indptr, indices, labels, queue):
    """Label connected components 0..k-1; returns k."""
    n = labels.shape[0]
    for i in range(n):
        labels[i] = -1
    next_label = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = next_label
        queue[0] = start
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if labels[v] < 0:
                    labels[v] = next_label
                    queue[tail] = v
                    tail += 1
        next_label += 1
    return next_label


@maybe_jit
def discrete_sir_steps(indptr, indices, p_table, gamma, states, t_inf, t_rec,
                       protected_until, t_start, u_inf, u_rec, scratch):
    """Advance a synchronous discrete-time SIR state by up to u_inf.shape[0] steps.

    Per step: every infected node attempts to infect each susceptible
    neighbour (aggregated as u < 1-(1-beta)^m via ``p_table``), then every
    infected node recovers with probability ``gamma``; new infections become
    active the following step. Infections arriving at a time >= the node's
    ``protected_until`` entry are blocked. Uniform consumption is fixed at
    one infection draw per susceptible node and one recovery draw per
    infected node per step, indexed by node, so paired runs stay aligned.

    Returns (number of infected remaining, steps executed).
    """
    n = states.shape[0]
    steps = u_inf.shape[0]
    n_inf = 0
    for i in range(n):
        if states[i] == 1:
            n_inf += 1
    done = 0
    for s in range(steps):
        if n_inf == 0:
            break
        t_next = t_start + done + 1.0
        n_new = 0
        any_contact = False
        for j in range(n):
            if states[j] != 0:
                continue
            m = 0
            for k in range(indptr[j], indptr[j + 1]):
                if states[indices[k]] == 1:
                    m += 1
            if m == 0:
                continue
            any_contact = True
            if u_inf[s, j] < p_table[m] and t_next < protected_until[j]:
                scratch[n_new] = j
                n_new += 1
        for i in range(n):
            if states[i] == 1 and u_rec[s, i] < gamma:
                states[i] = 2
                t_rec[i] = t_next
                n_inf -= 1
        for b in range(n_new):
            j = scratch[b]
            states[j] = 1
            t_inf[j] = t_next
            n_inf += 1
        done += 1
        if gamma == 0.0 and not any_contact:
            break  # SI fixpoint: nothing can change any more
    return n_inf, done


@maybe_jit
def discrete_sir_batch(indptr, indices, p_table, gamma, source, u_inf, u_rec,
                       t_inf_out, t_rec_out):
    """Run many independent discrete SIR trajectories from one source.

    ``u_inf``/``u_rec`` have shape (runs, steps, nodes); infection and
    recovery times are written per run (inf where the event never happened).
    """
    runs = u_inf.shape[0]
    n = t_inf_out.shape[1]
    states = np.empty(n, dtype=np.int8)
    protected_until = np.full(n, INF)
    scratch = np.empty(n, dtype=np.int64)
    for r in range(runs):
        for i in range(n):
            states[i] = 0
            t_inf_out[r, i] = INF
            t_rec_out[r, i] = INF
        states[source] = 1
        t_inf_out[r, source] = 0.0
        discrete_sir_steps(indptr, indices, p_table, gamma, states,
                           t_inf_out[r], t_rec_out[r], protected_until, 0.0,
                           u_inf[r], u_rec[r], scratch)


@maybe_jit
def gillespie_sir(indptr, indices, beta, gamma, states, t_inf, t_rec, t_start,
                  t_max, u):
    """Event-driven continuous-time SIR with full rate recomputation per event.

    ``u`` supplies two uniforms per event; u[2c] in [0,1) feeds the waiting
    time as -ln(1-u)/rate and u[2c+1] picks the event proportional to rate.
    Pair enumeration is by infected node index, then CSR neighbour order.
    Returns the time at which the run stopped (extinction or t_max).
    """
    n = states.shape[0]
    t = t_start
    cursor = 0
    while True:
        n_pairs = 0
        n_inf = 0
        for i in range(n):
            if states[i] == 1:
                n_inf += 1
                for k in range(indptr[i], indptr[i + 1]):
                    if states[indices[k]] == 0:
                        n_pairs += 1
        total = beta * n_pairs + gamma * n_inf
        if total <= 0.0:
            return t
        t = t - np.log(1.0 - u[cursor]) / total
        v = u[cursor + 1] * total
        cursor += 2
        if t > t_max:
            return t_max
        if v < beta * n_pairs:
            target = int(v / beta)
            if target > n_pairs - 1:
                target = n_pairs - 1
            c = 0
            for i in range(n):
                if states[i] != 1:
                    continue
                for k in range(indptr[i], indptr[i + 1]):
                    j = indices[k]
                    if states[j] == 0:
                        if c == target:
                            states[j] = 1
                            t_inf[j] = t
                            c = -1
                            break
                        c += 1
                if c < 0:
                    break
        else:
            target = int((v - beta * n_pairs) / gamma)
            if target > n_inf - 1:
                target = n_inf - 1
            c = 0
            for i in range(n):
                if states[i] == 1:
                    if c == target:
                        states[i] = 2
                        t_rec[i] = t
                        break
                    c += 1


@maybe_jit
def gillespie_batch(indptr, indices, beta, gamma, source, u, t_max, t_inf_out, t_rec_out):
    """Run many independent continuous-time SIR trajectories from one source."""
    runs = u.shape[0]
    n = t_inf_out.shape[1]
    states = np.empty(n, dtype=np.int8)
    for r in range(runs):
        for i in range(n):
            states[i] = 0
            t_inf_out[r, i] = INF
            t_rec_out[r, i] = INF
        states[source] = 1
        t_inf_out[r, source] = 0.0
        gillespie_sir(indptr, indices, beta, gamma, states, t_inf_out[r],
                      t_rec_out[r], 0.0, t_max, u[r])


@maybe_jit
def temporal_score_chunk(indptr, indices, weight_rows, recovery_rows, candidates,
                         observed, t_obs, inv_a2, scores):
    """Accumulate Gaussian-kernel source scores over a chunk of instances.

    For each instance and candidate source, states at ``t_obs`` follow from
    the candidate's distance vector d and per-node recovery durations r:
    susceptible where d > t, infected where d <= t < d + r, recovered where
    d + r <= t. The per-candidate score accumulates
    exp(-(similarity - 1)^2 * inv_a2) into ``scores``.
    """
    n = recovery_rows.shape[1]
    cap = indices.shape[0] + 1
    heap_node = np.empty(cap, dtype=np.int64)
    heap_dist = np.empty(cap, dtype=np.float64)
    visited = np.empty(n, dtype=np.bool_)
    dist = np.empty(n, dtype=np.float64)
    for k in range(weight_rows.shape[0]):
        for c in range(candidates.shape[0]):
            cand = candidates[c]
            dijkstra(indptr, indices, weight_rows[k], cand, t_obs, dist,
                     heap_node, heap_dist, visited)
            equal = 0
            for j in range(n):
                d = dist[j]
                if d > t_obs:
                    st = 0
                elif t_obs < d + recovery_rows[k, j]:
                    st = 1
                else:
                    st = 2
                if st == observed[j]:
                    equal += 1
            phi = equal / n
            scores[c] += np.exp(-(phi - 1.0) * (phi - 1.0) * inv_a2)
