"""Percolation-side quantities: transmissibility, first-neighbourhood link
activation probabilities, the parallel-chain closed form, and bond
percolation sampling.

The single-parameter transmissibility p is the probability an infected node
transmits along one link before recovering. With a shared recovery time the
counts of active links among n outgoing edges are not binomial; p_nk tables
capture exactly that first-neighbourhood correlation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln
from scipy.stats import binom

from . import kernels
from .distributions import Exponential, InterEventDistribution
from .ensemble import EnsembleEstimate, map_chunks
from .errors import ConfigError, EstimationError
from .graphs import StaticNetwork
from .rng import stream

_ATOM_EPS = 1e-12
_QUAD_ABS = 1e-10


def _binom_row(k_values: np.ndarray, n: int, prob: float) -> np.ndarray:
    return binom.pmf(k_values, n, prob)


def p_nk_general(psi: InterEventDistribution, phi: InterEventDistribution | None,
                 n: int) -> np.ndarray:
    """P(k of n outgoing links active | shared recovery), k = 0..n.

    Computed as the recovery-time average of the binomial law with success
    probability Psi(recovery time). Atomic recovery or transmission
    distributions reduce the integral to exact sums; the fully continuous
    case uses adaptive quadrature with absolute error below 1e-8 per entry.
    """
    if n < 0:
        raise ConfigError("neighbourhood size must be non-negative")
    ks = np.arange(n + 1)
    if phi is None:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out

    phi_atoms = phi.atoms(_ATOM_EPS)
    if phi_atoms is not None:
        times, probs = phi_atoms
        psi_vals = np.asarray(psi.cdf(times), dtype=np.float64)
        out = np.zeros(n + 1)
        for t_prob, s in zip(probs, psi_vals):
            out += t_prob * _binom_row(ks, n, float(s))
        return out

    psi_atoms = psi.atoms(1e-14)
    if psi_atoms is not None:
        # Psi is a staircase: integrate phi exactly over each flat piece.
        times = np.concatenate(([0.0], np.asarray(psi_atoms[0], dtype=np.float64)))
        phi_cdf = np.asarray(phi.cdf(times), dtype=np.float64)
        masses = np.diff(np.concatenate((phi_cdf, [1.0])))
        psi_vals = np.asarray(psi.cdf(times), dtype=np.float64)
        out = np.zeros(n + 1)
        for mass, s in zip(masses, psi_vals):
            if mass > 0.0:
                out += mass * _binom_row(ks, n, float(s))
        return out

    t_cut = phi.tail_time(1e-13)
    out = np.zeros(n + 1)
    for k in ks:
        def integrand(t, k=k):
            return float(phi.pdf(t)) * float(binom.pmf(k, n, float(psi.cdf(t))))

        value, err = quad(integrand, 0.0, t_cut, epsabs=_QUAD_ABS, epsrel=1e-10,
                          limit=400)
        if err > 1e-8:
            raise EstimationError(
                f"quadrature for p_({n},{k}) did not converge (error {err:.2e})")
        out[k] = value
    return out


def p_nk_poisson(beta: float, gamma: float, n: int) -> np.ndarray:
    """Closed form of the link-activation law for exponential rates, k = 0..n.

    Evaluated entirely in log space so neighbourhood sizes up to ~10^3 stay
    inside float range.
    """
    if beta <= 0 or gamma <= 0:
        raise ConfigError("beta and gamma must be positive")
    if n < 0:
        raise ConfigError("neighbourhood size must be non-negative")
    k = np.arange(n + 1, dtype=np.float64)
    a = (gamma + beta * (n - k)) / beta
    log_choose = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    log_p = (log_choose + math.log(gamma / beta) + gammaln(k + 1.0)
             + gammaln(a) - gammaln(k + 1.0 + a))
    return np.exp(log_p)


def transmissibility(psi: InterEventDistribution,
                     phi: InterEventDistribution | None) -> float:
    """Probability of transmitting along one link before recovery.

    Exponential/exponential has the closed form beta/(beta+gamma); without
    recovery the link always fires; everything else reduces to the n = 1
    activation table.
    """
    if phi is None:
        return 1.0
    if isinstance(psi, Exponential) and isinstance(phi, Exponential):
        return psi.rate / (psi.rate + phi.rate)
    return float(p_nk_general(psi, phi, 1)[1])


def poisson_table_provider(beta: float, gamma: float):
    """n -> activation table, using the exponential closed form."""
    return lambda n: p_nk_poisson(beta, gamma, n)


def general_table_provider(psi: InterEventDistribution,
                           phi: InterEventDistribution | None):
    """n -> activation table, using quadrature/series on the raw distributions."""
    return lambda n: p_nk_general(psi, phi, n)


def toy_network_prob(n_chains: int, chain_len: int, p_table_provider) -> float:
    """Closed-form probability that the source reaches the sink of the
    parallel-chain toy graph.

    Conditioning on j of the source's n_chains outgoing links being active,
    each open chain independently delivers with probability p_{1,1} per hop.
    """
    if n_chains < 1 or chain_len < 1:
        raise ConfigError("toy network needs n_chains >= 1 and chain_len >= 1")
    table = np.asarray(p_table_provider(n_chains), dtype=np.float64)
    p11 = float(np.asarray(p_table_provider(1))[1])
    j = np.arange(n_chains + 1, dtype=np.float64)
    fail_chain = 1.0 - p11 ** chain_len
    return float(1.0 - np.sum(table * fail_chain ** j))


def bond_percolation_component(net: StaticNetwork, p: float, source: int,
                               gen: np.random.Generator) -> np.ndarray:
    """Keep each edge with probability p; return the source's component (sorted ids)."""
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"bond probability must lie in [0, 1], got {p}")
    keep = gen.random(net.n_edges) < p
    member = np.empty(net.n, dtype=np.bool_)
    kernels.component_mask(net.indptr, net.indices, net.csr_edge_id, keep,
                           np.int64(source), member, np.empty(net.n, dtype=np.int64))
    return np.flatnonzero(member)


def bond_percolation_mean_size(net: StaticNetwork, p: float, source: int,
                               master_seed: int, n: int, workers: int = 1,
                               purpose: str = "bond-percolation") -> EnsembleEstimate:
    """Monte Carlo mean component size of the source at bond probability p."""

    def run(ci, lo, hi):
        gen = stream(master_seed, purpose, ci)
        sizes = [bond_percolation_component(net, p, source, gen).size
                 for _ in range(hi - lo)]
        return EnsembleEstimate.from_values(np.asarray(sizes, dtype=np.float64))

    parts = map_chunks(run, n, workers=workers)
    total = EnsembleEstimate(0, 0.0, 0.0)
    for part in parts:
        total = total.merge(part)
    return total
