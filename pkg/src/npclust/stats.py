"""Cluster-count and cluster-size statistics for the three partition priors.

Closed-form and asymptotic expectations, an exact dynamic-programming oracle
for the uniform process, and a seeded replicated simulation study emitting
plot-ready summaries.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import rng
from ._kernels import get_backend
from .priors import Partition, PriorSpec


@dataclass(frozen=True)
class ClusterSizeHistogram:
    """Number of clusters of each size M; Sum_M M*counts[M] equals n."""

    counts: dict
    n: int

    def __post_init__(self):
        total = sum(m * c for m, c in self.counts.items())
        if total != self.n:
            raise ValueError(f"histogram mass {total} != n {self.n}")

    @property
    def num_clusters(self) -> int:
        return sum(self.counts.values())


def histogram(partition: Partition) -> ClusterSizeHistogram:
    """Cluster-size histogram of a partition."""
    counts = {}
    for s in partition.sizes:
        counts[int(s)] = counts.get(int(s), 0) + 1
    return ClusterSizeHistogram(counts=counts, n=partition.n)


@dataclass(frozen=True)
class SimulationSummary:
    """Replicate averages of K and the size histogram for one (spec, n) cell."""

    spec: PriorSpec
    n: int
    replicates: int
    mean_k: float
    se_k: float
    mean_h: dict
    master_seed: int


# ---------------------------------------------------------------------------
# closed-form / asymptotic expectations
# ---------------------------------------------------------------------------

def expected_k_dp(theta: float, n: int) -> float:
    """Exact expected cluster count for the Dirichlet process at sample size n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = np.arange(n, dtype=np.float64)
    return float(np.sum(theta / (m + theta)))


def expected_k_dp_asymptote(theta: float, n: int) -> float:
    """Large-n logarithmic growth law for the Dirichlet process."""
    return theta * math.log(n)


def expected_k_py(theta: float, alpha: float, n: int) -> float:
    """Asymptotic expected cluster count for the Pitman-Yor process.

    Singular at alpha = 0; use expected_k_dp for the Dirichlet case.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1); alpha=0 is the Dirichlet case")
    return math.exp(gammaln(1.0 + theta) - gammaln(alpha + theta)) / alpha * n ** alpha


def expected_k_up(theta: float, n: int) -> float:
    """Asymptotic square-root growth of the uniform-process cluster count."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.sqrt(2.0 * theta) * math.sqrt(n)


def expected_h_dp(theta: float, m: int) -> float:
    """Limiting expected number of size-m clusters under the Dirichlet process."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return theta / m


def expected_h_py(theta: float, alpha: float, m: int, n: int) -> float:
    """Asymptotic expected number of size-m clusters under Pitman-Yor."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if m < 1:
        raise ValueError("m must be >= 1")
    log_prod = sum(math.log(j - alpha) for j in range(1, m))
    return math.exp(
        gammaln(1.0 + theta) + log_prod - gammaln(alpha + theta)
        - gammaln(m + 1.0) + alpha * math.log(n)
    )


def expected_h_up(theta: float) -> float:
    """Conjectured size-independent expected cluster-size count for the uniform process."""
    return theta


def exact_expected_k_up(theta: float, n: int) -> float:
    """Exact E[K_n] for the uniform process by dynamic programming over K.

    The uniform-process predictive depends on the current partition only
    through K, so the distribution of K evolves as a Markov chain:
    P(K -> K+1) = theta / (K + theta).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= 4096:
        cap = n
    else:
        mean = math.sqrt(2.0 * theta * n)
        cap = min(n, int(mean + 16.0 * mean ** 0.5 + 64.0))
    p = np.zeros(cap + 1, dtype=np.float64)
    p[1] = 1.0
    k = np.arange(cap + 1, dtype=np.float64)
    grow = theta / (k + theta)
    stay = k / (k + theta)
    for _ in range(n - 1):
        p = p * stay + np.concatenate(([0.0], (p * grow)[:-1]))
    mass = float(p.sum())
    if mass < 1.0 - 1e-9:
        raise RuntimeError("uniform-process K recursion lost probability mass")
    return float(np.dot(p, k))


# ---------------------------------------------------------------------------
# simulation study
# ---------------------------------------------------------------------------

def _simulate_chunk(kind, theta, alpha, n, master_seed, spec_index, n_index, rep_lo, rep_hi):
    kernel = get_backend()
    sum_k = 0
    sum_k2 = 0
    hist = {}
    for r in range(rep_lo, rep_hi):
        gen = rng.generator(master_seed, spec_index, n_index, r)
        assignments = kernel.sample_assignments(kind, theta, alpha, n, gen)
        sizes = np.bincount(assignments)
        k = sizes.shape[0]
        sum_k += k
        sum_k2 += k * k
        size_counts = np.bincount(sizes)
        for m in np.nonzero(size_counts)[0]:
            if m > 0:
                hist[int(m)] = hist.get(int(m), 0) + int(size_counts[m])
    return sum_k, sum_k2, hist


def run_simulation(specs, n_grid, replicates, master_seed, jobs=1):
    """Replicated partition simulation over a (spec, n) grid.

    Returns one SimulationSummary per cell.  Each replicate owns a child RNG
    stream keyed by (master_seed, spec index, n index, replicate), so results
    do not depend on ``jobs``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if not n_grid:
        raise ValueError("n_grid must be non-empty")
    tasks = []
    for si, spec in enumerate(specs):
        for ni, n in enumerate(n_grid):
            tasks.append((si, spec, ni, int(n)))
    summaries = []
    if jobs > 1:
        chunk = max(1, replicates // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for si, spec, ni, n in tasks:
                futures = [
                    pool.submit(
                        _simulate_chunk, int(spec.kind), spec.theta, spec.alpha,
                        n, master_seed, si, ni, lo, min(lo + chunk, replicates),
                    )
                    for lo in range(0, replicates, chunk)
                ]
                parts = [f.result() for f in futures]
                summaries.append(_reduce_cell(spec, n, replicates, master_seed, parts))
    else:
        for si, spec, ni, n in tasks:
            part = _simulate_chunk(
                int(spec.kind), spec.theta, spec.alpha, n, master_seed, si, ni, 0, replicates
            )
            summaries.append(_reduce_cell(spec, n, replicates, master_seed, [part]))
    return summaries


def _reduce_cell(spec, n, replicates, master_seed, parts):
    sum_k = sum(p[0] for p in parts)
    sum_k2 = sum(p[1] for p in parts)
    hist = {}
    for _, _, h in parts:
        for m, c in h.items():
            hist[m] = hist.get(m, 0) + c
    mean_k = sum_k / replicates
    if replicates > 1:
        var = (sum_k2 - replicates * mean_k * mean_k) / (replicates - 1)
        se_k = math.sqrt(max(var, 0.0) / replicates)
    else:
        se_k = 0.0
    mean_h = {m: c / replicates for m, c in sorted(hist.items())}
    return SimulationSummary(
        spec=spec, n=n, replicates=replicates, mean_k=mean_k, se_k=se_k,
        mean_h=mean_h, master_seed=master_seed,
    )


def fit_growth_exponent(summaries) -> float:
    """OLS slope of log mean K against log n across one spec's summaries."""
    pts = sorted({(s.n, s.mean_k) for s in summaries})
    if len(pts) < 2:
        raise ValueError("need summaries for at least 2 distinct n values")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])
