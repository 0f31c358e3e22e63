"""Held-out log-probability of test documents given a trained chain.

The marginal over test cluster assignments is estimated with a sequential
("left-to-right") particle scheme over document-level assignments, validated
against exact enumeration on small test sets.  Hyperparameters and theta stay
frozen throughout; test documents extend the training sequence, so the prior
predictive for test document i conditions on the training partition plus the
particle's earlier test assignments.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from ._kernels import _pure, get_backend
from .corpus import Corpus
from .docmodel import ChainState, GibbsConfig, run_chain
from .priors import PriorSpec, ProcessKind, dirichlet, uniform


@dataclass(frozen=True)
class EvalConfig:
    particles: int = 100
    test_permutations: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.particles < 1:
            raise ValueError("particles must be >= 1")
        if self.test_permutations < 1:
            raise ValueError("test_permutations must be >= 1")


@dataclass(frozen=True)
class LtrResult:
    """Left-to-right estimate: mean over test orderings plus the spread."""

    log_prob: float
    per_ordering: np.ndarray
    sd: float


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float
    seed: int = 0


def _eval_kind(prior: PriorSpec) -> int:
    if prior.kind == ProcessKind.DIRICHLET:
        return _pure.DP
    if prior.kind == ProcessKind.UNIFORM:
        return _pure.UP
    raise ValueError("held-out evaluation supports Dirichlet and uniform priors only")


def left_to_right_log_prob(test_corpus: Corpus, trained: ChainState, prior: PriorSpec,
                           config: EvalConfig) -> LtrResult:
    """Particle estimate of the held-out log-probability.

    Runs one pass per test ordering: ordering 0 is the corpus order itself
    (so a single-permutation run is directly comparable to the exact
    enumeration oracle), orderings 1.. are seeded random shuffles.  Each pass
    processes test documents in its order, averaging per-document candidate
    sums over particles.  Returns the mean across passes and the sample SD
    (the ordering spread matters for the uniform process).
    """
    kind = _eval_kind(prior)
    if test_corpus.vocab_size != trained.counts.vocab_size:
        raise ValueError("test corpus must share the training vocabulary")
    t = test_corpus.num_documents
    if t == 0:
        return LtrResult(log_prob=0.0, per_ordering=np.zeros(0), sd=0.0)
    kernel = get_backend()
    tokens, offsets = test_corpus.flat_tokens()
    counts = trained.counts
    vals = np.empty(config.test_permutations, dtype=np.float64)
    for p in range(config.test_permutations):
        gen = rng.generator(config.seed, p)
        if p == 0:
            order = np.arange(t, dtype=np.int64)
        else:
            order = _fisher_yates_order(t, gen)
        vals[p] = kernel.left_to_right(
            kind, prior.theta, trained.hypers.beta, trained.hypers.beta1,
            trained.hypers.beta0, counts.n_w_given_c, counts.cluster_totals,
            counts.cluster_doc_counts, counts.n_w, counts.total_tokens,
            counts.num_clusters, len(trained.assignments), tokens, offsets,
            order, config.particles, gen,
        )
    sd = float(np.std(vals, ddof=1)) if config.test_permutations > 1 else 0.0
    return LtrResult(log_prob=float(np.mean(vals)), per_ordering=vals, sd=sd)


def _fisher_yates_order(n, gen):
    order = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(gen.random() * (i + 1))
        if j > i:
            j = i
        order[i], order[j] = order[j], order[i]
    return order


def exact_heldout_log_prob(test_corpus: Corpus, trained: ChainState,
                           prior: PriorSpec, max_docs: int = 6) -> float:
    """Exact held-out log-probability by enumerating assignment sequences.

    Sums prior x likelihood over every canonical assignment sequence of the
    test documents (taken in corpus order, appended to the training ordering).
    Enumeration cost grows exponentially; refuses more than ``max_docs``.
    """
    kind = _eval_kind(prior)
    t = test_corpus.num_documents
    if t == 0:
        return 0.0
    if t > max_docs:
        raise ValueError(f"exact enumeration limited to {max_docs} test documents")
    if test_corpus.vocab_size != trained.counts.vocab_size:
        raise ValueError("test corpus must share the training vocabulary")
    base = trained.counts
    k_train = base.num_clusters
    cap = k_train + t + 1
    w = base.vocab_size
    ncw = np.zeros((cap, w), dtype=np.int64)
    ncw[:k_train] = base.n_w_given_c[:k_train]
    ctot = np.zeros(cap, dtype=np.int64)
    ctot[:k_train] = base.cluster_totals[:k_train]
    cdoc = np.zeros(cap, dtype=np.int64)
    cdoc[:k_train] = base.cluster_doc_counts[:k_train]
    nw = base.n_w.copy()
    d_train = len(trained.assignments)
    theta = prior.theta
    hp = trained.hypers
    leaf_logps = []

    def recurse(depth, k_cur, ntot, logp):
        if depth == t:
            leaf_logps.append(logp)
            return
        toks = test_corpus.documents[depth]
        nd = len(toks)
        for c in range(k_cur + 1):
            if kind == _pure.DP:
                num = float(cdoc[c]) if c < k_cur else theta
                lp = math.log(num / (d_train + depth + theta))
            else:
                lp = math.log((1.0 if c < k_cur else theta) / (k_cur + theta))
            row = ncw[c] if c < k_cur else None
            tot = int(ctot[c]) if c < k_cur else 0
            lp += _pure.score_doc(toks, row, tot, nw, ntot, hp.beta, hp.beta1, hp.beta0, w)
            for tok in toks:
                ncw[c, tok] += 1
                nw[tok] += 1
            ctot[c] += nd
            cdoc[c] += 1
            recurse(depth + 1, k_cur + 1 if c == k_cur else k_cur, ntot + nd, logp + lp)
            for tok in toks:
                ncw[c, tok] -= 1
                nw[tok] -= 1
            ctot[c] -= nd
            cdoc[c] -= 1

    recurse(0, k_train, base.total_tokens, 0.0)
    m = max(leaf_logps)
    return m + math.log(sum(math.exp(x - m) for x in leaf_logps))


def compare_priors_heldout(corpus: Corpus, split: SplitConfig, theta_grid,
                           num_chains: int, eval_config: EvalConfig,
                           gibbs_config: GibbsConfig, jobs: int = 1) -> dict:
    """Train and evaluate DP and UP models across a theta grid.

    For each (prior, theta) cell, ``num_chains`` chains are trained on the
    train split; each chain's final sample is evaluated on the test split.
    Reports the held-out log-probability mean and SD pooled over chains and
    test permutations, plus posterior cluster-count statistics.
    """
    from .corpus import split_corpus

    train, test = split_corpus(corpus, split.train_fraction, split.seed)
    tasks = []
    for ti, theta in enumerate(theta_grid):
        for pi, make in enumerate((dirichlet, uniform)):
            prior = make(theta)
            for chain in range(num_chains):
                tasks.append((ti, pi, chain, prior))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_train_and_eval, train, test, prior, gibbs_config,
                            eval_config, ti, pi, chain)
                for ti, pi, chain, prior in tasks
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [
            _train_and_eval(train, test, prior, gibbs_config, eval_config, ti, pi, chain)
            for ti, pi, chain, prior in tasks
        ]
    cells = {}
    for (ti, pi, chain, prior), outcome in zip(tasks, outcomes):
        cells.setdefault((ti, pi), []).append(outcome)
    results = []
    for ti, theta in enumerate(theta_grid):
        for pi, name in enumerate(("dp", "up")):
            chain_outcomes = cells[(ti, pi)]
            pooled = np.concatenate([o["per_ordering"] for o in chain_outcomes])
            ks = np.array([o["num_clusters"] for o in chain_outcomes], dtype=np.float64)
            results.append({
                "prior": name,
                "theta": float(theta),
                "heldout_logprob_mean": float(np.mean(pooled)),
                "heldout_logprob_sd": float(np.std(pooled, ddof=1)) if pooled.size > 1 else 0.0,
                "mean_num_clusters": float(np.mean(ks)),
                "num_clusters_sd": float(np.std(ks, ddof=1)) if ks.size > 1 else 0.0,
                "per_chain": [
                    {
                        "heldout_logprob": o["log_prob"],
                        "num_clusters": o["num_clusters"],
                        "per_ordering": [float(v) for v in o["per_ordering"]],
                    }
                    for o in chain_outcomes
                ],
            })
    return {
        "train_documents": train.num_documents,
        "test_documents": test.num_documents,
        "vocab_size": corpus.vocab_size,
        "theta_grid": [float(t) for t in theta_grid],
        "chains": num_chains,
        "eval": {
            "particles": eval_config.particles,
            "test_permutations": eval_config.test_permutations,
            "seed": eval_config.seed,
        },
        "gibbs": {
            "sweeps": gibbs_config.sweeps,
            "burn_in": gibbs_config.burn_in,
            "hyper_interval": gibbs_config.hyper_interval,
        },
        "split": {"train_fraction": split.train_fraction, "seed": split.seed},
        "results": results,
    }


def _train_and_eval(train, test, prior, gibbs_config, eval_config, ti, pi, chain):
    cfg = replace(gibbs_config, seed=rng.derive_seed(gibbs_config.seed, ti, pi, chain))
    samples = run_chain(train, prior, cfg)
    final = samples[-1]
    state = ChainState.from_assignments(
        train, final.assignments, final.hypers, gen=rng.generator(0)
    )
    ltr = left_to_right_log_prob(
        test, state, prior,
        replace(eval_config, seed=rng.derive_seed(eval_config.seed, ti, pi, chain)),
    )
    return {
        "log_prob": ltr.log_prob,
        "per_ordering": ltr.per_ordering,
        "num_clusters": final.num_clusters,
    }
