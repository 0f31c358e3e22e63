"""Document-clustering mixture model with collapsed Gibbs inference.

Documents are assigned to clusters; a document's tokens are scored by a
three-level smoothed predictive (document counts backed off to cluster counts
backed off to corpus counts backed off to 1/W).  Cluster assignments are
resampled one document at a time from conditional prior x likelihood, with the
conditional prior taken from the Dirichlet process or, for the uniform
process, from the ordering-conditioned propagation rule.  Concentration
parameters are inferred by univariate slice sampling.
"""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from ._kernels import _pure, get_backend
from .corpus import Corpus
from .priors import Partition, PriorSpec, ProcessKind

logger = logging.getLogger(__name__)

NEW = None  # candidate marker for "open a new cluster"


@dataclass(frozen=True)
class HyperParams:
    """Concentrations of the three smoothing levels."""

    beta: float = 1.0
    beta1: float = 1.0
    beta0: float = 1.0

    def __post_init__(self):
        for name in ("beta", "beta1", "beta0"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    def as_dict(self) -> dict:
        return {"beta": self.beta, "beta1": self.beta1, "beta0": self.beta0}


@dataclass(frozen=True)
class SliceConfig:
    """Slice sampler settings; support is log-beta in [log_lo, log_hi]."""

    width: float = 1.0
    max_step_out: int = 100
    max_shrink: int = 100
    log_lo: float = -10.0
    log_hi: float = 10.0


@dataclass(frozen=True)
class GibbsConfig:
    sweeps: int
    burn_in: int = 0
    hyper_interval: int = 0
    seed: int = 0
    init_hypers: HyperParams = HyperParams()
    slice_config: SliceConfig = SliceConfig()
    init: str = "single"
    validate_every: int = 0

    def __post_init__(self):
        if not self.sweeps > self.burn_in >= 0:
            raise ValueError("need sweeps > burn_in >= 0")


class CountState:
    """Nested token counts: per cluster, per corpus, plus documents per cluster.

    Rows at or beyond ``num_clusters`` are kept at zero.  Removing a document
    may leave an empty cluster row behind; re-adding the same document under
    the same label restores the state exactly.
    """

    def __init__(self, vocab_size: int, capacity: int):
        self.vocab_size = int(vocab_size)
        self.capacity = int(capacity)
        self.n_w_given_c = np.zeros((self.capacity, self.vocab_size), dtype=np.int64)
        self.cluster_totals = np.zeros(self.capacity, dtype=np.int64)
        self.cluster_doc_counts = np.zeros(self.capacity, dtype=np.int64)
        self.n_w = np.zeros(self.vocab_size, dtype=np.int64)
        self.total_tokens = 0
        self.num_clusters = 0

    @classmethod
    def from_corpus(cls, corpus: Corpus, assignments) -> "CountState":
        """Build the sufficient statistics for 1-based contiguous assignments."""
        assignments = np.asarray(assignments, dtype=np.int64)
        d = corpus.num_documents
        if assignments.shape != (d,):
            raise ValueError("one assignment per document required")
        k = int(assignments.max()) if d else 0
        labels = np.unique(assignments)
        if d and (labels[0] < 1 or k != labels.shape[0]):
            raise ValueError("assignments must use contiguous labels 1..K")
        state = cls(corpus.vocab_size, capacity=d + 1)
        state.num_clusters = k
        for doc_idx in range(d):
            c = int(assignments[doc_idx]) - 1
            toks = corpus.documents[doc_idx]
            for w in toks:
                state.n_w_given_c[c, w] += 1
                state.n_w[w] += 1
            state.cluster_totals[c] += len(toks)
            state.cluster_doc_counts[c] += 1
            state.total_tokens += len(toks)
        return state

    def remove_document(self, corpus: Corpus, doc_idx: int, label: int):
        """Remove document doc_idx currently assigned to 1-based ``label``."""
        c = label - 1
        toks = corpus.documents[doc_idx]
        if self.cluster_doc_counts[c] < 1:
            raise ValueError(f"cluster {label} has no documents to remove")
        for w in toks:
            self.n_w_given_c[c, w] -= 1
            self.n_w[w] -= 1
        self.cluster_totals[c] -= len(toks)
        self.cluster_doc_counts[c] -= 1
        self.total_tokens -= len(toks)
        if np.any(self.n_w_given_c[c] < 0):
            raise ValueError("count state does not contain this document")

    def add_document(self, corpus: Corpus, doc_idx: int, label: int):
        """Add document doc_idx to 1-based ``label``; K+1 opens a new cluster."""
        if not 1 <= label <= self.num_clusters + 1:
            raise ValueError(f"label {label} outside 1..{self.num_clusters + 1}")
        if label == self.num_clusters + 1:
            self.num_clusters += 1
        c = label - 1
        toks = corpus.documents[doc_idx]
        for w in toks:
            self.n_w_given_c[c, w] += 1
            self.n_w[w] += 1
        self.cluster_totals[c] += len(toks)
        self.cluster_doc_counts[c] += 1
        self.total_tokens += len(toks)

    def copy(self) -> "CountState":
        dup = CountState(self.vocab_size, self.capacity)
        dup.n_w_given_c[...] = self.n_w_given_c
        dup.cluster_totals[...] = self.cluster_totals
        dup.cluster_doc_counts[...] = self.cluster_doc_counts
        dup.n_w[...] = self.n_w
        dup.total_tokens = self.total_tokens
        dup.num_clusters = self.num_clusters
        return dup

    def copy_with_vocab(self, vocab_size: int) -> "CountState":
        """Copy with the vocabulary widened; new word ids carry zero counts."""
        if vocab_size < self.vocab_size:
            raise ValueError("vocabulary can only grow")
        dup = CountState(vocab_size, self.capacity)
        dup.n_w_given_c[:, : self.vocab_size] = self.n_w_given_c
        dup.cluster_totals[...] = self.cluster_totals
        dup.cluster_doc_counts[...] = self.cluster_doc_counts
        dup.n_w[: self.vocab_size] = self.n_w
        dup.total_tokens = self.total_tokens
        dup.num_clusters = self.num_clusters
        return dup

    def equals(self, other: "CountState") -> bool:
        return (
            self.num_clusters == other.num_clusters
            and self.total_tokens == other.total_tokens
            and np.array_equal(self.n_w, other.n_w)
            and np.array_equal(self.cluster_doc_counts[: self.num_clusters],
                               other.cluster_doc_counts[: other.num_clusters])
            and np.array_equal(self.cluster_totals[: self.num_clusters],
                               other.cluster_totals[: other.num_clusters])
            and np.array_equal(self.n_w_given_c[: self.num_clusters],
                               other.n_w_given_c[: other.num_clusters])
        )

    def validate_against(self, corpus: Corpus, assignments):
        """Raise if the counts differ from a from-scratch rebuild."""
        rebuilt = CountState.from_corpus(corpus, assignments)
        if not self.equals(rebuilt):
            raise AssertionError("count state diverged from assignments")


@dataclass
class ChainState:
    """Mutable Gibbs sampler state for one chain."""

    assignments: np.ndarray  # 1-based labels, one per document
    counts: CountState
    hypers: HyperParams
    iteration: int
    gen: np.random.Generator
    _tokens: np.ndarray = field(repr=False, default=None)
    _offsets: np.ndarray = field(repr=False, default=None)

    @classmethod
    def initialize(cls, corpus: Corpus, config: GibbsConfig) -> "ChainState":
        d = corpus.num_documents
        if config.init == "single":
            assignments = np.ones(d, dtype=np.int64)
        elif config.init == "singletons":
            assignments = np.arange(1, d + 1, dtype=np.int64)
        else:
            raise ValueError(f"unknown init {config.init!r}")
        return cls.from_assignments(corpus, assignments, config.init_hypers,
                                    gen=rng.generator(config.seed))

    @classmethod
    def from_assignments(cls, corpus: Corpus, assignments, hypers: HyperParams,
                         gen: np.random.Generator, iteration: int = 0) -> "ChainState":
        part = Partition.from_labels(assignments)
        assignments = part.assignments.copy()
        tokens, offsets = corpus.flat_tokens()
        return cls(
            assignments=assignments,
            counts=CountState.from_corpus(corpus, assignments),
            hypers=hypers, iteration=iteration, gen=gen,
            _tokens=tokens, _offsets=offsets,
        )

    def partition(self) -> Partition:
        return Partition.from_labels(self.assignments)

    @property
    def num_clusters(self) -> int:
        return self.counts.num_clusters


@dataclass(frozen=True)
class GibbsSample:
    iteration: int
    assignments: np.ndarray
    hypers: HyperParams
    num_clusters: int


def doc_log_likelihood(corpus: Corpus, doc_idx: int, candidate, counts: CountState,
                       hypers: HyperParams) -> float:
    """Log-likelihood of document doc_idx joining ``candidate`` (1-based, or
    NEW).  ``counts`` must exclude the document itself; its tokens enter the
    document, cluster and corpus smoothing levels as a running prefix.
    """
    toks = corpus.documents[doc_idx]
    if len(toks) and int(np.max(toks)) >= counts.vocab_size:
        raise ValueError("document contains a word id outside the vocabulary")
    if candidate is NEW:
        row, tot = None, 0
    else:
        if not 1 <= candidate <= counts.num_clusters:
            raise ValueError(f"candidate {candidate} outside 1..{counts.num_clusters}")
        row = counts.n_w_given_c[candidate - 1]
        tot = int(counts.cluster_totals[candidate - 1])
    return _pure.score_doc(
        toks, row, tot, counts.n_w, counts.total_tokens,
        hypers.beta, hypers.beta1, hypers.beta0, counts.vocab_size,
    )


def conditional_prior_dp(other_assignments, position: int, theta: float) -> np.ndarray:
    """Log conditional prior over clusters 1..K plus NEW (last entry).

    ``other_assignments`` holds 1-based labels for every document; the entry
    at ``position`` is ignored.  Depends only on documents-per-cluster counts.
    """
    cdoc, k, d = _other_doc_counts(other_assignments, position)
    out = np.empty(k + 1, dtype=np.float64)
    den = math.log(d - 1 + theta)
    for c in range(k):
        out[c] = math.log(float(cdoc[c])) - den
    out[k] = math.log(theta) - den
    return out


def conditional_prior_up(other_assignments, position: int, theta: float) -> np.ndarray:
    """Ordering-conditioned log prior over clusters 1..K plus NEW (last entry).

    Each candidate value for slot ``position`` is scored by its own predictive
    factor times the factors it propagates to every later position, then the
    candidates are normalized.  With ``position`` last this reduces to the
    plain uniform-process predictive.
    """
    a = np.asarray(other_assignments, dtype=np.int64)
    _, k, _ = _other_doc_counts(other_assignments, position)
    work = a - 1
    if a[position] < 1 or a[position] > k:
        work = work.copy()
        work[position] = 0  # slot value is ignored; keep labels in range
    return np.asarray(_pure.up_doc_prior(work, position, k, theta), dtype=np.float64)


def _other_doc_counts(assignments, position):
    a = np.asarray(assignments, dtype=np.int64)
    d = a.shape[0]
    others = np.delete(a, position)
    if others.size == 0:
        return np.zeros(0, dtype=np.int64), 0, d
    labels = np.unique(others)
    k = int(labels[-1])
    if labels[0] < 1 or k != labels.shape[0]:
        raise ValueError("labels excluding `position` must be contiguous 1..K")
    cdoc = np.bincount(others, minlength=k + 1)[1:]
    return cdoc, k, d


def gibbs_sweep(state: ChainState, corpus: Corpus, prior: PriorSpec) -> ChainState:
    """One in-place systematic sweep; relabels canonically at the end."""
    kind = _model_kind(prior)
    kernel = get_backend()
    counts = state.counts
    assign0 = state.assignments - 1
    k = kernel.gibbs_sweep(
        kind, prior.theta, state.hypers.beta, state.hypers.beta1, state.hypers.beta0,
        assign0, state._tokens, state._offsets,
        counts.n_w_given_c, counts.cluster_totals, counts.cluster_doc_counts,
        counts.n_w, counts.total_tokens, counts.num_clusters, state.gen,
    )
    state.assignments[...] = assign0 + 1
    counts.num_clusters = int(k)
    state.iteration += 1
    return state


def corpus_log_likelihood(corpus: Corpus, assignments, hypers: HyperParams) -> float:
    """Joint log-probability of all tokens given assignments (chain rule over
    documents in corpus order)."""
    a = np.asarray(assignments, dtype=np.int64)
    tokens, offsets = corpus.flat_tokens()
    k = int(a.max()) if a.size else 0
    kernel = get_backend()
    return float(kernel.corpus_log_likelihood(
        a - 1, tokens, offsets, k, corpus.vocab_size,
        hypers.beta, hypers.beta1, hypers.beta0,
    ))


def slice_sample_hypers(state: ChainState, corpus: Corpus,
                        config: SliceConfig = None) -> ChainState:
    """Resample beta, beta1, beta0 by slice sampling in log space.

    The target is the token likelihood given the current assignments, under a
    uniform prior on each log concentration over [log_lo, log_hi].
    """
    cfg = config or SliceConfig()
    kernel = get_backend()
    assign0 = state.assignments - 1
    k = state.counts.num_clusters
    w = state.counts.vocab_size
    values = [state.hypers.beta, state.hypers.beta1, state.hypers.beta0]
    for j in range(3):
        def target(x):
            trial = list(values)
            trial[j] = math.exp(x)
            return kernel.corpus_log_likelihood(
                assign0, state._tokens, state._offsets, k, w,
                trial[0], trial[1], trial[2],
            )

        x0 = math.log(values[j])
        x1 = _slice_update(target, x0, cfg, state.gen)
        values[j] = math.exp(x1)
    state.hypers = HyperParams(beta=values[0], beta1=values[1], beta0=values[2])
    return state


def _slice_update(target, x0, cfg: SliceConfig, gen: np.random.Generator) -> float:
    f0 = target(x0)
    y = f0 + math.log(gen.random())
    u = gen.random()
    left = x0 - cfg.width * u
    right = left + cfg.width
    steps = 0
    while left > cfg.log_lo and steps < cfg.max_step_out and target(left) > y:
        left -= cfg.width
        steps += 1
    left = max(left, cfg.log_lo)
    steps = 0
    while right < cfg.log_hi and steps < cfg.max_step_out and target(right) > y:
        right += cfg.width
        steps += 1
    right = min(right, cfg.log_hi)
    for _ in range(cfg.max_shrink):
        x1 = left + gen.random() * (right - left)
        if target(x1) > y:
            return x1
        if x1 < x0:
            left = x1
        else:
            right = x1
    logger.warning("slice sampler failed to shrink; keeping current value")
    return x0


def run_chain(corpus: Corpus, prior: PriorSpec, config: GibbsConfig,
              return_state: bool = False):
    """Run one Gibbs chain and return post-burn-in samples.

    With ``return_state`` the final ChainState (for checkpointing) is returned
    alongside the samples.
    """
    _model_kind(prior)
    state = ChainState.initialize(corpus, config)
    samples = []
    for sweep in range(config.sweeps):
        gibbs_sweep(state, corpus, prior)
        if config.hyper_interval > 0 and (sweep + 1) % config.hyper_interval == 0:
            slice_sample_hypers(state, corpus, config.slice_config)
        if config.validate_every > 0 and (sweep + 1) % config.validate_every == 0:
            state.counts.validate_against(corpus, state.assignments)
        if sweep >= config.burn_in:
            samples.append(GibbsSample(
                iteration=state.iteration,
                assignments=state.assignments.copy(),
                hypers=state.hypers,
                num_clusters=state.num_clusters,
            ))
    if return_state:
        return samples, state
    return samples


def _model_kind(prior: PriorSpec) -> int:
    if prior.kind == ProcessKind.DIRICHLET:
        return _pure.DP
    if prior.kind == ProcessKind.UNIFORM:
        return _pure.UP
    raise ValueError("the document model supports Dirichlet and uniform priors only")


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_SCHEMA = "npclust-chain-v1"


class CheckpointError(Exception):
    pass


def save_checkpoint(path, state: ChainState, prior: PriorSpec, corpus: Corpus):
    payload = {
        "schema": CHECKPOINT_SCHEMA,
        "prior": {
            "process": prior.short_name,
            "theta": prior.theta,
            "alpha": prior.alpha,
        },
        "assignments": [int(c) for c in state.assignments],
        "hypers": state.hypers.as_dict(),
        "iteration": state.iteration,
        "num_clusters": state.num_clusters,
        "rng_state": state.gen.bit_generator.state,
        "corpus_sha256": corpus.content_hash(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path, corpus: Corpus):
    """Restore (ChainState, PriorSpec) from a checkpoint written for ``corpus``."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema") != CHECKPOINT_SCHEMA:
        raise CheckpointError(f"unrecognized checkpoint schema in {path}")
    if payload["corpus_sha256"] != corpus.content_hash():
        raise CheckpointError("checkpoint was written for a different corpus")
    prior = PriorSpec(
        ProcessKind.parse(payload["prior"]["process"]),
        payload["prior"]["theta"],
        payload["prior"].get("alpha", 0.0),
    )
    state = ChainState.from_assignments(
        corpus, np.asarray(payload["assignments"], dtype=np.int64),
        HyperParams(**payload["hypers"]),
        gen=rng.generator_from_state(payload["rng_state"]),
        iteration=int(payload["iteration"]),
    )
    return state, prior
