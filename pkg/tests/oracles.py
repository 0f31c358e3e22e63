"""Independent brute-force oracles used across the test suite.

Everything here is written as a direct transcription of the defining
formulas, deliberately sharing no code with the package internals: dict-based
counts, explicit products, exhaustive enumeration.  Slow but trustworthy.
"""

import math
from itertools import permutations

import numpy as np

from npclust.priors import PriorSpec, ProcessKind


def canonical_sequences(n):
    """All canonical label sequences of length n (labels 1..K by first use)."""
    out = []

    def rec(prefix, k):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for c in range(1, k + 2):
            rec(prefix + [c], max(k, c))

    rec([], 0)
    return out


def sequence_log_prob(spec: PriorSpec, seq) -> float:
    """Joint probability of a label sequence, factor by factor."""
    sizes = {}
    total = 0.0
    for i, c in enumerate(seq):
        n = i
        k = len(sizes)
        if c in sizes:
            if spec.kind == ProcessKind.UNIFORM:
                p = 1.0 / (k + spec.theta)
            elif spec.kind == ProcessKind.DIRICHLET:
                p = sizes[c] / (n + spec.theta)
            else:
                p = (sizes[c] - spec.alpha) / (n + spec.theta)
        else:
            if spec.kind == ProcessKind.UNIFORM:
                p = spec.theta / (k + spec.theta)
            elif spec.kind == ProcessKind.DIRICHLET:
                p = spec.theta / (n + spec.theta)
            else:
                p = (spec.theta + k * spec.alpha) / (n + spec.theta)
        total += math.log(p)
        sizes[c] = sizes.get(c, 0) + 1
    return total


def sequence_distribution(spec: PriorSpec, n):
    """Exact distribution over canonical sequences of length n."""
    return {seq: math.exp(sequence_log_prob(spec, seq)) for seq in canonical_sequences(n)}


def exact_expected_k(spec: PriorSpec, n) -> float:
    dist = sequence_distribution(spec, n)
    return sum(p * max(seq) for seq, p in dist.items())


def all_permutation_log_probs(spec: PriorSpec, labels):
    """log joint under every ordering of the observations."""
    vals = []
    for perm in permutations(range(len(labels))):
        vals.append(sequence_log_prob(spec, [labels[i] for i in perm]))
    return vals


# ---------------------------------------------------------------------------
# document model oracles
# ---------------------------------------------------------------------------

def doc_loglik_ref(doc_tokens, cluster_counts, cluster_total, corpus_counts,
                   corpus_total, w, beta, beta1, beta0):
    """Literal three-level smoothing with separate prefix counters per level."""
    dcount, dn = {}, 0
    ccount, ct = dict(cluster_counts), cluster_total
    gcount, gt = dict(corpus_counts), corpus_total
    ll = 0.0
    for tok in doc_tokens:
        tok = int(tok)
        p_corpus = (gcount.get(tok, 0) + beta0 * (1.0 / w)) / (gt + beta0)
        p_cluster = (ccount.get(tok, 0) + beta1 * p_corpus) / (ct + beta1)
        p_doc = (dcount.get(tok, 0) + beta * p_cluster) / (dn + beta)
        ll += math.log(p_doc)
        dcount[tok] = dcount.get(tok, 0) + 1
        dn += 1
        ccount[tok] = ccount.get(tok, 0) + 1
        ct += 1
        gcount[tok] = gcount.get(tok, 0) + 1
        gt += 1
    return ll


def _counts_without(corpus, assignments, skip):
    cluster_counts = {}
    cluster_totals = {}
    cluster_docs = {}
    corpus_counts = {}
    corpus_total = 0
    for d, label in enumerate(assignments):
        if d == skip:
            continue
        cc = cluster_counts.setdefault(label, {})
        for tok in corpus.documents[d]:
            tok = int(tok)
            cc[tok] = cc.get(tok, 0) + 1
            corpus_counts[tok] = corpus_counts.get(tok, 0) + 1
        cluster_totals[label] = cluster_totals.get(label, 0) + len(corpus.documents[d])
        cluster_docs[label] = cluster_docs.get(label, 0) + 1
        corpus_total += len(corpus.documents[d])
    return cluster_counts, cluster_totals, cluster_docs, corpus_counts, corpus_total


def site_conditional(corpus, assignments, d, spec, hypers):
    """Exact single-site resampling distribution for document d.

    Candidate weights are full-sequence joint prior probabilities (so the
    uniform-process propagation comes out of the definition, not the
    implementation) times the likelihood with all other documents' counts.
    Returns (labels, probs) where the last label K+1 denotes a new cluster.
    """
    a = list(assignments)
    ccounts, ctotals, cdocs, gcounts, gtotal = _counts_without(corpus, a, d)
    existing = []
    for x in a[:d] + a[d + 1:]:
        if x not in existing:
            existing.append(x)
    relabel = {old: i + 1 for i, old in enumerate(existing)}
    base = [relabel[x] for x in (a[:d] + a[d + 1:])]
    k = len(existing)
    log_w = []
    labels = list(range(1, k + 2))
    for v in labels:
        seq = base[:d] + [v] + base[d:]
        lp = sequence_log_prob(spec, seq)
        if v <= k:
            old = existing[v - 1]
            lp += doc_loglik_ref(
                corpus.documents[d], ccounts[old], ctotals[old], gcounts, gtotal,
                corpus.vocab_size, hypers.beta, hypers.beta1, hypers.beta0,
            )
        else:
            lp += doc_loglik_ref(
                corpus.documents[d], {}, 0, gcounts, gtotal,
                corpus.vocab_size, hypers.beta, hypers.beta1, hypers.beta0,
            )
        log_w.append(lp)
    m = max(log_w)
    weights = [math.exp(x - m) for x in log_w]
    z = sum(weights)
    probs = [x / z for x in weights]
    new_states = []
    for v in labels:
        seq = base[:d] + [v] + base[d:]
        new_states.append(canonicalize(seq))
    return new_states, probs


def canonicalize(seq):
    seen = {}
    out = []
    for c in seq:
        if c not in seen:
            seen[c] = len(seen) + 1
        out.append(seen[c])
    return tuple(out)


def corpus_loglik_ref(corpus, assignments, hypers):
    """Chain-rule joint likelihood: document d sees documents 0..d-1 only."""
    ccounts = {}
    ctotals = {}
    gcounts = {}
    gtotal = 0
    total = 0.0
    for d, label in enumerate(assignments):
        total += doc_loglik_ref(
            corpus.documents[d], ccounts.get(label, {}), ctotals.get(label, 0),
            gcounts, gtotal, corpus.vocab_size,
            hypers.beta, hypers.beta1, hypers.beta0,
        )
        cc = ccounts.setdefault(label, {})
        for tok in corpus.documents[d]:
            tok = int(tok)
            cc[tok] = cc.get(tok, 0) + 1
            gcounts[tok] = gcounts.get(tok, 0) + 1
        ctotals[label] = ctotals.get(label, 0) + len(corpus.documents[d])
        gtotal += len(corpus.documents[d])
    return total


def enumerated_posterior(corpus, spec, hypers):
    """Posterior over canonical sequences: joint prior times the chain-rule
    joint likelihood of all tokens given the assignments."""
    d = corpus.num_documents
    states = canonical_sequences(d)
    log_w = [
        sequence_log_prob(spec, seq) + corpus_loglik_ref(corpus, seq, hypers)
        for seq in states
    ]
    m = max(log_w)
    weights = [math.exp(x - m) for x in log_w]
    z = sum(weights)
    return {s: w / z for s, w in zip(states, weights)}


def sweep_stationary_distribution(corpus, spec, hypers, tol=1e-13):
    """Stationary distribution of the exact one-sweep transition kernel."""
    d = corpus.num_documents
    states = canonical_sequences(d)
    index = {s: i for i, s in enumerate(states)}
    s_count = len(states)
    sweep = np.eye(s_count)
    for doc in range(d):
        site = np.zeros((s_count, s_count))
        for s, seq in enumerate(states):
            new_states, probs = site_conditional(corpus, seq, doc, spec, hypers)
            for ns, p in zip(new_states, probs):
                site[s, index[ns]] += p
        sweep = sweep @ site
    dist = np.full(s_count, 1.0 / s_count)
    for _ in range(100000):
        nxt = dist @ sweep
        if np.abs(nxt - dist).sum() < tol:
            dist = nxt
            break
        dist = nxt
    return {s: dist[i] for i, s in enumerate(states)}


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
