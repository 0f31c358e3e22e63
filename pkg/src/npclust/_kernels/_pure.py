"""Pure-Python kernel backend.

Reference implementations of the hot loops: sequential partition sampling,
joint log-probabilities over orderings, the collapsed Gibbs sweep, the
sequential corpus likelihood and the left-to-right particle estimator.

The compiled backend (``npclust._kernels._core``) mirrors these functions
statement for statement.  Both consume randomness exclusively as a stream of
uniform doubles from a numpy ``Generator`` (one ``next_double`` per draw), and
both perform float operations in the same order, so for a fixed seed the two
backends produce bit-identical results.  Keep the two in sync: any change here
must be replicated in ``_core.pyx``.
"""

import math

import numpy as np

DP = 0
PY = 1
UP = 2

BACKEND_NAME = "pure"


# ---------------------------------------------------------------------------
# partition processes
# ---------------------------------------------------------------------------

def extend_partition(kind, theta, alpha, assignments, sizes, num_clusters, n, gen):
    """Draw the cluster label (0-based) for observation n+1.

    assignments[:n] are the current 0-based labels, sizes[:num_clusters] the
    cluster sizes.  Returns num_clusters for a new cluster.  Sampling is exact
    for all three predictive rules: DP joins the cluster of a uniformly chosen
    previous observation, UP picks a uniform existing cluster, PY uses
    rejection with proposal proportional to cluster size.
    """
    if kind == DP:
        x = gen.random() * (n + theta)
        if x < n:
            j = int(x)
            if j >= n:
                j = n - 1
            return int(assignments[j])
        return num_clusters
    if kind == UP:
        u = gen.random() * (num_clusters + theta)
        if u < theta:
            return num_clusters
        j = int(u - theta)
        if j >= num_clusters:
            j = num_clusters - 1
        return j
    # PY
    p_new = (theta + num_clusters * alpha) / (n + theta)
    if gen.random() < p_new:
        return num_clusters
    while True:
        j = int(gen.random() * n)
        if j >= n:
            j = n - 1
        k = int(assignments[j])
        sz = sizes[k]
        if gen.random() * sz < sz - alpha:
            return k


def sample_assignments(kind, theta, alpha, n, gen):
    """Sample a canonical 0-based assignment sequence of length n."""
    assignments = np.empty(n, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    num_clusters = 0
    for i in range(n):
        c = extend_partition(kind, theta, alpha, assignments, sizes, num_clusters, i, gen)
        assignments[i] = c
        sizes[c] += 1
        if c == num_clusters:
            num_clusters += 1
    return assignments


def log_joint(kind, theta, alpha, assignments):
    """Sum of log predictive factors for the stored order.

    Labels may be any non-negative ints; a label's first occurrence is a
    new-cluster event.
    """
    n = len(assignments)
    if n == 0:
        return 0.0
    hi = int(np.max(assignments)) + 1 if n else 0
    sizes = np.zeros(hi, dtype=np.int64)
    num_clusters = 0
    total = 0.0
    for i in range(n):
        c = assignments[i]
        if sizes[c] == 0:
            if kind == UP:
                total += math.log(theta / (num_clusters + theta))
            elif kind == DP:
                total += math.log(theta / (i + theta))
            else:
                total += math.log((theta + num_clusters * alpha) / (i + theta))
            num_clusters += 1
        else:
            if kind == UP:
                total += math.log(1.0 / (num_clusters + theta))
            elif kind == DP:
                total += math.log(sizes[c] / (i + theta))
            else:
                total += math.log((sizes[c] - alpha) / (i + theta))
        sizes[c] += 1
    return total


def permuted_log_joints(kind, theta, alpha, assignments, num_orderings, gen):
    """log_joint of Fisher-Yates-shuffled copies of ``assignments``."""
    n = len(assignments)
    out = np.empty(num_orderings, dtype=np.float64)
    for t in range(num_orderings):
        a = np.array(assignments, dtype=np.int64, copy=True)
        u = gen.random(n - 1) if n > 1 else ()
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            if j > i:
                j = i
            a[i], a[j] = a[j], a[i]
        out[t] = log_joint(kind, theta, alpha, a)
    return out


# ---------------------------------------------------------------------------
# shared sampling helper
# ---------------------------------------------------------------------------

def categorical_from_log_weights(log_w, u):
    """Index sampled from unnormalized log weights using one uniform."""
    m = log_w[0]
    for x in log_w[1:]:
        if x > m:
            m = x
    weights = [math.exp(x - m) for x in log_w]
    total = 0.0
    for w in weights:
        total += w
    target = u * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if target < acc:
            return i
    return len(weights) - 1


def _log_normalize(log_w):
    m = log_w[0]
    for x in log_w[1:]:
        if x > m:
            m = x
    total = 0.0
    for x in log_w:
        total += math.exp(x - m)
    lse = m + math.log(total)
    return [x - lse for x in log_w], lse


# ---------------------------------------------------------------------------
# document model scoring
# ---------------------------------------------------------------------------

def score_doc(tokens, ncw_row, ctot_c, nw, ntot, beta, beta1, beta0, W):
    """Log-likelihood of one document under one candidate cluster.

    ``ncw_row``/``ctot_c`` are the candidate cluster's word counts and total
    (None/0 for a new cluster); ``nw``/``ntot`` the corpus counts.  All counts
    must exclude the document itself; its own tokens enter at all three
    smoothing levels as a running prefix.
    """
    b0w = beta0 / W
    ll = 0.0
    pref = {}
    for i in range(len(tokens)):
        w = int(tokens[i])
        pw = pref.get(w, 0)
        p0 = (nw[w] + pw + b0w) / (ntot + i + beta0)
        cb = ncw_row[w] if ncw_row is not None else 0
        p1 = (cb + pw + beta1 * p0) / (ctot_c + i + beta1)
        p2 = (pw + beta * p1) / (i + beta)
        ll += math.log(p2)
        pref[w] = pw + 1
    return ll


def dp_doc_prior(cdoc, num_clusters, total_docs, theta):
    """Normalized log conditional prior over clusters 0..K-1 plus new (last)."""
    den = math.log(total_docs - 1 + theta)
    out = [math.log(float(cdoc[c])) - den for c in range(num_clusters)]
    out.append(math.log(theta) - den)
    return out


def up_doc_prior(assignments, d, num_clusters, theta):
    """Normalized log conditional prior for slot d under the uniform process.

    ``assignments`` holds current 0-based labels for every document except d
    (entry d is ignored), using contiguous labels 0..num_clusters-1.  Each
    candidate value is scored by the predictive factor at position d times the
    propagation factors at positions d+1..D-1.
    """
    D = len(assignments)
    seen0 = bytearray(num_clusters + 1)
    k0 = 0
    for m in range(d):
        c = assignments[m]
        if not seen0[c]:
            seen0[c] = 1
            k0 += 1
    log_w = []
    for v in range(num_clusters + 1):
        seen = bytearray(seen0)
        kk = k0
        tot = 0.0
        if seen[v]:
            tot += math.log(1.0 / (kk + theta))
        else:
            tot += math.log(theta / (kk + theta))
            seen[v] = 1
            kk += 1
        for m in range(d + 1, D):
            c = assignments[m]
            if seen[c]:
                tot += math.log(1.0 / (kk + theta))
            else:
                tot += math.log(theta / (kk + theta))
                seen[c] = 1
                kk += 1
        log_w.append(tot)
    normalized, _ = _log_normalize(log_w)
    return normalized


# ---------------------------------------------------------------------------
# collapsed Gibbs sweep
# ---------------------------------------------------------------------------

def gibbs_sweep(kind, theta, beta, beta1, beta0, assignments, tokens, offsets,
                ncw, ctot, cdoc, nw, ntot, num_clusters, gen):
    """One systematic-scan sweep over all documents; mutates state in place.

    ``assignments`` are 0-based contiguous labels; count arrays are sized to
    capacity with rows >= num_clusters all zero.  Returns the new cluster
    count.  The corpus token total ``ntot`` is unchanged on exit.
    """
    D = len(assignments)
    W = nw.shape[0]
    K = num_clusters
    for d in range(D):
        lo = offsets[d]
        hi = offsets[d + 1]
        toks = tokens[lo:hi]
        nd = hi - lo
        old = int(assignments[d])
        for t in range(nd):
            w = int(toks[t])
            ncw[old, w] -= 1
            nw[w] -= 1
        ctot[old] -= nd
        ntot -= nd
        cdoc[old] -= 1
        if cdoc[old] == 0:
            K -= 1
            if old != K:
                ncw[old, :] = ncw[K, :]
                ncw[K, :] = 0
                ctot[old] = ctot[K]
                ctot[K] = 0
                cdoc[old] = cdoc[K]
                cdoc[K] = 0
                for m in range(D):
                    if assignments[m] == K:
                        assignments[m] = old
        if kind == DP:
            log_prior = dp_doc_prior(cdoc, K, D, theta)
        else:
            log_prior = up_doc_prior(assignments, d, K, theta)
        log_w = []
        for c in range(K + 1):
            row = ncw[c] if c < K else None
            tc = int(ctot[c]) if c < K else 0
            log_w.append(log_prior[c] + score_doc(toks, row, tc, nw, ntot, beta, beta1, beta0, W))
        c = categorical_from_log_weights(log_w, gen.random())
        if c == K:
            K += 1
        assignments[d] = c
        cdoc[c] += 1
        for t in range(nd):
            w = int(toks[t])
            ncw[c, w] += 1
            nw[w] += 1
        ctot[c] += nd
        ntot += nd
    relabel_canonical(assignments, ncw, ctot, cdoc, K)
    return K


def relabel_canonical(assignments, ncw, ctot, cdoc, num_clusters):
    """Relabel clusters by order of first occurrence; permutes count rows."""
    D = len(assignments)
    perm = np.full(num_clusters, -1, dtype=np.int64)
    nxt = 0
    for d in range(D):
        c = assignments[d]
        if perm[c] < 0:
            perm[c] = nxt
            nxt += 1
        assignments[d] = perm[c]
    if np.all(perm == np.arange(num_clusters)):
        return
    inv = np.empty(num_clusters, dtype=np.int64)
    inv[perm] = np.arange(num_clusters)
    ncw[:num_clusters] = ncw[inv]
    ctot[:num_clusters] = ctot[inv]
    cdoc[:num_clusters] = cdoc[inv]


# ---------------------------------------------------------------------------
# sequential corpus likelihood (slice sampling target)
# ---------------------------------------------------------------------------

def corpus_log_likelihood(assignments, tokens, offsets, num_clusters, W,
                          beta, beta1, beta0):
    """Joint log-probability of all tokens given assignments.

    Documents are scored left to right: document d sees counts from documents
    0..d-1 plus its own token prefix, which makes the result an exact chain
    rule factorization.
    """
    D = len(assignments)
    ncw = np.zeros((num_clusters, W), dtype=np.int64)
    ctot = np.zeros(num_clusters, dtype=np.int64)
    nw = np.zeros(W, dtype=np.int64)
    ntot = 0
    ll = 0.0
    for d in range(D):
        lo = offsets[d]
        hi = offsets[d + 1]
        toks = tokens[lo:hi]
        c = int(assignments[d])
        ll += score_doc(toks, ncw[c], int(ctot[c]), nw, ntot, beta, beta1, beta0, W)
        nd = hi - lo
        for t in range(nd):
            w = int(toks[t])
            ncw[c, w] += 1
            nw[w] += 1
        ctot[c] += nd
        ntot += nd
    return ll


# ---------------------------------------------------------------------------
# left-to-right held-out estimator
# ---------------------------------------------------------------------------

def left_to_right(kind, theta, beta, beta1, beta0, train_ncw, train_ctot,
                  train_cdoc, train_nw, train_ntot, num_train_clusters,
                  num_train_docs, test_tokens, test_offsets, order,
                  num_particles, gen):
    """One left-to-right run over the test documents in the given order.

    Each particle holds its own copy of the count state; for every test
    document it sums prior x likelihood over all candidate clusters (its
    incremental path weight) and then commits an assignment sampled from the
    summands.  The estimate is the log of the particle average of whole-path
    weight products; without resampling this form is unbiased for the
    marginal in the probability domain, unlike a product of per-document
    particle means.
    """
    R = num_particles
    T = len(order)
    W = train_nw.shape[0]
    cap = num_train_clusters + T + 1
    ncw = np.zeros((R, cap, W), dtype=np.int64)
    ctot = np.zeros((R, cap), dtype=np.int64)
    cdoc = np.zeros((R, cap), dtype=np.int64)
    nw = np.zeros((R, W), dtype=np.int64)
    ntot = np.zeros(R, dtype=np.int64)
    num_clusters = np.zeros(R, dtype=np.int64)
    for r in range(R):
        ncw[r, :num_train_clusters] = train_ncw[:num_train_clusters]
        ctot[r, :num_train_clusters] = train_ctot[:num_train_clusters]
        cdoc[r, :num_train_clusters] = train_cdoc[:num_train_clusters]
        nw[r] = train_nw
        ntot[r] = train_ntot
        num_clusters[r] = num_train_clusters
    path_lw = [0.0] * R
    for i in range(T):
        doc = order[i]
        lo = test_offsets[doc]
        hi = test_offsets[doc + 1]
        toks = test_tokens[lo:hi]
        nd = hi - lo
        for r in range(R):
            K = int(num_clusters[r])
            log_w = []
            for c in range(K + 1):
                if kind == DP:
                    den = num_train_docs + i + theta
                    num = float(cdoc[r, c]) if c < K else theta
                    lp = math.log(num / den)
                else:
                    den = K + theta
                    lp = math.log((1.0 if c < K else theta) / den)
                row = ncw[r, c] if c < K else None
                tc = int(ctot[r, c]) if c < K else 0
                lp += score_doc(toks, row, tc, nw[r], int(ntot[r]), beta, beta1, beta0, W)
                log_w.append(lp)
            _, lse = _log_normalize(log_w)
            path_lw[r] += lse
            c = categorical_from_log_weights(log_w, gen.random())
            if c == K:
                num_clusters[r] = K + 1
            cdoc[r, c] += 1
            for t in range(nd):
                w = int(toks[t])
                ncw[r, c, w] += 1
                nw[r, w] += 1
            ctot[r, c] += nd
            ntot[r] += nd
    _, total = _log_normalize(path_lw)
    return total - math.log(R)
