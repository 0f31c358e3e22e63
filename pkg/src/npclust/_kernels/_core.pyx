# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Statement-for-statement mirror of ``npclust._kernels._pure``; see that module
for the algorithm documentation.  Randomness is consumed as raw uniform
doubles from the numpy bit generator so that, for a fixed seed, this backend
and the pure backend produce bit-identical results.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport exp, log
from libc.stdint cimport int64_t, int8_t
from numpy.random cimport bitgen_t

cnp.import_array()

DP = 0
PY = 1
UP = 2

BACKEND_NAME = "cython"

cdef int KIND_DP = 0
cdef int KIND_PY = 1
cdef int KIND_UP = 2

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef bitgen_t *_bitgen(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("expected a numpy Generator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


# ---------------------------------------------------------------------------
# partition processes
# ---------------------------------------------------------------------------

cdef int64_t _extend(int kind, double theta, double alpha,
                     const int64_t *assignments, const int64_t *sizes,
                     int64_t num_clusters, int64_t n,
                     bitgen_t *rng) noexcept nogil:
    cdef double x, u, p_new, sz
    cdef int64_t j, k
    if kind == KIND_DP:
        x = rng.next_double(rng.state) * (n + theta)
        if x < n:
            j = <int64_t> x
            if j >= n:
                j = n - 1
            return assignments[j]
        return num_clusters
    if kind == KIND_UP:
        u = rng.next_double(rng.state) * (num_clusters + theta)
        if u < theta:
            return num_clusters
        j = <int64_t> (u - theta)
        if j >= num_clusters:
            j = num_clusters - 1
        return j
    p_new = (theta + num_clusters * alpha) / (n + theta)
    if rng.next_double(rng.state) < p_new:
        return num_clusters
    while True:
        j = <int64_t> (rng.next_double(rng.state) * n)
        if j >= n:
            j = n - 1
        k = assignments[j]
        sz = <double> sizes[k]
        if rng.next_double(rng.state) * sz < sz - alpha:
            return k


def extend_partition(kind, theta, alpha, assignments, sizes, num_clusters, n, gen):
    cdef const int64_t[::1] a = np.ascontiguousarray(assignments, dtype=np.int64)
    cdef const int64_t[::1] s = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef bitgen_t *rng = _bitgen(gen)
    cdef int ckind = kind
    cdef double ctheta = theta, calpha = alpha
    cdef int64_t ck = num_clusters, cn = n, out
    cdef const int64_t *ap = &a[0] if cn > 0 else NULL
    with gen.bit_generator.lock:
        out = _extend(ckind, ctheta, calpha, ap, &s[0], ck, cn, rng)
    return int(out)


def sample_assignments(kind, theta, alpha, n, gen):
    cdef int64_t cn = n
    assignments = np.empty(cn, dtype=np.int64)
    sizes = np.zeros(cn, dtype=np.int64)
    cdef int64_t[::1] a = assignments
    cdef int64_t[::1] s = sizes
    cdef bitgen_t *rng = _bitgen(gen)
    cdef int ckind = kind
    cdef double ctheta = theta, calpha = alpha
    cdef int64_t num_clusters = 0, c, i
    with gen.bit_generator.lock, nogil:
        for i in range(cn):
            c = _extend(ckind, ctheta, calpha, &a[0], &s[0], num_clusters, i, rng)
            a[i] = c
            s[c] += 1
            if c == num_clusters:
                num_clusters += 1
    return assignments


cdef double _log_joint(int kind, double theta, double alpha,
                       const int64_t *a, int64_t n,
                       int64_t *sizes) noexcept nogil:
    cdef double total = 0.0
    cdef int64_t num_clusters = 0, i, c
    for i in range(n):
        c = a[i]
        if sizes[c] == 0:
            if kind == KIND_UP:
                total += log(theta / (num_clusters + theta))
            elif kind == KIND_DP:
                total += log(theta / (i + theta))
            else:
                total += log((theta + num_clusters * alpha) / (i + theta))
            num_clusters += 1
        else:
            if kind == KIND_UP:
                total += log(1.0 / (num_clusters + theta))
            elif kind == KIND_DP:
                total += log(sizes[c] / (i + theta))
            else:
                total += log((sizes[c] - alpha) / (i + theta))
        sizes[c] += 1
    return total


def log_joint(kind, theta, alpha, assignments):
    cdef const int64_t[::1] a = np.ascontiguousarray(assignments, dtype=np.int64)
    cdef int64_t n = a.shape[0]
    if n == 0:
        return 0.0
    cdef int64_t hi = 0, i
    for i in range(n):
        if a[i] + 1 > hi:
            hi = a[i] + 1
    sizes = np.zeros(hi, dtype=np.int64)
    cdef int64_t[::1] s = sizes
    return _log_joint(kind, theta, alpha, &a[0], n, &s[0])


def permuted_log_joints(kind, theta, alpha, assignments, num_orderings, gen):
    cdef const int64_t[::1] src = np.ascontiguousarray(assignments, dtype=np.int64)
    cdef int64_t n = src.shape[0]
    cdef int64_t m = num_orderings
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef int64_t hi = 1, i
    for i in range(n):
        if src[i] + 1 > hi:
            hi = src[i] + 1
    work = np.empty(n, dtype=np.int64)
    sizes = np.empty(hi, dtype=np.int64)
    cdef int64_t[::1] w = work
    cdef int64_t[::1] s = sizes
    cdef bitgen_t *rng = _bitgen(gen)
    cdef int ckind = kind
    cdef double ctheta = theta, calpha = alpha
    cdef int64_t t, j, tmp
    with gen.bit_generator.lock, nogil:
        for t in range(m):
            for i in range(n):
                w[i] = src[i]
            for i in range(n - 1, 0, -1):
                j = <int64_t> (rng.next_double(rng.state) * (i + 1))
                if j > i:
                    j = i
                tmp = w[i]
                w[i] = w[j]
                w[j] = tmp
            for i in range(hi):
                s[i] = 0
            o[t] = _log_joint(ckind, ctheta, calpha, &w[0], n, &s[0])
    return out


# ---------------------------------------------------------------------------
# shared sampling helpers
# ---------------------------------------------------------------------------

cdef int64_t _categorical(double *log_w, int64_t count, double u,
                          double *scratch) noexcept nogil:
    cdef double m = log_w[0]
    cdef int64_t i
    cdef double total = 0.0, target, acc
    for i in range(1, count):
        if log_w[i] > m:
            m = log_w[i]
    for i in range(count):
        scratch[i] = exp(log_w[i] - m)
    for i in range(count):
        total += scratch[i]
    target = u * total
    acc = 0.0
    for i in range(count):
        acc += scratch[i]
        if target < acc:
            return i
    return count - 1


cdef double _log_sum_exp(double *log_w, int64_t count) noexcept nogil:
    cdef double m = log_w[0]
    cdef int64_t i
    cdef double total = 0.0
    for i in range(1, count):
        if log_w[i] > m:
            m = log_w[i]
    for i in range(count):
        total += exp(log_w[i] - m)
    return m + log(total)


def categorical_from_log_weights(log_w, u):
    arr = np.ascontiguousarray(log_w, dtype=np.float64)
    cdef double[::1] lw = arr
    scratch = np.empty(lw.shape[0], dtype=np.float64)
    cdef double[::1] sc = scratch
    return int(_categorical(&lw[0], lw.shape[0], u, &sc[0]))


# ---------------------------------------------------------------------------
# document model scoring
# ---------------------------------------------------------------------------

cdef void _doc_prefix(const int64_t *toks, int64_t nd, int64_t *wcount,
                      int64_t *pw) noexcept nogil:
    # pw[i] = occurrences of toks[i] among toks[0..i-1]; wcount is a zeroed
    # scratch array over the vocabulary, re-zeroed before returning.
    cdef int64_t i, w
    for i in range(nd):
        w = toks[i]
        pw[i] = wcount[w]
        wcount[w] += 1
    for i in range(nd):
        wcount[toks[i]] = 0


cdef double _score_doc_c(const int64_t *toks, int64_t nd, const int64_t *pw,
                         const double *p0, const int64_t *ncw_row,
                         int64_t ctot_c, double beta,
                         double beta1) noexcept nogil:
    # p0[i] must hold the corpus-level factor at position i (candidate
    # independent); ncw_row may be NULL for a new cluster.
    cdef double ll = 0.0, p1, p2
    cdef int64_t i, w, cb
    for i in range(nd):
        w = toks[i]
        cb = ncw_row[w] if ncw_row is not NULL else 0
        p1 = (cb + pw[i] + beta1 * p0[i]) / (ctot_c + i + beta1)
        p2 = (pw[i] + beta * p1) / (i + beta)
        ll += log(p2)
    return ll


cdef void _corpus_factors(const int64_t *toks, int64_t nd, const int64_t *pw,
                          const int64_t *nw, int64_t ntot, double beta0,
                          double b0w, double *p0) noexcept nogil:
    cdef int64_t i, w
    for i in range(nd):
        w = toks[i]
        p0[i] = (nw[w] + pw[i] + b0w) / (ntot + i + beta0)


def score_doc(tokens, ncw_row, ctot_c, nw, ntot, beta, beta1, beta0, W):
    """Mirror of the pure scorer, exposed for parity tests."""
    cdef const int64_t[::1] toks = np.ascontiguousarray(tokens, dtype=np.int64)
    cdef const int64_t[::1] nw_v = np.ascontiguousarray(nw, dtype=np.int64)
    cdef int64_t nd = toks.shape[0]
    if nd == 0:
        return 0.0
    cdef int64_t cw = W
    wcount = np.zeros(cw, dtype=np.int64)
    pw = np.empty(nd, dtype=np.int64)
    p0 = np.empty(nd, dtype=np.float64)
    cdef int64_t[::1] wc = wcount
    cdef int64_t[::1] pw_v = pw
    cdef double[::1] p0_v = p0
    cdef double b0w = beta0 / cw
    cdef int64_t ct = ctot_c, cntot = ntot
    cdef double cbeta = beta, cbeta1 = beta1, cbeta0 = beta0
    cdef const int64_t[::1] row_v
    cdef const int64_t *row = NULL
    if ncw_row is not None:
        row_v = np.ascontiguousarray(ncw_row, dtype=np.int64)
        row = &row_v[0]
    _doc_prefix(&toks[0], nd, &wc[0], &pw_v[0])
    _corpus_factors(&toks[0], nd, &pw_v[0], &nw_v[0], cntot, cbeta0, b0w, &p0_v[0])
    return _score_doc_c(&toks[0], nd, &pw_v[0], &p0_v[0], row, ct, cbeta, cbeta1)


cdef void _up_doc_prior_c(const int64_t *assignments, int64_t D, int64_t d,
                          int64_t num_clusters, double theta, int8_t *seen0,
                          int8_t *seen, double *out) noexcept nogil:
    cdef int64_t m, c, v, kk, k0 = 0
    cdef double tot, lse
    for c in range(num_clusters + 1):
        seen0[c] = 0
    for m in range(d):
        c = assignments[m]
        if not seen0[c]:
            seen0[c] = 1
            k0 += 1
    for v in range(num_clusters + 1):
        for c in range(num_clusters + 1):
            seen[c] = seen0[c]
        kk = k0
        tot = 0.0
        if seen[v]:
            tot += log(1.0 / (kk + theta))
        else:
            tot += log(theta / (kk + theta))
            seen[v] = 1
            kk += 1
        for m in range(d + 1, D):
            c = assignments[m]
            if seen[c]:
                tot += log(1.0 / (kk + theta))
            else:
                tot += log(theta / (kk + theta))
                seen[c] = 1
                kk += 1
        out[v] = tot
    lse = _log_sum_exp(out, num_clusters + 1)
    for v in range(num_clusters + 1):
        out[v] = out[v] - lse


def up_doc_prior(assignments, d, num_clusters, theta):
    """Mirror of the pure propagation prior, exposed for parity tests."""
    cdef const int64_t[::1] a = np.ascontiguousarray(assignments, dtype=np.int64)
    cdef int64_t k = num_clusters, cd = d
    out = np.empty(k + 1, dtype=np.float64)
    seen0 = np.zeros(k + 1, dtype=np.int8)
    seen = np.zeros(k + 1, dtype=np.int8)
    cdef double[::1] o = out
    cdef int8_t[::1] s0 = seen0
    cdef int8_t[::1] s1 = seen
    _up_doc_prior_c(&a[0], a.shape[0], cd, k, theta, &s0[0], &s1[0], &o[0])
    return [float(x) for x in out]


# ---------------------------------------------------------------------------
# collapsed Gibbs sweep
# ---------------------------------------------------------------------------

def gibbs_sweep(kind, theta, beta, beta1, beta0, assignments, tokens, offsets,
                ncw, ctot, cdoc, nw, ntot, num_clusters, gen):
    cdef int64_t[::1] a = assignments
    cdef const int64_t[::1] toks_v = tokens
    cdef const int64_t[::1] off = offsets
    cdef int64_t[:, ::1] ncw_v = ncw
    cdef int64_t[::1] ctot_v = ctot
    cdef int64_t[::1] cdoc_v = cdoc
    cdef int64_t[::1] nw_v = nw
    cdef int64_t D = a.shape[0]
    cdef int64_t W = nw_v.shape[0]
    cdef int64_t K = num_clusters
    cdef int64_t cntot = ntot
    cdef int ckind = kind
    cdef double ctheta = theta, cbeta = beta, cbeta1 = beta1, cbeta0 = beta0
    cdef double b0w = cbeta0 / W
    cdef int64_t max_nd = 0, d
    for d in range(D):
        if off[d + 1] - off[d] > max_nd:
            max_nd = off[d + 1] - off[d]
    cdef int64_t cap = cdoc_v.shape[0]
    wcount = np.zeros(W, dtype=np.int64)
    pw = np.empty(max(max_nd, 1), dtype=np.int64)
    p0 = np.empty(max(max_nd, 1), dtype=np.float64)
    log_w = np.empty(cap + 1, dtype=np.float64)
    scratch = np.empty(cap + 1, dtype=np.float64)
    seen0 = np.zeros(cap + 1, dtype=np.int8)
    seen = np.zeros(cap + 1, dtype=np.int8)
    cdef int64_t[::1] wc = wcount
    cdef int64_t[::1] pw_v = pw
    cdef double[::1] p0_v = p0
    cdef double[::1] lw = log_w
    cdef double[::1] sc = scratch
    cdef int8_t[::1] s0 = seen0
    cdef int8_t[::1] s1 = seen
    cdef bitgen_t *rng = _bitgen(gen)
    cdef int64_t lo, hi, nd, old, t, w, m, c
    cdef const int64_t *toksp
    cdef double den, u
    with gen.bit_generator.lock, nogil:
        for d in range(D):
            lo = off[d]
            hi = off[d + 1]
            nd = hi - lo
            toksp = &toks_v[lo] if nd > 0 else NULL
            old = a[d]
            for t in range(nd):
                w = toksp[t]
                ncw_v[old, w] -= 1
                nw_v[w] -= 1
            ctot_v[old] -= nd
            cntot -= nd
            cdoc_v[old] -= 1
            if cdoc_v[old] == 0:
                K -= 1
                if old != K:
                    for w in range(W):
                        ncw_v[old, w] = ncw_v[K, w]
                        ncw_v[K, w] = 0
                    ctot_v[old] = ctot_v[K]
                    ctot_v[K] = 0
                    cdoc_v[old] = cdoc_v[K]
                    cdoc_v[K] = 0
                    for m in range(D):
                        if a[m] == K:
                            a[m] = old
            if ckind == KIND_DP:
                den = log(D - 1 + ctheta)
                for c in range(K):
                    lw[c] = log(<double> cdoc_v[c]) - den
                lw[K] = log(ctheta) - den
            else:
                _up_doc_prior_c(&a[0], D, d, K, ctheta, &s0[0], &s1[0], &lw[0])
            if nd > 0:
                _doc_prefix(toksp, nd, &wc[0], &pw_v[0])
                _corpus_factors(toksp, nd, &pw_v[0], &nw_v[0], cntot, cbeta0,
                                b0w, &p0_v[0])
            for c in range(K + 1):
                if nd > 0:
                    if c < K:
                        lw[c] = lw[c] + _score_doc_c(
                            toksp, nd, &pw_v[0], &p0_v[0], &ncw_v[c, 0],
                            ctot_v[c], cbeta, cbeta1)
                    else:
                        lw[c] = lw[c] + _score_doc_c(
                            toksp, nd, &pw_v[0], &p0_v[0], NULL, 0,
                            cbeta, cbeta1)
            u = rng.next_double(rng.state)
            c = _categorical(&lw[0], K + 1, u, &sc[0])
            if c == K:
                K += 1
            a[d] = c
            cdoc_v[c] += 1
            for t in range(nd):
                w = toksp[t]
                ncw_v[c, w] += 1
                nw_v[w] += 1
            ctot_v[c] += nd
            cntot += nd
    _relabel(a, ncw, ctot, cdoc, K)
    return int(K)


def relabel_canonical(assignments, ncw, ctot, cdoc, num_clusters):
    _relabel(assignments, ncw, ctot, cdoc, num_clusters)


cdef _relabel(int64_t[::1] a, object ncw, object ctot, object cdoc,
              int64_t num_clusters):
    cdef int64_t D = a.shape[0]
    perm_arr = np.full(num_clusters, -1, dtype=np.int64)
    cdef int64_t[::1] perm = perm_arr
    cdef int64_t nxt = 0, d, c
    cdef bint identity = True
    for d in range(D):
        c = a[d]
        if perm[c] < 0:
            perm[c] = nxt
            if nxt != c:
                identity = False
            nxt += 1
        a[d] = perm[c]
    if identity:
        return
    inv = np.empty(num_clusters, dtype=np.int64)
    inv[perm_arr] = np.arange(num_clusters)
    ncw[:num_clusters] = ncw[inv]
    ctot[:num_clusters] = ctot[inv]
    cdoc[:num_clusters] = cdoc[inv]


# ---------------------------------------------------------------------------
# sequential corpus likelihood
# ---------------------------------------------------------------------------

def corpus_log_likelihood(assignments, tokens, offsets, num_clusters, W,
                          beta, beta1, beta0):
    cdef const int64_t[::1] a = np.ascontiguousarray(assignments, dtype=np.int64)
    cdef const int64_t[::1] toks_v = np.ascontiguousarray(tokens, dtype=np.int64)
    cdef const int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef int64_t D = a.shape[0]
    cdef int64_t cw = W
    cdef int64_t K = max(num_clusters, 1)
    ncw = np.zeros((K, cw), dtype=np.int64)
    ctot = np.zeros(K, dtype=np.int64)
    nw = np.zeros(cw, dtype=np.int64)
    cdef int64_t[:, ::1] ncw_v = ncw
    cdef int64_t[::1] ctot_v = ctot
    cdef int64_t[::1] nw_v = nw
    cdef int64_t max_nd = 0, d
    for d in range(D):
        if off[d + 1] - off[d] > max_nd:
            max_nd = off[d + 1] - off[d]
    wcount = np.zeros(cw, dtype=np.int64)
    pw = np.empty(max(max_nd, 1), dtype=np.int64)
    p0 = np.empty(max(max_nd, 1), dtype=np.float64)
    cdef int64_t[::1] wc = wcount
    cdef int64_t[::1] pw_v = pw
    cdef double[::1] p0_v = p0
    cdef double cbeta = beta, cbeta1 = beta1, cbeta0 = beta0
    cdef double b0w = cbeta0 / cw
    cdef double ll = 0.0
    cdef int64_t ntot = 0, lo, hi, nd, c, t, w
    cdef const int64_t *toksp
    with nogil:
        for d in range(D):
            lo = off[d]
            hi = off[d + 1]
            nd = hi - lo
            if nd == 0:
                continue
            toksp = &toks_v[lo]
            c = a[d]
            _doc_prefix(toksp, nd, &wc[0], &pw_v[0])
            _corpus_factors(toksp, nd, &pw_v[0], &nw_v[0], ntot, cbeta0, b0w,
                            &p0_v[0])
            ll += _score_doc_c(toksp, nd, &pw_v[0], &p0_v[0], &ncw_v[c, 0],
                               ctot_v[c], cbeta, cbeta1)
            for t in range(nd):
                w = toksp[t]
                ncw_v[c, w] += 1
                nw_v[w] += 1
            ctot_v[c] += nd
            ntot += nd
    return ll


# ---------------------------------------------------------------------------
# left-to-right held-out estimator
# ---------------------------------------------------------------------------

def left_to_right(kind, theta, beta, beta1, beta0, train_ncw, train_ctot,
                  train_cdoc, train_nw, train_ntot, num_train_clusters,
                  num_train_docs, test_tokens, test_offsets, order,
                  num_particles, gen):
    cdef const int64_t[:, ::1] tr_ncw = train_ncw
    cdef const int64_t[::1] tr_ctot = train_ctot
    cdef const int64_t[::1] tr_cdoc = train_cdoc
    cdef const int64_t[::1] tr_nw = train_nw
    cdef const int64_t[::1] toks_v = np.ascontiguousarray(test_tokens, dtype=np.int64)
    cdef const int64_t[::1] off = np.ascontiguousarray(test_offsets, dtype=np.int64)
    cdef const int64_t[::1] ord_v = np.ascontiguousarray(order, dtype=np.int64)
    cdef int64_t R = num_particles
    cdef int64_t T = ord_v.shape[0]
    cdef int64_t W = tr_nw.shape[0]
    cdef int64_t K0 = num_train_clusters
    cdef int64_t D0 = num_train_docs
    cdef int64_t cap = K0 + T + 1
    cdef int ckind = kind
    cdef double ctheta = theta, cbeta = beta, cbeta1 = beta1, cbeta0 = beta0
    cdef double b0w = cbeta0 / W
    ncw = np.zeros((R, cap, W), dtype=np.int64)
    ctot = np.zeros((R, cap), dtype=np.int64)
    cdoc = np.zeros((R, cap), dtype=np.int64)
    nw = np.zeros((R, W), dtype=np.int64)
    ntot = np.zeros(R, dtype=np.int64)
    num_clusters = np.zeros(R, dtype=np.int64)
    cdef int64_t[:, :, ::1] ncw_v = ncw
    cdef int64_t[:, ::1] ctot_v = ctot
    cdef int64_t[:, ::1] cdoc_v = cdoc
    cdef int64_t[:, ::1] nw_v = nw
    cdef int64_t[::1] ntot_v = ntot
    cdef int64_t[::1] nk_v = num_clusters
    cdef int64_t max_nd = 0, i
    for i in range(off.shape[0] - 1):
        if off[i + 1] - off[i] > max_nd:
            max_nd = off[i + 1] - off[i]
    wcount = np.zeros(W, dtype=np.int64)
    pw = np.empty(max(max_nd, 1), dtype=np.int64)
    p0 = np.empty(max(max_nd, 1), dtype=np.float64)
    log_w = np.empty(cap + 1, dtype=np.float64)
    scratch = np.empty(cap + 1, dtype=np.float64)
    path_lw = np.zeros(R, dtype=np.float64)
    cdef int64_t[::1] wc = wcount
    cdef int64_t[::1] pw_v = pw
    cdef double[::1] p0_v = p0
    cdef double[::1] lw = log_w
    cdef double[::1] sc = scratch
    cdef double[::1] plw = path_lw
    cdef bitgen_t *rng = _bitgen(gen)
    cdef int64_t tr_ntot = train_ntot
    cdef int64_t r, c, K, doc, lo, hi, nd, t, w
    cdef const int64_t *toksp
    cdef double den, num, total = 0.0, u
    with gen.bit_generator.lock, nogil:
        for r in range(R):
            for c in range(K0):
                for w in range(W):
                    ncw_v[r, c, w] = tr_ncw[c, w]
                ctot_v[r, c] = tr_ctot[c]
                cdoc_v[r, c] = tr_cdoc[c]
            for w in range(W):
                nw_v[r, w] = tr_nw[w]
            ntot_v[r] = tr_ntot
            nk_v[r] = K0
        for i in range(T):
            doc = ord_v[i]
            lo = off[doc]
            hi = off[doc + 1]
            nd = hi - lo
            toksp = &toks_v[lo] if nd > 0 else NULL
            for r in range(R):
                K = nk_v[r]
                if nd > 0:
                    _doc_prefix(toksp, nd, &wc[0], &pw_v[0])
                    _corpus_factors(toksp, nd, &pw_v[0], &nw_v[r, 0],
                                    ntot_v[r], cbeta0, b0w, &p0_v[0])
                for c in range(K + 1):
                    if ckind == KIND_DP:
                        den = D0 + i + ctheta
                        num = <double> cdoc_v[r, c] if c < K else ctheta
                        lw[c] = log(num / den)
                    else:
                        den = K + ctheta
                        lw[c] = log((1.0 if c < K else ctheta) / den)
                    if nd > 0:
                        if c < K:
                            lw[c] = lw[c] + _score_doc_c(
                                toksp, nd, &pw_v[0], &p0_v[0], &ncw_v[r, c, 0],
                                ctot_v[r, c], cbeta, cbeta1)
                        else:
                            lw[c] = lw[c] + _score_doc_c(
                                toksp, nd, &pw_v[0], &p0_v[0], NULL, 0,
                                cbeta, cbeta1)
                plw[r] = plw[r] + _log_sum_exp(&lw[0], K + 1)
                u = rng.next_double(rng.state)
                c = _categorical(&lw[0], K + 1, u, &sc[0])
                if c == K:
                    nk_v[r] = K + 1
                cdoc_v[r, c] += 1
                for t in range(nd):
                    w = toksp[t]
                    ncw_v[r, c, w] += 1
                    nw_v[r, w] += 1
                ctot_v[r, c] += nd
                ntot_v[r] += nd
        total = _log_sum_exp(&plw[0], R) - log(<double> R)
    return total
