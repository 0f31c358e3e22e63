"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_backends.py [--quick]

Each kernel runs on identical seeded inputs under both backends; since the
backends are bit-compatible, the outputs are also checked for equality.
"""

import argparse
import time

import numpy as np

from npclust import rng
from npclust._kernels import _pure, available_backends
from npclust.corpus import synth_corpus
from npclust.docmodel import CountState


def best_of(fn, repeats=3):
    best = float("inf")
    value = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def bench(name, make_args, run, repeats=3):
    rows = []
    values = {}
    for backend in BACKENDS:
        t, values[backend.BACKEND_NAME] = best_of(lambda: run(backend, *make_args()),
                                                  repeats)
        rows.append((backend.BACKEND_NAME, t))
    agree = _same(values.get("pure"), values.get("cython"))
    base = dict(rows)["pure"]
    print(f"{name:<38}", end="")
    for bname, t in rows:
        print(f"  {bname}: {t * 1e3:9.2f} ms", end="")
    if "cython" in dict(rows):
        print(f"  speedup: {base / dict(rows)['cython']:7.1f}x"
              f"  identical: {agree}")
    else:
        print()


def _same(a, b):
    if a is None or b is None:
        return "n/a"
    if isinstance(a, np.ndarray):
        return bool(np.array_equal(a, b))
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return a == b


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller sizes")
    args = parser.parse_args()
    q = args.quick

    n_sample = 20_000 if q else 100_000
    bench(
        f"sample_partition UP theta=10 n={n_sample}",
        lambda: (rng.generator(1),),
        lambda k, gen: k.sample_assignments(2, 10.0, 0.0, n_sample, gen),
    )
    bench(
        f"sample_partition PY(0.5) theta=10 n={n_sample}",
        lambda: (rng.generator(2),),
        lambda k, gen: k.sample_assignments(1, 10.0, 0.5, n_sample, gen),
    )

    base = _pure.sample_assignments(2, 5.0, 0.0, 200, rng.generator(3))
    m_ord = 200 if q else 1000
    bench(
        f"permuted_log_joints n=200 x{m_ord} orderings",
        lambda: (rng.generator(4),),
        lambda k, gen: k.permuted_log_joints(2, 5.0, 0.0, base, m_ord, gen),
    )

    corpus, _ = synth_corpus(10, 10 if q else 20, 8, 25, 0.3, seed=5)
    tokens, offsets = corpus.flat_tokens()
    sweeps = 3 if q else 10

    def run_sweeps(kernel, kind, gen):
        assign = np.zeros(corpus.num_documents, dtype=np.int64)
        cs = CountState.from_corpus(corpus, assign + 1)
        k = 1
        for _ in range(sweeps):
            k = kernel.gibbs_sweep(kind, 2.0, 1.0, 1.0, 1.0, assign, tokens,
                                   offsets, cs.n_w_given_c, cs.cluster_totals,
                                   cs.cluster_doc_counts, cs.n_w, cs.total_tokens,
                                   k, gen)
        return assign

    d = corpus.num_documents
    bench(
        f"gibbs_sweep DP D={d} x{sweeps} sweeps",
        lambda: (rng.generator(6),),
        lambda k, gen: run_sweeps(k, 0, gen),
        repeats=2,
    )
    bench(
        f"gibbs_sweep UP D={d} x{sweeps} sweeps",
        lambda: (rng.generator(7),),
        lambda k, gen: run_sweeps(k, 2, gen),
        repeats=2,
    )

    truth = np.ones(corpus.num_documents, dtype=np.int64)
    bench(
        f"corpus_log_likelihood D={d}",
        lambda: (),
        lambda k: k.corpus_log_likelihood(truth - 1, tokens, offsets, 1,
                                          corpus.vocab_size, 1.0, 1.0, 1.0),
    )

    test, _ = synth_corpus(5, 4, 8, 20, 0.3, seed=8)
    t_tokens, t_offsets = test.flat_tokens()
    t_tokens = t_tokens % corpus.vocab_size
    cs = CountState.from_corpus(corpus, np.ones(d, dtype=np.int64))
    order = np.arange(test.num_documents, dtype=np.int64)
    particles = 20 if q else 100
    bench(
        f"left_to_right {test.num_documents} docs R={particles}",
        lambda: (rng.generator(9),),
        lambda k, gen: k.left_to_right(2, 2.0, 1.0, 1.0, 1.0, cs.n_w_given_c,
                                       cs.cluster_totals, cs.cluster_doc_counts,
                                       cs.n_w, cs.total_tokens, cs.num_clusters, d,
                                       t_tokens, t_offsets, order, particles, gen),
    )


if __name__ == "__main__":
    names = available_backends()
    BACKENDS = [_pure]
    if "cython" in names:
        from npclust._kernels import _core

        BACKENDS.append(_core)
    else:
        print("compiled backend not available; benchmarking pure only")
    main()
