"""Batch command-line frontend.

Subcommands: simulate | stats | exchangeability | cluster | evaluate.
Every run is driven by a master seed (flag, else NPCLUST_SEED, else 0) and
writes plot-ready CSV/JSON plus a run manifest; identical command lines with
the same seed produce byte-identical data files regardless of --jobs.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, rng
from .corpus import open_corpus
from .docmodel import GibbsConfig, load_checkpoint, run_chain, save_checkpoint
from .evaluation import EvalConfig, left_to_right_log_prob
from .exchangeability import run_ordering_study
from .priors import PriorSpec, ProcessKind
from .stats import (expected_h_dp, expected_h_py, expected_h_up, expected_k_dp,
                    expected_k_dp_asymptote, expected_k_py, expected_k_up,
                    fit_growth_exponent, run_simulation)

MANIFEST_NAME = "run_manifest.json"


class CliError(Exception):
    pass


def _floats(value):
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(",") if v != ""]


def _ints(value):
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(v) for v in str(value).split(",") if v != ""]


def _names(value):
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _default_seed():
    return int(os.environ.get("NPCLUST_SEED", "0"))


def _file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _prepare_out_dir(out_dir, force):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / MANIFEST_NAME
    if manifest.exists() and not force:
        raise CliError(
            f"{manifest} already exists; a completed run lives here (use --force to overwrite)"
        )
    return out


def _write_manifest(out, command, config, seed, outputs, input_hashes, started):
    manifest = {
        "command": command,
        "config": config,
        "master_seed": seed,
        "version": __version__,
        "input_sha256": input_hashes,
        "outputs": sorted(outputs),
        "duration_seconds": round(time.time() - started, 3),
    }
    with open(out / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _specs_from_flags(processes, thetas, alphas):
    specs = []
    for name in processes:
        kind = ProcessKind.parse(name)
        for theta in thetas:
            if kind == ProcessKind.PITMAN_YOR:
                for alpha in alphas:
                    specs.append(PriorSpec(kind, theta, alpha))
            else:
                specs.append(PriorSpec(kind, theta))
    return specs


def cmd_simulate(args):
    started = time.time()
    processes = _names(args.process)
    thetas = _floats(args.theta)
    alphas = _floats(args.alpha)
    n_grid = _ints(args.n)
    if args.replicates < 1:
        raise CliError("--replicates must be >= 1")
    if not processes or not thetas or not n_grid:
        raise CliError("--process, --theta and --n must be non-empty")
    out = _prepare_out_dir(args.out_dir, args.force)
    specs = _specs_from_flags(processes, thetas, alphas)
    summaries = run_simulation(specs, n_grid, args.replicates, args.seed, jobs=args.jobs)
    k_rows = []
    h_rows = []
    for s in summaries:
        alpha = s.spec.alpha if s.spec.kind == ProcessKind.PITMAN_YOR else None
        k_rows.append([s.spec.short_name, s.spec.theta, alpha, s.n,
                       s.replicates, s.mean_k, s.se_k])
        for m, h in s.mean_h.items():
            h_rows.append([s.spec.short_name, s.spec.theta, alpha, s.n, m, h])
    _write_csv(out / "k_growth.csv",
               ["process", "theta", "alpha", "n", "replicates", "mean_k", "se_k"], k_rows)
    _write_csv(out / "cluster_sizes.csv",
               ["process", "theta", "alpha", "n", "M", "mean_h"], h_rows)
    slopes = []
    for spec in specs:
        cell = [s for s in summaries if s.spec == spec]
        if len({s.n for s in cell}) >= 2:
            slopes.append([spec.short_name, spec.theta,
                           spec.alpha if spec.kind == ProcessKind.PITMAN_YOR else None,
                           fit_growth_exponent(cell)])
    _write_csv(out / "growth_exponents.csv",
               ["process", "theta", "alpha", "slope"], slopes)
    _write_manifest(out, "simulate", _echo(args), args.seed,
                    ["k_growth.csv", "cluster_sizes.csv", "growth_exponents.csv"],
                    {}, started)
    return 0


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def cmd_stats(args):
    kind = ProcessKind.parse(args.process)
    if args.size is not None:
        if kind == ProcessKind.DIRICHLET:
            value = expected_h_dp(args.theta, args.size)
        elif kind == ProcessKind.PITMAN_YOR:
            _require_alpha(args)
            value = expected_h_py(args.theta, args.alpha, args.size, args.n)
        else:
            value = expected_h_up(args.theta)
    else:
        if kind == ProcessKind.DIRICHLET:
            if args.asymptotic:
                value = expected_k_dp_asymptote(args.theta, args.n)
            else:
                value = expected_k_dp(args.theta, args.n)
        elif kind == ProcessKind.PITMAN_YOR:
            _require_alpha(args)
            value = expected_k_py(args.theta, args.alpha, args.n)
        else:
            value = expected_k_up(args.theta, args.n)
    print(f"{value:.12g}")
    return 0


def _require_alpha(args):
    if args.alpha is None:
        raise CliError("--alpha is required for the Pitman-Yor process")


# ---------------------------------------------------------------------------
# exchangeability
# ---------------------------------------------------------------------------

def _ordering_study_task(corpus, process, theta, chains, orderings, gibbs, seed, index):
    spec = PriorSpec(ProcessKind.parse(process), theta)
    return run_ordering_study(spec, corpus, chains, orderings, gibbs,
                              master_seed=rng.derive_seed(seed, index))


def cmd_exchangeability(args):
    started = time.time()
    thetas = _floats(args.theta)
    if not thetas:
        raise CliError("--theta must be non-empty")
    out = _prepare_out_dir(args.out_dir, args.force)
    corpus = open_corpus(args.corpus)
    gibbs = GibbsConfig(sweeps=args.sweeps, burn_in=args.burn_in,
                        hyper_interval=args.hyper_interval)
    task_args = [
        (corpus, args.process, theta, args.chains, args.orderings, gibbs, args.seed, i)
        for i, theta in enumerate(thetas)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            studies = list(pool.map(_ordering_study_star, task_args))
    else:
        studies = [_ordering_study_task(*t) for t in task_args]
    ordering_rows = []
    partition_rows = []
    for theta, study in zip(thetas, studies):
        for pid, sd in enumerate(study.per_partition_ordering_sd):
            ordering_rows.append([theta, pid, sd])
        partition_rows.append([theta, study.between_partition_sd])
    _write_csv(out / "ordering_sd.csv",
               ["theta", "partition_id", "between_ordering_sd"], ordering_rows)
    _write_csv(out / "partition_sd.csv",
               ["theta", "between_partition_sd"], partition_rows)
    _write_manifest(out, "exchangeability", _echo(args), args.seed,
                    ["ordering_sd.csv", "partition_sd.csv"],
                    {"corpus": _file_sha256(args.corpus)}, started)
    return 0


def _ordering_study_star(task):
    return _ordering_study_task(*task)


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------

def _cluster_chain_task(corpus, prior, gibbs, seed, chain):
    cfg = GibbsConfig(
        sweeps=gibbs.sweeps, burn_in=gibbs.burn_in, hyper_interval=gibbs.hyper_interval,
        seed=rng.derive_seed(seed, chain), init=gibbs.init,
    )
    samples, state = run_chain(corpus, prior, cfg, return_state=True)
    return samples, state


def cmd_cluster(args):
    started = time.time()
    out = _prepare_out_dir(args.out_dir, args.force)
    corpus = open_corpus(args.corpus)
    prior = PriorSpec(ProcessKind.parse(args.prior), args.theta)
    gibbs = GibbsConfig(sweeps=args.sweeps, burn_in=args.burn_in,
                        hyper_interval=args.hyper_interval, init=args.init)
    task_args = [(corpus, prior, gibbs, args.seed, chain) for chain in range(args.chains)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = list(pool.map(_cluster_chain_star, task_args))
    else:
        runs = [_cluster_chain_task(*t) for t in task_args]
    outputs = ["corpus_snapshot.json", "summary.json"]
    corpus.save(out / "corpus_snapshot.json")
    chain_summaries = []
    for chain, (samples, state) in enumerate(runs):
        name = f"chain_{chain:02d}.json"
        save_checkpoint(out / name, state, prior, corpus)
        outputs.append(name)
        ks = [s.num_clusters for s in samples]
        chain_summaries.append({
            "checkpoint": name,
            "final_num_clusters": int(state.num_clusters),
            "mean_num_clusters": float(np.mean(ks)),
            "final_hypers": state.hypers.as_dict(),
            "samples": len(samples),
        })
    finals = [c["final_num_clusters"] for c in chain_summaries]
    _write_json(out / "summary.json", {
        "prior": {"process": prior.short_name, "theta": prior.theta},
        "chains": chain_summaries,
        "mean_num_clusters": float(np.mean(finals)),
        "num_clusters_sd": float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0,
        "sweeps": args.sweeps,
        "burn_in": args.burn_in,
    })
    _write_manifest(out, "cluster", _echo(args), args.seed, outputs,
                    {"corpus": _file_sha256(args.corpus)}, started)
    return 0


def _cluster_chain_star(task):
    return _cluster_chain_task(*task)


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _evaluate_chain_task(train_corpus, checkpoint_path, test_corpus, eval_config):
    state, prior = load_checkpoint(checkpoint_path, train_corpus)
    state, test = _align_vocabulary(state, train_corpus, test_corpus)
    result = left_to_right_log_prob(test, state, prior, eval_config)
    return {
        "checkpoint": os.path.basename(checkpoint_path),
        "heldout_logprob": result.log_prob,
        "heldout_logprob_sd": result.sd,
        "per_ordering": [float(v) for v in result.per_ordering],
        "num_clusters": int(state.counts.num_clusters),
        "prior": {"process": prior.short_name, "theta": prior.theta},
    }


def _align_vocabulary(state, train_corpus, test_corpus):
    """Extend W to cover train plus test words; remap test token ids."""
    from .corpus import Corpus

    merged = list(train_corpus.vocabulary)
    index = {w: i for i, w in enumerate(merged)}
    for w in test_corpus.vocabulary:
        if w not in index:
            index[w] = len(merged)
            merged.append(w)
    remap = np.array([index[w] for w in test_corpus.vocabulary], dtype=np.int64)
    docs = tuple(remap[np.asarray(d, dtype=np.int64)] for d in test_corpus.documents)
    test = Corpus(documents=docs, vocabulary=tuple(merged))
    if len(merged) != state.counts.vocab_size:
        grown = state.counts.copy_with_vocab(len(merged))
        state.counts = grown
    return state, test


def cmd_evaluate(args):
    started = time.time()
    out = _prepare_out_dir(args.out_dir, args.force)
    trained_dir = Path(args.trained)
    snapshot = trained_dir / "corpus_snapshot.json"
    if not snapshot.exists():
        raise CliError(f"{snapshot} not found; --trained must point at a cluster run")
    train_corpus = open_corpus(snapshot)
    test_corpus = open_corpus(args.test)
    checkpoints = sorted(trained_dir.glob("chain_*.json"))
    if not checkpoints:
        raise CliError(f"no chain checkpoints found in {trained_dir}")
    task_args = [
        (train_corpus, str(cp), test_corpus,
         EvalConfig(particles=args.particles, test_permutations=args.permutations,
                    seed=rng.derive_seed(args.seed, i)))
        for i, cp in enumerate(checkpoints)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            per_chain = list(pool.map(_evaluate_chain_star, task_args))
    else:
        per_chain = [_evaluate_chain_task(*t) for t in task_args]
    pooled = np.concatenate([np.asarray(c["per_ordering"]) for c in per_chain])
    report = {
        "trained": str(trained_dir),
        "test_documents": test_corpus.num_documents,
        "particles": args.particles,
        "permutations": args.permutations,
        "heldout_logprob_mean": float(np.mean(pooled)),
        "heldout_logprob_sd": float(np.std(pooled, ddof=1)) if pooled.size > 1 else 0.0,
        "mean_num_clusters": float(np.mean([c["num_clusters"] for c in per_chain])),
        "per_chain": per_chain,
    }
    _write_json(out / "report.json", report)
    _write_manifest(out, "evaluate", _echo(args), args.seed, ["report.json"],
                    {"test": _file_sha256(args.test),
                     "train_snapshot": _file_sha256(snapshot)}, started)
    return 0


def _evaluate_chain_star(task):
    return _evaluate_chain_task(*task)


# ---------------------------------------------------------------------------
# parser plumbing
# ---------------------------------------------------------------------------

def _echo(args):
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _add_common(p):
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: NPCLUST_SEED env var, else 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing run manifest")
    p.add_argument("--config", default=None,
                   help="JSON config file mirroring the flags; flags override it")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="npclust",
        description="Partition-prior simulations and document clustering experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="replicated partition simulation study")
    p.add_argument("--process", default="dp,py,up", help="comma list: dp,py,up")
    p.add_argument("--theta", default="1,10,100", help="comma list of concentrations")
    p.add_argument("--alpha", default="0.25,0.5,0.75",
                   help="comma list of Pitman-Yor discounts")
    p.add_argument("--n", default="1000,10000,100000", help="comma list of sample sizes")
    p.add_argument("--replicates", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="closed-form expected cluster statistics")
    p.add_argument("--process", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--size", type=int, default=None,
                   help="cluster size M: print expected count of size-M clusters")
    p.add_argument("--asymptotic", action="store_true",
                   help="Dirichlet: print theta*log(n) instead of the exact sum")
    p.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--config", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("exchangeability", help="ordering-robustness study")
    p.add_argument("--corpus", required=True)
    p.add_argument("--process", default="up")
    p.add_argument("--theta", default="0.5,1,2,5,10,20")
    p.add_argument("--chains", type=int, default=5)
    p.add_argument("--orderings", type=int, default=500)
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--hyper-interval", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=cmd_exchangeability)

    p = sub.add_parser("cluster", help="collapsed Gibbs document clustering")
    p.add_argument("--corpus", required=True)
    p.add_argument("--prior", default="up", help="dp or up")
    p.add_argument("--theta", type=float, default=5.0)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--hyper-interval", type=int, default=10)
    p.add_argument("--chains", type=int, default=5)
    p.add_argument("--init", default="single", choices=["single", "singletons"])
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="held-out probability of a test corpus")
    p.add_argument("--trained", required=True, help="cluster run directory")
    p.add_argument("--test", required=True, help="test corpus (text or snapshot)")
    p.add_argument("--particles", type=int, default=100)
    p.add_argument("--permutations", type=int, default=20)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        parser_defaults = build_parser()
        known = vars(args)
        bad = [k for k in overrides if k not in known]
        if bad:
            print(f"npclust: unknown config keys: {', '.join(bad)}", file=sys.stderr)
            return 2
        # flags given on the command line win over the config file
        explicit = _explicit_dests(argv if argv is not None else sys.argv[1:])
        for key, value in overrides.items():
            if key not in explicit:
                setattr(args, key, value)
    if getattr(args, "seed", None) is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except CliError as exc:
        print(f"npclust: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - uniform runtime-failure exit code
        print(f"npclust: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _explicit_dests(argv):
    dests = set()
    for token in argv:
        if token.startswith("--"):
            dests.add(token[2:].split("=", 1)[0].replace("-", "_"))
    return dests


if __name__ == "__main__":
    sys.exit(main())
