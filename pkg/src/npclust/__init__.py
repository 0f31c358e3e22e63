"""Nonparametric clustering priors and a collapsed Gibbs document model.

Three sequential partition processes (Dirichlet, Pitman-Yor, uniform) with
their cluster-growth statistics, an ordering-robustness study for the
non-exchangeable uniform process, and a document-clustering mixture model
with held-out evaluation.
"""

__version__ = "0.1.0"

from ._kernels import available_backends, backend_name, set_backend
from .corpus import (Corpus, TokenizerConfig, load_corpus, load_corpus_snapshot,
                     split_corpus, synth_corpus)
from .docmodel import (ChainState, CountState, GibbsConfig, HyperParams, NEW,
                       SliceConfig, conditional_prior_dp, conditional_prior_up,
                       corpus_log_likelihood, doc_log_likelihood, gibbs_sweep,
                       load_checkpoint, run_chain, save_checkpoint,
                       slice_sample_hypers)
from .evaluation import (EvalConfig, LtrResult, SplitConfig, compare_priors_heldout,
                         exact_heldout_log_prob, left_to_right_log_prob)
from .exchangeability import (OrderingStudy, between_ordering_sd,
                              between_partition_sd, run_ordering_study)
from .priors import (Partition, PriorSpec, ProcessKind, dirichlet, log_joint,
                     permute, pitman_yor, predictive_log_probs, sample_next,
                     sample_partition, uniform)
from .stats import (ClusterSizeHistogram, SimulationSummary, exact_expected_k_up,
                    expected_h_dp, expected_h_py, expected_h_up, expected_k_dp,
                    expected_k_dp_asymptote, expected_k_py, expected_k_up,
                    fit_growth_exponent, histogram, run_simulation)
