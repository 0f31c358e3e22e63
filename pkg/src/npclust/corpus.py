"""Corpus ingestion, tokenization, splitting and serialization.

The on-disk input format is UTF-8 plain text with one document per line.
Token order within a document is significant (the likelihood is evaluated
position by position), as is document order (the uniform process conditions
on it), so everything here is deterministic: the vocabulary is ordered by
first occurrence and splits are seeded shuffles.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import rng

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class CorpusError(Exception):
    """Base class for corpus ingestion failures."""


class CorpusReadError(CorpusError):
    """The corpus file could not be read."""


class CorpusEncodingError(CorpusError):
    """The corpus file is not valid UTF-8."""


class EmptyCorpusError(CorpusError):
    """The corpus contains no documents."""


@dataclass(frozen=True)
class TokenizerConfig:
    """Lowercase + alphanumeric-run tokenizer with optional filters."""

    min_count: int = 1
    stopwords: frozenset = frozenset()
    strip_plural_s: bool = False

    def tokenize(self, line: str):
        toks = _TOKEN_RE.findall(line.lower())
        if self.strip_plural_s:
            toks = [t[:-1] if len(t) > 3 and t.endswith("s") else t for t in toks]
        if self.stopwords:
            toks = [t for t in toks if t not in self.stopwords]
        return toks


@dataclass(frozen=True)
class Corpus:
    """Documents as token-id sequences over a shared contiguous vocabulary."""

    documents: tuple
    vocabulary: tuple
    source_sha256: str = ""
    _word_ids: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self._word_ids:
            object.__setattr__(
                self, "_word_ids", {w: i for i, w in enumerate(self.vocabulary)}
            )

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def num_documents(self) -> int:
        return len(self.documents)

    @property
    def total_tokens(self) -> int:
        return int(sum(len(d) for d in self.documents))

    def word_id(self, word: str) -> int:
        return self._word_ids[word]

    def flat_tokens(self):
        """(tokens, offsets) int64 arrays; document d is tokens[offsets[d]:offsets[d+1]]."""
        offsets = np.zeros(self.num_documents + 1, dtype=np.int64)
        for d, doc in enumerate(self.documents):
            offsets[d + 1] = offsets[d] + len(doc)
        if self.num_documents:
            tokens = np.concatenate([np.asarray(d, dtype=np.int64) for d in self.documents])
        else:
            tokens = np.empty(0, dtype=np.int64)
        return tokens, offsets

    def subset(self, indices) -> "Corpus":
        """New corpus with the selected documents, sharing this vocabulary."""
        docs = tuple(self.documents[i] for i in indices)
        return Corpus(documents=docs, vocabulary=self.vocabulary,
                      source_sha256=self.source_sha256)

    def content_hash(self) -> str:
        """Stable hash of (vocabulary, documents); used for checkpoint validation."""
        h = hashlib.sha256()
        payload = {
            "vocabulary": list(self.vocabulary),
            "documents": [[int(t) for t in d] for d in self.documents],
        }
        h.update(json.dumps(payload, separators=(",", ":")).encode("utf-8"))
        return h.hexdigest()

    def to_json(self) -> str:
        snapshot = {
            "vocabulary": list(self.vocabulary),
            "documents": [[int(t) for t in d] for d in self.documents],
            "source_sha256": self.source_sha256,
        }
        return json.dumps(snapshot, separators=(",", ":"))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")


def _freeze_docs(doc_lists):
    docs = []
    for d in doc_lists:
        arr = np.asarray(d, dtype=np.int64)
        arr.setflags(write=False)
        docs.append(arr)
    return tuple(docs)


def load_corpus(path, tokenizer: TokenizerConfig = TokenizerConfig()) -> Corpus:
    """Load a one-document-per-line UTF-8 text corpus."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CorpusReadError(f"cannot read corpus file {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusEncodingError(f"corpus file {path} is not valid UTF-8: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise EmptyCorpusError(f"corpus file {path} contains no documents")
    token_docs = [tokenizer.tokenize(line) for line in lines]
    if tokenizer.min_count > 1:
        freq = {}
        for doc in token_docs:
            for t in doc:
                freq[t] = freq.get(t, 0) + 1
        token_docs = [[t for t in doc if freq[t] >= tokenizer.min_count] for doc in token_docs]
    word_ids = {}
    id_docs = []
    for doc in token_docs:
        ids = []
        for t in doc:
            if t not in word_ids:
                word_ids[t] = len(word_ids)
            ids.append(word_ids[t])
        id_docs.append(ids)
    return Corpus(
        documents=_freeze_docs(id_docs),
        vocabulary=tuple(word_ids),
        source_sha256=hashlib.sha256(raw).hexdigest(),
    )


def load_corpus_snapshot(path) -> Corpus:
    """Load a corpus from its JSON snapshot."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            snapshot = json.load(fh)
    except OSError as exc:
        raise CorpusReadError(f"cannot read corpus snapshot {path}: {exc}") from exc
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorpusEncodingError(f"corpus snapshot {path} is malformed: {exc}") from exc
    docs = snapshot["documents"]
    vocab = tuple(snapshot["vocabulary"])
    for d in docs:
        for t in d:
            if not 0 <= t < len(vocab):
                raise CorpusError(f"token id {t} outside vocabulary of size {len(vocab)}")
    return Corpus(
        documents=_freeze_docs(docs),
        vocabulary=vocab,
        source_sha256=snapshot.get("source_sha256", ""),
    )


def open_corpus(path, tokenizer: TokenizerConfig = TokenizerConfig()) -> Corpus:
    """Load either a text corpus or a JSON snapshot, by extension."""
    if str(path).endswith(".json"):
        return load_corpus_snapshot(path)
    return load_corpus(path, tokenizer)


def split_corpus(corpus: Corpus, train_fraction: float, seed: int):
    """Seeded shuffle-and-split into (train, test) with a shared vocabulary."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    d = corpus.num_documents
    n_train = int(round(train_fraction * d))
    if n_train == 0 or n_train == d:
        raise ValueError(
            f"split of {d} documents at fraction {train_fraction} leaves one side empty"
        )
    order = rng.generator(seed, 0).permutation(d)
    return corpus.subset(order[:n_train]), corpus.subset(order[n_train:])


def synth_corpus(num_clusters: int, docs_per_cluster: int, vocab_per_cluster: int,
                 doc_length: int, overlap: float, seed: int):
    """Synthetic clustered corpus with known ground truth.

    Cluster k draws tokens from its own vocabulary block with probability
    1-overlap and from the whole vocabulary uniformly with probability
    overlap.  Documents are shuffled so cluster identity is not encoded in
    the ordering.  Returns (corpus, truth) with 1-based truth labels.
    """
    if min(num_clusters, docs_per_cluster, vocab_per_cluster, doc_length) < 1:
        raise ValueError("all size parameters must be positive")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must lie in [0, 1)")
    w = num_clusters * vocab_per_cluster
    vocabulary = tuple(
        f"c{k:02d}w{j:03d}" for k in range(num_clusters) for j in range(vocab_per_cluster)
    )
    gen = rng.generator(seed, 0)
    docs = []
    truth = []
    for k in range(num_clusters):
        lo = k * vocab_per_cluster
        for _ in range(docs_per_cluster):
            shared = gen.random(doc_length) < overlap
            own = lo + gen.integers(0, vocab_per_cluster, size=doc_length)
            anywhere = gen.integers(0, w, size=doc_length)
            docs.append(np.where(shared, anywhere, own).astype(np.int64))
            truth.append(k + 1)
    order = gen.permutation(len(docs))
    corpus = Corpus(
        documents=_freeze_docs([docs[i] for i in order]),
        vocabulary=vocabulary,
    )
    return corpus, np.asarray([truth[i] for i in order], dtype=np.int64)
