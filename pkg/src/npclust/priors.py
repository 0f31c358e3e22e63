"""Sequential partition priors: Dirichlet, Pitman-Yor and uniform processes.

Each process is defined by its predictive rule, the probability that the next
observation joins each existing cluster or opens a new one.  Partitions are
stored with canonical labels: cluster k is the k-th cluster to appear, labels
run 1..K.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import get_backend


class ProcessKind(enum.IntEnum):
    DIRICHLET = 0
    PITMAN_YOR = 1
    UNIFORM = 2

    @classmethod
    def parse(cls, name: str) -> "ProcessKind":
        key = name.strip().lower()
        try:
            return _KIND_ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown process kind {name!r}") from None

    @property
    def short_name(self) -> str:
        return _KIND_SHORT[self]


_KIND_ALIASES = {
    "dp": ProcessKind.DIRICHLET,
    "dirichlet": ProcessKind.DIRICHLET,
    "py": ProcessKind.PITMAN_YOR,
    "pitman-yor": ProcessKind.PITMAN_YOR,
    "pitmanyor": ProcessKind.PITMAN_YOR,
    "up": ProcessKind.UNIFORM,
    "uniform": ProcessKind.UNIFORM,
}
_KIND_SHORT = {
    ProcessKind.DIRICHLET: "dp",
    ProcessKind.PITMAN_YOR: "py",
    ProcessKind.UNIFORM: "up",
}


@dataclass(frozen=True)
class PriorSpec:
    """Process kind plus concentration theta and (Pitman-Yor only) discount alpha."""

    kind: ProcessKind
    theta: float
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProcessKind(self.kind))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    @property
    def short_name(self) -> str:
        return self.kind.short_name


def dirichlet(theta: float) -> PriorSpec:
    return PriorSpec(ProcessKind.DIRICHLET, theta)


def pitman_yor(theta: float, alpha: float) -> PriorSpec:
    return PriorSpec(ProcessKind.PITMAN_YOR, theta, alpha)


def uniform(theta: float) -> PriorSpec:
    return PriorSpec(ProcessKind.UNIFORM, theta)


@dataclass(frozen=True, eq=False)
class Partition:
    """Cluster assignment sequence with derived sizes, canonically labeled.

    ``assignments[i]`` is the 1-based label of observation i; label k first
    appears before label k+1.  ``sizes[k-1]`` is the size of cluster k.
    """

    assignments: np.ndarray
    sizes: np.ndarray = field(repr=False)
    num_clusters: int

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Build a partition from any label sequence, relabeling canonically."""
        seen = {}
        canon = np.empty(len(labels), dtype=np.int64)
        for i, lab in enumerate(labels):
            if lab not in seen:
                seen[lab] = len(seen) + 1
            canon[i] = seen[lab]
        sizes = np.bincount(canon, minlength=len(seen) + 1)[1:].astype(np.int64)
        return cls._wrap(canon, sizes, len(seen))

    @classmethod
    def empty(cls) -> "Partition":
        return cls._wrap(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), 0)

    @classmethod
    def _wrap(cls, assignments, sizes, num_clusters) -> "Partition":
        assignments.setflags(write=False)
        sizes.setflags(write=False)
        return cls(assignments=assignments, sizes=sizes, num_clusters=num_clusters)

    @property
    def n(self) -> int:
        return int(self.assignments.shape[0])

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.assignments.shape == other.assignments.shape and bool(
            np.all(self.assignments == other.assignments)
        )

    def __hash__(self):
        return hash(self.assignments.tobytes())

    def block_sizes(self) -> tuple:
        """Multiset of block sizes, sorted descending."""
        return tuple(sorted((int(s) for s in self.sizes), reverse=True))


def predictive_log_probs(spec: PriorSpec, partition: Partition) -> np.ndarray:
    """Log-probabilities for the next observation: one entry per existing
    cluster plus a final new-cluster entry.  Exponentiates to a distribution.
    """
    k = partition.num_clusters
    if k == 0:
        return np.zeros(1, dtype=np.float64)
    n = partition.n
    sizes = partition.sizes.astype(np.float64)
    out = np.empty(k + 1, dtype=np.float64)
    if spec.kind == ProcessKind.UNIFORM:
        den = math.log(k + spec.theta)
        out[:k] = -den
        out[k] = math.log(spec.theta) - den
    elif spec.kind == ProcessKind.DIRICHLET:
        den = math.log(n + spec.theta)
        out[:k] = np.log(sizes) - den
        out[k] = math.log(spec.theta) - den
    else:
        den = math.log(n + spec.theta)
        out[:k] = np.log(sizes - spec.alpha) - den
        out[k] = math.log(spec.theta + k * spec.alpha) - den
    return out


def sample_next(spec: PriorSpec, partition: Partition, rng: np.random.Generator) -> Partition:
    """Extend the partition by one observation drawn from the predictive rule."""
    kernel = get_backend()
    n = partition.n
    assignments0 = partition.assignments - 1
    sizes = np.zeros(n + 1, dtype=np.int64)
    sizes[: partition.num_clusters] = partition.sizes
    c = kernel.extend_partition(
        int(spec.kind), spec.theta, spec.alpha, assignments0, sizes,
        partition.num_clusters, n, rng,
    )
    new_assignments = np.append(partition.assignments, c + 1)
    k = partition.num_clusters
    if c == k:
        new_sizes = np.append(partition.sizes, 1)
        k += 1
    else:
        new_sizes = partition.sizes.copy()
        new_sizes[c] += 1
    return Partition._wrap(new_assignments, new_sizes, k)


def sample_partition(spec: PriorSpec, n: int, rng: np.random.Generator) -> Partition:
    """Sample a partition of n observations by sequential construction."""
    if n < 1:
        raise ValueError("n must be >= 1")
    kernel = get_backend()
    assignments0 = kernel.sample_assignments(int(spec.kind), spec.theta, spec.alpha, n, rng)
    k = int(assignments0.max()) + 1
    sizes = np.bincount(assignments0, minlength=k).astype(np.int64)
    return Partition._wrap(assignments0 + 1, sizes, k)


def log_joint(spec: PriorSpec, partition: Partition) -> float:
    """log P of the assignment sequence under the stored ordering."""
    kernel = get_backend()
    return float(
        kernel.log_joint(int(spec.kind), spec.theta, spec.alpha, partition.assignments - 1)
    )


def permute(partition: Partition, perm) -> Partition:
    """Reorder observations by ``perm`` (0-based positions) and relabel.

    ``perm[i]`` is the original position of the observation placed at i.  The
    induced set partition is unchanged.
    """
    perm = np.asarray(perm, dtype=np.int64)
    n = partition.n
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError("perm must be a permutation of 0..n-1")
    return Partition.from_labels(partition.assignments[perm])
