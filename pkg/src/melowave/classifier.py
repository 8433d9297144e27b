"""Distance measures, kNN prediction and majority voting.

Neighbors are ordered by distance with exact ties broken by corpus
insertion order. A modal-class tie among the k nearest resolves to the
tied class owning the nearest point ("next nearest point" rule), which
makes k=2 predictions structurally identical to k=1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .segmentation import SegmentMatrix


class Metric(Enum):
    EUCLIDEAN = "euclidean"
    CITYBLOCK = "cityblock"


def euclidean(a: np.ndarray, b: np.ndarray) -> float:
    """Root-sum-square difference of two equal-length vectors."""
    a, b = _paired(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def cityblock(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of absolute differences of two equal-length vectors."""
    a, b = _paired(a, b)
    return float(np.sum(np.abs(a - b)))


def _paired(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"vectors must share one length, got {a.shape} and {b.shape}")
    return a, b


def pairwise_distances(queries: np.ndarray, rows: np.ndarray, metric: Metric) -> np.ndarray:
    """Distance matrix between query rows and corpus rows."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if queries.shape[1] != rows.shape[1]:
        raise ValueError(
            f"query length {queries.shape[1]} does not match corpus row length {rows.shape[1]}"
        )
    return cdist(queries, rows, metric.value)


@dataclass(frozen=True)
class LabeledCorpus:
    """Immutable classifier set: equal-length rows with class labels."""

    rows: np.ndarray
    labels: tuple

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("corpus needs at least one row")
        if rows.shape[0] != len(self.labels):
            raise ValueError("one label per row is required")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def from_matrix(cls, matrix: SegmentMatrix) -> "LabeledCorpus":
        return cls(matrix.rows, matrix.labels)

    @property
    def classes(self) -> tuple:
        seen: dict = {}
        for label in self.labels:
            seen.setdefault(label, None)
        return tuple(seen)

    def __len__(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class Prediction:
    """A predicted class with the full neighbor ordering behind it."""

    label: Hashable
    neighbor_rows: np.ndarray
    neighbor_distances: np.ndarray

    @property
    def neighbors(self) -> list[tuple[int, float]]:
        return list(zip(self.neighbor_rows.tolist(), self.neighbor_distances.tolist()))

    @property
    def nearest_distance(self) -> float:
        return float(self.neighbor_distances[0])


def _decide(sorted_labels: Sequence, k: int) -> Hashable:
    k = min(k, len(sorted_labels))
    votes = Counter(sorted_labels[:k])
    top = max(votes.values())
    tied = {label for label, count in votes.items() if count == top}
    if len(tied) == 1:
        return next(iter(tied))
    for label in sorted_labels:
        if label in tied:
            return label
    raise AssertionError("unreachable: tied classes vanished")


def predict_from_distances(
    distances: np.ndarray, labels: Sequence, k: int
) -> Prediction:
    """kNN decision over a precomputed distance row (supports fold masking
    with infinities: masked rows never become neighbors)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    distances = np.asarray(distances, dtype=float)
    order = np.argsort(distances, kind="stable")
    finite = order[np.isfinite(distances[order])]
    if finite.size == 0:
        raise ValueError("no finite distances to classify against")
    sorted_labels = [labels[i] for i in finite]
    return Prediction(_decide(sorted_labels, k), finite, distances[finite])


def knn_predict(
    query: np.ndarray, corpus: LabeledCorpus, k: int, metric: Metric
) -> Prediction:
    """Classify one query vector against a labeled corpus."""
    distances = pairwise_distances(np.asarray(query, float)[None, :], corpus.rows, metric)[0]
    return predict_from_distances(distances, corpus.labels, k)


def vote(predictions: Sequence[Prediction]) -> Hashable:
    """Modal class of the per-segment predictions.

    A tie is broken by the globally smallest neighbor distance pooled over
    each tied class's predictions, extending outward through the pooled
    distances while equal; prediction order is the final fallback.
    """
    if not predictions:
        raise ValueError("cannot vote over zero predictions")
    votes = Counter(p.label for p in predictions)
    top = max(votes.values())
    tied = [label for label in votes if votes[label] == top]
    if len(tied) == 1:
        return tied[0]
    pooled = {
        label: np.sort(
            np.concatenate(
                [p.neighbor_distances for p in predictions if p.label == label]
            )
        )
        for label in tied
    }
    best = tied[0]
    for label in tied[1:]:
        if _lex_less(pooled[label], pooled[best]):
            best = label
    return best


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    """True when a precedes b comparing entries ascending, missing = +inf."""
    n = min(a.size, b.size)
    for i in range(n):
        if a[i] != b[i]:
            return bool(a[i] < b[i])
    return a.size > b.size  # the longer list has a finite next-nearest point
