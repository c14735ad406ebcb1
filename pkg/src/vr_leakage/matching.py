# MIT License
#
# Copyright (c) 2026 vr-leakage contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
Enrollment templates, cosine scoring and subject-disjoint folds.
"""
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from vr_leakage import seeded_rng
from vr_leakage.embedder import EmbeddingVector
from vr_leakage.errors import (
    EmptyEnrollment,
    EmptyGallery,
    InvalidConfig,
    LeakageAuditError,
    LengthMismatch,
    TooFewSubjects,
)

Vector = Union[EmbeddingVector, np.ndarray, Sequence[float]]


def _values(vector: Vector) -> np.ndarray:
    if isinstance(vector, EmbeddingVector):
        return vector.values
    return np.asarray(vector, dtype=np.float64).reshape(-1)


@dataclass(frozen=True, eq=False)
class EnrollmentTemplate:
    """
    :param subject_id: who enrolled
    :param centroid: mean of the enrollment embeddings
    :param window_count: how many windows went into it
    """

    subject_id: str
    centroid: np.ndarray
    window_count: int = 1

    def __post_init__(self):
        if self.window_count < 1:
            raise EmptyEnrollment(f"'window_count' {self.window_count} must be >= 1")
        centroid = np.array(_values(self.centroid), dtype=np.float64)
        centroid.setflags(write=False)
        object.__setattr__(self, "centroid", centroid)

    def to_json(self) -> dict:
        """
        :return: JSON-able dict
        """
        return {
            "subject_id": self.subject_id,
            "window_count": self.window_count,
            "centroid": [float(v) for v in self.centroid],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "EnrollmentTemplate":
        """
        :param payload: as written by *to_json*
        """
        unknown = set(payload) - {"subject_id", "window_count", "centroid"}
        if unknown:
            raise InvalidConfig(f"unknown template keys: {sorted(unknown)}")
        return cls(payload["subject_id"], np.asarray(payload["centroid"]), payload["window_count"])


def enroll(subject_id: str, embeddings: Union[np.ndarray, Sequence[Vector]]) -> EnrollmentTemplate:
    """
    :param subject_id: whose embeddings
    :param embeddings: ``(n, F)`` or a list of vectors, n >= 1
    :return: the centroid template
    """
    rows = [_values(e) for e in embeddings]
    if not rows:
        raise EmptyEnrollment(f"no enrollment windows for '{subject_id}'")
    return EnrollmentTemplate(subject_id, np.mean(np.stack(rows), axis=0), len(rows))


def verify(probe: Vector, template: EnrollmentTemplate) -> float:
    """
    Cosine similarity, clipped to [-1, 1]; a zero-norm side scores 0.
    """
    a, b = _values(probe), template.centroid
    if a.size != b.size:
        raise LengthMismatch(f"probe has {a.size} entries, template {b.size}")
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / norm, -1.0, 1.0))


def identify(probe: Vector, gallery: Sequence[EnrollmentTemplate]) -> List[Tuple[str, float]]:
    """
    :return: (subject_id, score) by descending score, ties by ascending subject_id
    """
    if not gallery:
        raise EmptyGallery("cannot identify against an empty gallery")
    scored = [(t.subject_id, verify(probe, t)) for t in gallery]
    return sorted(scored, key=lambda item: (-item[1], item[0]))


def score_matrix(
    probes: Union[np.ndarray, Sequence[Vector]], gallery: Sequence[EnrollmentTemplate]
) -> np.ndarray:
    """
    Every probe against every template in one go.

    :param probes: ``(n, F)``
    :param gallery: G templates
    :return: ``(n, G)`` cosine scores, gallery order
    """
    if not gallery:
        raise EmptyGallery("cannot score against an empty gallery")
    centroids = np.stack([t.centroid for t in gallery])
    rows = np.atleast_2d(np.asarray([_values(p) for p in probes], dtype=np.float64))
    if rows.size == 0:
        return np.empty((0, len(gallery)))
    if rows.shape[1] != centroids.shape[1]:
        raise LengthMismatch(f"probes have {rows.shape[1]} entries, templates {centroids.shape[1]}")
    norms = np.outer(np.linalg.norm(rows, axis=1), np.linalg.norm(centroids, axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(norms > 0, (rows @ centroids.T) / norms, 0.0)
    return np.clip(scores, -1.0, 1.0)


@dataclass(frozen=True)
class FoldAssignment:
    """
    ``folds[i]`` is the (train, test) subject split of fold *i*.
    """

    k: int
    seed: int
    folds: Tuple[Tuple[Tuple[str, ...], Tuple[str, ...]], ...]

    def audit(self) -> None:
        """
        Raise if any fold mixes train and test subjects or the test sets fail to partition the
        population.
        """
        population = set(self.folds[0][0]) | set(self.folds[0][1]) if self.folds else set()
        seen: List[str] = []
        for index, (train, test) in enumerate(self.folds):
            overlap = set(train) & set(test)
            if overlap:
                raise LeakageAuditError(f"fold {index}: {sorted(overlap)} in train and test")
            if set(train) | set(test) != population:
                raise LeakageAuditError(f"fold {index} does not cover the population")
            seen.extend(test)
        if len(seen) != len(set(seen)) or set(seen) != population:
            raise LeakageAuditError("test sets do not partition the subjects")


def assign_folds(subjects: Iterable[str], k: int = 4, seed: int = 0) -> FoldAssignment:
    """
    Seeded shuffle of the (sorted) subjects cut into *k* contiguous test sets whose sizes differ
    by at most one; each fold trains on the rest.

    :param subjects: the population
    :param k: fold count
    :param seed: shuffle seed
    """
    if k < 2:
        raise InvalidConfig(f"'k' {k} must be >= 2")
    population = sorted(set(subjects))
    if len(population) < k:
        raise TooFewSubjects(f"{len(population)} subjects cannot fill {k} folds")
    order = seeded_rng((seed, "folds")).permutation(len(population))
    shuffled = [population[i] for i in order]
    folds = []
    for part in np.array_split(np.arange(len(shuffled)), k):
        test = tuple(shuffled[i] for i in part)
        held_out = set(test)
        train = tuple(s for s in shuffled if s not in held_out)
        folds.append((train, test))
    return FoldAssignment(k, seed, tuple(folds))
