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
Verification and identification metrics. All percentages are in [0, 100].

Thresholds accept a claim when ``score >= threshold``.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from vr_leakage.errors import DataError, EmptyScores, EmptyTrials, InvalidConfig, IoFailure


class RocPoint(NamedTuple):
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """
    :param genuine: probe vs. own template
    :param impostor: probe vs. somebody else's template
    """

    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        genuine = np.array(self.genuine, dtype=np.float64).reshape(-1)
        impostor = np.array(self.impostor, dtype=np.float64).reshape(-1)
        if not (np.all(np.isfinite(genuine)) and np.all(np.isfinite(impostor))):
            raise DataError("scores must be finite")
        object.__setattr__(self, "genuine", genuine)
        object.__setattr__(self, "impostor", impostor)

    def require_both(self) -> "ScoreSet":
        """
        :return: self, if neither list is empty
        """
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise EmptyScores(
                f"{self.genuine.size} genuine and {self.impostor.size} impostor scores"
            )
        return self

    def merge(self, other: "ScoreSet") -> "ScoreSet":
        """
        :param other: more scores
        :return: both sets concatenated
        """
        return ScoreSet(
            np.concatenate((self.genuine, other.genuine)),
            np.concatenate((self.impostor, other.impostor)),
        )


def compute_roc(scores: ScoreSet) -> List[RocPoint]:
    """
    FAR/FRR at every midpoint between consecutive distinct scores, plus the -inf (accept all)
    and +inf (reject all) sentinels, by ascending threshold.
    """
    scores.require_both()
    distinct = np.unique(np.concatenate((scores.genuine, scores.impostor)))
    thresholds = np.concatenate(([-np.inf], (distinct[:-1] + distinct[1:]) / 2.0, [np.inf]))
    genuine = np.sort(scores.genuine)
    impostor = np.sort(scores.impostor)
    far = 1.0 - np.searchsorted(impostor, thresholds, side="left") / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return [RocPoint(float(t), float(a), float(r)) for t, a, r in zip(thresholds, far, frr)]


def eer_from_roc(roc: Sequence[RocPoint]) -> float:
    """
    Where FAR meets FRR, as a percentage. Points with FAR == FRR are used directly (the midpoint
    of their values if the curve runs along the diagonal); otherwise the two points bracketing
    the crossing are interpolated linearly.
    """
    far = np.array([p.far for p in roc])
    frr = np.array([p.frr for p in roc])
    gap = far - frr
    touching = np.flatnonzero(np.isclose(gap, 0.0, rtol=0.0, atol=1e-15))
    if touching.size:
        values = far[touching]
        return 100.0 * (values.min() + values.max()) / 2.0
    index = int(np.flatnonzero(gap > 0)[-1])
    alpha = gap[index] / (gap[index] - gap[index + 1])
    return 100.0 * float(far[index] + alpha * (far[index + 1] - far[index]))


def compute_eer(scores: ScoreSet) -> float:
    """
    :return: equal error rate, percent
    """
    return float(eer_from_roc(compute_roc(scores)))


def compute_rank1(trials: Sequence[Tuple[str, Sequence]]) -> float:
    """
    :param trials: (true subject, ranked identities) pairs; a ranked entry may be a subject id
        or a (subject id, score) pair
    :return: percent of trials whose top candidate is the true subject
    """
    if not trials:
        raise EmptyTrials("no identification trials")
    hits = 0
    for truth, ranked in trials:
        if not ranked:
            continue
        top = ranked[0]
        top = top[0] if isinstance(top, (tuple, list)) else top
        hits += top == truth
    return 100.0 * hits / len(trials)


def chance_levels(n_subjects: float) -> Tuple[float, float]:
    """
    :param n_subjects: candidates to choose from (>= 2)
    :return: (EER, Rank-1 IR) percentages of a random matcher
    """
    if n_subjects < 2:
        raise InvalidConfig(f"'n_subjects' {n_subjects} must be >= 2")
    return 50.0, 100.0 / n_subjects


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    eer_pct: float
    rank1_ir_pct: float
    test_subjects: int = 0
    genuine_count: int = 0
    impostor_count: int = 0


@dataclass(frozen=True)
class MetricSummary:
    """
    Per-fold values with their mean and sample standard deviation.
    """

    eer_folds: Tuple[float, ...]
    ir_folds: Tuple[float, ...]
    eer_mean: float
    eer_std: float
    ir_mean: float
    ir_std: float


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    data = np.asarray(values, dtype=np.float64)
    if data.size == 1:
        return float(data[0]), 0.0
    return float(data.mean()), float(data.std(ddof=1))


def aggregate_folds(per_fold: Sequence[Union[FoldMetrics, Tuple[float, float]]]) -> MetricSummary:
    """
    :param per_fold: *FoldMetrics* or (eer, ir) pairs
    :return: means and sample (n - 1) standard deviations; one fold gives std 0
    """
    if not per_fold:
        raise EmptyTrials("no folds to aggregate")
    pairs = [
        (f.eer_pct, f.rank1_ir_pct) if isinstance(f, FoldMetrics) else tuple(f) for f in per_fold
    ]
    eer = tuple(float(p[0]) for p in pairs)
    ir = tuple(float(p[1]) for p in pairs)
    eer_mean, eer_std = _mean_std(eer)
    ir_mean, ir_std = _mean_std(ir)
    return MetricSummary(eer, ir, eer_mean, eer_std, ir_mean, ir_std)


def write_roc_csv(roc: Sequence[RocPoint], path: Union[str, Path]) -> None:
    """
    :param roc: points from *compute_roc*
    :param path: where to write ``threshold,far,frr``
    """
    frame = pd.DataFrame(list(roc), columns=list(RocPoint._fields))
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        raise IoFailure(f"cannot write '{path}': {e}") from e
