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
Window -> embedding. The engine only talks to the **Embedder** interface; the statistical
embedder below is the one that ships.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from vr_leakage.errors import ArityMismatch, NoTrainingData
from vr_leakage.features import ChannelWindow, stack_windows

FEATURE_NAMES = (
    "mean",
    "std",
    "median",
    "iqr",
    "skew",
    "kurtosis",
    "mean_abs_diff",
    "lag1_autocorr",
    "min",
    "max",
)
DEGENERATE_STD = 1e-12


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """
    One embedding with the names of its entries (``channel:feature``).
    """

    values: np.ndarray
    layout: Tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "layout", tuple(self.layout))

    def __len__(self) -> int:
        return self.values.size


def feature_layout(channel_names: Sequence[str]) -> Tuple[str, ...]:
    """
    :param channel_names: channels in window order
    :return: embedding entry names, channel-major
    """
    return tuple(f"{c}:{f}" for c in channel_names for f in FEATURE_NAMES)


def _lag1_autocorrelation(data: np.ndarray) -> np.ndarray:
    before = data[:-1] - data[:-1].mean(axis=0)
    after = data[1:] - data[1:].mean(axis=0)
    denominator = np.sqrt(np.sum(before * before, axis=0) * np.sum(after * after, axis=0))
    numerator = np.sum(before * after, axis=0)
    safe = denominator > DEGENERATE_STD
    return np.where(safe, numerator / np.where(safe, denominator, 1.0), 0.0)


def window_features(channels: np.ndarray) -> np.ndarray:
    """
    The ten raw statistics of every channel, channel-major. Zero-variance channels get 0 for
    skewness, kurtosis (excess) and lag-1 autocorrelation.

    :param channels: ``(samples, C)``, NaN-free
    :return: ``(10 * C,)``
    """
    data = np.asarray(channels, dtype=np.float64)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    std = data.std(axis=0)
    flat = std < DEGENERATE_STD
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        skew = np.where(flat, 0.0, stats.skew(data, axis=0, bias=True))
        kurtosis = np.where(flat, 0.0, stats.kurtosis(data, axis=0, fisher=True, bias=True))
    q75, q25 = np.percentile(data, [75.0, 25.0], axis=0)
    mean_abs_diff = (
        np.mean(np.abs(np.diff(data, axis=0)), axis=0) if data.shape[0] > 1
        else np.zeros(data.shape[1])
    )
    autocorr = (
        np.where(flat, 0.0, _lag1_autocorrelation(data)) if data.shape[0] > 2
        else np.zeros(data.shape[1])
    )
    table = np.vstack(
        (
            data.mean(axis=0),
            std,
            np.median(data, axis=0),
            q75 - q25,
            skew,
            kurtosis,
            mean_abs_diff,
            autocorr,
            data.min(axis=0),
            data.max(axis=0),
        )
    )
    return table.T.reshape(-1)


@dataclass(frozen=True, eq=False)
class FeatureScaler:
    """
    Training mean/std of every embedding entry. Degenerate entries (std < 1e-12) map to 0.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, raw: np.ndarray) -> "FeatureScaler":
        """
        :param raw: ``(n, F)`` training features
        """
        raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
        if raw.shape[0] == 0:
            raise NoTrainingData("cannot fit a scaler on zero embeddings")
        return cls(raw.mean(axis=0), raw.std(axis=0))

    def transform(self, raw: np.ndarray) -> np.ndarray:
        """
        :param raw: ``(F,)`` or ``(n, F)``
        :return: standardized values, same shape
        """
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape[-1] != self.mean.size:
            raise ArityMismatch(f"{raw.shape[-1]} features, scaler fitted on {self.mean.size}")
        live = self.std >= DEGENERATE_STD
        scaled = (raw - self.mean) / np.where(live, self.std, 1.0)
        return np.where(live, scaled, 0.0)


def embed_window(window: ChannelWindow, scaler: FeatureScaler) -> EmbeddingVector:
    """
    :param window: normalized window
    :param scaler: fitted on training embeddings
    """
    return EmbeddingVector(
        scaler.transform(window_features(window.channels)), feature_layout(window.channel_names)
    )


class Embedder:
    """
    What the biometric engine needs from a model: a name for the report, a training step and
    a batch embedding call. A learned model would implement the same three members.
    """

    @property
    def name(self) -> str:
        """
        :return: name and version, recorded in reports
        """
        raise NotImplementedError

    def fit(self, windows: Sequence[ChannelWindow]) -> "Embedder":
        """
        Train on the normalized windows of the training subjects.

        :param windows: training windows
        :return: self
        """
        raise NotImplementedError

    def embed(self, windows: Sequence[ChannelWindow]) -> np.ndarray:
        """
        :param windows: normalized windows
        :return: ``(len(windows), F)`` embeddings
        """
        raise NotImplementedError


class StatisticalEmbedder(Embedder):
    """
    Ten summary statistics per channel, standardized with a scaler fitted on the training
    windows.
    """

    def __init__(self):
        self._scaler: Optional[FeatureScaler] = None
        self._logger = logging.getLogger(type(self).__name__)

    @property
    def name(self) -> str:
        return "stat10/1"

    @property
    def scaler(self) -> FeatureScaler:
        """
        :return: the fitted scaler
        """
        if self._scaler is None:
            raise NoTrainingData(f"embedder '{self.name}' has not been fitted")
        return self._scaler

    @staticmethod
    def _raw(windows: Sequence[ChannelWindow]) -> np.ndarray:
        if not windows:
            return np.empty((0, 0))
        return np.stack([window_features(w) for w in stack_windows(windows)])

    def fit(self, windows: Sequence[ChannelWindow]) -> "StatisticalEmbedder":
        if not windows:
            raise NoTrainingData("no training windows for the embedder")
        self._scaler = FeatureScaler.fit(self._raw(windows))
        self._logger.debug("Fitted on %d windows", len(windows))
        return self

    def embed(self, windows: Sequence[ChannelWindow]) -> np.ndarray:
        if not windows:
            return np.empty((0, self.scaler.mean.size))
        return self.scaler.transform(self._raw(windows))
