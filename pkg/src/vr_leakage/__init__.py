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
The telemetry data model everything else works on: streams, sessions and datasets, plus the
subject-inclusion rules applied before any evaluation.

Samples are stored as ``(n, arity)`` float arrays. A missing sample is flagged in the mask and
every one of its components is NaN, so downstream numerics can rely on either.
"""
import logging
import zlib
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from vr_leakage.constants import DEFAULT_RATE_HZ, StreamKind
from vr_leakage.errors import DataError, EmptySession, MissingStream

__version__ = "0.1.0"

Seed = Union[int, str, Sequence[Union[int, str]]]


def seeded_rng(seed: Seed) -> np.random.Generator:
    """
    Every random draw in the package goes through here: a counter-based Philox generator keyed
    by a ``SeedSequence``. Strings (subject ids) are folded in with CRC-32 so the key is the
    same in every process.

    :param seed: integer, string, or a tuple of them
    :return: the generator
    """
    parts = seed if isinstance(seed, (tuple, list)) else (seed,)
    entropy = [zlib.crc32(p.encode("utf-8")) if isinstance(p, str) else int(p) for p in parts]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    One stream of one session at a fixed sample rate. Sample *i* happens at ``i / rate_hz``.

    :param kind: one of **StreamKind**
    :param samples: ``(n, arity)`` values; gaze is a 3-vector direction or 2 angles (degrees),
        head/hands are 3 positions in meters
    :param rate_hz: samples per second
    :param mask: optional ``(n,)`` booleans, *True* where the sample is missing
    """

    kind: str
    samples: np.ndarray
    rate_hz: float = DEFAULT_RATE_HZ
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        StreamKind.require(self.kind, "kind")
        if not self.rate_hz > 0:
            raise DataError(f"'rate_hz' {self.rate_hz} must be > 0")

        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        if samples.ndim != 2:
            raise DataError(f"'samples' must be 2-D, got shape {samples.shape}")

        missing = np.isnan(samples).any(axis=1)
        if self.mask is not None:
            given = np.asarray(self.mask, dtype=bool).reshape(-1)
            if given.shape[0] != samples.shape[0]:
                raise DataError(
                    f"'mask' length {given.shape[0]} != sample count {samples.shape[0]}"
                )
            missing = missing | given
        samples[missing] = np.nan

        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "mask", _frozen(missing))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def arity(self) -> int:
        """
        :return: components per sample
        """
        return self.samples.shape[1]

    def replace_samples(self, samples: np.ndarray) -> "TimeSeries":
        """
        Same stream, new values. The existing mask is kept and re-applied.

        :param samples: ``(n, k)`` values with the same *n*
        :return: the new series
        """
        return TimeSeries(self.kind, samples, self.rate_hz, self.mask)

    def head(self, count: int) -> "TimeSeries":
        """
        :param count: samples to keep
        :return: the first *count* samples
        """
        return TimeSeries(self.kind, self.samples[:count], self.rate_hz, self.mask[:count])


@dataclass(frozen=True, eq=False)
class SessionRecording:
    """
    One subject's telemetry from one session: up to one **TimeSeries** per stream kind.
    """

    subject_id: str
    session_index: int
    streams: Mapping[str, TimeSeries] = field(default_factory=dict)

    def __post_init__(self):
        if not str(self.subject_id).strip():
            raise DataError("'subject_id' must not be blank.")
        if int(self.session_index) < 1:
            raise DataError(f"'session_index' {self.session_index} must be >= 1")
        for kind, series in self.streams.items():
            if series.kind != kind:
                raise DataError(f"stream keyed '{kind}' is tagged '{series.kind}'")
        object.__setattr__(self, "subject_id", str(self.subject_id))
        object.__setattr__(self, "session_index", int(self.session_index))
        # stable stream order regardless of how the mapping was built
        ordered = {k: self.streams[k] for k in StreamKind.list() if k in self.streams}
        object.__setattr__(self, "streams", ordered)

    @property
    def key(self) -> Tuple[str, int]:
        """
        :return: (subject_id, session_index)
        """
        return self.subject_id, self.session_index

    def has(self, kind: str) -> bool:
        """
        :param kind: stream kind
        :return: True if the stream was recorded
        """
        return kind in self.streams

    def stream(self, kind: str) -> TimeSeries:
        """
        :param kind: stream kind
        :return: the stream
        """
        try:
            return self.streams[kind]
        except KeyError:
            raise MissingStream(
                f"session {self.key} has no '{kind}' stream"
            ) from None

    @property
    def sample_count(self) -> int:
        """
        :return: the common sample count (shortest stream if not yet aligned)
        """
        if not self.streams:
            return 0
        return min(len(s) for s in self.streams.values())

    @property
    def rate_hz(self) -> float:
        """
        :return: the session's sample rate
        """
        for series in self.streams.values():
            return series.rate_hz
        return DEFAULT_RATE_HZ

    @property
    def duration_s(self) -> float:
        """
        :return: sample count over sample rate
        """
        return self.sample_count / self.rate_hz

    @property
    def is_aligned(self) -> bool:
        """
        :return: True if every stream has the same sample count
        """
        return len({len(s) for s in self.streams.values()}) <= 1

    def with_streams(self, replacements: Mapping[str, TimeSeries]) -> "SessionRecording":
        """
        Copy with some streams swapped out; everything else is shared as-is.

        :param replacements: kind -> new series
        :return: the new recording
        """
        merged = dict(self.streams)
        merged.update(replacements)
        return SessionRecording(self.subject_id, self.session_index, merged)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    A collection of recordings; no two share a (subject, session) pair.
    """

    recordings: Tuple[SessionRecording, ...] = ()

    def __post_init__(self):
        recordings = tuple(self.recordings)
        seen = set()
        for rec in recordings:
            if rec.key in seen:
                raise DataError(f"duplicate recording for subject/session {rec.key}")
            seen.add(rec.key)
        object.__setattr__(self, "recordings", recordings)

    def __len__(self) -> int:
        return len(self.recordings)

    def __iter__(self):
        return iter(self.recordings)

    @property
    def subjects(self) -> List[str]:
        """
        :return: subject ids in order of first appearance
        """
        ordered: Dict[str, None] = {}
        for rec in self.recordings:
            ordered.setdefault(rec.subject_id, None)
        return list(ordered)

    def sessions_of(self, subject_id: str) -> List[SessionRecording]:
        """
        :param subject_id: whose sessions
        :return: that subject's recordings by ascending session index
        """
        found = [r for r in self.recordings if r.subject_id == subject_id]
        return sorted(found, key=lambda r: r.session_index)

    def first_session(self, subject_id: str) -> SessionRecording:
        """
        :param subject_id: whose session
        :return: the recording with the subject's smallest session index
        """
        sessions = self.sessions_of(subject_id)
        if not sessions:
            raise DataError(f"no recordings for subject '{subject_id}'")
        return sessions[0]

    def select(self, subject_ids: Iterable[str]) -> "Dataset":
        """
        :param subject_ids: who to keep
        :return: order-preserving subset
        """
        keep = set(subject_ids)
        return Dataset(tuple(r for r in self.recordings if r.subject_id in keep))


def align_streams(recording: SessionRecording) -> SessionRecording:
    """
    Truncate every stream to the shortest common length; masks are carried along.

    :param recording: possibly jittered recording
    :return: aligned recording
    """
    if not recording.streams:
        raise EmptySession(f"session {recording.key} has no streams")
    common = recording.sample_count
    if common == 0:
        raise EmptySession(f"session {recording.key} has an empty stream")
    if recording.is_aligned:
        return recording
    return recording.with_streams(
        {kind: series.head(common) for kind, series in recording.streams.items()}
    )


def filter_subjects(
    dataset: Dataset, min_sessions: int = 2, min_duration_s: float = 15.0
) -> Dataset:
    """
    Keep only subjects with at least *min_sessions* recordings, every one of them lasting at
    least *min_duration_s* (inclusive). Order is preserved.

    :param dataset: the candidates
    :param min_sessions: sessions a subject needs
    :param min_duration_s: seconds each session needs
    :return: the filtered dataset (possibly empty)
    """
    logger = logging.getLogger("SubjectFilter")
    keep = []
    for subject in dataset.subjects:
        sessions = dataset.sessions_of(subject)
        if len(sessions) < min_sessions:
            logger.warning(
                "Excluding '%s': %d session(s), need %d", subject, len(sessions), min_sessions
            )
            continue
        short = [s.session_index for s in sessions if s.duration_s < min_duration_s]
        if short:
            logger.warning(
                "Excluding '%s': session(s) %s shorter than %.1f s", subject, short, min_duration_s
            )
            continue
        keep.append(subject)
    logger.info("Retained %d of %d subjects", len(keep), len(dataset.subjects))
    return dataset.select(keep)
