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
From sessions to fixed-length, normalized multichannel windows.

Gaze goes through angles -> Savitzky-Golay velocity -> clamp; head and hands are used as raw
positions. Channels always appear in this order (restricted to the selection)::

    gaze_vx, gaze_vy, head_x, head_y, head_z,
    lhand_x, lhand_y, lhand_z, rhand_x, rhand_y, rhand_z

Only gaze channels are normalized; motion channels carry identity statistics (mean 0, std 1).
"""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.signal import savgol_coeffs

from vr_leakage import SessionRecording, TimeSeries
from vr_leakage.constants import DEFAULT_RATE_HZ, StreamKind
from vr_leakage.errors import (
    ArityMismatch,
    EmptySelection,
    InvalidConfig,
    IoFailure,
    NoTrainingData,
    TooShort,
)

WINDOW_SAMPLES = 450
SG_WINDOW = 7
SG_ORDER = 2
VELOCITY_LIMIT_DPS = 1000.0
DEGENERATE_STD = 1e-12

GAZE_CHANNELS = ("gaze_vx", "gaze_vy")
HEAD_CHANNELS = ("head_x", "head_y", "head_z")
HAND_CHANNELS = ("lhand_x", "lhand_y", "lhand_z", "rhand_x", "rhand_y", "rhand_z")
CHANNEL_ORDER = GAZE_CHANNELS + HEAD_CHANNELS + HAND_CHANNELS


@dataclass(frozen=True)
class ChannelSelection:
    """
    Which streams feed the windows. Channel count is ``2*gaze + 3*head + 6*hands``.
    """

    include_gaze: bool = False
    include_head: bool = False
    include_hands: bool = False

    def validate(self) -> "ChannelSelection":
        """
        :return: self, if at least one stream is selected
        """
        if not (self.include_gaze or self.include_head or self.include_hands):
            raise EmptySelection("at least one stream must be selected")
        return self

    @property
    def channel_names(self) -> Tuple[str, ...]:
        """
        :return: the selected channels in canonical order
        """
        names = ()
        if self.include_gaze:
            names += GAZE_CHANNELS
        if self.include_head:
            names += HEAD_CHANNELS
        if self.include_hands:
            names += HAND_CHANNELS
        return names

    @property
    def channel_count(self) -> int:
        """
        :return: number of channels
        """
        return len(self.channel_names)

    @property
    def gaze_channels(self) -> int:
        """
        :return: how many leading channels are gaze (0 or 2)
        """
        return len(GAZE_CHANNELS) if self.include_gaze else 0


@dataclass(frozen=True, eq=False)
class ChannelWindow:
    """
    One window: ``channels`` is ``(samples, C)``.
    """

    channels: np.ndarray
    subject_id: str
    session_index: int
    window_index: int
    channel_names: Tuple[str, ...] = ()

    def __post_init__(self):
        channels = np.array(self.channels, dtype=np.float64)
        if channels.ndim != 2:
            raise ArityMismatch(f"window must be 2-D, got shape {channels.shape}")
        if self.channel_names and len(self.channel_names) != channels.shape[1]:
            raise ArityMismatch(
                f"{len(self.channel_names)} channel names for {channels.shape[1]} channels"
            )
        channels.setflags(write=False)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    def with_channels(self, channels: np.ndarray) -> "ChannelWindow":
        """
        :param channels: replacement values of the same shape
        :return: same identity, new values
        """
        return ChannelWindow(
            channels, self.subject_id, self.session_index, self.window_index, self.channel_names
        )


@dataclass(frozen=True, eq=False)
class NormStats:
    """
    Per-channel mean/std fitted on training windows; motion channels get (0, 1).
    """

    mean: np.ndarray
    std: np.ndarray
    channel_names: Tuple[str, ...] = ()

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if mean.shape != std.shape:
            raise ArityMismatch(f"mean {mean.shape} and std {std.shape} differ")
        if np.any(std <= 0):
            raise InvalidConfig("normalization std must be > 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @classmethod
    def identity(cls, selection: ChannelSelection) -> "NormStats":
        """
        :param selection: channels to cover
        :return: stats that change nothing
        """
        count = selection.channel_count
        return cls(np.zeros(count), np.ones(count), selection.channel_names)


def gaze_to_angles(gaze: TimeSeries) -> TimeSeries:
    """
    Direction vectors to (horizontal, vertical) angles in degrees: ``atan2(x, z)`` and
    ``asin(y / |v|)``. Zero-length vectors become masked samples. Two-component input is
    assumed to be angles already and is returned as-is.

    :param gaze: 3-vector or 2-angle gaze stream
    """
    if gaze.arity == 2:
        return gaze
    if gaze.arity != 3:
        raise ArityMismatch(f"gaze has {gaze.arity} components, expected 2 or 3")
    x, y, z = gaze.samples[:, 0], gaze.samples[:, 1], gaze.samples[:, 2]
    norm = np.sqrt(x * x + y * y + z * z)
    zero = norm < 1e-12
    with np.errstate(invalid="ignore", divide="ignore"):
        horizontal = np.degrees(np.arctan2(x, z))
        vertical = np.degrees(np.arcsin(np.clip(y / norm, -1.0, 1.0)))
    angles = np.column_stack((horizontal, vertical))
    return TimeSeries(gaze.kind, angles, gaze.rate_hz, gaze.mask | zero)


def sg_coefficients(window: int = SG_WINDOW, order: int = SG_ORDER, deriv: int = 1,
                    pos: Optional[int] = None) -> np.ndarray:
    """
    Least-squares polynomial filter taps, ordered to be dotted with samples of increasing
    time offset.

    :param window: odd window length
    :param order: polynomial degree
    :param deriv: derivative order
    :param pos: evaluation index inside the window (default: centre)
    """
    return savgol_coeffs(window, order, deriv=deriv, pos=pos, use="dot")


def sg_derivative(
    values: np.ndarray,
    order: int = SG_ORDER,
    window: int = SG_WINDOW,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> np.ndarray:
    """
    First derivative (units per second) with a Savitzky-Golay filter. The first and last
    ``window // 2`` samples use the fit of the nearest full window evaluated at their offset,
    so output length equals input length. NaN inputs spread NaN to the samples they touch.

    :param values: one channel
    :param order: polynomial degree
    :param window: odd window length > order
    :param rate_hz: sample rate
    """
    if window % 2 == 0 or window <= order:
        raise InvalidConfig(f"window {window} must be odd and > order {order}")
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    n = x.size
    if n < window:
        raise TooShort(f"{n} samples, need at least {window}")
    half = window // 2
    out = np.empty(n)
    out[half : n - half] = np.correlate(x, sg_coefficients(window, order), mode="valid")
    for offset in range(half):
        out[offset] = sg_coefficients(window, order, pos=offset) @ x[:window]
        tail = window - half + offset
        out[n - half + offset] = sg_coefficients(window, order, pos=tail) @ x[n - window :]
    return out * rate_hz


def clamp_velocity(velocity: np.ndarray, limit: float = VELOCITY_LIMIT_DPS) -> np.ndarray:
    """
    :param velocity: degrees per second; NaN stays NaN
    :param limit: symmetric bound
    """
    return np.clip(velocity, -limit, limit)


def count_saccades(
    angles: np.ndarray,
    rate_hz: float = DEFAULT_RATE_HZ,
    threshold_dps: float = 100.0,
    min_samples: int = 2,
) -> int:
    """
    Velocity-threshold event counter: runs of at least *min_samples* consecutive samples whose
    angular speed exceeds *threshold_dps*.

    :param angles: ``(n, 2)`` horizontal/vertical degrees
    """
    speed = np.hypot(*np.diff(np.asarray(angles, dtype=np.float64), axis=0).T) * rate_hz
    fast = np.concatenate(([False], speed > threshold_dps, [False]))
    edges = np.flatnonzero(np.diff(fast.astype(np.int8)))
    starts, stops = edges[::2], edges[1::2]
    return int(np.sum(stops - starts >= min_samples))


def window_session(
    channels: np.ndarray,
    length: int = WINDOW_SAMPLES,
    subject_id: str = "?",
    session_index: int = 1,
    channel_names: Sequence[str] = (),
) -> List[ChannelWindow]:
    """
    Non-overlapping windows in time order; the trailing remainder is dropped.

    :param channels: ``(N, C)`` aligned channels
    :param length: samples per window
    """
    data = np.asarray(channels, dtype=np.float64)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    count = data.shape[0] // length
    return [
        ChannelWindow(
            data[i * length : (i + 1) * length], subject_id, session_index, i, channel_names
        )
        for i in range(count)
    ]


def fit_norm_stats(windows: Sequence[ChannelWindow], selection: ChannelSelection) -> NormStats:
    """
    Mean and population std of every gaze channel over all training samples (NaN ignored,
    compensated sums so the result does not depend on window order). A std under 1e-12
    becomes 1.

    :param windows: training windows, un-normalized
    :param selection: what the windows hold
    """
    if not windows:
        raise NoTrainingData("no training windows")
    stats = NormStats.identity(selection)
    mean, std = stats.mean.copy(), stats.std.copy()
    for channel in range(selection.gaze_channels):
        column = np.concatenate([w.channels[:, channel] for w in windows])
        column = column[~np.isnan(column)]
        if column.size == 0:
            continue
        mu = math.fsum(column) / column.size
        sigma = math.sqrt(math.fsum((column - mu) ** 2) / column.size)
        mean[channel] = mu
        std[channel] = sigma if sigma >= DEGENERATE_STD else 1.0
    return NormStats(mean, std, selection.channel_names)


def normalize_window(window: ChannelWindow, stats: NormStats) -> ChannelWindow:
    """
    ``(x - mean) / std`` per channel, then NaN -> 0.

    :param window: raw window
    :param stats: fitted on training data
    """
    if stats.mean.size != window.channels.shape[1]:
        raise ArityMismatch(
            f"stats cover {stats.mean.size} channels, window has {window.channels.shape[1]}"
        )
    scaled = (window.channels - stats.mean) / stats.std
    return window.with_channels(np.nan_to_num(scaled, nan=0.0))


def _gaze_velocity(recording: SessionRecording, count: int) -> np.ndarray:
    angles = gaze_to_angles(recording.stream(StreamKind.GAZE)).samples[:count]
    rate = recording.rate_hz
    return np.column_stack(
        [clamp_velocity(sg_derivative(angles[:, k], rate_hz=rate)) for k in range(2)]
    )


def session_channels(recording: SessionRecording, selection: ChannelSelection) -> np.ndarray:
    """
    Assemble the selected channels of a session, before windowing.

    :return: ``(N, C)`` with N the common sample count
    """
    selection.validate()
    count = recording.sample_count
    parts = []
    if selection.include_gaze:
        parts.append(_gaze_velocity(recording, count))
    if selection.include_head:
        parts.append(recording.stream(StreamKind.HEAD).samples[:count])
    if selection.include_hands:
        parts.append(recording.stream(StreamKind.LEFT_HAND).samples[:count])
        parts.append(recording.stream(StreamKind.RIGHT_HAND).samples[:count])
    return np.column_stack(parts)


def build_windows(
    recording: SessionRecording,
    selection: ChannelSelection,
    stats: Optional[NormStats] = None,
    length: int = WINDOW_SAMPLES,
) -> List[ChannelWindow]:
    """
    The full per-session pipeline. With *stats* the windows come back normalized; without,
    they are the raw material for *fit_norm_stats* (and may still contain NaN).

    :param recording: one session holding every selected stream
    :param selection: channels
    :param stats: fitted normalization, or *None* for fit mode
    :param length: samples per window
    """
    selection.validate()
    for kind, wanted in (
        (StreamKind.GAZE, selection.include_gaze),
        (StreamKind.HEAD, selection.include_head),
        (StreamKind.LEFT_HAND, selection.include_hands),
        (StreamKind.RIGHT_HAND, selection.include_hands),
    ):
        if wanted:
            recording.stream(kind)  # raises MissingStream
    if recording.sample_count < length:
        return []
    windows = window_session(
        session_channels(recording, selection),
        length,
        recording.subject_id,
        recording.session_index,
        selection.channel_names,
    )
    if stats is None:
        return windows
    return [normalize_window(w, stats) for w in windows]


def stack_windows(windows: Sequence[ChannelWindow]) -> np.ndarray:
    """
    :return: ``(n_windows, samples, C)``
    """
    return np.stack([w.channels for w in windows])


def export_windows(windows: Sequence[ChannelWindow], path: Union[str, Path]) -> None:
    """
    Flat CSV dump for debugging: one row per (window, sample). The first line is a comment
    naming the channel order.

    :param windows: what to dump
    :param path: target file
    """
    names = list(windows[0].channel_names) if windows else list(CHANNEL_ORDER)
    frames = []
    for w in windows:
        frame = pd.DataFrame(w.channels, columns=names)
        frame.insert(0, "sample", np.arange(w.channels.shape[0]))
        frame.insert(0, "window", w.window_index)
        frame.insert(0, "session", w.session_index)
        frame.insert(0, "subject", w.subject_id)
        frames.append(frame)
    table = (
        pd.concat(frames, ignore_index=True)
        if frames
        else pd.DataFrame(columns=["subject", "session", "window", "sample"] + names)
    )
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(f"# channels: {','.join(names)}\n")
            table.to_csv(handle, index=False)
    except OSError as e:
        raise IoFailure(f"cannot write '{path}': {e}") from e
