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
The two privacy mechanisms and the switchboard that applies them to a session.

* Gaze: every sample becomes the linearly weighted average of the *B* samples up to and
  including it (heaviest weight on the newest), as a streaming smoother would do.
* Head/hands: one bounded-Laplace draw per session perturbs apparent height (an additive
  vertical offset on the headset) and apparent wingspan (a scale of the hands' horizontal and
  depth offsets from the head axis).

Head and hands share a single *motion_private* switch; there is no way to protect one without
the other.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import laplace

from vr_leakage import SessionRecording, TimeSeries, seeded_rng
from vr_leakage.constants import DEPTH, HORIZONTAL, VERTICAL, StreamKind
from vr_leakage.errors import (
    InvalidB,
    InvalidBounds,
    InvalidConfig,
    MissingEstimate,
    NoHeadStream,
)

DEFAULT_B = 108
DEFAULT_EPSILON_HEAD = 1.0
DEFAULT_EPSILON_HAND = 0.5
DEFAULT_BOUNDS_M = (1.32, 1.82)

HAND_KINDS = (StreamKind.LEFT_HAND, StreamKind.RIGHT_HAND)

_logger = logging.getLogger("PrivacyMechanism")


# pylint: disable=R0902
@dataclass(frozen=True)
class PrivacyConfig:
    """
    What to protect and how hard.

    :param gaze_private: smooth the gaze stream
    :param motion_private: perturb head *and* hands
    :param B: smoothing window in samples
    :param epsilon_head: privacy budget for the height draw
    :param epsilon_hand: privacy budget for the wingspan draw
    :param bounds_m: plausible height/wingspan interval
    :param noise_seed: root of the per-session noise generators
    """

    gaze_private: bool = False
    motion_private: bool = False
    B: int = DEFAULT_B  # pylint: disable=C0103
    epsilon_head: float = DEFAULT_EPSILON_HEAD
    epsilon_hand: float = DEFAULT_EPSILON_HAND
    bounds_m: Tuple[float, float] = DEFAULT_BOUNDS_M
    noise_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bounds_m", tuple(float(b) for b in self.bounds_m))

    def validate(self) -> "PrivacyConfig":
        """
        :return: self, if all is well
        """
        if int(self.B) != self.B or self.B < 1:
            raise InvalidB(f"'B' {self.B} must be an integer >= 1")
        if not (self.epsilon_head > 0 and self.epsilon_hand > 0):
            raise InvalidConfig(
                f"epsilons ({self.epsilon_head}, {self.epsilon_hand}) must be > 0"
            )
        if len(self.bounds_m) != 2 or not self.bounds_m[0] < self.bounds_m[1]:
            raise InvalidBounds(f"'bounds_m' {self.bounds_m} must be (lower, upper), lower < upper")
        return self

    @property
    def bounds_width(self) -> float:
        """
        :return: upper - lower, the sensitivity of a clamped estimate
        """
        return self.bounds_m[1] - self.bounds_m[0]

    @classmethod
    def from_json(cls, payload: dict) -> "PrivacyConfig":
        """
        :param payload: JSON object with any of the field names
        """
        unknown = set(payload) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown privacy keys: {sorted(unknown)}")
        return cls(**payload).validate()

    def to_json(self) -> dict:
        """
        :return: the fields as a dict
        """
        payload = asdict(self)
        payload["bounds_m"] = list(self.bounds_m)
        return payload


@dataclass(frozen=True)
class AnthropometricEstimate:
    """
    Height and wingspan as the mechanism sees them; wingspan is taken to equal height.
    """

    height_m: float
    wingspan_m: float

    def __post_init__(self):
        if self.wingspan_m != self.height_m:
            raise InvalidConfig(
                f"wingspan {self.wingspan_m} must equal height {self.height_m}"
            )

    @classmethod
    def from_height(cls, height_m: float) -> "AnthropometricEstimate":
        """
        :param height_m: clamped height
        """
        return cls(float(height_m), float(height_m))


def smooth_stream(series: TimeSeries, B: int) -> TimeSeries:  # pylint: disable=C0103
    """
    Linear-weighted moving average over the last *B* samples, per component. Sample *t* uses
    weights ``1..k`` (oldest to newest) over the ``k = min(B, t + 1)`` samples ending at *t*.
    Masked samples drop out and the remaining weights are renormalized; a sample whose whole
    window is masked stays masked.

    :param series: usually the gaze stream
    :param B: window length in samples
    :return: same length, same kind
    """
    if int(B) != B or B < 1:
        raise InvalidB(f"'B' {B} must be an integer >= 1")
    B = int(B)
    n = len(series)
    valid = (~series.mask).astype(np.float64)
    values = np.where(series.mask[:, None], 0.0, series.samples)

    kernel = np.arange(B, 0, -1, dtype=np.float64)
    ramp = np.arange(1, n + 1, dtype=np.float64)
    steady = np.arange(n) >= B - 1

    def weighted(column: np.ndarray) -> np.ndarray:
        full = np.convolve(column, kernel)[:n]
        warmup = np.cumsum(ramp * column)
        return np.where(steady, full, warmup)

    weight = weighted(valid)
    out = np.empty_like(values)
    for c in range(series.arity):
        total = weighted(values[:, c])
        with np.errstate(invalid="ignore", divide="ignore"):
            out[:, c] = np.where(weight > 0, total / weight, np.nan)
    return TimeSeries(series.kind, out, series.rate_hz)


def estimate_anthropometrics(
    first_session: SessionRecording, bounds_m: Tuple[float, float] = DEFAULT_BOUNDS_M
) -> AnthropometricEstimate:
    """
    Height = mean headset height over the subject's first session, clamped into the bounds.

    :param first_session: the subject's lowest-index recording
    :param bounds_m: (lower, upper)
    """
    if not first_session.has(StreamKind.HEAD):
        raise NoHeadStream(f"session {first_session.key} has no head stream")
    vertical = first_session.stream(StreamKind.HEAD).samples[:, VERTICAL]
    vertical = vertical[~np.isnan(vertical)]
    if vertical.size == 0:
        raise NoHeadStream(f"session {first_session.key} has no usable head samples")
    lower, upper = bounds_m
    return AnthropometricEstimate.from_height(
        min(max(float(np.mean(vertical)), lower), upper)
    )


# pylint: disable=R0913
def sample_bounded_laplace(
    center: float,
    scale_b: float,
    lower: float,
    upper: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
):
    """
    Draw from Laplace(center, scale_b) truncated to [lower, upper] by inverting the CDF over
    the renormalized interval (exactly one uniform per draw, never a rejection loop).

    :param center: location, inside the bounds
    :param scale_b: Laplace scale (> 0)
    :param lower: lower bound
    :param upper: upper bound
    :param rng: source of uniforms
    :param size: *None* for a single float, otherwise the number of draws
    """
    if not lower < upper:
        raise InvalidBounds(f"bounds [{lower}, {upper}] must have lower < upper")
    if not lower <= center <= upper:
        raise InvalidBounds(f"center {center} must lie in [{lower}, {upper}]")
    if not scale_b > 0:
        raise InvalidConfig(f"'scale_b' {scale_b} must be > 0")

    low_mass = laplace.cdf(lower, loc=center, scale=scale_b)
    high_mass = laplace.cdf(upper, loc=center, scale=scale_b)
    uniforms = rng.uniform(low_mass, high_mass, size=size)
    draws = np.clip(laplace.ppf(uniforms, loc=center, scale=scale_b), lower, upper)
    return float(draws) if size is None else draws


def session_rng(noise_seed: int, subject_id: str, session_index: int) -> np.random.Generator:
    """
    :return: the generator used for one session's noise draws
    """
    return seeded_rng((noise_seed, subject_id, session_index))


def _head_axis(recording: SessionRecording) -> np.ndarray:
    """
    Per-sample (horizontal, depth) position the hands are scaled about.
    """
    if recording.has(StreamKind.HEAD):
        axis = recording.stream(StreamKind.HEAD).samples[:, [HORIZONTAL, DEPTH]]
    else:
        hands = [recording.stream(k).samples[:, [HORIZONTAL, DEPTH]] for k in HAND_KINDS
                 if recording.has(k)]
        axis = np.mean(hands, axis=0) if len(hands) == 2 else None
        if axis is None:
            axis = np.broadcast_to(np.nanmean(hands[0], axis=0), hands[0].shape)
    axis = np.array(axis[: recording.sample_count], dtype=np.float64)
    gaps = np.isnan(axis).any(axis=1)
    if gaps.any() and not gaps.all():
        axis[gaps] = np.nanmean(axis, axis=0)
    return axis


def _anthropometric_draw(
    center: float, epsilon: float, cfg: PrivacyConfig, rng: np.random.Generator
) -> float:
    # an infinite budget means no noise: nothing is drawn
    if np.isinf(epsilon):
        return center
    lower, upper = cfg.bounds_m
    return sample_bounded_laplace(center, cfg.bounds_width / epsilon, lower, upper, rng)


def privatize_motion(
    recording: SessionRecording,
    estimate: Optional[AnthropometricEstimate],
    cfg: PrivacyConfig,
    rng: Optional[np.random.Generator] = None,
) -> SessionRecording:
    """
    Perturb apparent height and wingspan for one session. Two draws are made, always in this
    order: the height (head offset) and the wingspan (hand scale). Horizontal and depth head
    components are never touched.

    :param recording: the session
    :param estimate: the subject's anthropometrics (from their first, unprotected session)
    :param cfg: privacy parameters; *motion_private* must be set
    :param rng: optional generator; defaults to *session_rng* for the session
    :return: the privatized session; gaze is passed through untouched
    """
    if not cfg.motion_private:
        raise InvalidConfig("privatize_motion called with motion_private unset")
    if estimate is None:
        raise MissingEstimate(f"no anthropometric estimate for session {recording.key}")
    if rng is None:
        rng = session_rng(cfg.noise_seed, recording.subject_id, recording.session_index)

    height = _anthropometric_draw(estimate.height_m, cfg.epsilon_head, cfg, rng)
    wingspan = _anthropometric_draw(estimate.wingspan_m, cfg.epsilon_hand, cfg, rng)
    offset = height - estimate.height_m
    scale = wingspan / estimate.wingspan_m
    _logger.debug(
        "Session %s: height offset %.4f m, wingspan scale %.4f", recording.key, offset, scale
    )

    replaced = {}
    if recording.has(StreamKind.HEAD):
        head = recording.stream(StreamKind.HEAD)
        moved = np.array(head.samples)
        moved[:, VERTICAL] += offset
        replaced[StreamKind.HEAD] = head.replace_samples(moved)

    present = [k for k in HAND_KINDS if recording.has(k)]
    if present:
        axis = _head_axis(recording)
        for kind in present:
            hand = recording.stream(kind)
            moved = np.array(hand.samples)
            count = min(len(hand), axis.shape[0])
            for column, plane in ((HORIZONTAL, 0), (DEPTH, 1)):
                moved[:count, column] = axis[:count, plane] + scale * (
                    moved[:count, column] - axis[:count, plane]
                )
            moved[:, VERTICAL] += offset
            replaced[kind] = hand.replace_samples(moved)

    return recording.with_streams(replaced)


def apply_privacy(
    recording: SessionRecording,
    cfg: PrivacyConfig,
    estimate: Optional[AnthropometricEstimate] = None,
    rng: Optional[np.random.Generator] = None,
) -> SessionRecording:
    """
    Apply whatever *cfg* asks for. Streams that are not selected (or not present) come back as
    the very same objects.

    :param recording: the session
    :param cfg: the switches and parameters
    :param estimate: required when *motion_private* is set and motion streams are present
    :param rng: optional generator for the motion draws
    """
    cfg.validate()
    result = recording
    if cfg.gaze_private and recording.has(StreamKind.GAZE):
        result = result.with_streams(
            {StreamKind.GAZE: smooth_stream(recording.stream(StreamKind.GAZE), cfg.B)}
        )
    motion = (StreamKind.HEAD,) + HAND_KINDS
    if cfg.motion_private and any(recording.has(k) for k in motion):
        result = privatize_motion(result, estimate, cfg, rng)
    return result
