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
Deterministic synthetic populations with a dial for how identifiable subjects are.

Every subject gets a **SubjectProfile** of physical traits (height, reach) and behavioral traits
(head sway, saccades, fixation jitter, hand tremor). Sessions re-use the profile with a little
session-level variation. All randomness comes from ``numpy.random.Philox`` generators seeded
through ``SeedSequence((master_seed, subject_index[, session_index]))`` so output is identical
across runs, platforms and worker counts.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np
from scipy.signal import lfilter

from vr_leakage import Dataset, Seed, SessionRecording, TimeSeries, seeded_rng
from vr_leakage.constants import DEFAULT_RATE_HZ, StreamKind
from vr_leakage.errors import InvalidConfig

NYQUIST_HZ = DEFAULT_RATE_HZ / 2

# population trait ranges: (low, high); the midpoint is the shared value at strength 0
HEIGHT_M = (1.40, 1.90)
ARM_SCALE = (0.92, 1.08)
SWAY_AMPLITUDE_M = (0.005, 0.03)
SWAY_FREQUENCY_HZ = (0.1, 0.5)
SWAY_VERTICAL_FRACTION = (0.1, 0.4)
SACCADE_RATE_HZ = (1.5, 2.5)
SACCADE_AMPLITUDE_DEG = (8.0, 14.0)
FIXATION_NOISE_DEG = (0.05, 0.4)
SACCADE_TAU_S = (0.012, 0.028)
TREMOR_AMPLITUDE_M = (0.001, 0.008)
TREMOR_FREQUENCY_HZ = (4.0, 10.0)

SACCADE_REFRACTORY_S = 0.15
GAZE_EXTENT_DEG = 20.0
FIXATION_AR = 0.9
HAND_DRIFT_M = 0.04
HEAD_WANDER_M = 0.004


# pylint: disable=R0902
@dataclass(frozen=True)
class SubjectProfile:
    """
    The traits that make one synthetic subject recognizable.

    :param head_sway: (amplitude m, frequency Hz)
    :param gaze_style: (saccades per second, saccade amplitude deg, fixation noise deg)
    :param hand_tremor: (amplitude m, frequency Hz)
    :param saccade_tau_s: time constant of the exponential saccade velocity profile
    :param sway_vertical_fraction: share of the sway amplitude showing up vertically
    """

    subject_id: str
    height_m: float
    arm_scale: float
    head_sway: Tuple[float, float]
    gaze_style: Tuple[float, float, float]
    hand_tremor: Tuple[float, float]
    seed: int
    saccade_tau_s: float = sum(SACCADE_TAU_S) / 2
    sway_vertical_fraction: float = sum(SWAY_VERTICAL_FRACTION) / 2

    def __post_init__(self):
        amplitudes = (
            self.head_sway[0],
            self.gaze_style[1],
            self.gaze_style[2],
            self.hand_tremor[0],
            self.sway_vertical_fraction,
        )
        if min(amplitudes) < 0:
            raise InvalidConfig(f"profile '{self.subject_id}' has a negative amplitude")
        for freq in (self.head_sway[1], self.gaze_style[0], self.hand_tremor[1]):
            if not 0 < freq < NYQUIST_HZ:
                raise InvalidConfig(
                    f"profile '{self.subject_id}': frequency {freq} must be in (0, {NYQUIST_HZ})"
                )
        if self.saccade_tau_s <= 0:
            raise InvalidConfig(f"'saccade_tau_s' {self.saccade_tau_s} must be > 0")


@dataclass(frozen=True)
class GeneratorConfig:
    """
    :param n_subjects: population size (>= 2)
    :param sessions_per_subject: sessions per subject
    :param session_duration_s: seconds per session (>= 15)
    :param identity_strength: 0 = everybody shares one trait set, 1 = full between-subject spread
    :param seed: master seed
    """

    n_subjects: int = 38
    sessions_per_subject: int = 2
    session_duration_s: float = 60.0
    identity_strength: float = 1.0
    seed: int = 0
    rate_hz: float = DEFAULT_RATE_HZ

    def validate(self) -> "GeneratorConfig":
        """
        :return: self, if all is well
        """
        if self.n_subjects < 2:
            raise InvalidConfig(f"'n_subjects' {self.n_subjects} must be >= 2")
        if self.sessions_per_subject < 1:
            raise InvalidConfig(
                f"'sessions_per_subject' {self.sessions_per_subject} must be >= 1"
            )
        if self.session_duration_s < 15:
            raise InvalidConfig(
                f"'session_duration_s' {self.session_duration_s} must be >= 15"
            )
        if not 0.0 <= self.identity_strength <= 1.0:
            raise InvalidConfig(
                f"'identity_strength' {self.identity_strength} must be in [0, 1]"
            )
        if self.rate_hz <= 0:
            raise InvalidConfig(f"'rate_hz' {self.rate_hz} must be > 0")
        return self

    @classmethod
    def from_json(cls, payload: dict) -> "GeneratorConfig":
        """
        :param payload: JSON object with any of the field names
        """
        unknown = set(payload) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown generator keys: {sorted(unknown)}")
        return cls(**payload).validate()

    def to_json(self) -> dict:
        """
        :return: the fields as a dict
        """
        return asdict(self)


def _trait(rng: np.random.Generator, bounds: Tuple[float, float], strength: float) -> float:
    low, high = bounds
    middle = (low + high) / 2
    # always draw so the stream position does not depend on strength
    drawn = rng.uniform(low, high)
    return float(middle + strength * (drawn - middle))


def profile_for(cfg: GeneratorConfig, subject_index: int) -> SubjectProfile:
    """
    Draw the profile of one subject; the same (seed, index) always yields the same profile.

    :param cfg: population config
    :param subject_index: 0-based
    """
    rng = seeded_rng((cfg.seed, subject_index))
    s = cfg.identity_strength
    return SubjectProfile(
        subject_id=f"S{subject_index + 1:03d}",
        height_m=_trait(rng, HEIGHT_M, s),
        arm_scale=_trait(rng, ARM_SCALE, s),
        head_sway=(_trait(rng, SWAY_AMPLITUDE_M, s), _trait(rng, SWAY_FREQUENCY_HZ, s)),
        gaze_style=(
            _trait(rng, SACCADE_RATE_HZ, s),
            _trait(rng, SACCADE_AMPLITUDE_DEG, s),
            _trait(rng, FIXATION_NOISE_DEG, s),
        ),
        hand_tremor=(_trait(rng, TREMOR_AMPLITUDE_M, s), _trait(rng, TREMOR_FREQUENCY_HZ, s)),
        seed=int(np.random.SeedSequence((cfg.seed, subject_index)).generate_state(1)[0]),
        saccade_tau_s=_trait(rng, SACCADE_TAU_S, s),
        sway_vertical_fraction=_trait(rng, SWAY_VERTICAL_FRACTION, s),
    )


def _wander(rng: np.random.Generator, n: int, sigma: float, tau_s: float, rate_hz: float):
    """
    Smooth random walk: a first-order autoregression with stationary std *sigma*.
    """
    a = np.exp(-1.0 / (tau_s * rate_hz))
    return lfilter([sigma * np.sqrt(1 - a * a)], [1.0, -a], rng.standard_normal(n))


def _saccade_trace(
    rng: np.random.Generator, n: int, rate_hz: float, per_second: float, amplitude: float,
    tau_s: float,
) -> np.ndarray:
    """
    Horizontal/vertical gaze angle (degrees) made of Poisson-timed saccades, each approaching its
    target along ``1 - exp(-t / tau)``.
    """
    duration = n / rate_hz
    gap = max(1.0 / per_second - SACCADE_REFRACTORY_S, 1e-3)
    onsets = []
    t = SACCADE_REFRACTORY_S + rng.exponential(gap)
    while t < duration:
        onsets.append(int(np.ceil(t * rate_hz)))
        t += SACCADE_REFRACTORY_S + rng.exponential(gap)

    trace = np.zeros((n, 2))
    target = np.zeros(2)
    decay = np.exp(-np.arange(int(10 * tau_s * rate_hz) + 2) / (tau_s * rate_hz))
    for onset in onsets:
        if onset >= n:
            break
        theta = rng.uniform(0, 2 * np.pi)
        step = amplitude * rng.uniform(0.9, 1.1) * np.array([np.cos(theta), np.sin(theta)])
        if np.linalg.norm(target + step) > GAZE_EXTENT_DEG:
            step = -step
        target = target + step
        trace[onset:] += step
        tail = decay[: n - onset]
        trace[onset : onset + tail.size] -= np.outer(tail, step)
    return trace


def _angles_to_vector(yaw_deg: np.ndarray, pitch_deg: np.ndarray) -> np.ndarray:
    yaw = np.radians(yaw_deg)
    pitch = np.radians(pitch_deg)
    return np.column_stack(
        (np.cos(pitch) * np.sin(yaw), np.sin(pitch), np.cos(pitch) * np.cos(yaw))
    )


# pylint: disable=R0914
def generate_session(
    profile: SubjectProfile,
    duration_s: float,
    session_seed: Seed,
    session_index: int = 1,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> SessionRecording:
    """
    Render one session of all four streams for a profile.

    :param profile: who
    :param duration_s: seconds (> 0)
    :param session_seed: seed for the session-level noise
    :param session_index: 1-based index stamped on the recording
    :param rate_hz: sample rate
    :return: aligned recording
    """
    if duration_s <= 0:
        raise InvalidConfig(f"'duration_s' {duration_s} must be > 0")
    rng = seeded_rng(session_seed)
    n = int(round(duration_s * rate_hz))
    t = np.arange(n) / rate_hz

    # session-level variation of the behavioral traits
    rate_factor = 1 + rng.uniform(-0.03, 0.03)
    amplitude_factor = rng.uniform(0.9, 1.1)
    noise_factor = 1 + rng.uniform(-0.1, 0.1)
    sway_factor = 1 + rng.uniform(-0.1, 0.1)
    tremor_factor = 1 + rng.uniform(-0.05, 0.05)
    posture = rng.normal(0.0, 0.003)
    phases = rng.uniform(0, 2 * np.pi, size=9)

    # head: standing height + sway + wander
    sway_amp, sway_freq = profile.head_sway
    sway_amp *= sway_factor
    head = np.column_stack(
        (
            sway_amp * np.sin(2 * np.pi * sway_freq * t + phases[0])
            + _wander(rng, n, HEAD_WANDER_M, 2.0, rate_hz),
            profile.height_m
            + posture
            + profile.sway_vertical_fraction
            * sway_amp
            * np.sin(4 * np.pi * sway_freq * t + phases[1])
            + _wander(rng, n, HEAD_WANDER_M, 2.0, rate_hz),
            0.7 * sway_amp * np.cos(2 * np.pi * 0.8 * sway_freq * t + phases[2])
            + _wander(rng, n, HEAD_WANDER_M, 2.0, rate_hz),
        )
    )

    # gaze: saccades + fixation jitter, delivered as a direction vector
    per_second, amplitude, noise = profile.gaze_style
    angles = _saccade_trace(
        rng, n, rate_hz, per_second * rate_factor, amplitude * amplitude_factor,
        profile.saccade_tau_s,
    )
    jitter_sigma = noise * noise_factor * np.sqrt(1 - FIXATION_AR**2)
    for axis in range(2):
        angles[:, axis] += lfilter(
            [jitter_sigma], [1.0, -FIXATION_AR], rng.standard_normal(n)
        )
    gaze = _angles_to_vector(angles[:, 0], angles[:, 1])

    # hands: anchored to the head; their span is height times reach
    lateral = 0.5 * profile.height_m * profile.arm_scale
    depth = 0.30 * profile.height_m * profile.arm_scale
    drop = 0.35 * profile.height_m
    tremor_amp, tremor_freq = profile.hand_tremor
    tremor_freq *= tremor_factor

    def hand(side: float, phase_offset: int) -> np.ndarray:
        tremor = [
            tremor_amp * np.sin(2 * np.pi * tremor_freq * t + phases[phase_offset + k])
            for k in range(3)
        ]
        return np.column_stack(
            (
                head[:, 0] + side * lateral + tremor[0]
                + _wander(rng, n, HAND_DRIFT_M, 1.5, rate_hz),
                head[:, 1] - drop + tremor[1] + _wander(rng, n, HAND_DRIFT_M, 1.5, rate_hz),
                head[:, 2] + depth + tremor[2] + _wander(rng, n, HAND_DRIFT_M, 1.5, rate_hz),
            )
        )

    left = hand(-1.0, 3)
    right = hand(1.0, 6)

    return SessionRecording(
        profile.subject_id,
        session_index,
        {
            StreamKind.GAZE: TimeSeries(StreamKind.GAZE, gaze, rate_hz),
            StreamKind.HEAD: TimeSeries(StreamKind.HEAD, head, rate_hz),
            StreamKind.LEFT_HAND: TimeSeries(StreamKind.LEFT_HAND, left, rate_hz),
            StreamKind.RIGHT_HAND: TimeSeries(StreamKind.RIGHT_HAND, right, rate_hz),
        },
    )


def generate_population(cfg: GeneratorConfig, workers: int = 1) -> Dataset:
    """
    Build a whole population. Each session's seed is derived from (master seed, subject index,
    session index), so *workers* cannot change the result.

    :param cfg: what to build
    :param workers: threads used to render sessions
    :return: the dataset, subjects ``S001..``, sessions ``1..``
    """
    cfg.validate()
    logger = logging.getLogger("PopulationGenerator")
    profiles = [profile_for(cfg, i) for i in range(cfg.n_subjects)]
    jobs = [
        (profiles[i], (cfg.seed, i, session))
        for i in range(cfg.n_subjects)
        for session in range(1, cfg.sessions_per_subject + 1)
    ]

    def render(job):
        profile, seed = job
        return generate_session(profile, cfg.session_duration_s, seed, seed[2], cfg.rate_hz)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            recordings = list(pool.map(render, jobs))
    else:
        recordings = [render(job) for job in jobs]

    logger.info(
        "Generated %d subjects x %d sessions (strength %.2f, seed %d)",
        cfg.n_subjects,
        cfg.sessions_per_subject,
        cfg.identity_strength,
        cfg.seed,
    )
    return Dataset(tuple(recordings))
