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

import unittest

import numpy as np

from base import TestBase, constant_head, motion_session, series
from vr_leakage import SessionRecording, seeded_rng
from vr_leakage.constants import DEPTH, HORIZONTAL, VERTICAL, StreamKind
from vr_leakage.errors import (
    InvalidB,
    InvalidBounds,
    InvalidConfig,
    MissingEstimate,
    NoHeadStream,
)
from vr_leakage.privacy import (
    AnthropometricEstimate,
    PrivacyConfig,
    apply_privacy,
    estimate_anthropometrics,
    privatize_motion,
    sample_bounded_laplace,
    session_rng,
    smooth_stream,
)

MOTION_ONLY = PrivacyConfig(motion_private=True, noise_seed=7)


class SmoothStreamTestCase(TestBase):
    def test_constant_signal_unchanged(self):
        ts = series(StreamKind.GAZE, np.full((300, 2), 3.25))
        self.assertArrayClose(ts.samples, smooth_stream(ts, 108).samples)

    def test_window_of_one_is_identity(self):
        values = seeded_rng(1).standard_normal((50, 3))
        ts = series(StreamKind.GAZE, values)
        self.assertArrayClose(values, smooth_stream(ts, 1).samples, atol=1e-12)

    def test_linearity(self):
        rng = seeded_rng(2)
        x, y = rng.standard_normal((400, 2)), rng.standard_normal((400, 2))
        combined = smooth_stream(series(StreamKind.GAZE, 2.0 * x - 3.0 * y), 108).samples
        expected = (
            2.0 * smooth_stream(series(StreamKind.GAZE, x), 108).samples
            - 3.0 * smooth_stream(series(StreamKind.GAZE, y), 108).samples
        )
        self.assertArrayClose(expected, combined)

    def test_ramp_closed_form(self):
        ramp = np.arange(20, dtype=np.float64)
        smoothed = smooth_stream(series(StreamKind.GAZE, ramp), 3).samples[:, 0]
        self.assertAlmostEqual(0.0, smoothed[0], delta=1e-9)
        self.assertAlmostEqual(2.0 / 3.0, smoothed[1], delta=1e-9)
        self.assertArrayClose(ramp[2:] - 2.0 / 3.0, smoothed[2:])

    def test_masked_samples_drop_out(self):
        ts = series(StreamKind.GAZE, [1.0, np.nan, 3.0])
        smoothed = smooth_stream(ts, 2).samples[:, 0]
        self.assertArrayClose([1.0, 1.0, 3.0], smoothed)

    def test_fully_masked_window_stays_masked(self):
        ts = series(StreamKind.GAZE, [1.0, np.nan, 3.0])
        self.assertTrue(smooth_stream(ts, 1).mask[1])

    def test_stays_in_input_range(self):
        values = seeded_rng(3).uniform(-5, 5, size=(500, 2))
        smoothed = smooth_stream(series(StreamKind.GAZE, values), 37).samples
        self.assertTrue(np.all(smoothed >= values.min() - 1e-12))
        self.assertTrue(np.all(smoothed <= values.max() + 1e-12))

    def test_invalid_window(self):
        ts = series(StreamKind.GAZE, np.zeros((5, 2)))
        for bad in (0, -3, 2.5):
            with self.assertRaises(InvalidB):
                smooth_stream(ts, bad)


class BoundedLaplaceTestCase(TestBase):
    def test_containment_and_symmetry(self):
        lower, upper = 1.32, 1.82
        center = (lower + upper) / 2
        draws = sample_bounded_laplace(center, 1.0, lower, upper, seeded_rng(4), size=1_000_000)
        self.assertTrue(np.all(draws >= lower))
        self.assertTrue(np.all(draws <= upper))
        standard_error = draws.std() / np.sqrt(draws.size)
        self.assertLess(abs(draws.mean() - center), 3 * standard_error)

    def test_small_scale_concentrates(self):
        draws = sample_bounded_laplace(1.6, 0.01, 1.32, 1.82, seeded_rng(5), size=10_000)
        self.assertLess(abs(np.median(draws) - 1.6), 0.005)

    def test_center_on_bound(self):
        draws = sample_bounded_laplace(1.82, 0.5, 1.32, 1.82, seeded_rng(6), size=1000)
        self.assertTrue(np.all(draws <= 1.82))
        self.assertTrue(np.all(draws >= 1.32))

    def test_scalar_draw(self):
        value = sample_bounded_laplace(1.6, 0.5, 1.32, 1.82, seeded_rng(7))
        self.assertIsInstance(value, float)

    def test_invalid_arguments(self):
        rng = seeded_rng(8)
        with self.assertRaises(InvalidBounds):
            sample_bounded_laplace(1.6, 0.5, 1.82, 1.32, rng)
        with self.assertRaises(InvalidBounds):
            sample_bounded_laplace(2.0, 0.5, 1.32, 1.82, rng)
        with self.assertRaises(InvalidConfig):
            sample_bounded_laplace(1.6, 0.0, 1.32, 1.82, rng)


class AnthropometricsTestCase(TestBase):
    def test_mean_height(self):
        est = estimate_anthropometrics(motion_session(height=1.7))
        self.assertAlmostEqual(1.7, est.height_m)
        self.assertEqual(est.height_m, est.wingspan_m)

    def test_clamped(self):
        self.assertEqual(1.82, estimate_anthropometrics(motion_session(height=2.05)).height_m)
        self.assertEqual(1.32, estimate_anthropometrics(motion_session(height=1.1)).height_m)

    def test_no_head(self):
        rec = SessionRecording(
            "A", 1, {StreamKind.GAZE: series(StreamKind.GAZE, np.zeros((10, 2)))}
        )
        with self.assertRaises(NoHeadStream):
            estimate_anthropometrics(rec)

    def test_wingspan_must_equal_height(self):
        with self.assertRaises(InvalidConfig):
            AnthropometricEstimate(1.6, 1.7)


class PrivatizeMotionTestCase(TestBase):
    def setUp(self):
        self.rec = motion_session("A", 2, height=1.6)
        self.estimate = AnthropometricEstimate.from_height(1.6)

    def test_offsets_and_scale(self):
        out = privatize_motion(self.rec, self.estimate, MOTION_ONLY)
        head = out.stream(StreamKind.HEAD).samples
        left = out.stream(StreamKind.LEFT_HAND).samples
        right = out.stream(StreamKind.RIGHT_HAND).samples

        # horizontal and depth head components never move
        self.assertArrayClose(np.zeros(len(head)), head[:, HORIZONTAL])
        self.assertArrayClose(np.zeros(len(head)), head[:, DEPTH])
        offset = head[0, VERTICAL] - 1.6
        self.assertArrayClose(np.full(len(head), 1.6 + offset), head[:, VERTICAL])
        self.assertArrayClose(np.full(len(left), 1.1 + offset), left[:, VERTICAL])
        self.assertArrayClose(np.full(len(right), 1.1 + offset), right[:, VERTICAL])

        scale = right[0, HORIZONTAL] / 0.4
        self.assertAlmostEqual(-0.4 * scale, left[0, HORIZONTAL], delta=1e-12)
        self.assertAlmostEqual(0.3 * scale, left[0, DEPTH], delta=1e-12)
        self.assertGreaterEqual(1.6 + offset, 1.32)
        self.assertLessEqual(1.6 + offset, 1.82)
        self.assertGreaterEqual(scale * 1.6, 1.32 - 1e-9)
        self.assertLessEqual(scale * 1.6, 1.82 + 1e-9)

    def test_draw_order_head_then_hands(self):
        out = privatize_motion(self.rec, self.estimate, MOTION_ONLY)
        rng = session_rng(7, "A", 2)
        width = MOTION_ONLY.bounds_width
        height = sample_bounded_laplace(1.6, width / 1.0, 1.32, 1.82, rng)
        wingspan = sample_bounded_laplace(1.6, width / 0.5, 1.32, 1.82, rng)
        head = out.stream(StreamKind.HEAD).samples
        right = out.stream(StreamKind.RIGHT_HAND).samples
        self.assertAlmostEqual(height, head[0, VERTICAL], delta=1e-12)
        self.assertAlmostEqual(0.4 * wingspan / 1.6, right[0, HORIZONTAL], delta=1e-12)

    def test_reproducible_per_session(self):
        a = privatize_motion(self.rec, self.estimate, MOTION_ONLY)
        b = privatize_motion(self.rec, self.estimate, MOTION_ONLY)
        other = privatize_motion(motion_session("A", 3, 1.6), self.estimate, MOTION_ONLY)
        self.assertArrayClose(
            a.stream(StreamKind.HEAD).samples, b.stream(StreamKind.HEAD).samples, atol=0.0
        )
        self.assertNotEqual(
            a.stream(StreamKind.HEAD).samples[0, VERTICAL],
            other.stream(StreamKind.HEAD).samples[0, VERTICAL],
        )

    def test_hands_only_axis_is_hand_midpoint(self):
        rec = SessionRecording(
            "A",
            1,
            {k: s for k, s in self.rec.streams.items() if k != StreamKind.HEAD},
        )
        out = privatize_motion(rec, self.estimate, MOTION_ONLY)
        left = out.stream(StreamKind.LEFT_HAND).samples
        right = out.stream(StreamKind.RIGHT_HAND).samples
        self.assertArrayClose(np.full(len(left), 0.3), left[:, DEPTH])
        self.assertArrayClose(-left[:, HORIZONTAL], right[:, HORIZONTAL])

    def test_infinite_budget_adds_no_noise(self):
        cfg = PrivacyConfig(
            motion_private=True, epsilon_head=float("inf"), epsilon_hand=float("inf")
        ).validate()
        out = privatize_motion(self.rec, self.estimate, cfg)
        for kind in (StreamKind.HEAD, StreamKind.LEFT_HAND, StreamKind.RIGHT_HAND):
            self.assertArrayClose(self.rec.stream(kind).samples, out.stream(kind).samples)

        # one budget infinite: the other draw still happens
        hands_only = PrivacyConfig(motion_private=True, epsilon_head=float("inf"), noise_seed=7)
        out = privatize_motion(self.rec, self.estimate, hands_only)
        self.assertArrayClose(
            self.rec.stream(StreamKind.HEAD).samples, out.stream(StreamKind.HEAD).samples
        )
        wingspan = sample_bounded_laplace(
            1.6, hands_only.bounds_width / 0.5, 1.32, 1.82, session_rng(7, "A", 2)
        )
        right = out.stream(StreamKind.RIGHT_HAND).samples
        self.assertAlmostEqual(0.4 * wingspan / 1.6, right[0, HORIZONTAL], delta=1e-12)

    def test_missing_estimate(self):
        with self.assertRaises(MissingEstimate):
            privatize_motion(self.rec, None, MOTION_ONLY)


class ApplyPrivacyTestCase(TestBase):
    def _session(self) -> SessionRecording:
        rec = motion_session("B", 1, height=1.5)
        gaze = series(StreamKind.GAZE, seeded_rng(9).standard_normal((900, 3)))
        return rec.with_streams({StreamKind.GAZE: gaze})

    def test_nothing_selected_passes_through(self):
        rec = self._session()
        out = apply_privacy(rec, PrivacyConfig())
        for kind in rec.streams:
            self.assertIs(rec.stream(kind), out.stream(kind))

    def test_gaze_only(self):
        rec = self._session()
        out = apply_privacy(rec, PrivacyConfig(gaze_private=True))
        self.assertIsNot(rec.stream(StreamKind.GAZE), out.stream(StreamKind.GAZE))
        for kind in (StreamKind.HEAD, StreamKind.LEFT_HAND, StreamKind.RIGHT_HAND):
            self.assertIs(rec.stream(kind), out.stream(kind))

    def test_motion_only(self):
        rec = self._session()
        est = estimate_anthropometrics(rec)
        out = apply_privacy(rec, MOTION_ONLY, est)
        self.assertIs(rec.stream(StreamKind.GAZE), out.stream(StreamKind.GAZE))
        self.assertIsNot(rec.stream(StreamKind.HEAD), out.stream(StreamKind.HEAD))

    def test_motion_needs_estimate(self):
        with self.assertRaises(MissingEstimate):
            apply_privacy(self._session(), MOTION_ONLY)

    def test_gaze_only_session_ignores_motion_switch(self):
        rec = SessionRecording(
            "C", 1, {StreamKind.GAZE: series(StreamKind.GAZE, np.ones((20, 2)))}
        )
        out = apply_privacy(rec, PrivacyConfig(motion_private=True))
        self.assertIs(rec.stream(StreamKind.GAZE), out.stream(StreamKind.GAZE))


class PrivacyConfigTestCase(TestBase):
    def test_validation(self):
        with self.assertRaises(InvalidB):
            PrivacyConfig(B=0).validate()
        with self.assertRaises(InvalidBounds):
            PrivacyConfig(bounds_m=(1.8, 1.3)).validate()
        with self.assertRaises(InvalidConfig):
            PrivacyConfig(epsilon_head=0.0).validate()

    def test_json(self):
        cfg = PrivacyConfig(gaze_private=True, B=54, bounds_m=(1.3, 1.9))
        self.assertEqual(cfg, PrivacyConfig.from_json(cfg.to_json()))
        with self.assertRaises(InvalidConfig):
            PrivacyConfig.from_json({"epsilon": 1.0})

    def test_defaults(self):
        cfg = PrivacyConfig()
        self.assertEqual(108, cfg.B)
        self.assertEqual((1.32, 1.82), cfg.bounds_m)
        self.assertAlmostEqual(0.5, cfg.bounds_width)


if __name__ == "__main__":
    unittest.main()
