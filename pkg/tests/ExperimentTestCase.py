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

import functools
import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from base import ACCEPTANCE_SEEDS, TestBase, acceptance_population, synthetic_population
from vr_leakage import Dataset
from vr_leakage.constants import ReportFormat, StreamKind, StreamState
from vr_leakage.errors import (
    DuplicateExperiment,
    EmptySelection,
    InsufficientSessions,
    InvalidB,
    InvalidConfig,
    LeakageAuditError,
    ParityViolation,
)
from vr_leakage.experiments import (
    CSV_COLUMNS,
    REPORT_SCHEMA,
    ExperimentRunner,
    ExperimentSpec,
    Report,
    audit_windows,
    build_standard_matrix,
    config_hash,
    emit_report,
    load_report,
    run_experiment,
    run_matrix,
    validate_spec,
)
from vr_leakage.features import ChannelWindow
from vr_leakage.privacy import PrivacyConfig

U, M, P = StreamState.UNUSED, StreamState.UNMODIFIED, StreamState.PRIVATIZED


def _matrix(*ids, seed: int = 0):
    wanted = set(ids)
    return [s for s in build_standard_matrix(seed) if s.experiment_id in wanted]


def _without_timestamp(report: Report) -> str:
    payload = report.to_json()
    payload.pop("timestamp")
    return json.dumps(payload, sort_keys=True)


@functools.lru_cache(maxsize=None)
def _small_report() -> Report:
    return run_matrix(
        synthetic_population(1.0, 0, 12, 20.0), _matrix("E01", "E02", "E05", "E09", "E12", "E15")
    )


@functools.lru_cache(maxsize=None)
def _acceptance_report(strength: float, seed: int, ids: tuple) -> Report:
    return run_matrix(acceptance_population(strength, seed), _matrix(*ids, seed=seed))


class MatrixTestCase(TestBase):
    def test_standard_matrix(self):
        specs = build_standard_matrix()
        self.assertEqual([f"E{i:02d}" for i in range(1, 21)], [s.experiment_id for s in specs])
        by_id = {s.experiment_id: s for s in specs}
        self.assertEqual((M, U, U), by_id["E01"].states)
        self.assertEqual((U, M, M), by_id["E04"].states)
        self.assertEqual((M, M, M), by_id["E07"].states)
        self.assertEqual((P, U, U), by_id["E08"].states)
        self.assertEqual((P, P, P), by_id["E14"].states)
        self.assertEqual((P, M, U), by_id["E15"].states)
        self.assertEqual((M, P, P), by_id["E20"].states)
        for spec in specs:
            validate_spec(spec)

    def test_selection_and_switches(self):
        by_id = {s.experiment_id: s for s in build_standard_matrix()}
        self.assertEqual(9, by_id["E04"].selection.channel_count)
        self.assertEqual(11, by_id["E07"].selection.channel_count)
        e15 = by_id["E15"].privacy_config
        self.assertEqual((True, False), (e15.gaze_private, e15.motion_private))
        e18 = by_id["E18"].privacy_config
        self.assertEqual((False, True), (e18.gaze_private, e18.motion_private))

    def test_invalid_specs(self):
        with self.assertRaises(EmptySelection):
            validate_spec(ExperimentSpec("X1"))
        with self.assertRaises(ParityViolation):
            validate_spec(ExperimentSpec("X2", M, M, P))
        with self.assertRaises(InvalidConfig):
            validate_spec(ExperimentSpec("X3", "raw", U, U))
        with self.assertRaises(InvalidB):
            validate_spec(ExperimentSpec("X4", P, U, U, PrivacyConfig(B=0)))
        validate_spec(ExperimentSpec("X5", M, P, U))

    def test_spec_json(self):
        spec = build_standard_matrix(seed=5)[16]
        self.assertEqual(spec, ExperimentSpec.from_json(spec.to_json()))
        self.assertEqual(spec, ExperimentSpec.from_json(json.loads(json.dumps(spec.to_json()))))
        with self.assertRaises(InvalidConfig):
            ExperimentSpec.from_json({"experiment_id": "X", "streams": "all"})

    def test_config_hash(self):
        spec = build_standard_matrix()[0]
        self.assertEqual(config_hash(spec, 4, "stat10/1"), config_hash(spec, 4, "stat10/1"))
        self.assertNotEqual(config_hash(spec, 4, "stat10/1"), config_hash(spec, 5, "stat10/1"))


class RunnerTestCase(TestBase):
    def test_single_experiment(self):
        dataset = synthetic_population(1.0, 0, 12, 20.0)
        spec = _matrix("E02")[0]
        result = run_experiment(dataset, spec)
        self.assertEqual(4, len(result.folds))
        self.assertEqual(3.0, result.gallery_size)
        self.assertAlmostEqual(100.0 / 3.0, result.chance_ir)
        self.assertEqual(50.0, result.chance_eer)
        for fold in result.folds:
            self.assertEqual(3, fold.test_subjects)
            self.assertEqual(12, fold.genuine_count)
            self.assertEqual(24, fold.impostor_count)
            self.assertTrue(0.0 <= fold.rank1_ir_pct <= 100.0)
        self.assertEqual(config_hash(spec, 4, "stat10/1"), result.provenance["config_hash"])
        self.assertEqual("stat10/1", result.provenance["embedder"])
        roc = result.roc()
        self.assertEqual((1.0, 0.0), (roc[0].far, roc[0].frr))

    def test_masked_samples_do_not_break_the_run(self):
        dataset = synthetic_population(1.0, 1, 8, 20.0)
        damaged = []
        for rec in dataset:
            gaze = np.array(rec.stream(StreamKind.GAZE).samples)
            head = np.array(rec.stream(StreamKind.HEAD).samples)
            gaze[100:130] = np.nan
            head[500] = np.nan
            damaged.append(
                rec.with_streams(
                    {
                        StreamKind.GAZE: rec.stream(StreamKind.GAZE).replace_samples(gaze),
                        StreamKind.HEAD: rec.stream(StreamKind.HEAD).replace_samples(head),
                    }
                )
            )
        for spec in _matrix("E07", "E14"):
            result = run_experiment(Dataset(tuple(damaged)), spec)
            self.assertTrue(np.isfinite(result.summary.ir_mean))
            self.assertTrue(np.isfinite(result.summary.eer_mean))

    def test_test_subject_needs_two_sessions(self):
        dataset = synthetic_population(1.0, 0, 8, 20.0)
        trimmed = Dataset(tuple(r for r in dataset if r.key != ("S003", 2)))
        with self.assertRaises(InsufficientSessions):
            ExperimentRunner(trimmed).run(_matrix("E02")[0])

    def test_window_audit(self):
        bad = np.zeros((450, 2))
        bad[7, 1] = np.nan
        with self.assertRaises(LeakageAuditError):
            audit_windows([ChannelWindow(bad, "A", 2, 0)], "probe")
        audit_windows([ChannelWindow(np.zeros((450, 2)), "A", 2, 0)], "probe")


class ReportTestCase(TestBase):
    def test_sorted_and_summarised(self):
        report = _small_report()
        self.assertEqual(
            ["E01", "E02", "E05", "E09", "E12", "E15"], [r.experiment_id for r in report.results]
        )
        leakage = {row["experiment_id"]: row for row in report.leakage_summary()}
        self.assertEqual({"E15"}, set(leakage))
        e15 = leakage["E15"]
        self.assertEqual(("E12", "E05"), (e15["protected_id"], e15["unprotected_id"]))
        ir = {r.experiment_id: r.summary.ir_mean for r in report.results}
        gap = ir["E05"] - ir["E12"]
        if gap == 0:
            self.assertIsNone(leakage["E15"]["ir_recovered"])
        else:
            self.assertAlmostEqual((ir["E15"] - ir["E12"]) / gap, leakage["E15"]["ir_recovered"])
        privatized = {
            row["experiment_id"]: row["unmodified_id"] for row in report.privatization_summary()
        }
        self.assertEqual({"E09": "E02", "E12": "E05"}, privatized)

    def test_json_shape(self):
        payload = _small_report().to_json()
        self.assertEqual(
            ["schema", "timestamp", "dataset", "experiments", "leakage", "privatization"],
            list(payload),
        )
        self.assertEqual(REPORT_SCHEMA, payload["schema"])
        self.assertEqual(12, payload["dataset"]["subjects"])
        self.assertEqual(24, payload["dataset"]["recordings"])
        self.assertTrue(payload["timestamp"].endswith("+00:00"))

    def test_emit_and_load(self):
        report = _small_report()
        with tempfile.TemporaryDirectory() as tmp:
            json_path = emit_report(report, ReportFormat.JSON, Path(tmp) / "report.json")
            csv_path = emit_report(report, ReportFormat.CSV, Path(tmp) / "report.csv")
            loaded = load_report(json_path)
            table = pd.read_csv(csv_path)
        self.assertEqual(_without_timestamp(report), _without_timestamp(loaded))
        self.assertEqual(list(CSV_COLUMNS), list(table.columns))
        self.assertEqual(6, len(table))
        row = table[table["experiment_id"] == "E15"].iloc[0]
        self.assertEqual(("privatized", "unmodified", "unused"), tuple(row.iloc[1:4]))
        self.assertAlmostEqual(report.result("E15").summary.ir_mean, row["ir_mean"])

    def test_format_and_schema_checks(self):
        report = _small_report()
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(InvalidConfig):
                emit_report(report, "xml", Path(tmp) / "report.xml")
            stale = Path(tmp) / "stale.json"
            stale.write_text(json.dumps({"schema": "something-else", "experiments": []}))
            with self.assertRaises(InvalidConfig):
                load_report(stale)
        with self.assertRaises(InvalidConfig):
            report.result("E99")

    def test_duplicates(self):
        report = _small_report()
        with self.assertRaises(DuplicateExperiment):
            Report(report.results[:1] * 2)
        with self.assertRaises(DuplicateExperiment):
            run_matrix(synthetic_population(1.0, 0, 8, 20.0), _matrix("E01") * 2)


class DeterminismTestCase(TestBase):
    def test_full_matrix_is_reproducible(self):
        dataset = synthetic_population(1.0, 2, 8, 20.0)
        specs = build_standard_matrix(seed=2)
        first = run_matrix(dataset, specs)
        second = run_matrix(dataset, specs, workers=3)
        self.assertEqual(20, len(first.results))
        self.assertEqual(_without_timestamp(first), _without_timestamp(second))


class LeakageAcceptanceTestCase(TestBase):
    """
    Directional behavior on synthetic populations of 20 subjects with two 60 s sessions,
    averaged over three seeds (five for the identity-strength comparison).
    """

    def _mean(self, strength: float, ids: tuple, metric: str = "ir_mean",
              seeds: tuple = ACCEPTANCE_SEEDS) -> dict:
        totals = {i: [] for i in ids}
        for seed in seeds:
            report = _acceptance_report(strength, seed, ids)
            for i in ids:
                totals[i].append(getattr(report.result(i).summary, metric))
        return {i: float(np.mean(v)) for i, v in totals.items()}

    def test_chance_floor(self):
        fold_ir, eer, chance, trials = [], [], [], 0
        for seed in ACCEPTANCE_SEEDS:
            result = _acceptance_report(0.0, seed, ("E01",)).result("E01")
            fold_ir.extend(f.rank1_ir_pct for f in result.folds)
            eer.append(result.summary.eer_mean)
            chance.append(result.chance_ir)
            trials += sum(f.genuine_count for f in result.folds)
        p = float(np.mean(chance))
        self.assertAlmostEqual(20.0, p)
        spread = np.std(fold_ir, ddof=1) / np.sqrt(len(fold_ir))
        binomial = 100.0 * np.sqrt((p / 100.0) * (1 - p / 100.0) / trials)
        self.assertLessEqual(abs(np.mean(fold_ir) - p), 3 * max(spread, binomial))
        self.assertTrue(40.0 <= np.mean(eer) <= 60.0, f"EER {np.mean(eer):.1f}")

    def test_identifiable_ceiling(self):
        ids = ("E01", "E02", "E07")
        ir = self._mean(1.0, ids)
        chance = _acceptance_report(1.0, ACCEPTANCE_SEEDS[0], ids).result("E01").chance_ir
        for i in ids:
            self.assertGreaterEqual(ir[i], 3 * chance, f"{i}: IR {ir[i]:.1f}")

    def test_privatization_lowers_identification(self):
        ir = self._mean(1.0, ("E01", "E02", "E08", "E09"))
        self.assertLessEqual(ir["E08"], ir["E01"] - 10.0, str(ir))
        self.assertLessEqual(ir["E09"], ir["E02"] - 10.0, str(ir))

    def test_unprotected_stream_leaks(self):
        ids = ("E05", "E12", "E15")
        ir = self._mean(1.0, ids)
        self.assertGreaterEqual(ir["E15"], 0.8 * ir["E05"], str(ir))
        self.assertGreater(ir["E15"], ir["E12"] + 10.0, str(ir))
        eer = self._mean(1.0, ids, "eer_mean")
        self.assertLess(eer["E15"], eer["E12"], str(eer))

    def test_identity_strength_separates_subjects(self):
        seeds = ACCEPTANCE_SEEDS + (14, 15)
        strong = self._mean(1.0, ("E01",), seeds=seeds)["E01"]
        weak = self._mean(0.0, ("E01",), seeds=seeds)["E01"]
        self.assertGreaterEqual(strong, weak, f"IR {strong:.1f} vs {weak:.1f}")


if __name__ == "__main__":
    unittest.main()
