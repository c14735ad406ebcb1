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
The experiment matrix: which streams each model sees and in what state, the fold loop that
trains and scores it, and the reports.

A stream is *unused*, *unmodified* or *privatized*. Head and hands share one motion mechanism,
so when both are used they must be in the same state.
"""
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from vr_leakage import Dataset, SessionRecording
from vr_leakage.constants import ReportFormat, StreamState
from vr_leakage.embedder import Embedder, StatisticalEmbedder
from vr_leakage.errors import (
    DuplicateExperiment,
    EmptySelection,
    InsufficientSessions,
    InvalidConfig,
    IoFailure,
    LeakageAuditError,
    ParityViolation,
)
from vr_leakage.features import (
    ChannelSelection,
    ChannelWindow,
    NormStats,
    build_windows,
    fit_norm_stats,
    normalize_window,
)
from vr_leakage.matching import assign_folds, enroll, score_matrix
from vr_leakage.metrics import (
    FoldMetrics,
    MetricSummary,
    RocPoint,
    ScoreSet,
    aggregate_folds,
    chance_levels,
    compute_eer,
    compute_rank1,
    compute_roc,
)
from vr_leakage.privacy import (
    AnthropometricEstimate,
    PrivacyConfig,
    apply_privacy,
    estimate_anthropometrics,
)

REPORT_SCHEMA = "vr-leakage-report/1"
CSV_COLUMNS = (
    "experiment_id",
    "gaze_state",
    "head_state",
    "hand_state",
    "eer_mean",
    "eer_std",
    "ir_mean",
    "ir_std",
    "chance_eer",
    "chance_ir",
)

EmbedderFactory = Callable[[], Embedder]

U, M, P = StreamState.UNUSED, StreamState.UNMODIFIED, StreamState.PRIVATIZED

# (gaze, head, hands) usage of the seven stream subsets, in table order
_SUBSETS = (
    (True, False, False),
    (False, True, False),
    (False, False, True),
    (False, True, True),
    (True, True, False),
    (True, False, True),
    (True, True, True),
)
# (gaze, head, hands) states of the six mixed experiments
_MIXED = (
    (P, M, U),
    (P, U, M),
    (P, M, M),
    (M, P, U),
    (M, U, P),
    (M, P, P),
)


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One row of the matrix.

    :param experiment_id: e.g. ``"E15"``
    :param gaze_state: one of **StreamState**
    :param head_state: one of **StreamState**
    :param hand_state: one of **StreamState**
    :param privacy: mechanism parameters; the switches are derived from the states
    :param seed: fold seed
    """

    experiment_id: str
    gaze_state: str = U
    head_state: str = U
    hand_state: str = U
    privacy: PrivacyConfig = field(default_factory=PrivacyConfig)
    seed: int = 0

    @property
    def states(self) -> Tuple[str, str, str]:
        """
        :return: (gaze, head, hand) states
        """
        return self.gaze_state, self.head_state, self.hand_state

    @property
    def selection(self) -> ChannelSelection:
        """
        :return: every stream whose state is not *unused*
        """
        return ChannelSelection(*(s != U for s in self.states))

    @property
    def privacy_config(self) -> PrivacyConfig:
        """
        :return: *privacy* with the switches set from the states
        """
        return replace(
            self.privacy,
            gaze_private=self.gaze_state == P,
            motion_private=P in (self.head_state, self.hand_state),
        )

    def to_json(self) -> dict:
        """
        :return: JSON-able dict
        """
        return {
            "experiment_id": self.experiment_id,
            "gaze_state": self.gaze_state,
            "head_state": self.head_state,
            "hand_state": self.hand_state,
            "privacy": self.privacy.to_json(),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ExperimentSpec":
        """
        :param payload: as written by *to_json* (privacy and seed optional)
        """
        unknown = set(payload) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown experiment keys: {sorted(unknown)}")
        payload = dict(payload)
        payload["privacy"] = PrivacyConfig.from_json(payload.get("privacy", {}))
        return cls(**payload)


def validate_spec(spec: ExperimentSpec) -> ExperimentSpec:
    """
    :return: the spec, if its states are known, something is selected and head/hands agree
    """
    for name, state in zip(("gaze_state", "head_state", "hand_state"), spec.states):
        StreamState.require(state, name)
    if all(s == U for s in spec.states):
        raise EmptySelection(f"{spec.experiment_id}: every stream is unused")
    if U not in (spec.head_state, spec.hand_state) and spec.head_state != spec.hand_state:
        raise ParityViolation(
            f"{spec.experiment_id}: head is {spec.head_state} but hands are {spec.hand_state}"
        )
    spec.privacy.validate()
    return spec


def build_standard_matrix(
    seed: int = 0, privacy: Optional[PrivacyConfig] = None
) -> List[ExperimentSpec]:
    """
    The twenty experiments: E01-E07 unmodified and E08-E14 privatized over the seven stream
    subsets, then E15-E20 mixing privatized and unmodified streams.

    :param seed: fold seed shared by every experiment
    :param privacy: mechanism parameters (defaults if *None*)
    """
    privacy = privacy or PrivacyConfig()
    rows = []
    for state in (M, P):
        for used in _SUBSETS:
            rows.append(tuple(state if u else U for u in used))
    rows.extend(_MIXED)
    return [
        ExperimentSpec(f"E{i:02d}", *states, privacy=privacy, seed=seed)
        for i, states in enumerate(rows, start=1)
    ]


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """
    Per-fold metrics, their aggregate and where they came from. *scores* pools every fold's
    genuine/impostor scores; it lives in memory only.
    """

    spec: ExperimentSpec
    folds: Tuple[FoldMetrics, ...]
    summary: MetricSummary
    chance_eer: float
    chance_ir: float
    gallery_size: float
    provenance: Dict[str, object]
    scores: Optional[ScoreSet] = None

    @property
    def experiment_id(self) -> str:
        """
        :return: the spec's id
        """
        return self.spec.experiment_id

    def roc(self) -> List[RocPoint]:
        """
        :return: ROC of the pooled fold scores
        """
        if self.scores is None:
            raise InvalidConfig(f"{self.experiment_id}: scores are not available (loaded report?)")
        return compute_roc(self.scores)

    def to_json(self) -> dict:
        """
        :return: JSON-able dict with stable key order
        """
        return {
            "experiment_id": self.experiment_id,
            "spec": self.spec.to_json(),
            "folds": [
                {
                    "fold": f.fold,
                    "eer_pct": f.eer_pct,
                    "rank1_ir_pct": f.rank1_ir_pct,
                    "test_subjects": f.test_subjects,
                    "genuine_count": f.genuine_count,
                    "impostor_count": f.impostor_count,
                }
                for f in self.folds
            ],
            "summary": {
                "eer_mean": self.summary.eer_mean,
                "eer_std": self.summary.eer_std,
                "ir_mean": self.summary.ir_mean,
                "ir_std": self.summary.ir_std,
            },
            "chance": {
                "eer_pct": self.chance_eer,
                "ir_pct": self.chance_ir,
                "gallery_size": self.gallery_size,
            },
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ExperimentResult":
        """
        :param payload: as written by *to_json*
        """
        folds = tuple(FoldMetrics(**f) for f in payload["folds"])
        return cls(
            ExperimentSpec.from_json(payload["spec"]),
            folds,
            aggregate_folds(folds),
            payload["chance"]["eer_pct"],
            payload["chance"]["ir_pct"],
            payload["chance"]["gallery_size"],
            dict(payload["provenance"]),
        )

    def csv_row(self) -> dict:
        """
        :return: the flat table row
        """
        return dict(
            zip(
                CSV_COLUMNS,
                (
                    self.experiment_id,
                    *self.spec.states,
                    self.summary.eer_mean,
                    self.summary.eer_std,
                    self.summary.ir_mean,
                    self.summary.ir_std,
                    self.chance_eer,
                    self.chance_ir,
                ),
            )
        )


def _recovered(mixed: float, protected: float, unprotected: float) -> Optional[float]:
    denominator = unprotected - protected
    if denominator == 0:
        return None
    return (mixed - protected) / denominator


@dataclass(frozen=True, eq=False)
class Report:
    """
    Results of a matrix run, by experiment id.
    """

    results: Tuple[ExperimentResult, ...]
    dataset: Dict[str, object] = field(default_factory=dict)
    timestamp: str = ""

    def __post_init__(self):
        ids = [r.experiment_id for r in self.results]
        duplicated = sorted({i for i in ids if ids.count(i) > 1})
        if duplicated:
            raise DuplicateExperiment(f"experiment ids repeated in report: {duplicated}")
        object.__setattr__(self, "results", tuple(self.results))

    def result(self, experiment_id: str) -> ExperimentResult:
        """
        :param experiment_id: which one
        """
        for r in self.results:
            if r.experiment_id == experiment_id:
                return r
        raise InvalidConfig(f"no experiment '{experiment_id}' in report")

    def _counterpart(self, selection: ChannelSelection, state: str) -> Optional[ExperimentResult]:
        for r in self.results:
            if r.spec.selection == selection and all(s in (U, state) for s in r.spec.states):
                return r
        return None

    def leakage_summary(self) -> List[dict]:
        """
        For each mixed experiment, how much of the gap between its fully privatized and fully
        unmodified counterparts it wins back (1 = all of it, 0 = none).
        """
        rows = []
        for mixed in self.results:
            used = [s for s in mixed.spec.states if s != U]
            if not (M in used and P in used):
                continue
            protected = self._counterpart(mixed.spec.selection, P)
            unprotected = self._counterpart(mixed.spec.selection, M)
            if protected is None or unprotected is None:
                continue
            rows.append(
                {
                    "experiment_id": mixed.experiment_id,
                    "protected_id": protected.experiment_id,
                    "unprotected_id": unprotected.experiment_id,
                    "ir_recovered": _recovered(
                        mixed.summary.ir_mean,
                        protected.summary.ir_mean,
                        unprotected.summary.ir_mean,
                    ),
                    "eer_recovered": _recovered(
                        -mixed.summary.eer_mean,
                        -protected.summary.eer_mean,
                        -unprotected.summary.eer_mean,
                    ),
                }
            )
        return rows

    def privatization_summary(self) -> List[dict]:
        """
        For each fully privatized experiment, the IR/EER change against its unmodified twin.
        """
        rows = []
        for private in self.results:
            used = [s for s in private.spec.states if s != U]
            if not used or any(s != P for s in used):
                continue
            plain = self._counterpart(private.spec.selection, M)
            if plain is None:
                continue
            rows.append(
                {
                    "experiment_id": private.experiment_id,
                    "unmodified_id": plain.experiment_id,
                    "ir_delta": private.summary.ir_mean - plain.summary.ir_mean,
                    "eer_delta": private.summary.eer_mean - plain.summary.eer_mean,
                }
            )
        return rows

    def to_json(self) -> dict:
        """
        :return: the full report
        """
        return {
            "schema": REPORT_SCHEMA,
            "timestamp": self.timestamp,
            "dataset": dict(self.dataset),
            "experiments": [r.to_json() for r in self.results],
            "leakage": self.leakage_summary(),
            "privatization": self.privatization_summary(),
        }

    def to_frame(self) -> pd.DataFrame:
        """
        :return: one row per experiment, *CSV_COLUMNS* order
        """
        return pd.DataFrame([r.csv_row() for r in self.results], columns=list(CSV_COLUMNS))


def config_hash(spec: ExperimentSpec, k: int, embedder_name: str) -> str:
    """
    :return: SHA-256 of the canonical JSON of what determines a result
    """
    canonical = json.dumps(
        {"spec": spec.to_json(), "k": k, "embedder": embedder_name},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def describe_dataset(dataset: Dataset) -> Dict[str, object]:
    """
    :return: counts plus a content fingerprint of every sample
    """
    digest = hashlib.sha256()
    for rec in dataset:
        digest.update(f"{rec.subject_id}/{rec.session_index}".encode("utf-8"))
        for kind, series in rec.streams.items():
            digest.update(kind.encode("utf-8"))
            digest.update(np.ascontiguousarray(series.samples).tobytes())
    return {
        "subjects": len(dataset.subjects),
        "recordings": len(dataset),
        "fingerprint": digest.hexdigest(),
    }


def audit_windows(windows: Sequence[ChannelWindow], where: str) -> None:
    """
    :raise LeakageAuditError: if any window holds a NaN
    """
    for w in windows:
        if np.isnan(w.channels).any():
            raise LeakageAuditError(
                f"{where}: NaN in window {w.window_index} of {w.subject_id}/{w.session_index}"
            )


class ExperimentRunner:
    """
    Runs experiments against one dataset.

    :param dataset: filtered recordings (every subject has >= 2 sessions)
    :param k: fold count
    :param embedder_factory: makes a fresh, untrained embedder per fold
    """

    def __init__(
        self,
        dataset: Dataset,
        k: int = 4,
        embedder_factory: EmbedderFactory = StatisticalEmbedder,
    ):
        self._dataset = dataset
        self._k = k
        self._embedder_factory = embedder_factory
        self._logger = logging.getLogger(type(self).__name__)

    def _privatize(self, spec: ExperimentSpec) -> Dict[Tuple[str, int], SessionRecording]:
        cfg = spec.privacy_config
        estimates: Dict[str, Optional[AnthropometricEstimate]] = {}
        out = {}
        for rec in self._dataset:
            if cfg.motion_private and rec.subject_id not in estimates:
                estimates[rec.subject_id] = estimate_anthropometrics(
                    self._dataset.first_session(rec.subject_id), cfg.bounds_m
                )
            out[rec.key] = apply_privacy(rec, cfg, estimates.get(rec.subject_id))
        return out

    @staticmethod
    def _enroll_probe(sessions: List[SessionRecording], subject_id: str):
        if len(sessions) < 2:
            raise InsufficientSessions(
                f"test subject '{subject_id}' has {len(sessions)} session(s), need 2"
            )
        return sessions[0].key, sessions[1].key

    # pylint: disable=R0914
    def _run_fold(
        self,
        index: int,
        train: Sequence[str],
        test: Sequence[str],
        raw: Dict[Tuple[str, int], List[ChannelWindow]],
        spec: ExperimentSpec,
    ) -> Tuple[FoldMetrics, ScoreSet]:
        selection = spec.selection
        train_set = set(train)
        train_raw = [w for key, ws in raw.items() if key[0] in train_set for w in ws]
        leaked = {w.subject_id for w in train_raw} & set(test)
        if leaked:
            raise LeakageAuditError(f"fold {index}: test subjects {sorted(leaked)} in training fit")

        stats: NormStats = fit_norm_stats(train_raw, selection)
        train_windows = [normalize_window(w, stats) for w in train_raw]
        audit_windows(train_windows, f"{spec.experiment_id} fold {index} train")
        embedder = self._embedder_factory().fit(train_windows)

        gallery, probes, owners = [], [], []
        for subject in sorted(test):
            enroll_key, probe_key = self._enroll_probe(self._dataset.sessions_of(subject), subject)
            enrolled = [normalize_window(w, stats) for w in raw[enroll_key]]
            probing = [normalize_window(w, stats) for w in raw[probe_key]]
            audit_windows(enrolled + probing, f"{spec.experiment_id} fold {index} test")
            gallery.append(enroll(subject, embedder.embed(enrolled)))
            probes.append(embedder.embed(probing))
            owners.extend([len(gallery) - 1] * len(probing))

        scores = score_matrix(np.concatenate(probes), gallery)
        owners = np.asarray(owners)
        own = np.zeros_like(scores, dtype=bool)
        own[np.arange(len(owners)), owners] = True
        score_set = ScoreSet(scores[own], scores[~own])
        ids = [t.subject_id for t in gallery]
        trials = [(ids[o], [ids[int(np.argmax(row))]]) for o, row in zip(owners, scores)]
        metrics = FoldMetrics(
            index,
            compute_eer(score_set),
            compute_rank1(trials),
            len(gallery),
            int(score_set.genuine.size),
            int(score_set.impostor.size),
        )
        self._logger.debug(
            "%s fold %d: EER %.2f%%, IR %.2f%% over %d subjects",
            spec.experiment_id,
            index,
            metrics.eer_pct,
            metrics.rank1_ir_pct,
            len(gallery),
        )
        return metrics, score_set

    def run(self, spec: ExperimentSpec) -> ExperimentResult:
        """
        Privatize per the spec, build windows, then train and score every fold.

        :param spec: a valid spec
        """
        validate_spec(spec)
        self._logger.info("Running %s %s", spec.experiment_id, "/".join(spec.states))
        folds = assign_folds(self._dataset.subjects, self._k, spec.seed)
        folds.audit()

        selection = spec.selection
        raw = {
            key: build_windows(rec, selection)
            for key, rec in self._privatize(spec).items()
        }
        per_fold, pooled = [], None
        for index, (train, test) in enumerate(folds.folds):
            metrics, scores = self._run_fold(index, train, test, raw, spec)
            per_fold.append(metrics)
            pooled = scores if pooled is None else pooled.merge(scores)

        summary = aggregate_folds(per_fold)
        gallery = float(np.mean([f.test_subjects for f in per_fold]))
        chance_eer, chance_ir = chance_levels(gallery)
        embedder_name = self._embedder_factory().name
        provenance = {
            "seed": spec.seed,
            "noise_seed": spec.privacy.noise_seed,
            "k": self._k,
            "embedder": embedder_name,
            "config_hash": config_hash(spec, self._k, embedder_name),
        }
        self._logger.info(
            "%s: EER %.1f ± %.1f%%, IR %.1f ± %.1f%% (chance %.1f%%)",
            spec.experiment_id,
            summary.eer_mean,
            summary.eer_std,
            summary.ir_mean,
            summary.ir_std,
            chance_ir,
        )
        return ExperimentResult(
            spec, tuple(per_fold), summary, chance_eer, chance_ir, gallery, provenance, pooled
        )


def run_experiment(
    dataset: Dataset,
    spec: ExperimentSpec,
    k: int = 4,
    embedder_factory: EmbedderFactory = StatisticalEmbedder,
) -> ExperimentResult:
    """
    :param dataset: filtered recordings
    :param spec: the experiment
    :param k: fold count
    :param embedder_factory: makes a fresh embedder per fold
    """
    return ExperimentRunner(dataset, k, embedder_factory).run(spec)


def run_matrix(
    dataset: Dataset,
    specs: Sequence[ExperimentSpec],
    k: int = 4,
    workers: int = 1,
    embedder_factory: EmbedderFactory = StatisticalEmbedder,
) -> Report:
    """
    Run every spec and collect the results by experiment id; completion order does not matter.

    :param dataset: filtered recordings
    :param specs: experiments (unique ids)
    :param k: fold count
    :param workers: experiments in flight at once
    :param embedder_factory: makes a fresh embedder per fold
    """
    ids = [s.experiment_id for s in specs]
    duplicated = sorted({i for i in ids if ids.count(i) > 1})
    if duplicated:
        raise DuplicateExperiment(f"experiment ids repeated: {duplicated}")
    for spec in specs:
        validate_spec(spec)

    runner = ExperimentRunner(dataset, k, embedder_factory)
    if workers <= 1:
        results = [runner.run(s) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(runner.run, specs))

    return Report(
        tuple(sorted(results, key=lambda r: r.experiment_id)),
        describe_dataset(dataset),
        datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def emit_report(report: Report, fmt: str, path: Union[str, Path]) -> Path:
    """
    :param report: what to write
    :param fmt: one of **ReportFormat**
    :param path: target file
    :return: the path written
    """
    ReportFormat.require(fmt, "format")
    path = Path(path)
    try:
        if fmt == ReportFormat.JSON:
            path.write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
        else:
            report.to_frame().to_csv(path, index=False)
    except OSError as e:
        raise IoFailure(f"cannot write '{path}': {e}") from e
    logging.getLogger("ReportWriter").info(
        "Wrote %s report with %d experiment(s) to %s", fmt, len(report.results), path
    )
    return path


def load_report(path: Union[str, Path]) -> Report:
    """
    :param path: a JSON report
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise IoFailure(f"cannot read '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"'{path}' is not JSON: {e}") from e
    if payload.get("schema") != REPORT_SCHEMA:
        raise InvalidConfig(f"'{path}' schema {payload.get('schema')!r} != {REPORT_SCHEMA!r}")
    return Report(
        tuple(ExperimentResult.from_json(r) for r in payload["experiments"]),
        payload.get("dataset", {}),
        payload.get("timestamp", ""),
    )

