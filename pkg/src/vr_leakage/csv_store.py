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
Getting recordings in and out: CSV files described by a JSON column mapping, and a compressed
``.npz`` store for already-ingested datasets.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from vr_leakage import Dataset, SessionRecording, TimeSeries, align_streams
from vr_leakage.constants import DEFAULT_RATE_HZ, StreamKind
from vr_leakage.errors import (
    DataError,
    EmptyDataset,
    InvalidConfig,
    IoFailure,
    MissingColumn,
    RateMismatch,
)

PathLike = Union[str, Path]

RATE_TOLERANCE = 0.05
STORE_FORMAT = "vr-leakage-store/1"

_logger = logging.getLogger("DatasetLoader")


@dataclass(frozen=True)
class ColumnSchema:
    """
    Which CSV columns hold what.

    :param subject: subject identifier column
    :param session: session index column
    :param streams: stream kind -> component columns (gaze: 3 direction or 2 angle columns)
    :param rate_hz: declared sample rate
    :param timestamp: optional seconds column used to check the declared rate
    """

    subject: str
    session: str
    streams: Dict[str, List[str]] = field(default_factory=dict)
    rate_hz: float = DEFAULT_RATE_HZ
    timestamp: Optional[str] = None

    def __post_init__(self):
        if not self.streams:
            raise InvalidConfig("schema must map at least one stream")
        for kind, columns in self.streams.items():
            StreamKind.require(kind, "stream")
            allowed = (2, 3) if kind == StreamKind.GAZE else (3,)
            if len(columns) not in allowed:
                raise InvalidConfig(
                    f"'{kind}' maps {len(columns)} columns, expected one of {allowed}"
                )
        if not self.rate_hz > 0:
            raise InvalidConfig(f"'rate_hz' {self.rate_hz} must be > 0")

    @property
    def columns(self) -> List[str]:
        """
        :return: every column the schema needs, in file order
        """
        needed = [self.subject, self.session]
        if self.timestamp:
            needed.append(self.timestamp)
        for kind in StreamKind.list():
            needed.extend(self.streams.get(kind, []))
        return needed

    @classmethod
    def from_json(cls, payload: dict) -> "ColumnSchema":
        """
        :param payload: ``{"subject": col, "session": col, "gaze": [..], "head": [..], ...}``
        :return: the schema
        """
        known = {"subject", "session", "rate_hz", "timestamp", *StreamKind.list()}
        unknown = set(payload) - known
        if unknown:
            raise InvalidConfig(f"unknown schema keys: {sorted(unknown)}")
        for required in ("subject", "session"):
            if required not in payload:
                raise InvalidConfig(f"schema is missing '{required}'")
        streams = {k: list(payload[k]) for k in StreamKind.list() if payload.get(k)}
        return cls(
            subject=payload["subject"],
            session=payload["session"],
            streams=streams,
            rate_hz=float(payload.get("rate_hz", DEFAULT_RATE_HZ)),
            timestamp=payload.get("timestamp"),
        )

    def to_json(self) -> dict:
        """
        :return: the JSON form accepted by *from_json*
        """
        payload = {"subject": self.subject, "session": self.session}
        payload.update(self.streams)
        payload["rate_hz"] = self.rate_hz
        if self.timestamp:
            payload["timestamp"] = self.timestamp
        return payload


def default_schema(gaze_arity: int = 3, rate_hz: float = DEFAULT_RATE_HZ) -> ColumnSchema:
    """
    The column names *write_dataset* uses.

    :param gaze_arity: 3 for direction vectors, 2 for (horizontal, vertical) angles
    :param rate_hz: declared rate
    """
    gaze = ["gaze_x", "gaze_y", "gaze_z"] if gaze_arity == 3 else ["gaze_h", "gaze_v"]
    return ColumnSchema(
        subject="subject",
        session="session",
        streams={
            StreamKind.GAZE: gaze,
            StreamKind.HEAD: ["head_x", "head_y", "head_z"],
            StreamKind.LEFT_HAND: ["lhand_x", "lhand_y", "lhand_z"],
            StreamKind.RIGHT_HAND: ["rhand_x", "rhand_y", "rhand_z"],
        },
        rate_hz=rate_hz,
        timestamp="t",
    )


def load_schema(path: PathLike) -> ColumnSchema:
    """
    :param path: JSON column-mapping file
    :return: the schema
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return ColumnSchema.from_json(json.load(handle))
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidConfig(f"cannot read schema {path}: {e}") from e


def _csv_files(path: Path) -> List[Path]:
    if path.is_dir():
        return sorted(path.glob("*.csv"))
    if path.exists():
        return [path]
    raise DataError(f"'{path}' does not exist")


def _check_rate(frame: pd.DataFrame, schema: ColumnSchema, key) -> None:
    stamps = frame[schema.timestamp].to_numpy(dtype=np.float64)
    steps = np.diff(stamps[~np.isnan(stamps)])
    if steps.size == 0:
        return
    step = float(np.median(steps))
    if step <= 0:
        raise RateMismatch(f"session {key}: timestamps are not increasing")
    inferred = 1.0 / step
    if abs(inferred - schema.rate_hz) > RATE_TOLERANCE * schema.rate_hz:
        raise RateMismatch(
            f"session {key}: inferred {inferred:.2f} Hz, declared {schema.rate_hz:.2f} Hz"
        )


def _read_one(path: Path, schema: ColumnSchema) -> List[SessionRecording]:
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"cannot parse '{path}': {e}") from e

    absent = [c for c in schema.columns if c not in raw.columns]
    if absent:
        raise MissingColumn(f"'{path}' lacks column(s) {absent}")

    frame = pd.DataFrame(
        {
            "subject": raw[schema.subject].str.strip(),
            "session": pd.to_numeric(raw[schema.session], errors="coerce"),
        }
    )
    numeric = [c for c in schema.columns if c not in (schema.subject, schema.session)]
    for column in numeric:
        frame[column] = pd.to_numeric(raw[column], errors="coerce")

    valid = (frame["subject"] != "") & frame["session"].notna()
    dropped = int((~valid).sum())
    if dropped:
        _logger.warning("Dropping %d row(s) without subject/session in '%s'", dropped, path)
    frame = frame[valid]

    recordings = []
    for (subject, session), group in frame.groupby(["subject", "session"], sort=False):
        key = (subject, int(session))
        if schema.timestamp:
            _check_rate(group, schema, key)
        streams = {}
        for kind, columns in schema.streams.items():
            values = group[columns].to_numpy(dtype=np.float64)
            missing = np.isnan(values).any(axis=1)
            if missing.all():
                # nothing usable: treat as not recorded
                continue
            if missing.any():
                _logger.warning(
                    "Session %s: masked %d '%s' sample(s)", key, int(missing.sum()), kind
                )
            streams[kind] = TimeSeries(kind, values, schema.rate_hz, missing)
        recordings.append(align_streams(SessionRecording(subject, int(session), streams)))
    return recordings


def load_dataset(path: PathLike, schema: ColumnSchema) -> Dataset:
    """
    Read one CSV, or every ``*.csv`` in a directory, into a **Dataset**. Rows are grouped by
    (subject, session) in order of first appearance. Unparseable numbers become masked
    samples.

    :param path: file or directory
    :param schema: the column mapping
    :return: the dataset, streams aligned per session
    """
    recordings = []
    for csv_file in _csv_files(Path(path)):
        found = _read_one(csv_file, schema)
        _logger.debug("Read %d recording(s) from '%s'", len(found), csv_file)
        recordings.extend(found)
    if not recordings:
        raise EmptyDataset(f"no valid rows under '{path}'")
    dataset = Dataset(tuple(recordings))
    _logger.info(
        "Loaded %d recording(s) of %d subject(s)", len(dataset), len(dataset.subjects)
    )
    return dataset


def _gaze_arity(dataset: Dataset) -> int:
    for rec in dataset:
        if rec.has(StreamKind.GAZE):
            return rec.stream(StreamKind.GAZE).arity
    return 3


def write_dataset(
    dataset: Dataset, path: PathLike, schema: Optional[ColumnSchema] = None
) -> ColumnSchema:
    """
    Write the dataset as a single CSV, one row per sample; masked samples are written as NaN.

    :param dataset: what to write
    :param path: target file
    :param schema: column names to use; defaults to *default_schema*
    :return: the schema that reads the file back
    """
    if schema is None:
        rate = dataset.recordings[0].rate_hz if len(dataset) else DEFAULT_RATE_HZ
        schema = default_schema(_gaze_arity(dataset), rate)

    frames = []
    for rec in dataset:
        count = rec.sample_count
        block = {
            schema.subject: [rec.subject_id] * count,
            schema.session: [rec.session_index] * count,
        }
        if schema.timestamp:
            block[schema.timestamp] = np.arange(count) / rec.rate_hz
        for kind, columns in schema.streams.items():
            if rec.has(kind):
                values = rec.stream(kind).samples[:count]
            else:
                values = np.full((count, len(columns)), np.nan)
            for i, column in enumerate(columns):
                block[column] = values[:, i]
        frames.append(pd.DataFrame(block, columns=schema.columns))

    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
        columns=schema.columns
    )
    try:
        table.to_csv(path, index=False, na_rep="NaN")
    except OSError as e:
        raise IoFailure(f"cannot write '{path}': {e}") from e
    _logger.info("Wrote %d row(s) to '%s'", len(table), path)
    return schema


def write_schema(schema: ColumnSchema, path: PathLike) -> None:
    """
    :param schema: the mapping
    :param path: JSON target
    """
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(schema.to_json(), handle, indent=2)
    except OSError as e:
        raise IoFailure(f"cannot write '{path}': {e}") from e


def save_store(dataset: Dataset, path: PathLike) -> None:
    """
    Lossless compressed store: one array per (recording, stream) plus a JSON manifest.

    :param dataset: what to store
    :param path: ``.npz`` target
    """
    arrays = {}
    manifest = {"format": STORE_FORMAT, "recordings": []}
    for i, rec in enumerate(dataset):
        entry = {"subject": rec.subject_id, "session": rec.session_index, "streams": {}}
        for kind, series in rec.streams.items():
            name = f"r{i}_{kind}"
            arrays[name] = series.samples
            entry["streams"][kind] = {"array": name, "rate_hz": series.rate_hz}
        manifest["recordings"].append(entry)
    arrays["manifest"] = np.array(json.dumps(manifest))
    try:
        np.savez_compressed(path, **arrays)
    except OSError as e:
        raise IoFailure(f"cannot write '{path}': {e}") from e


def load_store(path: PathLike) -> Dataset:
    """
    :param path: a file written by *save_store*
    :return: the dataset
    """
    try:
        with np.load(path, allow_pickle=False) as archive:
            manifest = json.loads(str(archive["manifest"]))
            if manifest.get("format") != STORE_FORMAT:
                raise DataError(f"'{path}' is not a {STORE_FORMAT} file")
            recordings = []
            for entry in manifest["recordings"]:
                streams = {
                    kind: TimeSeries(kind, archive[info["array"]], info["rate_hz"])
                    for kind, info in entry["streams"].items()
                }
                recordings.append(
                    SessionRecording(entry["subject"], entry["session"], streams)
                )
    except (OSError, KeyError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"cannot read store '{path}': {e}") from e
    if not recordings:
        raise EmptyDataset(f"store '{path}' holds no recordings")
    return Dataset(tuple(recordings))


def read_any(path: PathLike, schema: Optional[ColumnSchema] = None) -> Dataset:
    """
    Convenience for the CLI: ``.npz`` stores load directly, anything else goes through CSV.

    :param path: store, CSV file or directory of CSVs
    :param schema: column mapping for CSV input; defaults to *default_schema*
    """
    if str(path).endswith(".npz"):
        return load_store(path)
    return load_dataset(path, schema or default_schema())


def subjects_summary(dataset: Dataset) -> Sequence[dict]:
    """
    :param dataset: what to describe
    :return: per-subject session indices and durations, for the ingest listing
    """
    return [
        {
            "subject": subject,
            "sessions": [
                {"index": s.session_index, "duration_s": round(s.duration_s, 6)}
                for s in dataset.sessions_of(subject)
            ],
        }
        for subject in dataset.subjects
    ]
