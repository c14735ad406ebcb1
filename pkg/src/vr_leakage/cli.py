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
Command line: ``vr-leakage synth|ingest|privatize|run|report|roc``.

Exit codes: 0 success, 2 invalid configuration, 3 data error.
"""
import functools
import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import click

from vr_leakage import Dataset, filter_subjects
from vr_leakage.constants import ReportFormat, StreamKind
from vr_leakage.csv_store import (
    ColumnSchema,
    load_schema,
    read_any,
    save_store,
    subjects_summary,
    write_dataset,
    write_schema,
)
from vr_leakage.errors import ConfigError, DataError, InvalidConfig, IoFailure
from vr_leakage.experiments import (
    ExperimentRunner,
    ExperimentSpec,
    build_standard_matrix,
    emit_report,
    load_report,
    run_matrix,
)
from vr_leakage.metrics import write_roc_csv
from vr_leakage.privacy import PrivacyConfig, apply_privacy, estimate_anthropometrics
from vr_leakage.settings import RunSettings, SettingsFactory
from vr_leakage.synthgen import GeneratorConfig, generate_population

CONFIG_ERROR_EXIT = 2
DATA_ERROR_EXIT = 3


class LeakageGroup(click.Group):
    """
    Turns the package's errors into exit codes.
    """

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except ConfigError as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(CONFIG_ERROR_EXIT)
        except DataError as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(DATA_ERROR_EXIT)


def _read_json(path: Optional[str], many: bool = False) -> Union[dict, List[dict]]:
    """
    :param path: JSON file, or *None* for an empty object
    :param many: accept a list of objects as well; the result is then always a list
    """
    if path is None:
        return [] if many else {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise IoFailure(f"cannot read '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"'{path}' is not JSON: {e}") from e
    if many:
        payload = payload if isinstance(payload, list) else [payload]
        if not payload or not all(isinstance(p, dict) for p in payload):
            raise InvalidConfig(f"'{path}' must hold a JSON object or a list of them")
        return payload
    if not isinstance(payload, dict):
        raise InvalidConfig(f"'{path}' must hold a JSON object")
    return payload


def _spec_from(settings: RunSettings, payload: dict) -> ExperimentSpec:
    # unset seeds follow the master seed, as in the standard matrix
    payload = dict(payload)
    payload.setdefault("seed", settings.seed)
    payload["privacy"] = dict(payload.get("privacy", {}))
    payload["privacy"].setdefault("noise_seed", settings.seed)
    return ExperimentSpec.from_json(payload)


def run_options(func):
    """
    The flags every verb shares; they override the VRLEAK_* environment.
    """

    @click.option("--seed", type=int, default=None, help="Master seed (default: $VRLEAK_SEED or 0)")
    @click.option("--folds", type=int, default=None, help="Cross-validation folds (default: 4)")
    @click.option("--workers", type=int, default=None, help="Experiments run concurrently")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                  help="Output directory (default: $VRLEAK_OUT or .)")
    @click.option("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    @functools.wraps(func)
    def wrapper(seed, folds, workers, out_dir, log_level, **kwargs):
        try:
            settings = SettingsFactory.from_env().override(
                seed=seed, folds=folds, workers=workers, out_dir=out_dir, log_level=log_level
            )
        except TypeError as e:
            raise InvalidConfig(str(e)) from e
        settings.configure_logging()
        settings.out_dir.mkdir(parents=True, exist_ok=True)
        return func(settings, **kwargs)

    return wrapper


def _dataset(source: str, schema_path: Optional[str]) -> Dataset:
    schema: Optional[ColumnSchema] = load_schema(schema_path) if schema_path else None
    return read_any(source, schema)


@click.group(cls=LeakageGroup)
@click.version_option(package_name="vr-leakage")
def cli():
    """
    Measure how much identity leaks through privatized VR telemetry.
    """


@cli.command()
@run_options
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="GeneratorConfig JSON")
@click.option("--subjects", type=int, default=None, help="Population size")
@click.option("--strength", type=float, default=None, help="Identity strength in [0, 1]")
@click.option("--npz", is_flag=True, help="Write the compressed store instead of CSV")
def synth(settings: RunSettings, config_path, subjects, strength, npz):
    """
    Generate a synthetic population.
    """
    payload = _read_json(config_path)
    payload["seed"] = settings.seed
    if subjects is not None:
        payload["n_subjects"] = subjects
    if strength is not None:
        payload["identity_strength"] = strength
    cfg = GeneratorConfig.from_json(payload)
    dataset = generate_population(cfg, settings.workers)
    if npz:
        target = settings.out_dir / "synthetic.npz"
        save_store(dataset, target)
    else:
        target = settings.out_dir / "synthetic.csv"
        write_schema(write_dataset(dataset, target), settings.out_dir / "schema.json")
    click.echo(str(target))


@cli.command()
@run_options
@click.argument("source", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Column-mapping schema JSON")
def ingest(settings: RunSettings, source, config_path):
    """
    Read CSV telemetry and save it as the internal store.
    """
    dataset = _dataset(source, config_path)
    target = settings.out_dir / "dataset.npz"
    save_store(dataset, target)
    for entry in subjects_summary(dataset):
        durations = ", ".join(f"{s['index']}:{s['duration_s']:.1f}s" for s in entry["sessions"])
        click.echo(f"{entry['subject']}\t{durations}")
    click.echo(str(target))


@cli.command()
@run_options
@click.argument("source", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="PrivacyConfig JSON (default: protect every stream)")
@click.option("--schema", "schema_path", type=click.Path(dir_okay=False), default=None,
              help="Column-mapping schema JSON for CSV input")
def privatize(settings: RunSettings, source, config_path, schema_path):
    """
    Apply the privacy mechanisms and write the result as CSV.
    """
    payload = _read_json(config_path) or {"gaze_private": True, "motion_private": True}
    payload.setdefault("noise_seed", settings.seed)
    cfg = PrivacyConfig.from_json(payload)
    dataset = _dataset(source, schema_path)
    recordings = []
    for subject in dataset.subjects:
        estimate = None
        first = dataset.first_session(subject)
        if cfg.motion_private and first.has(StreamKind.HEAD):
            estimate = estimate_anthropometrics(first, cfg.bounds_m)
        recordings.extend(apply_privacy(r, cfg, estimate) for r in dataset.sessions_of(subject))
    target = settings.out_dir / "privatized.csv"
    write_dataset(Dataset(tuple(recordings)), target)
    click.echo(str(target))


def _specs(settings: RunSettings, matrix, experiments, spec_path, config_path):
    if spec_path:
        if config_path:
            raise InvalidConfig("--spec carries its own privacy settings; drop --config")
        return [_spec_from(settings, p) for p in _read_json(spec_path, many=True)]
    if matrix is None and not experiments:
        raise InvalidConfig("give --matrix standard, --experiment or --spec")
    payload = _read_json(config_path)
    payload.setdefault("noise_seed", settings.seed)
    specs = build_standard_matrix(settings.seed, PrivacyConfig.from_json(payload))
    if experiments:
        wanted = set(experiments)
        unknown = wanted - {s.experiment_id for s in specs}
        if unknown:
            raise InvalidConfig(f"unknown experiments: {sorted(unknown)}")
        specs = [s for s in specs if s.experiment_id in wanted]
    return specs


# pylint: disable=R0913
@cli.command()
@run_options
@click.argument("source", type=click.Path(exists=True))
@click.option("--matrix", type=click.Choice(["standard"]), default=None,
              help="Run the full twenty-experiment matrix")
@click.option("--experiment", "experiments", multiple=True, help="Run these matrix rows only")
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False), default=None,
              help="A single ExperimentSpec JSON")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="PrivacyConfig JSON for the matrix")
@click.option("--schema", "schema_path", type=click.Path(dir_okay=False), default=None,
              help="Column-mapping schema JSON for CSV input")
def run(settings: RunSettings, source, matrix, experiments, spec_path, config_path, schema_path):
    """
    Train and score experiments, then write report.json and report.csv.
    """
    specs = _specs(settings, matrix, experiments, spec_path, config_path)
    dataset = filter_subjects(_dataset(source, schema_path))
    outcome = run_matrix(dataset, specs, settings.folds, settings.workers)
    for fmt in ReportFormat.list():
        click.echo(str(emit_report(outcome, fmt, settings.out_dir / f"report.{fmt}")))


@cli.command()
@run_options
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(ReportFormat.list()), default=ReportFormat.CSV,
              help="Format to re-emit")
def report(settings: RunSettings, report_path, fmt):
    """
    Re-emit a JSON report in another format.
    """
    loaded = load_report(report_path)
    click.echo(str(emit_report(loaded, fmt, settings.out_dir / f"report.{fmt}")))


@cli.command()
@run_options
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("source", type=click.Path(exists=True))
@click.option("--experiment", "experiments", multiple=True, help="Only these experiments")
@click.option("--schema", "schema_path", type=click.Path(dir_okay=False), default=None,
              help="Column-mapping schema JSON for CSV input")
def roc(settings: RunSettings, report_path, source, experiments, schema_path):
    """
    Re-run the experiments of a report and write one ROC CSV per experiment.
    """
    loaded = load_report(report_path)
    dataset = filter_subjects(_dataset(source, schema_path))
    logger = logging.getLogger("RocExporter")
    for result in loaded.results:
        if experiments and result.experiment_id not in experiments:
            continue
        k = int(result.provenance.get("k", settings.folds))
        rerun = ExperimentRunner(dataset, k).run(result.spec)
        if rerun.provenance["config_hash"] != result.provenance.get("config_hash"):
            logger.warning("%s: configuration differs from the report", result.experiment_id)
        target = settings.out_dir / f"roc_{result.experiment_id}.csv"
        write_roc_csv(rerun.roc(), target)
        click.echo(str(target))


def main():
    """
    Console entry point.
    """
    cli(prog_name="vr-leakage")  # pylint: disable=E1120


if __name__ == "__main__":
    main()
