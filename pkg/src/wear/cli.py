"""Command-line benchmark orchestration.

``wear run <config.json>`` executes a replicated experiment described by a
single JSON document and writes per-replication and aggregated reports;
``wear validate <config.json>`` checks a config and echoes the fully
resolved version.  Built-in presets reproduce the four simulated settings
and a desk-scale variant of the full comparison table.

Everything is deterministic: the config plus master seed fixes every output
byte, independent of the worker count.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .baselines import fit_arithmetic_mean, fit_gold_standard, fit_raykar
from .core import InvalidDataError, MultiAnnotatedDataset, RngStream, SplitSpec, WearError, split_indices
from .evaluate import (
    FRAMEWORK_ORDER,
    AggregateReport,
    ReplicationReport,
    aggregate_reports,
    test_mse,
    variance_deviation,
)
from .ingest import CsvSchema, load_csv
from .learners import LEARNER_KINDS, LearnerSpec, _LEARNER_DEFAULTS
from .simulate import (
    GENERATOR_KINDS,
    ExpertOverlaySpec,
    GeneratorSpec,
    generate,
    opinion_variances,
    overlay_experts,
)
from .weighting import fit_wear

__all__ = ["ConfigError", "ExperimentConfig", "validate_config", "run", "main", "PRESETS"]

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(WearError):
    """Config text failed validation; carries one diagnostic per problem."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(self.diagnostics))


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one replicated benchmark run."""

    generator: GeneratorSpec | None
    csv_schema: CsvSchema | None
    overlay: ExpertOverlaySpec | None
    generator_seed_pinned: bool
    overlay_seed_pinned: bool
    split_fractions: tuple[float, float, float]
    split_seed: int | None
    frameworks: tuple[str, ...]
    learners: tuple[LearnerSpec, ...]
    replications: int
    master_seed: int
    output_dir: str
    parallelism: int
    echo: dict

    @property
    def n_experts(self) -> int:
        if self.generator is not None:
            return self.generator.n_experts
        return self.overlay.n_experts


# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "generator", "data", "split", "frameworks", "learners",
    "replications", "master_seed", "output_dir", "parallelism",
    # informational keys written into config.echo.json; accepted and ignored
    # on input so an echo file is itself a valid config
    "notes", "deviation_reference_variances",
}
_GENERATOR_KEYS = {
    "kind", "n", "seed", "covariate_dim", "distribution", "distribution_params",
    "noise_sd", "expert_variances", "mean_kind",
}
_DATA_KEYS = {"csv", "overlay"}
_CSV_KEYS = {"path", "target_column", "feature_columns", "has_header", "delimiter"}
_OVERLAY_KEYS = {"expert_variances", "seed"}
_SPLIT_KEYS = {"train_fraction", "validation_fraction", "test_fraction", "seed"}

_DEFAULT_SPLIT = {"train_fraction": 0.7, "validation_fraction": 0.1, "test_fraction": 0.2, "seed": None}


def _unknown_key_messages(mapping: dict, allowed: set[str], path: str) -> list[str]:
    messages = []
    for key in mapping:
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1)
            suffix = f" (did you mean {hint[0]!r}?)" if hint else ""
            messages.append(f"{path}{key}: unknown key{suffix}")
    return messages


def _want(mapping: dict, key: str, kinds, path: str, errors: list[str], default=None, required=False):
    if key not in mapping:
        if required:
            errors.append(f"{path}{key}: required key is missing")
        return default
    value = mapping[key]
    if kinds is not None and not isinstance(value, kinds):
        names = kinds.__name__ if isinstance(kinds, type) else "/".join(k.__name__ for k in kinds)
        errors.append(f"{path}{key}: expected {names}, got {type(value).__name__} ({value!r})")
        return default
    return value


def _int_value(mapping, key, path, errors, default=None, required=False, minimum=None):
    value = _want(mapping, key, (int,), path, errors, default=default, required=required)
    if isinstance(value, bool):
        errors.append(f"{path}{key}: expected integer, got boolean")
        return default
    if isinstance(value, int) and minimum is not None and value < minimum:
        errors.append(f"{path}{key}: must be >= {minimum}, got {value}")
        return default
    return value


def validate_config(raw: str | dict) -> ExperimentConfig:
    """Parse and validate config text, resolving every default.

    Unknown keys are errors, not warnings, to catch typos.  Raises
    :class:`ConfigError` whose ``diagnostics`` name each problem by its
    JSON key path (parse errors carry the line and column).
    """
    if isinstance(raw, str):
        try:
            document = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno}, column {exc.colno}")
    else:
        document = raw
    if not isinstance(document, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(document).__name__}")

    errors: list[str] = []
    errors.extend(_unknown_key_messages(document, _TOP_KEYS, ""))

    has_generator = "generator" in document
    has_data = "data" in document
    if has_generator == has_data:
        errors.append("config must contain exactly one of 'generator' or 'data'")

    generator = None
    csv_schema = None
    overlay = None
    generator_seed_pinned = False
    overlay_seed_pinned = False
    echo: dict[str, Any] = {}

    if has_generator and not has_data:
        section = _want(document, "generator", dict, "", errors, default={})
        if isinstance(section, dict):
            errors.extend(_unknown_key_messages(section, _GENERATOR_KEYS, "generator."))
            kind = _want(section, "kind", str, "generator.", errors, required=True)
            n = _int_value(section, "n", "generator.", errors, required=True, minimum=1)
            seed = _int_value(section, "seed", "generator.", errors, default=None, minimum=0) if section.get("seed") is not None else None
            covariate_dim = _int_value(section, "covariate_dim", "generator.", errors, default=6, minimum=1)
            distribution = _want(section, "distribution", str, "generator.", errors, default="normal")
            distribution_params = _want(section, "distribution_params", dict, "generator.", errors, default={})
            noise_sd = _want(section, "noise_sd", (int, float), "generator.", errors, default=3.0)
            variances = _want(section, "expert_variances", list, "generator.", errors, default=None)
            mean_kind = _want(section, "mean_kind", str, "generator.", errors, default=None) if section.get("mean_kind") is not None else None
            if kind is not None and kind not in GENERATOR_KINDS:
                errors.append(f"generator.kind: unknown kind {kind!r}; expected one of {list(GENERATOR_KINDS)}")
            if not errors:
                generator_seed_pinned = seed is not None
                try:
                    generator = GeneratorSpec(
                        kind=kind,
                        n=n,
                        seed=0 if seed is None else seed,
                        covariate_dim=covariate_dim,
                        distribution=distribution,
                        distribution_params=distribution_params,
                        noise_sd=float(noise_sd),
                        expert_variances=None if variances is None else tuple(variances),
                        mean_kind=mean_kind,
                    )
                except WearError as exc:
                    errors.append(f"generator: {exc}")
            if generator is not None:
                echo["generator"] = {
                    "kind": generator.kind,
                    "n": generator.n,
                    "seed": seed,
                    "covariate_dim": generator.covariate_dim,
                    "distribution": generator.distribution,
                    "distribution_params": dict(generator.distribution_params),
                    "noise_sd": generator.noise_sd,
                    "expert_variances": list(generator.expert_variances),
                    "mean_kind": generator.mean_kind,
                }

    if has_data and not has_generator:
        section = _want(document, "data", dict, "", errors, default={})
        if isinstance(section, dict):
            errors.extend(_unknown_key_messages(section, _DATA_KEYS, "data."))
            csv_section = _want(section, "csv", dict, "data.", errors, required=True, default={})
            overlay_section = _want(section, "overlay", dict, "data.", errors, required=True, default={})
            if isinstance(csv_section, dict):
                errors.extend(_unknown_key_messages(csv_section, _CSV_KEYS, "data.csv."))
                path = _want(csv_section, "path", str, "data.csv.", errors, required=True)
                target = csv_section.get("target_column")
                if not isinstance(target, (str, int)) or isinstance(target, bool):
                    errors.append("data.csv.target_column: required; expected column name or index")
                feature_columns = _want(csv_section, "feature_columns", list, "data.csv.", errors, default=None)
                has_header = _want(csv_section, "has_header", bool, "data.csv.", errors, default=True)
                delimiter = _want(csv_section, "delimiter", str, "data.csv.", errors, default=",")
                if not errors:
                    try:
                        csv_schema = CsvSchema(
                            path=path,
                            target_column=target,
                            feature_columns=None if feature_columns is None else tuple(feature_columns),
                            has_header=has_header,
                            delimiter=delimiter,
                        )
                    except WearError as exc:
                        errors.append(f"data.csv: {exc}")
            if isinstance(overlay_section, dict):
                errors.extend(_unknown_key_messages(overlay_section, _OVERLAY_KEYS, "data.overlay."))
                variances = _want(overlay_section, "expert_variances", list, "data.overlay.", errors, required=True, default=None)
                overlay_seed = _int_value(overlay_section, "seed", "data.overlay.", errors, default=None, minimum=0) if overlay_section.get("seed") is not None else None
                if variances is not None and not errors:
                    overlay_seed_pinned = overlay_seed is not None
                    try:
                        overlay = ExpertOverlaySpec(
                            expert_variances=tuple(variances),
                            seed=0 if overlay_seed is None else overlay_seed,
                        )
                    except WearError as exc:
                        errors.append(f"data.overlay: {exc}")
            if csv_schema is not None and overlay is not None:
                echo["data"] = {
                    "csv": {
                        "path": str(csv_schema.path),
                        "target_column": csv_schema.target_column,
                        "feature_columns": None if csv_schema.feature_columns is None else list(csv_schema.feature_columns),
                        "has_header": csv_schema.has_header,
                        "delimiter": csv_schema.delimiter,
                    },
                    "overlay": {
                        "expert_variances": list(overlay.expert_variances),
                        "seed": overlay_seed if overlay_seed_pinned else None,
                    },
                }

    split_section = _want(document, "split", dict, "", errors, default=dict(_DEFAULT_SPLIT))
    split_fractions = (0.7, 0.1, 0.2)
    split_seed = None
    if isinstance(split_section, dict):
        errors.extend(_unknown_key_messages(split_section, _SPLIT_KEYS, "split."))
        merged = dict(_DEFAULT_SPLIT)
        merged.update({k: v for k, v in split_section.items() if k in _SPLIT_KEYS})
        fractions = []
        for key in ("train_fraction", "validation_fraction", "test_fraction"):
            value = merged[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not (0 < value < 1):
                errors.append(f"split.{key}: expected a number in (0, 1), got {value!r}")
                value = 1.0 / 3.0
            fractions.append(float(value))
        if abs(sum(fractions) - 1.0) > 1e-9:
            errors.append(f"split: fractions must sum to 1, got {sum(fractions)!r}")
        split_fractions = tuple(fractions)
        if merged["seed"] is not None:
            split_seed = _int_value(merged, "seed", "split.", errors, default=None, minimum=0)

    frameworks_raw = _want(document, "frameworks", list, "", errors, default=list(FRAMEWORK_ORDER))
    frameworks: tuple[str, ...] = ()
    if isinstance(frameworks_raw, list):
        bad = [f for f in frameworks_raw if f not in FRAMEWORK_ORDER]
        for item in bad:
            errors.append(f"frameworks: unknown framework {item!r}; expected subset of {list(FRAMEWORK_ORDER)}")
        if not frameworks_raw:
            errors.append("frameworks: need at least one framework")
        if len(set(frameworks_raw)) != len(frameworks_raw):
            errors.append("frameworks: duplicates are not allowed")
        frameworks = tuple(f for f in FRAMEWORK_ORDER if f in frameworks_raw)

    learners_raw = _want(document, "learners", list, "", errors, default=[{"kind": "linear"}])
    learners: list[LearnerSpec] = []
    if isinstance(learners_raw, list):
        if not learners_raw:
            errors.append("learners: need at least one learner")
        for i, item in enumerate(learners_raw):
            if not isinstance(item, dict):
                errors.append(f"learners[{i}]: expected an object with a 'kind' key")
                continue
            kind = item.get("kind")
            if kind not in LEARNER_KINDS:
                errors.append(f"learners[{i}].kind: unknown learner {kind!r}; expected one of {list(LEARNER_KINDS)}")
                continue
            params = {k: v for k, v in item.items() if k != "kind"}
            allowed = set(_LEARNER_DEFAULTS[kind])
            errors.extend(_unknown_key_messages(params, allowed, f"learners[{i}]."))
            if not _unknown_key_messages(params, allowed, ""):
                try:
                    learners.append(LearnerSpec(kind=kind, params=params))
                except WearError as exc:
                    errors.append(f"learners[{i}]: {exc}")

    replications = _int_value(document, "replications", "", errors, default=1, minimum=1)
    master_seed = _int_value(document, "master_seed", "", errors, default=0, minimum=0)
    output_dir = _want(document, "output_dir", str, "", errors, default="wear_output")
    parallelism = _int_value(document, "parallelism", "", errors, default=1, minimum=1)

    if errors:
        raise ConfigError(errors)

    echo["split"] = {
        "train_fraction": split_fractions[0],
        "validation_fraction": split_fractions[1],
        "test_fraction": split_fractions[2],
        "seed": split_seed,
    }
    echo["frameworks"] = list(frameworks)
    echo["learners"] = [{"kind": spec.kind, **spec.resolved_params()} for spec in learners]
    echo["replications"] = replications
    echo["master_seed"] = master_seed
    echo["output_dir"] = output_dir
    echo["parallelism"] = parallelism
    if "raykar" in frameworks:
        echo["notes"] = ["raykar always fits its own linear model and ignores the learner list"]

    return ExperimentConfig(
        generator=generator,
        csv_schema=csv_schema,
        overlay=overlay,
        generator_seed_pinned=generator_seed_pinned,
        overlay_seed_pinned=overlay_seed_pinned,
        split_fractions=split_fractions,
        split_seed=split_seed,
        frameworks=frameworks,
        learners=tuple(learners),
        replications=replications,
        master_seed=master_seed,
        output_dir=output_dir,
        parallelism=parallelism,
        echo=echo,
    )


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


_CSV_CACHE: dict[tuple, MultiAnnotatedDataset] = {}


def _load_base_csv(schema: CsvSchema) -> MultiAnnotatedDataset:
    key = (str(schema.path), schema.target_column, schema.feature_columns, schema.has_header, schema.delimiter)
    if key not in _CSV_CACHE:
        _CSV_CACHE[key] = load_csv(schema)
    return _CSV_CACHE[key]


def _replication_data(config: ExperimentConfig, replication: int) -> tuple[MultiAnnotatedDataset, tuple[float, ...]]:
    """Build the dataset for one replication plus the variance-recovery reference."""
    base = RngStream(config.master_seed, stream_id=replication)
    if config.generator is not None:
        seed = config.generator.seed if config.generator_seed_pinned else base.child(0).draw_seed()
        spec = GeneratorSpec(
            kind=config.generator.kind,
            n=config.generator.n,
            seed=seed,
            covariate_dim=config.generator.covariate_dim,
            distribution=config.generator.distribution,
            distribution_params=config.generator.distribution_params,
            noise_sd=config.generator.noise_sd,
            expert_variances=config.generator.expert_variances,
            mean_kind=config.generator.mean_kind,
        )
        return generate(spec), opinion_variances(spec)
    raw = _load_base_csv(config.csv_schema)
    seed = config.overlay.seed if config.overlay_seed_pinned else base.child(0).draw_seed()
    overlay = ExpertOverlaySpec(expert_variances=config.overlay.expert_variances, seed=seed)
    return overlay_experts(raw, overlay), config.overlay.expert_variances


def _split_spec(config: ExperimentConfig, replication: int) -> SplitSpec:
    base = RngStream(config.master_seed, stream_id=replication)
    seed = config.split_seed if config.split_seed is not None else base.child(1).draw_seed()
    return SplitSpec(*config.split_fractions, seed=seed)


def _run_replication(config: ExperimentConfig, replication: int) -> list[ReplicationReport]:
    data, reference_variances = _replication_data(config, replication)
    split_spec = _split_spec(config, replication)
    _, _, test_idx = split_indices(data.n, split_spec)
    test_data = data.take(test_idx)
    if test_data.true_labels is None:
        raise InvalidDataError("cannot score on the test partition without true labels")
    base = RngStream(config.master_seed, stream_id=replication)
    reference = np.asarray(reference_variances)

    reports: list[ReplicationReport] = []
    for framework in config.frameworks:
        fw_index = FRAMEWORK_ORDER.index(framework)
        if framework == "raykar":
            try:
                state = fit_raykar(data, split_spec)
                mse = test_mse(state.predict(test_data.features.values), test_data.true_labels)
                estimated = state.estimated_variances
                reports.append(
                    ReplicationReport(
                        framework="raykar",
                        learner="linear",
                        replication_id=replication,
                        test_mse=mse,
                        estimated_variances=tuple(estimated),
                        weight_deviation=variance_deviation(estimated, reference),
                    )
                )
            except Exception as exc:
                raise WearError(
                    f"replication {replication}, framework raykar, learner linear: {exc}"
                ) from exc
            continue
        for li, learner in enumerate(config.learners):
            rng = base.child(2, fw_index, li)
            estimated = None
            deviation = None
            try:
                if framework == "wear":
                    model = fit_wear(data, split_spec, learner, learner, rng)
                    estimated = tuple(float(v) for v in model.profile.expert_mses)
                    deviation = variance_deviation(model.profile.expert_mses, reference)
                    preds = model.predict(test_data.features.values)
                elif framework == "arithmetic_mean":
                    fitted = fit_arithmetic_mean(data, split_spec, learner, rng)
                    preds = fitted.predict(test_data.features.values)
                elif framework == "gold_standard":
                    fitted = fit_gold_standard(data, split_spec, learner, rng)
                    preds = fitted.predict(test_data.features.values)
                else:  # pragma: no cover - frameworks are validated upstream
                    raise InvalidDataError(f"unknown framework {framework!r}")
                reports.append(
                    ReplicationReport(
                        framework=framework,
                        learner=learner.label(),
                        replication_id=replication,
                        test_mse=test_mse(preds, test_data.true_labels),
                        estimated_variances=estimated,
                        weight_deviation=deviation,
                    )
                )
            except WearError as exc:
                raise WearError(
                    f"replication {replication}, framework {framework}, "
                    f"learner {learner.label()}: {exc}"
                ) from exc
    return reports


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # full precision; plain float even for numpy scalars
    return str(value)


def _write_replications_csv(path: Path, reports: list[ReplicationReport], n_experts: int) -> None:
    header = ["replication", "framework", "learner", "test_mse", "weight_deviation"]
    header += [f"est_var_{j + 1}" for j in range(n_experts)]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for report in reports:
            row = [
                report.replication_id,
                report.framework,
                report.learner,
                _format_cell(report.test_mse),
                _format_cell(report.weight_deviation),
            ]
            variances = report.estimated_variances or ()
            row += [_format_cell(v) for v in variances]
            row += [""] * (n_experts - len(variances))
            writer.writerow(row)


def _write_summary(output_dir: Path, aggregate: AggregateReport) -> None:
    with open(output_dir / "summary.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["framework", "learner", "replications", "mean_mse", "se_mse", "mean_weight_deviation"]
        )
        for group in aggregate.groups:
            writer.writerow(
                [
                    group.framework,
                    group.learner,
                    group.replications,
                    _format_cell(group.mean_mse),
                    _format_cell(group.se_mse),
                    _format_cell(group.mean_weight_deviation),
                ]
            )
    payload = {"groups": [group.as_dict() for group in aggregate.groups]}
    (output_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _sort_reports(reports: list[ReplicationReport], config: ExperimentConfig) -> list[ReplicationReport]:
    learner_rank = {spec.label(): i for i, spec in enumerate(config.learners)}
    learner_rank.setdefault("linear", len(learner_rank))

    def key(report: ReplicationReport):
        return (
            report.replication_id,
            FRAMEWORK_ORDER.index(report.framework),
            learner_rank.get(report.learner, len(learner_rank)),
        )

    return sorted(reports, key=key)


def run(config: ExperimentConfig) -> AggregateReport:
    """Execute every (replication, framework, learner) unit and write reports.

    Outputs land in ``config.output_dir``: ``config.echo.json`` (the resolved
    config), ``replications.csv`` (one row per unit), and ``summary.csv`` /
    ``summary.json`` (per-cell means and standard errors).  On failure the
    completed rows are still written before the error propagates.
    """
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    echo = dict(config.echo)
    if config.generator is not None:
        echo["deviation_reference_variances"] = list(opinion_variances(config.generator))
    else:
        echo["deviation_reference_variances"] = list(config.overlay.expert_variances)
    (output_dir / "config.echo.json").write_text(
        json.dumps(echo, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    completed: list[ReplicationReport] = []
    try:
        if config.parallelism > 1 and config.replications > 1:
            with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
                futures = [
                    pool.submit(_run_replication, config, r) for r in range(config.replications)
                ]
                for future in futures:  # submission order = replication order
                    completed.extend(future.result())
        else:
            for r in range(config.replications):
                completed.extend(_run_replication(config, r))
    except Exception:
        _write_replications_csv(
            output_dir / "replications.csv", _sort_reports(completed, config), config.n_experts
        )
        raise

    ordered = _sort_reports(completed, config)
    _write_replications_csv(output_dir / "replications.csv", ordered, config.n_experts)
    aggregate = aggregate_reports(ordered)
    _write_summary(output_dir, aggregate)
    return aggregate


# ---------------------------------------------------------------------------
# presets and entry point
# ---------------------------------------------------------------------------


def _experiment_preset(k: int) -> dict:
    # Full-protocol sizes: 10k train / 5k validation / 85k test, 100 draws.
    return {
        "generator": {"kind": f"experiment{k}", "n": 100_000},
        "split": {"train_fraction": 0.10, "validation_fraction": 0.05, "test_fraction": 0.85},
        "frameworks": ["wear", "raykar", "arithmetic_mean", "gold_standard"],
        "learners": [{"kind": "linear"}, {"kind": "forest"}, {"kind": "tree"}, {"kind": "lasso"}],
        "replications": 100,
        "master_seed": 20_240_000 + k,
        "output_dir": f"wear_output/experiment{k}",
    }


def _desk_preset(k: int) -> dict:
    # Desk scale: 2k/1k/5k rows, 20 draws, lighter forests.
    return {
        "generator": {"kind": f"experiment{k}", "n": 8000},
        "split": {"train_fraction": 0.25, "validation_fraction": 0.125, "test_fraction": 0.625},
        "frameworks": ["wear", "raykar", "arithmetic_mean", "gold_standard"],
        "learners": [
            {"kind": "linear"},
            {"kind": "forest", "n_trees": 200},
            {"kind": "tree"},
            {"kind": "lasso"},
        ],
        "replications": 20,
        "master_seed": 20_241_000 + k,
        "output_dir": f"wear_output/desk/experiment{k}",
    }


PRESETS: dict[str, dict] = {
    "experiment1": _experiment_preset(1),
    "experiment2": _experiment_preset(2),
    "experiment3": _experiment_preset(3),
    "experiment4": _experiment_preset(4),
}
# table1-desk expands to the four desk-scale settings, run back to back.
TABLE1_DESK = "table1-desk"


def _load_config_document(args) -> list[dict]:
    if args.preset and args.config:
        raise ConfigError("give either a config file or --preset, not both")
    if args.preset:
        if args.preset == TABLE1_DESK:
            return [_desk_preset(k) for k in (1, 2, 3, 4)]
        if args.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {args.preset!r}; expected one of {sorted(PRESETS) + [TABLE1_DESK]}"
            )
        return [json.loads(json.dumps(PRESETS[args.preset]))]
    if not args.config:
        raise ConfigError("a config file or --preset is required")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {args.config}: {exc}")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno}, column {exc.colno}")
    if not isinstance(document, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(document).__name__}")
    return [document]


def _apply_overrides(document: dict, args) -> dict:
    document = dict(document)
    if args.output_dir is not None:
        document["output_dir"] = args.output_dir
    if args.seed is not None:
        document["master_seed"] = args.seed
    if args.replications is not None:
        document["replications"] = args.replications
    if args.parallelism is not None:
        document["parallelism"] = args.parallelism
    return document


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wear",
        description="Replicated regression benchmarks for expertise-weighted label aggregation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run an experiment config"), ("validate", "validate a config and echo the resolved version")):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("config", nargs="?", help="path to a JSON config file")
        cmd.add_argument("--preset", help="built-in config: experiment1..4 or table1-desk")
        cmd.add_argument("--output-dir", help="override output_dir")
        cmd.add_argument("--seed", type=int, help="override master_seed")
        cmd.add_argument("--replications", type=int, help="override the replication count")
        cmd.add_argument("--parallelism", type=int, help="worker processes across replications")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        documents = _load_config_document(args)
        base_output = args.output_dir
        configs = []
        for i, document in enumerate(documents):
            if len(documents) > 1 and base_output is not None:
                document = dict(document)
                document["output_dir"] = str(Path(base_output) / f"experiment{i + 1}")
                args_i = argparse.Namespace(**{**vars(args), "output_dir": None})
            else:
                args_i = args
            configs.append(validate_config(_apply_overrides(document, args_i)))
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        for config in configs:
            print(json.dumps(config.echo, indent=2, sort_keys=True))
        return EXIT_OK

    for config in configs:
        try:
            aggregate = run(config)
        except WearError as exc:
            print(f"run failed: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        except Exception as exc:  # keep partial outputs, surface the unit that failed
            print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(f"wrote {config.output_dir}/replications.csv, summary.csv, summary.json")
        for group in aggregate.groups:
            deviation = "" if group.mean_weight_deviation is None else f"  deviation={group.mean_weight_deviation:.4g}"
            print(
                f"  {group.framework:16s} {group.learner:24s} "
                f"mse={group.mean_mse:.4f} (se {group.se_mse:.4f}){deviation}"
            )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
