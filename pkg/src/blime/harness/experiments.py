"""Experiment drivers: single explanation, parameter sweeps, variability.

Each driver computes with worker threads as configured, then a single
writer emits all outputs (JSON report, CSV tables, SVG figures) after the
computation settles. Given one config and seed, every output file is
byte-identical across runs and worker counts.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .. import seeds
from ..bootstrap import (
    INDEX_ORDER,
    RESAMPLE_FRESH,
    RESAMPLE_SHARED,
    RankingMatrix,
    rank_matrix,
    run_blime,
)
from ..consensus import ConsensusReport, build_report
from ..errors import ConfigError, InputError
from ..predictors import MEAN_OF_MEMBERS, SAMPLE_MEMBER_PER_QUERY
from . import figures, outputs
from .config import (
    RunConfig,
    make_blime_config,
    make_interpretable,
    make_kernel_config,
    make_predictor,
    make_surrogate_config,
)

SWEEP_PARAMETERS = ("perturbations", "surrogates")

# Sweep grids used when the caller does not pass explicit values.
DEFAULT_SWEEP_VALUES = {
    "perturbations": (25, 50, 100, 200, 400),
    "surrogates": (10, 25, 50, 100, 200),
}


def _rank_payload(average: RankingMatrix, ordinal: RankingMatrix) -> dict:
    return {
        "average": average.ranks.tolist(),
        "index_order": ordinal.ranks.astype(int).tolist(),
    }


def _close(predictor) -> None:
    close = getattr(predictor, "close", None)
    if close is not None:
        close()


def cmd_explain(config: RunConfig, dump_ranks: bool = False) -> dict:
    """Run one explanation and emit report.json plus figures.

    Returns a mapping of output names to written paths.
    """
    interp = make_interpretable(config)
    predictor = make_predictor(config, interp)
    try:
        ensemble, ranking = run_blime(
            interp,
            predictor,
            config["explained_class"],
            make_blime_config(config),
            surrogate_config=make_surrogate_config(config),
            kernel_config=make_kernel_config(config),
            workers=config["workers"],
        )
    finally:
        _close(predictor)
    ordinal = rank_matrix(ensemble.alphas, INDEX_ORDER)
    report = build_report(ranking)

    out_dir = config["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    payload = {
        "config": config.as_json_dict(),
        "seed": config["seed"],
        "k": ensemble.k,
        "m": ensemble.m,
        "modality": interp.modality,
        "coefficients": {
            "alphas": ensemble.alphas.tolist(),
            "intercepts": ensemble.intercepts.tolist(),
            "fit_scores": ensemble.fit_scores.tolist(),
        },
        "rank_matrix": _rank_payload(ranking, ordinal),
        "consensus": report.to_json_dict(),
    }
    written = {"report": os.path.join(out_dir, "report.json")}
    outputs.write_json(written["report"], payload)
    if dump_ranks:
        written["ranks"] = os.path.join(out_dir, "ranks.json")
        outputs.write_json(written["ranks"], _rank_payload(ranking, ordinal))

    if interp.modality == "image":
        labels = interp.components.labels
        written["rank_overlay"] = os.path.join(out_dir, "rank_overlay.svg")
        figures.rank_overlay(
            interp.original, labels, report.mean_ranks, written["rank_overlay"]
        )
        written["mean_rank_overlay"] = os.path.join(out_dir, "mean_rank_overlay.svg")
        figures.heat_overlay(
            interp.original,
            labels,
            report.mean_ranks,
            "mean rank",
            written["mean_rank_overlay"],
        )
        written["consensus_overlay"] = os.path.join(out_dir, "consensus_overlay.svg")
        figures.heat_overlay(
            interp.original,
            labels,
            report.consensus,
            "consensus C",
            written["consensus_overlay"],
        )
    else:
        written["token_table"] = os.path.join(out_dir, "token_table.svg")
        figures.token_table(
            interp.components.tokens,
            report.mean_ranks,
            report.consensus,
            report.kendall_w,
            report.fleiss_kappa,
            written["token_table"],
        )
    return written


@dataclass(frozen=True)
class SweepRecord:
    value: int
    replicate: int
    report: ConsensusReport
    average: RankingMatrix
    ordinal: RankingMatrix


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: tuple[int, ...]
    replicates: int
    records: tuple[SweepRecord, ...]
    m: int


def run_sweep(
    config: RunConfig, parameter: str, values, replicates: int
) -> SweepResult:
    """Repeat BLIME over a grid of one parameter with replicate-indexed seeds."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(
            f"sweep parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}"
        )
    values = tuple(int(v) for v in values)
    if not values or any(v <= 0 for v in values) or list(values) != sorted(set(values)):
        raise ConfigError("sweep values must be ascending positive integers")
    if replicates < 2:
        raise ConfigError("at least 2 replicates are required")

    interp = make_interpretable(config)
    predictor = make_predictor(config, interp)
    scfg = make_surrogate_config(config)
    kcfg = make_kernel_config(config)
    base = make_blime_config(config)

    def one(job: tuple[int, int]) -> SweepRecord:
        value, rep = job
        cfg = replace(
            base,
            master_seed=seeds.derive_seed(config["seed"], value, rep),
            k_surrogates=value if parameter == "surrogates" else base.k_surrogates,
            n_perturbations=value if parameter == "perturbations" else base.n_perturbations,
        )
        ensemble, ranking = run_blime(
            interp, predictor, config["explained_class"], cfg,
            surrogate_config=scfg, kernel_config=kcfg,
        )
        return SweepRecord(
            value=value,
            replicate=rep,
            report=build_report(ranking),
            average=ranking,
            ordinal=rank_matrix(ensemble.alphas, INDEX_ORDER),
        )

    jobs = [(value, rep) for value in values for rep in range(replicates)]
    try:
        if config["workers"] > 1:
            with ThreadPoolExecutor(max_workers=config["workers"]) as pool:
                records = tuple(pool.map(one, jobs))
        else:
            records = tuple(one(job) for job in jobs)
    finally:
        _close(predictor)
    return SweepResult(
        parameter=parameter,
        values=values,
        replicates=replicates,
        records=records,
        m=interp.m,
    )


def sweep_csv_header(m: int) -> list[str]:
    return (
        ["parameter_value", "replicate", "kendall_w", "fleiss_kappa"]
        + [f"mean_rank_{j}" for j in range(m)]
        + [f"consensus_{j}" for j in range(m)]
    )


def cmd_sweep(
    config: RunConfig,
    parameter: str,
    values=None,
    replicates: int = 10,
    dump_ranks: bool = False,
) -> dict:
    """Run a sweep and emit sweep.csv (plus optional rank-matrix dumps)."""
    if values is None:
        values = DEFAULT_SWEEP_VALUES[parameter]
    result = run_sweep(config, parameter, values, replicates)
    out_dir = config["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for rec in result.records:
        rows.append(
            [rec.value, rec.replicate, rec.report.kendall_w, rec.report.fleiss_kappa]
            + [float(v) for v in rec.report.mean_ranks]
            + [float(v) for v in rec.report.consensus]
        )
    written = {"sweep": os.path.join(out_dir, "sweep.csv")}
    outputs.write_csv(written["sweep"], sweep_csv_header(result.m), rows)
    if dump_ranks:
        ranks_dir = os.path.join(out_dir, "ranks")
        for rec in result.records:
            path = os.path.join(ranks_dir, f"p{rec.value}_r{rec.replicate}.json")
            outputs.write_json(path, _rank_payload(rec.average, rec.ordinal))
        written["ranks_dir"] = ranks_dir
    return written


VARIABILITY_MODES = ("sampling", "predictive")


def run_variability(config: RunConfig, mode: str) -> np.ndarray:
    """Coefficient samples (K x M) under one of the two diversity protocols.

    ``sampling``: fresh mask sets per surrogate, ensemble-mean predictions.
    ``predictive``: one fixed mask set, member redrawn per query.
    """
    if mode not in VARIABILITY_MODES:
        raise ConfigError(
            f"variability mode must be one of {VARIABILITY_MODES}, got {mode!r}"
        )
    interp = make_interpretable(config)
    predictor = make_predictor(config, interp)
    try:
        if mode == "predictive" and predictor.n_members < 2:
            raise ConfigError(
                "predictive variability requires an ensemble with at least 2 members"
            )
        base = make_blime_config(config)
        if mode == "sampling":
            cfg = replace(
                base,
                resample_masks=RESAMPLE_FRESH,
                prediction_mode=MEAN_OF_MEMBERS,
            )
        else:
            cfg = replace(
                base,
                resample_masks=RESAMPLE_SHARED,
                prediction_mode=SAMPLE_MEMBER_PER_QUERY,
            )
        ensemble, _ = run_blime(
            interp,
            predictor,
            config["explained_class"],
            cfg,
            surrogate_config=make_surrogate_config(config),
            kernel_config=make_kernel_config(config),
            workers=config["workers"],
        )
    finally:
        _close(predictor)
    return np.asarray(ensemble.alphas)


def cmd_variability(config: RunConfig, mode: str) -> dict:
    """Run a variability study; emit coefficients.csv and violins.svg."""
    alphas = run_variability(config, mode)
    out_dir = config["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    k, m = alphas.shape
    header = ["run"] + [f"alpha_{j}" for j in range(m)]
    rows = [[i] + [float(v) for v in alphas[i]] for i in range(k)]
    written = {
        "coefficients": os.path.join(out_dir, "coefficients.csv"),
        "violins": os.path.join(out_dir, "violins.svg"),
    }
    outputs.write_csv(written["coefficients"], header, rows)
    figures.violins(alphas, written["violins"])
    return written


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise ConfigError(f"cannot read CSV {path}: {exc}") from exc
    if not header:
        raise InputError(f"{path}: missing CSV header")
    return header, rows


def cmd_render(csv_path: str, kind: str, out_dir: str | None = None) -> dict:
    """Re-render a CSV emitted by sweep or variability as an SVG figure."""
    if kind not in ("lines", "violins"):
        raise ConfigError(f"render kind must be lines or violins, got {kind!r}")
    header, rows = _read_csv(csv_path)
    target_dir = out_dir or os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(target_dir, exist_ok=True)
    path = os.path.join(target_dir, f"{kind}.svg")
    if kind == "lines":
        mean_cols = [i for i, name in enumerate(header) if name.startswith("mean_rank_")]
        cons_cols = [i for i, name in enumerate(header) if name.startswith("consensus_")]
        if "parameter_value" not in header or not mean_cols or not cons_cols:
            raise InputError(f"{csv_path}: not a sweep CSV")
        value_col = header.index("parameter_value")
        values = sorted({int(row[value_col]) for row in rows})
        mean_curves = np.empty((len(values), len(mean_cols)))
        cons_curves = np.empty((len(values), len(cons_cols)))
        for vi, value in enumerate(values):
            group = [row for row in rows if int(row[value_col]) == value]
            mean_curves[vi] = [
                np.mean([float(row[c]) for row in group]) for c in mean_cols
            ]
            cons_curves[vi] = [
                np.mean([float(row[c]) for row in group]) for c in cons_cols
            ]
        figures.sweep_lines(values, mean_curves, cons_curves, path)
    else:
        alpha_cols = [i for i, name in enumerate(header) if name.startswith("alpha_")]
        if not alpha_cols:
            raise InputError(f"{csv_path}: not a coefficient-sample CSV")
        samples = np.array(
            [[float(row[c]) for c in alpha_cols] for row in rows]
        )
        figures.violins(samples, path)
    return {kind: path}
