"""
Command-line front end for ee-models.

Subcommands wire file ingestion, model specs, fitting, simulation, prediction
and scoring into batch runs. Each run owns one output directory holding its
artifacts, a plain-text report and a manifest.

Error paths print one line ``error=<code> message=<text>`` to stderr and exit
with status 1. A fit that does not converge still writes every artifact and
exits with status 2.
"""
import json
import os
import time
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Type, TypeVar

import click
import numpy as np
import pandas as pd

from . import __version__
from .config.loader import load_logging_config, parse_model_spec
from .config.models import HHH4Spec, ModelSpec, RunManifest, SimConfig, TwinSIRSpec, TwinstimSpec
from .core.logging import get_logger, setup_logging
from .data.counts import CountSeries, aggregate_counts, validate_counts
from .data.history import EventHistory, build_event_history
from .data.io import (
    read_adjacency,
    read_counts,
    read_covariates,
    read_events,
    read_geojson,
    read_history,
    read_individuals,
    read_pop_frac,
    read_stgrid,
    read_window,
    write_adjacency,
    write_counts,
    write_events,
    write_grid,
    write_history,
)
from .data.points import PointPattern, aggregate_to_counts, build_point_pattern, untie
from .forecast import (
    mean_scores,
    one_step_ahead,
    permutation_test,
    pit_histogram,
    predictions_frame,
    read_predictions,
    score_predictions,
    scores_frame,
)
from .formatting import ReportComponents, ReportFormatters, ReportTemplates
from .geometry.neighbourhood import adjacency_from_map
from .geometry.polygons import PolygonSet
from .models.base import ModelFit
from .models.hhh4 import HHH4Fit, fit_hhh4, summarize_hhh4
from .models.twinsir import TwinSIRFit, fit_twinsir, profile_ci
from .models.twinstim import TwinstimFit, fit_twinstim, r0_events
from .simulation import final_sizes, simulate_hhh4, simulate_twinsir, simulate_twinstim

S = TypeVar("S", HHH4Spec, TwinstimSpec, TwinSIRSpec)

logger = get_logger("cli")


class RunError(click.ClickException):
    """CLI failure carrying a machine-parsable error code."""

    exit_code = 1

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code

    def show(self, file: Any = None) -> None:
        text = " ".join(self.message.split())
        click.echo(f"error={self.code} message={text}", err=True, file=file)


class NotConverged(RunError):
    exit_code = 2

    def __init__(self, message: str):
        super().__init__("non-convergence", message)


class Run:
    """One CLI invocation: output directory, recorded inputs and the manifest."""

    def __init__(self, command: str, out: str, force: bool, threads: int = 1,
                 seed: Optional[int] = None, spec_path: Optional[str] = None):
        if threads < 1:
            raise RunError("validation", f"--threads must be at least 1, got {threads}")
        if os.path.isdir(out) and os.listdir(out) and not force:
            raise RunError("output-exists",
                           f"output directory {out} is not empty; pass --force to overwrite")
        os.makedirs(out, exist_ok=True)
        self.command = command
        self.out = out
        self.threads = threads
        self.seed = seed
        self.spec_path = spec_path
        self.inputs: Dict[str, str] = {}
        self.started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self._clock = time.perf_counter()

    def record(self, **paths: Optional[str]) -> None:
        self.inputs.update({k: v for k, v in paths.items() if v})

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def write_text(self, name: str, text: str) -> None:
        with open(self.path(name), "w") as f:
            f.write(text.rstrip("\n") + "\n")

    def write_json(self, name: str, data: Dict[str, Any]) -> None:
        with open(self.path(name), "w") as f:
            json.dump(_jsonable(data), f, indent=2, sort_keys=True)
            f.write("\n")

    def write_fit(self, fit: ModelFit, table: pd.DataFrame, record: Dict[str, Any]) -> None:
        table.to_csv(self.path("coefficients.tsv"), sep="\t", index=False, float_format="%.10g")
        self.write_json("fit.json", record)

    def finish(self, fit: Optional[ModelFit] = None) -> None:
        manifest = RunManifest(
            command=self.command,
            inputs=self.inputs,
            spec=self.spec_path,
            seed=self.seed,
            outDir=self.out,
            version=__version__,
            threads=self.threads,
            startedAt=self.started,
            wallClockSeconds=round(time.perf_counter() - self._clock, 3),
            converged=None if fit is None else bool(fit.converged),
            iterations=None if fit is None else int(fit.iterations),
        )
        self.write_json("manifest.json", manifest.model_dump())
        logger.info(f"{self.command} finished in "
                    f"{ReportFormatters.format_seconds(manifest.wallClockSeconds)}")
        if fit is not None and not fit.converged:
            raise NotConverged(f"optimizer did not converge after {fit.iterations} "
                               f"iterations: {fit.message}; artifacts written to {self.out}")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, pd.DataFrame):
        return _jsonable(value.to_dict("records"))
    if isinstance(value, (np.ndarray, pd.Series)):
        return _jsonable(np.asarray(value).tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def _handle(operation: str, fn: Callable[[], None]) -> None:
    """Run a subcommand body, mapping library exceptions to error codes."""
    try:
        fn()
    except RunError:
        raise
    except ValueError as e:
        logger.error(f"Failed to {operation}: {e}")
        missing = "file not found" in str(e) or "must be set" in str(e)
        code = "missing-input" if missing else "validation"
        raise RunError(code, str(e)) from e
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.error(f"Failed to {operation}: {e}")
        raise RunError("runtime", str(e)) from e


def _need(value: Any, flag: str, command: str) -> Any:
    if value is None or value == ():
        raise RunError("missing-input", f"{command} needs {flag}")
    return value


def _load_spec(path: Optional[str], expected: Type[S], command: str) -> S:
    spec = parse_model_spec(path)
    if not isinstance(spec, expected):
        raise RunError("validation", f"{command} needs a {expected.__name__} spec, "
                                     f"got {type(spec).__name__}")
    return spec


def _load_counts(run: Run, counts: Optional[str], pop: Optional[str], adjacency: Optional[str],
                 map_path: Optional[str], covariates: Optional[str], freq: int,
                 start: Tuple[int, int], command: str) -> CountSeries:
    counts_path = _need(counts, "--counts", command)
    run.record(counts=counts_path, pop=pop, adjacency=adjacency, map=map_path,
               covariates=covariates)
    grid, unit_ids = read_counts(counts_path)
    tiles = read_geojson(map_path) if map_path else None
    if adjacency:
        order: Optional[np.ndarray] = read_adjacency(adjacency, unit_ids)
    elif tiles is not None:
        order = adjacency_from_map(tiles, unit_ids)
    else:
        order = None
    return validate_counts(
        grid, start, freq,
        read_pop_frac(pop, unit_ids) if pop else None,
        order,
        unit_ids=unit_ids,
        map=tiles,
        covariates=read_covariates(covariates, unit_ids) if covariates else None,
    )


def _load_pattern(run: Run, spec: TwinstimSpec, events: Optional[str], stgrid: Optional[str],
                  map_path: Optional[str], window: Optional[str], qmatrix: Optional[str],
                  untie_amount: Optional[float], seed: Optional[int],
                  command: str) -> Tuple[PointPattern, Optional[Dict[str, PolygonSet]]]:
    events_path = _need(events, "--events", command)
    stgrid_path = _need(stgrid, "--stgrid", command)
    run.record(events=events_path, stgrid=stgrid_path, map=map_path, window=window,
               qmatrix=qmatrix)
    tiles = read_geojson(map_path) if map_path else None
    if window:
        W = read_window(window)
    elif tiles:
        W = PolygonSet.union(list(tiles.values()))
    else:
        raise RunError("missing-input", f"{command} needs --window or --map")
    q = None
    if qmatrix:
        q = pd.read_csv(qmatrix, index_col=0).astype(bool)
        q.index = q.index.astype(str)
        q.columns = q.columns.astype(str)
    pattern = build_point_pattern(read_events(events_path), W, read_stgrid(stgrid_path), q,
                                  n_circle=spec.nCircle2Poly, tiles=tiles)
    if untie_amount is not None:
        pattern = untie(pattern, untie_amount, seed=0 if seed is None else seed)
    return pattern, tiles


def _load_history(run: Run, spec: TwinSIRSpec, history: Optional[str],
                  individuals: Optional[str], end: Optional[float], command: str) -> EventHistory:
    if history:
        run.record(history=history)
        return read_history(history)
    path = _need(individuals, "--history or --individuals", command)
    run.record(individuals=path)
    return build_event_history(read_individuals(path), t0=spec.t0, T=end)


def _hhh4_outputs(run: Run, fit: HHH4Fit) -> str:
    summary = summarize_hhh4(fit, idx2Exp=True, amplitudeShift=True,
                             maxEV=fit.spec.ar is not None or fit.spec.ne is not None)
    extra: Dict[str, Any] = {}
    record = fit.to_record()
    if "maxEV" in summary:
        extra["maxEV"] = ReportFormatters.format_number(summary["maxEV"])
        record["maxEV"] = summary["maxEV"]
    record["subset"] = list(fit.subset)
    run.write_fit(fit, fit.coef_table(), record)
    return ReportTemplates.fit_summary("hhh4 fit", fit, summary["coefficients"], extra)


def _twinstim_outputs(run: Run, fit: TwinstimFit) -> str:
    record = fit.to_record()
    record["integrals"] = {k: np.asarray(v) for k, v in fit.integrals.items()}
    extra: Dict[str, Any] = {"events": fit.pattern.n_events}
    r0 = r0_events(fit)
    if fit.model.has_epidemic and r0.size:
        by_type = pd.Series(r0).groupby(fit.pattern.events["type"].to_numpy()).mean()
        record["R0"] = {str(k): float(v) for k, v in by_type.items()}
        for k, v in by_type.items():
            extra[f"mean R0 ({k})"] = ReportFormatters.format_number(float(v))
    run.write_fit(fit, fit.coef_table(), record)
    return ReportTemplates.fit_summary("twinstim fit", fit, extra=extra)


def _twinsir_outputs(run: Run, fit: TwinSIRFit) -> str:
    run.write_fit(fit, fit.coef_table(), fit.to_record())
    return ReportTemplates.fit_summary("twinSIR fit", fit,
                                       extra={"infections": int((fit.history.event >= 0).sum())})


def _fit_any(spec: ModelSpec, run: Run, opts: Dict[str, Any], command: str) -> Tuple[ModelFit, Any]:
    """Fit whichever engine the spec names; returns the fit and its dataset extras."""
    if isinstance(spec, HHH4Spec):
        series = _load_counts(run, opts["counts"], opts["pop"], opts["adjacency"], opts["map"],
                              opts["covariates"], opts["freq"], opts["start"], command)
        return fit_hhh4(spec, series), None
    if isinstance(spec, TwinstimSpec):
        pattern, tiles = _load_pattern(run, spec, opts["events"], opts["stgrid"], opts["map"],
                                       opts["window"], opts["qmatrix"], opts["untie"],
                                       opts["seed"], command)
        return fit_twinstim(spec, pattern, threads=run.threads), tiles
    history = _load_history(run, spec, opts["history"], opts["individuals"], opts["end"], command)
    return fit_twinsir(spec, history, threads=run.threads), None


def _write_report(run: Run, sections: Sequence[str]) -> None:
    run.write_text("report.txt", "\n\n".join(s for s in sections if s))


def counts_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--counts", type=click.Path(), help="T x U counts table (CSV)"),
        click.option("--pop", type=click.Path(), help="popFrac table (CSV)"),
        click.option("--covariates", type=click.Path(),
                     help="Directory of T x U covariate grids named <name>.csv"),
        click.option("--adjacency", type=click.Path(), help="Adjacency edge list"),
        click.option("--freq", type=int, default=52, show_default=True,
                     help="Samples per year"),
        click.option("--start", type=(int, int), default=(2001, 1), show_default=True,
                     help="Year and sample index of the first row"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def point_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--events", type=click.Path(), help="Events table (CSV)"),
        click.option("--stgrid", type=click.Path(), help="Space-time grid (CSV)"),
        click.option("--window", type=click.Path(),
                     help="Observation window (GeoJSON); default: union of --map"),
        click.option("--qmatrix", type=click.Path(), help="Type transmission matrix (CSV)"),
        click.option("--untie", type=float, default=None,
                     help="Break tied locations with shifts up to this distance"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def history_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--history", type=click.Path(), help="Event history table (CSV)"),
        click.option("--individuals", type=click.Path(),
                     help="One row per individual with tI and tR (CSV)"),
        click.option("--end", type=float, default=None, help="End of observation T"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


map_option = click.option("--map", "map_path", type=click.Path(), help="Unit polygons (GeoJSON)")


def run_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--spec", type=click.Path(), envvar="EE_MODELS_SPEC",
                     help="Model spec (JSON); default $EE_MODELS_SPEC"),
        click.option("--threads", type=int, default=1, show_default=True,
                     help="Worker bound for parallel sections"),
        click.option("--out", type=click.Path(file_okay=False), required=True,
                     help="Output directory"),
        click.option("--force", is_flag=True, help="Overwrite a non-empty output directory"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="ee-models")
def cli() -> None:
    """Endemic-epidemic modelling of surveillance data."""
    setup_logging(load_logging_config())


@cli.command("fit-hhh4")
@run_options
@map_option
@counts_options
def fit_hhh4_command(spec: Optional[str], map_path: Optional[str], threads: int, out: str,
                     force: bool, counts: Optional[str], pop: Optional[str],
                     covariates: Optional[str], adjacency: Optional[str], freq: int,
                     start: Tuple[int, int]) -> None:
    """Fit an hhh4 model to multivariate counts."""
    run = Run("fit-hhh4", out, force, threads, spec_path=spec)
    result: List[HHH4Fit] = []

    def body() -> None:
        model_spec = _load_spec(spec, HHH4Spec, "fit-hhh4")
        series = _load_counts(run, counts, pop, adjacency, map_path, covariates, freq, start,
                              "fit-hhh4")
        fit = fit_hhh4(model_spec, series)
        _write_report(run, [_hhh4_outputs(run, fit)])
        result.append(fit)

    _handle("fit hhh4 model", body)
    run.finish(result[0])


@cli.command("fit-twinstim")
@run_options
@map_option
@point_options
@click.option("--seed", type=int, default=None, help="Seed for --untie")
def fit_twinstim_command(spec: Optional[str], map_path: Optional[str], threads: int, out: str,
                         force: bool, events: Optional[str], stgrid: Optional[str],
                         window: Optional[str], qmatrix: Optional[str],
                         untie: Optional[float], seed: Optional[int]) -> None:
    """Fit a twinstim point process model."""
    run = Run("fit-twinstim", out, force, threads, seed=seed, spec_path=spec)
    result: List[TwinstimFit] = []

    def body() -> None:
        model_spec = _load_spec(spec, TwinstimSpec, "fit-twinstim")
        pattern, _ = _load_pattern(run, model_spec, events, stgrid, map_path, window, qmatrix,
                                   untie, seed, "fit-twinstim")
        fit = fit_twinstim(model_spec, pattern, threads=threads)
        _write_report(run, [_twinstim_outputs(run, fit)])
        result.append(fit)

    _handle("fit twinstim model", body)
    run.finish(result[0])


@cli.command("fit-twinsir")
@run_options
@history_options
@click.option("--profile", "profiles", multiple=True,
              help="Coefficient to profile (repeatable)")
@click.option("--grid-size", type=int, default=25, show_default=True,
              help="Profile grid points per parameter")
@click.option("--level", type=float, default=0.95, show_default=True)
def fit_twinsir_command(spec: Optional[str], threads: int, out: str,
                        force: bool, history: Optional[str], individuals: Optional[str],
                        end: Optional[float], profiles: Tuple[str, ...], grid_size: int,
                        level: float) -> None:
    """Fit a twinSIR model to an SIR event history."""
    run = Run("fit-twinsir", out, force, threads, spec_path=spec)
    result: List[TwinSIRFit] = []

    def body() -> None:
        model_spec = _load_spec(spec, TwinSIRSpec, "fit-twinsir")
        data = _load_history(run, model_spec, history, individuals, end, "fit-twinsir")
        fit = fit_twinsir(model_spec, data, threads=threads)
        sections = [_twinsir_outputs(run, fit)]
        if profiles:
            curves = profile_ci(fit, list(profiles), grid_size, level, threads)
            frames = [r["grid"].assign(parameter=name) for name, r in curves.items()]
            pd.concat(frames, ignore_index=True)[["parameter", "value", "profile", "failed"]] \
                .to_csv(run.path("profile.csv"), index=False, float_format="%.10g")
            sections.append(ReportTemplates.profile_summary(curves, level))
        _write_report(run, sections)
        result.append(fit)

    _handle("fit twinSIR model", body)
    run.finish(result[0])


@cli.command("simulate")
@run_options
@map_option
@counts_options
@point_options
@history_options
@click.option("--seed", type=int, default=None, help="Seed for all random draws (required)")
@click.option("--nsim", type=int, default=1, show_default=True, help="Number of replicates")
@click.option("--sim-config", type=click.Path(),
              help="JSON with timeWindow, yStart, subset or debug settings")
def simulate_command(spec: Optional[str], map_path: Optional[str], threads: int, out: str,
                     force: bool, counts: Optional[str], pop: Optional[str],
                     covariates: Optional[str], adjacency: Optional[str], freq: int,
                     start: Tuple[int, int], events: Optional[str], stgrid: Optional[str],
                     window: Optional[str], qmatrix: Optional[str], untie: Optional[float],
                     history: Optional[str], individuals: Optional[str], end: Optional[float],
                     seed: Optional[int], nsim: int, sim_config: Optional[str]) -> None:
    """Fit the spec's model, then simulate replicates from the fit."""
    if seed is None:
        raise RunError("validation", "simulate needs --seed")
    run = Run("simulate", out, force, threads, seed=seed, spec_path=spec)
    result: List[ModelFit] = []

    def body() -> None:
        model_spec = parse_model_spec(spec)
        settings: Dict[str, Any] = {}
        if sim_config:
            run.record(simConfig=sim_config)
            if not os.path.exists(sim_config):
                raise RunError("missing-input", f"input file not found: {sim_config}")
            with open(sim_config) as f:
                settings = json.load(f)
        settings.update(nsim=nsim, seed=seed, threads=threads)
        config = SimConfig.model_validate(settings)
        opts = dict(counts=counts, pop=pop, adjacency=adjacency, map=map_path,
                    covariates=covariates, freq=freq, start=start, events=events,
                    stgrid=stgrid, window=window, qmatrix=qmatrix, untie=untie, seed=seed,
                    history=history, individuals=individuals, end=end)
        fit, tiles = _fit_any(model_spec, run, opts, "simulate")
        if isinstance(fit, HHH4Fit):
            report = _hhh4_outputs(run, fit)
            sim = simulate_hhh4(fit, config)
            for r in range(config.nsim):
                write_grid(sim.counts[:, :, r], sim.unit_ids, run.path(f"sim_{r + 1:04d}.csv"))
            sizes = pd.Series(sim.final_sizes, name="infections")
            kind = "hhh4"
        elif isinstance(fit, TwinstimFit):
            report = _twinstim_outputs(run, fit)
            patterns = simulate_twinstim(fit, config, tiles)
            for r, pattern in enumerate(patterns):
                write_events(pattern.raw_events(), run.path(f"events_{r + 1:04d}.csv"))
            sizes = pd.Series([int((p.events["source"] >= 0).sum()) for p in patterns],
                              name="infections")
            kind = "twinstim"
        else:
            assert isinstance(fit, TwinSIRFit)
            report = _twinsir_outputs(run, fit)
            histories = simulate_twinsir(fit, config)
            for r, h in enumerate(histories):
                write_history(h, run.path(f"history_{r + 1:04d}.csv"))
            sizes = final_sizes(histories)
            kind = "twinSIR"
        pd.DataFrame({"replicate": np.arange(1, len(sizes) + 1), "size": sizes.to_numpy()}) \
            .to_csv(run.path("final_sizes.csv"), index=False)
        _write_report(run, [report, ReportTemplates.simulation_summary(kind, sizes, seed)])
        result.append(fit)

    _handle("simulate", body)
    run.finish(result[0])


@cli.command("predict")
@run_options
@map_option
@counts_options
@click.option("--tp", type=(int, int), default=None,
              help="Predict times FROM+1 ... TO+1 one step ahead")
@click.option("--rolling", is_flag=True, help="Refit at every time point")
def predict_command(spec: Optional[str], map_path: Optional[str], threads: int, out: str,
                    force: bool, counts: Optional[str], pop: Optional[str],
                    covariates: Optional[str], adjacency: Optional[str], freq: int,
                    start: Tuple[int, int], tp: Optional[Tuple[int, int]],
                    rolling: bool) -> None:
    """One-step-ahead predictions from an hhh4 model."""
    run = Run("predict", out, force, threads, spec_path=spec)
    result: List[HHH4Fit] = []

    def body() -> None:
        window = _need(tp, "--tp", "predict")
        model_spec = _load_spec(spec, HHH4Spec, "predict")
        series = _load_counts(run, counts, pop, adjacency, map_path, covariates, freq, start,
                              "predict")
        fit = fit_hhh4(model_spec, series)
        report = _hhh4_outputs(run, fit)
        pred = one_step_ahead(fit, window, "rolling" if rolling else "final", threads)
        predictions_frame(pred).to_csv(run.path("predictions.csv"), index=False,
                                       float_format="%.10g")
        sections = [report,
                    ReportTemplates.score_summary(
                        mean_scores(score_predictions(pred)).rename(index={0: "all"}))]
        if pred.failed:
            sections.append(f"refits reusing previous coefficients at times: "
                            f"{', '.join(map(str, pred.failed))}")
        _write_report(run, sections)
        result.append(fit)

    _handle("predict", body)
    run.finish(result[0])


@cli.command("score")
@click.option("--predictions", type=click.Path(), help="Predictions table (CSV)")
@click.option("--compare", type=click.Path(),
              help="Second predictions table for a paired permutation test")
@click.option("--bins", type=int, default=10, show_default=True, help="PIT histogram bins")
@click.option("--seed", type=int, default=None, help="Seed for the permutation test")
@click.option("--permutations", type=int, default=9999, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory")
def score_command(predictions: Optional[str], compare: Optional[str], bins: int,
                  seed: Optional[int], permutations: int, out: str, force: bool) -> None:
    """Proper scores and PIT histogram of one-step-ahead predictions."""
    run = Run("score", out, force, seed=seed)

    def body() -> None:
        path = _need(predictions, "--predictions", "score")
        run.record(predictions=path, compare=compare)
        if not os.path.exists(path):
            raise RunError("missing-input", f"predictions file not found: {path}")
        pred = read_predictions(pd.read_csv(path))
        scores = score_predictions(pred)
        scores_frame(pred, scores).to_csv(run.path("scores.csv"), index=False,
                                          float_format="%.10g")
        heights = pit_histogram(pred, bins)
        pd.DataFrame({"bin": np.arange(1, bins + 1), "height": heights}) \
            .to_csv(run.path("pit.csv"), index=False, float_format="%.10g")
        means = mean_scores(scores, by="unit", pd_=pred)
        sections = [ReportTemplates.score_summary(means, "Mean scores by unit"),
                    ReportTemplates.pit_summary(heights)]
        if compare:
            if seed is None:
                raise RunError("validation", "score --compare needs --seed")
            if not os.path.exists(compare):
                raise RunError("missing-input", f"predictions file not found: {compare}")
            other = read_predictions(pd.read_csv(compare))
            other_scores = score_predictions(other)
            tests = {name: permutation_test(scores[name], other_scores[name], permutations, seed)
                     for name in scores}
            pd.DataFrame([{"score": k, **v} for k, v in tests.items()]) \
                .to_csv(run.path("comparison.csv"), index=False, float_format="%.10g")
            sections.extend(f"Permutation test ({name})\n\n"
                            + ReportTemplates.permutation_summary(result)
                            for name, result in tests.items())
        _write_report(run, sections)

    _handle("score predictions", body)
    run.finish()


@cli.command("convert")
@counts_options
@point_options
@map_option
@click.option("--nfreq", type=int, default=None, help="Aggregate counts to this frequency")
@click.option("--spec", type=click.Path(), default=None,
              help="twinstim spec for nCircle2Poly (optional)")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory")
def convert_command(counts: Optional[str], pop: Optional[str], covariates: Optional[str],
                    adjacency: Optional[str], freq: int, start: Tuple[int, int],
                    events: Optional[str], stgrid: Optional[str], window: Optional[str],
                    qmatrix: Optional[str], untie: Optional[float], map_path: Optional[str],
                    nfreq: Optional[int], spec: Optional[str], out: str, force: bool) -> None:
    """Aggregate events to tile counts, or counts to a coarser frequency."""
    run = Run("convert", out, force, spec_path=spec)

    def body() -> None:
        if events:
            model_spec = _load_spec(spec, TwinstimSpec, "convert") if spec else TwinstimSpec()
            _need(map_path, "--map", "convert")
            pattern, tiles = _load_pattern(run, model_spec, events, stgrid, map_path, window,
                                           qmatrix, None, None, "convert")
            assert tiles is not None
            series = aggregate_to_counts(pattern, freq, start, tiles)
            write_adjacency(series.nb_order, series.unit_ids, run.path("adjacency.txt"))
            source = f"{pattern.n_events} events"
        else:
            series = _load_counts(run, counts, pop, adjacency, map_path, covariates, freq,
                                  start, "convert")
            source = f"{series.n_time} x {series.n_units} counts"
            if nfreq is None:
                raise RunError("missing-input", "convert needs --events or --nfreq")
            series = aggregate_counts(series, nfreq)
        write_counts(series, run.path("counts.csv"))
        write_grid(series.pop_frac, series.unit_ids, run.path("pop.csv"))
        summary = {
            "source": source,
            "time points": series.n_time,
            "units": series.n_units,
            "freq": series.freq,
            "start": f"{series.start[0]}/{series.start[1]}",
            "total": int(series.counts.sum()),
        }
        _write_report(run, ["Conversion\n\n" + ReportComponents.create_key_value_grid(summary)])

    _handle("convert", body)
    run.finish()


def main() -> None:
    """Entry point for the ee-models console script."""
    try:
        cli(prog_name="ee-models")
    except KeyboardInterrupt:
        logger.info("Interrupted")
        raise SystemExit(130)


if __name__ == "__main__":
    main()
