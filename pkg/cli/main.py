"""
Command-line surface: ca-backmap.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
Data goes to files or stdout; logs go to stderr.
"""
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import click
import pandas as pd

from backmapper import BackmapModel, FeatureSpec, TrainConfig, backmap_frames, fit_tables, load_model, save_model
from backmapper.training import train_torsion_net
from evaluation import AtomSelector, FrameRunner, StructureMetrics, distance_histogram, pair_distances, rmsd
from structure_io import (
    EnsembleFetcher,
    PreprocessPolicy,
    cg_map,
    compactness_stats,
    preprocess,
    read_pdb,
    write_pdb_file,
)
from structure_io.models import Ensemble
from utils.config import RunConfig, load_config
from utils.errors import EXIT_DATA, EXIT_USAGE, BackmapError, UsageError
from utils.log import configure_logging
from utils.tracing import initialize_tracing, span_summary, trace_span
from zmatrix import extract, read_zmatrix, reconstruct_frame, write_zmatrix

logger = logging.getLogger(__name__)


class BackmapGroup(click.Group):
    """Click group mapping domain errors onto exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args=args, prog_name=prog_name, complete_var=complete_var, standalone_mode=False, **extra)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except BackmapError as e:
            logger.debug("command failed", exc_info=True)
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_DATA)
        sys.exit(rv if isinstance(rv, int) else 0)


def _load(path: str, config: RunConfig, frame_cap: Optional[int] = None, seed: Optional[int] = None) -> Ensemble:
    ensemble = read_pdb(path)
    policy = PreprocessPolicy(
        frame_cap=frame_cap or config.frame_cap,
        seed=config.seed if seed is None else seed,
    )
    cleaned, log = preprocess(ensemble, policy)
    logger.info("%s: %d of %d frames kept", path, log.frames_out, log.frames_in)
    return cleaned


def _load_all_frames(path: str, config: RunConfig) -> Ensemble:
    ensemble = read_pdb(path)
    cleaned, _ = preprocess(ensemble, PreprocessPolicy(frame_cap=max(len(ensemble), 1), seed=config.seed))
    return cleaned


def _log_span_summary() -> None:
    for op, stats in sorted(span_summary().items()):
        logger.debug("span %s: %d calls, %d errors, %.1f ms mean", op, stats["count"], stats["errors"], stats["mean_ms"])


@click.group(cls=BackmapGroup)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="YAML configuration file")
@click.option("--log-level", default=None, help="Logging level (default from LOG_LEVEL, else INFO)")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads for per-frame work")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], log_level: Optional[str], threads: Optional[int]):
    """Backmap protein CA traces to all-atom structures."""
    config = load_config(config_path, {"log_level": log_level, "threads": threads})
    configure_logging(config.log_level)
    if config.tracing:
        initialize_tracing()
    ctx.obj = config
    ctx.call_on_close(_log_span_summary)


@cli.command()
@click.argument("entry_id")
@click.option("--out", "out_dir", default="data", show_default=True, type=click.Path(file_okay=False))
@click.option("--base-url", default=None, help="Override the download base URL")
@click.pass_obj
def fetch(config: RunConfig, entry_id: str, out_dir: str, base_url: Optional[str]):
    """Download an ensemble by entry id."""
    with trace_span("cli.fetch", {"entry_id": entry_id}):
        fetcher = EnsembleFetcher(base_url=base_url or config.fetch_base_url, retries=config.fetch_retries)
        path = fetcher.fetch(entry_id, out_dir)
    click.echo(str(path))


@cli.command("preprocess")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None, help="Write the preprocessing log here")
@click.option("--frame-cap", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=None)
@click.pass_obj
def preprocess_cmd(
    config: RunConfig,
    input_path: str,
    output_path: str,
    log_path: Optional[str],
    frame_cap: Optional[int],
    seed: Optional[int],
):
    """Clean an ensemble: hydrogens, non-template atoms, terminals, frame cap."""
    seed = config.seed if seed is None else seed
    with trace_span("cli.preprocess", {"input": input_path}):
        cleaned, log = preprocess(read_pdb(input_path), PreprocessPolicy(frame_cap=frame_cap or config.frame_cap, seed=seed))
        write_pdb_file(output_path, cleaned, remarks=[f"SEED {seed}"])
    if log_path:
        Path(log_path).write_text(log.to_text(), encoding="utf-8")
    else:
        click.echo(log.to_text(), nl=False, err=True)


@cli.group()
def zmat():
    """Z-matrix extraction and reconstruction."""


@zmat.command("extract")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.pass_obj
def zmat_extract(config: RunConfig, input_path: str, output_path: str):
    """Write the Z-matrix of every frame of an all-atom PDB."""
    ensemble = _load_all_frames(input_path, config)
    runner = FrameRunner(config.threads)
    with trace_span("cli.zmat.extract", {"frames": len(ensemble)}):
        frames = runner.run_batch(ensemble.frames, lambda frame: extract(frame, cg_map(frame)))
    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    Path(output_path).write_text(write_zmatrix(frames), encoding="utf-8")


@zmat.command("rebuild")
@click.argument("zfile", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option(
    "--trace", "trace_path", required=True, type=click.Path(exists=True, dir_okay=False), help="PDB supplying the CA trace"
)
@click.pass_obj
def zmat_rebuild(config: RunConfig, zfile: str, output_path: str, trace_path: str):
    """Rebuild all-atom frames from a Z-matrix file and a CA trace."""
    source = _load_all_frames(trace_path, config)
    traces = [cg_map(frame) for frame in source.frames]
    zframes = read_zmatrix(Path(zfile).read_text(encoding="utf-8"), traces[0])
    if len(traces) == 1 and len(zframes) > 1:
        traces = [traces[0]] * len(zframes)
    if len(traces) != len(zframes):
        raise UsageError(f"trace has {len(traces)} frames, Z-matrix file has {len(zframes)}")

    runner = FrameRunner(config.threads)
    with trace_span("cli.zmat.rebuild", {"frames": len(zframes)}):
        rebuilt = runner.run_batch(list(zip(traces, zframes)), lambda pair: reconstruct_frame(*pair))
    for index, structure in enumerate(rebuilt):
        structure.frame_id = index
    write_pdb_file(output_path, rebuilt[0] if len(rebuilt) == 1 else rebuilt)

    full_atom = all(len(r.atoms) > 1 for frame in source.frames for r in frame.residues if not r.terminal)
    if full_atom and len(source.frames) == len(rebuilt):
        for reference, structure in zip(source.frames, rebuilt):
            click.echo(f"frame {structure.frame_id}\trmsd {rmsd(reference, structure):.6f}")


@cli.command()
@click.argument("inputs", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False), help="Output model JSON")
@click.option("--train-net/--no-train-net", default=False, help="Also train the torsion network")
@click.option("--epochs", type=click.IntRange(min=0), default=200, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--batch-size", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--window", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option(
    "--loss-csv", type=click.Path(dir_okay=False), default=None, help="Loss trajectory CSV (default: next to the model)"
)
@click.option("--no-fallback", is_flag=True, help="Fail instead of using pooled statistics")
@click.pass_obj
def fit(
    config: RunConfig,
    inputs: Tuple[str, ...],
    model_path: str,
    train_net: bool,
    epochs: int,
    lr: float,
    batch_size: int,
    window: int,
    seed: Optional[int],
    loss_csv: Optional[str],
    no_fallback: bool,
):
    """Fit lookup tables (and optionally TorsionNet) on preprocessed ensembles."""
    if not inputs:
        raise UsageError("fit needs at least one ensemble")
    seed = config.seed if seed is None else seed
    ensembles = [_load(path, config, seed=seed) for path in inputs]
    frames = [frame for ensemble in ensembles for frame in ensemble.frames]

    runner = FrameRunner(config.threads)
    with trace_span("cli.fit.tables", {"frames": len(frames)}):
        zframes = runner.run_batch(frames, lambda frame: extract(frame, cg_map(frame)))
        tables = fit_tables(zframes)

    spec = FeatureSpec(window=window)
    metadata = {"entries": [e.entry_id for e in ensembles], "frames": len(frames), "seed": seed}
    model = BackmapModel(tables, None, spec, metadata)

    if train_net:
        train_config = TrainConfig(
            epochs=epochs, learning_rate=lr, batch_size=batch_size, seed=seed, weights=config.loss_weights
        )
        with trace_span("cli.fit.train", {"epochs": epochs}):
            result = train_torsion_net(
                frames, tables, train_config, spec, allow_fallback=not no_fallback, show_progress=sys.stderr.isatty()
            )
        model.net = result.net
        metadata["train"] = train_config.model_dump(mode="json")
        metadata["loss_trajectory"] = result.loss_trajectory
        csv_path = Path(loss_csv) if loss_csv else Path(model_path).with_suffix(".loss.csv")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(
            {"epoch": range(len(result.loss_trajectory)), "mean_recon_loss": result.loss_trajectory}
        ).to_csv(csv_path, index=False)

    save_model(model_path, model)
    click.echo(str(model_path))


@cli.command("backmap")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["deterministic", "stochastic"]), default="deterministic", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--cg-map", "cg_map_input", is_flag=True, help="Input is all-atom; reduce it to its CA trace first")
@click.option("--no-fallback", is_flag=True, help="Fail instead of using pooled statistics")
@click.pass_obj
def backmap_cmd(
    config: RunConfig,
    input_path: str,
    model_path: str,
    output_path: str,
    mode: str,
    seed: Optional[int],
    cg_map_input: bool,
    no_fallback: bool,
):
    """Backmap a CA trace (or an all-atom PDB with --cg-map) with a fitted model."""
    seed = config.seed if seed is None else seed
    ensemble = _load_all_frames(input_path, config)
    if not cg_map_input and any(len(r.atoms) > 1 for r in ensemble.frames[0].residues):
        raise UsageError("input carries more than CA atoms; pass --cg-map to reduce it")

    model = load_model(model_path)
    traces = [cg_map(frame) for frame in ensemble.frames]
    with trace_span("cli.backmap", {"frames": len(traces), "mode": mode}):
        structures = backmap_frames(traces, model, mode, seed, allow_fallback=not no_fallback, threads=config.threads)
    output = structures[0] if len(structures) == 1 else structures
    write_pdb_file(output_path, output, remarks=[f"SEED {seed}", f"MODE {mode}"])
    logger.info("backmapped %d frames (seed %d)", len(structures), seed)


@cli.command("eval")
@click.argument("reference_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("generated_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None, help="Metrics JSON (default: stdout)")
@click.option("--tolerance", type=float, default=None, help="Bond inference tolerance in Å")
@click.pass_obj
def eval_cmd(
    config: RunConfig, reference_path: str, generated_path: str, report_path: Optional[str], tolerance: Optional[float]
):
    """Compare backmapped frames with their all-atom references."""
    reference = _load_all_frames(reference_path, config)
    generated = _load_all_frames(generated_path, config)
    tol = config.bond_tolerance if tolerance is None else tolerance

    with trace_span("cli.eval", {"frames": len(generated)}):
        report = StructureMetrics.evaluate_ensemble(
            reference.frames,
            generated.frames,
            tol,
            config.clash_threshold,
            config.contact_cutoff,
            threads=config.threads,
            seed=config.seed,
        )
    if report_path:
        report.save(report_path)
    else:
        click.echo(report.to_json())
    logger.info("\n%s", StructureMetrics.generate_report(report.frames))


@cli.command()
@click.argument("inputs", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None, help="Compactness CSV (default: stdout)")
@click.option("--hist", "hist_path", type=click.Path(dir_okay=False), default=None, help="Distance histogram CSV")
@click.option("--bin-width", type=float, default=0.1, show_default=True)
@click.option("--max-distance", type=float, default=5.0, show_default=True)
@click.option("--pair", "pair_spec", default=None, help="Two atoms as chain:resSeq:atom,chain:resSeq:atom")
@click.option("--pair-csv", type=click.Path(dir_okay=False), default=None, help="Per-frame pair distance CSV")
@click.pass_obj
def stats(
    config: RunConfig,
    inputs: Tuple[str, ...],
    csv_path: Optional[str],
    hist_path: Optional[str],
    bin_width: float,
    max_distance: float,
    pair_spec: Optional[str],
    pair_csv: Optional[str],
):
    """Compactness table, distance histograms and named pair distances."""
    if not inputs:
        raise UsageError("stats needs at least one ensemble")
    ensembles: List[Ensemble] = [_load(path, config) for path in inputs]

    table = compactness_stats(ensembles)
    if csv_path:
        table.to_csv(csv_path, index=False)
    else:
        click.echo(table.to_csv(index=False), nl=False)

    frames = [frame for ensemble in ensembles for frame in ensemble.frames]
    if hist_path:
        histogram = distance_histogram(frames, max_distance=max_distance, bin_width=bin_width)
        histogram.to_frame().to_csv(hist_path, index=False)
    if pair_spec:
        parts = pair_spec.split(",")
        if len(parts) != 2:
            raise UsageError(f"--pair expects two comma-separated atoms, got {pair_spec!r}")
        first, second = (AtomSelector.parse(text.strip()) for text in parts)
        distances = pair_distances(frames, first, second)
        if pair_csv:
            distances.to_csv(pair_csv, index=False)
        else:
            click.echo(distances.to_csv(index=False), nl=False)


def main(argv: Optional[List[str]] = None) -> None:
    cli.main(args=argv, prog_name="ca-backmap")
