"""Main CLI interface for qfacerec."""

import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
import yaml
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .. import __version__
from ..audit.trail import RunAuditTrail
from ..core.config import BACKENDS, ROTATIONS, Config, PipelineConfig
from ..core.errors import QFaceRecError, SelfTestFailure
from ..core.pipeline import MatchReport, frames_sweep, run_pipeline, signal_mask
from ..core.selftest import run_selftest
from ..core.sweep import FAMILIES, gate_count_sweep, linear_fit, write_sweep_csv
from ..imaging.faces import synthetic_corpus
from ..imaging.ghost import synthesize
from ..imaging.pgm import load_pgm, save_face
from ..linalg.matrix import Matrix
from ..linalg.oracles import det_classical
from ..quantum.determinant import run_determinant
from ..quantum.trace import BinaryEncodedDiagonal, run_trace, trace_fixed_point

console = Console()
logger = logging.getLogger(__name__)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected integers, got {text!r}") from None


def _parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ';', entries by ',' or whitespace. Also accepts a YAML nested list."""
    text = text.strip()
    try:
        if text.startswith("["):
            rows = yaml.safe_load(text)
        else:
            rows = [[complex(v) for v in row.replace(",", " ").split()] for row in text.split(";") if row.strip()]
        matrix = np.array(rows, dtype=complex)
    except (ValueError, TypeError, yaml.YAMLError) as e:
        raise click.BadParameter(f"cannot parse matrix {text!r}: {e}") from None
    if matrix.ndim != 2:
        raise click.BadParameter(f"matrix must be two-dimensional, got shape {matrix.shape}")
    return matrix.real if not np.any(matrix.imag) else matrix


def _pipeline_config(ctx, **overrides) -> PipelineConfig:
    obj = ctx.obj
    cfg = PipelineConfig.from_config(obj["config"], seed=obj["seed"])
    if obj["backend"]:
        overrides["backend"] = obj["backend"]
    if obj["out"]:
        overrides["output"] = Path(obj["out"])
    return replace(cfg, **overrides).validate()


@click.group()
@click.version_option(version=__version__, prog_name="qfacerec")
@click.option("--config", type=click.Path(), help="Path to config file")
@click.option("--seed", type=int, help="Run seed (unsigned 64-bit)")
@click.option("--backend", type=click.Choice(BACKENDS), help="Divergence backend")
@click.option("--out", type=click.Path(), help="Output directory")
@click.option("--verbose", is_flag=True, help="Enable verbose logging")
@click.pass_context
def cli(ctx, config, seed, backend, out, verbose):
    """qfacerec - quantum face recognition protocol on a statevector simulator."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    if seed is not None and not 0 <= seed < 2 ** 64:
        raise click.BadParameter("seed must be an unsigned 64-bit integer", param_hint="--seed")

    ctx.obj = {
        "config": Config(Path(config) if config else None),
        "seed": seed,
        "backend": backend,
        "out": out,
    }


@cli.command()
@click.option("--no-ghost", is_flag=True, help="Match clean queries without ghost synthesis")
@click.option("--feature-space", is_flag=True, help="Compare QPCA-weight matrices instead of raw images")
@click.option("--dump-images", is_flag=True, help="Write eigenface and ghost PGMs")
@click.option("--rotation", type=click.Choice(ROTATIONS), help="Determinant rotation backend")
@click.option("--images", type=click.Path(exists=True, file_okay=False), help="Database image directory")
@click.option("--queries", type=click.Path(exists=True, file_okay=False), help="Query image directory")
@click.pass_context
def run(ctx, no_ghost, feature_space, dump_images, rotation, images, queries):
    """Run the recognition pipeline and write report.json."""
    overrides = {}
    if no_ghost:
        overrides["use_ghost"] = False
    if feature_space:
        overrides["feature_space"] = True
    if dump_images:
        overrides["dump_images"] = True
    if rotation:
        overrides["rotation"] = rotation
    if images:
        overrides["image_dir"] = Path(images)
    if queries:
        overrides["query_dir"] = Path(queries)
    cfg = _pipeline_config(ctx, **overrides)

    console.print(Panel(
        f"[bold blue]Recognition run:[/bold blue] backend={cfg.backend}, seed={cfg.seed}, "
        f"ghost={'on' if cfg.use_ghost else 'off'}",
        expand=False,
    ))
    report = run_pipeline(cfg)
    _display_report(report)


def _display_report(report: MatchReport) -> None:
    table = Table(title="Best Matches")
    table.add_column("Query", style="cyan")
    table.add_column("Best Match", style="green")
    table.add_column("Margin", justify="right")
    table.add_column("SNR", justify="right")
    table.add_column("Correct", justify="center")

    for q in report.queries:
        mark = {True: "[green]✓[/green]", False: "[red]✗[/red]", None: "-"}[q.correct]
        snr = "-" if q.snr is None else f"{q.snr:.2f}"
        table.add_row(q.name, report.database[q.best], f"{q.ranking.margin:.4g}", snr, mark)
    console.print(table)

    if report.gate_counts:
        gates = Table(title="Gate Counts")
        gates.add_column("Circuit", style="cyan")
        for column in ("hadamard", "controlled_phase", "controlled_unitary", "rotation", "depth", "total"):
            gates.add_column(column, justify="right")
        for family, counts in report.gate_counts.items():
            gates.add_row(family, *(str(counts[c]) for c in ("hadamard", "controlled_phase", "controlled_unitary", "rotation", "depth", "total")))
        console.print(gates)

    accuracy = report.accuracy
    console.print(Panel.fit(
        f"[bold]Queries:[/bold] {len(report.queries)}\n"
        f"[bold]Backend:[/bold] {report.backend} ({report.face_matrix_source} matrices)\n"
        f"[bold]Top-1 accuracy:[/bold] {'n/a' if accuracy is None else f'{accuracy:.0%}'}\n"
        f"[bold]Report:[/bold] {report.config.output / 'report.json'}",
        title="Summary",
        border_style="blue",
    ))


@cli.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--face", type=int, default=0, show_default=True, help="Synthetic face index when no IMAGE is given")
@click.option("--frames", type=int, help="Override ghost.frames")
@click.pass_context
def ghost(ctx, image, face, frames):
    """Ghost-image one face and report its SNR."""
    cfg = _pipeline_config(ctx)
    ghost_cfg = cfg.ghost if frames is None else replace(cfg.ghost, frames=frames)
    ghost_cfg = replace(ghost_cfg, workers=cfg.workers).validate()

    if image:
        truth = load_pgm(Path(image), cfg.side)
    else:
        corpus = synthetic_corpus(face + 1, cfg.side, cfg.seed)
        truth = corpus[face]

    result = synthesize(truth, ghost_cfg, signal=signal_mask(truth))
    snr = result.snr if result.snr is not None else float("nan")
    path = save_face(result.to_face_image(truth.name), cfg.output / "ghost" / f"{truth.name}.pgm")

    console.print(Panel.fit(
        f"[bold]Face:[/bold] {truth.name}\n"
        f"[bold]Frames:[/bold] {result.frames}\n"
        f"[bold]Coincidences:[/bold] {int(result.counts.sum())} of {result.total_pairs} pairs\n"
        f"[bold]SNR:[/bold] {snr:.3f}\n"
        f"[bold]Written:[/bold] {path}",
        title="Ghost Image",
        border_style="blue",
    ))


@cli.command()
@click.argument("matrix")
@click.option("-n", "--precision", type=int, default=4, show_default=True, help="Phase-register qubits")
@click.option("--rotation", type=click.Choice(ROTATIONS), default="idealized", show_default=True)
def det(matrix, precision, rotation):
    """Determinant of a hermitian MATRIX through the determinant circuit.

    MATRIX is written row by row, e.g. "1 0; 0 2".
    """
    a = Matrix(_parse_matrix(matrix))
    run = run_determinant(a, precision, rotation=rotation)
    logger.debug(f"λ̃ = {run.lambda_tilde}, classical det {det_classical(a).real:.6g}")
    click.echo(f"{run.estimate:.10g}")


@cli.command()
@click.argument("values")
@click.option("-f", "--fraction-bits", type=int, default=8, show_default=True, help="Fixed-point bits for real values")
def trace(values, fraction_bits):
    """Trace of a diagonal VALUES (e.g. "3,5,7") through the adder circuit."""
    try:
        numbers = [float(v) for v in values.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected numbers, got {values!r}") from None
    if not numbers:
        raise click.BadParameter("empty diagonal")

    if all(v >= 0 and v.is_integer() for v in numbers):
        click.echo(run_trace(BinaryEncodedDiagonal.from_values([int(v) for v in numbers])).value)
    else:
        result = trace_fixed_point(numbers, fraction_bits)
        click.echo(f"{result.value:.10g} (±{result.bound:.3g})")


@cli.command()
@click.option("--precisions", default="2,3,4", show_default=True, help="Phase-register widths n")
@click.option("--dims", default="2,3,4", show_default=True, help="Matrix dimensions N")
@click.option("--families", default=",".join(FAMILIES), show_default=True, help="Circuit families")
@click.option("--frames-sweep", "accuracy_sweep", is_flag=True, help="Also sweep recognition accuracy over ghost frames")
@click.pass_context
def sweep(ctx, precisions, dims, families, accuracy_sweep):
    """Measure gate counts per circuit family and write gate_counts.csv."""
    cfg = _pipeline_config(ctx)
    ns, sizes = _int_list(precisions), _int_list(dims)
    rows = gate_count_sweep(ns, sizes, [f.strip() for f in families.split(",") if f.strip()], cfg.max_qubits)
    path = write_sweep_csv(rows, cfg.output / "gate_counts.csv")

    table = Table(title="Linear Fits (total gates vs N)")
    table.add_column("Circuit", style="cyan")
    table.add_column("n", justify="right")
    table.add_column("Slope", justify="right")
    table.add_column("R²", justify="right")
    for family in ("trace", "determinant", "hhl"):
        for n in ns:
            if len(sizes) > 1 and any(r.family == family for r in rows):
                fit = linear_fit(rows, family, n)
                table.add_row(family, str(n), f"{fit.slope:.2f}", f"{fit.r_squared:.4f}")
    console.print(table)
    console.print(f"[green]✓ Wrote {len(rows)} rows to {path}[/green]")

    if accuracy_sweep:
        result = _frames_sweep(cfg)
        console.print(f"[bold]Spearman ρ:[/bold] {result.rho:.3f}")


def _frames_sweep(cfg: PipelineConfig):
    result = frames_sweep(cfg)
    table = Table(title="Accuracy vs Frames")
    table.add_column("Frames", justify="right")
    table.add_column("Mean accuracy", justify="right")
    for frames, accuracy in zip(result.frames, result.accuracy):
        table.add_row(str(frames), f"{accuracy:.3f}")
    console.print(table)
    return result


@cli.command()
def selftest():
    """Run the built-in invariant checks."""
    results = run_selftest()

    table = Table(title="Selftest")
    table.add_column("Check", style="cyan")
    table.add_column("Status", justify="center")
    table.add_column("Detail")
    for r in results:
        table.add_row(r.name, "[green]pass[/green]" if r.passed else "[red]FAIL[/red]", r.detail)
    console.print(table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        raise SelfTestFailure(f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}")
    console.print(f"[green]✓ All {len(results)} checks passed[/green]")


@cli.command()
@click.option("--last", type=int, default=20, show_default=True, help="Show last N runs")
@click.pass_context
def history(ctx, last):
    """Show recorded runs from the audit trail."""
    cfg = _pipeline_config(ctx)
    db_path = cfg.output / RunAuditTrail.DB_NAME
    if not db_path.exists():
        console.print(f"[yellow]No runs recorded in {cfg.output}[/yellow]")
        return

    trail = RunAuditTrail(cfg.output)
    try:
        runs = trail.database.recent_runs(last)
    finally:
        trail.close()

    table = Table(title="Run History")
    table.add_column("ID", justify="right")
    table.add_column("Timestamp")
    table.add_column("Seed", justify="right")
    table.add_column("Backend")
    table.add_column("Queries", justify="right")
    table.add_column("Accuracy", justify="right")
    table.add_column("Config")
    for record in runs:
        accuracy = record["accuracy"]
        table.add_row(
            str(record["id"]),
            str(record["timestamp"]),
            str(record["seed"]),
            record["backend"],
            str(record["queries"]),
            "n/a" if accuracy is None or math.isnan(accuracy) else f"{accuracy:.0%}",
            record["config_hash"][:12],
        )
    console.print(table)


def cli_entry(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        rv = cli.main(args=argv, prog_name="qfacerec", standalone_mode=False)
    except click.exceptions.Abort:
        console.print("[yellow]Aborted[/yellow]")
        return 1
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except QFaceRecError as e:
        console.print(f"[red]✗ {type(e).__name__}: {e}[/red]")
        return e.exit_code
    return rv if isinstance(rv, int) else 0


def main() -> None:
    sys.exit(cli_entry())


if __name__ == "__main__":
    main()
