"""
Command-line entry point: `mctd run | summarize | compare`.

Exit codes: 0 on success, 2 on a configuration or input error, 3 on an I/O
error.
"""

import argparse
import logging
from pathlib import Path

import dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from mc_descent import __version__
from mc_descent.config import load_run_config
from mc_descent.errors import AggregationError, ConfigError, TraceIOError
from mc_descent.harness.experiment import run_experiment
from mc_descent.harness.summary import SummaryRow, best_algorithm, compare, summarize_directory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

console = Console()


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_time=False, show_path=False)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mctd", description="Monte Carlo Tree Descent experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one algorithm on one benchmark for several seeds")
    run.add_argument("config", nargs="?", type=Path, help="TOML or JSON run configuration")
    run.add_argument("--benchmark", choices=["ackley", "michalewicz", "quantized-tabular"])
    run.add_argument("--dim", type=int)
    run.add_argument("--algo", dest="algorithm", choices=["mctd", "random", "nelder-mead", "turbo"])
    run.add_argument("--seeds", type=int, nargs="+")
    run.add_argument("--max-evals", type=int)
    run.add_argument("--out", type=Path, help="output directory (default: $MCTD_OUT_DIR/<benchmark>-<dim>d/<algo>)")
    run.add_argument("--workers", type=int, help="process pool size over seeds")
    run.add_argument("--preset", action=argparse.BooleanOptionalAction, default=None,
                     help="layer the per-benchmark hyperparameter preset under the config")
    run.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    summary = sub.add_parser("summarize", help="summarize the traces in one run directory")
    summary.add_argument("directory", type=Path)
    summary.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    comparison = sub.add_parser("compare", help="best value / earliest step table across run directories")
    comparison.add_argument("directories", type=Path, nargs="+")
    comparison.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return parser


def _summary_table(title: str, rows: list[SummaryRow]) -> Table:
    table = Table(title=title)
    table.add_column("Algorithm", style="cyan")
    table.add_column("Seeds", justify="right")
    table.add_column("Best / step", justify="right")
    table.add_column("Mean", justify="right")
    table.add_column("Std", justify="right")
    for r in rows:
        table.add_row(r.algorithm, str(r.seeds), r.cell, f"{r.mean_best:.4g}", f"{r.std_best:.4g}")
    return table


def cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        "benchmark": args.benchmark,
        "dim": args.dim,
        "algorithm": args.algorithm,
        "seeds": args.seeds,
        "max_evals": args.max_evals,
        "output_dir": args.out,
        "workers": args.workers,
        "preset": args.preset,
    }
    config = load_run_config(args.config, overrides)
    console.print(
        Panel(
            f"[bold]{config.algorithm}[/bold] on [bold]{config.benchmark}-{config.dim}d[/bold]\n"
            f"seeds {config.seeds}, {config.max_evals} evaluations each\n"
            f"[dim]fingerprint {config.fingerprint()[:16]}[/dim]",
            title="mctd run",
        )
    )

    with Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
    ) as progress:
        task = progress.add_task("seeds", total=len(config.seeds))
        result = run_experiment(config, on_trace=lambda _: progress.advance(task))

    table = Table(title=f"{config.algorithm} / {config.benchmark}-{config.dim}d")
    table.add_column("Seed", justify="right")
    table.add_column("Evaluations", justify="right")
    table.add_column("Best", justify="right")
    table.add_column("Earliest step", justify="right")
    table.add_column("Time (s)", justify="right")
    for trace in result.traces:
        table.add_row(str(trace.seed), str(len(trace)), f"{trace.best_y:.6g}", str(trace.earliest_step),
                      f"{trace.wall_time:.1f}")
    console.print(table)
    console.print(f"[green]✓[/green] traces and manifest written to [bold]{escape(str(result.output_dir))}[/bold]")
    return EXIT_OK


def cmd_summarize(args: argparse.Namespace) -> int:
    summary = summarize_directory(args.directory)
    console.print(_summary_table(str(args.directory), summary.rows))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    results = compare(args.directories)
    algorithms = sorted({a for rows in results.values() for a in rows})
    table = Table(title="Best found value / earliest step")
    table.add_column("Benchmark", style="cyan")
    for algorithm in algorithms:
        table.add_column(algorithm, justify="right")
    for benchmark, rows in results.items():
        winner = best_algorithm(rows)
        cells = []
        for algorithm in algorithms:
            row = rows.get(algorithm)
            if row is None:
                cells.append("-")
            elif algorithm == winner:
                cells.append(f"[bold]{row.cell}[/bold]")
            else:
                cells.append(row.cell)
        table.add_row(benchmark, *cells)
    console.print(table)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "summarize": cmd_summarize, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    dotenv.load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValidationError, AggregationError) as e:
        console.print(f"[red]✗ {escape(str(e))}[/red]")
        return EXIT_CONFIG
    except (TraceIOError, OSError) as e:
        console.print(f"[red]✗ I/O error: {escape(str(e))}[/red]")
        return EXIT_IO


__all__ = ["EXIT_OK", "EXIT_CONFIG", "EXIT_IO", "build_parser", "configure_logging", "main"]
