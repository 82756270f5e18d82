#!/usr/bin/env python3
"""
kac-roots - real zeros of random polynomials

Analytic densities (finite-n Kac formulas and the universal profiles of the
local scaling regime near t = 1), Wilkins' constant, the double-peak scan,
the parametric correlation ratio, and seeded Monte Carlo ensembles that
check them. Tables go to standard output (or --output) as CSV, JSON or Excel;
banners, progress bars and summaries go to standard error.
"""

import argparse
import asyncio
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

from cache import Cache
from config import Config
from errors import InsufficientStatisticsError
from exporters import ResultTable, get_exporter
from kac_analytic import KacParams, expected_count_global, wilkins_constant
from montecarlo import DISTRIBUTIONS, EnsembleRunner, EnsembleSpec, window_from_t
from parametric import PerturbationSpec, estimate_parametric_ratio_async, parametric_ratio
from rootcount import OVERFLOW_MARGIN
from universal import density_alpha, find_peaks, scaled_finite_density
from utils import format_duration, parse_grid, parse_range, parse_scan, setup_logging

__version__ = "1.0.0"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_INTERRUPTED = 130

console = Console(stderr=True)


class KacRoots:
    """Main application class: one method per subcommand, each building a ResultTable."""

    def __init__(self, config: Config):
        """
        Initialize the application.

        Args:
            config: Configuration object
        """
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.cache = Cache(config.cache_dir, config.cache_ttl) if config.use_cache else None
        self.summary: Dict[str, Any] = {}

    def _runner(self, progress: Optional[Progress], total: int, label: str) -> EnsembleRunner:
        callback = None
        if progress is not None:
            task_id = progress.add_task(f"[cyan]{label}", total=total)
            callback = lambda size: progress.update(task_id, advance=size)  # noqa: E731
        return EnsembleRunner(self.config, self.cache, callback)

    def density(self, n: int, alpha: float, grid: str) -> ResultTable:
        """Scaled finite-n density next to the universal profile on a grid of v."""
        points = parse_grid(grid)
        if not (points.max() < n):
            raise ValueError(f"grid reaches v >= n = {n} (t <= 0)")
        if alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {alpha}")

        table = ResultTable(['v', 'p_exact_n', 'p_universal'], metadata={'n': n, 'alpha': alpha})
        universal = density_alpha(alpha, points)
        for v, p_inf in zip(points, universal):
            table.append([float(v), scaled_finite_density(n, alpha, float(v)), float(p_inf)])
        return table

    async def simulate(self, spec: EnsembleSpec, progress: Optional[Progress] = None) -> ResultTable:
        """Histogram of zeros in the scaled window."""
        start = time.perf_counter()
        estimate = await self._runner(progress, spec.reps, "Simulating...").run_ensemble(spec)
        wall_time = time.perf_counter() - start

        table = ResultTable(['v_lo', 'v_hi', 'count', 'density', 'stderr'],
                            metadata={**spec.to_dict(), 'total_mean': estimate.total_mean,
                                      'total_var': estimate.total_var})
        edges = estimate.bin_edges
        for i in range(spec.bins):
            table.append([float(edges[i]), float(edges[i + 1]), int(estimate.counts[i]),
                          float(estimate.density[i]), float(estimate.stderr[i])])

        self.summary = {
            'total_mean': estimate.total_mean,
            'total_var': estimate.total_var,
            'total_stderr': estimate.total_stderr,
            'reps': estimate.reps_used,
            'seed': spec.seed,
            'wall_time': wall_time,
        }
        return table

    async def total(self, spec: EnsembleSpec, progress: Optional[Progress] = None) -> ResultTable:
        """Total number of real zeros against the analytic expectation."""
        start = time.perf_counter()
        result = await self._runner(progress, spec.reps, "Counting...").run_total_count(spec)
        wall_time = time.perf_counter() - start
        expected = expected_count_global(KacParams(spec.n, 1.0, spec.mu), epsabs=self.config.quad_epsabs,
                                         epsrel=self.config.quad_epsrel, limit=self.config.quad_limit)

        table = ResultTable(['n', 'dist', 'alpha', 'reps', 'mean', 'variance', 'stderr', 'expected'],
                            metadata={'seed': spec.seed})
        table.append([spec.n, spec.dist, spec.alpha, spec.reps, result.mean, result.variance,
                      result.stderr, expected])
        self.summary = {'mean': result.mean, 'stderr': result.stderr, 'expected': expected,
                        'seed': spec.seed, 'wall_time': wall_time}
        return table

    def constant(self) -> ResultTable:
        """Wilkins' constant to 9 decimals."""
        # 9 printed decimals need at least 1e-12 from the integrator
        value = wilkins_constant(min(self.config.quad_epsabs, 1e-12), min(self.config.quad_epsrel, 1e-12),
                                 self.config.quad_limit)
        table = ResultTable(['wilkins_constant'])
        table.append([round(value, 9)])
        return table

    def peaks(self, alpha_scan: str, v_max: float) -> ResultTable:
        """Local maxima of the universal density over a scan of alpha."""
        alphas = parse_scan(alpha_scan)
        if alphas.min() < 0:
            raise ValueError(f"alpha must be nonnegative, got scan {alpha_scan!r}")
        found = [(float(a), find_peaks(float(a), v_max)) for a in alphas]
        width = max(1, max(len(p) for _, p in found))

        columns = ['alpha']
        for k in range(1, width + 1):
            columns += [f'v_peak{k}', f'p_peak{k}']
        table = ResultTable(columns, metadata={'v_max': v_max})
        for alpha, peaks in found:
            row: List[Any] = [alpha]
            for peak in peaks:
                row += [peak.v, peak.p]
            row += [None] * (len(columns) - len(row))
            table.append(row)

        split = next((a for a, p in found if p and p[0].v > 0), None)
        self.summary = {'first_split_alpha': split}
        return table

    def cache_report(self, clear: bool) -> ResultTable:
        """Statistics of the ensemble cache, taken after an optional clear."""
        cache = self.cache or Cache(self.config.cache_dir, self.config.cache_ttl)
        cleared = cache.clear() if clear else 0
        stats = cache.get_stats()
        columns = ['cache_dir', 'total_entries', 'valid_entries', 'expired_entries', 'total_size_bytes']
        table = ResultTable(columns)
        table.append([stats[c] for c in columns])
        if clear:
            self.summary = {'cleared': cleared}
        return table

    async def parametric(self
, args: argparse.Namespace, progress: Optional[Progress] = None) -> ResultTable:
        """Analytic parametric ratio, optionally with Monte Carlo estimates."""
        if ':' in args.v:
            values = parse_grid(args.v)
        else:
            values = [float(args.v)]
        for v in values:
            if not v > 0:
                raise ValueError(f"parametric ratio needs v > 0, got {v}")

        columns = ['v', 'ratio_analytic']
        if args.estimate:
            columns += ['ratio_mc', 'stderr']
        table = ResultTable(columns)

        for v in values:
            row: List[Any] = [float(v), parametric_ratio(float(v))]
            if args.estimate:
                spec = self._perturbation_spec(args, float(v))
                runner = self._runner(progress, spec.base.reps, f"Estimating v={v:g}...")
                estimate = await estimate_parametric_ratio_async(spec, runner)
                row += [estimate.ratio, estimate.stderr]
                table.metadata.update({'n': spec.base.n, 't_center': spec.t_center,
                                       'delta': spec.resolved_delta, 'seed': spec.base.seed})
            table.append(row)
        return table

    @staticmethod
    def _perturbation_spec(args: argparse.Namespace, v: float) -> PerturbationSpec:
        n = args.n
        t_center = args.t_center if args.t_center is not None else 1.0 - 5.0 / n
        base = EnsembleSpec(n=n, dist=args.dist, alpha=args.alpha, reps=args.reps,
                            window=(-OVERFLOW_MARGIN, float(n)), bins=1, seed=args.seed)
        return PerturbationSpec(v_param=v, base=base, t_center=t_center, delta=args.delta)

    def export(self, table: ResultTable, output: Optional[Path]) -> None:
        exporter = get_exporter(self.config.output_format, self.config)
        path = exporter.export(table, output)
        if path is not None:
            console.print(f"[green]✓[/green] Exported to {path}")

    def write_summary(self, output: Optional[Path]) -> None:
        """One JSON summary line: to <output>.summary.json, or to standard error."""
        if not self.summary:
            return
        line = json.dumps(self.summary, sort_keys=True)
        if output is None:
            print(line, file=sys.stderr)
        else:
            sidecar = Path(str(output) + '.summary.json')
            sidecar.write_text(line + '\n', encoding='utf-8')
            self.logger.info(f"Summary written to {sidecar}")

    def print_summary(self, command: str) -> None:
        """Print a summary table of the run."""
        if not self.summary:
            return
        table = Table(title=f"{command} summary", show_header=True, header_style="bold magenta")
        table.add_column("Quantity", style="cyan")
        table.add_column("Value", justify="right", style="green")
        for key, value in self.summary.items():
            if key == 'wall_time':
                value = format_duration(value)
            elif isinstance(value, float):
                value = f"{value:.6g}"
            table.add_row(key, str(value))
        console.print(table)


def _spec_from_args(args: argparse.Namespace) -> EnsembleSpec:
    if getattr(args, 'window_t', None):
        a, b = parse_range(args.window_t)
        window = window_from_t(args.n, a, b)
    elif getattr(args, 'window', None):
        window = parse_range(args.window)
    else:
        window = (-10.0, 10.0) if args.command == 'simulate' else (0.0, 1.0)
    return EnsembleSpec(n=args.n, dist=args.dist, alpha=args.alpha, reps=args.reps, window=window,
                        bins=getattr(args, 'bins', 1), seed=args.seed)


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        prog='kac_roots.py',
        description='kac-roots - densities and counts of real zeros of random polynomials',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Finite-n and universal density profiles on a grid of v = n(1 - t)
  python kac_roots.py density --n 100 --alpha 10 --grid=-15:15:601

  # Seeded ensemble histogram, parallel and bit-reproducible
  python kac_roots.py --workers 4 simulate --n 100 --alpha 10 --reps 20000 --window=-15:15 --bins 60 --seed 42

  # Wilkins' constant
  python kac_roots.py constant

  # Double-peak transition
  python kac_roots.py peaks --alpha 0:8:0.1

  # Empty the ensemble cache
  python kac_roots.py cache --clear
        """
    )

    parser.add_argument('--config', type=Path, help='Path to configuration file (YAML format)')
    parser.add_argument('-v', '--verbose', action='store_true', help='Enable verbose output (INFO level)')
    parser.add_argument('--debug', action='store_true', help='Enable debug output (DEBUG level)')
    parser.add_argument('--workers', type=int, help='Worker processes for ensembles (default: KAC_ROOTS_WORKERS or CPU count)')
    parser.add_argument('--no-cache', action='store_true', help='Disable the ensemble result cache')
    parser.add_argument('--format', choices=['csv', 'json', 'excel'], help='Output format (default: csv)')
    parser.add_argument('--output', type=Path, help='Output file (default: standard output)')
    parser.add_argument('--version', action='version', version=f'kac-roots v{__version__}')

    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('density', help='Scaled finite-n and universal densities on a grid')
    p.add_argument('--n', type=int, required=True, help='Number of coefficients')
    p.add_argument('--alpha', type=float, default=0.0, help='Scaled squared mean n*mu^2 (default: 0)')
    p.add_argument('--grid', required=True, help='MIN:MAX:POINTS in v')

    def ensemble_options(p: argparse.ArgumentParser) -> None:
        p.add_argument('--n', type=int, required=True, help='Number of coefficients')
        p.add_argument('--dist', choices=DISTRIBUTIONS, default='gaussian', help='Coefficient law (default: gaussian)')
        p.add_argument('--alpha', type=float, default=0.0, help='Scaled squared mean n*mu^2 (default: 0)')
        p.add_argument('--reps', type=int, default=20_000, help='Realizations (default: 20000)')
        p.add_argument('--seed', type=int, default=0, help='Master seed (default: 0)')

    p = sub.add_parser('simulate', help='Monte Carlo histogram of zeros in a scaled window')
    ensemble_options(p)
    window = p.add_mutually_exclusive_group()
    window.add_argument('--window', help='LO:HI in v (default: -10:10)')
    window.add_argument('--window-t', dest='window_t', help='A:B in t, converted to v')
    p.add_argument('--bins', type=int, default=40, help='Histogram bins (default: 40)')

    p = sub.add_parser('total', help='Monte Carlo total number of real zeros')
    ensemble_options(p)

    sub.add_parser('constant', help="Wilkins' constant")

    p = sub.add_parser('peaks', help='Local maxima of the universal density over an alpha scan')
    p.add_argument('--alpha', required=True, help='MIN:MAX:STEP')
    p.add_argument('--v-max', dest='v_max', type=float, default=20.0, help='Upper end of the v scan (default: 20)')

    p = sub.add_parser('cache', help='Show ensemble cache statistics')
    p.add_argument('--clear', action='store_true', help='Delete every cached ensemble first')

    p = sub.add_parser('parametric', help='Parametric correlation ratio')
    p.add_argument('--v', required=True, help='Perturbation strength V or grid MIN:MAX:POINTS')
    p.add_argument('--estimate', action='store_true', help='Add the Monte Carlo coincidence estimate')
    p.add_argument('--n', type=int, default=100, help='Number of coefficients (default: 100)')
    p.add_argument('--dist', choices=DISTRIBUTIONS, default='gaussian', help='Coefficient law (default: gaussian)')
    p.add_argument('--alpha', type=float, default=0.0, help='Scaled squared mean (default: 0)')
    p.add_argument('--reps', type=int, default=100_000, help='Realizations (default: 100000)')
    p.add_argument('--t-center', dest='t_center', type=float, help='Window center in t (default: 1 - 5/n)')
    p.add_argument('--delta', type=float, help='Window half-width (default: p(t)*2*delta = 0.05)')
    p.add_argument('--seed', type=int, default=0, help='Master seed (default: 0)')

    return parser.parse_args(argv)


def load_config(args: argparse.Namespace) -> Config:
    """Config from file (if any) with command-line overrides."""
    config = Config.from_file(args.config) if args.config else Config()
    if args.workers is not None:
        config.workers = args.workers
    if args.no_cache:
        config.use_cache = False
    if args.format:
        config.output_format = args.format
    if args.output is not None:
        config.output_path = args.output
    config.debug_mode = args.debug
    config.__post_init__()
    if config.output_format == 'excel' and config.output_path is None:
        raise ValueError("Excel output needs --output (or output_path in the config file)")
    return config


async def run_command(app: KacRoots, args: argparse.Namespace) -> ResultTable:
    if args.command == 'density':
        return app.density(args.n, args.alpha, args.grid)
    if args.command == 'constant':
        return app.constant()
    if args.command == 'peaks':
        return app.peaks(args.alpha, args.v_max)
    if args.command == 'cache':
        return app.cache_report(args.clear)

    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), BarColumn(),
                  TaskProgressColumn(), console=console, transient=True) as progress:
        if args.command == 'simulate':
            return await app.simulate(_spec_from_args(args), progress)
        if args.command == 'total':
            return await app.total(_spec_from_args(args), progress)
        return await app.parametric(args, progress)


async def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = parse_arguments(argv)

    if args.debug:
        log_level = logging.DEBUG
    elif args.verbose:
        log_level = logging.INFO
    else:
        log_level = logging.WARNING
    setup_logging(log_level)
    logger = logging.getLogger(__name__)

    try:
        config = load_config(args)
        console.print(f"[bold cyan]kac-roots {__version__}[/bold cyan] [dim]{args.command}[/dim]")
        app = KacRoots(config)
        table = await run_command(app, args)
        app.export(table, config.output_path)
        app.write_summary(config.output_path)
        app.print_summary(args.command)
        return EXIT_OK

    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        return EXIT_INTERRUPTED
    except (ArithmeticError, InsufficientStatisticsError) as e:
        logger.error(f"Numerical failure: {e}")
        console.print(f"[bold red]✗ Numerical failure: {e}[/bold red]")
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError) as e:
        console.print(f"[bold red]✗ {e}[/bold red]")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        console.print(f"\n[bold red]✗ Fatal error: {e}[/bold red]\n")
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(asyncio.run(main()))
