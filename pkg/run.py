#!/usr/bin/env python3
"""
Panel Quadrature - Unified Run Script
Run the experiments, the throughput benchmark, or the HTTP API.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

ROOT_DIR = Path(__file__).parent
sys.path.insert(0, str(ROOT_DIR / "backend"))

from config import settings
from exceptions import ConfigurationError, QuadratureError


class Colors:
    """ANSI color codes for terminal output"""
    BLUE = '\033[94m'
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    BOLD = '\033[1m'
    RESET = '\033[0m'


class QuadratureRunner:
    def __init__(self):
        self.root_dir = ROOT_DIR

    def print_header(self, title: str):
        """Print command header"""
        print(f"{Colors.BOLD}{Colors.BLUE}")
        print("=" * 60)
        print(f"Panel Quadrature: {title}")
        print("=" * 60)
        print(f"{Colors.RESET}")

    def print_info(self, message: str):
        """Print info message"""
        print(f"{Colors.BLUE}ℹ️  {message}{Colors.RESET}")

    def print_success(self, message: str):
        """Print success message"""
        print(f"{Colors.GREEN}✅ {message}{Colors.RESET}")

    def print_error(self, message: str):
        """Print error message"""
        print(f"{Colors.RED}❌ {message}{Colors.RESET}", file=sys.stderr)

    def print_warning(self, message: str):
        """Print warning message"""
        print(f"{Colors.YELLOW}⚠️  {message}{Colors.RESET}")

    def write_grid(self, grid, out: Optional[str], fmt: str) -> Path:
        from services.demos import write_grid_csv, write_grid_json
        if fmt == "json":
            return write_grid_json(grid, out)
        return write_grid_csv(grid, out)

    def write_records(self, records, out: Optional[str], fmt: str) -> Path:
        from services.demos import write_records_csv, write_records_json
        if fmt == "csv":
            return write_records_csv(records, out)
        return write_records_json(records, out)

    def report_grid(self, grid):
        summary = grid.summary()
        self.print_success(f"{summary['points']} points, max E_rel = {summary['max_error']:.3e}, "
                           f"median = {summary['median_error']:.3e}")

    def parabola(self, args) -> int:
        from services.demos import demo_parabola
        self.print_header(f"parabola k={args.k}")
        grid = demo_parabola(args.k, args.n, args.scheme, args.grid, args.mode)
        self.report_grid(grid)
        self.print_info(f"Wrote {self.write_grid(grid, args.out, args.format)}")
        return 0

    def starfish(self, args) -> int:
        from services.demos import demo_starfish
        self.print_header(f"starfish eps_panel={args.eps_panel:g}")
        grid = demo_starfish(args.eps_panel, args.mode, args.grid, args.scheme, args.n,
                             args.region, args.near_min, args.rho_eps)
        self.print_info(f"{grid.meta['panels']} panels, rho_eps = {grid.meta['rho_eps']:.3g}")
        self.report_grid(grid)
        self.print_info(f"Wrote {self.write_grid(grid, args.out, args.format)}")
        return 0

    def slender(self, args) -> int:
        from services.demos import demo_slender
        self.print_header(f"slender fiber eps_panel={args.eps_panel:g}")
        records, grid = demo_slender(args.eps_panel, args.d, args.targets, args.seed, args.grid,
                                     args.n, with_slice=not args.no_slice)
        for record in records:
            self.print_info(f"d={record.d:g} {record.scheme:>8}: max err {record.max_error:.2e}, "
                            f"N_eval {record.n_eval}, t_eval {record.t_eval:.3f}s")
        out = Path(args.out) if args.out else None
        path = self.write_records(records, out, args.format)
        self.print_info(f"Wrote {path}")
        if grid is not None:
            self.report_grid(grid)
            grid_out = out.with_name(out.stem + "_slice.csv") if out else None
            self.print_info(f"Wrote {self.write_grid(grid, grid_out, 'csv')}")
        return 0

    def bench(self, args) -> int:
        from services.demos import BENCH_MIN_RATE, bench
        self.print_header(f"weight throughput n={args.n}")
        record = bench(args.n, args.targets, args.seed, args.dim)
        message = f"{record.targets} weight sets in {record.t_weights:.3f}s ({record.rate:.3g} targets/s)"
        if record.rate < BENCH_MIN_RATE:
            self.print_warning(message)
        else:
            self.print_success(message)
        if args.out:
            self.print_info(f"Wrote {self.write_records([record], args.out, args.format)}")
        return 0

    def serve(self, args) -> int:
        import uvicorn
        host = args.host or settings.app.api_host
        port = args.port or settings.app.api_port
        self.print_header("HTTP API")
        self.print_info(f"API docs available at http://{host}:{port}/docs")
        uvicorn.run("main:app", host=host, port=port, app_dir=str(self.root_dir / "backend"))
        return 0


def _add_common(parser: argparse.ArgumentParser, fmt_default: str):
    parser.add_argument('--n', type=int, default=16, help='Gauss-Legendre nodes per panel (default: 16)')
    parser.add_argument('--grid', default=None, help='Grid size WxH (default: DEMO_GRID or 60x60)')
    parser.add_argument('--out', default=None, help='Output file (default: under DEMO_OUTPUT_DIR)')
    parser.add_argument('--format', choices=['csv', 'json'], default=fmt_default, help='Output format')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Panel Quadrature - Run Script",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run.py parabola --k 0.25 --scheme ho        # Helsing-Ojala errors on a curved panel
  python run.py starfish --eps-panel 1e-14           # Fine starfish discretization
  python run.py slender --d 1e-2 1e-3 --targets 200  # Slender-body benchmark
  python run.py bench --n 16                         # Weight throughput
  python run.py serve --port 8000                    # HTTP API
        """
    )
    parser.add_argument('--log-level', default=None, help='Log level (default: APP_LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('parabola', help='Double layer potential on a parabolic panel')
    p.add_argument('--k', type=float, default=0.25, help='Curvature parameter (default: 0.25)')
    p.add_argument('--scheme', choices=['direct', 'ho', 'ssq'], default='ssq')
    p.add_argument('--mode', choices=['none', 'upsample', 'upsample-direct'], default='none')
    _add_common(p, 'csv')

    p = sub.add_parser('starfish', help='Interior Dirichlet problem on the starfish')
    p.add_argument('--eps-panel', type=float, default=1e-6, help='Panelization tolerance (default: 1e-6)')
    p.add_argument('--scheme', choices=['direct', 'ho', 'ssq'], default='ssq')
    p.add_argument('--mode', choices=['none', 'upsample', 'upsample-direct'], default='upsample')
    p.add_argument('--region', choices=['global', 'near'], default='global')
    p.add_argument('--near-min', type=float, default=1e-3, help='Smallest Im t of the near grid')
    p.add_argument('--rho-eps', type=float, default=None, help='Critical Bernstein radius override')
    p.add_argument('--tol', type=float, default=None, help='Tolerance for rho_eps when --rho-eps is not given')
    _add_common(p, 'csv')

    p = sub.add_parser('slender', help='Slender-body velocity around a closed fiber')
    p.add_argument('--eps-panel', type=float, default=1e-10, help='Panelization tolerance (default: 1e-10)')
    p.add_argument('--d', type=float, nargs='+', default=[1e-2, 1e-3, 1e-4], help='Target distances')
    p.add_argument('--targets', type=int, default=100, help='Random targets per distance')
    p.add_argument('--seed', type=int, default=None, help='Random seed (default: DEMO_SEED)')
    p.add_argument('--no-slice', action='store_true', help='Skip the xz-slice error grid')
    _add_common(p, 'json')

    p = sub.add_parser('bench', help='Root finding plus weight throughput')
    p.add_argument('--targets', type=int, default=2000)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--dim', type=int, choices=[2, 3], default=2)
    _add_common(p, 'json')

    p = sub.add_parser('serve', help='Run the HTTP API')
    p.add_argument('--host', default=None)
    p.add_argument('--port', type=int, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.app.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    runner = QuadratureRunner()

    if getattr(args, 'rho_eps', None) is None and getattr(args, 'tol', None) is not None:
        from services.geometry import rho_crit
        try:
            args.rho_eps = rho_crit(args.tol, args.n)
        except ConfigurationError as e:
            runner.print_error(e.message)
            return 2

    try:
        return getattr(runner, args.command)(args)
    except ConfigurationError as e:
        runner.print_error(e.message)
        return 2
    except QuadratureError as e:
        runner.print_error(e.message)
        return 1
    except KeyboardInterrupt:
        runner.print_warning("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
