#!/usr/bin/env python3
"""
Command-line experiment runner for DE and Clu-DE.

    python harness_cli.py run --functions 5,8,10 --dims 30 --runs 25 --out results
    python harness_cli.py compare --out results
    python harness_cli.py list-functions
    python harness_cli.py gen-transforms --dims 10,30 --seed 7 --out transforms

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
evaluation error, 3 I/O error.
"""

import logging
import sys

import click

from benchmarks import CATALOG, save_transforms, synth_transforms
from core import BOUNDARY_POLICIES, CluDEError, ConfigurationError, TransformLoadError
from experiment import (
    SUPPORTED_DIMENSIONS,
    build_plan,
    compare_directory,
    load_config_file,
    parse_function_ids,
    parse_int_list,
    run_experiment,
)
from stats import DEFAULT_ALPHA, wtl_tally

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


def _echo_tallies(result):
    for dimension in sorted({d for d, _ in result.verdicts}):
        wins, ties, losses = wtl_tally(v for d, v in result.verdicts if d == dimension)
        click.echo(f"📊 D={dimension}: Clu-DE w/t/l = {wins}/{ties}/{losses}")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log per-generation progress.")
def cli(verbose):
    """DE / Clu-DE benchmark harness."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--functions", help="e.g. 5,8,10 or F1-F10 or all")
@click.option("--dims", help="comma-separated, from 10,30,50,100")
@click.option("--algos", help="comma-separated, from de,clu_de")
@click.option("--runs", type=int)
@click.option("--seed", type=int)
@click.option("--budget-multiplier", type=int, help="NFE_max = multiplier * D")
@click.option("--out", type=click.Path())
@click.option("--transforms", help="synthetic, synthetic:<seed>, or a directory")
@click.option("--population-size", type=int)
@click.option("--scaling-factor", type=float)
@click.option("--crossover-rate", type=float)
@click.option("--num-new-solutions", type=int)
@click.option("--boundary", type=click.Choice(BOUNDARY_POLICIES))
@click.option("--workers", type=int, help="process pool size (env CLUDE_WORKERS)")
def run(config_path, **flags):
    """Execute an experiment plan and write its artifacts."""
    file_settings = load_config_file(config_path) if config_path else {}
    plan = build_plan(file_settings, **flags)
    cells = plan.cells()
    click.echo(
        f"🚀 {len(cells)} cells x {plan.runs} runs "
        f"({','.join(f'F{n}' for n in plan.functions)}; "
        f"D={','.join(str(d) for d in plan.dimensions)}; "
        f"{','.join(plan.algorithms)}) -> {plan.out}"
    )
    done = []

    def progress(label):
        done.append(label)
        click.echo(f"   ✅ [{len(done)}/{len(cells)}] {label}")

    result = run_experiment(plan, progress=progress)
    _echo_tallies(result)
    click.echo(f"✅ Wrote {len(result.files)} files to {plan.out}")


@cli.command()
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--alpha", type=float, default=DEFAULT_ALPHA, show_default=True)
@click.option(
    "--method",
    type=click.Choice(["auto", "exact", "normal"]),
    default="auto",
    show_default=True,
)
def compare(out, alpha, method):
    """Recompute verdicts and tables from an existing output directory."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    result = compare_directory(out, alpha=alpha, method=method)
    if not result.verdicts:
        click.echo("⚠️  No cell has both de and clu_de results; nothing to compare")
    _echo_tallies(result)
    click.echo(f"✅ Rewrote {len(result.files)} files in {out}")


@cli.command("list-functions")
def list_functions():
    """Show the built-in benchmark catalog."""
    click.echo(f"{'id':<4} {'bias':>6}  {'category':<10} {'base':<22} {'>=0':<4} name")
    for number in sorted(CATALOG):
        entry = CATALOG[number]
        click.echo(
            f"{entry.label:<4} {entry.bias:>6.0f}  {entry.category:<10} "
            f"{entry.base:<22} {'yes' if entry.nonnegative else 'no':<4} {entry.title}"
        )


@cli.command("gen-transforms")
@click.option("--dims", required=True, help="comma-separated dimensions")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--functions", default="all", show_default=True)
@click.option("--out", required=True, type=click.Path())
def gen_transforms(dims, seed, functions, out):
    """Write synthetic shift/rotation files loadable with --transforms DIR."""
    numbers = parse_function_ids(functions)
    dimensions = parse_int_list(dims, "dims")
    unsupported = [d for d in dimensions if d not in SUPPORTED_DIMENSIONS]
    if unsupported:
        raise ConfigurationError(f"unsupported dimension(s) {unsupported}")
    written = 0
    for dimension in dimensions:
        written += len(save_transforms(synth_transforms(dimension, seed, numbers), out))
    click.echo(f"✅ Wrote {written} transform files to {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="clu-de", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("❌ Aborted", err=True)
        return EXIT_USAGE
    except ConfigurationError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        return EXIT_USAGE
    except (TransformLoadError, OSError) as e:
        click.echo(f"❌ I/O error: {e}", err=True)
        return EXIT_IO
    except CluDEError as e:
        click.echo(f"❌ {type(e).__name__}: {e}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
