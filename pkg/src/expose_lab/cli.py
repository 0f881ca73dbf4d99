"""Command line entry point: ``expose-lab``.

Exit status is 0 when every check passes, 1 when a check or a module
invariant fails and 2 for unreadable or malformed input.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__
from .render import EmptyDataError, read_curves_csv, render_curves
from .scenarios import Outcome, ScenarioError, run_experiment, run_scenario, write_outcome

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _module_error(exc: Exception) -> str:
    return f"{type(exc).__module__}.{type(exc).__name__}: {exc}"


def _guarded(fn):
    """Run ``fn`` and translate errors into exit statuses."""
    try:
        return fn()
    except (ScenarioError, EmptyDataError, FileNotFoundError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    except Exception as exc:  # module errors carry their own qualified name
        if type(exc).__module__.startswith("expose_lab"):
            click.echo(f"failed: {_module_error(exc)}", err=True)
            sys.exit(EXIT_FAIL)
        if isinstance(exc, ValueError):  # parameter validation in constructors
            click.echo(f"input error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        raise


def _finish(outcome: Outcome, out: Path, stem: str) -> None:
    files = write_outcome(outcome, out, stem)
    for name, passed in sorted(outcome.checks.items()):
        click.echo(f"  {'ok  ' if passed else 'FAIL'} {name}")
    click.echo(f"wrote {len(files)} file(s) to {out}")
    sys.exit(EXIT_OK if outcome.ok else EXIT_FAIL)


def _experiment(kind: str, out: Path, **params) -> None:
    outcome = _guarded(lambda: run_experiment(kind, params))
    click.echo(f"{kind}: {'ok' if outcome.ok else 'FAILED'}")
    _finish(outcome, out, kind)


out_option = click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
                          help="Output directory (default: out/<command>).")


def _outdir(out: Path | None, kind: str) -> Path:
    return out if out is not None else Path("out") / kind


@click.group()
@click.version_option(__version__, prog_name="expose-lab")
def main():
    """Numerical experiments on exposing boundary points of domains in C^n."""


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False, path_type=Path))
@out_option
def run(scenario: Path, out: Path | None):
    """Run every operation listed in a scenario JSON file."""
    ok, manifest = _guarded(lambda: run_scenario(scenario, out))
    for op in manifest["operations"]:
        status = "ok" if all(op["checks"].values()) else "FAILED"
        click.echo(f"{op['name']}: {status}")
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


@main.command("mobius-fuzz")
@click.option("--samples", default=1_000_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@out_option
def mobius_fuzz_cmd(samples: int, seed: int, out):
    """Random check of the disk-automorphism dichotomy."""
    _experiment("mobius-fuzz", _outdir(out, "mobius-fuzz"), samples=samples, seed=seed)


@main.command()
@click.option("--domain", default="nonconvex-test", show_default=True,
              help="Domain JSON file, or 'nonconvex-test' for the built-in example.")
@click.option("--zeta", default="0,0", show_default=True, help="Boundary point, comma-separated complex entries.")
@click.option("--eps", default=0.05, show_default=True)
@click.option("--grid", default=40, show_default=True, help="Verification grid points per real axis.")
@click.option("--seed", default=0, show_default=True)
@out_option
def convexify(domain: str, zeta: str, eps: float, grid: int, seed: int, out):
    """Build and verify a convexifying map at a boundary point."""
    try:
        z = [complex(s.strip().replace(" ", "")) for s in zeta.split(",")]
    except ValueError:
        click.echo(f"input error: cannot parse --zeta {zeta!r}", err=True)
        sys.exit(EXIT_INPUT)
    _experiment("convexify", _outdir(out, "convexify"), domain=domain, zeta=z, eps=eps, grid=grid, seed=seed)


@main.command()
@click.option("--a", "a", default=-2.0, show_default=True)
@click.option("--b", "b", default=2.0, show_default=True)
@click.option("--delta", "deltas", multiple=True, type=float, help="Repeat for a sweep (default 0.3 0.15 0.075).")
@out_option
def dumbbell(a: float, b: float, deltas, out):
    """Dumbbell maps for two unit disks joined by a thin neck."""
    _experiment("dumbbell", _outdir(out, "dumbbell"), a=a, b=b, deltas=tuple(deltas) or (0.3, 0.15, 0.075))


@main.command("ball-expose")
@click.option("--r", "r", default=1.5, show_default=True)
@click.option("--s", "s", default=3.0, show_default=True)
@click.option("--nu-list", default="2,3,4", show_default=True, help="Comma-separated fidelity indices.")
@click.option("--grid", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@out_option
def ball_expose(r: float, s: float, nu_list: str, grid: int, seed: int, out):
    """Expose the point (0, 1) of the unit ball onto the sphere of B_r(p_s)."""
    try:
        nus = tuple(int(v) for v in nu_list.split(","))
    except ValueError:
        click.echo(f"input error: cannot parse --nu-list {nu_list!r}", err=True)
        sys.exit(EXIT_INPUT)
    _experiment("ball-expose", _outdir(out, "ball-expose"), r=r, s=s, nu_list=nus, grid=grid, seed=seed)


@main.command()
@click.option("--source", nargs=2, type=float, default=(1.5, 3.0), show_default=True)
@click.option("--target", nargs=2, type=float, default=(0.5, 3.0), show_default=True)
@out_option
def rescaler(source, target, out):
    """Rescaling map between two ball configurations."""
    _experiment("rescaler", _outdir(out, "rescaler"), source=source, target=target)


@main.command("hull-demo")
@click.option("--rho0", default=1.0, show_default=True)
@click.option("--count", default=1000, show_default=True)
@click.option("--degree", default=8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@out_option
def hull_demo(rho0: float, count: int, degree: int, seed: int, out):
    """Maximum-principle evidence on the annulus slice (labelled evidence)."""
    if rho0 > 1.0:
        click.echo("input error: --rho0 must not exceed 1", err=True)
        sys.exit(EXIT_INPUT)
    _experiment("hull-demo", _outdir(out, "hull-demo"), rho0=rho0, count=count, degree=degree, seed=seed)


@main.command()
@click.argument("data", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="SVG path (default: next to the CSV).")
@click.option("--title", default="")
def render(data: Path, out: Path | None, title: str):
    """Render curves from a CSV table (columns curve, index, re, im) to SVG."""
    target = out if out is not None else data.with_suffix(".svg")
    info = _guarded(lambda: render_curves(read_curves_csv(data), target, title))
    click.echo(f"wrote {info.path}")


if __name__ == "__main__":
    main()
