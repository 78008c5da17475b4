"""
Main CLI entry point for freetorus.

Validates Z^p actions on Z^q, computes normal forms, constructs the free
analytic action on the 3-torus, verifies its freeness and exports orbits.
"""

from __future__ import annotations

import functools
import logging
import random
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from freetorus import __version__
from freetorus.core.action import (
    ActionSpec,
    conjugate,
    fix_lattice,
    parse_json,
    spectral_unitarity,
)
from freetorus.core.analytic import (
    FreeActionFamily,
    build_generators,
    commutator_defect,
    functional_identities,
)
from freetorus.core.config import CliConfig, FreetorusSettings, OutputFormat, load_settings
from freetorus.core.errors import FreetorusError, InputError, VerificationError
from freetorus.core.fixtures import EXAMPLES, get_example
from freetorus.core.freeness import (
    FixedPointVerdict,
    SubgroupSpec,
    default_alpha,
    fixed_point_on_H,
    lift_freeness,
    numeric_fixed_point_scan,
    orbit_iterate,
    scan_h_box,
)
from freetorus.core.lattice import random_unimodular
from freetorus.core.normal_form import normalize_action, verify_normal_form
from freetorus.generators.report import ReportGenerator
from freetorus.generators.trajectory import TrajectoryGenerator

logger = logging.getLogger(__name__)

# Diagnostics and logs go to stderr, reports to stdout
console = Console(stderr=True)


def setup_logging(verbose: bool = False, level: str = "warning") -> None:
    """Configure logging with rich handler."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, level.upper(), logging.WARNING),
        format="%(message)s",
        handlers=[RichHandler(console=console, show_time=False, show_path=False)],
        force=True,
    )


def reports_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Print library errors in red and exit with their exit code."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except FreetorusError as e:
            logger.debug("Failure details", exc_info=True)
            console.print(f"[red]✗ {escape(str(e))}[/red]")
            raise click.exceptions.Exit(e.exit_code)

    return wrapper


class Stage:
    """Context manager tagging errors raised inside a pipeline stage."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self) -> "Stage":
        logger.info(f"Stage {self.name}")
        return self

    def __exit__(self, exc_type: Any, exc: Any, tb: Any) -> bool:
        if isinstance(exc, FreetorusError):
            exc.with_stage(self.name)
        return False


# ============================================================================
# Input helpers
# ============================================================================

def _read_text(input_path: str) -> str:
    try:
        with click.open_file(input_path, "r", encoding="utf-8") as f:
            return f.read()
    except UnicodeDecodeError as e:
        raise InputError(
            f"{input_path} is not valid UTF-8 at byte {e.start}", details={"position": e.start}
        ) from e
    except OSError as e:
        raise InputError(f"cannot read {input_path}: {e}") from e


def _load_action(input_path: Optional[str], example: Optional[str]) -> ActionSpec:
    if example:
        return get_example(example)
    return ActionSpec.from_json(_read_text(input_path or "-"))


def _parse_ints(text: str, what: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(item) for item in text.split(",")]
    except ValueError as e:
        raise InputError(f"malformed {what} {text!r}: expected comma separated integers") from e


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise InputError(f"malformed {what} {text!r}: expected comma separated numbers") from e


def _emit(ctx: click.Context, report: dict[str, Any], kind: str, config: CliConfig,
          output: Optional[str]) -> None:
    report = {"config": config.effective(), **report}
    fmt = OutputFormat.TEXT if config.output_format == OutputFormat.TEXT.value else OutputFormat.JSON
    generator = ReportGenerator(Path(output) if output else None, fmt)
    if output is None:
        click.echo(generator.render(report, kind), nl=False)
        return
    result = generator.generate(report, kind)
    if not result["success"]:
        raise InputError(f"cannot write report: {result['error']}")
    console.print(f"[green]✓ Report written to {escape(str(output))}[/green]")


def _settings(ctx: click.Context) -> FreetorusSettings:
    return ctx.obj["settings"]


def _alpha(config: CliConfig, p: int) -> list[float]:
    alpha = list(config.alpha) if config.alpha else default_alpha(p)
    if len(alpha) < p:
        raise InputError(f"{p} alpha values needed, got {len(alpha)}")
    return alpha


# ============================================================================
# Pipeline pieces
# ============================================================================

def check_report(action: ActionSpec, config: CliConfig) -> dict[str, Any]:
    verdict = spectral_unitarity(action, config.closure_cap, config.box_radius)
    fixed = fix_lattice(action)
    reasons = []
    if action.q != 3:
        reasons.append(f"q = {action.q}: the Klein normal form applies to q = 3 only")
    if action.p < 2:
        reasons.append(f"p = {action.p}: at least two generators are needed")
    if not fixed.is_trivial:
        reasons.append(f"Fix(A) has rank {fixed.rank}, the trivial fixed set hypothesis fails")
    if verdict.is_refuted:
        reasons.append(f"1 is not an eigenvalue of A({list(verdict.witness or ())})")
    return {
        "action": {"p": action.p, "q": action.q},
        "commuting": True,
        "spectral": verdict.to_dict(),
        "fix_lattice": fixed.to_list(),
        "hypotheses": {"satisfied": not reasons, "reasons": reasons},
    }


def pipeline_report(action: ActionSpec, config: CliConfig, scan: bool = False) -> dict[str, Any]:
    """Normal form, construction, action law, freeness on H and lifting."""
    with Stage("normal-form"):
        nf = normalize_action(action, config.box_radius, config.closure_cap)
        verification = verify_normal_form(action, nf)

    with Stage("construct"):
        family = build_generators(nf, action.p)

    with Stage("action-law"):
        defects: dict[str, Any] = {}
        for i in range(1, family.p + 1):
            for j in range(i + 1, family.p + 1):
                report = commutator_defect(family.lift(i), family.lift(j))
                if report.constant is None:
                    raise VerificationError(f"lifts {i} and {j} do not commute on the torus")
                defects[f"{i},{j}"] = list(report.constant)
        identities = functional_identities(family)
        if not all(identities.values()):
            failed = [name for name, holds in identities.items() if not holds]
            raise VerificationError(f"identities fail: {', '.join(failed)}")

    with Stage("freeness"):
        evidence = scan_h_box(family, config.h_box)
        samples = []
        for j in range(family.p):
            ell = tuple(1 if k == j else 0 for k in range(family.p))
            sample = fixed_point_on_H(family, ell)
            entry = sample.to_dict()
            if sample.obstruction is not None:
                entry["polynomial"] = str(sample.obstruction.as_sympy())
            samples.append(entry)

    with Stage("lifting"):
        lifting = lift_freeness(SubgroupSpec.h_subgroup(family.p), evidence)

    result: dict[str, Any] = {
        "normal_form": nf.to_dict(),
        "verification": verification.to_dict(),
        "formulas": family.pretty(),
        "action_law": {"defects": defects, "identities": identities},
        "freeness": {
            "h_box": config.h_box,
            "checked": len(evidence),
            "no_fixed_point": sum(
                1 for r in evidence if r.verdict == FixedPointVerdict.NO_FIXED_POINT
            ),
            "samples": samples,
        },
        "lifting": lifting.to_dict(),
    }
    if scan:
        settings = config.scan
        with Stage("scan"):
            scan_report = numeric_fixed_point_scan(
                family,
                _alpha(config, family.p),
                box=settings.box if settings else 2,
                tol=settings.tolerance if settings else 1e-3,
                grid=settings.grid if settings else 64,
            )
        result["scan"] = {**scan_report.to_dict(), "smallest": scan_report.smallest}
    return result


def _build_family(action: ActionSpec, config: CliConfig) -> FreeActionFamily:
    with Stage("normal-form"):
        nf = normalize_action(action, config.box_radius, config.closure_cap)
    with Stage("construct"):
        return build_generators(nf, action.p)


# ============================================================================
# Main CLI Group
# ============================================================================

@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
@click.option("-c", "--config", type=click.Path(), help="Configuration file path")
@click.version_option(version=__version__, prog_name="freetorus")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, config: Optional[str]) -> None:
    """
    freetorus - free analytic Z^p actions on the 3-torus

    Classify spectrally unitary Z^p actions on Z^3 with trivial fixed set,
    construct the corresponding free action on T^3 and verify it exactly.

    Use 'freetorus COMMAND --help' for more information on a specific command.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["config"] = config
    try:
        settings = load_settings(config)
    except FreetorusError as e:
        console.print(f"[red]✗ {escape(str(e))}[/red]")
        raise click.exceptions.Exit(e.exit_code)
    ctx.obj["settings"] = settings
    setup_logging(verbose, settings.log_level)


input_argument = click.argument("input_path", required=False, default="-", metavar="[INPUT]")
example_option = click.option(
    "--example", type=click.Choice(list(EXAMPLES)), help="Use an embedded example instead of INPUT"
)
box_option = click.option("--box", "box_radius", type=int, help="Box radius for spectral checks")
cap_option = click.option("--closure-cap", type=int, help="Maximum image size enumerated exactly")
format_option = click.option(
    "--format", "output_format", type=click.Choice(["json", "text"]), help="Report format"
)
output_option = click.option("-o", "--output", type=click.Path(), help="Write to a file")


# ============================================================================
# Commands
# ============================================================================

@cli.command()
@input_argument
@example_option
@box_option
@cap_option
@format_option
@output_option
@click.pass_context
@reports_errors
def check(
    ctx: click.Context,
    input_path: str,
    example: Optional[str],
    box_radius: Optional[int],
    closure_cap: Optional[int],
    output_format: Optional[str],
    output: Optional[str],
) -> None:
    """Check commutativity, spectral unitarity and the fixed lattice of an action."""
    config = CliConfig.from_settings(
        _settings(ctx), "check", input_path=example or input_path, box_radius=box_radius,
        closure_cap=closure_cap, output_format=output_format,
    )
    with Stage("input"):
        action = _load_action(input_path, example)
    with Stage("check"):
        report = check_report(action, config)
    _emit(ctx, report, "check", config, output)


@cli.command("normal-form")
@input_argument
@example_option
@box_option
@cap_option
@format_option
@output_option
@click.pass_context
@reports_errors
def normal_form(
    ctx: click.Context,
    input_path: str,
    example: Optional[str],
    box_radius: Optional[int],
    closure_cap: Optional[int],
    output_format: Optional[str],
    output: Optional[str],
) -> None:
    """Compute the normal form (a, b, c, d), the conjugator P and the basis W."""
    config = CliConfig.from_settings(
        _settings(ctx), "normal-form", input_path=example or input_path, box_radius=box_radius,
        closure_cap=closure_cap, output_format=output_format,
    )
    with Stage("input"):
        action = _load_action(input_path, example)
    with Stage("normal-form"):
        nf = normalize_action(action, config.box_radius, config.closure_cap)
        verification = verify_normal_form(action, nf)
    _emit(ctx, {"normal_form": nf.to_dict(), "verification": verification.to_dict()},
          "normal-form", config, output)


@cli.command()
@input_argument
@example_option
@box_option
@cap_option
@format_option
@output_option
@click.pass_context
@reports_errors
def construct(
    ctx: click.Context,
    input_path: str,
    example: Optional[str],
    box_radius: Optional[int],
    closure_cap: Optional[int],
    output_format: Optional[str],
    output: Optional[str],
) -> None:
    """Construct the lifts of the free analytic action (reusable by 'orbit')."""
    config = CliConfig.from_settings(
        _settings(ctx), "construct", input_path=example or input_path, box_radius=box_radius,
        closure_cap=closure_cap, output_format=output_format,
    )
    with Stage("input"):
        action = _load_action(input_path, example)
    family = _build_family(action, config)
    _emit(ctx, {"family": family.to_dict(), "formulas": family.pretty()}, "construct", config,
          output)


@cli.command("verify-free")
@input_argument
@example_option
@box_option
@cap_option
@click.option("--h-box", type=int, help="Radius of the box of H checked symbolically")
@click.option("--scan", is_flag=True, help="Append a numeric fixed point scan")
@click.option("--alpha", help="Comma separated numeric alpha values for the scan")
@format_option
@output_option
@click.pass_context
@reports_errors
def verify_free(
    ctx: click.Context,
    input_path: str,
    example: Optional[str],
    box_radius: Optional[int],
    closure_cap: Optional[int],
    h_box: Optional[int],
    scan: bool,
    alpha: Optional[str],
    output_format: Optional[str],
    output: Optional[str],
) -> None:
    """Run the whole pipeline and certify freeness of the constructed action."""
    settings = _settings(ctx)
    config = CliConfig.from_settings(
        settings, "verify-free", input_path=example or input_path, box_radius=box_radius,
        closure_cap=closure_cap, h_box=h_box, output_format=output_format,
        alpha=_parse_floats(alpha, "alpha") if alpha else None,
        scan=settings.scan if scan else None,
    )
    with Stage("input"):
        action = _load_action(input_path, example)
    _emit(ctx, pipeline_report(action, config, scan=scan), "verify-free", config, output)


@cli.command()
@input_argument
@example_option
@click.option("--word", default="", help="Comma separated generator indices, -i for inverses")
@click.option("--start", default="0,0,0", help="Start point x,y,z")
@click.option("--alpha", help="Comma separated numeric alpha values")
@box_option
@cap_option
@output_option
@click.pass_context
@reports_errors
def orbit(
    ctx: click.Context,
    input_path: str,
    example: Optional[str],
    word: str,
    start: str,
    alpha: Optional[str],
    box_radius: Optional[int],
    closure_cap: Optional[int],
    output: Optional[str],
) -> None:
    """Export the orbit of a point under a word in the lifts as CSV (step,x,y,z)."""
    with Stage("input"):
        steps = _parse_ints(word, "word")
        point = _parse_floats(start, "start point")
        if len(point) != 3:
            raise InputError(f"start point needs 3 coordinates, got {len(point)}")
        config = CliConfig.from_settings(
            _settings(ctx), "orbit", input_path=example or input_path, box_radius=box_radius,
            closure_cap=closure_cap, output_format="csv", word=steps, start=tuple(point),
            alpha=_parse_floats(alpha, "alpha") if alpha else None,
        )
        if example:
            family = _build_family(get_example(example), config)
        else:
            data = parse_json(_read_text(input_path), "orbit input")
            if isinstance(data, dict) and "family" in data:
                family = FreeActionFamily.from_dict(data["family"])
            elif isinstance(data, dict) and "lifts" in data:
                family = FreeActionFamily.from_dict(data)
            else:
                family = _build_family(ActionSpec.from_dict(data), config)

    with Stage("orbit"):
        trajectory = orbit_iterate(family, _alpha(config, family.p), point, steps)

    generator = TrajectoryGenerator(Path(output) if output else None)
    logger.debug(f"Orbit configuration: {config.effective()}")
    if output is None:
        click.echo(generator.render(trajectory), nl=False)
        return
    result = generator.generate(trajectory)
    if not result["success"]:
        raise InputError(f"cannot write trajectory: {result['error']}")
    console.print(f"[green]✓ {result['rows']} points written to {escape(output)}[/green]")


@cli.command()
@click.option("--seed", type=int, help="Conjugate the examples by a seeded random matrix")
@click.option("--name", "names", multiple=True, type=click.Choice(list(EXAMPLES)),
              help="Run only these examples")
@format_option
@output_option
@click.pass_context
@reports_errors
def demo(
    ctx: click.Context,
    seed: Optional[int],
    names: tuple[str, ...],
    output_format: Optional[str],
    output: Optional[str],
) -> None:
    """Run the embedded examples through check and, where it applies, the pipeline."""
    config = CliConfig.from_settings(
        _settings(ctx), "demo", seed=seed, output_format=output_format
    )
    rng = random.Random(seed) if seed is not None else None
    results: dict[str, Any] = {}
    for name in names or tuple(EXAMPLES):
        action = get_example(name)
        if rng is not None:
            action = conjugate(action, random_unimodular(action.q, rng))
        entry: dict[str, Any] = {
            "description": EXAMPLES[name].description,
            "action": action.to_dict(),
        }
        entry["check"] = check_report(action, config)
        if entry["check"]["hypotheses"]["satisfied"]:
            try:
                entry["pipeline"] = pipeline_report(action, config)
            except FreetorusError as e:
                if e.exit_code == VerificationError.exit_code:
                    raise
                entry["pipeline"] = {"rejected": e.to_dict()}
        results[name] = entry
    _emit(ctx, {"examples": results}, "demo", config, output)


# ============================================================================
# Entry Point
# ============================================================================

def main() -> None:
    """Main entry point."""
    try:
        cli()
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted[/yellow]")
        sys.exit(1)
    except Exception as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        sys.exit(3)


if __name__ == "__main__":
    main()
