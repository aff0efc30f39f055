import argparse
import logging
import logging.config
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pendulum
import yaml  # type: ignore[import]

from point_interaction.config import RunConfig, assign_environ, dump_config, load_config
from point_interaction.core.errors import (
    ConfigError,
    DomainError,
    NumericalError,
    PointInteractionError,
    VerificationError,
)
from point_interaction.dirichlet import EigenBasis, eigenbasis
from point_interaction.geometry import DomainGrid, ReflectionAtlas, build_domain, reflection_atlas
from point_interaction.helmholtz import dh_dy, is_radial, solve_h
from point_interaction.landscape import eigenvalue_map, locate_minimum, monotonicity_audit
from point_interaction.spectral import (
    CouplingAlpha,
    alpha_threshold,
    apply_resolvent,
    charge,
    eigenfunction,
    principal_eigenvalue,
)
from point_interaction.specfun import SpectralParameter
from point_interaction.verify import run_suites
from point_interaction.writers import write_csv, write_gnuplot, write_json

logger = logging.getLogger("point_interaction")

# Constants
COMMANDS = ("basis", "h-eval", "solve", "landscape", "sigma", "audit", "resolvent", "verify")
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4
DEFAULT_LOGGING = "config/logging.yaml"
ERROR_VERIFICATION = "{} of {} verification suites failed: {}"

AXES = ("x", "y", "z")


class Context:
    """Resolved configuration plus the lazily built grid and basis of one run."""

    def __init__(self, config: RunConfig):
        self.config = config
        self._grid: Optional[DomainGrid] = None
        self._basis: Optional[EigenBasis] = None

    @property
    def grid(self) -> DomainGrid:
        if self._grid is None:
            self._grid = build_domain(self.config.domain)
        return self._grid

    @property
    def basis(self) -> EigenBasis:
        if self._basis is None:
            cache_dir = Path(self.config.cache_dir) if self.config.cache_dir else None
            if cache_dir is not None:
                cache_dir.mkdir(parents=True, exist_ok=True)
            self._basis = eigenbasis(self.grid, self.config.basis_size, cache_dir)
        return self._basis

    @property
    def x0(self) -> np.ndarray:
        return self.config.source_point(self.grid.shape.centroid)

    def atlas(self) -> ReflectionAtlas:
        return reflection_atlas(
            self.grid,
            self.config.atlas.angles,
            self.config.atlas.offsets,
            threads=self.config.threads,
        )


# Each command computes first and returns a writer; files are written afterwards.
Writer = Callable[[Path], None]


def run_basis(ctx: Context) -> Writer:
    basis = ctx.basis
    summary = basis.summary()
    summary.update(
        kind=ctx.config.domain.kind,
        n_nodes=ctx.grid.n_nodes,
        spacing=ctx.grid.spacing,
        measure=ctx.grid.shape.measure,
        discrete_lambda0=None if is_radial(ctx.grid) else ctx.grid.discrete_lambda0,
    )
    rows = [
        (i, basis.eigenvalues[i], int(basis.multiplicities[basis.levels[i]]), int(basis.levels[i]))
        for i in range(basis.size)
    ]

    def write(out: Path) -> None:
        write_csv(out / "basis.csv", ("index", "eigenvalue", "multiplicity", "level"), rows)
        write_json(out / "basis.json", summary)

    return write


def run_h_eval(ctx: Context) -> Writer:
    options = ctx.config.h_eval
    grid, basis, x0 = ctx.grid, ctx.basis, ctx.x0
    rows = []
    first_field = None
    for y in options.y_values:
        p = SpectralParameter.from_y(y, options.branch)
        field = solve_h(grid, basis, x0, p, ctx.config.tolerances.solver)
        derivative = dh_dy(
            grid, basis, x0, p, ctx.config.tolerances.solver, ctx.config.tolerances.tail, field=field
        )
        rows.append(
            (y, p.branch.value, field.coincidence, derivative.value, derivative.cross_check,
             derivative.bvp, field.residual)
        )
        if first_field is None:
            first_field = field
    axes = AXES[: grid.dim]
    field_rows = [(*grid.coords[i], first_field.values[i]) for i in range(grid.n_nodes)]

    def write(out: Path) -> None:
        write_csv(
            out / "h_eval.csv",
            ("y", "branch", "h", "dh_dy_identity", "dh_dy_fd", "dh_dy_bvp", "residual"),
            rows,
        )
        write_csv(out / "h_field.csv", (*axes, "h"), field_rows)
        write_gnuplot(
            out / "h_eval.gp",
            f"h(x0, x0, y) at x0={x0.tolist()}",
            [
                "set xlabel 'y'",
                "plot 'h_eval.csv' using 1:3 with linespoints title 'h', "
                "'' using 1:4 with lines title 'dh/dy'",
            ],
        )

    return write


def run_solve(ctx: Context) -> Writer:
    grid, basis, x0 = ctx.grid, ctx.basis, ctx.x0
    a = CouplingAlpha.parse(ctx.config.alpha)
    report = {
        "alpha": str(a),
        "alpha_threshold": alpha_threshold(grid, basis, x0, ctx.config.tolerances.solver),
        "lambda0": basis.lambda0,
        "x0": x0,
    }
    if a.finite:
        pe = principal_eigenvalue(
            grid, basis, x0, a.value, ctx.config.tolerances.root,
            ctx.config.tolerances.solver, ctx.config.tolerances.tail,
        )
        function = eigenfunction(grid, basis, x0, pe, ctx.config.tolerances.solver)
        report.update(pe.to_dict())
        report["alpha"] = str(a)
        report["eigenfunction"] = {
            "minimum": function.minimum,
            "positive": function.positive,
            "residual": function.residual,
            "boundary_trace": function.boundary_trace,
            "continuum_gap": function.continuum_gap,
        }
    else:
        report.update(xi=None, branch=None, note="no eigenvalue below lambda0 for infinite coupling")

    def write(out: Path) -> None:
        write_json(out / "solve.json", report)

    return write


def run_landscape(ctx: Context) -> Writer:
    tolerances = ctx.config.tolerances
    landscape = eigenvalue_map(
        ctx.grid, ctx.basis, ctx.config.alpha, ctx.config.lattice_spacing,
        threads=ctx.config.threads, root_tolerance=tolerances.root,
        tolerance=tolerances.solver, tail_tolerance=tolerances.tail,
    )
    verdict = locate_minimum(landscape, ctx.atlas())
    axes = AXES[: ctx.grid.dim]
    rows = [
        (
            *landscape.points[i],
            landscape.xi[i],
            *landscape.gradient[i],
            *landscape.fd_gradient[i],
            landscape.residual[i],
            landscape.status[i],
        )
        for i in range(len(landscape.points))
    ]
    header = (
        *axes, "xi", *(f"grad_{a}" for a in axes), *(f"fd_grad_{a}" for a in axes), "residual", "status"
    )
    minimum = verdict.to_dict()
    minimum.update(alpha=str(CouplingAlpha.parse(ctx.config.alpha)), spacing=landscape.spacing,
                   samples=len(landscape.points), failed=int((~landscape.successful).sum()))

    def write(out: Path) -> None:
        write_csv(out / "landscape.csv", header, rows)
        write_json(out / "minimum.json", minimum)
        plot = "splot 'landscape.csv' using 1:2:3 with points palette title 'xi'"
        if ctx.grid.dim == 3:
            plot = "splot 'landscape.csv' using 1:2:3:4 with points palette title 'xi'"
        write_gnuplot(out / "landscape.gp", f"xi(x0), alpha={ctx.config.alpha}", [plot])

    return write


def _atlas_summary(atlas: ReflectionAtlas) -> dict:
    return {
        "directions": len(atlas.directions),
        "offsets": int(atlas.offsets.shape[-1]),
        "admitted": len(atlas.entries),
        "sliding": sum(1 for entry in atlas.entries if entry.sliding),
        "sigma_nodes": int(atlas.sigma.sum()),
        "sigma_prime_nodes": int(atlas.sigma_prime.sum()),
        "convex": bool(atlas.grid.shape.convex),
        "hyperplanes": [
            {
                "direction": entry.direction_index,
                "offset_index": entry.offset_index,
                "normal": list(entry.hyperplane.normal),
                "offset": entry.hyperplane.offset,
                "side_size": entry.side_size,
                "sliding": entry.sliding,
            }
            for entry in atlas.entries
        ],
    }


def run_sigma(ctx: Context) -> Writer:
    atlas = ctx.atlas()
    grid = ctx.grid
    admissible = atlas.governing_admissible()
    rows = [
        (*grid.coords[i], atlas.sigma[i], atlas.sigma_prime[i], admissible[i]) for i in range(grid.n_nodes)
    ]
    summary = _atlas_summary(atlas)
    axes = AXES[: grid.dim]

    def write(out: Path) -> None:
        write_csv(out / "sigma.csv", (*axes, "sigma", "sigma_prime", "admissible"), rows)
        write_json(out / "atlas.json", summary)
        column = grid.dim + 3
        write_gnuplot(
            out / "sigma.gp",
            "admissible region (1) against Sigma / Sigma' (0)",
            [f"plot 'sigma.csv' using 1:2:{column} with points palette pointtype 5 title 'admissible'"],
        )

    return write


def run_audit(ctx: Context) -> Writer:
    tolerances = ctx.config.tolerances
    report = monotonicity_audit(
        ctx.grid, ctx.basis, ctx.config.alpha, ctx.atlas(), ctx.config.audit.pairs,
        tolerances.root, tolerances.solver, tolerances.tail,
    ).to_dict()
    report["alpha"] = str(CouplingAlpha.parse(ctx.config.alpha))

    def write(out: Path) -> None:
        write_json(out / "audit.json", report)

    return write


def run_resolvent(ctx: Context) -> Writer:
    grid, basis, x0 = ctx.grid, ctx.basis, ctx.x0
    options = ctx.config.resolvent
    tolerances = ctx.config.tolerances
    a = CouplingAlpha.parse(ctx.config.alpha)
    if options.z_values is not None:
        zs = list(options.z_values)
    elif a.finite:
        pole = -principal_eigenvalue(grid, basis, x0, a.value, tolerances.root, tolerances.solver).xi
        zs = [pole + offset for offset in options.offsets]
    else:
        zs = list(options.offsets)
    phi = basis.nodal_values()[:, 0]
    rows = []
    for z in zs:
        q = charge(grid, basis, x0, a, z, tolerances.solver).q
        action = apply_resolvent(grid, basis, x0, a, z, phi, tolerances.solver)
        rows.append((z, q.real, q.imag, action.norm))

    def write(out: Path) -> None:
        write_csv(out / "resolvent.csv", ("z", "re_q", "im_q", "norm"), rows)
        write_gnuplot(
            out / "resolvent.gp",
            f"resolvent of psi0, alpha={a}",
            ["set logscale xy", "plot 'resolvent.csv' using 1:4 with linespoints title '|R_z psi0|'"],
        )

    return write


def run_verify(ctx: Context) -> Writer:
    reports = run_suites(ctx.config)
    failed = [report.name for report in reports if not report.passed]
    document = {"passed": not failed, "suites": [report.to_dict() for report in reports]}

    def write(out: Path) -> None:
        write_json(out / "verify.json", document)
        if failed:
            raise VerificationError(ERROR_VERIFICATION.format(len(failed), len(reports), ", ".join(failed)))

    return write


COMMAND_RUNNERS: dict[str, Callable[[Context], Writer]] = {
    "basis": run_basis,
    "h-eval": run_h_eval,
    "solve": run_solve,
    "landscape": run_landscape,
    "sigma": run_sigma,
    "audit": run_audit,
    "resolvent": run_resolvent,
    "verify": run_verify,
}


def setup_logging(logging_yaml_path: str) -> None:
    path = Path(logging_yaml_path)
    if not path.exists():
        logging.basicConfig(level=logging.WARNING)
        return
    with path.open("r", encoding="utf-8") as file:
        logging_yaml = assign_environ(yaml.safe_load(file))
    for handler in logging_yaml.get("handlers", {}).values():
        if "filename" in handler:
            Path(handler["filename"]).parent.mkdir(parents=True, exist_ok=True)
    logging.config.dictConfig(logging_yaml)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load the configuration and apply command-line overrides."""
    config = load_config(args.config)
    updates = {
        key: value
        for key, value in (("output_dir", args.out), ("threads", args.threads), ("seed", args.seed))
        if value is not None
    }
    if not updates:
        return config
    try:
        return RunConfig.model_validate({**config.model_dump(mode="json"), **updates})
    except ValueError as e:
        raise ConfigError(f"Invalid command-line override: {e}") from e


def run(command: str, config: RunConfig) -> None:
    """Run one command and write its files under the configured output directory.

    Raises:
        ConfigError, DomainError: Invalid input.
        NumericalError: A numerical stage failed.
        VerificationError: The verify command found failing suites.
    """
    started = pendulum.now("UTC")
    logger.info(f"{command} is started. domain={config.domain.kind}, alpha={config.alpha}")
    writer = COMMAND_RUNNERS[command](Context(config))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(config, out / "resolved_config.json")
    try:
        writer(out)
    finally:
        elapsed = (pendulum.now("UTC") - started).total_seconds()
        logger.info(f"{command} is finished. out={out}, elapsed_time_sec={elapsed:.3f}")


def _parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="point-interaction",
        description="Principal eigenvalue of a point interaction in a Dirichlet domain.",
    )
    parser.add_argument("command", choices=COMMANDS, help="Stage to run.")
    parser.add_argument(
        "-c",
        "--config",
        type=str,
        default=None,
        help="Path to the run configuration file (JSON format); defaults apply when omitted.",
    )
    parser.add_argument("--out", type=str, default=None, help="Output directory; overrides output_dir.")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads for landscape and atlas stages.")
    parser.add_argument("--seed", type=int, default=None, help="Reserved; recorded in the resolved config.")
    parser.add_argument(
        "-l",
        "--logging",
        type=str,
        default=DEFAULT_LOGGING,
        help="Path to the logging configuration file (YAML format).",
    )
    return parser.parse_args(argv)


def main(argv: Optional[list[str]] = None) -> int:
    args = _parse_args(argv)
    setup_logging(args.logging)
    try:
        run(args.command, resolve_config(args))
    except (ConfigError, DomainError) as e:
        logger.error(f"{args.command} rejected its input: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"{args.command} failed at stage={e.stage}: {e}", exc_info=True)
        return EXIT_NUMERICAL
    except VerificationError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_VERIFICATION
    except PointInteractionError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_NUMERICAL
    return EXIT_OK

