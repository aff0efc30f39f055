"""Oracle and invariant suites run by the `verify` command."""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
import pendulum
from scipy import optimize

from point_interaction import specfun
from point_interaction.config import RunConfig
from point_interaction.core.errors import PointInteractionError
from point_interaction.dirichlet import BasisSource, EigenBasis, eigenbasis
from point_interaction.geometry import (
    BallSpec,
    DiskSpec,
    DiskUnionSpec,
    DomainGrid,
    DomainSpec,
    RectangleSpec,
    build_domain,
    reflection_atlas,
)
from point_interaction.helmholtz import dh_dy, green_positivity, solve_f0, solve_h, spectral_ceiling
from point_interaction.landscape import eigenvalue_map, locate_minimum, monotonicity_audit
from point_interaction.spectral import (
    alpha_threshold,
    apply_resolvent,
    charge,
    eigenfunction,
    krein_denominator,
    principal_eigenvalue,
    root_function_samples,
    sample_energies,
    sign_changes,
)
from point_interaction.specfun import Branch, SpectralParameter

logger = logging.getLogger("point_interaction")

Y_VALUES = (0.5, 1.0, 2.0, 5.0)
IDENTITY_POINTS = ((0.0, 0.0), (0.3, 0.0), (0.0, -0.4), (0.2, 0.2), (-0.5, 0.1))
FIRST_J0_ZERO = 2.404825557695773


@dataclass
class SuiteReport:
    name: str
    checks: list[dict] = field(default_factory=list)
    error: Optional[str] = None
    elapsed_time_sec: float = 0.0

    def check(self, label: str, value: Any, passed: bool, expected: Any = None, tolerance: Any = None) -> bool:
        self.checks.append(
            {"name": label, "value": value, "expected": expected, "tolerance": tolerance, "passed": bool(passed)}
        )
        return bool(passed)

    def close(self, label: str, value: float, expected: float, tolerance: float, relative: bool = True) -> bool:
        scale = abs(expected) if relative and expected != 0 else 1.0
        return self.check(label, value, abs(value - expected) <= tolerance * scale, expected, tolerance)

    @property
    def passed(self) -> bool:
        return self.error is None and all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "error": self.error,
            "checks": self.checks,
        }


class Workspace:
    """Grids and bases shared between suites."""

    def __init__(self, config: RunConfig):
        self.config = config
        self._grids: dict[str, DomainGrid] = {}
        self._bases: dict[tuple[str, int], EigenBasis] = {}

    def grid(self, spec: DomainSpec) -> DomainGrid:
        key = spec.model_dump_json()
        if key not in self._grids:
            self._grids[key] = build_domain(spec)
        return self._grids[key]

    def basis(self, spec: DomainSpec, count: Optional[int] = None) -> tuple[DomainGrid, EigenBasis]:
        count = count or self.config.basis_size
        grid = self.grid(spec)
        key = (spec.model_dump_json(), count)
        if key not in self._bases:
            self._bases[key] = eigenbasis(grid, count, self.config.cache_dir)
        return grid, self._bases[key]


def ball_h(y: float, radius: float = 1.0) -> float:
    """Centre value of h for the ball of radius R: y e^{-yR} / (4 pi sinh(yR)), and 1 / (4 pi R) at y = 0."""
    if y == 0.0:
        return 1.0 / (4.0 * np.pi * radius)
    return y * np.exp(-y * radius) / (4.0 * np.pi * np.sinh(y * radius))


def ball_h_dy(y: float) -> float:
    """d/dy of ball_h for R = 1, written through 2y / (e^{2y} - 1)."""
    e = np.expm1(2.0 * y)
    return (2.0 * e - 4.0 * y * (e + 1.0)) / (e**2) / (4.0 * np.pi)


def disk_h(y: float, radius: float = 1.0) -> float:
    return float(specfun.bessel_K0(y * radius) / (2.0 * np.pi * specfun.bessel_I0(y * radius)))


def suite_specfun(report: SuiteReport, workspace: Workspace) -> None:
    for x in (0.1, 1.0, 5.0):
        report.close(f"K0({x})", float(specfun.bessel_K0(x)), specfun.k0_quadrature(x), 1e-10)
        report.close(f"K1({x})", float(specfun.bessel_K1(x)), specfun.k1_quadrature(x), 1e-10)
        report.close(f"I0({x})", float(specfun.bessel_I0(x)), specfun.i0_quadrature(x), 1e-10)
        report.close(f"I1({x})", float(specfun.bessel_I1(x)), specfun.i1_quadrature(x), 1e-10)
    small = 1e-3
    report.close("K0 small-argument", float(specfun.bessel_K0(small)), -np.log(small / 2.0) - specfun.EULER_GAMMA, 1e-6)
    report.check("K0(50) decay", float(specfun.bessel_K0(50.0)), float(specfun.bessel_K0(50.0)) < 1e-20)
    report.close("first J0 zero", specfun.first_j0_zero(), FIRST_J0_ZERO, 1e-12)
    p = SpectralParameter.from_y(0.7)
    report.close(
        "2D free kernel", float(specfun.free_green_real(2, p, 0.3)), float(specfun.bessel_K0(0.21)) / (2 * np.pi), 1e-14
    )


def suite_ball_oracle(report: SuiteReport, workspace: Workspace) -> None:
    tolerance = workspace.config.tolerances.oracle
    grid, basis = workspace.basis(BallSpec(radius=1.0, resolution=1.0 / 50.0))
    centre = np.zeros(3)
    for y in (0.0,) + Y_VALUES:
        value = solve_h(grid, basis, centre, SpectralParameter.from_y(y)).coincidence
        report.close(f"h(0,0,{y})", value, ball_h(y), tolerance)
    derivative = dh_dy(grid, basis, centre, SpectralParameter.from_y(1.0))
    report.close("dh/dy at y=1 (identity)", derivative.value, ball_h_dy(1.0), tolerance)
    report.close("dh/dy at y=1 (radial BVP)", derivative.bvp, ball_h_dy(1.0), tolerance)
    small = dh_dy(grid, basis, centre, SpectralParameter.from_y(1e-3), cross_check=False).value
    report.close("dh/dy as y -> 0", small, -1.0 / (4.0 * np.pi), 1e-2)
    values = [solve_h(grid, basis, centre, SpectralParameter.from_y(y)).coincidence for y in (0.2, 0.5, 1.0, 2.0, 5.0)]
    report.check("h strictly decreasing in y", values, bool(np.all(np.diff(values) < 0)))


def suite_disk_oracle(report: SuiteReport, workspace: Workspace) -> None:
    tolerance = workspace.config.tolerances.oracle
    grid, basis = workspace.basis(DiskSpec(radius=1.0, resolution=1.0 / 100.0))
    centre = np.zeros(2)
    for y in Y_VALUES:
        value = solve_h(grid, basis, centre, SpectralParameter.from_y(y)).coincidence
        report.close(f"h(0,0,{y})", value, disk_h(y), tolerance)
    threshold = solve_f0(grid, centre).coincidence
    report.close("alpha* = ln 2 - gamma", threshold, np.log(2.0) - specfun.EULER_GAMMA, 1e-4, relative=False)
    limit = np.log(1e-3) + 2.0 * np.pi * solve_h(grid, basis, centre, SpectralParameter.from_y(1e-3)).coincidence
    report.close("ln y + 2 pi h as y -> 0", limit, threshold, 1e-3, relative=False)
    report.close("lambda0 = j01^2", basis.lambda0, FIRST_J0_ZERO**2, 1e-2)
    ceiling = spectral_ceiling(grid, basis)
    values = [
        solve_h(grid, basis, centre, SpectralParameter.from_y(np.sqrt(f * ceiling), Branch.POSITIVE_XI)).coincidence
        for f in (0.9, 0.99, 0.999)
    ]
    report.check("Re h decreasing toward lambda0", values, bool(np.all(np.diff(values) < 0)))
    report.check("Re h below -10 at 0.999 lambda0", values[-1], values[-1] < -10.0)


def suite_thresholds(report: SuiteReport, workspace: Workspace) -> None:
    grid, basis = workspace.basis(BallSpec(radius=1.0, resolution=1.0 / 50.0))
    report.close("ball alpha*", alpha_threshold(grid, basis, np.zeros(3)), -1.0 / (4.0 * np.pi), 1e-6, relative=False)
    grid, basis = workspace.basis(DiskSpec(radius=1.0, resolution=1.0 / 100.0))
    report.close(
        "disk alpha*", alpha_threshold(grid, basis, np.zeros(2)), np.log(2.0) - specfun.EULER_GAMMA, 1e-4, relative=False
    )


def suite_identity(report: SuiteReport, workspace: Workspace) -> None:
    tolerance = workspace.config.tolerances.identity
    grid, basis = workspace.basis(DiskSpec(radius=1.0, resolution=1.0 / 100.0))
    for point in IDENTITY_POINTS:
        for y in (0.5, 1.0, 2.0):
            result = dh_dy(grid, basis, np.array(point), SpectralParameter.from_y(y))
            label = f"x0={list(point)}, y={y}"
            report.close(f"identity vs FD, {label}", result.value, result.cross_check, tolerance)
            report.close(f"BVP vs FD, {label}", result.bvp, result.cross_check, 1e-5)
            report.check(f"dh/dy < 0, {label}", result.cross_check, result.cross_check < 0)
            report.check(
                f"1/y + 2 pi dh/dy > 0, {label}",
                1.0 / y + 2.0 * np.pi * result.cross_check,
                1.0 / y + 2.0 * np.pi * result.cross_check > 0,
            )


def _uniqueness(report: SuiteReport, name: str, grid: DomainGrid, basis: EigenBasis, x0: np.ndarray) -> None:
    threshold = alpha_threshold(grid, basis, x0)
    alphas = threshold + np.linspace(-5.0, 5.0, 21)
    xis = sample_energies(grid, basis, 4.0 * np.pi * (float(np.max(np.abs(alphas))) + 10.0))
    g = root_function_samples(grid, basis, x0, xis)
    sign = 1.0 if grid.dim == 3 else -1.0
    counts = [sign_changes(list(zip(xis, g + sign * a))) for a in alphas]
    report.check(f"{name}: one sign change per alpha", counts, all(c == 1 for c in counts))
    results = [principal_eigenvalue(grid, basis, x0, a) for a in alphas]
    values = np.array([r.xi for r in results])
    steps = np.diff(values)
    monotone = bool(np.all(steps > 0)) if grid.dim == 3 else bool(np.all(steps < 0))
    report.check(f"{name}: xi(alpha) monotone", values.tolist(), monotone)
    report.check(
        f"{name}: xi(alpha*) = 0", results[10].xi, abs(results[10].xi) <= 1e-6 * basis.lambda0
    )
    shifts = [abs(r.newton_shift) / r.y for r in results if r.y > 0]
    report.check(f"{name}: Newton and bisection agree", max(shifts), max(shifts) <= 1e-10)
    ceiling = spectral_ceiling(grid, basis)
    # the 2D coupling enters through 2 pi h, so its approach to lambda0 is 2 pi slower
    far = 1e3 if grid.dim == 3 else -1e4
    top = principal_eigenvalue(grid, basis, x0, far)
    report.check(f"{name}: xi -> lambda0 at alpha={far}", top.xi, abs(ceiling - top.xi) <= 1e-3 * ceiling)


def suite_uniqueness(report: SuiteReport, workspace: Workspace) -> None:
    grid, basis = workspace.basis(BallSpec(radius=1.0, resolution=1.0 / 50.0))
    _uniqueness(report, "ball", grid, basis, np.zeros(3))

    def scalar(y):
        return y / (4.0 * np.pi) + ball_h(y) - 10.0

    expected = -(optimize.brentq(scalar, 1e-8, 1e3, xtol=1e-15, rtol=1e-15) ** 2)
    value = principal_eigenvalue(grid, basis, np.zeros(3), -10.0).xi
    report.close("ball: xi(-10) closed form", value, expected, 1e-6)
    grid, basis = workspace.basis(DiskSpec(radius=1.0, resolution=1.0 / 40.0))
    _uniqueness(report, "disk", grid, basis, np.zeros(2))


def suite_theorem_audit(report: SuiteReport, workspace: Workspace) -> None:
    atlas_options = workspace.config.atlas
    for name, spec in (
        ("disk", DiskSpec(radius=1.0, resolution=1.0 / 40.0)),
        ("rectangle", RectangleSpec(a=2.0, b=1.0, resolution=1.0 / 40.0)),
    ):
        grid, basis = workspace.basis(spec)
        atlas = reflection_atlas(grid, atlas_options.angles, atlas_options.offsets, threads=workspace.config.threads)
        for a in (-2.0, 2.0):
            audit = monotonicity_audit(grid, basis, a, atlas, pairs=workspace.config.audit.pairs)
            report.check(f"{name}, alpha={a}: pairs", len(audit.entries), len(audit.entries) >= workspace.config.audit.pairs)
            report.check(f"{name}, alpha={a}: failures", audit.failed, audit.failed == 0)


def suite_optimizer(report: SuiteReport, workspace: Workspace) -> None:
    atlas_options = workspace.config.atlas
    threads = workspace.config.threads
    for name, spec, near_centroid in (
        ("disk", DiskSpec(radius=1.0, resolution=1.0 / 20.0), True),
        ("square", RectangleSpec(a=1.0, b=1.0, resolution=1.0 / 20.0), True),
        ("disk_union", DiskUnionSpec(resolution=1.0 / 20.0), False),
    ):
        grid, basis = workspace.basis(spec)
        atlas = reflection_atlas(grid, atlas_options.angles, atlas_options.offsets, threads=threads)
        verdicts = []
        for a in (-2.0, 0.0, 2.0):
            landscape = eigenvalue_map(grid, basis, a, threads=threads)
            verdict = locate_minimum(landscape, atlas)
            verdicts.append(verdict.inside)
            report.check(f"{name}, alpha={a}: minimizer admissible", verdict.distance, verdict.inside)
            if near_centroid:
                report.check(
                    f"{name}, alpha={a}: minimizer at centroid",
                    verdict.centroid_distance,
                    verdict.centroid_distance <= landscape.spacing * (1.0 + 1e-9),
                )
        report.check(f"{name}: verdicts independent of alpha", verdicts, len(set(verdicts)) == 1)


def suite_resolvent(report: SuiteReport, workspace: Workspace) -> None:
    grid, basis = workspace.basis(DiskSpec(radius=1.0, resolution=1.0 / 40.0))
    x0 = np.array([0.2, 0.1])
    a = 2.0
    pe = principal_eigenvalue(grid, basis, x0, a)
    pole = -pe.xi
    denominator, _ = krein_denominator(grid, basis, x0, a, pole)
    report.check("denominator vanishes at -xi", abs(denominator), abs(denominator) <= 1e-8)
    below, _ = krein_denominator(grid, basis, x0, a, pole - 1e-3)
    above, _ = krein_denominator(grid, basis, x0, a, pole + 1e-3)
    report.check("denominator changes sign at -xi", [below.real, above.real], below.real * above.real < 0)
    function = eigenfunction(grid, basis, x0, pe)
    report.check("eigenfunction boundary trace", function.boundary_trace, function.boundary_trace <= 1e-12)
    report.check("eigenfunction residual", function.residual, function.residual <= 1e-4)
    report.check("eigenfunction continuum gap", function.continuum_gap, function.continuum_gap <= 0.1)
    report.check("eigenfunction positive (xi < 0)", function.minimum, pe.xi < 0 and function.positive)
    phi = basis.nodal_values()[:, 0]
    offsets = (1e-1, 1e-2, 1e-3)
    norms = [apply_resolvent(grid, basis, x0, a, pole + d, phi).norm for d in offsets]
    charges = [abs(charge(grid, basis, x0, a, pole + d).q) for d in offsets]
    report.check("|q_z| grows toward the pole", charges, bool(np.all(np.diff(charges) > 0)))
    ratios = [norms[i + 1] / norms[i] for i in range(len(norms) - 1)]
    report.check("resolvent norm ~ 1/|z + xi|", ratios, all(5.0 < r < 20.0 for r in ratios))
    free = apply_resolvent(grid, basis, x0, "inf", 1.0, phi)
    expected = phi / (basis.lambda0 + 1.0)
    report.check(
        "unperturbed resolvent of psi0",
        float(np.max(np.abs(free.values - expected))),
        float(np.max(np.abs(free.values - expected))) <= 1e-8 * float(np.max(np.abs(expected))),
    )


def suite_convergence(report: SuiteReport, workspace: Workspace) -> None:
    errors_lambda, errors_h = [], []
    for resolution in (1.0 / 50.0, 1.0 / 100.0):
        grid = workspace.grid(DiskSpec(radius=1.0, resolution=resolution))
        errors_lambda.append(abs(grid.discrete_lambda0 - FIRST_J0_ZERO**2))
        grid, basis = workspace.basis(DiskSpec(radius=1.0, resolution=resolution))
        value = solve_h(grid, basis, np.zeros(2), SpectralParameter.from_y(1.0)).coincidence
        errors_h.append(abs(value - disk_h(1.0)))
    order_lambda = float(np.log2(errors_lambda[0] / errors_lambda[1]))
    order_h = float(np.log2(errors_h[0] / errors_h[1]))
    report.check("lambda0 refinement order", order_lambda, order_lambda >= 1.8, expected=2.0)
    report.check("h(0,0,1) refinement order", order_h, order_h >= 1.8, expected=2.0)


def suite_green_positivity(report: SuiteReport, workspace: Workspace) -> None:
    grid, basis = workspace.basis(DiskSpec(radius=1.0, resolution=1.0 / 40.0))
    x0 = np.array([0.3, 0.1])
    for label, p in (
        ("z = 1", SpectralParameter.from_y(1.0)),
        ("z = -lambda0 / 2", SpectralParameter.from_y(np.sqrt(0.5 * basis.lambda0), Branch.POSITIVE_XI)),
    ):
        minimum = green_positivity(grid, basis, x0, p)
        report.check(f"Green function positive, {label}", minimum, minimum > 0)


def suite_configured_domain(report: SuiteReport, workspace: Workspace) -> None:
    config = workspace.config
    grid, basis = workspace.basis(config.domain)
    ground = basis.nodal_values()[:, 0]
    if basis.source != BasisSource.RADIAL_BALL:
        report.check("psi0 positive on nodes", float(np.min(ground)), bool(np.all(ground > 0)))
    if basis.source == BasisSource.NUMERIC_GRID:
        defect = basis.orthonormality_defect()
        report.check("orthonormality", defect, defect <= 1e-6, tolerance=1e-6)
    report.check("lambda0 simple", basis.multiplicities[0], basis.multiplicities[0] == 1)
    ratio = basis.weyl_ratio()
    if ratio is not None and grid.dim == 2:
        report.check("Weyl ratio", ratio, 0.8 <= ratio <= 1.2)
    x0 = config.source_point(grid.shape.centroid)
    threshold = alpha_threshold(grid, basis, x0)
    report.check("alpha* finite", threshold, bool(np.isfinite(threshold)))
    if np.isfinite(config.alpha_value):
        pe = principal_eigenvalue(grid, basis, x0, config.alpha_value)
        report.check("xi below lambda0", pe.xi, pe.xi < spectral_ceiling(grid, basis))
        report.check("root residual", pe.residual, pe.residual <= 1e-8)


SUITES: dict[str, Callable[[SuiteReport, Workspace], None]] = {
    "specfun": suite_specfun,
    "ball_oracle": suite_ball_oracle,
    "disk_oracle": suite_disk_oracle,
    "thresholds": suite_thresholds,
    "identity": suite_identity,
    "uniqueness": suite_uniqueness,
    "theorem_audit": suite_theorem_audit,
    "optimizer": suite_optimizer,
    "resolvent": suite_resolvent,
    "convergence": suite_convergence,
    "green_positivity": suite_green_positivity,
    "configured_domain": suite_configured_domain,
}


def run_suites(config: RunConfig) -> list[SuiteReport]:
    """Run the configured suites; a raised library error fails its suite only."""
    workspace = Workspace(config)
    reports = []
    for name in config.verify.suites:
        report = SuiteReport(name=name)
        started = pendulum.now("UTC")
        logger.info(f"verify suite {name} is started.")
        try:
            SUITES[name](report, workspace)
        except PointInteractionError as e:
            logger.error(f"verify suite {name} raised: {e}", exc_info=True)
            report.error = f"{type(e).__name__}: {e}"
        report.elapsed_time_sec = (pendulum.now("UTC") - started).total_seconds()
        logger.info(
            f"verify suite {name} is finished. passed={report.passed}, "
            f"elapsed_time_sec={report.elapsed_time_sec:.3f}"
        )
        reports.append(report)
    return reports
